use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dlsuite::engine::{Mode, DEFAULT_STEP_LIMIT};
use dlsuite::query::Emit;
use dlsuite::report::{run_file, RunConfig, RunOutput, EXIT_INPUT};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Trace,
    Model,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EmitArg {
    C2,
    Tbox,
    Alcqib,
    Tree,
}

/// Decide description-logic problem files.
///
/// Exit status: 0 SAT, 1 UNSAT, 2 UNKNOWN, 3 input error. With several files
/// the highest status wins.
#[derive(Debug, Parser)]
#[command(name = "dlsuite", version)]
struct Args {
    /// Problem files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "trace")]
    mode: ModeArg,
    /// Rule applications before giving up with UNKNOWN.
    #[arg(long = "max-steps", default_value_t = DEFAULT_STEP_LIMIT)]
    max_steps: u64,
    /// Cross-check with bounded model search up to this domain size.
    #[arg(long)]
    oracle: Option<usize>,
    /// Write a reduction or the completion tree.
    #[arg(long, value_enum)]
    emit: Option<EmitArg>,
    /// Append run statistics.
    #[arg(long)]
    stats: bool,
    /// Destination of the --emit artifact.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Files decided concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.out.is_some() && args.files.len() > 1 {
        eprintln!("error: --out takes a single input file");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    let cfg = RunConfig {
        mode: match args.mode {
            ModeArg::Trace => Mode::Trace,
            ModeArg::Model => Mode::Model,
        },
        step_limit: args.max_steps,
        oracle: args.oracle,
        emit: args.emit.map(|e| match e {
            EmitArg::C2 => Emit::C2,
            EmitArg::Tbox => Emit::Tbox,
            EmitArg::Alcqib => Emit::Alcqib,
            EmitArg::Tree => Emit::Tree,
        }),
        stats: args.stats,
        out: args.out.clone(),
    };
    let outputs = run_all(&args.files, &cfg, args.jobs.max(1));
    let many = args.files.len() > 1;
    let stdout = std::io::stdout();
    let mut so = stdout.lock();
    let mut code = 0;
    for (path, o) in args.files.iter().zip(&outputs) {
        if many {
            let _ = writeln!(so, "== {}", path.display());
        }
        let _ = so.write_all(o.stdout.as_bytes());
        eprint!("{}", o.stderr);
        code = code.max(o.exit);
    }
    ExitCode::from(code as u8)
}

fn run_all(files: &[PathBuf], cfg: &RunConfig, jobs: usize) -> Vec<RunOutput> {
    let mut out: Vec<Option<RunOutput>> = vec![None; files.len()];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(files.len()) {
            std::thread::Builder::new()
                .stack_size(256 << 20)
                .spawn_scoped(s, || loop {
                    let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(f) = files.get(k) else { break };
                    let o = run_file(f, cfg);
                    slots.lock().unwrap()[k] = Some(o);
                })
                .expect("worker thread");
        }
    });
    out.into_iter().map(Option::unwrap).collect()
}
