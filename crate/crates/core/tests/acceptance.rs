//! End-to-end acceptance checks. Runs as a plain binary and prints one line
//! per criterion; exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{Family, Gen};
use rand::Rng;
use dlsuite::blocking::{decide_shiq, decide_si};
use dlsuite::engine::{Config, Outcome, Verdict, Witness};
use dlsuite::kb::{parse_problem, ABox, Problem, Query, TBox};
use dlsuite::oracle::{check, find_model};
use dlsuite::pspace::{decide_alc, decide_alcq_optimal, decide_alcq_standard, decide_alcqib};
use dlsuite::query::{decide_query, QueryConfig};
use dlsuite::reductions::{
    abox_to_tbox_nominals, cbox_to_tbox, internalize_shiq, reduce_shiq_to_alcqib, spy_point_internalize,
    tbox_to_cbox, Fresh, DEFAULT_EXPANSION_CAP,
};
use dlsuite::report::{run_source, RunConfig};
use dlsuite::syntax::{measure, nnf, subconcepts};
use dlsuite::{parse_concept, Concept, Role, RoleBox};

type Report = Result<String, String>;

fn c(s: &str) -> Concept {
    parse_concept(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn trans(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn outcome_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Sat(_) => "SAT",
        Outcome::Unsat => "UNSAT",
        Outcome::Unknown(_) => "UNKNOWN",
    }
}

fn exists(p: &Problem, bound: usize) -> Result<bool, String> {
    find_model(p, bound).map(|m| m.is_some()).map_err(|e| e.to_string())
}

fn criterion_1() -> Report {
    let limit = Duration::from_secs(1);
    let mut notes = Vec::new();
    let mut expect_unsat = |name: &str, r: Verdict, t: Duration| -> Result<(), String> {
        if !r.outcome.is_unsat() {
            return Err(format!("{name}: got {}", outcome_name(&r.outcome)));
        }
        if t >= limit {
            return Err(format!("{name}: took {t:?}"));
        }
        notes.push(format!("{name} {}ms", t.as_millis()));
        Ok(())
    };
    let cfg = Config::default();

    let (r, t) = timed(|| decide_alcq_optimal(&c("(and (>= 3 R A) (<= 1 R B) (<= 1 R (not B)))"), None, &cfg));
    expect_unsat("a", r.map_err(|e| e.to_string())?, t)?;

    let b = "(and (<= 0 R1 B) (>= 1 R1 (or A B)) (>= 1 R2 (<= 0 (inv R2) (>= 1 R1 A))))";
    let (r, t) = timed(|| decide_alcqib(&c(b), &cfg));
    expect_unsat("b", r.map_err(|e| e.to_string())?, t)?;

    let cc = "(all (inv R) (all (inv P) (all (inv S) (not A))))";
    let big = format!(
        "(and A (some S (and (some R top) (some P top) (all R {cc}) (all P (some R top)) (all P (all R {cc})) (all P (some P top)))))"
    );
    let (r, t) = timed(|| decide_si(&c(&big), &trans(&["P"]), &cfg));
    expect_unsat("c", r.map_err(|e| e.to_string())?, t)?;

    let d = "(and A (<= 1 F top) (some F (not A)))";
    let dc = format!("(and (not A) (<= 1 F top) (some (inv F) {d}) (all (inv R) (some (inv F) {d})))");
    let mut rb = RoleBox::new();
    rb.add_transitive("R");
    rb.add_inclusion(Role::new("F"), Role::new("R"));
    let (r, t) = timed(|| decide_shiq(&c(&dc), &rb, &cfg));
    expect_unsat("d", r.map_err(|e| e.to_string())?, t)?;

    let (r, t) = timed(|| decide_si(&c("(and (all ho Rich) (some ho (some ho (not Rich))))"), &trans(&["ho"]), &cfg));
    expect_unsat("e.offspring", r.map_err(|e| e.to_string())?, t)?;
    let (r, t) = timed(|| decide_si(&c("(and (not Rich) (some ho top) (all ho (all (inv ho) Rich)))"), &trans(&[]), &cfg));
    expect_unsat("e.ancestor", r.map_err(|e| e.to_string())?, t)?;
    let rd = "(and Human (>= 2 hc Female) (>= 2 hc Rich) (<= 3 hc top) (all hc (or (not Female) (not Rich))))";
    let (r, t) = timed(|| decide_alcq_optimal(&c(rd), None, &cfg));
    expect_unsat("e.daughter", r.map_err(|e| e.to_string())?, t)?;

    let kb = "(equal Parent (and Human (some has_child Human) (all has_child Human)))
        (equal Husband (and Male (some married_to Human)))
        (equal Human (or Male Female))
        (implies (and Male Female) bottom)
        (instance MARY (and Female Parent)) (instance PETER Husband) (related MARY PETER has_child)
        (query instance MARY (not Husband))";
    let p = parse_problem(kb).map_err(|e| e.to_string())?;
    let (r, t) = timed(|| decide_query(&p, &QueryConfig::default()));
    if r.answer != Some(true) || t >= limit {
        return Err(format!("f: answer={:?} in {t:?}", r.answer));
    }
    notes.push(format!("f {}ms", t.as_millis()));
    Ok(notes.join(", "))
}

fn criterion_2() -> Report {
    let cfg = Config::default();
    let (r, t) = timed(|| decide_alcq_optimal(&c("(and (>= 1000000 R A) (<= 5 R A))"), None, &cfg));
    let r = r.map_err(|e| e.to_string())?;
    let s = &r.stats;
    if !r.outcome.is_unsat() || s.successors_created > 7 || s.peak_live_nodes > 2 {
        return Err(format!(
            "unsat case: {} successors={} peak={}",
            outcome_name(&r.outcome),
            s.successors_created,
            s.peak_live_nodes
        ));
    }
    let (r2, t2) = timed(|| decide_alcq_optimal(&c("(>= 1000000 R A)"), None, &cfg));
    let r2 = r2.map_err(|e| e.to_string())?;
    if !r2.outcome.is_sat() || r2.stats.peak_live_nodes > 2 || t2 >= Duration::from_secs(60) {
        return Err(format!(
            "sat case: {} peak={} in {t2:?}",
            outcome_name(&r2.outcome),
            r2.stats.peak_live_nodes
        ));
    }
    Ok(format!(
        "unsat successors={} peak={} ({}ms); sat peak={} ({}ms)",
        s.successors_created,
        s.peak_live_nodes,
        t.as_millis(),
        r2.stats.peak_live_nodes,
        t2.as_millis()
    ))
}

fn chain(n: usize) -> Concept {
    let d: Vec<String> = (1..=n).map(|i| format!("(or A{i} B{i})")).collect();
    let d = format!("(and {})", d.join(" "));
    c(&format!("(and (some R {d}) (all R (some R {d})))"))
}

fn criterion_3() -> Report {
    let mut notes = Vec::new();
    for n in [4, 6, 8] {
        let cn = chain(n);
        let m = subconcepts(&nnf(&cn)).len();
        let bound = m.pow(3) + 1;
        let (r, t) = timed(|| decide_si(&cn, &trans(&["R"]), &Config::default()));
        let r = r.map_err(|e| e.to_string())?;
        let path = r.stats.max_path_length;
        if !r.outcome.is_sat() || path > bound || t >= Duration::from_secs(10) {
            return Err(format!("n={n}: {} path={path} bound={bound} in {t:?}", outcome_name(&r.outcome)));
        }
        notes.push(format!("n={n} path={path}<={bound} {}ms", t.as_millis()));
    }
    Ok(notes.join(", "))
}

fn criterion_4() -> Report {
    let mut g = Gen::new(4, Family::alc());
    let (mut path, mut deg) = (0, 0);
    for k in 0..500 {
        let x = g.concept(15);
        let size = measure(&x).size;
        let r = decide_alc(&x, None, &Config::default()).map_err(|e| e.to_string())?;
        if let Outcome::Unknown(why) = &r.outcome {
            return Err(format!("#{k} {x}: unknown {why}"));
        }
        let s = &r.stats;
        if s.max_path_length > size || s.max_out_degree > size {
            return Err(format!("#{k} {x}: path={} degree={} size={size}", s.max_path_length, s.max_out_degree));
        }
        path = path.max(s.max_path_length);
        deg = deg.max(s.max_out_degree);
    }
    Ok(format!("500 inputs, max path {path}, max out-degree {deg}"))
}

fn criterion_5() -> Report {
    let mut g = Gen::new(5, Family::alcq());
    let (mut sat, mut beyond) = (0, 0);
    for k in 0..500 {
        let x = g.concept(12);
        let opt = decide_alcq_optimal(&x, None, &Config::default()).map_err(|e| e.to_string())?;
        let std = decide_alcq_standard(&x, None, &Config::default()).map_err(|e| e.to_string())?;
        if opt.outcome.is_sat() != std.outcome.is_sat() || opt.outcome.is_unsat() != std.outcome.is_unsat() {
            return Err(format!(
                "#{k} {x}: optimal {} standard {}",
                outcome_name(&opt.outcome),
                outcome_name(&std.outcome)
            ));
        }
        let p = Problem::concept_sat(x.clone());
        let found = exists(&p, 4)?;
        match (&opt.outcome, found) {
            (Outcome::Unsat, false) => {}
            (Outcome::Sat(_), true) => sat += 1,
            (Outcome::Sat(_), false) => {
                let v = decide_alcq_optimal(&x, None, &Config::model()).map_err(|e| e.to_string())?;
                match v.outcome.model() {
                    Some(m) if check(m, &p) => {
                        sat += 1;
                        beyond += 1;
                    }
                    _ => return Err(format!("#{k} {x}: SAT without a model at bound 4 or a valid witness")),
                }
            }
            (o, _) => return Err(format!("#{k} {x}: engine {} oracle {found}", outcome_name(o))),
        }
    }
    Ok(format!("500 inputs agree, {sat} SAT ({beyond} need more than 4 elements, witness checked)"))
}

fn tiny_rbox(g: &mut Gen) -> RoleBox {
    let mut rb = RoleBox::new();
    if g.rng.gen_bool(0.5) {
        rb.add_transitive("R");
    }
    if g.rng.gen_bool(0.5) {
        rb.add_inclusion(Role::new("S"), Role::new("R"));
    }
    g.fam.simple = vec![Role::new("S"), Role::inverse_of("S")];
    if !rb.is_transitive(&Role::new("R")) {
        g.fam.simple.extend([Role::new("R"), Role::inverse_of("R")]);
    }
    rb
}

fn criterion_6() -> Report {
    let mut notes = Vec::new();
    let n = 100;

    let mut g = Gen::new(61, Family::tiny());
    let mut agree = 0;
    for k in 0..n {
        let cb = g.cbox(2, 5);
        let src = Problem { cbox: cb.clone(), ..Default::default() };
        let mut fresh = Fresh::for_problem(&src);
        let t = cbox_to_tbox(&cb, &mut fresh, DEFAULT_EXPANSION_CAP).map_err(|e| e.to_string())?;
        let dst = Problem { tbox: t, ..Default::default() };
        let (a, b) = (exists(&src, 3)?, exists(&dst, 3)?);
        if a != b {
            return Err(format!("cbox->tbox #{k}: {a} vs {b}"));
        }
        agree += a as usize;
    }
    notes.push(format!("cbox->tbox {agree}/{n} consistent"));

    let mut agree = 0;
    for k in 0..n {
        let t = g.tbox(2, 5);
        let src = Problem { tbox: t.clone(), ..Default::default() };
        let mut fresh = Fresh::for_problem(&src);
        let dst = Problem { cbox: tbox_to_cbox(&t, &mut fresh), ..Default::default() };
        let (a, b) = (exists(&src, 3)?, exists(&dst, 3)?);
        if a != b {
            return Err(format!("tbox->cbox #{k}: {a} vs {b}"));
        }
        agree += a as usize;
    }
    notes.push(format!("tbox->cbox {agree}/{n}"));

    let mut agree = 0;
    for k in 0..n {
        let t = g.tbox(1, 5);
        let abox = ABox { assertions: g.abox(&["a", "b"], 3, 5) };
        let src = Problem { tbox: t, abox, ..Default::default() };
        let dst = Problem { tbox: abox_to_tbox_nominals(&src), ..Default::default() };
        let (a, b) = (exists(&src, 3)?, exists(&dst, 3)?);
        if a != b {
            return Err(format!("abox->tbox #{k}: {a} vs {b}"));
        }
        agree += a as usize;
    }
    notes.push(format!("abox->tbox {agree}/{n}"));

    let mut g = Gen::new(62, Family { roles: vec![Role::new("R"), Role::inverse_of("R"), Role::new("S")], ..Family::tiny() });
    let mut agree = 0;
    for k in 0..n {
        let rb = tiny_rbox(&mut g);
        let t = g.tbox(1, 5);
        let x = g.concept(6);
        let src = Problem { tbox: t.clone(), rbox: rb.clone(), query: Query::Sat(x.clone()), ..Default::default() };
        let mut fresh = Fresh::for_problem(&src);
        let (x2, rb2) = internalize_shiq(&x, &t, &rb, &mut fresh);
        let dst = Problem { rbox: rb2, query: Query::Sat(x2), ..Default::default() };
        let (a, b) = (exists(&src, 3)?, exists(&dst, 3)?);
        if a != b {
            return Err(format!("internalize #{k}: {a} vs {b}"));
        }
        agree += a as usize;
    }
    notes.push(format!("internalize {agree}/{n}"));

    let mut agree = 0;
    for k in 0..n {
        let rb = tiny_rbox(&mut g);
        let x = g.concept(7);
        let src = Problem { rbox: rb.clone(), query: Query::Sat(x.clone()), ..Default::default() };
        let mut fresh = Fresh::for_problem(&src);
        let (x2, t) = reduce_shiq_to_alcqib(&x, &rb, &mut fresh).map_err(|e| e.to_string())?;
        let dst = Problem { tbox: t, query: Query::Sat(x2), ..Default::default() };
        let (a, b) = (exists(&src, 3)?, exists(&dst, 3)?);
        if a != b {
            return Err(format!("shiq->alcqib #{k} {x}: {a} vs {b}"));
        }
        agree += a as usize;
    }
    notes.push(format!("shiq->alcqib {agree}/{n}"));

    let mut g = Gen::new(63, Family::tiny());
    let (mut agree, mut shifted) = (0, 0);
    for k in 0..n {
        let t: TBox = g.tbox(2, 5);
        let src = Problem { tbox: t.clone(), ..Default::default() };
        let mut fresh = Fresh::for_problem(&src);
        let dst = Problem::concept_sat(spy_point_internalize(&t, &mut fresh));
        let (a, b) = (exists(&src, 3)?, exists(&dst, 4)?);
        if a != b {
            if exists(&src, 4)? != b {
                return Err(format!("spy-point #{k}: {a} vs {b}"));
            }
            shifted += 1;
        }
        agree += b as usize;
    }
    notes.push(format!("spy-point {agree}/{n} ({shifted} settled at bound 4)"));
    Ok(notes.join(", "))
}

fn criterion_7() -> Report {
    let text = "(cardinality >= 1 (not A)) (cardinality <= 0 (not (and (some R top) (<= 1 (inv R) top) (all R A))))";
    let p = parse_problem(text).map_err(|e| e.to_string())?;
    for b in 1..=4 {
        if exists(&p, b)? {
            return Err(format!("oracle found a model at bound {b}"));
        }
    }
    let out = run_source(text, &RunConfig::default());
    let first = out.stdout.lines().next().unwrap_or("");
    if !first.starts_with("UNKNOWN") {
        return Err(format!("first line '{first}'"));
    }
    Ok(format!("oracle none at 1..4, report '{first}'"))
}

fn criterion_8() -> Report {
    let mut g = Gen::new(81, Family::si());
    for k in 0..200 {
        let rb = g.rbox(false);
        let x = g.concept(10);
        let r = decide_si(&x, &rb.transitive, &Config::default()).map_err(|e| e.to_string())?;
        if let Outcome::Unknown(why) = r.outcome {
            return Err(format!("SI #{k} {x}: {why}"));
        }
    }
    let mut g = Gen::new(82, Family::shiq());
    for k in 0..200 {
        g.fam.counting = true;
        let rb = g.rbox(true);
        let x = g.concept(10);
        let r = decide_shiq(&x, &rb, &Config::default()).map_err(|e| e.to_string())?;
        if let Outcome::Unknown(why) = r.outcome {
            return Err(format!("SHIQ #{k} {x}: {why}"));
        }
    }
    Ok(format!("200 SI + 200 SHIQ decided, debug assertions {}", if cfg!(debug_assertions) { "on" } else { "off" }))
}

fn criterion_9() -> Report {
    let cfg = Config::model();
    let (mut checked, mut trees) = (0, 0);
    let mut verify = |name: &str, x: &Concept, p: &Problem, v: Verdict, tree_ok: bool| -> Result<(), String> {
        match &v.outcome {
            Outcome::Sat(Some(Witness::Model(m))) => {
                if !check(m, p) {
                    return Err(format!("{name} {x}: witness rejected\n{m}"));
                }
                checked += 1;
            }
            Outcome::Sat(Some(Witness::Tree(_))) if tree_ok => trees += 1,
            Outcome::Sat(w) => return Err(format!("{name} {x}: SAT with witness {w:?}")),
            _ => {}
        }
        Ok(())
    };
    let err = |e: dlsuite::engine::EngineError| e.to_string();

    let mut g = Gen::new(91, Family::alc());
    for _ in 0..100 {
        let x = g.concept(15);
        verify("ALC", &x, &Problem::concept_sat(x.clone()), decide_alc(&x, None, &cfg).map_err(err)?, false)?;
    }
    let mut g = Gen::new(92, Family::alcq());
    for _ in 0..100 {
        let x = g.concept(12);
        let p = Problem::concept_sat(x.clone());
        verify("ALCQ-opt", &x, &p, decide_alcq_optimal(&x, None, &cfg).map_err(err)?, false)?;
        verify("ALCQ-std", &x, &p, decide_alcq_standard(&x, None, &cfg).map_err(err)?, false)?;
    }
    let mut g = Gen::new(93, Family { max_depth: 2, ..Family::shiq() });
    for _ in 0..100 {
        let x = g.concept(10);
        verify("ALCQIb", &x, &Problem::concept_sat(x.clone()), decide_alcqib(&x, &cfg).map_err(err)?, false)?;
    }
    let mut g = Gen::new(94, Family::si());
    for _ in 0..100 {
        let rb = g.rbox(false);
        let x = g.concept(10);
        let p = Problem { rbox: rb.clone(), query: Query::Sat(x.clone()), ..Default::default() };
        verify("SI", &x, &p, decide_si(&x, &rb.transitive, &cfg).map_err(err)?, false)?;
    }
    let mut g = Gen::new(95, Family::shiq());
    for _ in 0..100 {
        g.fam.counting = true;
        let rb = g.rbox(true);
        let x = g.concept(10);
        let p = Problem { rbox: rb.clone(), query: Query::Sat(x.clone()), ..Default::default() };
        verify("SHIQ", &x, &p, decide_shiq(&x, &rb, &cfg).map_err(err)?, true)?;
    }
    Ok(format!("{checked} models checked, {} SHIQ tree witnesses", trees))
}

fn main() {
    let criteria: [(usize, fn() -> Report); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let res = std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn(f)
            .unwrap()
            .join()
            .unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(msg) => println!("criterion {n}: PASS {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
