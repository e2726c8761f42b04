//! Answers the query of a problem by reducing it to satisfiability tests and
//! dispatching each test to the engine for its logic.

use std::collections::{BTreeMap, BTreeSet};

use crate::blocking::{decide_shiq, decide_si};
use crate::engine::{Config, EngineError, EngineStats, Mode, Outcome, Verdict, Witness};
use crate::kb::{detect_logic, features, render_problem, Assertion, CardDir, CardRestriction, Logic, Problem, Query, SimpleTBox};
use crate::oracle::{check, find_model, OracleError};
use crate::precomplete::{assemble, precomplete, Style};
use crate::pspace::{decide_alc, decide_alcq_optimal, decide_alcqib};
use crate::reductions::{
    abox_to_tbox_nominals, cbox_to_tbox, internalize_shiq, reduce_shiq_to_alcqib, tbox_to_cbox,
    translate_c2, Fresh, DEFAULT_EXPANSION_CAP,
};
use crate::syntax::{complement_nnf, nnf, signature, Concept};

/// What the bounded oracle said about a problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleNote {
    Model(usize),
    None(usize),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResult {
    pub verdict: Verdict,
    /// Truth value of a subsumption or instance query.
    pub answer: Option<bool>,
    /// Equivalent names and direct subsumptions of a classification.
    pub classes: Option<Classification>,
    /// Whether a returned model was accepted by the oracle's checker.
    pub witness_checked: Option<bool>,
    pub oracle: Option<OracleNote>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub equivalent: Vec<Vec<String>>,
    pub edges: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct QueryConfig {
    pub engine: Config,
    /// Domain bound for the oracle cross-check.
    pub oracle: Option<usize>,
}

pub fn logic_of(p: &Problem) -> Logic {
    p.logic.unwrap_or_else(|| detect_logic(p))
}

fn unknown(reason: &str) -> Verdict {
    Verdict::unknown(reason)
}

fn from_engine(r: Result<Verdict, EngineError>) -> Verdict {
    r.unwrap_or_else(|e| unknown(&format!("unsupported: {e}")))
}

/// Satisfiability of `c` with respect to the TBox, ABox and role box of `kb`.
pub fn decide_sat(kb: &Problem, logic: Logic, c: &Concept, cfg: &Config) -> Verdict {
    let f = features(kb);
    if logic == Logic::Alcqio || f.nominals || f.cbox {
        return unknown("unsupported-nominals");
    }
    if !kb.abox.is_empty() {
        return decide_abox(kb, logic, c, cfg);
    }
    if f.general_tbox || (logic == Logic::Si && !kb.tbox.is_empty()) {
        if f.role_booleans {
            return unknown("unsupported-general-tbox");
        }
        let mut fresh = Fresh::for_problem(kb);
        let (ci, rb) = internalize_shiq(c, &kb.tbox, &kb.rbox, &mut fresh);
        return from_engine(decide_shiq(&ci, &rb, cfg));
    }
    let st = match SimpleTBox::from_tbox(&kb.tbox) {
        Ok(t) => t,
        Err(_) => return unknown("unsupported-general-tbox"),
    };
    let tb = (!st.is_empty()).then_some(&st);
    match logic {
        Logic::Alc => from_engine(decide_alc(c, tb, cfg)),
        Logic::Alcq => from_engine(decide_alcq_optimal(c, tb, cfg)),
        Logic::Alcqib => from_engine(decide_alcqib(&st.unfold(c), cfg)),
        Logic::Si => from_engine(decide_si(&st.unfold(c), &kb.rbox.transitive, cfg)),
        Logic::Shiq => from_engine(decide_shiq(&st.unfold(c), &kb.rbox, cfg)),
        Logic::Alcqio => unreachable!(),
    }
}

fn decide_abox(kb: &Problem, logic: Logic, c: &Concept, cfg: &Config) -> Verdict {
    let style = match logic {
        Logic::Alc => Style::Plain,
        Logic::Alcq | Logic::Alcqib => Style::Counting,
        _ => return unknown("unsupported-abox"),
    };
    let mut kb = kb.clone();
    if *c != Concept::Top {
        let x = Fresh::for_problem(&kb).name("q");
        kb.abox.assertions.push(Assertion::Instance(x, c.clone()));
    }
    let Ok(cands) = precomplete(&kb, style) else {
        return unknown("unsupported-general-tbox");
    };
    let st = SimpleTBox::from_tbox(&kb.tbox).expect("checked by precomplete");
    let mut stats = EngineStats::default();
    let mut undecided = None;
    for cand in cands {
        *stats.rules.entry("precompletion").or_default() += 1;
        stats.steps += 1;
        if stats.steps > cfg.step_limit {
            return Verdict {
                stats,
                ..unknown("step-limit")
            };
        }
        let mut models = Vec::new();
        let mut all_sat = true;
        for (_, cx) in &cand.concepts {
            let left = Config {
                step_limit: cfg.step_limit.saturating_sub(stats.steps),
                dump: false,
                ..*cfg
            };
            let v = from_engine(match logic {
                Logic::Alc => decide_alc(cx, None, &left),
                Logic::Alcq => decide_alcq_optimal(cx, None, &left),
                _ => decide_alcqib(cx, &left),
            });
            stats.absorb(&v.stats);
            match v.outcome {
                Outcome::Sat(w) => {
                    if let Some(Witness::Model(m)) = w {
                        models.push(m);
                    }
                }
                Outcome::Unsat => {
                    all_sat = false;
                    break;
                }
                Outcome::Unknown(r) => {
                    undecided.get_or_insert(r);
                    all_sat = false;
                    break;
                }
            }
        }
        if all_sat {
            let w = (cfg.mode == Mode::Model && models.len() == cand.concepts.len())
                .then(|| Witness::Model(assemble(&cand, &models, &st, &kb.signature())));
            return Verdict {
                outcome: Outcome::Sat(w),
                stats,
                dump: None,
            };
        }
    }
    Verdict {
        outcome: match undecided {
            Some(r) => Outcome::Unknown(r),
            None => Outcome::Unsat,
        },
        stats,
        dump: None,
    }
}

/// The knowledge base of `p` with the query concept whose satisfiability
/// answers it. Instance queries add their negated assertion to the ABox.
fn reduce_query(p: &Problem) -> (Problem, Concept) {
    let mut kb = p.clone();
    kb.query = Query::Consistency;
    let c = match &p.query {
        Query::Consistency | Query::Classify => Concept::Top,
        Query::Sat(c) => c.clone(),
        Query::Subsumes(c, d) => Concept::and(vec![nnf(c), complement_nnf(d)]),
        Query::Instance(x, c) => {
            kb.abox.assertions.push(Assertion::Instance(x.clone(), Concept::not(c.clone())));
            Concept::Top
        }
    };
    (kb, c)
}

fn classify(kb: &Problem, logic: Logic, cfg: &Config, stats: &mut EngineStats) -> Result<Classification, String> {
    let mut names = BTreeSet::new();
    for c in kb.tbox.concepts() {
        names.extend(signature(c).concept_names);
    }
    let names: Vec<String> = names.into_iter().collect();
    let mut tbox_only = kb.clone();
    tbox_only.abox.assertions.clear();
    let mut sub = BTreeSet::new();
    let cfg = Config { dump: false, mode: Mode::Trace, ..*cfg };
    for a in &names {
        for b in &names {
            if a == b {
                continue;
            }
            let c = Concept::and(vec![Concept::name(a), Concept::not(Concept::name(b))]);
            let v = decide_sat(&tbox_only, logic, &c, &cfg);
            stats.absorb(&v.stats);
            match v.outcome {
                Outcome::Unsat => {
                    sub.insert((a.clone(), b.clone()));
                }
                Outcome::Sat(_) => {}
                Outcome::Unknown(r) => return Err(r),
            }
        }
    }
    let le = |a: &String, b: &String| a == b || sub.contains(&(a.clone(), b.clone()));
    let mut rep: BTreeMap<&String, &String> = BTreeMap::new();
    let mut out = Classification::default();
    for a in &names {
        if rep.contains_key(a) {
            continue;
        }
        let class: Vec<&String> = names.iter().filter(|b| le(a, b) && le(b, a)).collect();
        for b in &class {
            rep.insert(b, a);
        }
        if class.len() > 1 {
            out.equivalent.push(class.into_iter().cloned().collect());
        }
    }
    let reps: Vec<&String> = names.iter().filter(|a| rep[a] == *a).collect();
    let lt = |a: &String, b: &String| le(a, b) && !le(b, a);
    for a in &reps {
        for b in &reps {
            if lt(a, b) && !reps.iter().any(|m| lt(a, m) && lt(m, b)) {
                out.edges.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    Ok(out)
}

/// Decides the query of a validated problem.
pub fn decide_query(p: &Problem, qc: &QueryConfig) -> QueryResult {
    let logic = logic_of(p);
    let (kb, c) = reduce_query(p);
    let mut verdict = decide_sat(&kb, logic, &c, &qc.engine);
    let mut res = QueryResult {
        verdict: verdict.clone(),
        answer: None,
        classes: None,
        witness_checked: None,
        oracle: None,
    };
    if let Query::Classify = p.query {
        if verdict.outcome.is_sat() {
            verdict.outcome = Outcome::Sat(None);
            match classify(&kb, logic, &qc.engine, &mut verdict.stats) {
                Ok(cl) => res.classes = Some(cl),
                Err(r) => verdict.outcome = Outcome::Unknown(r),
            }
        }
        res.verdict = verdict;
    }
    if let Some(bound) = qc.oracle {
        res.oracle = Some(cross_check(p, bound, &mut res.verdict));
    }
    if let Outcome::Sat(Some(Witness::Model(m))) = &res.verdict.outcome {
        res.witness_checked = Some(check(m, p));
    }
    if matches!(p.query, Query::Subsumes(..) | Query::Instance(..)) {
        res.answer = match res.verdict.outcome {
            Outcome::Sat(_) => Some(false),
            Outcome::Unsat => Some(true),
            Outcome::Unknown(_) => None,
        };
    }
    res
}

/// Bounded model search on `p`. An UNKNOWN verdict becomes SAT when a model
/// is found; a decided verdict is left alone and the note records whether the
/// oracle agrees.
fn cross_check(p: &Problem, bound: usize, v: &mut Verdict) -> OracleNote {
    if let Query::Classify = p.query {
        return OracleNote::Skipped("classify".into());
    }
    match find_model(p, bound) {
        Ok(Some(m)) => {
            let n = m.domain_size;
            if let Outcome::Unknown(_) = v.outcome {
                v.outcome = Outcome::Sat(Some(Witness::Model(m)));
            }
            OracleNote::Model(n)
        }
        Ok(None) => OracleNote::None(bound),
        Err(e) => OracleNote::Skipped(oracle_reason(&e)),
    }
}

fn oracle_reason(e: &OracleError) -> String {
    e.to_string().replace(' ', "-")
}

/// Artifacts that can be written next to a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    C2,
    Tbox,
    Alcqib,
    Tree,
}

/// Renders the reduction `e` of `p`; `Tree` is produced by the engines.
pub fn emit_reduction(p: &Problem, e: Emit) -> Result<String, String> {
    let mut fresh = Fresh::for_problem(p);
    let (kb, c) = reduce_query(p);
    match e {
        Emit::Tbox => {
            let mut t = abox_to_tbox_nominals(&kb);
            let extra = cbox_to_tbox(&kb.cbox, &mut fresh, DEFAULT_EXPANSION_CAP).map_err(|e| e.to_string())?;
            t.axioms.extend(extra.axioms);
            let out = Problem {
                logic: kb.logic.map(|_| Logic::Alcqio),
                tbox: t,
                rbox: kb.rbox.clone(),
                query: Query::Sat(c),
                ..Default::default()
            };
            Ok(render_problem(&out))
        }
        Emit::C2 => {
            if !kb.rbox.is_empty() {
                return Err("c2 output needs a problem without role axioms".into());
            }
            let t = abox_to_tbox_nominals(&kb);
            let mut cb = kb.cbox.clone();
            cb.restrictions.extend(tbox_to_cbox(&t, &mut fresh).restrictions);
            if c != Concept::Top {
                cb.restrictions.push(CardRestriction {
                    dir: CardDir::AtLeast,
                    count: 1u32.into(),
                    concept: c,
                });
            }
            let mut text = translate_c2(&cb).map_err(|e| e.to_string())?;
            text.push('\n');
            Ok(text)
        }
        Emit::Alcqib => {
            let f = features(&kb);
            if f.nominals || f.cbox || f.role_booleans || !kb.abox.is_empty() {
                return Err("alcqib output needs a shiq concept or tbox problem".into());
            }
            let (ci, rb) = internalize_shiq(&c, &kb.tbox, &kb.rbox, &mut fresh);
            let (ct, t) = reduce_shiq_to_alcqib(&ci, &rb, &mut fresh).map_err(|e| e.to_string())?;
            let out = Problem {
                logic: Some(Logic::Alcqib),
                tbox: t,
                query: Query::Sat(ct),
                ..Default::default()
            };
            Ok(render_problem(&out))
        }
        Emit::Tree => Err("tree output comes from the engine run".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_problem;

    fn run(src: &str, mode: Mode) -> QueryResult {
        let p = parse_problem(src).unwrap();
        decide_query(&p, &QueryConfig { engine: Config { mode, ..Default::default() }, oracle: None })
    }

    #[test]
    fn subsumption() {
        let r = run("(query subsumes (and A B) A)", Mode::Trace);
        assert_eq!(r.answer, Some(true));
        let r = run("(query subsumes A (and A B))", Mode::Model);
        assert_eq!(r.answer, Some(false));
        assert_eq!(r.witness_checked, Some(true));
    }

    #[test]
    fn abox_consistency() {
        let r = run("(instance x (all R A)) (related x y R) (instance y (not A))", Mode::Trace);
        assert!(r.verdict.outcome.is_unsat());
        let r = run("(logic alcq) (instance x (<= 1 R top)) (related x y R) (related x z R) (instance y A) (instance z B)", Mode::Model);
        assert!(r.verdict.outcome.is_sat());
        assert_eq!(r.witness_checked, Some(true));
        let r = run(
            "(logic alcq) (instance x (<= 1 R top)) (related x y R) (related x z R) (instance y A) (instance z (not A))",
            Mode::Trace,
        );
        assert!(r.verdict.outcome.is_unsat());
    }

    #[test]
    fn inverse_abox() {
        let src = "(logic alcqib) (instance x (>= 2 R A)) (related x y R) (instance y (all (inv R) B)) (instance x (not B))";
        assert!(run(src, Mode::Trace).verdict.outcome.is_unsat());
        let src = "(logic alcqib) (instance x (>= 2 R A)) (related x y R) (instance y (<= 0 (inv R) (not B))) (instance x B)";
        let r = run(src, Mode::Model);
        assert!(r.verdict.outcome.is_sat());
        assert_eq!(r.witness_checked, Some(true));
    }

    #[test]
    fn general_tbox_goes_through_shiq() {
        let r = run("(implies top (some R A)) (implies A (all R (not A))) (query sat B)", Mode::Trace);
        assert!(r.verdict.outcome.is_unsat());
        let r = run("(implies top (some R A)) (implies A (all R B)) (query sat (not B))", Mode::Model);
        assert!(r.verdict.outcome.is_sat());
        assert_eq!(r.witness_checked, Some(true));
        let r = run("(implies top A) (query sat (some R (not A)))", Mode::Trace);
        assert!(r.verdict.outcome.is_unsat());
    }

    #[test]
    fn classification() {
        let r = run("(equal Human (or Male Female)) (implies (and Male Female) bottom) (query classify)", Mode::Trace);
        let cl = r.classes.unwrap();
        assert!(cl.edges.contains(&("Male".into(), "Human".into())));
        assert!(cl.edges.contains(&("Female".into(), "Human".into())));
        assert!(cl.equivalent.is_empty());
    }

    #[test]
    fn nominal_problems_are_unknown() {
        let r = run("(cardinality >= 1 (not A)) (implies top (some R top))", Mode::Trace);
        assert!(matches!(r.verdict.outcome, Outcome::Unknown(_)));
    }

    #[test]
    fn emitted_artifacts() {
        let p = parse_problem("(cardinality >= 1 A)").unwrap();
        assert_eq!(emit_reduction(&p, Emit::C2).unwrap(), "E>=1 x. A(x)\n");
        let p = parse_problem("(transitive R) (query sat (all R A))").unwrap();
        let t = emit_reduction(&p, Emit::Alcqib).unwrap();
        assert!(t.starts_with("(logic alcqib)"), "{t}");
    }
}
