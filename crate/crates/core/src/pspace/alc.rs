//! ALC satisfiability by depth-first completion, one successor at a time.

use super::{conclude, signature_of, Kids, Sub};
use crate::engine::{
    require, Abort, Config, ConceptTable, EngineError, Id, Label, Mode, Run, Shape,
    Verdict,
};
use crate::kb::SimpleTBox;
use crate::syntax::{nnf, Concept};

struct Alc<'a> {
    t: &'a ConceptTable,
    run: Run,
}

impl Alc<'_> {
    fn node(&mut self, init: &[Id], depth: usize) -> Result<Option<Sub>, Abort> {
        self.run.node_created(depth);
        let mut label = self.t.empty_label();
        if !self.t.add_all(&mut label, init, &mut self.run)? {
            self.run.rule("clash")?;
            self.run.nodes_dropped(1);
            return Ok(None);
        }
        let mut sats = self.t.saturations(label);
        while let Some(s) = sats.next(&mut self.run)? {
            if let Some(kids) = self.expand(&s, depth)? {
                if self.run.mode == Mode::Trace {
                    self.run.nodes_dropped(1);
                }
                return Ok(Some(Sub { label: s, kids }));
            }
        }
        self.run.nodes_dropped(1);
        Ok(None)
    }

    /// Applies the `∃`-rule to every existential of a saturated label.
    fn expand(
        &mut self,
        s: &Label,
        depth: usize,
    ) -> Result<Option<Kids>, Abort> {
        let somes: Vec<(usize, Id)> = s
            .ones()
            .filter_map(|i| match self.t.shape(i) {
                Shape::Some(r, d) => Some((*r, *d)),
                _ => None,
            })
            .collect();
        self.run.out_degree(somes.len());
        let mut kids = Vec::new();
        for (r, d) in somes {
            self.run.rule("some")?;
            let mut init = vec![d];
            for i in s.ones() {
                if let Shape::All(r2, e) = self.t.shape(i) {
                    if *r2 == r {
                        self.run.rule("all")?;
                        init.push(*e);
                    }
                }
            }
            match self.node(&init, depth + 1)? {
                Some(sub) => {
                    if self.run.mode == Mode::Model {
                        kids.push((vec![self.t.atom(r).clone()], sub));
                    }
                }
                None => {
                    let kept: usize = kids.iter().map(|(_, k): &(_, Sub)| k.size()).sum();
                    self.run.nodes_dropped(kept);
                    return Ok(None);
                }
            }
        }
        Ok(Some(kids))
    }
}

pub(crate) fn is_alc(c: &Concept) -> bool {
    match c {
        Concept::Nominal(_) | Concept::AtLeast(..) | Concept::AtMost(..) => false,
        Concept::All(r, _) | Concept::Some(r, _) => r.as_role().is_some_and(|r| !r.inverted),
        _ => true,
    }
}

/// Decides satisfiability of `c`, with defined names of `tbox` unfolded lazily.
pub fn decide_alc(c: &Concept, tbox: Option<&SimpleTBox>, cfg: &Config) -> Result<Verdict, EngineError> {
    let mut parts = vec![c];
    if let Some(t) = tbox {
        parts.extend(t.defs.values().map(|(_, d)| d));
    }
    require(&parts, "ALC", is_alc)?;
    let root = nnf(c);
    let t = ConceptTable::build(std::slice::from_ref(&root), tbox, None);
    let mut e = Alc {
        t: &t,
        run: Run::new(cfg),
    };
    let res = e.node(&[t.id(&root).unwrap()], 0);
    Ok(conclude(&t, e.run, res, cfg, &signature_of(c, tbox), tbox))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Problem;
    use crate::oracle::check;
    use crate::syntax::parse_concept;

    fn run(s: &str, mode: Mode) -> Verdict {
        decide_alc(&parse_concept(s).unwrap(), None, &Config { mode, ..Default::default() }).unwrap()
    }

    #[test]
    fn examples() {
        assert!(run("(and A (not A))", Mode::Trace).outcome.is_unsat());
        assert!(run("(and (some R A) (all R (not A)))", Mode::Trace).outcome.is_unsat());
        let v = run("(and (some R A) (all R B))", Mode::Model);
        let m = v.outcome.model().unwrap();
        assert_eq!(m.domain_size, 2);
        assert!(check(m, &Problem::concept_sat(parse_concept("(and (some R A) (all R B))").unwrap())));
    }

    #[test]
    fn trace_keeps_one_path() {
        let v = run("(and (some R A) (some R B) (some R (some S C)))", Mode::Trace);
        assert!(v.outcome.is_sat());
        assert_eq!(v.stats.peak_live_nodes, 3);
        assert_eq!(v.stats.max_out_degree, 3);
        assert_eq!(v.stats.max_path_length, 2);
    }

    #[test]
    fn rejects_counting() {
        assert!(decide_alc(&parse_concept("(>= 2 R A)").unwrap(), None, &Config::default()).is_err());
    }
}
