//! ALCQIb satisfiability. Successors are generated one at a time with a guessed
//! set of connecting roles. When a successor needs its predecessor to decide a
//! qualifier, the predecessor adds the qualifier or its complement and
//! restarts its own successor generation.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;

use super::{conclude, signature_of, Sub};
use crate::engine::{
    counting_form, require, Abort, Config, ConceptTable, EngineError, Id, Label, Mode,
    Run, Shape, Verdict,
};
use crate::roles::{is_safe, models_roleset, Role, RoleExpr};
use crate::syntax::Concept;

type Counters = HashMap<(usize, Id), BigUint>;

fn get(c: &Counters, k: (usize, Id)) -> BigUint {
    c.get(&k).cloned().unwrap_or_default()
}

/// Largest number of distinct roles (with inverses) whose subsets are guessed.
const MAX_UNIVERSE: usize = 16;

enum Res {
    Sat(Sub),
    Unsat,
    Restart(Id),
}

struct Pred<'p> {
    label: &'p Label,
    /// Roles from the current node to its predecessor.
    edge: &'p BTreeSet<Role>,
}

struct Frame {
    counters: Counters,
    kids: usize,
    made: usize,
    req: usize,
    next: usize,
}

struct Alcqib<'a> {
    t: &'a ConceptTable,
    run: Run,
    /// For every role expression, the role sets satisfying it in guessing order.
    rolesets: Vec<Vec<BTreeSet<Role>>>,
}

impl<'a> Alcqib<'a> {
    fn new(t: &'a ConceptTable, cfg: &Config) -> Self {
        let mut universe: BTreeSet<Role> = BTreeSet::new();
        for e in t.roles() {
            for a in e.atoms() {
                universe.insert(a.inv());
                universe.insert(a);
            }
        }
        let universe: Vec<Role> = universe.into_iter().collect();
        let mut all: Vec<BTreeSet<Role>> = Vec::new();
        for mask in 0u32..(1 << universe.len()) {
            all.push(
                universe
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, r)| r.clone())
                    .collect(),
            );
        }
        let rolesets = t
            .roles()
            .iter()
            .map(|w| {
                let own: BTreeSet<Role> = w.atoms().into_iter().collect();
                let mut sets: Vec<BTreeSet<Role>> =
                    all.iter().filter(|rs| models_roleset(rs, w)).cloned().collect();
                sets.sort_by_key(|rs| (rs.iter().filter(|r| !own.contains(*r)).count(), rs.len(), rs.clone()));
                sets
            })
            .collect();
        Alcqib {
            t,
            run: Run::new(cfg),
            rolesets,
        }
    }

    fn node(&mut self, init: &[Id], pred: Option<Pred>, depth: usize) -> Result<Res, Abort> {
        self.run.node_created(depth);
        let mut label = self.t.empty_label();
        if !self.t.add_all(&mut label, init, &mut self.run)? {
            self.run.rule("clash")?;
            self.run.nodes_dropped(1);
            return Ok(Res::Unsat);
        }
        let mut sats = self.t.saturations(label);
        while let Some(s) = sats.next(&mut self.run)? {
            match self.restart_loop(s, pred.as_ref(), depth)? {
                Res::Sat(sub) => {
                    if self.run.mode == Mode::Trace {
                        self.run.nodes_dropped(1);
                    }
                    return Ok(Res::Sat(sub));
                }
                Res::Restart(d) => {
                    self.run.nodes_dropped(1);
                    return Ok(Res::Restart(d));
                }
                Res::Unsat => {}
            }
        }
        self.run.nodes_dropped(1);
        Ok(Res::Unsat)
    }

    /// A qualifier the predecessor must decide before this node can count it.
    fn undecided(&self, s: &Label, pred: Option<&Pred>) -> Option<Id> {
        let p = pred?;
        s.ones().find_map(|i| match self.t.shape(i) {
            Shape::AtLeast(_, w, d) | Shape::AtMost(_, w, d) => {
                let touches = self.t.role(*w).atoms().iter().any(|r| p.edge.contains(r));
                let open = !p.label.contains(*d) && !p.label.contains(self.t.comp(*d));
                (touches && open).then_some(*d)
            }
            _ => None,
        })
    }

    fn restart_loop(&mut self, s: Label, pred: Option<&Pred>, depth: usize) -> Result<Res, Abort> {
        if let Some(d) = self.undecided(&s, pred) {
            self.run.rule("choose")?;
            return Ok(Res::Restart(d));
        }
        match self.generate(&s, pred, depth)? {
            Res::Sat(sub) => Ok(Res::Sat(sub)),
            Res::Unsat => Ok(Res::Unsat),
            Res::Restart(d) => {
                self.run.stats.restarts += 1;
                self.run.rule("restart")?;
                for e in [d, self.t.comp(d)] {
                    let mut l = s.clone();
                    if !self.t.add(&mut l, e, &mut self.run)? {
                        continue;
                    }
                    let mut sats = self.t.saturations(l);
                    while let Some(s2) = sats.next(&mut self.run)? {
                        match self.restart_loop(s2, pred, depth)? {
                            Res::Unsat => {}
                            other => return Ok(other),
                        }
                    }
                }
                Ok(Res::Unsat)
            }
        }
    }

    fn generate(&mut self, s: &Label, pred: Option<&Pred>, depth: usize) -> Result<Res, Abort> {
        let mut ge: Vec<(BigUint, usize, Id)> = Vec::new();
        let mut le: Vec<(BigUint, usize, Id)> = Vec::new();
        for i in s.ones() {
            match self.t.shape(i) {
                Shape::AtLeast(n, w, d) => ge.push((n.clone(), *w, *d)),
                Shape::AtMost(n, w, d) => le.push((n.clone(), *w, *d)),
                _ => {}
            }
        }
        let mut pairs: Vec<(Id, Id)> = Vec::new();
        for (_, _, e) in ge.iter().chain(&le) {
            if !pairs.iter().any(|&(a, b)| a == *e || b == *e) {
                pairs.push((*e, self.t.comp(*e)));
            }
        }
        let mut counters = Counters::new();
        if let Some(p) = pred {
            for (w, expr) in self.t.roles().iter().enumerate() {
                if models_roleset(p.edge, expr) {
                    for &(a, b) in &pairs {
                        for q in [a, b] {
                            if p.label.contains(q) {
                                counters.insert((w, q), BigUint::from(1u32));
                            }
                        }
                    }
                }
            }
        }
        let clash = |c: &Counters| le.iter().any(|(m, w, e)| get(c, (*w, *e)) > *m);
        if clash(&counters) {
            self.run.rule("clash")?;
            return Ok(Res::Unsat);
        }
        let mut frames: Vec<Frame> = Vec::new();
        let mut kids: Vec<(Vec<Role>, Sub)> = Vec::new();
        let mut made = 0usize;
        let mut resume: Option<(usize, usize)> = None;
        let drop_kids = |run: &mut Run, ks: &[(Vec<Role>, Sub)]| {
            run.nodes_dropped(ks.iter().map(|(_, k)| k.size()).sum());
        };
        loop {
            let (req, start) = match resume.take() {
                Some(x) => x,
                None => match ge.iter().position(|(n, w, d)| get(&counters, (*w, *d)) < *n) {
                    Some(q) => (q, 0),
                    None => {
                        self.run.out_degree(made);
                        return Ok(Res::Sat(Sub {
                            label: s.clone(),
                            kids,
                        }));
                    }
                },
            };
            let (_, w, d) = ge[req].clone();
            let free: Vec<(Id, Id)> = pairs
                .iter()
                .copied()
                .filter(|&(a, b)| a != d && b != d)
                .collect();
            let per = 1usize << free.len();
            let total = self.rolesets[w].len() * per;
            let mut found = None;
            for k in start..total {
                self.run.rule("ge")?;
                let rs = self.rolesets[w][k / per].clone();
                let pol = k % per;
                let mut chosen = vec![d];
                for (j, &(pos, neg)) in free.iter().enumerate() {
                    chosen.push(if pol >> (free.len() - 1 - j) & 1 == 0 { pos } else { neg });
                }
                let mut next = counters.clone();
                for (sigma, expr) in self.t.roles().iter().enumerate() {
                    if models_roleset(&rs, expr) {
                        for &x in &chosen {
                            *next.entry((sigma, x)).or_default() += 1u32;
                        }
                    }
                }
                if clash(&next) {
                    self.run.rule("clash")?;
                    continue;
                }
                let back: BTreeSet<Role> = rs.iter().map(|r| r.inv()).collect();
                let p = Pred {
                    label: s,
                    edge: &back,
                };
                match self.node(&chosen, Some(p), depth + 1)? {
                    Res::Sat(sub) => {
                        found = Some((k, next, rs, sub));
                        break;
                    }
                    Res::Unsat => {}
                    Res::Restart(q) => {
                        drop_kids(&mut self.run, &kids);
                        return Ok(Res::Restart(q));
                    }
                }
            }
            match found {
                Some((k, next, rs, sub)) => {
                    if k + 1 < total {
                        frames.push(Frame {
                            counters: counters.clone(),
                            kids: kids.len(),
                            made,
                            req,
                            next: k + 1,
                        });
                    }
                    counters = next;
                    made += 1;
                    if self.run.mode == Mode::Model {
                        kids.push((rs.into_iter().collect(), sub));
                    }
                }
                None => {
                    let Some(f) = frames.pop() else {
                        drop_kids(&mut self.run, &kids);
                        return Ok(Res::Unsat);
                    };
                    drop_kids(&mut self.run, &kids[f.kids..]);
                    kids.truncate(f.kids);
                    counters = f.counters;
                    made = f.made;
                    resume = Some((f.req, f.next));
                }
            }
        }
    }
}

pub(crate) fn is_alcqib(c: &Concept) -> bool {
    match c {
        Concept::Nominal(_) => false,
        _ => c.role_expr().is_none_or(is_safe),
    }
}

pub fn decide_alcqib(c: &Concept, cfg: &Config) -> Result<Verdict, EngineError> {
    require(&[c], "ALCQIb with safe role expressions", is_alcqib)?;
    let root = counting_form(c);
    let t = ConceptTable::build(std::slice::from_ref(&root), None, None);
    let names: BTreeSet<String> = t
        .roles()
        .iter()
        .flat_map(|e: &RoleExpr| e.atoms())
        .map(|r| r.base)
        .collect();
    if 2 * names.len() > MAX_UNIVERSE {
        return Ok(Verdict::unknown("unsupported"));
    }
    let mut e = Alcqib::new(&t, cfg);
    let res = e.node(&[t.id(&root).unwrap()], None, 0).map(|r| match r {
        Res::Sat(sub) => Some(sub),
        Res::Unsat | Res::Restart(_) => None,
    });
    Ok(conclude(&t, e.run, res, cfg, &signature_of(c, None), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Problem;
    use crate::oracle::check;
    use crate::syntax::parse_concept;

    fn run(s: &str, mode: Mode) -> Verdict {
        decide_alcqib(&parse_concept(s).unwrap(), &Config { mode, ..Default::default() }).unwrap()
    }

    #[test]
    fn restart_example() {
        let s = "(and (<= 0 R1 B) (>= 1 R1 (or A B)) (>= 1 R2 (<= 0 (inv R2) (>= 1 R1 A))))";
        let v = run(s, Mode::Trace);
        assert!(v.outcome.is_unsat());
        assert!(v.stats.restarts >= 1);
    }

    #[test]
    fn role_conjunction() {
        assert!(run("(and (>= 1 (rand R1 R2) A) (<= 0 R1 A))", Mode::Trace).outcome.is_unsat());
    }

    #[test]
    fn inverse_witness() {
        let s = "(>= 1 (inv R) A)";
        let v = run(s, Mode::Model);
        let m = v.outcome.model().unwrap();
        assert_eq!(m.domain_size, 2);
        assert_eq!(m.roles["R"].iter().copied().collect::<Vec<_>>(), vec![(1, 0)]);
        assert!(check(m, &Problem::concept_sat(parse_concept(s).unwrap())));
    }

    #[test]
    fn unsafe_rejected() {
        assert!(decide_alcqib(&parse_concept("(<= 0 (ror R (rnot R)) A)").unwrap(), &Config::default()).is_err());
    }
}
