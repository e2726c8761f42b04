//! ALCQ satisfiability with binary counters: successors are generated one at a
//! time, each with every same-role qualifier decided, and only counters survive
//! once a successor has been checked.

use std::collections::HashMap;

use num_bigint::BigUint;

use super::{conclude, signature_of, Kids, Sub};
use crate::engine::{
    counting_form, counting_tbox, require, Abort, Config, ConceptTable, EngineError, Id, Label,
    Mode, Run, Shape, Verdict,
};
use crate::kb::SimpleTBox;
use crate::roles::Role;
use crate::syntax::Concept;

type Counters = HashMap<(usize, Id), BigUint>;

struct Restrictions {
    at_least: Vec<(BigUint, usize, Id)>,
    at_most: Vec<(BigUint, usize, Id)>,
}

impl Restrictions {
    fn of(t: &ConceptTable, s: &Label) -> Self {
        let mut r = Restrictions {
            at_least: Vec::new(),
            at_most: Vec::new(),
        };
        for i in s.ones() {
            match t.shape(i) {
                Shape::AtLeast(n, ro, d) => r.at_least.push((n.clone(), *ro, *d)),
                Shape::AtMost(n, ro, d) => r.at_most.push((n.clone(), *ro, *d)),
                _ => {}
            }
        }
        r
    }

    /// Qualifier pairs `(E, ~E)` of restrictions on `role`, at-least ones first.
    fn pairs(&self, t: &ConceptTable, role: usize) -> Vec<(Id, Id)> {
        let mut out: Vec<(Id, Id)> = Vec::new();
        for (_, r, e) in self.at_least.iter().chain(&self.at_most) {
            if *r == role && !out.iter().any(|&(a, b)| a == *e || b == *e) {
                out.push((*e, t.comp(*e)));
            }
        }
        out
    }
}

fn get(c: &Counters, k: (usize, Id)) -> BigUint {
    c.get(&k).cloned().unwrap_or_default()
}

struct Frame {
    counters: Counters,
    kids: usize,
    made: usize,
    req: usize,
    next: usize,
}

struct Optimal<'a> {
    t: &'a ConceptTable,
    run: Run,
}

impl Optimal<'_> {
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
            if let Some(kids) = self.generate(&s, depth)? {
                if self.run.mode == Mode::Trace {
                    self.run.nodes_dropped(1);
                }
                return Ok(Some(Sub { label: s, kids }));
            }
        }
        self.run.nodes_dropped(1);
        Ok(None)
    }

    fn le_clash(&self, rs: &Restrictions, c: &Counters) -> bool {
        rs.at_most.iter().any(|(m, r, e)| get(c, (*r, *e)) > *m)
    }

    fn generate(&mut self, s: &Label, depth: usize) -> Result<Option<Kids>, Abort> {
        let rs = Restrictions::of(self.t, s);
        let mut counters = Counters::new();
        if self.le_clash(&rs, &counters) {
            self.run.rule("clash")?;
            return Ok(None);
        }
        let pairs: HashMap<usize, Vec<(Id, Id)>> = rs
            .at_least
            .iter()
            .map(|(_, r, _)| (*r, rs.pairs(self.t, *r)))
            .collect();
        let mut frames: Vec<Frame> = Vec::new();
        let mut kids: Vec<(Vec<Role>, Sub)> = Vec::new();
        let mut made = 0usize;
        let mut resume: Option<(usize, usize)> = None;
        loop {
            let (req, start) = match resume.take() {
                Some(x) => x,
                None => match rs
                    .at_least
                    .iter()
                    .position(|(n, r, d)| get(&counters, (*r, *d)) < *n)
                {
                    Some(q) => (q, 0),
                    None => {
                        self.run.out_degree(made);
                        return Ok(Some(kids));
                    }
                },
            };
            let (_, r, d) = rs.at_least[req].clone();
            let free: Vec<(Id, Id)> = pairs[&r]
                .iter()
                .copied()
                .filter(|&(a, b)| a != d && b != d)
                .collect();
            let total = 1usize << free.len();
            let mut found = None;
            for k in start..total {
                self.run.rule("ge")?;
                let mut chosen = vec![d];
                for (j, &(pos, neg)) in free.iter().enumerate() {
                    chosen.push(if k >> (free.len() - 1 - j) & 1 == 0 { pos } else { neg });
                }
                if !free.is_empty() {
                    self.run.rule("choose")?;
                }
                let mut next = counters.clone();
                for &x in &chosen {
                    *next.entry((r, x)).or_default() += 1u32;
                }
                if self.le_clash(&rs, &next) {
                    self.run.rule("clash")?;
                    continue;
                }
                if let Some(sub) = self.node(&chosen, depth + 1)? {
                    found = Some((k, next, sub));
                    break;
                }
            }
            match found {
                Some((k, next, sub)) => {
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
                        kids.push((vec![self.t.atom(r).clone()], sub));
                    }
                }
                None => {
                    let Some(f) = frames.pop() else {
                        let kept: usize = kids.iter().map(|(_, k)| k.size()).sum();
                        self.run.nodes_dropped(kept);
                        return Ok(None);
                    };
                    let dropped: usize = kids[f.kids..].iter().map(|(_, k)| k.size()).sum();
                    self.run.nodes_dropped(dropped);
                    kids.truncate(f.kids);
                    counters = f.counters;
                    made = f.made;
                    resume = Some((f.req, f.next));
                }
            }
        }
    }
}

pub(crate) fn is_alcq(c: &Concept) -> bool {
    match c {
        Concept::Nominal(_) => false,
        _ => c.role_expr().is_none_or(|r| r.as_role().is_some_and(|r| !r.inverted)),
    }
}

pub fn decide_alcq_optimal(
    c: &Concept,
    tbox: Option<&SimpleTBox>,
    cfg: &Config,
) -> Result<Verdict, EngineError> {
    let mut parts = vec![c];
    if let Some(t) = tbox {
        parts.extend(t.defs.values().map(|(_, d)| d));
    }
    require(&parts, "ALCQ", is_alcq)?;
    let root = counting_form(c);
    let ct = tbox.map(counting_tbox);
    let t = ConceptTable::build(std::slice::from_ref(&root), ct.as_ref(), None);
    let mut e = Optimal {
        t: &t,
        run: Run::new(cfg),
    };
    let res = e.node(&[t.id(&root).unwrap()], 0);
    Ok(conclude(&t, e.run, res, cfg, &signature_of(c, tbox), ct.as_ref()))
}
