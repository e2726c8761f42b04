//! ALCQ satisfiability with the standard counting rules: the `≥`-rule creates
//! `n` pairwise distinct successors at once, the `≤`-rule merges successors not
//! known to be distinct, and the choose-rule decides every qualifier at every
//! successor. Successor sets are settled per node before recursing, so this
//! engine is exponential in the values of counts. It serves as a cross-check.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::alcq_optimal::is_alcq;
use super::{conclude, signature_of, Kids, Sub};
use crate::engine::{
    counting_form, counting_tbox, require, Abort, Config, ConceptTable, EngineError, Id, Label,
    Mode, Run, Shape, Verdict,
};
use crate::kb::SimpleTBox;
use crate::syntax::Concept;

#[derive(Clone)]
struct Local {
    succ: Vec<Option<(usize, Label)>>,
    neq: BTreeSet<(usize, usize)>,
}

impl Local {
    fn distinct(&self, a: usize, b: usize) -> bool {
        self.neq.contains(&(a.min(b), a.max(b)))
    }

    fn with(&self, role: usize, q: Id) -> Vec<usize> {
        self.succ
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Some((r, l)) if *r == role && l.contains(q) => Some(i),
                _ => None,
            })
            .collect()
    }

    /// Whether `k` of `cands` are pairwise distinct.
    fn clique(&self, cands: &[usize], k: usize) -> bool {
        fn go(me: &Local, cands: &[usize], k: usize, picked: &mut Vec<usize>) -> bool {
            if picked.len() == k {
                return true;
            }
            for (i, &c) in cands.iter().enumerate() {
                if picked.iter().all(|&p| me.distinct(p, c)) {
                    picked.push(c);
                    if go(me, &cands[i + 1..], k, picked) {
                        return true;
                    }
                    picked.pop();
                }
            }
            false
        }
        k <= cands.len() && go(self, cands, k, &mut Vec::new())
    }
}

fn small(n: &BigUint) -> usize {
    n.to_usize().unwrap_or(usize::MAX)
}

struct Standard<'a> {
    t: &'a ConceptTable,
    run: Run,
}

impl Standard<'_> {
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
            let local = Local {
                succ: Vec::new(),
                neq: BTreeSet::new(),
            };
            if let Some(kids) = self.local(&s, local, depth)? {
                if self.run.mode == Mode::Trace {
                    self.run.nodes_dropped(1);
                }
                return Ok(Some(Sub { label: s, kids }));
            }
        }
        self.run.nodes_dropped(1);
        Ok(None)
    }

    fn local(
        &mut self,
        s: &Label,
        mut st: Local,
        depth: usize,
    ) -> Result<Option<Kids>, Abort> {
        let mut ge = Vec::new();
        let mut le = Vec::new();
        for i in s.ones() {
            match self.t.shape(i) {
                Shape::AtLeast(n, r, d) => ge.push((small(n), *r, *d)),
                Shape::AtMost(n, r, d) => le.push((small(n), *r, *d)),
                _ => {}
            }
        }
        loop {
            for &(m, r, e) in &le {
                let ys = st.with(r, e);
                if ys.len() > m && st.clique(&ys, m + 1) {
                    self.run.rule("clash")?;
                    return Ok(None);
                }
            }
            for &(_, r, e) in ge.iter().chain(&le) {
                let open = st.succ.iter().position(|x| {
                    matches!(x, Some((r2, l)) if *r2 == r && !l.contains(e) && !l.contains(self.t.comp(e)))
                });
                if let Some(y) = open {
                    for pick in [e, self.t.comp(e)] {
                        self.run.rule("choose")?;
                        let mut st2 = st.clone();
                        let l = &mut st2.succ[y].as_mut().unwrap().1;
                        if !self.t.add(l, pick, &mut self.run)? {
                            continue;
                        }
                        if let Some(k) = self.local(s, st2, depth)? {
                            return Ok(Some(k));
                        }
                    }
                    return Ok(None);
                }
            }
            for &(m, r, e) in &le {
                let ys = st.with(r, e);
                if ys.len() <= m {
                    continue;
                }
                let mut pairs = Vec::new();
                for &y in ys.iter().rev() {
                    for &z in &ys {
                        if z < y && !st.distinct(y, z) {
                            pairs.push((y, z));
                        }
                    }
                }
                for (y, z) in pairs {
                    self.run.rule("le")?;
                    let mut st2 = st.clone();
                    let (_, ly) = st2.succ[y].take().unwrap();
                    let lz = &mut st2.succ[z].as_mut().unwrap().1;
                    let ids: Vec<Id> = ly.ones().collect();
                    if !self.t.add_all(lz, &ids, &mut self.run)? {
                        continue;
                    }
                    let moved: Vec<(usize, usize)> = st2
                        .neq
                        .iter()
                        .copied()
                        .filter(|&(a, b)| a == y || b == y)
                        .collect();
                    for (a, b) in moved {
                        st2.neq.remove(&(a, b));
                        let u = if a == y { b } else { a };
                        st2.neq.insert((u.min(z), u.max(z)));
                    }
                    if let Some(k) = self.local(s, st2, depth)? {
                        return Ok(Some(k));
                    }
                }
                return Ok(None);
            }
            let mut fired = false;
            for &(n, r, d) in &ge {
                if n == 0 || st.clique(&st.with(r, d), n) {
                    continue;
                }
                self.run.rule("ge")?;
                let first = st.succ.len();
                for _ in 0..n {
                    self.run.tick()?;
                    let mut l = self.t.empty_label();
                    self.t.add(&mut l, d, &mut self.run)?;
                    st.succ.push(Some((r, l)));
                }
                for a in first..first + n {
                    for b in a + 1..first + n {
                        st.neq.insert((a, b));
                    }
                }
                fired = true;
                break;
            }
            if !fired {
                break;
            }
        }
        let live: Vec<(usize, Label)> = st.succ.into_iter().flatten().collect();
        self.run.out_degree(live.len());
        let mut kids = Vec::new();
        for (r, l) in live {
            let init: Vec<Id> = l.ones().collect();
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

pub fn decide_alcq_standard(
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
    let mut e = Standard {
        t: &t,
        run: Run::new(cfg),
    };
    let res = e.node(&[t.id(&root).unwrap()], 0);
    Ok(conclude(&t, e.run, res, cfg, &signature_of(c, tbox), ct.as_ref()))
}
