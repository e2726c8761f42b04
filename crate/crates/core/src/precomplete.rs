//! Reduction of ABox consistency to concept satisfiability. Non-generating
//! rules are applied to the ABox, individuals may be identified, and each
//! resulting candidate gives one concept `C_x` per remaining individual.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;

use crate::engine::counting_form;
use crate::kb::{ABox, Assertion, AxiomKind, NotSimple, Problem, SimpleTBox};
use crate::oracle::{evaluate_concept, Interpretation};
use crate::roles::{models_roleset, Role, RoleExpr};
use crate::syntax::{complement_nnf, nnf, Concept, SignatureView};

/// How restrictions reach named neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    /// `∀` propagates along role assertions and `C_x` conjoins the label.
    Plain,
    /// Concepts are in counting form, individuals may be identified, and
    /// counts in `C_x` are reduced by the named neighbours they already cover.
    Counting,
}

/// A pre-completed ABox together with the concept of every individual.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub abox: ABox,
    /// Each individual of the input with the individual it is identified with.
    pub mapping: Vec<(String, String)>,
    pub concepts: Vec<(String, Concept)>,
}

type Pairs = BTreeMap<(usize, usize), BTreeSet<Role>>;

struct Partition {
    f: Vec<usize>,
    pairs: Pairs,
}

enum Step {
    Clash,
    Branch(Vec<Vec<BTreeSet<Concept>>>),
    Done,
}

/// Lazily enumerates the candidates of an ABox: identifications in order of
/// increasing individual count, each restricted growth string in lexicographic
/// order, and rule branches depth first.
pub struct Precompletions {
    style: Style,
    names: Vec<String>,
    concepts: Vec<(usize, Concept)>,
    related: Vec<(usize, usize, Role)>,
    distinct: Vec<(usize, usize)>,
    rgs: Option<(usize, Vec<usize>)>,
    current: Option<Partition>,
    stack: Vec<Vec<BTreeSet<Concept>>>,
}

/// Candidates for the ABox of `p`, with concepts unfolded against its TBox.
pub fn precomplete(p: &Problem, style: Style) -> Result<Precompletions, NotSimple> {
    let t = SimpleTBox::from_tbox(&p.tbox)?;
    let names = p.abox.individuals();
    let idx = |x: &str| names.iter().position(|n| n == x).unwrap();
    let mut concepts = Vec::new();
    let mut related = Vec::new();
    let mut distinct = Vec::new();
    for a in &p.abox.assertions {
        match a {
            Assertion::Instance(x, c) => {
                let c = t.unfold(c);
                let c = match style {
                    Style::Plain => nnf(&c),
                    Style::Counting => counting_form(&c),
                };
                concepts.push((idx(x), c));
            }
            Assertion::Related(x, y, r) => related.push((idx(x), idx(y), r.clone())),
            Assertion::Distinct(x, y) => distinct.push((idx(x), idx(y))),
        }
    }
    let n = names.len();
    let rgs = match style {
        Style::Plain => Some((n, (0..n).collect())),
        Style::Counting => Some((n.min(1), vec![0; n])),
    };
    Ok(Precompletions {
        style,
        names,
        concepts,
        related,
        distinct,
        rgs,
        current: None,
        stack: Vec::new(),
    })
}

/// The next restricted growth string after `a`, if any.
fn next_rgs(a: &[usize]) -> Option<Vec<usize>> {
    let mut a = a.to_vec();
    for i in (1..a.len()).rev() {
        let max = a[..i].iter().copied().max().unwrap();
        if a[i] <= max {
            a[i] += 1;
            for x in &mut a[i + 1..] {
                *x = 0;
            }
            return Some(a);
        }
    }
    None
}

fn block_count(a: &[usize]) -> usize {
    a.iter().copied().max().map_or(0, |m| m + 1)
}

impl Precompletions {
    /// Advances to the next admissible identification.
    fn next_partition(&mut self) -> Option<Vec<usize>> {
        let n = self.names.len();
        loop {
            let (k, cur) = self.rgs.take()?;
            self.rgs = match self.style {
                Style::Plain => None,
                Style::Counting => match next_rgs(&cur) {
                    Some(a) => Some((k, a)),
                    None if k < n => Some((k + 1, vec![0; n])),
                    None => None,
                },
            };
            if block_count(&cur) == k && !self.distinct.iter().any(|&(x, y)| cur[x] == cur[y]) {
                return Some(cur);
            }
        }
    }

    fn start(&mut self, f: Vec<usize>) {
        let k = block_count(&f);
        let mut pairs: Pairs = BTreeMap::new();
        for (x, y, r) in &self.related {
            pairs.entry((f[*x], f[*y])).or_default().insert(r.clone());
            pairs.entry((f[*y], f[*x])).or_default().insert(r.inv());
        }
        let mut labels = vec![BTreeSet::new(); k];
        for (x, c) in &self.concepts {
            labels[f[*x]].insert(c.clone());
        }
        self.current = Some(Partition { f, pairs });
        self.stack = vec![labels];
    }

    fn neighbours<'a>(&'a self, a: usize, w: &'a RoleExpr) -> impl Iterator<Item = usize> + 'a {
        self.current
            .as_ref()
            .unwrap()
            .pairs
            .iter()
            .filter(move |((x, _), rs)| *x == a && models_roleset(rs, w))
            .map(|((_, y), _)| *y)
    }

    fn covered(&self, labels: &[BTreeSet<Concept>], a: usize, w: &RoleExpr, d: &Concept) -> usize {
        self.neighbours(a, w).filter(|&y| labels[y].contains(d)).count()
    }

    fn step(&self, labels: &[BTreeSet<Concept>]) -> Step {
        for (a, l) in labels.iter().enumerate() {
            for c in l {
                let clash = match c {
                    Concept::Bottom => true,
                    Concept::Not(x) => l.contains(x),
                    Concept::AtMost(n, w, d) => BigUint::from(self.covered(labels, a, w, d)) > *n,
                    _ => false,
                };
                if clash {
                    return Step::Clash;
                }
            }
        }
        for (a, l) in labels.iter().enumerate() {
            for c in l {
                match c {
                    Concept::And(cs) if cs.iter().any(|d| !l.contains(d)) => {
                        let mut next = labels.to_vec();
                        next[a].extend(cs.iter().cloned());
                        return Step::Branch(vec![next]);
                    }
                    Concept::Or(cs) if !cs.iter().any(|d| l.contains(d)) => {
                        let out = cs
                            .iter()
                            .map(|d| {
                                let mut next = labels.to_vec();
                                next[a].insert(d.clone());
                                next
                            })
                            .collect();
                        return Step::Branch(out);
                    }
                    _ => {}
                }
            }
        }
        for (a, l) in labels.iter().enumerate() {
            for c in l {
                match (self.style, c) {
                    (Style::Plain, Concept::All(w, d)) => {
                        if let Some(y) = self.neighbours(a, w).find(|&y| !labels[y].contains(d)) {
                            let mut next = labels.to_vec();
                            next[y].insert((**d).clone());
                            return Step::Branch(vec![next]);
                        }
                    }
                    (Style::Counting, Concept::AtLeast(_, w, d) | Concept::AtMost(_, w, d)) => {
                        let nd = complement_nnf(d);
                        let open = self
                            .neighbours(a, w)
                            .find(|&y| !labels[y].contains(d) && !labels[y].contains(&nd));
                        if let Some(y) = open {
                            let out = [(**d).clone(), nd]
                                .into_iter()
                                .map(|e| {
                                    let mut next = labels.to_vec();
                                    next[y].insert(e);
                                    next
                                })
                                .collect();
                            return Step::Branch(out);
                        }
                    }
                    _ => {}
                }
            }
        }
        Step::Done
    }

    fn concept_of(&self, labels: &[BTreeSet<Concept>], a: usize) -> Concept {
        match self.style {
            Style::Plain => Concept::and(labels[a].iter().cloned().collect()),
            Style::Counting => {
                let mut parts = Vec::new();
                for c in &labels[a] {
                    match c {
                        Concept::Name(_) => parts.push(c.clone()),
                        Concept::Not(x) if matches!(**x, Concept::Name(_)) => parts.push(c.clone()),
                        Concept::AtLeast(n, w, d) => {
                            let m = BigUint::from(self.covered(labels, a, w, d));
                            if *n > m {
                                parts.push(Concept::at_least(n - m, w.clone(), (**d).clone()));
                            }
                        }
                        Concept::AtMost(n, w, d) => {
                            let m = BigUint::from(self.covered(labels, a, w, d));
                            parts.push(Concept::at_most(n - m, w.clone(), (**d).clone()));
                        }
                        _ => {}
                    }
                }
                Concept::and(parts)
            }
        }
    }

    fn candidate(&self, labels: &[BTreeSet<Concept>]) -> Candidate {
        let part = self.current.as_ref().unwrap();
        let mut reps: Vec<String> = Vec::new();
        for (x, &b) in part.f.iter().enumerate() {
            if b == reps.len() {
                reps.push(self.names[x].clone());
            }
        }
        let mut abox = ABox::default();
        for (a, l) in labels.iter().enumerate() {
            for c in l {
                abox.assertions.push(Assertion::Instance(reps[a].clone(), c.clone()));
            }
        }
        for ((a, b), rs) in &part.pairs {
            for r in rs.iter().filter(|r| !r.inverted) {
                abox.assertions.push(Assertion::Related(reps[*a].clone(), reps[*b].clone(), r.clone()));
            }
        }
        for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                abox.assertions.push(Assertion::Distinct(reps[a].clone(), reps[b].clone()));
            }
        }
        Candidate {
            abox,
            mapping: part
                .f
                .iter()
                .enumerate()
                .map(|(x, &b)| (self.names[x].clone(), reps[b].clone()))
                .collect(),
            concepts: (0..reps.len()).map(|a| (reps[a].clone(), self.concept_of(labels, a))).collect(),
        }
    }
}

impl Iterator for Precompletions {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        loop {
            match self.stack.pop() {
                Some(labels) => match self.step(&labels) {
                    Step::Clash => {}
                    Step::Branch(next) => self.stack.extend(next.into_iter().rev()),
                    Step::Done => return Some(self.candidate(&labels)),
                },
                None => {
                    let f = self.next_partition()?;
                    self.start(f);
                }
            }
        }
    }
}

/// Joins models of the `C_x` of a candidate, each rooted at its first element,
/// into one interpretation of the ABox. Names defined by equality in `t` are
/// recomputed afterwards.
pub fn assemble(
    cand: &Candidate,
    models: &[Interpretation],
    t: &SimpleTBox,
    sig: &SignatureView,
) -> Interpretation {
    let mut out = Interpretation::default();
    let mut root = BTreeMap::new();
    for ((x, _), m) in cand.concepts.iter().zip(models) {
        let off = out.domain_size;
        root.insert(x.clone(), off);
        out.domain_size += m.domain_size;
        for (a, ext) in &m.concepts {
            out.concepts.entry(a.clone()).or_default().extend(ext.iter().map(|e| e + off));
        }
        for (r, ext) in &m.roles {
            out.roles.entry(r.clone()).or_default().extend(ext.iter().map(|(a, b)| (a + off, b + off)));
        }
    }
    for a in &cand.abox.assertions {
        if let Assertion::Related(x, y, r) = a {
            out.roles.entry(r.base.clone()).or_default().insert((root[x], root[y]));
        }
    }
    for (x, rep) in &cand.mapping {
        out.individuals.insert(x.clone(), root[rep]);
    }
    out.cover(sig);
    for n in &t.order {
        if let Some((AxiomKind::Equiv, d)) = t.get(n) {
            if let Ok(ext) = evaluate_concept(&out, d) {
                out.concepts.insert(n.clone(), ext);
            }
        }
    }
    out
}
