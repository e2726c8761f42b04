//! Finite-model semantics: evaluation over explicit interpretations, problem
//! checking and exhaustive bounded model search.
//!
//! `find_model` grounds the problem into propositional clauses over a fixed
//! domain and asks a SAT solver, which is complete for that domain size. Every
//! model it returns is decoded and re-checked by direct evaluation.
//! `find_model_enumerate` enumerates extensions as bit patterns and is only
//! usable on tiny signatures; tests use it to cross-check the grounding.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use varisat::{CnfFormula, ExtendFormula, Lit, Solver};

use crate::kb::{Assertion, CardDir, Problem, Query};
use crate::roles::{is_safe, RoleExpr};
use crate::syntax::{Concept, SignatureView};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub domain_size: usize,
    pub concepts: BTreeMap<String, BTreeSet<usize>>,
    pub roles: BTreeMap<String, BTreeSet<(usize, usize)>>,
    pub individuals: BTreeMap<String, usize>,
}

impl Interpretation {
    pub fn new(domain_size: usize) -> Self {
        Interpretation {
            domain_size,
            ..Default::default()
        }
    }

    /// Adds empty extensions for every symbol of `sig` not yet interpreted.
    pub fn cover(&mut self, sig: &SignatureView) {
        for a in &sig.concept_names {
            self.concepts.entry(a.clone()).or_default();
        }
        for r in &sig.role_names {
            self.roles.entry(r.clone()).or_default();
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain={}", self.domain_size)?;
        for (a, ext) in &self.concepts {
            let xs: Vec<String> = ext.iter().map(|e| e.to_string()).collect();
            writeln!(f, "concept {a} = {{{}}}", xs.join(","))?;
        }
        for (r, ext) in &self.roles {
            let xs: Vec<String> = ext.iter().map(|(a, b)| format!("({a},{b})")).collect();
            writeln!(f, "role {r} = {{{}}}", xs.join(","))?;
        }
        for (o, e) in &self.individuals {
            writeln!(f, "individual {o} = {e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("signature too large for exhaustive search: {0}")]
    SignatureTooLarge(String),
    #[error("grounded model failed the direct check")]
    GroundingMismatch,
}

struct Graph {
    n: usize,
    pairs: HashMap<String, HashSet<(usize, usize)>>,
    out: HashMap<String, Vec<Vec<usize>>>,
    inn: HashMap<String, Vec<Vec<usize>>>,
}

impl Graph {
    fn new(i: &Interpretation) -> Graph {
        let n = i.domain_size;
        let mut g = Graph {
            n,
            pairs: HashMap::new(),
            out: HashMap::new(),
            inn: HashMap::new(),
        };
        for (r, ext) in &i.roles {
            let mut out = vec![Vec::new(); n];
            let mut inn = vec![Vec::new(); n];
            for &(a, b) in ext {
                if a < n && b < n {
                    out[a].push(b);
                    inn[b].push(a);
                }
            }
            g.pairs.insert(r.clone(), ext.iter().copied().collect());
            g.out.insert(r.clone(), out);
            g.inn.insert(r.clone(), inn);
        }
        g
    }

    fn holds(&self, e: &RoleExpr, a: usize, b: usize, strict: bool) -> Result<bool, OracleError> {
        Ok(match e {
            RoleExpr::Atom(r) => {
                let Some(p) = self.pairs.get(&r.base) else {
                    return if strict {
                        Err(OracleError::UnknownSymbol(r.base.clone()))
                    } else {
                        Ok(false)
                    };
                };
                if r.inverted {
                    p.contains(&(b, a))
                } else {
                    p.contains(&(a, b))
                }
            }
            RoleExpr::Not(x) => !self.holds(x, a, b, strict)?,
            RoleExpr::And(xs) => {
                for x in xs {
                    if !self.holds(x, a, b, strict)? {
                        return Ok(false);
                    }
                }
                true
            }
            RoleExpr::Or(xs) => {
                for x in xs {
                    if self.holds(x, a, b, strict)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    /// Elements `b` that may satisfy `e(a, b)`.
    fn candidates(&self, e: &RoleExpr, a: usize) -> Vec<usize> {
        if !is_safe(e) {
            return (0..self.n).collect();
        }
        let mut out = Vec::new();
        for r in e.atoms() {
            let adj = if r.inverted { &self.inn } else { &self.out };
            if let Some(v) = adj.get(&r.base) {
                out.extend_from_slice(&v[a]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn eval(
    i: &Interpretation,
    g: &Graph,
    c: &Concept,
    strict: bool,
) -> Result<Vec<bool>, OracleError> {
    let n = i.domain_size;
    Ok(match c {
        Concept::Top => vec![true; n],
        Concept::Bottom => vec![false; n],
        Concept::Name(a) => {
            let mut v = vec![false; n];
            match i.concepts.get(a) {
                Some(ext) => ext.iter().filter(|&&e| e < n).for_each(|&e| v[e] = true),
                None if strict => return Err(OracleError::UnknownSymbol(a.clone())),
                None => {}
            }
            v
        }
        Concept::Nominal(o) => {
            let e = *i
                .individuals
                .get(o)
                .ok_or_else(|| OracleError::UnknownSymbol(o.clone()))?;
            (0..n).map(|x| x == e).collect()
        }
        Concept::Not(d) => eval(i, g, d, strict)?.into_iter().map(|b| !b).collect(),
        Concept::And(cs) | Concept::Or(cs) => {
            let conj = matches!(c, Concept::And(_));
            let mut acc = vec![conj; n];
            for d in cs {
                let v = eval(i, g, d, strict)?;
                for (x, y) in acc.iter_mut().zip(v) {
                    *x = if conj { *x && y } else { *x || y };
                }
            }
            acc
        }
        Concept::All(r, d) | Concept::Some(r, d) => {
            let inner = eval(i, g, d, strict)?;
            let all = matches!(c, Concept::All(..));
            let mut out = vec![all; n];
            for (a, slot) in out.iter_mut().enumerate() {
                for b in g.candidates(r, a) {
                    if g.holds(r, a, b, strict)? && inner[b] != all {
                        *slot = !all;
                        break;
                    }
                }
            }
            out
        }
        Concept::AtLeast(k, r, d) | Concept::AtMost(k, r, d) => {
            let inner = eval(i, g, d, strict)?;
            let at_least = matches!(c, Concept::AtLeast(..));
            let mut out = vec![false; n];
            for (a, slot) in out.iter_mut().enumerate() {
                let mut count = 0usize;
                for b in g.candidates(r, a) {
                    if inner[b] && g.holds(r, a, b, strict)? {
                        count += 1;
                    }
                }
                let ge = BigUint::from(count) >= *k;
                let le = BigUint::from(count) <= *k;
                *slot = if at_least { ge } else { le };
            }
            out
        }
    })
}

fn to_set(v: Vec<bool>) -> BTreeSet<usize> {
    v.into_iter()
        .enumerate()
        .filter_map(|(e, b)| b.then_some(e))
        .collect()
}

/// Extension of `c`; every symbol in `c` must be interpreted.
pub fn evaluate_concept(i: &Interpretation, c: &Concept) -> Result<BTreeSet<usize>, OracleError> {
    Ok(to_set(eval(i, &Graph::new(i), c, true)?))
}

fn role_pairs(i: &Interpretation, r: &crate::roles::Role) -> BTreeSet<(usize, usize)> {
    let ext = i.roles.get(&r.base).cloned().unwrap_or_default();
    if r.inverted {
        ext.into_iter().map(|(a, b)| (b, a)).collect()
    } else {
        ext
    }
}

/// True iff `i` is a model of every component of `p` and satisfies the sat
/// test the query reduces to: the query concept for `sat`, a counterexample
/// `C ⊓ ¬D` for `subsumes`, and `x : ¬C` for `instance`. Symbols without an
/// extension are read as empty.
pub fn check(i: &Interpretation, p: &Problem) -> bool {
    check_inner(i, p).unwrap_or(false)
}

fn check_inner(i: &Interpretation, p: &Problem) -> Result<bool, OracleError> {
    let g = Graph::new(i);
    let ev = |c: &Concept| eval(i, &g, c, false);
    if i.individuals.values().any(|&e| e >= i.domain_size) {
        return Ok(false);
    }
    for (l, r) in p.tbox.inclusions() {
        let (a, b) = (ev(&l)?, ev(&r)?);
        if a.iter().zip(&b).any(|(x, y)| *x && !*y) {
            return Ok(false);
        }
    }
    let ind = |x: &String| {
        i.individuals
            .get(x)
            .copied()
            .ok_or_else(|| OracleError::UnknownSymbol(x.clone()))
    };
    for a in &p.abox.assertions {
        match a {
            Assertion::Instance(x, c) => {
                if !ev(c)?[ind(x)?] {
                    return Ok(false);
                }
            }
            Assertion::Related(x, y, r) => {
                if !role_pairs(i, r).contains(&(ind(x)?, ind(y)?)) {
                    return Ok(false);
                }
            }
            Assertion::Distinct(x, y) => {
                if ind(x)? == ind(y)? {
                    return Ok(false);
                }
            }
        }
    }
    for cr in &p.cbox.restrictions {
        let count = BigUint::from(ev(&cr.concept)?.iter().filter(|b| **b).count());
        let ok = match cr.dir {
            CardDir::AtLeast => count >= cr.count,
            CardDir::AtMost => count <= cr.count,
        };
        if !ok {
            return Ok(false);
        }
    }
    for (r, s) in &p.rbox.inclusions {
        let sp = role_pairs(i, s);
        if !role_pairs(i, r).iter().all(|x| sp.contains(x)) {
            return Ok(false);
        }
    }
    for t in &p.rbox.transitive {
        let ext = i.roles.get(t).cloned().unwrap_or_default();
        for &(a, b) in &ext {
            for &(b2, c) in &ext {
                if b == b2 && !ext.contains(&(a, c)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(match &p.query {
        Query::Sat(c) => ev(c)?.contains(&true),
        Query::Subsumes(c, d) => {
            let (a, b) = (ev(c)?, ev(d)?);
            a.iter().zip(&b).any(|(x, y)| *x && !*y)
        }
        Query::Instance(x, c) => !ev(c)?[ind(x)?],
        Query::Consistency | Query::Classify => true,
    })
}

/// Signature bounds for the model search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub concept_names: usize,
    pub roles: usize,
    pub individuals: usize,
}

impl OracleLimits {
    /// Bounds for bit-pattern enumeration.
    pub const EXHAUSTIVE: OracleLimits = OracleLimits {
        concept_names: 4,
        roles: 3,
        individuals: 4,
    };
    /// Bounds for the grounded search, which also has to accept the fresh
    /// names introduced by reductions.
    pub const GROUNDED: OracleLimits = OracleLimits {
        concept_names: 40,
        roles: 8,
        individuals: 12,
    };

    fn admit(&self, sig: &SignatureView) -> Result<(), OracleError> {
        let msg = if sig.concept_names.len() > self.concept_names {
            format!("{} concept names (limit {})", sig.concept_names.len(), self.concept_names)
        } else if sig.role_names.len() > self.roles {
            format!("{} roles (limit {})", sig.role_names.len(), self.roles)
        } else if sig.individuals.len() > self.individuals {
            format!("{} individuals (limit {})", sig.individuals.len(), self.individuals)
        } else {
            return Ok(());
        };
        Err(OracleError::SignatureTooLarge(msg))
    }
}

struct Grounder {
    n: usize,
    cnf: CnfFormula,
    truth: Lit,
    names: HashMap<(String, usize), Lit>,
    roles: HashMap<(String, usize, usize), Lit>,
    inds: HashMap<(String, usize), Lit>,
    concept_memo: HashMap<(Concept, usize), Lit>,
    role_memo: HashMap<(RoleExpr, usize, usize), Lit>,
}

impl Grounder {
    fn new(n: usize) -> Self {
        let mut cnf = CnfFormula::new();
        let truth = cnf.new_var().positive();
        cnf.add_clause(&[truth]);
        Grounder {
            n,
            cnf,
            truth,
            names: HashMap::new(),
            roles: HashMap::new(),
            inds: HashMap::new(),
            concept_memo: HashMap::new(),
            role_memo: HashMap::new(),
        }
    }

    fn fresh(&mut self) -> Lit {
        self.cnf.new_var().positive()
    }

    fn and(&mut self, lits: Vec<Lit>) -> Lit {
        if lits.contains(&!self.truth) {
            return !self.truth;
        }
        let lits: Vec<Lit> = lits.into_iter().filter(|&l| l != self.truth).collect();
        match lits.len() {
            0 => return self.truth,
            1 => return lits[0],
            _ => {}
        }
        let v = self.fresh();
        let mut big = vec![v];
        for &l in &lits {
            self.cnf.add_clause(&[!v, l]);
            big.push(!l);
        }
        self.cnf.add_clause(&big);
        v
    }

    fn or(&mut self, lits: Vec<Lit>) -> Lit {
        let neg = lits.into_iter().map(|l| !l).collect();
        !self.and(neg)
    }

    fn at_least(&mut self, k: usize, lits: &[Lit]) -> Lit {
        let mut memo: HashMap<(usize, usize), Lit> = HashMap::new();
        self.at_least_from(k, lits, 0, &mut memo)
    }

    fn at_least_from(
        &mut self,
        k: usize,
        lits: &[Lit],
        i: usize,
        memo: &mut HashMap<(usize, usize), Lit>,
    ) -> Lit {
        if k == 0 {
            return self.truth;
        }
        if lits.len() - i < k {
            return !self.truth;
        }
        if let Some(&l) = memo.get(&(k, i)) {
            return l;
        }
        let with = self.at_least_from(k - 1, lits, i + 1, memo);
        let take = self.and(vec![lits[i], with]);
        let skip = self.at_least_from(k, lits, i + 1, memo);
        let l = self.or(vec![take, skip]);
        memo.insert((k, i), l);
        l
    }

    fn name(&mut self, a: &str, e: usize) -> Lit {
        if let Some(&l) = self.names.get(&(a.to_string(), e)) {
            return l;
        }
        let l = self.fresh();
        self.names.insert((a.to_string(), e), l);
        l
    }

    fn role_atom(&mut self, r: &str, a: usize, b: usize) -> Lit {
        if let Some(&l) = self.roles.get(&(r.to_string(), a, b)) {
            return l;
        }
        let l = self.fresh();
        self.roles.insert((r.to_string(), a, b), l);
        l
    }

    fn ind(&mut self, o: &str, e: usize) -> Lit {
        if let Some(&l) = self.inds.get(&(o.to_string(), e)) {
            return l;
        }
        let l = self.fresh();
        self.inds.insert((o.to_string(), e), l);
        l
    }

    fn role(&mut self, r: &RoleExpr, a: usize, b: usize) -> Lit {
        if let Some(&l) = self.role_memo.get(&(r.clone(), a, b)) {
            return l;
        }
        let l = match r {
            RoleExpr::Atom(x) if x.inverted => self.role_atom(&x.base, b, a),
            RoleExpr::Atom(x) => self.role_atom(&x.base, a, b),
            RoleExpr::Not(x) => !self.role(x, a, b),
            RoleExpr::And(xs) | RoleExpr::Or(xs) => {
                let ls = xs.iter().map(|x| self.role(x, a, b)).collect();
                if matches!(r, RoleExpr::And(_)) {
                    self.and(ls)
                } else {
                    self.or(ls)
                }
            }
        };
        self.role_memo.insert((r.clone(), a, b), l);
        l
    }

    fn count_lits(&mut self, r: &RoleExpr, d: &Concept, a: usize) -> Vec<Lit> {
        (0..self.n)
            .map(|b| {
                let rl = self.role(r, a, b);
                let dl = self.concept(d, b);
                self.and(vec![rl, dl])
            })
            .collect()
    }

    fn concept(&mut self, c: &Concept, e: usize) -> Lit {
        if let Some(&l) = self.concept_memo.get(&(c.clone(), e)) {
            return l;
        }
        let l = match c {
            Concept::Top => self.truth,
            Concept::Bottom => !self.truth,
            Concept::Name(a) => self.name(a, e),
            Concept::Nominal(o) => self.ind(o, e),
            Concept::Not(d) => !self.concept(d, e),
            Concept::And(cs) | Concept::Or(cs) => {
                let ls = cs.iter().map(|d| self.concept(d, e)).collect();
                if matches!(c, Concept::And(_)) {
                    self.and(ls)
                } else {
                    self.or(ls)
                }
            }
            Concept::Some(r, d) => {
                let ls = self.count_lits(r, d, e);
                self.or(ls)
            }
            Concept::All(r, d) => {
                let ls: Vec<Lit> = (0..self.n)
                    .map(|b| {
                        let rl = self.role(r, e, b);
                        let dl = self.concept(d, b);
                        self.or(vec![!rl, dl])
                    })
                    .collect();
                self.and(ls)
            }
            Concept::AtLeast(k, r, d) => {
                let ls = self.count_lits(r, d, e);
                match k.to_usize() {
                    Some(k) if k <= self.n => self.at_least(k, &ls),
                    _ => !self.truth,
                }
            }
            Concept::AtMost(k, r, d) => {
                let ls = self.count_lits(r, d, e);
                match k.to_usize() {
                    Some(k) if k < self.n => !self.at_least(k + 1, &ls),
                    _ => self.truth,
                }
            }
        };
        self.concept_memo.insert((c.clone(), e), l);
        l
    }

    fn everywhere(&mut self, c: &Concept) {
        for e in 0..self.n {
            let l = self.concept(c, e);
            self.cnf.add_clause(&[l]);
        }
    }

    fn count_clause(&mut self, dir: CardDir, k: &BigUint, c: &Concept) {
        let ls: Vec<Lit> = (0..self.n).map(|e| self.concept(c, e)).collect();
        let l = match (dir, k.to_usize()) {
            (CardDir::AtLeast, Some(k)) if k <= self.n => self.at_least(k, &ls),
            (CardDir::AtLeast, _) => !self.truth,
            (CardDir::AtMost, Some(k)) if k < self.n => !self.at_least(k + 1, &ls),
            (CardDir::AtMost, _) => self.truth,
        };
        self.cnf.add_clause(&[l]);
    }
}

fn ground(p: &Problem, sig: &SignatureView, n: usize) -> Grounder {
    let mut g = Grounder::new(n);
    for r in &sig.role_names {
        for a in 0..n {
            for b in 0..n {
                g.role_atom(r, a, b);
            }
        }
    }
    for a in &sig.concept_names {
        for e in 0..n {
            g.name(a, e);
        }
    }
    let inds: Vec<String> = sig.individuals.iter().cloned().collect();
    for o in &inds {
        let ls: Vec<Lit> = (0..n).map(|e| g.ind(o, e)).collect();
        g.cnf.add_clause(&ls);
        for x in 0..n {
            for y in x + 1..n {
                g.cnf.add_clause(&[!ls[x], !ls[y]]);
            }
        }
    }
    let first = p.abox.individuals().into_iter().next().or_else(|| inds.first().cloned());
    if let Some(o) = &first {
        let l = g.ind(o, 0);
        g.cnf.add_clause(&[l]);
    }
    for t in &p.rbox.transitive {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (x, y, z) = (g.role_atom(t, a, b), g.role_atom(t, b, c), g.role_atom(t, a, c));
                    g.cnf.add_clause(&[!x, !y, z]);
                }
            }
        }
    }
    for (r, s) in &p.rbox.inclusions {
        let (r, s) = (RoleExpr::Atom(r.clone()), RoleExpr::Atom(s.clone()));
        for a in 0..n {
            for b in 0..n {
                let (x, y) = (g.role(&r, a, b), g.role(&s, a, b));
                g.cnf.add_clause(&[!x, y]);
            }
        }
    }
    for (l, r) in p.tbox.inclusions() {
        g.everywhere(&Concept::or(vec![Concept::not(l), r]));
    }
    for a in &p.abox.assertions {
        match a {
            Assertion::Instance(x, c) => {
                for e in 0..n {
                    let (i, l) = (g.ind(x, e), g.concept(c, e));
                    g.cnf.add_clause(&[!i, l]);
                }
            }
            Assertion::Related(x, y, r) => {
                let r = RoleExpr::Atom(r.clone());
                for e in 0..n {
                    for f in 0..n {
                        let (i, j, l) = (g.ind(x, e), g.ind(y, f), g.role(&r, e, f));
                        g.cnf.add_clause(&[!i, !j, l]);
                    }
                }
            }
            Assertion::Distinct(x, y) => {
                for e in 0..n {
                    let (i, j) = (g.ind(x, e), g.ind(y, e));
                    g.cnf.add_clause(&[!i, !j]);
                }
            }
        }
    }
    for cr in &p.cbox.restrictions {
        g.count_clause(cr.dir, &cr.count, &cr.concept);
    }
    let somewhere = |g: &mut Grounder, c: &Concept| {
        if first.is_none() {
            let l = g.concept(c, 0);
            g.cnf.add_clause(&[l]);
        } else {
            g.count_clause(CardDir::AtLeast, &BigUint::from(1u32), c);
        }
    };
    match &p.query {
        Query::Sat(c) => somewhere(&mut g, c),
        Query::Subsumes(c, d) => {
            somewhere(&mut g, &Concept::And(vec![c.clone(), Concept::not(d.clone())]))
        }
        Query::Instance(x, c) => {
            for e in 0..n {
                let (i, l) = (g.ind(x, e), g.concept(c, e));
                g.cnf.add_clause(&[!i, !l]);
            }
        }
        Query::Consistency | Query::Classify => {}
    }
    g
}

fn decode(g: &Grounder, model: &[Lit], sig: &SignatureView) -> Interpretation {
    let truth: HashSet<Lit> = model.iter().copied().filter(|l| l.is_positive()).collect();
    let on = |l: &Lit| truth.contains(l);
    let mut i = Interpretation::new(g.n);
    i.cover(sig);
    for ((a, e), l) in &g.names {
        if on(l) {
            i.concepts.entry(a.clone()).or_default().insert(*e);
        }
    }
    for ((r, a, b), l) in &g.roles {
        if on(l) {
            i.roles.entry(r.clone()).or_default().insert((*a, *b));
        }
    }
    for ((o, e), l) in &g.inds {
        if on(l) {
            i.individuals.insert(o.clone(), *e);
        }
    }
    i
}

/// Smallest model of `p` with at most `max_size` elements, if any.
pub fn find_model(p: &Problem, max_size: usize) -> Result<Option<Interpretation>, OracleError> {
    find_model_with(p, max_size, OracleLimits::GROUNDED)
}

pub fn find_model_with(
    p: &Problem,
    max_size: usize,
    limits: OracleLimits,
) -> Result<Option<Interpretation>, OracleError> {
    let sig = p.signature();
    limits.admit(&sig)?;
    for n in 1..=max_size {
        let g = ground(p, &sig, n);
        let mut solver = Solver::new();
        solver.add_formula(&g.cnf);
        if solver.solve().expect("solver without proof output") {
            let model = solver.model().expect("model after sat");
            let i = decode(&g, &model, &sig);
            if !check(&i, p) {
                return Err(OracleError::GroundingMismatch);
            }
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Bit-pattern enumeration over the whole signature; tiny inputs only.
pub fn find_model_enumerate(
    p: &Problem,
    max_size: usize,
) -> Result<Option<Interpretation>, OracleError> {
    let sig = p.signature();
    OracleLimits::EXHAUSTIVE.admit(&sig)?;
    let names: Vec<&String> = sig.concept_names.iter().collect();
    let roles: Vec<&String> = sig.role_names.iter().collect();
    let inds: Vec<&String> = sig.individuals.iter().collect();
    for n in 1..=max_size {
        let bits = names.len() * n + roles.len() * n * n;
        if bits > 24 {
            return Err(OracleError::SignatureTooLarge(format!(
                "{bits} bits at domain size {n}"
            )));
        }
        let mut maps = vec![vec![]];
        for (k, _) in inds.iter().enumerate() {
            let lo = if k == 0 { 0 } else { n };
            maps = maps
                .into_iter()
                .flat_map(|m: Vec<usize>| {
                    let range: Vec<usize> = if lo == 0 { vec![0] } else { (0..n).collect() };
                    range.into_iter().map(move |e| {
                        let mut m2 = m.clone();
                        m2.push(e);
                        m2
                    })
                })
                .collect();
        }
        for map in &maps {
            for pattern in 0u64..(1u64 << bits) {
                let mut i = Interpretation::new(n);
                let mut bit = 0;
                for a in &names {
                    let ext = i.concepts.entry((*a).clone()).or_default();
                    for e in 0..n {
                        if pattern >> bit & 1 == 1 {
                            ext.insert(e);
                        }
                        bit += 1;
                    }
                }
                for r in &roles {
                    let ext = i.roles.entry((*r).clone()).or_default();
                    for a in 0..n {
                        for b in 0..n {
                            if pattern >> bit & 1 == 1 {
                                ext.insert((a, b));
                            }
                            bit += 1;
                        }
                    }
                }
                for (o, &e) in inds.iter().zip(map) {
                    i.individuals.insert((*o).clone(), e);
                }
                if check(&i, p) {
                    return Ok(Some(i));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_problem;
    use crate::syntax::{nnf, parse_concept};
    use proptest::prelude::*;

    fn c(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    fn interp(n: usize, concepts: &[(&str, &[usize])], roles: &[(&str, &[(usize, usize)])]) -> Interpretation {
        let mut i = Interpretation::new(n);
        for (a, ext) in concepts {
            i.concepts.insert(a.to_string(), ext.iter().copied().collect());
        }
        for (r, ext) in roles {
            i.roles.insert(r.to_string(), ext.iter().copied().collect());
        }
        i
    }

    #[test]
    fn evaluation_examples() {
        let i = interp(3, &[("A", &[1, 2])], &[("R", &[(0, 1), (0, 2)])]);
        assert_eq!(evaluate_concept(&i, &Concept::Top).unwrap(), BTreeSet::from([0, 1, 2]));
        assert_eq!(evaluate_concept(&i, &c("(>= 2 R A)")).unwrap(), BTreeSet::from([0]));
        assert_eq!(evaluate_concept(&i, &c("(some (inv R) (not A))")).unwrap(), BTreeSet::from([1, 2]));
        assert_eq!(evaluate_concept(&i, &c("(all (rnot R) A)")).unwrap(), BTreeSet::from([]));
        assert!(matches!(evaluate_concept(&i, &c("B")), Err(OracleError::UnknownSymbol(_))));
    }

    #[test]
    fn check_examples() {
        let i = interp(2, &[], &[]);
        assert!(check(&i, &Problem::default()));
        let p = parse_problem("(instance x A)").unwrap();
        let mut i = interp(1, &[("A", &[0])], &[]);
        i.individuals.insert("x".into(), 0);
        assert!(check(&i, &p));
        let p = parse_problem("(transitive R)").unwrap();
        assert!(!check(&interp(3, &[], &[("R", &[(0, 1), (1, 2)])]), &p));
    }

    #[test]
    fn model_search_examples() {
        let p = Problem::concept_sat(c("A"));
        assert_eq!(find_model(&p, 1).unwrap().unwrap().domain_size, 1);
        // The root may be one of its own successors, so three elements suffice.
        let p = Problem::concept_sat(c("(>= 3 R A)"));
        assert!(find_model(&p, 2).unwrap().is_none());
        assert_eq!(find_model(&p, 4).unwrap().unwrap().domain_size, 3);
        assert_eq!(find_model_enumerate(&p, 3).unwrap().unwrap().domain_size, 3);
        let p = Problem::concept_sat(c("(and (not A) (>= 3 R A))"));
        assert!(find_model(&p, 3).unwrap().is_none());
        assert_eq!(find_model(&p, 4).unwrap().unwrap().domain_size, 4);
    }

    #[test]
    fn counting_contradiction_has_no_model() {
        let p = Problem::concept_sat(c("(and (>= 3 R A) (<= 1 R B) (<= 1 R (not B)))"));
        assert!(find_model(&p, 4).unwrap().is_none());
    }

    #[test]
    fn infinite_axiom_has_no_finite_model() {
        let p = parse_problem(
            "(cardinality >= 1 (not A)) (cardinality <= 0 (not (and (some R top) (<= 1 (inv R) top) (all R A))))",
        )
        .unwrap();
        for n in 1..=4 {
            assert!(find_model(&p, n).unwrap().is_none());
        }
    }

    #[test]
    fn transitive_models_are_closed() {
        let p = parse_problem("(transitive R) (query sat (and (some R A) (all R (some R A))))").unwrap();
        let i = find_model(&p, 3).unwrap().unwrap();
        let r = &i.roles["R"];
        for &(a, b) in r {
            for &(b2, d) in r {
                if b == b2 {
                    assert!(r.contains(&(a, d)));
                }
            }
        }
    }

    #[test]
    fn guard_rejects_large_signatures() {
        let p = Problem::concept_sat(c("(and A B C D E)"));
        assert!(find_model_enumerate(&p, 1).is_err());
        assert!(find_model(&p, 1).unwrap().is_some());
    }

    fn arb_small() -> impl Strategy<Value = Concept> {
        let leaf = prop_oneof![
            Just(Concept::name("A")),
            Just(Concept::name("B")),
            Just(Concept::Top),
        ];
        let role = prop_oneof![
            Just(RoleExpr::atom("R")),
            Just(RoleExpr::Atom(crate::roles::Role::inverse_of("R"))),
        ];
        leaf.prop_recursive(3, 12, 3, move |inner| {
            prop_oneof![
                inner.clone().prop_map(Concept::not),
                prop::collection::vec(inner.clone(), 2..3).prop_map(Concept::And),
                prop::collection::vec(inner.clone(), 2..3).prop_map(Concept::Or),
                (role.clone(), inner.clone()).prop_map(|(r, c)| Concept::some(r, c)),
                (role.clone(), inner.clone()).prop_map(|(r, c)| Concept::all(r, c)),
                (0..3u32, role.clone(), inner.clone()).prop_map(|(n, r, c)| Concept::at_least(n, r, c)),
                (0..3u32, role.clone(), inner).prop_map(|(n, r, c)| Concept::at_most(n, r, c)),
            ]
        })
    }

    fn arb_interp() -> impl Strategy<Value = Interpretation> {
        (1..=3usize).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n * 3),
                prop::collection::vec(any::<bool>(), n * n * 2),
            )
                .prop_map(move |(cs, rs)| {
                    let mut i = Interpretation::new(n);
                    for (k, a) in ["A", "B", "C"].iter().enumerate() {
                        i.concepts.insert(a.to_string(), (0..n).filter(|e| cs[k * n + e]).collect());
                    }
                    for (k, r) in ["R", "S"].iter().enumerate() {
                        let mut ext = BTreeSet::new();
                        for a in 0..n {
                            for b in 0..n {
                                if rs[k * n * n + a * n + b] {
                                    ext.insert((a, b));
                                }
                            }
                        }
                        i.roles.insert(r.to_string(), ext);
                    }
                    i
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nnf_preserves_extension(c in arb_small(), i in arb_interp()) {
            prop_assert_eq!(evaluate_concept(&i, &c).unwrap(), evaluate_concept(&i, &nnf(&c)).unwrap());
        }

        #[test]
        fn complement_is_complementary(c in arb_small(), i in arb_interp()) {
            let n = nnf(&c);
            let a = evaluate_concept(&i, &n).unwrap();
            let b = evaluate_concept(&i, &crate::syntax::complement_nnf(&n)).unwrap();
            prop_assert!(a.is_disjoint(&b));
            prop_assert_eq!(a.len() + b.len(), i.domain_size);
        }

        #[test]
        fn grounded_search_agrees_with_enumeration(c in arb_small()) {
            let p = Problem::concept_sat(c);
            let a = find_model(&p, 2).unwrap().map(|i| i.domain_size);
            let b = find_model_enumerate(&p, 2).unwrap().map(|i| i.domain_size);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn bound_is_monotone(c in arb_small()) {
            let p = Problem::concept_sat(c);
            if find_model(&p, 2).unwrap().is_some() {
                prop_assert!(find_model(&p, 3).unwrap().is_some());
            }
        }
    }
}
