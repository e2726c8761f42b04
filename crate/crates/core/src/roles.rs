//! Roles, Boolean role expressions and role hierarchies.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::sexpr::{ParseError, SExpr};
use crate::syntax::Concept;

/// A role name, possibly inverted. `inv(inv(R))` is `R` by construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Role {
    pub base: String,
    pub inverted: bool,
}

impl Role {
    pub fn new(base: impl Into<String>) -> Self {
        Role {
            base: base.into(),
            inverted: false,
        }
    }

    pub fn inverse_of(base: impl Into<String>) -> Self {
        Role {
            base: base.into(),
            inverted: true,
        }
    }

    pub fn inv(&self) -> Role {
        Role {
            base: self.base.clone(),
            inverted: !self.inverted,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "(inv {})", self.base)
        } else {
            f.write_str(&self.base)
        }
    }
}

pub fn inv(r: &Role) -> Role {
    r.inv()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoleExpr {
    Atom(Role),
    Not(Box<RoleExpr>),
    And(Vec<RoleExpr>),
    Or(Vec<RoleExpr>),
}

impl RoleExpr {
    pub fn atom(name: &str) -> Self {
        RoleExpr::Atom(Role::new(name))
    }

    pub fn rnot(e: RoleExpr) -> Self {
        RoleExpr::Not(Box::new(e))
    }

    pub fn as_role(&self) -> Option<&Role> {
        match self {
            RoleExpr::Atom(r) => Some(r),
            _ => None,
        }
    }

    /// Every role atom, in order of first occurrence.
    pub fn atoms(&self) -> Vec<Role> {
        fn go(e: &RoleExpr, out: &mut Vec<Role>) {
            match e {
                RoleExpr::Atom(r) => {
                    if !out.contains(r) {
                        out.push(r.clone())
                    }
                }
                RoleExpr::Not(x) => go(x, out),
                RoleExpr::And(xs) | RoleExpr::Or(xs) => xs.iter().for_each(|x| go(x, out)),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn map_atoms(&self, f: &impl Fn(&Role) -> Role) -> RoleExpr {
        match self {
            RoleExpr::Atom(r) => RoleExpr::Atom(f(r)),
            RoleExpr::Not(x) => RoleExpr::Not(Box::new(x.map_atoms(f))),
            RoleExpr::And(xs) => RoleExpr::And(xs.iter().map(|x| x.map_atoms(f)).collect()),
            RoleExpr::Or(xs) => RoleExpr::Or(xs.iter().map(|x| x.map_atoms(f)).collect()),
        }
    }

    pub fn inverse(&self) -> RoleExpr {
        self.map_atoms(&|r| r.inv())
    }

    fn token_count(&self) -> usize {
        match self {
            RoleExpr::Atom(r) => {
                if r.inverted {
                    4
                } else {
                    1
                }
            }
            RoleExpr::Not(x) => 3 + x.token_count(),
            RoleExpr::And(xs) | RoleExpr::Or(xs) => {
                3 + xs.iter().map(|x| x.token_count()).sum::<usize>()
            }
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.token_count()
    }
}

impl fmt::Display for RoleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleExpr::Atom(r) => write!(f, "{r}"),
            RoleExpr::Not(x) => write!(f, "(rnot {x})"),
            RoleExpr::And(xs) | RoleExpr::Or(xs) => {
                f.write_str(if matches!(self, RoleExpr::And(_)) {
                    "(rand"
                } else {
                    "(ror"
                })?;
                for x in xs {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

const ROLE_KEYWORDS: &[&str] = &["inv", "rnot", "rand", "ror"];

pub(crate) fn check_name(s: &str, e: &SExpr) -> Result<(), ParseError> {
    let bad = s.is_empty()
        || s.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-')
        || crate::syntax::KEYWORDS.contains(&s)
        || ROLE_KEYWORDS.contains(&s);
    if bad {
        Err(ParseError::new(e.pos(), format!("'{s}' is not a valid name")))
    } else {
        Ok(())
    }
}

/// Parses `name` or `(inv name)`.
pub fn role_from_sexpr(e: &SExpr) -> Result<Role, ParseError> {
    match e {
        SExpr::Atom(s, _) => {
            check_name(s, e)?;
            Ok(Role::new(s.as_str()))
        }
        SExpr::List(items, p) => match items.as_slice() {
            [SExpr::Atom(k, _), n @ SExpr::Atom(s, _)] if k == "inv" => {
                check_name(s, n)?;
                Ok(Role::inverse_of(s.as_str()))
            }
            _ => Err(ParseError::new(*p, "expected a role name or (inv name)")),
        },
    }
}

pub fn role_expr_from_sexpr(e: &SExpr) -> Result<RoleExpr, ParseError> {
    match e {
        SExpr::Atom(..) => Ok(RoleExpr::Atom(role_from_sexpr(e)?)),
        SExpr::List(items, p) => {
            let head = items.first().and_then(|h| h.as_atom()).unwrap_or("");
            let args = &items[1.min(items.len())..];
            match head {
                "inv" => Ok(RoleExpr::Atom(role_from_sexpr(e)?)),
                "rnot" if args.len() == 1 => Ok(RoleExpr::rnot(role_expr_from_sexpr(&args[0])?)),
                "rand" | "ror" if args.len() >= 2 => {
                    let xs = args
                        .iter()
                        .map(role_expr_from_sexpr)
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(if head == "rand" {
                        RoleExpr::And(xs)
                    } else {
                        RoleExpr::Or(xs)
                    })
                }
                _ => Err(ParseError::new(*p, "malformed role expression")),
            }
        }
    }
}

pub fn parse_role_expr(text: &str) -> Result<RoleExpr, ParseError> {
    role_expr_from_sexpr(&crate::sexpr::parse_one(text)?)
}

/// Pushes `rnot` down to the atoms.
fn role_nnf(e: &RoleExpr, neg: bool) -> RoleExpr {
    match e {
        RoleExpr::Atom(_) => {
            if neg {
                RoleExpr::rnot(e.clone())
            } else {
                e.clone()
            }
        }
        RoleExpr::Not(x) => role_nnf(x, !neg),
        RoleExpr::And(xs) | RoleExpr::Or(xs) => {
            let ys = xs.iter().map(|x| role_nnf(x, neg)).collect();
            if matches!(e, RoleExpr::And(_)) != neg {
                RoleExpr::And(ys)
            } else {
                RoleExpr::Or(ys)
            }
        }
    }
}

fn safe_nnf(e: &RoleExpr) -> bool {
    match e {
        RoleExpr::Atom(_) => true,
        RoleExpr::Not(_) => false,
        RoleExpr::And(xs) => xs.iter().any(safe_nnf),
        RoleExpr::Or(xs) => xs.iter().all(safe_nnf),
    }
}

/// True iff every disjunct of the DNF of `e` has a non-negated conjunct.
pub fn is_safe(e: &RoleExpr) -> bool {
    safe_nnf(&role_nnf(e, false))
}

pub fn models_roleset(rs: &BTreeSet<Role>, e: &RoleExpr) -> bool {
    match e {
        RoleExpr::Atom(r) => rs.contains(r),
        RoleExpr::Not(x) => !models_roleset(rs, x),
        RoleExpr::And(xs) => xs.iter().all(|x| models_roleset(rs, x)),
        RoleExpr::Or(xs) => xs.iter().any(|x| models_roleset(rs, x)),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoleBox {
    pub inclusions: Vec<(Role, Role)>,
    pub transitive: BTreeSet<String>,
}

impl RoleBox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.inclusions.is_empty() && self.transitive.is_empty()
    }

    pub fn add_inclusion(&mut self, r: Role, s: Role) {
        if !self.inclusions.contains(&(r.clone(), s.clone())) {
            self.inclusions.push((r, s));
        }
    }

    pub fn add_transitive(&mut self, name: impl Into<String>) {
        self.transitive.insert(name.into());
    }

    pub fn is_transitive(&self, r: &Role) -> bool {
        self.transitive.contains(&r.base)
    }

    fn step(&self, r: &Role) -> impl Iterator<Item = Role> + '_ {
        let r = r.clone();
        self.inclusions.iter().filter_map(move |(a, b)| {
            if *a == r {
                Some(b.clone())
            } else if a.inv() == r {
                Some(b.inv())
            } else {
                None
            }
        })
    }

    /// `{ s : r ⊑* s }`, always containing `r`.
    pub fn supers(&self, r: &Role) -> BTreeSet<Role> {
        let mut seen = BTreeSet::from([r.clone()]);
        let mut queue = VecDeque::from([r.clone()]);
        while let Some(x) = queue.pop_front() {
            for y in self.step(&x) {
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    pub fn subsumed_by_star(&self, r: &Role, s: &Role) -> bool {
        r == s || self.supers(r).contains(s)
    }

    /// Roles mentioned by the box, with their inverses.
    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        for (a, b) in &self.inclusions {
            for r in [a, b] {
                out.insert(Role::new(r.base.as_str()));
                out.insert(Role::inverse_of(r.base.as_str()));
            }
        }
        for t in &self.transitive {
            out.insert(Role::new(t.as_str()));
            out.insert(Role::inverse_of(t.as_str()));
        }
        out
    }

    /// `{ t : t ⊑* r }` over the given universe of roles plus the box's own.
    pub fn subs_in(&self, r: &Role, universe: &BTreeSet<Role>) -> BTreeSet<Role> {
        let mut all = self.roles();
        all.extend(universe.iter().cloned());
        all.insert(r.clone());
        all.into_iter()
            .filter(|t| self.subsumed_by_star(t, r))
            .collect()
    }

    pub fn is_simple(&self, r: &Role) -> bool {
        !self
            .subs_in(r, &BTreeSet::new())
            .iter()
            .any(|t| self.is_transitive(t))
    }

    pub fn is_cycle_free(&self) -> bool {
        self.inclusions.iter().all(|(a, b)| a == b || !self.subsumed_by_star(b, a))
    }
}

/// Collapses every strongly connected component of the hierarchy to one role.
pub fn eliminate_cycles(rb: &RoleBox, c: &Concept) -> (RoleBox, Concept) {
    let roles = rb.roles();
    let mut rep: BTreeMap<String, Role> = BTreeMap::new();
    for r in roles.iter().filter(|r| !r.inverted) {
        if rep.contains_key(&r.base) {
            continue;
        }
        let up = rb.supers(r);
        let scc: BTreeSet<Role> = up
            .into_iter()
            .filter(|s| rb.subsumed_by_star(s, r))
            .collect();
        if scc.len() == 1 {
            continue;
        }
        let mirror: BTreeSet<Role> = scc.iter().map(|s| s.inv()).collect();
        let chosen = scc
            .iter()
            .chain(mirror.iter())
            .filter(|s| !s.inverted)
            .min_by_key(|s| (!rb.is_transitive(s), s.base.clone()))
            .cloned()
            .expect("non-empty component");
        let rep_here = if scc.contains(&chosen) {
            chosen.clone()
        } else {
            chosen.inv()
        };
        for m in &scc {
            let target = if m.inverted {
                rep_here.inv()
            } else {
                rep_here.clone()
            };
            rep.entry(m.base.clone()).or_insert(target);
        }
        for m in &mirror {
            let target = if m.inverted {
                rep_here.clone()
            } else {
                rep_here.inv()
            };
            rep.entry(m.base.clone()).or_insert(target);
        }
    }
    if rep.is_empty() {
        return (rb.clone(), c.clone());
    }
    let map_role = |r: &Role| -> Role {
        match rep.get(&r.base) {
            Some(t) if r.inverted => t.inv(),
            Some(t) => t.clone(),
            None => r.clone(),
        }
    };
    let mut out = RoleBox::new();
    for (a, b) in &rb.inclusions {
        let (a, b) = (map_role(a), map_role(b));
        if a != b {
            out.add_inclusion(a, b);
        }
    }
    for t in &rb.transitive {
        out.add_transitive(map_role(&Role::new(t.as_str())).base);
    }
    (out, c.map_roles(&map_role))
}

/// `R↑`: the conjunction of all super-roles of `r`.
pub fn role_upset_conjunction(r: &Role, rb: &RoleBox) -> RoleExpr {
    let ups = rb.supers(r);
    if ups.len() == 1 {
        RoleExpr::Atom(r.clone())
    } else {
        RoleExpr::And(ups.into_iter().map(RoleExpr::Atom).collect())
    }
}
