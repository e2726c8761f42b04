//! Concept syntax: AST, reader, printer, negation normal form and measures.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::roles::{check_name, role_expr_from_sexpr, Role, RoleBox, RoleExpr};
use crate::sexpr::{parse_one, ParseError, SExpr};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Top,
    Bottom,
    Name(String),
    Nominal(String),
    Not(Box<Concept>),
    And(Vec<Concept>),
    Or(Vec<Concept>),
    All(RoleExpr, Box<Concept>),
    Some(RoleExpr, Box<Concept>),
    AtLeast(BigUint, RoleExpr, Box<Concept>),
    AtMost(BigUint, RoleExpr, Box<Concept>),
}

pub(crate) const KEYWORDS: &[&str] = &[
    "top", "bottom", "one-of", "not", "and", "or", "all", "some", ">=", "<=",
];

impl Concept {
    pub fn name(s: &str) -> Concept {
        Concept::Name(s.to_string())
    }

    pub fn nominal(s: &str) -> Concept {
        Concept::Nominal(s.to_string())
    }

    pub fn not(c: Concept) -> Concept {
        Concept::Not(Box::new(c))
    }

    /// Conjunction; the empty list is `Top` and a singleton is its element.
    pub fn and(mut cs: Vec<Concept>) -> Concept {
        match cs.len() {
            0 => Concept::Top,
            1 => cs.pop().unwrap(),
            _ => Concept::And(cs),
        }
    }

    /// Disjunction; the empty list is `Bottom` and a singleton is its element.
    pub fn or(mut cs: Vec<Concept>) -> Concept {
        match cs.len() {
            0 => Concept::Bottom,
            1 => cs.pop().unwrap(),
            _ => Concept::Or(cs),
        }
    }

    pub fn all(r: RoleExpr, c: Concept) -> Concept {
        Concept::All(r, Box::new(c))
    }

    pub fn some(r: RoleExpr, c: Concept) -> Concept {
        Concept::Some(r, Box::new(c))
    }

    pub fn at_least(n: impl Into<BigUint>, r: RoleExpr, c: Concept) -> Concept {
        Concept::AtLeast(n.into(), r, Box::new(c))
    }

    pub fn at_most(n: impl Into<BigUint>, r: RoleExpr, c: Concept) -> Concept {
        Concept::AtMost(n.into(), r, Box::new(c))
    }

    /// Immediate subterms.
    pub fn children(&self) -> Vec<&Concept> {
        match self {
            Concept::Top | Concept::Bottom | Concept::Name(_) | Concept::Nominal(_) => vec![],
            Concept::Not(c)
            | Concept::All(_, c)
            | Concept::Some(_, c)
            | Concept::AtLeast(_, _, c)
            | Concept::AtMost(_, _, c) => vec![c],
            Concept::And(cs) | Concept::Or(cs) => cs.iter().collect(),
        }
    }

    pub fn role_expr(&self) -> Option<&RoleExpr> {
        match self {
            Concept::All(r, _)
            | Concept::Some(r, _)
            | Concept::AtLeast(_, r, _)
            | Concept::AtMost(_, r, _) => Some(r),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        match self {
            Concept::Name(_) | Concept::Nominal(_) => true,
            Concept::Not(c) => matches!(**c, Concept::Name(_) | Concept::Nominal(_)),
            _ => false,
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Concept::Not(c) => matches!(**c, Concept::Name(_) | Concept::Nominal(_)),
            _ => self.children().iter().all(|c| c.is_nnf()),
        }
    }

    pub fn map_roles(&self, f: &impl Fn(&Role) -> Role) -> Concept {
        self.map_parts(&|r| r.map_atoms(f), &|c| c.clone())
    }

    /// Rebuilds the concept, rewriting role expressions with `fr` and leaves with `fl`.
    pub fn map_parts(
        &self,
        fr: &impl Fn(&RoleExpr) -> RoleExpr,
        fl: &impl Fn(&Concept) -> Concept,
    ) -> Concept {
        let rec = |c: &Concept| Box::new(c.map_parts(fr, fl));
        match self {
            Concept::Top | Concept::Bottom | Concept::Name(_) | Concept::Nominal(_) => fl(self),
            Concept::Not(c) => Concept::Not(rec(c)),
            Concept::And(cs) => Concept::And(cs.iter().map(|c| c.map_parts(fr, fl)).collect()),
            Concept::Or(cs) => Concept::Or(cs.iter().map(|c| c.map_parts(fr, fl)).collect()),
            Concept::All(r, c) => Concept::All(fr(r), rec(c)),
            Concept::Some(r, c) => Concept::Some(fr(r), rec(c)),
            Concept::AtLeast(n, r, c) => Concept::AtLeast(n.clone(), fr(r), rec(c)),
            Concept::AtMost(n, r, c) => Concept::AtMost(n.clone(), fr(r), rec(c)),
        }
    }

    /// Largest nesting depth of role restrictions.
    pub fn role_depth(&self) -> usize {
        let inner = self.children().iter().map(|c| c.role_depth()).max().unwrap_or(0);
        if self.role_expr().is_some() {
            inner + 1
        } else {
            inner
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Top => f.write_str("top"),
            Concept::Bottom => f.write_str("bottom"),
            Concept::Name(s) => f.write_str(s),
            Concept::Nominal(s) => write!(f, "(one-of {s})"),
            Concept::Not(c) => write!(f, "(not {c})"),
            Concept::And(cs) | Concept::Or(cs) => {
                f.write_str(if matches!(self, Concept::And(_)) {
                    "(and"
                } else {
                    "(or"
                })?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            Concept::All(r, c) => write!(f, "(all {r} {c})"),
            Concept::Some(r, c) => write!(f, "(some {r} {c})"),
            Concept::AtLeast(n, r, c) => write!(f, "(>= {n} {r} {c})"),
            Concept::AtMost(n, r, c) => write!(f, "(<= {n} {r} {c})"),
        }
    }
}

pub fn render_concept(c: &Concept) -> String {
    c.to_string()
}

fn parse_count(e: &SExpr) -> Result<BigUint, ParseError> {
    let s = e
        .as_atom()
        .ok_or_else(|| ParseError::new(e.pos(), "expected a count"))?;
    if s.starts_with('-') && s.len() > 1 && s[1..].bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::new(e.pos(), "negative count"));
    }
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::new(e.pos(), format!("'{s}' is not a count")));
    }
    Ok(s.parse::<BigUint>().expect("decimal digits"))
}

pub fn concept_from_sexpr(e: &SExpr) -> Result<Concept, ParseError> {
    match e {
        SExpr::Atom(s, _) => match s.as_str() {
            "top" => Ok(Concept::Top),
            "bottom" => Ok(Concept::Bottom),
            _ => {
                check_name(s, e)?;
                Ok(Concept::Name(s.clone()))
            }
        },
        SExpr::List(items, p) => {
            let head = items
                .first()
                .and_then(|h| h.as_atom())
                .ok_or_else(|| ParseError::new(*p, "expected a constructor"))?;
            let args = &items[1..];
            let arity = |n: usize| {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(ParseError::new(
                        *p,
                        format!("'{head}' expects {n} argument(s), got {}", args.len()),
                    ))
                }
            };
            match head {
                "one-of" => {
                    arity(1)?;
                    let n = args[0]
                        .as_atom()
                        .ok_or_else(|| ParseError::new(args[0].pos(), "expected an individual"))?;
                    check_name(n, &args[0])?;
                    Ok(Concept::Nominal(n.to_string()))
                }
                "not" => {
                    arity(1)?;
                    Ok(Concept::not(concept_from_sexpr(&args[0])?))
                }
                "and" | "or" => {
                    if args.len() < 2 {
                        return Err(ParseError::new(
                            *p,
                            format!("'{head}' expects at least 2 arguments"),
                        ));
                    }
                    let cs = args
                        .iter()
                        .map(concept_from_sexpr)
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(if head == "and" {
                        Concept::And(cs)
                    } else {
                        Concept::Or(cs)
                    })
                }
                "all" | "some" => {
                    arity(2)?;
                    let r = role_expr_from_sexpr(&args[0])?;
                    let c = concept_from_sexpr(&args[1])?;
                    Ok(if head == "all" {
                        Concept::all(r, c)
                    } else {
                        Concept::some(r, c)
                    })
                }
                ">=" | "<=" => {
                    arity(3)?;
                    let n = parse_count(&args[0])?;
                    let r = role_expr_from_sexpr(&args[1])?;
                    let c = concept_from_sexpr(&args[2])?;
                    Ok(if head == ">=" {
                        Concept::AtLeast(n, r, Box::new(c))
                    } else {
                        Concept::AtMost(n, r, Box::new(c))
                    })
                }
                _ => Err(ParseError::new(*p, format!("unknown constructor '{head}'"))),
            }
        }
    }
}

pub fn parse_concept(text: &str) -> Result<Concept, ParseError> {
    concept_from_sexpr(&parse_one(text)?)
}

fn nnf_pol(c: &Concept, neg: bool) -> Concept {
    match c {
        Concept::Top => {
            if neg {
                Concept::Bottom
            } else {
                Concept::Top
            }
        }
        Concept::Bottom => {
            if neg {
                Concept::Top
            } else {
                Concept::Bottom
            }
        }
        Concept::Name(_) | Concept::Nominal(_) => {
            if neg {
                Concept::not(c.clone())
            } else {
                c.clone()
            }
        }
        Concept::Not(d) => nnf_pol(d, !neg),
        Concept::And(cs) | Concept::Or(cs) => {
            let ds = cs.iter().map(|d| nnf_pol(d, neg)).collect();
            if matches!(c, Concept::And(_)) != neg {
                Concept::And(ds)
            } else {
                Concept::Or(ds)
            }
        }
        Concept::All(r, d) | Concept::Some(r, d) => {
            let inner = Box::new(nnf_pol(d, neg));
            if matches!(c, Concept::All(..)) != neg {
                Concept::All(r.clone(), inner)
            } else {
                Concept::Some(r.clone(), inner)
            }
        }
        Concept::AtLeast(n, r, d) => {
            let inner = Box::new(nnf_pol(d, false));
            match (neg, n.is_zero()) {
                (false, true) => Concept::Top,
                (true, true) => Concept::Bottom,
                (false, false) => Concept::AtLeast(n.clone(), r.clone(), inner),
                (true, false) => Concept::AtMost(n - 1u32, r.clone(), inner),
            }
        }
        Concept::AtMost(n, r, d) => {
            let inner = Box::new(nnf_pol(d, false));
            if neg {
                Concept::AtLeast(n + BigUint::one(), r.clone(), inner)
            } else {
                Concept::AtMost(n.clone(), r.clone(), inner)
            }
        }
    }
}

/// Negation normal form. `(>= 0 R C)` becomes `top`.
pub fn nnf(c: &Concept) -> Concept {
    nnf_pol(c, false)
}

/// `~c`, the NNF of the negation of `c`.
pub fn complement_nnf(c: &Concept) -> Concept {
    nnf_pol(c, true)
}

pub fn subconcepts(c: &Concept) -> BTreeSet<Concept> {
    let mut out = BTreeSet::new();
    let mut stack = vec![c];
    while let Some(x) = stack.pop() {
        if out.insert(x.clone()) {
            stack.extend(x.children());
        }
    }
    out
}

/// Smallest set containing `c` closed under subconcepts and `~`; with a role
/// box, also under `∀R.D ↦ ∀T.D` for transitive `T ⊑* R`.
pub fn closure(c: &Concept, rb: Option<&RoleBox>) -> BTreeSet<Concept> {
    let mut out = BTreeSet::new();
    let mut stack = vec![c.clone()];
    while let Some(x) = stack.pop() {
        if out.contains(&x) {
            continue;
        }
        stack.extend(x.children().into_iter().cloned());
        stack.push(complement_nnf(&x));
        if let (Some(rb), Concept::All(RoleExpr::Atom(r), d)) = (rb, &x) {
            for t in rb.subs_in(r, &BTreeSet::new()) {
                if rb.is_transitive(&t) {
                    stack.push(Concept::All(RoleExpr::Atom(t), d.clone()));
                }
            }
        }
        out.insert(x);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measure {
    pub size: usize,
    pub norm: usize,
}

fn size_of(c: &Concept) -> usize {
    match c {
        Concept::Top | Concept::Bottom | Concept::Name(_) => 1,
        Concept::Nominal(_) => 4,
        Concept::Not(d) => 3 + size_of(d),
        Concept::And(cs) | Concept::Or(cs) => 3 + cs.iter().map(size_of).sum::<usize>(),
        Concept::All(r, d) | Concept::Some(r, d) => 3 + r.size() + size_of(d),
        Concept::AtLeast(_, r, d) | Concept::AtMost(_, r, d) => 4 + r.size() + size_of(d),
    }
}

fn norm_of(c: &Concept) -> usize {
    match c {
        Concept::Top | Concept::Bottom | Concept::Name(_) | Concept::Nominal(_) => 0,
        Concept::Not(d) if d.is_literal() => 0,
        Concept::Not(d) => norm_of(d),
        Concept::And(cs) | Concept::Or(cs) => {
            cs.len() - 1 + cs.iter().map(norm_of).sum::<usize>()
        }
        _ => 1 + c.children().iter().map(|d| norm_of(d)).sum::<usize>(),
    }
}

/// `size` is the token count of the printed form; `norm` counts constructors
/// (a binary conjunction or disjunction counts once per extra operand).
pub fn measure(c: &Concept) -> Measure {
    Measure {
        size: size_of(c),
        norm: norm_of(c),
    }
}

/// Symbols occurring in a syntactic object.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignatureView {
    pub concept_names: BTreeSet<String>,
    pub role_names: BTreeSet<String>,
    pub individuals: BTreeSet<String>,
}

impl SignatureView {
    pub fn add_concept(&mut self, c: &Concept) {
        for x in subconcepts(c) {
            match &x {
                Concept::Name(s) => {
                    self.concept_names.insert(s.clone());
                }
                Concept::Nominal(s) => {
                    self.individuals.insert(s.clone());
                }
                _ => {}
            }
            if let Some(r) = x.role_expr() {
                self.add_role_expr(r);
            }
        }
    }

    pub fn add_role_expr(&mut self, r: &RoleExpr) {
        for a in r.atoms() {
            self.role_names.insert(a.base);
        }
    }

    pub fn merge(&mut self, other: &SignatureView) {
        self.concept_names.extend(other.concept_names.iter().cloned());
        self.role_names.extend(other.role_names.iter().cloned());
        self.individuals.extend(other.individuals.iter().cloned());
    }
}

pub fn signature(c: &Concept) -> SignatureView {
    let mut s = SignatureView::default();
    s.add_concept(c);
    s
}
