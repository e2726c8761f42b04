//! Satisfiability-preserving translations between reasoning problems:
//! ABoxes and cardinality restrictions to nominal TBoxes and back, TBox
//! internalization (spy-point and universal role), the SHIQ to ALCQIb
//! translation and the first-order text of a CBox in C².

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::kb::{Assertion, Axiom, AxiomKind, CBox, CardDir, CardRestriction, Problem, TBox};
use crate::roles::{role_upset_conjunction, Role, RoleBox, RoleExpr};
use crate::syntax::{closure, complement_nnf, nnf, subconcepts, Concept, SignatureView};

/// Default limit on the nominals `cbox_to_tbox` may introduce.
pub const DEFAULT_EXPANSION_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("cardinality restrictions need {needed} nominals, above the cap of {cap}")]
    CapExceeded { needed: BigUint, cap: usize },
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

/// Generator of names unused by a signature.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    pub fn new(sig: &SignatureView) -> Self {
        let mut used = BTreeSet::new();
        used.extend(sig.concept_names.iter().cloned());
        used.extend(sig.role_names.iter().cloned());
        used.extend(sig.individuals.iter().cloned());
        Fresh { used }
    }

    pub fn for_problem(p: &Problem) -> Self {
        let mut sig = p.signature();
        for r in p.rbox.roles() {
            sig.role_names.insert(r.base);
        }
        Fresh::new(&sig)
    }

    pub fn name(&mut self, base: &str) -> String {
        let mut k = 1usize;
        loop {
            let n = format!("{base}{k}");
            if self.used.insert(n.clone()) {
                return n;
            }
            k += 1;
        }
    }
}

fn tbox_signature(t: &TBox) -> SignatureView {
    let mut s = SignatureView::default();
    for c in t.concepts() {
        s.add_concept(c);
    }
    s
}

/// The ABox as nominal inclusions, appended to the problem's TBox.
pub fn abox_to_tbox_nominals(p: &Problem) -> TBox {
    let mut out = p.tbox.clone();
    let o = |x: &str| Concept::nominal(x);
    for a in &p.abox.assertions {
        out.axioms.push(match a {
            Assertion::Instance(x, c) => Axiom::sub(o(x), c.clone()),
            Assertion::Related(x, y, r) => Axiom::sub(o(x), Concept::some(RoleExpr::Atom(r.clone()), o(y))),
            Assertion::Distinct(x, y) => Axiom::sub(o(x), Concept::not(o(y))),
        });
    }
    out
}

/// Each `(≤ n C)` bounds `C` by `n` fresh nominals and each `(≥ n C)` puts
/// `n` distinct fresh nominals into `C`. Fails when more than `cap` nominals
/// would be needed.
pub fn cbox_to_tbox(cb: &CBox, fresh: &mut Fresh, cap: usize) -> Result<TBox, ReductionError> {
    let needed: BigUint = cb.restrictions.iter().map(|r| &r.count).sum();
    if needed > BigUint::from(cap) {
        return Err(ReductionError::CapExceeded { needed, cap });
    }
    let mut out = TBox::default();
    for r in &cb.restrictions {
        let n = r.count.to_usize().expect("bounded by the cap");
        let os: Vec<Concept> = (0..n).map(|_| Concept::nominal(&fresh.name("o"))).collect();
        match r.dir {
            CardDir::AtMost => out.axioms.push(Axiom::sub(r.concept.clone(), Concept::or(os))),
            CardDir::AtLeast => {
                for (j, oj) in os.iter().enumerate() {
                    out.axioms.push(Axiom::sub(oj.clone(), r.concept.clone()));
                    for ol in &os[j + 1..] {
                        out.axioms.push(Axiom::sub(oj.clone(), Concept::not(ol.clone())));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Rebuilds `c` with `f` applied to its immediate subconcepts.
fn shallow(c: &Concept, f: &impl Fn(&Concept) -> Concept) -> Concept {
    let b = |d: &Concept| Box::new(f(d));
    match c {
        Concept::Top | Concept::Bottom | Concept::Name(_) | Concept::Nominal(_) => c.clone(),
        Concept::Not(d) => Concept::Not(b(d)),
        Concept::And(cs) => Concept::And(cs.iter().map(f).collect()),
        Concept::Or(cs) => Concept::Or(cs.iter().map(f).collect()),
        Concept::All(r, d) => Concept::All(r.clone(), b(d)),
        Concept::Some(r, d) => Concept::Some(r.clone(), b(d)),
        Concept::AtLeast(n, r, d) => Concept::AtLeast(n.clone(), r.clone(), b(d)),
        Concept::AtMost(n, r, d) => Concept::AtMost(n.clone(), r.clone(), b(d)),
    }
}

fn replace_nominals(c: &Concept, map: &BTreeMap<String, String>) -> Concept {
    match c {
        Concept::Nominal(o) => Concept::name(&map[o]),
        _ => shallow(c, &|d| replace_nominals(d, map)),
    }
}

/// Nominals become fresh names interpreted as singletons, and `C ⊑ D`
/// becomes `(≤ 0 C ⊓ ¬D)`.
pub fn tbox_to_cbox(t: &TBox, fresh: &mut Fresh) -> CBox {
    let sig = tbox_signature(t);
    let map: BTreeMap<String, String> = sig
        .individuals
        .iter()
        .map(|o| (o.clone(), fresh.name(&format!("N{o}"))))
        .collect();
    let mut out = CBox::default();
    for n in map.values() {
        for dir in [CardDir::AtMost, CardDir::AtLeast] {
            out.restrictions.push(CardRestriction {
                dir,
                count: BigUint::one(),
                concept: Concept::name(n),
            });
        }
    }
    for (l, r) in t.inclusions() {
        out.restrictions.push(CardRestriction {
            dir: CardDir::AtMost,
            count: BigUint::zero(),
            concept: Concept::and(vec![replace_nominals(&l, &map), Concept::not(replace_nominals(&r, &map))]),
        });
    }
    out
}

/// `⊓ NNF(¬C ⊔ D)` over the inclusions of `t`.
pub fn tbox_concept(t: &TBox) -> Concept {
    Concept::and(
        t.inclusions()
            .into_iter()
            .map(|(l, r)| nnf(&Concept::or(vec![Concept::not(l), r])))
            .collect(),
    )
}

fn spy_of(c: &Concept, guard: &Concept) -> Concept {
    let g = guard.clone();
    match c {
        Concept::AtLeast(n, r, d) => Concept::at_least(n.clone(), r.clone(), Concept::and(vec![g, spy_of(d, guard)])),
        Concept::AtMost(n, r, d) => Concept::at_most(n.clone(), r.clone(), Concept::and(vec![g, spy_of(d, guard)])),
        Concept::Some(r, d) => Concept::some(r.clone(), Concept::and(vec![g, spy_of(d, guard)])),
        Concept::All(r, d) => Concept::all(r.clone(), Concept::or(vec![Concept::not(g), spy_of(d, guard)])),
        _ => shallow(c, &|d| spy_of(d, guard)),
    }
}

/// A concept satisfiable iff `t` is: a fresh individual `i` reaches every
/// element through a fresh role `spy`, every element satisfies `D^spy`, and
/// every quantifier is relativised to the elements `i` sees. Each nominal of
/// `t` is also required to be `i` or one of its `spy`-successors.
pub fn spy_point_internalize(t: &TBox, fresh: &mut Fresh) -> Concept {
    let i = Concept::nominal(&fresh.name("i"));
    let spy = Role::new(fresh.name("spy"));
    let guard = Concept::some(RoleExpr::Atom(spy.inv()), i.clone());
    let d = spy_of(&tbox_concept(t), &guard);
    let mut parts = vec![i, d.clone(), Concept::all(RoleExpr::Atom(spy.clone()), d)];
    for o in &tbox_signature(t).individuals {
        let o = Concept::nominal(o);
        parts.push(Concept::or(vec![o.clone(), Concept::some(RoleExpr::Atom(spy.clone()), o)]));
    }
    Concept::and(parts)
}

/// `C ⊓ C_T ⊓ ∀U.C_T` for a fresh transitive `U` above every role and its
/// inverse. An empty TBox leaves both inputs unchanged.
pub fn internalize_shiq(c: &Concept, t: &TBox, rb: &RoleBox, fresh: &mut Fresh) -> (Concept, RoleBox) {
    if t.is_empty() {
        return (c.clone(), rb.clone());
    }
    let ct = tbox_concept(t);
    let mut sig = tbox_signature(t);
    sig.merge(&crate::syntax::signature(c));
    for r in rb.roles() {
        sig.role_names.insert(r.base);
    }
    let u = Role::new(fresh.name("U"));
    let mut out = rb.clone();
    out.add_transitive(u.base.as_str());
    for r in &sig.role_names {
        out.add_inclusion(Role::new(r.as_str()), u.clone());
        out.add_inclusion(Role::inverse_of(r.as_str()), u.clone());
    }
    (Concept::and(vec![c.clone(), ct.clone(), Concept::all(RoleExpr::Atom(u), ct)]), out)
}

struct ShiqTr<'a> {
    rb: &'a RoleBox,
    names: BTreeMap<(Role, Concept), String>,
}

impl ShiqTr<'_> {
    fn x(&self, r: &Role, d: &Concept) -> Concept {
        Concept::name(&self.names[&(r.clone(), d.clone())])
    }

    fn up(&self, r: &RoleExpr) -> RoleExpr {
        role_upset_conjunction(r.as_role().expect("atomic role"), self.rb)
    }

    fn tr(&self, c: &Concept) -> Concept {
        match c {
            Concept::All(r, d) => self.x(r.as_role().unwrap(), d),
            Concept::Some(r, d) => Concept::not(self.x(r.as_role().unwrap(), &complement_nnf(d))),
            Concept::AtLeast(n, r, d) => Concept::at_least(n.clone(), self.up(r), self.tr(d)),
            Concept::AtMost(n, r, d) => Concept::at_most(n.clone(), self.up(r), self.tr(d)),
            _ => shallow(c, &|d| self.tr(d)),
        }
    }
}

/// Translates a SHIQ concept into an ALCQIb concept and TBox: every `∀R.D` of
/// the closure is named by a fresh `X`, defined over the role conjunction of
/// the super-roles of `R`, and made to propagate along transitive sub-roles.
pub fn reduce_shiq_to_alcqib(c: &Concept, rb: &RoleBox, fresh: &mut Fresh) -> Result<(Concept, TBox), ReductionError> {
    let root = nnf(c);
    for x in subconcepts(&root) {
        if matches!(x, Concept::Nominal(_)) || x.role_expr().is_some_and(|r| r.as_role().is_none()) {
            return Err(ReductionError::Unsupported(format!("{x} is outside SHIQ")));
        }
    }
    let clos = closure(&root, Some(rb));
    let mut names = BTreeMap::new();
    for x in &clos {
        if let Concept::All(r, d) = x {
            names.insert((r.as_role().unwrap().clone(), (**d).clone()), fresh.name("X"));
        }
    }
    let s = ShiqTr { rb, names };
    let mut t = TBox::default();
    let universe: BTreeSet<Role> = s.names.keys().map(|(r, _)| r.clone()).collect();
    for (r, d) in s.names.keys() {
        let x = s.x(r, d);
        t.axioms.push(Axiom::equiv(x.clone(), Concept::all(s.up(&RoleExpr::Atom(r.clone())), s.tr(d))));
        let below: Vec<Concept> = rb
            .subs_in(r, &universe)
            .into_iter()
            .filter(|u| rb.is_transitive(u) && s.names.contains_key(&(u.clone(), d.clone())))
            .map(|u| Concept::all(s.up(&RoleExpr::Atom(u.clone())), s.x(&u, d)))
            .collect();
        if !below.is_empty() {
            t.axioms.push(Axiom::sub(x, Concept::and(below)));
        }
    }
    Ok((s.tr(&root), t))
}

fn c2_core(c: &Concept) -> Result<Concept, ReductionError> {
    let role = |r: &RoleExpr| -> Result<RoleExpr, ReductionError> {
        match r.as_role() {
            Some(_) => Ok(r.clone()),
            None => Err(ReductionError::Unsupported(format!("role expression {r} in C2 translation"))),
        }
    };
    Ok(match c {
        Concept::Top | Concept::Bottom | Concept::Name(_) => c.clone(),
        Concept::Nominal(o) => return Err(ReductionError::Unsupported(format!("nominal {o} in C2 translation"))),
        Concept::Not(d) => Concept::not(c2_core(d)?),
        Concept::And(cs) => Concept::And(cs.iter().map(c2_core).collect::<Result<_, _>>()?),
        Concept::Or(cs) => Concept::not(Concept::And(
            cs.iter().map(|d| Ok(Concept::not(c2_core(d)?))).collect::<Result<_, _>>()?,
        )),
        Concept::Some(r, d) => Concept::at_least(1u32, role(r)?, c2_core(d)?),
        Concept::All(r, d) => Concept::not(Concept::at_least(1u32, role(r)?, Concept::not(c2_core(d)?))),
        Concept::AtLeast(n, r, d) => Concept::at_least(n.clone(), role(r)?, c2_core(d)?),
        Concept::AtMost(n, r, d) => {
            Concept::not(Concept::at_least(n + 1u32, role(r)?, c2_core(d)?))
        }
    })
}

/// `Ψ_v(c)` for `c` over `¬`, `⊓` and `≥`, alternating the two variables.
fn psi(c: &Concept, v: &str) -> String {
    let w = if v == "x" { "y" } else { "x" };
    match c {
        Concept::Top => "true".into(),
        Concept::Bottom => "false".into(),
        Concept::Name(a) => format!("{a}({v})"),
        Concept::Not(d) => format!("~{}", psi(d, v)),
        Concept::And(cs) => {
            let xs: Vec<String> = cs.iter().map(|d| psi(d, v)).collect();
            format!("({})", xs.join(" & "))
        }
        Concept::AtLeast(n, r, d) => {
            let r = r.as_role().unwrap();
            let edge = if r.inverted {
                format!("{}({w},{v})", r.base)
            } else {
                format!("{}({v},{w})", r.base)
            };
            format!("E>={n} {w}.({edge} & {})", psi(d, w))
        }
        _ => unreachable!("outside the C2 core"),
    }
}

/// The C² sentence of a CBox, one conjunct per restriction.
pub fn translate_c2(cb: &CBox) -> Result<String, ReductionError> {
    let mut parts = Vec::new();
    for r in &cb.restrictions {
        let op = match r.dir {
            CardDir::AtLeast => ">=",
            CardDir::AtMost => "<=",
        };
        parts.push(format!("E{op}{} x. {}", r.count, psi(&c2_core(&r.concept)?, "x")));
    }
    Ok(match parts.len() {
        0 => "true".into(),
        1 => parts.pop().unwrap(),
        _ => parts.iter().map(|p| format!("({p})")).collect::<Vec<_>>().join(" &\n"),
    })
}

/// Splits equalities into two inclusions.
pub fn split_equalities(t: &TBox) -> TBox {
    TBox {
        axioms: t
            .inclusions()
            .into_iter()
            .map(|(l, r)| Axiom {
                kind: AxiomKind::Sub,
                lhs: l,
                rhs: r,
            })
            .collect(),
    }
}
