//! Knowledge bases: TBox, ABox, CBox, problem files, validation and unfolding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;

use crate::roles::{is_safe, role_from_sexpr, Role, RoleBox, RoleExpr};
use crate::sexpr::{parse_all, ParseError, Pos, SExpr};
use crate::syntax::{
    complement_nnf, concept_from_sexpr, nnf, subconcepts, Concept, SignatureView,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Logic {
    Alc,
    Alcq,
    Alcqib,
    Si,
    Shiq,
    Alcqio,
}

impl Logic {
    pub fn parse(s: &str) -> Option<Logic> {
        Some(match s.to_ascii_lowercase().as_str() {
            "alc" => Logic::Alc,
            "alcq" => Logic::Alcq,
            "alcqib" => Logic::Alcqib,
            "si" => Logic::Si,
            "shiq" => Logic::Shiq,
            "alcqio" => Logic::Alcqio,
            _ => return None,
        })
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::Alc => "alc",
            Logic::Alcq => "alcq",
            Logic::Alcqib => "alcqib",
            Logic::Si => "si",
            Logic::Shiq => "shiq",
            Logic::Alcqio => "alcqio",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    Sub,
    Equiv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub lhs: Concept,
    pub rhs: Concept,
}

impl Axiom {
    pub fn sub(lhs: Concept, rhs: Concept) -> Self {
        Axiom {
            kind: AxiomKind::Sub,
            lhs,
            rhs,
        }
    }

    pub fn equiv(lhs: Concept, rhs: Concept) -> Self {
        Axiom {
            kind: AxiomKind::Equiv,
            lhs,
            rhs,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TBox {
    pub axioms: Vec<Axiom>,
}

impl TBox {
    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    /// Every axiom as one or two inclusions.
    pub fn inclusions(&self) -> Vec<(Concept, Concept)> {
        let mut out = Vec::new();
        for a in &self.axioms {
            out.push((a.lhs.clone(), a.rhs.clone()));
            if a.kind == AxiomKind::Equiv {
                out.push((a.rhs.clone(), a.lhs.clone()));
            }
        }
        out
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.axioms.iter().flat_map(|a| [&a.lhs, &a.rhs])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assertion {
    Instance(String, Concept),
    Related(String, String, Role),
    Distinct(String, String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ABox {
    pub assertions: Vec<Assertion>,
}

impl ABox {
    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    /// Individuals in order of first occurrence.
    pub fn individuals(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |s: &String| {
            if !out.contains(s) {
                out.push(s.clone())
            }
        };
        for a in &self.assertions {
            match a {
                Assertion::Instance(x, _) => push(x),
                Assertion::Related(x, y, _) | Assertion::Distinct(x, y) => {
                    push(x);
                    push(y)
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CardDir {
    AtLeast,
    AtMost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CardRestriction {
    pub dir: CardDir,
    pub count: BigUint,
    pub concept: Concept,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CBox {
    pub restrictions: Vec<CardRestriction>,
}

impl CBox {
    pub fn is_empty(&self) -> bool {
        self.restrictions.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Query {
    /// Consistency of the knowledge base when no query is given.
    #[default]
    Consistency,
    Sat(Concept),
    Subsumes(Concept, Concept),
    Instance(String, Concept),
    Classify,
}

/// Source positions of the items of a parsed problem.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Origins {
    pub axioms: Vec<Pos>,
    pub assertions: Vec<Pos>,
    pub cardinalities: Vec<Pos>,
    pub query: Option<Pos>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Problem {
    pub logic: Option<Logic>,
    pub tbox: TBox,
    pub abox: ABox,
    pub cbox: CBox,
    pub rbox: RoleBox,
    pub query: Query,
    pub origins: Origins,
}

impl Problem {
    pub fn concept_sat(c: Concept) -> Self {
        Problem {
            query: Query::Sat(c),
            ..Default::default()
        }
    }

    /// All concepts occurring anywhere, query included.
    pub fn concepts(&self) -> Vec<&Concept> {
        let mut out: Vec<&Concept> = self.tbox.concepts().collect();
        for a in &self.abox.assertions {
            if let Assertion::Instance(_, c) = a {
                out.push(c);
            }
        }
        out.extend(self.cbox.restrictions.iter().map(|r| &r.concept));
        match &self.query {
            Query::Sat(c) | Query::Instance(_, c) => out.push(c),
            Query::Subsumes(c, d) => {
                out.push(c);
                out.push(d)
            }
            Query::Classify | Query::Consistency => {}
        }
        out
    }

    pub fn signature(&self) -> SignatureView {
        let mut s = SignatureView::default();
        for c in self.concepts() {
            s.add_concept(c);
        }
        for a in &self.abox.assertions {
            match a {
                Assertion::Instance(x, _) => {
                    s.individuals.insert(x.clone());
                }
                Assertion::Related(x, y, r) => {
                    s.individuals.insert(x.clone());
                    s.individuals.insert(y.clone());
                    s.role_names.insert(r.base.clone());
                }
                Assertion::Distinct(x, y) => {
                    s.individuals.insert(x.clone());
                    s.individuals.insert(y.clone());
                }
            }
        }
        for r in self.rbox.roles() {
            s.role_names.insert(r.base);
        }
        s
    }
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_atom()
        .ok_or_else(|| ParseError::new(e.pos(), format!("expected {what}")))
}

fn arity(items: &[SExpr], n: usize, head: &str, p: Pos) -> Result<(), ParseError> {
    if items.len() == n + 1 {
        Ok(())
    } else {
        Err(ParseError::new(
            p,
            format!("'{head}' expects {n} argument(s), got {}", items.len() - 1),
        ))
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut p = Problem::default();
    let mut have_query = false;
    for e in parse_all(text)? {
        let SExpr::List(items, pos) = &e else {
            return Err(ParseError::new(e.pos(), "expected a directive"));
        };
        let pos = *pos;
        let head = items
            .first()
            .and_then(|h| h.as_atom())
            .ok_or_else(|| ParseError::new(pos, "expected a directive name"))?;
        match head {
            "logic" => {
                arity(items, 1, head, pos)?;
                let s = expect_atom(&items[1], "a logic name")?;
                p.logic = Some(
                    Logic::parse(s)
                        .ok_or_else(|| ParseError::new(items[1].pos(), format!("unknown logic '{s}'")))?,
                );
            }
            "define-concept" | "define-primitive-concept" | "implies" | "equal" => {
                arity(items, 2, head, pos)?;
                let lhs = if head.starts_with("define") {
                    let n = expect_atom(&items[1], "a concept name")?;
                    match concept_from_sexpr(&items[1])? {
                        c @ Concept::Name(_) => c,
                        _ => return Err(ParseError::new(items[1].pos(), format!("'{n}' is not a concept name"))),
                    }
                } else {
                    concept_from_sexpr(&items[1])?
                };
                let rhs = concept_from_sexpr(&items[2])?;
                let kind = if head == "define-concept" || head == "equal" {
                    AxiomKind::Equiv
                } else {
                    AxiomKind::Sub
                };
                p.tbox.axioms.push(Axiom { kind, lhs, rhs });
                p.origins.axioms.push(pos);
            }
            "instance" => {
                arity(items, 2, head, pos)?;
                let x = individual(&items[1])?;
                p.abox
                    .assertions
                    .push(Assertion::Instance(x, concept_from_sexpr(&items[2])?));
                p.origins.assertions.push(pos);
            }
            "related" => {
                arity(items, 3, head, pos)?;
                let x = individual(&items[1])?;
                let y = individual(&items[2])?;
                let r = role_from_sexpr(&items[3])?;
                let a = if r.inverted {
                    Assertion::Related(y, x, r.inv())
                } else {
                    Assertion::Related(x, y, r)
                };
                p.abox.assertions.push(a);
                p.origins.assertions.push(pos);
            }
            "distinct" => {
                arity(items, 2, head, pos)?;
                let x = individual(&items[1])?;
                let y = individual(&items[2])?;
                p.abox.assertions.push(Assertion::Distinct(x, y));
                p.origins.assertions.push(pos);
            }
            "cardinality" => {
                arity(items, 3, head, pos)?;
                let dir = match expect_atom(&items[1], ">= or <=")? {
                    ">=" => CardDir::AtLeast,
                    "<=" => CardDir::AtMost,
                    s => return Err(ParseError::new(items[1].pos(), format!("expected >= or <=, got '{s}'"))),
                };
                let n = expect_atom(&items[2], "a count")?;
                if n.starts_with('-') {
                    return Err(ParseError::new(items[2].pos(), "negative count"));
                }
                let count = n
                    .parse::<BigUint>()
                    .map_err(|_| ParseError::new(items[2].pos(), format!("'{n}' is not a count")))?;
                p.cbox.restrictions.push(CardRestriction {
                    dir,
                    count,
                    concept: concept_from_sexpr(&items[3])?,
                });
                p.origins.cardinalities.push(pos);
            }
            "transitive" => {
                arity(items, 1, head, pos)?;
                let r = role_from_sexpr(&items[1])?;
                p.rbox.add_transitive(r.base);
            }
            "implies-role" => {
                arity(items, 2, head, pos)?;
                let r = role_from_sexpr(&items[1])?;
                let s = role_from_sexpr(&items[2])?;
                p.rbox.add_inclusion(r, s);
            }
            "query" => {
                if have_query {
                    return Err(ParseError::new(pos, "more than one query"));
                }
                have_query = true;
                let kind = items
                    .get(1)
                    .and_then(|k| k.as_atom())
                    .ok_or_else(|| ParseError::new(pos, "expected a query kind"))?;
                p.query = match kind {
                    "sat" => {
                        arity(items, 2, "query sat", pos)?;
                        Query::Sat(concept_from_sexpr(&items[2])?)
                    }
                    "subsumes" => {
                        arity(items, 3, "query subsumes", pos)?;
                        Query::Subsumes(
                            concept_from_sexpr(&items[2])?,
                            concept_from_sexpr(&items[3])?,
                        )
                    }
                    "instance" => {
                        arity(items, 3, "query instance", pos)?;
                        Query::Instance(individual(&items[2])?, concept_from_sexpr(&items[3])?)
                    }
                    "classify" => {
                        arity(items, 1, "query classify", pos)?;
                        Query::Classify
                    }
                    "consistent" => {
                        arity(items, 1, "query consistent", pos)?;
                        Query::Consistency
                    }
                    _ => return Err(ParseError::new(items[1].pos(), format!("unknown query '{kind}'"))),
                };
                p.origins.query = Some(pos);
            }
            _ => return Err(ParseError::new(pos, format!("unknown directive '{head}'"))),
        }
    }
    Ok(p)
}

fn individual(e: &SExpr) -> Result<String, ParseError> {
    let s = expect_atom(e, "an individual name")?;
    crate::roles::check_name(s, e)?;
    Ok(s.to_string())
}

/// Renders a problem back into directive syntax.
pub fn render_problem(p: &Problem) -> String {
    let mut out = String::new();
    if let Some(l) = p.logic {
        out += &format!("(logic {l})\n");
    }
    for t in &p.rbox.transitive {
        out += &format!("(transitive {t})\n");
    }
    for (r, s) in &p.rbox.inclusions {
        out += &format!("(implies-role {r} {s})\n");
    }
    for a in &p.tbox.axioms {
        let head = match a.kind {
            AxiomKind::Sub => "implies",
            AxiomKind::Equiv => "equal",
        };
        out += &format!("({head} {} {})\n", a.lhs, a.rhs);
    }
    for a in &p.abox.assertions {
        out += &match a {
            Assertion::Instance(x, c) => format!("(instance {x} {c})\n"),
            Assertion::Related(x, y, r) => format!("(related {x} {y} {r})\n"),
            Assertion::Distinct(x, y) => format!("(distinct {x} {y})\n"),
        };
    }
    for r in &p.cbox.restrictions {
        let d = match r.dir {
            CardDir::AtLeast => ">=",
            CardDir::AtMost => "<=",
        };
        out += &format!("(cardinality {d} {} {})\n", r.count, r.concept);
    }
    out += &match &p.query {
        Query::Consistency => String::new(),
        Query::Sat(c) => format!("(query sat {c})\n"),
        Query::Subsumes(c, d) => format!("(query subsumes {c} {d})\n"),
        Query::Instance(x, c) => format!("(query instance {x} {c})\n"),
        Query::Classify => "(query classify)\n".to_string(),
    };
    out
}

/// Which constructors a problem uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Features {
    pub counting: bool,
    pub inverse: bool,
    pub role_booleans: bool,
    pub nominals: bool,
    pub transitivity: bool,
    pub hierarchy: bool,
    pub cbox: bool,
    pub abox: bool,
    pub general_tbox: bool,
}

pub fn features(p: &Problem) -> Features {
    let mut f = Features::default();
    for c in p.concepts() {
        for x in subconcepts(c) {
            match &x {
                Concept::AtLeast(..) | Concept::AtMost(..) => f.counting = true,
                Concept::Nominal(_) => f.nominals = true,
                _ => {}
            }
            if let Some(r) = x.role_expr() {
                if r.as_role().is_none() {
                    f.role_booleans = true;
                }
                if r.atoms().iter().any(|a| a.inverted) {
                    f.inverse = true;
                }
            }
        }
    }
    f.transitivity = !p.rbox.transitive.is_empty();
    f.hierarchy = !p.rbox.inclusions.is_empty();
    if p.rbox.inclusions.iter().any(|(a, b)| a.inverted || b.inverted) {
        f.inverse = true;
    }
    f.cbox = !p.cbox.is_empty();
    f.abox = !p.abox.is_empty();
    f.general_tbox = !p.tbox.is_empty() && SimpleTBox::from_tbox(&p.tbox).is_err();
    f
}

fn covers(l: Logic, f: &Features) -> bool {
    let base = !f.nominals && !f.cbox;
    match l {
        Logic::Alc => base && !f.counting && !f.inverse && !f.role_booleans && !f.transitivity && !f.hierarchy,
        Logic::Alcq => base && !f.inverse && !f.role_booleans && !f.transitivity && !f.hierarchy,
        Logic::Alcqib => base && !f.transitivity && !f.hierarchy,
        Logic::Si => base && !f.counting && !f.role_booleans && !f.hierarchy,
        Logic::Shiq => base && !f.role_booleans,
        Logic::Alcqio => !f.role_booleans && !f.transitivity && !f.hierarchy,
    }
}

/// Whether a logic has a decision procedure for the problem's shape.
pub fn supported(l: Logic, f: &Features) -> bool {
    match l {
        Logic::Alc | Logic::Alcq => !f.general_tbox,
        Logic::Alcqib => !f.general_tbox,
        Logic::Si => !f.abox,
        Logic::Shiq => !f.abox,
        Logic::Alcqio => false,
    }
}

/// The smallest logic covering the input, preferring ones that are supported.
pub fn detect_logic(p: &Problem) -> Logic {
    let f = features(p);
    let order = [Logic::Alc, Logic::Alcq, Logic::Si, Logic::Alcqib, Logic::Shiq];
    order
        .iter()
        .copied()
        .find(|&l| covers(l, &f) && supported(l, &f))
        .or_else(|| order.iter().copied().find(|&l| covers(l, &f)))
        .unwrap_or(Logic::Alcqio)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
    pub pos: Option<Pos>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{p}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks the syntactic side conditions of the problem's logic.
pub fn validate(p: &Problem) -> Result<(), Vec<Diagnostic>> {
    let logic = p.logic.unwrap_or_else(|| detect_logic(p));
    let mut diags = Vec::new();
    let mut located: Vec<(&Concept, Option<Pos>)> = Vec::new();
    for (i, a) in p.tbox.axioms.iter().enumerate() {
        let pos = p.origins.axioms.get(i).copied();
        located.push((&a.lhs, pos));
        located.push((&a.rhs, pos));
    }
    for (i, a) in p.abox.assertions.iter().enumerate() {
        if let Assertion::Instance(_, c) = a {
            located.push((c, p.origins.assertions.get(i).copied()));
        }
    }
    for (i, r) in p.cbox.restrictions.iter().enumerate() {
        located.push((&r.concept, p.origins.cardinalities.get(i).copied()));
    }
    match &p.query {
        Query::Sat(c) | Query::Instance(_, c) => located.push((c, p.origins.query)),
        Query::Subsumes(c, d) => {
            located.push((c, p.origins.query));
            located.push((d, p.origins.query));
        }
        _ => {}
    }
    let allow_counting = matches!(logic, Logic::Alcq | Logic::Alcqib | Logic::Shiq | Logic::Alcqio);
    let allow_inverse = matches!(logic, Logic::Alcqib | Logic::Si | Logic::Shiq | Logic::Alcqio);
    let mut say = |pos: Option<Pos>, m: String| diags.push(Diagnostic { message: m, pos });
    for (c, pos) in located {
        for x in subconcepts(c) {
            match &x {
                Concept::AtLeast(..) | Concept::AtMost(..) if !allow_counting => {
                    say(pos, format!("number restriction {x} is not allowed in {logic}"))
                }
                Concept::Nominal(o) if logic != Logic::Alcqio => {
                    say(pos, format!("nominal {o} is not allowed in {logic}"))
                }
                _ => {}
            }
            let Some(r) = x.role_expr() else { continue };
            if r.as_role().is_none() {
                if logic != Logic::Alcqib {
                    say(pos, format!("role expression {r} is only allowed in alcqib"));
                } else if !is_safe(r) {
                    say(pos, format!("role expression {r} is not safe"));
                }
            }
            if !allow_inverse && r.atoms().iter().any(|a| a.inverted) {
                say(pos, format!("inverse role in {x} is not allowed in {logic}"));
            }
            if logic == Logic::Shiq {
                if let Concept::AtLeast(_, RoleExpr::Atom(s), _) | Concept::AtMost(_, RoleExpr::Atom(s), _) = &x {
                    if !p.rbox.is_simple(s) {
                        say(pos, format!("number restriction {x} uses the non-simple role {s}"));
                    }
                }
            }
        }
    }
    for a in &p.abox.assertions {
        if let Assertion::Related(_, _, r) = a {
            if r.inverted && !allow_inverse {
                say(None, format!("inverse role {r} is not allowed in {logic}"));
            }
        }
    }
    if !p.rbox.transitive.is_empty() && !matches!(logic, Logic::Si | Logic::Shiq) {
        say(None, format!("transitive roles are not allowed in {logic}"));
    }
    if !p.rbox.inclusions.is_empty() && logic != Logic::Shiq {
        say(None, format!("role inclusions are not allowed in {logic}"));
    }
    if !p.cbox.is_empty() && logic != Logic::Alcqio {
        say(None, format!("cardinality restrictions are not allowed in {logic}"));
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// An acyclic terminology with at most one definition per name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimpleTBox {
    /// Name to (kind, NNF right-hand side).
    pub defs: BTreeMap<String, (AxiomKind, Concept)>,
    /// Defined names, each after the names its definition uses.
    pub order: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NotSimple {
    #[error("axiom {0} has a complex left-hand side")]
    General(String),
    #[error("'{0}' is defined more than once")]
    Redefined(String),
    #[error("definitions are cyclic through '{0}'")]
    Cyclic(String),
}

fn simplify_or(c: Concept) -> Concept {
    match c {
        Concept::Or(cs) => {
            if cs.contains(&Concept::Top) {
                return Concept::Top;
            }
            Concept::or(cs.into_iter().filter(|d| *d != Concept::Bottom).collect())
        }
        c => c,
    }
}

impl SimpleTBox {
    /// Normalizes a TBox into a simple one: trivial axioms are dropped, general
    /// equalities split, conjunctive left-hand sides absorbed into a primitive
    /// name and repeated primitive definitions conjoined.
    pub fn from_tbox(t: &TBox) -> Result<SimpleTBox, NotSimple> {
        let mut equiv: BTreeMap<String, Concept> = BTreeMap::new();
        let mut subs: Vec<(Concept, Concept)> = Vec::new();
        for a in &t.axioms {
            match (a.kind, &a.lhs, &a.rhs) {
                (AxiomKind::Equiv, l, r) if l == r => {}
                (AxiomKind::Equiv, Concept::Name(n), r) | (AxiomKind::Equiv, r, Concept::Name(n))
                    if !equiv.contains_key(n) =>
                {
                    equiv.insert(n.clone(), r.clone());
                }
                (AxiomKind::Equiv, l, r) => {
                    subs.push((l.clone(), r.clone()));
                    subs.push((r.clone(), l.clone()));
                }
                (AxiomKind::Sub, l, r) => subs.push((l.clone(), r.clone())),
            }
        }
        let mut prim: BTreeMap<String, Vec<Concept>> = BTreeMap::new();
        for (l, r) in subs {
            let r = nnf(&r);
            if l == Concept::Bottom || r == Concept::Top {
                continue;
            }
            match &l {
                Concept::Name(n) if !equiv.contains_key(n) => {
                    prim.entry(n.clone()).or_default().push(r);
                }
                Concept::And(cs) => {
                    let pick = cs.iter().position(
                        |c| matches!(c, Concept::Name(n) if !equiv.contains_key(n)),
                    );
                    let Some(i) = pick else {
                        return Err(NotSimple::General(format!("{l} ⊑ {r}")));
                    };
                    let Concept::Name(n) = &cs[i] else { unreachable!() };
                    let rest: Vec<Concept> = cs
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, c)| c.clone())
                        .collect();
                    let body = simplify_or(Concept::Or(vec![
                        complement_nnf(&nnf(&Concept::and(rest))),
                        r,
                    ]));
                    if body != Concept::Top {
                        prim.entry(n.clone()).or_default().push(body);
                    }
                }
                Concept::Name(n) => return Err(NotSimple::Redefined(n.clone())),
                _ => return Err(NotSimple::General(format!("{l} ⊑ {r}"))),
            }
        }
        let mut defs = BTreeMap::new();
        for (n, c) in equiv {
            defs.insert(n, (AxiomKind::Equiv, nnf(&c)));
        }
        for (n, cs) in prim {
            defs.insert(n, (AxiomKind::Sub, Concept::and(cs)));
        }
        let order = topo_order(&defs)?;
        Ok(SimpleTBox { defs, order })
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&(AxiomKind, Concept)> {
        self.defs.get(name)
    }

    /// Eager unfolding; primitive definitions keep the name as a conjunct.
    pub fn unfold(&self, c: &Concept) -> Concept {
        nnf(&self.unfold_raw(c))
    }

    fn unfold_raw(&self, c: &Concept) -> Concept {
        c.map_parts(&|r| r.clone(), &|leaf| match leaf {
            Concept::Name(n) => match self.defs.get(n) {
                Some((AxiomKind::Equiv, d)) => self.unfold_raw(d),
                Some((AxiomKind::Sub, d)) => {
                    Concept::And(vec![leaf.clone(), self.unfold_raw(d)])
                }
                None => leaf.clone(),
            },
            _ => leaf.clone(),
        })
    }
}

fn topo_order(defs: &BTreeMap<String, (AxiomKind, Concept)>) -> Result<Vec<String>, NotSimple> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(
        n: &str,
        defs: &BTreeMap<String, (AxiomKind, Concept)>,
        marks: &mut BTreeMap<String, Mark>,
        out: &mut Vec<String>,
    ) -> Result<(), NotSimple> {
        match marks.get(n) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Open) => return Err(NotSimple::Cyclic(n.to_string())),
            None => {}
        }
        marks.insert(n.to_string(), Mark::Open);
        if let Some((_, d)) = defs.get(n) {
            let used: BTreeSet<String> = subconcepts(d)
                .into_iter()
                .filter_map(|x| match x {
                    Concept::Name(m) => Some(m),
                    _ => None,
                })
                .collect();
            for m in used {
                if defs.contains_key(&m) {
                    visit(&m, defs, marks, out)?;
                }
            }
        }
        marks.insert(n.to_string(), Mark::Done);
        out.push(n.to_string());
        Ok(())
    }
    let mut marks = BTreeMap::new();
    let mut out = Vec::new();
    for n in defs.keys() {
        visit(n, defs, &mut marks, &mut out)?;
    }
    Ok(out)
}

pub fn unfold(c: &Concept, t: &TBox) -> Result<Concept, NotSimple> {
    Ok(SimpleTBox::from_tbox(t)?.unfold(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_concept;

    fn c(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    #[test]
    fn parse_directives() {
        let p = parse_problem(
            "(logic shiq)\n(transitive R)\n(implies-role F R)\n(define-concept P (and H (some c H)))\n\
             (implies A B)\n(instance m P)\n(related m p (inv c))\n(distinct m p)\n(query sat A)",
        )
        .unwrap();
        assert_eq!(p.logic, Some(Logic::Shiq));
        assert_eq!(p.tbox.axioms.len(), 2);
        assert_eq!(p.tbox.axioms[0].kind, AxiomKind::Equiv);
        assert_eq!(
            p.abox.assertions[1],
            Assertion::Related("p".into(), "m".into(), Role::new("c"))
        );
        assert_eq!(p.query, Query::Sat(c("A")));
        assert_eq!(p.origins.axioms[1].line, 5);
        let again = parse_problem(&render_problem(&p)).unwrap();
        assert_eq!(again.tbox, p.tbox);
        assert_eq!(again.abox, p.abox);
        assert_eq!(again.rbox, p.rbox);
    }

    #[test]
    fn parse_rejects() {
        assert!(parse_problem("(frob)").is_err());
        assert!(parse_problem("(query sat A) (query sat B)").is_err());
        assert!(parse_problem("(cardinality >= -2 A)").is_err());
        assert!(parse_problem("(define-concept (and A B) C)").is_err());
    }

    #[test]
    fn validation() {
        let p = parse_problem("(logic shiq) (transitive R) (query sat (<= 1 R A))").unwrap();
        let d = validate(&p).unwrap_err();
        assert!(d[0].message.contains("non-simple"));
        assert_eq!(d[0].pos.map(|x| x.line), Some(1));
        let p = parse_problem("(logic alcqib) (query sat (<= 0 (ror R (rnot R)) (not C)))").unwrap();
        assert!(validate(&p).unwrap_err()[0].message.contains("not safe"));
        let p = parse_problem("(logic alc) (query sat (and A (some R B)))").unwrap();
        assert!(validate(&p).is_ok());
        let p = parse_problem("(logic alc) (query sat (some (inv R) B))").unwrap();
        assert!(validate(&p).is_err());
    }

    #[test]
    fn detection() {
        let d = |s: &str| detect_logic(&parse_problem(s).unwrap());
        assert_eq!(d("(query sat (some R A))"), Logic::Alc);
        assert_eq!(d("(query sat (>= 2 R A))"), Logic::Alcq);
        assert_eq!(d("(transitive R) (query sat (some R A))"), Logic::Si);
        assert_eq!(d("(query sat (>= 2 (inv R) A))"), Logic::Alcqib);
        assert_eq!(d("(implies-role F R) (query sat (some F A))"), Logic::Shiq);
        assert_eq!(d("(implies top (some R A)) (query sat A)"), Logic::Si);
        assert_eq!(d("(implies top (>= 2 R A)) (query sat A)"), Logic::Shiq);
        assert_eq!(d("(cardinality >= 1 A)"), Logic::Alcqio);
    }

    #[test]
    fn unfold_examples() {
        let t = parse_problem("(define-concept Parent (and Human (some hc Human)))").unwrap();
        assert_eq!(unfold(&c("Parent"), &t.tbox).unwrap(), c("(and Human (some hc Human))"));
        assert_eq!(unfold(&c("(some R B)"), &t.tbox).unwrap(), c("(some R B)"));
        let t = parse_problem("(define-concept A B) (define-concept B (and C D))").unwrap();
        assert_eq!(unfold(&c("A"), &t.tbox).unwrap(), c("(and C D)"));
        let t = parse_problem("(define-primitive-concept A B)").unwrap();
        assert_eq!(unfold(&c("(not A)"), &t.tbox).unwrap(), c("(or (not A) (not B))"));
    }

    #[test]
    fn normalization() {
        let t = parse_problem(
            "(equal Human (or Male Female)) (implies (and Male Female) bottom) (implies Male M2) (implies bottom X)",
        )
        .unwrap()
        .tbox;
        let s = SimpleTBox::from_tbox(&t).unwrap();
        assert_eq!(s.defs["Male"], (AxiomKind::Sub, c("(and (not Female) M2)")));
        assert_eq!(s.order.last().unwrap(), "Human");
        let cyclic = parse_problem("(define-concept A (some R A))").unwrap().tbox;
        assert!(matches!(SimpleTBox::from_tbox(&cyclic), Err(NotSimple::Cyclic(_))));
        let general = parse_problem("(implies (some R A) B)").unwrap().tbox;
        assert!(matches!(SimpleTBox::from_tbox(&general), Err(NotSimple::General(_))));
        let twice = parse_problem("(define-concept A B) (define-concept A (some R C))").unwrap().tbox;
        assert!(SimpleTBox::from_tbox(&twice).is_err());
    }
}
