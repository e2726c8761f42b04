//! Shared tableau machinery: interned concept tables, node labels as bit sets,
//! propositional saturation with backtracking, run statistics and witness
//! extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::kb::{AxiomKind, SimpleTBox};
use crate::oracle::{evaluate_concept, Interpretation};
use crate::roles::{Role, RoleBox, RoleExpr};
use crate::syntax::{complement_nnf, nnf, Concept, SignatureView};

pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Keep only the current path; completed subtrees are discarded.
    #[default]
    Trace,
    /// Keep the whole tree so that a model can be read off it.
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    pub mode: Mode,
    pub step_limit: u64,
    /// Record a completion-tree outline in the verdict.
    pub dump: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::Trace,
            step_limit: DEFAULT_STEP_LIMIT,
            dump: false,
        }
    }
}

impl Config {
    pub fn model() -> Self {
        Config {
            mode: Mode::Model,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Model(Interpretation),
    /// Completion-tree outline, for logics whose models are unravelings.
    Tree(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(Option<Witness>),
    Unsat,
    Unknown(String),
}

impl Outcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, Outcome::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Outcome::Unsat)
    }

    pub fn model(&self) -> Option<&Interpretation> {
        match self {
            Outcome::Sat(Some(Witness::Model(i))) => Some(i),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub rules: BTreeMap<&'static str, u64>,
    pub peak_live_nodes: usize,
    pub max_path_length: usize,
    pub max_out_degree: usize,
    pub restarts: u64,
    pub blocks_established: u64,
    pub steps: u64,
    pub successors_created: u64,
}

impl EngineStats {
    pub fn rule(&self, name: &str) -> u64 {
        self.rules.get(name).copied().unwrap_or(0)
    }

    /// Key/value pairs sorted by key.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("blocks".into(), self.blocks_established.to_string()),
            ("max_out_degree".into(), self.max_out_degree.to_string()),
            ("max_path_length".into(), self.max_path_length.to_string()),
            ("peak_live_nodes".into(), self.peak_live_nodes.to_string()),
            ("restarts".into(), self.restarts.to_string()),
            ("steps".into(), self.steps.to_string()),
            ("successors".into(), self.successors_created.to_string()),
        ];
        for (k, v) in &self.rules {
            out.push((format!("rule.{k}"), v.to_string()));
        }
        out.sort();
        out
    }

    /// Folds the counters of a sub-run into this one.
    pub fn absorb(&mut self, o: &EngineStats) {
        for (k, v) in &o.rules {
            *self.rules.entry(k).or_default() += v;
        }
        self.peak_live_nodes = self.peak_live_nodes.max(o.peak_live_nodes);
        self.max_path_length = self.max_path_length.max(o.max_path_length);
        self.max_out_degree = self.max_out_degree.max(o.max_out_degree);
        self.restarts += o.restarts;
        self.blocks_established += o.blocks_established;
        self.steps += o.steps;
        self.successors_created += o.successors_created;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub stats: EngineStats,
    pub dump: Option<String>,
}

impl Verdict {
    pub fn unknown(reason: &str) -> Self {
        Verdict {
            outcome: Outcome::Unknown(reason.to_string()),
            stats: EngineStats::default(),
            dump: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Abort {
    StepLimit,
}

/// Per-run bookkeeping: step budget, live node count and statistics.
#[derive(Debug)]
pub struct Run {
    pub stats: EngineStats,
    pub mode: Mode,
    limit: u64,
    live: usize,
}

impl Run {
    pub fn new(cfg: &Config) -> Self {
        Run {
            stats: EngineStats::default(),
            mode: cfg.mode,
            limit: cfg.step_limit,
            live: 0,
        }
    }

    pub fn rule(&mut self, name: &'static str) -> Result<(), Abort> {
        *self.stats.rules.entry(name).or_default() += 1;
        self.tick()
    }

    pub fn tick(&mut self) -> Result<(), Abort> {
        self.stats.steps += 1;
        if self.stats.steps > self.limit {
            Err(Abort::StepLimit)
        } else {
            Ok(())
        }
    }

    pub fn node_created(&mut self, depth: usize) {
        self.live += 1;
        if depth > 0 {
            self.stats.successors_created += 1;
        }
        self.stats.peak_live_nodes = self.stats.peak_live_nodes.max(self.live);
        self.stats.max_path_length = self.stats.max_path_length.max(depth);
    }

    pub fn nodes_dropped(&mut self, n: usize) {
        self.live -= n;
    }

    pub fn set_live(&mut self, n: usize) {
        self.live = n;
        self.stats.peak_live_nodes = self.stats.peak_live_nodes.max(n);
    }

    pub fn out_degree(&mut self, d: usize) {
        self.stats.max_out_degree = self.stats.max_out_degree.max(d);
    }

    pub fn finish(self, r: Result<Outcome, Abort>) -> Verdict {
        Verdict {
            outcome: r.unwrap_or_else(|Abort::StepLimit| Outcome::Unknown("step-limit".into())),
            stats: self.stats,
            dump: None,
        }
    }
}

pub type Id = usize;
pub type Label = FixedBitSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Top,
    Bottom,
    Atom(String),
    NotAtom(String),
    And(Vec<Id>),
    Or(Vec<Id>),
    All(usize, Id),
    Some(usize, Id),
    AtLeast(BigUint, usize, Id),
    AtMost(BigUint, usize, Id),
}

/// A closed set of NNF concepts, interned. Every member's complement and
/// subconcepts are members; with a role box, so are the `∀T.D` variants; with
/// a simple TBox, the definitions of every defined name are members and are
/// added lazily when the name enters a label.
#[derive(Clone, Debug)]
pub struct ConceptTable {
    concepts: Vec<Concept>,
    shapes: Vec<Shape>,
    comp: Vec<Id>,
    expand: Vec<Vec<Id>>,
    index: HashMap<Concept, Id>,
    roles: Vec<RoleExpr>,
    role_index: HashMap<RoleExpr, usize>,
}

impl ConceptTable {
    pub fn build(roots: &[Concept], tbox: Option<&SimpleTBox>, rb: Option<&RoleBox>) -> Self {
        let mut members: BTreeSet<Concept> = BTreeSet::new();
        let mut stack: Vec<Concept> = roots.iter().map(nnf).collect();
        while let Some(x) = stack.pop() {
            if members.contains(&x) {
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
            if let (Some(t), Concept::Name(n)) = (tbox, &x) {
                if let Some((_, d)) = t.get(n) {
                    stack.push(d.clone());
                }
            }
            members.insert(x);
        }
        let mut t = ConceptTable {
            concepts: Vec::new(),
            shapes: Vec::new(),
            comp: Vec::new(),
            expand: Vec::new(),
            index: HashMap::new(),
            roles: Vec::new(),
            role_index: HashMap::new(),
        };
        for c in &members {
            t.index.insert(c.clone(), t.concepts.len());
            t.concepts.push(c.clone());
        }
        for i in 0..t.concepts.len() {
            let c = t.concepts[i].clone();
            let shape = t.shape_of(&c);
            t.shapes.push(shape);
            t.comp.push(t.index[&complement_nnf(&c)]);
            let mut ex = Vec::new();
            if let Some(tb) = tbox {
                match &c {
                    Concept::Name(n) => {
                        if let Some((_, d)) = tb.get(n) {
                            ex.push(t.index[d]);
                        }
                    }
                    Concept::Not(a) => {
                        if let Concept::Name(n) = &**a {
                            if let Some((AxiomKind::Equiv, d)) = tb.get(n) {
                                ex.push(t.index[&complement_nnf(d)]);
                            }
                        }
                    }
                    _ => {}
                }
            }
            t.expand.push(ex);
        }
        t
    }

    fn role_id(&mut self, r: &RoleExpr) -> usize {
        if let Some(&i) = self.role_index.get(r) {
            return i;
        }
        let i = self.roles.len();
        self.roles.push(r.clone());
        self.role_index.insert(r.clone(), i);
        i
    }

    fn shape_of(&mut self, c: &Concept) -> Shape {
        match c {
            Concept::Top => Shape::Top,
            Concept::Bottom => Shape::Bottom,
            Concept::Name(n) | Concept::Nominal(n) => Shape::Atom(n.clone()),
            Concept::Not(a) => match &**a {
                Concept::Name(n) | Concept::Nominal(n) => Shape::NotAtom(n.clone()),
                _ => unreachable!("table members are in NNF"),
            },
            Concept::And(cs) => Shape::And(cs.iter().map(|d| self.index[d]).collect()),
            Concept::Or(cs) => Shape::Or(cs.iter().map(|d| self.index[d]).collect()),
            Concept::All(r, d) => Shape::All(self.role_id(r), self.index[&**d]),
            Concept::Some(r, d) => Shape::Some(self.role_id(r), self.index[&**d]),
            Concept::AtLeast(n, r, d) => Shape::AtLeast(n.clone(), self.role_id(r), self.index[&**d]),
            Concept::AtMost(n, r, d) => Shape::AtMost(n.clone(), self.role_id(r), self.index[&**d]),
        }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn id(&self, c: &Concept) -> Option<Id> {
        self.index.get(c).copied()
    }

    pub fn concept(&self, id: Id) -> &Concept {
        &self.concepts[id]
    }

    pub fn shape(&self, id: Id) -> &Shape {
        &self.shapes[id]
    }

    pub fn comp(&self, id: Id) -> Id {
        self.comp[id]
    }

    pub fn role(&self, r: usize) -> &RoleExpr {
        &self.roles[r]
    }

    pub fn roles(&self) -> &[RoleExpr] {
        &self.roles
    }

    /// Id of a role expression, if some member uses it.
    pub fn role_index(&self, r: &RoleExpr) -> Option<usize> {
        self.role_index.get(r).copied()
    }

    /// Atomic role of a role id (engines without role booleans).
    pub fn atom(&self, r: usize) -> &Role {
        self.roles[r].as_role().expect("atomic role")
    }

    pub fn empty_label(&self) -> Label {
        FixedBitSet::with_capacity(self.len())
    }

    /// Whether `l` contains `⊥` or a complementary pair.
    pub fn has_clash(&self, l: &Label) -> bool {
        l.ones().any(|i| self.shapes[i] == Shape::Bottom || l.contains(self.comp[i]))
    }

    /// Adds `id` and closes under `⊓` and lazy unfolding. Returns false on a clash.
    pub fn add(&self, l: &mut Label, id: Id, run: &mut Run) -> Result<bool, Abort> {
        let mut work = vec![id];
        let mut ok = true;
        while let Some(x) = work.pop() {
            if l.contains(x) {
                continue;
            }
            l.insert(x);
            if self.shapes[x] == Shape::Bottom || l.contains(self.comp[x]) {
                ok = false;
            }
            if let Shape::And(cs) = &self.shapes[x] {
                run.rule("and")?;
                work.extend(cs.iter().copied());
            }
            if !self.expand[x].is_empty() {
                run.rule("unfold")?;
                work.extend(self.expand[x].iter().copied());
            }
        }
        Ok(ok)
    }

    pub fn add_all(&self, l: &mut Label, ids: &[Id], run: &mut Run) -> Result<bool, Abort> {
        let mut ok = true;
        for &i in ids {
            ok &= self.add(l, i, run)?;
        }
        Ok(ok)
    }

    /// First disjunction in `l` none of whose disjuncts is in `l`.
    pub fn open_or(&self, l: &Label) -> Option<Id> {
        l.ones().find(|&i| match &self.shapes[i] {
            Shape::Or(ds) => !ds.iter().any(|&d| l.contains(d)),
            _ => false,
        })
    }

    /// Iterates the clash-free propositional completions of `init`.
    pub fn saturations(&self, init: Label) -> Saturations<'_> {
        Saturations {
            table: self,
            stack: vec![(init, None)],
        }
    }

    pub fn render_label(&self, l: &Label) -> String {
        let xs: Vec<String> = l.ones().map(|i| self.concepts[i].to_string()).collect();
        format!("{{{}}}", xs.join(", "))
    }
}

/// Depth-first enumeration of the choices of the `⊔`-rule at one node.
pub struct Saturations<'a> {
    table: &'a ConceptTable,
    stack: Vec<(Label, Option<(Id, usize)>)>,
}

impl Saturations<'_> {
    pub fn next(&mut self, run: &mut Run) -> Result<Option<Label>, Abort> {
        while let Some((label, state)) = self.stack.pop() {
            let (or_id, k) = match state {
                Some(s) => s,
                None => match self.table.open_or(&label) {
                    None => return Ok(Some(label)),
                    Some(o) => (o, 0),
                },
            };
            let Shape::Or(ds) = &self.table.shapes[or_id] else {
                unreachable!()
            };
            if k >= ds.len() {
                continue;
            }
            let mut child = label.clone();
            self.stack.push((label, Some((or_id, k + 1))));
            run.rule("or")?;
            if self.table.add(&mut child, ds[k], run)? {
                self.stack.push((child, None));
            }
        }
        Ok(None)
    }
}

/// Rewrites `∃R.D` as `≥1 R.D` and `∀R.D` as `≤0 R.~D` throughout.
pub fn counting_form(c: &Concept) -> Concept {
    let c = nnf(c);
    fn go(c: &Concept) -> Concept {
        match c {
            Concept::Some(r, d) => Concept::AtLeast(BigUint::one(), r.clone(), Box::new(go(d))),
            Concept::All(r, d) => {
                Concept::AtMost(BigUint::zero(), r.clone(), Box::new(go(&complement_nnf(d))))
            }
            Concept::And(cs) => Concept::And(cs.iter().map(go).collect()),
            Concept::Or(cs) => Concept::Or(cs.iter().map(go).collect()),
            Concept::AtLeast(n, r, d) => Concept::AtLeast(n.clone(), r.clone(), Box::new(go(d))),
            Concept::AtMost(n, r, d) => Concept::AtMost(n.clone(), r.clone(), Box::new(go(d))),
            _ => c.clone(),
        }
    }
    go(&c)
}

pub fn counting_tbox(t: &SimpleTBox) -> SimpleTBox {
    SimpleTBox {
        defs: t
            .defs
            .iter()
            .map(|(n, (k, d))| (n.clone(), (*k, counting_form(d))))
            .collect(),
        order: t.order.clone(),
    }
}

/// Reads an interpretation off a set of labelled elements and role edges.
pub struct ModelBuilder<'a> {
    table: &'a ConceptTable,
    labels: Vec<Label>,
    edges: Vec<(usize, usize, Role)>,
}

impl<'a> ModelBuilder<'a> {
    pub fn new(table: &'a ConceptTable) -> Self {
        ModelBuilder {
            table,
            labels: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn element(&mut self, l: Label) -> usize {
        self.labels.push(l);
        self.labels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Relates `a` to `b` by `r`; an inverse role is stored as the flipped pair.
    pub fn edge(&mut self, a: usize, b: usize, r: &Role) {
        self.edges.push((a, b, r.clone()));
    }

    /// Builds the interpretation. Positive atoms in a label give the concept
    /// extensions, transitive roles and the hierarchy are closed, and names
    /// defined by equality are recomputed from their definitions.
    pub fn finish(
        self,
        sig: &SignatureView,
        tbox: Option<&SimpleTBox>,
        rb: &RoleBox,
    ) -> Interpretation {
        let mut i = Interpretation::new(self.labels.len());
        i.cover(sig);
        for (e, l) in self.labels.iter().enumerate() {
            for id in l.ones() {
                if let (Shape::Atom(n), Concept::Name(_)) = (self.table.shape(id), self.table.concept(id)) {
                    i.concepts.entry(n.clone()).or_default().insert(e);
                }
            }
        }
        for (a, b, r) in &self.edges {
            let pair = if r.inverted { (*b, *a) } else { (*a, *b) };
            i.roles.entry(r.base.clone()).or_default().insert(pair);
        }
        close_roles(&mut i, rb);
        if let Some(t) = tbox {
            for n in &t.order {
                if let Some((AxiomKind::Equiv, d)) = t.get(n) {
                    if let Ok(ext) = evaluate_concept(&i, d) {
                        i.concepts.insert(n.clone(), ext);
                    }
                }
            }
        }
        i
    }
}

/// Closes role extensions under the inclusions and transitivity of `rb`.
pub fn close_roles(i: &mut Interpretation, rb: &RoleBox) {
    loop {
        let mut changed = false;
        for (r, s) in &rb.inclusions {
            let src: Vec<(usize, usize)> = i
                .roles
                .get(&r.base)
                .map(|e| e.iter().copied().collect())
                .unwrap_or_default();
            let flip = r.inverted != s.inverted;
            let dst = i.roles.entry(s.base.clone()).or_default();
            for (a, b) in src {
                let p = if flip { (b, a) } else { (a, b) };
                changed |= dst.insert(p);
            }
        }
        for t in &rb.transitive {
            let ext = i.roles.entry(t.clone()).or_default();
            loop {
                let add: Vec<(usize, usize)> = ext
                    .iter()
                    .flat_map(|&(a, b)| {
                        ext.iter()
                            .filter(move |&&(b2, _)| b2 == b)
                            .map(move |&(_, c)| (a, c))
                    })
                    .filter(|p| !ext.contains(p))
                    .collect();
                if add.is_empty() {
                    break;
                }
                changed = true;
                ext.extend(add);
            }
        }
        if !changed {
            break;
        }
    }
}

/// One node of a completion-tree outline.
#[derive(Clone, Debug)]
pub struct DumpNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub edge: String,
    pub label: String,
    pub status: String,
}

/// Indented text outline of a tree, children in id order.
pub fn dump_tree(nodes: &[DumpNode]) -> String {
    let mut kids: BTreeMap<Option<usize>, Vec<&DumpNode>> = BTreeMap::new();
    for n in nodes {
        kids.entry(n.parent).or_default().push(n);
    }
    let mut out = String::new();
    fn go(
        n: &DumpNode,
        depth: usize,
        kids: &BTreeMap<Option<usize>, Vec<&DumpNode>>,
        out: &mut String,
    ) {
        let pad = "  ".repeat(depth);
        let edge = if n.parent.is_some() {
            format!(" via {}", n.edge)
        } else {
            String::new()
        };
        out.push_str(&format!("{pad}node {}{edge} [{}] {}\n", n.id, n.status, n.label));
        for k in kids.get(&Some(n.id)).into_iter().flatten() {
            go(k, depth + 1, kids, out);
        }
    }
    for r in kids.get(&None).cloned().unwrap_or_default() {
        go(r, 0, &kids, &mut out);
    }
    out
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Model(i) => write!(f, "{i}"),
            Witness::Tree(t) => f.write_str(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

/// Rejects the first subconcept `ok` refuses.
pub fn require(
    cs: &[&Concept],
    what: &str,
    ok: impl Fn(&Concept) -> bool,
) -> Result<(), EngineError> {
    for c in cs {
        for x in crate::syntax::subconcepts(c) {
            if !ok(&x) {
                return Err(EngineError::Unsupported(format!("{x} is outside {what}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_concept;

    fn c(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    #[test]
    fn table_is_closed() {
        let t = ConceptTable::build(&[c("(and A (or B (some R (not A))))")], None, None);
        for i in 0..t.len() {
            assert_eq!(t.comp(t.comp(i)), i);
        }
        assert!(t.id(&c("(all R A)")).is_some());
    }

    #[test]
    fn saturations_in_order() {
        let t = ConceptTable::build(&[c("(and (or A B) (or (not A) C))")], None, None);
        let mut run = Run::new(&Config::default());
        let mut l = t.empty_label();
        assert!(t.add(&mut l, t.id(&c("(and (or A B) (or (not A) C))")).unwrap(), &mut run).unwrap());
        let mut it = t.saturations(l);
        let mut seen = Vec::new();
        while let Some(s) = it.next(&mut run).unwrap() {
            let atoms: Vec<String> = s
                .ones()
                .filter(|&i| t.concept(i).is_literal())
                .map(|i| t.concept(i).to_string())
                .collect();
            seen.push(atoms.join(" "));
        }
        assert_eq!(seen, vec!["A C", "B (not A)", "B C"]);
    }

    #[test]
    fn lazy_unfolding_adds_definitions() {
        let tb = crate::kb::parse_problem("(define-concept P (and H (some c H)))").unwrap().tbox;
        let st = SimpleTBox::from_tbox(&tb).unwrap();
        let t = ConceptTable::build(&[c("(and P (all c (not H)))")], Some(&st), None);
        let mut run = Run::new(&Config::default());
        let mut l = t.empty_label();
        t.add(&mut l, t.id(&c("(not P)")).unwrap(), &mut run).unwrap();
        assert!(l.contains(t.id(&c("(or (not H) (all c (not H)))")).unwrap()));
    }

    #[test]
    fn counting_form_rewrites() {
        assert_eq!(
            counting_form(&c("(and (some R A) (all R B))")),
            c("(and (>= 1 R A) (<= 0 R (not B)))")
        );
    }

    #[test]
    fn step_limit() {
        let mut run = Run::new(&Config {
            step_limit: 2,
            ..Default::default()
        });
        assert!(run.tick().is_ok());
        assert!(run.tick().is_ok());
        assert_eq!(run.tick(), Err(Abort::StepLimit));
    }
}

