//! SHIQ satisfiability w.r.t. a role hierarchy. Edges carry role sets, nodes
//! created together by the `≥`-rule are kept apart by the `≠` relation, and a
//! node is blocked when it and its predecessor repeat an ancestor pair.

use std::collections::{BTreeSet, HashMap};

use num_traits::ToPrimitive;

use super::{dump, fold, Status, View};
use crate::engine::{
    require, Abort, Config, ConceptTable, EngineError, Id, Label, Mode, Outcome, Run, Shape,
    Verdict, Witness,
};
use crate::kb::Problem;
use crate::oracle::check;
use crate::roles::{eliminate_cycles, Role, RoleBox, RoleExpr};
use crate::syntax::{nnf, signature, subconcepts, Concept};

#[derive(Clone)]
struct Node {
    parent: Option<usize>,
    edge: BTreeSet<Role>,
    l: Label,
    depth: usize,
    alive: bool,
    kids: Vec<usize>,
    seen_blocked: bool,
}

#[derive(Clone)]
struct Tree {
    nodes: Vec<Node>,
    live: usize,
    neq: BTreeSet<(usize, usize)>,
}

impl Tree {
    fn distinct(&self, a: usize, b: usize) -> bool {
        self.neq.contains(&(a.min(b), a.max(b)))
    }

    /// Whether `k` of `cands` are pairwise distinct.
    fn clique(&self, cands: &[usize], k: usize) -> bool {
        fn go(tr: &Tree, cands: &[usize], k: usize, picked: &mut Vec<usize>) -> bool {
            if picked.len() == k {
                return true;
            }
            if picked.len() + cands.len() < k {
                return false;
            }
            for (i, &c) in cands.iter().enumerate() {
                if picked.iter().all(|&p| tr.distinct(p, c)) {
                    picked.push(c);
                    if go(tr, &cands[i + 1..], k, picked) {
                        return true;
                    }
                    picked.pop();
                }
            }
            false
        }
        go(self, cands, k, &mut Vec::new())
    }
}

enum Step {
    Changed,
    Clash,
    Branch(Vec<Tree>),
    Done,
}

fn count(n: &num_bigint::BigUint) -> usize {
    n.to_usize().unwrap_or(usize::MAX)
}

struct Shiq<'a> {
    t: &'a ConceptTable,
    run: Run,
    supers: HashMap<Role, BTreeSet<Role>>,
    /// For each `∀R.D`, the transitive `T ⊑* R` with the id of `∀T.D`.
    plus: HashMap<Id, Vec<(Role, Id)>>,
    bound: Option<usize>,
    events: Vec<String>,
}

impl Shiq<'_> {
    fn role(&self, r: usize) -> Role {
        self.t.atom(r).clone()
    }

    fn below(&self, s: &Role, r: &Role) -> bool {
        s == r || self.supers.get(s).is_some_and(|u| u.contains(r))
    }

    fn has_below(&self, edge: &BTreeSet<Role>, r: &Role) -> bool {
        edge.iter().any(|s| self.below(s, r))
    }

    /// `R`-neighbours of `x` in id order.
    fn neighbours(&self, tr: &Tree, x: usize, r: &Role) -> Vec<usize> {
        let n = &tr.nodes[x];
        let mut out = Vec::new();
        if let Some(p) = n.parent {
            if self.has_below(&n.edge, &r.inv()) {
                out.push(p);
            }
        }
        for &y in &n.kids {
            if self.has_below(&tr.nodes[y].edge, r) {
                out.push(y);
            }
        }
        out
    }

    fn with(&self, tr: &Tree, x: usize, r: &Role, d: Id) -> Vec<usize> {
        self.neighbours(tr, x, r)
            .into_iter()
            .filter(|&y| tr.nodes[y].l.contains(d))
            .collect()
    }

    fn statuses(&mut self, tr: &mut Tree) -> Vec<Status> {
        let mut st = vec![Status::Indirect; tr.nodes.len()];
        for x in 0..tr.nodes.len() {
            let n = &tr.nodes[x];
            if !n.alive {
                continue;
            }
            let Some(p) = n.parent else {
                st[x] = Status::Open;
                continue;
            };
            if st[p] != Status::Open || n.edge.is_empty() {
                continue;
            }
            st[x] = Status::Open;
            let mut y = p;
            while let Some(yp) = tr.nodes[y].parent {
                let ny = &tr.nodes[y];
                if ny.l == n.l && ny.edge == n.edge && tr.nodes[yp].l == tr.nodes[p].l {
                    st[x] = Status::Direct(y);
                    break;
                }
                y = yp;
            }
            if let Status::Direct(y) = st[x] {
                if !tr.nodes[x].seen_blocked {
                    tr.nodes[x].seen_blocked = true;
                    self.run.stats.blocks_established += 1;
                    let yp = tr.nodes[y].parent.unwrap();
                    self.events.push(format!("block {x} by {y} (pair {p}->{x} ~ {yp}->{y})"));
                }
            }
        }
        st
    }

    fn new_node(&mut self, tr: &mut Tree, parent: Option<usize>, edge: BTreeSet<Role>, d: Id) -> Result<(usize, bool), Abort> {
        self.run.tick()?;
        let depth = parent.map_or(0, |p| tr.nodes[p].depth + 1);
        if let Some(b) = self.bound {
            debug_assert!(depth <= b, "path longer than 2^(2mk)");
        }
        let mut l = self.t.empty_label();
        let ok = self.t.add(&mut l, d, &mut self.run)?;
        let id = tr.nodes.len();
        debug_assert!(parent.is_none_or(|p| p < id));
        tr.nodes.push(Node {
            parent,
            edge,
            l,
            depth,
            alive: true,
            kids: Vec::new(),
            seen_blocked: false,
        });
        tr.live += 1;
        self.run.node_created(depth);
        if let Some(p) = parent {
            tr.nodes[p].kids.push(id);
            let deg = tr.nodes[p].kids.len();
            self.run.out_degree(deg);
        }
        Ok((id, ok))
    }

    fn remove(&mut self, tr: &mut Tree, y: usize) {
        if let Some(p) = tr.nodes[y].parent {
            tr.nodes[p].kids.retain(|&k| k != y);
        }
        let mut stack = vec![y];
        while let Some(u) = stack.pop() {
            if tr.nodes[u].alive {
                tr.nodes[u].alive = false;
                tr.live -= 1;
                stack.append(&mut tr.nodes[u].kids);
            }
        }
        self.run.set_live(tr.live);
    }

    /// Merges the successor `y` of `x` into the neighbour `z`.
    fn merge(&mut self, tr: &mut Tree, x: usize, y: usize, z: usize) -> Result<bool, Abort> {
        debug_assert!(!tr.distinct(y, z), "merging nodes related by the inequality");
        debug_assert_eq!(tr.nodes[y].parent, Some(x));
        let ly: Vec<Id> = tr.nodes[y].l.ones().collect();
        let ok = self.t.add_all(&mut tr.nodes[z].l, &ly, &mut self.run)?;
        let ey = std::mem::take(&mut tr.nodes[y].edge);
        if tr.nodes[x].parent == Some(z) {
            tr.nodes[x].edge.extend(ey.iter().map(Role::inv));
        } else {
            tr.nodes[z].edge.extend(ey);
        }
        let others: Vec<usize> = tr
            .neq
            .iter()
            .filter_map(|&(a, b)| if a == y { Some(b) } else if b == y { Some(a) } else { None })
            .collect();
        for u in others {
            tr.neq.insert((u.min(z), u.max(z)));
        }
        self.remove(tr, y);
        debug_assert!(tr
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive)
            .all(|(i, n)| n.parent.is_none_or(|p| tr.nodes[p].alive && tr.nodes[p].kids.contains(&i))));
        Ok(ok)
    }

    fn le_clash(&self, tr: &Tree) -> bool {
        for (x, n) in tr.nodes.iter().enumerate() {
            if !n.alive {
                continue;
            }
            for i in n.l.ones() {
                if let Shape::AtMost(m, r, d) = self.t.shape(i) {
                    let ys = self.with(tr, x, &self.role(*r), *d);
                    let m = count(m);
                    if ys.len() > m && tr.clique(&ys, m + 1) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn step(&mut self, tr: &mut Tree) -> Result<Step, Abort> {
        if self.le_clash(tr) {
            return Ok(Step::Clash);
        }
        let n = tr.nodes.len();
        for x in 0..n {
            if !tr.nodes[x].alive {
                continue;
            }
            if let Some(o) = self.t.open_or(&tr.nodes[x].l) {
                self.run.rule("or")?;
                let Shape::Or(ds) = self.t.shape(o) else { unreachable!() };
                let mut alts = Vec::new();
                for &d in ds {
                    let mut c = tr.clone();
                    if self.t.add(&mut c.nodes[x].l, d, &mut self.run)? {
                        alts.push(c);
                    }
                }
                return Ok(Step::Branch(alts));
            }
        }
        let st = self.statuses(tr);
        let restrictions = |t: &ConceptTable, l: &Label| -> Vec<(Id, bool, usize, usize, Id)> {
            l.ones()
                .filter_map(|i| match t.shape(i) {
                    Shape::AtLeast(m, r, d) => Some((i, true, count(m), *r, *d)),
                    Shape::AtMost(m, r, d) => Some((i, false, count(m), *r, *d)),
                    _ => None,
                })
                .collect()
        };
        for x in 0..n {
            if !tr.nodes[x].alive || st[x] == Status::Indirect {
                continue;
            }
            for (_, _, _, r, d) in restrictions(self.t, &tr.nodes[x].l) {
                let nd = self.t.comp(d);
                let open = self
                    .neighbours(tr, x, &self.role(r))
                    .into_iter()
                    .find(|&y| !tr.nodes[y].l.contains(d) && !tr.nodes[y].l.contains(nd));
                if let Some(y) = open {
                    self.run.rule("choose")?;
                    let mut alts = Vec::new();
                    for e in [d, nd] {
                        let mut c = tr.clone();
                        if self.t.add(&mut c.nodes[y].l, e, &mut self.run)? {
                            alts.push(c);
                        }
                    }
                    return Ok(Step::Branch(alts));
                }
            }
        }
        for x in 0..n {
            if !tr.nodes[x].alive || st[x] == Status::Indirect {
                continue;
            }
            for (_, ge, m, r, d) in restrictions(self.t, &tr.nodes[x].l) {
                if ge || m == 0 {
                    continue;
                }
                let ys = self.with(tr, x, &self.role(r), d);
                if ys.len() <= m {
                    continue;
                }
                self.run.rule("le")?;
                let mut alts = Vec::new();
                for &y in ys.iter().rev() {
                    if tr.nodes[y].parent != Some(x) {
                        continue;
                    }
                    for &z in &ys {
                        if z == y || tr.distinct(y, z) {
                            continue;
                        }
                        let mut c = tr.clone();
                        if self.merge(&mut c, x, y, z)? {
                            alts.push(c);
                        }
                    }
                }
                return Ok(Step::Branch(alts));
            }
        }
        for x in 0..n {
            if !tr.nodes[x].alive || st[x] == Status::Indirect {
                continue;
            }
            let alls: Vec<(Id, usize, Id)> = tr.nodes[x]
                .l
                .ones()
                .filter_map(|i| match self.t.shape(i) {
                    Shape::All(r, d) => Some((i, *r, *d)),
                    _ => None,
                })
                .collect();
            for &(_, r, d) in &alls {
                let target = self
                    .neighbours(tr, x, &self.role(r))
                    .into_iter()
                    .find(|&y| !tr.nodes[y].l.contains(d));
                if let Some(y) = target {
                    self.run.rule("all")?;
                    let ok = self.t.add(&mut tr.nodes[y].l, d, &mut self.run)?;
                    return Ok(if ok { Step::Changed } else { Step::Clash });
                }
            }
            for &(i, _, _) in &alls {
                for (tr_role, j) in self.plus.get(&i).cloned().unwrap_or_default() {
                    let target = self
                        .neighbours(tr, x, &tr_role)
                        .into_iter()
                        .find(|&y| !tr.nodes[y].l.contains(j));
                    if let Some(y) = target {
                        self.run.rule("all+")?;
                        let ok = self.t.add(&mut tr.nodes[y].l, j, &mut self.run)?;
                        return Ok(if ok { Step::Changed } else { Step::Clash });
                    }
                }
            }
        }
        for x in 0..n {
            if !tr.nodes[x].alive || st[x] != Status::Open {
                continue;
            }
            let somes: Vec<(usize, Id)> = tr.nodes[x]
                .l
                .ones()
                .filter_map(|i| match self.t.shape(i) {
                    Shape::Some(r, d) => Some((*r, *d)),
                    _ => None,
                })
                .collect();
            for (r, d) in somes {
                let role = self.role(r);
                if self.with(tr, x, &role, d).is_empty() {
                    self.run.rule("some")?;
                    let (_, ok) = self.new_node(tr, Some(x), BTreeSet::from([role]), d)?;
                    return Ok(if ok { Step::Changed } else { Step::Clash });
                }
            }
            for (_, ge, m, r, d) in restrictions(self.t, &tr.nodes[x].l) {
                if !ge {
                    continue;
                }
                let role = self.role(r);
                if tr.clique(&self.with(tr, x, &role, d), m) {
                    continue;
                }
                self.run.rule("ge")?;
                let mut fresh = Vec::new();
                let mut ok = true;
                for _ in 0..m {
                    let (id, o) = self.new_node(tr, Some(x), BTreeSet::from([role.clone()]), d)?;
                    ok &= o;
                    fresh.push(id);
                }
                for (a, &u) in fresh.iter().enumerate() {
                    for &v in &fresh[a + 1..] {
                        tr.neq.insert((u, v));
                    }
                }
                return Ok(if ok { Step::Changed } else { Step::Clash });
            }
        }
        Ok(Step::Done)
    }

    fn search(&mut self, root: Id) -> Result<Option<(Tree, Vec<Status>)>, Abort> {
        let mut tr = Tree {
            nodes: Vec::new(),
            live: 0,
            neq: BTreeSet::new(),
        };
        let mut stack = Vec::new();
        if self.new_node(&mut tr, None, BTreeSet::new(), root)?.1 {
            stack.push(tr);
        } else {
            self.run.rule("clash")?;
        }
        while let Some(mut tr) = stack.pop() {
            self.run.set_live(tr.live);
            loop {
                match self.step(&mut tr)? {
                    Step::Changed => {}
                    Step::Clash => {
                        self.run.rule("clash")?;
                        break;
                    }
                    Step::Branch(alts) => {
                        stack.extend(alts.into_iter().rev());
                        break;
                    }
                    Step::Done => {
                        let st = self.statuses(&mut tr);
                        return Ok(Some((tr, st)));
                    }
                }
            }
        }
        Ok(None)
    }
}

pub(crate) fn is_shiq(c: &Concept) -> bool {
    match c {
        Concept::Nominal(_) => false,
        _ => c.role_expr().is_none_or(|r| r.as_role().is_some()),
    }
}

/// Decides satisfiability of `c` w.r.t. the role hierarchy and transitivity
/// axioms of `rb`. In model mode a SAT verdict carries the model read off the
/// tree when it checks, and the tree itself otherwise.
pub fn decide_shiq(c: &Concept, rb: &RoleBox, cfg: &Config) -> Result<Verdict, EngineError> {
    require(&[c], "SHIQ", is_shiq)?;
    let (rbx, cx) = if rb.is_cycle_free() {
        (rb.clone(), c.clone())
    } else {
        eliminate_cycles(rb, c)
    };
    for x in subconcepts(&cx) {
        if let Concept::AtLeast(_, r, _) | Concept::AtMost(_, r, _) = &x {
            if r.as_role().is_some_and(|r| !rbx.is_simple(r)) {
                return Err(EngineError::Unsupported(format!("{x} restricts a non-simple role")));
            }
        }
    }
    let root = nnf(&cx);
    let t = ConceptTable::build(std::slice::from_ref(&root), None, Some(&rbx));
    let mut universe: BTreeSet<Role> = rbx.roles();
    for e in t.roles() {
        for a in e.atoms() {
            universe.insert(a.inv());
            universe.insert(a);
        }
    }
    let supers = universe.iter().map(|r| (r.clone(), rbx.supers(r))).collect();
    let mut plus = HashMap::new();
    for i in 0..t.len() {
        if let Shape::All(r, _) = t.shape(i) {
            let Concept::All(_, d) = t.concept(i) else { unreachable!() };
            let list: Vec<(Role, Id)> = rbx
                .subs_in(t.atom(*r), &universe)
                .into_iter()
                .filter(|s| rbx.is_transitive(s))
                .filter_map(|s| {
                    let id = t.id(&Concept::All(RoleExpr::Atom(s.clone()), d.clone()))?;
                    Some((s, id))
                })
                .collect();
            plus.insert(i, list);
        }
    }
    let m = t.len();
    let k = subconcepts(&root)
        .iter()
        .filter_map(|x| match x {
            Concept::AtLeast(n, ..) | Concept::AtMost(n, ..) => Some(count(n)),
            _ => None,
        })
        .max()
        .unwrap_or(1)
        .max(1);
    let exp = 2usize.saturating_mul(m).saturating_mul(k);
    let mut e = Shiq {
        t: &t,
        run: Run::new(cfg),
        supers,
        plus,
        bound: (exp < 63).then(|| 1usize << exp),
        events: Vec::new(),
    };
    let res = e.search(t.id(&root).unwrap());
    let mut text = None;
    let res = res.map(|r| match r {
        None => Outcome::Unsat,
        Some((tr, st)) => {
            let views: Vec<View> = tr
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.alive)
                .map(|(id, n)| View {
                    id,
                    parent: n.parent,
                    roles: n.edge.iter().cloned().collect(),
                    label: &n.l,
                    status: st[id],
                })
                .collect();
            let tree = dump(&t, &views);
            if cfg.dump {
                text = Some(tree.clone());
            }
            if cfg.mode == Mode::Model {
                let mut sig = signature(c);
                for r in rb.roles() {
                    sig.role_names.insert(r.base);
                }
                let m = fold(&t, &views, &sig, rb);
                let p = Problem {
                    rbox: rb.clone(),
                    ..Problem::concept_sat(c.clone())
                };
                let w = if check(&m, &p) { Witness::Model(m) } else { Witness::Tree(tree) };
                Outcome::Sat(Some(w))
            } else {
                Outcome::Sat(None)
            }
        }
    });
    if cfg.dump {
        let mut s = text.unwrap_or_default();
        for ev in &e.events {
            s.push_str(ev);
            s.push('\n');
        }
        text = Some(s);
    }
    let mut v = e.run.finish(res);
    v.dump = text;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_concept;

    fn rbox(trans: &[&str], incl: &[(&str, &str)]) -> RoleBox {
        let mut rb = RoleBox::new();
        for t in trans {
            rb.add_transitive(*t);
        }
        for (a, b) in incl {
            rb.add_inclusion(Role::new(*a), Role::new(*b));
        }
        rb
    }

    fn run(s: &str, rb: &RoleBox, mode: Mode) -> Verdict {
        decide_shiq(&parse_concept(s).unwrap(), rb, &Config { mode, ..Default::default() }).unwrap()
    }

    #[test]
    fn pairwise_blocking_example() {
        let rb = rbox(&["R"], &[("F", "R")]);
        let d = "(and A (<= 1 F top) (some F (not A)))";
        let c = format!("(and (not A) (<= 1 F top) (some (inv F) {d}) (all (inv R) (some (inv F) {d})))");
        assert!(run(&c, &rb, Mode::Trace).outcome.is_unsat());
    }

    #[test]
    fn counting() {
        let rb = RoleBox::new();
        assert!(run("(and (>= 2 S A) (<= 1 S A))", &rb, Mode::Trace).outcome.is_unsat());
        assert!(run("(and (>= 2 S A) (<= 2 S top))", &rb, Mode::Trace).outcome.is_sat());
        assert!(run("(and (>= 3 R A) (<= 1 R B) (<= 1 R (not B)))", &rb, Mode::Trace).outcome.is_unsat());
        assert!(run("(and (some S A) (some S B) (<= 1 S top) (all S (not (and A B))))", &rb, Mode::Trace)
            .outcome
            .is_unsat());
    }

    #[test]
    fn merge_into_predecessor() {
        let rb = RoleBox::new();
        let s = "(and A (some R (and (<= 1 (inv R) top) (some (inv R) (not A)))))";
        assert!(run(s, &rb, Mode::Trace).outcome.is_unsat());
        let s = "(and A (some R (and (<= 1 (inv R) top) (some (inv R) B))))";
        let v = run(s, &rb, Mode::Model);
        let m = v.outcome.model().expect("folded model");
        assert_eq!(m.domain_size, 2);
    }

    #[test]
    fn hierarchy_and_transitivity() {
        let rb = rbox(&["T"], &[("R", "T")]);
        assert!(run("(and (some R (some R A)) (all T (not A)))", &rb, Mode::Trace).outcome.is_unsat());
        let v = run("(and (some R top) (all T (some R top)))", &rb, Mode::Model);
        assert!(v.stats.blocks_established >= 1);
        assert!(v.outcome.model().is_some());
    }

    #[test]
    fn rejects_counts_on_transitive_roles() {
        let rb = rbox(&["R"], &[]);
        assert!(decide_shiq(&parse_concept("(<= 1 R A)").unwrap(), &rb, &Config::default()).is_err());
    }
}
