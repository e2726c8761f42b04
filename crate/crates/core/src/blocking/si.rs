//! SI satisfiability. Every node carries its label `L` and the label `B` of
//! concepts it was created for or received from its predecessor; a node is
//! blocked by an ancestor whose label covers `B` and agrees on the universal
//! restrictions pointing back along the entering edge. Upward propagation
//! discards the subtree below the receiving node.

use std::collections::BTreeSet;

use super::{dump, fold, Status, View};
use crate::engine::{
    require, Abort, Config, ConceptTable, EngineError, Id, Label, Mode, Outcome, Run, Shape,
    Verdict, Witness,
};
use crate::roles::{Role, RoleBox};
use crate::syntax::{nnf, signature, subconcepts, Concept};

#[derive(Clone)]
struct Node {
    parent: Option<usize>,
    edge: Option<Role>,
    l: Label,
    b: Label,
    depth: usize,
    alive: bool,
    kids: Vec<usize>,
    seen_blocked: bool,
}

#[derive(Clone)]
struct Tree {
    nodes: Vec<Node>,
    live: usize,
}

enum Step {
    Changed,
    Clash,
    Branch(Vec<Tree>),
    Done,
}

struct Si<'a> {
    t: &'a ConceptTable,
    run: Run,
    trans: &'a BTreeSet<String>,
    bound: usize,
    events: Vec<String>,
}

impl Si<'_> {
    fn role(&self, r: usize) -> Role {
        self.t.atom(r).clone()
    }

    fn delete_below(&mut self, tr: &mut Tree, p: usize) {
        let mut stack = std::mem::take(&mut tr.nodes[p].kids);
        while let Some(y) = stack.pop() {
            if tr.nodes[y].alive {
                tr.nodes[y].alive = false;
                tr.live -= 1;
                stack.append(&mut tr.nodes[y].kids);
            }
        }
        self.run.set_live(tr.live);
    }

    /// `L/S`: the universal restrictions along `s` in `l`.
    fn along(&self, l: &Label, s: &Role) -> Vec<Id> {
        l.ones()
            .filter(|&i| matches!(self.t.shape(i), Shape::All(r, _) if self.t.atom(*r) == s))
            .collect()
    }

    fn statuses(&mut self, tr: &mut Tree) -> Vec<Status> {
        let mut st = vec![Status::Indirect; tr.nodes.len()];
        for y in 0..tr.nodes.len() {
            let n = &tr.nodes[y];
            if !n.alive {
                continue;
            }
            let Some(p) = n.parent else {
                st[y] = Status::Open;
                continue;
            };
            if st[p] != Status::Open {
                continue;
            }
            let back = n.edge.as_ref().unwrap().inv();
            let mine = self.along(&n.l, &back);
            let mut a = Some(p);
            st[y] = Status::Open;
            while let Some(x) = a {
                let nx = &tr.nodes[x];
                if n.b.is_subset(&nx.l) && self.along(&nx.l, &back) == mine {
                    st[y] = Status::Direct(x);
                    break;
                }
                a = nx.parent;
            }
            if let Status::Direct(x) = st[y] {
                if !tr.nodes[y].seen_blocked {
                    tr.nodes[y].seen_blocked = true;
                    self.run.stats.blocks_established += 1;
                    self.events.push(format!("block {y} by {x}"));
                }
            }
        }
        st
    }

    fn new_node(&mut self, tr: &mut Tree, parent: Option<usize>, edge: Option<Role>, d: Id) -> Result<bool, Abort> {
        let depth = parent.map_or(0, |p| tr.nodes[p].depth + 1);
        debug_assert!(depth <= self.bound, "path longer than m^4");
        let mut l = self.t.empty_label();
        let ok = self.t.add(&mut l, d, &mut self.run)?;
        let mut b = self.t.empty_label();
        b.insert(d);
        let id = tr.nodes.len();
        tr.nodes.push(Node {
            parent,
            edge,
            l,
            b,
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
        Ok(ok)
    }

    fn step(&mut self, tr: &mut Tree) -> Result<Step, Abort> {
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
        for x in 0..n {
            if !tr.nodes[x].alive {
                continue;
            }
            let alls: Vec<(Id, Role, Id)> = tr.nodes[x]
                .l
                .ones()
                .filter_map(|i| match self.t.shape(i) {
                    Shape::All(r, d) => Some((i, self.role(*r), *d)),
                    _ => None,
                })
                .collect();
            for (i, r, d) in alls {
                let trans = self.trans.contains(&r.base);
                let kids = tr.nodes[x].kids.clone();
                for y in kids {
                    if tr.nodes[y].edge.as_ref() != Some(&r) {
                        continue;
                    }
                    for (push, name) in [(d, "all"), (i, "all+")] {
                        if push == i && !trans {
                            continue;
                        }
                        if !tr.nodes[y].b.contains(push) {
                            self.run.rule(name)?;
                            let ny = &mut tr.nodes[y];
                            ny.b.insert(push);
                            let ok = self.t.add(&mut ny.l, push, &mut self.run)?;
                            debug_assert!(ny.b.is_subset(&ny.l));
                            return Ok(if ok { Step::Changed } else { Step::Clash });
                        }
                    }
                }
                let up = tr.nodes[x].edge.as_ref() == Some(&r.inv());
                if let (true, Some(p)) = (up, tr.nodes[x].parent) {
                    for (push, name) in [(d, "all"), (i, "all+")] {
                        if push == i && !trans {
                            continue;
                        }
                        if !tr.nodes[p].l.contains(push) {
                            self.run.rule(name)?;
                            let ok = self.t.add(&mut tr.nodes[p].l, push, &mut self.run)?;
                            self.delete_below(tr, p);
                            return Ok(if ok { Step::Changed } else { Step::Clash });
                        }
                    }
                }
            }
        }
        let st = self.statuses(tr);
        for x in 0..n {
            if !tr.nodes[x].alive || st[x] != Status::Open {
                continue;
            }
            let somes: Vec<(Role, Id)> = tr.nodes[x]
                .l
                .ones()
                .filter_map(|i| match self.t.shape(i) {
                    Shape::Some(r, d) => Some((self.role(*r), *d)),
                    _ => None,
                })
                .collect();
            for (r, d) in somes {
                let nx = &tr.nodes[x];
                let below = nx
                    .kids
                    .iter()
                    .any(|&y| tr.nodes[y].edge.as_ref() == Some(&r) && tr.nodes[y].b.contains(d));
                let above = nx.edge.as_ref() == Some(&r.inv())
                    && nx.parent.is_some_and(|p| tr.nodes[p].b.contains(d));
                if below || above {
                    continue;
                }
                self.run.rule("some")?;
                let ok = self.new_node(tr, Some(x), Some(r), d)?;
                return Ok(if ok { Step::Changed } else { Step::Clash });
            }
        }
        Ok(Step::Done)
    }

    fn search(&mut self, root: Id) -> Result<Option<(Tree, Vec<Status>)>, Abort> {
        let mut tr = Tree {
            nodes: Vec::new(),
            live: 0,
        };
        let mut stack = Vec::new();
        if self.new_node(&mut tr, None, None, root)? {
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

pub(crate) fn is_si(c: &Concept) -> bool {
    match c {
        Concept::Nominal(_) | Concept::AtLeast(..) | Concept::AtMost(..) => false,
        _ => c.role_expr().is_none_or(|r| r.as_role().is_some()),
    }
}

/// Decides satisfiability of `c` where the role names in `trans` are transitive.
pub fn decide_si(c: &Concept, trans: &BTreeSet<String>, cfg: &Config) -> Result<Verdict, EngineError> {
    require(&[c], "SI", is_si)?;
    let mut rb = RoleBox::new();
    for t in trans {
        rb.add_transitive(t.as_str());
    }
    let root = nnf(c);
    let t = ConceptTable::build(std::slice::from_ref(&root), None, Some(&rb));
    let m = subconcepts(&root).len();
    let mut e = Si {
        t: &t,
        run: Run::new(cfg),
        trans,
        bound: m.saturating_pow(4),
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
            if cfg.dump {
                text = Some(dump(&t, &views));
            }
            if cfg.mode == Mode::Model {
                Outcome::Sat(Some(Witness::Model(fold(&t, &views, &signature(c), &rb))))
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
    use crate::kb::Problem;
    use crate::oracle::check;
    use crate::syntax::parse_concept;

    fn run(s: &str, trans: &[&str], mode: Mode) -> Verdict {
        let tr: BTreeSet<String> = trans.iter().map(|s| s.to_string()).collect();
        decide_si(&parse_concept(s).unwrap(), &tr, &Config { mode, ..Default::default() }).unwrap()
    }

    fn problem(s: &str, trans: &[&str]) -> Problem {
        let mut p = Problem::concept_sat(parse_concept(s).unwrap());
        for t in trans {
            p.rbox.add_transitive(*t);
        }
        p
    }

    #[test]
    fn examples() {
        assert!(run("(and (all R A) (some R (some R (not A))))", &["R"], Mode::Trace).outcome.is_unsat());
        assert!(run("(and (all R A) (some R (some R (not A))))", &[], Mode::Trace).outcome.is_sat());
        assert!(run("(and (not A) (some R top) (all R (all (inv R) A)))", &[], Mode::Trace)
            .outcome
            .is_unsat());
        let c = "(all (inv R) (all (inv P) (all (inv S) (not A))))";
        let big = format!(
            "(and A (some S (and (some R top) (some P top) (all R {c}) (all P (some R top)) \
             (all P (all R {c})) (all P (some P top)))))"
        );
        assert!(run(&big, &["P"], Mode::Trace).outcome.is_unsat());
    }

    #[test]
    fn blocking_gives_a_cyclic_model() {
        let s = "(and (some R A) (all R (some R A)))";
        let v = run(s, &["R"], Mode::Model);
        assert!(v.stats.blocks_established >= 1);
        let m = v.outcome.model().unwrap();
        assert!(check(m, &problem(s, &["R"])));
    }

    #[test]
    fn models_check() {
        for (s, tr) in [
            ("(and (some R (and A (some (inv R) B))) (all R (all (inv R) C)))", vec![]),
            ("(and (some R A) (some R (not A)) (all R (some R top)))", vec!["R"]),
            ("(and B (some (inv R) (some (inv R) A)) (all (inv R) (or A (not B))))", vec!["R"]),
        ] {
            let v = run(s, &tr, Mode::Model);
            let m = v.outcome.model().unwrap_or_else(|| panic!("{s} should be satisfiable"));
            assert!(check(m, &problem(s, &tr)), "{s}\n{m}");
        }
    }

    #[test]
    fn dump_lists_blocks() {
        let tr: BTreeSet<String> = ["R".to_string()].into();
        let cfg = Config { dump: true, ..Default::default() };
        let v = decide_si(&parse_concept("(and (some R A) (all R (some R A)))").unwrap(), &tr, &cfg).unwrap();
        let d = v.dump.unwrap();
        assert!(d.contains("blocked by"), "{d}");
        assert!(d.contains("block 2 by 1"), "{d}");
    }

    #[test]
    fn rejects_counting() {
        assert!(decide_si(&parse_concept("(>= 2 R A)").unwrap(), &BTreeSet::new(), &Config::default()).is_err());
    }
}
