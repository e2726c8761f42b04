//! Deciders that explore one successor at a time and fit in polynomial space
//! in trace mode.

pub mod alc;
pub mod alcq_optimal;
pub mod alcq_standard;
pub mod alcqib;

pub use alc::decide_alc;
pub use alcq_optimal::decide_alcq_optimal;
pub use alcq_standard::decide_alcq_standard;
pub use alcqib::decide_alcqib;

use crate::engine::{
    dump_tree, Abort, Config, ConceptTable, DumpNode, Label, Mode, ModelBuilder, Outcome, Run,
    Verdict, Witness,
};
use crate::kb::SimpleTBox;
use crate::oracle::Interpretation;
use crate::roles::{Role, RoleBox};
use crate::syntax::{Concept, SignatureView};

/// A retained subtree: the node label and its successors, each reached by a
/// set of roles.
#[derive(Clone, Debug)]
pub(crate) struct Sub {
    pub label: Label,
    pub kids: Kids,
}

pub(crate) type Kids = Vec<(Vec<Role>, Sub)>;

impl Sub {
    pub fn size(&self) -> usize {
        1 + self.kids.iter().map(|(_, k)| k.size()).sum::<usize>()
    }
}

pub(crate) fn extract(
    t: &ConceptTable,
    root: &Sub,
    sig: &SignatureView,
    tbox: Option<&SimpleTBox>,
) -> Interpretation {
    let mut b = ModelBuilder::new(t);
    fn go(b: &mut ModelBuilder, s: &Sub) -> usize {
        let me = b.element(s.label.clone());
        for (rs, k) in &s.kids {
            let child = go(b, k);
            for r in rs {
                b.edge(me, child, r);
            }
        }
        me
    }
    go(&mut b, root);
    b.finish(sig, tbox, &RoleBox::new())
}

pub(crate) fn signature_of(c: &Concept, tbox: Option<&SimpleTBox>) -> SignatureView {
    let mut s = crate::syntax::signature(c);
    if let Some(t) = tbox {
        for (n, (_, d)) in &t.defs {
            s.concept_names.insert(n.clone());
            s.add_concept(d);
        }
    }
    s
}

fn dump_sub(t: &ConceptTable, root: &Sub) -> String {
    let mut nodes = Vec::new();
    fn go(t: &ConceptTable, s: &Sub, parent: Option<usize>, edge: String, nodes: &mut Vec<DumpNode>) {
        let id = nodes.len();
        nodes.push(DumpNode {
            id,
            parent,
            edge,
            label: t.render_label(&s.label),
            status: "open".into(),
        });
        for (rs, k) in &s.kids {
            let names: Vec<String> = rs.iter().map(|r| r.to_string()).collect();
            go(t, k, Some(id), format!("{{{}}}", names.join(", ")), nodes);
        }
    }
    go(t, root, None, String::new(), &mut nodes);
    dump_tree(&nodes)
}

/// Turns the root result into a verdict, extracting a model in model mode.
pub(crate) fn conclude(
    t: &ConceptTable,
    run: Run,
    res: Result<Option<Sub>, Abort>,
    cfg: &Config,
    sig: &SignatureView,
    tbox: Option<&SimpleTBox>,
) -> Verdict {
    let mut dump = None;
    let res = res.map(|r| match r {
        None => Outcome::Unsat,
        Some(sub) if cfg.mode == Mode::Model => {
            if cfg.dump {
                dump = Some(dump_sub(t, &sub));
            }
            Outcome::Sat(Some(Witness::Model(extract(t, &sub, sig, tbox))))
        }
        Some(_) => Outcome::Sat(None),
    });
    let mut v = run.finish(res);
    v.dump = dump;
    v
}
