//! Deciders that keep the whole completion tree and stop expansion by blocking:
//! SI with two-label refined blocking and SHIQ with pair-wise blocking.

mod shiq;
mod si;

pub use shiq::decide_shiq;
pub use si::decide_si;

use std::collections::HashMap;

use crate::engine::{ConceptTable, DumpNode, Label, ModelBuilder};
use crate::oracle::Interpretation;
use crate::roles::{Role, RoleBox};
use crate::syntax::SignatureView;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    Open,
    /// Directly blocked by the given ancestor.
    Direct(usize),
    Indirect,
}

impl Status {
    fn text(self) -> String {
        match self {
            Status::Open => "open".into(),
            Status::Direct(b) => format!("blocked by {b}"),
            Status::Indirect => "indirect".into(),
        }
    }
}

/// A live tree node as seen by model extraction and dumps.
pub(crate) struct View<'a> {
    pub id: usize,
    pub parent: Option<usize>,
    pub roles: Vec<Role>,
    pub label: &'a Label,
    pub status: Status,
}

/// Reads a model off the open nodes. An edge into a directly blocked node is
/// redirected to its blocker; roles are then closed under `rb`.
pub(crate) fn fold(t: &ConceptTable, nodes: &[View], sig: &SignatureView, rb: &RoleBox) -> Interpretation {
    let mut mb = ModelBuilder::new(t);
    let mut elem: HashMap<usize, usize> = HashMap::new();
    for n in nodes.iter().filter(|n| n.status == Status::Open) {
        elem.insert(n.id, mb.element(n.label.clone()));
    }
    for n in nodes {
        let Some(p) = n.parent.and_then(|p| elem.get(&p).copied()) else {
            continue;
        };
        let target = match n.status {
            Status::Open => elem[&n.id],
            Status::Direct(b) => elem[&b],
            Status::Indirect => continue,
        };
        for r in &n.roles {
            mb.edge(p, target, r);
        }
    }
    mb.finish(sig, None, rb)
}

pub(crate) fn dump(t: &ConceptTable, nodes: &[View]) -> String {
    let dn: Vec<DumpNode> = nodes
        .iter()
        .map(|n| {
            let rs: Vec<String> = n.roles.iter().map(|r| r.to_string()).collect();
            DumpNode {
                id: n.id,
                parent: n.parent,
                edge: format!("{{{}}}", rs.join(", ")),
                label: t.render_label(n.label),
                status: n.status.text(),
            }
        })
        .collect();
    crate::engine::dump_tree(&dn)
}
