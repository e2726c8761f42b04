//! Description-logic satisfiability: concept syntax, role hierarchies,
//! knowledge-base reductions, tableau engines and a bounded model oracle.

pub mod blocking;
pub mod engine;
pub mod kb;
pub mod oracle;
pub mod precomplete;
pub mod pspace;
pub mod query;
pub mod reductions;
pub mod report;
pub mod roles;
pub mod sexpr;
pub mod syntax;

pub use kb::{Logic, Problem, Query};
pub use roles::{Role, RoleBox, RoleExpr};
pub use syntax::{parse_concept, render_concept, Concept};
