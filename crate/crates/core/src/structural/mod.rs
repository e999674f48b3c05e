//! Class and object diagrams, snapshots, snapshot transition systems, and
//! bounded snapshot enumeration.

mod cd;
mod enumerate;
mod snapshot;
mod ts;

pub use cd::{
    parse_cd, parse_od, wellformed_cd, AssocDecl, AssocEndDecl, ClassDecl, ClassDiagram, InvariantDecl,
    ObjectDiagram, Reception,
};
pub use enumerate::enumerate_snapshots;
pub use snapshot::{
    conformance_violation, conforms, embeds, eval_expr, invariant_holds, multiplicity_holds, typing_violation,
    Multiplicity, Object, Snapshot,
};
pub use ts::{Bounds, EventLabel, SnapshotTs, Transition, TsState};
