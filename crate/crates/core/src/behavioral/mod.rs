//! State machines, composite structures, and their execution.

mod admits;
mod cmp;
mod engine;
mod stm;

pub use admits::{component_admits, machine_admits};
pub use cmp::{parse_cmp, Component, Connector, Gate, Part};
pub use engine::{Assembly, Configuration, ExplicitLts, GenStats, Instance, Lts, Packed};
pub use stm::{parse_stm, Effect, MachineTransition, SendTarget, StateMachine};
