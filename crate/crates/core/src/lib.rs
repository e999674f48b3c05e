//! Multi-view consistency checking: class diagrams, object diagrams, state
//! machines, composite structures, and interactions, related by a small
//! network language and checked under explicit bounds.

pub mod behavioral;
pub mod checker;
pub mod error;
pub mod expr;
pub mod interaction;
pub mod kernel;
pub mod morphisms;
pub mod netlang;
pub mod structural;
pub mod syntax;

pub use error::{Error, Result};
