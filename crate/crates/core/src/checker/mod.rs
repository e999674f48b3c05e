//! Consistency checking of networks, models, and refinement links.

mod compat;
mod family;
mod network;
mod verdict;
mod witness;

pub use compat::check_decentralized_compat;
pub use network::{check_all, check_model, check_network, check_refinement, Strategy};
pub use verdict::{
    digest, Certificate, ConsistencyReport, Entry, Outcome, RealizationDigest, Stats, Verdict, VerdictKind, Witness, COMPATIBILITY,
};
pub use witness::{filmstrip_text, read_bundle, write_bundle};
