//! Interactions, their trace automata, and trace-set satisfaction.

mod nfa;
mod sd;
mod traces;

pub use nfa::{matches, project, sd_to_nfa, shortest_word, Config, Env, TraceAutomaton};
pub use sd::{parse_sd, ArgPat, Interaction, MsgPattern, Term};
pub use traces::{exists_search, sd_satisfaction, sd_satisfies, traces, SatMode, SearchOutcome, TraceSet};
