//! Enumeration and analysis of small Turing machines for busy beaver
//! searches.
//!
//! Machines use the quintuple convention: a transition `(S,I,O,D,NS)` reads
//! `I` in state `S`, writes `O`, moves `D` and enters `NS`. States are the
//! letters `a`..`y` with `z` for the halt state, symbols are digits with `0`
//! as the blank.

pub mod corpus;
pub mod enumerate;
pub mod machine;
pub mod quad;
pub mod sim;
pub mod transform;

pub use enumerate::{CorpusRecord, GenConfig, GenMode};
pub use machine::{
    format_machine, parse_machine, Action, Dimension, Direction, Machine, MachineError,
    MachineStatus, ParseError, StateId, StatusKind, Symbol, Transition,
};
pub use sim::{run, trace, OutcomeKind, RunOptions, RunOutcome};
