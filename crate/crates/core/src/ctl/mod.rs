//! CTL formulas: syntax, normal forms, and two truth-set evaluators.

mod check;
mod formula;
mod normal;
mod oracle;
mod parse;
mod render;
mod state_set;

use thiserror::Error;

pub use check::model_check;
pub use formula::{AtomId, AtomTable, Formula, NormalFormTag};
pub use normal::{to_enf, to_pnf};
pub use oracle::{truth_oracle, truth_oracle_bounded, DEFAULT_ORACLE_BOUND};
pub use parse::{parse_formula, parse_formula_in, parse_formula_with, FormulaParseError};
pub use render::render_formula;
pub use state_set::StateSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CtlError {
    #[error("formula uses atom p{atom} but the structure declares {declared} atoms")]
    UnknownAtom { atom: usize, declared: usize },
    #[error("transition relation is not total: state `{state}` has no successor")]
    NotTotal { state: String },
    #[error("structure has {states} states; the oracle is limited to {bound}")]
    OracleBound { states: usize, bound: usize },
}
