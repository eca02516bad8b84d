//! Kripke structures, Kripke-schema databases, and the mappings between them.

mod db;
mod structure;

use thiserror::Error;

pub use db::{
    db_to_kripke, domain_of, first_child_next_sibling, kripke_to_db, parse_database, split_outdegree2,
    total_closure, BinaryRelations, ChildOrder, ConstId, DomainSet, Pairs, RelationalDatabase,
};
pub use structure::{disjoint_union, parse_kripke, render_kripke, KripkeBuilder, KripkeStructure, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KripkeError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: edge mentions unknown state `{name}`")]
    UnknownState { line: usize, name: String },
    #[error("line {line}: state `{name}` declared twice")]
    DuplicateState { line: usize, name: String },
    #[error("empty structure")]
    EmptyStructure,
    #[error("state `{state}` has no successor")]
    NoSuccessor { state: String },
    #[error("state `{state}` has outdegree {degree}; at most 2 is supported")]
    OutdegreeTooLarge { state: String, degree: usize },
    #[error("state `{state}` has different next siblings under different parents")]
    AmbiguousSibling { state: String },
    #[error("operation needs the {expected} form, database uses {found}")]
    WrongForm { expected: &'static str, found: &'static str },
    #[error("{0}")]
    Facts(String),
    #[error("{0}")]
    Invalid(String),
}
