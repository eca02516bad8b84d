//! Datalog with stratified negation and bounded counters.

mod ast;
mod check;
mod engine;
mod facts;
mod naive;
mod parse;
mod stratify;

use thiserror::Error;

pub use ast::{render_program, Atom, Bound, Literal, Program, Rule, Term};
pub use check::{analyze, check_safety, PredSchema, Schema, Sort};
pub use engine::{evaluate, evaluate_succ, evaluate_with_stratification, run, Database, EvalOptions, Evaluation};
pub use facts::{parse_facts, FactStore, SymbolTable, Tuple, Value};
pub use naive::evaluate_naive;
pub use parse::parse_program;
pub use stratify::{dependency_graph, stratify, Arc, DependencyGraph, Stratification};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatalogError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("rule {}: variable `{var}` is not bound by a positive body literal", rule + 1)]
    Unsafe { rule: usize, var: String },
    #[error("predicate `{pred}` has arity {expected} but is used with arity {found}")]
    ArityMismatch { pred: String, expected: usize, found: usize },
    #[error("argument {} of `{pred}` mixes symbols and counters", pos + 1)]
    SortConflict { pred: String, pos: usize },
    #[error("malformed counter expression: {0}")]
    MalformedCounter(String),
    #[error("not stratifiable: cycle through negation {}", cycle.join(" -> "))]
    NotStratifiable { cycle: Vec<String> },
    #[error("`{pred}` has input facts but is also defined by rules")]
    EdbIdbCollision { pred: String },
    #[error("counter terms need a c_max bound; use the successor evaluator")]
    CounterNeedsSucc,
    #[error("the given stratification violates rule `{0}`")]
    InvalidStratification(String),
    #[error("{0}")]
    Invalid(String),
}
