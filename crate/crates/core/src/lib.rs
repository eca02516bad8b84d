//! CTL model checking, stratified Datalog evaluation, and the translations
//! between CTL formulas and two Datalog fragments.

pub mod bench;
pub mod ctl;
pub mod datalog;
pub mod decision;
pub mod gen;
pub mod kripke;
pub mod std_bridge;
pub mod tds_bridge;
