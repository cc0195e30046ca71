//! Reachability analysis for message-passing programs with lattice
//! automata.

pub mod automaton;
pub mod cli;
pub mod concrete;
pub mod domain;
pub mod engine;
pub mod expr;
pub mod frontend;
pub mod property;
pub mod rules;
pub mod transducer;
