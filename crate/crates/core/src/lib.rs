//! Core algorithms for ontology-mediated query answering in the OWL 2 QL
//! (DL-Lite with role hierarchies) fragment.
//!
//! The crate is organised around three layers:
//!
//! * ground truth: KB syntax ([`syntax`]), entailment ([`reasoner`]),
//!   canonical models and a brute-force certain-answer oracle ([`canonical`]);
//! * Boolean programs: monotone formulas/circuits, nondeterministic branching
//!   programs and (tree) hypergraph programs, with the translations between
//!   them ([`boolprog`]);
//! * compilers and evaluators: tree witnesses ([`witness`]), the rewriting
//!   strategies producing positive-existential and nonrecursive-datalog
//!   queries ([`rewrite`]), direct answering procedures ([`exec`]), and
//!   instance generators ([`gen`]).
//!
//! Everything here is deterministic and `no_std`-compatible (with `alloc`);
//! file formats, JSON serialisation and the command line live in the `owlql`
//! crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod boolprog;
pub mod canonical;
pub mod exec;
pub mod gen;
pub mod reasoner;
pub mod rewrite;
pub mod syntax;
pub mod witness;
