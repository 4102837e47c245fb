//! A first-order call-by-value language with iteration and partial
//! primitives, a linear dependently typed target language with a fold
//! eliminator, the structure-preserving reverse-mode AD transform between
//! them, evaluators for both, and a numerical verification harness.
#![no_std]
#![allow(clippy::result_large_err)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod syntax;
pub mod pretty;
pub mod typecheck;
pub mod parser;
pub mod prim;
pub mod value;
pub mod eval;
pub mod fd;
pub mod target;
pub mod transform;
pub mod teval;
pub mod rng;
pub mod gen;
pub mod laws;
pub mod check;
