//! Exact robustness verification for quantized feed-forward ReLU networks.
//!
//! The pipeline: a quantized network ([`qnn`]) plus an input region and a property are
//! encoded as an integer linear program ([`encoder`]), optionally simplified with
//! interval analysis ([`interval`]), and decided by an exact branch-and-bound solver
//! ([`ilp`]). [`verify`] wires the stages together and adds the binary search for the
//! maximum robustness radius. Everything on the decision path is integer or rational
//! arithmetic; no floats are involved in any verdict.

pub mod encoder;
pub mod ilp;
pub mod interval;
pub mod qnn;
pub mod verify;
