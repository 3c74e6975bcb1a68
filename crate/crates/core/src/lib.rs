//! Frobenius traces, mod-l Galois image classification and explicit
//! exceptional-prime bound formulas for elliptic curves over Q.

pub mod arith;
pub mod bounds;
pub mod cheb_lab;
pub mod classifier;
pub mod curve;
pub mod frobenius;
pub mod gl2;
pub mod hp;
pub mod pipeline;
pub mod report;

pub use pipeline::Error;
