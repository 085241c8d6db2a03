//! Identification-based internal-model regulators for nonlinear systems in
//! normal form, with least-squares adaptation of the internal model.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod identifier;
pub mod internal_model;
pub mod numerics;
pub mod plant;
pub mod regulator;
pub mod report;
pub mod scenarios;
pub mod simulation;
