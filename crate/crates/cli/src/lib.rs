//! Experiment configuration and runner behind the `fwaffine` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
