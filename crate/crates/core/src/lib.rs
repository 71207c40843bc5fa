//! Adversarial objectives for gradient methods, the methods themselves, and
//! checks of how they misbehave.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cli;
pub mod export;
pub mod objective;
pub mod optimizers;
pub mod scenarios;
pub mod verify;
