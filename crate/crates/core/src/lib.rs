//! Covert communication aided by an intelligent reflecting surface (IRS).
//!
//! Alice talks to Bob while a warden, Willie, runs a power detector whose
//! noise level is uncertain. An N-element IRS and Alice's transmit power are
//! tuned jointly to maximise Bob's rate while keeping Willie's total error
//! probability above a target.

pub mod channel;
pub mod cli;
pub mod detector;
pub mod error;
pub mod montecarlo;
pub mod optimizer;
pub mod quadrature;
pub mod search;
pub mod specfun;

pub use error::{Error, Result};
