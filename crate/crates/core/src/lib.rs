//! Semi-implicit solver for a thermo-chemo-mechanical metal-hydride model
//! with an energy audit of every run.
//!
//! One time step solves three problems in turn: the coupled
//! displacement/phase increment ([`mech`]), hydrogen diffusion
//! ([`diffusion`]) and heat transfer in enthalpy form ([`heat`]).
//! [`driver`] strings them together and [`audit`] checks the energy balance.

// `!(x > 0.0)` is the intended idiom: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read better in the element and node assembly code
#![allow(clippy::needless_range_loop)]

pub mod audit;
pub mod config;
pub mod constitutive;
pub mod diffusion;
pub mod driver;
pub mod error;
pub mod grid;
pub mod heat;
pub mod linalg;
pub mod mech;
pub mod output;
pub mod presets;
pub mod selftest;
pub mod state;
pub mod tensor;

pub use error::{Error, Result};
