//! Nodal state at one time level, per-step loads and solver settings.

use serde::{Deserialize, Serialize};

/// All nodal fields at one time level. Displacement-like fields hold
/// `dim` components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    /// `(u^k − u^{k−1})/τ`; the initial velocity at `k = 0`.
    pub v: Vec<f64>,
    pub m: Vec<f64>,
    /// Normal-cone multiplier of the phase constraint, as a density.
    pub xi: Vec<f64>,
    pub chi: Vec<f64>,
    pub mu: Vec<f64>,
    pub w: Vec<f64>,
}

impl State {
    pub fn num_nodes(&self) -> usize {
        self.m.len()
    }

    pub fn min_chi(&self) -> f64 {
        self.chi.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn min_w(&self) -> f64 {
        self.w.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Loads of one step, already turned into nodal functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLoads {
    /// `∫ f·φ + ∫_Γ f_s·φ`, `dim` components per node.
    pub force: Vec<f64>,
    /// `∫ q φ + ∫_Γ q_s φ`.
    pub heat: Vec<f64>,
    /// `∫_Γ h_s φ`.
    pub hydrogen: Vec<f64>,
}

impl StepLoads {
    pub fn zero(dim: usize, n: usize) -> Self {
        Self { force: vec![0.0; dim * n], heat: vec![0.0; n], hydrogen: vec![0.0; n] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target of the conjugate-gradient solves.
    pub cg_tol: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// First-order optimality target of the mechanical/phase step.
    pub opt_tol: f64,
    /// Maximal number of block sweeps of the mechanical/phase step.
    pub opt_max: usize,
}

impl SolverOptions {
    pub fn for_dim(dim: usize) -> Self {
        Self { cg_tol: 1e-13, picard_tol: 1e-10, picard_max: 200, opt_tol: if dim == 1 { 1e-10 } else { 1e-8 }, opt_max: 200 }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::for_dim(1)
    }
}
