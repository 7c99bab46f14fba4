//! Enthalpy step.
//!
//! Solves the lumped P1 system
//!
//! ```text
//! M(w − w^{k−1})/τ + K_𝖪 w + K_𝖫 m^k = R(w) + Q
//! ```
//!
//! by Picard iteration on the heat production `R`. Terms that live on
//! elements (viscous and diffusional heating) are lumped to the vertices;
//! terms carried by nodal fields (phase rate, adiabatic exchange) are
//! evaluated at the nodes. In particular the adiabatic stress power at node
//! `i` is `σ_a(m_i^{k−1}, w_i) : ε̄_i` with `ε̄_i` the lumped average of the
//! neighbouring element strain rates, so that the whole production at a node
//! with `w_i ≤ 0` is non-negative.

use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::grid::Mesh;
use crate::linalg::{dual_norm, mass_norm, pcg, CgOptions, CsrMatrix};
use crate::state::SolverOptions;
use crate::tensor::SymTensor;

#[derive(Debug, Clone)]
pub struct HeatProblem<'a> {
    pub mesh: &'a Mesh,
    pub mat: &'a MaterialModel,
    pub u: &'a [f64],
    pub u_prev: &'a [f64],
    pub m: &'a [f64],
    pub m_prev: &'a [f64],
    pub chi: &'a [f64],
    pub grad_mu: &'a [[f64; 2]],
    pub w_prev: &'a [f64],
    pub tau: f64,
    /// Nodal functional `∫ q φ + ∫_Γ q_s φ`.
    pub heat_load: &'a [f64],
    pub options: SolverOptions,
}

/// Nodal heat production rates (already integrated against the hat
/// functions).
#[derive(Debug, Clone, PartialEq)]
pub struct HeatProduction {
    /// `𝔻ε̇:ε̇/(1 + τ|ε̇|²)`.
    pub viscous: Vec<f64>,
    /// `σ_a:ε̇ + s_a ṁ`.
    pub adiabatic: Vec<f64>,
    /// `α ṁ²`.
    pub phase: Vec<f64>,
    /// `r|ṁ|`.
    pub activation: Vec<f64>,
    /// `𝖬∇μ·∇μ/(1 + τ|∇μ|²)`.
    pub diffusional: Vec<f64>,
}

impl HeatProduction {
    pub fn total(&self) -> Vec<f64> {
        (0..self.viscous.len())
            .map(|i| self.viscous[i] + self.adiabatic[i] + self.phase[i] + self.activation[i] + self.diffusional[i])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatSolution {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub update_norm: f64,
    pub residual: f64,
    /// Production entering the last linear solve, so that the returned `w`
    /// balances it to solver tolerance. Differs from the production at `w`
    /// by at most the Picard residual.
    pub production: HeatProduction,
}

/// Parts of the production that do not depend on `w`.
struct Rates {
    /// Lumped strain-rate integrals `Σ_{e∋i} V_e/n_v ε_e(δu)`.
    strain_rate: Vec<SymTensor>,
    phase_rate: Vec<f64>,
    viscous: Vec<f64>,
    diffusional: Vec<f64>,
}

impl<'a> HeatProblem<'a> {
    fn rates(&self) -> Rates {
        let mesh = self.mesh;
        let mat = self.mat;
        let n = mesh.num_nodes();
        let tau = self.tau;
        let v: Vec<f64> = self.u.iter().zip(self.u_prev).map(|(a, b)| (a - b) / tau).collect();
        let eps_rate = mesh.strain(&v);
        let eps_now = mesh.strain(self.u);
        let mbar = mesh.element_mean(self.m);
        let cbar = mesh.element_mean(self.chi);
        let wbar = mesh.element_mean(self.w_prev);
        let mut strain_rate = vec![SymTensor::ZERO; n];
        let mut visc = vec![0.0; mesh.num_elements()];
        let mut diff = vec![0.0; mesh.num_elements()];
        for (k, e) in mesh.elements.iter().enumerate() {
            let er = eps_rate[k];
            for &i in e.vertices() {
                strain_rate[i] = strain_rate[i].add(&er.scale(e.volume / e.nv as f64));
            }
            let q = er.norm_sq();
            visc[k] = mat.viscosity.apply(&er).ddot(&er) / (1.0 + tau * q);
            let g = self.grad_mu[k];
            let g2 = g[0] * g[0] + g[1] * g[1];
            let mob = mat.transport_coeffs(&eps_now[k], mbar[k], cbar[k], wbar[k]).mobility;
            diff[k] = mob * g2 / (1.0 + tau * g2);
        }
        Rates {
            strain_rate,
            phase_rate: self.m.iter().zip(self.m_prev).map(|(a, b)| (a - b) / tau).collect(),
            viscous: mesh.lump_to_nodes(&visc),
            diffusional: mesh.lump_to_nodes(&diff),
        }
    }

    fn production(&self, rates: &Rates, w: &[f64]) -> HeatProduction {
        let mat = self.mat;
        let mass = self.mesh.lumped_mass();
        let n = w.len();
        let mut adiabatic = vec![0.0; n];
        let mut phase = vec![0.0; n];
        let mut activation = vec![0.0; n];
        for i in 0..n {
            let dm = rates.phase_rate[i];
            adiabatic[i] = mat.sigma_a(self.m_prev[i], w[i]).ddot(&rates.strain_rate[i]) + mass[i] * mat.s_a(self.m_prev[i], w[i]) * dm;
            phase[i] = mass[i] * mat.phase_viscosity * dm * dm;
            activation[i] = mass[i] * mat.activation * dm.abs();
        }
        HeatProduction { viscous: rates.viscous.clone(), adiabatic, phase, activation, diffusional: rates.diffusional.clone() }
    }

    fn operators(&self, w: &[f64]) -> (CsrMatrix, Vec<f64>) {
        let mesh = self.mesh;
        let eps = mesh.strain(self.u);
        let mbar = mesh.element_mean(self.m);
        let cbar = mesh.element_mean(self.chi);
        let wbar = mesh.element_mean(w);
        let mut cond = Vec::with_capacity(mesh.num_elements());
        let mut cross = Vec::with_capacity(mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let t = self.mat.transport_coeffs(&eps[e], mbar[e], cbar[e], wbar[e]);
            cond.push(t.conductivity);
            cross.push(t.cross);
        }
        let kl_m = if cross.iter().any(|&c| c != 0.0) { mesh.stiffness(&cross).matvec(self.m) } else { vec![0.0; w.len()] };
        (mesh.stiffness(&cond), kl_m)
    }

    /// `M(w − w^{k−1})/τ + K_𝖪 w + K_𝖫 m − R(w) − Q`.
    pub fn residual_vector(&self, w: &[f64]) -> Vec<f64> {
        let mass = self.mesh.lumped_mass();
        let rates = self.rates();
        let r = self.production(&rates, w).total();
        let (k, kl_m) = self.operators(w);
        let kw = k.matvec(w);
        (0..w.len()).map(|i| mass[i] * (w[i] - self.w_prev[i]) / self.tau + kw[i] + kl_m[i] - r[i] - self.heat_load[i]).collect()
    }
}

/// Heat production at a given enthalpy iterate.
pub fn dissipation_rhs(p: &HeatProblem, w: &[f64]) -> HeatProduction {
    p.production(&p.rates(), w)
}

pub fn solve_w_step(p: &HeatProblem) -> Result<HeatSolution> {
    let mesh = p.mesh;
    let n = mesh.num_nodes();
    if p.w_prev.len() != n || p.m.len() != n || p.chi.len() != n || p.heat_load.len() != n || p.grad_mu.len() != mesh.num_elements() {
        return Err(Error::Internal("field lengths do not match the mesh".into()));
    }
    if let Some(i) = (0..n).find(|&i| p.w_prev[i] < -1e-12) {
        return Err(Error::Invariant { step: 0, message: format!("negative enthalpy {:e} at node {i}", p.w_prev[i]) });
    }
    let mass = mesh.lumped_mass();
    let inv_tau = 1.0 / p.tau;
    let mass_diag = CsrMatrix::diagonal(&mass.iter().map(|m| m * inv_tau).collect::<Vec<_>>());
    let cg = CgOptions { rel_tol: p.options.cg_tol, abs_tol: 1e-300, max_iter: 20 * n + 100 };
    let rates = p.rates();
    let scale = 1.0 + mass_norm(p.w_prev, mass) * inv_tau;

    let mut w = p.w_prev.to_vec();
    let mut iterations = 0;
    let mut update_norm = 0.0;
    let mut used: Option<HeatProduction> = None;
    loop {
        let prod = p.production(&rates, &w);
        let r = prod.total();
        let (k, kl_m) = p.operators(&w);
        let kw = k.matvec(&w);
        let res: Vec<f64> = (0..n).map(|i| mass[i] * (w[i] - p.w_prev[i]) * inv_tau + kw[i] + kl_m[i] - r[i] - p.heat_load[i]).collect();
        let residual = dual_norm(&res, mass) / scale;
        if residual <= p.options.picard_tol {
            if let Some(i) = (0..n).find(|&i| w[i] < -1e-12) {
                return Err(Error::Invariant { step: 0, message: format!("enthalpy became negative ({:e}) at node {i}", w[i]) });
            }
            let production = used.unwrap_or(prod);
            return Ok(HeatSolution { w, iterations, update_norm, residual, production });
        }
        if iterations == p.options.picard_max {
            return Err(Error::Solver {
                step: 0,
                message: format!("heat Picard iteration stalled at residual {residual:e} after {iterations} sweeps"),
            });
        }
        iterations += 1;
        let a = k.add_scaled(1.0, &mass_diag);
        let b: Vec<f64> = (0..n).map(|i| mass[i] * inv_tau * p.w_prev[i] + r[i] + p.heat_load[i] - kl_m[i]).collect();
        let old = w.clone();
        pcg(&a, &b, &mut w, None, cg)?;
        let diff: Vec<f64> = w.iter().zip(&old).map(|(a, b)| a - b).collect();
        update_norm = mass_norm(&diff, mass);
        used = Some(prod);
    }
}
