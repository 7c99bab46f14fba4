//! Hydrogen diffusion step.
//!
//! The lumped P1 system is written with the nodal chemical potential,
//!
//! ```text
//! M(χ − χ^{k−1})/τ + K_𝖬 μ(m^k, χ) = H,     μ_i = ∂_χφ₁(m_i, χ_i),
//! ```
//!
//! where `K_𝖬` is the stiffness with the mobility as coefficient and `H` the
//! boundary influx. Since `K_𝖬` has zero row sums, `(K_𝖬 μ)_i` only sees the
//! edge differences `μ_j − μ_i`, which are split exactly as
//!
//! ```text
//! μ_j − μ_i = S_ij (χ_j − χ_i) + T_ij (m_j − m_i).
//! ```
//!
//! The split follows the path that first moves `m` at `χ = min(χ_i, χ_j)`
//! and then moves `χ` at the phase of the node with the larger `χ`, so `T_ij`
//! vanishes on every edge touching a node with `χ ≤ 0` and `S_ij > 0` by
//! convexity of `φ₁(m, ·)`. Freezing `S`, `T` gives a symmetric M-matrix in
//! each damped Picard sweep; at the fixed point the split is exact, which
//! yields mass conservation and non-negativity of `χ`.

use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::grid::Mesh;
use crate::linalg::{dual_norm, mass_norm, pcg, CgOptions, CsrMatrix, TripletBuilder};
use crate::state::SolverOptions;

const DAMPING: f64 = 0.7;

#[derive(Debug, Clone)]
pub struct DiffusionProblem<'a> {
    pub mesh: &'a Mesh,
    pub mat: &'a MaterialModel,
    pub u: &'a [f64],
    pub m: &'a [f64],
    pub chi_prev: &'a [f64],
    pub w_prev: &'a [f64],
    pub tau: f64,
    /// Nodal functional `∫_Γ h_s φ` of the boundary influx.
    pub influx: &'a [f64],
    pub options: SolverOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSolution {
    pub chi: Vec<f64>,
    pub mu: Vec<f64>,
    pub grad_mu: Vec<[f64; 2]>,
    pub iterations: usize,
    /// Mass norm of the last Picard update.
    pub update_norm: f64,
    /// Normalized fixed-point residual.
    pub residual: f64,
}

/// Nodal chemical potential and its element gradients.
pub fn assemble_mu(mesh: &Mesh, mat: &MaterialModel, m: &[f64], chi: &[f64]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let mu: Vec<f64> = m.iter().zip(chi).map(|(&m, &c)| mat.chemical_potential(m, c)).collect();
    let grad = mesh.gradient(&mu);
    (mu, grad)
}

/// Secant slope of `μ(m, ·)` between `c1` and `c2`.
fn chi_secant(mat: &MaterialModel, m: f64, c1: f64, c2: f64) -> f64 {
    let d = c2 - c1;
    if d.abs() <= 1e-6 * (1.0 + c1.abs().max(c2.abs())) {
        mat.phi1_chichi(m, 0.5 * (c1 + c2))
    } else {
        (mat.chemical_potential(m, c2) - mat.chemical_potential(m, c1)) / d
    }
}

/// Edge coefficients `(S_ij, T_ij)`.
pub(crate) fn edge_split(mat: &MaterialModel, mi: f64, mj: f64, ci: f64, cj: f64) -> (f64, f64) {
    // μ is affine in m, so the tie case is the mean of both paths
    let (c_lo, m_hi) = if ci < cj {
        (ci, mj)
    } else if cj < ci {
        (cj, mi)
    } else {
        (ci, 0.5 * (mi + mj))
    };
    let s = chi_secant(mat, m_hi, ci, cj);
    let t = -mat.coupling * mat.swelling_slope(c_lo);
    (s, t)
}

impl<'a> DiffusionProblem<'a> {
    fn mobility_matrix(&self, chi: &[f64]) -> CsrMatrix {
        let mesh = self.mesh;
        let strains = mesh.strain(self.u);
        let mbar = mesh.element_mean(self.m);
        let cbar = mesh.element_mean(chi);
        let wbar = mesh.element_mean(self.w_prev);
        let coeff: Vec<f64> =
            (0..mesh.num_elements()).map(|e| self.mat.transport_coeffs(&strains[e], mbar[e], cbar[e], wbar[e]).mobility).collect();
        mesh.stiffness(&coeff)
    }

    /// Frozen-coefficient operator `K^S` and vector `K^T m`.
    fn split(&self, k: &CsrMatrix, chi: &[f64]) -> (CsrMatrix, Vec<f64>) {
        let n = chi.len();
        let m = self.m;
        let mut t = TripletBuilder::new(n);
        let mut ktm = vec![0.0; n];
        for i in 0..n {
            let mut diag = 0.0;
            for (j, kij) in k.row(i) {
                if j == i {
                    continue;
                }
                let (s, tt) = edge_split(self.mat, m[i], m[j], chi[i], chi[j]);
                t.add(i, j, kij * s);
                diag -= kij * s;
                ktm[i] += kij * tt * (m[j] - m[i]);
            }
            t.add(i, i, diag);
        }
        (t.build(), ktm)
    }

    /// `M(χ − χ^{k−1})/τ + K_𝖬 μ(m, χ) − H`.
    pub fn residual_vector(&self, chi: &[f64]) -> Vec<f64> {
        let mass = self.mesh.lumped_mass();
        let k = self.mobility_matrix(chi);
        let (mu, _) = assemble_mu(self.mesh, self.mat, self.m, chi);
        let kmu = k.matvec(&mu);
        (0..chi.len()).map(|i| mass[i] * (chi[i] - self.chi_prev[i]) / self.tau + kmu[i] - self.influx[i]).collect()
    }

    fn normalized_residual(&self, chi: &[f64]) -> f64 {
        let mass = self.mesh.lumped_mass();
        let r = self.residual_vector(chi);
        dual_norm(&r, mass) / (1.0 + mass_norm(self.chi_prev, mass) / self.tau)
    }
}

pub fn solve_chi_step(p: &DiffusionProblem) -> Result<DiffusionSolution> {
    let mesh = p.mesh;
    let n = mesh.num_nodes();
    if p.m.len() != n || p.chi_prev.len() != n || p.w_prev.len() != n || p.influx.len() != n || p.u.len() != mesh.dim * n {
        return Err(Error::Internal("field lengths do not match the mesh".into()));
    }
    if let Some(i) = (0..n).find(|&i| p.chi_prev[i] < -1e-12) {
        return Err(Error::Invariant { step: 0, message: format!("negative hydrogen {:e} at node {i}", p.chi_prev[i]) });
    }
    let mass = mesh.lumped_mass();
    let inv_tau = 1.0 / p.tau;
    let mass_diag = CsrMatrix::diagonal(&mass.iter().map(|m| m * inv_tau).collect::<Vec<_>>());
    let cg = CgOptions { rel_tol: p.options.cg_tol.min(1e-14), abs_tol: 1e-300, max_iter: 20 * n + 100 };

    let mut chi = p.chi_prev.to_vec();
    let mut residual = p.normalized_residual(&chi);
    let mut update_norm = 0.0;
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    while residual > p.options.picard_tol {
        if iterations == p.options.picard_max {
            return Err(Error::Solver {
                step: 0,
                message: format!("diffusion Picard iteration stalled at residual {residual:e} after {iterations} sweeps"),
            });
        }
        iterations += 1;
        let k = p.mobility_matrix(&chi);
        let (ks, ktm) = p.split(&k, &chi);
        let a = ks.add_scaled(1.0, &mass_diag);
        let b: Vec<f64> = (0..n).map(|i| mass[i] * inv_tau * p.chi_prev[i] - ktm[i] + p.influx[i]).collect();
        let mut hat = chi.clone();
        pcg(&a, &b, &mut hat, None, cg)?;
        // the first sweep is undamped, so every later iterate is a convex
        // combination of mass-conserving solves
        let theta = if iterations == 1 { 1.0 } else { DAMPING };
        let update: Vec<f64> = (0..n).map(|i| theta * (hat[i] - chi[i])).collect();
        for i in 0..n {
            chi[i] += update[i];
        }
        update_norm = mass_norm(&update, mass);
        if iterations > 2 && update_norm > last_update {
            log::warn!("diffusion Picard update grew from {last_update:e} to {update_norm:e}");
        }
        last_update = update_norm;
        residual = p.normalized_residual(&chi);
    }
    if let Some(i) = (0..n).find(|&i| chi[i] < -1e-12) {
        return Err(Error::Invariant { step: 0, message: format!("hydrogen became negative ({:e}) at node {i}", chi[i]) });
    }
    let (mu, grad_mu) = assemble_mu(mesh, p.mat, p.m, &chi);
    Ok(DiffusionSolution { chi, mu, grad_mu, iterations, update_norm, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, Side};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem<'a>(mesh: &'a Mesh, mat: &'a MaterialModel, fields: &'a Fields, tau: f64) -> DiffusionProblem<'a> {
        DiffusionProblem {
            mesh,
            mat,
            u: &fields.u,
            m: &fields.m,
            chi_prev: &fields.chi,
            w_prev: &fields.w,
            tau,
            influx: &fields.h,
            options: SolverOptions::default(),
        }
    }

    struct Fields {
        u: Vec<f64>,
        m: Vec<f64>,
        chi: Vec<f64>,
        w: Vec<f64>,
        h: Vec<f64>,
    }

    #[test]
    fn split_is_exact() {
        let mat = MaterialModel::desk_default(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (mi, mj) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let (ci, cj) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            let (s, t) = edge_split(&mat, mi, mj, ci, cj);
            let lhs = mat.chemical_potential(mj, cj) - mat.chemical_potential(mi, ci);
            assert!((lhs - s * (cj - ci) - t * (mj - mi)).abs() < 1e-13);
            assert!(s > 0.0);
            let (s2, t2) = edge_split(&mat, mj, mi, cj, ci);
            assert_eq!((s, t), (s2, t2));
        }
        let (_, t) = edge_split(&mat, 0.2, 0.9, 0.0, 1.5);
        assert_eq!(t, 0.0);
        assert_eq!(edge_split(&mat, 0.2, 0.9, 0.5, 0.5), edge_split(&mat, 0.9, 0.2, 0.5, 0.5));
    }

    #[test]
    fn assemble_mu_examples() {
        let mesh = build_mesh(1, &[1.0], &[3]).unwrap();
        let mat = MaterialModel::desk_default(1);
        let (_, g) = assemble_mu(&mesh, &mat, &[0.3; 3], &[0.7; 3]);
        assert!(g.iter().all(|v| v[0] == 0.0));
        let (_, g) = assemble_mu(&mesh, &mat, &[0.0, 0.5, 1.0], &[0.0; 3]);
        assert!(g.iter().all(|v| v[0] == 0.0));
        // two elements, chain rule with edge coefficients
        let m = [0.1, 0.4, 0.2];
        let c = [0.3, 0.9, 1.4];
        let (_, g) = assemble_mu(&mesh, &mat, &m, &c);
        for e in 0..2 {
            let (s, t) = edge_split(&mat, m[e], m[e + 1], c[e], c[e + 1]);
            let hand = (s * (c[e + 1] - c[e]) + t * (m[e + 1] - m[e])) / 0.5;
            assert!((g[e][0] - hand).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_state_is_fixed_point() {
        let mesh = build_mesh(1, &[1.0], &[11]).unwrap();
        let mat = MaterialModel::desk_default(1);
        let n = mesh.num_nodes();
        let f = Fields {
            u: mesh.coords.iter().map(|p| 0.01 * p[0]).collect(),
            m: vec![0.3; n],
            chi: vec![0.8; n],
            w: vec![1.0; n],
            h: vec![0.0; n],
        };
        let sol = solve_chi_step(&problem(&mesh, &mat, &f, 1e-3)).unwrap();
        assert_eq!(sol.chi, f.chi);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn influx_is_conserved_and_positive() {
        let mesh = build_mesh(2, &[1.0, 1.0], &[9, 7]).unwrap();
        let mat = MaterialModel::desk_default(2);
        let n = mesh.num_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut f = Fields {
            u: vec![0.0; 2 * n],
            m: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            chi: (0..n).map(|_| rng.random_range(0.0..0.05)).collect(),
            w: vec![1.0; n],
            h: mesh.boundary_functional(|s, _| if s == Side::Left { 0.5 } else { 0.0 }),
        };
        f.chi[10] = 0.0;
        let tau = 1e-3;
        let before = mesh.integrate(&f.chi);
        let influx: f64 = f.h.iter().sum();
        for _ in 0..10 {
            let sol = solve_chi_step(&problem(&mesh, &mat, &f, tau)).unwrap();
            assert!(sol.chi.iter().all(|&c| c >= -1e-12));
            assert!(sol.residual <= 1e-10);
            f.chi = sol.chi;
        }
        let gained = mesh.integrate(&f.chi) - before;
        assert!((gained - 10.0 * tau * influx).abs() < 1e-12, "{gained} vs {}", 10.0 * tau * influx);
        assert!((influx - 0.5).abs() < 1e-14);
    }
}
