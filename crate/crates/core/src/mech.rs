//! Coupled displacement/phase increment.
//!
//! Each step minimizes the strictly convex functional
//!
//! ```text
//! J(u, m) = ρ/(2τ²) |u − 2u^{k−1} + u^{k−2}|²_M + 1/(2τ) ∫ Dε(u − u^{k−1}):ε(u − u^{k−1})
//!         + ∫ φ₂(ε(u), m) + ∫ σ_a:ε(u) − ⟨f, u⟩
//!         + Σ M_i φ₁(m_i, χ_i^{k−1}) + λ/2 mᵀK m + α/(2τ) |m − m^{k−1}|²_M
//!         + r Σ M_i |m_i − m_i^{k−1}| + Σ M_i s_a,i m_i + δ_K(m)
//! ```
//!
//! with `σ_a`, `s_a` frozen at `(m^{k−1}, w^{k−1})`. The elastic term uses
//! the vertex mean of `m` on each element. The blocks are minimized in turn:
//! `u` by conjugate gradients, `m` by accelerated proximal gradients in the
//! lumped-mass metric whose prox is [`phase_nodal_prox`].

use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::grid::Mesh;
use crate::linalg::{dual_norm, pcg, CgOptions, CsrMatrix};
use crate::state::SolverOptions;
use crate::tensor::SymTensor;

/// Largest admissible time step: `min(T, α²/|inf ∂²_mmφ₁|²)` when the
/// phase Hessian can be negative, `T` otherwise.
pub fn tau_max(mat: &MaterialModel, t_final: f64, chi_max: f64) -> f64 {
    let inf = mat.inf_phi1_mm(chi_max, 1001);
    if inf < 0.0 {
        t_final.min(mat.phase_viscosity * mat.phase_viscosity / (inf * inf))
    } else {
        t_final
    }
}

/// Exact minimizer of `a/2 (v − b)² + κ|v − p| + δ_[lo, hi](v)`.
///
/// Targets within the closed band `|b − p| ≤ κ/a` stick at `p`.
pub fn phase_nodal_prox(a: f64, b: f64, p: f64, kappa: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(a > 0.0 && lo <= hi);
    let shift = kappa / a;
    let v = if b > p + shift {
        b - shift
    } else if b < p - shift {
        b + shift
    } else {
        p
    };
    v.clamp(lo, hi)
}

#[derive(Debug, Clone)]
pub struct MechPhaseProblem<'a> {
    pub mesh: &'a Mesh,
    pub mat: &'a MaterialModel,
    pub u_prev: &'a [f64],
    pub u_prev2: &'a [f64],
    pub m_prev: &'a [f64],
    pub chi_prev: &'a [f64],
    pub w_prev: &'a [f64],
    pub tau: f64,
    /// Nodal functional of the bulk and surface forces.
    pub load: &'a [f64],
    /// Nodes whose displacement is held at `u^{k−1}`.
    pub pinned: &'a [usize],
    pub tau_max: f64,
    pub options: SolverOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechPhaseSolution {
    pub u: Vec<f64>,
    pub m: Vec<f64>,
    /// Normal-cone multiplier, as a density.
    pub xi: Vec<f64>,
    /// Normalized first-order optimality residual.
    pub residual: f64,
    /// Block sweeps used.
    pub iterations: usize,
    pub objective: f64,
}

/// Step data that does not depend on the unknowns.
struct Frozen {
    mass: Vec<f64>,
    /// `ρ/τ² M + K_C + K_D/τ`.
    a: CsrMatrix,
    /// Right-hand side of the `u` block without the swelling term.
    base_rhs: Vec<f64>,
    k1: CsrMatrix,
    s_a: Vec<f64>,
    /// `Cε_tr` and `Cε_tr:ε_tr`.
    c_tr: SymTensor,
    c_tr_tr: f64,
    fixed: Vec<bool>,
}

impl<'a> MechPhaseProblem<'a> {
    fn check(&self) -> Result<()> {
        let n = self.mesh.num_nodes();
        let d = self.mesh.dim;
        if self.u_prev.len() != d * n
            || self.u_prev2.len() != d * n
            || self.load.len() != d * n
            || self.m_prev.len() != n
            || self.chi_prev.len() != n
            || self.w_prev.len() != n
        {
            return Err(Error::Internal("field lengths do not match the mesh".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.tau)));
        }
        if self.tau > self.tau_max * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { tau: self.tau, tau_max: self.tau_max });
        }
        if let Some(i) = (0..n).find(|&i| self.w_prev[i] < -1e-12 || self.chi_prev[i] < -1e-12) {
            return Err(Error::Invariant {
                step: 0,
                message: format!("negative data at node {i}: chi = {:e}, w = {:e}", self.chi_prev[i], self.w_prev[i]),
            });
        }
        if let Some(i) = (0..n).find(|&i| !self.mat.in_phase_box(self.m_prev[i])) {
            return Err(Error::Invariant { step: 0, message: format!("phase {} outside K at node {i}", self.m_prev[i]) });
        }
        Ok(())
    }

    fn frozen(&self) -> Frozen {
        let mesh = self.mesh;
        let mat = self.mat;
        let d = mesh.dim;
        let n = mesh.num_nodes();
        let mass = mesh.lumped_mass().to_vec();
        let inertia = mat.density / (self.tau * self.tau);
        let kc = mesh.elastic_stiffness(&mat.elastic);
        let kd = mesh.elastic_stiffness(&mat.viscosity);
        let mdiag: Vec<f64> = (0..d * n).map(|i| inertia * mass[i / d]).collect();
        let a = kc.add_scaled(1.0 / self.tau, &kd).add_scaled(1.0, &CsrMatrix::diagonal(&mdiag));

        let sigma_a = self.sigma_a_elements();
        let s_a = (0..n).map(|i| mat.s_a(self.m_prev[i], self.w_prev[i])).collect();

        let kd_u = kd.matvec(self.u_prev);
        let div_sa = mesh.divergence(&sigma_a);
        let base_rhs = (0..d * n)
            .map(|j| mdiag[j] * (2.0 * self.u_prev[j] - self.u_prev2[j]) + kd_u[j] / self.tau + self.load[j] - div_sa[j])
            .collect();
        let mut fixed = vec![false; d * n];
        for &i in self.pinned {
            for c in 0..d {
                fixed[d * i + c] = true;
            }
        }
        let c_tr = mat.elastic.apply(&mat.swelling);
        Frozen {
            mass,
            a,
            base_rhs,
            k1: mesh.stiffness(&vec![1.0; mesh.num_elements()]),
            s_a,
            c_tr,
            c_tr_tr: c_tr.ddot(&mat.swelling),
            fixed,
        }
    }

    /// `u`-block right-hand side for a given phase.
    fn rhs_u(&self, fz: &Frozen, m: &[f64]) -> Vec<f64> {
        let mbar = self.mesh.element_mean(m);
        let sw: Vec<SymTensor> = mbar.iter().map(|&v| fz.c_tr.scale(v)).collect();
        let g = self.mesh.divergence(&sw);
        fz.base_rhs.iter().zip(&g).map(|(b, g)| b + g).collect()
    }

    /// Gradient of `J` in `m` for fixed element strains.
    fn grad_m(&self, fz: &Frozen, strains: &[SymTensor], m: &[f64]) -> Vec<f64> {
        let mat = self.mat;
        let mbar = self.mesh.element_mean(m);
        let el: Vec<f64> = strains.iter().zip(&mbar).map(|(e, &mb)| mat.elastic_stress(e, mb).ddot(&mat.swelling)).collect();
        let el = self.mesh.lump_to_nodes(&el);
        let km = fz.k1.matvec(m);
        let a_tau = mat.phase_viscosity / self.tau;
        (0..m.len())
            .map(|i| {
                fz.mass[i] * (mat.dphi1_dm(m[i], self.chi_prev[i]) + a_tau * (m[i] - self.m_prev[i]) + fz.s_a[i])
                    + mat.gradient_coeff * km[i]
                    - el[i]
            })
            .collect()
    }

    /// Nodal distance of `0` to the subdifferential of `J` in `m`, as a
    /// density.
    fn phase_residual(&self, grad: &[f64], mass: &[f64], m: &[f64]) -> Vec<f64> {
        let mat = self.mat;
        let r = mat.activation;
        (0..m.len())
            .map(|i| {
                let s = grad[i] / mass[i];
                let dm = m[i] - self.m_prev[i];
                let (z_lo, z_hi) = if dm > 0.0 {
                    (r, r)
                } else if dm < 0.0 {
                    (-r, -r)
                } else {
                    (-r, r)
                };
                let at_lo = m[i] <= mat.phase_lo;
                let at_hi = m[i] >= mat.phase_hi;
                let lo = if at_lo { f64::NEG_INFINITY } else { s + z_lo };
                let hi = if at_hi { f64::INFINITY } else { s + z_hi };
                if lo > 0.0 {
                    lo
                } else if hi < 0.0 {
                    -hi
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn u_residual(&self, fz: &Frozen, u: &[f64], m: &[f64]) -> f64 {
        let rhs = self.rhs_u(fz, m);
        let au = fz.a.matvec(u);
        let d = self.mesh.dim;
        let r: Vec<f64> = (0..u.len()).map(|j| if fz.fixed[j] { 0.0 } else { au[j] - rhs[j] }).collect();
        let expanded: Vec<f64> = (0..u.len()).map(|j| fz.mass[j / d]).collect();
        dual_norm(&r, &expanded) / (1.0 + dual_norm(&rhs, &expanded))
    }

    fn m_residual(&self, fz: &Frozen, grad: &[f64], m: &[f64]) -> f64 {
        let res = self.phase_residual(grad, &fz.mass, m);
        let num: f64 = res.iter().zip(&fz.mass).map(|(r, w)| w * r * r).sum::<f64>().sqrt();
        let scale: f64 = grad.iter().zip(&fz.mass).map(|(g, w)| g * g / w).sum::<f64>().sqrt();
        num / (1.0 + scale)
    }

    /// Value of the incremental functional; `+∞` outside the phase box.
    pub fn objective(&self, u: &[f64], m: &[f64]) -> f64 {
        let mesh = self.mesh;
        let mat = self.mat;
        if m.iter().any(|&v| !mat.in_phase_box(v)) {
            return f64::INFINITY;
        }
        let d = mesh.dim;
        let mass = mesh.lumped_mass();
        let inertia = mat.density / (self.tau * self.tau);
        let mut j = 0.0;
        for (k, ((u0, u1), u2)) in u.iter().zip(self.u_prev).zip(self.u_prev2).enumerate() {
            let acc = u0 - 2.0 * u1 + u2;
            j += 0.5 * inertia * mass[k / d] * acc * acc;
        }
        let du: Vec<f64> = u.iter().zip(self.u_prev).map(|(a, b)| a - b).collect();
        let eps = mesh.strain(u);
        let deps = mesh.strain(&du);
        let mbar = mesh.element_mean(m);
        let sig = self.sigma_a_elements();
        for (e, el) in mesh.elements.iter().enumerate() {
            j += el.volume
                * (mat.viscosity.energy(&deps[e]) / self.tau + mat.elastic_energy_density(&eps[e], mbar[e]) + sig[e].ddot(&eps[e]));
        }
        j -= u.iter().zip(self.load).map(|(a, b)| a * b).sum::<f64>();
        let km = mesh.stiffness(&vec![1.0; mesh.num_elements()]).matvec(m);
        j += 0.5 * mat.gradient_coeff * m.iter().zip(&km).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..m.len() {
            let dm = m[i] - self.m_prev[i];
            j += mass[i]
                * (mat.phi1(m[i], self.chi_prev[i])
                    + 0.5 * mat.phase_viscosity / self.tau * dm * dm
                    + mat.activation * dm.abs()
                    + mat.s_a(self.m_prev[i], self.w_prev[i]) * m[i]);
        }
        j
    }

    fn sigma_a_elements(&self) -> Vec<SymTensor> {
        let mat = self.mat;
        self.mesh
            .elements
            .iter()
            .map(|e| {
                let mut s = SymTensor::ZERO;
                for &i in e.vertices() {
                    s = s.add(&mat.sigma_a(self.m_prev[i], self.w_prev[i]));
                }
                s.scale(1.0 / e.nv as f64)
            })
            .collect()
    }

    /// Curvature bounds `(L, μ)` of the smooth `m`-part in the mass metric.
    fn phase_curvature(&self, fz: &Frozen) -> (f64, f64) {
        let mat = self.mat;
        let (lo, hi) = (mat.phase_lo, mat.phase_hi);
        let hess = |m: f64| mat.phi1_mm(m, 0.0);
        let mut hmax = hess(lo).max(hess(hi));
        let mut hmin = hess(lo).min(hess(hi));
        if lo < 0.5 && 0.5 < hi {
            hmax = hmax.max(hess(0.5));
            hmin = hmin.min(hess(0.5));
        }
        let a_tau = mat.phase_viscosity / self.tau;
        let lip = a_tau + hmax.max(0.0) + mat.gradient_coeff * fz.k1.gershgorin_scaled(&fz.mass) + fz.c_tr_tr;
        (lip, (a_tau + hmin).max(0.0))
    }

    /// Minimizes over `m` with the strains fixed, starting from `m`.
    fn solve_phase_block(&self, fz: &Frozen, strains: &[SymTensor], m: &mut Vec<f64>, tol: f64) -> Result<()> {
        let mat = self.mat;
        let (lip, sc) = self.phase_curvature(fz);
        let beta_sc = if sc > 0.0 { (lip.sqrt() - sc.sqrt()) / (lip.sqrt() + sc.sqrt()) } else { 0.0 };
        let mut prev = m.clone();
        let mut t = 1.0f64;
        let max_inner = 20_000;
        for _ in 0..max_inner {
            let grad = self.grad_m(fz, strains, m);
            if self.m_residual(fz, &grad, m) <= tol {
                return Ok(());
            }
            let beta = if sc > 0.0 {
                beta_sc
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let b = (t - 1.0) / t_next;
                t = t_next;
                b
            };
            let y: Vec<f64> = m.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
            let gy = self.grad_m(fz, strains, &y);
            let next: Vec<f64> = (0..m.len())
                .map(|i| {
                    let b = y[i] - gy[i] / (lip * fz.mass[i]);
                    phase_nodal_prox(lip, b, self.m_prev[i], mat.activation, mat.phase_lo, mat.phase_hi)
                })
                .collect();
            // restart the momentum when it points uphill
            let uphill: f64 = (0..m.len()).map(|i| (y[i] - next[i]) * (next[i] - m[i]) * fz.mass[i]).sum();
            if uphill <= 0.0 {
                prev = std::mem::replace(m, next);
                continue;
            }
            // plain proximal step from m after a restart
            t = 1.0;
            let g = self.grad_m(fz, strains, m);
            let next: Vec<f64> = (0..m.len())
                .map(|i| {
                    let b = m[i] - g[i] / (lip * fz.mass[i]);
                    phase_nodal_prox(lip, b, self.m_prev[i], mat.activation, mat.phase_lo, mat.phase_hi)
                })
                .collect();
            prev = std::mem::replace(m, next);
        }
        Err(Error::Solver { step: 0, message: format!("phase block did not reach {tol:e} in {max_inner} iterations") })
    }

    /// Recovers the normal-cone multiplier from the converged gradient.
    fn multiplier(&self, grad: &[f64], mass: &[f64], m: &[f64]) -> Vec<f64> {
        let mat = self.mat;
        let r = mat.activation;
        (0..m.len())
            .map(|i| {
                let psi = -grad[i] / mass[i];
                let dm = m[i] - self.m_prev[i];
                let z = if dm != 0.0 { r * dm.signum() } else { psi.clamp(-r, r) };
                let raw = psi - z;
                let at_lo = m[i] <= mat.phase_lo;
                let at_hi = m[i] >= mat.phase_hi;
                match (at_lo, at_hi) {
                    (true, true) => raw,
                    (true, false) => raw.min(0.0),
                    (false, true) => raw.max(0.0),
                    (false, false) => 0.0,
                }
            })
            .collect()
    }
}

pub fn solve_mech_phase_step(p: &MechPhaseProblem) -> Result<MechPhaseSolution> {
    p.check()?;
    let fz = p.frozen();
    let d = p.mesh.dim;
    let tol = p.options.opt_tol;
    let cg = CgOptions { rel_tol: p.options.cg_tol, abs_tol: 1e-300, max_iter: 20 * fz.a.dim() + 100 };

    // extrapolated displacement, held at u^{k−1} on pinned nodes
    let mut u: Vec<f64> = p.u_prev.iter().zip(p.u_prev2).map(|(a, b)| 2.0 * a - b).collect();
    for &i in p.pinned {
        for c in 0..d {
            u[d * i + c] = p.u_prev[d * i + c];
        }
    }
    let mut m = p.m_prev.to_vec();
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    for it in 1..=p.options.opt_max {
        sweeps = it;
        let rhs = p.rhs_u(&fz, &m);
        pcg(&fz.a, &rhs, &mut u, Some(&fz.fixed), cg)?;
        let strains = p.mesh.strain(&u);
        p.solve_phase_block(&fz, &strains, &mut m, 0.1 * tol)?;
        let grad = p.grad_m(&fz, &strains, &m);
        residual = p.u_residual(&fz, &u, &m).max(p.m_residual(&fz, &grad, &m));
        if residual <= tol {
            break;
        }
    }
    if !(residual <= tol) {
        return Err(Error::Solver {
            step: 0,
            message: format!("mechanical/phase step stalled at residual {residual:e} after {sweeps} sweeps"),
        });
    }
    let strains = p.mesh.strain(&u);
    let grad = p.grad_m(&fz, &strains, &m);
    let xi = p.multiplier(&grad, &fz.mass, &m);
    let objective = p.objective(&u, &m);
    let before = p.objective(p.u_prev, p.m_prev);
    if objective > before + 1e-9 * (1.0 + before.abs()) {
        return Err(Error::Invariant { step: 0, message: format!("incremental functional increased from {before:e} to {objective:e}") });
    }
    Ok(MechPhaseSolution { u, m, xi, residual, iterations: sweeps, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force scalar minimization on a `1e-6` grid of the box.
    fn scan(a: f64, b: f64, p: f64, kappa: f64, lo: f64, hi: f64) -> f64 {
        let n = ((hi - lo) / 1e-6).round() as usize;
        let f = |v: f64| 0.5 * a * (v - b) * (v - b) + kappa * (v - p).abs();
        let mut best = (f64::INFINITY, lo);
        for i in 0..=n {
            let v = lo + (hi - lo) * i as f64 / n as f64;
            let fv = f(v);
            if fv < best.0 {
                best = (fv, v);
            }
        }
        best.1
    }

    #[test]
    fn prox_examples() {
        assert!((phase_nodal_prox(1.0, 0.3, 0.0, 0.05, 0.0, 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(phase_nodal_prox(1.0, 0.03, 0.0, 0.05, 0.0, 1.0), 0.0);
        assert_eq!(phase_nodal_prox(1.0, 1.5, 1.0, 0.05, 0.0, 1.0), 1.0);
        assert_eq!(phase_nodal_prox(1.0, 0.7, 0.2, 0.0, 0.0, 1.0), 0.7);
        assert_eq!(phase_nodal_prox(1.0, -0.7, 0.2, 0.0, 0.0, 1.0), 0.0);
        // band edge sticks
        assert_eq!(phase_nodal_prox(2.0, 0.35, 0.3, 0.1, 0.0, 1.0), 0.3);
        for (a, b, p, k) in [(1.0, 0.3, 0.0, 0.05), (3.0, 0.45, 0.5, 0.2), (0.5, 0.9, 0.2, 0.1)] {
            let v = phase_nodal_prox(a, b, p, k, 0.0, 1.0);
            assert!((v - scan(a, b, p, k, 0.0, 1.0)).abs() <= 2e-6);
        }
    }

    #[test]
    fn prox_stick_set_is_rate_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = rng.random_range(0.1..10.0);
            let p = rng.random_range(0.2..0.8);
            let drive = rng.random_range(-1.0..1.0);
            let r = rng.random_range(0.0..0.5);
            let c = rng.random_range(0.1..10.0);
            let stick = |s: f64| phase_nodal_prox(a, p + s * drive / a, p, s * r, -1e9, 1e9) == p;
            assert_eq!(stick(1.0), stick(c));
        }
    }

    #[test]
    fn tau_max_branches() {
        let mut mat = MaterialModel::desk_default(1);
        assert_eq!(tau_max(&mat, 0.05, 3.0), 0.05);
        mat.double_well = 26.0;
        assert!((mat.inf_phi1_mm(3.0, 1001) + 16.0).abs() < 1e-12);
        assert!((tau_max(&mat, 0.05, 3.0) - 1.0 / 256.0).abs() < 1e-15);
        assert_eq!(tau_max(&mat, 0.001, 3.0), 0.001);
    }

    struct Data {
        mesh: Mesh,
        mat: MaterialModel,
        u1: Vec<f64>,
        u2: Vec<f64>,
        m0: Vec<f64>,
        chi: Vec<f64>,
        w: Vec<f64>,
        load: Vec<f64>,
    }

    impl Data {
        fn problem(&self, tau: f64) -> MechPhaseProblem<'_> {
            MechPhaseProblem {
                mesh: &self.mesh,
                mat: &self.mat,
                u_prev: &self.u1,
                u_prev2: &self.u2,
                m_prev: &self.m0,
                chi_prev: &self.chi,
                w_prev: &self.w,
                tau,
                load: &self.load,
                pinned: &[],
                tau_max: 1.0,
                options: SolverOptions::default(),
            }
        }
    }

    fn equilibrium(nx: usize) -> Data {
        let mesh = build_mesh(1, &[1.0], &[nx]).unwrap();
        let mat = MaterialModel::desk_default(1);
        let m0 = mat.swelling_curve(0.5);
        let u: Vec<f64> = mesh.coords.iter().map(|p| mat.swelling.xx * m0 * p[0]).collect();
        let n = mesh.num_nodes();
        Data { u1: u.clone(), u2: u, m0: vec![m0; n], chi: vec![0.5; n], w: vec![0.0; n], load: vec![0.0; n], mesh, mat }
    }

    #[test]
    fn equilibrium_is_stationary() {
        let data = equilibrium(9);
        let sol = solve_mech_phase_step(&data.problem(1e-3)).unwrap();
        for (a, b) in sol.u.iter().zip(&data.u1) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(sol.m, data.m0);
        assert!(sol.xi.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_node_stick_below_threshold() {
        // one element, rigid displacement: the only drive on m is k(m − a)
        let mut data = equilibrium(2);
        let drive = 0.8 * data.mat.activation; // below r
                                               // shift the equilibrium so that k(m0 − a) = −drive at both nodes
        let a = data.mat.swelling_curve(0.5);
        let m0 = a - drive / data.mat.coupling;
        data.m0 = vec![m0; 2];
        let u: Vec<f64> = data.mesh.coords.iter().map(|p| data.mat.swelling.xx * m0 * p[0]).collect();
        data.u1 = u.clone();
        data.u2 = u;
        let sol = solve_mech_phase_step(&data.problem(1e-2)).unwrap();
        assert_eq!(sol.m, data.m0);

        // above threshold the node slips
        let m0 = a - 1.5 * data.mat.activation / data.mat.coupling;
        data.m0 = vec![m0; 2];
        let u: Vec<f64> = data.mesh.coords.iter().map(|p| data.mat.swelling.xx * m0 * p[0]).collect();
        data.u1 = u.clone();
        data.u2 = u;
        let sol = solve_mech_phase_step(&data.problem(1e-2)).unwrap();
        assert!(sol.m.iter().all(|&v| v > m0));
    }

    fn random_data(rng: &mut ChaCha8Rng, nx: usize) -> Data {
        let mesh = build_mesh(1, &[1.0], &[nx]).unwrap();
        let mat = MaterialModel::desk_default(1);
        let n = mesh.num_nodes();
        let u1: Vec<f64> = (0..n).map(|_| rng.random_range(-0.05..0.05)).collect();
        let u2: Vec<f64> = u1.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect();
        let m0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let chi = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let w = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let load = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
        Data { mesh, mat, u1, u2, m0, chi, w, load }
    }

    #[test]
    fn monte_carlo_minimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_data(&mut rng, 5);
        let p = data.problem(1e-2);
        let sol = solve_mech_phase_step(&p).unwrap();
        let best = p.objective(&sol.u, &sol.m);
        for _ in 0..1000 {
            let s = 10f64.powf(rng.random_range(-6.0..-1.0));
            let u: Vec<f64> = sol.u.iter().map(|v| v + s * rng.random_range(-1.0..1.0)).collect();
            let m: Vec<f64> = sol.m.iter().map(|v| (v + s * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0)).collect();
            assert!(p.objective(&u, &m) >= best - 1e-12 * (1.0 + best.abs()));
        }
    }

    #[test]
    fn box_and_complementarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let mut data = random_data(&mut rng, 12);
            // push some nodes against the box
            for i in 0..4 {
                data.m0[i] = if i % 2 == 0 { 0.0 } else { 1.0 };
            }
            let sol = solve_mech_phase_step(&data.problem(5e-2)).unwrap();
            for i in 0..sol.m.len() {
                assert!((0.0..=1.0).contains(&sol.m[i]));
                if sol.m[i] > 0.0 && sol.m[i] < 1.0 {
                    assert_eq!(sol.xi[i], 0.0);
                }
                // ξ·(v − m) ≤ 0 for v in K
                for v in [0.0, 1.0] {
                    assert!(sol.xi[i] * (v - sol.m[i]) <= 0.0);
                }
            }
            assert!(sol.residual <= 1e-10);
        }
    }

    #[test]
    fn rejects_large_steps() {
        let data = equilibrium(5);
        let mut p = data.problem(1e-2);
        p.tau_max = 1e-3;
        assert!(matches!(solve_mech_phase_step(&p), Err(Error::StepTooLarge { .. })));
    }
}
