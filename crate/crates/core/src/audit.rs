//! Energy bookkeeping of a trajectory.
//!
//! Testing the three step problems by `u^k − u^{k−1}`, `m^k − m^{k−1}`,
//! `μ^k` and `1` gives, with `E = kinetic + elastic + chemical + gradient`
//! and `W = ∫w`,
//!
//! ```text
//! E^k − E^{k−1} + D_v + D_p + D_a + D_d + N + A_m = W_f + W_h
//! W^k − W^{k−1} = H_v + H_d + D_p + D_a + A_h + Q
//! ```
//!
//! where `N ≥ 0` collects the numerical dissipation of the implicit steps,
//! `A_m`, `A_h` are the adiabatic exchange terms at `w^{k−1}` and `w^k`, and
//! `H_v ≤ D_v`, `H_d ≤ D_d` are the regularized heat sources. Adding `ν`
//! times the second line to the first yields the audited balance; its
//! defect is `−ν Σ (D_v − H_v + D_d − H_d)` up to solver tolerances.

use crate::constitutive::MaterialModel;
use crate::grid::Mesh;
use crate::linalg::{dot, mass_norm};
use crate::state::{State, StepLoads};
use crate::tensor::SymTensor;

/// Energy levels at one time level and the increments of the step ending
/// there (zero for the initial row).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    /// `∫ φ₂`.
    pub elastic: f64,
    /// `∫ φ₁`.
    pub chemical: f64,
    /// `λ/2 ∫ |∇m|²`.
    pub gradient: f64,
    pub thermal: f64,
    pub diss_viscous: f64,
    pub diss_phase: f64,
    pub diss_activation: f64,
    pub diss_diffusion: f64,
    /// Regularized viscous and diffusional heat actually fed to `w`.
    pub heat_viscous: f64,
    pub heat_diffusion: f64,
    pub numerical: f64,
    pub adiabatic_mech: f64,
    pub adiabatic_heat: f64,
    pub work_force: f64,
    pub work_hydrogen: f64,
    pub work_heat: f64,
    pub mass_chi: f64,
    pub min_chi: f64,
    pub min_w: f64,
}

impl LedgerRow {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.elastic + self.chemical + self.gradient
    }

    /// Stored energy `∫ φ₁ + φ₂`.
    pub fn stored(&self) -> f64 {
        self.elastic + self.chemical
    }

    pub fn dissipation(&self) -> f64 {
        self.diss_viscous + self.diss_phase + self.diss_activation + self.diss_diffusion
    }

    pub fn work_ext(&self) -> f64 {
        self.work_force + self.work_hydrogen + self.work_heat
    }
}

fn levels(mesh: &Mesh, mat: &MaterialModel, s: &State) -> LedgerRow {
    let mass = mesh.lumped_mass();
    let d = mesh.dim;
    let kinetic = 0.5 * mat.density * mass_norm(&s.v, mass).powi(2);
    let eps = mesh.strain(&s.u);
    let mbar = mesh.element_mean(&s.m);
    let elastic = mesh.elements.iter().enumerate().map(|(e, el)| el.volume * mat.elastic_energy_density(&eps[e], mbar[e])).sum();
    let chemical = (0..s.num_nodes()).map(|i| mass[i] * mat.phi1(s.m[i], s.chi[i])).sum();
    let k1 = mesh.stiffness(&vec![1.0; mesh.num_elements()]);
    let gradient = 0.5 * mat.gradient_coeff * dot(&s.m, &k1.matvec(&s.m));
    debug_assert_eq!(s.u.len(), d * s.num_nodes());
    LedgerRow {
        t: s.t,
        kinetic,
        elastic,
        chemical,
        gradient,
        thermal: mesh.integrate(&s.w),
        mass_chi: mesh.integrate(&s.chi),
        min_chi: s.min_chi(),
        min_w: s.min_w(),
        ..Default::default()
    }
}

/// Row of the initial state.
pub fn ledger_initial(mesh: &Mesh, mat: &MaterialModel, s: &State) -> LedgerRow {
    levels(mesh, mat, s)
}

/// `Σ_{i∈e} σ_a(m_i, w_i)` contracted with the lumped strain increments.
fn adiabatic(mesh: &Mesh, mat: &MaterialModel, m_prev: &[f64], w: &[f64], deps: &[SymTensor], dm: &[f64]) -> f64 {
    let mass = mesh.lumped_mass();
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        let share = deps[e].scale(el.volume / el.nv as f64);
        for &i in el.vertices() {
            total += mat.sigma_a(m_prev[i], w[i]).ddot(&share);
        }
    }
    total + (0..dm.len()).map(|i| mass[i] * mat.s_a(m_prev[i], w[i]) * dm[i]).sum::<f64>()
}

/// Ledger row for the step from `prev` to `cur`.
pub fn ledger_step(mesh: &Mesh, mat: &MaterialModel, prev: &State, cur: &State, tau: f64, loads: &StepLoads) -> LedgerRow {
    let mass = mesh.lumped_mass();
    let n = cur.num_nodes();
    let mut row = levels(mesh, mat, cur);

    let du: Vec<f64> = cur.u.iter().zip(&prev.u).map(|(a, b)| a - b).collect();
    let dm: Vec<f64> = cur.m.iter().zip(&prev.m).map(|(a, b)| a - b).collect();
    let dchi: Vec<f64> = cur.chi.iter().zip(&prev.chi).map(|(a, b)| a - b).collect();
    let deps = mesh.strain(&du);
    let eps_now = mesh.strain(&cur.u);
    let mbar = mesh.element_mean(&cur.m);
    let cbar = mesh.element_mean(&cur.chi);
    let wbar_prev = mesh.element_mean(&prev.w);
    let dmbar = mesh.element_mean(&dm);
    let grad_mu = mesh.gradient(&cur.mu);

    let mut el_quad = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        let rate = deps[e].scale(1.0 / tau);
        let q = rate.norm_sq();
        let visc = mat.viscosity.apply(&rate).ddot(&rate);
        row.diss_viscous += tau * el.volume * visc;
        row.heat_viscous += tau * el.volume * visc / (1.0 + tau * q);
        let g = grad_mu[e];
        let g2 = g[0] * g[0] + g[1] * g[1];
        let mob = mat.transport_coeffs(&eps_now[e], mbar[e], cbar[e], wbar_prev[e]).mobility;
        row.diss_diffusion += tau * el.volume * mob * g2;
        row.heat_diffusion += tau * el.volume * mob * g2 / (1.0 + tau * g2);
        el_quad += el.volume * mat.elastic.energy(&deps[e].sub(&mat.swelling.scale(dmbar[e])));
    }
    let a_tau = mat.phase_viscosity / tau;
    let mut r_phi = 0.0;
    let mut r_chi = 0.0;
    let mut xi_work = 0.0;
    for i in 0..n {
        row.diss_phase += mass[i] * a_tau * dm[i] * dm[i];
        row.diss_activation += mass[i] * mat.activation * dm[i].abs();
        let mid = mat.phi1(cur.m[i], prev.chi[i]);
        r_phi += mass[i] * (mat.dphi1_dm(cur.m[i], prev.chi[i]) * dm[i] - (mid - mat.phi1(prev.m[i], prev.chi[i])));
        r_chi += mass[i] * (cur.mu[i] * dchi[i] - (mat.phi1(cur.m[i], cur.chi[i]) - mid));
        xi_work += mass[i] * cur.xi[i] * dm[i];
    }
    let dv: Vec<f64> = cur.v.iter().zip(&prev.v).map(|(a, b)| a - b).collect();
    let k1 = mesh.stiffness(&vec![1.0; mesh.num_elements()]);
    row.numerical = 0.5 * mat.density * mass_norm(&dv, mass).powi(2)
        + el_quad
        + 0.5 * mat.gradient_coeff * dot(&dm, &k1.matvec(&dm))
        + r_phi
        + r_chi
        + xi_work;

    row.adiabatic_mech = adiabatic(mesh, mat, &prev.m, &prev.w, &deps, &dm);
    row.adiabatic_heat = adiabatic(mesh, mat, &prev.m, &cur.w, &deps, &dm);
    row.work_force = dot(&loads.force, &du);
    row.work_hydrogen = tau * dot(&loads.hydrogen, &cur.mu);
    row.work_heat = tau * loads.heat.iter().sum::<f64>();
    row
}

/// Per-step ledger of a run; row `k` belongs to time level `k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    /// Cumulative `LHS − RHS` of the `ν`-weighted balance at every level.
    pub fn balance_residual(&self, nu: f64) -> Vec<f64> {
        let Some(first) = self.rows.first() else { return Vec::new() };
        let base = first.energy() + nu * first.thermal;
        let mut acc = 0.0;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                if k > 0 {
                    acc += (1.0 - nu) * r.dissipation() + r.numerical
                        - (r.work_force + r.work_hydrogen + nu * r.work_heat + nu * r.adiabatic_heat - r.adiabatic_mech);
                }
                r.energy() + nu * r.thermal + acc - base
            })
            .collect()
    }

    /// Slack `RHS − LHS` of the energy inequality at `ν = ½`.
    pub fn slack_nu05(&self) -> Vec<f64> {
        self.balance_residual(0.5).into_iter().map(|v| -v).collect()
    }

    /// Hydrogen gained minus hydrogen supplied through the boundary, given
    /// the per-step influx totals `τ Σ h_s`.
    pub fn hydrogen_defect(&self, influx: &[f64]) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.mass_chi - a.mass_chi - influx.iter().sum::<f64>(),
            _ => 0.0,
        }
    }
}

/// Discrete counterparts of the a-priori bounds of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AprioriMonitor {
    pub u_l2_max: f64,
    pub velocity_l2_max: f64,
    /// `(Σ τ ‖ε(δu)‖²)^½`.
    pub strain_rate_l2: f64,
    pub m_h1_max: f64,
    /// `‖ṁ‖` in `L²(Q)`.
    pub phase_rate_l2: f64,
    pub m_sup: f64,
    pub chi_h1_max: f64,
    pub mu_h1_max: f64,
    pub w_l1_max: f64,
    /// `‖∇w̄‖` in `L^{9/8}(Q)`.
    pub grad_w_l98: f64,
}

impl AprioriMonitor {
    pub const NAMES: [&'static str; 10] = [
        "u_l2_max",
        "velocity_l2_max",
        "strain_rate_l2",
        "m_h1_max",
        "phase_rate_l2",
        "m_sup",
        "chi_h1_max",
        "mu_h1_max",
        "w_l1_max",
        "grad_w_l98",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.u_l2_max,
            self.velocity_l2_max,
            self.strain_rate_l2,
            self.m_h1_max,
            self.phase_rate_l2,
            self.m_sup,
            self.chi_h1_max,
            self.mu_h1_max,
            self.w_l1_max,
            self.grad_w_l98,
        ]
    }
}

pub fn apriori_monitor(mesh: &Mesh, states: &[State], tau: f64) -> AprioriMonitor {
    let mass = mesh.lumped_mass();
    let k1 = mesh.stiffness(&vec![1.0; mesh.num_elements()]);
    let h1 = |f: &[f64]| (mass_norm(f, mass).powi(2) + dot(f, &k1.matvec(f))).sqrt();
    let mut mon = AprioriMonitor::default();
    let mut strain_rate = 0.0;
    let mut phase_rate = 0.0;
    let mut grad_w = 0.0;
    for (k, s) in states.iter().enumerate() {
        mon.u_l2_max = mon.u_l2_max.max(mass_norm(&s.u, mass));
        mon.velocity_l2_max = mon.velocity_l2_max.max(mass_norm(&s.v, mass));
        mon.m_h1_max = mon.m_h1_max.max(h1(&s.m));
        mon.m_sup = s.m.iter().fold(mon.m_sup, |a, v| a.max(v.abs()));
        mon.chi_h1_max = mon.chi_h1_max.max(h1(&s.chi));
        mon.mu_h1_max = mon.mu_h1_max.max(h1(&s.mu));
        mon.w_l1_max = mon.w_l1_max.max(s.w.iter().zip(mass).map(|(w, m)| m * w.abs()).sum());
        if k == 0 {
            continue;
        }
        let prev = &states[k - 1];
        for (e, el) in mesh.strain(&s.v).iter().zip(&mesh.elements) {
            strain_rate += tau * el.volume * e.norm_sq();
        }
        let rate: Vec<f64> = s.m.iter().zip(&prev.m).map(|(a, b)| (a - b) / tau).collect();
        phase_rate += tau * mass_norm(&rate, mass).powi(2);
        for (g, el) in mesh.gradient(&s.w).iter().zip(&mesh.elements) {
            grad_w += tau * el.volume * (g[0] * g[0] + g[1] * g[1]).sqrt().powf(9.0 / 8.0);
        }
    }
    mon.strain_rate_l2 = strain_rate.sqrt();
    mon.phase_rate_l2 = phase_rate.sqrt();
    mon.grad_w_l98 = grad_w.powf(8.0 / 9.0);
    mon
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_mesh;

    fn static_state(mesh: &Mesh, mat: &MaterialModel, t: f64) -> State {
        let n = mesh.num_nodes();
        let m0 = mat.swelling_curve(0.5);
        State {
            t,
            u: mesh.coords.iter().map(|p| mat.swelling.xx * m0 * p[0]).collect(),
            v: vec![0.0; n],
            m: vec![m0; n],
            xi: vec![0.0; n],
            chi: vec![0.5; n],
            mu: vec![mat.chemical_potential(m0, 0.5); n],
            w: vec![0.0; n],
        }
    }

    #[test]
    fn static_trajectory_has_zero_increments() {
        let mesh = build_mesh(1, &[1.0], &[6]).unwrap();
        let mat = MaterialModel::desk_default(1);
        let s0 = static_state(&mesh, &mat, 0.0);
        let s1 = static_state(&mesh, &mat, 0.1);
        let loads = StepLoads::zero(1, 6);
        let row = ledger_step(&mesh, &mat, &s0, &s1, 0.1, &loads);
        assert_eq!(row.dissipation(), 0.0);
        assert_eq!(row.numerical, 0.0);
        assert_eq!(row.work_ext(), 0.0);
        let ledger = EnergyLedger { rows: vec![ledger_initial(&mesh, &mat, &s0), row, row] };
        for nu in [0.0, 0.5, 1.0] {
            assert!(ledger.balance_residual(nu).iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn single_element_viscous_increment() {
        let mesh = build_mesh(1, &[2.0], &[2]).unwrap();
        let mat = MaterialModel::desk_default(1);
        let mut s0 = static_state(&mesh, &mat, 0.0);
        s0.u = vec![0.0; 2];
        let mut s1 = s0.clone();
        let tau = 0.01;
        s1.u = vec![0.0, 2.0 * 3e-4];
        s1.v = vec![0.0, 2.0 * 3e-4 / tau];
        s1.m[1] += 0.01;
        let row = ledger_step(&mesh, &mat, &s0, &s1, tau, &StepLoads::zero(1, 2));
        // ε(δu) = 0.03, D = 0.1, vol = 2
        let hand = tau * 0.1 * 0.03 * 0.03 * 2.0;
        assert!((row.diss_viscous - hand).abs() < 1e-18);
        assert!((row.diss_activation - 0.05 * 1.0 * 0.01).abs() < 1e-15);
        assert!(row.heat_viscous <= row.diss_viscous);
    }

    #[test]
    fn zero_trajectory_has_zero_norms() {
        let mesh = build_mesh(2, &[1.0, 1.0], &[4, 4]).unwrap();
        let n = mesh.num_nodes();
        let z = State {
            t: 0.0,
            u: vec![0.0; 2 * n],
            v: vec![0.0; 2 * n],
            m: vec![0.0; n],
            xi: vec![0.0; n],
            chi: vec![0.0; n],
            mu: vec![0.0; n],
            w: vec![0.0; n],
        };
        let mon = apriori_monitor(&mesh, &[z.clone(), z.clone(), z], 0.1);
        assert!(mon.values().iter().all(|&v| v == 0.0));
    }
}
