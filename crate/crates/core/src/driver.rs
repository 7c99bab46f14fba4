//! Time loop, interpolants and τ-refinement studies.
//!
//! Step `k` solves, in this order,
//!
//! 1. the displacement/phase increment with `χ^{k−1}`, `w^{k−1}` frozen,
//! 2. hydrogen diffusion with `(u^k, m^k, w^{k−1})`,
//! 3. the enthalpy equation with `(u^k, m^k, χ^k)` and implicit `w^k`,
//!
//! and records a ledger row. Sources are evaluated at the step midpoint
//! `(k − ½)τ`. The run aborts on the first solver failure or violated
//! invariant.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::audit::{apriori_monitor, ledger_initial, ledger_step, AprioriMonitor, EnergyLedger};
use crate::constitutive::{validate_material, MaterialModel, ValidationReport};
use crate::diffusion::{solve_chi_step, DiffusionProblem};
use crate::error::{Error, Result};
use crate::grid::{build_mesh, Mesh, Side};
use crate::heat::{solve_w_step, HeatProblem};
use crate::linalg::mass_norm;
use crate::mech::{solve_mech_phase_step, tau_max, MechPhaseProblem};
use crate::state::{SolverOptions, State, StepLoads};

/// Nodal tolerance of the sign and box invariants.
pub const SIGN_TOL: f64 = 1e-12;
/// Tolerance of the `ν = ½` energy inequality.
pub const SLACK_TOL: f64 = 1e-9;

/// `value + dx·x + dy·y + dt·t + cos_x·cos(πx/L₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ramp {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub cos_x: f64,
}

impl Ramp {
    pub const ZERO: Ramp = Ramp { value: 0.0, dx: 0.0, dy: 0.0, dt: 0.0, cos_x: 0.0 };

    pub fn constant(value: f64) -> Self {
        Self { value, ..Self::ZERO }
    }

    pub fn eval(&self, p: [f64; 2], t: f64, lx: f64) -> f64 {
        let mut v = self.value + self.dx * p[0] + self.dy * p[1] + self.dt * t;
        if self.cos_x != 0.0 {
            v += self.cos_x * (std::f64::consts::PI * p[0] / lx).cos();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn is_finite(&self) -> bool {
        [self.value, self.dx, self.dy, self.dt, self.cos_x].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    /// `dim` components.
    pub u: Vec<Ramp>,
    pub v: Vec<Ramp>,
    pub m: Ramp,
    pub chi: Ramp,
    pub theta: Ramp,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SideSources {
    /// `f_s`, `dim` components (missing components are zero).
    pub traction: Vec<Ramp>,
    pub heat: Ramp,
    pub hydrogen: Ramp,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sources {
    /// Bulk force `f`.
    pub force: Vec<Ramp>,
    /// Bulk heat source `q`.
    pub heat: Ramp,
    pub sides: BTreeMap<Side, SideSources>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    /// Field snapshot cadence in steps; `0` disables snapshots.
    pub every_n: usize,
    pub vtk: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { dir: None, every_n: 10, vtk: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    /// Nodes per axis.
    pub resolution: Vec<usize>,
    /// Sides on which the displacement is held at its initial value.
    pub clamped: Vec<Side>,
    pub t_final: f64,
    pub tau: f64,
    pub material: MaterialModel,
    pub initial: InitialData,
    pub sources: Sources,
    pub solver: SolverOptions,
    pub output: OutputOptions,
}

/// Upper end of the hydrogen range sampled by the material checks.
fn chi_sample_max(cfg: &RunConfig, mesh: &Mesh) -> f64 {
    let peak = mesh.coords.iter().map(|&p| cfg.initial.chi.eval(p, 0.0, mesh.lengths[0])).fold(0.0, f64::max);
    3.0f64.max(2.0 * peak)
}

impl RunConfig {
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.tau.is_finite()) || !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("need 0 < tau and 0 < T, got tau = {}, T = {}", self.tau, self.t_final)));
        }
        let n = self.t_final / self.tau;
        let k = n.round();
        if (n - k).abs() > 1e-9 * n.max(1.0) || k < 1.0 {
            return Err(Error::Config(format!("T = {} is not an integer multiple of tau = {}", self.t_final, self.tau)));
        }
        Ok(k as usize)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.dim, &self.lengths, &self.resolution)
    }

    pub fn tau_max(&self, mesh: &Mesh) -> f64 {
        tau_max(&self.material, self.t_final, chi_sample_max(self, mesh))
    }

    pub fn validate_material(&self, mesh: &Mesh) -> ValidationReport {
        validate_material(&self.material, chi_sample_max(self, mesh), 10_000)
    }

    /// [`RunConfig::check`] plus the material assumptions; the entry check
    /// of a run.
    pub fn prepare(&self) -> Result<Mesh> {
        let mesh = self.check()?;
        let report = self.validate_material(&mesh);
        report.ensure()?;
        for f in report.flags() {
            log::warn!("asymptotic assumption '{}' not met: {} (margin {:e})", f.id, f.description, f.margin);
        }
        Ok(mesh)
    }

    /// Shape, step-size and initial-data invariants of the configuration.
    /// Builds the mesh.
    pub fn check(&self) -> Result<Mesh> {
        let mesh = self.mesh()?;
        self.num_steps()?;
        if self.material.dim != self.dim {
            return Err(Error::Config(format!("material is {}D but the domain is {}D", self.material.dim, self.dim)));
        }
        let d = self.dim;
        let ramps = [&self.initial.u, &self.initial.v, &self.sources.force];
        if ramps.iter().any(|r| r.len() != d) {
            return Err(Error::Config(format!("vector-valued data must have {d} components")));
        }
        let tmax = self.tau_max(&mesh);
        if self.tau > tmax * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { tau: self.tau, tau_max: tmax });
        }
        let mat = &self.material;
        let lx = mesh.lengths[0];
        for &p in &mesh.coords {
            let (m, chi, theta) = (self.initial.m.eval(p, 0.0, lx), self.initial.chi.eval(p, 0.0, lx), self.initial.theta.eval(p, 0.0, lx));
            if !mat.in_phase_box(m) {
                return Err(Error::Config(format!("initial phase {m} at {p:?} is outside [m_lo, m_hi]")));
            }
            if !(chi >= 0.0) {
                return Err(Error::Config(format!("initial hydrogen {chi} at {p:?} is negative")));
            }
            if !(theta >= 0.0) {
                return Err(Error::Config(format!("initial temperature {theta} at {p:?} is negative")));
            }
        }
        Ok(mesh)
    }
}

fn eval_vec(r: &[Ramp], mesh: &Mesh, t: f64) -> Vec<f64> {
    let d = mesh.dim;
    let lx = mesh.lengths[0];
    let mut out = vec![0.0; d * mesh.num_nodes()];
    for (i, &p) in mesh.coords.iter().enumerate() {
        for c in 0..d.min(r.len()) {
            out[d * i + c] = r[c].eval(p, t, lx);
        }
    }
    out
}

fn eval_scalar(r: &Ramp, mesh: &Mesh, t: f64) -> Vec<f64> {
    let lx = mesh.lengths[0];
    mesh.coords.iter().map(|&p| r.eval(p, t, lx)).collect()
}

/// State at `t = 0`, with `w₀ = ω(m₀, θ₀)`.
pub fn initial_state(cfg: &RunConfig, mesh: &Mesh) -> Result<State> {
    let mat = &cfg.material;
    let ini = &cfg.initial;
    let m = eval_scalar(&ini.m, mesh, 0.0);
    let chi = eval_scalar(&ini.chi, mesh, 0.0);
    let theta = eval_scalar(&ini.theta, mesh, 0.0);
    let w = m.iter().zip(&theta).map(|(&m, &th)| mat.omega_of_theta(m, th)).collect::<Result<Vec<_>>>()?;
    let mu = m.iter().zip(&chi).map(|(&m, &c)| mat.chemical_potential(m, c)).collect();
    Ok(State { t: 0.0, u: eval_vec(&ini.u, mesh, 0.0), v: eval_vec(&ini.v, mesh, 0.0), xi: vec![0.0; m.len()], m, chi, mu, w })
}

/// Nodal load functionals at time `t`.
pub fn step_loads(sources: &Sources, mesh: &Mesh, t: f64) -> StepLoads {
    let d = mesh.dim;
    let lx = mesh.lengths[0];
    let mass = mesh.lumped_mass();
    let mut force = eval_vec(&sources.force, mesh, t);
    for (i, f) in force.iter_mut().enumerate() {
        *f *= mass[i / d];
    }
    let mut heat: Vec<f64> = eval_scalar(&sources.heat, mesh, t).iter().zip(mass).map(|(q, m)| q * m).collect();
    let traction = mesh.boundary_functional_vec(|side, p| {
        let mut v = [0.0; 2];
        if let Some(s) = sources.sides.get(&side) {
            for (c, r) in s.traction.iter().enumerate().take(2) {
                v[c] = r.eval(p, t, lx);
            }
        }
        v
    });
    for (f, g) in force.iter_mut().zip(&traction) {
        *f += g;
    }
    let side_scalar = |pick: fn(&SideSources) -> &Ramp| {
        mesh.boundary_functional(|side, p| sources.sides.get(&side).map_or(0.0, |s| pick(s).eval(p, t, lx)))
    };
    for (q, g) in heat.iter_mut().zip(side_scalar(|s| &s.heat)) {
        *q += g;
    }
    StepLoads { force, heat, hydrogen: side_scalar(|s| &s.hydrogen) }
}

/// Iteration counts and residuals of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub mech_sweeps: usize,
    pub mech_residual: f64,
    pub diffusion_sweeps: usize,
    pub diffusion_residual: f64,
    pub heat_sweeps: usize,
    pub heat_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub material: MaterialModel,
    pub tau: f64,
    /// `states[k]` lives at `t = kτ`.
    pub states: Vec<State>,
    pub ledger: EnergyLedger,
    /// Loads of step `k` at index `k − 1`.
    pub loads: Vec<StepLoads>,
    pub stats: Vec<StepStats>,
}

impl Trajectory {
    pub fn num_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        self.num_steps() as f64 * self.tau
    }

    /// Per-step hydrogen supplied through the boundary, `τ Σ_i H_i`.
    pub fn influx(&self) -> Vec<f64> {
        self.loads.iter().map(|l| self.tau * l.hydrogen.iter().sum::<f64>()).collect()
    }

    pub fn apriori(&self) -> AprioriMonitor {
        apriori_monitor(&self.mesh, &self.states, self.tau)
    }
}

fn check_state(mat: &MaterialModel, s: &State, k: usize) -> Result<()> {
    let bad = |message: String| Err(Error::Invariant { step: k, message });
    if let Some(i) = s.chi.iter().position(|&c| !(c >= -SIGN_TOL)) {
        return bad(format!("hydrogen {:e} at node {i}", s.chi[i]));
    }
    if let Some(i) = s.w.iter().position(|&w| !(w >= -SIGN_TOL)) {
        return bad(format!("enthalpy {:e} at node {i}", s.w[i]));
    }
    if let Some(i) = s.m.iter().position(|&m| !mat.in_phase_box(m)) {
        return bad(format!("phase {} outside the admissible box at node {i}", s.m[i]));
    }
    Ok(())
}

/// Runs the staggered scheme from `t = 0` to `T`.
pub fn run(cfg: &RunConfig) -> Result<Trajectory> {
    run_with(cfg, |_, _| Ok(()))
}

/// [`run`] with a callback invoked after every accepted step (and once for
/// the initial state with `k = 0`).
pub fn run_with(cfg: &RunConfig, mut on_step: impl FnMut(usize, &State) -> Result<()>) -> Result<Trajectory> {
    let mesh = cfg.prepare()?;
    let mat = &cfg.material;
    let steps = cfg.num_steps()?;
    let tau = cfg.tau;
    let tmax = cfg.tau_max(&mesh);
    let pinned = mesh.nodes_on(&cfg.clamped);

    let s0 = initial_state(cfg, &mesh)?;
    check_state(mat, &s0, 0)?;
    on_step(0, &s0)?;
    let mut ledger = EnergyLedger { rows: vec![ledger_initial(&mesh, mat, &s0)] };
    // u^{−1} from the initial velocity
    let mut u_back: Vec<f64> = s0.u.iter().zip(&s0.v).map(|(u, v)| u - tau * v).collect();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(s0);
    let mut loads_all = Vec::with_capacity(steps);
    let mut stats = Vec::with_capacity(steps);

    for k in 1..=steps {
        let prev = &states[k - 1];
        let loads = step_loads(&cfg.sources, &mesh, (k as f64 - 0.5) * tau);

        let mech = solve_mech_phase_step(&MechPhaseProblem {
            mesh: &mesh,
            mat,
            u_prev: &prev.u,
            u_prev2: &u_back,
            m_prev: &prev.m,
            chi_prev: &prev.chi,
            w_prev: &prev.w,
            tau,
            load: &loads.force,
            pinned: &pinned,
            tau_max: tmax,
            options: cfg.solver,
        })
        .map_err(|e| e.at_step(k))?;

        let diff = solve_chi_step(&DiffusionProblem {
            mesh: &mesh,
            mat,
            u: &mech.u,
            m: &mech.m,
            chi_prev: &prev.chi,
            w_prev: &prev.w,
            tau,
            influx: &loads.hydrogen,
            options: cfg.solver,
        })
        .map_err(|e| e.at_step(k))?;

        let heat = solve_w_step(&HeatProblem {
            mesh: &mesh,
            mat,
            u: &mech.u,
            u_prev: &prev.u,
            m: &mech.m,
            m_prev: &prev.m,
            chi: &diff.chi,
            grad_mu: &diff.grad_mu,
            w_prev: &prev.w,
            tau,
            heat_load: &loads.heat,
            options: cfg.solver,
        })
        .map_err(|e| e.at_step(k))?;

        let v = mech.u.iter().zip(&prev.u).map(|(a, b)| (a - b) / tau).collect();
        let cur = State { t: k as f64 * tau, u: mech.u, v, m: mech.m, xi: mech.xi, chi: diff.chi, mu: diff.mu, w: heat.w };
        check_state(mat, &cur, k)?;
        let row = ledger_step(&mesh, mat, prev, &cur, tau, &loads);
        if row.dissipation() < 0.0 || row.diss_activation < 0.0 || row.diss_phase < 0.0 {
            return Err(Error::Invariant { step: k, message: "negative dissipation increment".into() });
        }
        ledger.rows.push(row);
        let slack = -ledger.balance_residual(0.5).last().copied().unwrap_or(0.0);
        if slack < -SLACK_TOL {
            return Err(Error::Invariant { step: k, message: format!("energy inequality slack {slack:e} below -{SLACK_TOL:e}") });
        }
        log::debug!(
            "step {k}: mech {} sweeps ({:.1e}), diffusion {} ({:.1e}), heat {} ({:.1e})",
            mech.iterations,
            mech.residual,
            diff.iterations,
            diff.residual,
            heat.iterations,
            heat.residual
        );
        stats.push(StepStats {
            mech_sweeps: mech.iterations,
            mech_residual: mech.residual,
            diffusion_sweeps: diff.iterations,
            diffusion_residual: diff.residual,
            heat_sweeps: heat.iterations,
            heat_residual: heat.residual,
        });
        on_step(k, &cur)?;
        u_back.clone_from(&prev.u);
        states.push(cur);
        loads_all.push(loads);
    }
    Ok(Trajectory { mesh, material: cfg.material.clone(), tau, states, ledger, loads: loads_all, stats })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Displacement,
    Velocity,
    Phase,
    Multiplier,
    Hydrogen,
    ChemicalPotential,
    Enthalpy,
}

impl Field {
    fn of(self, s: &State) -> &[f64] {
        match self {
            Field::Displacement => &s.u,
            Field::Velocity => &s.v,
            Field::Phase => &s.m,
            Field::Multiplier => &s.xi,
            Field::Hydrogen => &s.chi,
            Field::ChemicalPotential => &s.mu,
            Field::Enthalpy => &s.w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Piecewise affine through the time levels.
    Affine,
    /// `f^k` on `((k−1)τ, kτ]`.
    Backward,
    /// `f^{k−1}` on `[(k−1)τ, kτ)`.
    Forward,
    /// Piecewise affine through the discrete velocities
    /// `(u^k − u^{k−1})/τ`, starting from the initial velocity.
    VelocityAffine,
}

/// Evaluates an interpolant of the trajectory at `t ∈ [0, T]`.
pub fn interpolant_eval(tr: &Trajectory, field: Field, kind: Interp, t: f64) -> Result<Vec<f64>> {
    let n = tr.num_steps();
    let tau = tr.tau;
    let t_end = tr.t_final();
    if !(t >= -1e-12 * t_end && t <= t_end * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("time {t} outside [0, {t_end}]")));
    }
    let s = (t / tau).clamp(0.0, n as f64);
    // interval index k with t ∈ ((k−1)τ, kτ], snapped at the grid points
    let near = s.round();
    let on_level = (s - near).abs() <= 1e-9;
    let level = |k: usize| Field::of(if kind == Interp::VelocityAffine { Field::Velocity } else { field }, &tr.states[k]);
    if on_level {
        let k = near as usize;
        return Ok(match kind {
            Interp::Forward => level(k.min(n - 1)).to_vec(),
            _ => level(k).to_vec(),
        });
    }
    let k = s.ceil() as usize;
    let theta = s - (k - 1) as f64;
    Ok(match kind {
        Interp::Backward => level(k).to_vec(),
        Interp::Forward => level(k - 1).to_vec(),
        Interp::Affine | Interp::VelocityAffine => level(k).iter().zip(level(k - 1)).map(|(a, b)| theta * a + (1.0 - theta) * b).collect(),
    })
}

/// `L²(Q)` distances between successive refinement levels of the
/// piecewise-constant rates `ε(u̇)`, `ṁ` and the backward interpolants of
/// `∇μ`, `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineReport {
    pub taus: Vec<f64>,
    pub monitors: Vec<AprioriMonitor>,
    /// Terminal `ν = 1` ledger defect per level.
    pub defects_nu1: Vec<f64>,
    /// Terminal `ν = ½` slack per level.
    pub slack_nu05: Vec<f64>,
    pub hydrogen_defects: Vec<f64>,
    /// `diffs[f][l]` compares levels `l` and `l + 1` for field `f` of
    /// [`RefineReport::FIELDS`].
    pub diffs: [Vec<f64>; 4],
}

impl RefineReport {
    pub const FIELDS: [&'static str; 4] = ["strain_rate", "phase_rate", "grad_mu", "enthalpy"];

    /// `diffs[f][l] / diffs[f][l + 1]`.
    pub fn ratios(&self) -> [Vec<f64>; 4] {
        std::array::from_fn(|f| self.diffs[f].windows(2).map(|w| w[0] / w[1]).collect())
    }

    /// Largest relative spread `(max − min)/max` of each monitored norm.
    pub fn monitor_spread(&self) -> [f64; 10] {
        std::array::from_fn(|j| {
            let v: Vec<f64> = self.monitors.iter().map(|m| m.values()[j]).collect();
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            if hi == 0.0 {
                0.0
            } else {
                (hi - lo) / hi.abs()
            }
        })
    }

    /// `defects_nu1[l] / defects_nu1[l + 1]`.
    pub fn defect_ratios(&self) -> Vec<f64> {
        self.defects_nu1.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// Strain rate, phase rate, `∇μ` and `w` of one step.
type StepRates<'a> = (Vec<crate::tensor::SymTensor>, Vec<f64>, Vec<[f64; 2]>, &'a [f64]);

/// Piecewise-constant data of step `k` used by the refinement distances.
fn step_rates(tr: &Trajectory, k: usize) -> StepRates<'_> {
    let mesh = &tr.mesh;
    let s = &tr.states[k];
    let prev = &tr.states[k - 1];
    let mdot = s.m.iter().zip(&prev.m).map(|(a, b)| (a - b) / tr.tau).collect();
    (mesh.strain(&s.v), mdot, mesh.gradient(&s.mu), &s.w)
}

fn level_distance(coarse: &Trajectory, fine: &Trajectory) -> [f64; 4] {
    let mesh = &fine.mesh;
    let mass = mesh.lumped_mass();
    let ratio = (coarse.tau / fine.tau).round() as usize;
    let mut acc = [0.0; 4];
    let mut c_cache = None;
    for j in 1..=fine.num_steps() {
        let k = j.div_ceil(ratio);
        if c_cache.as_ref().is_none_or(|(kc, _)| *kc != k) {
            c_cache = Some((k, step_rates(coarse, k)));
        }
        let (_, c) = c_cache.as_ref().unwrap();
        let f = step_rates(fine, j);
        let tau = fine.tau;
        for (e, el) in mesh.elements.iter().enumerate() {
            acc[0] += tau * el.volume * f.0[e].sub(&c.0[e]).norm_sq();
            let g = [f.2[e][0] - c.2[e][0], f.2[e][1] - c.2[e][1]];
            acc[2] += tau * el.volume * (g[0] * g[0] + g[1] * g[1]);
        }
        let dm: Vec<f64> = f.1.iter().zip(&c.1).map(|(a, b)| a - b).collect();
        acc[1] += tau * mass_norm(&dm, mass).powi(2);
        let dw: Vec<f64> = f.3.iter().zip(c.3).map(|(a, b)| a - b).collect();
        acc[3] += tau * mass_norm(&dw, mass).powi(2);
    }
    acc.map(f64::sqrt)
}

/// Runs `levels` copies of `cfg` with `τ, τ/2, …` (concurrently) and
/// compares successive levels.
pub fn refine_study(cfg: &RunConfig, levels: usize) -> Result<RefineReport> {
    if levels < 2 {
        return Err(Error::Config(format!("a refinement study needs at least 2 levels, got {levels}")));
    }
    let configs: Vec<RunConfig> = (0..levels)
        .map(|l| {
            let mut c = cfg.clone();
            c.tau = cfg.tau / (1u64 << l) as f64;
            c.output.dir = None;
            c
        })
        .collect();
    let runs: Vec<Result<Trajectory>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run(c))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("level panicked".into())))).collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut diffs: [Vec<f64>; 4] = Default::default();
    for w in runs.windows(2) {
        let d = level_distance(&w[0], &w[1]);
        for f in 0..4 {
            diffs[f].push(d[f]);
        }
    }
    Ok(RefineReport {
        taus: runs.iter().map(|r| r.tau).collect(),
        monitors: runs.iter().map(|r| r.apriori()).collect(),
        defects_nu1: runs.iter().map(|r| r.ledger.balance_residual(1.0).last().copied().unwrap_or(0.0)).collect(),
        slack_nu05: runs.iter().map(|r| r.ledger.slack_nu05().last().copied().unwrap_or(0.0)).collect(),
        hydrogen_defects: runs.iter().map(|r| r.ledger.hydrogen_defect(&r.influx())).collect(),
        diffs,
    })
}
