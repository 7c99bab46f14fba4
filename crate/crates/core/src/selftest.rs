//! Built-in invariant and oracle suite behind `hydride selftest`.

use std::f64::consts::PI;
use std::fmt;

use crate::driver::{run, Field, Ramp, Trajectory};
use crate::error::Error;
use crate::grid::Mesh;
use crate::mech::phase_nodal_prox;
use crate::output::energy_csv;
use crate::presets;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self { name, checks: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelftestReport {
    pub suites: Vec<Suite>,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.suites.iter().all(|s| s.passed() == s.checks.len())
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{:<14} {}/{} passed", s.name, s.passed(), s.checks.len())?;
            for c in s.checks.iter().filter(|c| !c.passed) {
                writeln!(f, "  FAILED {}: {}", c.name, c.detail)?;
            }
        }
        Ok(())
    }
}

/// Coefficient of `cos(πx/L₁)` in the lumped `L²` projection of `f`.
pub fn cosine_amplitude(mesh: &Mesh, f: &[f64]) -> f64 {
    let mass = mesh.lumped_mass();
    let lx = mesh.lengths[0];
    let (mut num, mut den) = (0.0, 0.0);
    for (i, p) in mesh.coords.iter().enumerate() {
        let c = (PI * p[0] / lx).cos();
        num += mass[i] * f[i] * c;
        den += mass[i] * c * c;
    }
    num / den
}

/// Exponential decay rate of the `cos(πx)` mode of `field` over the run.
pub fn mode_decay_rate(tr: &Trajectory, field: Field) -> f64 {
    let pick = |k: usize| match field {
        Field::Hydrogen => &tr.states[k].chi,
        Field::Enthalpy => &tr.states[k].w,
        Field::Phase => &tr.states[k].m,
        _ => &tr.states[k].mu,
    };
    let a0 = cosine_amplitude(&tr.mesh, pick(0));
    let a1 = cosine_amplitude(&tr.mesh, pick(tr.num_steps()));
    -(a1 / a0).ln() / tr.t_final()
}

fn run_suite(suite: &mut Suite, label: &str, cfg: &crate::driver::RunConfig) -> Option<Trajectory> {
    match run(cfg) {
        Ok(tr) => Some(tr),
        Err(e) => {
            suite.check(format!("{label} completes"), false, e.to_string());
            None
        }
    }
}

fn invariants() -> Suite {
    let mut s = Suite::new("invariants");
    if let Some(tr) = run_suite(&mut s, "desk-default", &presets::desk_default()) {
        let min_chi = tr.ledger.rows.iter().map(|r| r.min_chi).fold(f64::INFINITY, f64::min);
        let min_w = tr.ledger.rows.iter().map(|r| r.min_w).fold(f64::INFINITY, f64::min);
        s.check("hydrogen non-negative", min_chi >= -1e-12, format!("min chi = {min_chi:e}"));
        s.check("enthalpy non-negative", min_w >= -1e-12, format!("min w = {min_w:e}"));
        let slack = tr.ledger.slack_nu05().into_iter().fold(f64::INFINITY, f64::min);
        s.check("energy inequality", slack >= -1e-9, format!("min slack = {slack:e}"));
        let defect = tr.ledger.hydrogen_defect(&tr.influx());
        s.check("hydrogen ledger", defect.abs() <= 1e-12, format!("defect = {defect:e}"));
        let mat = &tr.material;
        let boxed = tr.states.iter().all(|st| st.m.iter().all(|&m| mat.in_phase_box(m)));
        s.check("phase box", boxed, "");
        let charged = tr.states.last().unwrap().m[0] > tr.states[0].m[0];
        s.check("phase rises where charged", charged, "");
    }
    let mut cfg = presets::equilibrium();
    cfg.initial.chi = Ramp { value: 0.5, cos_x: 0.2, ..Ramp::ZERO };
    if let Some(tr) = run_suite(&mut s, "closed bar", &cfg) {
        let defect = tr.ledger.hydrogen_defect(&tr.influx());
        s.check("closed system conserves hydrogen", defect.abs() <= 1e-12, format!("defect = {defect:e}"));
    }
    if let Some(tr) = run_suite(&mut s, "equilibrium", &presets::equilibrium()) {
        let first = &tr.states[0];
        let drift = tr.states.iter().map(|st| {
            let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            d(&st.u, &first.u).max(d(&st.m, &first.m)).max(d(&st.chi, &first.chi)).max(d(&st.w, &first.w))
        });
        let drift = drift.fold(0.0, f64::max);
        s.check("equilibrium is stationary", drift <= 1e-10, format!("max drift = {drift:e}"));
    }
    s
}

fn oracles() -> Suite {
    let mut s = Suite::new("oracles");
    if let Some(tr) = run_suite(&mut s, "diffusion oracle", &presets::diffusion_oracle()) {
        let rate = mode_decay_rate(&tr, Field::Hydrogen);
        let exact = 5.0 * PI * PI;
        s.check("diffusion decay 5 pi^2", ((rate - exact) / exact).abs() < 0.02, format!("rate {rate} vs {exact}"));
    }
    if let Some(tr) = run_suite(&mut s, "conduction oracle", &presets::conduction_oracle()) {
        let rate = mode_decay_rate(&tr, Field::Enthalpy);
        let exact = PI * PI;
        s.check("conduction decay pi^2", ((rate - exact) / exact).abs() < 0.02, format!("rate {rate} vs {exact}"));
    }
    s
}

fn threshold() -> Suite {
    let mut s = Suite::new("threshold");
    let accept = presets::double_well();
    let mut reject = accept.clone();
    reject.tau = 0.01;
    reject.t_final = 0.05;
    let tmax = accept.tau_max(&accept.mesh().unwrap());
    s.check("tau_max = 1/256", (tmax - 1.0 / 256.0).abs() < 1e-12, format!("tau_max = {tmax}"));
    let rejected = matches!(reject.prepare(), Err(Error::StepTooLarge { .. }));
    s.check("tau = 0.01 rejected", rejected, "");
    let accepted = run(&accept);
    s.check("tau = 0.003 accepted", accepted.is_ok(), accepted.err().map_or(String::new(), |e| e.to_string()));
    s
}

fn kernels() -> Suite {
    let mut s = Suite::new("kernels");
    // deterministic LCG, independent of any RNG crate
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mat = crate::constitutive::MaterialModel::desk_default(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, chi) = (next(), 3.0 * next());
        let h = 1e-6;
        let fd = |f: &dyn Fn(f64, f64) -> f64, dm: f64, dc: f64| (f(m + dm * h, chi + dc * h) - f(m - dm * h, chi - dc * h)) / (2.0 * h);
        let pairs = [
            (mat.dphi1_dm(m, chi), fd(&|a, b| mat.phi1(a, b), 1.0, 0.0)),
            (mat.chemical_potential(m, chi), fd(&|a, b| mat.phi1(a, b), 0.0, 1.0)),
            (mat.phi1_chichi(m, chi), fd(&|a, b| mat.chemical_potential(a, b), 0.0, 1.0)),
            (mat.phi1_mm(m, chi), fd(&|a, b| mat.dphi1_dm(a, b), 1.0, 0.0)),
        ];
        for (exact, approx) in pairs {
            worst = worst.max((exact - approx).abs() / exact.abs().max(1.0));
        }
    }
    s.check("constitutive derivatives", worst < 1e-6, format!("worst relative error {worst:e}"));

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a, b, p, k) = (0.1 + 5.0 * next(), 2.0 * next() - 0.5, next(), 0.3 * next());
        let v = phase_nodal_prox(a, b, p, k, 0.0, 1.0);
        let f = |x: f64| 0.5 * a * (x - b) * (x - b) + k * (x - p).abs();
        let n = 100_000;
        let best = (0..=n).map(|i| i as f64 / n as f64).fold((f64::INFINITY, 0.0), |acc, x| {
            let fx = f(x);
            if fx < acc.0 {
                (fx, x)
            } else {
                acc
            }
        });
        worst = worst.max((v - best.1).abs());
    }
    s.check("prox kernel vs scan", worst <= 2e-5, format!("worst deviation {worst:e}"));

    let desk = presets::desk_default();
    let ok = desk.validate_material(&desk.mesh().unwrap()).passed();
    s.check("desk material validates", ok, "");
    let steep = presets::steep_swelling();
    let report = steep.validate_material(&steep.mesh().unwrap());
    let named = report.check("chi-convexity").is_some_and(|c| !c.passed);
    s.check("steep swelling rejected", named, report.to_string());
    s
}

fn determinism() -> Suite {
    let mut s = Suite::new("determinism");
    for (name, cfg) in [("equilibrium", presets::equilibrium()), ("charging-2d", presets::charging_2d())] {
        let a = run(&cfg).map(|t| energy_csv(&t.ledger));
        let b = run(&cfg).map(|t| energy_csv(&t.ledger));
        let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
        s.check(format!("{name} energy.csv identical"), same, "");
    }
    s
}

/// Runs every suite. Takes a few seconds in an optimized build.
pub fn selftest() -> SelftestReport {
    SelftestReport { suites: vec![invariants(), oracles(), threshold(), kernels(), determinism()] }
}
