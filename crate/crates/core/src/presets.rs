//! Built-in run configurations used by the self test, the acceptance suite
//! and the CLI.

use std::collections::BTreeMap;

use crate::constitutive::{HeatLaw, MaterialModel};
use crate::driver::{InitialData, OutputOptions, Ramp, RunConfig, SideSources, Sources};
use crate::grid::Side;
use crate::state::SolverOptions;
use crate::tensor::SymTensor;

/// Strain with vanishing non-viscous stress, `ε_tr m + α θ`.
pub fn stress_free_strain(mat: &MaterialModel, m: f64, theta: f64) -> SymTensor {
    mat.swelling.scale(m).add(&mat.thermal_expansion.scale(theta))
}

/// Stress-free displacement ramps for uniform `(m, θ)` with isotropic
/// swelling and expansion.
fn stress_free_u(mat: &MaterialModel, m: f64, theta: f64) -> Vec<Ramp> {
    let e = stress_free_strain(mat, m, theta);
    if mat.dim == 1 {
        vec![Ramp { dx: e.xx, ..Ramp::ZERO }]
    } else {
        vec![Ramp { dx: e.xx, ..Ramp::ZERO }, Ramp { dy: e.yy, ..Ramp::ZERO }]
    }
}

fn base(dim: usize, chi0: f64, theta0: f64) -> RunConfig {
    let material = MaterialModel::desk_default(dim);
    // phase in chemical equilibrium with the hydrogen
    let m0 = material.swelling_curve(chi0);
    let initial = InitialData {
        u: stress_free_u(&material, m0, theta0),
        v: vec![Ramp::ZERO; dim],
        m: Ramp::constant(m0),
        chi: Ramp::constant(chi0),
        theta: Ramp::constant(theta0),
    };
    RunConfig {
        dim,
        lengths: vec![1.0; dim],
        resolution: if dim == 1 { vec![50] } else { vec![17, 17] },
        clamped: Vec::new(),
        t_final: 0.05,
        tau: 1e-3,
        material,
        initial,
        sources: Sources { force: vec![Ramp::ZERO; dim], ..Default::default() },
        solver: SolverOptions::for_dim(dim),
        output: OutputOptions::default(),
    }
}

fn charge_left(cfg: &mut RunConfig, flux: f64) {
    let side = SideSources { traction: vec![Ramp::ZERO; cfg.dim], hydrogen: Ramp::constant(flux), ..Default::default() };
    cfg.sources.sides = BTreeMap::from([(Side::Left, side)]);
}

/// 1D bar charged with hydrogen through its left end: `nx = 50`,
/// `T = 0.05`, `τ = 1e-3`, `h_s = 0.5`, stress-free start at `χ₀ = 0.5`,
/// `θ₀ = 1`.
pub fn desk_default() -> RunConfig {
    let mut c = base(1, 0.5, 1.0);
    charge_left(&mut c, 0.5);
    c
}

/// Square plate charged through its left side.
pub fn charging_2d() -> RunConfig {
    let mut c = base(2, 0.5, 1.0);
    c.resolution = vec![9, 9];
    c.t_final = 0.02;
    charge_left(&mut c, 0.5);
    c
}

/// Stress-free, chemically and thermally uniform state without sources.
pub fn equilibrium() -> RunConfig {
    let mut c = base(1, 0.5, 1.0);
    c.resolution = vec![21];
    c.t_final = 0.02;
    c
}

/// Decoupled linear diffusion: `k = 0`, so `μ = 5χ`, with a `cos(πx)` mode
/// on top of `χ = 0.5`. The mode decays at rate `5π²`.
pub fn diffusion_oracle() -> RunConfig {
    let mut c = base(1, 0.5, 1.0);
    c.material.coupling = 0.0;
    c.material.mobility = 1.0;
    c.initial.m = Ramp::ZERO;
    c.initial.u = stress_free_u(&c.material, 0.0, 1.0);
    c.initial.chi = Ramp { value: 0.5, cos_x: 0.1, ..Ramp::ZERO };
    c.resolution = vec![200];
    c.tau = 1e-5;
    c.t_final = 0.02;
    c
}

/// Pure conduction: linear heat law with `c₀ = 1`, `𝖪 = 1`, no thermal
/// expansion, `θ₀ = 1 + 0.1 cos(πx)`. The mode decays at rate `π²`.
pub fn conduction_oracle() -> RunConfig {
    let mut c = base(1, 0.5, 1.0);
    c.material.heat_law = HeatLaw::Linear { c0: 1.0 };
    c.material.conductivity = 1.0;
    c.material.thermal_expansion = SymTensor::ZERO;
    let m0 = c.material.swelling_curve(0.5);
    c.initial.u = stress_free_u(&c.material, m0, 0.0);
    c.initial.theta = Ramp { value: 1.0, cos_x: 0.1, ..Ramp::ZERO };
    c.resolution = vec![200];
    c.tau = 1e-5;
    c.t_final = 0.02;
    c
}

/// Desk default with the double-well add-on `d₀ m²(1 − m)²`, `d₀ = 26`,
/// so that `inf ∂²_mmφ₁ = 10 − 26 = −16` and `τ_max = α²/256`.
pub fn double_well() -> RunConfig {
    let mut c = desk_default();
    c.material.double_well = 26.0;
    c.tau = 0.003;
    c.t_final = 0.03;
    c
}

/// Material whose steep swelling curve (`a₁ = 1`) destroys the convexity of
/// `φ₁(m, ·)`.
pub fn steep_swelling() -> RunConfig {
    let mut c = desk_default();
    c.material.swelling_amplitude = 1.0;
    let m0 = c.material.swelling_curve(c.initial.chi.value);
    c.initial.m = Ramp::constant(m0);
    c.initial.u = stress_free_u(&c.material, m0, c.initial.theta.value);
    c
}

/// All presets by name.
pub fn all() -> Vec<(&'static str, RunConfig)> {
    vec![
        ("desk-default", desk_default()),
        ("charging-2d", charging_2d()),
        ("equilibrium", equilibrium()),
        ("diffusion-oracle", diffusion_oracle()),
        ("conduction-oracle", conduction_oracle()),
        ("double-well", double_well()),
        ("steep-swelling", steep_swelling()),
    ]
}

pub fn by_name(name: &str) -> Option<RunConfig> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_default_starts_stress_free() {
        let c = desk_default();
        let mat = &c.material;
        assert!((c.initial.m.value - 0.04).abs() < 1e-15);
        assert!((c.initial.u[0].dx - 0.104).abs() < 1e-15);
        let e = SymTensor { xx: c.initial.u[0].dx, ..SymTensor::ZERO };
        let w = mat.omega_of_theta(0.04, 1.0).unwrap();
        assert!(mat.stress(&e, 0.04, w).xx.abs() < 1e-15);
        assert!(mat.dphi1_dm(0.04, 0.5).abs() < 1e-15);
    }

    #[test]
    fn presets_prepare() {
        for (name, c) in all() {
            let r = c.prepare();
            assert_eq!(r.is_ok(), name != "steep-swelling", "{name}: {r:?}");
        }
    }
}
