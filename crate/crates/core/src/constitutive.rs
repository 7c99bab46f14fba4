//! Constitutive laws of the hydride model.
//!
//! The free energy splits into a chemical part `φ₁(m, χ)`, an elastic part
//! `φ₂(ε, m)`, a thermal part `φ₃(m, θ)` and the thermo-elastic coupling
//! `θ φ₄(ε)`, plus the gradient term `λ/2 |∇m|²`. With the built-in choices
//!
//! ```text
//! φ₁(m, χ) = k/2 (m − a(χ))² + κ/2 χ² + d₀ m²(1 − m)²
//! φ₂(ε, m) = ½ C(ε − ε_tr m):(ε − ε_tr m)
//! φ₃(m, θ) = ½θ² Cα:α + θ Cα:ε_tr m + φ̂₃(m, θ)
//! a(χ)     = a₁ χ²/(1 + χ²)
//! ```
//!
//! the enthalpy `w = ω(m, θ) = φ₃ − θ ∂_θφ₃` depends on the heat law only,
//! and the temperature is recovered as `θ = θ(m, w)` by inverting `ω`.
//!
//! `d₀` is an optional double-well add-on; it is zero for the default
//! material and only changes `∂_mφ₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ModulusTensor, SymTensor};

/// Heat-capacity law, i.e. the choice of `φ̂₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum HeatLaw {
    /// `ω = ½ c₀ θ²`: heat capacity growing linearly with temperature.
    Quadratic { c0: f64 },
    /// `ω = c₀ θ`: constant heat capacity.
    Linear { c0: f64 },
    /// `ω = ½ c₀(m) θ²` with `c₀(m)` affine between metal (m = 0) and
    /// hydride (m = 1). Inverted through the generic monotone solver.
    Mixed { c0_metal: f64, c0_hydride: f64 },
}

impl HeatLaw {
    fn c0_of_m(&self, m: f64) -> (f64, f64) {
        match *self {
            HeatLaw::Quadratic { c0 } | HeatLaw::Linear { c0 } => (c0, 0.0),
            HeatLaw::Mixed { c0_metal, c0_hydride } => (c0_metal + (c0_hydride - c0_metal) * m, c0_hydride - c0_metal),
        }
    }
}

/// Transport tensors (scalar multiples of the identity) at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCoeffs {
    /// Heat conductivity `𝖪`.
    pub conductivity: f64,
    /// Cross coefficient `𝖫 = 𝖪 ∂_mθ`.
    pub cross: f64,
    /// Hydrogen mobility `𝖬`.
    pub mobility: f64,
    /// `𝖬₁ = 𝖬 ∂²_χχφ₁`.
    pub m1: f64,
    /// `𝖬₂ = 𝖬 ∂²_χmφ₁`.
    pub m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub dim: usize,
    /// Elastic moduli `C`.
    pub elastic: ModulusTensor,
    /// Viscous moduli `D`.
    pub viscosity: ModulusTensor,
    /// Mass density `ρ`.
    pub density: f64,
    /// Phase viscosity `α`.
    pub phase_viscosity: f64,
    /// Gradient coefficient `λ` of `λ/2 |∇m|²`.
    pub gradient_coeff: f64,
    /// Swelling strain per unit phase `ε_tr`.
    pub swelling: SymTensor,
    /// Thermal expansion `α_th`.
    pub thermal_expansion: SymTensor,
    /// Penalty `k` tying `m` to `a(χ)`.
    pub coupling: f64,
    /// Amplitude `a₁` of the swelling curve.
    pub swelling_amplitude: f64,
    /// Curvature `κ` of `φ̂₁(χ) = κ/2 χ²`.
    pub chem_stiffness: f64,
    /// Double-well height `d₀`.
    pub double_well: f64,
    /// Activation threshold `r` of `ζ(v) = r|v|`.
    pub activation: f64,
    /// Admissible phase interval `K = [m_lo, m_hi]`.
    pub phase_lo: f64,
    pub phase_hi: f64,
    pub heat_law: HeatLaw,
    /// `𝕂 = K₀ I`.
    pub conductivity: f64,
    /// `𝕄 = M₀ I`.
    pub mobility: f64,
}

impl MaterialModel {
    /// Reference material used by the desk runs, the self test and the CLI
    /// when no `[material]` section is given.
    pub fn desk_default(dim: usize) -> Self {
        let (elastic, viscosity) = if dim == 1 {
            (ModulusTensor::Uniaxial { modulus: 1.0 }, ModulusTensor::Uniaxial { modulus: 0.1 })
        } else {
            (ModulusTensor::Isotropic { lambda: 0.0, mu: 0.5 }, ModulusTensor::Isotropic { lambda: 0.0, mu: 0.05 })
        };
        Self {
            dim,
            elastic,
            viscosity,
            density: 1.0,
            phase_viscosity: 1.0,
            gradient_coeff: 1e-2,
            swelling: SymTensor::isotropic(dim, 0.1),
            thermal_expansion: SymTensor::isotropic(dim, 0.1),
            coupling: 10.0,
            swelling_amplitude: 0.2,
            chem_stiffness: 5.0,
            double_well: 0.0,
            activation: 0.05,
            phase_lo: 0.0,
            phase_hi: 1.0,
            heat_law: HeatLaw::Quadratic { c0: 2.0 },
            conductivity: 1.0,
            mobility: 1.0,
        }
    }

    // ---- swelling curve -------------------------------------------------

    /// `a(χ)`, extended by zero for `χ < 0`.
    pub fn swelling_curve(&self, chi: f64) -> f64 {
        if chi <= 0.0 {
            return 0.0;
        }
        let c2 = chi * chi;
        self.swelling_amplitude * c2 / (1.0 + c2)
    }

    pub fn swelling_slope(&self, chi: f64) -> f64 {
        if chi <= 0.0 {
            return 0.0;
        }
        let d = 1.0 + chi * chi;
        2.0 * self.swelling_amplitude * chi / (d * d)
    }

    pub fn swelling_curvature(&self, chi: f64) -> f64 {
        if chi < 0.0 {
            return 0.0;
        }
        let c2 = chi * chi;
        let d = 1.0 + c2;
        2.0 * self.swelling_amplitude * (1.0 - 3.0 * c2) / (d * d * d)
    }

    // ---- chemical energy φ₁ --------------------------------------------

    pub fn phi1(&self, m: f64, chi: f64) -> f64 {
        let d = m - self.swelling_curve(chi);
        0.5 * self.coupling * d * d + 0.5 * self.chem_stiffness * chi * chi + self.double_well * m * m * (1.0 - m) * (1.0 - m)
    }

    /// `∂_mφ₁`, the chemical microforce.
    pub fn dphi1_dm(&self, m: f64, chi: f64) -> f64 {
        self.coupling * (m - self.swelling_curve(chi)) + 2.0 * self.double_well * m * (1.0 - m) * (1.0 - 2.0 * m)
    }

    /// `μ = ∂_χφ₁`.
    pub fn chemical_potential(&self, m: f64, chi: f64) -> f64 {
        -self.coupling * (m - self.swelling_curve(chi)) * self.swelling_slope(chi) + self.chem_stiffness * chi
    }

    pub fn phi1_chichi(&self, m: f64, chi: f64) -> f64 {
        let a = self.swelling_curve(chi);
        let a1 = self.swelling_slope(chi);
        let a2 = self.swelling_curvature(chi);
        self.coupling * ((a - m) * a2 + a1 * a1) + self.chem_stiffness
    }

    pub fn phi1_chim(&self, _m: f64, chi: f64) -> f64 {
        -self.coupling * self.swelling_slope(chi)
    }

    pub fn phi1_mm(&self, m: f64, _chi: f64) -> f64 {
        self.coupling + self.double_well * (12.0 * m * m - 12.0 * m + 2.0)
    }

    // ---- thermal part φ₃ and the enthalpy map --------------------------

    /// `Cα:α`.
    pub fn thermal_modulus(&self) -> f64 {
        self.elastic.apply(&self.thermal_expansion).ddot(&self.thermal_expansion)
    }

    /// `Cα:ε_tr`.
    pub fn thermal_swelling_coupling(&self) -> f64 {
        self.elastic.apply(&self.thermal_expansion).ddot(&self.swelling)
    }

    pub fn phi3(&self, m: f64, theta: f64) -> f64 {
        let a = self.thermal_modulus();
        let b = self.thermal_swelling_coupling();
        let hat = match self.heat_law {
            HeatLaw::Quadratic { .. } | HeatLaw::Mixed { .. } => {
                let (c0, _) = self.heat_law.c0_of_m(m);
                -0.5 * (c0 + a) * theta * theta
            }
            HeatLaw::Linear { c0 } => {
                let tlnt = if theta > 0.0 { theta * theta.ln() } else { 0.0 };
                -c0 * tlnt - 0.5 * a * theta * theta
            }
        };
        0.5 * theta * theta * a + theta * b * m + hat
    }

    pub fn dphi3_dtheta(&self, m: f64, theta: f64) -> f64 {
        let a = self.thermal_modulus();
        let b = self.thermal_swelling_coupling();
        let hat = match self.heat_law {
            HeatLaw::Quadratic { .. } | HeatLaw::Mixed { .. } => {
                let (c0, _) = self.heat_law.c0_of_m(m);
                -(c0 + a) * theta
            }
            HeatLaw::Linear { c0 } => -c0 * (theta.ln() + 1.0) - a * theta,
        };
        theta * a + b * m + hat
    }

    pub fn dphi3_dm(&self, m: f64, theta: f64) -> f64 {
        let b = self.thermal_swelling_coupling();
        let (_, dc0) = self.heat_law.c0_of_m(m);
        theta * b - 0.5 * dc0 * theta * theta
    }

    /// Heat capacity `∂_θω = −θ ∂²_θθφ₃`.
    pub fn heat_capacity(&self, m: f64, theta: f64) -> f64 {
        match self.heat_law {
            HeatLaw::Quadratic { .. } | HeatLaw::Mixed { .. } => self.heat_law.c0_of_m(m).0 * theta,
            HeatLaw::Linear { c0 } => c0,
        }
    }

    fn omega_unchecked(&self, m: f64, theta: f64) -> f64 {
        match self.heat_law {
            HeatLaw::Quadratic { .. } | HeatLaw::Mixed { .. } => 0.5 * self.heat_law.c0_of_m(m).0 * theta * theta,
            HeatLaw::Linear { c0 } => c0 * theta,
        }
    }

    /// Enthalpy `w = ω(m, θ)`.
    pub fn omega_of_theta(&self, m: f64, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!("temperature must be finite and non-negative, got {theta}")));
        }
        Ok(self.omega_unchecked(m, theta))
    }

    /// Temperature `θ(m, w)`, the inverse of `ω(m, ·)`.
    pub fn theta_of_w(&self, m: f64, w: f64) -> Result<f64> {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Domain(format!("enthalpy must be finite and non-negative, got {w}")));
        }
        match self.heat_law {
            HeatLaw::Quadratic { c0 } => Ok((2.0 * w / c0).sqrt()),
            HeatLaw::Linear { c0 } => Ok(w / c0),
            HeatLaw::Mixed { .. } => self.theta_of_w_generic(m, w),
        }
    }

    /// Inverts `ω(m, ·)` by safeguarded Newton iteration on a bracket.
    /// Used for laws without a closed-form inverse.
    pub fn theta_of_w_generic(&self, m: f64, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.omega_unchecked(m, hi) < w {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(Error::Internal(format!("cannot bracket temperature for w = {w}, m = {m}")));
            }
        }
        if !(self.omega_unchecked(m, lo) <= w) {
            return Err(Error::Internal(format!("enthalpy law is not monotone at m = {m}")));
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.omega_unchecked(m, t) - w;
            if f == 0.0 {
                return Ok(t);
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope = self.heat_capacity(m, t);
            let newton = t - f / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - t).abs() <= 1e-15 * next.abs().max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            t = next;
        }
        Err(Error::Internal(format!("temperature inversion did not converge for w = {w}")))
    }

    /// `θ(m, w)` extended by zero for `w ≤ 0`; the form used inside the
    /// solvers, where iterates may dip below zero before convergence.
    pub fn theta_ext(&self, m: f64, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match self.heat_law {
            HeatLaw::Quadratic { c0 } => (2.0 * w / c0).sqrt(),
            HeatLaw::Linear { c0 } => w / c0,
            HeatLaw::Mixed { .. } => {
                let (c0, _) = self.heat_law.c0_of_m(m);
                // closed form exists, the generic path is exercised in tests
                (2.0 * w / c0).sqrt()
            }
        }
    }

    /// `∂_mθ(m, w)`; zero unless the heat capacity depends on `m`.
    pub fn dtheta_dm(&self, m: f64, w: f64) -> f64 {
        match self.heat_law {
            HeatLaw::Mixed { .. } => {
                let (c0, dc0) = self.heat_law.c0_of_m(m);
                -0.5 * self.theta_ext(m, w) * dc0 / c0
            }
            _ => 0.0,
        }
    }

    // ---- stresses and microforces ---------------------------------------

    /// Adiabatic stress `σ_a(m, w) = −θ(m, w) Cα`.
    pub fn sigma_a(&self, m: f64, w: f64) -> SymTensor {
        let theta = self.theta_ext(m, w);
        self.elastic.apply(&self.thermal_expansion).scale(-theta)
    }

    /// Adiabatic microforce `s_a(m, w) = ∂_mφ₃(m, θ(m, w))`.
    pub fn s_a(&self, m: f64, w: f64) -> f64 {
        let theta = self.theta_ext(m, w);
        self.dphi3_dm(m, theta)
    }

    /// Non-viscous stress `C(ε − ε_tr m) + σ_a(m, w)`.
    pub fn stress(&self, strain: &SymTensor, m: f64, w: f64) -> SymTensor {
        self.elastic_stress(strain, m).add(&self.sigma_a(m, w))
    }

    pub fn elastic_stress(&self, strain: &SymTensor, m: f64) -> SymTensor {
        self.elastic.apply(&strain.sub(&self.swelling.scale(m)))
    }

    /// `φ₂` without the indicator of `K`.
    pub fn elastic_energy_density(&self, strain: &SymTensor, m: f64) -> f64 {
        self.elastic.energy(&strain.sub(&self.swelling.scale(m)))
    }

    pub fn transport_coeffs(&self, _strain: &SymTensor, m: f64, chi: f64, w: f64) -> TransportCoeffs {
        let conductivity = self.conductivity;
        let mobility = self.mobility;
        TransportCoeffs {
            conductivity,
            cross: conductivity * self.dtheta_dm(m, w),
            mobility,
            m1: mobility * self.phi1_chichi(m, chi),
            m2: mobility * self.phi1_chim(m, chi),
        }
    }

    pub fn in_phase_box(&self, m: f64) -> bool {
        m >= self.phase_lo && m <= self.phase_hi
    }

    /// Sampled infimum of `∂²_mmφ₁` over `K × [0, χ_max]`.
    pub fn inf_phi1_mm(&self, chi_max: f64, n: usize) -> f64 {
        let n = n.max(3);
        let mut inf = f64::INFINITY;
        for i in 0..n {
            let m = self.phase_lo + (self.phase_hi - self.phase_lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let chi = chi_max * j as f64 / (n - 1) as f64;
                inf = inf.min(self.phi1_mm(m, chi));
            }
        }
        inf
    }
}

// ---- validation ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Needed for the incremental problems to be well posed; failure is fatal.
    Hard,
    /// Growth conditions at large enthalpy; failure is reported as a flag.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub m: f64,
    pub chi: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub description: &'static str,
    pub severity: Severity,
    pub passed: bool,
    /// Worst sampled value of the checked quantity.
    pub margin: f64,
    pub point: Option<SamplePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn check(&self, id: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed && c.severity == Severity::Hard)
    }

    pub fn flags(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed && c.severity == Severity::Asymptotic)
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().next().is_none()
    }

    pub fn ensure(&self) -> Result<()> {
        let msgs: Vec<String> = self
            .hard_failures()
            .map(|c| match c.point {
                Some(p) => format!("{} ({}): worst value {:e} at m = {}, chi = {}, w = {}", c.id, c.description, c.margin, p.m, p.chi, p.w),
                None => format!("{} ({}): worst value {:e}", c.id, c.description, c.margin),
            })
            .collect();
        if msgs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(msgs.join("; ")))
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let status = match (c.passed, c.severity) {
                (true, _) => "pass",
                (false, Severity::Hard) => "FAIL",
                (false, Severity::Asymptotic) => "flag",
            };
            write!(f, "{status:>4}  {:<22} {:<48} worst = {:.6e}", c.id, c.description, c.margin)?;
            if let (false, Some(p)) = (c.passed, c.point) {
                write!(f, "  at (m = {}, chi = {}, w = {})", p.m, p.chi, p.w)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Growth ratio of `g(w)/√(1+w)` between the tail `w ∈ [1e4, 1e6]` and the
/// head `w ∈ [0, 1e4]` of a log sweep. Bounded growth keeps it near 1.
fn growth_ratio(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut head: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let mut worst_w = 0.0;
    for i in 0..=120 {
        let w = if i == 0 { 0.0 } else { 10f64.powf(-6.0 + 12.0 * i as f64 / 120.0) };
        let r = g(w).abs() / (1.0 + w).sqrt();
        if w <= 1e4 {
            head = head.max(r);
        } else if r > tail {
            tail = r;
            worst_w = w;
        }
    }
    if head <= 0.0 {
        (if tail > 0.0 { f64::INFINITY } else { 1.0 }, worst_w)
    } else {
        (tail / head, worst_w)
    }
}

/// Samples the standing assumptions of the model on `K × [0, χ_max]`.
pub fn validate_material(mat: &MaterialModel, chi_max: f64, n_samples: usize) -> ValidationReport {
    let mut checks = Vec::new();
    let n = ((n_samples.max(4) as f64).sqrt().ceil() as usize).max(2);
    let grid = |i: usize, j: usize| {
        let m = mat.phase_lo + (mat.phase_hi - mat.phase_lo) * i as f64 / (n - 1) as f64;
        let chi = chi_max * j as f64 / (n - 1) as f64;
        (m, chi)
    };

    let finite_scalars = [
        mat.density,
        mat.phase_viscosity,
        mat.gradient_coeff,
        mat.coupling,
        mat.swelling_amplitude,
        mat.chem_stiffness,
        mat.double_well,
        mat.activation,
        mat.phase_lo,
        mat.phase_hi,
        mat.conductivity,
        mat.mobility,
    ];
    let all_finite = finite_scalars.iter().all(|v| v.is_finite())
        && mat.elastic.is_finite()
        && mat.viscosity.is_finite()
        && mat.swelling.is_finite()
        && mat.thermal_expansion.is_finite()
        && chi_max > 0.0;
    checks.push(AssumptionCheck {
        id: "finite-parameters",
        description: "all parameters finite, chi_max > 0",
        severity: Severity::Hard,
        passed: all_finite,
        margin: if all_finite { 0.0 } else { f64::NAN },
        point: None,
    });

    let c_piv = mat.elastic.min_pivot();
    checks.push(AssumptionCheck {
        id: "elastic-positive",
        description: "elastic moduli C positive definite",
        severity: Severity::Hard,
        passed: c_piv > 0.0,
        margin: c_piv,
        point: None,
    });
    let d_piv = mat.viscosity.min_pivot();
    checks.push(AssumptionCheck {
        id: "viscous-positive",
        description: "viscous moduli D positive definite",
        severity: Severity::Hard,
        passed: d_piv > 0.0,
        margin: d_piv,
        point: None,
    });
    let pos = [mat.density, mat.phase_viscosity, mat.gradient_coeff];
    let pos_min = pos.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(AssumptionCheck {
        id: "inertia-positive",
        description: "density, phase viscosity, gradient coeff > 0",
        severity: Severity::Hard,
        passed: pos_min > 0.0,
        margin: pos_min,
        point: None,
    });
    let tr_min = mat.conductivity.min(mat.mobility);
    checks.push(AssumptionCheck {
        id: "transport-positive",
        description: "conductivity K0 and mobility M0 > 0",
        severity: Severity::Hard,
        passed: tr_min > 0.0,
        margin: tr_min,
        point: None,
    });

    // uniform convexity of φ₁(m, ·)
    let mut worst = (f64::INFINITY, SamplePoint { m: 0.0, chi: 0.0, w: 0.0 });
    let mut coercive = (f64::INFINITY, SamplePoint { m: 0.0, chi: 0.0, w: 0.0 });
    for i in 0..n {
        for j in 0..n {
            let (m, chi) = grid(i, j);
            let h = mat.phi1_chichi(m, chi);
            if h < worst.0 {
                worst = (h, SamplePoint { m, chi, w: 0.0 });
            }
            if chi > 0.0 {
                let c = mat.phi1(m, chi) / (chi * chi);
                if c < coercive.0 {
                    coercive = (c, SamplePoint { m, chi, w: 0.0 });
                }
            }
        }
    }
    checks.push(AssumptionCheck {
        id: "chi-convexity",
        description: "d2_chichi phi1 uniformly positive",
        severity: Severity::Hard,
        passed: worst.0 > 0.0,
        margin: worst.0,
        point: Some(worst.1),
    });
    checks.push(AssumptionCheck {
        id: "phi1-coercive",
        description: "phi1(m, chi) >= eps chi^2",
        severity: Severity::Hard,
        passed: coercive.0 > 0.0,
        margin: coercive.0,
        point: Some(coercive.1),
    });

    let inf_mm = mat.inf_phi1_mm(chi_max, n);
    checks.push(AssumptionCheck {
        id: "mm-semiconvexity",
        description: "d2_mm phi1 bounded from below",
        severity: Severity::Hard,
        passed: inf_mm.is_finite(),
        margin: inf_mm,
        point: None,
    });

    // a′ bounded on [0, χ_max] with a′(0) = 0, so ∂²_χmφ₁ vanishes at χ = 0
    let slope0 = mat.swelling_slope(0.0);
    let mut sup_slope: f64 = 0.0;
    for j in 0..n {
        let chi = chi_max * j as f64 / (n - 1) as f64;
        sup_slope = sup_slope.max(mat.swelling_slope(chi).abs());
    }
    checks.push(AssumptionCheck {
        id: "swelling-slope",
        description: "a' bounded and a'(0) = 0",
        severity: Severity::Hard,
        passed: slope0 == 0.0 && sup_slope.is_finite(),
        margin: sup_slope,
        point: None,
    });

    checks.push(AssumptionCheck {
        id: "activation-convex",
        description: "zeta = r|.| convex 1-homogeneous (r >= 0)",
        severity: Severity::Hard,
        passed: mat.activation >= 0.0,
        margin: mat.activation,
        point: None,
    });
    checks.push(AssumptionCheck {
        id: "phase-box",
        description: "K = [m_lo, m_hi] bounded, closed, nonempty",
        severity: Severity::Hard,
        passed: mat.phase_lo <= mat.phase_hi && mat.phase_lo.is_finite() && mat.phase_hi.is_finite(),
        margin: mat.phase_hi - mat.phase_lo,
        point: None,
    });

    let mut hc = (f64::INFINITY, SamplePoint { m: 0.0, chi: 0.0, w: 0.0 });
    for i in 0..n {
        let m = grid(i, 0).0;
        for t in 1..=100 {
            let theta = t as f64;
            let c = mat.heat_capacity(m, theta);
            if c < hc.0 {
                hc = (c, SamplePoint { m, chi: 0.0, w: mat.omega_unchecked(m, theta) });
            }
        }
    }
    checks.push(AssumptionCheck {
        id: "heat-capacity",
        description: "d_theta omega > 0 for theta > 0",
        severity: Severity::Hard,
        passed: hc.0 > 0.0,
        margin: hc.0,
        point: Some(hc.1),
    });

    // growth conditions, checked at the phase values of the sample grid
    let mut sig = (0.0f64, SamplePoint { m: 0.0, chi: 0.0, w: 0.0 });
    let mut sa = (0.0f64, SamplePoint { m: 0.0, chi: 0.0, w: 0.0 });
    let mut cross = (0.0f64, SamplePoint { m: 0.0, chi: 0.0, w: 0.0 });
    for i in 0..n.min(11) {
        let m = mat.phase_lo + (mat.phase_hi - mat.phase_lo) * i as f64 / (n.min(11) - 1).max(1) as f64;
        let (r, w) = growth_ratio(|w| mat.sigma_a(m, w).norm_sq().sqrt());
        if r > sig.0 {
            sig = (r, SamplePoint { m, chi: 0.0, w });
        }
        let (r, w) = growth_ratio(|w| mat.s_a(m, w));
        if r > sa.0 {
            sa = (r, SamplePoint { m, chi: 0.0, w });
        }
        let (r, w) = growth_ratio(|w| mat.conductivity * mat.dtheta_dm(m, w));
        if r > cross.0 {
            cross = (r, SamplePoint { m, chi: 0.0, w });
        }
    }
    for (id, description, (ratio, p)) in [
        ("sigma_a-growth", "|sigma_a| <= C sqrt(1 + w)", sig),
        ("s_a-growth", "|s_a| <= C sqrt(1 + w)", sa),
        ("cross-growth", "|L| <= C sqrt(1 + w)", cross),
    ] {
        checks.push(AssumptionCheck {
            id,
            description,
            severity: Severity::Asymptotic,
            passed: ratio <= 2.0,
            margin: ratio,
            point: Some(p),
        });
    }

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat1() -> MaterialModel {
        MaterialModel::desk_default(1)
    }

    #[test]
    fn omega_examples() {
        let mut m = mat1();
        assert_eq!(m.omega_of_theta(0.3, 3.0).unwrap(), 9.0);
        assert_eq!(m.omega_of_theta(0.3, 0.0).unwrap(), 0.0);
        m.heat_law = HeatLaw::Linear { c0: 2.0 };
        assert_eq!(m.omega_of_theta(0.3, 3.0).unwrap(), 6.0);
        assert_eq!(m.omega_of_theta(0.3, 0.0).unwrap(), 0.0);
        assert!(matches!(m.omega_of_theta(0.3, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn omega_matches_symbolic_definition() {
        // ω = φ₃ − θ ∂_θφ₃ evaluated through the φ₃ pieces
        for law in [HeatLaw::Quadratic { c0: 2.0 }, HeatLaw::Linear { c0: 2.0 }, HeatLaw::Mixed { c0_metal: 2.0, c0_hydride: 3.0 }] {
            let mut m = mat1();
            m.heat_law = law;
            for &(mm, th) in &[(0.0, 0.5), (0.4, 3.0), (1.0, 7.0)] {
                let sym = m.phi3(mm, th) - th * m.dphi3_dtheta(mm, th);
                let w = m.omega_of_theta(mm, th).unwrap();
                assert!((sym - w).abs() <= 1e-12 * w.abs().max(1.0), "{law:?} {sym} {w}");
            }
        }
    }

    #[test]
    fn theta_examples() {
        let mut m = mat1();
        assert_eq!(m.theta_of_w(0.5, 9.0).unwrap(), 3.0);
        assert_eq!(m.theta_of_w(0.5, 0.0).unwrap(), 0.0);
        let w = m.omega_of_theta(0.5, 0.7).unwrap();
        assert!((m.theta_of_w(0.5, w).unwrap() - 0.7).abs() <= 1e-12 * 0.7);
        assert!(matches!(m.theta_of_w(0.5, -1e-3), Err(Error::Domain(_))));
        m.heat_law = HeatLaw::Linear { c0: 2.0 };
        assert_eq!(m.theta_of_w(0.5, 6.0).unwrap(), 3.0);
    }

    #[test]
    fn generic_inversion_agrees_with_closed_forms() {
        for law in [HeatLaw::Quadratic { c0: 2.0 }, HeatLaw::Linear { c0: 0.3 }] {
            let mut m = mat1();
            m.heat_law = law;
            for &w in &[1e-8, 0.3, 9.0, 1234.5, 1e6] {
                let a = m.theta_of_w(0.2, w).unwrap();
                let b = m.theta_of_w_generic(0.2, w).unwrap();
                assert!((a - b).abs() <= 1e-12 * a, "{law:?} w={w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn chemical_potential_examples() {
        let m = mat1();
        assert!((m.chemical_potential(0.5, 1.0) - 4.6).abs() < 1e-14);
        assert_eq!(m.chemical_potential(0.7, 0.0), 0.0);
        assert!((m.chemical_potential(0.1, 1.0) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn dphi1_dm_examples() {
        let m = mat1();
        assert!((m.dphi1_dm(0.5, 1.0) - 4.0).abs() < 1e-14);
        let chi = 0.8;
        assert_eq!(m.dphi1_dm(m.swelling_curve(chi), chi), 0.0);
        // linear in m
        let (a, b, c) = (m.dphi1_dm(0.1, 0.5), m.dphi1_dm(0.2, 0.5), m.dphi1_dm(0.3, 0.5));
        assert!(((c - b) - (b - a)).abs() < 1e-14);
    }

    #[test]
    fn stress_examples() {
        let m = mat1();
        let s = m.stress(&SymTensor::new(0.1, 0.0, 0.0), 1.0, 0.0);
        assert!(s.xx.abs() < 1e-16);
        let s = m.stress(&SymTensor::ZERO, 0.0, 9.0);
        assert!((s.xx + 0.3).abs() < 1e-15);
        let s = m.stress(&SymTensor::new(0.2, 0.0, 0.0), 1.0, 0.0);
        assert!((s.xx - 0.1).abs() < 1e-15);
    }

    #[test]
    fn adiabatic_terms() {
        let m = mat1();
        for &mm in &[0.0, 0.3, 1.0] {
            assert_eq!(m.sigma_a(mm, 0.0), SymTensor::ZERO);
            assert_eq!(m.s_a(mm, 0.0), 0.0);
        }
        assert!((m.sigma_a(0.4, 9.0).xx + 0.3).abs() < 1e-15);
        assert!((m.s_a(0.4, 9.0) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn transport_examples() {
        let m = mat1();
        let t = m.transport_coeffs(&SymTensor::ZERO, 0.5, 1.0, 3.0);
        assert!((t.m1 - 5.5).abs() < 1e-14);
        assert!((t.m2 + 1.0).abs() < 1e-14);
        assert_eq!(t.cross, 0.0);
        assert_eq!(m.transport_coeffs(&SymTensor::ZERO, 0.5, 0.0, 3.0).m2, 0.0);
        let mut lin = m.clone();
        lin.heat_law = HeatLaw::Linear { c0: 2.0 };
        assert_eq!(lin.transport_coeffs(&SymTensor::ZERO, 0.3, 1.0, 5.0).cross, 0.0);
    }

    #[test]
    fn desk_default_validates() {
        let r = validate_material(&mat1(), 3.0, 10_000);
        assert!(r.passed(), "{r}");
        assert_eq!(r.flags().count(), 0, "{r}");
        assert!(r.check("chi-convexity").unwrap().margin >= 1.0 - 1e-12);
    }

    #[test]
    fn steep_swelling_fails_convexity() {
        let mut m = mat1();
        m.swelling_amplitude = 1.0;
        let r = validate_material(&m, 3.0, 10_000);
        let c = r.check("chi-convexity").unwrap();
        assert!(!c.passed && c.margin < 0.0);
        assert!(r.ensure().unwrap_err().to_string().contains("chi-convexity"));
    }

    #[test]
    fn negative_threshold_fails() {
        let mut m = mat1();
        m.activation = -0.1;
        let r = validate_material(&m, 3.0, 100);
        assert!(!r.check("activation-convex").unwrap().passed);
        assert!(!r.passed());
    }

    #[test]
    fn growth_flags_depend_on_heat_law() {
        let mut m = mat1();
        m.heat_law = HeatLaw::Linear { c0: 2.0 };
        let r = validate_material(&m, 3.0, 100);
        assert!(r.passed());
        assert!(!r.check("sigma_a-growth").unwrap().passed);
        assert!(!r.check("s_a-growth").unwrap().passed);

        m.heat_law = HeatLaw::Mixed { c0_metal: 2.0, c0_hydride: 3.0 };
        let r = validate_material(&m, 3.0, 100);
        assert!(r.check("sigma_a-growth").unwrap().passed);
        assert!(!r.check("s_a-growth").unwrap().passed);
        assert!(r.check("cross-growth").unwrap().passed);
    }

    #[test]
    fn quadratic_growth_is_square_root() {
        let m = mat1();
        let c = (2.0 / 2.0f64).sqrt() * 0.1;
        for i in 0..=60 {
            let w = 10f64.powf(i as f64 / 10.0) - 1.0;
            assert!(m.sigma_a(0.5, w).xx.abs() <= c * (1.0 + w).sqrt() * (1.0 + 1e-12));
            assert!(m.s_a(0.5, w).abs() <= 0.1 * c * (1.0 + w).sqrt() * (1.0 + 1e-12));
        }
    }
}
