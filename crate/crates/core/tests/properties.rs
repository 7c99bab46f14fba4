//! Randomized properties of the constitutive kernels and the nodal prox.

use hydride_core::constitutive::{HeatLaw, MaterialModel};
use hydride_core::mech::phase_nodal_prox;
use proptest::prelude::*;

fn law(i: usize) -> HeatLaw {
    [HeatLaw::Quadratic { c0: 2.0 }, HeatLaw::Linear { c0: 0.7 }, HeatLaw::Mixed { c0_metal: 1.0, c0_hydride: 4.0 }][i]
}

proptest! {
    #[test]
    fn enthalpy_and_temperature_are_inverse(m in 0.0f64..1.0, theta in 0.0f64..50.0, i in 0usize..3) {
        let mut mat = MaterialModel::desk_default(1);
        mat.heat_law = law(i);
        let w = mat.omega_of_theta(m, theta).unwrap();
        let back = mat.theta_of_w(m, w).unwrap();
        prop_assert!((back - theta).abs() <= 1e-12 * theta.max(1.0));
        let generic = mat.theta_of_w_generic(m, w).unwrap();
        prop_assert!((generic - theta).abs() <= 1e-10 * theta.max(1.0));
        prop_assert!((mat.theta_ext(m, w) - theta).abs() <= 1e-12 * theta.max(1.0));
    }

    #[test]
    fn enthalpy_is_monotone_in_temperature(m in 0.0f64..1.0, t in 0.0f64..10.0, dt in 1e-6f64..1.0, i in 0usize..3) {
        let mut mat = MaterialModel::desk_default(1);
        mat.heat_law = law(i);
        prop_assert!(mat.omega_of_theta(m, t + dt).unwrap() > mat.omega_of_theta(m, t).unwrap());
    }

    #[test]
    fn chemical_potential_is_the_chi_derivative(m in 0.0f64..1.0, chi in 0.01f64..5.0) {
        let mat = MaterialModel::desk_default(1);
        let h = 1e-5;
        let fd = (mat.phi1(m, chi + h) - mat.phi1(m, chi - h)) / (2.0 * h);
        let mu = mat.chemical_potential(m, chi);
        prop_assert!((fd - mu).abs() <= 1e-6 * mu.abs().max(1.0));
    }

    #[test]
    fn prox_satisfies_the_optimality_condition(
        a in 0.01f64..50.0, b in -2.0f64..3.0, p in 0.0f64..1.0, kappa in 0.0f64..2.0,
    ) {
        let v = phase_nodal_prox(a, b, p, kappa, 0.0, 1.0);
        prop_assert!((0.0..=1.0).contains(&v));
        // 0 ∈ a(v − b) + κ ∂|v − p| + N_[0,1](v)
        let g = a * (v - b);
        let (lo, hi) = if v == p { (g - kappa, g + kappa) } else { let s = kappa * (v - p).signum(); (g + s, g + s) };
        let tol = 1e-12 * (1.0 + a * b.abs() + kappa);
        let inside = if v <= 0.0 { hi >= -tol } else if v >= 1.0 { lo <= tol } else { lo <= tol && hi >= -tol };
        prop_assert!(inside, "v = {v}, subgradient [{lo}, {hi}]");
    }

    #[test]
    fn adiabatic_terms_vanish_without_heat(m in 0.0f64..1.0, i in 0usize..3) {
        let mut mat = MaterialModel::desk_default(2);
        mat.heat_law = law(i);
        prop_assert_eq!(mat.s_a(m, 0.0), 0.0);
        let s = mat.sigma_a(m, 0.0);
        prop_assert!(s.xx == 0.0 && s.yy == 0.0 && s.xy == 0.0);
    }
}
