//! Small symmetric tensors for 1D (uniaxial) and 2D (plane strain) mechanics.
//!
//! A [`SymTensor`] stores the components `xx`, `yy`, `xy` of a symmetric 2×2
//! tensor. In 1D only `xx` is used; the other two stay zero.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    /// `s·I` restricted to the active dimension.
    pub fn isotropic(dim: usize, s: f64) -> Self {
        if dim == 1 {
            Self { xx: s, yy: 0.0, xy: 0.0 }
        } else {
            Self { xx: s, yy: s, xy: 0.0 }
        }
    }

    /// Double contraction `A:B`.
    pub fn ddot(&self, other: &SymTensor) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { xx: s * self.xx, yy: s * self.yy, xy: s * self.xy }
    }

    pub fn add(&self, o: &SymTensor) -> Self {
        Self { xx: self.xx + o.xx, yy: self.yy + o.yy, xy: self.xy + o.xy }
    }

    pub fn sub(&self, o: &SymTensor) -> Self {
        Self { xx: self.xx - o.xx, yy: self.yy - o.yy, xy: self.xy - o.xy }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

/// Fourth-order tensor acting on symmetric strains: uniaxial modulus in 1D,
/// isotropic Lamé pair in 2D plane strain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusTensor {
    Uniaxial { modulus: f64 },
    Isotropic { lambda: f64, mu: f64 },
}

impl ModulusTensor {
    pub fn apply(&self, e: &SymTensor) -> SymTensor {
        match *self {
            ModulusTensor::Uniaxial { modulus } => SymTensor { xx: modulus * e.xx, yy: 0.0, xy: 0.0 },
            ModulusTensor::Isotropic { lambda, mu } => {
                let tr = e.trace();
                SymTensor { xx: 2.0 * mu * e.xx + lambda * tr, yy: 2.0 * mu * e.yy + lambda * tr, xy: 2.0 * mu * e.xy }
            }
        }
    }

    /// `½ A e : e`.
    pub fn energy(&self, e: &SymTensor) -> f64 {
        0.5 * self.apply(e).ddot(e)
    }

    /// Matrix in Mandel notation (`xx`, `yy`, `√2·xy`), in which the tensor
    /// is an ordinary symmetric matrix with the same eigenvalues.
    pub fn mandel(&self) -> [[f64; 3]; 3] {
        match *self {
            ModulusTensor::Uniaxial { modulus } => [[modulus, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            ModulusTensor::Isotropic { lambda, mu } => {
                [[lambda + 2.0 * mu, lambda, 0.0], [lambda, lambda + 2.0 * mu, 0.0], [0.0, 0.0, 2.0 * mu]]
            }
        }
    }

    /// Positive definiteness on the active strain space, checked by a
    /// Cholesky factorization of the Mandel matrix. Returns the smallest
    /// pivot (negative or zero when the check fails).
    pub fn min_pivot(&self) -> f64 {
        let a = self.mandel();
        let n = match self {
            ModulusTensor::Uniaxial { .. } => 1,
            ModulusTensor::Isotropic { .. } => 3,
        };
        let mut l = [[0.0f64; 3]; 3];
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let mut d = a[j][j];
            for k in 0..j {
                d -= l[j][k] * l[j][k];
            }
            min_pivot = min_pivot.min(d);
            if d <= 0.0 {
                return d;
            }
            l[j][j] = d.sqrt();
            for i in (j + 1)..n {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / l[j][j];
            }
        }
        min_pivot
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_pivot() > 0.0
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            ModulusTensor::Uniaxial { modulus } => modulus.is_finite(),
            ModulusTensor::Isotropic { lambda, mu } => lambda.is_finite() && mu.is_finite(),
        }
    }
}
