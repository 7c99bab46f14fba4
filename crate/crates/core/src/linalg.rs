//! Compressed sparse rows and preconditioned conjugate gradients.

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order so assembly is deterministic.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![Vec::new(); n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i].push((j, v));
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            // stable sort keeps the summation order of duplicates fixed
            row.sort_by_key(|&(j, _)| j);
            let mut last = usize::MAX;
            for (j, v) in row {
                if j == last {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = j;
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

/// Square sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: d.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = TripletBuilder::new(self.n);
        for (i, j, v) in self.entries() {
            t.add(i, j, v);
        }
        for (i, j, v) in other.entries() {
            t.add(i, j, s * v);
        }
        t.build()
    }

    pub fn scale(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Largest Gershgorin radius bound `max_i Σ_j |a_ij| / d_i` for a
    /// diagonal scaling `d`.
    pub fn gershgorin_scaled(&self, d: &[f64]) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>() / d[i]).fold(0.0, f64::max)
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.entries().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.entries() {
            d[i][j] = v;
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `(Σ M_i x_i²)^½` for a lumped mass `M` (nodal fields with `c` components).
pub fn mass_norm(x: &[f64], mass: &[f64]) -> f64 {
    let c = x.len() / mass.len();
    x.iter().enumerate().map(|(i, v)| mass[i / c] * v * v).sum::<f64>().sqrt()
}

/// Dual of [`mass_norm`]: `(Σ r_i² / M_i)^½` for a functional `r`.
pub fn dual_norm(r: &[f64], mass: &[f64]) -> f64 {
    let c = r.len() / mass.len();
    r.iter().enumerate().map(|(i, v)| v * v / mass[i / c]).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-300, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite `a`. Entries flagged in `fixed` keep their value in `x`; their
/// rows and columns are eliminated.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], fixed: Option<&[bool]>, opts: CgOptions) -> Result<CgStats> {
    let n = a.dim();
    let free = |i: usize| fixed.is_none_or(|f| !f[i]);
    let diag = a.diag();
    let mut r = a.matvec(x);
    for i in 0..n {
        r[i] = if free(i) { b[i] - r[i] } else { 0.0 };
    }
    let bnorm = (0..n).filter(|&i| free(i)).map(|i| b[i] * b[i]).sum::<f64>().sqrt();
    let target = (opts.rel_tol * bnorm).max(opts.abs_tol);
    let mut res = norm(&r);
    if res <= target {
        return Ok(CgStats { iterations: 0, residual: res });
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free(i) { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        a.matvec_into(&p, &mut ap);
        if let Some(f) = fixed {
            for i in 0..n {
                if f[i] {
                    ap[i] = 0.0;
                }
            }
        }
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver { step: 0, message: format!("conjugate gradients broke down (pAp = {pap:e})") });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r);
        if res <= target {
            return Ok(CgStats { iterations: it, residual: res });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver {
        step: 0,
        message: format!("conjugate gradients did not reach {target:e} in {} iterations (residual {res:e})", opts.max_iter),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_plus_mass(n: usize) -> CsrMatrix {
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.add(i, i, 3.0);
            if i > 0 {
                t.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
            }
        }
        t.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletBuilder::new(2);
        t.add(0, 1, 1.0);
        t.add(0, 1, 2.0);
        t.add(1, 0, -1.0);
        let m = t.build();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.entries().count(), 2);
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = laplace_plus_mass(40);
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&xs);
        let mut x = vec![0.0; 40];
        let stats = pcg(&a, &b, &mut x, None, CgOptions { rel_tol: 1e-14, ..Default::default() }).unwrap();
        assert!(stats.iterations <= 40);
        for (p, q) in x.iter().zip(&xs) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_respects_fixed_entries() {
        let a = laplace_plus_mass(5);
        let mut x = vec![0.0, 0.0, 7.0, 0.0, 0.0];
        let fixed = [false, false, true, false, false];
        let b = vec![1.0; 5];
        pcg(&a, &b, &mut x, Some(&fixed), CgOptions::default()).unwrap();
        assert_eq!(x[2], 7.0);
        let r = a.matvec(&x);
        for i in [0, 1, 3, 4] {
            assert!((r[i] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn add_scaled_and_norms() {
        let a = laplace_plus_mass(3);
        let m = CsrMatrix::diagonal(&[1.0, 2.0, 4.0]);
        let c = a.add_scaled(2.0, &m);
        assert_eq!(c.get(2, 2), 11.0);
        assert_eq!(c.get(0, 1), -1.0);
        assert_eq!(mass_norm(&[1.0, 1.0, 1.0], &[1.0, 2.0, 4.0]), 7f64.sqrt());
        assert_eq!(dual_norm(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]), 7f64.sqrt());
    }
}
