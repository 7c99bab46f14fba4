//! P1 finite elements on uniform 1D meshes and structured 2D triangle meshes.
//!
//! Every square of the 2D grid is cut along the same diagonal into two
//! right triangles, so the scalar Laplacian has non-positive off-diagonal
//! entries. Mass is lumped by row sums and every element integral uses the
//! one-point rule, which is exact for the piecewise-constant gradients.
//!
//! Displacements are stored node-major: component `c` of node `i` lives at
//! index `dim * i + c`.

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::tensor::{ModulusTensor, SymTensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Vertex indices; only the first `nv` entries are used.
    pub nodes: [usize; 3],
    pub nv: usize,
    pub volume: f64,
    /// Gradients of the vertex basis functions.
    pub grads: [[f64; 2]; 3],
}

impl Element {
    pub fn vertices(&self) -> &[usize] {
        &self.nodes[..self.nv]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub nv: usize,
    /// Length of the edge in 2D, 1 for an end point in 1D.
    pub measure: f64,
    pub normal: [f64; 2],
    pub side: Side,
}

impl Facet {
    pub fn vertices(&self) -> &[usize] {
        &self.nodes[..self.nv]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub resolution: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub facets: Vec<Facet>,
    mass: Vec<f64>,
}

/// Builds a uniform mesh of `[0, L₁] (× [0, L₂])` with `resolution[i]` nodes
/// along axis `i`.
pub fn build_mesh(dim: usize, lengths: &[f64], resolution: &[usize]) -> Result<Mesh> {
    if dim != 1 && dim != 2 {
        return Err(Error::Mesh(format!("dimension must be 1 or 2, got {dim}")));
    }
    if lengths.len() != dim || resolution.len() != dim {
        return Err(Error::Mesh(format!("expected {dim} lengths and resolutions, got {} and {}", lengths.len(), resolution.len())));
    }
    for (&l, &n) in lengths.iter().zip(resolution) {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Mesh(format!("domain length must be positive and finite, got {l}")));
        }
        if n < 2 {
            return Err(Error::Mesh(format!("need at least 2 nodes per axis, got {n}")));
        }
    }
    let mut mesh = if dim == 1 { build_1d(lengths[0], resolution[0]) } else { build_2d(lengths, resolution) };
    let mut mass = vec![0.0; mesh.coords.len()];
    for e in &mesh.elements {
        for &i in e.vertices() {
            mass[i] += e.volume / e.nv as f64;
        }
    }
    mesh.mass = mass;
    Ok(mesh)
}

fn build_1d(l: f64, nx: usize) -> Mesh {
    let h = l / (nx - 1) as f64;
    let coords = (0..nx).map(|i| [if i == nx - 1 { l } else { i as f64 * h }, 0.0]).collect();
    let elements = (0..nx - 1)
        .map(|i| Element { nodes: [i, i + 1, 0], nv: 2, volume: h, grads: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]] })
        .collect();
    let facets = vec![
        Facet { nodes: [0, 0], nv: 1, measure: 1.0, normal: [-1.0, 0.0], side: Side::Left },
        Facet { nodes: [nx - 1, 0], nv: 1, measure: 1.0, normal: [1.0, 0.0], side: Side::Right },
    ];
    Mesh { dim: 1, lengths: vec![l], resolution: vec![nx], coords, elements, facets, mass: Vec::new() }
}

fn triangle(coords: &[[f64; 2]], nodes: [usize; 3]) -> Element {
    let p = nodes.map(|i| coords[i]);
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut grads = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        grads[a] = [(p[b][1] - p[c][1]) / det, (p[c][0] - p[b][0]) / det];
    }
    Element { nodes, nv: 3, volume: 0.5 * det, grads }
}

fn build_2d(lengths: &[f64], res: &[usize]) -> Mesh {
    let (nx, ny) = (res[0], res[1]);
    let (hx, hy) = (lengths[0] / (nx - 1) as f64, lengths[1] / (ny - 1) as f64);
    let coord = |i: usize, n: usize, h: f64, l: f64| if i == n - 1 { l } else { i as f64 * h };
    let mut coords = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            coords.push([coord(i, nx, hx, lengths[0]), coord(j, ny, hy, lengths[1])]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut elements = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            elements.push(triangle(&coords, [id(i, j), id(i + 1, j), id(i + 1, j + 1)]));
            elements.push(triangle(&coords, [id(i, j), id(i + 1, j + 1), id(i, j + 1)]));
        }
    }
    let mut facets = Vec::new();
    for i in 0..nx - 1 {
        facets.push(Facet { nodes: [id(i, 0), id(i + 1, 0)], nv: 2, measure: hx, normal: [0.0, -1.0], side: Side::Bottom });
    }
    for j in 0..ny - 1 {
        facets.push(Facet { nodes: [id(nx - 1, j), id(nx - 1, j + 1)], nv: 2, measure: hy, normal: [1.0, 0.0], side: Side::Right });
    }
    for i in 0..nx - 1 {
        facets.push(Facet { nodes: [id(i, ny - 1), id(i + 1, ny - 1)], nv: 2, measure: hx, normal: [0.0, 1.0], side: Side::Top });
    }
    for j in 0..ny - 1 {
        facets.push(Facet { nodes: [id(0, j), id(0, j + 1)], nv: 2, measure: hy, normal: [-1.0, 0.0], side: Side::Left });
    }
    Mesh { dim: 2, lengths: lengths.to_vec(), resolution: res.to_vec(), coords, elements, facets, mass: Vec::new() }
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Diagonal of the lumped mass matrix.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn volume(&self) -> f64 {
        self.elements.iter().map(|e| e.volume).sum()
    }

    /// `|Γ|`, or the measure of the listed sides.
    pub fn boundary_measure(&self, sides: Option<&[Side]>) -> f64 {
        self.facets.iter().filter(|f| sides.is_none_or(|s| s.contains(&f.side))).map(|f| f.measure).sum()
    }

    /// Lumped integral `∫ f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// Scalar stiffness `∫ c_e ∇φ_i·∇φ_j` with one coefficient per element.
    pub fn stiffness(&self, coeff: &[f64]) -> CsrMatrix {
        assert_eq!(coeff.len(), self.elements.len());
        let mut t = TripletBuilder::new(self.num_nodes());
        for (e, &c) in self.elements.iter().zip(coeff) {
            for a in 0..e.nv {
                for b in 0..e.nv {
                    let g = e.grads[a][0] * e.grads[b][0] + e.grads[a][1] * e.grads[b][1];
                    t.add(e.nodes[a], e.nodes[b], c * e.volume * g);
                }
            }
        }
        t.build()
    }

    /// Vector stiffness `∫ A ε(φ) : ε(ψ)` for the displacement unknowns.
    pub fn elastic_stiffness(&self, modulus: &ModulusTensor) -> CsrMatrix {
        let d = self.dim;
        let mut t = TripletBuilder::new(d * self.num_nodes());
        for e in &self.elements {
            for a in 0..e.nv {
                for c in 0..d {
                    let sa = unit_strain(d, e.grads[a], c);
                    let stress = modulus.apply(&sa);
                    for b in 0..e.nv {
                        for k in 0..d {
                            let sb = unit_strain(d, e.grads[b], k);
                            t.add(d * e.nodes[a] + c, d * e.nodes[b] + k, e.volume * stress.ddot(&sb));
                        }
                    }
                }
            }
        }
        t.build()
    }

    /// Element strains `ε(u)`.
    pub fn strain(&self, u: &[f64]) -> Vec<SymTensor> {
        assert_eq!(u.len(), self.dim * self.num_nodes());
        let d = self.dim;
        self.elements
            .iter()
            .map(|e| {
                let mut s = SymTensor::ZERO;
                for a in 0..e.nv {
                    let g = e.grads[a];
                    let i = e.nodes[a];
                    if d == 1 {
                        s.xx += u[i] * g[0];
                    } else {
                        let (ux, uy) = (u[2 * i], u[2 * i + 1]);
                        s.xx += ux * g[0];
                        s.yy += uy * g[1];
                        s.xy += 0.5 * (ux * g[1] + uy * g[0]);
                    }
                }
                s
            })
            .collect()
    }

    /// Transpose of [`Mesh::strain`] weighted by volume: the nodal vector of
    /// `∫ σ : ε(φ)` for element stresses `σ`.
    pub fn divergence(&self, stress: &[SymTensor]) -> Vec<f64> {
        assert_eq!(stress.len(), self.elements.len());
        let d = self.dim;
        let mut out = vec![0.0; d * self.num_nodes()];
        for (e, s) in self.elements.iter().zip(stress) {
            for a in 0..e.nv {
                let g = e.grads[a];
                let i = e.nodes[a];
                if d == 1 {
                    out[i] += e.volume * s.xx * g[0];
                } else {
                    out[2 * i] += e.volume * (s.xx * g[0] + s.xy * g[1]);
                    out[2 * i + 1] += e.volume * (s.xy * g[0] + s.yy * g[1]);
                }
            }
        }
        out
    }

    /// Element gradients of a nodal scalar field.
    pub fn gradient(&self, f: &[f64]) -> Vec<[f64; 2]> {
        assert_eq!(f.len(), self.num_nodes());
        self.elements
            .iter()
            .map(|e| {
                let mut g = [0.0; 2];
                for a in 0..e.nv {
                    g[0] += f[e.nodes[a]] * e.grads[a][0];
                    g[1] += f[e.nodes[a]] * e.grads[a][1];
                }
                g
            })
            .collect()
    }

    /// Vertex average of a nodal field on each element.
    pub fn element_mean(&self, f: &[f64]) -> Vec<f64> {
        self.elements.iter().map(|e| e.vertices().iter().map(|&i| f[i]).sum::<f64>() / e.nv as f64).collect()
    }

    /// Lumps element densities to nodes: `Σ_{e∋i} (V_e/n_v) g_e`, i.e. the
    /// nodal integral contributions, not nodal values.
    pub fn lump_to_nodes(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes()];
        for (e, v) in self.elements.iter().zip(g) {
            let w = e.volume / e.nv as f64 * v;
            for &i in e.vertices() {
                out[i] += w;
            }
        }
        out
    }

    /// Nodal vector of `∫_Γ g φ_i dS` using the trapezoidal rule on each
    /// facet; `g` receives the side and the node coordinates.
    pub fn boundary_functional(&self, g: impl Fn(Side, [f64; 2]) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes()];
        for f in &self.facets {
            let w = f.measure / f.nv as f64;
            for &i in f.vertices() {
                out[i] += w * g(f.side, self.coords[i]);
            }
        }
        out
    }

    /// Vector-valued version of [`Mesh::boundary_functional`] for tractions.
    pub fn boundary_functional_vec(&self, g: impl Fn(Side, [f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * self.num_nodes()];
        for f in &self.facets {
            let w = f.measure / f.nv as f64;
            for &i in f.vertices() {
                let v = g(f.side, self.coords[i]);
                for c in 0..d {
                    out[d * i + c] += w * v[c];
                }
            }
        }
        out
    }

    /// Nodes on the given sides (sorted, without duplicates).
    pub fn nodes_on(&self, sides: &[Side]) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().filter(|f| sides.contains(&f.side)).flat_map(|f| f.vertices().to_vec()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn unit_strain(dim: usize, g: [f64; 2], comp: usize) -> SymTensor {
    if dim == 1 {
        SymTensor::new(g[0], 0.0, 0.0)
    } else if comp == 0 {
        SymTensor::new(g[0], 0.0, 0.5 * g[1])
    } else {
        SymTensor::new(0.0, g[1], 0.5 * g[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mesh_counts() {
        let m = build_mesh(1, &[1.0], &[3]).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements()), (3, 2));
        assert_eq!(m.elements[0].volume, 0.5);
        let m = build_mesh(2, &[1.0, 1.0], &[3, 3]).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements()), (9, 8));
        assert!((m.volume() - 1.0).abs() < 1e-15);
        assert!(m.elements.iter().all(|e| e.volume > 0.0));
        assert!(build_mesh(1, &[1.0], &[1]).is_err());
        assert!(build_mesh(1, &[0.0], &[4]).is_err());
        assert!(build_mesh(3, &[1.0; 3], &[3; 3]).is_err());
    }

    #[test]
    fn facets_cover_boundary() {
        let m = build_mesh(2, &[2.0, 0.5], &[5, 3]).unwrap();
        assert!((m.boundary_measure(None) - 5.0).abs() < 1e-14);
        for f in &m.facets {
            let n = f.normal;
            assert!((n[0] * n[0] + n[1] * n[1] - 1.0).abs() < 1e-15);
        }
        assert_eq!(m.nodes_on(&[Side::Left]).len(), 3);
    }

    #[test]
    fn lumped_mass_1d() {
        let m = build_mesh(1, &[1.0], &[3]).unwrap();
        assert_eq!(m.lumped_mass(), &[0.25, 0.5, 0.25]);
        assert_eq!(m.integrate(&[2.0; 3]), 2.0);
        let m = build_mesh(2, &[1.0, 1.0], &[7, 4]).unwrap();
        let total: f64 = m.lumped_mass().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(m.lumped_mass().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn stiffness_1d_hand_assembly() {
        let m = build_mesh(1, &[1.0], &[3]).unwrap();
        let k = m.stiffness(&[1.0, 1.0]).to_dense();
        let expected = [[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn stiffness_kernel_symmetry_and_sign() {
        let m = build_mesh(2, &[1.0, 1.0], &[6, 5]).unwrap();
        let k = m.stiffness(&vec![1.0; m.num_elements()]);
        let ones = vec![1.0; m.num_nodes()];
        assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-13));
        assert!(k.symmetry_defect() < 1e-14);
        for (i, j, v) in k.entries() {
            if i != j {
                assert!(v <= 1e-15, "positive off-diagonal ({i},{j}) = {v}");
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..m.num_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let kx = k.matvec(&x);
            assert!(x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>() >= -1e-14);
        }
    }

    #[test]
    fn strain_exact_on_affine_fields() {
        let m = build_mesh(1, &[1.0], &[6]).unwrap();
        let u: Vec<f64> = m.coords.iter().map(|p| 0.3 * p[0] + 2.0).collect();
        assert!(m.strain(&u).iter().all(|s| (s.xx - 0.3).abs() < 1e-14));

        let m = build_mesh(2, &[1.0, 2.0], &[4, 5]).unwrap();
        let rot: Vec<f64> = m.coords.iter().flat_map(|p| [-p[1] * 1e-2, p[0] * 1e-2]).collect();
        assert!(m.strain(&rot).iter().all(|s| s.norm_sq().sqrt() < 1e-14));
        let aff: Vec<f64> = m.coords.iter().flat_map(|p| [0.1 * p[0] + 0.2 * p[1], -0.3 * p[1]]).collect();
        for s in m.strain(&aff) {
            assert!((s.xx - 0.1).abs() < 1e-14 && (s.yy + 0.3).abs() < 1e-14 && (s.xy - 0.1).abs() < 1e-14);
        }
    }

    #[test]
    fn patch_test_constant_stress() {
        let m = build_mesh(2, &[1.0, 1.0], &[5, 5]).unwrap();
        let c = ModulusTensor::Isotropic { lambda: 1.0, mu: 0.7 };
        let aff: Vec<f64> = m.coords.iter().flat_map(|p| [0.1 * p[0] + 0.05 * p[1], 0.02 * p[0] - 0.3 * p[1]]).collect();
        let s: Vec<SymTensor> = m.strain(&aff).iter().map(|e| c.apply(e)).collect();
        for t in &s[1..] {
            assert!(t.sub(&s[0]).norm_sq().sqrt() < 1e-14);
        }
        // interior nodes see balanced forces for a constant stress
        let f = m.divergence(&s);
        let boundary = m.nodes_on(&Side::ALL);
        for i in 0..m.num_nodes() {
            if !boundary.contains(&i) {
                assert!(f[2 * i].abs() < 1e-14 && f[2 * i + 1].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn elastic_stiffness_matches_strain_energy() {
        let m = build_mesh(2, &[1.0, 1.0], &[4, 3]).unwrap();
        let c = ModulusTensor::Isotropic { lambda: 0.4, mu: 0.9 };
        let k = m.elastic_stiffness(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..2 * m.num_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ku = k.matvec(&u);
        let quad: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        let energy: f64 = m.strain(&u).iter().zip(&m.elements).map(|(s, e)| 2.0 * e.volume * c.energy(s)).sum();
        assert!((quad - energy).abs() < 1e-12 * energy);
        let stresses: Vec<SymTensor> = m.strain(&u).iter().map(|s| c.apply(s)).collect();
        let div = m.divergence(&stresses);
        for (a, b) in ku.iter().zip(&div) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_functional_examples() {
        let m = build_mesh(1, &[1.0], &[4]).unwrap();
        let b = m.boundary_functional(|s, _| if s == Side::Left { 2.0 } else { -1.0 });
        assert_eq!(b, vec![2.0, 0.0, 0.0, -1.0]);
        let m = build_mesh(2, &[1.0, 1.0], &[5, 4]).unwrap();
        let b = m.boundary_functional(|_, _| 1.0);
        assert!((b.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!(m.boundary_functional(|_, _| 0.0).iter().all(|&v| v == 0.0));
    }
}
