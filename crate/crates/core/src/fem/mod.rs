//! Piecewise-linear finite elements on uniform interval meshes and
//! structured triangulations of rectangles, with homogeneous Dirichlet
//! conditions imposed by eliminating boundary nodes.

mod eigen;
mod mesh;

pub use mesh::{Domain, Mesh, Point};

use crate::error::{Error, Result};
use nalgebra::DMatrixViewMut;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};
use std::path::Path;
use std::sync::OnceLock;

/// Per-element quadrature for load vectors and Ritz right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadOrder {
    /// 3-point Gauss in 1D, 3-point interior rule (degree 2) on triangles.
    #[default]
    Standard,
    /// 5-point Gauss in 1D, 7-point degree-5 rule on triangles.
    High,
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_004, 0.118_463_442_528_094_54),
    (0.230_765_344_947_158_46, 0.239_314_335_249_683_23),
    (0.5, 0.284_444_444_444_444_45),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_23),
    (0.953_089_922_969_332, 0.118_463_442_528_094_54),
];

const TRI3: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const TRI7_A1: f64 = 0.059_715_871_789_769_82;
const TRI7_B1: f64 = 0.470_142_064_105_115_1;
const TRI7_W1: f64 = 0.132_394_152_788_506_2;
const TRI7_A2: f64 = 0.797_426_985_353_087_3;
const TRI7_B2: f64 = 0.101_286_507_323_456_3;
const TRI7_W2: f64 = 0.125_939_180_544_827_1;
const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([TRI7_A1, TRI7_B1, TRI7_B1], TRI7_W1),
    ([TRI7_B1, TRI7_A1, TRI7_B1], TRI7_W1),
    ([TRI7_B1, TRI7_B1, TRI7_A1], TRI7_W1),
    ([TRI7_A2, TRI7_B2, TRI7_B2], TRI7_W2),
    ([TRI7_B2, TRI7_A2, TRI7_B2], TRI7_W2),
    ([TRI7_B2, TRI7_B2, TRI7_A2], TRI7_W2),
];

/// Barycentric points and weights (summing to 1) on the reference element.
fn reference_rule(dim: usize, order: QuadOrder) -> Vec<([f64; 3], f64)> {
    match (dim, order) {
        (1, QuadOrder::Standard) => GAUSS3.iter().map(|&(s, w)| ([1.0 - s, s, 0.0], w)).collect(),
        (1, QuadOrder::High) => GAUSS5.iter().map(|&(s, w)| ([1.0 - s, s, 0.0], w)).collect(),
        (_, QuadOrder::Standard) => TRI3.to_vec(),
        (_, QuadOrder::High) => TRI7.to_vec(),
    }
}

/// A scalar function on the domain together with its gradient.
pub trait Field {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> Point;
}

/// [`Field`] built from a value closure and a gradient closure.
pub struct FnField<F, G>(pub F, pub G);

impl<F, G> Field for FnField<F, G>
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> Point,
{
    fn value(&self, p: Point) -> f64 {
        (self.0)(p)
    }
    fn gradient(&self, p: Point) -> Point {
        (self.1)(p)
    }
}

/// Geometry of one element: vertices, measure and constant basis gradients.
struct ElementGeometry {
    vertices: Vec<usize>,
    measure: f64,
    grads: Vec<Point>,
}

fn element_geometry(mesh: &Mesh, e: usize) -> ElementGeometry {
    let v = mesh.elements[e].clone();
    let measure = mesh.element_measure(e);
    let grads = if v.len() == 2 {
        vec![[-1.0 / measure, 0.0], [1.0 / measure, 0.0]]
    } else {
        let p: Vec<Point> = v.iter().map(|&k| mesh.nodes[k]).collect();
        (0..3)
            .map(|i| {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let b = p[j][1] - p[k][1];
                let c = p[k][0] - p[j][0];
                [b / (2.0 * measure), c / (2.0 * measure)]
            })
            .collect()
    };
    ElementGeometry {
        vertices: v,
        measure,
        grads,
    }
}

fn barycentric_point(mesh: &Mesh, vertices: &[usize], lambda: &[f64; 3]) -> Point {
    let mut p = [0.0, 0.0];
    for (i, &k) in vertices.iter().enumerate() {
        p[0] += lambda[i] * mesh.nodes[k][0];
        p[1] += lambda[i] * mesh.nodes[k][1];
    }
    p
}

/// Element mass and stiffness entries `(M_ij, K_ij)` in local numbering.
fn element_matrices(geo: &ElementGeometry) -> Vec<Vec<(f64, f64)>> {
    let n = geo.vertices.len();
    let mass_diag = if n == 2 { geo.measure / 3.0 } else { geo.measure / 6.0 };
    let mass_off = if n == 2 { geo.measure / 6.0 } else { geo.measure / 12.0 };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let m = if i == j { mass_diag } else { mass_off };
                    let gi = geo.grads[i];
                    let gj = geo.grads[j];
                    let k = (gi[0] * gj[0] + gi[1] * gj[1]) * geo.measure;
                    (m, k)
                })
                .collect()
        })
        .collect()
}

/// Mass and stiffness matrices over all nodes, boundary included.
pub fn assemble_full(mesh: &Mesh) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
    let n = mesh.nodes.len();
    let mut mass = CooMatrix::new(n, n);
    let mut stiff = CooMatrix::new(n, n);
    for e in 0..mesh.elements.len() {
        let geo = element_geometry(mesh, e);
        let local = element_matrices(&geo);
        for (i, &vi) in geo.vertices.iter().enumerate() {
            for (j, &vj) in geo.vertices.iter().enumerate() {
                mass.push(vi, vj, local[i][j].0);
                stiff.push(vi, vj, local[i][j].1);
            }
        }
    }
    (CsrMatrix::from(&mass), CsrMatrix::from(&stiff))
}

/// `y = A x` for a CSR matrix.
pub fn spmv(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    let offsets = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in offsets[i]..offsets[i + 1] {
            s += vals[k] * x[cols[k]];
        }
        *yi = s;
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Assembled P1 system on the interior nodes of a mesh, with Cholesky
/// factors of the mass and stiffness matrices.
pub struct FemSystem {
    mesh: Mesh,
    mass: CsrMatrix<f64>,
    stiffness: CsrMatrix<f64>,
    mass_factor: CscCholesky<f64>,
    stiffness_factor: CscCholesky<f64>,
    c_inv: OnceLock<f64>,
}

impl std::fmt::Debug for FemSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FemSystem")
            .field("dimension", &self.mesh.dimension())
            .field("n_per_side", &self.mesh.n_per_side)
            .field("dofs", &self.mesh.n_interior())
            .finish()
    }
}

fn factor(a: &CsrMatrix<f64>, name: &str) -> Result<CscCholesky<f64>> {
    CscCholesky::factor(&CscMatrix::from(a))
        .map_err(|e| Error::Solver(format!("{name} factorization failed: {e:?}")))
}

impl FemSystem {
    pub fn assemble(mesh: Mesh) -> Result<Self> {
        let dofs = mesh.n_interior();
        if dofs == 0 {
            return Err(Error::Domain("mesh has no interior nodes".into()));
        }
        let mut mass = CooMatrix::new(dofs, dofs);
        let mut stiff = CooMatrix::new(dofs, dofs);
        for e in 0..mesh.elements.len() {
            let geo = element_geometry(&mesh, e);
            let local = element_matrices(&geo);
            for (i, &vi) in geo.vertices.iter().enumerate() {
                let Some(r) = mesh.interior_index[vi] else { continue };
                for (j, &vj) in geo.vertices.iter().enumerate() {
                    let Some(c) = mesh.interior_index[vj] else { continue };
                    mass.push(r, c, local[i][j].0);
                    stiff.push(r, c, local[i][j].1);
                }
            }
        }
        let mass = CsrMatrix::from(&mass);
        let stiffness = CsrMatrix::from(&stiff);
        let mass_factor = factor(&mass, "mass")?;
        let stiffness_factor = factor(&stiffness, "stiffness")?;
        Ok(Self {
            mesh,
            mass,
            stiffness,
            mass_factor,
            stiffness_factor,
            c_inv: OnceLock::new(),
        })
    }

    /// Mesh of `n_per_side` cells per side on `domain`, assembled.
    pub fn build(domain: Domain, n_per_side: usize) -> Result<Self> {
        Self::assemble(Mesh::new(domain, n_per_side)?)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    pub fn dofs(&self) -> usize {
        self.mesh.n_interior()
    }

    pub fn mass(&self) -> &CsrMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    pub fn mul_mass(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        spmv(&self.mass, x, &mut y);
        y
    }

    pub fn mul_stiffness(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        spmv(&self.stiffness, x, &mut y);
        y
    }

    /// `xᵀ M y`
    pub fn mass_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.mul_mass(x), y)
    }

    /// `xᵀ K y`
    pub fn stiffness_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.mul_stiffness(x), y)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dofs() {
            return Err(Error::Domain(format!(
                "vector length {} does not match {} interior nodes",
                x.len(),
                self.dofs()
            )));
        }
        Ok(())
    }

    /// Solves `M x = b` in place.
    pub fn solve_mass_in_place(&self, b: &mut [f64]) -> Result<()> {
        self.check_len(b)?;
        let n = b.len();
        self.mass_factor.solve_mut(DMatrixViewMut::from_slice(b, n, 1));
        finite_or_err(b, "mass")
    }

    pub fn solve_mass(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_mass_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_stiffness(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        let mut x = b.to_vec();
        let n = x.len();
        self.stiffness_factor.solve_mut(DMatrixViewMut::from_slice(&mut x, n, 1));
        finite_or_err(&x, "stiffness")?;
        Ok(x)
    }

    /// Interior values of `f` at the nodes.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.mesh.interpolate(f)
    }

    /// `∫ f φ_i` with the standard per-element rule.
    pub fn load_vector(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.load_vector_with(f, QuadOrder::Standard)
    }

    pub fn load_vector_with(&self, f: impl Fn(Point) -> f64, order: QuadOrder) -> Vec<f64> {
        let rule = reference_rule(self.mesh.dimension(), order);
        let mut b = vec![0.0; self.dofs()];
        for e in 0..self.mesh.elements.len() {
            let vertices = &self.mesh.elements[e];
            if vertices.iter().all(|&k| self.mesh.interior_index[k].is_none()) {
                continue;
            }
            let measure = self.mesh.element_measure(e);
            for (lambda, w) in &rule {
                let fp = f(barycentric_point(&self.mesh, vertices, lambda)) * w * measure;
                for (i, &k) in vertices.iter().enumerate() {
                    if let Some(r) = self.mesh.interior_index[k] {
                        b[r] += fp * lambda[i];
                    }
                }
            }
        }
        b
    }

    /// `∫ ∇u·∇φ_i` with the given per-element rule.
    pub fn gradient_load<U: Field + ?Sized>(&self, u: &U, order: QuadOrder) -> Vec<f64> {
        let rule = reference_rule(self.mesh.dimension(), order);
        let mut g = vec![0.0; self.dofs()];
        for e in 0..self.mesh.elements.len() {
            let geo = element_geometry(&self.mesh, e);
            if geo.vertices.iter().all(|&k| self.mesh.interior_index[k].is_none()) {
                continue;
            }
            let mut mean = [0.0, 0.0];
            for (lambda, w) in &rule {
                let d = u.gradient(barycentric_point(&self.mesh, &geo.vertices, lambda));
                mean[0] += w * d[0];
                mean[1] += w * d[1];
            }
            for (i, &k) in geo.vertices.iter().enumerate() {
                if let Some(r) = self.mesh.interior_index[k] {
                    let gi = geo.grads[i];
                    g[r] += geo.measure * (mean[0] * gi[0] + mean[1] * gi[1]);
                }
            }
        }
        g
    }

    /// Ritz projection: `K x = (∇u, ∇φ_i)`.
    pub fn ritz_projection<U: Field + ?Sized>(&self, u: &U) -> Result<Vec<f64>> {
        self.solve_stiffness(&self.gradient_load(u, QuadOrder::Standard))
    }

    /// Ritz projection of a function that is already in the finite element
    /// space, given by its interior nodal values.
    pub fn ritz_projection_nodal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        self.solve_stiffness(&self.mul_stiffness(x))
    }

    /// L2 projection from a load vector: `M x = f_load`.
    pub fn l2_projection(&self, f_load: &[f64]) -> Result<Vec<f64>> {
        self.solve_mass(f_load)
    }

    /// `(sqrt(xᵀMx), sqrt(xᵀMx + xᵀKx))`
    pub fn norms(&self, x: &[f64]) -> (f64, f64) {
        let m = self.mass_inner(x, x);
        let k = self.stiffness_inner(x, x);
        (m.max(0.0).sqrt(), (m + k).max(0.0).sqrt())
    }

    pub fn l2_norm(&self, x: &[f64]) -> f64 {
        self.mass_inner(x, x).max(0.0).sqrt()
    }

    /// Extreme eigenvalues `(λ_min, λ_max)` of `K x = λ M x` by Lanczos
    /// iteration in the M-inner product.
    pub fn extreme_eigenvalues(&self, max_iter: usize) -> Result<(f64, f64)> {
        eigen::lanczos_extremes(self, max_iter, 1e-10)
    }

    /// `C_inv = h·sqrt(λ_max(K, M))`, computed once per system.
    pub fn inverse_constant(&self) -> Result<f64> {
        if let Some(&c) = self.c_inv.get() {
            return Ok(c);
        }
        let (_, lmax) = self.extreme_eigenvalues(eigen::DEFAULT_MAX_ITER)?;
        Ok(*self.c_inv.get_or_init(|| self.h() * lmax.sqrt()))
    }

    /// Writes M and K in Matrix Market coordinate format.
    pub fn write_matrix_market(&self, mass_path: &Path, stiffness_path: &Path) -> Result<()> {
        nalgebra_sparse::io::save_to_matrix_market_file(&self.mass, mass_path)?;
        nalgebra_sparse::io::save_to_matrix_market_file(&self.stiffness, stiffness_path)?;
        Ok(())
    }
}

fn finite_or_err(x: &[f64], name: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Solver(format!("{name} solve produced non-finite values")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dense(a: &CsrMatrix<f64>) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from(a)
    }

    #[test]
    fn one_dimensional_closed_forms() {
        let sys = FemSystem::build(Domain::unit_interval(), 4).unwrap();
        let h = 0.25;
        let k = dense(sys.stiffness());
        let m = dense(sys.mass());
        for i in 0..3 {
            for j in 0..3 {
                let (ke, me) = match (i as i32 - j as i32).abs() {
                    0 => (2.0 / h, 4.0 * h / 6.0),
                    1 => (-1.0 / h, h / 6.0),
                    _ => (0.0, 0.0),
                };
                assert!((k[(i, j)] - ke).abs() < 1e-13);
                assert!((m[(i, j)] - me).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn symmetric_and_definite() {
        let sys = FemSystem::build(Domain::symmetric_square(), 6).unwrap();
        for a in [sys.mass(), sys.stiffness()] {
            let d = dense(a);
            let scale = d.amax();
            assert!((&d - d.transpose()).amax() <= 1e-14 * scale);
        }
        let x: Vec<f64> = (0..sys.dofs()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        assert!(sys.mass_inner(&x, &x) > 0.0);
        assert!(sys.stiffness_inner(&x, &x) > 0.0);
    }

    #[test]
    fn full_stiffness_annihilates_constants_and_mass_rows_integrate_hats() {
        for mesh in [
            Mesh::new(Domain::unit_interval(), 7).unwrap(),
            Mesh::new(Domain::symmetric_square(), 5).unwrap(),
        ] {
            let (m, k) = assemble_full(&mesh);
            let n = mesh.nodes.len();
            let ones = vec![1.0; n];
            let mut y = vec![0.0; n];
            spmv(&k, &ones, &mut y);
            assert!(y.iter().all(|v| v.abs() < 1e-12));
            spmv(&m, &ones, &mut y);
            // ∫φ_i = measure of the patch / (d + 1)
            let mut hat = vec![0.0; n];
            let d = mesh.dimension() as f64;
            for e in 0..mesh.elements.len() {
                for &v in &mesh.elements[e] {
                    hat[v] += mesh.element_measure(e) / (d + 1.0);
                }
            }
            for (a, b) in y.iter().zip(&hat) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn load_of_constant_is_hat_integral() {
        let sys = FemSystem::build(Domain::unit_interval(), 8).unwrap();
        assert!(sys.load_vector(|_| 1.0).iter().all(|v| (v - 0.125).abs() < 1e-15));
        assert!(sys.load_vector(|_| 0.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nodal_ritz_projection_is_identity() {
        let sys = FemSystem::build(Domain::symmetric_square(), 6).unwrap();
        let x = sys.interpolate(|p| (p[0] - 1.0) * (p[1] + 1.0) * p[0]);
        let r = sys.ritz_projection_nodal(&x).unwrap();
        for (a, b) in x.iter().zip(&r) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_projection_of_discrete_function_is_itself() {
        let sys = FemSystem::build(Domain::unit_interval(), 16).unwrap();
        let x = sys.interpolate(|p| (PI * p[0]).sin());
        let p = sys.l2_projection(&sys.mul_mass(&x)).unwrap();
        for (a, b) in x.iter().zip(&p) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(sys.l2_projection(&[0.0; 15]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn norms_of_interpolated_sine() {
        let sys = FemSystem::build(Domain::unit_interval(), 256).unwrap();
        let x = sys.interpolate(|p| (PI * p[0]).sin());
        let (l2, h1) = sys.norms(&x);
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-4);
        assert!(h1 >= l2);
        assert_eq!(sys.norms(&vec![0.0; 255]), (0.0, 0.0));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let sys = FemSystem::build(Domain::unit_interval(), 4).unwrap();
        assert!(sys.solve_mass(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        // ∫ λ1^a λ2^b λ3^c over the reference triangle, relative to its area:
        // 2·a!·b!·c!/(a+b+c+2)!
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        let exact = |a: u32, b: u32, c: u32| 2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
        let apply = |rule: &[([f64; 3], f64)], a: i32, b: i32, c: i32| -> f64 {
            rule.iter()
                .map(|(l, w)| w * l[0].powi(a) * l[1].powi(b) * l[2].powi(c))
                .sum()
        };
        assert!((apply(&TRI3, 1, 1, 0) - exact(1, 1, 0)).abs() < 1e-15);
        assert!((apply(&TRI3, 2, 0, 0) - exact(2, 0, 0)).abs() < 1e-15);
        assert!((apply(&TRI7, 2, 2, 1) - exact(2, 2, 1)).abs() < 1e-15);
        assert!((apply(&TRI7, 5, 0, 0) - exact(5, 0, 0)).abs() < 1e-15);
        assert!((apply(&TRI7, 1, 1, 1) - exact(1, 1, 1)).abs() < 1e-15);
        let g5: f64 = GAUSS5.iter().map(|&(s, w)| w * s.powi(9)).sum();
        assert!((g5 - 0.1).abs() < 1e-15);
        let g3: f64 = GAUSS3.iter().map(|&(s, w)| w * s.powi(5)).sum();
        assert!((g3 - 1.0 / 6.0).abs() < 1e-15);
    }
}
