//! Uniform node grid on `[0, Lx] × [0, Ly]` with summation-by-parts
//! difference operators, trapezoidal quadrature and sparse SPD solves.
//!
//! First derivatives are centered in the interior and one-sided (first order)
//! at boundary nodes. Together with trapezoidal weights this is the diagonal
//! norm summation-by-parts pair, so `Σ w·(Dₓf) = f(Lx) − f(0)` holds exactly
//! along every grid line. The divergence of a matrix field is *defined* as
//! the negative weighted adjoint of the symmetric gradient, which makes
//! discrete integration by parts exact for boundary-vanishing test fields.

mod snapshot;
mod solver;

pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError, SNAPSHOT_MAGIC};
pub use solver::{conjugate_gradient, solve_spd, CgOptions, CgStats, DiagonalOperator, LinearOperator, SolveError};

use crate::tensor::{SymMatrix2, Tensor4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 4 nodes per direction (got {nx} x {ny})")]
    TooFewNodes { nx: usize, ny: usize },
    #[error("domain lengths must be positive (got {lx} x {ly})")]
    BadExtent { lx: f64, ly: f64 },
}

/// Grid description as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

fn one() -> f64 {
    1.0
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, GridError> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

/// Node-centred uniform grid; node `(i, j)` is stored at `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
    wx: Vec<f64>,
    wy: Vec<f64>,
    weights: Vec<f64>,
}

pub type ScalarField = Vec<f64>;
pub type MatrixField = Vec<SymMatrix2>;

/// Two-component nodal field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        Self { x: vec![0.0; n], y: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Interleaved `[x0, y0, x1, y1, ...]` layout used by the solvers.
    pub fn to_interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        for (a, b) in self.x.iter().zip(&self.y) {
            out.push(*a);
            out.push(*b);
        }
        out
    }

    pub fn from_interleaved(data: &[f64]) -> Self {
        let x = data.iter().step_by(2).copied().collect();
        let y = data.iter().skip(1).step_by(2).copied().collect();
        Self { x, y }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + s * b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn norm_sq_at(&self, k: usize) -> f64 {
        self.x[k] * self.x[k] + self.y[k] * self.y[k]
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        if nx < 4 || ny < 4 {
            return Err(GridError::TooFewNodes { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(GridError::BadExtent { lx, ly });
        }
        let hx = lx / (nx - 1) as f64;
        let hy = ly / (ny - 1) as f64;
        let wx = trapezoid_weights(nx, hx);
        let wy = trapezoid_weights(ny, hy);
        let mut weights = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                weights.push(wx[i] * wy[j]);
            }
        }
        Ok(Self { nx, ny, lx, ly, hx, hy, wx, wy, weights })
    }

    pub fn unit_square(n: usize) -> Result<Self, GridError> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let i = k % self.nx;
        let j = k / self.nx;
        (i as f64 * self.hx, j as f64 * self.hy)
    }

    #[inline]
    pub fn is_boundary(&self, k: usize) -> bool {
        let i = k % self.nx;
        let j = k / self.nx;
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Trapezoidal quadrature weights (corner ¼, edge ½, interior 1) × hx·hy.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Samples a scalar function at the nodes.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> ScalarField {
        (0..self.len()).map(|k| {
            let (x, y) = self.coords(k);
            f(x, y)
        }).collect()
    }

    /// Samples a vector function, zeroing boundary nodes.
    pub fn sample_vector_dirichlet<F: Fn(f64, f64) -> (f64, f64)>(&self, f: F) -> VectorField {
        let mut v = VectorField::zeros(self.len());
        for k in 0..self.len() {
            if self.is_boundary(k) {
                continue;
            }
            let (x, y) = self.coords(k);
            let (a, b) = f(x, y);
            v.x[k] = a;
            v.y[k] = b;
        }
        v
    }

    pub fn zero_boundary(&self, v: &mut VectorField) {
        for k in 0..self.len() {
            if self.is_boundary(k) {
                v.x[k] = 0.0;
                v.y[k] = 0.0;
            }
        }
    }

    /// `Σ w f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `Σ w g(f)` without materializing `g(f)`.
    pub fn integrate_map<F: Fn(usize) -> f64>(&self, g: F) -> f64 {
        self.weights.iter().enumerate().map(|(k, w)| w * g(k)).sum()
    }

    // -- one-dimensional summation-by-parts derivative --------------------

    /// Derivative along x.
    pub fn d_x(&self, f: &[f64], out: &mut [f64]) {
        let (nx, h) = (self.nx, self.hx);
        for j in 0..self.ny {
            let r = &f[j * nx..(j + 1) * nx];
            let o = &mut out[j * nx..(j + 1) * nx];
            diff_line(r, o, 1, nx, h);
        }
    }

    /// Derivative along y.
    pub fn d_y(&self, f: &[f64], out: &mut [f64]) {
        let (nx, ny, h) = (self.nx, self.ny, self.hy);
        for i in 0..nx {
            let at = |j: usize| f[j * nx + i];
            out[i] = (at(1) - at(0)) / h;
            for j in 1..ny - 1 {
                out[j * nx + i] = (at(j + 1) - at(j - 1)) / (2.0 * h);
            }
            out[(ny - 1) * nx + i] = (at(ny - 1) - at(ny - 2)) / h;
        }
    }

    /// Weighted adjoint of `d_x`: `Σ w (Dₓf) g = Σ w f (Dₓ* g)` for all f, g.
    pub fn d_x_adjoint(&self, g: &[f64], out: &mut [f64]) {
        let (nx, h) = (self.nx, self.hx);
        for j in 0..self.ny {
            for i in 0..nx {
                out[j * nx + i] = adjoint_entry(&self.wx, |q| g[j * nx + q], i, nx, h);
            }
        }
    }

    /// Weighted adjoint of `d_y`.
    pub fn d_y_adjoint(&self, g: &[f64], out: &mut [f64]) {
        let (nx, ny, h) = (self.nx, self.ny, self.hy);
        for i in 0..nx {
            for j in 0..ny {
                out[j * nx + i] = adjoint_entry(&self.wy, |q| g[q * nx + i], j, ny, h);
            }
        }
    }

    // -- vector and tensor operators ---------------------------------------

    /// Symmetric gradient `½(∇v + ∇vᵀ)` at every node.
    pub fn sym_grad(&self, v: &VectorField) -> MatrixField {
        let n = self.len();
        let (mut ux, mut uy, mut vx, mut vy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        self.d_x(&v.x, &mut ux);
        self.d_y(&v.x, &mut uy);
        self.d_x(&v.y, &mut vx);
        self.d_y(&v.y, &mut vy);
        (0..n).map(|k| SymMatrix2::new(ux[k], vy[k], 0.5 * (uy[k] + vx[k]))).collect()
    }

    /// Divergence of a symmetric matrix field: the negative weighted adjoint
    /// of [`Grid::sym_grad`] on boundary-vanishing fields; zero on the boundary.
    pub fn div_matrix(&self, a: &[SymMatrix2]) -> VectorField {
        let n = self.len();
        let a11: Vec<f64> = a.iter().map(|m| m.a11).collect();
        let a22: Vec<f64> = a.iter().map(|m| m.a22).collect();
        let a12: Vec<f64> = a.iter().map(|m| m.a12).collect();
        let (mut t1, mut t2) = (vec![0.0; n], vec![0.0; n]);
        let mut out = VectorField::zeros(n);
        self.d_x_adjoint(&a11, &mut t1);
        self.d_y_adjoint(&a12, &mut t2);
        for k in 0..n {
            out.x[k] = -(t1[k] + t2[k]);
        }
        self.d_x_adjoint(&a12, &mut t1);
        self.d_y_adjoint(&a22, &mut t2);
        for k in 0..n {
            out.y[k] = -(t1[k] + t2[k]);
        }
        self.zero_boundary(&mut out);
        out
    }

    /// `div(T:∇ˢv)`.
    pub fn div_tensor_sym_grad(&self, t: &Tensor4, v: &VectorField) -> VectorField {
        let stress: MatrixField = self.sym_grad(v).iter().map(|e| t.contract(e)).collect();
        self.div_matrix(&stress)
    }

    /// `div(θ 𝔹)` for a nodal scalar θ and constant symmetric 𝔹.
    pub fn div_scalar_times(&self, theta: &[f64], b: &SymMatrix2) -> VectorField {
        let field: MatrixField = theta.iter().map(|&t| t * *b).collect();
        self.div_matrix(&field)
    }

    // -- Laplacians -----------------------------------------------------------

    /// Edges of the 5-point stencil with their conductances `c_e` such that
    /// `Σ w (Δ_N θ) φ = −Σ_e c_e (θ_b − θ_a)(φ_b − φ_a)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        let horizontal = (0..ny).flat_map(move |j| {
            (0..nx - 1).map(move |i| (j * nx + i, j * nx + i + 1, self.wy[j] / self.hx))
        });
        let vertical = (0..ny - 1).flat_map(move |j| {
            (0..nx).map(move |i| (j * nx + i, (j + 1) * nx + i, self.wx[i] / self.hy))
        });
        horizontal.chain(vertical)
    }

    /// 5-point Laplacian with mirror ghost nodes (zero normal derivative).
    pub fn laplacian_neumann(&self, theta: &[f64]) -> ScalarField {
        let mut acc = vec![0.0; self.len()];
        for (a, b, c) in self.edges() {
            let flux = c * (theta[b] - theta[a]);
            acc[a] += flux;
            acc[b] -= flux;
        }
        for (v, w) in acc.iter_mut().zip(&self.weights) {
            *v /= w;
        }
        acc
    }

    /// Diagonal of the weighted Neumann Laplacian `W·Δ_N` (nonpositive).
    pub fn laplacian_neumann_weighted_diag(&self) -> ScalarField {
        let mut d = vec![0.0; self.len()];
        for (a, b, c) in self.edges() {
            d[a] -= c;
            d[b] -= c;
        }
        d
    }

    /// 5-point Laplacian on interior nodes with zero Dirichlet data; the
    /// result vanishes on boundary nodes.
    pub fn laplacian_dirichlet(&self, f: &[f64]) -> ScalarField {
        let (nx, ny) = (self.nx, self.ny);
        let (cx, cy) = (1.0 / (self.hx * self.hx), 1.0 / (self.hy * self.hy));
        let mut out = vec![0.0; self.len()];
        let val = |i: usize, j: usize| {
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                0.0
            } else {
                f[j * nx + i]
            }
        };
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let c = val(i, j);
                out[j * nx + i] =
                    cx * (val(i + 1, j) - 2.0 * c + val(i - 1, j)) + cy * (val(i, j + 1) - 2.0 * c + val(i, j - 1));
            }
        }
        out
    }

    /// Componentwise clamped Laplacian of a vector field.
    pub fn laplacian_dirichlet_vec(&self, v: &VectorField) -> VectorField {
        VectorField { x: self.laplacian_dirichlet(&v.x), y: self.laplacian_dirichlet(&v.y) }
    }

    /// Edge-based `∫ |∇θ|² ψ` with the edge weight `ψ(θ_a, θ_b)`.
    pub fn edge_gradient_integral<F: Fn(f64, f64) -> f64>(&self, theta: &[f64], psi: F) -> f64 {
        self.edges()
            .map(|(a, b, c)| {
                let d = theta[b] - theta[a];
                c * d * d * psi(theta[a], theta[b])
            })
            .sum()
    }
}

fn diff_line(r: &[f64], o: &mut [f64], _stride: usize, n: usize, h: f64) {
    o[0] = (r[1] - r[0]) / h;
    for i in 1..n - 1 {
        o[i] = (r[i + 1] - r[i - 1]) / (2.0 * h);
    }
    o[n - 1] = (r[n - 1] - r[n - 2]) / h;
}

/// `(1/w_i) Σ_q D[q][i] w_q g_q` for the one-dimensional operator.
#[inline]
fn adjoint_entry<G: Fn(usize) -> f64>(w: &[f64], g: G, i: usize, n: usize, h: f64) -> f64 {
    let mut s = 0.0;
    // row 0: (-1/h, +1/h) on columns 0, 1
    if i <= 1 {
        let c = if i == 0 { -1.0 / h } else { 1.0 / h };
        s += c * w[0] * g(0);
    }
    // last row: (-1/h, +1/h) on columns n-2, n-1
    if i >= n - 2 {
        let c = if i == n - 1 { 1.0 / h } else { -1.0 / h };
        s += c * w[n - 1] * g(n - 1);
    }
    // interior rows q: -1/(2h) at q-1, +1/(2h) at q+1
    if i >= 2 {
        let q = i - 1;
        if q <= n - 2 {
            s += w[q] * g(q) / (2.0 * h);
        }
    }
    if i < n - 2 {
        let q = i + 1;
        s -= w[q] * g(q) / (2.0 * h);
    }
    s / w[i]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sym_grad_of_linear_fields_is_exact() {
        let g = Grid::new(7, 6, 1.0, 2.0).unwrap();
        let shear = VectorField { x: g.sample(|_x, y| y), y: vec![0.0; g.len()] };
        for e in g.sym_grad(&shear) {
            assert!(close(e.a11, 0.0, 1e-14) && close(e.a22, 0.0, 1e-14) && close(e.a12, 0.5, 1e-13));
        }
        let ident = VectorField { x: g.sample(|x, _y| x), y: g.sample(|_x, y| y) };
        for e in g.sym_grad(&ident) {
            assert!((e - SymMatrix2::IDENTITY).norm() < 1e-13);
        }
        for e in g.sym_grad(&VectorField::zeros(g.len())) {
            assert_eq!(e, SymMatrix2::ZERO);
        }
    }

    #[test]
    fn divergence_of_constant_vanishes_inside() {
        let g = Grid::unit_square(9).unwrap();
        let a = vec![SymMatrix2::new(0.3, -1.2, 0.7); g.len()];
        let d = g.div_matrix(&a);
        for k in 0..g.len() {
            assert!(d.x[k].abs() < 1e-12 && d.y[k].abs() < 1e-12, "node {k}");
        }
    }

    #[test]
    fn sbp_line_sum_is_boundary_difference() {
        let g = Grid::new(8, 5, 1.3, 1.0).unwrap();
        let f = g.sample(|x, y| (3.0 * x).sin() + x * y * y);
        let mut d = vec![0.0; g.len()];
        g.d_x(&f, &mut d);
        for j in 0..g.ny {
            let s: f64 = (0..g.nx).map(|i| g.wx[i] * d[g.index(i, j)]).sum();
            let exact = f[g.index(g.nx - 1, j)] - f[g.index(0, j)];
            assert!(close(s, exact, 1e-13));
        }
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::unit_square(11).unwrap();
        assert!(close(g.integrate(&vec![1.0; g.len()]), 1.0, 1e-14));
        assert_eq!(g.integrate(&vec![0.0; g.len()]), 0.0);
        assert!(close(g.integrate(&g.sample(|x, _| x)), 0.5, 1e-14));
    }

    #[test]
    fn neumann_laplacian_basics() {
        let g = Grid::new(6, 9, 2.0, 1.0).unwrap();
        let lap = g.laplacian_neumann(&vec![3.5; g.len()]);
        assert!(lap.iter().all(|&v| v == 0.0));
        let theta = g.sample(|x, y| (x * 1.7).sin() + y * y * x);
        let lap = g.laplacian_neumann(&theta);
        assert!(g.integrate(&lap).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert_eq!(Grid::new(3, 8, 1.0, 1.0), Err(GridError::TooFewNodes { nx: 3, ny: 8 }));
        assert!(Grid::new(5, 5, 0.0, 1.0).is_err());
    }

    #[test]
    fn interleaving_roundtrip() {
        let v = VectorField { x: vec![1.0, 2.0], y: vec![3.0, 4.0] };
        assert_eq!(v.to_interleaved(), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(VectorField::from_interleaved(&v.to_interleaved()), v);
    }
}
