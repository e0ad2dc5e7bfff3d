//! Kohn-Nirenberg quantization `Φ_t` of phase-space functions on a grid.
//!
//! `Φ_t(F)` has kernel `K(x_p, x_q) = N⁻ⁿ Σ_k F(x_p, ξ_k/t) e^{iξ_k·(x_p − x_q)}`;
//! on elementary tensors `Φ_t(φ ⊗ g) = M_φ C_t(g)` holds exactly.

mod decay;
mod diffeo;
mod glue;

use std::sync::Arc;

use num_complex::Complex64 as C64;

pub use decay::{commutator_decay, resolvent_bound_check, CommutatorReport, ResolventBoundRow};
pub use diffeo::{diffeo_covariance, transfer_operator, Diffeo};
pub use glue::{gluing_independence, glued_phi, module_property_defect, smooth_step, wrap_angle, Chart, Cover};

use crate::cstar::{AMatrix, Algebra};
use crate::error::{Error, Result};
use crate::grid::{Grid, Topology};
use crate::linalg::fft::fft_nd_raw;
use crate::linalg::ComplexMatrix;

type PhaseFn = dyn Fn(&[f64], &[f64]) -> ComplexMatrix + Send + Sync;

/// Radius of the frequency shell used in decay checks.
pub const SHELL_RADIUS: f64 = 1e3;

/// A function on `T*M` with values in `fiber × fiber` matrices.
#[derive(Clone)]
pub struct PhaseFunction {
    dim: usize,
    fiber: usize,
    f: Arc<PhaseFn>,
}

impl std::fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseFunction")
            .field("dim", &self.dim)
            .field("fiber", &self.fiber)
            .finish_non_exhaustive()
    }
}

impl PhaseFunction {
    pub fn new(
        dim: usize,
        fiber: usize,
        f: impl Fn(&[f64], &[f64]) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            fiber,
            f: Arc::new(f),
        }
    }

    pub fn scalar(dim: usize, f: impl Fn(&[f64], &[f64]) -> C64 + Send + Sync + 'static) -> Self {
        Self::new(dim, 1, move |x, xi| {
            ComplexMatrix::from_diagonal(&[f(x, xi)])
        })
    }

    /// `φ(x) g(ξ)`.
    pub fn tensor(
        dim: usize,
        phi: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
        g: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self::scalar(dim, move |x, xi| phi(x) * g(xi))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> ComplexMatrix {
        (self.f)(x, xi)
    }

    /// Pointwise product `F·G`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.fiber != other.fiber {
            return Err(Error::Dimension("phase functions of different shapes".into()));
        }
        let (a, b) = (self.f.clone(), other.f.clone());
        Ok(Self::new(self.dim, self.fiber, move |x, xi| {
            a(x, xi).matmul(&b(x, xi)).expect("equal fibers")
        }))
    }

    /// Pointwise adjoint `F*`.
    pub fn adjoint(&self) -> Self {
        let a = self.f.clone();
        Self::new(self.dim, self.fiber, move |x, xi| a(x, xi).adjoint())
    }

    /// `ρ(x) F(x, ξ)`.
    pub fn scale_x(&self, rho: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Self {
        let a = self.f.clone();
        Self::new(self.dim, self.fiber, move |x, xi| a(x, xi).scale(rho(x)))
    }

    /// `F(ψ(x), ξ/ψ'(x))` for a one-dimensional diffeomorphism.
    pub fn pullback(&self, psi: &Diffeo) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::Dimension("pullback is one-dimensional".into()));
        }
        let a = self.f.clone();
        let psi = psi.clone();
        Ok(Self::new(1, self.fiber, move |x, xi| {
            let y = psi.map(x[0]);
            let j = psi.derivative(x[0]);
            a(&[y], &[xi[0] / j])
        }))
    }

    /// Supremum of `‖F‖` over the boundary shell: the edge of a periodized
    /// box, and `|ξ| = SHELL_RADIUS` over all grid points.
    pub fn boundary_sup(&self, grid: &Grid, t: f64) -> f64 {
        let mut sup: f64 = 0.0;
        let dirs = shell_directions(self.dim);
        for p in 0..grid.size() {
            let x = grid.point(p);
            for d in &dirs {
                let xi: Vec<f64> = d.iter().map(|c| c * SHELL_RADIUS).collect();
                sup = sup.max(self.eval(&x, &xi).max_abs());
            }
        }
        if grid.topology() == Topology::PeriodizedLine {
            for p in 0..grid.size() {
                if !grid.multi_index(p).contains(&0) {
                    continue;
                }
                let x = grid.point(p);
                for k in 0..grid.size() {
                    let xi: Vec<f64> = grid.frequency(k).iter().map(|v| v / t).collect();
                    sup = sup.max(self.eval(&x, &xi).max_abs());
                }
            }
        }
        sup
    }

    /// Fails when the boundary-shell supremum exceeds `eta`.
    pub fn check_decay(&self, grid: &Grid, t: f64, eta: f64) -> Result<f64> {
        let sup = self.boundary_sup(grid, t);
        if sup > eta {
            return Err(Error::PhaseDecay { sup, eta });
        }
        Ok(sup)
    }
}

fn shell_directions(dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    (0..8)
        .map(|j| {
            let a = j as f64 * std::f64::consts::PI / 4.0;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    Ok(())
}

/// `M_φ ⊗ 1_fiber`.
pub fn mult_op(grid: &Grid, fiber: usize, phi: impl Fn(&[f64]) -> C64) -> ComplexMatrix {
    grid.multiplication(fiber, phi)
}

/// `C_t(g) = g(t⁻¹D)` with matrix-valued symbol `g`.
pub fn conv_op(
    grid: &Grid,
    fiber: usize,
    g: impl Fn(&[f64]) -> ComplexMatrix,
    t: f64,
) -> Result<ComplexMatrix> {
    check_t(t)?;
    let n = grid.size();
    let shape = grid.shape();
    let vals: Vec<ComplexMatrix> = (0..n)
        .map(|k| {
            let xi: Vec<f64> = grid.frequency(k).iter().map(|v| v / t).collect();
            g(&xi)
        })
        .collect();
    check_fiber(&vals, fiber)?;
    let mut kernels = Vec::with_capacity(fiber * fiber);
    for a in 0..fiber {
        for b in 0..fiber {
            let mut c: Vec<C64> = vals.iter().map(|m| m[(a, b)]).collect();
            fft_nd_raw(&mut c, &shape, true);
            c.iter_mut().for_each(|z| *z /= n as f64);
            kernels.push(c);
        }
    }
    let mut out = ComplexMatrix::zeros(n * fiber, n * fiber);
    for p in 0..n {
        for q in 0..n {
            let m = grid.difference_index(p, q);
            for a in 0..fiber {
                for b in 0..fiber {
                    out[(p * fiber + a, q * fiber + b)] = kernels[a * fiber + b][m];
                }
            }
        }
    }
    Ok(out)
}

fn check_fiber(vals: &[ComplexMatrix], fiber: usize) -> Result<()> {
    if vals.iter().any(|m| m.rows() != fiber || m.cols() != fiber) {
        return Err(Error::Dimension(format!("symbol values are not {fiber}x{fiber}")));
    }
    Ok(())
}

/// `Φ_t(F)` on `grid ⊗ ℂ^fiber`.
pub fn phi_t(grid: &Grid, f: &PhaseFunction, t: f64) -> Result<ComplexMatrix> {
    check_t(t)?;
    if f.dim() != grid.dim() {
        return Err(Error::Dimension(format!(
            "phase function of dimension {} on a {}-dimensional grid",
            f.dim(),
            grid.dim()
        )));
    }
    let n = grid.size();
    let fiber = f.fiber();
    let shape = grid.shape();
    let freqs: Vec<Vec<f64>> = (0..n)
        .map(|k| grid.frequency(k).iter().map(|v| v / t).collect())
        .collect();
    let mut out = ComplexMatrix::zeros(n * fiber, n * fiber);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for p in 0..n {
        let x = grid.point(p);
        let vals: Vec<ComplexMatrix> = freqs.iter().map(|xi| f.eval(&x, xi)).collect();
        check_fiber(&vals, fiber)?;
        for a in 0..fiber {
            for b in 0..fiber {
                for (z, m) in buf.iter_mut().zip(&vals) {
                    *z = m[(a, b)];
                }
                fft_nd_raw(&mut buf, &shape, true);
                for q in 0..n {
                    let m = grid.difference_index(p, q);
                    out[(p * fiber + a, q * fiber + b)] = buf[m] / n as f64;
                }
            }
        }
    }
    Ok(out)
}

/// `Φ_t^A(F)` for `F = ⊕ F_i`, one phase function per block of `A`;
/// block `i` must have fiber `m·k_i`.
pub fn phi_a_t(
    grid: &Grid,
    algebra: &Algebra,
    blocks: &[PhaseFunction],
    t: f64,
) -> Result<AMatrix> {
    if blocks.len() != algebra.num_blocks() {
        return Err(Error::AlgebraMismatch(format!(
            "{} phase functions for algebra {algebra}",
            blocks.len()
        )));
    }
    let first = &algebra.block_sizes()[0];
    let m = blocks[0].fiber() / first;
    let mut mats = Vec::with_capacity(blocks.len());
    for (f, &k) in blocks.iter().zip(algebra.block_sizes()) {
        if f.fiber() != m * k {
            return Err(Error::AlgebraMismatch(format!(
                "block of fiber {} for M_{k} with module rank {m}",
                f.fiber()
            )));
        }
        mats.push(phi_t(grid, f, t)?);
    }
    AMatrix::new(algebra.clone(), grid.size() * m, mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(xi: &[f64]) -> C64 {
        C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0)
    }

    #[test]
    fn elementary_tensor_is_exact() {
        let grid = Grid::circle(64).unwrap();
        let phi = |x: &[f64]| C64::new(1.0 + 0.5 * x[0].cos(), 0.0);
        let f = PhaseFunction::tensor(1, phi, g);
        for t in [0.5, 2.0, 16.0] {
            let lhs = phi_t(&grid, &f, t).unwrap();
            let rhs = mult_op(&grid, 1, phi)
                .matmul(&conv_op(&grid, 1, |xi| ComplexMatrix::from_diagonal(&[g(xi)]), t).unwrap())
                .unwrap();
            assert!((&lhs - &rhs).max_abs() < 1e-13);
        }
    }

    #[test]
    fn constant_symbol_is_identity() {
        let grid = Grid::periodized_line(2, 8, 3.0).unwrap();
        let f = PhaseFunction::scalar(2, |_, _| C64::new(1.0, 0.0));
        let k = phi_t(&grid, &f, 1.0).unwrap();
        assert!((&k - &ComplexMatrix::identity(64)).max_abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_t() {
        let grid = Grid::circle(8).unwrap();
        let f = PhaseFunction::scalar(1, |_, _| C64::new(1.0, 0.0));
        assert!(phi_t(&grid, &f, 0.0).is_err());
        assert!(phi_t(&grid, &f, -1.0).is_err());
    }

    #[test]
    fn decay_check_flags_non_decaying_functions() {
        let grid = Grid::periodized_line(1, 32, 8.0).unwrap();
        let good = PhaseFunction::tensor(
            1,
            |x| C64::new((-x[0] * x[0]).exp(), 0.0),
            |xi| C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0),
        );
        assert!(good.check_decay(&grid, 1.0, 1e-4).is_ok());
        let bad = PhaseFunction::tensor(1, |x| C64::new((-x[0] * x[0]).exp(), 0.0), |_| {
            C64::new(1.0, 0.0)
        });
        assert!(matches!(
            bad.check_decay(&grid, 1.0, 1e-4),
            Err(Error::PhaseDecay { .. })
        ));
    }

    #[test]
    fn algebra_valued_quantization_acts_blockwise() {
        let grid = Grid::circle(16).unwrap();
        let a = Algebra::new(vec![1, 2]).unwrap();
        let f0 = PhaseFunction::tensor(1, |x| C64::new(x[0].sin(), 0.0), g);
        let f1 = PhaseFunction::new(1, 2, |x, xi| {
            ComplexMatrix::from_real_diagonal(&[x[0].cos(), 2.0]).scale(g(xi))
        });
        let q = phi_a_t(&grid, &a, &[f0.clone(), f1], 2.0).unwrap();
        assert_eq!(q.size(), 16);
        assert!((q.block(0) - &phi_t(&grid, &f0, 2.0).unwrap()).max_abs() < 1e-14);
        assert!(phi_a_t(&grid, &a, &[f0], 2.0).is_err());
    }
}
