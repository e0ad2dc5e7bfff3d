//! Graded operators `𝔻 = [[0, D*], [D, 0]]` and their indices.
//!
//! Vectors of `𝔻` are sector-major: the even sector (domain of `D`) first.
//! Spectral work goes through the chiral blocks `D*D` and `DD*`, which carry
//! the whole spectrum of `𝔻` at half the size.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::cstar::{difference_class_tol, AMatrix, Algebra, K0Class};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{hermitian_eig, hermitian_eig_below, ComplexMatrix, SpectralData};
use crate::resolution::{split_modes, ModeSplit, Resolution};
use crate::tolerances;

/// Principal symbol of `𝔻` at `(x, ξ)`, a `2r × 2r` matrix in sector-major order.
pub type DoubledSymbol = Arc<dyn Fn(&[f64], &[f64]) -> ComplexMatrix + Send + Sync>;

/// One scalar block: `D : grid ⊗ ℂ^r → grid ⊗ ℂ^r`.
#[derive(Clone)]
pub struct ChiralOp {
    grid: Grid,
    fiber: usize,
    d_plus: ComplexMatrix,
    resolution: Resolution,
    symbol: Option<DoubledSymbol>,
}

impl std::fmt::Debug for ChiralOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChiralOp")
            .field("grid", &self.grid)
            .field("fiber", &self.fiber)
            .field("resolution", &self.resolution)
            .finish_non_exhaustive()
    }
}

impl ChiralOp {
    pub fn new(grid: Grid, fiber: usize, d_plus: ComplexMatrix, resolution: Resolution) -> Result<Self> {
        let n = grid.size() * fiber;
        if d_plus.rows() != n || d_plus.cols() != n {
            return Err(Error::Dimension(format!(
                "chiral block {}x{} on a space of dimension {n}",
                d_plus.rows(),
                d_plus.cols()
            )));
        }
        Ok(Self {
            grid,
            fiber,
            d_plus,
            resolution,
            symbol: None,
        })
    }

    pub fn with_symbol(mut self, symbol: DoubledSymbol) -> Self {
        self.symbol = Some(symbol);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Fiber dimension of one sector.
    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn d_plus(&self) -> &ComplexMatrix {
        &self.d_plus
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn symbol(&self) -> Option<&DoubledSymbol> {
        self.symbol.as_ref()
    }

    /// Dimension of one sector.
    pub fn sector_dim(&self) -> usize {
        self.d_plus.rows()
    }

    /// `[[0, D*], [D, 0]]`.
    pub fn full_matrix(&self) -> ComplexMatrix {
        let n = self.sector_dim();
        let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
        m.set_block(0, n, &self.d_plus.adjoint());
        m.set_block(n, 0, &self.d_plus);
        m
    }

    /// Diagonal of `ε`.
    pub fn grading_diagonal(&self) -> Vec<f64> {
        let n = self.sector_dim();
        (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect()
    }

    fn gram_even(&self) -> Result<ComplexMatrix> {
        Ok(self.d_plus.adjoint_matmul(&self.d_plus)?.hermitian_part())
    }

    fn gram_odd(&self) -> Result<ComplexMatrix> {
        Ok(self.d_plus.matmul(&self.d_plus.adjoint())?.hermitian_part())
    }

    /// Smallest `count` singular values of `D`, ascending.
    pub fn smallest_singular_values(&self, count: usize) -> Result<Vec<f64>> {
        let vals = crate::linalg::hermitian_eigvals(&self.gram_even()?)?;
        Ok(vals.iter().take(count).map(|v| v.max(0.0).sqrt()).collect())
    }

    /// Near-zero modes of each sector, classified by resolution.
    pub fn index_report(&self, gap_tol: f64) -> Result<IndexReport> {
        if !(gap_tol > 0.0) {
            return Err(Error::InvalidParameter("gap_tol must be positive".into()));
        }
        let even = self.sector(self.gram_even()?, gap_tol)?;
        let odd = self.sector(self.gram_odd()?, gap_tol)?;
        Ok(IndexReport {
            near_zero_even: even.0,
            near_zero_odd: odd.0,
            next_singular_value: even.1.min(odd.1),
            even: even.2,
            odd: odd.2,
        })
    }

    fn sector(&self, gram: ComplexMatrix, gap_tol: f64) -> Result<(Vec<f64>, f64, ModeSplit)> {
        let (low, all) = hermitian_eig_below(&gram, gap_tol * gap_tol)?;
        let next = all
            .get(low.eigenvalues.len())
            .map(|m| m.max(0.0).sqrt())
            .unwrap_or(f64::INFINITY);
        if next < tolerances::GAP_FACTOR * gap_tol {
            return Err(Error::GapViolation { gap_tol, next });
        }
        let split = split_modes(&self.grid, self.fiber, self.resolution, &low.eigenvectors)?;
        let sv = low.eigenvalues.iter().map(|m| m.max(0.0).sqrt()).collect();
        Ok((sv, next, split))
    }

    /// Full spectral data of `D*D` and `DD*`.
    pub fn chiral_eig(&self) -> Result<(SpectralData, SpectralData)> {
        Ok((hermitian_eig(&self.gram_even()?)?, hermitian_eig(&self.gram_odd()?)?))
    }

    /// `U_t = (t⁻¹𝔻 + i)(t⁻¹𝔻 − i)⁻¹`.
    pub fn cayley(&self, t: f64) -> Result<ComplexMatrix> {
        let (even, odd) = self.chiral_eig()?;
        cayley_from_chiral(&self.d_plus, &even, &odd, t)
    }
}

/// `U_t` from the eigendecompositions of `D*D` and `DD*`:
/// even part `(μ − t²)/(μ + t²)`, odd part `𝔻 · 2it/(𝔻² + t²)`.
fn cayley_from_chiral(
    d: &ComplexMatrix,
    even: &SpectralData,
    odd: &SpectralData,
    t: f64,
) -> Result<ComplexMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let n = d.rows();
    let t2 = t * t;
    let ge = |m: f64| C64::new((m.max(0.0) - t2) / (m.max(0.0) + t2), 0.0);
    let h = |m: f64| C64::new(0.0, 2.0 * t / (m.max(0.0) + t2));
    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    u.set_block(0, 0, &even.apply_function(ge)?);
    u.set_block(n, n, &odd.apply_function(ge)?);
    u.set_block(n, 0, &d.matmul(&even.apply_function(h)?)?);
    u.set_block(0, n, &d.adjoint().matmul(&odd.apply_function(h)?)?);
    Ok(u)
}

/// Near-zero structure of both sectors.
#[derive(Debug, Clone)]
pub struct IndexReport {
    pub near_zero_even: Vec<f64>,
    pub near_zero_odd: Vec<f64>,
    /// Smallest singular value above the near-zero window.
    pub next_singular_value: f64,
    pub even: ModeSplit,
    pub odd: ModeSplit,
}

impl IndexReport {
    pub fn index(&self) -> i64 {
        self.even.num_resolved() as i64 - self.odd.num_resolved() as i64
    }

    pub fn raw_near_zero(&self) -> usize {
        self.near_zero_even.len() + self.near_zero_odd.len()
    }

    /// Orthonormal basis, on the full graded space, of the artifact modes.
    pub fn artifact_basis(&self) -> ComplexMatrix {
        let a = &self.even.artifacts;
        let b = &self.odd.artifacts;
        let n = a.rows();
        let mut w = ComplexMatrix::zeros(2 * n, a.cols() + b.cols());
        w.set_block(0, 0, a);
        w.set_block(n, a.cols(), b);
        w
    }
}

/// `𝔻 = ⊕_i 𝔻_i ⊗ 1_{M_{k_i}}` over `A = ⊕ M_{k_i}`.
#[derive(Debug, Clone)]
pub struct DoubledOp {
    algebra: Algebra,
    blocks: Vec<ChiralOp>,
}

impl DoubledOp {
    pub fn new(algebra: Algebra, blocks: Vec<ChiralOp>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::AlgebraMismatch(format!(
                "{} operator blocks for algebra {algebra}",
                blocks.len()
            )));
        }
        Ok(Self { algebra, blocks })
    }

    pub fn scalar(op: ChiralOp) -> Self {
        Self {
            algebra: Algebra::scalars(),
            blocks: vec![op],
        }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[ChiralOp] {
        &self.blocks
    }
}

/// `[Ker D] − [Ker D*]` counted on resolved modes.
#[derive(Debug, Clone)]
pub struct AnalyticIndex {
    pub class: K0Class,
    pub reports: Vec<IndexReport>,
}

/// Per-block kernel counts, pushed into `K₀(A)` along `ℂ → M_{k_i}`.
pub fn analytic_index(dop: &DoubledOp, gap_tol: f64) -> Result<AnalyticIndex> {
    let reports = dop
        .blocks
        .iter()
        .map(|b| b.index_report(gap_tol))
        .collect::<Result<Vec<_>>>()?;
    let components = reports
        .iter()
        .zip(dop.algebra.block_sizes())
        .map(|(r, &k)| r.index() * k as i64)
        .collect();
    Ok(AnalyticIndex {
        class: K0Class::new(dop.algebra.clone(), components)?,
        reports,
    })
}

/// `[p(ε)] − [p(εU_t)]` with artifact modes compressed away, pushed into
/// `K₀(A)` along `ℂ → M_{k_i}`.
pub fn morphism_index(dop: &DoubledOp, t_small: f64, gap_tol: f64, rank_tol: f64) -> Result<K0Class> {
    let mut components = Vec::with_capacity(dop.blocks.len());
    for (block, &k) in dop.blocks.iter().zip(dop.algebra.block_sizes()) {
        let c = block_morphism_index(block, t_small, gap_tol, rank_tol)?;
        components.push(c * k as i64);
    }
    K0Class::new(dop.algebra.clone(), components)
}

/// Scalar morphism index of one block.
pub fn block_morphism_index(op: &ChiralOp, t_small: f64, gap_tol: f64, rank_tol: f64) -> Result<i64> {
    let report = op.index_report(gap_tol)?;
    morphism_from_report(op, &report, t_small, rank_tol)
}

/// Morphism index of one block given its near-zero analysis.
pub fn morphism_from_report(
    op: &ChiralOp,
    report: &IndexReport,
    t_small: f64,
    rank_tol: f64,
) -> Result<i64> {
    if t_small > 0.1 * report.next_singular_value {
        return Err(Error::Precondition(format!(
            "t = {t_small:.3e} exceeds a tenth of the spectral gap {:.3e}",
            report.next_singular_value
        )));
    }
    let u = op.cayley(t_small)?;
    let n2 = u.rows();
    let w = report.artifact_basis();
    let eps = op.grading_diagonal();
    let p_eps = ComplexMatrix::from_real_diagonal(
        &eps.iter().map(|&e| 0.5 * (e + 1.0)).collect::<Vec<_>>(),
    );
    let eps_c: Vec<C64> = eps.iter().map(|&e| C64::new(e, 0.0)).collect();
    let mut p_u = u.scale_rows(&eps_c).scale(C64::new(0.5, 0.0));
    for i in 0..n2 {
        p_u[(i, i)] += C64::new(0.5, 0.0);
    }
    let a = AMatrix::new(Algebra::scalars(), n2, vec![compress(&p_eps, &w)?])?;
    let b = AMatrix::new(Algebra::scalars(), n2, vec![compress(&p_u, &w)?])?;
    Ok(difference_class_tol(&a, &b, rank_tol)?.components()[0])
}

/// `Q X Q` with `Q = I − W W*` for orthonormal columns `W`.
fn compress(x: &ComplexMatrix, w: &ComplexMatrix) -> Result<ComplexMatrix> {
    if w.cols() == 0 {
        return Ok(x.hermitian_part());
    }
    let wx = w.adjoint_matmul(x)?;
    let xw = x.matmul(w)?;
    let wxw = wx.matmul(w)?;
    let mut out = x.clone();
    out.add_scaled(&w.matmul(&wx)?, C64::new(-1.0, 0.0));
    out.add_scaled(&xw.matmul(&w.adjoint())?, C64::new(-1.0, 0.0));
    out.add_scaled(&w.matmul(&wxw)?.matmul(&w.adjoint())?, C64::new(1.0, 0.0));
    Ok(out.hermitian_part())
}

/// Analytic and morphism index of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockIndex {
    pub analytic: i64,
    pub morphism: i64,
    /// Smallest singular value above the near-zero window.
    pub gap: f64,
    pub t_small: f64,
    pub raw_near_zero: usize,
    pub resolved_even: usize,
    pub resolved_odd: usize,
}

/// Both indices of one block, with `t_small = t_fraction · gap`.
pub fn block_indices(op: &ChiralOp, gap_tol: f64, t_fraction: f64, rank_tol: f64) -> Result<BlockIndex> {
    let report = op.index_report(gap_tol)?;
    let t_small = t_fraction * report.next_singular_value;
    let morphism = morphism_from_report(op, &report, t_small, rank_tol)?;
    Ok(BlockIndex {
        analytic: report.index(),
        morphism,
        gap: report.next_singular_value,
        t_small,
        raw_near_zero: report.raw_near_zero(),
        resolved_even: report.even.num_resolved(),
        resolved_odd: report.odd.num_resolved(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift_op(n: usize) -> ChiralOp {
        let grid = Grid::circle(n).unwrap();
        let d = grid.fourier_multiplier(|xi| C64::new(xi[0], 1.0));
        ChiralOp::new(grid, 1, d, Resolution::LowPass).unwrap()
    }

    #[test]
    fn cayley_is_a_graded_unitary() {
        let op = shift_op(16);
        let u = op.cayley(0.7).unwrap();
        let id = ComplexMatrix::identity(32);
        assert!((&u.adjoint().matmul(&u).unwrap() - &id).max_abs() < 1e-12);
        let eps: Vec<C64> = op.grading_diagonal().iter().map(|&e| C64::new(e, 0.0)).collect();
        let eu = u.scale_rows(&eps);
        assert!((&eu.matmul(&eu).unwrap() - &id).max_abs() < 1e-12);
        assert!(eu.hermitian_deviation() < 1e-12);
    }

    #[test]
    fn cayley_of_zero_is_minus_identity() {
        let grid = Grid::circle(8).unwrap();
        let op = ChiralOp::new(grid, 1, ComplexMatrix::zeros(8, 8), Resolution::LowPass).unwrap();
        let u = op.cayley(1.0).unwrap();
        assert!((&u + &ComplexMatrix::identity(16)).max_abs() < 1e-14);
    }

    #[test]
    fn cayley_matches_resolvent_formula() {
        let op = shift_op(8);
        let t = 1.3;
        let dd = op.full_matrix().scale_real(1.0 / t);
        let mut minus = dd.clone();
        let mut plus = dd;
        for i in 0..16 {
            minus[(i, i)] -= C64::new(0.0, 1.0);
            plus[(i, i)] += C64::new(0.0, 1.0);
        }
        let expected = plus.matmul(&crate::linalg::lu::inverse(&minus).unwrap()).unwrap();
        assert!((&op.cayley(t).unwrap() - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn invertible_operator_has_zero_index() {
        let op = shift_op(16);
        let r = op.index_report(0.05).unwrap();
        assert_eq!(r.index(), 0);
        assert_eq!(r.raw_near_zero(), 0);
        let dop = DoubledOp::scalar(op);
        assert_eq!(morphism_index(&dop, 0.05, 0.05, 1e-6).unwrap().components(), &[0]);
    }

    #[test]
    fn gap_violation_is_reported() {
        let grid = Grid::circle(8).unwrap();
        let d = ComplexMatrix::from_real_diagonal(&[0.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let op = ChiralOp::new(grid, 1, d, Resolution::LowPass).unwrap();
        assert!(matches!(op.index_report(0.05), Err(Error::GapViolation { .. })));
    }
}
