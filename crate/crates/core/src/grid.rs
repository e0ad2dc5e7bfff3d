//! Uniform periodic grids and their Fourier duals.
//!
//! A grid has `N` points per axis on a box of period `2L`. The periodized
//! line starts at `−L`; circles and tori have `L = π` and start at `0`.
//! Frequencies are `ξ_k = k·π/L` with `k ∈ {−N/2, …, N/2 − 1}` in DFT order.
//! Flattened indices put the first axis slowest; fibers are fastest.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::fft::fft_nd_raw;
use crate::linalg::{operator_norm_map, ComplexMatrix, LinearMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    PeriodizedLine,
    Circle,
    Torus,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::PeriodizedLine => "periodized-line",
            Topology::Circle => "circle",
            Topology::Torus => "torus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "periodized-line" | "line" => Ok(Topology::PeriodizedLine),
            "circle" => Ok(Topology::Circle),
            "torus" => Ok(Topology::Torus),
            _ => Err(Error::InvalidGrid(format!("unknown topology {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    topology: Topology,
    dim: usize,
    npts: usize,
    half_period: f64,
}

impl Grid {
    pub fn new(topology: Topology, dim: usize, npts: usize, half_period: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} outside 1..=2")));
        }
        if npts < 4 || !npts.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N = {npts} must be even and at least 4")));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidGrid(format!("half period {half_period} must be positive")));
        }
        match topology {
            Topology::Circle if dim != 1 => {
                return Err(Error::InvalidGrid("a circle is one-dimensional".into()))
            }
            Topology::Torus if dim != 2 => {
                return Err(Error::InvalidGrid("a torus is two-dimensional".into()))
            }
            Topology::Circle | Topology::Torus if (half_period - PI).abs() > 1e-12 => {
                return Err(Error::InvalidGrid("circles and tori have period 2π".into()))
            }
            _ => {}
        }
        Ok(Self {
            topology,
            dim,
            npts,
            half_period,
        })
    }

    pub fn periodized_line(dim: usize, npts: usize, half_width: f64) -> Result<Self> {
        Self::new(Topology::PeriodizedLine, dim, npts, half_width)
    }

    pub fn circle(npts: usize) -> Result<Self> {
        Self::new(Topology::Circle, 1, npts, PI)
    }

    pub fn torus(npts: usize) -> Result<Self> {
        Self::new(Topology::Torus, 2, npts, PI)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    /// Total number of points, `Nⁿ`.
    pub fn size(&self) -> usize {
        self.npts.pow(self.dim as u32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.npts; self.dim]
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.npts as f64
    }

    pub fn origin(&self) -> f64 {
        match self.topology {
            Topology::PeriodizedLine => -self.half_period,
            Topology::Circle | Topology::Torus => 0.0,
        }
    }

    /// Coordinate of index `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        let mut r = flat;
        for a in (0..self.dim).rev() {
            idx[a] = r % self.npts;
            r /= self.npts;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.npts + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|j| self.coord(j)).collect()
    }

    /// Flat index of the grid point nearest to `x`, periodically wrapped.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let n = self.npts as i64;
        let idx: Vec<usize> = x
            .iter()
            .map(|&c| (((c - self.origin()) / self.spacing()).round() as i64).rem_euclid(n) as usize)
            .collect();
        self.flat_index(&idx)
    }

    /// Spectral `∂/∂x_axis` of sampled values.
    pub fn differentiate(&self, axis: usize, values: &[C64]) -> Vec<C64> {
        let symbol: Vec<C64> = (0..self.size())
            .map(|k| C64::new(0.0, self.frequency(k)[axis]))
            .collect();
        self.apply_multiplier(&symbol, 1, values)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|p| self.point(p)).collect()
    }

    /// Signed mode number of DFT index `k` along one axis.
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.npts as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn frequency_of_mode(&self, k: usize) -> f64 {
        self.mode(k) as f64 * PI / self.half_period
    }

    /// Frequency vector of flattened DFT index.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|k| self.frequency_of_mode(k))
            .collect()
    }

    /// Largest representable `|ξ_j|`.
    pub fn max_frequency(&self) -> f64 {
        (self.npts / 2) as f64 * PI / self.half_period
    }

    /// Modes with `|k_j| < N/4` on every axis.
    pub fn is_resolved_mode(&self, flat: usize) -> bool {
        let quarter = (self.npts / 4) as i64;
        self.multi_index(flat)
            .into_iter()
            .all(|k| self.mode(k).abs() < quarter)
    }

    /// Points with `|x_j| < L/2` on every axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        self.point(flat)
            .into_iter()
            .all(|x| x.abs() < 0.5 * self.half_period)
    }

    /// Diagonal multiplication operator by `f(x)` on `grid ⊗ ℂ^fiber`.
    pub fn multiplication(&self, fiber: usize, f: impl Fn(&[f64]) -> C64) -> ComplexMatrix {
        let mut diag = Vec::with_capacity(self.size() * fiber);
        for p in 0..self.size() {
            let v = f(&self.point(p));
            diag.extend(std::iter::repeat_n(v, fiber));
        }
        ComplexMatrix::from_diagonal(&diag)
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> C64) -> Vec<C64> {
        (0..self.size()).map(|p| f(&self.point(p))).collect()
    }

    /// First column of the circulant with symbol `g`: `c_m = N⁻ⁿ Σ_k g(ξ_k) e^{2πi k·m/N}`.
    pub fn convolution_kernel(&self, g: impl Fn(&[f64]) -> C64) -> Vec<C64> {
        let mut c: Vec<C64> = (0..self.size()).map(|k| g(&self.frequency(k))).collect();
        fft_nd_raw(&mut c, &self.shape(), true);
        let s = 1.0 / self.size() as f64;
        c.iter_mut().for_each(|z| *z *= s);
        c
    }

    /// Index of `p − q` modulo the period, per axis.
    pub fn difference_index(&self, p: usize, q: usize) -> usize {
        let a = self.multi_index(p);
        let b = self.multi_index(q);
        let d: Vec<usize> = a
            .iter()
            .zip(&b)
            .map(|(&i, &j)| (i + self.npts - j) % self.npts)
            .collect();
        self.flat_index(&d)
    }

    /// Dense Fourier multiplier `g(D)` with `D = −i∇`, acting on scalars.
    pub fn fourier_multiplier(&self, g: impl Fn(&[f64]) -> C64) -> ComplexMatrix {
        let c = self.convolution_kernel(g);
        let n = self.size();
        ComplexMatrix::from_fn(n, n, |p, q| c[self.difference_index(p, q)])
    }

    /// Spectral `∂/∂x_axis`.
    pub fn derivative(&self, axis: usize) -> ComplexMatrix {
        self.fourier_multiplier(|xi| C64::new(0.0, xi[axis]))
    }

    /// Applies a diagonal-in-frequency multiplier to every fiber component.
    pub fn apply_multiplier(&self, symbol: &[C64], fiber: usize, x: &[C64]) -> Vec<C64> {
        let n = self.size();
        assert_eq!(symbol.len(), n);
        assert_eq!(x.len(), n * fiber);
        let shape = self.shape();
        let mut out = vec![C64::new(0.0, 0.0); n * fiber];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for a in 0..fiber {
            for p in 0..n {
                buf[p] = x[p * fiber + a];
            }
            fft_nd_raw(&mut buf, &shape, false);
            for (z, s) in buf.iter_mut().zip(symbol) {
                *z *= s / n as f64;
            }
            fft_nd_raw(&mut buf, &shape, true);
            for p in 0..n {
                out[p * fiber + a] = buf[p];
            }
        }
        out
    }

    /// Symbol values of the resolved-band projector.
    pub fn resolved_symbol(&self) -> Vec<C64> {
        (0..self.size())
            .map(|k| {
                if self.is_resolved_mode(k) {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Orthogonal projector onto resolved modes, tensored with the fiber identity.
    pub fn resolved_projector(&self, fiber: usize) -> ComplexMatrix {
        let p = self.fourier_multiplier(|xi| {
            let k_max = self.max_frequency() * 0.5;
            if xi.iter().all(|x| x.abs() < k_max - 1e-9 * k_max) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        p.kron(&ComplexMatrix::identity(fiber))
    }

    /// Diagonal projector onto interior points, tensored with the fiber identity.
    pub fn interior_projector(&self, fiber: usize) -> ComplexMatrix {
        self.multiplication(fiber, |x| {
            if x.iter().all(|v| v.abs() < 0.5 * self.half_period) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `‖X Π‖` with `Π` the resolved-band projector on the input side.
    pub fn resolved_norm(&self, x: &ComplexMatrix, fiber: usize) -> Result<f64> {
        if x.cols() != self.size() * fiber {
            return Err(Error::Dimension(format!(
                "operator with {} columns on a grid of {} x {fiber}",
                x.cols(),
                self.size()
            )));
        }
        operator_norm_map(&ResolvedRestriction::new(self, fiber, x))
    }

    /// Relative energy of a sampled function outside the resolved band.
    pub fn high_band_fraction(&self, values: &[C64]) -> f64 {
        let mut v = values.to_vec();
        fft_nd_raw(&mut v, &self.shape(), false);
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let high: f64 = v
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.is_resolved_mode(*k))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        high / total
    }
}

/// `X Π` as a matrix-free map.
pub struct ResolvedRestriction<'a> {
    grid: &'a Grid,
    fiber: usize,
    inner: &'a dyn LinearMap,
    symbol: Vec<C64>,
}

impl<'a> ResolvedRestriction<'a> {
    pub fn new(grid: &'a Grid, fiber: usize, inner: &'a dyn LinearMap) -> Self {
        Self {
            grid,
            fiber,
            inner,
            symbol: grid.resolved_symbol(),
        }
    }
}

impl LinearMap for ResolvedRestriction<'_> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let px = self.grid.apply_multiplier(&self.symbol, self.fiber, x);
        self.inner.apply(&px)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let z = self.inner.apply_adjoint(y);
        self.grid.apply_multiplier(&self.symbol, self.fiber, &z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigvals;

    #[test]
    fn circle_derivative_spectrum() {
        let g = Grid::circle(64).unwrap();
        let d = g.fourier_multiplier(|xi| C64::new(xi[0], 0.0));
        let vals = hermitian_eigvals(&d).unwrap();
        let expected: Vec<f64> = (-32..32).map(|k| k as f64).collect();
        for (a, b) in vals.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let g = Grid::circle(32).unwrap();
        let f = g.sample(|x| C64::new((3.0 * x[0]).sin(), 0.0));
        let df = g.derivative(0).matvec(&f);
        for (p, v) in df.iter().enumerate() {
            let x = g.point(p)[0];
            assert!((v - C64::new(3.0 * (3.0 * x).cos(), 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn periodized_line_points() {
        let g = Grid::periodized_line(1, 8, 2.0).unwrap();
        assert_eq!(g.point(0), vec![-2.0]);
        assert_eq!(g.point(4), vec![0.0]);
        assert!((g.frequency_of_mode(1) - PI / 2.0).abs() < 1e-15);
        assert_eq!(g.mode(4), -4);
    }

    #[test]
    fn two_dim_multiplier_matches_kron() {
        let g = Grid::torus(8).unwrap();
        let d0 = g.derivative(0);
        let c = Grid::circle(8).unwrap();
        let d1 = c.derivative(0).kron(&ComplexMatrix::identity(8));
        assert!((&d0 - &d1).max_abs() < 1e-12);
    }

    #[test]
    fn resolved_projector_is_projection() {
        let g = Grid::circle(16).unwrap();
        let p = g.resolved_projector(2);
        let p2 = p.matmul(&p).unwrap();
        assert!((&p2 - &p).max_abs() < 1e-12);
        let rank: f64 = p.trace().re;
        assert!((rank - 14.0).abs() < 1e-10);
    }

    #[test]
    fn resolved_norm_of_identity_is_one() {
        let g = Grid::circle(128).unwrap();
        let id = ComplexMatrix::identity(128);
        assert!((g.resolved_norm(&id, 1).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(Topology::Circle, 2, 8, PI).is_err());
        assert!(Grid::periodized_line(1, 7, 1.0).is_err());
        assert!(Grid::periodized_line(3, 8, 1.0).is_err());
        assert!(Grid::periodized_line(1, 8, -1.0).is_err());
    }
}
