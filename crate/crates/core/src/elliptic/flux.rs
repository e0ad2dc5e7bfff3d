//! Dirac operator on the flat torus twisted by a line bundle of degree `d`.
//!
//! Grid index `j₁ N + j₂`. Along `x₁` the bundle is quasi-periodic: on the
//! line `x₂ = x₂(m)` the covariant derivative has frequencies `k + d m / N`.
//! Along `x₂` the connection is `∂₂ − i b x₁` with `b = d / 2π`, so the
//! curvature integrates to `2π d`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::doubled::{block_indices, BlockIndex, ChiralOp, DoubledOp};
use crate::cstar::{Algebra, K0Class};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::ComplexMatrix;
use crate::resolution::Resolution;

/// `F* diag(i(k + s)) F` on one periodic axis with signed modes `k`.
fn shifted_derivative(grid: &Grid, s: f64) -> ComplexMatrix {
    let n = grid.npts();
    let h = grid.spacing();
    let modes: Vec<f64> = (0..n).map(|k| grid.mode(k) as f64 + s).collect();
    ComplexMatrix::from_fn(n, n, |p, q| {
        let dx = (p as f64 - q as f64) * h;
        let mut acc = C64::new(0.0, 0.0);
        for &k in &modes {
            acc += C64::new(0.0, k) * C64::from_polar(1.0, k * dx);
        }
        acc / n as f64
    })
}

/// `D⁺ = −i(∇₁ + i∇₂)` for flux `d` on an `N × N` torus grid.
pub fn twisted_dirac_block(npts: usize, flux: i64) -> Result<ChiralOp> {
    if (npts as i64) < 8 * flux.abs() {
        return Err(Error::InvalidGrid(format!(
            "N = {npts} cannot resolve flux {flux}; need N ≥ {}",
            8 * flux.abs()
        )));
    }
    let grid = Grid::torus(npts)?;
    let n = npts;
    let size = n * n;
    let mut nabla1 = ComplexMatrix::zeros(size, size);
    for m in 0..n {
        let dm = shifted_derivative(&grid, flux as f64 * m as f64 / n as f64);
        for p in 0..n {
            for q in 0..n {
                nabla1[(p * n + m, q * n + m)] = dm[(p, q)];
            }
        }
    }
    let b = flux as f64 / (2.0 * std::f64::consts::PI);
    let d2 = shifted_derivative(&grid, 0.0);
    let mut nabla2 = ComplexMatrix::identity(n).kron(&d2);
    for j1 in 0..n {
        let x1 = grid.coord(j1);
        for j2 in 0..n {
            nabla2[(j1 * n + j2, j1 * n + j2)] -= C64::new(0.0, b * x1);
        }
    }
    // −i(∇₁ + i∇₂) = −i∇₁ + ∇₂
    let mut d_plus = nabla1.scale(C64::new(0.0, -1.0));
    d_plus.add_scaled(&nabla2, C64::new(1.0, 0.0));
    let symbol = Arc::new(|_: &[f64], xi: &[f64]| {
        let mut s = ComplexMatrix::zeros(2, 2);
        s[(1, 0)] = C64::new(xi[0], xi[1]);
        s[(0, 1)] = C64::new(xi[0], -xi[1]);
        s
    });
    Ok(ChiralOp::new(grid, 1, d_plus, Resolution::LowPass)?.with_symbol(symbol))
}

/// `⊕_i D_{d_i} ⊗ 1_{M_{k_i}}` over `A`.
pub fn twisted_dirac_torus(algebra: &Algebra, fluxes: &[i64], npts: usize) -> Result<DoubledOp> {
    check_fluxes(algebra, fluxes)?;
    let blocks = fluxes
        .iter()
        .map(|&d| twisted_dirac_block(npts, d))
        .collect::<Result<Vec<_>>>()?;
    DoubledOp::new(algebra.clone(), blocks)
}

fn check_fluxes(algebra: &Algebra, fluxes: &[i64]) -> Result<()> {
    if fluxes.len() != algebra.num_blocks() {
        return Err(Error::AlgebraMismatch(format!(
            "{} fluxes for algebra {algebra}",
            fluxes.len()
        )));
    }
    Ok(())
}

/// Gysin image of the twisted symbol class: `d_i` copies of the minimal
/// projection of `M_{k_i}` tensored with `1_{M_{k_i}}`, i.e. `d_i k_i`.
pub fn topological_index_torus(algebra: &Algebra, fluxes: &[i64]) -> Result<K0Class> {
    check_fluxes(algebra, fluxes)?;
    let components = fluxes
        .iter()
        .zip(algebra.block_sizes())
        .map(|(&d, &k)| d * k as i64)
        .collect();
    K0Class::new(algebra.clone(), components)
}

/// Settings shared by every torus index evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusIndexSettings {
    pub npts: usize,
    pub gap_tol: f64,
    /// `t_small` as a fraction of the spectral gap.
    pub t_fraction: f64,
    pub rank_tol: f64,
}

impl Default for TorusIndexSettings {
    fn default() -> Self {
        Self {
            npts: 24,
            gap_tol: 0.02,
            t_fraction: 0.1,
            rank_tol: 1e-3,
        }
    }
}

type CacheKey = (i64, usize, u64, u64, u64);

/// Block indices, computed once per distinct flux and settings.
#[derive(Debug, Default)]
pub struct FluxCache {
    entries: HashMap<CacheKey, BlockIndex>,
}

impl FluxCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, flux: i64, settings: &TorusIndexSettings) -> Result<&BlockIndex> {
        let key = (
            flux,
            settings.npts,
            settings.gap_tol.to_bits(),
            settings.t_fraction.to_bits(),
            settings.rank_tol.to_bits(),
        );
        if let std::collections::hash_map::Entry::Vacant(e) = self.entries.entry(key) {
            let op = twisted_dirac_block(settings.npts, flux)?;
            let idx = block_indices(&op, settings.gap_tol, settings.t_fraction, settings.rank_tol)?;
            e.insert(idx);
        }
        Ok(&self.entries[&key])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Analytic, morphism and topological index of a twisted torus Dirac operator.
#[derive(Debug, Clone)]
pub struct TorusIndices {
    pub analytic: K0Class,
    pub morphism: K0Class,
    pub topological: K0Class,
    pub blocks: Vec<BlockIndex>,
}

impl TorusIndices {
    pub fn agree(&self) -> bool {
        self.analytic == self.topological && self.morphism == self.topological
    }
}

pub fn torus_indices(
    algebra: &Algebra,
    fluxes: &[i64],
    settings: &TorusIndexSettings,
    cache: &mut FluxCache,
) -> Result<TorusIndices> {
    check_fluxes(algebra, fluxes)?;
    let mut blocks = Vec::with_capacity(fluxes.len());
    for &d in fluxes {
        blocks.push(cache.get(d, settings)?.clone());
    }
    let push = |f: &dyn Fn(&BlockIndex) -> i64| -> Result<K0Class> {
        let c = blocks
            .iter()
            .zip(algebra.block_sizes())
            .map(|(b, &k)| f(b) * k as i64)
            .collect();
        K0Class::new(algebra.clone(), c)
    };
    Ok(TorusIndices {
        analytic: push(&|b| b.analytic)?,
        morphism: push(&|b| b.morphism)?,
        topological: topological_index_torus(algebra, fluxes)?,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untwisted_derivative_matches_grid_derivative() {
        let grid = Grid::circle(16).unwrap();
        let d = shifted_derivative(&grid, 0.0);
        assert!((&d - &grid.derivative(0)).max_abs() < 1e-12);
    }

    #[test]
    fn flux_must_be_resolved() {
        assert!(matches!(twisted_dirac_block(8, 2), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn small_torus_index_equals_flux() {
        let settings = TorusIndexSettings {
            npts: 12,
            ..TorusIndexSettings::default()
        };
        let mut cache = FluxCache::new();
        for d in [-1, 0, 1] {
            let r = torus_indices(&Algebra::scalars(), &[d], &settings, &mut cache).unwrap();
            assert_eq!(r.analytic.components(), &[d]);
            assert!(r.agree(), "{r:?}");
        }
    }
}
