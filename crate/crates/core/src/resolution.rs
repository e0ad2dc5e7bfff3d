//! Splitting near-zero modes of a discretized operator into resolved modes
//! and grid artifacts.
//!
//! A square discretization of a chiral operator has index zero, so every
//! genuine zero mode is paired with an artifact of opposite chirality living
//! at the periodization seam or at the edge of the Fourier band. The near-zero
//! subspace is diagonalized against a resolution projector `R`; eigenvalues
//! near 1 are resolved modes, near 0 artifacts.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// `R` = indicator of `|x_j| < L/2` on every axis.
    Interior,
    /// `R` = Fourier projector onto `|k_j| < N/4` on every axis.
    LowPass,
}

/// Near-zero subspace split by resolution weight.
#[derive(Debug, Clone)]
pub struct ModeSplit {
    /// Eigenvalues of the compressed `R`, ascending.
    pub weights: Vec<f64>,
    pub resolved: ComplexMatrix,
    pub artifacts: ComplexMatrix,
}

impl ModeSplit {
    pub fn num_resolved(&self) -> usize {
        self.resolved.cols()
    }

    pub fn num_artifacts(&self) -> usize {
        self.artifacts.cols()
    }
}

/// `R v` for one vector on `grid ⊗ ℂ^fiber`.
pub fn apply_resolution(grid: &Grid, fiber: usize, kind: Resolution, v: &[C64]) -> Vec<C64> {
    match kind {
        Resolution::Interior => v
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                if grid.is_interior(i / fiber) {
                    z
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect(),
        Resolution::LowPass => grid.apply_multiplier(&grid.resolved_symbol(), fiber, v),
    }
}

/// Diagonalizes `V* R V` on the span of the orthonormal columns of `v`.
pub fn split_modes(grid: &Grid, fiber: usize, kind: Resolution, v: &ComplexMatrix) -> Result<ModeSplit> {
    let k = v.cols();
    let dim = v.rows();
    if k == 0 {
        return Ok(ModeSplit {
            weights: Vec::new(),
            resolved: ComplexMatrix::zeros(dim, 0),
            artifacts: ComplexMatrix::zeros(dim, 0),
        });
    }
    let rv: Vec<Vec<C64>> = (0..k)
        .map(|j| apply_resolution(grid, fiber, kind, &v.column(j)))
        .collect();
    let rv = ComplexMatrix::from_columns(dim, &rv);
    let compressed = v.adjoint_matmul(&rv)?.hermitian_part();
    let eig = hermitian_eig(&compressed)?;
    let rotated = v.matmul(&eig.eigenvectors)?;
    let mut resolved = Vec::new();
    let mut artifacts = Vec::new();
    for (j, &w) in eig.eigenvalues.iter().enumerate() {
        if (tolerances::AMBIGUITY_LOW..=tolerances::AMBIGUITY_HIGH).contains(&w) {
            return Err(Error::ResolutionAmbiguity { weight: w });
        }
        if w > 0.5 {
            resolved.push(rotated.column(j));
        } else {
            artifacts.push(rotated.column(j));
        }
    }
    Ok(ModeSplit {
        weights: eig.eigenvalues,
        resolved: ComplexMatrix::from_columns(dim, &resolved),
        artifacts: ComplexMatrix::from_columns(dim, &artifacts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_interior_from_boundary() {
        let grid = Grid::periodized_line(1, 16, 4.0).unwrap();
        let mut a = vec![C64::new(0.0, 0.0); 16];
        let mut b = vec![C64::new(0.0, 0.0); 16];
        a[8] = C64::new(1.0, 0.0);
        b[0] = C64::new(1.0, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mixed1: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x + y) * s).collect();
        let mixed2: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x - y) * s).collect();
        let v = ComplexMatrix::from_columns(16, &[mixed1, mixed2]);
        let split = split_modes(&grid, 1, Resolution::Interior, &v).unwrap();
        assert_eq!(split.num_resolved(), 1);
        assert_eq!(split.num_artifacts(), 1);
        assert!((split.resolved[(8, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ambiguous_mode_is_an_error() {
        let grid = Grid::periodized_line(1, 16, 4.0).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 16];
        v[8] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let v = ComplexMatrix::from_columns(16, &[v]);
        assert!(matches!(
            split_modes(&grid, 1, Resolution::Interior, &v),
            Err(Error::ResolutionAmbiguity { .. })
        ));
    }
}
