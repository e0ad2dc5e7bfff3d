//! Exterior algebra of ℂⁿ and its Clifford multiplication.
//!
//! Basis: subsets of {0..n} in graded-lexicographic order, so index 0 is the
//! 0-form. `d[j]` is exterior multiplication by `e_j`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone)]
pub struct CliffordRep {
    n: usize,
    /// Bitmask of each basis subset.
    basis: Vec<u32>,
    d: Vec<ComplexMatrix>,
    grading: ComplexMatrix,
}

impl CliffordRep {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "Clifford rank {n} outside 1..={MAX_DIM}"
            )));
        }
        let mut basis: Vec<u32> = (0..1u32 << n).collect();
        basis.sort_by_key(|&m| {
            let mut elems: Vec<u32> = (0..n as u32).filter(|&i| m & (1 << i) != 0).collect();
            elems.insert(0, m.count_ones());
            elems
        });
        let dim = basis.len();
        let position = |mask: u32| basis.iter().position(|&b| b == mask).expect("mask in basis");
        let d = (0..n)
            .map(|j| {
                let bit = 1u32 << j;
                let mut m = ComplexMatrix::zeros(dim, dim);
                for (col, &s) in basis.iter().enumerate() {
                    if s & bit != 0 {
                        continue;
                    }
                    let below = (s & (bit - 1)).count_ones();
                    let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
                    m[(position(s | bit), col)] = C64::new(sign, 0.0);
                }
                m
            })
            .collect();
        let grading = ComplexMatrix::from_real_diagonal(
            &basis
                .iter()
                .map(|m| if m.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                .collect::<Vec<_>>(),
        );
        Ok(Self { n, basis, d, grading })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// `2ⁿ`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn d(&self, j: usize) -> &ComplexMatrix {
        &self.d[j]
    }

    /// `ε = (−1)^degree`.
    pub fn grading(&self) -> &ComplexMatrix {
        &self.grading
    }

    pub fn degree(&self, index: usize) -> u32 {
        self.basis[index].count_ones()
    }

    pub fn is_even(&self, index: usize) -> bool {
        self.degree(index).is_multiple_of(2)
    }

    /// `d_j + d_j*`.
    pub fn real_generator(&self, j: usize) -> ComplexMatrix {
        &self.d[j] + &self.d[j].adjoint()
    }

    /// `d_j − d_j*`.
    pub fn imaginary_generator(&self, j: usize) -> ComplexMatrix {
        &self.d[j] - &self.d[j].adjoint()
    }

    /// `c(v, ξ) = Σ v_j (d_j + d_j*) + i Σ ξ_j (d_j − d_j*)`.
    pub fn clifford_mult(&self, v: &[f64], xi: &[f64]) -> Result<ComplexMatrix> {
        if v.len() != self.n || xi.len() != self.n {
            return Err(Error::Dimension(format!(
                "vectors of length {} and {} for rank {}",
                v.len(),
                xi.len(),
                self.n
            )));
        }
        let mut c = ComplexMatrix::zeros(self.dim(), self.dim());
        for j in 0..self.n {
            c.add_scaled(&self.real_generator(j), C64::new(v[j], 0.0));
            c.add_scaled(&self.imaginary_generator(j), C64::new(0.0, xi[j]));
        }
        Ok(c)
    }

    /// Largest deviation from the canonical anticommutation relations and grading parity.
    pub fn relation_defect(&self) -> f64 {
        let dim = self.dim();
        let id = ComplexMatrix::identity(dim);
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                let dj = &self.d[j];
                let dk = &self.d[k];
                let aa = dj.anticommutator(dk).expect("square");
                worst = worst.max(aa.max_abs());
                let ab = dj.anticommutator(&dk.adjoint()).expect("square");
                let target = if j == k { id.clone() } else { ComplexMatrix::zeros(dim, dim) };
                worst = worst.max((&ab - &target).max_abs());
            }
            let odd = self.grading.anticommutator(&self.d[j]).expect("square");
            worst = worst.max(odd.max_abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_matches_hand_computation() {
        let c = CliffordRep::new(1).unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.d(0)[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(c.d(0)[(0, 1)], C64::new(0.0, 0.0));
        assert!(c.is_even(0) && !c.is_even(1));
    }

    #[test]
    fn graded_lex_order() {
        let c = CliffordRep::new(3).unwrap();
        assert_eq!(c.basis, vec![0, 1, 2, 4, 3, 5, 6, 7]);
    }

    #[test]
    fn relations_hold() {
        for n in 1..=MAX_DIM {
            let c = CliffordRep::new(n).unwrap();
            assert_eq!(c.relation_defect(), 0.0);
        }
        assert!(CliffordRep::new(0).is_err());
        assert!(CliffordRep::new(5).is_err());
    }

    #[test]
    fn square_of_clifford_multiplication() {
        let c = CliffordRep::new(2).unwrap();
        let m = c.clifford_mult(&[0.3, -1.2], &[2.0, 0.5]).unwrap();
        let sq = m.matmul(&m).unwrap();
        let r2 = 0.09 + 1.44 + 4.0 + 0.25;
        assert!((&sq - &ComplexMatrix::identity(4).scale_real(r2)).max_abs() < 1e-13);
    }
}
