//! Finite-dimensional C*-algebras `A = ⊕ M_{k_i}(ℂ)` and their K₀ groups.
//!
//! `K₀(A) = ℤ^r` with one generator per block; a projection in `M_m(A)`
//! has class equal to the vector of its block ranks, so a minimal
//! projection of any block has class one.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigvals, ComplexMatrix};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Algebra {
    block_sizes: Vec<usize>,
}

impl Algebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "block sizes must be a nonempty list of positive integers, got {block_sizes:?}"
            )));
        }
        Ok(Self { block_sizes })
    }

    /// `ℂ`.
    pub fn scalars() -> Self {
        Self { block_sizes: vec![1] }
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.block_sizes.iter().map(|k| k * k).sum()
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .block_sizes
            .iter()
            .map(|&k| if k == 1 { "C".to_string() } else { format!("M{k}") })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// An element of `M_m(A)`, stored as one `(m·k_i) × (m·k_i)` matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix {
    algebra: Algebra,
    m: usize,
    blocks: Vec<ComplexMatrix>,
}

impl AMatrix {
    pub fn new(algebra: Algebra, m: usize, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::AlgebraMismatch(format!(
                "{} blocks for algebra {algebra}",
                blocks.len()
            )));
        }
        for (b, &k) in blocks.iter().zip(algebra.block_sizes()) {
            if b.rows() != m * k || b.cols() != m * k {
                return Err(Error::Dimension(format!(
                    "block {}x{} in M_{m}(M_{k})",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self { algebra, m, blocks })
    }

    pub fn identity(algebra: &Algebra, m: usize) -> Self {
        let blocks = algebra
            .block_sizes()
            .iter()
            .map(|&k| ComplexMatrix::identity(m * k))
            .collect();
        Self {
            algebra: algebra.clone(),
            m,
            blocks,
        }
    }

    pub fn zeros(algebra: &Algebra, m: usize) -> Self {
        let blocks = algebra
            .block_sizes()
            .iter()
            .map(|&k| ComplexMatrix::zeros(m * k, m * k))
            .collect();
        Self {
            algebra: algebra.clone(),
            m,
            blocks,
        }
    }

    /// `Σ_i x_i ⊗ 1_{k_i}`: block `i` is the scalar matrix `x_i` tensored with the unit of `M_{k_i}`.
    pub fn from_scalar_blocks(algebra: &Algebra, xs: Vec<ComplexMatrix>) -> Result<Self> {
        let m = xs.first().map(|x| x.rows()).unwrap_or(0);
        if xs.len() != algebra.num_blocks() || xs.iter().any(|x| x.rows() != m || x.cols() != m) {
            return Err(Error::AlgebraMismatch(
                "scalar blocks must be square, equal size and one per block".into(),
            ));
        }
        let blocks = xs
            .iter()
            .zip(algebra.block_sizes())
            .map(|(x, &k)| x.kron(&ComplexMatrix::identity(k)))
            .collect();
        Ok(Self {
            algebra: algebra.clone(),
            m,
            blocks,
        })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// Matrix size `m` over `A`.
    pub fn size(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &ComplexMatrix {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut ComplexMatrix {
        &mut self.blocks[i]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch(format!(
                "{} versus {}",
                self.algebra, other.algebra
            )));
        }
        if self.m != other.m {
            return Err(Error::Dimension(format!("M_{} versus M_{}", self.m, other.m)));
        }
        Ok(())
    }

    fn zip_blocks(
        &self,
        other: &Self,
        f: impl Fn(&ComplexMatrix, &ComplexMatrix) -> Result<ComplexMatrix>,
    ) -> Result<Self> {
        self.check_compatible(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            algebra: self.algebra.clone(),
            m: self.m,
            blocks,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.zip_blocks(other, |a, b| a.matmul(b))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_blocks(other, |a, b| Ok(a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_blocks(other, |a, b| Ok(a - b))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            algebra: self.algebra.clone(),
            m: self.m,
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn map_blocks(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self {
            algebra: self.algebra.clone(),
            m: self.m,
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    /// Largest block-wise max-entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_abs()).fold(0.0, f64::max)
    }

    /// `x ↦ x ⊗ 1_{m'}` into `M_{m·m'}(A)`, with the new index between the
    /// matrix index and the block index.
    pub fn amplify(&self, m_prime: usize) -> Result<Self> {
        if m_prime == 0 {
            return Err(Error::InvalidParameter("amplification must be positive".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(self.algebra.block_sizes())
            .map(|(b, &k)| {
                let m = self.m;
                let big = m * m_prime * k;
                let mut out = ComplexMatrix::zeros(big, big);
                for a in 0..m {
                    for bb in 0..m {
                        for p in 0..m_prime {
                            for al in 0..k {
                                for be in 0..k {
                                    out[((a * m_prime + p) * k + al, (bb * m_prime + p) * k + be)] =
                                        b[(a * k + al, bb * k + be)];
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            algebra: self.algebra.clone(),
            m: self.m * m_prime,
            blocks,
        })
    }

    /// Block-diagonal sum `x ⊕ y` in `M_{m+m'}(A)`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch(format!(
                "{} versus {}",
                self.algebra, other.algebra
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .zip(self.algebra.block_sizes())
            .map(|((a, b), &k)| {
                let (ma, mb) = (self.m, other.m);
                let n = (ma + mb) * k;
                let mut out = ComplexMatrix::zeros(n, n);
                out.set_block(0, 0, a);
                out.set_block(ma * k, ma * k, b);
                out
            })
            .collect();
        Ok(Self {
            algebra: self.algebra.clone(),
            m: self.m + other.m,
            blocks,
        })
    }
}

/// An element of `K₀(A) = ℤ^r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct K0Class {
    algebra: Algebra,
    components: Vec<i64>,
}

impl K0Class {
    pub fn new(algebra: Algebra, components: Vec<i64>) -> Result<Self> {
        if components.len() != algebra.num_blocks() {
            return Err(Error::AlgebraMismatch(format!(
                "{} components for algebra {algebra}",
                components.len()
            )));
        }
        Ok(Self { algebra, components })
    }

    pub fn zero(algebra: &Algebra) -> Self {
        Self {
            algebra: algebra.clone(),
            components: vec![0; algebra.num_blocks()],
        }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn components(&self) -> &[i64] {
        &self.components
    }

    fn zip(&self, other: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        assert_eq!(self.algebra, other.algebra, "K0 classes over different algebras");
        Self {
            algebra: self.algebra.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Add for &K0Class {
    type Output = K0Class;
    fn add(self, rhs: &K0Class) -> K0Class {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &K0Class {
    type Output = K0Class;
    fn sub(self, rhs: &K0Class) -> K0Class {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &K0Class {
    type Output = K0Class;
    fn neg(self) -> K0Class {
        K0Class {
            algebra: self.algebra.clone(),
            components: self.components.iter().map(|&a| -a).collect(),
        }
    }
}

impl fmt::Display for K0Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.components)
    }
}

/// Class of a projection, with the default spectral band.
pub fn k0_of_projection(p: &AMatrix) -> Result<K0Class> {
    k0_of_projection_tol(p, tolerances::PROJECTION_BAND)
}

/// Class of a projection: block ranks, after checking every eigenvalue of
/// every block lies within `band` of 0 or 1.
pub fn k0_of_projection_tol(p: &AMatrix, band: f64) -> Result<K0Class> {
    let mut components = Vec::with_capacity(p.blocks.len());
    for (i, b) in p.blocks.iter().enumerate() {
        let dev = b.hermitian_deviation();
        if dev > band {
            return Err(Error::NotProjection(format!(
                "block {i} deviates from self-adjoint by {dev:.3e}"
            )));
        }
        let vals = hermitian_eigvals(&b.hermitian_part())?;
        let mut rank = 0;
        for &l in &vals {
            if l.abs() <= band {
                continue;
            }
            if (l - 1.0).abs() <= band {
                rank += 1;
                continue;
            }
            return Err(Error::NotProjection(format!(
                "block {i} has eigenvalue {l:.6e} outside the band {band:.1e}"
            )));
        }
        components.push(rank);
    }
    K0Class::new(p.algebra.clone(), components)
}

/// `[p] − [q]`.
pub fn difference_class(p: &AMatrix, q: &AMatrix) -> Result<K0Class> {
    p.check_compatible(q)?;
    let cp = k0_of_projection(p)?;
    let cq = k0_of_projection(q)?;
    Ok(&cp - &cq)
}

/// `[p] − [q]` with a caller-chosen spectral band.
pub fn difference_class_tol(p: &AMatrix, q: &AMatrix, band: f64) -> Result<K0Class> {
    p.check_compatible(q)?;
    Ok(&k0_of_projection_tol(p, band)? - &k0_of_projection_tol(q, band)?)
}

/// Orthogonal projection onto the span of the given orthonormal columns.
pub fn projection_onto(columns: &ComplexMatrix) -> ComplexMatrix {
    columns.matmul(&columns.adjoint()).expect("conformal")
}

/// Rank-one projection `v v*` for a unit vector.
pub fn rank_one(v: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
}
