//! Operator norms of dense matrices and matrix-free maps.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eigen::{hermitian_eigvals, symmetric_tridiagonal_eig};
use super::matrix::{dot, norm2, ComplexMatrix};
use crate::error::Result;
use crate::tolerances;

/// A linear map given by its action and the action of its adjoint.
pub trait LinearMap: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64>;
}

impl LinearMap for ComplexMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matvec(x)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        self.adjoint_matvec(y)
    }
}

/// Sizes at or below this use a dense eigensolve of `X*X`.
const DENSE_LIMIT: usize = 64;
const MAX_LANCZOS: usize = 400;

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    operator_norm_map(m)
}

/// Largest singular value of a matrix-free map.
pub fn operator_norm_map(op: &dyn LinearMap) -> Result<f64> {
    let n = op.ncols();
    if n == 0 || op.nrows() == 0 {
        return Ok(0.0);
    }
    if n <= DENSE_LIMIT {
        let cols: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                op.apply(&e)
            })
            .collect();
        let x = ComplexMatrix::from_columns(op.nrows(), &cols);
        let g = x.adjoint_matmul(&x)?.hermitian_part();
        let vals = hermitian_eigvals(&g)?;
        return Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt());
    }
    lanczos_top(op)
}

/// Lanczos on `X*X` with full reorthogonalization.
fn lanczos_top(op: &dyn LinearMap) -> Result<f64> {
    let n = op.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    let mut q: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|z| *z /= s);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut theta = 0.0;
    let steps = n.min(MAX_LANCZOS);
    for j in 0..steps {
        let mut w = op.apply_adjoint(&op.apply(&q));
        let alpha = dot(&q, &w).re;
        basis.push(q.clone());
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm2(&w);
        let (vals, vecs) = symmetric_tridiagonal_eig(&alphas, &betas)?;
        theta = *vals.last().expect("nonempty");
        let last = vecs.last().expect("nonempty")[j].abs();
        let residual = beta * last;
        if residual <= tolerances::NORM_REL * 0.1 * theta.abs().max(f64::MIN_POSITIVE)
            || beta <= f64::EPSILON * theta.abs().max(1.0)
        {
            break;
        }
        betas.push(beta);
        q = w.iter().map(|z| z / beta).collect();
    }
    Ok(theta.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_norm() {
        let d: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let m = ComplexMatrix::from_real_diagonal(&d);
        let exact = d.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let got = operator_norm(&m).unwrap();
        assert!((got - exact).abs() < 1e-9 * exact, "{got} {exact}");
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ComplexMatrix::from_fn(90, 70, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let g = m.adjoint_matmul(&m).unwrap().hermitian_part();
        let exact = hermitian_eigvals(&g).unwrap().last().unwrap().sqrt();
        let got = operator_norm(&m).unwrap();
        assert!((got - exact).abs() < 1e-9 * exact, "{got} {exact}");
    }
}
