//! Dense Hermitian eigensolver.
//!
//! Householder reduction to a real symmetric tridiagonal matrix, implicit QL
//! on the tridiagonal, and back-transformation through the stored reflectors.
//! Selected eigenvectors come from inverse iteration on the tridiagonal.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::tolerances;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Eigenvalues ascending; eigenvectors are the matching columns.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvectors.rows()
    }

    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column(j)
    }

    /// `V f(Λ) V*`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
        let mut fv = Vec::with_capacity(self.eigenvalues.len());
        for &l in &self.eigenvalues {
            let z = f(l);
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::FunctionUndefined { eigenvalue: l });
            }
            fv.push(z);
        }
        let scaled = self.eigenvectors.scale_cols(&fv);
        scaled.matmul(&self.eigenvectors.adjoint())
    }

    /// `V diag(λ) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|l| C64::new(l, 0.0)).expect("finite eigenvalues")
    }
}

/// `f(S)` for Hermitian `S`.
pub fn apply_function(s: &ComplexMatrix, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    hermitian_eig(s)?.apply_function(f)
}

pub fn check_hermitian(s: &ComplexMatrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix is not square",
            s.rows(),
            s.cols()
        )));
    }
    let dev = s.hermitian_deviation();
    if dev > tolerances::HERMITIAN * s.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(s: &ComplexMatrix) -> Result<SpectralData> {
    check_hermitian(s)?;
    let n = s.rows();
    let tri = Tridiagonal::reduce(s);
    let mut d = tri.d.clone();
    let mut e = tri.e.clone();
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, Some(&mut zt))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors: Vec<Vec<C64>> = order
        .par_iter()
        .map(|&i| tri.back_transform(&zt[i * n..(i + 1) * n]))
        .collect();
    Ok(SpectralData {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_columns(n, &vectors),
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigvals(s: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(s)?;
    let tri = Tridiagonal::reduce(s);
    let mut d = tri.d;
    let mut e = tri.e;
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenpairs with eigenvalue in `[lo, hi]`, by inverse iteration.
pub fn hermitian_eig_in_range(s: &ComplexMatrix, lo: f64, hi: f64) -> Result<SpectralData> {
    check_hermitian(s)?;
    let n = s.rows();
    let tri = Tridiagonal::reduce(s);
    let mut d = tri.d.clone();
    let mut e = tri.e.clone();
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    let selected: Vec<f64> = d.iter().copied().filter(|&l| l >= lo && l <= hi).collect();
    let zs = inverse_iteration(&tri.d, &tri.e, &selected)?;
    let vectors: Vec<Vec<C64>> = zs.par_iter().map(|z| tri.back_transform(z)).collect();
    Ok(SpectralData {
        eigenvalues: selected,
        eigenvectors: ComplexMatrix::from_columns(n, &vectors),
    })
}

/// The `k` smallest eigenpairs together with all eigenvalues.
pub fn hermitian_eig_lowest(s: &ComplexMatrix, k: usize) -> Result<(SpectralData, Vec<f64>)> {
    check_hermitian(s)?;
    let n = s.rows();
    let tri = Tridiagonal::reduce(s);
    let mut d = tri.d.clone();
    let mut e = tri.e.clone();
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    let selected: Vec<f64> = d.iter().copied().take(k).collect();
    let zs = inverse_iteration(&tri.d, &tri.e, &selected)?;
    let vectors: Vec<Vec<C64>> = zs.par_iter().map(|z| tri.back_transform(z)).collect();
    Ok((
        SpectralData {
            eigenvalues: selected,
            eigenvectors: ComplexMatrix::from_columns(n, &vectors),
        },
        d,
    ))
}

/// Eigenpairs with eigenvalue `≤ threshold` together with all eigenvalues.
pub fn hermitian_eig_below(s: &ComplexMatrix, threshold: f64) -> Result<(SpectralData, Vec<f64>)> {
    check_hermitian(s)?;
    let n = s.rows();
    let tri = Tridiagonal::reduce(s);
    let mut d = tri.d.clone();
    let mut e = tri.e.clone();
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    let selected: Vec<f64> = d.iter().copied().take_while(|&l| l <= threshold).collect();
    let zs = inverse_iteration(&tri.d, &tri.e, &selected)?;
    let vectors: Vec<Vec<C64>> = zs.par_iter().map(|z| tri.back_transform(z)).collect();
    Ok((
        SpectralData {
            eigenvalues: selected,
            eigenvectors: ComplexMatrix::from_columns(n, &vectors),
        },
        d,
    ))
}

/// `Q* S Q = T` with `T` real symmetric tridiagonal; `Q = H_0 H_1 ⋯ H_{n-2}`.
struct Tridiagonal {
    d: Vec<f64>,
    /// `e[i]` couples `i` and `i + 1`; `e[n-1] = 0`.
    e: Vec<f64>,
    /// Reflector `H_k = I − τ v v*` acting on indices `k+1..n`.
    reflectors: Vec<(C64, Vec<C64>)>,
}

impl Tridiagonal {
    fn reduce(s: &ComplexMatrix) -> Self {
        let n = s.rows();
        // Lower triangle only is read and updated.
        let mut a = s.data().to_vec();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n.saturating_sub(1) {
            let m = n - k - 1;
            let alpha = a[(k + 1) * n + k];
            let xnorm = (k + 2..n)
                .map(|i| a[i * n + k].norm_sqr())
                .sum::<f64>()
                .sqrt();
            let (tau, beta, v) = if xnorm == 0.0 && alpha.im == 0.0 {
                let mut v = vec![ZERO; m];
                v[0] = C64::new(1.0, 0.0);
                (ZERO, alpha.re, v)
            } else {
                let mag = (alpha.norm_sqr() + xnorm * xnorm).sqrt();
                let beta = if alpha.re >= 0.0 { -mag } else { mag };
                let tau = C64::new((beta - alpha.re) / beta, -alpha.im / beta);
                let scal = C64::new(1.0, 0.0) / (alpha - beta);
                let mut v = Vec::with_capacity(m);
                v.push(C64::new(1.0, 0.0));
                for i in k + 2..n {
                    v.push(a[i * n + k] * scal);
                }
                (tau, beta, v)
            };
            d[k] = a[k * n + k].re;
            e[k] = beta;
            if tau != ZERO {
                let off = k + 1;
                // w = τ S v with S Hermitian, lower storage.
                let mut w = vec![ZERO; m];
                for i in 0..m {
                    let row = &a[(off + i) * n + off..(off + i) * n + off + i + 1];
                    let mut acc = row[i] * v[i];
                    let vi = v[i];
                    for j in 0..i {
                        acc += row[j] * v[j];
                        w[j] += row[j].conj() * vi;
                    }
                    w[i] += acc;
                }
                for wi in w.iter_mut() {
                    *wi *= tau;
                }
                let wv = w.iter().zip(&v).fold(ZERO, |acc, (x, y)| acc + x.conj() * y);
                let shift = C64::new(-0.5, 0.0) * tau * wv;
                for (wi, &vi) in w.iter_mut().zip(&v) {
                    *wi += shift * vi;
                }
                let vc: Vec<C64> = v.iter().map(|z| z.conj()).collect();
                let wc: Vec<C64> = w.iter().map(|z| z.conj()).collect();
                a[off * n..].par_chunks_mut(n).take(m).enumerate().for_each(|(i, row)| {
                    let (vi, wi) = (v[i], w[i]);
                    let row = &mut row[off..off + i + 1];
                    for j in 0..=i {
                        row[j] -= vi * wc[j] + wi * vc[j];
                    }
                });
            }
            reflectors.push((tau, v));
        }
        if n > 0 {
            d[n - 1] = a[(n - 1) * n + n - 1].re;
        }
        Self { d, e, reflectors }
    }

    /// `Q z` for a real vector `z` in the tridiagonal basis.
    fn back_transform(&self, z: &[f64]) -> Vec<C64> {
        let mut y: Vec<C64> = z.iter().map(|&x| C64::new(x, 0.0)).collect();
        for (k, (tau, v)) in self.reflectors.iter().enumerate().rev() {
            if *tau == ZERO {
                continue;
            }
            let seg = &mut y[k + 1..];
            let dotv = v.iter().zip(seg.iter()).fold(ZERO, |acc, (a, b)| acc + a.conj() * b);
            let s = tau * dotv;
            for (yi, &vi) in seg.iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
        y
    }
}

/// Implicit QL on a symmetric tridiagonal. Eigenvalues are left in `d`
/// unsorted; if `zt` is given its rows are rotated into the eigenvectors.
fn tql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let max_iter = 60;
    let mut tst: f64 = 0.0;
    for l in 0..n {
        tst = tst.max(d[l].abs() + e[l].abs());
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= f64::EPSILON * tst {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > max_iter {
                return Err(Error::NoConvergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenpairs of a real symmetric tridiagonal, ascending. Vectors are rows.
pub(crate) fn symmetric_tridiagonal_eig(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = d.len();
    let mut dd = d.to_vec();
    let mut ee = e.to_vec();
    ee.resize(n, 0.0);
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    tql(&mut dd, &mut ee, Some(&mut zt))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dd[a].total_cmp(&dd[b]));
    Ok((
        order.iter().map(|&i| dd[i]).collect(),
        order.iter().map(|&i| zt[i * n..(i + 1) * n].to_vec()).collect(),
    ))
}

/// Eigenvectors of the tridiagonal `(d, e)` for ascending eigenvalues `lambdas`.
fn inverse_iteration(d: &[f64], e: &[f64], lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = d.len();
    let tnorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-3 * tnorm;
    let pert = 10.0 * f64::EPSILON * tnorm;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    for (j, &lambda) in lambdas.iter().enumerate() {
        if j > 0 && lambda - lambdas[j - 1] > cluster_gap {
            cluster_start = j;
        }
        let mut shift = lambda;
        if j > cluster_start && shift - prev_shift < pert {
            shift = prev_shift + pert;
        }
        prev_shift = shift;
        let lu = TridiagonalLu::factor(d, e, shift, pert);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut x);
        let mut converged = false;
        for _ in 0..12 {
            lu.solve(&mut x);
            for prev in &out[cluster_start..] {
                orthogonalize(&mut x, prev);
                orthogonalize(&mut x, prev);
            }
            if normalize(&mut x) == 0.0 {
                return Err(Error::NoConvergence { iterations: 0 });
            }
            let res = tridiagonal_residual(d, e, lambda, &x);
            if converged {
                break;
            }
            converged = res <= 1e3 * f64::EPSILON * tnorm * (n as f64).sqrt();
        }
        if !converged {
            return Err(Error::NoConvergence { iterations: 12 });
        }
        out.push(x);
    }
    Ok(out)
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    nrm
}

fn orthogonalize(x: &mut [f64], q: &[f64]) {
    let c: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
    for (a, b) in x.iter_mut().zip(q) {
        *a -= c * b;
    }
}

fn tridiagonal_residual(d: &[f64], e: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = d.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut r = (d[i] - lambda) * x[i];
        if i + 1 < n {
            r += e[i] * x[i + 1];
        }
        if i > 0 {
            r += e[i - 1] * x[i - 1];
        }
        acc += r * r;
    }
    acc.sqrt()
}

/// LU with partial pivoting of `T − μI`.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], mu: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - mu).collect();
        let mut dl: Vec<f64> = off[..n.saturating_sub(1)].to_vec();
        let mut du = dl.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = tiny.copysign(*x);
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        a.hermitian_part()
    }

    fn reconstruction_error(s: &ComplexMatrix, sd: &SpectralData) -> f64 {
        (&sd.reconstruct() - s).max_abs()
    }

    #[test]
    fn diagonal_matrix() {
        let s = ComplexMatrix::from_real_diagonal(&[3.0, -1.0, 2.0]);
        let sd = hermitian_eig(&s).unwrap();
        assert_eq!(sd.eigenvalues, vec![-1.0, 2.0, 3.0]);
        assert!(reconstruction_error(&s, &sd) < 1e-14);
    }

    #[test]
    fn pauli_y() {
        let s = ComplexMatrix::from_vec(
            2,
            2,
            vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
        )
        .unwrap();
        let sd = hermitian_eig(&s).unwrap();
        assert!((sd.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((sd.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(reconstruction_error(&s, &sd) < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        for (n, seed) in [(1, 1), (5, 2), (40, 3), (97, 4)] {
            let s = random_hermitian(n, seed);
            let sd = hermitian_eig(&s).unwrap();
            assert!(reconstruction_error(&s, &sd) < 1e-11, "n={n}");
            let vals = hermitian_eigvals(&s).unwrap();
            for (a, b) in vals.iter().zip(&sd.eigenvalues) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn selected_vectors_match_full() {
        let s = random_hermitian(60, 9);
        let full = hermitian_eig(&s).unwrap();
        let lo = full.eigenvalues[10] - 1e-9;
        let hi = full.eigenvalues[14] + 1e-9;
        let sel = hermitian_eig_in_range(&s, lo, hi).unwrap();
        assert_eq!(sel.eigenvalues.len(), 5);
        for j in 0..5 {
            let v = sel.vector(j);
            let sv = s.matvec(&v);
            let res: f64 = sv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * sel.eigenvalues[j]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-10);
        }
    }

    #[test]
    fn degenerate_cluster_is_orthonormal() {
        let mut diag = vec![0.0; 8];
        diag.extend((1..=24).map(|k| k as f64));
        let base = ComplexMatrix::from_real_diagonal(&diag);
        let q = hermitian_eig(&random_hermitian(32, 5)).unwrap().eigenvectors;
        let s = q.matmul(&base).unwrap().matmul(&q.adjoint()).unwrap().hermitian_part();
        let (low, _) = hermitian_eig_lowest(&s, 8).unwrap();
        let g = low.eigenvectors.adjoint().matmul(&low.eigenvectors).unwrap();
        assert!((&g - &ComplexMatrix::identity(8)).max_abs() < 1e-10);
        let r = s.matmul(&low.eigenvectors).unwrap();
        assert!(r.max_abs() < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let s = ComplexMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(hermitian_eig(&s), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn function_of_matrix() {
        let s = random_hermitian(20, 11);
        let sq = apply_function(&s, |l| C64::new(l * l, 0.0)).unwrap();
        assert!((&sq - &s.matmul(&s).unwrap()).max_abs() < 1e-11);
        let bad = apply_function(&ComplexMatrix::from_real_diagonal(&[0.0, 1.0]), |l| {
            C64::new(1.0 / l, 0.0)
        });
        assert!(matches!(bad, Err(Error::FunctionUndefined { .. })));
    }
}
