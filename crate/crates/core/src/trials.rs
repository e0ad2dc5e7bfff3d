//! Seeded randomized checks of the algebraic invariants.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::{CliffordRep, MAX_DIM};
use crate::cstar::{k0_of_projection, AMatrix, Algebra, K0Class};
use crate::error::Result;
use crate::linalg::{apply_function, hermitian_eig, ComplexMatrix};

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .hermitian_part()
}

/// `exp(i s H)` for a random Hermitian `H`.
pub fn random_unitary(rng: &mut impl Rng, n: usize, s: f64) -> Result<ComplexMatrix> {
    let h = random_hermitian(rng, n);
    apply_function(&h, |l| C64::from_polar(1.0, s * l))
}

/// Projection onto `rank` columns of a random unitary.
pub fn random_projection(rng: &mut impl Rng, n: usize, rank: usize) -> Result<ComplexMatrix> {
    let u = random_unitary(rng, n, 3.0)?;
    let v = u.block(0, 0, n, rank);
    v.matmul(&v.adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    pub failures: usize,
    /// Largest residual seen; meaning depends on the check.
    pub worst: f64,
}

impl TrialSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// `c(v,ξ)² = ‖v‖² + ‖ξ‖²`, self-adjointness, oddness and the canonical
/// anticommutation relations, for random `(v, ξ)` and `n ≤ 4`.
pub fn clifford_trials(seed: u64, trials: usize, tol: f64) -> Result<TrialSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps = (1..=MAX_DIM).map(CliffordRep::new).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..trials {
        let rep = &reps[rng.gen_range(0..MAX_DIM)];
        let n = rep.rank();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c = rep.clifford_mult(&v, &xi)?;
        let r2: f64 = v.iter().chain(&xi).map(|a| a * a).sum();
        let mut sq = c.matmul(&c)?;
        sq.add_scaled(&ComplexMatrix::identity(rep.dim()), C64::new(-r2, 0.0));
        let odd = c.anticommutator(rep.grading())?.max_abs();
        let defect = sq
            .max_abs()
            .max(c.hermitian_deviation())
            .max(odd)
            .max(rep.relation_defect());
        worst = worst.max(defect);
        if defect > tol {
            failures += 1;
        }
    }
    Ok(TrialSummary { trials, failures, worst })
}

fn random_algebra(rng: &mut impl Rng) -> Result<Algebra> {
    let blocks = rng.gen_range(1..=3);
    Algebra::new((0..blocks).map(|_| rng.gen_range(1..=3)).collect())
}

fn conjugate(p: &AMatrix, u: &AMatrix) -> Result<AMatrix> {
    u.matmul(p)?.matmul(&u.adjoint())
}

/// `[u p u*] = [p]` and `[u_s p u_s*]` constant along `s ∈ [0, 1]`, for random
/// projections over random `⊕ M_k`; `worst` counts mismatching classes.
pub fn k0_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let alg = random_algebra(&mut rng)?;
        let m = rng.gen_range(1..=3);
        let mut proj = Vec::new();
        let mut hs = Vec::new();
        for &k in alg.block_sizes() {
            let n = m * k;
            let rank = rng.gen_range(0..=n);
            proj.push(random_projection(&mut rng, n, rank)?);
            hs.push(random_hermitian(&mut rng, n));
        }
        let p = AMatrix::new(alg.clone(), m, proj)?;
        let base: K0Class = k0_of_projection(&p)?;
        let mut ok = true;
        for step in 0..=10 {
            let s = step as f64 / 10.0;
            let us = hs
                .iter()
                .map(|h| hermitian_eig(h)?.apply_function(|l| C64::from_polar(1.0, 4.0 * s * l)))
                .collect::<Result<Vec<_>>>()?;
            let u = AMatrix::new(alg.clone(), m, us)?;
            if k0_of_projection(&conjugate(&p, &u)?)? != base {
                ok = false;
            }
        }
        if !ok {
            failures += 1;
        }
    }
    Ok(TrialSummary {
        trials,
        failures,
        worst: failures as f64,
    })
}

/// `‖S − V Λ V*‖_max` and `‖V*V − I‖_max` on random Hermitian matrices whose
/// sizes sweep `1..=max_dim`.
pub fn eigen_trials(seed: u64, trials: usize, max_dim: usize, tol: f64) -> Result<TrialSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for i in 0..trials {
        let n = if trials <= 1 {
            max_dim
        } else {
            1 + i * (max_dim - 1) / (trials - 1)
        };
        let s = random_hermitian(&mut rng, n);
        let sd = hermitian_eig(&s)?;
        let recon = (&sd.reconstruct() - &s).max_abs();
        let mut gram = sd.eigenvectors.adjoint_matmul(&sd.eigenvectors)?;
        gram.add_scaled(&ComplexMatrix::identity(n), C64::new(-1.0, 0.0));
        let r = recon.max(gram.max_abs());
        worst = worst.max(r);
        if r > tol {
            failures += 1;
        }
    }
    Ok(TrialSummary { trials, failures, worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_trial_batches_pass() {
        assert!(clifford_trials(1, 20, 1e-12).unwrap().passed());
        assert!(k0_trials(2, 10).unwrap().passed());
        let e = eigen_trials(3, 5, 30, 1e-10).unwrap();
        assert!(e.passed() && e.worst < 1e-12);
    }

    #[test]
    fn projections_have_requested_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_projection(&mut rng, 6, 2).unwrap();
        assert!((p.trace().re - 2.0).abs() < 1e-12);
        assert!((&p.matmul(&p).unwrap() - &p).max_abs() < 1e-12);
    }
}
