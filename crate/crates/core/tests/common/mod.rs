//! Reference implementations used to cross-check the library. Deliberately
//! naive: nested `Vec`s, textbook loops, no shared code with the crate.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sgmc_core::DenseMatrix;

pub fn seeded_gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn to_nested(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `AᵀA` by explicit triple loop with compensated accumulation.
pub fn gram(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a[0].len();
    let mut g = vec![vec![0.0; n]; n];
    for p in 0..n {
        for q in 0..n {
            g[p][q] = compensated_sum(a.iter().map(|row| row[p] * row[q]));
        }
    }
    g
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(sym: &[Vec<f64>]) -> Vec<f64> {
    let n = sym.len();
    let mut a = sym.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Singular values as square roots of the eigenvalues of `AᵀA` (or `AAᵀ`
/// for wide inputs), descending.
pub fn singular_values_oracle(a: &DenseMatrix) -> Vec<f64> {
    let nested = to_nested(a);
    let nested = if a.rows() >= a.cols() { nested } else { to_nested(&a.transpose()) };
    jacobi_eigenvalues(&gram(&nested)).into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// `trace(AᵀB)` through the full product matrix.
pub fn trace_of_product(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let (a, b) = (to_nested(a), to_nested(b));
    let (m, n) = (a.len(), a[0].len());
    let mut prod = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            prod[i][j] = (0..m).map(|k| a[k][i] * b[k][j]).sum();
        }
    }
    (0..n).map(|i| prod[i][i]).sum()
}

pub fn max_residual_scan(a: &DenseMatrix, m: &DenseMatrix, entries: &[(usize, usize)]) -> f64 {
    let mut best = 0.0f64;
    for &(i, j) in entries {
        let r = (a[(i, j)] - m[(i, j)]).abs();
        if r > best {
            best = r;
        }
    }
    best
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

/// Clean instance plus `count` gross corruptions of magnitude
/// `factor · rms(M on Ω) · (1 + U[0,1))` with random sign, planted on Ω.
pub fn planted_instance(
    n: usize,
    rank: usize,
    density: f64,
    count: usize,
    factor: f64,
    seed: u64,
) -> (sgmc_core::Instance, sgmc_core::MaskedMatrix, Vec<(usize, usize)>) {
    use rand::Rng;
    let spec = sgmc_core::InstanceSpec {
        n,
        rank,
        density,
        error_rate: 0.0,
        error_model: sgmc_core::ErrorModel::AdditiveGaussian,
        additive: true,
        seed,
    };
    let inst = sgmc_core::synthgen::generate(&spec).unwrap();
    let mask = inst.observed.mask().clone();
    let rms = inst.observed.values().frobenius_norm() / (mask.len() as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut picks = rand::seq::index::sample(&mut rng, mask.len(), count).into_vec();
    picks.sort_unstable();
    let support: Vec<_> = picks.iter().map(|&p| mask.entries()[p]).collect();
    let mut values = inst.observed.values().clone();
    for &idx in &support {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[idx] += sign * factor * rms * (1.0 + rng.random::<f64>());
    }
    let m = sgmc_core::MaskedMatrix::new(values, mask).unwrap();
    (inst, m, support)
}
