#![allow(dead_code)]

use hdtest::DataMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Normal data with an arbitrary mean offset and mixed column scales.
pub fn messy_data(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DataMatrix {
    let shift: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let scale: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0)).collect();
    let m = normal_matrix(rng, n, p);
    DataMatrix::new(DMatrix::from_fn(n, p, |i, j| m[(i, j)] * scale[j] + shift[j])).unwrap()
}

pub fn normal_data(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DataMatrix {
    DataMatrix::new(normal_matrix(rng, n, p)).unwrap()
}

/// Relative error, falling back to absolute error for tiny references.
pub fn rel_err(got: f64, want: f64) -> f64 {
    let d = (got - want).abs();
    if want.abs() < 1e-3 {
        d
    } else {
        d / want.abs()
    }
}

pub fn permute_rows(x: &DataMatrix, rng: &mut ChaCha8Rng) -> DataMatrix {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..x.n()).collect();
    idx.shuffle(rng);
    let v = x.values();
    DataMatrix::new(DMatrix::from_fn(x.n(), x.p(), |i, j| v[(idx[i], j)])).unwrap()
}

/// Mean and standard error of a sample.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let r = v.len() as f64;
    let m = v.iter().sum::<f64>() / r;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r - 1.0);
    (m, (var / r).sqrt())
}

/// Minimum of ‖β‖₁ over ‖Sβ − e_j‖_∞ ≤ γ by exhaustive vertex enumeration.
///
/// Every basic solution fixes a support T and |T| tight rows R (one face per
/// row), so it solves S[R,T] β_T = e_j[R] ± γ. All such systems are tried.
pub fn vertex_enumeration(s: &DMatrix<f64>, j: usize, gamma: f64) -> Option<f64> {
    let p = s.nrows();
    let feasible = |beta: &DVector<f64>| {
        let r = s * beta;
        (0..p).all(|i| (r[i] - if i == j { 1.0 } else { 0.0 }).abs() <= gamma + 1e-9)
    };
    let mut best: Option<f64> = if gamma >= 1.0 { Some(0.0) } else { None };
    for t in 1..=p {
        for support in subsets(p, t) {
            for rows in subsets(p, t) {
                let m = DMatrix::from_fn(t, t, |a, b| s[(rows[a], support[b])]);
                let Some(lu_inv) = m.clone().try_inverse() else { continue };
                for signs in 0..(1u32 << t) {
                    let rhs = DVector::from_fn(t, |a, _| {
                        let e = if rows[a] == j { 1.0 } else { 0.0 };
                        if signs & (1 << a) != 0 {
                            e + gamma
                        } else {
                            e - gamma
                        }
                    });
                    let bt = &lu_inv * rhs;
                    let mut beta = DVector::zeros(p);
                    for (b, &c) in support.iter().enumerate() {
                        beta[c] = bt[b];
                    }
                    if feasible(&beta) {
                        let obj: f64 = beta.iter().map(|v| v.abs()).sum();
                        if best.is_none_or(|v| obj < v) {
                            best = Some(obj);
                        }
                    }
                }
            }
        }
    }
    best
}

fn subsets(p: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(t);
    fn rec(start: usize, p: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for i in start..p {
            cur.push(i);
            rec(i + 1, p, t, cur, out);
            cur.pop();
        }
    }
    rec(0, p, t, &mut cur, &mut out);
    out
}
