//! Shared test oracles, all independent of the library's solution paths:
//! coordinate-descent LASSO, cyclic Jacobi eigensolve, Householder QR solve,
//! a line fit, and fixture generators.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

pub fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| standard_normal(rng))
}

pub fn random_vector(len: usize, rng: &mut impl Rng) -> Array1<f64> {
    Array1::from_shape_fn(len, |_| standard_normal(rng))
}

/// Coordinate descent for `0.5 ||y - H beta||^2 + lambda ||beta||_1`, swept
/// until no coordinate moves more than `tol`.
pub fn cd_lasso(
    h: &Array2<f64>,
    y: &Array1<f64>,
    lambda: f64,
    tol: f64,
    max_sweeps: usize,
) -> Array1<f64> {
    let m = h.ncols();
    let mut beta = Array1::<f64>::zeros(m);
    let mut residual = y.clone();
    let col_norms: Vec<f64> = (0..m)
        .map(|j| {
            let c = h.column(j);
            c.dot(&c)
        })
        .collect();
    for _ in 0..max_sweeps {
        let mut max_move = 0.0_f64;
        for j in 0..m {
            if col_norms[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = h.column(j).dot(&residual) + col_norms[j] * old;
            let new = soft_threshold(rho, lambda) / col_norms[j];
            if new != old {
                let delta = new - old;
                let col = h.column(j).to_owned();
                residual.zip_mut_with(&col, |r, &c| *r -= delta * c);
                beta[j] = new;
                max_move = max_move.max(delta.abs());
            }
        }
        if max_move < tol {
            break;
        }
    }
    beta
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Dense 1-D minimization by exhaustive grid scan.
pub fn grid_min_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let mut best_x = lo;
    let mut best = f(lo);
    let mut x = lo;
    while x <= hi {
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
        x += step;
    }
    best_x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(sym: &Array2<f64>) -> Vec<f64> {
    let n = sym.nrows();
    let mut a = sym.clone();
    for _ in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigenvalues
}

/// Least-squares solve of `H beta = y` by Householder QR.
pub fn qr_solve(h: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let n = h.nrows();
    let m = h.ncols();
    assert!(n >= m, "QR oracle expects a tall matrix");
    let mut r = h.clone();
    let mut rhs = y.clone();
    for k in 0..m {
        let mut norm = 0.0;
        for i in k..n {
            norm += r[(i, k)] * r[(i, k)];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v = Array1::<f64>::zeros(n);
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let v_norm_sq = v.dot(&v);
        if v_norm_sq == 0.0 {
            continue;
        }
        for j in k..m {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * r[(i, j)];
            }
            let scale = 2.0 * dot / v_norm_sq;
            for i in k..n {
                r[(i, j)] -= scale * v[i];
            }
        }
        let mut dot = 0.0;
        for i in k..n {
            dot += v[i] * rhs[i];
        }
        let scale = 2.0 * dot / v_norm_sq;
        for i in k..n {
            rhs[i] -= scale * v[i];
        }
    }
    let mut beta = Array1::<f64>::zeros(m);
    for i in (0..m).rev() {
        let mut sum = rhs[i];
        for j in (i + 1)..m {
            sum -= r[(i, j)] * beta[j];
        }
        beta[i] = sum / r[(i, i)];
    }
    beta
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    num / den
}

/// Writes a synthetic nonlinear regression fixture: `n` samples of
/// `y = sin(x)/x` over `[lo, hi]` plus Gaussian noise, as a two-column CSV.
pub fn write_sinc_csv(path: &Path, lo: f64, hi: f64, n: usize, noise: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut file = std::fs::File::create(path).unwrap();
    writeln!(file, "x,y").unwrap();
    for _ in 0..n {
        let x: f64 = rng.random_range(lo..hi);
        let sinc = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
        let y = sinc + noise * standard_normal(&mut rng);
        writeln!(file, "{x},{y}").unwrap();
    }
}

/// In-memory version of the sinc fixture for tests that skip the CSV layer.
pub fn sinc_dataset(n: usize, noise: f64, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Array2::<f64>::zeros((n, 1));
    let mut ys = Array1::<f64>::zeros(n);
    for i in 0..n {
        let x: f64 = rng.random_range(-10.0..10.0);
        let sinc = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
        xs[(i, 0)] = x;
        ys[i] = sinc + noise * standard_normal(&mut rng);
    }
    (xs, ys)
}
