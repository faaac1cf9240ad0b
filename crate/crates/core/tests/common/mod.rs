//! Straight-transcription reference implementations.
//!
//! Matrices here are plain row-major `Vec<Vec<Complex64>>` and every
//! routine is written out by hand, so nothing is shared with the library's
//! linear algebra.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use mmwave_hybrid::linalg::CMat;
use num_complex::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

pub fn to_dense(m: &CMat) -> Dense {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

pub fn adjoint(a: &Dense) -> Dense {
    (0..a[0].len())
        .map(|c| a.iter().map(|row| row[c].conj()).collect())
        .collect()
}

pub fn identity(n: usize) -> Dense {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

/// Solves `A X = B` by Gauss-Jordan elimination with partial pivoting.
pub fn solve(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Dense = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().chain(rb).copied().collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].norm().total_cmp(&aug[y][col].norm()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != Complex64::new(0.0, 0.0) {
                    for c in 0..n + m {
                        let delta = f * aug[col][c];
                        aug[row][c] -= delta;
                    }
                }
            }
        }
    }
    aug.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &Dense) -> Complex64 {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
        if pivot != col {
            m.swap(col, pivot);
            d = -d;
        }
        let p = m[col][col];
        d *= p;
        for row in col + 1..n {
            let f = m[row][col] / p;
            for c in col..n {
                let delta = f * m[col][c];
                m[row][c] -= delta;
            }
        }
    }
    d
}

/// `log2 det(I + P/N_s R^-1 G G^H)` with `G = W^H H F`, `R = sigma^2 W^H W`.
pub fn rate_by_determinant(h: &Dense, f: &Dense, w: &Dense, power: f64, noise_var: f64) -> f64 {
    let n_s = f[0].len();
    let wh = adjoint(w);
    let g = matmul(&matmul(&wh, h), f);
    let r: Dense = matmul(&wh, w)
        .into_iter()
        .map(|row| row.into_iter().map(|z| z * noise_var).collect())
        .collect();
    let ggh = matmul(&g, &adjoint(&g));
    let x = solve(&r, &ggh);
    let scale = power / n_s as f64;
    let mut m = identity(n_s);
    for i in 0..n_s {
        for j in 0..n_s {
            m[i][j] += x[i][j] * scale;
        }
    }
    det(&m).norm().log2()
}

/// `(H H^H + reg I)^-1 H`, then unit-norm columns.
pub fn mmse_columns(h: &Dense, reg: f64) -> Dense {
    let mut gram = matmul(h, &adjoint(h));
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += Complex64::new(reg, 0.0);
    }
    let mut g = solve(&gram, h);
    for c in 0..g[0].len() {
        let norm = g.iter().map(|row| row[c].norm_sqr()).sum::<f64>().sqrt();
        for row in g.iter_mut() {
            row[c] /= norm;
        }
    }
    g
}

fn rc(t: f64, ts: f64, beta: f64) -> f64 {
    let x = t / ts;
    let sinc = |u: f64| if u == 0.0 { 1.0 } else { (PI * u).sin() / (PI * u) };
    if beta > 0.0 && ((2.0 * beta * x).abs() - 1.0).abs() < 1e-10 {
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    sinc(x) * (PI * beta * x).cos() / (1.0 - (2.0 * beta * x).powi(2))
}

pub struct PathParams<'a> {
    pub gains: &'a [Complex64],
    pub delays: &'a [f64],
    pub aoa: &'a [f64],
    pub aod: &'a [f64],
}

/// Literal double sum over delay taps and paths for every entry of every `H[k]`.
pub fn channel_by_double_loop(p: &PathParams<'_>, n: usize, n_r: usize, n_t: usize, ts: f64, beta: f64) -> Vec<Dense> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut h = vec![vec![Complex64::new(0.0, 0.0); n_t]; n_r];
        for d in 0..n {
            for l in 0..p.gains.len() {
                let pulse = rc(d as f64 * ts - p.delays[l], ts, beta);
                let phase = -2.0 * PI * (k as f64) * (d as f64) / n as f64;
                let coef = p.gains[l] * pulse * Complex64::new(phase.cos(), phase.sin());
                for r in 0..n_r {
                    for t in 0..n_t {
                        let ar = PI * r as f64 * p.aoa[l].sin();
                        let at = PI * t as f64 * p.aod[l].sin();
                        h[r][t] += coef * Complex64::new((ar - at).cos(), (ar - at).sin());
                    }
                }
            }
        }
        out.push(h);
    }
    out
}

pub fn rel_error(a: &Dense, b: &Dense) -> f64 {
    let mut diff = 0.0;
    let mut base = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            diff += (x - y).norm_sqr();
            base += y.norm_sqr();
        }
    }
    (diff / base).sqrt()
}

fn residual_after_fit(v: &Dense, cols: &[usize], y: &Dense) -> f64 {
    let a: Dense = v.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect();
    let ah = adjoint(&a);
    let x = solve(&matmul(&ah, &a), &matmul(&ah, y));
    let fit = matmul(&a, &x);
    let mut r = 0.0;
    for (ry, rf) in y.iter().zip(&fit) {
        for (p, q) in ry.iter().zip(rf) {
            r += (p - q).norm_sqr();
        }
    }
    r.sqrt()
}

/// Support of size `k` (1 or 2) whose least-squares fit of `y` by columns of
/// `v` leaves the smallest residual, found by trying every subset.
pub fn best_subset(v: &Dense, y: &Dense, k: usize) -> Vec<usize> {
    let g = v[0].len();
    let mut best = (f64::INFINITY, Vec::new());
    let mut consider = |cols: Vec<usize>| {
        let r = residual_after_fit(v, &cols, y);
        if r < best.0 {
            best = (r, cols);
        }
    };
    match k {
        1 => (0..g).for_each(|a| consider(vec![a])),
        2 => {
            for a in 0..g {
                for b in a + 1..g {
                    consider(vec![a, b]);
                }
            }
        }
        _ => panic!("exhaustive search only for k <= 2"),
    }
    best.1
}
