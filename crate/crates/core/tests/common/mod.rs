//! Oracles shared by the integration tests. Nothing here calls into the
//! crate's own numerics except for plain data types.
#![allow(dead_code)]

use std::f64::consts::PI;

use mwlab::grid::GridSpec;
use mwlab::matlin::CMatrix;
use mwlab::weight_field::WeightField;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Singular values by one-sided (Hestenes) Jacobi: orthogonalize column
/// pairs until every pair is numerically orthogonal; the column norms are
/// then the singular values.
pub fn hestenes_singular_values(a: &CMatrix) -> Vec<f64> {
    let mut a = a.clone();
    let n = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = a.column(i).iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a.column(j).iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = a.column(i).iter().zip(a.column(j).iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..a.nrows() {
                    let ai = a[(r, i)];
                    let bj = a[(r, j)] * phase.conj();
                    a[(r, i)] = ai * cs - bj * sn;
                    a[(r, j)] = ai * sn + bj * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|k| a.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn hestenes_norm(a: &CMatrix) -> f64 {
    hestenes_singular_values(a)[0]
}

/// Hermitian square root through nalgebra's eigensolver.
pub fn nalgebra_sqrt(a: &CMatrix) -> CMatrix {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(l.max(0.0).sqrt())));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub fn random_matrix(d: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// `U diag(λ) U*` with `λ` log-uniform in `[1/cond, 1]`, `U` from a QR of a
/// Gaussian matrix.
pub fn random_hpd(d: usize, cond: f64, rng: &mut impl Rng) -> CMatrix {
    let q = random_matrix(d, rng).qr().q();
    let lam: Vec<f64> = (0..d).map(|_| (-rng.gen::<f64>() * cond.ln()).exp()).collect();
    let diag = DMatrix::from_fn(d, d, |i, j| if i == j { c(lam[i]) } else { c(0.0) });
    let m = &q * diag * q.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Dense matrix of a Fourier multiplier on the grid, built from the explicit
/// DFT sum `T_{pq} = N^{-1} Σ_k σ(k) e^{i⟨ξ_k, x_p - x_q⟩}`.
pub fn dense_multiplier(grid: &GridSpec, symbol: &[Complex64]) -> CMatrix {
    let n = grid.count();
    let modes: Vec<([f64; 2], Complex64)> = (0..n).map(|k| (grid.wavevector(k), symbol[k])).collect();
    let pts: Vec<[f64; 2]> = (0..n).map(|p| grid.coords(p)).collect();
    CMatrix::from_fn(n, n, |p, q| {
        let dx = [pts[p][0] - pts[q][0], pts[p][1] - pts[q][1]];
        let mut acc = c(0.0);
        for (xi, s) in &modes {
            if *s != c(0.0) {
                acc += s * Complex64::from_polar(1.0, xi[0] * dx[0] + xi[1] * dx[1]);
            }
        }
        acc / n as f64
    })
}

/// `W^{1/2} (T ⊗ I_d) W^{-1/2}` on the `N·d`-dimensional point-major space.
pub fn dense_conjugated(grid: &GridSpec, symbol: &[Complex64], w: &WeightField) -> CMatrix {
    let d = w.d;
    let n = grid.count();
    let t = dense_multiplier(grid, symbol);
    let sq: Vec<CMatrix> = w.values.iter().map(|m| nalgebra_sqrt(m)).collect();
    let sqi: Vec<CMatrix> = w.inverse_values.iter().map(|m| nalgebra_sqrt(m)).collect();
    let mut out = CMatrix::zeros(n * d, n * d);
    for p in 0..n {
        for q in 0..n {
            if t[(p, q)] == c(0.0) {
                continue;
            }
            let block = &sq[p] * &sqi[q] * t[(p, q)];
            for i in 0..d {
                for j in 0..d {
                    out[(p * d + i, q * d + j)] = block[(i, j)];
                }
            }
        }
    }
    out
}

/// Dawson's integral `F(x) = e^{-x²}∫₀^x e^{t²} dt`, from the ODE
/// `F' = 1 - 2xF` integrated by RK4 (step ≤ 1e-3) for `|x| ≤ 12`, and the
/// asymptotic series beyond.
pub fn dawson(x: f64) -> f64 {
    if x < 0.0 {
        return -dawson(-x);
    }
    if x > 12.0 {
        let x2 = x * x;
        let mut term = 1.0 / (2.0 * x);
        let mut sum = term;
        for k in 1..12 {
            term *= (2 * k - 1) as f64 / (2.0 * x2);
            sum += term;
        }
        return sum;
    }
    let steps = ((x / 1e-3).ceil() as usize).max(1);
    let h = x / steps as f64;
    let f = |t: f64, y: f64| 1.0 - 2.0 * t * y;
    let (mut t, mut y) = (0.0, 0.0);
    for _ in 0..steps {
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, y + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, y + h / 2.0 * k2);
        let k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    y
}

/// `F'(y) = 1 - 2yF(y)`, with its own asymptotic series for large `y` to
/// avoid cancellation.
pub fn dawson_derivative(y: f64) -> f64 {
    let a = y.abs();
    if a > 12.0 {
        let y2 = y * y;
        // 1 - 2yF = -Σ_{k≥1} (2k-1)!! / (2^k y^{2k})
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..12 {
            term *= (2 * k - 1) as f64 / (2.0 * y2);
            sum -= term;
        }
        return sum;
    }
    1.0 - 2.0 * y * dawson(y)
}

/// Hilbert transform (symbol `-i sgn ξ`) of `d/dx e^{-x²/(2s²)}` on the line.
pub fn hilbert_gaussian_derivative(x: f64, s: f64) -> f64 {
    let scale = s * 2f64.sqrt();
    2.0 / PI.sqrt() * dawson_derivative(x / scale) / scale
}

/// Periodic version on `[0, L)`: the image sum over `|k| ≤ K` plus the tail
/// of the leading `-(∫f)/(π x²)` decay.
pub fn periodic_hilbert_gaussian_derivative(x: f64, s: f64, l: f64, images: i64) -> f64 {
    let mut acc = 0.0;
    for k in -images..=images {
        acc += hilbert_gaussian_derivative(x + k as f64 * l, s);
    }
    let mass = s * (2.0 * PI).sqrt();
    let kk = images as f64 + 0.5;
    // Σ_{|k|>K} 1/(x + kL)² ≈ 1/(L(LK' + x)) + 1/(L(LK' - x))
    let tail = 1.0 / (l * (l * kk + x)) + 1.0 / (l * (l * kk - x));
    acc - mass / PI * tail
}

/// Periodized heat kernel `(4πt)^{-m/2} Σ_images e^{-|x|²/4t}`.
pub fn periodic_heat_kernel(dx: [f64; 2], t: f64, grid: &GridSpec) -> f64 {
    let l = grid.length;
    let axis = |v: f64| -> f64 {
        (-6..=6)
            .map(|k| {
                let y = v + k as f64 * l;
                (-y * y / (4.0 * t)).exp()
            })
            .sum::<f64>()
            / (4.0 * PI * t).sqrt()
    };
    if grid.m == 1 {
        axis(dx[0])
    } else {
        axis(dx[0]) * axis(dx[1])
    }
}
