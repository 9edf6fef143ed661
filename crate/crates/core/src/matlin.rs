//! Small dense Hermitian linear algebra.
//!
//! Everything here works on `d × d` complex matrices with `d ≤ 8`. The
//! eigensolver is a cyclic complex Jacobi scheme; all matrix functions
//! (square root, inverse, exponential) are built on top of it. Inputs are
//! symmetrized as `(a + a*)/2` before any decomposition so that sub-tolerance
//! asymmetry from FFT round-off never leaks into the spectrum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative accuracy contract for decompositions.
pub const TOL_LIN: f64 = 1e-10;
/// Absolute slack used by positive-semidefiniteness checks.
pub const TOL_PSD: f64 = 1e-9;
/// Largest condition number accepted for a weight sample.
pub const COND_CAP: f64 = 1e8;

const MAX_SWEEPS: usize = 64;

/// A validated Hermitian positive-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermPd(CMatrix);

impl HermPd {
    /// Validates Hermitian symmetry (within [`TOL_LIN`]) and strict positivity.
    /// The stored matrix is the symmetrized input.
    pub fn new(a: CMatrix) -> Result<Self> {
        check_square(&a)?;
        check_hermitian(&a)?;
        let a = symmetrize(&a);
        let eig = eigh(&a)?;
        let min = eig.min();
        if !(min > 0.0) {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(HermPd(a))
    }

    pub fn identity(d: usize) -> Self {
        HermPd(CMatrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let m = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        HermPd::new(m)
    }

    /// Wraps a matrix the caller has constructed to be Hermitian positive
    /// definite (for example `V·diag(λ)·V*` with `λ > 0`).
    pub(crate) fn new_unchecked(a: CMatrix) -> Self {
        HermPd(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl Deref for HermPd {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl AsRef<CMatrix> for HermPd {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order. Each eigenvector (a column of
/// `vectors`) has its phase fixed so that its largest-modulus entry is real
/// and positive, ties going to the lowest index.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Smallest distance between consecutive eigenvalues, `+∞` for `d = 1`.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// `V·diag(f(λ))·V*`, exactly Hermitian.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.values.len();
        let mut out = CMatrix::zeros(d, d);
        for (k, &lambda) in self.values.iter().enumerate() {
            let fl = f(lambda);
            let col = self.vectors.column(k);
            for i in 0..d {
                let vi = col[i] * fl;
                for j in 0..d {
                    out[(i, j)] += vi * col[j].conj();
                }
            }
        }
        symmetrize(&out)
    }
}

fn check_square(a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `max |a - a*| / max |a|`.
pub fn hermitian_asymmetry(a: &CMatrix) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    check_finite(a)?;
    let asym = hermitian_asymmetry(a);
    if asym > TOL_LIN {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// `(a + a*) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Cyclic Jacobi eigendecomposition of the Hermitian part of `a`.
pub fn eigh(a: &CMatrix) -> Result<HermitianEigen> {
    check_square(a)?;
    check_finite(a)?;
    let n = a.nrows();
    let mut m = symmetrize(a);
    let mut v = CMatrix::identity(n, n);
    let scale = m.norm();

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-16 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        canonicalize_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let n = m.nrows();
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // U = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane.
    let g00 = Complex64::new(c, 0.0);
    let g01 = Complex64::new(s, 0.0);
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;

    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * g00 + mkq * g10;
        m[(k, q)] = mkp * g01 + mkq * g11;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = g00.conj() * mpk + g10.conj() * mqk;
        m[(q, k)] = g01.conj() * mpk + g11.conj() * mqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
}

/// Rotates `col` so its largest-modulus entry is real positive.
pub(crate) fn canonicalize_phase(col: &mut CVector) {
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let z = col[pivot];
    let rot = z.conj() / z.norm();
    for e in col.iter_mut() {
        *e *= rot;
    }
}

/// Principal square root of a Hermitian positive-definite matrix.
pub fn sqrt_pd(a: &CMatrix) -> Result<HermPd> {
    check_square(a)?;
    check_hermitian(a)?;
    let eig = eigh(a)?;
    if !(eig.min() > 0.0) {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(HermPd::new_unchecked(eig.map(f64::sqrt)))
}

/// Inverse of a Hermitian positive-definite matrix, refusing condition
/// numbers above [`COND_CAP`].
pub fn inverse_pd(a: &CMatrix) -> Result<HermPd> {
    check_square(a)?;
    check_hermitian(a)?;
    let eig = eigh(a)?;
    if !(eig.min() > 0.0) {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min(),
        });
    }
    let cond = eig.max() / eig.min();
    if cond > COND_CAP {
        return Err(Error::IllConditioned {
            cond,
            cap: COND_CAP,
        });
    }
    Ok(HermPd::new_unchecked(eig.map(|l| 1.0 / l)))
}

/// Largest singular value, computed as the square root of the top eigenvalue
/// of `a* a`.
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let gram = a.adjoint() * a;
    Ok(eigh(&gram)?.max().max(0.0).sqrt())
}

/// Ratio of extreme eigenvalues of a Hermitian positive-definite matrix.
pub fn condition_number(a: &CMatrix) -> Result<f64> {
    let eig = eigh(a)?;
    if !(eig.min() > 0.0) {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.max() / eig.min())
}

pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    Ok(eigh(a)?.min())
}

/// `true` iff the smallest eigenvalue of the Hermitian part is at least
/// `-TOL_PSD`. Non-finite input is never PSD.
pub fn psd_check(a: &CMatrix) -> bool {
    match eigh(a) {
        Ok(eig) => eig.min() >= -TOL_PSD,
        Err(_) => false,
    }
}

/// Matrix exponential of a Hermitian matrix; always positive definite.
pub fn exp_hermitian(a: &CMatrix) -> Result<HermPd> {
    check_hermitian(a)?;
    Ok(HermPd::new_unchecked(eigh(a)?.map(f64::exp)))
}

/// `max_ij |a_ij - b_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(values: &[f64]) -> CMatrix {
        let d = values.len();
        CMatrix::from_fn(d, d, |i, j| if i == j { c(values[i]) } else { c(0.0) })
    }

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_pd(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        let b = random_matrix(rng, d);
        &b * b.adjoint() + CMatrix::identity(d, d).scale(0.1)
    }

    #[test]
    fn identity_and_diagonal_square_roots() {
        for d in 1..=4 {
            let id = CMatrix::identity(d, d);
            assert!(max_abs_diff(&sqrt_pd(&id).unwrap(), &id) < 1e-15);
        }
        let r = sqrt_pd(&diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&r, &diag(&[2.0, 3.0])) < 1e-14);
    }

    #[test]
    fn spectral_norm_trivial_cases() {
        assert!((spectral_norm(&CMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_norm(&diag(&[1.0, 3.0])).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_trivial_cases() {
        let id = CMatrix::identity(2, 2);
        assert!(max_abs_diff(&inverse_pd(&id).unwrap(), &id) < 1e-15);
        let inv = inverse_pd(&diag(&[2.0, 0.5])).unwrap();
        assert!(max_abs_diff(&inv, &diag(&[0.5, 2.0])) < 1e-14);
    }

    #[test]
    fn inverse_refuses_ill_conditioned() {
        let err = inverse_pd(&diag(&[1.0, 1e-9])).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }

    #[test]
    fn sqrt_rejects_non_hermitian_and_indefinite() {
        let mut a = CMatrix::identity(2, 2);
        a[(0, 1)] = c(0.5);
        assert!(matches!(sqrt_pd(&a), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            sqrt_pd(&diag(&[1.0, -0.1])),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn psd_check_cases() {
        let mut rank_def = CMatrix::identity(2, 2);
        rank_def[(0, 0)] = c(0.0);
        assert!(psd_check(&rank_def));
        assert!(!psd_check(&diag(&[1.0, -0.1])));

        // X·s − x·x* with x = 0.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_pd(&mut rng, 3);
        assert!(psd_check(&s.scale(0.7)));
        assert!(psd_check(&s.scale(0.0)));
    }

    #[test]
    fn eigenvectors_are_canonical_and_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=6 {
            let a = random_pd(&mut rng, d);
            let eig = eigh(&a).unwrap();
            let v = &eig.vectors;
            let gram = v.adjoint() * v;
            assert!(max_abs_diff(&gram, &CMatrix::identity(d, d)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            for k in 0..d {
                let col = v.column(k);
                let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let pivot = col.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap();
                assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
            }
            let recon = eig.map(|l| l);
            assert!(max_abs_diff(&recon, &a) < 1e-12 * a.norm());
        }
    }

    #[test]
    fn eigh_matches_nalgebra_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=8 {
            let a = random_pd(&mut rng, d);
            let ours = eigh(&a).unwrap();
            let mut theirs: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in ours.values.iter().zip(theirs.iter()) {
                assert!((x - y).abs() < 1e-11 * ours.max(), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMatrix::zeros(3, 3);
        assert!(max_abs_diff(&exp_hermitian(&z).unwrap(), &CMatrix::identity(3, 3)) < 1e-15);
    }
}
