//! Riesz transforms as Fourier multipliers on the torus, their squares and
//! signed sums, and operator norms on the matrix-weighted space `L²(W)`.
//!
//! Symbols (with `ξ = 0` annihilated):
//! - `R_i`: `-i ξ_i / |ξ|`
//! - `R_i²`: `-ξ_i² / |ξ|²`
//! - `Σ σ_j R_j²`: `-Σ σ_j ξ_j² / |ξ|²`
//!
//! Odd symbols are also zeroed on the Nyquist line of their axis, where the
//! lattice cannot tell `ξ` from `-ξ`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectral};
use crate::matlin::{self, CMatrix};
use crate::seeds::derive_seed;
use crate::weight_field::{VectorField, WeightField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A signed subset `{(j_i, σ_i)}` of the coordinate axes (zero-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignPattern {
    pub axes: Vec<usize>,
    pub signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(axes: Vec<usize>, signs: Vec<i8>, m: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() != signs.len() {
            return Err(Error::InvalidParameter("sign pattern needs equal, non-empty axes and signs".into()));
        }
        for (i, &a) in axes.iter().enumerate() {
            if a >= m {
                return Err(Error::InvalidParameter(format!("axis {a} out of range for m = {m}")));
            }
            if axes[..i].contains(&a) {
                return Err(Error::InvalidParameter(format!("axis {a} repeated")));
            }
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("signs must be +1 or -1".into()));
        }
        Ok(SignPattern { axes, signs })
    }

    /// Every non-empty subset of `0..m` with every choice of signs
    /// (`3^m - 1` patterns).
    pub fn all(m: usize) -> Vec<SignPattern> {
        let mut out = Vec::new();
        for code in 1..3usize.pow(m as u32) {
            let mut c = code;
            let mut axes = Vec::new();
            let mut signs = Vec::new();
            for axis in 0..m {
                match c % 3 {
                    1 => {
                        axes.push(axis);
                        signs.push(1);
                    }
                    2 => {
                        axes.push(axis);
                        signs.push(-1);
                    }
                    _ => {}
                }
                c /= 3;
            }
            out.push(SignPattern { axes, signs });
        }
        out
    }

    /// Compact label such as `+1-2` (one-based axes).
    pub fn label(&self) -> String {
        self.axes
            .iter()
            .zip(&self.signs)
            .map(|(a, s)| format!("{}{}", if *s > 0 { '+' } else { '-' }, a + 1))
            .collect()
    }
}

/// A Fourier multiplier tabulated on the dual lattice of a grid.
#[derive(Clone, Debug)]
pub struct MultiplierOp {
    pub grid: GridSpec,
    pub symbol: Vec<Complex64>,
}

impl MultiplierOp {
    pub fn from_fn(grid: GridSpec, f: impl Fn(usize, [f64; 2]) -> Complex64) -> Self {
        let symbol = (0..grid.count())
            .map(|q| if q == 0 { ZERO } else { f(q, grid.wavevector(q)) })
            .collect();
        MultiplierOp { grid, symbol }
    }

    pub fn riesz(grid: GridSpec, axis: usize) -> Result<Self> {
        check_axis(&grid, axis)?;
        Ok(Self::from_fn(grid, |q, xi| {
            if grid.on_nyquist(q, axis) {
                ZERO
            } else {
                let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                Complex64::new(0.0, -xi[axis] / norm)
            }
        }))
    }

    pub fn riesz_square(grid: GridSpec, axis: usize) -> Result<Self> {
        check_axis(&grid, axis)?;
        Ok(Self::from_fn(grid, |_, xi| {
            Complex64::new(-xi[axis] * xi[axis] / (xi[0] * xi[0] + xi[1] * xi[1]), 0.0)
        }))
    }

    /// `Σ σ_i R_{j_i}²`.
    pub fn signed_squares(grid: GridSpec, pattern: &SignPattern) -> Result<Self> {
        let pattern = SignPattern::new(pattern.axes.clone(), pattern.signs.clone(), grid.m)?;
        Ok(Self::from_fn(grid, |_, xi| {
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            let s: f64 = pattern
                .axes
                .iter()
                .zip(&pattern.signs)
                .map(|(&a, &s)| s as f64 * xi[a] * xi[a])
                .sum();
            Complex64::new(-s / n2, 0.0)
        }))
    }

    /// `Σ_i R_i²` over all axes, which is `-Id` on mean-zero fields.
    pub fn laplacian_sum(grid: GridSpec) -> Self {
        let pattern = SignPattern {
            axes: (0..grid.m).collect(),
            signs: vec![1; grid.m],
        };
        Self::signed_squares(grid, &pattern).expect("full pattern is valid")
    }

    pub fn adjoint(&self) -> Self {
        MultiplierOp {
            grid: self.grid,
            symbol: self.symbol.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.symbol.iter().all(|z| z.im == 0.0)
    }
}

fn check_axis(grid: &GridSpec, axis: usize) -> Result<()> {
    if axis >= grid.m {
        Err(Error::InvalidParameter(format!("axis {axis} out of range for m = {}", grid.m)))
    } else {
        Ok(())
    }
}

/// Applies `op` to every fiber component of `f`.
pub fn apply_multiplier(op: &MultiplierOp, f: &VectorField) -> Result<VectorField> {
    apply_with(&Spectral::new(op.grid), op, f)
}

fn apply_with(spectral: &Spectral, op: &MultiplierOp, f: &VectorField) -> Result<VectorField> {
    if f.grid != op.grid {
        return Err(Error::Dimension("operator and field live on different grids".into()));
    }
    f.check_finite()?;
    let mut out = f.clone();
    for k in 0..f.d {
        let mut comp = f.component(k);
        spectral.apply_symbol(&mut comp, |q| op.symbol[q]);
        out.set_component(k, &comp);
    }
    Ok(out)
}

/// `max_ξ |symbol(ξ)|`, the exact `L²` operator norm on the discrete torus.
pub fn unweighted_norm(op: &MultiplierOp) -> f64 {
    op.symbol.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Discrete pairing `h^m Σ_p (Tφ(p), ψ(p))`, conjugate-linear in `ψ`.
pub fn riesz_square_quadratic_form(op: &MultiplierOp, phi: &VectorField, psi: &VectorField) -> Result<Complex64> {
    phi.check_compatible(psi)?;
    let t_phi = apply_multiplier(op, phi)?;
    Ok(inner(&t_phi, psi) * phi.grid.cell_volume())
}

fn inner(a: &VectorField, b: &VectorField) -> Complex64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x * y.conj()).sum()
}

/// Parameters of the power iteration in [`weighted_norm`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub iters: usize,
    /// Relative change of the Rayleigh quotient that ends an iteration.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            iters: 2000,
            tol: 1e-8,
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// Iterations used by the restart that produced `value`.
    pub iterations: usize,
    /// Final relative Rayleigh-quotient change of that restart.
    pub gap: f64,
}

/// The conjugated operator `S = W^{1/2} ∘ T ∘ W^{-1/2}` on unweighted `L²`.
///
/// `‖T‖_{L²(W)} = ‖S‖`, since `u = W^{1/2} f` is an isometry from `L²(W)`
/// onto `L²`.
pub struct ConjugatedOperator {
    op: MultiplierOp,
    adjoint: MultiplierOp,
    spectral: Spectral,
    d: usize,
    sqrt_w: Vec<CMatrix>,
    sqrt_w_inv: Vec<CMatrix>,
}

impl ConjugatedOperator {
    pub fn new(op: &MultiplierOp, w: &WeightField) -> Result<Self> {
        if op.grid != w.grid {
            return Err(Error::Dimension("operator and weight live on different grids".into()));
        }
        let sqrt_w = w.values.iter().map(|m| matlin::sqrt_pd(m).map(|r| r.into_inner())).collect::<Result<Vec<_>>>()?;
        let sqrt_w_inv = w
            .inverse_values
            .iter()
            .map(|m| matlin::sqrt_pd(m).map(|r| r.into_inner()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConjugatedOperator {
            op: op.clone(),
            adjoint: op.adjoint(),
            spectral: Spectral::new(op.grid),
            d: w.d,
            sqrt_w,
            sqrt_w_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.grid.count() * self.d
    }

    pub fn grid(&self) -> GridSpec {
        self.op.grid
    }

    pub fn fiber_dim(&self) -> usize {
        self.d
    }

    fn pointwise(&self, mats: &[CMatrix], f: &VectorField) -> VectorField {
        let d = self.d;
        let mut out = f.clone();
        for (p, m) in mats.iter().enumerate() {
            let v = &f.data[p * d..(p + 1) * d];
            for i in 0..d {
                let mut acc = ZERO;
                for j in 0..d {
                    acc += m[(i, j)] * v[j];
                }
                out.data[p * d + i] = acc;
            }
        }
        out
    }

    /// `S u`.
    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        let f = self.pointwise(&self.sqrt_w_inv, u);
        let tf = apply_with(&self.spectral, &self.op, &f)?;
        Ok(self.pointwise(&self.sqrt_w, &tf))
    }

    /// `S* u`.
    pub fn apply_adjoint(&self, u: &VectorField) -> Result<VectorField> {
        let f = self.pointwise(&self.sqrt_w, u);
        let tf = apply_with(&self.spectral, &self.adjoint, &f)?;
        Ok(self.pointwise(&self.sqrt_w_inv, &tf))
    }
}

fn raw_norm(v: &VectorField) -> f64 {
    v.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Estimates `‖T‖_{L²(W)}` by power iteration on `S*S`, taking the maximum
/// over independently seeded restarts.
pub fn weighted_norm(op: &MultiplierOp, w: &WeightField, opts: &PowerOptions) -> Result<NormEstimate> {
    let s = ConjugatedOperator::new(op, w)?;
    let restarts = opts.restarts.max(1);
    let runs: Vec<Result<NormEstimate>> = (0..restarts)
        .into_par_iter()
        .map(|r| power_iteration(&s, opts, derive_seed(opts.seed, r as u64)))
        .collect();
    let mut best: Option<NormEstimate> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().map_or(true, |b| run.value > b.value) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn power_iteration(s: &ConjugatedOperator, opts: &PowerOptions, seed: u64) -> Result<NormEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = s.grid();
    let mut v = VectorField::zeros(grid, s.fiber_dim());
    for z in v.data.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z = Complex64::new(re, im);
    }
    let n0 = raw_norm(&v);
    v = v.scaled(Complex64::new(1.0 / n0, 0.0));

    let mut previous = f64::NAN;
    let mut gap = f64::INFINITY;
    for it in 1..=opts.iters {
        let u = s.apply(&v)?;
        let rayleigh = u.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let y = s.apply_adjoint(&u)?;
        let ny = raw_norm(&y);
        if ny == 0.0 || rayleigh == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                iterations: it,
                gap: 0.0,
            });
        }
        if it > 1 {
            gap = (rayleigh - previous).abs() / rayleigh;
            if gap < opts.tol {
                return Ok(NormEstimate {
                    value: rayleigh.sqrt(),
                    iterations: it,
                    gap,
                });
            }
        }
        previous = rayleigh;
        v = y.scaled(Complex64::new(1.0 / ny, 0.0));
    }
    Err(Error::NoConvergence { iters: opts.iters, gap })
}
