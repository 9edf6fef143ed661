//! The Littlewood–Paley functional
//! `2∫₀^∞∫ Σ_i |(∂_i f^h, ∂_i g^h)| dx dt`, weighted `L²` norms, the
//! Riesz-square duality identity and the Bellman trajectory
//! `(x, t) ↦ ((Wf,f)^h, (W⁻¹g,g)^h, f^h, g^h, W^h, (W⁻¹)^h)`.
//!
//! The time integral uses the nodes of a [`TimeGrid`] on `[t_min, t_max]`,
//! a trapezoid panel on `[0, t_min]` through the undamped derivative at
//! `t = 0`, and an analytic bound for `(t_max, ∞)`: every mean-zero mode
//! decays at least like `e^{-t|ξ_min|²}`, so the tail is at most
//! `‖∇f^h(t_max)‖·‖∇g^h(t_max)‖ / |ξ_min|²`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bellman_probe::{in_domain, BellmanPoint, DomainCheck};
use crate::error::{Error, Result};
use crate::grid::Spectral;
use crate::heat_ext::{self, HeatExtension, TimeGrid};
use crate::matlin::{self, CMatrix, HermPd};
use crate::riesz_ops::{riesz_square_quadratic_form, MultiplierOp};
use crate::weight_field::{ScalarField, VectorField, WeightField};

/// Largest admissible `|mean|` relative to the field's `L²` norm.
pub const MEAN_TOL: f64 = 1e-12;
/// Largest admissible truncation estimate relative to the value.
pub const TAIL_TOL: f64 = 0.01;
/// Duality residual above which [`DualityReport::passed`] is false.
pub const DUALITY_TOL: f64 = 1e-3;

/// Default number of time nodes for this module.
pub const DEFAULT_TIME_NODES: usize = 96;

#[derive(Clone, Debug, PartialEq)]
pub struct LpLhs {
    pub value: f64,
    /// Estimated error: head-panel deviation plus the analytic tail.
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LPReport {
    pub lhs: f64,
    pub rhs_f: f64,
    pub rhs_g: f64,
    pub ratio: f64,
    pub tail_bound: f64,
}

fn check_mean_zero(f: &VectorField) -> Result<()> {
    let mean = f.mean();
    let mean_norm = mean.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // L² norm of the constant part over the torus
    let vol = f.grid.length.powi(f.grid.m as i32);
    if mean_norm * vol.sqrt() > MEAN_TOL * f.l2_norm() {
        return Err(Error::NonZeroMean { mean: mean_norm });
    }
    Ok(())
}

fn check_pair(f: &VectorField, g: &VectorField) -> Result<()> {
    f.check_compatible(g)?;
    f.check_finite()?;
    g.check_finite()
}

/// Per-height pairing sums for one `t`: `h^m Σ_p Σ_i κ((∂_i f^h, ∂_i g^h)(p))`.
fn gradient_pairing(
    ef: &HeatExtension<VectorField>,
    eg: &HeatExtension<VectorField>,
    t: f64,
    kernel: impl Fn(Complex64) -> Complex64,
) -> Result<Complex64> {
    let grid = ef.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for axis in 0..grid.m {
        let df = ef.gradient(t, axis)?;
        let dg = eg.gradient(t, axis)?;
        let d = df.d;
        for (a, b) in df.data.chunks(d).zip(dg.data.chunks(d)) {
            let pair: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            acc += kernel(pair);
        }
    }
    Ok(acc * grid.cell_volume())
}

fn gradient_norm(e: &HeatExtension<VectorField>, t: f64) -> Result<f64> {
    let grid = e.grid();
    let mut acc = 0.0;
    for axis in 0..grid.m {
        acc += e.gradient(t, axis)?.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok((acc * grid.cell_volume()).sqrt())
}

struct Quadrature {
    value: Complex64,
    head_error: f64,
    tail: f64,
}

fn integrate(
    f: &VectorField,
    g: &VectorField,
    tgrid: &TimeGrid,
    kernel: impl Fn(Complex64) -> Complex64 + Sync,
) -> Result<Quadrature> {
    let spectral = Spectral::new(f.grid);
    let ef = HeatExtension::with_spectral(f, spectral.clone());
    let eg = HeatExtension::with_spectral(g, spectral);
    let values = tgrid
        .nodes
        .par_iter()
        .map(|&t| gradient_pairing(&ef, &eg, t, &kernel))
        .collect::<Result<Vec<_>>>()?;
    let body: Complex64 = values.iter().zip(&tgrid.weights).map(|(v, w)| v * *w).sum();
    let at_zero = gradient_pairing(&ef, &eg, 0.0, &kernel)?;
    let head = (at_zero + values[0]) * (0.5 * tgrid.t_min);
    let head_error = 0.5 * tgrid.t_min * (at_zero - values[0]).norm();
    let xi = f.grid.min_frequency();
    let tail = gradient_norm(&ef, tgrid.t_max)? * gradient_norm(&eg, tgrid.t_max)? / (xi * xi);
    Ok(Quadrature {
        value: body + head,
        head_error,
        tail,
    })
}

/// `2∫∫ Σ_i |(∂_i f^h, ∂_i g^h)|` for mean-zero `f`, `g`.
pub fn lp_lhs(f: &VectorField, g: &VectorField, tgrid: &TimeGrid) -> Result<LpLhs> {
    check_pair(f, g)?;
    check_mean_zero(f)?;
    check_mean_zero(g)?;
    let q = integrate(f, g, tgrid, |z| Complex64::new(z.norm(), 0.0))?;
    let value = 2.0 * q.value.re;
    let tail_bound = 2.0 * q.head_error + q.tail;
    if tail_bound > TAIL_TOL * value {
        return Err(Error::TailTooLarge { bound: tail_bound, value });
    }
    Ok(LpLhs { value, tail_bound })
}

/// `sqrt(h^m Σ_p (W(p) f(p), f(p)))`.
pub fn weighted_l2_norm(w: &WeightField, f: &VectorField) -> Result<f64> {
    Ok(heat_ext::pairing_field(w, f)?.integral().re.max(0.0).sqrt())
}

/// `sqrt(h^m Σ_p (W(p)⁻¹ g(p), g(p)))`.
pub fn inverse_weighted_l2_norm(w: &WeightField, g: &VectorField) -> Result<f64> {
    Ok(heat_ext::inverse_pairing_field(w, g)?.integral().re.max(0.0).sqrt())
}

/// Both sides of the weighted Littlewood–Paley estimate for `(W, f, g)`.
pub fn lp_report(w: &WeightField, f: &VectorField, g: &VectorField, tgrid: &TimeGrid) -> Result<LPReport> {
    let lhs = lp_lhs(f, g, tgrid)?;
    let rhs_f = weighted_l2_norm(w, f)?;
    let rhs_g = inverse_weighted_l2_norm(w, g)?;
    let denom = rhs_f * rhs_g;
    let ratio = if denom > 0.0 { lhs.value / denom } else { 0.0 };
    Ok(LPReport {
        lhs: lhs.value,
        rhs_f,
        rhs_g,
        ratio,
        tail_bound: lhs.tail_bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualityReport {
    /// `∫ R_i²φ·conj(ψ)` from the Fourier multiplier.
    pub multiplier_side: Complex64,
    /// `-2∫∫ ∂_iφ^h·conj(∂_iψ^h)` from the time quadrature.
    pub heat_side: Complex64,
    pub residual: f64,
    pub tail_bound: f64,
    pub passed: bool,
}

/// Compares `∫ R_i²φ·ψ̄` with `-2∫∫ ∂_iφ^h·∂_iψ^h‾` for mean-zero `φ`, `ψ`.
pub fn duality_check(phi: &VectorField, psi: &VectorField, axis: usize, tgrid: &TimeGrid) -> Result<DualityReport> {
    check_pair(phi, psi)?;
    check_mean_zero(phi)?;
    check_mean_zero(psi)?;
    let grid = phi.grid;
    if axis >= grid.m {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range for m = {}", grid.m)));
    }
    let op = MultiplierOp::riesz_square(grid, axis)?;
    let multiplier_side = riesz_square_quadratic_form(&op, phi, psi)?;
    let spectral = Spectral::new(grid);
    let ep = HeatExtension::with_spectral(phi, spectral.clone());
    let eq = HeatExtension::with_spectral(psi, spectral);
    let one_axis = |t: f64| -> Result<Complex64> {
        let a = ep.gradient(t, axis)?;
        let b = eq.gradient(t, axis)?;
        let s: Complex64 = a.data.iter().zip(&b.data).map(|(x, y)| x * y.conj()).sum();
        Ok(s * grid.cell_volume())
    };
    let values = tgrid.nodes.par_iter().map(|&t| one_axis(t)).collect::<Result<Vec<_>>>()?;
    let body: Complex64 = values.iter().zip(&tgrid.weights).map(|(v, w)| v * *w).sum();
    let head = (one_axis(0.0)? + values[0]) * (0.5 * tgrid.t_min);
    let heat_side = (body + head) * -2.0;
    let xi = grid.min_frequency();
    let tail_bound = gradient_norm(&ep, tgrid.t_max)? * gradient_norm(&eq, tgrid.t_max)? / (xi * xi);
    let floor = 1e-12 * phi.l2_norm() * psi.l2_norm();
    let scale = multiplier_side.norm().max(heat_side.norm()).max(floor);
    let residual = if scale > 0.0 {
        (multiplier_side - heat_side).norm() / scale
    } else {
        0.0
    };
    Ok(DualityReport {
        multiplier_side,
        heat_side,
        residual,
        tail_bound,
        passed: residual <= DUALITY_TOL,
    })
}

/// Heights in `tgrid` at which the discrete heat kernel of the grid is
/// nonnegative (up to round-off), so that heat averages at grid points are
/// genuine positive averages.
pub fn positive_kernel_heights(tgrid: &TimeGrid, grid: crate::grid::GridSpec) -> Vec<f64> {
    let mut delta = vec![Complex64::new(0.0, 0.0); grid.count()];
    delta[0] = Complex64::new(1.0, 0.0);
    let field = ScalarField { grid, values: delta };
    let ext = HeatExtension::new(&field);
    tgrid
        .nodes
        .iter()
        .copied()
        .filter(|&t| {
            let k = ext.slice(t).expect("positive height").field.values;
            let max = k.iter().map(|z| z.re).fold(0.0, f64::max);
            k.iter().all(|z| z.re >= -1e-13 * max)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub x: [f64; 2],
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleMembership {
    pub sample: TrajectorySample,
    pub check: DomainCheck,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryReport {
    pub delta: f64,
    pub samples: Vec<SampleMembership>,
    pub violations: usize,
    pub worst_margin: f64,
}

fn block_matrix(v: &[Complex64], d: usize) -> CMatrix {
    matlin::symmetrize(&CMatrix::from_fn(d, d, |i, j| v[i * d + j]))
}

/// Checks `v(x, t) ∈ D_δ` at every sample.
pub fn bellman_trajectory(
    w: &WeightField,
    f: &VectorField,
    g: &VectorField,
    samples: &[TrajectorySample],
    delta: f64,
) -> Result<TrajectoryReport> {
    check_pair(f, g)?;
    let spectral = Spectral::new(w.grid);
    let ex = HeatExtension::with_spectral(&heat_ext::pairing_field(w, f)?, spectral.clone());
    let ey = HeatExtension::with_spectral(&heat_ext::inverse_pairing_field(w, g)?, spectral.clone());
    let ef = HeatExtension::with_spectral(f, spectral.clone());
    let eg = HeatExtension::with_spectral(g, spectral.clone());
    let er = HeatExtension::with_spectral(&w.forward_field(), spectral.clone());
    let es = HeatExtension::with_spectral(&w.inverse_field(), spectral);
    let d = w.d;
    let results = samples
        .par_iter()
        .enumerate()
        .map(|(index, &sample)| {
            let TrajectorySample { x, t } = sample;
            let pd = |v: Vec<Complex64>| HermPd::new(block_matrix(&v, d)).map_err(|_| Error::SliceNotPd { t, index });
            let point = BellmanPoint::new(
                ex.evaluate(x, t)[0].re,
                ey.evaluate(x, t)[0].re,
                ef.evaluate(x, t),
                eg.evaluate(x, t),
                pd(er.evaluate(x, t))?,
                pd(es.evaluate(x, t))?,
            )?;
            Ok(SampleMembership {
                sample,
                check: in_domain(&point, delta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = results.iter().filter(|r| !r.check.inside).count();
    let worst_margin = results.iter().map(|r| r.check.worst_margin()).fold(f64::INFINITY, f64::min);
    Ok(TrajectoryReport {
        delta,
        samples: results,
        violations,
        worst_margin,
    })
}
