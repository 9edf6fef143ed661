//! Heat extensions `u(·, t) = k_t * u₀` on the torus and the heat `A₂`
//! characteristic of a matrix weight.
//!
//! The heat kernel is applied as the exact dual-lattice multiplier
//! `exp(-t|ξ|²)`, i.e. the periodized Gaussian `(4πt)^{-m/2} e^{-|x|²/4t}`.
//! Its zero mode is 1, so constants are preserved exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectral};
use crate::matlin::{self, CMatrix};
use crate::weight_field::{MatrixField, ScalarField, VectorField, WeightField};

/// Log-spaced nodes in `[t_min, t_max]` with trapezoid weights in `u = ln t`.
///
/// Interior weights are `Δu·t_j`; the endpoint at `t_max` absorbs the
/// `O(Δu²)` defect of the rule on `e^u`, so the weights integrate constants
/// exactly: `Σ w_j = t_max - t_min`. Integrands in this crate decay at both
/// ends, where the correction is invisible, while the log-trapezoid rule
/// itself converges geometrically on them.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TimeGrid {
    pub fn log_spaced(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max.is_finite() && t_min <= t_max) {
            return Err(Error::InvalidParameter(format!(
                "time range [{t_min}, {t_max}] must satisfy 0 < t_min <= t_max"
            )));
        }
        if count == 0 || (count == 1 && t_min != t_max) || (count > 1 && t_min == t_max) {
            return Err(Error::InvalidParameter(format!(
                "{count} nodes cannot span [{t_min}, {t_max}]"
            )));
        }
        if count == 1 {
            return Ok(TimeGrid {
                t_min,
                t_max,
                nodes: vec![t_min],
                weights: vec![0.0],
            });
        }
        let (u0, u1) = (t_min.ln(), t_max.ln());
        let du = (u1 - u0) / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|j| (u0 + du * j as f64).exp()).collect();
        nodes[0] = t_min;
        nodes[count - 1] = t_max;
        let mut weights: Vec<f64> = nodes.iter().map(|t| du * t).collect();
        weights[0] *= 0.5;
        weights[count - 1] *= 0.5;
        let defect = (t_max - t_min) - weights.iter().sum::<f64>();
        weights[count - 1] += defect;
        Ok(TimeGrid {
            t_min,
            t_max,
            nodes,
            weights,
        })
    }

    /// Default range for a grid: `t_min = h²/4`, `t_max = L²`.
    pub fn for_grid(grid: &GridSpec, count: usize) -> Result<Self> {
        let h = grid.spacing();
        TimeGrid::log_spaced(h * h / 4.0, grid.length * grid.length, count)
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// Same range with twice as many nodes.
    pub fn refined(&self) -> Result<Self> {
        TimeGrid::log_spaced(self.t_min, self.t_max, 2 * self.count())
    }

    /// Log step between nodes (0 for a single node).
    pub fn log_step(&self) -> f64 {
        if self.count() < 2 {
            0.0
        } else {
            (self.t_max / self.t_min).ln() / (self.count() - 1) as f64
        }
    }
}

/// A field type that can be heat-extended component by component.
pub trait Extendable: Sized {
    fn grid(&self) -> GridSpec;
    /// Number of complex components per grid point.
    fn components(&self) -> usize;
    /// Point-major component data.
    fn raw(&self) -> &[Complex64];
    fn with_raw(&self, data: Vec<Complex64>) -> Self;
}

impl Extendable for ScalarField {
    fn grid(&self) -> GridSpec {
        self.grid
    }
    fn components(&self) -> usize {
        1
    }
    fn raw(&self) -> &[Complex64] {
        &self.values
    }
    fn with_raw(&self, data: Vec<Complex64>) -> Self {
        ScalarField { grid: self.grid, values: data }
    }
}

impl Extendable for VectorField {
    fn grid(&self) -> GridSpec {
        self.grid
    }
    fn components(&self) -> usize {
        self.d
    }
    fn raw(&self) -> &[Complex64] {
        &self.data
    }
    fn with_raw(&self, data: Vec<Complex64>) -> Self {
        VectorField {
            grid: self.grid,
            d: self.d,
            data,
        }
    }
}

impl Extendable for MatrixField {
    fn grid(&self) -> GridSpec {
        self.grid
    }
    fn components(&self) -> usize {
        self.d * self.d
    }
    fn raw(&self) -> &[Complex64] {
        &self.data
    }
    fn with_raw(&self, data: Vec<Complex64>) -> Self {
        MatrixField {
            grid: self.grid,
            d: self.d,
            data,
        }
    }
}

/// A field evaluated at height `t` of its heat extension.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatSlice<F> {
    pub t: f64,
    pub field: F,
}

/// Precomputed spectra of a field, for evaluating many heights.
pub struct HeatExtension<F: Extendable> {
    template: F,
    spectral: Spectral,
    spectra: Vec<Vec<Complex64>>,
    norms: Vec<f64>,
}

impl<F: Extendable + Clone> HeatExtension<F> {
    pub fn new(field: &F) -> Self {
        Self::with_spectral(field, Spectral::new(field.grid()))
    }

    pub fn with_spectral(field: &F, spectral: Spectral) -> Self {
        let grid = field.grid();
        let c = field.components();
        let raw = field.raw();
        let spectra = (0..c)
            .map(|k| {
                let mut comp: Vec<Complex64> = raw.iter().skip(k).step_by(c).copied().collect();
                spectral.forward(&mut comp);
                comp
            })
            .collect();
        let norms = (0..grid.count()).map(|q| grid.wavevector_norm_sqr(q)).collect();
        HeatExtension {
            template: field.clone(),
            spectral,
            spectra,
            norms,
        }
    }

    pub fn grid(&self) -> GridSpec {
        *self.spectral.grid()
    }

    fn assemble(&self, symbol: impl Fn(usize) -> Complex64) -> F {
        let count = self.grid().count();
        let c = self.spectra.len();
        let mut data = vec![Complex64::new(0.0, 0.0); count * c];
        for (k, spec) in self.spectra.iter().enumerate() {
            let mut buf: Vec<Complex64> = spec.iter().enumerate().map(|(q, z)| z * symbol(q)).collect();
            self.spectral.inverse(&mut buf);
            for (p, z) in buf.into_iter().enumerate() {
                data[p * c + k] = z;
            }
        }
        self.template.with_raw(data)
    }

    pub fn slice(&self, t: f64) -> Result<HeatSlice<F>> {
        check_time(t)?;
        let field = self.assemble(|q| Complex64::new((-t * self.norms[q]).exp(), 0.0));
        Ok(HeatSlice { t, field })
    }

    /// `∂u^h/∂x_axis` at height `t`, via the multiplier `iξ_axis·e^{-t|ξ|²}`.
    /// The Nyquist line of `axis` is zeroed so real data stay real.
    /// `t = 0` gives the derivative of the data itself.
    pub fn gradient(&self, t: f64, axis: usize) -> Result<F> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("height {t} must be non-negative")));
        }
        let grid = self.grid();
        if axis >= grid.m {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range for m = {}", grid.m)));
        }
        Ok(self.assemble(|q| {
            if grid.on_nyquist(q, axis) {
                Complex64::new(0.0, 0.0)
            } else {
                let xi = grid.wavevector(q)[axis];
                Complex64::new(0.0, xi * (-t * self.norms[q]).exp())
            }
        }))
    }

    /// All components of the extension at a continuous point `(x, t)`.
    pub fn evaluate(&self, x: [f64; 2], t: f64) -> Vec<Complex64> {
        self.spectra
            .iter()
            .map(|spec| self.spectral.evaluate(spec, x, |q| (-t * self.norms[q]).exp()))
            .collect()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("height {t} must be positive")))
    }
}

/// Heat extension of `input` at height `t > 0`.
pub fn heat_slice<F: Extendable + Clone>(input: &F, t: f64) -> Result<HeatSlice<F>> {
    check_time(t)?;
    HeatExtension::new(input).slice(t)
}

/// Heat slice of a weight, checked to be Hermitian positive definite at every
/// node.
pub fn heat_slice_weight(w: &WeightField, t: f64) -> Result<HeatSlice<MatrixField>> {
    let slice = heat_slice(&w.forward_field(), t)?;
    for p in 0..w.grid.count() {
        let a = slice.field.matrix_at(p);
        if matlin::min_eigenvalue(&a).map(|l| l <= 0.0).unwrap_or(true) {
            return Err(Error::SliceNotPd { t, index: p });
        }
    }
    Ok(slice)
}

/// `‖(A)^{1/2}(B)^{1/2}‖` for the two averaged matrices at one point.
pub(crate) fn a2_objective(a: &CMatrix, b: &CMatrix) -> Option<f64> {
    let ra = matlin::sqrt_pd(a).ok()?;
    let rb = matlin::sqrt_pd(b).ok()?;
    matlin::spectral_norm(&(&*ra * &*rb)).ok()
}

fn block_to_matrix(block: &[Complex64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| block[i * d + j])
}

/// Result of a heat `A₂` computation.
#[derive(Clone, Debug, PartialEq)]
pub struct A2Estimate {
    /// Refined supremum.
    pub value: f64,
    /// Maximum over the grid points and time nodes only.
    pub grid_max: f64,
    /// Location of the refined maximum.
    pub argmax_x: [f64; 2],
    pub argmax_t: f64,
    /// Running maximum after each refinement round.
    pub rounds: Vec<f64>,
}

const CANDIDATES: usize = 3;

/// Heat `A₂` characteristic `sup_{(x,t)} ‖(W^h)^{1/2}((W^{-1})^h)^{1/2}‖`.
pub fn heat_a2_characteristic(w: &WeightField, tgrid: &TimeGrid, refine: usize) -> Result<f64> {
    Ok(heat_a2_estimate(w, tgrid, refine)?.value)
}

/// Grid maximum over all points and time nodes followed by `refine` rounds of
/// local stencil refinement in `(x, ln t)` around the best few candidates.
pub fn heat_a2_estimate(w: &WeightField, tgrid: &TimeGrid, refine: usize) -> Result<A2Estimate> {
    let grid = w.grid;
    let d = w.d;
    let spectral = Spectral::new(grid);
    let fwd = HeatExtension::with_spectral(&w.forward_field(), spectral.clone());
    let inv = HeatExtension::with_spectral(&w.inverse_field(), spectral);

    // (value, point, node) triples: the best few points of each node.
    let per_node: Vec<Result<Vec<(f64, usize, usize)>>> = tgrid
        .nodes
        .par_iter()
        .enumerate()
        .map(|(j, &t)| {
            let a = fwd.slice(t)?.field;
            let b = inv.slice(t)?.field;
            let mut best: Vec<(f64, usize, usize)> = Vec::with_capacity(CANDIDATES + 1);
            for p in 0..grid.count() {
                let ma = block_to_matrix(&a.data[p * d * d..(p + 1) * d * d], d);
                let mb = block_to_matrix(&b.data[p * d * d..(p + 1) * d * d], d);
                let v = a2_objective(&ma, &mb).ok_or(Error::SliceNotPd { t, index: p })?;
                insert_top(&mut best, (v, p, j));
            }
            Ok(best)
        })
        .collect();
    let mut candidates = Vec::new();
    for r in per_node {
        for c in r? {
            insert_top(&mut candidates, c);
        }
    }
    let (grid_max, p0, j0) = candidates[0];

    let objective = |x: [f64; 2], t: f64| -> Option<f64> {
        let a = block_to_matrix(&fwd.evaluate(x, t), d);
        let b = block_to_matrix(&inv.evaluate(x, t), d);
        a2_objective(&a, &b)
    };

    let (u_lo, u_hi) = (tgrid.t_min.ln(), tgrid.t_max.ln());
    let mut best = (grid_max, grid.coords(p0), tgrid.nodes[j0]);
    let mut rounds = Vec::with_capacity(refine);
    let mut states: Vec<([f64; 2], f64, f64)> = candidates
        .iter()
        .map(|&(v, p, j)| (grid.coords(p), tgrid.nodes[j].ln(), v))
        .collect();
    let mut step_x = grid.spacing();
    let mut step_u = tgrid.log_step().max(1e-3);
    let offsets: Vec<[i32; 3]> = stencil(grid.m);
    for _ in 0..refine {
        for state in states.iter_mut() {
            let (x, u, v) = *state;
            let mut local = (v, x, u);
            for off in &offsets {
                let xn = [x[0] + off[0] as f64 * step_x, x[1] + off[1] as f64 * step_x];
                let un = (u + off[2] as f64 * step_u).clamp(u_lo, u_hi);
                if let Some(val) = objective(xn, un.exp()) {
                    if val > local.0 {
                        local = (val, xn, un);
                    }
                }
            }
            *state = (local.1, local.2, local.0);
            if local.0 > best.0 {
                best = (local.0, local.1, local.2.exp());
            }
        }
        rounds.push(best.0);
        step_x *= 0.5;
        step_u *= 0.5;
    }
    let wrap = |c: f64| c.rem_euclid(grid.length);
    Ok(A2Estimate {
        value: best.0,
        grid_max,
        argmax_x: [wrap(best.1[0]), if grid.m == 2 { wrap(best.1[1]) } else { 0.0 }],
        argmax_t: best.2,
        rounds,
    })
}

fn insert_top(list: &mut Vec<(f64, usize, usize)>, item: (f64, usize, usize)) {
    let pos = list.iter().position(|c| item.0 > c.0).unwrap_or(list.len());
    if pos < CANDIDATES {
        list.insert(pos, item);
        list.truncate(CANDIDATES);
    }
}

/// Offsets `{-1, 0, 1}^{m+1}` in `(x₁[, x₂], u)`.
fn stencil(m: usize) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for a in -1..=1 {
        for b in if m == 2 { -1..=1 } else { 0..=0 } {
            for c in -1..=1 {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Heat slice of the scalar field `x ↦ (W(x) f(x), f(x))`.
pub fn heat_pairing_field(w: &WeightField, f: &VectorField, t: f64) -> Result<HeatSlice<ScalarField>> {
    let q = pairing_field(w, f)?;
    heat_slice(&q, t)
}

/// The pointwise quadratic form `(W f, f)` as a scalar field.
pub fn pairing_field(w: &WeightField, f: &VectorField) -> Result<ScalarField> {
    pairing_with(&w.values, w.grid, w.d, f)
}

/// `(W^{-1} g, g)` as a scalar field.
pub fn inverse_pairing_field(w: &WeightField, g: &VectorField) -> Result<ScalarField> {
    pairing_with(&w.inverse_values, w.grid, w.d, g)
}

fn pairing_with(mats: &[crate::matlin::HermPd], grid: GridSpec, d: usize, f: &VectorField) -> Result<ScalarField> {
    if f.grid != grid || f.d != d {
        return Err(Error::Dimension("weight and vector field live on different grids".into()));
    }
    let values = mats
        .iter()
        .enumerate()
        .map(|(p, m)| Complex64::new(quadratic_form(m, f.at(p)), 0.0))
        .collect();
    Ok(ScalarField { grid, values })
}

/// `Re (M v, v)` for Hermitian `M`.
pub(crate) fn quadratic_form(m: &CMatrix, v: &[Complex64]) -> f64 {
    let d = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..d {
            row += m[(i, j)] * v[j];
        }
        acc += row * v[i].conj();
    }
    acc.re
}
