//! Matrix weights, vector test functions and scalar fields on a periodic grid.
//!
//! Weights are built positive by construction: every family is the
//! exponential of a Hermitian field, so the pointwise inverse is available in
//! closed form and never has to be computed by inversion.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::matlin::{self, CMatrix, HermPd, COND_CAP};

pub const MAX_FIBER_DIM: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A scalar complex field sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl ScalarField {
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.count()).map(|p| f(grid.coords(p))).collect();
        ScalarField { grid, values }
    }

    /// `h^m Σ_p u(p)`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }
}

/// A `C^d`-valued field; `data[p·d + k]` is component `k` at point `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub d: usize,
    pub data: Vec<Complex64>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec, d: usize) -> Self {
        VectorField {
            grid,
            d,
            data: vec![ZERO; grid.count() * d],
        }
    }

    pub fn from_fn(grid: GridSpec, d: usize, f: impl Fn([f64; 2]) -> Vec<Complex64>) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.count() * d);
        for p in 0..grid.count() {
            let v = f(grid.coords(p));
            if v.len() != d {
                return Err(Error::Dimension(format!("expected {d} components, got {}", v.len())));
            }
            data.extend(v);
        }
        let field = VectorField { grid, d, data };
        field.check_finite()?;
        Ok(field)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn at(&self, p: usize) -> &[Complex64] {
        &self.data[p * self.d..(p + 1) * self.d]
    }

    pub fn component(&self, k: usize) -> Vec<Complex64> {
        self.data.iter().skip(k).step_by(self.d).copied().collect()
    }

    pub fn set_component(&mut self, k: usize, values: &[Complex64]) {
        for (p, v) in values.iter().enumerate() {
            self.data[p * self.d + k] = *v;
        }
    }

    /// Grid average, i.e. the zero-frequency mode divided by `n^m`.
    pub fn mean(&self) -> Vec<Complex64> {
        let mut m = vec![ZERO; self.d];
        for chunk in self.data.chunks(self.d) {
            for (acc, v) in m.iter_mut().zip(chunk) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.grid.count() as f64;
        m.iter().map(|z| z * inv).collect()
    }

    /// Returns the field with its mean subtracted, and the mean.
    pub fn remove_mean(&self) -> (VectorField, Vec<Complex64>) {
        let mean = self.mean();
        let mut out = self.clone();
        for chunk in out.data.chunks_mut(self.d) {
            for (v, m) in chunk.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        (out, mean)
    }

    /// Unweighted `L²` norm, `(h^m Σ_p |f(p)|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn scaled(&self, a: Complex64) -> VectorField {
        VectorField {
            data: self.data.iter().map(|z| z * a).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.check_compatible(other)?;
        Ok(VectorField {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn check_compatible(&self, other: &VectorField) -> Result<()> {
        if self.grid != other.grid || self.d != other.d {
            return Err(Error::Dimension("vector fields live on different grids".into()));
        }
        Ok(())
    }
}

/// A `d × d` matrix-valued field; `data[p·d² + i·d + j]` is entry `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub grid: GridSpec,
    pub d: usize,
    pub data: Vec<Complex64>,
}

impl MatrixField {
    pub fn from_matrices<'a>(grid: GridSpec, d: usize, mats: impl Iterator<Item = &'a CMatrix>) -> Self {
        let mut data = Vec::with_capacity(grid.count() * d * d);
        for m in mats {
            for i in 0..d {
                for j in 0..d {
                    data.push(m[(i, j)]);
                }
            }
        }
        MatrixField { grid, d, data }
    }

    pub fn matrix_at(&self, p: usize) -> CMatrix {
        let d = self.d;
        let block = &self.data[p * d * d..(p + 1) * d * d];
        CMatrix::from_fn(d, d, |i, j| block[i * d + j])
    }
}

/// A matrix weight together with its pointwise inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    pub grid: GridSpec,
    pub d: usize,
    pub values: Vec<HermPd>,
    pub inverse_values: Vec<HermPd>,
}

impl WeightField {
    /// Builds a weight from samples, computing inverses with
    /// [`matlin::inverse_pd`]. Each sample must be Hermitian positive definite
    /// with condition number at most [`COND_CAP`].
    pub fn from_samples(grid: GridSpec, d: usize, samples: Vec<CMatrix>) -> Result<Self> {
        if samples.len() != grid.count() {
            return Err(Error::Dimension(format!(
                "expected {} samples, got {}",
                grid.count(),
                samples.len()
            )));
        }
        let mut values = Vec::with_capacity(samples.len());
        let mut inverse_values = Vec::with_capacity(samples.len());
        for (index, s) in samples.into_iter().enumerate() {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::Dimension(format!("sample {index} is not {d}x{d}")));
            }
            let w = HermPd::new(s).map_err(|_| Error::NonPdSample { index })?;
            let inv = matlin::inverse_pd(&w).map_err(|_| Error::NonPdSample { index })?;
            values.push(w);
            inverse_values.push(inv);
        }
        Ok(WeightField {
            grid,
            d,
            values,
            inverse_values,
        })
    }

    /// Builds `exp(H(x))` and `exp(-H(x))` from a Hermitian generator field.
    fn from_generator(grid: GridSpec, d: usize, generator: impl Fn([f64; 2]) -> CMatrix) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.count());
        let mut inverse_values = Vec::with_capacity(grid.count());
        for p in 0..grid.count() {
            let h = generator(grid.coords(p));
            let eig = matlin::eigh(&h)?;
            let cond = (eig.max() - eig.min()).exp();
            if cond > COND_CAP {
                return Err(Error::IllConditioned { cond, cap: COND_CAP });
            }
            values.push(HermPd::new_unchecked(eig.map(f64::exp)));
            inverse_values.push(HermPd::new_unchecked(eig.map(|l| (-l).exp())));
        }
        Ok(WeightField {
            grid,
            d,
            values,
            inverse_values,
        })
    }

    pub fn forward_field(&self) -> MatrixField {
        MatrixField::from_matrices(self.grid, self.d, self.values.iter().map(|w| &**w))
    }

    pub fn inverse_field(&self) -> MatrixField {
        MatrixField::from_matrices(self.grid, self.d, self.inverse_values.iter().map(|w| &**w))
    }

    /// Multiplies the weight by a positive scalar (the inverse by its reciprocal).
    pub fn scaled(&self, c: f64) -> Result<WeightField> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {c} must be positive")));
        }
        Ok(WeightField {
            grid: self.grid,
            d: self.d,
            values: self.values.iter().map(|w| HermPd::new_unchecked(w.scale(c))).collect(),
            inverse_values: self
                .inverse_values
                .iter()
                .map(|w| HermPd::new_unchecked(w.scale(1.0 / c)))
                .collect(),
        })
    }

    /// Block-diagonal weight `diag(self, other)` on `C^{d₁+d₂}`.
    pub fn block_diag(&self, other: &WeightField) -> Result<WeightField> {
        if self.grid != other.grid {
            return Err(Error::Dimension("weights live on different grids".into()));
        }
        let d = self.d + other.d;
        let join = |a: &CMatrix, b: &CMatrix| {
            let mut m = CMatrix::zeros(d, d);
            m.view_mut((0, 0), (self.d, self.d)).copy_from(a);
            m.view_mut((self.d, self.d), (other.d, other.d)).copy_from(b);
            HermPd::new_unchecked(m)
        };
        Ok(WeightField {
            grid: self.grid,
            d,
            values: self.values.iter().zip(&other.values).map(|(a, b)| join(a, b)).collect(),
            inverse_values: self
                .inverse_values
                .iter()
                .zip(&other.inverse_values)
                .map(|(a, b)| join(a, b))
                .collect(),
        })
    }
}

/// Test-weight families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Identity,
    /// `(1 + ε sin(2πx₁/L))·Id`, requires `|ε| < 1`.
    ScalarOscillation { eps: f64 },
    /// `diag(e^{ε s}, e^{-ε s}, 1, …)` with `s = sin(2πx₁/L)`.
    DiagonalExp { eps: f64 },
    /// `U(θ)·diagonal_exp(ε)·U(θ)*`, `U` a rotation in the first coordinate plane.
    RotatedDiagonal { eps: f64, theta: f64 },
    /// `exp` of a random Hermitian trigonometric polynomial.
    RandomSmooth { eps: f64, seed: u64, cutoff: usize },
}

impl Family {
    /// Parses the `(name, params)` form used by configs and the CLI.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let need = |k: usize| -> Result<()> {
            if params.len() < k {
                Err(Error::InvalidParameter(format!("family {name} needs {k} parameters")))
            } else {
                Ok(())
            }
        };
        match name {
            "identity" => Ok(Family::Identity),
            "scalar_oscillation" => {
                need(1)?;
                Ok(Family::ScalarOscillation { eps: params[0] })
            }
            "diagonal_exp" => {
                need(1)?;
                Ok(Family::DiagonalExp { eps: params[0] })
            }
            "rotated_diagonal" => {
                need(2)?;
                Ok(Family::RotatedDiagonal {
                    eps: params[0],
                    theta: params[1],
                })
            }
            "random_smooth" => {
                need(3)?;
                if params[1] < 0.0 || params[2] < 0.0 {
                    return Err(Error::InvalidParameter("seed and cutoff must be non-negative".into()));
                }
                Ok(Family::RandomSmooth {
                    eps: params[0],
                    seed: params[1] as u64,
                    cutoff: params[2] as usize,
                })
            }
            other => Err(Error::InvalidParameter(format!("unknown weight family '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::ScalarOscillation { .. } => "scalar_oscillation",
            Family::DiagonalExp { .. } => "diagonal_exp",
            Family::RotatedDiagonal { .. } => "rotated_diagonal",
            Family::RandomSmooth { .. } => "random_smooth",
        }
    }

    /// The strength parameter `ε` (0 for the identity).
    pub fn eps(&self) -> f64 {
        match *self {
            Family::Identity => 0.0,
            Family::ScalarOscillation { eps }
            | Family::DiagonalExp { eps }
            | Family::RotatedDiagonal { eps, .. }
            | Family::RandomSmooth { eps, .. } => eps,
        }
    }

    /// The same family with strength `eps`.
    pub fn with_eps(&self, eps: f64) -> Family {
        match self.clone() {
            Family::Identity => Family::Identity,
            Family::ScalarOscillation { .. } => Family::ScalarOscillation { eps },
            Family::DiagonalExp { .. } => Family::DiagonalExp { eps },
            Family::RotatedDiagonal { theta, .. } => Family::RotatedDiagonal { eps, theta },
            Family::RandomSmooth { seed, cutoff, .. } => Family::RandomSmooth { eps, seed, cutoff },
        }
    }
}

/// Samples a weight family on `grid` with fiber dimension `d`.
pub fn make_family(family: &Family, grid: GridSpec, d: usize) -> Result<WeightField> {
    grid.validate()?;
    if d == 0 || d > MAX_FIBER_DIM {
        return Err(Error::InvalidParameter(format!("fiber dimension {d} not in 1..={MAX_FIBER_DIM}")));
    }
    let l = grid.length;
    let wave = move |x: [f64; 2]| (2.0 * PI * x[0] / l).sin();
    let real_diag = |entries: &dyn Fn(usize) -> f64| {
        CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(entries(i), 0.0)
            } else {
                ZERO
            }
        })
    };
    match family {
        Family::Identity => WeightField::from_generator(grid, d, |_| CMatrix::zeros(d, d)),
        &Family::ScalarOscillation { eps } => {
            if !(eps.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "scalar_oscillation needs |eps| < 1 to stay positive, got {eps}"
                )));
            }
            // log(1 + ε s) keeps the inverse exact.
            WeightField::from_generator(grid, d, |x| {
                let v = (1.0 + eps * wave(x)).ln();
                real_diag(&|_| v)
            })
        }
        &Family::DiagonalExp { eps } => WeightField::from_generator(grid, d, |x| {
            let s = eps * wave(x);
            real_diag(&|i| diag_exp_entry(i, s))
        }),
        &Family::RotatedDiagonal { eps, theta } => {
            if d < 2 {
                return Err(Error::InvalidParameter("rotated_diagonal needs d >= 2".into()));
            }
            let u = rotation(d, theta);
            WeightField::from_generator(grid, d, |x| {
                let s = eps * wave(x);
                &u * real_diag(&|i| diag_exp_entry(i, s)) * u.adjoint()
            })
        }
        &Family::RandomSmooth { eps, seed, cutoff } => {
            let poly = RandomHermitianPoly::new(grid.m, d, eps, seed, cutoff, false);
            WeightField::from_generator(grid, d, |x| poly.eval(x, grid.length))
        }
    }
}

fn diag_exp_entry(i: usize, s: f64) -> f64 {
    match i {
        0 => s,
        1 => -s,
        _ => 0.0,
    }
}

fn rotation(d: usize, theta: f64) -> CMatrix {
    let mut u = CMatrix::identity(d, d);
    let (s, c) = theta.sin_cos();
    u[(0, 0)] = Complex64::new(c, 0.0);
    u[(0, 1)] = Complex64::new(-s, 0.0);
    u[(1, 0)] = Complex64::new(s, 0.0);
    u[(1, 1)] = Complex64::new(c, 0.0);
    u
}

/// Random Hermitian trigonometric polynomial
/// `H(x) = A₀ + Σ_k (A_k e^{i⟨ξ_k,x⟩} + A_k* e^{-i⟨ξ_k,x⟩})` over a half
/// lattice of frequencies with `|k|_∞ ≤ cutoff`.
#[derive(Clone, Debug)]
pub(crate) struct RandomHermitianPoly {
    modes: Vec<([i64; 2], CMatrix)>,
    constant: CMatrix,
}

impl RandomHermitianPoly {
    pub(crate) fn new(m: usize, d: usize, eps: f64, seed: u64, cutoff: usize, real: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> Complex64 {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
            Complex64::new(re, im) * eps
        };
        let g = CMatrix::from_fn(d, d, |_, _| draw(&mut rng));
        let constant = (&g + g.adjoint()).scale(0.5);
        let c = cutoff as i64;
        let mut modes = Vec::new();
        let second: Vec<i64> = if m == 2 { (-c..=c).collect() } else { vec![0] };
        for k1 in 0..=c {
            for &k2 in &second {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let a = CMatrix::from_fn(d, d, |_, _| draw(&mut rng)).scale(std::f64::consts::FRAC_1_SQRT_2);
                modes.push(([k1, k2], a));
            }
        }
        RandomHermitianPoly { modes, constant }
    }

    pub(crate) fn eval(&self, x: [f64; 2], length: f64) -> CMatrix {
        let mut h = self.constant.clone();
        for (k, a) in &self.modes {
            let phase = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]) / length;
            let e = Complex64::from_polar(1.0, phase);
            h += a * e + a.adjoint() * e.conj();
        }
        h
    }
}

/// A periodized Gaussian bump `direction·Σ_images exp(-|x - c|²/(2w²))`.
///
/// Requires `3h ≤ width ≤ L/8`.
pub fn bump_vector_field(center: [f64; 2], width: f64, direction: &[Complex64], grid: GridSpec) -> Result<VectorField> {
    grid.validate()?;
    let h = grid.spacing();
    if !(width >= 3.0 * h - 1e-12 && width <= grid.length / 8.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "bump width {width} outside the resolvable band [{}, {}]",
            3.0 * h,
            grid.length / 8.0
        )));
    }
    let profile = periodized_gaussian(center, width, grid);
    let d = direction.len();
    VectorField::from_fn(grid, d, |x| {
        let a = profile(x);
        direction.iter().map(|v| v * a).collect()
    })
}

/// Periodized unit-height Gaussian profile on the torus of `grid`.
pub fn periodized_gaussian(center: [f64; 2], width: f64, grid: GridSpec) -> impl Fn([f64; 2]) -> f64 {
    let l = grid.length;
    let m = grid.m;
    let images = 3_i64;
    move |x: [f64; 2]| {
        let axis = |a: usize| -> f64 {
            (-images..=images)
                .map(|k| {
                    let dx = x[a] - center[a] + k as f64 * l;
                    (-dx * dx / (2.0 * width * width)).exp()
                })
                .sum()
        };
        if m == 1 {
            axis(0)
        } else {
            axis(0) * axis(1)
        }
    }
}

const MAGIC: &[u8; 4] = b"MWLF";
const VERSION: u32 = 1;

/// Metadata of the binary interchange format, also written as a JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub magic: String,
    pub version: u32,
    pub m: u32,
    pub n: u32,
    #[serde(rename = "L")]
    pub length: f64,
    pub d: u32,
    pub count: u64,
}

/// Path of the JSON sidecar written next to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `field` as `MWLF` binary: header `{magic, version u32, m u32, n u32,
/// L f64, d u32, count u64}` followed by `count·d·d` little-endian complex128
/// entries, grid points in row-major order, matrix entries row-major.
pub fn save_field(field: &WeightField, path: &Path) -> Result<()> {
    let header = FieldHeader {
        magic: "MWLF".into(),
        version: VERSION,
        m: field.grid.m as u32,
        n: field.grid.n as u32,
        length: field.grid.length,
        d: field.d as u32,
        count: field.grid.count() as u64,
    };
    let d = field.d;
    let mut buf = Vec::with_capacity(32 + field.grid.count() * d * d * 16);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&header.version.to_le_bytes());
    buf.extend_from_slice(&header.m.to_le_bytes());
    buf.extend_from_slice(&header.n.to_le_bytes());
    buf.extend_from_slice(&header.length.to_le_bytes());
    buf.extend_from_slice(&header.d.to_le_bytes());
    buf.extend_from_slice(&header.count.to_le_bytes());
    for w in &field.values {
        for i in 0..d {
            for j in 0..d {
                buf.extend_from_slice(&w[(i, j)].re.to_le_bytes());
                buf.extend_from_slice(&w[(i, j)].im.to_le_bytes());
            }
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    let json = serde_json::to_string_pretty(&header).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Reads an `MWLF` file written by [`save_field`]; inverses are recomputed.
pub fn load_field(path: &Path) -> Result<WeightField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let m = cur.u32()? as usize;
    let n = cur.u32()? as usize;
    let length = cur.f64()?;
    let d = cur.u32()? as usize;
    let count = cur.u64()? as usize;
    let grid = GridSpec::new(m, n, length).map_err(|e| Error::Format(e.to_string()))?;
    if count != grid.count() {
        return Err(Error::Format(format!("count {count} does not match grid ({})", grid.count())));
    }
    if d == 0 || d > MAX_FIBER_DIM {
        return Err(Error::Format(format!("fiber dimension {d} out of range")));
    }
    if bytes.len() != cur.pos + count * d * d * 16 {
        return Err(Error::Format("payload length does not match header".into()));
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let mut w = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let re = cur.f64()?;
                let im = cur.f64()?;
                w[(i, j)] = Complex64::new(re, im);
            }
        }
        samples.push(w);
    }
    let field = WeightField::from_samples(grid, d, samples)?;
    Ok(field)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.bytes.len() {
            return Err(Error::Format("truncated header".into()));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Leaf values of a dyadic weight on `[0, 1)`, assigned left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicLeaves {
    pub depth: usize,
    pub d: usize,
    pub leaves: Vec<HermPd>,
}

pub fn dyadic_leaf_weight(leaf_values: Vec<HermPd>) -> Result<DyadicLeaves> {
    let len = leaf_values.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("leaf count {len} is not a power of two")));
    }
    let d = leaf_values[0].dim();
    if leaf_values.iter().any(|w| w.dim() != d) {
        return Err(Error::Dimension("leaves have different fiber dimensions".into()));
    }
    Ok(DyadicLeaves {
        depth: len.trailing_zeros() as usize,
        d,
        leaves: leaf_values,
    })
}

impl DyadicLeaves {
    /// Uses the samples of a one-dimensional weight field as leaves.
    pub fn from_field(field: &WeightField) -> Result<Self> {
        if field.grid.m != 1 {
            return Err(Error::Dimension("dyadic leaves need an m = 1 field".into()));
        }
        dyadic_leaf_weight(field.values.clone())
    }
}
