//! The Bellman domain `D_δ`, dyadic witnesses for the Bellman supremum, their
//! concatenation, and the empirical size bound.
//!
//! A point is `(X, Y, x, y, r, s)` with scalars `X, Y`, vectors `x, y ∈ C^d`
//! and positive matrices `r, s`. It lies in `D_δ` when, for every direction
//! `e`, `|(x, e)|² ≤ X·(s e, e)` and `|(y, e)|² ≤ Y·(r e, e)`, and
//! `1 ≤ ‖r^{1/2} s^{1/2}‖ ≤ 1 + δ`. The two vector conditions are the
//! semidefinite statements `X s - x x* ⪰ 0` and `Y r - y y* ⪰ 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyadic_mart::{self, build_tree_with_inverses, dual_bilinear_sum, DyadicWeightTree, HaarExpansion};
use crate::error::{Error, Result};
use crate::matlin::{self, CMatrix, HermPd, TOL_PSD};
use crate::seeds::derive_seed2;
use crate::weight_field::RandomHermitianPoly;

#[derive(Clone, Debug, PartialEq)]
pub struct BellmanPoint {
    pub big_x: f64,
    pub big_y: f64,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub r: HermPd,
    pub s: HermPd,
}

impl BellmanPoint {
    pub fn new(big_x: f64, big_y: f64, x: Vec<Complex64>, y: Vec<Complex64>, r: HermPd, s: HermPd) -> Result<Self> {
        let d = r.dim();
        if x.len() != d || y.len() != d || s.dim() != d {
            return Err(Error::Dimension("point components disagree on d".into()));
        }
        let finite = big_x.is_finite()
            && big_y.is_finite()
            && x.iter().chain(&y).all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(BellmanPoint { big_x, big_y, x, y, r, s })
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    /// `(a + b)/2`, componentwise.
    pub fn midpoint(a: &BellmanPoint, b: &BellmanPoint) -> Result<Self> {
        let avg = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(p, q)| (p + q) * 0.5).collect();
        BellmanPoint::new(
            0.5 * (a.big_x + b.big_x),
            0.5 * (a.big_y + b.big_y),
            avg(&a.x, &b.x),
            avg(&a.y, &b.y),
            HermPd::new((&*a.r + &*b.r).scale(0.5))?,
            HermPd::new((&*a.s + &*b.s).scale(0.5))?,
        )
    }

    /// `(U x, U y, U r U*, U s U*)` for a unitary `U`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            let col = u * matlin::CVector::from_column_slice(v);
            col.iter().copied().collect()
        };
        BellmanPoint::new(
            self.big_x,
            self.big_y,
            apply(&self.x),
            apply(&self.y),
            HermPd::new(u * &*self.r * u.adjoint())?,
            HermPd::new(u * &*self.s * u.adjoint())?,
        )
    }
}

/// Margins of the three domain conditions; each is satisfied when it is at
/// least `-TOL_PSD`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainCheck {
    /// Smallest eigenvalue of `X s - x x*`.
    pub x_margin: f64,
    /// Smallest eigenvalue of `Y r - y y*`.
    pub y_margin: f64,
    /// `‖r^{1/2}s^{1/2}‖ - 1`.
    pub lower_margin: f64,
    /// `1 + δ - ‖r^{1/2}s^{1/2}‖`.
    pub upper_margin: f64,
    pub norm: f64,
    pub inside: bool,
}

impl DomainCheck {
    pub fn worst_margin(&self) -> f64 {
        self.x_margin.min(self.y_margin).min(self.lower_margin).min(self.upper_margin)
    }
}

fn rank_one_gap(scale: f64, m: &CMatrix, v: &[Complex64]) -> Result<f64> {
    let d = v.len();
    let a = CMatrix::from_fn(d, d, |i, j| m[(i, j)] * scale - v[i] * v[j].conj());
    matlin::min_eigenvalue(&matlin::symmetrize(&a))
}

pub fn in_domain(p: &BellmanPoint, delta: f64) -> Result<DomainCheck> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta {delta} must be non-negative")));
    }
    let x_margin = rank_one_gap(p.big_x, &p.s, &p.x)?;
    let y_margin = rank_one_gap(p.big_y, &p.r, &p.y)?;
    let rs = &*matlin::sqrt_pd(&p.r)? * &*matlin::sqrt_pd(&p.s)?;
    let norm = matlin::spectral_norm(&rs)?;
    let lower_margin = norm - 1.0;
    let upper_margin = 1.0 + delta - norm;
    let inside = [x_margin, y_margin, lower_margin, upper_margin].iter().all(|&m| m >= -TOL_PSD);
    Ok(DomainCheck {
        x_margin,
        y_margin,
        lower_margin,
        upper_margin,
        norm,
        inside,
    })
}

/// Functions `f`, `g` and a weight on the dyadic tree of `[0, 1)`.
#[derive(Clone, Debug)]
pub struct WitnessConfig {
    pub tree: DyadicWeightTree,
    pub f: HaarExpansion,
    pub g: HaarExpansion,
}

impl WitnessConfig {
    pub fn new(tree: DyadicWeightTree, f: HaarExpansion, g: HaarExpansion) -> Result<Self> {
        for h in [&f, &g] {
            if h.depth != tree.depth || h.d != tree.d {
                return Err(Error::Dimension("functions do not match the tree".into()));
            }
        }
        Ok(WitnessConfig { tree, f, g })
    }

    pub fn depth(&self) -> usize {
        self.tree.depth
    }

    /// `(∫(Wf,f), ∫(W⁻¹g,g), ⟨f⟩, ⟨g⟩, ⟨W⟩, ⟨W⁻¹⟩)` over `[0, 1)`.
    pub fn point(&self) -> Result<BellmanPoint> {
        BellmanPoint::new(
            dyadic_mart::weighted_energy(self.tree.leaves(), &self.f),
            dyadic_mart::weighted_energy(self.tree.inverse_leaves(), &self.g),
            self.f.mean.clone(),
            self.g.mean.clone(),
            HermPd::new(self.tree.root_average().clone())?,
            HermPd::new(self.tree.root_inverse_average().clone())?,
        )
    }

    /// The same configuration one level deeper, every leaf split in two.
    pub fn refined(&self) -> Result<Self> {
        let dup = |v: &[CMatrix]| v.iter().flat_map(|m| [m.clone(), m.clone()]).collect::<Vec<_>>();
        let tree = build_tree_with_inverses(
            self.depth() + 1,
            self.tree.d,
            dup(self.tree.leaves()),
            dup(self.tree.inverse_leaves()),
        )?;
        let d = self.tree.d;
        let split = |h: &HaarExpansion| -> Result<HaarExpansion> {
            let leaves = h.to_leaves();
            let doubled: Vec<Complex64> = leaves.chunks(d).flat_map(|c| c.iter().chain(c.iter()).copied().collect::<Vec<_>>()).collect();
            HaarExpansion::from_leaves(h.depth + 1, d, &doubled)
        };
        WitnessConfig::new(tree, split(&self.f)?, split(&self.g)?)
    }
}

/// The dualized bilinear sum of the configuration, a lower bound for the
/// Bellman function at [`WitnessConfig::point`].
pub fn witness_value(cfg: &WitnessConfig) -> Result<f64> {
    dual_bilinear_sum(&cfg.tree, &cfg.f, &cfg.g)
}

/// Places `plus` on the right half `J₊` and `minus` on the left half `J₋`.
/// The averaged point must lie in `D_δ`.
pub fn concat_witnesses(plus: &WitnessConfig, minus: &WitnessConfig, delta: f64) -> Result<WitnessConfig> {
    if plus.depth() != minus.depth() || plus.tree.d != minus.tree.d {
        return Err(Error::Dimension("witnesses differ in depth or fiber dimension".into()));
    }
    let mid = BellmanPoint::midpoint(&plus.point()?, &minus.point()?)?;
    let check = in_domain(&mid, delta)?;
    if !check.inside {
        return Err(Error::OutsideDomain {
            x_margin: check.x_margin,
            y_margin: check.y_margin,
            lower_margin: check.lower_margin,
            upper_margin: check.upper_margin,
        });
    }
    let (depth, d) = (plus.depth() + 1, plus.tree.d);
    let join = |a: &[CMatrix], b: &[CMatrix]| a.iter().chain(b).cloned().collect::<Vec<_>>();
    let tree = build_tree_with_inverses(
        depth,
        d,
        join(minus.tree.leaves(), plus.tree.leaves()),
        join(minus.tree.inverse_leaves(), plus.tree.inverse_leaves()),
    )?;
    let glue = |a: &HaarExpansion, b: &HaarExpansion| -> Result<HaarExpansion> {
        let mut vals = a.to_leaves();
        vals.extend(b.to_leaves());
        HaarExpansion::from_leaves(depth, d, &vals)
    };
    WitnessConfig::new(tree, glue(&minus.f, &plus.f)?, glue(&minus.g, &plus.g)?)
}

/// Attempts per sample before the δ band is declared out of reach.
pub const BAND_RETRIES: usize = 20;

const MAX_GENERATOR_SCALE: f64 = 8.0;

fn leaves_for(poly: &RandomHermitianPoly, depth: usize, scale: f64) -> Result<(Vec<CMatrix>, Vec<CMatrix>)> {
    let count = 1usize << depth;
    let mut fwd = Vec::with_capacity(count);
    let mut inv = Vec::with_capacity(count);
    for l in 0..count {
        let x = (l as f64 + 0.5) / count as f64;
        let h = poly.eval([x, 0.0], 1.0).scale(scale);
        let eig = matlin::eigh(&h)?;
        fwd.push(eig.map(f64::exp));
        inv.push(eig.map(|v| (-v).exp()));
    }
    Ok((fwd, inv))
}

fn tree_at(poly: &RandomHermitianPoly, depth: usize, d: usize, scale: f64) -> Result<DyadicWeightTree> {
    let (fwd, inv) = leaves_for(poly, depth, scale)?;
    build_tree_with_inverses(depth, d, fwd, inv)
}

/// A random real symmetric weight tree `exp(ε H)` whose dyadic characteristic
/// satisfies `target/2 ≤ [W] - 1 ≤ target` when `target > 0`, or the identity
/// tree when `target = 0`. The scale `ε` is found by bisection.
pub fn sample_tree(depth: usize, d: usize, target: f64, rng: &mut impl Rng) -> Result<DyadicWeightTree> {
    if target == 0.0 {
        let id = vec![CMatrix::identity(d, d); 1 << depth];
        return build_tree_with_inverses(depth, d, id.clone(), id);
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("a single leaf cannot carry a positive delta".into()));
    }
    let goal = target * rng.gen_range(0.5..=1.0);
    for _ in 0..BAND_RETRIES {
        let poly = RandomHermitianPoly::new(1, d, 1.0, rng.gen(), 3, true);
        let excess = |eps: f64| -> Result<f64> { Ok(dyadic_mart::dyadic_a2(&tree_at(&poly, depth, d, eps)?) - 1.0) };
        let mut hi = 0.05;
        while hi < MAX_GENERATOR_SCALE && excess(hi)? < goal {
            hi *= 2.0;
        }
        if excess(hi)? < goal {
            continue;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if excess(mid)? < goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tree = tree_at(&poly, depth, d, lo)?;
        let e = dyadic_mart::dyadic_a2(&tree) - 1.0;
        if e >= 0.5 * target * (1.0 - 1e-9) && e <= target {
            return Ok(tree);
        }
    }
    Err(Error::BandMiss {
        delta: target,
        attempts: BAND_RETRIES,
    })
}

/// A random real witness on `tree`, rescaled so that `X = Y = 1`.
pub fn sample_witness(tree: DyadicWeightTree, rng: &mut impl Rng) -> Result<WitnessConfig> {
    let (depth, d) = (tree.depth, tree.d);
    let f = HaarExpansion::random(depth, d, true, rng);
    let g = HaarExpansion::random(depth, d, true, rng);
    let fx = dyadic_mart::weighted_energy(tree.leaves(), &f);
    let gy = dyadic_mart::weighted_energy(tree.inverse_leaves(), &g);
    if !(fx > 0.0 && gy > 0.0) {
        return Err(Error::NonFinite);
    }
    let (f, g) = (f.scaled(fx.sqrt().recip()), g.scaled(gy.sqrt().recip()));
    WitnessConfig::new(tree, f, g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeBoundRow {
    pub delta: f64,
    pub samples: usize,
    /// Largest `value / (X^{1/2} Y^{1/2})`.
    pub max_ratio: f64,
    /// `(max_ratio - 1)/√δ`.
    pub c_delta: f64,
    /// Largest `sup_σ ‖M_σ^W‖` among the sampled trees.
    pub martingale_sup: f64,
    /// Largest `ratio - sup_σ ‖M_σ^W‖` per sample; for real data the value
    /// is a martingale pairing, so this stays `≤ 0`.
    pub bound_gap: f64,
    /// Whether every martingale supremum was exhaustive.
    pub exhaustive: bool,
}

/// Per `δ`, samples witnesses with `[W] - 1 ≤ δ` and records the largest
/// normalized value. Sample `k` of row `i` uses seed stream `(seed, i, k)`.
pub fn size_bound_sweep(
    deltas: &[f64],
    per_delta: usize,
    seed: u64,
    depth: usize,
    d: usize,
    sign_budget: usize,
) -> Result<Vec<SizeBoundRow>> {
    if per_delta == 0 {
        return Err(Error::InvalidParameter("need at least one sample per delta".into()));
    }
    if let Some(&bad) = deltas.iter().find(|&&v| !(v > 0.0 && v <= 0.5)) {
        return Err(Error::InvalidParameter(format!("delta {bad} outside (0, 0.5]")));
    }
    deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let samples = (0..per_delta)
                .into_par_iter()
                .map(|k| {
                    let s = derive_seed2(seed, i as u64, k as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    let tree = sample_tree(depth, d, delta, &mut rng)?;
                    let sup = dyadic_mart::sup_sigma_norm(&tree, sign_budget, s)?;
                    let cfg = sample_witness(tree, &mut rng)?;
                    let p = cfg.point()?;
                    let ratio = witness_value(&cfg)? / (p.big_x * p.big_y).sqrt();
                    Ok((ratio, sup))
                })
                .collect::<Result<Vec<_>>>()?;
            let max_ratio = samples.iter().map(|s| s.0).fold(0.0, f64::max);
            Ok(SizeBoundRow {
                delta,
                samples: per_delta,
                max_ratio,
                c_delta: (max_ratio - 1.0) / delta.sqrt(),
                martingale_sup: samples.iter().map(|s| s.1.value).fold(0.0, f64::max),
                bound_gap: samples.iter().map(|s| s.0 - s.1.value).fold(f64::NEG_INFINITY, f64::max),
                exhaustive: samples.iter().all(|s| s.1.exhaustive),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn point(x: Vec<Complex64>) -> BellmanPoint {
        BellmanPoint::new(1.0, 1.0, x, vec![c(0.0), c(0.0)], HermPd::identity(2), HermPd::identity(2)).unwrap()
    }

    #[test]
    fn domain_examples() {
        let origin = in_domain(&point(vec![c(0.0), c(0.0)]), 0.1).unwrap();
        assert!(origin.inside);
        assert!(origin.lower_margin.abs() < 1e-15);
        let edge = in_domain(&point(vec![c(1.0), c(0.0)]), 0.1).unwrap();
        assert!(edge.inside && edge.x_margin.abs() < 1e-15);
        let out = in_domain(&point(vec![c(2.0), c(0.0)]), 0.1).unwrap();
        assert!(!out.inside);
        assert!((out.x_margin + 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_witness_value_is_cauchy_schwarz_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for depth in 1..4 {
            let tree = sample_tree(depth, 2, 0.0, &mut rng).unwrap();
            let cfg = sample_witness(tree, &mut rng).unwrap();
            assert!(witness_value(&cfg).unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sampled_tree_hits_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tree = sample_tree(3, 2, 0.09, &mut rng).unwrap();
        let e = dyadic_mart::dyadic_a2(&tree) - 1.0;
        assert!(e <= 0.09 && e >= 0.045 * (1.0 - 1e-9), "{e}");
    }

    #[test]
    fn refinement_preserves_point_and_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tree = sample_tree(2, 2, 0.1, &mut rng).unwrap();
        let cfg = sample_witness(tree, &mut rng).unwrap();
        let fine = cfg.refined().unwrap();
        assert!((witness_value(&cfg).unwrap() - witness_value(&fine).unwrap()).abs() < 1e-14);
        let (a, b) = (cfg.point().unwrap(), fine.point().unwrap());
        assert!((a.big_x - b.big_x).abs() < 1e-14);
        assert!(matlin::max_abs_diff(&a.r, &b.r) < 1e-14);
    }
}
