//! Dyadic machinery on `[0, 1)`: matrix-weight averages and their eigen-frames,
//! Haar expansions of vector functions, the martingale transform `M_σ^W`, the
//! dyadic `A₂` characteristic and exact weighted norms on finite trees.
//!
//! Conventions:
//! - Node `(j, i)` is the interval `[i·2^{-j}, (i+1)·2^{-j})`; its left son
//!   `I₋` is `(j+1, 2i)`, its right son `I₊` is `(j+1, 2i+1)`. Internal nodes
//!   (`j < N`) are stored in heap order `2^j - 1 + i`.
//! - `h_I = (χ_{I₊} - χ_{I₋}) / √|I|`, so the Haar coefficient
//!   `c_I = (f, h_I) = √|I|·(⟨f⟩_{I₊} - ⟨f⟩_{I₋}) / 2` and
//!   `Δ_I f = ⟨f⟩_{I₊} - ⟨f⟩_{I₋} = 2 c_I / √|I|`.
//! - The fiber pairing `(a, b) = Σ a_k conj(b_k)` is conjugate-linear in its
//!   second argument.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heat_ext::a2_objective;
use crate::matlin::{self, CMatrix, CVector, HermPd, HermitianEigen};
use crate::seeds::derive_seed;
use crate::weight_field::DyadicLeaves;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalue gaps below this make a frame ambiguous; such nodes are counted.
pub const EIGEN_GAP_FLAG: f64 = 1e-8;

/// Depth and fiber-dimension caps for dense weighted norms.
pub const MAX_DENSE_DEPTH: usize = 8;
pub const MAX_DENSE_FIBER: usize = 4;

/// Sign spaces up to this many bits are searched exhaustively.
pub const EXHAUSTIVE_BITS: usize = 16;

fn node_index(level: usize, i: usize) -> usize {
    (1 << level) - 1 + i
}

fn interval_len(level: usize) -> f64 {
    (0.5f64).powi(level as i32)
}

/// Averages of `W` and `W^{-1}` over every dyadic interval, plus the
/// canonical eigen-frames of `⟨W⟩_I` on internal nodes.
#[derive(Clone, Debug)]
pub struct DyadicWeightTree {
    pub depth: usize,
    pub d: usize,
    /// `averages[j][i] = ⟨W⟩_{(j,i)}`; level `depth` holds the leaves.
    pub averages: Vec<Vec<CMatrix>>,
    /// Same layout for `W^{-1}`, built from the leaf inverses.
    pub inverse_averages: Vec<Vec<CMatrix>>,
    /// Eigen-frames of `⟨W⟩_I` for internal nodes in heap order.
    pub frames: Vec<HermitianEigen>,
    /// Internal nodes whose frame has an eigenvalue gap below [`EIGEN_GAP_FLAG`].
    pub degenerate_nodes: usize,
}

impl DyadicWeightTree {
    pub fn internal_nodes(&self) -> usize {
        (1 << self.depth) - 1
    }

    pub fn root_average(&self) -> &CMatrix {
        &self.averages[0][0]
    }

    pub fn root_inverse_average(&self) -> &CMatrix {
        &self.inverse_averages[0][0]
    }

    pub fn leaves(&self) -> &[CMatrix] {
        &self.averages[self.depth]
    }

    pub fn inverse_leaves(&self) -> &[CMatrix] {
        &self.inverse_averages[self.depth]
    }

    pub fn frame(&self, level: usize, i: usize) -> &HermitianEigen {
        &self.frames[node_index(level, i)]
    }
}

/// Builds the tree from leaf weights; leaf inverses come from
/// [`matlin::inverse_pd`].
pub fn build_tree(leaves: &DyadicLeaves) -> Result<DyadicWeightTree> {
    let inverses = leaves
        .leaves
        .iter()
        .map(|w| matlin::inverse_pd(w).map(HermPd::into_inner))
        .collect::<Result<Vec<_>>>()?;
    let forward = leaves.leaves.iter().map(|w| (**w).clone()).collect();
    build_tree_with_inverses(leaves.depth, leaves.d, forward, inverses)
}

/// Builds the tree from leaves whose inverses are already known.
pub fn build_tree_with_inverses(
    depth: usize,
    d: usize,
    leaves: Vec<CMatrix>,
    inverse_leaves: Vec<CMatrix>,
) -> Result<DyadicWeightTree> {
    if leaves.len() != 1 << depth || inverse_leaves.len() != leaves.len() {
        return Err(Error::Dimension(format!("depth {depth} needs {} leaves", 1 << depth)));
    }
    if leaves.iter().chain(&inverse_leaves).any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::Dimension(format!("leaves must be {d}x{d}")));
    }
    let averages = average_levels(depth, leaves);
    let inverse_averages = average_levels(depth, inverse_leaves);
    let mut frames = Vec::with_capacity((1 << depth) - 1);
    let mut degenerate_nodes = 0;
    for level in averages.iter().take(depth) {
        for avg in level {
            let eig = matlin::eigh(avg)?;
            if !(eig.min() > 0.0) {
                return Err(Error::NotPositive {
                    min_eigenvalue: eig.min(),
                });
            }
            if eig.min_gap() < EIGEN_GAP_FLAG * eig.max() {
                degenerate_nodes += 1;
            }
            frames.push(eig);
        }
    }
    Ok(DyadicWeightTree {
        depth,
        d,
        averages,
        inverse_averages,
        frames,
        degenerate_nodes,
    })
}

fn average_levels(depth: usize, leaves: Vec<CMatrix>) -> Vec<Vec<CMatrix>> {
    let mut levels = vec![leaves];
    for _ in 0..depth {
        let below = levels.last().unwrap();
        let above: Vec<CMatrix> = below.chunks(2).map(|p| (&p[0] + &p[1]).scale(0.5)).collect();
        levels.push(above);
    }
    levels.reverse();
    levels
}

/// `sup_I ‖⟨W⟩_I^{1/2} ⟨W^{-1}⟩_I^{1/2}‖` over every node, leaves included.
pub fn dyadic_a2(tree: &DyadicWeightTree) -> f64 {
    tree.averages
        .iter()
        .zip(&tree.inverse_averages)
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(a, b)| a2_objective(a, b).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Haar expansion `f = mean + Σ_I c_I h_I` of a `C^d`-valued step function
/// on the `2^N` leaves of `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarExpansion {
    pub depth: usize,
    pub d: usize,
    pub mean: Vec<Complex64>,
    /// `coeffs[node·d + k]`, nodes in heap order.
    pub coeffs: Vec<Complex64>,
}

impl HaarExpansion {
    pub fn zeros(depth: usize, d: usize) -> Self {
        HaarExpansion {
            depth,
            d,
            mean: vec![ZERO; d],
            coeffs: vec![ZERO; ((1 << depth) - 1) * d],
        }
    }

    /// Expansion of the step function with `leaf_values[l·d + k]` on leaf `l`.
    pub fn from_leaves(depth: usize, d: usize, leaf_values: &[Complex64]) -> Result<Self> {
        if leaf_values.len() != (1 << depth) * d {
            return Err(Error::Dimension(format!(
                "expected {} leaf entries, got {}",
                (1 << depth) * d,
                leaf_values.len()
            )));
        }
        let mut out = HaarExpansion::zeros(depth, d);
        let mut level_avgs = leaf_values.to_vec();
        for level in (0..depth).rev() {
            let scale = interval_len(level).sqrt() * 0.5;
            let mut above = vec![ZERO; (1 << level) * d];
            for i in 0..(1 << level) {
                let node = node_index(level, i);
                for k in 0..d {
                    let left = level_avgs[(2 * i) * d + k];
                    let right = level_avgs[(2 * i + 1) * d + k];
                    out.coeffs[node * d + k] = (right - left) * scale;
                    above[i * d + k] = (right + left) * 0.5;
                }
            }
            level_avgs = above;
        }
        out.mean = level_avgs;
        Ok(out)
    }

    /// Leaf values `[l·d + k]` of the step function.
    pub fn to_leaves(&self) -> Vec<Complex64> {
        let d = self.d;
        let mut level_vals = self.mean.clone();
        for level in 0..self.depth {
            let inv = 1.0 / interval_len(level).sqrt();
            let mut below = vec![ZERO; (1 << (level + 1)) * d];
            for i in 0..(1 << level) {
                let node = node_index(level, i);
                for k in 0..d {
                    let avg = level_vals[i * d + k];
                    let c = self.coeffs[node * d + k] * inv;
                    below[(2 * i) * d + k] = avg - c;
                    below[(2 * i + 1) * d + k] = avg + c;
                }
            }
            level_vals = below;
        }
        level_vals
    }

    /// `h_I ⊗ v` for the node `(level, i)`.
    pub fn single(depth: usize, level: usize, i: usize, v: &[Complex64]) -> Result<Self> {
        if level >= depth || i >= (1 << level) {
            return Err(Error::InvalidParameter(format!("node ({level}, {i}) not internal at depth {depth}")));
        }
        let d = v.len();
        let mut out = HaarExpansion::zeros(depth, d);
        let node = node_index(level, i);
        out.coeffs[node * d..(node + 1) * d].copy_from_slice(v);
        Ok(out)
    }

    pub fn constant(depth: usize, v: &[Complex64]) -> Self {
        let mut out = HaarExpansion::zeros(depth, v.len());
        out.mean = v.to_vec();
        out
    }

    /// Independent standard normal mean and coefficients; imaginary parts are
    /// zero when `real` is set.
    pub fn random(depth: usize, d: usize, real: bool, rng: &mut impl Rng) -> Self {
        let mut draw = || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
            Complex64::new(re, im)
        };
        let mut out = HaarExpansion::zeros(depth, d);
        for z in out.mean.iter_mut() {
            *z = draw();
        }
        for z in out.coeffs.iter_mut() {
            *z = draw();
        }
        out
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.mean.iter().chain(&self.coeffs).map(|z| z.norm_sqr()).sum()
    }

    pub fn coefficient(&self, level: usize, i: usize) -> &[Complex64] {
        let node = node_index(level, i);
        &self.coeffs[node * self.d..(node + 1) * self.d]
    }

    /// `Δ_I f = ⟨f⟩_{I₊} - ⟨f⟩_{I₋}`.
    pub fn delta(&self, level: usize, i: usize) -> Vec<Complex64> {
        let s = 2.0 / interval_len(level).sqrt();
        self.coefficient(level, i).iter().map(|c| c * s).collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        HaarExpansion {
            depth: self.depth,
            d: self.d,
            mean: self.mean.iter().map(|z| z * a).collect(),
            coeffs: self.coeffs.iter().map(|z| z * a).collect(),
        }
    }
}

/// Signs `σ_I^k` for every internal node and eigen index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicSignPattern {
    pub depth: usize,
    pub d: usize,
    /// `signs[node·d + k]`.
    pub signs: Vec<i8>,
}

impl DyadicSignPattern {
    pub fn len_for(depth: usize, d: usize) -> usize {
        ((1 << depth) - 1) * d
    }

    pub fn constant(depth: usize, d: usize, sign: i8) -> Self {
        DyadicSignPattern {
            depth,
            d,
            signs: vec![sign.signum(); Self::len_for(depth, d)],
        }
    }

    /// Bit `b` of `bits` set means sign `-1` at position `b`.
    pub fn from_bits(depth: usize, d: usize, bits: u64) -> Self {
        let len = Self::len_for(depth, d);
        let signs = (0..len).map(|b| if b < 64 && (bits >> b) & 1 == 1 { -1 } else { 1 }).collect();
        DyadicSignPattern { depth, d, signs }
    }

    pub fn random(depth: usize, d: usize, rng: &mut impl Rng) -> Self {
        let len = Self::len_for(depth, d);
        DyadicSignPattern {
            depth,
            d,
            signs: (0..len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn flipped(&self, pos: usize) -> Self {
        let mut out = self.clone();
        out.signs[pos] = -out.signs[pos];
        out
    }
}

fn check_shapes(tree: &DyadicWeightTree, depth: usize, d: usize) -> Result<()> {
    if tree.depth != depth || tree.d != d {
        return Err(Error::Dimension(format!(
            "tree is depth {} / d {}, data is depth {depth} / d {d}",
            tree.depth, tree.d
        )));
    }
    Ok(())
}

/// `M_σ^W f = Σ_{I,k} σ_I^k (f, h_I e_I^k) h_I e_I^k`; the mean is annihilated.
pub fn martingale_apply(tree: &DyadicWeightTree, sigma: &DyadicSignPattern, f: &HaarExpansion) -> Result<HaarExpansion> {
    check_shapes(tree, f.depth, f.d)?;
    check_shapes(tree, sigma.depth, sigma.d)?;
    let d = f.d;
    let mut out = HaarExpansion::zeros(f.depth, d);
    for node in 0..tree.internal_nodes() {
        let e = &tree.frames[node].vectors;
        let c = &f.coeffs[node * d..(node + 1) * d];
        for k in 0..d {
            // (c, e_k) = e_k* c
            let mut proj = ZERO;
            for i in 0..d {
                proj += c[i] * e[(i, k)].conj();
            }
            proj *= sigma.signs[node * d + k] as f64;
            for i in 0..d {
                out.coeffs[node * d + i] += proj * e[(i, k)];
            }
        }
    }
    Ok(out)
}

/// Rank-one pieces of `W^{1/2} M_σ W^{-1/2}` on the leaf space, so that the
/// conjugated transform is `Σ σ_I^k u_{I,k} v_{I,k}*`.
///
/// With leaf-major coordinates `(l, i)` and the uniform leaf measure,
/// `M_σ = 2^{-N} Σ σ (h_I h_I^T) ⊗ (e e*)`; conjugating by the block-diagonal
/// leaf square roots gives `u = 2^{-N/2} h_I ⊗ W_l^{1/2} e` and
/// `v = 2^{-N/2} h_I ⊗ W_l^{-1/2} e`.
pub struct MartingaleNorms {
    depth: usize,
    d: usize,
    dim: usize,
    us: Vec<CVector>,
    vs: Vec<CVector>,
}

impl MartingaleNorms {
    pub fn new(tree: &DyadicWeightTree) -> Result<Self> {
        if tree.depth > MAX_DENSE_DEPTH || tree.d > MAX_DENSE_FIBER {
            return Err(Error::SizeCap(format!(
                "depth {} / d {} exceeds {MAX_DENSE_DEPTH} / {MAX_DENSE_FIBER}",
                tree.depth, tree.d
            )));
        }
        let (depth, d) = (tree.depth, tree.d);
        let leaves = 1usize << depth;
        let dim = leaves * d;
        let sq = tree.leaves().iter().map(|w| matlin::sqrt_pd(w).map(HermPd::into_inner)).collect::<Result<Vec<_>>>()?;
        let sq_inv = tree
            .inverse_leaves()
            .iter()
            .map(|w| matlin::sqrt_pd(w).map(HermPd::into_inner))
            .collect::<Result<Vec<_>>>()?;
        let norm = (leaves as f64).sqrt().recip();
        let mut us = Vec::with_capacity(tree.internal_nodes() * d);
        let mut vs = Vec::with_capacity(tree.internal_nodes() * d);
        for level in 0..depth {
            let span = leaves >> level;
            let h = interval_len(level).sqrt().recip();
            for i in 0..(1 << level) {
                let frame = tree.frame(level, i);
                for k in 0..d {
                    let e = frame.vectors.column(k);
                    let mut u = CVector::zeros(dim);
                    let mut v = CVector::zeros(dim);
                    for l in i * span..(i + 1) * span {
                        let sign = if l - i * span < span / 2 { -1.0 } else { 1.0 };
                        let a = &sq[l] * e;
                        let b = &sq_inv[l] * e;
                        for r in 0..d {
                            u[l * d + r] = a[r] * (sign * h * norm);
                            v[l * d + r] = b[r] * (sign * h * norm);
                        }
                    }
                    us.push(u);
                    vs.push(v);
                }
            }
        }
        Ok(MartingaleNorms { depth, d, dim, us, vs })
    }

    pub fn sign_bits(&self) -> usize {
        self.us.len()
    }

    /// Dense `W^{1/2} M_σ W^{-1/2}` on the `d·2^N`-dimensional leaf space.
    pub fn conjugated_matrix(&self, sigma: &DyadicSignPattern) -> Result<CMatrix> {
        if sigma.depth != self.depth || sigma.d != self.d {
            return Err(Error::Dimension("sign pattern does not match the tree".into()));
        }
        let mut s = DMatrix::zeros(self.dim, self.dim);
        for ((u, v), &sg) in self.us.iter().zip(&self.vs).zip(&sigma.signs) {
            let sg = sg as f64;
            for c in 0..self.dim {
                let vc = v[c].conj() * sg;
                if vc == ZERO {
                    continue;
                }
                for r in 0..self.dim {
                    s[(r, c)] += u[r] * vc;
                }
            }
        }
        Ok(s)
    }

    pub fn norm(&self, sigma: &DyadicSignPattern) -> Result<f64> {
        let s = self.conjugated_matrix(sigma)?;
        Ok(s.singular_values().iter().copied().fold(0.0, f64::max))
    }
}

/// `‖M_σ^W‖_{L²(W)}` on the finite tree, from the dense conjugated operator.
pub fn weighted_norm_exact(tree: &DyadicWeightTree, sigma: &DyadicSignPattern) -> Result<f64> {
    MartingaleNorms::new(tree)?.norm(sigma)
}

#[derive(Clone, Debug)]
pub struct SupSigma {
    pub value: f64,
    pub exhaustive: bool,
    pub best: DyadicSignPattern,
    pub evaluated: usize,
}

/// `sup_σ ‖M_σ^W‖_{L²(W)}`: exhaustive for at most [`EXHAUSTIVE_BITS`] sign
/// bits, otherwise the best of `budget` random patterns refined by greedy
/// single-sign flips.
pub fn sup_sigma_norm(tree: &DyadicWeightTree, budget: usize, seed: u64) -> Result<SupSigma> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let norms = MartingaleNorms::new(tree)?;
    let (depth, d) = (tree.depth, tree.d);
    let bits = norms.sign_bits();
    let best_of = |cands: Vec<Result<(f64, DyadicSignPattern)>>| -> Result<(f64, DyadicSignPattern)> {
        let mut best: Option<(f64, DyadicSignPattern)> = None;
        for c in cands {
            let c = c?;
            if best.as_ref().map_or(true, |b| c.0 > b.0) {
                best = Some(c);
            }
        }
        Ok(best.expect("non-empty candidate set"))
    };

    if bits <= EXHAUSTIVE_BITS {
        // σ and -σ give the same norm: fix the first sign.
        let total = 1u64 << bits.saturating_sub(1);
        let cands = (0..total)
            .into_par_iter()
            .map(|b| {
                let pat = DyadicSignPattern::from_bits(depth, d, b << 1);
                norms.norm(&pat).map(|v| (v, pat))
            })
            .collect();
        let (value, best) = best_of(cands)?;
        return Ok(SupSigma {
            value,
            exhaustive: true,
            best,
            evaluated: total as usize,
        });
    }

    let cands = (0..budget)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let pat = DyadicSignPattern::random(depth, d, &mut rng);
            norms.norm(&pat).map(|v| (v, pat))
        })
        .collect();
    let (mut value, mut best) = best_of(cands)?;
    let mut evaluated = budget;
    loop {
        let flips = (0..bits)
            .into_par_iter()
            .map(|pos| {
                let pat = best.flipped(pos);
                norms.norm(&pat).map(|v| (v, pat))
            })
            .collect();
        evaluated += bits;
        let (v, pat) = best_of(flips)?;
        if v > value * (1.0 + 1e-14) {
            value = v;
            best = pat;
        } else {
            break;
        }
    }
    Ok(SupSigma {
        value,
        exhaustive: false,
        best,
        evaluated,
    })
}

fn pairing(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// `(1/(4|J|)) Σ_{I ⊆ J} |(Δ_I f, Δ_I g)|·|I|` with `J = [0, 1)`.
pub fn dual_bilinear_sum(tree: &DyadicWeightTree, f: &HaarExpansion, g: &HaarExpansion) -> Result<f64> {
    check_shapes(tree, f.depth, f.d)?;
    check_shapes(tree, g.depth, g.d)?;
    let mut total = 0.0;
    for level in 0..f.depth {
        let len = interval_len(level);
        for i in 0..(1 << level) {
            total += pairing(&f.delta(level, i), &g.delta(level, i)).norm() * len;
        }
    }
    Ok(total / 4.0)
}

/// `(1/4) Σ_I Σ_k |(Δ_I f, e_I^k)|·|(Δ_I g, e_I^k)|·|I|`, the frame-wise
/// upper bound of [`dual_bilinear_sum`].
pub fn frame_collapse_sum(tree: &DyadicWeightTree, f: &HaarExpansion, g: &HaarExpansion) -> Result<f64> {
    check_shapes(tree, f.depth, f.d)?;
    check_shapes(tree, g.depth, g.d)?;
    let d = f.d;
    let mut total = 0.0;
    for level in 0..f.depth {
        let len = interval_len(level);
        for i in 0..(1 << level) {
            let e = &tree.frame(level, i).vectors;
            let df = f.delta(level, i);
            let dg = g.delta(level, i);
            for k in 0..d {
                let ek: Vec<Complex64> = e.column(k).iter().copied().collect();
                total += pairing(&df, &ek).norm() * pairing(&dg, &ek).norm() * len;
            }
        }
    }
    Ok(total / 4.0)
}

/// `∫ (W f, f)` over `[0, 1)` for a step function on the tree's leaves.
pub fn weighted_energy(leaves: &[CMatrix], f: &HaarExpansion) -> f64 {
    let d = f.d;
    let vals = f.to_leaves();
    let scale = 1.0 / leaves.len() as f64;
    leaves
        .iter()
        .enumerate()
        .map(|(l, w)| crate::heat_ext::quadratic_form(w, &vals[l * d..(l + 1) * d]))
        .sum::<f64>()
        * scale
}
