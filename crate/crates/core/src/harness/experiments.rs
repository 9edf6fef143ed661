use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::fit::{fit_constant, FitResult};
use crate::bellman_probe::{self, sample_tree, sample_witness, witness_value};
use crate::dyadic_mart::{self, build_tree_with_inverses, DyadicWeightTree};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::heat_ext::{heat_a2_estimate, A2Estimate, TimeGrid};
use crate::lp_functional::{duality_check, lp_report};
use crate::riesz_ops::{weighted_norm, MultiplierOp, PowerOptions, SignPattern};
use crate::seeds::{derive_seed, derive_seed2};
use crate::weight_field::{bump_vector_field, load_field, make_family, Family, VectorField, WeightField};

/// Seed streams; each experiment draws from its own.
const STREAM_LP: u64 = 1;
const STREAM_DUALITY: u64 = 2;
const STREAM_MARTINGALE: u64 = 3;
const STREAM_BELLMAN: u64 = 4;
const STREAM_POWER: u64 = 5;

/// Default `δ` grid of the size-bound sweep.
pub const DEFAULT_DELTAS: [f64; 5] = [0.01, 0.04, 0.09, 0.16, 0.25];
/// Default strengths of the full sweep.
pub const DEFAULT_EPS: [f64; 8] = [0.05, 0.075, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4];

/// One CSV table. Rows carry an integer key and are written in key order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<(Vec<u64>, Vec<String>)>,
}

impl Table {
    fn new(name: &str, header: Vec<&'static str>) -> Self {
        Table {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, key: Vec<u64>, cells: Vec<String>) {
        debug_assert_eq!(cells.len() + 1, self.header.len());
        self.rows.push((key, cells));
    }

    /// CSV text with the config hash as the first column of every row.
    pub fn to_csv(&self, hash: &str) -> String {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = self.header.join(",");
        out.push('\n');
        for (_, cells) in rows {
            out.push_str(hash);
            for c in cells {
                out.push(',');
                out.push_str(&c);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub fits: BTreeMap<String, FitResult>,
    /// Headline quantities compared by the stability check.
    pub headline: BTreeMap<String, f64>,
}

impl ExperimentOutput {
    fn merge(&mut self, other: ExperimentOutput) {
        self.tables.extend(other.tables);
        self.fits.extend(other.fits);
        self.headline.extend(other.headline);
    }
}

/// A numeric failure together with the row that produced it.
#[derive(Debug)]
pub struct RowFailure {
    pub row: String,
    pub error: Error,
}

type Outcome = std::result::Result<ExperimentOutput, RowFailure>;

fn fail(row: impl Into<String>) -> impl FnOnce(Error) -> RowFailure {
    let row = row.into();
    move |error| RowFailure { row, error }
}

fn num(v: f64) -> String {
    format!("{v}")
}

struct WeightCase {
    family: String,
    eps: f64,
    w: WeightField,
}

fn eps_label(eps: f64) -> String {
    if eps.is_nan() {
        "file".into()
    } else {
        format!("eps={eps}")
    }
}

fn weight_cases(cfg: &ExperimentConfig, family: &Family, eps_grid: &[f64]) -> std::result::Result<Vec<WeightCase>, RowFailure> {
    if let Some(path) = &cfg.weight_file {
        let w = load_field(path).map_err(fail(format!("weight file {}", path.display())))?;
        return Ok(vec![WeightCase {
            family: "file".into(),
            eps: f64::NAN,
            w,
        }]);
    }
    let fams: Vec<Family> = if eps_grid.is_empty() {
        vec![family.clone()]
    } else {
        eps_grid.iter().map(|&e| family.with_eps(e)).collect()
    };
    fams.into_iter()
        .map(|f| {
            let w = make_family(&f, cfg.grid, cfg.d).map_err(fail(format!("{} {}", f.name(), eps_label(f.eps()))))?;
            Ok(WeightCase {
                family: f.name().into(),
                eps: f.eps(),
                w,
            })
        })
        .collect()
}

fn time_grid(cfg: &ExperimentConfig, grid: &GridSpec) -> std::result::Result<TimeGrid, RowFailure> {
    cfg.time.build(grid).map_err(fail("time grid"))
}

/// The family strength whose heat characteristic is `1 + δ`, by bisection.
pub fn target_delta(
    family: &Family,
    grid: GridSpec,
    d: usize,
    tgrid: &TimeGrid,
    refine: usize,
    delta: f64,
    rel_tol: f64,
) -> Result<(f64, WeightField, A2Estimate)> {
    if matches!(family, Family::Identity) {
        return Err(Error::Config("the identity family cannot be tuned to a positive delta".into()));
    }
    let cap = if matches!(family, Family::ScalarOscillation { .. }) { 0.999 } else { 64.0 };
    let eval = |eps: f64| -> Result<(WeightField, A2Estimate)> {
        let w = make_family(&family.with_eps(eps), grid, d)?;
        let est = heat_a2_estimate(&w, tgrid, refine)?;
        Ok((w, est))
    };
    let mut hi = 0.1f64.min(cap);
    let mut at_hi = eval(hi)?;
    while at_hi.1.value - 1.0 < delta {
        if hi >= cap {
            return Err(Error::BandMiss { delta, attempts: 0 });
        }
        hi = (2.0 * hi).min(cap);
        at_hi = eval(hi)?;
    }
    let mut lo = 0.0;
    let mut best = (hi, at_hi);
    for _ in 0..100 {
        let excess = best.1 .1.value - 1.0;
        if (excess - delta).abs() <= rel_tol * delta {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let at_mid = eval(mid)?;
        let e = at_mid.1.value - 1.0;
        if e < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if (e - delta).abs() < (best.1 .1.value - 1.0 - delta).abs() {
            best = (mid, at_mid);
        }
    }
    let (eps, (w, est)) = best;
    Ok((eps, w, est))
}

/// Dyadic tree of a family on `[0, 1)`: leaf `l` carries the family's value at
/// the midpoint of its interval (exact inverses from the generator).
pub fn family_tree(family: &Family, depth: usize, d: usize) -> Result<DyadicWeightTree> {
    let leaves = 1usize << depth;
    let n = (2 * leaves).max(8);
    let grid = GridSpec::new(1, n, 1.0)?;
    let w = make_family(family, grid, d)?;
    let stride = n / leaves;
    let pick = |v: &[crate::matlin::HermPd]| (0..leaves).map(|l| (*v[l * stride + stride / 2]).clone()).collect();
    build_tree_with_inverses(depth, d, pick(&w.values), pick(&w.inverse_values))
}

/// A sum of two periodized Gaussians with random centers, widths in
/// `[0.1 L, L/8]` and complex normal directions, mean removed.
pub fn random_gaussian_field(grid: GridSpec, d: usize, rng: &mut impl Rng) -> Result<VectorField> {
    let l = grid.length;
    let mut total = VectorField::zeros(grid, d);
    for _ in 0..2 {
        let center = [rng.gen_range(0.0..l), rng.gen_range(0.0..l)];
        let width = rng.gen_range(0.1 * l..=0.125 * l);
        let dir: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        total = total.add(&bump_vector_field(center, width, &dir, grid)?)?;
    }
    Ok(total.remove_mean().0)
}

fn apply_weight(w: &WeightField, f: &VectorField) -> VectorField {
    let d = w.d;
    let mut out = f.clone();
    for (p, m) in w.values.iter().enumerate() {
        for i in 0..d {
            out.data[p * d + i] = (0..d).map(|j| m[(i, j)] * f.data[p * d + j]).sum();
        }
    }
    out
}

/// A test pair for the weighted estimate: `g = W f` (mean removed) when
/// `aligned`, otherwise an independent draw.
pub fn lp_pair(w: &WeightField, seed: u64, aligned: bool) -> Result<(VectorField, VectorField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_gaussian_field(w.grid, w.d, &mut rng)?;
    let g = if aligned {
        apply_weight(w, &f).remove_mean().0
    } else {
        random_gaussian_field(w.grid, w.d, &mut rng)?
    };
    Ok((f, g))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Outcome {
    match cfg.experiment {
        Experiment::A2h => a2h(cfg, &cfg.family(), &cfg.eps_grid),
        Experiment::RieszNorm => riesz_norm(cfg, &cfg.family(), &cfg.eps_grid),
        Experiment::Lp => lp(cfg, &cfg.family(), &cfg.eps_grid),
        Experiment::Duality => duality(cfg),
        Experiment::Martingale => martingale(cfg, &cfg.family(), &cfg.eps_grid),
        Experiment::BellmanSweep => bellman_sweep(cfg),
        Experiment::FullSweep => full_sweep(cfg),
    }
}

fn sweep_family(cfg: &ExperimentConfig) -> Family {
    match &cfg.family {
        Some(f) if !matches!(f, Family::Identity) => f.clone(),
        _ if cfg.d >= 2 => Family::RotatedDiagonal { eps: 0.1, theta: 0.3 },
        _ => Family::DiagonalExp { eps: 0.1 },
    }
}

fn full_sweep(cfg: &ExperimentConfig) -> Outcome {
    let family = sweep_family(cfg);
    let eps: Vec<f64> = if cfg.eps_grid.is_empty() { DEFAULT_EPS.to_vec() } else { cfg.eps_grid.clone() };
    let mut out = ExperimentOutput::default();
    out.merge(a2h(cfg, &family, &eps)?);
    out.merge(riesz_norm(cfg, &family, &eps)?);
    out.merge(lp(cfg, &family, &eps)?);
    out.merge(duality(cfg)?);
    let mart_fiber = cfg.d.min(dyadic_mart::MAX_DENSE_FIBER);
    let mut mcfg = cfg.clone();
    mcfg.d = mart_fiber;
    out.merge(martingale(&mcfg, &family, &eps)?);
    out.merge(bellman_sweep(&mcfg)?);
    Ok(out)
}

fn a2h(cfg: &ExperimentConfig, family: &Family, eps_grid: &[f64]) -> Outcome {
    let cases = weight_cases(cfg, family, eps_grid)?;
    let mut table = Table::new(
        "a2h",
        vec![
            "config_hash", "family", "eps", "m", "n", "d", "time_nodes", "grid_max", "a2h", "argmax_x1", "argmax_x2", "argmax_t",
        ],
    );
    let mut out = ExperimentOutput::default();
    for (i, case) in cases.iter().enumerate() {
        let tgrid = time_grid(cfg, &case.w.grid)?;
        let est = heat_a2_estimate(&case.w, &tgrid, cfg.refine_rounds)
            .map_err(fail(format!("a2h {} {}", case.family, eps_label(case.eps))))?;
        let g = case.w.grid;
        table.push(
            vec![i as u64],
            vec![
                case.family.clone(),
                num(case.eps),
                num(g.m as f64),
                num(g.n as f64),
                num(case.w.d as f64),
                num(tgrid.count() as f64),
                num(est.grid_max),
                num(est.value),
                num(est.argmax_x[0]),
                num(est.argmax_x[1]),
                num(est.argmax_t),
            ],
        );
        out.headline.insert(format!("a2h/{}", eps_label(case.eps)), est.value);
    }
    out.tables.push(table);
    Ok(out)
}

fn riesz_norm(cfg: &ExperimentConfig, family: &Family, eps_grid: &[f64]) -> Outcome {
    let cases = weight_cases(cfg, family, eps_grid)?;
    let mut table = Table::new(
        "riesz_norm",
        vec!["config_hash", "family", "eps", "a2h", "pattern", "norm", "iterations", "gap", "excess"],
    );
    let mut out = ExperimentOutput::default();
    let mut pairs = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let label = format!("{} {}", case.family, eps_label(case.eps));
        let tgrid = time_grid(cfg, &case.w.grid)?;
        let a2 = heat_a2_estimate(&case.w, &tgrid, cfg.refine_rounds).map_err(fail(format!("a2h {label}")))?.value;
        let mut worst: f64 = 0.0;
        for (j, pattern) in SignPattern::all(case.w.grid.m).iter().enumerate() {
            let row = format!("norm {label} {}", pattern.label());
            let op = MultiplierOp::signed_squares(case.w.grid, pattern).map_err(fail(row.clone()))?;
            let opts = PowerOptions {
                iters: cfg.tolerances.power_iters,
                tol: cfg.tolerances.power_tol,
                restarts: 3,
                seed: derive_seed2(cfg.seed, STREAM_POWER, (i * 64 + j) as u64),
            };
            let est = weighted_norm(&op, &case.w, &opts).map_err(fail(row))?;
            worst = worst.max(est.value);
            table.push(
                vec![i as u64, j as u64],
                vec![
                    case.family.clone(),
                    num(case.eps),
                    num(a2),
                    pattern.label(),
                    num(est.value),
                    num(est.iterations as f64),
                    num(est.gap),
                    num(est.value - 1.0),
                ],
            );
            out.headline.insert(format!("norm/{}/{}", eps_label(case.eps), pattern.label()), est.value);
        }
        if a2 > 1.0 {
            pairs.push(((a2 - 1.0).sqrt(), worst - 1.0));
        }
    }
    if pairs.len() >= 4 {
        let fit = fit_constant(&pairs).map_err(fail("riesz_norm fit"))?;
        out.headline.insert("riesz_norm/fitted_c".into(), fit.fitted_c);
        out.fits.insert("riesz_norm".into(), fit);
    }
    out.tables.push(table);
    Ok(out)
}

fn lp(cfg: &ExperimentConfig, family: &Family, eps_grid: &[f64]) -> Outcome {
    let mut cases = Vec::new();
    if cfg.weight_file.is_none() && !cfg.delta_grid.is_empty() {
        let tgrid = time_grid(cfg, &cfg.grid)?;
        for &delta in &cfg.delta_grid {
            let (eps, w, est) = target_delta(family, cfg.grid, cfg.d, &tgrid, cfg.refine_rounds, delta, cfg.tolerances.delta_target)
                .map_err(fail(format!("target delta={delta}")))?;
            cases.push((format!("delta={delta}"), family.name().to_string(), eps, w, est.value - 1.0));
        }
    } else {
        for case in weight_cases(cfg, family, eps_grid)? {
            let tgrid = time_grid(cfg, &case.w.grid)?;
            let a2 = heat_a2_estimate(&case.w, &tgrid, cfg.refine_rounds)
                .map_err(fail(format!("a2h {} {}", case.family, eps_label(case.eps))))?
                .value;
            cases.push((eps_label(case.eps), case.family, case.eps, case.w, a2 - 1.0));
        }
    }
    let mut table = Table::new(
        "lp",
        vec![
            "config_hash", "family", "eps", "delta", "pair", "kind", "lhs", "rhs_f", "rhs_g", "ratio", "tail_bound",
        ],
    );
    let mut out = ExperimentOutput::default();
    let mut c_max = f64::NEG_INFINITY;
    let mut pairs = Vec::new();
    for (i, (key, fam, eps, w, delta)) in cases.iter().enumerate() {
        let tgrid = time_grid(cfg, &w.grid)?;
        let reports = (0..cfg.samples)
            .into_par_iter()
            .map(|k| {
                let row = format!("lp {key} pair {k}");
                let seed = derive_seed2(cfg.seed, STREAM_LP, (i * 1_000_000 + k) as u64);
                let aligned = k % 2 == 0;
                let (f, g) = lp_pair(w, seed, aligned).map_err(fail(row.clone()))?;
                let rep = lp_report(w, &f, &g, &tgrid).map_err(fail(row))?;
                Ok((k, aligned, rep))
            })
            .collect::<std::result::Result<Vec<_>, RowFailure>>()?;
        let mut max_ratio: f64 = 0.0;
        for (k, aligned, rep) in reports {
            max_ratio = max_ratio.max(rep.ratio);
            table.push(
                vec![i as u64, k as u64],
                vec![
                    fam.clone(),
                    num(*eps),
                    num(*delta),
                    num(k as f64),
                    if aligned { "aligned" } else { "independent" }.into(),
                    num(rep.lhs),
                    num(rep.rhs_f),
                    num(rep.rhs_g),
                    num(rep.ratio),
                    num(rep.tail_bound),
                ],
            );
        }
        out.headline.insert(format!("lp_max_ratio/{key}"), max_ratio);
        if *delta > 1e-12 {
            c_max = c_max.max((max_ratio - 1.0) / delta.sqrt());
            pairs.push((delta.sqrt(), max_ratio - 1.0));
        }
    }
    if c_max.is_finite() {
        out.headline.insert("lp/C".into(), c_max);
    }
    if pairs.len() >= 4 {
        let fit = fit_constant(&pairs).map_err(fail("lp fit"))?;
        out.fits.insert("lp".into(), fit);
    }
    out.tables.push(table);
    Ok(out)
}

/// Gaussian test pair `k` of the duality experiment: real, scalar profiles
/// along a random real direction, means removed.
pub fn duality_pair(grid: GridSpec, d: usize, seed: u64) -> Result<(VectorField, VectorField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.length;
    let dir: Vec<Complex64> = (0..d).map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0)).collect();
    let bump = |rng: &mut ChaCha8Rng| -> Result<VectorField> {
        let center = [rng.gen_range(0.0..l), rng.gen_range(0.0..l)];
        let width = rng.gen_range(0.1 * l..=0.125 * l);
        Ok(bump_vector_field(center, width, &dir, grid)?.remove_mean().0)
    };
    let phi = bump(&mut rng)?;
    let psi = bump(&mut rng)?;
    Ok((phi, psi))
}

fn duality(cfg: &ExperimentConfig) -> Outcome {
    let grid = match &cfg.weight_file {
        Some(path) => load_field(path).map_err(fail("weight file"))?.grid,
        None => cfg.grid,
    };
    let tgrid = time_grid(cfg, &grid)?;
    let mut table = Table::new(
        "duality",
        vec![
            "config_hash", "pair", "axis", "multiplier_re", "multiplier_im", "heat_re", "heat_im", "residual", "tail_bound", "passed",
        ],
    );
    let rows = (0..cfg.samples)
        .into_par_iter()
        .flat_map(|k| (0..grid.m).into_par_iter().map(move |axis| (k, axis)))
        .map(|(k, axis)| {
            let row = format!("duality pair {k} axis {axis}");
            let (phi, psi) = duality_pair(grid, cfg.d, derive_seed2(cfg.seed, STREAM_DUALITY, k as u64)).map_err(fail(row.clone()))?;
            let rep = duality_check(&phi, &psi, axis, &tgrid).map_err(fail(row))?;
            Ok((k, axis, rep))
        })
        .collect::<std::result::Result<Vec<_>, RowFailure>>()?;
    let mut out = ExperimentOutput::default();
    let mut worst: f64 = 0.0;
    for (k, axis, rep) in rows {
        worst = worst.max(rep.residual);
        table.push(
            vec![k as u64, axis as u64],
            vec![
                num(k as f64),
                num((axis + 1) as f64),
                num(rep.multiplier_side.re),
                num(rep.multiplier_side.im),
                num(rep.heat_side.re),
                num(rep.heat_side.im),
                num(rep.residual),
                num(rep.tail_bound),
                (rep.residual <= cfg.tolerances.duality).to_string(),
            ],
        );
    }
    out.headline.insert("duality/max_residual".into(), worst);
    out.tables.push(table);
    Ok(out)
}

fn martingale(cfg: &ExperimentConfig, family: &Family, eps_grid: &[f64]) -> Outcome {
    let fams: Vec<Family> = if eps_grid.is_empty() {
        vec![family.clone()]
    } else {
        eps_grid.iter().map(|&e| family.with_eps(e)).collect()
    };
    let results = fams
        .par_iter()
        .enumerate()
        .map(|(i, fam)| {
            let row = format!("martingale {} {}", fam.name(), eps_label(fam.eps()));
            let tree = family_tree(fam, cfg.depth, cfg.d).map_err(fail(row.clone()))?;
            let a2 = dyadic_mart::dyadic_a2(&tree);
            let sup = dyadic_mart::sup_sigma_norm(&tree, cfg.sign_budget, derive_seed2(cfg.seed, STREAM_MARTINGALE, i as u64))
                .map_err(fail(row))?;
            Ok((i, fam, tree.degenerate_nodes, a2, sup))
        })
        .collect::<std::result::Result<Vec<_>, RowFailure>>()?;
    let mut table = Table::new(
        "martingale",
        vec![
            "config_hash", "family", "eps", "depth", "d", "a2", "sup_norm", "exhaustive", "evaluated", "degenerate_nodes", "ratio",
        ],
    );
    let mut out = ExperimentOutput::default();
    let mut pairs = Vec::new();
    for (i, fam, degenerate, a2, sup) in results {
        let x = (a2 - 1.0).max(0.0).sqrt();
        let ratio = if x > 0.0 { (sup.value - 1.0) / x } else { f64::NAN };
        table.push(
            vec![i as u64],
            vec![
                fam.name().into(),
                num(fam.eps()),
                num(cfg.depth as f64),
                num(cfg.d as f64),
                num(a2),
                num(sup.value),
                sup.exhaustive.to_string(),
                num(sup.evaluated as f64),
                num(degenerate as f64),
                num(ratio),
            ],
        );
        out.headline.insert(format!("martingale_sup/{}", eps_label(fam.eps())), sup.value);
        if x > 0.0 {
            pairs.push((x, sup.value - 1.0));
        }
    }
    if pairs.len() >= 4 {
        let fit = fit_constant(&pairs).map_err(fail("martingale fit"))?;
        out.headline.insert("martingale/fitted_c".into(), fit.fitted_c);
        out.fits.insert("martingale".into(), fit);
    }
    out.tables.push(table);
    Ok(out)
}

/// Largest `value/(X^{1/2}Y^{1/2})` over `samples` witnesses on identity trees.
pub fn identity_max_ratio(depth: usize, d: usize, samples: usize, seed: u64) -> Result<f64> {
    let ratios = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let tree = sample_tree(depth, d, 0.0, &mut rng)?;
            let cfg = sample_witness(tree, &mut rng)?;
            let p = cfg.point()?;
            Ok(witness_value(&cfg)? / (p.big_x * p.big_y).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

fn bellman_sweep(cfg: &ExperimentConfig) -> Outcome {
    let deltas: Vec<f64> = if cfg.delta_grid.is_empty() { DEFAULT_DELTAS.to_vec() } else { cfg.delta_grid.clone() };
    let d = cfg.d.min(dyadic_mart::MAX_DENSE_FIBER);
    let seed = derive_seed(cfg.seed, STREAM_BELLMAN);
    let rows = bellman_probe::size_bound_sweep(&deltas, cfg.samples, seed, cfg.depth, d, cfg.sign_budget)
        .map_err(fail("bellman size-bound sweep"))?;
    let id_ratio = identity_max_ratio(cfg.depth, d, cfg.samples, derive_seed(seed, u64::MAX)).map_err(fail("bellman identity trees"))?;
    let mut table = Table::new(
        "bellman_sweep",
        vec![
            "config_hash", "delta", "samples", "max_ratio", "c_delta", "martingale_sup", "bound_gap", "exhaustive",
        ],
    );
    let mut out = ExperimentOutput::default();
    let mut c_max = f64::NEG_INFINITY;
    for (i, r) in rows.iter().enumerate() {
        table.push(
            vec![i as u64],
            vec![
                num(r.delta),
                num(r.samples as f64),
                num(r.max_ratio),
                num(r.c_delta),
                num(r.martingale_sup),
                num(r.bound_gap),
                r.exhaustive.to_string(),
            ],
        );
        out.headline.insert(format!("bellman_c_delta/delta={}", r.delta), r.c_delta);
        c_max = c_max.max(r.c_delta);
    }
    out.headline.insert("bellman/max_c_delta".into(), c_max);
    out.headline.insert("bellman/identity_max_ratio".into(), id_ratio);
    out.tables.push(table);
    Ok(out)
}
