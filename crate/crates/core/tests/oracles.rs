mod common;

use common::*;
use mwlab::bellman_probe::{in_domain, BellmanPoint};
use mwlab::dyadic_mart::{
    build_tree, martingale_apply, sup_sigma_norm, weighted_norm_exact, DyadicSignPattern, HaarExpansion, MartingaleNorms,
};
use mwlab::grid::GridSpec;
use mwlab::heat_ext::{heat_pairing_field, heat_slice};
use mwlab::matlin::{self, CMatrix, HermPd};
use mwlab::riesz_ops::{apply_multiplier, weighted_norm, MultiplierOp, PowerOptions, SignPattern};
use mwlab::weight_field::{
    bump_vector_field, dyadic_leaf_weight, load_field, make_family, save_field, Family, ScalarField, VectorField,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    matlin::max_abs_diff(a, b) / b.iter().map(|z| z.norm()).fold(1e-300, f64::max)
}

#[test]
fn hestenes_agrees_with_nalgebra_svd() {
    let mut r = rng(1);
    for d in [1, 3, 7, 12] {
        let a = random_matrix(d, &mut r);
        let ours = hestenes_singular_values(&a);
        let mut theirs: Vec<f64> = a.singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12 * theirs[0], "{ours:?} vs {theirs:?}");
        }
    }
}

#[test]
fn matlin_matches_independent_oracles() {
    let mut r = rng(2);
    for k in 0..300 {
        let d = 1 + k % 6;
        let a = random_hpd(d, 1e4, &mut r);
        let s = matlin::sqrt_pd(&a).unwrap();
        assert!(rel(&s, &nalgebra_sqrt(&a)) < 1e-9, "sqrt draw {k}");
        let inv = matlin::inverse_pd(&a).unwrap();
        let oracle = a.clone().try_inverse().unwrap();
        assert!(rel(&inv, &oracle) < 1e-8, "inverse draw {k}");
        let m = random_matrix(d, &mut r);
        let n = matlin::spectral_norm(&m).unwrap();
        let o = hestenes_norm(&m);
        assert!((n - o).abs() < 1e-10 * o, "norm draw {k}: {n} vs {o}");
    }
}

#[test]
fn weighted_norm_matches_dense_svd_on_64_points() {
    let grid = GridSpec::new(2, 8, 1.0).unwrap();
    let families = [
        Family::RotatedDiagonal { eps: 0.5, theta: 0.3 },
        Family::RandomSmooth {
            eps: 0.3,
            seed: 7,
            cutoff: 2,
        },
    ];
    let opts = PowerOptions {
        iters: 20000,
        tol: 1e-14,
        restarts: 3,
        seed: 11,
    };
    for family in &families {
        let w = make_family(family, grid, 2).unwrap();
        let mut ops: Vec<MultiplierOp> = SignPattern::all(2)
            .iter()
            .map(|p| MultiplierOp::signed_squares(grid, p).unwrap())
            .collect();
        ops.push(MultiplierOp::riesz(grid, 0).unwrap());
        ops.push(MultiplierOp::riesz(grid, 1).unwrap());
        for op in &ops {
            let est = weighted_norm(op, &w, &opts).unwrap().value;
            let oracle = hestenes_norm(&dense_conjugated(&grid, &op.symbol, &w));
            assert!((est - oracle).abs() < 1e-6 * oracle, "{family:?}: {est} vs {oracle}");
        }
    }
}

#[test]
fn hilbert_transform_of_gaussian_derivative() {
    let l = 1.0;
    let grid = GridSpec::new(1, 256, l).unwrap();
    let (s, center) = (0.04, 0.5);
    let deriv = |y: f64| -y / (s * s) * (-y * y / (2.0 * s * s)).exp();
    let f = VectorField::from_fn(grid, 1, |x| {
        let v: f64 = (-4..=4).map(|k| deriv(x[0] - center + k as f64 * l)).sum();
        vec![c(v)]
    })
    .unwrap();
    let hf = apply_multiplier(&MultiplierOp::riesz(grid, 0).unwrap(), &f).unwrap();
    let expected: Vec<f64> = (0..grid.count())
        .map(|p| periodic_hilbert_gaussian_derivative(grid.coords(p)[0] - center, s, l, 200))
        .collect();
    let scale = expected.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (p, e) in expected.iter().enumerate() {
        let got = hf.data[p];
        assert!(got.im.abs() < 1e-12 * scale);
        assert!((got.re - e).abs() < 1e-8 * scale, "x = {}: {} vs {e}", grid.coords(p)[0], got.re);
    }
}

fn periodic_gaussian(x: [f64; 2], center: [f64; 2], var: f64, grid: &GridSpec) -> f64 {
    let l = grid.length;
    let axis = |v: f64| -> f64 {
        (-4..=4)
            .map(|k| {
                let y = v + k as f64 * l;
                (-y * y / (2.0 * var)).exp()
            })
            .sum()
    };
    let mut out = axis(x[0] - center[0]);
    if grid.m == 2 {
        out *= axis(x[1] - center[1]);
    }
    out
}

#[test]
fn heat_of_gaussian_is_wider_gaussian() {
    for (m, n, w) in [(1, 128, 0.05), (2, 64, 0.06)] {
        let grid = GridSpec::new(m, n, 1.0).unwrap();
        let center = [0.37, 0.61];
        let f = ScalarField::from_fn(grid, |x| c(periodic_gaussian(x, center, w * w, &grid)));
        for t in [1e-4, 1e-3, 5e-3] {
            let out = heat_slice(&f, t).unwrap().field;
            let var = w * w + 2.0 * t;
            let amp = (w * w / var).powf(m as f64 / 2.0);
            for p in 0..grid.count() {
                let e = amp * periodic_gaussian(grid.coords(p), center, var, &grid);
                assert!((out.values[p].re - e).abs() < 1e-11, "m = {m}, t = {t}");
                assert!(out.values[p].im.abs() < 1e-12);
            }
        }
    }
}

fn direct_kernel_sum(q: &[f64], grid: &GridSpec, t: f64) -> Vec<f64> {
    let vol = grid.cell_volume();
    (0..grid.count())
        .map(|p| {
            let xp = grid.coords(p);
            (0..grid.count())
                .map(|r| {
                    let xr = grid.coords(r);
                    periodic_heat_kernel([xp[0] - xr[0], xp[1] - xr[1]], t, grid) * q[r] * vol
                })
                .sum()
        })
        .collect()
}

fn pointwise_pairing(w: &[HermPd], f: &VectorField) -> Vec<f64> {
    let d = f.d;
    (0..w.len())
        .map(|p| {
            let v = DMatrix::from_column_slice(d, 1, f.at(p));
            (v.adjoint() * &*w[p] * &v)[(0, 0)].re
        })
        .collect()
}

#[test]
fn heat_pairing_matches_direct_kernel_sum() {
    let g1 = GridSpec::new(1, 64, 1.0).unwrap();
    let w1 = make_family(&Family::RotatedDiagonal { eps: 0.4, theta: 0.3 }, g1, 2).unwrap();
    let f1 = bump_vector_field([0.3, 0.0], 0.08, &[c(1.0), Complex64::new(0.5, -0.3)], g1).unwrap();

    let g2 = GridSpec::new(2, 16, 1.0).unwrap();
    let w2 = make_family(
        &Family::RandomSmooth {
            eps: 0.3,
            seed: 3,
            cutoff: 2,
        },
        g2,
        2,
    )
    .unwrap();
    let tau = 2.0 * std::f64::consts::PI;
    let f2 = VectorField::from_fn(g2, 2, |x| {
        vec![
            c((tau * x[0]).cos() + 0.5 * (tau * x[1]).sin()),
            Complex64::new((tau * (x[0] + x[1])).sin(), 0.2),
        ]
    })
    .unwrap();

    for (grid, w, f) in [(g1, &w1, &f1), (g2, &w2, &f2)] {
        let q = pointwise_pairing(&w.values, f);
        let h = grid.spacing();
        for t in [4.0 * h * h, 1e-3 + 4.0 * h * h, 1e-2] {
            let ours = heat_pairing_field(w, f, t).unwrap().field.values;
            let oracle = direct_kernel_sum(&q, &grid, t);
            let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a.re - b).abs() < 1e-9 * scale, "m = {}, t = {t}: {} vs {b}", grid.m, a.re);
            }
        }
    }
}

fn haar_value(depth: usize, level: usize, i: usize, l: usize) -> f64 {
    let span = (1usize << depth) >> level;
    if l < i * span || l >= (i + 1) * span {
        return 0.0;
    }
    let len = 0.5f64.powi(level as i32);
    if l - i * span < span / 2 {
        -1.0 / len.sqrt()
    } else {
        1.0 / len.sqrt()
    }
}

/// `M = Σ σ_I h_I h_I^T 2^{-N}` acting on leaf values of a scalar function.
fn scalar_transform(depth: usize, node_signs: &[f64]) -> DMatrix<f64> {
    let leaves = 1usize << depth;
    let mut m = DMatrix::zeros(leaves, leaves);
    let mut node = 0;
    for level in 0..depth {
        for i in 0..(1 << level) {
            for a in 0..leaves {
                for b in 0..leaves {
                    m[(a, b)] += node_signs[node] * haar_value(depth, level, i, a) * haar_value(depth, level, i, b) / leaves as f64;
                }
            }
            node += 1;
        }
    }
    m
}

#[test]
fn scalar_weight_martingale_matches_dense_transform() {
    let mut r = rng(5);
    let depth = 3;
    let d = 2;
    for _ in 0..10 {
        let w: Vec<f64> = (0..1 << depth).map(|_| r.gen_range(0.3..3.0)).collect();
        let tree = build_tree(
            &dyadic_leaf_weight(w.iter().map(|&v| HermPd::from_diagonal(&[v; 2]).unwrap()).collect()).unwrap(),
        )
        .unwrap();
        let nodes = (1 << depth) - 1;
        let node_signs: Vec<f64> = (0..nodes).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let sigma = DyadicSignPattern {
            depth,
            d,
            signs: node_signs.iter().flat_map(|&s| [s as i8; 2]).collect(),
        };
        let m = scalar_transform(depth, &node_signs);
        let conj = CMatrix::from_fn(1 << depth, 1 << depth, |a, b| c(w[a].sqrt() * m[(a, b)] / w[b].sqrt()));
        let oracle = hestenes_norm(&conj);
        let ours = weighted_norm_exact(&tree, &sigma).unwrap();
        assert!((ours - oracle).abs() < 1e-10 * oracle, "{ours} vs {oracle}");

        let f = HaarExpansion::random(depth, d, false, &mut r);
        let got = martingale_apply(&tree, &sigma, &f).unwrap().to_leaves();
        let vals = f.to_leaves();
        for k in 0..d {
            for a in 0..1 << depth {
                let e: Complex64 = (0..1 << depth).map(|b| vals[b * d + k] * m[(a, b)]).sum();
                assert!((got[a * d + k] - e).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn conjugated_matrix_intertwines_with_transform() {
    let mut r = rng(6);
    let depth = 3;
    let d = 2;
    let leaves: Vec<HermPd> = (0..1 << depth).map(|_| HermPd::new(random_hpd(d, 20.0, &mut r)).unwrap()).collect();
    let tree = build_tree(&dyadic_leaf_weight(leaves.clone()).unwrap()).unwrap();
    let norms = MartingaleNorms::new(&tree).unwrap();
    let sigma = DyadicSignPattern::random(depth, d, &mut r);
    let s = norms.conjugated_matrix(&sigma).unwrap();
    let f = HaarExpansion::random(depth, d, false, &mut r);
    let mf = martingale_apply(&tree, &sigma, &f).unwrap().to_leaves();
    let vals = f.to_leaves();
    let lift = |v: &[Complex64]| -> nalgebra::DVector<Complex64> {
        let mut out = nalgebra::DVector::zeros(v.len());
        for (l, w) in leaves.iter().enumerate() {
            let block = nalgebra_sqrt(w) * nalgebra::DVector::from_column_slice(&v[l * d..(l + 1) * d]);
            out.rows_mut(l * d, d).copy_from(&block);
        }
        out
    };
    let lhs = &s * lift(&vals);
    let rhs = lift(&mf);
    assert!((lhs - &rhs).norm() < 1e-11 * rhs.norm().max(1.0));
}

#[test]
fn two_leaf_supremum_by_hand() {
    let mut r = rng(7);
    for _ in 0..5 {
        let w0 = random_hpd(2, 30.0, &mut r);
        let w1 = random_hpd(2, 30.0, &mut r);
        let tree = build_tree(
            &dyadic_leaf_weight(vec![HermPd::new(w0.clone()).unwrap(), HermPd::new(w1.clone()).unwrap()]).unwrap(),
        )
        .unwrap();
        let avg = (&w0 + &w1).scale(0.5);
        let eig = avg.symmetric_eigen();
        let (s0, s1) = (nalgebra_sqrt(&w0), nalgebra_sqrt(&w1));
        let (i0, i1) = (nalgebra_sqrt(&w0.clone().try_inverse().unwrap()), nalgebra_sqrt(&w1.clone().try_inverse().unwrap()));
        let mut best = 0.0f64;
        for bits in 0..4u32 {
            let mut p = CMatrix::zeros(2, 2);
            for k in 0..2 {
                let sg = if bits >> k & 1 == 1 { -1.0 } else { 1.0 };
                let e = eig.eigenvectors.column(k);
                p += (e * e.adjoint()).scale(sg);
            }
            let half = p.scale(0.5);
            let blocks = [[&s0 * &half * &i0, -(&s0 * &half * &i1)], [-(&s1 * &half * &i0), &s1 * &half * &i1]];
            let mut full = CMatrix::zeros(4, 4);
            for a in 0..2 {
                for b in 0..2 {
                    full.view_mut((2 * a, 2 * b), (2, 2)).copy_from(&blocks[a][b]);
                }
            }
            best = best.max(hestenes_norm(&full));
        }
        let sup = sup_sigma_norm(&tree, 16, 0).unwrap();
        assert!(sup.exhaustive);
        assert!((sup.value - best).abs() < 1e-10 * best, "{} vs {best}", sup.value);
    }
}

fn random_point(r: &mut ChaCha8Rng) -> BellmanPoint {
    let d = 2;
    let vec = |r: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..d)
            .map(|_| Complex64::new(StandardNormal.sample(r), StandardNormal.sample(r)) * 0.7)
            .collect()
    };
    let big_x = r.gen_range(0.5..2.0);
    let big_y = r.gen_range(0.5..2.0);
    let (x, y) = (vec(r), vec(r));
    let rm = HermPd::new(random_hpd(d, 5.0, r)).unwrap();
    let sm = HermPd::new(random_hpd(d, 5.0, r)).unwrap();
    BellmanPoint::new(big_x, big_y, x, y, rm, sm).unwrap()
}

/// `min_e X(se,e) - |(x,e)|²` over `count` random unit directions.
fn sampled_margin(big: f64, m: &CMatrix, v: &[Complex64], count: usize, r: &mut ChaCha8Rng) -> f64 {
    let d = v.len();
    let mut best = f64::INFINITY;
    for _ in 0..count {
        let mut e: Vec<Complex64> = (0..d).map(|_| Complex64::new(StandardNormal.sample(r), StandardNormal.sample(r))).collect();
        let n = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        e.iter_mut().for_each(|z| *z /= n);
        let mut quad = c(0.0);
        for i in 0..d {
            for j in 0..d {
                quad += e[i].conj() * m[(i, j)] * e[j];
            }
        }
        let proj: Complex64 = v.iter().zip(&e).map(|(a, b)| a * b.conj()).sum();
        best = best.min(big * quad.re - proj.norm_sqr());
    }
    best
}

#[test]
fn domain_reduction_agrees_with_direction_sampling() {
    let mut r = rng(8);
    let mut outside = 0;
    for _ in 0..40 {
        let p = random_point(&mut r);
        let check = in_domain(&p, 0.5).unwrap();
        for (big, m, v, margin) in [(p.big_x, &*p.s, &p.x, check.x_margin), (p.big_y, &*p.r, &p.y, check.y_margin)] {
            let exact = CMatrix::from_fn(2, 2, |i, j| m[(i, j)] * big - v[i] * v[j].conj())
                .symmetric_eigen()
                .eigenvalues
                .min();
            assert!((margin - exact).abs() < 1e-10 * big.max(1.0) * 10.0);
            let sampled = sampled_margin(big, m, v, 10_000, &mut r);
            assert!(sampled >= margin - 1e-10);
            let spread = big * m.norm() + v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!(sampled - margin < 1e-2 * spread, "{sampled} vs {margin}");
            if margin < -1e-6 * spread {
                assert!(sampled < 0.0);
                outside += 1;
            }
        }
        let rs = nalgebra_sqrt(&p.r) * nalgebra_sqrt(&p.s);
        assert!((check.norm - hestenes_norm(&rs)).abs() < 1e-10 * check.norm);
    }
    assert!(outside > 0, "no outside points drawn");
}

#[test]
fn field_file_round_trip() {
    let grid = GridSpec::new(2, 8, 2.0).unwrap();
    let w = make_family(
        &Family::RandomSmooth {
            eps: 0.4,
            seed: 1,
            cutoff: 2,
        },
        grid,
        3,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.mwlf");
    save_field(&w, &path).unwrap();
    let back = load_field(&path).unwrap();
    assert_eq!(back.grid, w.grid);
    assert_eq!(back.d, w.d);
    for (a, b) in back.values.iter().zip(&w.values) {
        assert_eq!(**a, **b);
    }
}
