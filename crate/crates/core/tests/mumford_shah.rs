mod common;

use common::*;
use normint::domain::{Direction, DomainMask};
use normint::fields::{DepthMap, GradientField, PriorField};
use normint::linalg::SolverConfig;
use normint::metrics::aligned_rmse;
use normint::mumford_shah::*;
use normint::operators::Discretization;
use normint::quadratic::integrate_quadratic;
use normint::synthetic::{generate_surface, SurfaceKind, SurfaceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(h: usize, w: usize) -> Discretization {
    Discretization::from_mask(DomainMask::full(h, w).unwrap()).unwrap()
}

fn tight(mu: f64, epsilon: f64) -> MsConfig {
    let mut cfg = MsConfig {
        mu,
        epsilon,
        ..Default::default()
    };
    cfg.solver.rel_tolerance = 1e-14;
    cfg.solver.max_iterations = 5000;
    cfg
}

struct Instance {
    disc: Discretization,
    g: GradientField,
    prior: PriorField,
    z: Vec<f64>,
    w: IndicatorFields,
}

fn random_instance(seed: u64, h: usize, w: usize) -> Instance {
    let disc = grid(h, w);
    let n = disc.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = GradientField::new(random_vec(&mut rng, n, 1.0), random_vec(&mut rng, n, 1.0)).unwrap();
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let prior = PriorField::new(random_vec(&mut rng, n, 1.0), lambda).unwrap();
    let z = random_vec(&mut rng, n, 2.0);
    let w = IndicatorFields {
        w: std::array::from_fn(|_| (0..n).map(|_| rng.random_range(0.0..1.2)).collect()),
    };
    Instance { disc, g, prior, z, w }
}

#[test]
fn perfect_fit_has_zero_energy() {
    let disc = grid(5, 4);
    let n = disc.len();
    let z: Vec<f64> = disc.domain.index().pixels().iter().map(|&(u, v)| 2.0 * u as f64 - v as f64).collect();
    let g = GradientField::new(vec![2.0; n], vec![-1.0; n]).unwrap();
    let e = at_energy(&disc.ops, &g, &PriorField::uniform(n, 0.0), &MsConfig::default(), &z, &IndicatorFields::ones(n));
    assert!(e.abs() < 1e-20);
}

#[test]
fn zero_indicators_cost_only_the_well() {
    let inst = random_instance(1, 4, 5);
    let n = inst.disc.len();
    let cfg = MsConfig::default();
    let e = at_energy(&inst.disc.ops, &inst.g, &PriorField::uniform(n, 0.0), &cfg, &inst.z, &IndicatorFields::constant(n, 0.0));
    assert!((e - 4.0 * n as f64 / (8.0 * cfg.epsilon)).abs() < 1e-10);
}

#[test]
fn energy_matches_term_by_term_sum() {
    let (h, w) = (4, 3);
    let inst = random_instance(2, h, w);
    let n = inst.disc.len();
    let cfg = MsConfig {
        mu: 3.7,
        epsilon: 0.2,
        ..Default::default()
    };
    let data = [&inst.g.p, &inst.g.p, &inst.g.q, &inst.g.q];
    let mut expected = 0.0;
    for v in 0..w {
        for u in 0..h {
            let i = v * h + u;
            let nb = [(u + 1 < h).then(|| i + 1), (u > 0).then(|| i - 1), (v + 1 < w).then(|| i + h), (v > 0).then(|| i - h)];
            for k in 0..4 {
                let wk = &inst.w.w[k];
                if let Some(j) = nb[k] {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let dz = sign * (inst.z[j] - inst.z[i]);
                    let dw = sign * (wk[j] - wk[i]);
                    expected += cfg.mu / 2.0 * (wk[i] * (dz - data[k][i])).powi(2);
                    expected += cfg.epsilon / 2.0 * dw * dw;
                }
                expected += (wk[i] - 1.0).powi(2) / (8.0 * cfg.epsilon);
            }
            expected += inst.prior.lambda[i] * (inst.z[i] - inst.prior.z0[i]).powi(2);
        }
    }
    let e = at_energy(&inst.disc.ops, &inst.g, &inst.prior, &cfg, &inst.z, &inst.w);
    assert!((e - expected).abs() < 1e-10 * expected.max(1.0), "{e} vs {expected}");
    assert_eq!(n, h * w);
}

#[test]
fn unit_indicators_reduce_to_least_squares() {
    let pb = problem(SurfaceKind::SmoothBumps, 12, SurfaceParams::default(), 0.05, 9, false);
    let n = pb.disc.len();
    let mu = 7.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
    let prior = PriorField::new(random_vec(&mut rng, n, 1.0), lambda).unwrap();
    let z = ms_z_update(&pb.disc.ops, &vec![0.0; n], &IndicatorFields::ones(n), &pb.g, &prior, &tight(mu, 0.1)).unwrap();
    // (µΣDᵀD + 2Λ²) z = µΣDᵀg + 2Λ²z⁰ is the quadratic system with weights λ/µ
    let scaled = PriorField::new(prior.z0.clone(), prior.lambda.iter().map(|l| l / mu).collect()).unwrap();
    let zq = integrate_quadratic(&pb.disc, &pb.g, &scaled, &SolverConfig::default().with_tolerance(1e-13)).unwrap();
    assert!(aligned_rmse(&z, &zq.depth.z, None).unwrap() < 1e-6);
}

#[test]
fn zero_indicators_return_the_prior() {
    let inst = random_instance(5, 5, 5);
    let n = inst.disc.len();
    let z = ms_z_update(&inst.disc.ops, &inst.z, &IndicatorFields::constant(n, 0.0), &inst.g, &inst.prior, &tight(10.0, 0.1))
        .unwrap();
    assert!(max_diff(&z, &inst.prior.z0) < 1e-12);
}

#[test]
fn updates_match_dense_normal_equations() {
    let (h, w) = (4, 4);
    let inst = random_instance(6, h, w);
    let n = inst.disc.len();
    let cfg = tight(2.5, 0.15);
    let d = dense_differences(h, w);
    let data = [&inst.g.p, &inst.g.p, &inst.g.q, &inst.g.q];

    let mut a = vec![vec![0.0; n]; n];
    let mut b: Vec<f64> = (0..n).map(|i| 2.0 * inst.prior.lambda[i] * inst.prior.z0[i]).collect();
    for i in 0..n {
        a[i][i] += 2.0 * inst.prior.lambda[i];
    }
    for k in 0..4 {
        let wk: Vec<f64> = inst.w.w[k].iter().map(|x| cfg.mu * x * x).collect();
        dense_accumulate(&mut a, &mut b, &d[k], &wk, data[k]);
    }
    let z = ms_z_update(&inst.disc.ops, &inst.z, &inst.w, &inst.g, &inst.prior, &cfg).unwrap();
    assert!(max_diff(&z, &dense_solve(a, b)) < 1e-8);

    for (k, dir) in Direction::ALL.into_iter().enumerate() {
        let dz = dense_matvec(&d[k], &z);
        let well = 1.0 / (4.0 * cfg.epsilon);
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![well; n];
        for i in 0..n {
            let has_row = d[k][i].iter().any(|&x| x != 0.0);
            let r = if has_row { dz[i] - data[k][i] } else { 0.0 };
            a[i][i] += cfg.mu * r * r + well;
        }
        dense_accumulate(&mut a, &mut b, &d[k], &vec![cfg.epsilon; n], &vec![0.0; n]);
        let wk = ms_w_update(&inst.disc.ops, &z, inst.w.get(dir), dir, &inst.g, &cfg).unwrap();
        assert!(max_diff(&wk, &dense_solve(a, b)) < 1e-8, "{dir:?}");
    }
}

#[test]
fn single_large_residual_closed_form() {
    let disc = grid(7, 7);
    let n = disc.len();
    let centre = disc.domain.index().index_of(3, 3).unwrap();
    let mut p = vec![0.0; n];
    let r = 50.0;
    p[centre] = -r;
    let g = GradientField::new(p, vec![0.0; n]).unwrap();
    let (mu, epsilon) = (1.0, 1e-3);
    let w = ms_w_update(&disc.ops, &vec![0.0; n], &vec![1.0; n], Direction::UPlus, &g, &tight(mu, epsilon)).unwrap();
    let closed = 1.0 / (1.0 + 4.0 * epsilon * mu * r * r);
    assert!((w[centre] - closed).abs() < 1e-3 * closed, "{} vs {closed}", w[centre]);
    assert!(w[centre] < 0.1);
}

#[test]
fn energy_history_is_monotone() {
    let pb = problem(SurfaceKind::VaseLike, 32, SurfaceParams::default(), 0.01, 7, false);
    let out = integrate_mumford_shah(&pb.disc, &pb.g, &pb.prior, &MsConfig::default(), None).unwrap();
    assert_eq!(out.energy_history.len(), 1 + 5 * 50);
    for w in out.energy_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-8, "{} -> {}", w[0], w[1]);
    }
}

fn step_problem(n: usize) -> (Discretization, GradientField, PriorField, Vec<bool>) {
    let s = generate_surface(SurfaceKind::Step, n, SurfaceParams::default()).unwrap();
    let disc = Discretization::from_mask(DomainMask::full(n, n).unwrap()).unwrap();
    let g = GradientField::from_rasters(&disc.domain, &s.p, &s.q).unwrap();
    let z0 = disc.domain.gather(&s.depth).unwrap();
    let lambda = disc.domain.gather(s.prior_weight.as_ref().unwrap()).unwrap();
    let jump = s.feature_bands().jump;
    let on_jump = disc.domain.index().pixels().iter().map(|&(u, v)| jump.at(u, v)).collect();
    (disc, g, PriorField::new(z0, lambda).unwrap(), on_jump)
}

#[test]
fn indicators_mark_the_step() {
    let (disc, g, prior, on_jump) = step_problem(32);
    let out = integrate_mumford_shah(&disc, &g, &prior, &MsConfig::default(), None).unwrap();
    let edge = out.indicators.edge_map();
    let min_jump = (0..edge.len()).filter(|&i| on_jump[i]).map(|i| edge[i]).fold(f64::INFINITY, f64::min);
    let mut rest: Vec<f64> = (0..edge.len()).filter(|&i| !on_jump[i]).map(|i| edge[i]).collect();
    rest.sort_by(f64::total_cmp);
    assert!(min_jump < 0.2, "min on jump {min_jump}");
    assert!(rest[rest.len() / 2] > 0.9);
}

#[test]
fn edge_set_does_not_grow_as_epsilon_shrinks() {
    let (disc, g, prior, _) = step_problem(32);
    let counts: Vec<usize> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&epsilon| {
            let cfg = MsConfig {
                epsilon,
                ..Default::default()
            };
            let out = integrate_mumford_shah(&disc, &g, &prior, &cfg, None).unwrap();
            out.indicators.edge_map().iter().filter(|&&w| w < 0.5).count()
        })
        .collect();
    for c in counts.windows(2) {
        assert!(c[1] as f64 <= 1.1 * c[0] as f64, "{counts:?}");
    }
}

#[test]
fn smooth_data_keeps_indicators_high() {
    let pb = problem(SurfaceKind::SmoothBumps, 64, SurfaceParams::default(), 0.0, 0, false);
    let cfg = MsConfig {
        mu: 1.0,
        ..Default::default()
    };
    let out = integrate_mumford_shah(&pb.disc, &pb.g, &pb.prior, &cfg, None).unwrap();
    assert!(out.indicators.edge_map().iter().all(|&w| w > 0.9));
    assert!(aligned_rmse(&out.depth.z, &pb.quadratic(), None).unwrap() < 1e-3);
}

#[test]
fn mu_sweep_on_vase() {
    let pb = problem(SurfaceKind::VaseLike, 64, SurfaceParams::default(), 0.01, 7, false);
    let rmse_q = aligned_rmse(&pb.quadratic(), &pb.truth, None).unwrap();
    let rmse: Vec<f64> = [1.0, 20.0, 100.0]
        .iter()
        .map(|&mu| {
            let cfg = MsConfig {
                mu,
                ..Default::default()
            };
            let out = integrate_mumford_shah(&pb.disc, &pb.g, &pb.prior, &cfg, None).unwrap();
            aligned_rmse(&out.depth.z, &pb.truth, None).unwrap()
        })
        .collect();
    assert!(rmse[1] < rmse[0] && rmse[1] < rmse[2], "{rmse:?}");
    assert!(rmse[1] < rmse_q / 1.5);
}

#[test]
fn initialisation_matters_little_on_tent() {
    let pb = problem(SurfaceKind::TentLike, 64, SurfaceParams::default(), 0.01, 7, false);
    let cfg = MsConfig::default();
    let ls = integrate_mumford_shah(&pb.disc, &pb.g, &pb.prior, &cfg, None).unwrap();
    let zero = integrate_mumford_shah(&pb.disc, &pb.g, &pb.prior, &cfg, Some(&DepthMap::zeros(pb.disc.len()))).unwrap();
    let (a, b) = (
        aligned_rmse(&ls.depth.z, &pb.truth, None).unwrap(),
        aligned_rmse(&zero.depth.z, &pb.truth, None).unwrap(),
    );
    assert!(b < 3.0 * a, "zero-init {b}, ls-init {a}");
}
