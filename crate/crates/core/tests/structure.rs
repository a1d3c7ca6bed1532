mod common;

use common::oracles::{numeric_prox, Mrf};
use common::*;
use mixgm::optimize::{lambda_grid, path_solve, solve, GridSpec, Method, NoClock, NoPenalty, SolverConfig};
use mixgm::pseudolikelihood::{fit_pl, PseudoLikelihood};
use mixgm::regularization::{calibrated_weights, lambda_max, prox, PenaltySpec};
use mixgm::sampler::sample_joint;
use mixgm::{Dataset, Layout, Schema, Theta};
use rand::Rng;

fn tight(method: Method) -> SolverConfig {
    SolverConfig {
        tol: 1e-10,
        max_iter: 50_000,
        ..SolverConfig::with_method(method)
    }
}

fn mixed_instance(seed: u64, n: usize) -> (Theta, Dataset) {
    let mut r = rng(seed);
    let p = r.random_range(1..=3);
    let levels = (0..r.random_range(1..=3)).map(|_| r.random_range(2..=3)).collect();
    let schema = Schema::new(p, levels).unwrap();
    let theta = random_theta(&mut r, &Layout::new(&schema), 0.5);
    let data = sample_joint(&theta, n, &mut r).unwrap();
    (theta, data)
}

#[test]
fn midpoint_convexity() {
    let mut r = rng(42);
    for probe in 0..100 {
        let (_, data) = random_instance(probe, 3, 3, 3, 20);
        let pl = PseudoLikelihood::new(&data);
        let a = random_theta(&mut r, pl.layout(), 2.0);
        let b = random_theta(&mut r, pl.layout(), 2.0);
        let mid: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| 0.5 * (x + y)).collect();
        let gap = 0.5 * (pl.value(a.values()) + pl.value(b.values())) - pl.value(&mid);
        assert!(gap >= -1e-9, "probe {probe}: {gap}");
    }
}

#[test]
fn group_prox_matches_numeric_minimization() {
    let mut r = rng(7);
    for trial in 0..100 {
        let len = r.random_range(1..=5);
        let z: Vec<f64> = (0..len).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        // every tenth block sits exactly on the zero boundary, others above or below it
        let tau = match trial % 10 {
            0 => norm,
            1 | 2 => norm * (1.0 + r.random::<f64>()),
            _ => norm * r.random::<f64>(),
        };
        let groups = vec![mixgm::EdgeGroup {
            kind: mixgm::GroupKind::ContinuousDiscrete,
            u: 0,
            v: 0,
            range: 0..len,
        }];
        let weight = 0.5 + r.random::<f64>();
        let step = 0.5 + r.random::<f64>();
        let spec = PenaltySpec::new(tau / (weight * step), groups, vec![weight], true).unwrap();
        let got = prox(&z, step, &spec);
        let threshold = step * spec.lambda * weight;
        let expected = numeric_prox(&z, threshold);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-8, "trial {trial}: {got:?} vs {expected:?}");
        }
        if threshold >= norm {
            assert!(got.iter().all(|v| *v == 0.0), "trial {trial}: not exactly zero");
        }
    }
}

#[test]
fn continuous_only_fit_matches_least_squares() {
    let mut r = rng(3);
    let layout = Layout::new(&Schema::new(3, vec![]).unwrap());
    let theta = random_theta(&mut r, &layout, 0.5);
    let data = sample_joint(&theta, 300, &mut r).unwrap();
    let pl = PseudoLikelihood::new(&data);
    let (fit, _) = fit_pl(&pl, &NoPenalty, None, &tight(Method::ProxNewtonExact)).unwrap();
    let n = data.n();
    for s in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&t| t != s).collect();
        let mut design = nalgebra::DMatrix::zeros(n, 3);
        let mut target = nalgebra::DVector::zeros(n);
        for i in 0..n {
            let row = data.row(i);
            design[(i, 0)] = 1.0;
            for (c, &t) in others.iter().enumerate() {
                design[(i, c + 1)] = row.x[t];
            }
            target[i] = row.x[s];
        }
        let coef = design.clone().svd(true, true).solve(&target, 1e-14).unwrap();
        for (c, &t) in others.iter().enumerate() {
            let ours = -fit.beta(s, t) / fit.beta(s, s);
            assert!(
                (ours - coef[c + 1]).abs() < 1e-6,
                "node {s}, {t}: {ours} vs {}",
                coef[c + 1]
            );
        }
        assert!((fit.alpha(s) / fit.beta(s, s) - coef[0]).abs() < 1e-6);
    }
}

#[test]
fn discrete_only_matches_mrf_enumeration() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let q = r.random_range(1..=4);
        let levels: Vec<usize> = (0..q).map(|_| r.random_range(2..=3)).collect();
        let schema = Schema::new(0, levels.clone()).unwrap();
        let mut u = || r.random::<f64>() * 2.0 - 1.0;
        let unary: Vec<Vec<f64>> = levels.iter().map(|&l| (0..l).map(|_| u()).collect()).collect();
        let pair: Vec<Vec<Vec<Vec<f64>>>> = (0..q)
            .map(|a| {
                (0..q)
                    .map(|b| (0..levels[a]).map(|_| (0..levels[b]).map(|_| u()).collect()).collect())
                    .collect()
            })
            .collect();
        let mrf = Mrf {
            levels: levels.clone(),
            unary,
            pair,
        };
        let mut theta = Theta::zeros(Layout::new(&schema));
        for rr in 0..q {
            theta.phi_node_mut(rr).copy_from_slice(&mrf.unary[rr]);
            for j in (rr + 1)..q {
                for a in 0..levels[rr] {
                    for b in 0..levels[j] {
                        theta.set_phi(rr, j, a, b, mrf.pair[rr][j][a][b]);
                    }
                }
            }
        }
        let mut r2 = rng(seed + 50);
        let data = sample_joint(&theta, 40, &mut r2).unwrap();
        let ours = PseudoLikelihood::new(&data).value_of(&theta);
        let reference = mrf.pseudolikelihood(&data);
        assert!(
            (ours - reference).abs() < 1e-12 * reference.abs().max(1.0),
            "seed {seed}"
        );
    }
}

#[test]
fn lambda_max_is_the_empty_graph_threshold() {
    for seed in 0..10 {
        let (_, data) = mixed_instance(seed, 200);
        let layout = Layout::new(data.schema());
        let cal = calibrated_weights(&data).unwrap();
        let spec = PenaltySpec::calibrated(&layout, &cal, 1.0).unwrap();
        let lmax = lambda_max(&data, &spec).unwrap().value;
        let pl = PseudoLikelihood::new(&data);
        let config = tight(Method::AcceleratedProxGradient);
        let (_, above) = fit_pl(&pl, &spec.with_lambda(1.01 * lmax), None, &config).unwrap();
        assert!(above.active.is_empty(), "seed {seed}: {:?}", above.active);
        let (_, below) = fit_pl(&pl, &spec.with_lambda(0.8 * lmax), None, &config).unwrap();
        assert!(!below.active.is_empty(), "seed {seed}");
    }
}

#[test]
fn solvers_agree_on_random_mixed_instances() {
    for seed in 0..10 {
        let (_, data) = mixed_instance(seed + 1000, 150);
        let layout = Layout::new(data.schema());
        let cal = calibrated_weights(&data).unwrap();
        let spec = PenaltySpec::calibrated(&layout, &cal, 1.0).unwrap();
        let lmax = lambda_max(&data, &spec).unwrap().value;
        let spec = spec.with_lambda(0.3 * lmax);
        let pl = PseudoLikelihood::new(&data);
        let init = Theta::independence(layout.clone()).into_values();
        let reference = solve(&pl, &spec, &init, &tight(Method::AcceleratedProxGradient)).unwrap();
        for method in [Method::ProxNewtonExact, Method::ProxNewtonBfgs] {
            let fit = solve(&pl, &spec, &init, &tight(method)).unwrap();
            let rel = (fit.objective() - reference.objective()).abs() / reference.objective().abs();
            assert!(rel < 1e-6, "seed {seed} {method:?}: {rel}");
            assert_eq!(fit.active, reference.active, "seed {seed} {method:?}");
            assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn warm_started_path_is_no_worse_than_cold() {
    for seed in 0..3 {
        let (_, data) = mixed_instance(seed + 2000, 200);
        let layout = Layout::new(data.schema());
        let cal = calibrated_weights(&data).unwrap();
        let spec = PenaltySpec::calibrated(&layout, &cal, 1.0).unwrap();
        let lmax = lambda_max(&data, &spec).unwrap();
        let grid = lambda_grid(
            lmax.value,
            &GridSpec {
                points: 20,
                ratio: 1e-2,
            },
        );
        let pl = PseudoLikelihood::new(&data);
        let init = lmax.theta.values().to_vec();
        let config = tight(Method::ProxNewtonExact);
        let warm = path_solve(&pl, &spec, &grid, &init, &config, true, &NoClock);
        let cold = path_solve(&pl, &spec, &grid, &init, &config, false, &NoClock);
        assert!(warm.fits[0].as_ref().unwrap().active.is_empty());
        assert!(warm.total_iterations() <= cold.total_iterations());
        for (w, c) in warm.objectives().iter().zip(cold.objectives()) {
            assert!(w.unwrap() <= c.unwrap() + 1e-8);
        }
    }
}
