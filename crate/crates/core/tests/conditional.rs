mod common;

use common::*;
use mixgm::crf::{crf_lambda_max, crf_penalty, fit_crf, with_zero_features};
use mixgm::nodewise::{fit_separate, EdgeRule};
use mixgm::optimize::{Method, NoPenalty, SolverConfig};
use mixgm::pseudolikelihood::{fit_pl, PseudoLikelihood};
use mixgm::regularization::PenaltySpec;
use mixgm::sampler::sample_joint;
use mixgm::{FeatureMatrix, Layout, Schema, Theta};

fn tight() -> SolverConfig {
    SolverConfig {
        tol: 1e-8,
        max_iter: 500,
        ..SolverConfig::with_method(Method::ProxNewtonExact)
    }
}

#[test]
fn constant_feature_is_redundant_with_node_potentials() {
    let schema = Schema::new(2, vec![3]).unwrap();
    let mut r = rng(8);
    let truth = random_theta(&mut r, &Layout::new(&schema), 0.5);
    let data = sample_joint(&truth, 300, &mut r).unwrap();
    let ones = FeatureMatrix::new(data.n(), 1, vec![1.0; data.n()]).unwrap();
    let (joint, _) = fit_pl(&PseudoLikelihood::new(&data), &NoPenalty, None, &tight()).unwrap();
    let (conditional, _) = fit_crf(&data, &ones, &NoPenalty, None, &tight()).unwrap();
    let crf_pl = PseudoLikelihood::with_features(&data, &ones).unwrap();
    let joint_value = PseudoLikelihood::new(&data).value_of(&joint);
    let crf_value = crf_pl.value_of(&conditional);
    assert!((joint_value - crf_value).abs() < 1e-8, "{joint_value} vs {crf_value}");
    // the joint optimum is also a conditional optimum with zero feature weights
    let embedded = with_zero_features(&joint, 1);
    assert!((crf_pl.value_of(&embedded) - crf_value).abs() < 1e-8);
    // shifting alpha into gamma leaves the objective unchanged
    let mut shifted = embedded.clone();
    let layout = shifted.layout().clone();
    let a0 = shifted.alpha(0);
    shifted.set_alpha(0, 0.0);
    shifted.values_mut()[layout.gamma_index(0, 0)] = a0;
    assert!((crf_pl.value_of(&shifted) - crf_pl.value_of(&embedded)).abs() < 1e-12);
}

#[test]
fn large_penalty_gives_node_only_conditional_model() {
    let schema = Schema::new(2, vec![2, 3]).unwrap();
    let mut r = rng(9);
    let truth = random_theta(&mut r, &Layout::new(&schema), 0.5);
    let data = sample_joint(&truth, 200, &mut r).unwrap();
    let features = random_features(&mut r, data.n(), 2).standardized();
    let layout = Layout::with_features(&schema, 2);
    let spec = crf_penalty(&layout, None, 1.0).unwrap();
    let lmax = crf_lambda_max(&data, &features, &spec).unwrap().value;
    let config = SolverConfig {
        tol: 1e-9,
        ..SolverConfig::default()
    };
    let (theta, fit) = fit_crf(&data, &features, &spec.with_lambda(1.01 * lmax), None, &config).unwrap();
    assert!(fit.active.is_empty());
    for g in layout.feature_groups() {
        assert_eq!(theta.group_norm(&g), 0.0);
    }
    let (_, fit) = fit_crf(&data, &features, &spec.with_lambda(0.5 * lmax), None, &config).unwrap();
    assert!(!fit.active.is_empty());
}

#[test]
fn directed_estimates_vanish_on_independent_data() {
    let schema = Schema::new(2, vec![2, 2]).unwrap();
    let layout = Layout::new(&schema);
    let truth = Theta::independence(layout.clone());
    let data = sample_joint(&truth, 20_000, &mut rng(10)).unwrap();
    let pl = PseudoLikelihood::new(&data);
    let spec = PenaltySpec::uniform(&layout, 0.0).unwrap();
    let fits: Vec<_> = fit_separate(&pl, &spec, &tight())
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    for fit in &fits {
        for (_, norm) in &fit.directed_norms {
            assert!(*norm < 0.1, "{:?}: {norm}", fit.node);
        }
    }
    // at a moderate penalty both directions are exactly zero
    let spec = PenaltySpec::uniform(&layout, 0.05).unwrap();
    let fits: Vec<_> = fit_separate(&pl, &spec, &tight())
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let or = mixgm::nodewise::combine_edges(spec.groups(), &fits, EdgeRule::Or, 1e-6);
    assert!(or.iter().all(|e| !e));
}
