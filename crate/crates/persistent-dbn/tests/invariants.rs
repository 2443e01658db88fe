//! Property tests at the model level: the message engine against the
//! enumeration oracle on random structures, and the structural invariants
//! every posterior must satisfy regardless of parameters or evidence.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use persistent_dbn::oracle::DEFAULT_ENUM_BUDGET;
use persistent_dbn::{
    enumerate_changepoint_posteriors, forward_sample, gen_random_prototype, smooth,
    ve_exact_unrolled, ChangepointModel, EvidenceMode, EvidenceSet, GeneratorKind,
    PrototypeNetwork, SmoothOptions, VeOptions,
};

/// Random model plus persistence-consistent random evidence. One seeded
/// stream drives both draws, so a case is reproducible from `seed` alone.
fn model_and_evidence(
    seed: u64,
    n: usize,
    m: usize,
    kind: GeneratorKind,
) -> (PrototypeNetwork, EvidenceSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = gen_random_prototype(n, kind, &mut rng).unwrap();
    let sample = forward_sample(&net, m, EvidenceMode::Fraction(0.2), &mut rng).unwrap();
    (net, sample.evidence)
}

fn smooth_posterior(
    net: &PrototypeNetwork,
    m: usize,
    ev: &EvidenceSet,
    root: Option<&str>,
) -> persistent_dbn::SmoothResult {
    let model = ChangepointModel::transform(net, m).unwrap();
    let options = SmoothOptions {
        root: root.map(str::to_owned),
        ..SmoothOptions::default()
    };
    smooth(&model, ev, &options).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_distributions_are_normalized(
        seed in any::<u64>(),
        n in 1usize..=9,
        m in 1usize..=6,
    ) {
        let (net, ev) = model_and_evidence(seed, n, m, GeneratorKind::FullBinaryTree);
        let result = smooth_posterior(&net, m, &ev, None);
        for entry in result.posterior.entries() {
            let cp = entry.changepoint.as_deref().unwrap();
            prop_assert_eq!(cp.len(), m + 1);
            let total: f64 = cp.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "{} sums to {total:.17e}", entry.node);
            prop_assert!(cp.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
        }
    }

    #[test]
    fn on_marginals_are_monotone_in_t(
        seed in any::<u64>(),
        n in 1usize..=9,
        m in 2usize..=6,
    ) {
        let (net, ev) = model_and_evidence(seed, n, m, GeneratorKind::FullBinaryTree);
        let result = smooth_posterior(&net, m, &ev, None);
        for node in net.hidden() {
            for t in 1..m {
                let now = result.posterior.on_marginal(&node.name, t).unwrap();
                let later = result.posterior.on_marginal(&node.name, t + 1).unwrap();
                prop_assert!(
                    now <= later + 1e-12,
                    "{} marginal decreases: {now:.17e} at t={t}, {later:.17e} at t={}",
                    node.name,
                    t + 1
                );
            }
        }
    }

    #[test]
    fn posteriors_do_not_depend_on_the_schedule_root(
        seed in any::<u64>(),
        n in 3usize..=9,
        m in 1usize..=5,
    ) {
        let (net, ev) = model_and_evidence(seed, n, m, GeneratorKind::FullBinaryTree);
        let roots = [0, n / 2, n - 1];
        let runs: Vec<_> = roots
            .iter()
            .map(|&k| smooth_posterior(&net, m, &ev, Some(&net.hidden()[k].name)))
            .collect();
        for other in &runs[1..] {
            let diff = runs[0].posterior.max_abs_difference(&other.posterior);
            prop_assert!(diff < 1e-10, "posteriors differ by {diff:.3e} across roots");
            let ll_diff =
                (runs[0].posterior.log_likelihood() - other.posterior.log_likelihood()).abs();
            prop_assert!(ll_diff < 1e-10, "log-likelihoods differ by {ll_diff:.3e}");
        }
    }

    #[test]
    fn no_evidence_gives_unit_likelihood(
        seed in any::<u64>(),
        n in 1usize..=9,
        m in 1usize..=6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = gen_random_prototype(n, GeneratorKind::FullBinaryTree, &mut rng).unwrap();
        let result = smooth_posterior(&net, m, &EvidenceSet::empty(), None);
        prop_assert!(
            result.posterior.log_likelihood().abs() < 1e-12,
            "empty evidence should have probability one, got ll {:.3e}",
            result.posterior.log_likelihood()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_matches_enumeration_on_trees(
        seed in any::<u64>(),
        n in 1usize..=6,
        m in 1usize..=4,
    ) {
        let (net, ev) = model_and_evidence(seed, n, m, GeneratorKind::FullBinaryTree);
        let model = ChangepointModel::transform(&net, m).unwrap();
        let oracle = enumerate_changepoint_posteriors(&model, &ev, DEFAULT_ENUM_BUDGET).unwrap();
        let engine = smooth_posterior(&net, m, &ev, None);
        let diff = engine.posterior.max_abs_difference(&oracle.posterior);
        prop_assert!(diff < 1e-9, "engine differs from oracle by {diff:.3e}");
    }

    #[test]
    fn engine_matches_enumeration_on_polytrees(
        seed in any::<u64>(),
        n in 1usize..=6,
        m in 1usize..=4,
    ) {
        let kind = GeneratorKind::RandomPolytree { max_in_degree: 2 };
        let (net, ev) = model_and_evidence(seed, n, m, kind);
        let model = ChangepointModel::transform(&net, m).unwrap();
        let oracle = enumerate_changepoint_posteriors(&model, &ev, DEFAULT_ENUM_BUDGET).unwrap();
        let engine = smooth_posterior(&net, m, &ev, None);
        let diff = engine.posterior.max_abs_difference(&oracle.posterior);
        prop_assert!(diff < 1e-9, "engine differs from oracle by {diff:.3e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn variable_elimination_matches_enumeration(
        seed in any::<u64>(),
        n in 1usize..=5,
        m in 1usize..=3,
    ) {
        let (net, ev) = model_and_evidence(seed, n, m, GeneratorKind::FullBinaryTree);
        let model = ChangepointModel::transform(&net, m).unwrap();
        let oracle = enumerate_changepoint_posteriors(&model, &ev, DEFAULT_ENUM_BUDGET).unwrap();
        let ve = ve_exact_unrolled(&net, m, &ev, &VeOptions::default()).unwrap();
        let diff = ve.posterior.max_abs_difference(&oracle.posterior);
        prop_assert!(diff < 1e-9, "elimination differs from oracle by {diff:.3e}");
        let ll_diff = (ve.posterior.log_likelihood() - oracle.posterior.log_likelihood()).abs();
        prop_assert!(ll_diff < 1e-9, "log-likelihoods differ by {ll_diff:.3e}");
    }
}
