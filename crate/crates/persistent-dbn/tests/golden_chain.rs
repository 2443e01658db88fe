//! Frozen-value regression test on a three-node persistent chain.
//!
//! The expected numbers were produced by the two independent enumeration
//! oracles (changepoint-space and unrolled binary-space), which agreed with
//! each other and with the message engine to 2e-16 when first run; they are
//! pinned here so any later drift in any of the three engines fails loudly.

use persistent_dbn::model::model_from_json;
use persistent_dbn::oracle::DEFAULT_ENUM_BUDGET;
use persistent_dbn::{
    enumerate_binary_dbn_posteriors, enumerate_changepoint_posteriors, smooth, ChangepointModel,
    EvidenceSet, Observation, PosteriorTable, PrototypeNetwork, SmoothOptions,
};

const CHAIN: &str = r#"{
    "nodes": [
        {"id": "a", "parents": [], "persistent": true, "cpd": {"": 0.3}},
        {"id": "b", "parents": ["a"], "persistent": true, "cpd": {"0": 0.1, "1": 0.8}},
        {"id": "c", "parents": ["b"], "persistent": true, "cpd": {"0": 0.2, "1": 0.6}}
    ],
    "observation_nodes": [
        {"id": "o", "parent": "c",
         "emission": {"0": [0.8, 0.2], "1": [0.3, 0.7]}}
    ]
}"#;

const HORIZON: usize = 3;
const TOLERANCE: f64 = 1e-12;

const EXPECTED_LOG_LIKELIHOOD: f64 = -1.76143604132897691e0;

/// Posterior changepoint distributions for `a`, `b`, `c`: entry `j` is the
/// probability that the node was last off at slice `j` (so `j = 3` means it
/// never turned on).
const EXPECTED: [(&str, [f64; 4]); 3] = [
    (
        "a",
        [
            3.27728188576767054e-1,
            2.09202555827991299e-1,
            1.30226762343446822e-1,
            3.32842493251794880e-1,
        ],
    ),
    (
        "b",
        [
            3.47175216106851314e-1,
            2.47551458952680964e-1,
            1.32352596448725573e-1,
            2.72920728491742148e-1,
        ],
    ),
    (
        "c",
        [
            3.96046571388742552e-1,
            3.21061753872473987e-1,
            6.12399143865125575e-2,
            2.21651760352270966e-1,
        ],
    ),
];

fn chain_and_evidence() -> (PrototypeNetwork, EvidenceSet) {
    let net = model_from_json(CHAIN).unwrap();
    let ev = EvidenceSet::from_observations(
        vec![
            Observation { node: "o".into(), t: 2, value: 1 },
            Observation { node: "o".into(), t: 3, value: 0 },
        ],
        &net,
    )
    .unwrap();
    (net, ev)
}

fn assert_matches_expected(posterior: &PosteriorTable, engine: &str) {
    assert!(
        (posterior.log_likelihood() - EXPECTED_LOG_LIKELIHOOD).abs() < TOLERANCE,
        "{engine} log-likelihood drifted: {:.17e}",
        posterior.log_likelihood()
    );
    for (node, expected) in &EXPECTED {
        let got = posterior.changepoint_distribution(node).unwrap();
        for (j, (&g, &e)) in got.iter().zip(expected).enumerate() {
            assert!(
                (g - e).abs() < TOLERANCE,
                "{engine} drifted on {node}[{j}]: {g:.17e} vs {e:.17e}"
            );
        }
    }
}

#[test]
fn changepoint_enumeration_matches_frozen_values() {
    let (net, ev) = chain_and_evidence();
    let model = ChangepointModel::transform(&net, HORIZON).unwrap();
    let result = enumerate_changepoint_posteriors(&model, &ev, DEFAULT_ENUM_BUDGET).unwrap();
    assert_matches_expected(&result.posterior, "changepoint enumeration");
}

#[test]
fn binary_enumeration_matches_frozen_values() {
    let (net, ev) = chain_and_evidence();
    let result = enumerate_binary_dbn_posteriors(&net, HORIZON, &ev, DEFAULT_ENUM_BUDGET).unwrap();
    assert_matches_expected(&result.posterior, "binary enumeration");
}

#[test]
fn message_engine_matches_frozen_values() {
    let (net, ev) = chain_and_evidence();
    let model = ChangepointModel::transform(&net, HORIZON).unwrap();
    let result = smooth(&model, &ev, &SmoothOptions::default()).unwrap();
    assert_matches_expected(&result.posterior, "message engine");
}
