//! Posterior computation by exhaustive enumeration.
//!
//! Two independent enumerators ground-truth the message engine from both
//! sides of the changepoint mapping:
//!
//! * [`enumerate_changepoint_posteriors`] sums the factored joint over every
//!   changepoint configuration of the persistent nodes (and every binary
//!   trajectory of non-persistent ones);
//! * [`enumerate_binary_dbn_posteriors`] sums over every bit assignment of
//!   the unrolled temporal network, where persistence-violating
//!   trajectories receive weight zero through the transition semantics.
//!
//! Agreement between the two validates the changepoint transformation
//! itself; agreement with the message engine validates the recurrences.

use crate::changepoint::{changepoint_of_trajectory, on_at, ChangepointModel};
use crate::error::OracleError;
use crate::evidence::EvidenceSet;
use crate::inference::{NodePosterior, PosteriorTable};
use crate::model::PrototypeNetwork;

/// Default configuration budget for both enumerators.
pub const DEFAULT_ENUM_BUDGET: f64 = 1e7;

/// Posterior table plus the number of elementary multiply operations spent.
#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub posterior: PosteriorTable,
    pub ops: u64,
}

fn finish(
    net: &PrototypeNetwork,
    horizon: usize,
    posts: Vec<Option<Vec<f64>>>,
    total: f64,
    ops: u64,
) -> Result<EnumerationResult, OracleError> {
    if total <= 0.0 || !total.is_finite() {
        return Err(OracleError::ZeroEvidenceProbability);
    }
    let entries = net
        .hidden()
        .iter()
        .zip(posts)
        .map(|(node, p)| NodePosterior {
            node: node.name.clone(),
            changepoint: p.map(|mut v| {
                for x in v.iter_mut() {
                    *x /= total;
                }
                v
            }),
        })
        .collect();
    Ok(EnumerationResult {
        posterior: PosteriorTable::from_parts(horizon, entries, total.ln()),
        ops,
    })
}

/// Exact posteriors by enumerating changepoints (persistent nodes) and
/// binary trajectories (non-persistent nodes).
///
/// The joint over the mixed configuration space factorizes node by node in
/// topological order; zero-weight prefixes prune their whole subtree.
/// Refuses to start when the configuration count exceeds `budget`; budgets
/// above 2^60 are clamped because configurations are indexed with machine
/// words.
pub fn enumerate_changepoint_posteriors(
    model: &ChangepointModel,
    ev: &EvidenceSet,
    budget: f64,
) -> Result<EnumerationResult, OracleError> {
    let budget = budget.min(60f64.exp2());
    let net = model.net();
    let m = model.horizon();
    let n = net.hidden().len();
    let mut required = 1.0f64;
    for node in net.hidden() {
        required *= if node.persistent {
            (m + 1) as f64
        } else {
            (m as f64).exp2()
        };
    }
    if required > budget {
        return Err(OracleError::BudgetExceeded { required, budget });
    }

    let order = net
        .topological_order()
        .expect("transformed models are acyclic");
    // domain[k]: number of values node k ranges over in the enumeration.
    let domain: Vec<usize> = net
        .hidden()
        .iter()
        .map(|h| if h.persistent { m + 1 } else { 1usize << m })
        .collect();

    let mut assign = vec![0usize; n];
    let mut acc = Accumulator {
        total: 0.0,
        posts: net
            .hidden()
            .iter()
            .map(|h| h.persistent.then(|| vec![0.0; m + 1]))
            .collect(),
        ops: 0,
    };
    dfs_assignments(net, ev, m, &order, &domain, 0, 1.0, &mut assign, &mut acc);
    finish(net, m, acc.posts, acc.total, acc.ops)
}

struct Accumulator {
    total: f64,
    posts: Vec<Option<Vec<f64>>>,
    ops: u64,
}

/// Is node `k` on at slice `t` under `assign`?
///
/// `assign[k]` is a changepoint for persistent nodes and a trajectory
/// bitmask (bit `t-1` = state at slice `t`) for non-persistent ones.
fn node_on(net: &PrototypeNetwork, assign: &[usize], k: usize, t: usize) -> bool {
    if net.hidden()[k].persistent {
        on_at(assign[k], t)
    } else {
        assign[k] >> (t - 1) & 1 == 1
    }
}

/// Weight factor contributed by node `k` once its parents are assigned:
/// its changepoint (or trajectory) probability given the parents, clamp
/// indicators, and leaf-evidence likelihoods.
fn local_weight(
    net: &PrototypeNetwork,
    ev: &EvidenceSet,
    m: usize,
    assign: &[usize],
    k: usize,
    ops: &mut u64,
) -> f64 {
    let node = &net.hidden()[k];
    let bits_at = |t: usize| -> usize {
        let mut bits = 0;
        for (pos, &p) in node.parents.iter().enumerate() {
            if node_on(net, assign, p, t) {
                bits |= 1 << (node.parents.len() - 1 - pos);
            }
        }
        bits
    };
    let mut w = 1.0;
    if node.persistent {
        // Survive through slice j, then fire at j+1 (or never, when j = m).
        let j = assign[k];
        for t in 1..=j {
            w *= 1.0 - node.cpd_at(t).on_probability(bits_at(t));
            *ops += 1;
        }
        if j < m {
            w *= node.cpd_at(j + 1).on_probability(bits_at(j + 1));
            *ops += 1;
        }
    } else {
        let mut prev = false;
        for t in 1..=m {
            let on = assign[k] >> (t - 1) & 1 == 1;
            let p = node.on_probability(t, prev, bits_at(t));
            w *= if on { p } else { 1.0 - p };
            *ops += 1;
            prev = on;
        }
    }
    for &(t, v) in ev.hidden_slices(k) {
        if (v == 1) != node_on(net, assign, k, t) {
            return 0.0;
        }
    }
    for &o in &node.obs_children {
        let emission = &net.observations()[o].emission;
        for &(t, val) in ev.leaf_slices(o) {
            w *= emission.probability(node_on(net, assign, k, t), val);
            *ops += 1;
        }
    }
    w
}

/// Depth-first sweep over the topological order with running weights.
#[allow(clippy::too_many_arguments)]
fn dfs_assignments(
    net: &PrototypeNetwork,
    ev: &EvidenceSet,
    m: usize,
    order: &[usize],
    domain: &[usize],
    depth: usize,
    weight: f64,
    assign: &mut [usize],
    acc: &mut Accumulator,
) {
    if depth == order.len() {
        acc.total += weight;
        for (k, p) in acc.posts.iter_mut().enumerate() {
            if let Some(p) = p {
                p[assign[k]] += weight;
            }
        }
        return;
    }
    let k = order[depth];
    for val in 0..domain[k] {
        assign[k] = val;
        let w = weight * local_weight(net, ev, m, assign, k, &mut acc.ops);
        if w > 0.0 {
            dfs_assignments(net, ev, m, order, domain, depth + 1, w, assign, acc);
        }
    }
}

/// Exact posteriors by enumerating every bit assignment of the unrolled
/// network. Persistent nodes report changepoint distributions; trajectories
/// that violate persistence carry weight zero and are skipped.
pub fn enumerate_binary_dbn_posteriors(
    net: &PrototypeNetwork,
    horizon: usize,
    ev: &EvidenceSet,
    budget: f64,
) -> Result<EnumerationResult, OracleError> {
    let budget = budget.min(60f64.exp2());
    let n = net.hidden().len();
    let m = horizon;
    let bits = n * m;
    let required = (bits as f64).exp2();
    if required > budget {
        return Err(OracleError::BudgetExceeded { required, budget });
    }

    let mut posts: Vec<Option<Vec<f64>>> = net
        .hidden()
        .iter()
        .map(|h| h.persistent.then(|| vec![0.0; m + 1]))
        .collect();
    let mut total = 0.0f64;
    let mut ops = 0u64;
    let mut traj = vec![0u8; m];

    'mask: for mask in 0u64..(1u64 << bits) {
        let state = |k: usize, t: usize| -> bool {
            t > 0 && (mask >> (k * m + t - 1)) & 1 == 1
        };
        let mut w = 1.0f64;
        for t in 1..=m {
            for (k, node) in net.hidden().iter().enumerate() {
                let mut bits_t = 0usize;
                for (pos, &p) in node.parents.iter().enumerate() {
                    if state(p, t) {
                        bits_t |= 1 << (node.parents.len() - 1 - pos);
                    }
                }
                let p_on = node.on_probability(t, state(k, t - 1), bits_t);
                w *= if state(k, t) { p_on } else { 1.0 - p_on };
                ops += 1;
                if w == 0.0 {
                    continue 'mask;
                }
            }
        }
        for (k, node) in net.hidden().iter().enumerate() {
            for &(t, v) in ev.hidden_slices(k) {
                if (v == 1) != state(k, t) {
                    continue 'mask;
                }
            }
            for &o in &node.obs_children {
                let emission = &net.observations()[o].emission;
                for &(t, val) in ev.leaf_slices(o) {
                    w *= emission.probability(state(k, t), val);
                    ops += 1;
                }
            }
            if w == 0.0 {
                continue 'mask;
            }
        }
        total += w;
        for (k, p) in posts.iter_mut().enumerate() {
            if let Some(p) = p {
                for (t, slot) in traj.iter_mut().enumerate() {
                    *slot = state(k, t + 1) as u8;
                }
                let j = changepoint_of_trajectory(&traj)
                    .expect("positive-weight trajectories are persistence-consistent");
                p[j] += w;
            }
        }
    }
    finish(net, m, posts, total, ops)
}
