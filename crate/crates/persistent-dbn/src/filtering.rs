//! Online filtering: per-slice on-probabilities given the evidence so far.
//!
//! Exact filtering in a temporal network costs as much as smoothing over an
//! ever-growing prefix, so practical systems approximate. This module
//! provides three filters over all-persistent prototypes:
//!
//! * [`exact_filter_marginals`] — the reference: re-smooths the full prefix
//!   at every slice;
//! * [`bk_filter`] — the classic assumed-density filter that projects the
//!   joint belief onto a product of per-node marginals after each slice;
//! * [`fixed_window_filter`] — re-smooths only the last `window` slices,
//!   optionally pinning a node "on" once the slice leaving the window is
//!   certain enough, so that hard-won evidence is not forgotten.
//!
//! All three report `marginals[t - 1][k]`, the probability that hidden node
//! `k` is on at slice `t` given observations up to `t`, plus an operation
//! count for cost comparisons. Observations beyond the filtering horizon
//! are ignored.

use crate::changepoint::ChangepointModel;
use crate::cost::Cost;
use crate::error::{FilterError, InferenceError, OracleError};
use crate::evidence::{EvidenceSet, Observation};
use crate::inference::{smooth, SmoothOptions};
use crate::model::PrototypeNetwork;
use crate::oracle::factor::{eliminate_to_factor, eliminate_var, FactorTable};
use crate::oracle::ve::{heuristic_order, DEFAULT_VE_BUDGET};

/// A node is pinned once its on-probability exceeds `1 - PIN_EPSILON` as its
/// slice leaves the window.
pub const PIN_EPSILON: f64 = 1e-9;

/// Per-slice filtered marginals plus the number of elementary operations.
#[derive(Debug, Clone)]
pub struct FilterRun {
    /// `marginals[t - 1][k]`: on-probability of hidden node `k` at slice `t`
    /// given observations up to slice `t`.
    pub marginals: Vec<Vec<f64>>,
    pub ops: u64,
}

fn require_all_persistent(net: &PrototypeNetwork) -> Result<(), FilterError> {
    match net.hidden().iter().find(|h| !h.persistent) {
        Some(h) => Err(FilterError::UnsupportedModel(format!(
            "hidden node `{}` is not persistent",
            h.name
        ))),
        None => Ok(()),
    }
}

/// Root-sum-square difference between two marginal vectors.
pub fn rms_error(approx: &[f64], exact: &[f64]) -> Result<f64, FilterError> {
    if approx.len() != exact.len() {
        return Err(FilterError::ShapeMismatch {
            left: approx.len(),
            right: exact.len(),
        });
    }
    Ok(approx
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Exact filtered marginals by smoothing the full evidence prefix at every
/// slice. The cost grows with `t`; this is the reference the approximate
/// filters are scored against.
pub fn exact_filter_marginals(
    net: &PrototypeNetwork,
    horizon: usize,
    ev: &EvidenceSet,
) -> Result<FilterRun, FilterError> {
    require_all_persistent(net)?;
    let mut marginals = Vec::with_capacity(horizon);
    let mut ops = 0u64;
    for t in 1..=horizon {
        let prefix = EvidenceSet::from_observations(ev.window(1, t), net)
            .map_err(InferenceError::from)?;
        let model = ChangepointModel::transform(net, t)?;
        let result = smooth(&model, &prefix, &SmoothOptions::default())?;
        let row = net
            .hidden()
            .iter()
            .map(|h| {
                result
                    .posterior
                    .on_marginal(&h.name, t)
                    .expect("persistent nodes have changepoint distributions")
            })
            .collect();
        marginals.push(row);
        ops += result.ops;
    }
    Ok(FilterRun { marginals, ops })
}

/// Fully-factored assumed-density filtering.
///
/// The belief state is a product of per-node on-probabilities. Each slice
/// advances the product through the two-slice network by exact elimination,
/// then projects back to a product by keeping the per-node marginals.
/// Exact whenever the true belief stays a product (single nodes,
/// disconnected prototypes); an approximation otherwise.
pub fn bk_filter(
    net: &PrototypeNetwork,
    horizon: usize,
    ev: &EvidenceSet,
) -> Result<FilterRun, FilterError> {
    require_all_persistent(net)?;
    let n = net.hidden().len();
    let mut cost = Cost::new();
    // Variable ids in the two-slice network: node k at the previous slice is
    // `k`, at the current slice `n + k`. Everything starts off.
    let mut belief = vec![0.0f64; n];
    let mut marginals = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let mut factors: Vec<FactorTable> = Vec::new();
        let mut observed: Vec<Option<u32>> = vec![None; 2 * n];
        for (k, node) in net.hidden().iter().enumerate() {
            factors.push(FactorTable::singleton(k, 1.0 - belief[k], belief[k]));
            let mut vars = vec![k, n + k];
            vars.extend(node.parents.iter().map(|&p| n + p));
            vars.sort_unstable();
            let pos = |var: usize| vars.iter().position(|&v| v == var).unwrap();
            let prev_pos = pos(k);
            let self_pos = pos(n + k);
            let parent_pos: Vec<usize> =
                node.parents.iter().map(|&p| pos(n + p)).collect();
            let mut values = vec![0.0; 1 << vars.len()];
            for (idx, slot) in values.iter_mut().enumerate() {
                let prev_on = idx >> prev_pos & 1 == 1;
                let self_on = idx >> self_pos & 1 == 1;
                let mut bits = 0usize;
                for (i, &p) in parent_pos.iter().enumerate() {
                    if idx >> p & 1 == 1 {
                        bits |= 1 << (parent_pos.len() - 1 - i);
                    }
                }
                let p_on = node.on_probability(t, prev_on, bits);
                *slot = if self_on { p_on } else { 1.0 - p_on };
            }
            factors.push(FactorTable::new(vars, values));

            for &o in &node.obs_children {
                let emission = &net.observations()[o].emission;
                for &(slice, val) in ev.leaf_slices(o) {
                    if slice == t {
                        factors.push(FactorTable::singleton(
                            n + k,
                            emission.probability(false, val),
                            emission.probability(true, val),
                        ));
                    }
                }
            }
            for &(slice, v) in ev.hidden_slices(k) {
                if slice == t {
                    observed[n + k] = Some(v);
                }
            }
        }
        for (var, v) in observed.iter().enumerate() {
            if let Some(v) = v {
                for f in factors.iter_mut() {
                    if f.mentions(var) {
                        *f = f.reduce(var, *v as usize);
                    }
                }
            }
        }

        let order = heuristic_order(&factors, 2 * n, &observed, DEFAULT_VE_BUDGET)?;
        let mut next = vec![0.0f64; n];
        for (k, slot) in next.iter_mut().enumerate() {
            if let Some(v) = observed[n + k] {
                *slot = v as f64;
                continue;
            }
            let mut work = factors.clone();
            for &var in &order {
                if var != n + k {
                    eliminate_var(&mut work, var, DEFAULT_VE_BUDGET, &mut cost)?;
                }
            }
            let f = eliminate_to_factor(work, &[], DEFAULT_VE_BUDGET, &mut cost)?;
            let z = f.total();
            if z <= 0.0 || !z.is_finite() {
                return Err(OracleError::ZeroEvidenceProbability.into());
            }
            *slot = f.values()[1] / z;
        }
        belief = next;
        marginals.push(belief.clone());
    }
    Ok(FilterRun {
        marginals,
        ops: cost.total(),
    })
}

/// Sliding-window filtering: at slice `t`, smooth exactly over the last
/// `window` slices and report the marginal at the newest slice.
///
/// Evidence older than the window is forgotten. With `pin` enabled, a node
/// whose on-probability exceeds `1 - PIN_EPSILON` as its slice slides out of
/// the window is clamped on in every later window, committing to the
/// near-certain conclusion instead of re-deriving it from evidence that is
/// no longer visible.
pub fn fixed_window_filter(
    net: &PrototypeNetwork,
    horizon: usize,
    ev: &EvidenceSet,
    window: usize,
    pin: bool,
) -> Result<FilterRun, FilterError> {
    require_all_persistent(net)?;
    if window == 0 {
        return Err(FilterError::UnsupportedModel(
            "window length must be at least 1".into(),
        ));
    }
    let n = net.hidden().len();
    let mut pinned = vec![false; n];
    let mut marginals = Vec::with_capacity(horizon);
    let mut ops = 0u64;

    for t in 1..=horizon {
        let lo = (t + 1).saturating_sub(window).max(1);
        let h = t - lo + 1;
        let mut obs = ev.window(lo, t);
        for (k, node) in net.hidden().iter().enumerate() {
            if pinned[k] {
                // The clamp at the window head subsumes direct observations of
                // the node later in the window: on at slice 1 plus persistence
                // already implies on everywhere. A contradictory off
                // observation surfaces as zero evidence probability.
                obs.retain(|o| o.node != node.name);
                obs.push(Observation {
                    node: node.name.clone(),
                    t: 1,
                    value: 1,
                });
            }
        }
        let evs = EvidenceSet::from_observations(obs, net).map_err(InferenceError::from)?;
        let model = ChangepointModel::transform(net, h)?;
        let result = smooth(&model, &evs, &SmoothOptions::default())?;
        ops += result.ops;
        let row: Vec<f64> = net
            .hidden()
            .iter()
            .map(|node| {
                result
                    .posterior
                    .on_marginal(&node.name, h)
                    .expect("persistent nodes have changepoint distributions")
            })
            .collect();
        marginals.push(row);
        if pin && t >= window {
            // Slice `lo` leaves the window after this step; keep what we
            // are already sure of.
            for (k, node) in net.hidden().iter().enumerate() {
                if !pinned[k] {
                    let head = result
                        .posterior
                        .on_marginal(&node.name, 1)
                        .expect("persistent nodes have changepoint distributions");
                    if head > 1.0 - PIN_EPSILON {
                        pinned[k] = true;
                    }
                }
            }
        }
    }
    Ok(FilterRun { marginals, ops })
}
