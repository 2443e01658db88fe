//! Variable elimination over the unrolled temporal network.
//!
//! The prototype is unrolled into `N * M` binary variables (node `k` at
//! slice `t` gets id `k * M + (t - 1)`), one conditional factor per
//! node-slice, plus one likelihood factor per leaf observation. Hidden
//! evidence reduces factors in place. Elimination follows a caller-supplied
//! order or a fill-minimizing heuristic; any factor that would exceed the
//! entry budget aborts the run instead of thrashing memory.
//!
//! This baseline makes no use of the changepoint transformation, so its
//! agreement with the message engine is an independent check. Its cost
//! grows with the induced width of the unrolled graph, which is exactly the
//! blow-up the transformation avoids.

use std::collections::BinaryHeap;

use crate::cost::Cost;
use crate::error::OracleError;
use crate::evidence::EvidenceSet;
use crate::inference::{NodePosterior, PosteriorTable};
use crate::model::PrototypeNetwork;
use crate::oracle::factor::{eliminate_var, eliminate_to_factor, FactorTable};

/// Factor-entry budget that lets moderate unrolled networks finish while
/// aborting quickly on networks whose induced width is out of reach.
pub const DEFAULT_VE_BUDGET: u64 = 1 << 22;

/// Largest variable count for which the quadratic fill-minimizing ordering
/// is used; larger graphs fall back to a heap-based min-degree ordering.
const MIN_FILL_LIMIT: usize = 1024;

/// Which posterior queries to run after the shared setup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VeTargets {
    /// Output changepoint distributions for every persistent hidden node.
    AllNodes,
    /// Output the changepoint distribution of a single hidden node.
    Node(String),
}

/// Tuning knobs for [`ve_exact_unrolled`].
#[derive(Debug, Clone)]
pub struct VeOptions {
    /// Maximum number of entries any intermediate factor may hold.
    pub budget: u64,
    /// Elimination order over all `N * M` variable ids; evidence and query
    /// variables are skipped at use time. `None` picks one heuristically.
    pub order: Option<Vec<usize>>,
    pub targets: VeTargets,
}

impl Default for VeOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_VE_BUDGET,
            order: None,
            targets: VeTargets::AllNodes,
        }
    }
}

/// Posterior table plus the number of factor entries touched.
#[derive(Debug, Clone)]
pub struct VeResult {
    pub posterior: PosteriorTable,
    pub ops: u64,
}

/// Variable id of hidden node `k` at slice `t` (1-based).
pub fn slice_var(k: usize, t: usize, horizon: usize) -> usize {
    k * horizon + (t - 1)
}

/// Exact changepoint posteriors and evidence log-likelihood by variable
/// elimination on the unrolled network.
pub fn ve_exact_unrolled(
    net: &PrototypeNetwork,
    horizon: usize,
    ev: &EvidenceSet,
    options: &VeOptions,
) -> Result<VeResult, OracleError> {
    let m = horizon;
    let n = net.hidden().len();
    let n_vars = n * m;
    let mut cost = Cost::new();

    // Evidence values by variable id; these variables disappear from the
    // factor graph up front.
    let mut observed: Vec<Option<u32>> = vec![None; n_vars];
    for (k, _) in net.hidden().iter().enumerate() {
        for &(t, v) in ev.hidden_slices(k) {
            observed[slice_var(k, t, m)] = Some(v);
        }
    }

    let mut factors = build_factors(net, m, ev);
    for (var, v) in observed.iter().enumerate() {
        if let Some(v) = v {
            for f in factors.iter_mut() {
                if f.mentions(var) {
                    *f = f.reduce(var, *v as usize);
                }
            }
        }
    }

    let order = match &options.order {
        Some(order) => validate_order(order, n_vars)?,
        None => heuristic_order(&factors, n_vars, &observed, options.budget)?,
    };

    let queries: Vec<usize> = match &options.targets {
        VeTargets::AllNodes => (0..n).collect(),
        VeTargets::Node(name) => {
            let k = net.hidden().iter().position(|h| &h.name == name).ok_or(
                OracleError::InvalidEliminationOrder {
                    reason: format!("query node `{name}` is not a hidden node"),
                },
            )?;
            vec![k]
        }
    };

    let mut entries: Vec<NodePosterior> = net
        .hidden()
        .iter()
        .map(|h| NodePosterior {
            node: h.name.clone(),
            changepoint: None,
        })
        .collect();
    let mut log_likelihood: Option<f64> = None;

    for &k in &queries {
        let (marginals, total) = node_slice_marginals(
            &factors,
            &order,
            &observed,
            k,
            m,
            options.budget,
            &mut cost,
        )?;
        if log_likelihood.is_none() {
            log_likelihood = Some(total.ln());
        }
        if net.hidden()[k].persistent {
            entries[k].changepoint = Some(changepoint_from_marginals(&marginals));
        }
    }

    // A query pins down the evidence probability as a by-product; with no
    // usable query (for example every target was observed away), eliminate
    // everything once just for the likelihood.
    let log_likelihood = match log_likelihood {
        Some(ll) => ll,
        None => {
            let mut work = factors.clone();
            for &var in &order {
                eliminate_var(&mut work, var, options.budget, &mut cost)?;
            }
            let f = eliminate_to_factor(work, &[], options.budget, &mut cost)?;
            let total = f.total();
            if total <= 0.0 || !total.is_finite() {
                return Err(OracleError::ZeroEvidenceProbability);
            }
            total.ln()
        }
    };

    Ok(VeResult {
        posterior: PosteriorTable::from_parts(m, entries, log_likelihood),
        ops: cost.total(),
    })
}

/// One conditional factor per node-slice plus one likelihood factor per
/// leaf observation.
fn build_factors(net: &PrototypeNetwork, m: usize, ev: &EvidenceSet) -> Vec<FactorTable> {
    let mut factors = Vec::new();
    for (k, node) in net.hidden().iter().enumerate() {
        let needs_prev = node.persistent || node.temporal;
        for t in 1..=m {
            let mut vars = vec![slice_var(k, t, m)];
            if needs_prev && t > 1 {
                vars.push(slice_var(k, t - 1, m));
            }
            for &p in &node.parents {
                vars.push(slice_var(p, t, m));
            }
            vars.sort_unstable();
            // Bit position of each role after sorting.
            let pos = |var: usize| vars.iter().position(|&v| v == var).unwrap();
            let self_pos = pos(slice_var(k, t, m));
            let prev_pos = (needs_prev && t > 1).then(|| pos(slice_var(k, t - 1, m)));
            let parent_pos: Vec<usize> = node
                .parents
                .iter()
                .map(|&p| pos(slice_var(p, t, m)))
                .collect();

            let mut values = vec![0.0; 1 << vars.len()];
            for (idx, slot) in values.iter_mut().enumerate() {
                let self_on = idx >> self_pos & 1 == 1;
                let prev_on = prev_pos.map_or(false, |p| idx >> p & 1 == 1);
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
        }
        for &o in &node.obs_children {
            let emission = &net.observations()[o].emission;
            for &(t, val) in ev.leaf_slices(o) {
                factors.push(FactorTable::singleton(
                    slice_var(k, t, m),
                    emission.probability(false, val),
                    emission.probability(true, val),
                ));
            }
        }
    }
    factors
}

/// Check that a caller-supplied order is a permutation of all variable ids.
fn validate_order(order: &[usize], n_vars: usize) -> Result<Vec<usize>, OracleError> {
    if order.len() != n_vars {
        return Err(OracleError::InvalidEliminationOrder {
            reason: format!("order lists {} variables, network has {n_vars}", order.len()),
        });
    }
    let mut seen = vec![false; n_vars];
    for &var in order {
        if var >= n_vars || seen[var] {
            return Err(OracleError::InvalidEliminationOrder {
                reason: format!("variable {var} is out of range or repeated"),
            });
        }
        seen[var] = true;
    }
    Ok(order.to_vec())
}

/// Interaction graph of the reduced factor set: an undirected edge for every
/// pair of variables sharing a factor.
fn interaction_graph(factors: &[FactorTable], n_vars: usize) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
    for f in factors {
        let vars = f.vars();
        for (i, &a) in vars.iter().enumerate() {
            for &b in &vars[i + 1..] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Entries of the factor created by eliminating a variable of degree `deg`.
fn clique_entries(deg: usize) -> u64 {
    if deg + 1 >= 64 {
        u64::MAX
    } else {
        1u64 << (deg + 1)
    }
}

/// Pick an elimination order for every unobserved variable, aborting as soon
/// as the next elimination would provably exceed the budget. Small graphs
/// use minimum fill-in; large ones minimum degree, whose lazy heap keeps the
/// abort cheap on hopeless networks.
pub(crate) fn heuristic_order(
    factors: &[FactorTable],
    n_vars: usize,
    observed: &[Option<u32>],
    budget: u64,
) -> Result<Vec<usize>, OracleError> {
    let adj = interaction_graph(factors, n_vars);
    let mut active: Vec<bool> = (0..n_vars).map(|v| observed[v].is_none()).collect();
    let mut neigh: Vec<Vec<usize>> = adj;
    let remaining: Vec<usize> = (0..n_vars).filter(|&v| active[v]).collect();

    if remaining.len() <= MIN_FILL_LIMIT {
        min_fill_order(&mut neigh, &mut active, remaining, budget)
    } else {
        min_degree_order(&mut neigh, &mut active, remaining, budget)
    }
}

/// Connect all live neighbours of `var` pairwise and drop `var`.
fn eliminate_in_graph(neigh: &mut [Vec<usize>], active: &mut [bool], var: usize) {
    let nb: Vec<usize> = neigh[var].iter().copied().filter(|&u| active[u]).collect();
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if !neigh[a].contains(&b) {
                neigh[a].push(b);
                neigh[b].push(a);
            }
        }
    }
    active[var] = false;
    for &u in &nb {
        neigh[u].retain(|&w| w != var);
    }
}

fn live_degree(neigh: &[Vec<usize>], active: &[bool], var: usize) -> usize {
    neigh[var].iter().filter(|&&u| active[u]).count()
}

fn min_fill_order(
    neigh: &mut [Vec<usize>],
    active: &mut [bool],
    mut remaining: Vec<usize>,
    budget: u64,
) -> Result<Vec<usize>, OracleError> {
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut best: Option<(usize, usize, usize)> = None; // (fill, degree, var)
        for &v in &remaining {
            let nb: Vec<usize> = neigh[v].iter().copied().filter(|&u| active[u]).collect();
            let mut fill = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if !neigh[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            let key = (fill, nb.len(), v);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        let (_, deg, var) = best.expect("remaining is non-empty");
        let required = clique_entries(deg);
        if required > budget {
            return Err(OracleError::MemoryBudgetExceeded { required, budget });
        }
        eliminate_in_graph(neigh, active, var);
        remaining.retain(|&v| v != var);
        order.push(var);
    }
    Ok(order)
}

fn min_degree_order(
    neigh: &mut [Vec<usize>],
    active: &mut [bool],
    remaining: Vec<usize>,
    budget: u64,
) -> Result<Vec<usize>, OracleError> {
    let mut order = Vec::with_capacity(remaining.len());
    let mut heap: BinaryHeap<std::cmp::Reverse<(usize, usize)>> = remaining
        .iter()
        .map(|&v| std::cmp::Reverse((live_degree(neigh, active, v), v)))
        .collect();
    let mut eliminated = vec![false; neigh.len()];
    while let Some(std::cmp::Reverse((deg, var))) = heap.pop() {
        if eliminated[var] || !active[var] {
            continue;
        }
        // Stale heap entry: degree changed since it was pushed.
        if live_degree(neigh, active, var) != deg {
            heap.push(std::cmp::Reverse((live_degree(neigh, active, var), var)));
            continue;
        }
        let required = clique_entries(deg);
        if required > budget {
            return Err(OracleError::MemoryBudgetExceeded { required, budget });
        }
        let touched: Vec<usize> = neigh[var].iter().copied().filter(|&u| active[u]).collect();
        eliminate_in_graph(neigh, active, var);
        eliminated[var] = true;
        order.push(var);
        for u in touched {
            heap.push(std::cmp::Reverse((live_degree(neigh, active, u), u)));
        }
    }
    Ok(order)
}

/// On-probability of every slice of node `k`, plus the evidence probability.
///
/// Each slice gets its own elimination pass with only the query variable
/// kept live, so intermediate factors stay bounded by the induced width of
/// the order. Sharing one pass across the node's `M` queries looks cheaper
/// but keeps the whole chain live at once: summing a neighbouring node's
/// chain out conditions it on every kept slice, and the fill-in grows one
/// factor to as many as `2^M` entries.
fn node_slice_marginals(
    factors: &[FactorTable],
    order: &[usize],
    observed: &[Option<u32>],
    k: usize,
    m: usize,
    budget: u64,
    cost: &mut Cost,
) -> Result<(Vec<f64>, f64), OracleError> {
    let node_vars: Vec<usize> = (1..=m).map(|t| slice_var(k, t, m)).collect();

    let run = |skip: Option<usize>, cost: &mut Cost| -> Result<FactorTable, OracleError> {
        let mut work = factors.to_vec();
        for &var in order {
            if skip != Some(var) {
                eliminate_var(&mut work, var, budget, cost)?;
            }
        }
        eliminate_to_factor(work, &[], budget, cost)
    };

    let mut marginals = vec![0.0; m];
    let mut total: Option<f64> = None;
    for (t_idx, &q) in node_vars.iter().enumerate() {
        if let Some(v) = observed[q] {
            marginals[t_idx] = v as f64;
            continue;
        }
        let f = run(Some(q), cost)?;
        let z = f.total();
        if z <= 0.0 || !z.is_finite() {
            return Err(OracleError::ZeroEvidenceProbability);
        }
        marginals[t_idx] = if f.vars() == [q] {
            f.values()[1] / z
        } else {
            // The query variable fell out of every factor, which cannot
            // happen for an unobserved variable with its own conditional.
            unreachable!("query variable missing from the final factor")
        };
        total.get_or_insert(z);
    }

    let total = match total {
        Some(z) => z,
        None => {
            // Every slice of this node was observed; eliminating everything
            // leaves the evidence probability.
            let f = run(None, cost)?;
            let z = f.total();
            if z <= 0.0 || !z.is_finite() {
                return Err(OracleError::ZeroEvidenceProbability);
            }
            z
        }
    };
    Ok((marginals, total))
}

/// Changepoint distribution of a persistent node from its slice marginals:
/// the on-probability is non-decreasing and the changepoint mass is its
/// per-slice increment.
fn changepoint_from_marginals(marginals: &[f64]) -> Vec<f64> {
    let m = marginals.len();
    let mut cp = vec![0.0; m + 1];
    let mut prev = 0.0;
    for (t_idx, &p) in marginals.iter().enumerate() {
        cp[t_idx] = (p - prev).max(0.0);
        prev = p;
    }
    cp[m] = (1.0 - prev).max(0.0);
    cp
}
