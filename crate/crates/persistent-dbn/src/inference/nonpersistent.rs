//! Summing a non-persistent hidden node out of the message flow.
//!
//! A non-persistent node has no changepoint, so messages through it sum over
//! its full binary trajectory. Validation guarantees the node is isolated:
//! every hidden neighbour is persistent and every hidden child has the node
//! as its only hidden parent. Conditioned on the neighbours' changepoints,
//! the trajectory sum is a two-state forward pass over the slices:
//!
//! * the node's own transition at slice `t` reads its previous state (off
//!   before slice 1) and the parents' states, which a parent's changepoint
//!   `l` fixes to on exactly when `t > l`;
//! * a persistent child with changepoint `j` contributes its staying-off
//!   factor while `t <= j`, its firing probability at `t = j + 1`, and
//!   nothing afterwards;
//! * direct clamps and observation leaves on the node contribute per-slice
//!   state factors.
//!
//! Messages enumerate the non-target neighbours' changepoints, weighted by
//! their incoming vectors, and run one forward pass per target value:
//! O(M^2) per configuration. For the common minimal pattern — a parentless
//! stationary node with one hidden child and no per-slice factors — the
//! whole child-side vector instead comes from two backward-sweep columns:
//! the sweep value at slice `k` for a child changepoint `j` depends only on
//! `j - k`, so columns for the two largest `j` cover every entry by an index
//! shift, and the message costs O(M) in total.

use crate::changepoint::ChangepointModel;
use crate::cost::Cost;
use crate::model::HiddenNode;

/// Which neighbour the message is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpTarget {
    /// Message toward the parent at this position in the node's parent list.
    /// The output indexes that parent's changepoints.
    Parent(usize),
    /// Message toward the hidden child at this position in the node's child
    /// list. The output indexes that child's changepoints and is the child's
    /// prior-side potential.
    Child(usize),
    /// No target: return the scalar total (index 0 of the output), the
    /// evidence likelihood of an isolated component.
    Total,
}

/// Inputs for one sum-out. Message slots aligned with the node's parent and
/// child lists; the target's slot must be `None`, all others `Some`.
pub struct NpIncoming<'a> {
    /// Incoming distributions over each parent's changepoints.
    pub parent_pis: Vec<Option<&'a [f64]>>,
    /// Evidence potentials over each hidden child's changepoints.
    pub child_lams: Vec<Option<&'a [f64]>>,
    /// Per-slice state factors on the node itself (clamps and observation
    /// leaves); entry `t`, slot 0 unused.
    pub base: &'a [[f64; 2]],
    /// Whether `base` is all ones (lets the fast path apply).
    pub base_trivial: bool,
}

/// Per-slice firing probability of a persistent child given the state of its
/// sole hidden parent.
#[inline]
fn child_fire(child: &HiddenNode, t: usize, parent_on: usize) -> f64 {
    child.cpd_at(t).on_probability(parent_on)
}

/// Factor contributed at slice `t` by a child with changepoint `j`, given
/// the node's state bit `v`.
#[inline]
fn child_factor(child: &HiddenNode, j: usize, t: usize, v: usize) -> f64 {
    if t <= j {
        1.0 - child_fire(child, t, v)
    } else if t == j + 1 {
        child_fire(child, t, v)
    } else {
        1.0
    }
}

/// One forward pass over the node's trajectory with everything fixed:
/// parents' changepoints in `parent_ls`, children's changepoints in
/// `child_js` (entries paired with child node refs). Returns the summed
/// trajectory weight.
#[allow(clippy::too_many_arguments)]
fn forward_pass(
    node: &HiddenNode,
    horizon: usize,
    parent_ls: &[usize],
    children: &[&HiddenNode],
    child_js: &[usize],
    base: &[[f64; 2]],
    cost: &mut Cost,
) -> f64 {
    debug_assert_eq!(children.len(), child_js.len());
    let n_par = parent_ls.len();
    let mut alpha = [1.0f64, 0.0];
    for t in 1..=horizon {
        let mut bits = 0usize;
        for (i, &l) in parent_ls.iter().enumerate() {
            if t > l {
                bits |= 1 << (n_par - 1 - i);
            }
        }
        let mut next = [0.0f64, 0.0];
        for prev in 0..2usize {
            if alpha[prev] == 0.0 {
                continue;
            }
            let p_on = node.on_probability(t, prev == 1, bits);
            next[1] += alpha[prev] * p_on;
            next[0] += alpha[prev] * (1.0 - p_on);
        }
        for v in 0..2usize {
            let mut f = base[t][v];
            for (c, &j) in children.iter().zip(child_js) {
                f *= child_factor(c, j, t, v);
            }
            next[v] *= f;
        }
        alpha = next;
        cost.add(6 + 2 * children.len() as u64);
    }
    alpha[0] + alpha[1]
}

/// Backward sweep column for the minimal pattern: entry `k in 1..=M+1` maps
/// the node state before slice `k` to the summed weight of slices `k..=M`
/// when the single child's changepoint is `j`. Stationary transitions and
/// child rates only; no per-slice base factors.
pub fn backward_column(
    trans: &[[f64; 2]; 2],
    child_survive: &[f64; 2],
    child_fire: &[f64; 2],
    j: usize,
    horizon: usize,
) -> Vec<[f64; 2]> {
    let mut col = vec![[0.0; 2]; horizon + 2];
    col[horizon + 1] = [1.0, 1.0];
    for k in (1..=horizon).rev() {
        for v in 0..2usize {
            let mut acc = 0.0;
            for u in 0..2usize {
                let phi = if k <= j {
                    child_survive[u]
                } else if k == j + 1 {
                    child_fire[u]
                } else {
                    1.0
                };
                acc += trans[v][u] * phi * col[k + 1][u];
            }
            col[k][v] = acc;
        }
    }
    col
}

/// Fast path for the minimal pattern: the child-side vector over all
/// changepoints from the two largest-`j` backward columns.
///
/// The backward value at slice `k` for changepoint `j` depends only on
/// `j - k` while the firing slice stays within the horizon, so entry `j < M`
/// equals the `j = M - 1` column read at slice `M - j`, and entry `M` comes
/// from the all-surviving column.
fn minimal_pattern_message(
    node: &HiddenNode,
    child: &HiddenNode,
    horizon: usize,
    cost: &mut Cost,
) -> Vec<f64> {
    let trans = {
        let p_from_off = node.on_probability(1, false, 0);
        let p_from_on = node.on_probability(1, true, 0);
        [
            [1.0 - p_from_off, p_from_off],
            [1.0 - p_from_on, p_from_on],
        ]
    };
    let fire = [child_fire(child, 1, 0), child_fire(child, 1, 1)];
    let survive = [1.0 - fire[0], 1.0 - fire[1]];

    let col_never = backward_column(&trans, &survive, &fire, horizon, horizon);
    let col_last = backward_column(&trans, &survive, &fire, horizon.saturating_sub(1), horizon);
    cost.add(16 * horizon as u64);

    let mut out = vec![0.0; horizon + 1];
    for j in 0..horizon {
        out[j] = col_last[horizon - j][0];
    }
    out[horizon] = col_never[1][0];
    cost.add((horizon + 1) as u64);
    out
}

/// Compute the message from non-persistent node `np` toward `target`.
///
/// Output length is `horizon + 1` for parent/child targets and 1 for
/// [`NpTarget::Total`]. The caller supplies incoming vectors for every
/// non-target neighbour; log scales are the caller's concern.
pub fn sumout(
    model: &ChangepointModel,
    np: usize,
    incoming: &NpIncoming,
    target: NpTarget,
    cost: &mut Cost,
) -> Vec<f64> {
    let horizon = model.horizon();
    let net = model.net();
    let node = &net.hidden()[np];
    debug_assert!(!node.persistent);
    let children: Vec<&HiddenNode> = node
        .children
        .iter()
        .map(|&c| &net.hidden()[c])
        .collect();

    // Fast path: child-side message in the minimal pattern.
    if let NpTarget::Child(pos) = target {
        let single_child = children.len() == 1 && node.parents.is_empty();
        if single_child
            && incoming.base_trivial
            && node.is_stationary()
            && children[0].is_stationary()
        {
            return minimal_pattern_message(node, children[0], horizon, cost);
        }
        debug_assert!(incoming.child_lams[pos].is_none());
    }

    // Gather the enumerated (non-target) neighbours.
    let mut enum_weights: Vec<&[f64]> = Vec::new();
    // (is_parent, position) per enumerated slot, in enumeration order.
    let mut enum_slots: Vec<(bool, usize)> = Vec::new();
    for (i, slot) in incoming.parent_pis.iter().enumerate() {
        match (slot, target) {
            (None, NpTarget::Parent(p)) if p == i => {}
            (Some(w), _) => {
                enum_weights.push(w);
                enum_slots.push((true, i));
            }
            (None, _) => panic!("missing incoming message for parent {i}"),
        }
    }
    for (i, slot) in incoming.child_lams.iter().enumerate() {
        match (slot, target) {
            (None, NpTarget::Child(p)) if p == i => {}
            (Some(w), _) => {
                enum_weights.push(w);
                enum_slots.push((false, i));
            }
            (None, _) => panic!("missing incoming message for child {i}"),
        }
    }

    let out_len = match target {
        NpTarget::Total => 1,
        _ => horizon + 1,
    };
    let mut out = vec![0.0; out_len];

    let mut parent_ls = vec![0usize; node.parents.len()];
    let mut child_js = vec![0usize; node.children.len()];

    super::polytree::for_each_config(&enum_weights, horizon + 1, |config, weight| {
        for (slot_idx, &(is_parent, pos)) in enum_slots.iter().enumerate() {
            if is_parent {
                parent_ls[pos] = config[slot_idx];
            } else {
                child_js[pos] = config[slot_idx];
            }
        }
        match target {
            NpTarget::Total => {
                out[0] += weight
                    * forward_pass(
                        node,
                        horizon,
                        &parent_ls,
                        &children,
                        &child_js,
                        incoming.base,
                        cost,
                    );
            }
            NpTarget::Parent(pos) => {
                for l in 0..=horizon {
                    parent_ls[pos] = l;
                    out[l] += weight
                        * forward_pass(
                            node,
                            horizon,
                            &parent_ls,
                            &children,
                            &child_js,
                            incoming.base,
                            cost,
                        );
                }
            }
            NpTarget::Child(pos) => {
                for j in 0..=horizon {
                    child_js[pos] = j;
                    out[j] += weight
                        * forward_pass(
                            node,
                            horizon,
                            &parent_ls,
                            &children,
                            &child_js,
                            incoming.base,
                            cost,
                        );
                }
            }
        }
    });
    out
}
