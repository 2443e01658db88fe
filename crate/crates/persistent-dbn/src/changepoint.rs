//! Changepoint form of an unrolled persistent model.
//!
//! A persistent node's trajectory over `M` slices is determined by the slice
//! at which it turns on, so the `M` binary variables collapse into one
//! changepoint variable with values `0..=M`: value `j` means the node was off
//! through slice `j` and on from slice `j + 1`; value `M` means it never
//! turned on. Equivalently, `j` counts the leading off slices.
//!
//! For each persistent node and each joint parent state this type
//! precomputes, per slice, the probability of turning on, together with the
//! cumulative products of staying-off probabilities. Those tables drive every
//! O(M) message recurrence: entry `i` of a cumulative table is the
//! probability of surviving (staying off) through slice `i` under that parent
//! state, with entry 0 equal to one.

use crate::error::ModelError;
use crate::model::{PrototypeNetwork, StructureClass};

/// Is a node with changepoint `j` on at slice `t`?
#[inline]
pub fn on_at(j: usize, t: usize) -> bool {
    t > j
}

/// Changepoint of a binary trajectory (`traj[t-1]` is the state at slice
/// `t`), or `None` when the trajectory switches off after being on.
pub fn changepoint_of_trajectory(traj: &[u8]) -> Option<usize> {
    let first_on = traj.iter().position(|&b| b != 0);
    match first_on {
        None => Some(traj.len()),
        Some(i) => {
            if traj[i..].iter().all(|&b| b != 0) {
                Some(i)
            } else {
                None
            }
        }
    }
}

/// Per-parent-state slice tables for one persistent node.
#[derive(Debug, Clone)]
pub struct PersistentTables {
    /// `fire[z][t-1]`: probability of turning on at slice `t` given joint
    /// parent state `z` (and the node still off).
    fire: Vec<Vec<f64>>,
    /// `cum_surv[z][i]`: probability of staying off through slice `i` given
    /// parent state `z` at every slice. `cum_surv[z][0] == 1`.
    cum_surv: Vec<Vec<f64>>,
    stationary: bool,
}

impl PersistentTables {
    pub fn fire(&self, parent_bits: usize) -> &[f64] {
        &self.fire[parent_bits]
    }

    pub fn cum_surv(&self, parent_bits: usize) -> &[f64] {
        &self.cum_surv[parent_bits]
    }

    pub fn stationary(&self) -> bool {
        self.stationary
    }
}

/// A prototype network bound to a horizon, with changepoint tables.
#[derive(Debug, Clone)]
pub struct ChangepointModel {
    net: PrototypeNetwork,
    horizon: usize,
    tables: Vec<Option<PersistentTables>>,
}

impl ChangepointModel {
    /// Bind `net` to `horizon` slices and precompute the changepoint tables.
    ///
    /// The network must pass validation and fall inside the exact engine's
    /// structural classes (chain, tree or polytree skeleton).
    pub fn transform(net: &PrototypeNetwork, horizon: usize) -> Result<Self, ModelError> {
        if horizon == 0 {
            return Err(ModelError::HorizonZero);
        }
        let report = net.validate()?;
        if report.class == StructureClass::GeneralDag {
            return Err(ModelError::UnsupportedStructure(
                "the hidden skeleton has an undirected cycle".into(),
            ));
        }

        let tables = net
            .hidden()
            .iter()
            .map(|h| {
                if !h.persistent {
                    return None;
                }
                let configs = 1usize << h.parents.len();
                let mut fire = Vec::with_capacity(configs);
                let mut cum_surv = Vec::with_capacity(configs);
                for z in 0..configs {
                    let probs: Vec<f64> = (1..=horizon)
                        .map(|t| h.cpd_at(t).on_probability(z))
                        .collect();
                    let mut cum = Vec::with_capacity(horizon + 1);
                    cum.push(1.0);
                    for t in 1..=horizon {
                        cum.push(cum[t - 1] * (1.0 - probs[t - 1]));
                    }
                    fire.push(probs);
                    cum_surv.push(cum);
                }
                Some(PersistentTables {
                    fire,
                    cum_surv,
                    stationary: h.is_stationary(),
                })
            })
            .collect();

        Ok(Self {
            net: net.clone(),
            horizon,
            tables,
        })
    }

    pub fn net(&self) -> &PrototypeNetwork {
        &self.net
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Changepoint domain size, `horizon + 1`.
    pub fn domain(&self) -> usize {
        self.horizon + 1
    }

    /// Tables of a persistent node; `None` for non-persistent nodes.
    pub fn tables(&self, node: usize) -> Option<&PersistentTables> {
        self.tables[node].as_ref()
    }

    /// Changepoint distribution of `node` when its parents hold the fixed
    /// joint state `parent_bits` at every slice.
    ///
    /// With no parents this is the node's prior: with stationary firing
    /// probability `p`, value `j < M` has probability `(1-p)^j p` and value
    /// `M` has probability `(1-p)^M`.
    pub fn changepoint_distribution(&self, node: usize, parent_bits: usize) -> Vec<f64> {
        let tables = self.tables[node]
            .as_ref()
            .expect("changepoint distribution of a non-persistent node");
        let fire = tables.fire(parent_bits);
        let cum = tables.cum_surv(parent_bits);
        let mut dist = Vec::with_capacity(self.horizon + 1);
        for j in 0..self.horizon {
            dist.push(cum[j] * fire[j]);
        }
        dist.push(cum[self.horizon]);
        dist
    }
}
