//! Exact smoothing over the changepoint representation.
//!
//! [`smooth`] computes, for every persistent hidden node, the posterior over
//! its changepoint — the last slice it was still off — given all
//! observations, plus the log-likelihood of the evidence. The network's
//! skeleton must be a forest of polytrees (validation enforces this), and
//! messages are passed twice over each edge: leaf-to-root, then root-to-leaf.
//!
//! Message vectors live on the changepoint domain `{0, .., M}` of a
//! persistent node, so a single edge costs O(M) along chains and
//! O((M+1)^d) into a node with `d` parents. Non-persistent nodes are summed
//! out locally (see [`nonpersistent`]) and report no changepoint posterior.
//! All vectors carry log-domain scale factors, which keeps long horizons and
//! unlikely evidence inside `f64` range and makes the log-likelihood exact.

pub mod kernels;
pub mod leaf;
pub mod nonpersistent;
pub mod polytree;
mod schedule;

use std::collections::HashMap;

use crate::changepoint::ChangepointModel;
use crate::cost::Cost;
use crate::error::InferenceError;
use crate::evidence::{evidence_to_lambda, EvidenceSet};
use crate::message::{MessageKind, MessageVector};

use nonpersistent::{sumout, NpIncoming, NpTarget};
use polytree::{polytree_lambda_message, polytree_pi_message};
use schedule::{build_schedule, Hop};

/// Default cap on a node's in-degree (and a non-persistent node's summed-out
/// fan). Each unit multiplies message cost by `M + 1`.
pub const DEFAULT_IN_DEGREE_CAP: usize = 6;

/// Options for [`smooth`].
#[derive(Debug, Clone)]
pub struct SmoothOptions {
    /// Root the message schedule at this node (it must be persistent).
    /// Beliefs do not depend on the choice; `None` picks a pseudo-centre.
    pub root: Option<String>,
    /// Reject nodes whose message would enumerate more than this many
    /// neighbour configurations per unit.
    pub in_degree_cap: usize,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            root: None,
            in_degree_cap: DEFAULT_IN_DEGREE_CAP,
        }
    }
}

/// Posterior summary for one hidden node.
#[derive(Debug, Clone)]
pub struct NodePosterior {
    pub node: String,
    /// Distribution over the changepoint domain `{0, .., M}`; `None` for
    /// non-persistent nodes, which have no changepoint.
    pub changepoint: Option<Vec<f64>>,
}

/// Smoothed posteriors for every hidden node plus the evidence
/// log-likelihood.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    horizon: usize,
    entries: Vec<NodePosterior>,
    log_likelihood: f64,
    by_name: HashMap<String, usize>,
}

impl PosteriorTable {
    /// Assemble a table; used by the engine and by the enumeration oracles.
    pub fn from_parts(
        horizon: usize,
        entries: Vec<NodePosterior>,
        log_likelihood: f64,
    ) -> Self {
        let by_name = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.node.clone(), i))
            .collect();
        Self {
            horizon,
            entries,
            log_likelihood,
            by_name,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn entries(&self) -> &[NodePosterior] {
        &self.entries
    }

    /// Changepoint posterior of a persistent node, if present.
    pub fn changepoint_distribution(&self, node: &str) -> Option<&[f64]> {
        let idx = *self.by_name.get(node)?;
        self.entries[idx].changepoint.as_deref()
    }

    /// Posterior probability that a persistent node is on at slice `t`
    /// (1-based): the mass of changepoints before `t`.
    pub fn on_marginal(&self, node: &str, t: usize) -> Option<f64> {
        let cp = self.changepoint_distribution(node)?;
        Some(cp.iter().take(t.min(cp.len())).sum())
    }

    /// Largest absolute difference between matching changepoint entries of
    /// two tables (nodes present in both, slots compared pointwise).
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for e in &self.entries {
            let (Some(a), Some(b)) = (
                e.changepoint.as_deref(),
                other.changepoint_distribution(&e.node),
            ) else {
                continue;
            };
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }
}

/// Output of [`smooth`].
#[derive(Debug, Clone)]
pub struct SmoothResult {
    pub posterior: PosteriorTable,
    /// Floating-point work performed in the message kernels.
    pub ops: u64,
}

/// Per-slice evidence factors on a non-persistent node.
struct NpBase {
    factors: Vec<[f64; 2]>,
    trivial: bool,
}

struct Engine<'a> {
    model: &'a ChangepointModel,
    cap: usize,
    base_lambda: Vec<Option<MessageVector>>,
    np_base: Vec<Option<NpBase>>,
    /// Computed messages keyed by `(from, to)` hidden-node indices.
    messages: HashMap<(usize, usize), MessageVector>,
    cost: Cost,
}

impl<'a> Engine<'a> {
    fn new(
        model: &'a ChangepointModel,
        evidence: &EvidenceSet,
        cap: usize,
    ) -> Result<Self, InferenceError> {
        let net = model.net();
        let horizon = model.horizon();
        let mut cost = Cost::new();

        // Every observation must land inside the horizon.
        for (o, obs_node) in net.observations().iter().enumerate() {
            for &(t, _) in evidence.leaf_slices(o) {
                if t > horizon {
                    return Err(InferenceError::Evidence(
                        crate::error::EvidenceError::TimeOutOfRange {
                            node: obs_node.name.clone(),
                            t,
                            horizon,
                        },
                    ));
                }
            }
        }

        let mut base_lambda = vec![None; net.hidden().len()];
        let mut np_base = Vec::with_capacity(net.hidden().len());
        for (u, node) in net.hidden().iter().enumerate() {
            if node.persistent {
                let interval =
                    evidence_to_lambda(&node.name, evidence.hidden_slices(u), horizon)?;
                let mut base = MessageVector::lambda(interval)?;
                for &o in &node.obs_children {
                    let slices = evidence.leaf_slices(o);
                    if slices.is_empty() {
                        continue;
                    }
                    let emission = &net.observations()[o].emission;
                    let lik = leaf::leaf_likelihood(emission, slices, horizon, &mut cost);
                    base = base.scaled_by(&lik)?;
                }
                base_lambda[u] = Some(base);
                np_base.push(None);
            } else {
                let mut factors = vec![[1.0; 2]; horizon + 1];
                let mut trivial = true;
                for &(t, v) in evidence.hidden_slices(u) {
                    if t > horizon {
                        return Err(InferenceError::Evidence(
                            crate::error::EvidenceError::TimeOutOfRange {
                                node: node.name.clone(),
                                t,
                                horizon,
                            },
                        ));
                    }
                    factors[t][1 - v as usize] = 0.0;
                    trivial = false;
                }
                for &o in &node.obs_children {
                    let emission = &net.observations()[o].emission;
                    for &(t, val) in evidence.leaf_slices(o) {
                        factors[t][0] *= emission.probability(false, val);
                        factors[t][1] *= emission.probability(true, val);
                        trivial = false;
                    }
                }
                np_base.push(Some(NpBase { factors, trivial }));
            }
        }
        Ok(Self {
            model,
            cap,
            base_lambda,
            np_base,
            messages: HashMap::new(),
            cost,
        })
    }

    /// Evidence potential of persistent node `u`: its base evidence vector
    /// times every child message except the one from `exclude`.
    fn lambda_potential(
        &self,
        u: usize,
        exclude: Option<usize>,
    ) -> Result<MessageVector, InferenceError> {
        let node = &self.model.net().hidden()[u];
        let mut acc = self.base_lambda[u]
            .clone()
            .expect("lambda potential requested for a non-persistent node");
        for &c in &node.children {
            if Some(c) == exclude {
                continue;
            }
            acc = acc.product(&self.messages[&(c, u)])?;
        }
        Ok(acc)
    }

    /// Prior-side potential of persistent node `u`, folding in every
    /// parent's message.
    fn psi_potential(&mut self, u: usize) -> Result<MessageVector, InferenceError> {
        let net = self.model.net();
        let node = &net.hidden()[u];
        if node.parents.is_empty() {
            return MessageVector::pi(self.model.changepoint_distribution(u, 0));
        }
        if node.parents.len() == 1 && !net.hidden()[node.parents[0]].persistent {
            // The summed-out parent already sent this node's prior side.
            return Ok(self.messages[&(node.parents[0], u)].clone());
        }
        let msgs: Vec<&MessageVector> = node
            .parents
            .iter()
            .map(|&p| &self.messages[&(p, u)])
            .collect();
        let scale: f64 = msgs.iter().map(|m| m.log_scale()).sum();
        let other_pos: Vec<usize> = (1..node.parents.len()).collect();
        let other_pis: Vec<&[f64]> = msgs[1..].iter().map(|m| m.values()).collect();
        let values = polytree_pi_message(
            self.model,
            u,
            0,
            msgs[0].values(),
            &other_pos,
            &other_pis,
            self.cap,
            &mut self.cost,
        )?;
        MessageVector::with_scale(MessageKind::Pi, values, scale)
    }

    /// Message from persistent `u` to its model parent `v`.
    fn persistent_lambda_message(
        &mut self,
        u: usize,
        v: usize,
    ) -> Result<MessageVector, InferenceError> {
        let lam_pot = self.lambda_potential(u, None)?;
        let net = self.model.net();
        if !net.hidden()[v].persistent {
            // A summed-out parent consumes the raw potential over `u`'s own
            // changepoints; its local pass applies the coupling itself.
            return Ok(lam_pot);
        }
        let node = &net.hidden()[u];
        let target_pos = node
            .parents
            .iter()
            .position(|&p| p == v)
            .expect("hop target is a parent");
        let mut other_pos = Vec::new();
        let mut other_pis = Vec::new();
        let mut scale = lam_pot.log_scale();
        for (i, &p) in node.parents.iter().enumerate() {
            if i == target_pos {
                continue;
            }
            let m = &self.messages[&(p, u)];
            other_pos.push(i);
            other_pis.push(m.values());
            scale += m.log_scale();
        }
        let values = polytree_lambda_message(
            self.model,
            u,
            target_pos,
            lam_pot.values(),
            &other_pos,
            &other_pis,
            self.cap,
            &mut self.cost,
        )?;
        MessageVector::with_scale(MessageKind::Lambda, values, scale)
    }

    /// Message from persistent `u` to its model child `v`: `u`'s belief with
    /// `v`'s own contribution removed, over `u`'s changepoints.
    fn persistent_pi_message(
        &mut self,
        u: usize,
        v: usize,
    ) -> Result<MessageVector, InferenceError> {
        let psi = self.psi_potential(u)?;
        let lam_pot = self.lambda_potential(u, Some(v))?;
        psi.product(&lam_pot)
    }

    /// Message from non-persistent `u` toward `v`.
    fn np_message(
        &mut self,
        u: usize,
        v: usize,
        to_is_dbn_parent: bool,
    ) -> Result<MessageVector, InferenceError> {
        let net = self.model.net();
        let node = &net.hidden()[u];
        let fan = node.parents.len() + node.children.len();
        if fan > self.cap + 1 {
            return Err(InferenceError::InDegreeTooLarge {
                node: node.name.clone(),
                degree: fan,
                cap: self.cap + 1,
            });
        }
        let mut target = None;
        let mut scale = 0.0;
        let mut parent_pis = Vec::with_capacity(node.parents.len());
        for (i, &p) in node.parents.iter().enumerate() {
            if to_is_dbn_parent && p == v && target.is_none() {
                target = Some(NpTarget::Parent(i));
                parent_pis.push(None);
            } else {
                let m = &self.messages[&(p, u)];
                scale += m.log_scale();
                parent_pis.push(Some(m.values()));
            }
        }
        let mut child_lams = Vec::with_capacity(node.children.len());
        for (i, &c) in node.children.iter().enumerate() {
            if !to_is_dbn_parent && c == v && target.is_none() {
                target = Some(NpTarget::Child(i));
                child_lams.push(None);
            } else {
                let m = &self.messages[&(c, u)];
                scale += m.log_scale();
                child_lams.push(Some(m.values()));
            }
        }
        let target = target.expect("hop target is a neighbour");
        let base = self.np_base[u].as_ref().expect("non-persistent base");
        let incoming = NpIncoming {
            parent_pis,
            child_lams,
            base: &base.factors,
            base_trivial: base.trivial,
        };
        let values = sumout(self.model, u, &incoming, target, &mut self.cost);
        let kind = if to_is_dbn_parent {
            MessageKind::Lambda
        } else {
            MessageKind::Pi
        };
        MessageVector::with_scale(kind, values, scale)
    }

    fn run_hop(&mut self, hop: Hop) -> Result<(), InferenceError> {
        let from_persistent = self.model.net().hidden()[hop.from].persistent;
        let mv = if from_persistent {
            if hop.to_is_dbn_parent {
                self.persistent_lambda_message(hop.from, hop.to)?
            } else {
                self.persistent_pi_message(hop.from, hop.to)?
            }
        } else {
            self.np_message(hop.from, hop.to, hop.to_is_dbn_parent)?
        };
        self.messages.insert((hop.from, hop.to), mv);
        Ok(())
    }

    /// Evidence likelihood of an isolated non-persistent node.
    fn np_island_log_total(&mut self, u: usize) -> Result<f64, InferenceError> {
        let base = self.np_base[u].as_ref().expect("non-persistent base");
        let incoming = NpIncoming {
            parent_pis: Vec::new(),
            child_lams: Vec::new(),
            base: &base.factors,
            base_trivial: base.trivial,
        };
        let total = sumout(self.model, u, &incoming, NpTarget::Total, &mut self.cost)[0];
        if total <= 0.0 || !total.is_finite() {
            return Err(InferenceError::ZeroEvidenceProbability);
        }
        Ok(total.ln())
    }
}

/// Exact smoothing: posterior changepoint distributions and evidence
/// log-likelihood.
pub fn smooth(
    model: &ChangepointModel,
    evidence: &EvidenceSet,
    options: &SmoothOptions,
) -> Result<SmoothResult, InferenceError> {
    let net = model.net();
    let root_override = match &options.root {
        None => None,
        Some(name) => Some(
            net.hidden_index(name)
                .ok_or_else(|| InferenceError::UnknownRoot { node: name.clone() })?,
        ),
    };
    let schedule = build_schedule(net, root_override)?;
    let mut engine = Engine::new(model, evidence, options.in_degree_cap)?;

    let mut posteriors: Vec<Option<Vec<f64>>> = vec![None; net.hidden().len()];
    let mut log_likelihood = 0.0;
    for comp in &schedule.components {
        for &hop in &comp.collect {
            engine.run_hop(hop)?;
        }
        for &hop in &comp.distribute {
            engine.run_hop(hop)?;
        }
        if !net.hidden()[comp.root].persistent {
            // A lone non-persistent node; no changepoint posterior to report.
            log_likelihood += engine.np_island_log_total(comp.root)?;
            continue;
        }
        for &u in &comp.nodes {
            if !net.hidden()[u].persistent {
                continue;
            }
            let psi = engine.psi_potential(u)?;
            let bel = psi.product(&engine.lambda_potential(u, None)?)?;
            if u == comp.root {
                log_likelihood += bel.log_total();
            }
            posteriors[u] = Some(bel.to_distribution()?);
        }
    }

    let entries = net
        .hidden()
        .iter()
        .zip(posteriors)
        .map(|(node, changepoint)| NodePosterior {
            node: node.name.clone(),
            changepoint,
        })
        .collect();
    Ok(SmoothResult {
        posterior: PosteriorTable::from_parts(model.horizon(), entries, log_likelihood),
        ops: engine.cost.total(),
    })
}
