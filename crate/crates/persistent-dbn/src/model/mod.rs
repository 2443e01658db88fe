//! The prototype network: one slice of the temporal model.
//!
//! A prototype holds binary hidden nodes and categorical observation leaves.
//! Hidden nodes are either *persistent* — once on they stay on, and their CPD
//! gives the probability of turning on as a function of their same-slice
//! parents — or non-persistent, in which case each slice's state is drawn
//! afresh (optionally conditioned on the previous slice through a self
//! chain). Observation leaves hang off a single hidden parent and emit one
//! categorical symbol per slice.
//!
//! Unrolling the prototype over `M` slices yields the temporal network; all
//! hidden nodes start implicitly off before the first slice.

mod cpd;
mod format;

pub use cpd::{bit_string, parse_bit_string, CpdTable, EmissionTable};
pub use format::{
    evidence_from_json, evidence_to_json, load_evidence, load_model, model_from_json,
    model_to_json, save_evidence, save_model,
};

use std::collections::{BTreeMap, HashMap};

use crate::error::ModelError;

/// Row-sum tolerance for emission tables.
pub const CPD_ROW_TOL: f64 = 1e-12;

/// Reference to a node by kind and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Hidden(usize),
    Observation(usize),
}

/// A binary hidden node of the prototype.
#[derive(Debug, Clone)]
pub struct HiddenNode {
    pub name: String,
    /// Hidden parents, in declared order (the CPD key order).
    pub parents: Vec<usize>,
    /// Hidden children, derived from the parent lists.
    pub children: Vec<usize>,
    /// Observation leaves attached to this node.
    pub obs_children: Vec<usize>,
    /// Whether the on state is absorbing.
    pub persistent: bool,
    /// For non-persistent nodes: whether the CPD conditions on the node's own
    /// previous state (encoded as the leading CPD key bit).
    pub temporal: bool,
    pub cpd: CpdTable,
    /// Per-slice CPD overrides for non-stationary persistent nodes.
    pub overrides: BTreeMap<usize, CpdTable>,
}

impl HiddenNode {
    /// The CPD in effect at slice `t` (1-based).
    pub fn cpd_at(&self, t: usize) -> &CpdTable {
        self.overrides.get(&t).unwrap_or(&self.cpd)
    }

    /// Probability of being on at slice `t` given the previous own state and
    /// the joint parent state, under the unrolled semantics.
    pub fn on_probability(&self, t: usize, prev_on: bool, parent_bits: usize) -> f64 {
        if self.persistent {
            if prev_on {
                1.0
            } else {
                self.cpd_at(t).on_probability(parent_bits)
            }
        } else {
            let bits = if self.temporal {
                ((prev_on as usize) << self.parents.len()) | parent_bits
            } else {
                parent_bits
            };
            self.cpd_at(t).on_probability(bits)
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.overrides.is_empty()
    }
}

/// A categorical observation leaf.
#[derive(Debug, Clone)]
pub struct ObservationNode {
    pub name: String,
    /// Index of the hidden parent.
    pub parent: usize,
    pub emission: EmissionTable,
}

/// Structural class of the hidden-node graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureClass {
    /// Every node has at most one parent and one child, single component.
    Chain,
    /// Every node has at most one parent.
    Tree,
    /// No undirected cycles, some node has several parents.
    Polytree,
    /// The skeleton has an undirected cycle; outside the exact engine's scope.
    GeneralDag,
}

/// Summary returned by [`PrototypeNetwork::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub class: StructureClass,
    pub hidden_count: usize,
    pub observation_count: usize,
    pub persistent_count: usize,
    pub non_persistent: Vec<String>,
    pub max_in_degree: usize,
    pub components: usize,
    /// Whether the exact smoothing engine accepts this structure.
    pub exact_engine_supported: bool,
}

/// One slice of the temporal model. See the module docs.
#[derive(Debug, Clone)]
pub struct PrototypeNetwork {
    hidden: Vec<HiddenNode>,
    observations: Vec<ObservationNode>,
    by_name: HashMap<String, NodeRef>,
}

/// Unresolved hidden-node description used to assemble a network.
#[derive(Debug, Clone)]
pub struct HiddenSpec {
    pub name: String,
    pub parents: Vec<String>,
    pub persistent: bool,
    pub temporal: bool,
    pub cpd: CpdTable,
}

/// Unresolved observation-leaf description used to assemble a network.
#[derive(Debug, Clone)]
pub struct ObservationSpec {
    pub name: String,
    pub parent: String,
    pub emission: EmissionTable,
}

impl PrototypeNetwork {
    /// Assemble a network from node descriptions, resolving name references.
    pub fn from_parts(
        hidden: Vec<HiddenSpec>,
        observations: Vec<ObservationSpec>,
    ) -> Result<Self, ModelError> {
        let mut by_name: HashMap<String, NodeRef> = HashMap::new();
        for (i, spec) in hidden.iter().enumerate() {
            if by_name
                .insert(spec.name.clone(), NodeRef::Hidden(i))
                .is_some()
            {
                return Err(ModelError::SchemaViolation(format!(
                    "duplicate node id `{}`",
                    spec.name
                )));
            }
        }
        for (i, spec) in observations.iter().enumerate() {
            if by_name
                .insert(spec.name.clone(), NodeRef::Observation(i))
                .is_some()
            {
                return Err(ModelError::SchemaViolation(format!(
                    "duplicate node id `{}`",
                    spec.name
                )));
            }
        }

        let mut nodes: Vec<HiddenNode> = Vec::with_capacity(hidden.len());
        for spec in &hidden {
            let mut parents = Vec::with_capacity(spec.parents.len());
            for p in &spec.parents {
                match by_name.get(p) {
                    Some(NodeRef::Hidden(idx)) => parents.push(*idx),
                    Some(NodeRef::Observation(_)) => {
                        return Err(ModelError::SchemaViolation(format!(
                            "node `{}` lists observation leaf `{p}` as a parent",
                            spec.name
                        )))
                    }
                    None => {
                        return Err(ModelError::SchemaViolation(format!(
                            "node `{}` references unknown parent `{p}`",
                            spec.name
                        )))
                    }
                }
            }
            let expected_inputs = spec.parents.len() + (spec.temporal as usize);
            if spec.persistent && spec.temporal {
                return Err(ModelError::SchemaViolation(format!(
                    "persistent node `{}` must not declare a self chain",
                    spec.name
                )));
            }
            if spec.cpd.inputs() != expected_inputs {
                return Err(ModelError::SchemaViolation(format!(
                    "node `{}` has {} CPD inputs but expects {}",
                    spec.name,
                    spec.cpd.inputs(),
                    expected_inputs
                )));
            }
            nodes.push(HiddenNode {
                name: spec.name.clone(),
                parents,
                children: Vec::new(),
                obs_children: Vec::new(),
                persistent: spec.persistent,
                temporal: spec.temporal,
                cpd: spec.cpd.clone(),
                overrides: BTreeMap::new(),
            });
        }
        for i in 0..nodes.len() {
            let parents = nodes[i].parents.clone();
            for p in parents {
                nodes[p].children.push(i);
            }
        }

        let mut obs_nodes = Vec::with_capacity(observations.len());
        for (i, spec) in observations.iter().enumerate() {
            let parent = match by_name.get(&spec.parent) {
                Some(NodeRef::Hidden(idx)) => *idx,
                Some(NodeRef::Observation(_)) => {
                    return Err(ModelError::SchemaViolation(format!(
                        "observation `{}` must attach to a hidden node, not `{}`",
                        spec.name, spec.parent
                    )))
                }
                None => {
                    return Err(ModelError::SchemaViolation(format!(
                        "observation `{}` references unknown parent `{}`",
                        spec.name, spec.parent
                    )))
                }
            };
            nodes[parent].obs_children.push(i);
            obs_nodes.push(ObservationNode {
                name: spec.name.clone(),
                parent,
                emission: spec.emission.clone(),
            });
        }

        Ok(Self {
            hidden: nodes,
            observations: obs_nodes,
            by_name,
        })
    }

    /// Install a per-slice CPD override on a persistent node.
    pub fn add_override(&mut self, node: &str, t: usize, cpd: CpdTable) -> Result<(), ModelError> {
        let idx = match self.by_name.get(node) {
            Some(NodeRef::Hidden(i)) => *i,
            _ => {
                return Err(ModelError::SchemaViolation(format!(
                    "override references unknown hidden node `{node}`"
                )))
            }
        };
        let h = &mut self.hidden[idx];
        if !h.persistent {
            return Err(ModelError::SchemaViolation(format!(
                "override targets non-persistent node `{node}`; only persistent nodes may vary by slice"
            )));
        }
        if t == 0 {
            return Err(ModelError::SchemaViolation(format!(
                "override for node `{node}` uses slice 0; slices are 1-based"
            )));
        }
        if cpd.inputs() != h.cpd.inputs() {
            return Err(ModelError::SchemaViolation(format!(
                "override for node `{node}` at slice {t} has {} inputs, expected {}",
                cpd.inputs(),
                h.cpd.inputs()
            )));
        }
        if h.overrides.insert(t, cpd).is_some() {
            return Err(ModelError::SchemaViolation(format!(
                "duplicate override for node `{node}` at slice {t}"
            )));
        }
        Ok(())
    }

    pub fn hidden(&self) -> &[HiddenNode] {
        &self.hidden
    }

    pub fn observations(&self) -> &[ObservationNode] {
        &self.observations
    }

    pub fn node_ref(&self, name: &str) -> Option<NodeRef> {
        self.by_name.get(name).copied()
    }

    pub fn hidden_index(&self, name: &str) -> Option<usize> {
        match self.by_name.get(name) {
            Some(NodeRef::Hidden(i)) => Some(*i),
            _ => None,
        }
    }

    /// Total node count, hidden plus observation leaves.
    pub fn node_count(&self) -> usize {
        self.hidden.len() + self.observations.len()
    }

    /// Indices of hidden nodes in a parents-before-children order.
    pub fn topological_order(&self) -> Result<Vec<usize>, ModelError> {
        let n = self.hidden.len();
        let mut in_deg: Vec<usize> = self.hidden.iter().map(|h| h.parents.len()).collect();
        let mut order = Vec::with_capacity(n);
        let mut ready: Vec<usize> = (0..n).filter(|&i| in_deg[i] == 0).collect();
        while let Some(i) = ready.pop() {
            order.push(i);
            for &c in &self.hidden[i].children {
                in_deg[c] -= 1;
                if in_deg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| in_deg[i] > 0).unwrap();
            return Err(ModelError::CyclicGraph(self.hidden[stuck].name.clone()));
        }
        Ok(order)
    }

    /// Validate structure and probabilities, and classify the skeleton.
    pub fn validate(&self) -> Result<ValidationReport, ModelError> {
        self.topological_order()?;

        for h in &self.hidden {
            if let Err(row) = h.cpd.check_rows() {
                return Err(ModelError::UnnormalizedCpd {
                    node: h.name.clone(),
                    row,
                });
            }
            for cpd in h.overrides.values() {
                if let Err(row) = cpd.check_rows() {
                    return Err(ModelError::UnnormalizedCpd {
                        node: h.name.clone(),
                        row,
                    });
                }
            }
        }
        for o in &self.observations {
            if let Err(row) = o.emission.check_rows(CPD_ROW_TOL) {
                return Err(ModelError::UnnormalizedCpd {
                    node: o.name.clone(),
                    row,
                });
            }
        }

        // Non-persistent hidden nodes must be summable-out on their own:
        // every hidden neighbour is persistent, and every hidden child has the
        // non-persistent node as its only hidden parent.
        for (i, h) in self.hidden.iter().enumerate() {
            if h.persistent {
                continue;
            }
            let neighbours = h.parents.iter().chain(h.children.iter());
            for &nb in neighbours {
                if !self.hidden[nb].persistent {
                    return Err(ModelError::NonIsolatedNonPersistent(h.name.clone()));
                }
            }
            for &c in &h.children {
                if self.hidden[c].parents.len() > 1 {
                    return Err(ModelError::NonIsolatedNonPersistent(self.hidden[i].name.clone()));
                }
            }
        }

        // Undirected-cycle check on the hidden skeleton via union-find.
        let n = self.hidden.len();
        let mut parent_uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut Vec<usize>, mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut acyclic_skeleton = true;
        for (c, h) in self.hidden.iter().enumerate() {
            for &p in &h.parents {
                let (rp, rc) = (find(&mut parent_uf, p), find(&mut parent_uf, c));
                if rp == rc {
                    acyclic_skeleton = false;
                } else {
                    parent_uf[rp] = rc;
                }
            }
        }
        let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent_uf, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        let components = roots.len();

        let max_in_degree = self
            .hidden
            .iter()
            .map(|h| h.parents.len())
            .max()
            .unwrap_or(0);
        let class = if !acyclic_skeleton {
            StructureClass::GeneralDag
        } else if max_in_degree > 1 {
            StructureClass::Polytree
        } else if components == 1
            && self
                .hidden
                .iter()
                .all(|h| h.parents.len() <= 1 && h.children.len() <= 1)
        {
            StructureClass::Chain
        } else {
            StructureClass::Tree
        };

        let non_persistent: Vec<String> = self
            .hidden
            .iter()
            .filter(|h| !h.persistent)
            .map(|h| h.name.clone())
            .collect();
        let persistent_count = self.hidden.len() - non_persistent.len();

        Ok(ValidationReport {
            class,
            hidden_count: self.hidden.len(),
            observation_count: self.observations.len(),
            persistent_count,
            non_persistent,
            max_in_degree,
            components,
            exact_engine_supported: class != StructureClass::GeneralDag,
        })
    }
}
