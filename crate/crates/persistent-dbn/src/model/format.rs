//! JSON model and evidence files.
//!
//! A model file lists hidden nodes, observation leaves and optional per-slice
//! CPD overrides:
//!
//! ```json
//! {
//!   "nodes": [
//!     {"id": "a", "parents": [], "persistent": true, "cpd": {"": 0.3}},
//!     {"id": "b", "parents": ["a"], "persistent": true,
//!      "cpd": {"0": 0.1, "1": 0.8}}
//!   ],
//!   "observation_nodes": [
//!     {"id": "o", "parent": "b",
//!      "emission": {"0": [0.8, 0.2], "1": [0.3, 0.7]}}
//!   ],
//!   "nonstationary": [
//!     {"node": "b", "t": 3, "cpd": {"0": 0.4, "1": 0.9}}
//!   ]
//! }
//! ```
//!
//! CPD keys are bit strings over the declared parent order, first parent
//! leftmost; a non-persistent node with `"temporal": true` prepends its own
//! previous state as the leading bit. Evidence files are arrays of
//! `{"node", "t", "value"}` records with 1-based slices.
//!
//! Saving emits a canonical form — sorted map keys, fixed field order — so a
//! load/save round trip is byte-stable.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cpd::{bit_string, parse_bit_string, CpdTable, EmissionTable};
use super::{HiddenSpec, ObservationSpec, PrototypeNetwork};
use crate::error::ModelError;
use crate::evidence::{EvidenceSet, Observation};

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    observation_nodes: Vec<ObsEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    nonstationary: Vec<OverrideEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    id: String,
    #[serde(default)]
    parents: Vec<String>,
    persistent: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    temporal: bool,
    cpd: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObsEntry {
    id: String,
    parent: String,
    emission: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OverrideEntry {
    node: String,
    t: usize,
    cpd: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EvidenceEntry {
    node: String,
    t: usize,
    value: u32,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn classify_json_error(err: serde_json::Error) -> ModelError {
    match err.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
            ModelError::ParseError {
                line: err.line(),
                reason: err.to_string(),
            }
        }
        serde_json::error::Category::Io => ModelError::SchemaViolation(err.to_string()),
        serde_json::error::Category::Data => ModelError::SchemaViolation(err.to_string()),
    }
}

fn cpd_from_map(
    node: &str,
    map: &BTreeMap<String, f64>,
    inputs: usize,
) -> Result<CpdTable, ModelError> {
    if map.len() != 1usize << inputs {
        return Err(ModelError::SchemaViolation(format!(
            "node `{node}` needs {} CPD rows, got {}",
            1usize << inputs,
            map.len()
        )));
    }
    let mut rows = vec![f64::NAN; 1 << inputs];
    for (key, &p) in map {
        let idx = parse_bit_string(key, inputs).map_err(|_| {
            ModelError::SchemaViolation(format!(
                "node `{node}` has CPD key `{key}`, expected a {inputs}-bit string"
            ))
        })?;
        rows[idx] = p;
    }
    CpdTable::new(inputs, rows)
}

fn cpd_to_map(cpd: &CpdTable) -> BTreeMap<String, f64> {
    cpd.rows()
        .iter()
        .enumerate()
        .map(|(idx, &p)| (bit_string(idx, cpd.inputs()), p))
        .collect()
}

/// Materialize a network from the intermediate file structs.
fn build_network(file: ModelFile) -> Result<PrototypeNetwork, ModelError> {
    let mut hidden = Vec::with_capacity(file.nodes.len());
    for entry in &file.nodes {
        if entry.persistent && entry.temporal {
            return Err(ModelError::SchemaViolation(format!(
                "persistent node `{}` must not set temporal",
                entry.id
            )));
        }
        let inputs = entry.parents.len() + entry.temporal as usize;
        let cpd = cpd_from_map(&entry.id, &entry.cpd, inputs)?;
        hidden.push(HiddenSpec {
            name: entry.id.clone(),
            parents: entry.parents.clone(),
            persistent: entry.persistent,
            temporal: entry.temporal,
            cpd,
        });
    }

    let mut observations = Vec::with_capacity(file.observation_nodes.len());
    for entry in &file.observation_nodes {
        let off = entry.emission.get("0").ok_or_else(|| {
            ModelError::SchemaViolation(format!("observation `{}` lacks emission row \"0\"", entry.id))
        })?;
        let on = entry.emission.get("1").ok_or_else(|| {
            ModelError::SchemaViolation(format!("observation `{}` lacks emission row \"1\"", entry.id))
        })?;
        if entry.emission.len() != 2 {
            return Err(ModelError::SchemaViolation(format!(
                "observation `{}` has extra emission rows",
                entry.id
            )));
        }
        observations.push(ObservationSpec {
            name: entry.id.clone(),
            parent: entry.parent.clone(),
            emission: EmissionTable::new(off.clone(), on.clone())?,
        });
    }

    let mut net = PrototypeNetwork::from_parts(hidden, observations)?;
    for entry in &file.nonstationary {
        let inputs = net
            .hidden_index(&entry.node)
            .map(|i| net.hidden()[i].cpd.inputs())
            .ok_or_else(|| {
                ModelError::SchemaViolation(format!(
                    "override references unknown hidden node `{}`",
                    entry.node
                ))
            })?;
        let cpd = cpd_from_map(&entry.node, &entry.cpd, inputs)?;
        net.add_override(&entry.node, entry.t, cpd)?;
    }
    Ok(net)
}

fn network_to_file(net: &PrototypeNetwork) -> ModelFile {
    let nodes = net
        .hidden()
        .iter()
        .map(|h| NodeEntry {
            id: h.name.clone(),
            parents: h.parents.iter().map(|&p| net.hidden()[p].name.clone()).collect(),
            persistent: h.persistent,
            temporal: h.temporal,
            cpd: cpd_to_map(&h.cpd),
        })
        .collect();
    let observation_nodes = net
        .observations()
        .iter()
        .map(|o| {
            let mut emission = BTreeMap::new();
            emission.insert("0".to_string(), o.emission.row(false).to_vec());
            emission.insert("1".to_string(), o.emission.row(true).to_vec());
            ObsEntry {
                id: o.name.clone(),
                parent: net.hidden()[o.parent].name.clone(),
                emission,
            }
        })
        .collect();
    let mut nonstationary = Vec::new();
    for h in net.hidden() {
        for (&t, cpd) in &h.overrides {
            nonstationary.push(OverrideEntry {
                node: h.name.clone(),
                t,
                cpd: cpd_to_map(cpd),
            });
        }
    }
    ModelFile {
        nodes,
        observation_nodes,
        nonstationary,
    }
}

/// Load a model file. Syntax problems map to [`ModelError::ParseError`],
/// schema problems to [`ModelError::SchemaViolation`].
pub fn load_model(path: &Path) -> Result<PrototypeNetwork, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(classify_json_error)?;
    build_network(file)
}

/// Parse a model from JSON text. Same error mapping as [`load_model`].
pub fn model_from_json(text: &str) -> Result<PrototypeNetwork, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(classify_json_error)?;
    build_network(file)
}

/// Serialize a model to canonical JSON text.
pub fn model_to_json(net: &PrototypeNetwork) -> String {
    let mut text = serde_json::to_string_pretty(&network_to_file(net))
        .expect("model serialization cannot fail");
    text.push('\n');
    text
}

/// Save a model in canonical form.
pub fn save_model(net: &PrototypeNetwork, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, model_to_json(net))?;
    Ok(())
}

/// Load an evidence file and validate it against `net`.
pub fn load_evidence(path: &Path, net: &PrototypeNetwork) -> Result<EvidenceSet, ModelError> {
    let text = std::fs::read_to_string(path)?;
    evidence_from_json(&text, net)
}

/// Parse evidence from JSON text and validate it against `net`.
pub fn evidence_from_json(text: &str, net: &PrototypeNetwork) -> Result<EvidenceSet, ModelError> {
    let entries: Vec<EvidenceEntry> =
        serde_json::from_str(text).map_err(classify_json_error)?;
    let observations = entries
        .into_iter()
        .map(|e| Observation {
            node: e.node,
            t: e.t,
            value: e.value,
        })
        .collect();
    Ok(EvidenceSet::from_observations(observations, net)?)
}

/// Serialize evidence to canonical JSON text (sorted by node, then slice).
pub fn evidence_to_json(ev: &EvidenceSet) -> String {
    let entries: Vec<EvidenceEntry> = ev
        .observations()
        .iter()
        .map(|o| EvidenceEntry {
            node: o.node.clone(),
            t: o.t,
            value: o.value,
        })
        .collect();
    let mut text =
        serde_json::to_string_pretty(&entries).expect("evidence serialization cannot fail");
    text.push('\n');
    text
}

/// Save evidence in canonical form.
pub fn save_evidence(ev: &EvidenceSet, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, evidence_to_json(ev))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"{
        "nodes": [
            {"id": "a", "parents": [], "persistent": true, "cpd": {"": 0.3}},
            {"id": "b", "parents": ["a"], "persistent": true, "cpd": {"0": 0.1, "1": 0.8}}
        ],
        "observation_nodes": [
            {"id": "o", "parent": "b", "emission": {"0": [0.8, 0.2], "1": [0.3, 0.7]}}
        ],
        "nonstationary": [
            {"node": "b", "t": 3, "cpd": {"0": 0.4, "1": 0.9}}
        ]
    }"#;

    #[test]
    fn round_trip_is_byte_stable() {
        let net = model_from_json(TOY).unwrap();
        let once = model_to_json(&net);
        let twice = model_to_json(&model_from_json(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn loaded_model_matches_source() {
        let net = model_from_json(TOY).unwrap();
        assert_eq!(net.hidden().len(), 2);
        let b = net.hidden_index("b").unwrap();
        assert_eq!(net.hidden()[b].cpd.on_probability(1), 0.8);
        assert_eq!(net.hidden()[b].cpd_at(3).on_probability(1), 0.9);
        assert_eq!(net.observations()[0].emission.probability(true, 1), 0.7);
    }

    #[test]
    fn syntax_error_reports_line() {
        let bad = "{\n  \"nodes\": [\n";
        match model_from_json(bad) {
            Err(ModelError::ParseError { line, .. }) => assert!(line >= 2),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_schema_violation() {
        let bad = r#"{"nodes": [{"id": "a", "persistent": true}]}"#;
        assert!(matches!(
            model_from_json(bad),
            Err(ModelError::SchemaViolation(_))
        ));
    }

    #[test]
    fn wrong_cpd_keys_are_schema_violations() {
        let bad = r#"{
            "nodes": [{"id": "a", "parents": [], "persistent": true, "cpd": {"0": 0.3}}]
        }"#;
        assert!(matches!(
            model_from_json(bad),
            Err(ModelError::SchemaViolation(_))
        ));
    }

    #[test]
    fn evidence_round_trip() {
        let net = model_from_json(TOY).unwrap();
        let ev = evidence_from_json(
            r#"[{"node": "o", "t": 2, "value": 1}, {"node": "a", "t": 1, "value": 0}]"#,
            &net,
        )
        .unwrap();
        assert_eq!(ev.len(), 2);
        let text = evidence_to_json(&ev);
        let again = evidence_from_json(&text, &net).unwrap();
        assert_eq!(evidence_to_json(&again), text);
    }

    #[test]
    fn evidence_unknown_node_is_rejected() {
        let net = model_from_json(TOY).unwrap();
        let err = evidence_from_json(r#"[{"node": "nope", "t": 1, "value": 0}]"#, &net);
        assert!(matches!(err, Err(ModelError::Evidence(_))));
    }
}
