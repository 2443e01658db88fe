//! Random model generation and forward sampling for benchmarks.
//!
//! Models come in two families: full binary trees (hidden node `i`'s parent
//! is `h(i-1)/2`) and random polytrees grown by repeatedly merging
//! components through a fresh multi-parent node, which makes most non-root
//! nodes two-parent colliders. Every probability parameter is drawn
//! uniformly from `[0, 1)`, so seeded generation is bit-reproducible.
//!
//! [`forward_sample`] draws a full trajectory of the temporal model and
//! turns part of it into evidence: either every observation leaf at every
//! slice, or a random fraction of all node-slice pairs. Because evidence
//! values are read off one sampled trajectory, they are always mutually
//! consistent and have non-zero probability under the model.

use rand::Rng;

use crate::error::SynthError;
use crate::evidence::{EvidenceSet, Observation};
use crate::model::{CpdTable, EmissionTable, HiddenSpec, ObservationSpec, PrototypeNetwork};

/// Which structure [`gen_random_prototype`] builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Full binary tree; hidden leaves receive one observation child each.
    FullBinaryTree,
    /// Random polytree with bounded in-degree; hidden nodes without hidden
    /// children receive one observation child each.
    RandomPolytree { max_in_degree: usize },
}

/// What [`forward_sample`] exposes as evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvidenceMode {
    /// Every observation leaf at every slice (accuracy experiments).
    Observables,
    /// A uniform random subset of all node-slice pairs, hidden and observed
    /// alike, of the given size fraction (speed experiments).
    Fraction(f64),
}

/// A sampled trajectory plus the evidence extracted from it.
#[derive(Debug, Clone)]
pub struct SampleResult {
    /// `hidden[k][t - 1]`: state of hidden node `k` at slice `t`.
    pub hidden: Vec<Vec<u8>>,
    /// `leaves[o][t - 1]`: value of observation leaf `o` at slice `t`.
    pub leaves: Vec<Vec<u32>>,
    pub evidence: EvidenceSet,
}

/// Generate a random prototype with `n` hidden persistent nodes.
///
/// Hidden nodes are named `h0..` in index order, observation leaves `o{i}`
/// after their parent `h{i}`. All conditional probabilities are drawn
/// uniformly from `[0, 1)`; observation leaves are binary.
pub fn gen_random_prototype(
    n: usize,
    kind: GeneratorKind,
    rng: &mut impl Rng,
) -> Result<PrototypeNetwork, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidSpec(
            "a prototype needs at least one hidden node".into(),
        ));
    }
    let parents: Vec<Vec<usize>> = match kind {
        GeneratorKind::FullBinaryTree => (0..n)
            .map(|i| if i == 0 { vec![] } else { vec![(i - 1) / 2] })
            .collect(),
        GeneratorKind::RandomPolytree { max_in_degree } => {
            if max_in_degree == 0 {
                return Err(SynthError::InvalidSpec(
                    "polytree generation needs max_in_degree >= 1".into(),
                ));
            }
            random_polytree_parents(n, max_in_degree, rng)
        }
    };

    let mut has_hidden_child = vec![false; n];
    for list in &parents {
        for &p in list {
            has_hidden_child[p] = true;
        }
    }

    let hidden: Vec<HiddenSpec> = (0..n)
        .map(|i| {
            let rows = (0..1usize << parents[i].len())
                .map(|_| rng.gen::<f64>())
                .collect();
            HiddenSpec {
                name: format!("h{i}"),
                parents: parents[i].iter().map(|&p| format!("h{p}")).collect(),
                persistent: true,
                temporal: false,
                cpd: CpdTable::new(parents[i].len(), rows).expect("row count matches"),
            }
        })
        .collect();

    let observations: Vec<ObservationSpec> = (0..n)
        .filter(|&i| !has_hidden_child[i])
        .map(|i| {
            let p_off = rng.gen::<f64>();
            let p_on = rng.gen::<f64>();
            ObservationSpec {
                name: format!("o{i}"),
                parent: format!("h{i}"),
                emission: EmissionTable::new(vec![1.0 - p_off, p_off], vec![1.0 - p_on, p_on])
                    .expect("binary emission rows"),
            }
        })
        .collect();

    PrototypeNetwork::from_parts(hidden, observations)
        .map_err(|e| SynthError::InvalidSpec(format!("generated network failed validation: {e}")))
}

/// Grow a random polytree by merging components: each step picks a child
/// and gives it parents from two (when possible) other components, so the
/// skeleton stays acyclic while most non-root nodes become two-parent
/// colliders.
fn random_polytree_parents(n: usize, max_in_degree: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut comp: Vec<usize> = (0..n).collect();
    let find = |comp: &Vec<usize>, mut x: usize| -> usize {
        while comp[x] != x {
            x = comp[x];
        }
        x
    };

    loop {
        let mut roots: Vec<usize> = (0..n).filter(|&i| find(&comp, i) == i).collect();
        if roots.len() == 1 {
            break;
        }
        // Any node below the in-degree cap can accept new parents.
        let candidates: Vec<usize> = (0..n)
            .filter(|&i| parents[i].len() < max_in_degree)
            .collect();
        let child = candidates[rng.gen_range(0..candidates.len())];
        let child_root = find(&comp, child);
        roots.retain(|&r| r != child_root);
        let take = (max_in_degree - parents[child].len()).min(roots.len()).min(2);
        for _ in 0..take {
            let r = roots.remove(rng.gen_range(0..roots.len()));
            // Pick the parent uniformly inside the chosen component.
            let members: Vec<usize> = (0..n).filter(|&i| find(&comp, i) == r).collect();
            let parent = members[rng.gen_range(0..members.len())];
            parents[child].push(parent);
            comp[r] = child_root;
        }
    }
    for list in parents.iter_mut() {
        list.sort_unstable();
    }
    parents
}

/// Sample a full trajectory and extract evidence per `mode`.
///
/// Hidden states are drawn slice by slice in topological order, then leaf
/// values slice by slice; the draw order is fixed so equal seeds give equal
/// samples.
pub fn forward_sample(
    net: &PrototypeNetwork,
    horizon: usize,
    mode: EvidenceMode,
    rng: &mut impl Rng,
) -> Result<SampleResult, SynthError> {
    let n = net.hidden().len();
    let order = net
        .topological_order()
        .expect("validated networks are acyclic");

    let mut hidden = vec![vec![0u8; horizon]; n];
    for t in 1..=horizon {
        for &k in &order {
            let node = &net.hidden()[k];
            let prev_on = t > 1 && hidden[k][t - 2] == 1;
            let mut bits = 0usize;
            for (pos, &p) in node.parents.iter().enumerate() {
                if hidden[p][t - 1] == 1 {
                    bits |= 1 << (node.parents.len() - 1 - pos);
                }
            }
            let p_on = node.on_probability(t, prev_on, bits);
            hidden[k][t - 1] = (rng.gen::<f64>() < p_on) as u8;
        }
    }

    let mut leaves = vec![vec![0u32; horizon]; net.observations().len()];
    for (o, obs) in net.observations().iter().enumerate() {
        for t in 1..=horizon {
            let parent_on = hidden[obs.parent][t - 1] == 1;
            let row = obs.emission.row(parent_on);
            let mut u = rng.gen::<f64>();
            let mut value = row.len() as u32 - 1;
            for (v, &p) in row.iter().enumerate() {
                if u < p {
                    value = v as u32;
                    break;
                }
                u -= p;
            }
            leaves[o][t - 1] = value;
        }
    }

    let observations = match mode {
        EvidenceMode::Observables => net
            .observations()
            .iter()
            .enumerate()
            .flat_map(|(o, obs)| {
                let leaves = &leaves;
                (1..=horizon).map(move |t| Observation {
                    node: obs.name.clone(),
                    t,
                    value: leaves[o][t - 1],
                })
            })
            .collect(),
        EvidenceMode::Fraction(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(SynthError::InvalidSpec(format!(
                    "evidence fraction must lie in [0, 1], got {f}"
                )));
            }
            let total_pairs = (n + net.observations().len()) * horizon;
            let count = (f * total_pairs as f64).round() as usize;
            let mut picks: Vec<usize> =
                rand::seq::index::sample(rng, total_pairs, count).into_vec();
            picks.sort_unstable();
            picks
                .into_iter()
                .map(|pair| {
                    let idx = pair / horizon;
                    let t = pair % horizon + 1;
                    if idx < n {
                        Observation {
                            node: net.hidden()[idx].name.clone(),
                            t,
                            value: hidden[idx][t - 1] as u32,
                        }
                    } else {
                        let o = idx - n;
                        Observation {
                            node: net.observations()[o].name.clone(),
                            t,
                            value: leaves[o][t - 1],
                        }
                    }
                })
                .collect()
        }
    };
    let evidence = EvidenceSet::from_observations(observations, net)
        .expect("evidence read from one trajectory is consistent");

    Ok(SampleResult {
        hidden,
        leaves,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StructureClass;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn smallest_tree_has_root_two_children_and_leaves() {
        let net = gen_random_prototype(3, GeneratorKind::FullBinaryTree, &mut rng(7)).unwrap();
        assert_eq!(net.hidden().len(), 3);
        assert_eq!(net.hidden()[1].parents, vec![0]);
        assert_eq!(net.hidden()[2].parents, vec![0]);
        // Both hidden leaves carry an observation; the root does not.
        assert_eq!(net.observations().len(), 2);
        let parents: Vec<usize> = net.observations().iter().map(|o| o.parent).collect();
        assert_eq!(parents, vec![1, 2]);
        let report = net.validate().unwrap();
        assert_eq!(report.class, StructureClass::Tree);
    }

    #[test]
    fn seven_node_tree_attaches_leaves_to_the_bottom_level() {
        let net = gen_random_prototype(7, GeneratorKind::FullBinaryTree, &mut rng(1)).unwrap();
        let parents: Vec<usize> = net.observations().iter().map(|o| o.parent).collect();
        assert_eq!(parents, vec![3, 4, 5, 6]);
    }

    #[test]
    fn same_seed_gives_the_same_model() {
        for kind in [
            GeneratorKind::FullBinaryTree,
            GeneratorKind::RandomPolytree { max_in_degree: 2 },
        ] {
            let a = gen_random_prototype(10, kind, &mut rng(42)).unwrap();
            let b = gen_random_prototype(10, kind, &mut rng(42)).unwrap();
            assert_eq!(
                crate::model::model_to_json(&a),
                crate::model::model_to_json(&b)
            );
        }
    }

    #[test]
    fn random_polytrees_validate_as_polytrees_with_bounded_in_degree() {
        for seed in 0..20 {
            let net =
                gen_random_prototype(10, GeneratorKind::RandomPolytree { max_in_degree: 2 },
                    &mut rng(seed))
                .unwrap();
            let report = net.validate().unwrap();
            assert_eq!(report.components, 1, "seed {seed} left the graph split");
            assert!(report.max_in_degree <= 2);
            assert!(
                report.class == StructureClass::Polytree,
                "seed {seed} produced {:?}",
                report.class
            );
            assert!(report.observation_count >= 1);
        }
    }

    #[test]
    fn most_polytree_non_roots_have_two_parents() {
        let mut colliders = 0usize;
        let mut single = 0usize;
        for seed in 0..20 {
            let net = gen_random_prototype(
                15,
                GeneratorKind::RandomPolytree { max_in_degree: 2 },
                &mut rng(seed),
            )
            .unwrap();
            for h in net.hidden() {
                match h.parents.len() {
                    2 => colliders += 1,
                    1 => single += 1,
                    _ => {}
                }
            }
        }
        assert!(colliders > single, "{colliders} colliders vs {single} chains");
    }

    #[test]
    fn degenerate_fire_probabilities_pin_the_trajectory() {
        let hidden = vec![HiddenSpec {
            name: "h0".into(),
            parents: vec![],
            persistent: true,
            temporal: false,
            cpd: CpdTable::new(0, vec![1.0]).unwrap(),
        }];
        let obs = vec![ObservationSpec {
            name: "o0".into(),
            parent: "h0".into(),
            emission: EmissionTable::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap(),
        }];
        let net = PrototypeNetwork::from_parts(hidden, obs).unwrap();
        let s = forward_sample(&net, 4, EvidenceMode::Observables, &mut rng(3)).unwrap();
        assert_eq!(s.hidden[0], vec![1, 1, 1, 1]);
        assert_eq!(s.leaves[0], vec![1, 1, 1, 1]);

        let hidden = vec![HiddenSpec {
            name: "h0".into(),
            parents: vec![],
            persistent: true,
            temporal: false,
            cpd: CpdTable::new(0, vec![0.0]).unwrap(),
        }];
        let obs = vec![ObservationSpec {
            name: "o0".into(),
            parent: "h0".into(),
            emission: EmissionTable::new(vec![0.25, 0.75], vec![1.0, 0.0]).unwrap(),
        }];
        let net = PrototypeNetwork::from_parts(hidden, obs).unwrap();
        let s = forward_sample(&net, 64, EvidenceMode::Observables, &mut rng(3)).unwrap();
        assert_eq!(s.hidden[0], vec![0; 64]);
        // Off-row emissions: both symbols appear over a long run.
        assert!(s.leaves[0].iter().any(|&v| v == 0));
        assert!(s.leaves[0].iter().any(|&v| v == 1));
    }

    #[test]
    fn sampled_trajectories_respect_persistence() {
        let net = gen_random_prototype(7, GeneratorKind::FullBinaryTree, &mut rng(9)).unwrap();
        let s = forward_sample(&net, 12, EvidenceMode::Observables, &mut rng(10)).unwrap();
        for traj in &s.hidden {
            for w in traj.windows(2) {
                assert!(w[1] >= w[0], "persistent node switched off: {traj:?}");
            }
        }
    }

    #[test]
    fn fraction_mode_draws_the_requested_number_of_distinct_pairs() {
        let net = gen_random_prototype(7, GeneratorKind::FullBinaryTree, &mut rng(5)).unwrap();
        let m = 20;
        let s = forward_sample(&net, m, EvidenceMode::Fraction(0.1), &mut rng(6)).unwrap();
        let total_pairs = (net.hidden().len() + net.observations().len()) * m;
        let want = (0.1 * total_pairs as f64).round() as usize;
        assert_eq!(s.evidence.observations().len(), want);
        let mut seen: Vec<(&str, usize)> = s
            .evidence
            .observations()
            .iter()
            .map(|o| (o.node.as_str(), o.t))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), want, "pairs must be distinct");
    }

    #[test]
    fn observables_mode_exposes_every_leaf_slice() {
        let net = gen_random_prototype(3, GeneratorKind::FullBinaryTree, &mut rng(8)).unwrap();
        let s = forward_sample(&net, 5, EvidenceMode::Observables, &mut rng(8)).unwrap();
        assert_eq!(s.evidence.observations().len(), 2 * 5);
    }

    #[test]
    fn bad_requests_are_rejected() {
        assert!(matches!(
            gen_random_prototype(0, GeneratorKind::FullBinaryTree, &mut rng(0)),
            Err(SynthError::InvalidSpec(_))
        ));
        assert!(matches!(
            gen_random_prototype(
                3,
                GeneratorKind::RandomPolytree { max_in_degree: 0 },
                &mut rng(0)
            ),
            Err(SynthError::InvalidSpec(_))
        ));
        let net = gen_random_prototype(3, GeneratorKind::FullBinaryTree, &mut rng(1)).unwrap();
        assert!(matches!(
            forward_sample(&net, 3, EvidenceMode::Fraction(1.5), &mut rng(1)),
            Err(SynthError::InvalidSpec(_))
        ));
    }
}
