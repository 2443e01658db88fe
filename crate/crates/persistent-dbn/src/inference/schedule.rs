//! Message-passing schedule over the hidden-node skeleton.
//!
//! The skeleton of a supported network is a forest of polytrees. Per
//! component the schedule picks a root, builds the BFS tree, and lists the
//! edges twice: once leaf-to-root (the collect pass) and once root-to-leaf
//! (the distribute pass). After both passes every node has seen a message
//! from each neighbour, so beliefs come straight off the stored messages.
//!
//! Roots are persistent nodes whenever the component has one: a
//! non-persistent root would need its trajectory posterior represented
//! explicitly, which the engine avoids. The default root is a BFS
//! pseudo-centre (midpoint of a longest shortest path), which keeps the
//! tree shallow; any persistent root gives the same beliefs, and tests
//! exploit that.

use crate::error::InferenceError;
use crate::model::PrototypeNetwork;

/// One directed hop in the schedule. `from` and `to` are hidden-node
/// indices; `to_is_dbn_parent` records the edge's direction in the model
/// (`to` is a same-slice parent of `from`), which determines the message
/// type.
#[derive(Debug, Clone, Copy)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    pub to_is_dbn_parent: bool,
}

/// Schedule for one connected component of the skeleton.
#[derive(Debug, Clone)]
pub struct Component {
    /// Hidden-node indices in the component.
    pub nodes: Vec<usize>,
    pub root: usize,
    /// Leaf-to-root hops, every hop's target closer to the root.
    pub collect: Vec<Hop>,
    /// Root-to-leaf hops, the collect pass reversed hop by hop.
    pub distribute: Vec<Hop>,
}

/// Full schedule: one entry per component.
#[derive(Debug, Clone)]
pub struct MessageSchedule {
    pub components: Vec<Component>,
}

/// Undirected neighbours of `node`: `(neighbour, neighbour_is_dbn_parent)`.
fn neighbours(net: &PrototypeNetwork, node: usize) -> Vec<(usize, bool)> {
    let h = &net.hidden()[node];
    h.parents
        .iter()
        .map(|&p| (p, true))
        .chain(h.children.iter().map(|&c| (c, false)))
        .collect()
}

/// BFS from `start` over the skeleton; returns visit order and per-node
/// distance (usize::MAX off-component).
fn bfs(net: &PrototypeNetwork, start: usize) -> (Vec<usize>, Vec<usize>) {
    let n = net.hidden().len();
    let mut dist = vec![usize::MAX; n];
    let mut order = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    dist[start] = 0;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for (v, _) in neighbours(net, u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (order, dist)
}

/// Pseudo-centre of the component containing `start`: walk to a farthest
/// node, then halfway back along a farthest path from there.
fn pseudo_centre(net: &PrototypeNetwork, start: usize) -> usize {
    let (order, _) = bfs(net, start);
    let a = *order.last().unwrap();
    let (order, dist) = bfs(net, a);
    let b = *order.last().unwrap();
    // Walk b -> a picking any neighbour strictly closer to a.
    let mut path = vec![b];
    let mut cur = b;
    while dist[cur] > 0 {
        let next = neighbours(net, cur)
            .into_iter()
            .map(|(v, _)| v)
            .find(|&v| dist[v] + 1 == dist[cur])
            .expect("BFS distances admit a descending neighbour");
        path.push(next);
        cur = next;
    }
    path[path.len() / 2]
}

/// Nearest persistent node to `from` in its component, if any.
fn nearest_persistent(net: &PrototypeNetwork, from: usize) -> Option<usize> {
    let (order, _) = bfs(net, from);
    order.into_iter().find(|&u| net.hidden()[u].persistent)
}

fn component_schedule(net: &PrototypeNetwork, root: usize) -> Component {
    let (order, _) = bfs(net, root);
    let n = net.hidden().len();
    let mut seen = vec![false; n];
    for &u in &order {
        seen[u] = true;
    }
    // BFS-tree hops child -> parent, recorded in visit order so reversing
    // gives leaf-to-root.
    let mut tree_parent: Vec<Option<(usize, bool)>> = vec![None; n];
    let mut visited = vec![false; n];
    visited[root] = true;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(root);
    let mut down_order = Vec::new();
    while let Some(u) = queue.pop_front() {
        for (v, v_is_parent) in neighbours(net, u) {
            if !visited[v] {
                visited[v] = true;
                tree_parent[v] = Some((u, !v_is_parent));
                down_order.push(v);
                queue.push_back(v);
            }
        }
    }
    let collect: Vec<Hop> = down_order
        .iter()
        .rev()
        .map(|&v| {
            let (u, u_is_parent) = tree_parent[v].unwrap();
            Hop {
                from: v,
                to: u,
                to_is_dbn_parent: u_is_parent,
            }
        })
        .collect();
    let distribute: Vec<Hop> = collect
        .iter()
        .rev()
        .map(|h| Hop {
            from: h.to,
            to: h.from,
            to_is_dbn_parent: !h.to_is_dbn_parent,
        })
        .collect();
    Component {
        nodes: order,
        root,
        collect,
        distribute,
    }
}

/// Build the schedule. `root_override` pins the root of the component
/// containing the named node; other components keep their default roots.
pub fn build_schedule(
    net: &PrototypeNetwork,
    root_override: Option<usize>,
) -> Result<MessageSchedule, InferenceError> {
    if let Some(r) = root_override {
        let node = &net.hidden()[r];
        if !node.persistent && !neighbours(net, r).is_empty() {
            return Err(InferenceError::UnsupportedStructure(format!(
                "requested root '{}' is non-persistent; pick a persistent node",
                node.name
            )));
        }
    }
    let n = net.hidden().len();
    let mut assigned = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if assigned[start] {
            continue;
        }
        let centre = pseudo_centre(net, start);
        let mut root = if net.hidden()[centre].persistent {
            centre
        } else {
            // Isolated non-persistent nodes are their own component; any
            // attached one has a persistent neighbour by validation.
            nearest_persistent(net, centre).unwrap_or(centre)
        };
        if let Some(r) = root_override {
            let (_, dist) = bfs(net, start);
            if dist[r] != usize::MAX {
                root = r;
            }
        }
        let comp = component_schedule(net, root);
        for &u in &comp.nodes {
            assigned[u] = true;
        }
        components.push(comp);
    }
    Ok(MessageSchedule { components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CpdTable, HiddenSpec, PrototypeNetwork};

    fn chain(names: &[&str]) -> PrototypeNetwork {
        let specs = names
            .iter()
            .enumerate()
            .map(|(i, name)| HiddenSpec {
                name: name.to_string(),
                parents: if i == 0 {
                    vec![]
                } else {
                    vec![names[i - 1].to_string()]
                },
                persistent: true,
                temporal: false,
                cpd: if i == 0 {
                    CpdTable::new(0, vec![0.4]).unwrap()
                } else {
                    CpdTable::new(1, vec![0.1, 0.8]).unwrap()
                },
            })
            .collect();
        PrototypeNetwork::from_parts(specs, vec![]).unwrap()
    }

    #[test]
    fn chain_schedule_covers_every_edge_both_ways() {
        let net = chain(&["a", "b", "c", "d", "e"]);
        let sched = build_schedule(&net, None).unwrap();
        assert_eq!(sched.components.len(), 1);
        let comp = &sched.components[0];
        assert_eq!(comp.collect.len(), 4);
        assert_eq!(comp.distribute.len(), 4);
        // The centre of a path is its midpoint.
        assert_eq!(comp.root, 2);
        // Collect targets move toward the root; the last hop lands on it.
        assert_eq!(comp.collect.last().unwrap().to, comp.root);
        // Distribute is the exact reversal.
        for (c, d) in comp.collect.iter().rev().zip(&comp.distribute) {
            assert_eq!(c.from, d.to);
            assert_eq!(c.to, d.from);
            assert_eq!(c.to_is_dbn_parent, !d.to_is_dbn_parent);
        }
    }

    #[test]
    fn every_sender_has_heard_from_its_other_neighbours() {
        let net = chain(&["a", "b", "c", "d", "e", "f", "g"]);
        let sched = build_schedule(&net, None).unwrap();
        let comp = &sched.components[0];
        let degree =
            |u: usize| net.hidden()[u].parents.len() + net.hidden()[u].children.len();
        let mut received = vec![0usize; 7];
        for hop in &comp.collect {
            assert_eq!(
                received[hop.from],
                degree(hop.from) - 1,
                "hop {}->{} fired before its inputs arrived",
                hop.from,
                hop.to
            );
            received[hop.to] += 1;
        }
        // After collect the root has heard from every neighbour; distribute
        // then completes the remaining direction of each edge.
        assert_eq!(received[comp.root], degree(comp.root));
        for hop in &comp.distribute {
            received[hop.to] += 1;
        }
        for u in 0..7 {
            assert_eq!(received[u], degree(u));
        }
    }

    #[test]
    fn root_override_is_respected() {
        let net = chain(&["a", "b", "c"]);
        let sched = build_schedule(&net, Some(0)).unwrap();
        assert_eq!(sched.components[0].root, 0);
    }

    #[test]
    fn two_components_get_two_schedules() {
        let specs = vec![
            HiddenSpec {
                name: "a".into(),
                parents: vec![],
                persistent: true,
                temporal: false,
                cpd: CpdTable::new(0, vec![0.4]).unwrap(),
            },
            HiddenSpec {
                name: "b".into(),
                parents: vec![],
                persistent: true,
                temporal: false,
                cpd: CpdTable::new(0, vec![0.2]).unwrap(),
            },
        ];
        let net = PrototypeNetwork::from_parts(specs, vec![]).unwrap();
        let sched = build_schedule(&net, None).unwrap();
        assert_eq!(sched.components.len(), 2);
        assert!(sched.components.iter().all(|c| c.collect.is_empty()));
    }

    #[test]
    fn non_persistent_root_request_is_rejected() {
        let specs = vec![
            HiddenSpec {
                name: "x".into(),
                parents: vec![],
                persistent: false,
                temporal: false,
                cpd: CpdTable::new(0, vec![0.4]).unwrap(),
            },
            HiddenSpec {
                name: "y".into(),
                parents: vec!["x".into()],
                persistent: true,
                temporal: false,
                cpd: CpdTable::new(1, vec![0.1, 0.8]).unwrap(),
            },
        ];
        let net = PrototypeNetwork::from_parts(specs, vec![]).unwrap();
        assert!(build_schedule(&net, Some(0)).is_err());
        // The default schedule roots at the persistent node instead.
        let sched = build_schedule(&net, None).unwrap();
        assert_eq!(sched.components[0].root, 1);
    }
}
