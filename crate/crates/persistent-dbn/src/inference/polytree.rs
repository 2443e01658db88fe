//! Edge messages for nodes with several persistent parents.
//!
//! A child with in-degree `d` couples its parents: its firing rate at slice
//! `t` depends on the joint parent state there. Messages along one edge are
//! computed by enumerating the `(M+1)^(d-1)` changepoint configurations of
//! the *other* parents. Each configuration fixes a per-slice firing profile
//! for the remaining parent–child pair — the other parents switch on as the
//! slices pass their changepoints — so one O(M) chain sweep per
//! configuration finishes the job, for O((M+1)^d) per edge in total.
//!
//! Configurations are weighted by the product of the other parents'
//! incoming distributions; configurations with zero weight are skipped.

use crate::changepoint::ChangepointModel;
use crate::cost::Cost;
use crate::error::InferenceError;
use crate::inference::kernels::{lambda_chain_message, pi_chain_message, SliceProfile};

/// Enumerate joint changepoints of `weights.len()` parents, calling `body`
/// with each configuration and its weight. Zero-weight configurations are
/// skipped.
pub(crate) fn for_each_config<F: FnMut(&[usize], f64)>(
    weights: &[&[f64]],
    domain: usize,
    mut body: F,
) {
    let k = weights.len();
    if k == 0 {
        body(&[], 1.0);
        return;
    }
    let mut state = vec![0usize; k];
    loop {
        let weight: f64 = state.iter().zip(weights).map(|(&l, w)| w[l]).product();
        if weight != 0.0 {
            body(&state, weight);
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            state[i] += 1;
            if state[i] < domain {
                break;
            }
            state[i] = 0;
        }
    }
}

/// Scratch buffers for per-configuration firing profiles.
struct ProfileScratch {
    fire_on: Vec<f64>,
    fire_off: Vec<f64>,
    cum_off: Vec<f64>,
}

impl ProfileScratch {
    fn new(horizon: usize) -> Self {
        Self {
            fire_on: vec![0.0; horizon],
            fire_off: vec![0.0; horizon],
            cum_off: vec![1.0; horizon + 1],
        }
    }

    /// Fill the profile for `child` along the edge from the parent at
    /// `target_pos`, with the other parents fixed at `config` (listed in
    /// `other_pos` order).
    fn fill(
        &mut self,
        model: &ChangepointModel,
        child: usize,
        target_pos: usize,
        other_pos: &[usize],
        config: &[usize],
        cost: &mut Cost,
    ) {
        let horizon = model.horizon();
        let tables = model
            .tables(child)
            .expect("multi-parent messages require a persistent child");
        let d = model.net().hidden()[child].parents.len();
        let target_bit = 1usize << (d - 1 - target_pos);
        for t in 1..=horizon {
            let mut bits = 0usize;
            for (i, &pos) in other_pos.iter().enumerate() {
                if t > config[i] {
                    bits |= 1 << (d - 1 - pos);
                }
            }
            self.fire_on[t - 1] = tables.fire(bits | target_bit)[t - 1];
            self.fire_off[t - 1] = tables.fire(bits)[t - 1];
            self.cum_off[t] = self.cum_off[t - 1] * (1.0 - self.fire_off[t - 1]);
        }
        cost.add(3 * horizon as u64);
    }

    fn view(&self) -> SliceProfile<'_> {
        SliceProfile {
            fire_on: &self.fire_on,
            fire_off: &self.fire_off,
            cum_off: &self.cum_off,
        }
    }
}

fn check_cap(
    model: &ChangepointModel,
    child: usize,
    cap: usize,
) -> Result<(), InferenceError> {
    let d = model.net().hidden()[child].parents.len();
    if d > cap {
        return Err(InferenceError::InDegreeTooLarge {
            node: model.net().hidden()[child].name.clone(),
            degree: d,
            cap,
        });
    }
    Ok(())
}

/// Child-to-parent message for the parent at `target_pos`.
///
/// `lam` is the child's evidence potential over its changepoints and
/// `other_pis[i]` the incoming distribution of the parent at `other_pos[i]`.
/// Works for any in-degree up to `cap`; with a single parent this reduces to
/// one chain sweep on the cached tables.
pub fn polytree_lambda_message(
    model: &ChangepointModel,
    child: usize,
    target_pos: usize,
    lam: &[f64],
    other_pos: &[usize],
    other_pis: &[&[f64]],
    cap: usize,
    cost: &mut Cost,
) -> Result<Vec<f64>, InferenceError> {
    check_cap(model, child, cap)?;
    let horizon = model.horizon();
    debug_assert_eq!(other_pos.len(), other_pis.len());

    if other_pos.is_empty() {
        let tables = model.tables(child).expect("persistent child");
        let profile = SliceProfile {
            fire_on: tables.fire(1),
            fire_off: tables.fire(0),
            cum_off: tables.cum_surv(0),
        };
        return Ok(lambda_chain_message(&profile, lam, cost));
    }

    let mut out = vec![0.0; horizon + 1];
    let mut scratch = ProfileScratch::new(horizon);
    for_each_config(other_pis, horizon + 1, |config, weight| {
        scratch.fill(model, child, target_pos, other_pos, config, cost);
        let msg = lambda_chain_message(&scratch.view(), lam, cost);
        for (o, m) in out.iter_mut().zip(&msg) {
            *o += weight * m;
        }
        cost.add((horizon + 1) as u64);
    });
    Ok(out)
}

/// Prior-side potential of a multi-parent child.
///
/// The chain sweep runs over the parent at `sweep_pos` using its incoming
/// distribution `sweep_pi`; the remaining parents (positions `other_pos`,
/// distributions `other_pis`) are enumerated.
pub fn polytree_pi_message(
    model: &ChangepointModel,
    child: usize,
    sweep_pos: usize,
    sweep_pi: &[f64],
    other_pos: &[usize],
    other_pis: &[&[f64]],
    cap: usize,
    cost: &mut Cost,
) -> Result<Vec<f64>, InferenceError> {
    check_cap(model, child, cap)?;
    let horizon = model.horizon();

    if other_pos.is_empty() {
        let tables = model.tables(child).expect("persistent child");
        let profile = SliceProfile {
            fire_on: tables.fire(1),
            fire_off: tables.fire(0),
            cum_off: tables.cum_surv(0),
        };
        return Ok(pi_chain_message(&profile, sweep_pi, cost));
    }

    let mut out = vec![0.0; horizon + 1];
    let mut scratch = ProfileScratch::new(horizon);
    for_each_config(other_pis, horizon + 1, |config, weight| {
        scratch.fill(model, child, sweep_pos, other_pos, config, cost);
        let msg = pi_chain_message(&scratch.view(), sweep_pi, cost);
        for (o, m) in out.iter_mut().zip(&msg) {
            *o += weight * m;
        }
        cost.add((horizon + 1) as u64);
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::kernels::transition_weight;
    use crate::model::{CpdTable, HiddenSpec, PrototypeNetwork};

    /// Two persistent roots feeding one persistent child.
    fn collider(rows: Vec<f64>) -> ChangepointModel {
        let net = PrototypeNetwork::from_parts(
            vec![
                HiddenSpec {
                    name: "u".into(),
                    parents: vec![],
                    persistent: true,
                    temporal: false,
                    cpd: CpdTable::new(0, vec![0.3]).unwrap(),
                },
                HiddenSpec {
                    name: "v".into(),
                    parents: vec![],
                    persistent: true,
                    temporal: false,
                    cpd: CpdTable::new(0, vec![0.6]).unwrap(),
                },
                HiddenSpec {
                    name: "x".into(),
                    parents: vec!["u".into(), "v".into()],
                    persistent: true,
                    temporal: false,
                    cpd: CpdTable::new(2, rows).unwrap(),
                },
            ],
            vec![],
        )
        .unwrap();
        ChangepointModel::transform(&net, 4).unwrap()
    }

    /// Brute-force conditional `P(j_x | l_u, l_v)` from trajectory products.
    fn joint_weight(model: &ChangepointModel, j: usize, lu: usize, lv: usize) -> f64 {
        let m = model.horizon();
        let x = 2;
        let h = &model.net().hidden()[x];
        let mut w = 1.0;
        for t in 1..=m {
            let bits = ((t > lu) as usize) << 1 | (t > lv) as usize;
            let rate = h.cpd_at(t).on_probability(bits);
            if t <= j {
                w *= 1.0 - rate;
            } else if t == j + 1 {
                w *= rate;
            }
        }
        w
    }

    #[test]
    fn lambda_message_matches_brute_force() {
        let model = collider(vec![0.05, 0.4, 0.5, 0.9]);
        let m = model.horizon();
        let lam: Vec<f64> = (0..=m).map(|j| 0.1 + 0.15 * j as f64).collect();
        let pi_v: Vec<f64> = vec![0.3, 0.05, 0.25, 0.1, 0.3];
        let mut c = Cost::new();
        let msg = polytree_lambda_message(&model, 2, 0, &lam, &[1], &[&pi_v], 6, &mut c).unwrap();

        for lu in 0..=m {
            let mut expect = 0.0;
            for lv in 0..=m {
                for j in 0..=m {
                    expect += pi_v[lv] * joint_weight(&model, j, lu, lv) * lam[j];
                }
            }
            assert!(
                (msg[lu] - expect).abs() < 1e-12,
                "l_u={lu}: {} vs {expect}",
                msg[lu]
            );
        }
    }

    #[test]
    fn pi_message_matches_brute_force() {
        let model = collider(vec![0.02, 0.35, 0.45, 0.85]);
        let m = model.horizon();
        let pi_u: Vec<f64> = vec![0.4, 0.1, 0.2, 0.05, 0.25];
        let pi_v: Vec<f64> = vec![0.15, 0.3, 0.05, 0.4, 0.1];
        let mut c = Cost::new();
        let psi =
            polytree_pi_message(&model, 2, 0, &pi_u, &[1], &[&pi_v], 6, &mut c).unwrap();

        for j in 0..=m {
            let mut expect = 0.0;
            for lu in 0..=m {
                for lv in 0..=m {
                    expect += pi_u[lu] * pi_v[lv] * joint_weight(&model, j, lu, lv);
                }
            }
            assert!((psi[j] - expect).abs() < 1e-12, "j={j}");
        }
        // A distribution in, a distribution out.
        let total: f64 = psi.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamped_second_parent_reduces_to_a_chain() {
        // Put all of v's mass on "never fires": the child then behaves like a
        // single-parent chain over the rows with v's bit clear.
        let model = collider(vec![0.05, 0.4, 0.5, 0.9]);
        let m = model.horizon();
        let mut pi_v = vec![0.0; m + 1];
        pi_v[m] = 1.0;
        let lam: Vec<f64> = (0..=m).map(|j| 1.0 / (1.0 + j as f64)).collect();
        let mut c = Cost::new();
        let msg = polytree_lambda_message(&model, 2, 0, &lam, &[1], &[&pi_v], 6, &mut c).unwrap();

        // Chain with fire_off = row(00) = 0.05, fire_on = row(10) = 0.5.
        let fire_on = vec![0.5; m];
        let fire_off = vec![0.05; m];
        let mut cum = vec![1.0];
        for t in 0..m {
            cum.push(cum[t] * (1.0 - fire_off[t]));
        }
        let profile = SliceProfile {
            fire_on: &fire_on,
            fire_off: &fire_off,
            cum_off: &cum,
        };
        for lu in 0..=m {
            let expect: f64 = (0..=m)
                .map(|j| transition_weight(&profile, j, lu) * lam[j])
                .sum();
            assert!((msg[lu] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn in_degree_cap_is_enforced() {
        let model = collider(vec![0.05, 0.4, 0.5, 0.9]);
        let lam = vec![1.0; 5];
        let pi_v = vec![0.2; 5];
        let mut c = Cost::new();
        assert!(matches!(
            polytree_lambda_message(&model, 2, 0, &lam, &[1], &[&pi_v], 1, &mut c),
            Err(InferenceError::InDegreeTooLarge { .. })
        ));
    }
}
