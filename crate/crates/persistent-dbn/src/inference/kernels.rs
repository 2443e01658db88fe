//! O(M) message recurrences for a single persistent parent–child edge.
//!
//! Fix an edge from parent `U` to child `X`, both persistent, over `M`
//! slices. Conditioned on the two changepoints `(L, j)` the child's
//! trajectory weight factors into staying-off probabilities for slices
//! `1..=j` — using the parent-off firing rate while `t <= L` and the
//! parent-on rate once `t > L` — and one firing probability at slice `j + 1`
//! (none when `j = M`). Every quantity passed along the edge is therefore a
//! sum over one of three trajectory classes:
//!
//! * the child fired while the parent was still off (`j < L`),
//! * the child fired at or after the parent's changepoint (`L <= j < M`),
//! * the child never fired (`j = M`).
//!
//! Each class admits a prefix- or suffix-sweep recurrence that needs no
//! division, so degenerate probabilities (rates of exactly zero or one) are
//! handled without special cases. Every recurrence has a brute-force
//! companion (`*_direct`) that evaluates the defining sums term by term;
//! the test suite holds the two routes to a relative agreement of 1e-10.

use crate::cost::Cost;

/// Per-slice firing rates of a child along one edge, plus the cumulative
/// staying-off products under the parent-off rate.
///
/// `fire_on[t-1]` / `fire_off[t-1]` are the probabilities that the child
/// turns on at slice `t` given that the parent is on / off at `t` (any other
/// parents being fixed by the caller). `cum_off[i]` is the probability of
/// staying off through slice `i` under the off rates, with `cum_off[0] = 1`.
#[derive(Debug, Clone, Copy)]
pub struct SliceProfile<'a> {
    pub fire_on: &'a [f64],
    pub fire_off: &'a [f64],
    pub cum_off: &'a [f64],
}

impl<'a> SliceProfile<'a> {
    pub fn horizon(&self) -> usize {
        self.fire_on.len()
    }
}

/// The three trajectory-class components of an edge message.
///
/// For child-to-parent messages the vectors are indexed by the parent's
/// changepoint; for parent-to-child messages by the child's.
#[derive(Debug, Clone)]
pub struct Summands {
    pub fired_while_parent_off: Vec<f64>,
    pub fired_after_parent_on: Vec<f64>,
    pub never_fired: Vec<f64>,
}

impl Summands {
    /// Entrywise total of the three components.
    pub fn total(&self) -> Vec<f64> {
        self.fired_while_parent_off
            .iter()
            .zip(&self.fired_after_parent_on)
            .zip(&self.never_fired)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

/// `P(child changepoint = j | parent changepoint = l)`, evaluated from the
/// trajectory definition with per-slice products. O(M) per pair; this is the
/// reference the sweeps are tested against.
pub fn transition_weight(profile: &SliceProfile, j: usize, l: usize) -> f64 {
    let m = profile.horizon();
    debug_assert!(j <= m && l <= m);
    let mut w = 1.0;
    for t in 1..=j {
        let rate = if t <= l {
            profile.fire_off[t - 1]
        } else {
            profile.fire_on[t - 1]
        };
        w *= 1.0 - rate;
    }
    if j < m {
        let t = j + 1;
        w *= if t <= l {
            profile.fire_off[t - 1]
        } else {
            profile.fire_on[t - 1]
        };
    }
    w
}

/// Child-to-parent summands by definition: entry `l` of each component sums
/// `transition_weight(j, l) * lam[j]` over that component's `j` range.
pub fn lambda_summands_direct(profile: &SliceProfile, lam: &[f64], cost: &mut Cost) -> Summands {
    let m = profile.horizon();
    debug_assert_eq!(lam.len(), m + 1);
    let mut off = vec![0.0; m + 1];
    let mut on = vec![0.0; m + 1];
    let mut never = vec![0.0; m + 1];
    for l in 0..=m {
        for j in 0..l {
            off[l] += transition_weight(profile, j, l) * lam[j];
        }
        for j in l..m {
            on[l] += transition_weight(profile, j, l) * lam[j];
        }
        never[l] = transition_weight(profile, m, l) * lam[m];
    }
    cost.add(((m + 1) * (m + 2)) as u64);
    Summands {
        fired_while_parent_off: off,
        fired_after_parent_on: on,
        never_fired: never,
    }
}

/// Child-to-parent summands in O(M) via division-free sweeps.
///
/// * fired-while-off: prefix sum of `cum_off[j] * fire_off[j] * lam[j]`.
/// * fired-after-on: `cum_off[l] * tail[l]` with the suffix recurrence
///   `tail[l] = fire_on[l] * lam[l] + (1 - fire_on[l]) * tail[l + 1]`,
///   `tail[m] = 0`.
/// * never-fired: `cum_off[l] * suffix_on[l] * lam[m]` with `suffix_on` the
///   running product of `1 - fire_on` from the back.
pub fn lambda_summands(profile: &SliceProfile, lam: &[f64], cost: &mut Cost) -> Summands {
    let m = profile.horizon();
    debug_assert_eq!(lam.len(), m + 1);

    let mut off = vec![0.0; m + 1];
    for l in 0..m {
        off[l + 1] = off[l] + profile.cum_off[l] * profile.fire_off[l] * lam[l];
    }

    let mut tail = vec![0.0; m + 1];
    for l in (0..m).rev() {
        tail[l] = profile.fire_on[l] * lam[l] + (1.0 - profile.fire_on[l]) * tail[l + 1];
    }
    let mut on = vec![0.0; m + 1];
    for l in 0..=m {
        on[l] = profile.cum_off[l] * tail[l];
    }

    let mut never = vec![0.0; m + 1];
    let mut suffix_on = 1.0;
    never[m] = profile.cum_off[m] * lam[m];
    for l in (0..m).rev() {
        suffix_on *= 1.0 - profile.fire_on[l];
        never[l] = profile.cum_off[l] * suffix_on * lam[m];
    }

    cost.add(12 * m as u64 + 4);
    Summands {
        fired_while_parent_off: off,
        fired_after_parent_on: on,
        never_fired: never,
    }
}

/// Child-to-parent message: for each parent changepoint `l`, the probability
/// of the child-side evidence `lam` given `l`. Sum of the three summands.
pub fn lambda_chain_message(profile: &SliceProfile, lam: &[f64], cost: &mut Cost) -> Vec<f64> {
    lambda_summands(profile, lam, cost).total()
}

/// Parent-to-child summands by definition: entry `j` of each component sums
/// `transition_weight(j, l) * pi[l]` over that component's `l` range.
pub fn pi_summands_direct(profile: &SliceProfile, pi: &[f64], cost: &mut Cost) -> Summands {
    let m = profile.horizon();
    debug_assert_eq!(pi.len(), m + 1);
    let mut off = vec![0.0; m + 1];
    let mut on = vec![0.0; m + 1];
    let mut never = vec![0.0; m + 1];
    for j in 0..m {
        for l in (j + 1)..=m {
            off[j] += transition_weight(profile, j, l) * pi[l];
        }
        for l in 0..=j {
            on[j] += transition_weight(profile, j, l) * pi[l];
        }
    }
    for l in 0..=m {
        never[m] += transition_weight(profile, m, l) * pi[l];
    }
    cost.add(((m + 1) * (m + 2)) as u64);
    Summands {
        fired_while_parent_off: off,
        fired_after_parent_on: on,
        never_fired: never,
    }
}

/// Parent-to-child summands in O(M) via division-free sweeps.
///
/// * fired-while-off: when `j < l` the weight `cum_off[j] * fire_off[j]`
///   does not depend on `l`, so entry `j` is that weight times the suffix
///   sum of `pi` past `j`.
/// * fired-after-on and never-fired share the forward recurrence
///   `head[j] = (1 - fire_on[j-1]) * head[j-1] + cum_off[j] * pi[j]`,
///   `head[0] = pi[0]`: entry `j < m` of fired-after-on is
///   `fire_on[j] * head[j]`, and the never-fired mass at `m` is `head[m]`.
pub fn pi_summands(profile: &SliceProfile, pi: &[f64], cost: &mut Cost) -> Summands {
    let m = profile.horizon();
    debug_assert_eq!(pi.len(), m + 1);

    let mut off = vec![0.0; m + 1];
    let mut suffix = 0.0;
    for j in (0..m).rev() {
        suffix += pi[j + 1];
        off[j] = profile.cum_off[j] * profile.fire_off[j] * suffix;
    }

    let mut head = vec![0.0; m + 1];
    head[0] = pi[0];
    for j in 1..=m {
        head[j] = (1.0 - profile.fire_on[j - 1]) * head[j - 1] + profile.cum_off[j] * pi[j];
    }
    let mut on = vec![0.0; m + 1];
    for j in 0..m {
        on[j] = profile.fire_on[j] * head[j];
    }
    let mut never = vec![0.0; m + 1];
    never[m] = head[m];

    cost.add(9 * m as u64 + 2);
    Summands {
        fired_while_parent_off: off,
        fired_after_parent_on: on,
        never_fired: never,
    }
}

/// Parent-to-child message: the child's changepoint distribution induced by
/// the parent-side distribution `pi`. Sum of the three summands.
pub fn pi_chain_message(profile: &SliceProfile, pi: &[f64], cost: &mut Cost) -> Vec<f64> {
    pi_summands(profile, pi, cost).total()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
        assert_eq!(a.len(), b.len());
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let scale = x.abs().max(y.abs()).max(1e-30);
            assert!(
                (x - y).abs() <= tol * scale,
                "{what}[{i}]: {x} vs {y}"
            );
        }
    }

    struct OwnedProfile {
        fire_on: Vec<f64>,
        fire_off: Vec<f64>,
        cum_off: Vec<f64>,
    }

    impl OwnedProfile {
        fn new(fire_on: Vec<f64>, fire_off: Vec<f64>) -> Self {
            let mut cum_off = vec![1.0];
            for &p in &fire_off {
                cum_off.push(cum_off.last().unwrap() * (1.0 - p));
            }
            Self {
                fire_on,
                fire_off,
                cum_off,
            }
        }

        fn stationary(on: f64, off: f64, m: usize) -> Self {
            Self::new(vec![on; m], vec![off; m])
        }

        fn view(&self) -> SliceProfile<'_> {
            SliceProfile {
                fire_on: &self.fire_on,
                fire_off: &self.fire_off,
                cum_off: &self.cum_off,
            }
        }
    }

    fn pseudo_random(seed: u64, n: usize) -> Vec<f64> {
        // Small deterministic generator; avoids pulling rand into unit tests.
        let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    fn check_both_routes(profile: &SliceProfile, weights: &[f64]) {
        let mut c = Cost::new();
        let fast = lambda_summands(profile, weights, &mut c);
        let slow = lambda_summands_direct(profile, weights, &mut c);
        assert_close(
            &fast.fired_while_parent_off,
            &slow.fired_while_parent_off,
            1e-10,
            "lambda fired_while_parent_off",
        );
        assert_close(
            &fast.fired_after_parent_on,
            &slow.fired_after_parent_on,
            1e-10,
            "lambda fired_after_parent_on",
        );
        assert_close(&fast.never_fired, &slow.never_fired, 1e-10, "lambda never_fired");

        let fast = pi_summands(profile, weights, &mut c);
        let slow = pi_summands_direct(profile, weights, &mut c);
        assert_close(
            &fast.fired_while_parent_off,
            &slow.fired_while_parent_off,
            1e-10,
            "pi fired_while_parent_off",
        );
        assert_close(
            &fast.fired_after_parent_on,
            &slow.fired_after_parent_on,
            1e-10,
            "pi fired_after_parent_on",
        );
        assert_close(&fast.never_fired, &slow.never_fired, 1e-10, "pi never_fired");
    }

    #[test]
    fn sweeps_match_direct_sums_on_random_profiles() {
        for m in [1usize, 2, 3, 5, 8, 12] {
            for seed in 0..8u64 {
                let r = pseudo_random(seed * 1000 + m as u64, 3 * m + 2);
                let profile = OwnedProfile::new(r[..m].to_vec(), r[m..2 * m].to_vec());
                let weights = r[2 * m..3 * m + 1].to_vec();
                check_both_routes(&profile.view(), &weights);
            }
        }
    }

    #[test]
    fn sweeps_match_direct_sums_on_degenerate_rates() {
        // Rates of exactly zero and one exercise the absorbing corners.
        for (on, off) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.0, 0.0), (0.5, 1.0)] {
            for m in [1usize, 3, 6] {
                let profile = OwnedProfile::stationary(on, off, m);
                let weights = pseudo_random(7 + m as u64, m + 1);
                check_both_routes(&profile.view(), &weights);
            }
        }
    }

    #[test]
    fn transition_rows_are_distributions() {
        // With all-ones child weights the lambda message must be identically
        // one: each row of transition weights sums to one.
        let profile = OwnedProfile::new(
            vec![0.3, 0.9, 0.1, 0.5],
            vec![0.05, 0.6, 0.2, 0.8],
        );
        let mut c = Cost::new();
        let msg = lambda_chain_message(&profile.view(), &[1.0; 5], &mut c);
        for (l, v) in msg.iter().enumerate() {
            assert!((v - 1.0).abs() < 1e-12, "row {l} sums to {v}");
        }
    }

    #[test]
    fn deterministic_child_copies_the_parent() {
        // fire_on = 1, fire_off = 0: the child turns on exactly when the
        // parent does, so both messages are the identity map.
        let m = 5;
        let profile = OwnedProfile::stationary(1.0, 0.0, m);
        let weights = pseudo_random(3, m + 1);
        let mut c = Cost::new();
        let lam = lambda_chain_message(&profile.view(), &weights, &mut c);
        assert_close(&lam, &weights, 1e-12, "lambda identity");
        let psi = pi_chain_message(&profile.view(), &weights, &mut c);
        assert_close(&psi, &weights, 1e-12, "pi identity");
    }

    #[test]
    fn parent_independent_rates_ignore_the_parent() {
        // Equal on/off rates decouple the child from the parent: the lambda
        // message is constant in l, and the pi message does not depend on the
        // parent distribution.
        let m = 6;
        let profile = OwnedProfile::stationary(0.35, 0.35, m);
        let weights = pseudo_random(11, m + 1);
        let mut c = Cost::new();
        let lam = lambda_chain_message(&profile.view(), &weights, &mut c);
        for v in &lam {
            assert!((v - lam[0]).abs() < 1e-12);
        }
        let mut point = vec![0.0; m + 1];
        point[2] = 1.0;
        let psi_point = pi_chain_message(&profile.view(), &point, &mut c);
        let uniform = vec![1.0 / (m as f64 + 1.0); m + 1];
        let psi_uniform = pi_chain_message(&profile.view(), &uniform, &mut c);
        assert_close(&psi_point, &psi_uniform, 1e-12, "pi independence");
    }

    #[test]
    fn boundary_entries_match_their_closed_forms() {
        let m = 4;
        let profile = OwnedProfile::new(
            vec![0.4, 0.7, 0.2, 0.6],
            vec![0.1, 0.3, 0.5, 0.25],
        );
        let pi = pseudo_random(21, m + 1);
        let mut c = Cost::new();
        let s = pi_summands(&profile.view(), &pi, &mut c);
        // Child changepoint 0 with the parent already on: fires at slice 1.
        assert!((s.fired_after_parent_on[0] - 0.4 * pi[0]).abs() < 1e-14);
        // No firing term at the never-fires index, and the while-off
        // component vanishes there too.
        assert_eq!(s.fired_after_parent_on[m], 0.0);
        assert_eq!(s.fired_while_parent_off[m], 0.0);
        let lam = pseudo_random(22, m + 1);
        let s = lambda_summands(&profile.view(), &lam, &mut c);
        // A parent that fires immediately (l = 0) leaves no room for the
        // child to fire first.
        assert_eq!(s.fired_while_parent_off[0], 0.0);
    }
}
