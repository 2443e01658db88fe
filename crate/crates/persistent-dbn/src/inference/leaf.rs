//! Likelihood vectors from observation leaves.
//!
//! An observation leaf attached to a persistent parent contributes, for each
//! parent changepoint `i`, the product of emission probabilities of its
//! observed slices: slices `t <= i` see the parent off, slices `t > i` see it
//! on, and unobserved slices contribute a factor of one.
//!
//! Adjacent entries differ in a single slice's emission, so the vector is
//! built in O(M) by a ratio recursion from entry 0 (all slices under the
//! parent-on row). When an observed parent-on probability is zero the ratio
//! is undefined; the code then falls back to direct products organized as
//! prefix/suffix arrays, which is division-free and still O(M).

use crate::cost::Cost;
use crate::model::EmissionTable;

/// Smallest parent-on emission probability the ratio recursion will divide
/// by; below this the direct-product fallback is used.
const RATIO_FLOOR: f64 = 1e-300;

/// Likelihood of the leaf's observed slices for each parent changepoint.
///
/// `slices` holds `(t, value)` pairs with `1 <= t <= horizon`.
pub fn leaf_likelihood(
    emission: &EmissionTable,
    slices: &[(usize, u32)],
    horizon: usize,
    cost: &mut Cost,
) -> Vec<f64> {
    // Per-slice emission factors under the two parent states; one where
    // unobserved.
    let mut phi_on = vec![1.0; horizon + 1];
    let mut phi_off = vec![1.0; horizon + 1];
    let mut degenerate = false;
    for &(t, v) in slices {
        debug_assert!(t >= 1 && t <= horizon);
        phi_on[t] = emission.probability(true, v);
        phi_off[t] = emission.probability(false, v);
        degenerate |= phi_on[t] < RATIO_FLOOR;
    }
    cost.add(2 * horizon as u64);

    if degenerate {
        // Direct products: prefix of off factors times suffix of on factors.
        let mut out = vec![0.0; horizon + 1];
        let mut suffix = vec![1.0; horizon + 2];
        for t in (1..=horizon).rev() {
            suffix[t] = suffix[t + 1] * phi_on[t];
        }
        let mut prefix = 1.0;
        for i in 0..=horizon {
            if i > 0 {
                prefix *= phi_off[i];
            }
            out[i] = prefix * suffix[i + 1];
        }
        cost.add(3 * horizon as u64);
        return out;
    }

    let mut out = vec![0.0; horizon + 1];
    out[0] = phi_on[1..=horizon].iter().product();
    for i in 1..=horizon {
        out[i] = out[i - 1] * phi_off[i] / phi_on[i];
    }
    cost.add(3 * horizon as u64);
    out
}

/// Reference implementation: each entry as an independent product.
pub fn leaf_likelihood_direct(
    emission: &EmissionTable,
    slices: &[(usize, u32)],
    horizon: usize,
    cost: &mut Cost,
) -> Vec<f64> {
    let mut out = vec![1.0; horizon + 1];
    for i in 0..=horizon {
        for &(t, v) in slices {
            out[i] *= emission.probability(t > i, v);
        }
    }
    cost.add((slices.len() * (horizon + 1)) as u64);
    out
}
