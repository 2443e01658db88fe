//! Dense factors over binary variables.
//!
//! The exact baselines work on the unrolled temporal network, where every
//! variable is a binary hidden state; observation leaves are folded into
//! factors over their hidden parent before elimination starts. A factor
//! stores its scope as a sorted list of variable ids and its table as a
//! dense array indexed bit-per-variable, least significant bit first.
//!
//! Products enforce an entry budget: a factor whose table would exceed the
//! budget aborts with [`OracleError::MemoryBudgetExceeded`] instead of
//! allocating. That failure is an expected benchmark outcome on wide
//! models, not a bug.

use crate::cost::Cost;
use crate::error::OracleError;

/// A non-negative dense table over a sorted set of binary variables.
#[derive(Debug, Clone)]
pub struct FactorTable {
    vars: Vec<usize>,
    values: Vec<f64>,
}

impl FactorTable {
    /// Build a factor; `vars` must be strictly increasing and `values` must
    /// have one entry per joint state (variable `vars[i]` is bit `i`).
    pub fn new(vars: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]), "scope must be sorted");
        debug_assert_eq!(values.len(), 1usize << vars.len());
        Self { vars, values }
    }

    /// A factor with empty scope.
    pub fn scalar(value: f64) -> Self {
        Self {
            vars: Vec::new(),
            values: vec![value],
        }
    }

    /// A single-variable factor `(off, on)`.
    pub fn singleton(var: usize, off: f64, on: f64) -> Self {
        Self {
            vars: vec![var],
            values: vec![off, on],
        }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Whether `var` appears in the scope.
    pub fn mentions(&self, var: usize) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    /// Entrywise product over the union scope. Fails when the result table
    /// would exceed `budget` entries.
    pub fn product(
        &self,
        other: &Self,
        budget: u64,
        cost: &mut Cost,
    ) -> Result<Self, OracleError> {
        let mut vars = Vec::with_capacity(self.vars.len() + other.vars.len());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() || j < other.vars.len() {
            match (self.vars.get(i), other.vars.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    vars.push(a);
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    vars.push(a);
                    i += 1;
                }
                (Some(_), Some(_)) | (None, Some(_)) => {
                    vars.push(other.vars[j]);
                    j += 1;
                }
                (Some(&a), None) => {
                    vars.push(a);
                    i += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        let entries = 1u64 << vars.len();
        if entries > budget {
            return Err(OracleError::MemoryBudgetExceeded {
                required: entries,
                budget,
            });
        }
        // Bit position of each result variable inside each operand, or
        // usize::MAX when absent.
        let pos_in = |scope: &[usize]| -> Vec<usize> {
            vars.iter()
                .map(|v| scope.binary_search(v).unwrap_or(usize::MAX))
                .collect()
        };
        let pos_a = pos_in(&self.vars);
        let pos_b = pos_in(&other.vars);
        let mut values = vec![0.0; entries as usize];
        for (idx, slot) in values.iter_mut().enumerate() {
            let mut ia = 0usize;
            let mut ib = 0usize;
            for (bit, (&pa, &pb)) in pos_a.iter().zip(&pos_b).enumerate() {
                let v = (idx >> bit) & 1;
                if pa != usize::MAX {
                    ia |= v << pa;
                }
                if pb != usize::MAX {
                    ib |= v << pb;
                }
            }
            *slot = self.values[ia] * other.values[ib];
        }
        cost.add(entries);
        Ok(Self { vars, values })
    }

    /// Sum `var` out of the scope.
    pub fn marginalize_out(&self, var: usize, cost: &mut Cost) -> Self {
        let p = self
            .vars
            .binary_search(&var)
            .expect("marginalized variable must be in scope");
        let stride = 1usize << p;
        let mut vars = self.vars.clone();
        vars.remove(p);
        let mut values = vec![0.0; self.values.len() / 2];
        for (idx, slot) in values.iter_mut().enumerate() {
            let low = idx & (stride - 1);
            let high = idx >> p;
            let src = (high << (p + 1)) | low;
            *slot = self.values[src] + self.values[src | stride];
        }
        cost.add(values.len() as u64);
        Self { vars, values }
    }

    /// Fix `var` to `value` (0 or 1) and drop it from the scope.
    pub fn reduce(&self, var: usize, value: usize) -> Self {
        let p = self
            .vars
            .binary_search(&var)
            .expect("reduced variable must be in scope");
        let stride = 1usize << p;
        let mut vars = self.vars.clone();
        vars.remove(p);
        let mut values = vec![0.0; self.values.len() / 2];
        for (idx, slot) in values.iter_mut().enumerate() {
            let low = idx & (stride - 1);
            let high = idx >> p;
            *slot = self.values[(high << (p + 1)) | low | (value * stride)];
        }
        Self { vars, values }
    }
}

/// Eliminate `var` from a factor pool: multiply every factor mentioning it,
/// sum it out, and push the result back.
pub fn eliminate_var(
    factors: &mut Vec<FactorTable>,
    var: usize,
    budget: u64,
    cost: &mut Cost,
) -> Result<(), OracleError> {
    let mut bucket = Vec::new();
    let mut rest = Vec::with_capacity(factors.len());
    for f in factors.drain(..) {
        if f.mentions(var) {
            bucket.push(f);
        } else {
            rest.push(f);
        }
    }
    *factors = rest;
    let mut acc = match bucket.pop() {
        Some(f) => f,
        None => return Ok(()),
    };
    for f in bucket {
        acc = acc.product(&f, budget, cost)?;
    }
    factors.push(acc.marginalize_out(var, cost));
    Ok(())
}

/// Eliminate every variable in `order`, then fold what is left into a single
/// factor over the surviving scope (the query variables).
pub fn eliminate_to_factor(
    mut factors: Vec<FactorTable>,
    order: &[usize],
    budget: u64,
    cost: &mut Cost,
) -> Result<FactorTable, OracleError> {
    for &v in order {
        eliminate_var(&mut factors, v, budget, cost)?;
    }
    let mut acc = FactorTable::scalar(1.0);
    for f in factors {
        acc = acc.product(&f, budget, cost)?;
    }
    Ok(acc)
}
