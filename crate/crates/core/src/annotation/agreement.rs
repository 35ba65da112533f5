//! Krippendorff's alpha for nominal data, coincidence-matrix formulation.
//!
//! Handles any number of coders per unit and missing values: units with fewer
//! than two values carry no pairable information and are dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    /// `None` when no unit has two or more values.
    pub alpha: Option<f64>,
    /// All pairable values were identical, so expected disagreement is zero;
    /// `alpha` is reported as 1.
    pub degenerate: bool,
    /// Units with at least two values.
    pub units: usize,
    /// Total number of values in those units.
    pub pairable_values: usize,
}

/// Coincidence matrix `o[c][k]` and marginals of `units`.
pub fn coincidences<T: Ord + Clone>(units: &[Vec<T>]) -> (BTreeMap<(T, T), f64>, BTreeMap<T, f64>, f64) {
    let mut o: BTreeMap<(T, T), f64> = BTreeMap::new();
    for values in units.iter().filter(|v| v.len() >= 2) {
        let w = 1.0 / (values.len() as f64 - 1.0);
        for (i, a) in values.iter().enumerate() {
            for (j, b) in values.iter().enumerate() {
                if i != j {
                    *o.entry((a.clone(), b.clone())).or_default() += w;
                }
            }
        }
    }
    let mut marginals: BTreeMap<T, f64> = BTreeMap::new();
    for ((c, _), v) in &o {
        *marginals.entry(c.clone()).or_default() += v;
    }
    let n = marginals.values().sum();
    (o, marginals, n)
}

/// Nominal alpha over units, each a list of the values coders assigned to it.
pub fn krippendorff_alpha<T: Ord + Clone>(units: &[Vec<T>]) -> AlphaResult {
    let pairable: Vec<&Vec<T>> = units.iter().filter(|v| v.len() >= 2).collect();
    let pairable_values = pairable.iter().map(|v| v.len()).sum();
    let (o, marginals, n) = coincidences(units);
    let mut result = AlphaResult {
        alpha: None,
        degenerate: false,
        units: pairable.len(),
        pairable_values,
    };
    if pairable.is_empty() {
        return result;
    }
    let observed: f64 = o.iter().filter(|((c, k), _)| c != k).map(|(_, v)| v).sum();
    let total_sq: f64 = marginals.values().map(|m| m * m).sum();
    let expected_pairs = n * n - total_sq; // Σ_{c≠k} n_c n_k
    if expected_pairs <= 0.0 {
        result.alpha = Some(1.0);
        result.degenerate = true;
        return result;
    }
    result.alpha = Some(1.0 - (n - 1.0) * observed / expected_pairs);
    result
}
