//! Instance data model, selections and compactness pairs.
//!
//! Item indices are 0-based in memory and 1-based in files and reports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    /// Sum of raw weights; dividing weights and `q` by it gives the
    /// normalized instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub weights: Vec<u64>,
    pub costs: Vec<f64>,
    pub q: f64,
    pub delta: usize,
    #[serde(default)]
    pub meta: Meta,
}

impl Instance {
    pub fn new(weights: Vec<u64>, costs: Vec<f64>, q: f64, delta: usize) -> Self {
        Instance { n: weights.len(), weights, costs, q, delta, meta: Meta::default() }
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Every violated invariant, each with a readable reason. Empty means valid.
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    if inst.n == 0 {
        out.push("n must be at least 1".to_string());
    }
    if inst.weights.len() != inst.n {
        out.push(format!("weights has {} entries, expected n = {}", inst.weights.len(), inst.n));
    }
    if inst.costs.len() != inst.n {
        out.push(format!("costs has {} entries, expected n = {}", inst.costs.len(), inst.n));
    }
    for (i, c) in inst.costs.iter().enumerate() {
        if !c.is_finite() || *c < 0.0 {
            out.push(format!("cost of item {} is {c}, must be finite and >= 0", i + 1));
        }
    }
    if !inst.q.is_finite() || inst.q <= 0.0 {
        out.push(format!("q = {} must be finite and > 0", inst.q));
    }
    if inst.delta < 1 {
        out.push("delta must be at least 1".to_string());
    }
    let total = inst.total_weight();
    if (total as f64) < inst.q {
        out.push(format!("total weight < q ({total} < {})", inst.q));
    }
    out
}

/// [`validate_instance`] as a `Result`.
pub fn ensure_valid(inst: &Instance) -> Result<()> {
    let v = validate_instance(inst);
    if v.is_empty() {
        Ok(())
    } else {
        Err(invalid(v.join("; ")))
    }
}

/// A set of chosen items, kept sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Selection {
    items: Vec<usize>,
}

impl Selection {
    pub fn new<I: IntoIterator<Item = usize>>(items: I) -> Self {
        let mut items: Vec<usize> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Selection { items }
    }

    pub fn from_one_based<I: IntoIterator<Item = usize>>(items: I) -> Result<Self> {
        let mut v = Vec::new();
        for i in items {
            if i == 0 {
                return Err(invalid("item indices are 1-based"));
            }
            v.push(i - 1);
        }
        Ok(Selection::new(v))
    }

    pub fn from_mask(mask: u64, n: usize) -> Self {
        Selection { items: (0..n).filter(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn all(n: usize) -> Self {
        Selection { items: (0..n).collect() }
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.items.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.items.binary_search(&i).is_ok()
    }

    pub fn insert(&mut self, i: usize) {
        if let Err(p) = self.items.binary_search(&i) {
            self.items.insert(p, i);
        }
    }

    pub fn remove(&mut self, i: usize) {
        if let Ok(p) = self.items.binary_search(&i) {
            self.items.remove(p);
        }
    }

    /// 0/1 indicator vector of length `n`.
    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for &i in &self.items {
            x[i] = 1.0;
        }
        x
    }

    pub fn weight(&self, inst: &Instance) -> u64 {
        self.items.iter().map(|&i| inst.weights[i]).sum()
    }

    pub fn cost(&self, inst: &Instance) -> f64 {
        self.items.iter().map(|&i| inst.costs[i]).sum()
    }
}

/// Written as a sorted list of 1-based indices.
impl Serialize for Selection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Selection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Selection::from_one_based(v).map_err(serde::de::Error::custom)
    }
}

/// A pair `i < j` with `j - i > delta` and its required count of selected
/// items strictly between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCoefficient {
    pub i: usize,
    pub j: usize,
    pub kappa: usize,
}

pub fn kappa(i: usize, j: usize, delta: usize) -> usize {
    (j - i - 1) / delta
}

/// All pairs with `j - i > delta`, in lexicographic order.
pub fn compactness_pairs(n: usize, delta: usize) -> Vec<PairCoefficient> {
    let delta = delta.max(1);
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + delta + 1)..n {
            out.push(PairCoefficient { i, j, kappa: kappa(i, j, delta) });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub knapsack_ok: bool,
    pub compactness_ok: bool,
    pub weight: u64,
    pub violated_pairs: Vec<PairCoefficient>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.knapsack_ok && self.compactness_ok
    }
}

pub fn check_selection(inst: &Instance, sel: &Selection) -> FeasibilityReport {
    let weight = sel.weight(inst);
    let items = sel.items();
    let mut violated = Vec::new();
    for (a, &i) in items.iter().enumerate() {
        for (b, &j) in items.iter().enumerate().skip(a + 1) {
            if j - i > inst.delta {
                let k = kappa(i, j, inst.delta);
                let between = b - a - 1;
                if between < k {
                    violated.push(PairCoefficient { i, j, kappa: k });
                }
            }
        }
    }
    FeasibilityReport {
        knapsack_ok: weight as f64 >= inst.q,
        compactness_ok: violated.is_empty(),
        weight,
        violated_pairs: violated,
    }
}

/// The max-knapsack obtained through `x -> 1 - x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxKnapsack {
    pub weights: Vec<u64>,
    pub costs: Vec<f64>,
    pub capacity: f64,
}

impl MaxKnapsack {
    /// Capacity of the min-knapsack this one came from.
    pub fn complement_capacity(&self) -> f64 {
        self.weights.iter().sum::<u64>() as f64 - self.capacity
    }

    pub fn feasible(&self, sel: &Selection) -> bool {
        sel.items().iter().map(|&i| self.weights[i]).sum::<u64>() as f64 <= self.capacity
    }
}

pub fn complement_instance(inst: &Instance) -> MaxKnapsack {
    MaxKnapsack {
        weights: inst.weights.clone(),
        costs: inst.costs.clone(),
        capacity: inst.total_weight() as f64 - inst.q,
    }
}

pub fn complement_selection(sel: &Selection, n: usize) -> Selection {
    Selection::new((0..n).filter(|&i| !sel.contains(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Instance {
        Instance::new(vec![1; 7], vec![1.0; 7], 4.0, 2)
    }

    #[test]
    fn single_item_is_valid() {
        assert!(validate_instance(&Instance::new(vec![5], vec![2.0], 5.0, 1)).is_empty());
    }

    #[test]
    fn short_weight_is_flagged() {
        let v = validate_instance(&Instance::new(vec![1, 1], vec![1.0, 1.0], 3.0, 1));
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("total weight < q"));
    }

    #[test]
    fn pair_listing() {
        let p = compactness_pairs(7, 2);
        assert_eq!(p.len(), 10);
        assert!(p.contains(&PairCoefficient { i: 0, j: 6, kappa: 2 }));
        assert!(compactness_pairs(3, 4).is_empty());
        assert_eq!(compactness_pairs(10, 2).len(), 28);
    }

    #[test]
    fn toy_selections() {
        let s = Selection::from_one_based([1, 4, 5, 7]).unwrap();
        let r = check_selection(&toy(), &s);
        assert!(!r.compactness_ok);
        assert_eq!(r.violated_pairs[0], PairCoefficient { i: 0, j: 3, kappa: 1 });
        let s = Selection::from_one_based([1, 2, 4, 5, 7]).unwrap();
        assert!(check_selection(&toy(), &s).feasible());
        assert!(!check_selection(&toy(), &Selection::default()).knapsack_ok);
    }

    #[test]
    fn complement_capacity() {
        let ce2 = Instance::new(vec![5, 1, 1, 5], vec![1.0; 4], 10.0, 2);
        let m = complement_instance(&ce2);
        assert_eq!(m.capacity, 2.0);
        assert_eq!(m.complement_capacity(), 10.0);
        assert!(m.feasible(&complement_selection(&Selection::all(4), 4)));
    }

    #[test]
    fn meta_keeps_unknown_keys() {
        let s = r#"{"n":1,"weights":[3],"costs":[1.5],"q":2.0,"delta":1,"meta":{"seed":4,"origin":"x"}}"#;
        let inst = Instance::from_json(s).unwrap();
        assert_eq!(inst.meta.seed, Some(4));
        assert_eq!(inst.meta.extra["origin"], "x");
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
    }
}
