//! Fixed-universe vertex sets.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A subset of the vertex ids `0..universe`.
///
/// Iteration is always in ascending vertex order, which every cost and
/// candidate scan in the crate relies on for reproducibility.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    bits: FixedBitSet,
}

impl VertexSet {
    pub fn empty(universe: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(universe),
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        Self { bits }
    }

    /// Builds a set from vertex ids. Panics if an id is outside the universe.
    pub fn from_vertices<I: IntoIterator<Item = usize>>(universe: usize, vertices: I) -> Self {
        let mut set = Self::empty(universe);
        for v in vertices {
            set.insert(v);
        }
        set
    }

    pub fn singleton(universe: usize, v: usize) -> Self {
        Self::from_vertices(universe, [v])
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.bits.len() && self.bits.contains(v)
    }

    pub fn insert(&mut self, v: usize) -> bool {
        assert!(
            v < self.bits.len(),
            "vertex {v} outside universe {}",
            self.bits.len()
        );
        !self.bits.put(v)
    }

    pub fn remove(&mut self, v: usize) -> bool {
        if v >= self.bits.len() {
            return false;
        }
        let was = self.bits.contains(v);
        self.bits.set(v, false);
        was
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn first(&self) -> Option<usize> {
        self.bits.ones().next()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        VertexSet { bits }
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        VertexSet { bits }
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        VertexSet { bits }
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Serialized as `{"universe": n, "vertices": [..]}`.
#[derive(Serialize, Deserialize)]
struct VertexSetRepr {
    universe: usize,
    vertices: Vec<usize>,
}

impl Serialize for VertexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VertexSetRepr {
            universe: self.universe(),
            vertices: self.to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VertexSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = VertexSetRepr::deserialize(deserializer)?;
        if let Some(&bad) = repr.vertices.iter().find(|&&v| v >= repr.universe) {
            return Err(serde::de::Error::custom(format!(
                "vertex {bad} outside universe {}",
                repr.universe
            )));
        }
        Ok(VertexSet::from_vertices(repr.universe, repr.vertices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = VertexSet::from_vertices(8, [1, 3, 5]);
        let b = VertexSet::from_vertices(8, [3, 4]);
        assert_eq!(a.union(&b).to_vec(), vec![1, 3, 4, 5]);
        assert_eq!(a.intersection(&b).to_vec(), vec![3]);
        assert_eq!(a.difference(&b).to_vec(), vec![1, 5]);
        assert!(!a.is_disjoint(&b));
        assert!(VertexSet::singleton(8, 3).is_subset(&a));
        assert_eq!(VertexSet::full(3).to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn insert_remove_report_change() {
        let mut s = VertexSet::empty(4);
        assert!(s.insert(2));
        assert!(!s.insert(2));
        assert!(s.remove(2));
        assert!(!s.remove(2));
        assert!(!s.contains(17));
        assert!(s.is_empty());
    }

    #[test]
    fn serde_rejects_out_of_universe() {
        let bad = r#"{"universe":2,"vertices":[0,5]}"#;
        assert!(serde_json::from_str::<VertexSet>(bad).is_err());
        let ok: VertexSet = serde_json::from_str(r#"{"universe":3,"vertices":[2]}"#).unwrap();
        assert_eq!(ok.to_vec(), vec![2]);
    }
}
