use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

/// A canonical, strictly increasing set of attribute indices.
///
/// Ordering is by cardinality first and then lexicographic, so sorted
/// collections of attribute sets list 1-way marginals before 2-way ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct AttrSet(Vec<usize>);

impl AttrSet {
    pub fn new<I: IntoIterator<Item = usize>>(attrs: I) -> Self {
        let mut v: Vec<usize> = attrs.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        AttrSet(v)
    }

    pub fn empty() -> Self {
        AttrSet(Vec::new())
    }

    pub fn single(attr: usize) -> Self {
        AttrSet(vec![attr])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, attr: usize) -> bool {
        self.0.binary_search(&attr).is_ok()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = usize> + ExactSizeIterator + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &AttrSet) -> bool {
        self.0.iter().all(|a| other.contains(*a))
    }

    pub fn union(&self, other: &AttrSet) -> AttrSet {
        AttrSet::new(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.iter().filter(|a| other.contains(*a)).collect())
    }

    pub fn difference(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.iter().filter(|a| !other.contains(*a)).collect())
    }

    pub fn intersection_len(&self, other: &AttrSet) -> usize {
        self.iter().filter(|a| other.contains(*a)).count()
    }

    /// All non-empty subsets, including `self`.
    pub fn nonempty_subsets(&self) -> Vec<AttrSet> {
        let k = self.0.len();
        assert!(k < usize::BITS as usize, "attribute set too large to enumerate");
        (1usize..(1 << k))
            .map(|mask| AttrSet((0..k).filter(|b| mask >> b & 1 == 1).map(|b| self.0[b]).collect()))
            .collect()
    }
}

impl Ord for AttrSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for AttrSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl<'de> Deserialize<'de> for AttrSet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(de)?;
        Ok(AttrSet::new(v))
    }
}

impl FromIterator<usize> for AttrSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        AttrSet::new(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes() {
        assert_eq!(AttrSet::new([3, 1, 3, 0]).as_slice(), &[0, 1, 3]);
    }

    #[test]
    fn orders_by_size_then_lex() {
        let mut v = vec![AttrSet::new([0, 1]), AttrSet::new([2]), AttrSet::new([0])];
        v.sort();
        assert_eq!(v, vec![AttrSet::new([0]), AttrSet::new([2]), AttrSet::new([0, 1])]);
    }

    #[test]
    fn subsets() {
        let s = AttrSet::new([0, 2, 5]).nonempty_subsets();
        assert_eq!(s.len(), 7);
        assert!(s.contains(&AttrSet::new([0, 5])));
    }
}
