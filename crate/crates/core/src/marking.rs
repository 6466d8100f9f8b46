use smallvec::SmallVec;
use std::fmt;

use crate::net::PlaceId;

/// A set of places, stored as a dense bit-set over the net's place order.
///
/// The derived `Ord` compares word by word and is the "bit-set order" used
/// to canonically order markings within an exploration layer.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Marking {
    words: SmallVec<[u64; 2]>,
}

impl Marking {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_places<I: IntoIterator<Item = PlaceId>>(places: I) -> Self {
        let mut m = Self::empty();
        for p in places {
            m.insert(p);
        }
        m
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn contains(&self, p: PlaceId) -> bool {
        let (w, b) = (p.index() / 64, p.index() % 64);
        self.words.get(w).is_some_and(|x| x & (1 << b) != 0)
    }

    pub fn insert(&mut self, p: PlaceId) -> bool {
        let (w, b) = (p.index() / 64, p.index() % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, p: PlaceId) -> bool {
        let (w, b) = (p.index() / 64, p.index() % 64);
        let Some(x) = self.words.get_mut(w) else {
            return false;
        };
        let had = *x & (1 << b) != 0;
        *x &= !(1 << b);
        self.trim();
        had
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &Marking) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn intersects(&self, other: &Marking) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .any(|(a, b)| a & b != 0)
    }

    pub fn union(&self, other: &Marking) -> Marking {
        let n = self.words.len().max(other.words.len());
        let words = (0..n)
            .map(|i| {
                self.words.get(i).copied().unwrap_or(0) | other.words.get(i).copied().unwrap_or(0)
            })
            .collect();
        Marking { words }
    }

    pub fn intersection(&self, other: &Marking) -> Marking {
        let mut m = Marking {
            words: self
                .words
                .iter()
                .zip(other.words.iter())
                .map(|(a, b)| a & b)
                .collect(),
        };
        m.trim();
        m
    }

    pub fn difference(&self, other: &Marking) -> Marking {
        let mut m = Marking {
            words: self
                .words
                .iter()
                .enumerate()
                .map(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0))
                .collect(),
        };
        m.trim();
        m
    }

    pub fn union_with(&mut self, other: &Marking) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(PlaceId::new(i * 64 + b))
            })
        })
    }
}

impl FromIterator<PlaceId> for Marking {
    fn from_iter<I: IntoIterator<Item = PlaceId>>(iter: I) -> Self {
        Self::from_places(iter)
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.index())).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn m(xs: &[usize]) -> Marking {
        xs.iter().map(|&i| PlaceId::new(i)).collect()
    }

    #[test]
    fn remove_trims_so_equality_is_structural() {
        let mut a = m(&[3, 100]);
        a.remove(PlaceId::new(100));
        assert_eq!(a, m(&[3]));
        assert_eq!(m(&[]), Marking::empty());
    }

    proptest! {
        #[test]
        fn set_algebra_matches_btreeset(a in prop::collection::btree_set(0usize..150, 0..20),
                                        b in prop::collection::btree_set(0usize..150, 0..20)) {
            let (ma, mb) = (m(&a.iter().copied().collect::<Vec<_>>()), m(&b.iter().copied().collect::<Vec<_>>()));
            let to_set = |x: &Marking| x.iter().map(|p| p.index()).collect::<BTreeSet<_>>();
            prop_assert_eq!(to_set(&ma.union(&mb)), a.union(&b).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(to_set(&ma.intersection(&mb)), a.intersection(&b).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(to_set(&ma.difference(&mb)), a.difference(&b).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(ma.is_subset(&mb), a.is_subset(&b));
            prop_assert_eq!(ma.intersects(&mb), !a.is_disjoint(&b));
            prop_assert_eq!(ma.len(), a.len());
            prop_assert_eq!(ma.difference(&mb).union(&ma.intersection(&mb)), ma.clone());
        }
    }
}
