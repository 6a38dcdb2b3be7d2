//! Sets of actions as growable bitsets.
//!
//! Profiles are ordered by the integer value of their bitmask (action `j`
//! has weight `2^j`), which is the tie-break order used everywhere: "the
//! smallest bitset" is the least profile under [`Ord`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ActionProfile {
    // No trailing zero words, so equality is independent of capacity.
    words: Vec<u64>,
}

impl ActionProfile {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(action: usize) -> Self {
        let mut s = Self::empty();
        s.insert(action);
        s
    }

    pub fn from_mask(mask: u64) -> Self {
        let mut s = ActionProfile { words: vec![mask] };
        s.trim();
        s
    }

    /// The bitmask, if every member is below 64.
    pub fn as_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn insert(&mut self, action: usize) {
        let (w, b) = (action / 64, action % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn remove(&mut self, action: usize) {
        let (w, b) = (action / 64, action % 64);
        if w < self.words.len() {
            self.words[w] &= !(1 << b);
            self.trim();
        }
    }

    pub fn contains(&self, action: usize) -> bool {
        let (w, b) = (action / 64, action % 64);
        self.words.get(w).is_some_and(|word| word >> b & 1 == 1)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_action(&self) -> Option<usize> {
        let last = self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn union(&self, other: &Self) -> Self {
        let (long, short) = if self.words.len() >= other.words.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut words = long.words.clone();
        for (w, o) in words.iter_mut().zip(&short.words) {
            *w |= o;
        }
        ActionProfile { words }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut s = ActionProfile {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        };
        s.trim();
        s
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut s = ActionProfile {
            words: self
                .words
                .iter()
                .enumerate()
                .map(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0))
                .collect(),
        };
        s.trim();
        s
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<usize> for ActionProfile {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Self::empty();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl Ord for ActionProfile {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .len()
            .cmp(&other.words.len())
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for ActionProfile {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl BitOr for &ActionProfile {
    type Output = ActionProfile;
    fn bitor(self, rhs: Self) -> ActionProfile {
        self.union(rhs)
    }
}

impl BitAnd for &ActionProfile {
    type Output = ActionProfile;
    fn bitand(self, rhs: Self) -> ActionProfile {
        self.intersection(rhs)
    }
}

impl Sub for &ActionProfile {
    type Output = ActionProfile;
    fn sub(self, rhs: Self) -> ActionProfile {
        self.difference(rhs)
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, a) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All subsets of `ground`, in increasing profile order.
///
/// Counting `k = 0..2^|ground|` and depositing the bits of `k` onto the
/// (sorted) ground positions is order preserving, so the first maximizer met
/// under a strict-improvement scan is the smallest bitset.
pub fn subsets(ground: &[usize]) -> impl Iterator<Item = ActionProfile> + '_ {
    debug_assert!(ground.windows(2).all(|w| w[0] < w[1]));
    assert!(
        ground.len() < 64,
        "subset enumeration over {} elements",
        ground.len()
    );
    (0u64..1 << ground.len()).map(move |k| {
        let mut s = ActionProfile::empty();
        let mut rest = k;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            s.insert(ground[b]);
        }
        s
    })
}

/// All subsets of `ground` that contain `floor`, in increasing order.
pub fn supersets_within<'a>(
    ground: &'a [usize],
    floor: &'a ActionProfile,
) -> impl Iterator<Item = ActionProfile> + 'a {
    subsets(ground).filter(move |s| floor.is_subset(s))
}
