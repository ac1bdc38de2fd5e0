use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A permutation of `0..len`. Interleaving reads `out[i] = x[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; indices.len()];
        for &i in &indices {
            if i >= indices.len() || seen[i] {
                return Err(Error::domain("permutation", "not a permutation of 0..len"));
            }
            seen[i] = true;
        }
        Ok(Self(indices))
    }

    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..len).collect();
        v.shuffle(rng);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

pub fn interleave<T: Copy>(x: &[T], perm: &Permutation) -> Result<Vec<T>> {
    if x.len() != perm.len() {
        return Err(Error::dims("interleave", perm.len(), x.len()));
    }
    Ok(perm.0.iter().map(|&p| x[p]).collect())
}

pub fn deinterleave<T: Copy>(x: &[T], perm: &Permutation) -> Result<Vec<T>> {
    if x.len() != perm.len() {
        return Err(Error::dims("deinterleave", perm.len(), x.len()));
    }
    let Some(&first) = x.first() else {
        return Ok(Vec::new());
    };
    let mut out = vec![first; x.len()];
    for (i, &p) in perm.0.iter().enumerate() {
        out[p] = x[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    #[test]
    fn identity_is_noop() {
        let p = Permutation::identity(4);
        assert_eq!(interleave(&[1, 2, 3, 4], &p).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn small_example() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let x = interleave(&['a', 'b', 'c'], &p).unwrap();
        assert_eq!(x, vec!['c', 'a', 'b']);
        assert_eq!(deinterleave(&x, &p).unwrap(), vec!['a', 'b', 'c']);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3]).is_err());
        let p = Permutation::identity(3);
        assert!(matches!(interleave(&[1, 2], &p), Err(Error::Dimension { .. })));
        assert!(deinterleave(&[1, 2], &p).is_err());
    }

    #[test]
    fn random_3000_round_trip() {
        let p = Permutation::random(3000, &mut substream(5, &[]));
        let x: Vec<u32> = (0..3000).collect();
        let y = interleave(&x, &p).unwrap();
        assert_ne!(x, y);
        assert_eq!(deinterleave(&y, &p).unwrap(), x);
    }

    proptest! {
        #[test]
        fn round_trip_any_length(len in 0usize..600, seed in any::<u64>()) {
            let p = Permutation::random(len, &mut substream(seed, &[]));
            let x: Vec<usize> = (0..len).map(|i| i * 7 + 1).collect();
            let y = interleave(&x, &p).unwrap();
            prop_assert_eq!(deinterleave(&y, &p).unwrap(), x);
        }
    }
}
