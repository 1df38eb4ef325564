//! Helpers for state subsets.
//!
//! Subsets are sorted, duplicate-free slices of 0-based state indices.

use crate::error::{ChainError, Result};

/// Sorts, deduplicates and range-checks a list of states.
pub fn normalize(states: &[usize], d: usize) -> Result<Vec<usize>> {
    let mut out = states.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&bad) = out.iter().find(|&&s| s >= d) {
        return Err(ChainError::BadSubset(format!("state {bad} out of range for d = {d}")));
    }
    Ok(out)
}

pub fn complement(set: &[usize], universe: &[usize]) -> Vec<usize> {
    universe.iter().copied().filter(|s| set.binary_search(s).is_err()).collect()
}

pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|s| b.binary_search(s).is_ok())
}

pub fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|s| b.binary_search(s).is_ok()).collect()
}

pub fn full(d: usize) -> Vec<usize> {
    (0..d).collect()
}

/// Members of `universe` selected by the bits of `mask`.
pub fn from_mask(universe: &[usize], mask: u64) -> Vec<usize> {
    universe
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &s)| s)
        .collect()
}

/// Guard for exhaustive subset enumeration.
pub fn check_enumerable(size: usize, limit: usize) -> Result<()> {
    if size > limit {
        Err(ChainError::TooLarge { size, limit })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_sorts_and_rejects_out_of_range() {
        assert_eq!(normalize(&[3, 1, 1, 0], 4).unwrap(), vec![0, 1, 3]);
        assert!(normalize(&[4], 4).is_err());
    }

    #[test]
    fn set_algebra() {
        let u = full(5);
        assert_eq!(complement(&[1, 3], &u), vec![0, 2, 4]);
        assert!(is_subset(&[1, 3], &u));
        assert!(!is_subset(&[1, 7], &u));
        assert_eq!(intersect(&[0, 2, 4], &[2, 3, 4]), vec![2, 4]);
        assert_eq!(from_mask(&[2, 5, 7], 0b101), vec![2, 7]);
    }
}
