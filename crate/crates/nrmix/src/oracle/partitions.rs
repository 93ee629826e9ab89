//! Exhaustive enumeration of set partitions for small `n`.

use crate::nggp::PartitionShape;
use crate::{Error, Result};

/// All set partitions of `{0, .., n-1}` for `n <= 10`, as label vectors in
/// restricted growth form: `labels[i] <= 1 + max(labels[..i])`, so cluster
/// ids appear in order of first use. The number of results is the Bell
/// number `B(n)`.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > 10 {
        return Err(Error::invalid_parameter(format!(
            "partition enumeration supports 1 <= n <= 10, got {n}"
        )));
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    extend(&mut labels, 1, &mut out);
    Ok(out)
}

fn extend(labels: &mut Vec<usize>, pos: usize, out: &mut Vec<Vec<usize>>) {
    if pos == labels.len() {
        out.push(labels.clone());
        return;
    }
    let max_used = labels[..pos].iter().copied().max().unwrap_or(0);
    for label in 0..=max_used + 1 {
        labels[pos] = label;
        extend(labels, pos + 1, out);
    }
}

/// Shape (cluster sizes in order of first appearance) of a label vector.
pub fn shape_of(labels: &[usize]) -> PartitionShape {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    PartitionShape::new(sizes).expect("label vector yields positive cluster sizes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_bell_numbers() {
        let bell = [1usize, 2, 5, 15, 52, 203, 877, 4140, 21147, 115_975];
        for (i, &b) in bell.iter().enumerate() {
            assert_eq!(enumerate_partitions(i + 1).unwrap().len(), b, "n = {}", i + 1);
        }
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(11).is_err());
    }

    #[test]
    fn partitions_are_distinct_and_restricted_growth() {
        let parts = enumerate_partitions(6).unwrap();
        let mut seen = std::collections::HashSet::new();
        for labels in &parts {
            assert!(seen.insert(labels.clone()), "duplicate partition {labels:?}");
            let mut max_used = 0usize;
            assert_eq!(labels[0], 0);
            for &l in labels {
                assert!(l <= max_used + 1, "not restricted growth: {labels:?}");
                max_used = max_used.max(l);
            }
        }
    }

    #[test]
    fn shape_of_counts_by_first_appearance() {
        let shape = shape_of(&[0, 1, 0, 2, 1, 0]);
        assert_eq!(shape.sizes(), &[3, 2, 1]);
        assert_eq!(shape.n(), 6);
    }
}
