//! Display formatting and histogram binning for run reports.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 30;

/// Four decimal places; negative zero prints as zero.
pub fn fmt4(v: f64) -> String {
    let s = alloc::format!("{v:.4}");
    if s == "-0.0000" {
        String::from("0.0000")
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistogramGroup {
    pub name: String,
    pub samples: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Fixed-width bins over the pooled range of all groups.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histograms {
    pub bins: usize,
    pub min: f64,
    pub max: f64,
    pub edges: Vec<f64>,
    pub groups: Vec<HistogramGroup>,
}

fn bin_of(v: f64, min: f64, max: f64, bins: usize) -> usize {
    if max <= min {
        return 0;
    }
    let i = ((v - min) / (max - min) * bins as f64) as usize;
    i.min(bins - 1)
}

/// Bins each named group's samples. When every value is equal they all land
/// in the first bin.
pub fn histograms(groups: &[(&str, &[f64])], bins: usize) -> Result<Histograms> {
    if bins == 0 {
        return Err(Error::InvalidScorer(
            "histogram needs at least one bin".into(),
        ));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (_, samples) in groups {
        for (i, &v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteScore(i));
            }
            min = min.min(v);
            max = max.max(v);
        }
    }
    if min > max {
        (min, max) = (0.0, 0.0);
    }
    let edges = (0..=bins)
        .map(|i| min + (max - min) * i as f64 / bins as f64)
        .collect();
    let groups = groups
        .iter()
        .map(|(name, samples)| {
            let mut counts = vec![0usize; bins];
            for &v in samples.iter() {
                counts[bin_of(v, min, max, bins)] += 1;
            }
            HistogramGroup {
                name: String::from(*name),
                samples: samples.to_vec(),
                counts,
            }
        })
        .collect();
    Ok(Histograms {
        bins,
        min,
        max,
        edges,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_decimals() {
        assert_eq!(fmt4(0.20524), "0.2052");
        assert_eq!(fmt4(1.0 / 5001.0), "0.0002");
        assert_eq!(fmt4(1.0 / 50001.0), "0.0000");
        assert_eq!(fmt4(1.0), "1.0000");
        assert_eq!(fmt4(-0.00001), "0.0000");
        assert_eq!(fmt4(-0.25), "-0.2500");
    }

    #[test]
    fn group_sizes_preserved() {
        let r: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let m: Vec<f64> = (0..8).map(|i| 0.5 + i as f64 / 20.0).collect();
        let u: Vec<f64> = (0..600).map(|i| (i % 37) as f64 / 40.0).collect();
        let h = histograms(
            &[("reference", &r), ("matched", &m), ("unmatched", &u)],
            DEFAULT_BINS,
        )
        .unwrap();
        let sizes: Vec<(usize, usize)> = h
            .groups
            .iter()
            .map(|g| (g.samples.len(), g.counts.iter().sum()))
            .collect();
        assert_eq!(sizes, [(10, 10), (8, 8), (600, 600)]);
        assert_eq!(h.edges.len(), 31);
        assert_eq!(h.max, 0.9);
        assert!(h.groups[2].counts[29] > 0);
    }

    #[test]
    fn all_equal_single_bin() {
        let v = [0.3; 12];
        let h = histograms(&[("a", &v), ("b", &v[..4])], 30).unwrap();
        assert_eq!(h.groups[0].counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.groups[0].counts[0], 12);
        assert_eq!(h.groups[1].counts[0], 4);
    }

    #[test]
    fn empty_and_invalid() {
        let h = histograms(&[("a", &[])], 5).unwrap();
        assert_eq!(h.groups[0].counts, [0; 5]);
        assert!(histograms(&[("a", &[f64::NAN])], 5).is_err());
        assert!(histograms(&[("a", &[1.0])], 0).is_err());
    }

    proptest! {
        #[test]
        fn counts_conserved(
            a in proptest::collection::vec(-3.0f64..3.0, 0..50),
            b in proptest::collection::vec(-3.0f64..3.0, 0..50),
            bins in 1usize..40,
        ) {
            let h = histograms(&[("a", &a), ("b", &b)], bins).unwrap();
            prop_assert_eq!(h.groups[0].counts.iter().sum::<usize>(), a.len());
            prop_assert_eq!(h.groups[1].counts.iter().sum::<usize>(), b.len());
        }
    }
}
