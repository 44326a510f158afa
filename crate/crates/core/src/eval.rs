//! Ranking, thresholded classification and the search/classification
//! metrics reported per configuration.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::calibration::{Mechanism, PValueResult};
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::scoring::ScoredImage;

/// Scored images in descending similarity, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct RankedList {
    items: Vec<ScoredImage>,
}

impl RankedList {
    pub fn items(&self) -> &[ScoredImage] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|s| s.image_id.as_str())
    }
}

pub fn rank_images(mut scored: Vec<ScoredImage>) -> RankedList {
    scored.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    RankedList { items: scored }
}

/// Positives among the first `min(k, len)` ranked images.
pub fn matches_in_top_k(
    ranked: &RankedList,
    labels: &BTreeMap<String, Label>,
    k: usize,
) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let mut hits = 0;
    for id in ranked.ids().take(k) {
        match labels.get(id) {
            Some(Label::Positive) => hits += 1,
            Some(_) => {}
            None => return Err(Error::Unlabeled(id.to_string())),
        }
    }
    Ok(hits)
}

pub fn validate_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold))
    }
}

/// Present when `p < threshold`.
pub fn classify(pvalues: &[PValueResult], threshold: f64) -> Result<Vec<(String, bool)>> {
    validate_threshold(threshold)?;
    Ok(pvalues
        .iter()
        .map(|r| (r.image_id.clone(), r.p < threshold))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Confusion counts over labeled decisions. Returns the matrix and the
/// number of unknown-label images left out.
pub fn confusion(
    decisions: &[(String, bool)],
    labels: &BTreeMap<String, Label>,
) -> Result<(ConfusionMatrix, usize)> {
    let mut cm = ConfusionMatrix::default();
    let mut excluded = 0;
    for (id, predicted) in decisions {
        let truth = labels.get(id).ok_or_else(|| Error::Unlabeled(id.clone()))?;
        match (truth.as_bool(), predicted) {
            (None, _) => excluded += 1,
            (Some(true), true) => cm.tp += 1,
            (Some(true), false) => cm.fn_ += 1,
            (Some(false), true) => cm.fp += 1,
            (Some(false), false) => cm.tn += 1,
        }
    }
    Ok((cm, excluded))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
}

/// Rates with empty denominators: sensitivity 0, specificity 1, F1 0, so
/// any matrix without positive calls has balanced accuracy 0.5.
pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let ratio = |num: usize, den: usize, empty: f64| {
        if den == 0 {
            empty
        } else {
            num as f64 / den as f64
        }
    };
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_, 0.0);
    let specificity = ratio(cm.tn, cm.tn + cm.fp, 1.0);
    Metrics {
        sensitivity,
        specificity,
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdMetrics {
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

/// One configuration's search and classification results.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub object_type: String,
    pub model_name: String,
    pub mechanism: Mechanism,
    pub k: usize,
    pub matches_at_k: usize,
    pub excluded_unknown: usize,
    pub thresholds: Vec<ThresholdMetrics>,
}

impl MetricsReport {
    pub fn at(&self, threshold: f64) -> Option<&ThresholdMetrics> {
        self.thresholds.iter().find(|t| t.threshold == threshold)
    }
}

/// Ranking, matches@k and per-threshold metrics from already computed
/// scores and p-values.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    object_type: &str,
    model_name: &str,
    mechanism: Mechanism,
    ranked: &RankedList,
    pvalues: &[PValueResult],
    labels: &BTreeMap<String, Label>,
    thresholds: &[f64],
    k: usize,
) -> Result<MetricsReport> {
    let matches_at_k = matches_in_top_k(ranked, labels, k)?;
    let mut rows = Vec::with_capacity(thresholds.len());
    let mut excluded_unknown = 0;
    for &t in thresholds {
        let decisions = classify(pvalues, t)?;
        let (cm, excluded) = confusion(&decisions, labels)?;
        excluded_unknown = excluded;
        rows.push(ThresholdMetrics {
            threshold: t,
            confusion: cm,
            metrics: metrics(&cm),
        });
    }
    Ok(MetricsReport {
        object_type: object_type.to_string(),
        model_name: model_name.to_string(),
        mechanism,
        k,
        matches_at_k,
        excluded_unknown,
        thresholds: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::Tile;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn scored(id: &str, s: f64) -> ScoredImage {
        ScoredImage {
            image_id: id.into(),
            similarity: s,
            best_tile: Tile::full(1, 1),
            per_tile_scores: None,
        }
    }

    fn pv(id: &str, p: f64) -> PValueResult {
        PValueResult {
            image_id: id.into(),
            observed: 0.0,
            p,
            null_size: 10,
            mechanism: Mechanism::ReferenceImages,
        }
    }

    fn labels(pairs: &[(&str, Label)]) -> BTreeMap<String, Label> {
        pairs.iter().map(|(id, l)| (id.to_string(), *l)).collect()
    }

    #[test]
    fn ranking_examples() {
        let r = rank_images(vec![scored("a", 0.2), scored("b", 0.9), scored("c", 0.5)]);
        assert_eq!(r.ids().collect::<Vec<_>>(), ["b", "c", "a"]);
        let r = rank_images(vec![scored("b", 0.5), scored("a", 0.5)]);
        assert_eq!(r.ids().collect::<Vec<_>>(), ["a", "b"]);
        assert!(rank_images(vec![]).is_empty());
    }

    #[test]
    fn top_k_examples() {
        use Label::*;
        let r = rank_images(vec![scored("p1", 0.9), scored("n", 0.8), scored("p2", 0.7)]);
        let l = labels(&[("p1", Positive), ("n", Negative), ("p2", Positive)]);
        assert_eq!(matches_in_top_k(&r, &l, 2).unwrap(), 1);
        assert_eq!(matches_in_top_k(&r, &l, 50).unwrap(), 2);
        assert_eq!(matches_in_top_k(&r, &l, 0), Err(Error::InvalidK));
        let partial = labels(&[("p1", Positive)]);
        assert_eq!(
            matches_in_top_k(&r, &partial, 3),
            Err(Error::Unlabeled("n".into()))
        );

        // 8 positives leading a 608 image ranking
        let mut items = Vec::new();
        let mut l = BTreeMap::new();
        for i in 0..608 {
            let id = format!("c{i:03}");
            l.insert(id.clone(), if i < 8 { Positive } else { Negative });
            items.push(scored(&id, if i < 8 { 1.0 } else { 0.1 }));
        }
        let r = rank_images(items);
        assert_eq!(matches_in_top_k(&r, &l, 10).unwrap(), 8);
    }

    #[test]
    fn twenty_positives_leading() {
        let mut items = Vec::new();
        let mut l = BTreeMap::new();
        for i in 0..100 {
            let id = format!("x{i:03}");
            l.insert(
                id.clone(),
                if i < 20 {
                    Label::Positive
                } else {
                    Label::Negative
                },
            );
            items.push(scored(&id, 1.0 - i as f64 / 100.0));
        }
        assert_eq!(matches_in_top_k(&rank_images(items), &l, 20).unwrap(), 20);
    }

    #[test]
    fn classify_is_strict() {
        let d = classify(&[pv("a", 0.009), pv("b", 0.01), pv("c", 1.0)], 0.01).unwrap();
        assert_eq!(
            d,
            vec![("a".into(), true), ("b".into(), false), ("c".into(), false)]
        );
        assert!(classify(&[], 0.0).is_err());
        assert!(classify(&[], 1.0).is_err());
    }

    #[test]
    fn confusion_examples() {
        use Label::*;
        let mut l = BTreeMap::new();
        let mut right = Vec::new();
        let mut flipped = Vec::new();
        for i in 0..10 {
            let id = format!("i{i}");
            let pos = i < 5;
            l.insert(id.clone(), if pos { Positive } else { Negative });
            right.push((id.clone(), pos));
            flipped.push((id, !pos));
        }
        assert_eq!(
            confusion(&right, &l).unwrap().0,
            ConfusionMatrix {
                tp: 5,
                fp: 0,
                tn: 5,
                fn_: 0
            }
        );
        assert_eq!(
            confusion(&flipped, &l).unwrap().0,
            ConfusionMatrix {
                tp: 0,
                fp: 5,
                tn: 0,
                fn_: 5
            }
        );

        l.insert("u".into(), Unknown);
        right.push(("u".into(), true));
        let (cm, excluded) = confusion(&right, &l).unwrap();
        assert_eq!((cm.total(), excluded), (10, 1));
        assert!(confusion(&[("zz".into(), true)], &l).is_err());
    }

    #[test]
    fn one_false_alarm_in_608() {
        let mut l = BTreeMap::new();
        let mut d = Vec::new();
        for i in 0..608 {
            let id = format!("c{i}");
            l.insert(
                id.clone(),
                if i < 8 {
                    Label::Positive
                } else {
                    Label::Negative
                },
            );
            d.push((id, i < 9));
        }
        let (cm, _) = confusion(&d, &l).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 8,
                fp: 1,
                tn: 599,
                fn_: 0
            }
        );
    }

    #[test]
    fn published_metric_rows() {
        let m = metrics(&ConfusionMatrix {
            tp: 8,
            fp: 1,
            tn: 599,
            fn_: 0,
        });
        assert!((m.balanced_accuracy - 0.999167).abs() < 5e-7);
        assert!((m.f1 - 0.941176).abs() < 5e-7);
        let m = metrics(&ConfusionMatrix {
            tp: 0,
            fp: 0,
            tn: 600,
            fn_: 8,
        });
        assert_eq!(
            (m.sensitivity, m.specificity, m.balanced_accuracy, m.f1),
            (0.0, 1.0, 0.5, 0.0)
        );
        let m = metrics(&ConfusionMatrix {
            tp: 3,
            fp: 0,
            tn: 4,
            fn_: 0,
        });
        assert_eq!(
            (m.sensitivity, m.specificity, m.balanced_accuracy, m.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn no_positive_calls_is_chance_level() {
        for fnn in 0..=20 {
            for tn in 0..=20 {
                let m = metrics(&ConfusionMatrix {
                    tp: 0,
                    fp: 0,
                    tn,
                    fn_: fnn,
                });
                assert_eq!((m.balanced_accuracy, m.f1), (0.5, 0.0), "tn {tn} fn {fnn}");
            }
        }
    }

    /// Textbook formulas with rational arithmetic kept to the final division.
    fn oracle(tp: usize, fp: usize, tn: usize, fnn: usize) -> (f64, f64, f64, f64) {
        let sens = if tp + fnn == 0 {
            0.0
        } else {
            tp as f64 / (tp + fnn) as f64
        };
        let spec = if tn + fp == 0 {
            1.0
        } else {
            tn as f64 / (tn + fp) as f64
        };
        let f1 = if tp == 0 && fp == 0 && fnn == 0 {
            0.0
        } else {
            let precision = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            if precision + sens == 0.0 || tp == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fnn) as f64
            }
        };
        (sens, spec, (sens + spec) / 2.0, f1)
    }

    #[test]
    fn metrics_match_brute_force_on_small_matrices() {
        for tp in 0..=5 {
            for fp in 0..=5 {
                for tn in 0..=5 {
                    for fnn in 0..=5 {
                        let m = metrics(&ConfusionMatrix {
                            tp,
                            fp,
                            tn,
                            fn_: fnn,
                        });
                        let (s, sp, ba, f1) = oracle(tp, fp, tn, fnn);
                        assert_eq!(
                            (m.sensitivity, m.specificity, m.balanced_accuracy, m.f1),
                            (s, sp, ba, f1)
                        );
                        // harmonic-mean form of F1 agrees too
                        if tp > 0 {
                            let p = tp as f64 / (tp + fp) as f64;
                            let r = tp as f64 / (tp + fnn) as f64;
                            assert!((m.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn random_decisions_balance_near_half() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut l = BTreeMap::new();
        let mut d = Vec::new();
        for i in 0..20_000 {
            let id = format!("r{i}");
            l.insert(
                id.clone(),
                if i % 2 == 0 {
                    Label::Positive
                } else {
                    Label::Negative
                },
            );
            d.push((id, rng.random::<bool>()));
        }
        let m = metrics(&confusion(&d, &l).unwrap().0);
        assert!((m.balanced_accuracy - 0.5).abs() < 0.02);
    }

    #[test]
    fn evaluate_separable_and_constant() {
        let mut l = BTreeMap::new();
        let mut items = Vec::new();
        let mut pvals = Vec::new();
        for i in 0..30 {
            let id = format!("t{i:02}");
            let pos = i % 6 == 0;
            l.insert(
                id.clone(),
                if pos {
                    Label::Positive
                } else {
                    Label::Negative
                },
            );
            items.push(scored(&id, 0.5));
            pvals.push(pv(&id, 1.0));
        }
        let ranked = rank_images(items);
        let rep = evaluate(
            "text",
            "m",
            Mechanism::ReferenceTiles,
            &ranked,
            &pvals,
            &l,
            &[0.01, 0.05, 0.1],
            10,
        )
        .unwrap();
        // constant scores rank by id: t00..t09 contain t00 and t06
        assert_eq!(rep.matches_at_k, 2);
        assert_eq!(rep.at(0.01).unwrap().metrics.f1, 0.0);
        assert_eq!(rep.thresholds.len(), 3);
    }

    proptest! {
        #[test]
        fn ranking_invariant_under_increasing_transform(
            scores in proptest::collection::vec(-10.0f64..10.0, 0..40)
        ) {
            let items: Vec<ScoredImage> =
                scores.iter().enumerate().map(|(i, &s)| scored(&format!("i{i:02}"), s)).collect();
            let transformed: Vec<ScoredImage> = items
                .iter()
                .map(|s| ScoredImage { similarity: libm::exp(s.similarity / 4.0) * 3.0 + 1.0, ..s.clone() })
                .collect();
            let a: Vec<String> = rank_images(items).ids().map(String::from).collect();
            let b: Vec<String> = rank_images(transformed).ids().map(String::from).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn top_k_nondecreasing(flags in proptest::collection::vec(any::<bool>(), 1..40), k in 1usize..40) {
            let mut l = BTreeMap::new();
            let items: Vec<ScoredImage> = flags
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let id = format!("i{i:02}");
                    l.insert(id.clone(), if p { Label::Positive } else { Label::Negative });
                    scored(&id, (i * 7 % 13) as f64)
                })
                .collect();
            let r = rank_images(items);
            let a = matches_in_top_k(&r, &l, k).unwrap();
            let b = matches_in_top_k(&r, &l, k + 1).unwrap();
            prop_assert!(a <= b && a <= k);
        }
    }
}
