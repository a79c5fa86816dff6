//! Rank classification by a single cutoff on trace-sum scores.
//!
//! Rank-0 curves have systematically larger Mestre–Nagao sums than
//! rank-1 curves, so a one-dimensional threshold separates the classes:
//! predict rank 0 exactly when `S(B) > C`. [`evaluate_cutoff`] scores a
//! given threshold; [`optimal_cutoff`] finds the accuracy-maximizing one.
//!
//! Only the order of the scores matters: candidate thresholds are the
//! midpoints between consecutive distinct scores plus one sentinel below
//! the minimum and one above the maximum (so "all rank 0" and "all
//! rank 1" are always among the candidates, making the optimum at least
//! as accurate as the majority-class baseline). Ties in accuracy resolve
//! to the smallest cutoff, which makes the result deterministic.

use crate::error::{Error, Result};

/// Outcome of classifying a family at one `B` with one cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierReport {
    /// The trace bound the scores were computed at (carried metadata).
    pub b: f64,
    /// Threshold: predict rank 0 iff `score > cutoff`.
    pub cutoff: f64,
    /// Fraction of curves classified correctly.
    pub accuracy: f64,
    /// Rank-0 curves predicted rank 0.
    pub true_rank0: usize,
    /// Rank-1 curves predicted rank 0.
    pub false_rank0: usize,
    /// Rank-1 curves predicted rank 1.
    pub true_rank1: usize,
    /// Rank-0 curves predicted rank 1.
    pub false_rank1: usize,
    pub n_rank0: usize,
    pub n_rank1: usize,
}

fn check_scores(scores: &[(f64, u8)]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::DegenerateInput("no scores to classify".into()));
    }
    for &(s, r) in scores {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite score {s}")));
        }
        if r > 1 {
            return Err(Error::InvalidArgument(format!(
                "rank labels must be 0 or 1, got {r}"
            )));
        }
    }
    Ok(())
}

/// Classify `(score, rank)` pairs with a fixed cutoff: predict rank 0
/// exactly when `score > cutoff`.
pub fn evaluate_cutoff(scores: &[(f64, u8)], b: f64, cutoff: f64) -> Result<ClassifierReport> {
    check_scores(scores)?;
    if !cutoff.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite cutoff {cutoff}")));
    }
    let mut rep = ClassifierReport {
        b,
        cutoff,
        accuracy: 0.0,
        true_rank0: 0,
        false_rank0: 0,
        true_rank1: 0,
        false_rank1: 0,
        n_rank0: 0,
        n_rank1: 0,
    };
    for &(s, r) in scores {
        let predicted_zero = s > cutoff;
        match (r, predicted_zero) {
            (0, true) => rep.true_rank0 += 1,
            (0, false) => rep.false_rank1 += 1,
            (1, true) => rep.false_rank0 += 1,
            (1, false) => rep.true_rank1 += 1,
            _ => unreachable!("ranks validated above"),
        }
        if r == 0 {
            rep.n_rank0 += 1;
        } else {
            rep.n_rank1 += 1;
        }
    }
    rep.accuracy = (rep.true_rank0 + rep.true_rank1) as f64 / scores.len() as f64;
    Ok(rep)
}

/// Accuracy-maximizing cutoff over the canonical candidate set
/// (midpoints of consecutive distinct scores plus sentinels on both
/// sides), breaking ties toward the smallest cutoff.
///
/// Requires both classes to be present: with a single class any cutoff on
/// the correct side is trivially perfect and the "optimum" meaningless.
pub fn optimal_cutoff(scores: &[(f64, u8)], b: f64) -> Result<ClassifierReport> {
    check_scores(scores)?;
    let has = |class: u8| scores.iter().any(|&(_, r)| r == class);
    if !has(0) || !has(1) {
        return Err(Error::DegenerateInput(
            "cutoff optimization needs both rank classes in the training scores".into(),
        ));
    }
    let mut distinct: Vec<f64> = scores.iter().map(|&(s, _)| s).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    distinct.dedup();

    let mut candidates = Vec::with_capacity(distinct.len() + 1);
    candidates.push(distinct[0] - 1.0);
    candidates.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(distinct[distinct.len() - 1] + 1.0);

    let mut best: Option<ClassifierReport> = None;
    for c in candidates {
        let rep = evaluate_cutoff(scores, b, c)?;
        let better = match &best {
            None => true,
            // Strict improvement only: candidates ascend, so keeping the
            // incumbent on ties selects the smallest optimal cutoff.
            Some(cur) => rep.accuracy > cur.accuracy,
        };
        if better {
            best = Some(rep);
        }
    }
    Ok(best.expect("candidate set is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair_is_classified_perfectly_at_the_midpoint() {
        let rep = optimal_cutoff(&[(1.0, 0), (-1.0, 1)], 10.0).unwrap();
        assert_eq!(rep.cutoff, 0.0);
        assert_eq!(rep.accuracy, 1.0);
        assert_eq!(
            (rep.true_rank0, rep.true_rank1, rep.false_rank0, rep.false_rank1),
            (1, 1, 0, 0)
        );
    }

    #[test]
    fn inverted_pair_cannot_beat_half() {
        let rep = optimal_cutoff(&[(1.0, 1), (-1.0, 0)], 10.0).unwrap();
        assert_eq!(rep.accuracy, 0.5);
        // Ties resolve to the smallest candidate cutoff (below the min).
        assert_eq!(rep.cutoff, -2.0);
    }

    #[test]
    fn constant_scores_fall_back_to_the_majority_class() {
        let rep = optimal_cutoff(&[(5.0, 0), (5.0, 0), (5.0, 1)], 10.0).unwrap();
        assert!((rep.accuracy - 2.0 / 3.0).abs() < 1e-15);
        // The winning sentinel predicts everything rank 0.
        assert_eq!(rep.cutoff, 4.0);
        assert_eq!(rep.true_rank0, 2);
        assert_eq!(rep.false_rank0, 1);
    }

    #[test]
    fn optimum_is_at_least_the_majority_baseline() {
        let scores: Vec<(f64, u8)> = (0..20)
            .map(|i| ((i as f64 * 0.7).sin(), u8::from(i % 3 == 0)))
            .collect();
        let n1 = scores.iter().filter(|&&(_, r)| r == 1).count();
        let n0 = scores.len() - n1;
        let baseline = n0.max(n1) as f64 / scores.len() as f64;
        let rep = optimal_cutoff(&scores, 10.0).unwrap();
        assert!(rep.accuracy >= baseline);
    }

    #[test]
    fn confusion_counts_partition_the_classes() {
        let scores = [(0.3, 0), (0.1, 1), (0.2, 0), (-0.4, 1), (0.15, 1)];
        let rep = evaluate_cutoff(&scores, 10.0, 0.12).unwrap();
        assert_eq!(rep.true_rank0 + rep.false_rank1, rep.n_rank0);
        assert_eq!(rep.true_rank1 + rep.false_rank0, rep.n_rank1);
        assert_eq!(rep.n_rank0 + rep.n_rank1, scores.len());
        let correct = rep.true_rank0 + rep.true_rank1;
        assert!((rep.accuracy - correct as f64 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_scores_predict_rank_1() {
        // Prediction is strict: score == cutoff means "not above".
        let rep = evaluate_cutoff(&[(0.5, 1)], 10.0, 0.5).unwrap();
        assert_eq!(rep.true_rank1, 1);
        assert_eq!(rep.accuracy, 1.0);
    }

    #[test]
    fn evaluating_the_optimal_cutoff_reproduces_its_report() {
        let scores: Vec<(f64, u8)> = (0..40)
            .map(|i| {
                let x = (i as f64 * 1.37).sin() + if i % 2 == 0 { 0.8 } else { -0.8 };
                (x, u8::from(i % 2 == 1))
            })
            .collect();
        let opt = optimal_cutoff(&scores, 10.0).unwrap();
        let again = evaluate_cutoff(&scores, 10.0, opt.cutoff).unwrap();
        assert_eq!(opt, again);
    }

    #[test]
    fn degenerate_and_invalid_inputs_are_rejected() {
        assert!(matches!(
            optimal_cutoff(&[], 10.0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            optimal_cutoff(&[(1.0, 0), (2.0, 0)], 10.0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            evaluate_cutoff(&[(f64::NAN, 0)], 10.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            evaluate_cutoff(&[(1.0, 2)], 10.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            evaluate_cutoff(&[(1.0, 0)], 10.0, f64::INFINITY),
            Err(Error::InvalidArgument(_))
        ));
    }
}
