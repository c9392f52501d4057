//! Masked depth-error metrics with the intersection-mask protocol.
//!
//! All scores are computed over `M = mask_gt ∧ mask_method`:
//! AbsRel `= E_M[|Δ|/(D+ε)]`, RMSE `= sqrt(E_M[Δ²])`,
//! Log10 `= E_M[|log₁₀ D̂ − log₁₀ D|]`, and the threshold accuracy
//! `δ<1.25 = E_M[1(max(D̂/D, D/D̂) < 1.25)]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DELTA_THRESHOLD: f64 = 1.25;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty evaluation mask")]
    EmptyMask,
    #[error("non-positive depth {value} at masked pixel {index}")]
    NonPositiveDepth { index: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub abs_rel: f64,
    pub rmse: f64,
    pub log10: f64,
    pub delta_1_25: f64,
    pub pixels: usize,
}

/// `Z⁻¹ Σ M·f` with `Z = Σ M`.
pub fn masked_mean(values: &[f64], mask: &[bool]) -> Result<f64, MetricsError> {
    if values.len() != mask.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} values vs {} mask entries",
            values.len(),
            mask.len()
        )));
    }
    let mut sum = 0.0;
    let mut z = 0usize;
    for (v, &m) in values.iter().zip(mask) {
        if m {
            sum += v;
            z += 1;
        }
    }
    if z == 0 {
        return Err(MetricsError::EmptyMask);
    }
    Ok(sum / z as f64)
}

/// Full metric suite over the intersection mask. Depths must be strictly
/// positive inside the mask; values outside it never influence the result.
pub fn metrics(
    pred: &[f64],
    gt: &[f64],
    mask_gt: &[bool],
    mask_method: &[bool],
    eps: f64,
) -> Result<MetricsReport, MetricsError> {
    let n = gt.len();
    if pred.len() != n || mask_gt.len() != n || mask_method.len() != n {
        return Err(MetricsError::ShapeMismatch(format!(
            "pred {} gt {} mask_gt {} mask_method {}",
            pred.len(),
            n,
            mask_gt.len(),
            mask_method.len()
        )));
    }
    let mut z = 0usize;
    let mut abs_rel = 0.0;
    let mut sq = 0.0;
    let mut log10 = 0.0;
    let mut hits = 0usize;
    for i in 0..n {
        if !(mask_gt[i] && mask_method[i]) {
            continue;
        }
        let (d_hat, d) = (pred[i], gt[i]);
        for v in [d_hat, d] {
            if !(v > 0.0) {
                return Err(MetricsError::NonPositiveDepth { index: i, value: v });
            }
        }
        let diff = d_hat - d;
        abs_rel += diff.abs() / (d + eps);
        sq += diff * diff;
        log10 += (d_hat.log10() - d.log10()).abs();
        let tau = (d_hat / d).max(d / d_hat);
        if tau < DELTA_THRESHOLD {
            hits += 1;
        }
        z += 1;
    }
    if z == 0 {
        return Err(MetricsError::EmptyMask);
    }
    let zf = z as f64;
    Ok(MetricsReport {
        abs_rel: abs_rel / zf,
        rmse: (sq / zf).sqrt(),
        log10: log10 / zf,
        delta_1_25: hits as f64 / zf,
        pixels: z,
    })
}

/// Arithmetic mean of per-scene reports (the per-scene aggregation protocol);
/// `pixels` accumulates the total count.
pub fn average_reports(reports: &[MetricsReport]) -> Result<MetricsReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyMask);
    }
    let n = reports.len() as f64;
    Ok(MetricsReport {
        abs_rel: reports.iter().map(|r| r.abs_rel).sum::<f64>() / n,
        rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / n,
        log10: reports.iter().map(|r| r.log10).sum::<f64>() / n,
        delta_1_25: reports.iter().map(|r| r.delta_1_25).sum::<f64>() / n,
        pixels: reports.iter().map(|r| r.pixels).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn masked_mean_basics() {
        let f = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(masked_mean(&f, &[true; 4]).unwrap(), 2.5);
        assert_abs_diff_eq!(
            masked_mean(&f, &[false, false, true, false]).unwrap(),
            3.0
        );
        assert_abs_diff_eq!(
            masked_mean(&f, &[true, false, false, true]).unwrap(),
            2.5
        );
        assert!(matches!(
            masked_mean(&f, &[false; 4]),
            Err(MetricsError::EmptyMask)
        ));
    }

    #[test]
    fn perfect_prediction_scores_zero_errors_and_full_delta() {
        let gt = [1.0, 2.0, 3.0];
        let m = [true; 3];
        let r = metrics(&gt, &gt, &m, &m, DEFAULT_EPS).unwrap();
        assert_eq!(r.abs_rel, 0.0);
        assert_eq!(r.rmse, 0.0);
        assert_eq!(r.log10, 0.0);
        assert_eq!(r.delta_1_25, 1.0);
        assert_eq!(r.pixels, 3);
    }

    #[test]
    fn uniformly_scaled_prediction_matches_closed_forms() {
        let gt: Vec<f64> = (0..64).map(|i| 1.0 + (i as f64) * 0.05).collect();
        let pred: Vec<f64> = gt.iter().map(|d| 1.3 * d).collect();
        let m = vec![true; 64];
        let r = metrics(&pred, &gt, &m, &m, DEFAULT_EPS).unwrap();
        assert!((r.abs_rel - 0.3).abs() < 1e-6, "abs_rel {}", r.abs_rel);
        assert_eq!(r.delta_1_25, 0.0, "τ = 1.3 is not < 1.25");
        assert_abs_diff_eq!(r.log10, 1.3f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn single_pixel_rmse() {
        let r = metrics(&[3.0], &[2.0], &[true], &[true], DEFAULT_EPS).unwrap();
        assert_abs_diff_eq!(r.rmse, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn values_outside_the_intersection_are_ignored() {
        let gt = [2.0, 999.0, 2.0, -5.0];
        let pred = [2.0, -123.0, 2.0, f64::NAN];
        let mgt = [true, false, true, true];
        let mm = [true, true, true, false];
        let r = metrics(&pred, &gt, &mgt, &mm, DEFAULT_EPS).unwrap();
        assert_eq!(r.pixels, 2);
        assert_eq!(r.abs_rel, 0.0);
    }

    #[test]
    fn delta_is_scale_symmetric() {
        let gt: Vec<f64> = (0..32).map(|i| 1.0 + (i as f64).sin().abs() * 3.0).collect();
        let pred: Vec<f64> = gt
            .iter()
            .enumerate()
            .map(|(i, d)| d * (1.0 + 0.4 * ((i * 37 % 11) as f64 / 11.0 - 0.5)))
            .collect();
        let m = vec![true; 32];
        let a = metrics(&pred, &gt, &m, &m, DEFAULT_EPS).unwrap();
        let b = metrics(&gt, &pred, &m, &m, DEFAULT_EPS).unwrap();
        assert_eq!(a.delta_1_25, b.delta_1_25);
    }

    #[test]
    fn nonpositive_depth_inside_mask_is_a_domain_error() {
        assert!(matches!(
            metrics(&[0.0], &[1.0], &[true], &[true], DEFAULT_EPS),
            Err(MetricsError::NonPositiveDepth { .. })
        ));
        assert!(matches!(
            metrics(&[1.0], &[-2.0], &[true], &[true], DEFAULT_EPS),
            Err(MetricsError::NonPositiveDepth { .. })
        ));
    }

    #[test]
    fn empty_intersection_is_an_error() {
        assert!(matches!(
            metrics(&[1.0], &[1.0], &[true], &[false], DEFAULT_EPS),
            Err(MetricsError::EmptyMask)
        ));
    }

    #[test]
    fn report_average_is_arithmetic() {
        let a = MetricsReport {
            abs_rel: 0.1,
            rmse: 1.0,
            log10: 0.05,
            delta_1_25: 0.9,
            pixels: 100,
        };
        let b = MetricsReport {
            abs_rel: 0.3,
            rmse: 3.0,
            log10: 0.15,
            delta_1_25: 0.7,
            pixels: 50,
        };
        let avg = average_reports(&[a, b]).unwrap();
        assert_abs_diff_eq!(avg.abs_rel, 0.2);
        assert_abs_diff_eq!(avg.rmse, 2.0);
        assert_abs_diff_eq!(avg.delta_1_25, 0.8);
        assert_eq!(avg.pixels, 150);
    }

    #[test]
    fn report_serializes_with_the_expected_keys() {
        let r = MetricsReport {
            abs_rel: 0.1,
            rmse: 1.0,
            log10: 0.05,
            delta_1_25: 0.9,
            pixels: 10,
        };
        let s = serde_json::to_string(&r).unwrap();
        for key in ["abs_rel", "rmse", "log10", "delta_1_25", "pixels"] {
            assert!(s.contains(key), "missing {key} in {s}");
        }
    }
}
