//! Central finite-difference oracle for analytic gradients.

use super::Tensor;

/// Compares `analytic` against central differences of `f` at `x` with step
/// `h`, returning the maximum relative error
/// `|a − n| / max(1, |a|, |n|)` over all coordinates.
pub fn finite_diff_check<F>(f: F, x: &Tensor, analytic: &Tensor, h: f64) -> f64
where
    F: Fn(&Tensor) -> f64,
{
    assert_eq!(
        x.shape(),
        analytic.shape(),
        "finite_diff_check: gradient shape mismatch"
    );
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + h;
        let fp = f(&probe);
        probe.data_mut()[i] = orig - h;
        let fm = f(&probe);
        probe.data_mut()[i] = orig;
        let numeric = (fp - fm) / (2.0 * h);
        let a = analytic.data()[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
        worst = worst.max(err);
    }
    worst
}
