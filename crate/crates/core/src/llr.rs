//! Scalar message arithmetic shared by every decoder variant.

/// Inputs at least this close to ±1 saturate the check-node update instead
/// of reaching atanh, which would overflow (or NaN on arguments past ±1
/// produced by cached-product division noise).
const ATANH_SAT: f64 = 1.0 - 1e-15;

#[inline]
pub(crate) fn clip(x: f64, lmax: f64) -> f64 {
    x.clamp(-lmax, lmax)
}

#[inline]
pub(crate) fn tanh_half(m: f64) -> f64 {
    (0.5 * m).tanh()
}

/// Check-node output 2·atanh(signed_prod), saturated and clipped to ±lmax.
///
/// The saturation threshold sits far below where 2·atanh crosses typical
/// clip values, so for any lmax ≤ 60 the output is exactly ±lmax on both
/// sides of the threshold and the cutover is seamless.
#[inline]
pub(crate) fn check_message(signed_prod: f64, lmax: f64) -> f64 {
    if signed_prod >= ATANH_SAT {
        return lmax;
    }
    if signed_prod <= -ATANH_SAT {
        return -lmax;
    }
    clip(2.0 * signed_prod.atanh(), lmax)
}

/// log(e^u + e^v) evaluated without overflow.
#[inline]
pub(crate) fn log_sum_exp2(u: f64, v: f64) -> f64 {
    let (hi, lo) = if u >= v { (u, v) } else { (v, u) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_message_saturates_and_clips() {
        assert_eq!(check_message(1.0, 30.0), 30.0);
        assert_eq!(check_message(-1.0, 30.0), -30.0);
        assert_eq!(check_message(1.0 + 1e-16, 30.0), 30.0);
        // Just below saturation still lands past the clip and pins to lmax.
        assert_eq!(check_message(1.0 - 2e-15, 30.0), 30.0);
        let mid = check_message(0.5, 30.0);
        assert!((mid - 2.0 * 0.5f64.atanh()).abs() < 1e-15);
        assert_eq!(check_message(-0.5, 30.0), -mid);
    }

    #[test]
    fn log_sum_exp_is_stable_and_symmetric() {
        assert!((log_sum_exp2(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_sum_exp2(700.0, -700.0), 700.0);
        assert_eq!(log_sum_exp2(3.0, 1.0), log_sum_exp2(1.0, 3.0));
        let v = log_sum_exp2(2.0, 2.5);
        assert!((v - (2f64.exp() + 2.5f64.exp()).ln()).abs() < 1e-12);
    }
}
