//! Small-argument path: Temme's series for `K_μ`, `K_{μ+1}` with
//! `-1/2 ≤ μ < 1/2`, followed by forward recurrence in the order.

use std::f64::consts::PI;

use super::{BesselResult, EvalPath, EvalPoint, QuadratureConfig};
use crate::error::{Error, Result};

/// Taylor coefficients of `1/Γ(z) = Σ_{k≥1} c_k z^k` (index 0 unused).
const RECIP_GAMMA: [f64; 29] = [
    0.0,
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_24,
    0.166_538_611_382_291_48,
    -0.042_197_734_555_544_33,
    -0.009_621_971_527_876_973,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065_2,
    -0.000_215_241_674_114_950_98,
    0.000_128_050_282_388_116_2,
    -2.013_485_478_078_824e-5,
    -1.250_493_482_142_670_6e-6,
    1.133_027_231_981_696e-6,
    -2.056_338_416_977_607e-7,
    6.116_095_104_481_416e-9,
    5.002_007_644_469_223e-9,
    -1.181_274_570_487_02e-9,
    1.043_426_711_691_100_5e-10,
    7.782_263_439_905_071e-12,
    -3.696_805_618_642_206e-12,
    5.100_370_287_454_476e-13,
    -2.058_326_053_566_506_6e-14,
    -5.348_122_539_423_018e-15,
    1.226_778_628_238_260_8e-15,
    -1.181_259_301_697_458_8e-16,
    1.186_692_254_751_600_4e-18,
    1.412_380_655_318_031_9e-18,
];

/// Below this the `μπ/sin(μπ)` and `sinh(σ)/σ` factors take their limit 1.
const SMALL_MU: f64 = 1e-10;

/// Temme's gamma combinations for `|μ| ≤ 1/2`:
///
/// ```text
/// Γ₁(μ) = [1/Γ(1-μ) - 1/Γ(1+μ)] / (2μ)
/// Γ₂(μ) = [1/Γ(1-μ) + 1/Γ(1+μ)] / 2
/// ```
///
/// Both are even in μ. Splitting the `1/Γ` Taylor series into odd and even
/// powers gives them directly, so the removable singularity of Γ₁ at μ = 0
/// never has to be divided out numerically.
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    // Horner from the highest retained power.
    for k in (1..RECIP_GAMMA.len()).rev() {
        if k % 2 == 0 {
            g1 = g1 * mu2 + RECIP_GAMMA[k];
        } else {
            g2 = g2 * mu2 + RECIP_GAMMA[k];
        }
    }
    (-g1, g2)
}

fn check_series_domain(x: f64, cfg: &QuadratureConfig) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("x must be positive, got {x}")));
    }
    if x >= cfg.small_x_threshold {
        return Err(Error::domain(format!(
            "series path requires x < {}, got {x}",
            cfg.small_x_threshold
        )));
    }
    Ok(())
}

/// Raw Temme sums `(Σ c_k f_k, Σ c_k h_k)`, so that `K_μ = S0` and
/// `K_{μ+1} = (2/x) S1`.
fn temme_sums(x: f64, mu: f64, cfg: &QuadratureConfig) -> (f64, f64) {
    let (g1, g2) = temme_gammas(mu);
    let ln_2_over_x = (2.0 / x).ln();
    let sigma = mu * ln_2_over_x;

    let sin_ratio = if mu.abs() < SMALL_MU { 1.0 } else { mu * PI / (mu * PI).sin() };
    let sinh_ratio = if sigma.abs() < SMALL_MU { 1.0 } else { sigma.sinh() / sigma };

    let mut f = sin_ratio * (sigma.cosh() * g1 + sinh_ratio * ln_2_over_x * g2);
    // (x/2)^{∓μ} = e^{±σ}; 1/Γ(1±μ) = Γ₂ ∓ μΓ₁.
    let e_sigma = sigma.exp();
    let mut p = 0.5 * e_sigma / (g2 - mu * g1);
    let mut q = 0.5 / (e_sigma * (g2 + mu * g1));

    let quarter_x2 = 0.25 * x * x;
    let mut c = 1.0;
    let mut sum0 = f;
    let mut sum1 = p;
    for k in 1..cfg.series_cap {
        let kf = k as f64;
        f = (kf * f + p + q) / (kf * kf - mu * mu);
        c *= quarter_x2 / kf;
        p /= kf - mu;
        q /= kf + mu;
        let h = p - kf * f;
        let d0 = c * f;
        let d1 = c * h;
        sum0 += d0;
        sum1 += d1;
        if d0.abs() < cfg.eps_machine * sum0.abs() && d1.abs() < cfg.eps_machine * sum1.abs() {
            break;
        }
    }
    (sum0, sum1)
}

/// Starting values `(K_μ(x), K_{μ+1}(x))` from Temme's series.
///
/// Requires `0 < x < cfg.small_x_threshold` and `-1/2 ≤ μ < 1/2`.
pub fn temme_pair(x: f64, mu: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    check_series_domain(x, cfg)?;
    if !(-0.5..0.5).contains(&mu) {
        return Err(Error::domain(format!("mu must lie in [-0.5, 0.5), got {mu}")));
    }
    let (s0, s1) = temme_sums(x, mu, cfg);
    Ok((s0, 2.0 / x * s1))
}

// ln 2 split so that `k * LN2_HI` is exact for |k| < 2^20.
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
const RESCALE_AT: f64 = 1.340_780_792_994_259_7e154; // 2^512
const RESCALE_EXP: i32 = 512;

/// `K_ν(x)` for `0 < x < cfg.small_x_threshold` via Temme's series and
/// forward recurrence `K_{η+1} = (2η/x) K_η + K_{η-1}`.
///
/// The recurrence runs on a pair of scaled values `K = v · 2^e`, rescaling by
/// an exact power of two whenever the leading value grows past `2^512`, so
/// very small `x` with large `ν` cannot overflow. The log of the final value
/// folds the exponent back in with a split `ln 2` to avoid rounding at the
/// magnitude of `log K`.
pub fn bessel_k_series(x: f64, nu: f64, cfg: &QuadratureConfig) -> Result<BesselResult> {
    check_series_domain(x, cfg)?;
    if x < 1e-100 {
        return Err(Error::domain(format!("series path supports x >= 1e-100, got {x}")));
    }
    let p = EvalPoint::new(x, nu)?;
    let nu = p.nu();
    let order_shift = (nu + 0.5).floor();
    let mu = nu - order_shift;
    let steps = order_shift as usize;

    let (s0, s1) = temme_sums(x, mu, cfg);
    let k_mu = s0;
    let k_mu1 = 2.0 / x * s1;

    let (value, exp2) = match steps {
        0 => (k_mu, 0),
        1 => (k_mu1, 0),
        _ => {
            let mut prev = k_mu;
            let mut cur = k_mu1;
            let mut exp2 = 0i32;
            for i in 1..steps {
                let eta = mu + i as f64;
                let next = 2.0 * eta / x * cur + prev;
                prev = cur;
                cur = next;
                if cur > RESCALE_AT {
                    let s = 2f64.powi(-RESCALE_EXP);
                    cur *= s;
                    prev *= s;
                    exp2 += RESCALE_EXP;
                }
            }
            (cur, exp2)
        }
    };

    let log_value = if exp2 == 0 {
        value.ln()
    } else {
        let k = exp2 as f64;
        k * LN2_HI + (value.ln() + k * LN2_LO)
    };
    Ok(BesselResult::new(log_value, EvalPath::Series, &p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn half_order_closed_form(x: f64, n: u32) -> f64 {
        // K_{n+1/2}(x) = sqrt(pi/2x) e^{-x} Σ_k (n+k)! / (k! (n-k)! (2x)^k)
        let mut s = 0.0;
        for k in 0..=n {
            let num: f64 = ((n - k + 1)..=(n + k)).map(|v| v as f64).product();
            let den: f64 = (1..=k).map(|v| v as f64).product();
            s += num / den / (2.0 * x).powi(k as i32);
        }
        (PI / (2.0 * x)).sqrt() * (-x).exp() * s
    }

    #[test]
    fn gammas_at_zero() {
        let (g1, g2) = temme_gammas(0.0);
        assert!((g1 + 0.577_215_664_901_532_9).abs() < 1e-16);
        assert_eq!(g2, 1.0);
    }

    #[test]
    fn gammas_match_reciprocal_gamma() {
        // 1/Γ(1/2) = 1/sqrt(pi), 1/Γ(3/2) = 2/sqrt(pi).
        let mu = 0.5;
        let (g1, g2) = temme_gammas(mu);
        let rp = g2 - mu * g1;
        let rm = g2 + mu * g1;
        let sqrt_pi = PI.sqrt();
        assert!((rp - 2.0 / sqrt_pi).abs() < 2e-16, "{rp}");
        assert!((rm - 1.0 / sqrt_pi).abs() < 2e-16, "{rm}");
    }

    #[test]
    fn pair_integer_order() {
        // 30-digit reference values.
        let (k0, k1) = temme_pair(0.05, 0.0, &cfg()).unwrap();
        assert!((k0 - 3.114_234_029_471_99).abs() < 1e-12, "{k0}");
        assert!((k1 - 19.909_674_325_882_5).abs() < 1e-11, "{k1}");
    }

    #[test]
    fn pair_half_order() {
        let (k, k1) = temme_pair(0.05, -0.5, &cfg()).unwrap();
        let exact = half_order_closed_form(0.05, 0);
        assert!((k / exact - 1.0).abs() < 1e-14, "{k} vs {exact}");
        assert!((k - 5.331_632_569_105_758).abs() < 1e-12);
        assert!((k1 / exact - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pair_satisfies_recurrence() {
        // K_{1.3} = (2·0.3/x) K_{0.3} + K_{-0.7}, and K_{-0.7} = K_{0.7}.
        let x = 0.05;
        let (k03, k13) = temme_pair(x, 0.3, &cfg()).unwrap();
        let (_, k07) = temme_pair(x, -0.3, &cfg()).unwrap();
        let defect = (k13 - (2.0 * 0.3 / x * k03 + k07)).abs() / k13;
        assert!(defect < 1e-14, "{defect}");
    }

    #[test]
    fn pair_domain_errors() {
        assert!(temme_pair(0.0, 0.0, &cfg()).is_err());
        assert!(temme_pair(0.1, 0.0, &cfg()).is_err());
        assert!(temme_pair(0.05, 0.5, &cfg()).is_err());
        assert!(temme_pair(0.05, -0.51, &cfg()).is_err());
    }

    #[test]
    fn series_half_orders() {
        for (nu, n, expected) in [(0.5, 0, 5.331_632_569_105_758), (2.5, 2, 6_723.188_669_642_361)] {
            let r = bessel_k_series(0.05, nu, &cfg()).unwrap();
            assert_eq!(r.path, EvalPath::Series);
            let exact = half_order_closed_form(0.05, n);
            assert!((r.value / exact - 1.0).abs() < 1e-13, "nu={nu}");
            assert!((r.value / expected - 1.0).abs() < 1e-13, "nu={nu}: {}", r.value);
        }
    }

    #[test]
    fn series_integer_order_one() {
        let r = bessel_k_series(0.09, 1.0, &cfg()).unwrap();
        assert!((r.value - 10.974_864_628_789_608).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn series_tiny_x_large_order_stays_finite_in_log() {
        let r = bessel_k_series(1e-60, 20.0, &cfg()).unwrap();
        assert!(r.log_value.is_finite());
        assert!(r.overflowed());
        // Leading term: K_ν(x) ≈ Γ(ν)/2 · (2/x)^ν.
        let lead = statrs::function::gamma::ln_gamma(20.0) - 2f64.ln() + 20.0 * (2e60f64).ln();
        assert!((r.log_value - lead).abs() < 1e-9, "{} vs {lead}", r.log_value);
    }

    #[test]
    fn series_domain_errors() {
        assert!(bessel_k_series(0.1, 1.0, &cfg()).is_err());
        assert!(bessel_k_series(-0.01, 1.0, &cfg()).is_err());
        assert!(bessel_k_series(1e-101, 1.0, &cfg()).is_err());
    }
}
