//! Rate terms, limit laws and confidence intervals for p̂.

use std::fmt;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::estimators::{delta_schedule, PlugIn};
use crate::kernels::ModelParams;

/// Default finite-sample proxy for "one rate term dominates the others".
pub const DEFAULT_SEPARATION: f64 = 5.0;

/// Which rate term drives the fluctuations of p̂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// 1/√K: graph sampling noise.
    I,
    /// N/(t√K): time-averaging noise of the first two statistics.
    II,
    /// (N/K)√(Δ_t/t): block-variance noise of the third statistic.
    III,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::I => "i",
            Regime::II => "ii",
            Regime::III => "iii",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "1" => Ok(Regime::I),
            "ii" | "2" => Ok(Regime::II),
            "iii" | "3" => Ok(Regime::III),
            _ => Err(invalid(format!("unknown regime {s:?} (expected i, ii or iii)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Single(Regime),
    Mixed,
}

impl fmt::Display for Dominance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dominance::Single(r) => r.fmt(f),
            Dominance::Mixed => f.write_str("mixed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    /// 1/√K
    pub r1: f64,
    /// (N/K) √(Δ_t/t)
    pub r2: f64,
    /// N/(t√K)
    pub r3: f64,
    /// K/N
    pub gamma: f64,
    pub delta_t: f64,
    /// max / (sum − max)
    pub separation: f64,
    pub threshold: f64,
    pub dominant: Dominance,
}

impl RateTerms {
    pub fn largest(&self) -> Regime {
        if self.r1 >= self.r2 && self.r1 >= self.r3 {
            Regime::I
        } else if self.r3 >= self.r2 {
            Regime::II
        } else {
            Regime::III
        }
    }
}

pub fn rate_terms(n: usize, k: usize, t: f64, q: u32, threshold: f64) -> Result<RateTerms> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= K <= N, got K = {k}, N = {n}")));
    }
    let schedule = delta_schedule(t, q)?;
    let (nf, kf) = (n as f64, k as f64);
    let r1 = 1.0 / kf.sqrt();
    let r2 = nf / kf * (schedule.delta / t).sqrt();
    let r3 = nf / (t * kf.sqrt());
    let max = r1.max(r2).max(r3);
    let separation = max / (r1 + r2 + r3 - max);
    let mut terms = RateTerms {
        r1,
        r2,
        r3,
        gamma: kf / nf,
        delta_t: schedule.delta,
        separation,
        threshold,
        dominant: Dominance::Mixed,
    };
    if separation >= threshold {
        terms.dominant = Dominance::Single(terms.largest());
    }
    Ok(terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalLaw {
    pub regime: Regime,
    /// Multiplier applied to (p̂ − p).
    pub scale: f64,
    /// Variance of the Gaussian limit of scale·(p̂ − p).
    pub variance: f64,
}

impl TheoreticalLaw {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// The limit law for the dominant regime of `terms`.
pub fn theoretical_law(params: &ModelParams, terms: &RateTerms) -> Result<TheoreticalLaw> {
    match terms.dominant {
        Dominance::Single(regime) => law_for_regime(params, terms, regime),
        Dominance::Mixed => Err(Error::MixedRegime {
            ratio: terms.separation,
            threshold: terms.threshold,
        }),
    }
}

/// The limit law of a given regime, regardless of which term actually dominates.
pub fn law_for_regime(
    params: &ModelParams,
    terms: &RateTerms,
    regime: Regime,
) -> Result<TheoreticalLaw> {
    let c = params.check_subcritical()?;
    let (mu, lambda, p) = (params.mu, params.lambda(), params.p);
    if !(p > 0.0) {
        return Err(invalid("limit laws require p > 0"));
    }
    let d = 1.0 - c.branching;
    let (scale, variance) = match regime {
        Regime::I => (1.0 / terms.r1, (p * (1.0 - p)).powi(2)),
        Regime::II => {
            if !(lambda > 0.0) {
                return Err(invalid("regime ii requires Λ > 0"));
            }
            (1.0 / terms.r3, 2.0 * d * d / (mu * mu * lambda.powi(4)))
        }
        Regime::III => {
            if !(lambda > 0.0) {
                return Err(invalid("regime iii requires Λ > 0"));
            }
            let g = terms.gamma;
            if !(0.0..=1.0).contains(&g) {
                return Err(invalid(format!("gamma must lie in [0, 1], got {g}")));
            }
            let mix = (1.0 - g) * d.powi(3) + g * d;
            (1.0 / terms.r2, 6.0 * (1.0 - p).powi(2) / (lambda * lambda) * mix * mix)
        }
    };
    Ok(TheoreticalLaw { regime, scale, variance })
}

/// Rate geometry shared by the normalizer and the confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Design {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub delta_t: f64,
    pub gamma: f64,
}

impl Design {
    pub fn new(n: usize, k: usize, t: f64, q: u32) -> Result<Self> {
        if k == 0 || k > n {
            return Err(invalid(format!("need 1 <= K <= N, got K = {k}, N = {n}")));
        }
        let schedule = delta_schedule(t, q)?;
        Ok(Design { n, k, t, delta_t: schedule.delta, gamma: k as f64 / n as f64 })
    }
}

/// The three plug-in standard-deviation terms of p̂.
pub fn plug_in_terms(est: &PlugIn, design: &Design) -> Result<[f64; 3]> {
    let PlugIn { mu_hat, lambda_hat, p_hat } = *est;
    if !(design.t > 0.0 && design.delta_t > 0.0 && design.k > 0 && design.n >= design.k) {
        return Err(invalid("design parameters must be positive with K <= N"));
    }
    if mu_hat == 0.0 && lambda_hat == 0.0 && p_hat == 0.0 {
        return Ok([0.0; 3]);
    }
    if !(mu_hat > 0.0 && lambda_hat > 0.0) {
        return Err(Error::DegenerateEstimate(format!(
            "μ̂ = {mu_hat}, Λ̂ = {lambda_hat}: plug-in denominators must be positive"
        )));
    }
    let d = 1.0 - lambda_hat * p_hat;
    if d < 0.0 {
        return Err(Error::DegenerateEstimate(format!(
            "Λ̂p̂ = {} exceeds 1",
            lambda_hat * p_hat
        )));
    }
    let (nf, kf) = (design.n as f64, design.k as f64);
    let g = design.gamma;
    let t1 = p_hat * (1.0 - p_hat) / kf.sqrt();
    let t2 = 2f64.sqrt() * d / (mu_hat * lambda_hat * lambda_hat) * nf / (design.t * kf.sqrt());
    let t3 = (1.0 - p_hat) / lambda_hat
        * ((1.0 - g) * d.powi(3) + g * d)
        * nf
        / kf
        * (6.0 * design.delta_t / design.t).sqrt();
    Ok([t1, t2, t3])
}

/// max of the three plug-in terms; (p̂ − p) divided by it is asymptotically N(0, 1).
pub fn combined_normalizer(est: &PlugIn, design: &Design) -> Result<f64> {
    let t = plug_in_terms(est, design)?;
    Ok(t[0].max(t[1]).max(t[2]))
}

/// Half-width I = Φ⁻¹(1 − α/2) · (sum of the plug-in terms).
pub fn confidence_interval(est: &PlugIn, design: &Design, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let t = plug_in_terms(est, design)?;
    Ok(normal_quantile(1.0 - alpha / 2.0) * (t[0] + t[1] + t[2]))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley step against the erfc-based CDF.
pub fn normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    if p == 0.5 {
        return 0.0;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}
