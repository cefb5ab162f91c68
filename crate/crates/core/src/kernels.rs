//! Memory kernels φ: [0, ∞) → [0, ∞) and the model parameters built on them.
//!
//! Every variant is non-increasing with finite moments of all orders, which is
//! what the thinning simulator and the block-size schedule rely on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default moment index used by the block-size schedule.
pub const DEFAULT_Q: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// φ(t) = amplitude · exp(−rate · t)
    Exponential { rate: f64, amplitude: f64 },
    /// φ(t) = height · 1[0, width](t)
    Indicator { width: f64, height: f64 },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelStats {
    /// Total mass Λ = ∫ φ.
    pub lambda: f64,
    /// ∫ s^q φ(s) ds.
    pub q_moment: f64,
    /// ∫ φ².
    pub l2_norm: f64,
}

impl Kernel {
    pub fn exponential(rate: f64, amplitude: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!("exponential rate must be > 0, got {rate}")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid(format!("exponential amplitude must be >= 0, got {amplitude}")));
        }
        Ok(Kernel::Exponential { rate, amplitude })
    }

    /// Exponential kernel parameterized by its total mass Λ.
    pub fn exponential_with_mass(rate: f64, lambda: f64) -> Result<Self> {
        Self::exponential(rate, lambda * rate)
    }

    pub fn indicator(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!("indicator width must be > 0, got {width}")));
        }
        if !(height >= 0.0 && height.is_finite()) {
            return Err(invalid(format!("indicator height must be >= 0, got {height}")));
        }
        Ok(Kernel::Indicator { width, height })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Exponential { rate, amplitude } => Self::exponential(rate, amplitude).map(|_| ()),
            Kernel::Indicator { width, height } => Self::indicator(width, height).map(|_| ()),
            Kernel::Zero => Ok(()),
        }
    }

    /// φ(t), rejecting negative or non-finite times.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(invalid(format!("kernel evaluated at negative time {t}")));
        }
        Ok(self.value(t))
    }

    /// φ(t) for t ≥ 0 without argument checks.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Kernel::Exponential { rate, amplitude } => amplitude * (-rate * t).exp(),
            Kernel::Indicator { width, height } => {
                if t <= width {
                    height
                } else {
                    0.0
                }
            }
            Kernel::Zero => 0.0,
        }
    }

    /// φ(0), the largest value the kernel takes.
    pub fn peak(&self) -> f64 {
        self.value(0.0)
    }

    /// Λ = ∫₀^∞ φ.
    pub fn mass(&self) -> f64 {
        match *self {
            Kernel::Exponential { rate, amplitude } => amplitude / rate,
            Kernel::Indicator { width, height } => width * height,
            Kernel::Zero => 0.0,
        }
    }

    /// ∫_a^b φ(s) ds for 0 ≤ a ≤ b.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        debug_assert!(0.0 <= a && a <= b);
        match *self {
            Kernel::Exponential { rate, amplitude } => {
                amplitude / rate * ((-rate * a).exp() - (-rate * b).exp())
            }
            Kernel::Indicator { width, height } => height * (b.min(width) - a.min(width)),
            Kernel::Zero => 0.0,
        }
    }

    pub fn stats(&self, q: u32) -> KernelStats {
        match *self {
            Kernel::Exponential { rate, amplitude } => {
                // α q! / β^{q+1}, accumulated as a product to avoid overflow
                let mut moment = amplitude / rate;
                for k in 1..=q {
                    moment *= k as f64 / rate;
                }
                KernelStats {
                    lambda: amplitude / rate,
                    q_moment: moment,
                    l2_norm: amplitude * amplitude / (2.0 * rate),
                }
            }
            Kernel::Indicator { width, height } => KernelStats {
                lambda: width * height,
                q_moment: height * width.powi(q as i32 + 1) / (q as f64 + 1.0),
                l2_norm: height * height * width,
            },
            Kernel::Zero => KernelStats { lambda: 0.0, q_moment: 0.0, l2_norm: 0.0 },
        }
    }

    /// Draws a delay from the probability density φ/Λ. Requires Λ > 0.
    pub fn sample_delay<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Kernel::Exponential { rate, .. } => {
                let u: f64 = rng.random();
                -(1.0 - u).ln() / rate
            }
            Kernel::Indicator { width, .. } => width * rng.random::<f64>(),
            Kernel::Zero => unreachable!("zero kernel has no offspring"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mass() == 0.0
    }
}

/// Derived constants of a subcritical model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubcriticalConstants {
    /// Λp.
    pub branching: f64,
    /// a = (1 + Λp)/2.
    pub a: f64,
    /// c_{p,Λ} = (1 − Λp)²/(2Λ²); infinite when Λ = 0.
    pub c_p_lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub p: f64,
    pub kernel: Kernel,
    pub q_moment: u32,
}

impl ModelParams {
    pub fn new(mu: f64, p: f64, kernel: Kernel) -> Result<Self> {
        let params = ModelParams { mu, p, kernel, q_moment: DEFAULT_Q };
        params.validate()?;
        Ok(params)
    }

    pub fn with_q(mut self, q: u32) -> Self {
        self.q_moment = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.q_moment < 1 {
            return Err(invalid("q_moment must be >= 1"));
        }
        self.kernel.validate()
    }

    pub fn lambda(&self) -> f64 {
        self.kernel.mass()
    }

    pub fn branching(&self) -> f64 {
        self.lambda() * self.p
    }

    pub fn check_subcritical(&self) -> Result<SubcriticalConstants> {
        let lambda = self.lambda();
        let branching = lambda * self.p;
        if !(branching < 1.0) {
            return Err(Error::SupercriticalModel { branching });
        }
        let c_p_lambda = if lambda > 0.0 {
            (1.0 - branching).powi(2) / (2.0 * lambda * lambda)
        } else {
            f64::INFINITY
        };
        Ok(SubcriticalConstants { branching, a: (1.0 + branching) / 2.0, c_p_lambda })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let k = Kernel::exponential(1.0, 1.0).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 1.0);
        let k = Kernel::indicator(2.0, 0.5).unwrap();
        assert_eq!(k.eval(3.0).unwrap(), 0.0);
        assert_eq!(k.eval(2.0).unwrap(), 0.5);
        let k = Kernel::exponential(2.0, 1.0).unwrap();
        assert_relative_eq!(k.eval(0.5).unwrap(), 0.36787944117144233, max_relative = 1e-15);
        assert!(k.eval(-1e-9).is_err());
        assert!(k.eval(f64::NAN).is_err());
    }

    #[test]
    fn stats_examples() {
        assert_eq!(
            Kernel::Zero.stats(2),
            KernelStats { lambda: 0.0, q_moment: 0.0, l2_norm: 0.0 }
        );
        let s = Kernel::exponential(1.0, 0.5).unwrap().stats(1);
        assert_relative_eq!(s.lambda, 0.5);
        assert_relative_eq!(s.q_moment, 0.5);
        assert_relative_eq!(s.l2_norm, 0.125);
        let s = Kernel::indicator(1.0, 0.5).unwrap().stats(2);
        assert_relative_eq!(s.lambda, 0.5);
        assert_relative_eq!(s.q_moment, 0.5 / 3.0);
        assert_relative_eq!(s.l2_norm, 0.25);
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(Kernel::exponential(0.0, 1.0).is_err());
        assert!(Kernel::exponential(1.0, -1.0).is_err());
        assert!(Kernel::indicator(-1.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 0.5, Kernel::Zero).is_err());
        assert!(ModelParams::new(1.0, 1.5, Kernel::Zero).is_err());
    }

    #[test]
    fn subcritical_examples() {
        let k = Kernel::indicator(1.0, 0.5).unwrap();
        let c = ModelParams::new(1.0, 0.5, k).unwrap().check_subcritical().unwrap();
        assert_relative_eq!(c.branching, 0.25);
        assert_relative_eq!(c.a, 0.625);
        assert_relative_eq!(c.c_p_lambda, 1.125);

        let k = Kernel::exponential_with_mass(1.0, 3.0).unwrap();
        let c = ModelParams::new(1.0, 0.0, k).unwrap().check_subcritical().unwrap();
        assert_eq!(c.branching, 0.0);
        assert_eq!(c.a, 0.5);
        assert_relative_eq!(c.c_p_lambda, 1.0 / 18.0);

        let k = Kernel::indicator(1.0, 2.0).unwrap();
        match ModelParams::new(1.0, 0.6, k).unwrap().check_subcritical() {
            Err(Error::SupercriticalModel { branching }) => assert_relative_eq!(branching, 1.2),
            other => panic!("expected supercritical, got {other:?}"),
        }
    }

    // Trapezoid rule on a fine grid; independent of the closed forms above.
    fn numeric_mass(k: &Kernel, horizon: f64, steps: usize) -> f64 {
        let h = horizon / steps as f64;
        let mut s = 0.5 * (k.value(0.0) + k.value(horizon));
        for i in 1..steps {
            s += k.value(i as f64 * h);
        }
        s * h
    }

    #[test]
    fn numeric_integration_matches_mass() {
        let k = Kernel::exponential(1.3, 0.7).unwrap();
        let num = numeric_mass(&k, 40.0, 400_000);
        assert_relative_eq!(num, k.mass(), max_relative = 1e-6);
        // grid aligned with the support end so the jump does not bias the rule
        let k = Kernel::indicator(2.5, 0.4).unwrap();
        let h = 2.5 / 250_000.0;
        let mut s = 0.0;
        for i in 0..250_000 {
            s += k.value((i as f64 + 0.5) * h);
        }
        assert_relative_eq!(s * h, k.mass(), max_relative = 1e-6);
    }

    #[test]
    fn integral_matches_mass_on_full_range() {
        let k = Kernel::exponential(0.5, 0.2).unwrap();
        assert_relative_eq!(k.integral(0.0, 200.0), k.mass(), max_relative = 1e-12);
        let k = Kernel::indicator(3.0, 0.1).unwrap();
        assert_relative_eq!(k.integral(0.0, 10.0), k.mass(), max_relative = 1e-12);
        assert_relative_eq!(k.integral(1.0, 2.0), 0.1, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn kernels_are_non_increasing(
            rate in 0.01f64..10.0, amp in 0.0f64..5.0, width in 0.01f64..10.0,
            s in 0.0f64..50.0, d in 0.0f64..50.0,
        ) {
            let t = s + d;
            for k in [
                Kernel::exponential(rate, amp).unwrap(),
                Kernel::indicator(width, amp).unwrap(),
                Kernel::Zero,
            ] {
                prop_assert!(k.value(s) >= k.value(t));
            }
        }
    }
}
