//! The three statistics (ε, 𝒱, 𝒳) computed from the first K processes and the
//! closed-form plug-in maps Ψ⁽¹⁾, Ψ⁽²⁾, Ψ⁽³⁾ to (μ̂, Λ̂, p̂).

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::sim::EventLog;

/// Block schedule Δ_t = t / (2⌊t^{1−4/(q+1)}⌋).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub t: f64,
    pub delta: f64,
    /// t/Δ_t, the number of Δ-blocks covering (t, 2t]; always even.
    pub blocks: usize,
}

impl Schedule {
    /// Right edge of block `k` (k = 0 is t itself, k = blocks is 2t).
    #[inline]
    pub fn edge(&self, k: usize) -> f64 {
        self.t * (self.blocks + k) as f64 / self.blocks as f64
    }
}

pub fn delta_schedule(t: f64, q: u32) -> Result<Schedule> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(invalid(format!("t must be >= 1, got {t}")));
    }
    if q <= 3 {
        return Err(invalid(format!("q must exceed 3, got {q}")));
    }
    let exponent = 1.0 - 4.0 / (q as f64 + 1.0);
    let mut m = t.powf(exponent).floor();
    // floor(t^e) = m iff m^{1/e} ≤ t < (m+1)^{1/e}; repair powf rounding at exact powers
    let inverse = 1.0 / exponent;
    let tol = 1e-12 * t;
    if (m + 1.0).powf(inverse) <= t + tol {
        m += 1.0;
    } else if m >= 1.0 && m.powf(inverse) > t + tol {
        m -= 1.0;
    }
    if m < 1.0 {
        return Err(Error::DegenerateSchedule { t, q });
    }
    let blocks = 2 * m as usize;
    Ok(Schedule { t, delta: t / blocks as f64, blocks })
}

#[derive(Debug, Clone, Copy)]
pub struct EstimatorInput<'a> {
    pub log: &'a EventLog,
    /// Full population size N.
    pub n: usize,
    /// Number of observed processes K; only the first K lists are read.
    pub k: usize,
    pub t: f64,
    pub q: u32,
}

impl<'a> EstimatorInput<'a> {
    pub fn new(log: &'a EventLog, n: usize, k: usize, t: f64, q: u32) -> Result<Self> {
        let input = EstimatorInput { log, n, k, t, q };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(invalid(format!("need 1 <= K <= N, got K = {}, N = {}", self.k, self.n)));
        }
        if self.k > self.log.n() {
            return Err(invalid(format!(
                "K = {} exceeds the {} processes in the log",
                self.k,
                self.log.n()
            )));
        }
        if !(self.t > 0.0 && 2.0 * self.t <= self.log.horizon() * (1.0 + 1e-12)) {
            return Err(invalid(format!(
                "need 0 < 2t <= horizon, got t = {}, horizon = {}",
                self.t,
                self.log.horizon()
            )));
        }
        Ok(())
    }

    /// Z_{2t}^i − Z_t^i for each observed process.
    fn increments(&self) -> Vec<f64> {
        (0..self.k)
            .map(|i| (self.log.count_at(i, 2.0 * self.t) - self.log.count_at(i, self.t)) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawStats {
    pub epsilon: f64,
    pub v: f64,
    pub x: f64,
    pub z_delta: f64,
    pub z_2delta: f64,
    pub w: f64,
    pub delta_t: f64,
}

fn epsilon_from(increments: &[f64], t: f64) -> f64 {
    increments.iter().sum::<f64>() / (increments.len() as f64 * t)
}

/// ε_t = (Z̄_{2t}^{K} − Z̄_t^{K}) / t.
pub fn epsilon_hat(input: &EstimatorInput) -> Result<f64> {
    input.validate()?;
    Ok(epsilon_from(&input.increments(), input.t))
}

fn v_from(increments: &[f64], epsilon: f64, n: usize, t: f64) -> f64 {
    let k = increments.len() as f64;
    let dispersion: f64 = increments.iter().map(|d| (d / t - epsilon).powi(2)).sum();
    n as f64 / k * dispersion - n as f64 / t * epsilon
}

/// 𝒱_t = (N/K) Σ_{i≤K} [(Z_{2t}^i − Z_t^i)/t − ε]² − (N/t) ε. May be negative.
pub fn v_hat(input: &EstimatorInput) -> Result<f64> {
    input.validate()?;
    let inc = input.increments();
    let eps = epsilon_from(&inc, input.t);
    Ok(v_from(&inc, eps, input.n, input.t))
}

/// 𝒳 together with its intermediate 𝒵_Δ, 𝒵_{2Δ} and 𝒲.
struct ThirdStat {
    z_delta: f64,
    z_2delta: f64,
    w: f64,
    x: f64,
}

fn third_from(input: &EstimatorInput, schedule: &Schedule, epsilon: f64) -> ThirdStat {
    let blocks = schedule.blocks;
    let edges: Vec<f64> = (0..=blocks).map(|k| schedule.edge(k)).collect();
    let (lo, hi) = (edges[0], edges[blocks]);
    let mut counts = vec![0u64; blocks];
    for i in 0..input.k {
        let list = input.log.events(i);
        let start = list.partition_point(|&s| s <= lo);
        for &s in list[start..].iter().take_while(|&&s| s <= hi) {
            // block b holds (edge_b, edge_{b+1}]
            let b = edges[1..].partition_point(|&e| e < s);
            counts[b.min(blocks - 1)] += 1;
        }
    }

    let kf = input.k as f64;
    let scale = input.n as f64 / input.t;
    let delta = schedule.delta;
    let z_delta = scale
        * counts.iter().map(|&c| (c as f64 / kf - delta * epsilon).powi(2)).sum::<f64>();
    let z_2delta = scale
        * counts
            .chunks_exact(2)
            .map(|pair| ((pair[0] + pair[1]) as f64 / kf - 2.0 * delta * epsilon).powi(2))
            .sum::<f64>();
    let w = 2.0 * z_2delta - z_delta;
    let x = w - (input.n - input.k) as f64 / kf * epsilon;
    ThirdStat { z_delta, z_2delta, w, x }
}

/// 𝒳_{Δ_t,t} = 𝒲 − ((N − K)/K) ε with 𝒲 = 2𝒵_{2Δ} − 𝒵_Δ.
pub fn x_hat(input: &EstimatorInput) -> Result<f64> {
    Ok(raw_stats(input)?.x)
}

pub fn raw_stats(input: &EstimatorInput) -> Result<RawStats> {
    input.validate()?;
    let schedule = delta_schedule(input.t, input.q)?;
    let inc = input.increments();
    let epsilon = epsilon_from(&inc, input.t);
    let v = v_from(&inc, epsilon, input.n, input.t);
    let third = third_from(input, &schedule, epsilon);
    Ok(RawStats {
        epsilon,
        v,
        x: third.x,
        z_delta: third.z_delta,
        z_2delta: third.z_2delta,
        w: third.w,
        delta_t: schedule.delta,
    })
}

/// Ψ⁽¹⁾(u, v, w) = u √(u/w) on {u > 0, v > 0, w > u}, 0 otherwise.
pub fn psi1(u: f64, v: f64, w: f64) -> f64 {
    if u > 0.0 && v > 0.0 && w > u {
        u * (u / w).sqrt()
    } else {
        0.0
    }
}

/// Ψ⁽²⁾(u, v, w) = (v + (u − Ψ⁽¹⁾)²) / (u (u − Ψ⁽¹⁾)) on {u > 0, v > 0, w > u}, 0 otherwise.
pub fn psi2(u: f64, v: f64, w: f64) -> f64 {
    if u > 0.0 && v > 0.0 && w > u {
        let gap = u - psi1(u, v, w);
        (v + gap * gap) / (u * gap)
    } else {
        0.0
    }
}

/// Ψ⁽³⁾(u, v, w) = u²(1 − √(u/w))² / (v + u²(1 − √(u/w))²) on {u, v, w > 0}, 0 otherwise.
pub fn psi3(u: f64, v: f64, w: f64) -> f64 {
    if u > 0.0 && v > 0.0 && w > 0.0 {
        let s = (u * (1.0 - (u / w).sqrt())).powi(2);
        let value = s / (v + s);
        // NaN only arises from non-finite inputs
        if value.is_nan() {
            0.0
        } else {
            value
        }
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlugIn {
    pub mu_hat: f64,
    pub lambda_hat: f64,
    pub p_hat: f64,
}

impl PlugIn {
    pub fn from_stats(epsilon: f64, v: f64, x: f64) -> Self {
        PlugIn {
            mu_hat: psi1(epsilon, v, x),
            lambda_hat: psi2(epsilon, v, x),
            p_hat: psi3(epsilon, v, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(flatten)]
    pub plug_in: PlugIn,
    pub raw: RawStats,
}

pub fn estimate(input: &EstimatorInput) -> Result<Estimate> {
    let raw = raw_stats(input)?;
    Ok(Estimate { plug_in: PlugIn::from_stats(raw.epsilon, raw.v, raw.x), raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn schedule_examples() {
        let s = delta_schedule(256.0, 7).unwrap();
        assert_eq!((s.delta, s.blocks), (8.0, 32));
        let s = delta_schedule(10_000.0, 15).unwrap();
        assert_eq!((s.delta, s.blocks), (5.0, 2000));
        let s = delta_schedule(2.0, 4).unwrap();
        assert_eq!((s.delta, s.blocks), (1.0, 2));
        assert!(delta_schedule(1.5, 100).is_ok());
        assert!(delta_schedule(0.5, 7).is_err());
        assert!(delta_schedule(10.0, 3).is_err());
        assert_eq!(s.edge(0), 2.0);
        assert_eq!(s.edge(2), 4.0);
    }

    #[test]
    fn schedule_blocks_tile_the_window() {
        for t in [1.0, 7.5, 100.0, 1500.0, 4096.0, 12345.6] {
            for q in [4, 5, 7, 15, 30] {
                let s = delta_schedule(t, q).unwrap();
                let e = 1.0 - 4.0 / (q as f64 + 1.0);
                let m = s.blocks / 2;
                assert!(m >= 1);
                assert!((m as f64) <= t.powf(e) * (1.0 + 1e-12));
                assert!((m as f64 + 1.0) > t.powf(e) * (1.0 - 1e-12));
                assert_eq!(s.edge(s.blocks), 2.0 * t);
            }
        }
    }

    fn log(k: usize, horizon: f64, lists: Vec<Vec<f64>>) -> EventLog {
        assert_eq!(lists.len(), k);
        EventLog::new(horizon, lists, 0).unwrap()
    }

    #[test]
    fn empty_log_gives_zero() {
        let l = EventLog::empty(4, 20.0);
        let input = EstimatorInput::new(&l, 4, 2, 10.0, 7).unwrap();
        let e = estimate(&input).unwrap();
        assert_eq!(e.raw.epsilon, 0.0);
        assert_eq!(e.raw.v, 0.0);
        assert_eq!(e.raw.x, 0.0);
        assert_eq!(e.plug_in, PlugIn { mu_hat: 0.0, lambda_hat: 0.0, p_hat: 0.0 });
    }

    #[test]
    fn hand_log() {
        let l = log(
            2,
            20.0,
            vec![
                vec![1.0, 11.0, 12.0, 13.0, 14.0, 15.0],
                vec![5.0, 10.0, 16.0, 17.0, 20.0],
            ],
        );
        let input = EstimatorInput::new(&l, 4, 2, 10.0, 7).unwrap();
        assert_relative_eq!(epsilon_hat(&input).unwrap(), 0.4, max_relative = 1e-15);
        assert_relative_eq!(v_hat(&input).unwrap(), -0.12, max_relative = 1e-12);
    }

    #[test]
    fn events_before_t_do_not_count() {
        let l = log(2, 20.0, vec![vec![1.0, 2.0, 10.0], vec![3.0]]);
        let input = EstimatorInput::new(&l, 2, 2, 10.0, 7).unwrap();
        assert_eq!(epsilon_hat(&input).unwrap(), 0.0);
    }

    #[test]
    fn identical_increments_leave_only_bias_correction() {
        let l = log(3, 8.0, vec![vec![5.0, 6.0], vec![4.5, 7.0], vec![6.5, 8.0]]);
        let input = EstimatorInput::new(&l, 5, 3, 4.0, 7).unwrap();
        let eps = epsilon_hat(&input).unwrap();
        assert_relative_eq!(eps, 0.5);
        assert_relative_eq!(v_hat(&input).unwrap(), -(5.0 / 4.0) * eps, max_relative = 1e-14);
    }

    #[test]
    fn even_blocks_cancel_drift() {
        // t = 256, q = 7: 32 blocks of width 8 on (256, 512]; one event per
        // process in every block
        let t = 256.0;
        let sched = delta_schedule(t, 7).unwrap();
        let lists: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..sched.blocks).map(|b| sched.edge(b) + 1.0 + i as f64).collect())
            .collect();
        let l = log(3, 2.0 * t, lists);
        let input = EstimatorInput::new(&l, 10, 3, t, 7).unwrap();
        let r = raw_stats(&input).unwrap();
        assert!(r.z_delta.abs() < 1e-12 && r.z_2delta.abs() < 1e-12);
        assert_relative_eq!(r.x, -(7.0 / 3.0) * r.epsilon, max_relative = 1e-12);

        let input = EstimatorInput::new(&l, 3, 3, t, 7).unwrap();
        let r = raw_stats(&input).unwrap();
        assert_eq!(r.x, r.w);
    }

    // Direct evaluation of 𝒵 from counting functions at the block edges.
    fn z_direct(l: &EventLog, n: usize, k: usize, t: f64, delta: f64, eps: f64) -> f64 {
        let zbar = |s: f64| (0..k).map(|i| l.count_at(i, s) as f64).sum::<f64>() / k as f64;
        let blocks = (t / delta).round() as usize;
        let mut total = 0.0;
        for a in (blocks + 1)..=(2 * blocks) {
            let hi = t * a as f64 / blocks as f64;
            let lo = t * (a - 1) as f64 / blocks as f64;
            total += (zbar(hi) - zbar(lo) - delta * eps).powi(2);
        }
        n as f64 / t * total
    }

    #[test]
    fn binned_sweep_matches_counting_functions() {
        let lists: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut v: Vec<f64> =
                    (1..400).map(|k| (k as f64 * 0.731 + i as f64 * 0.37) % 200.0 + 1e-3).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let l = EventLog::new(200.0, lists, 0).unwrap();
        let input = EstimatorInput::new(&l, 9, 4, 100.0, 5).unwrap();
        let r = raw_stats(&input).unwrap();
        let z1 = z_direct(&l, 9, 4, 100.0, r.delta_t, r.epsilon);
        let z2 = z_direct(&l, 9, 4, 100.0, 2.0 * r.delta_t, r.epsilon);
        assert_relative_eq!(r.z_delta, z1, max_relative = 1e-12);
        assert_relative_eq!(r.z_2delta, z2, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = EventLog::empty(4, 20.0);
        assert!(EstimatorInput::new(&l, 4, 0, 10.0, 7).is_err());
        assert!(EstimatorInput::new(&l, 4, 5, 10.0, 7).is_err());
        assert!(EstimatorInput::new(&l, 10, 5, 10.0, 7).is_err());
        assert!(EstimatorInput::new(&l, 4, 2, 10.5, 7).is_err());
    }

    #[test]
    fn psi_at_limit_triple() {
        let (u, v, w) = (4.0 / 3.0, 1.0 / 9.0, 64.0 / 27.0);
        assert_relative_eq!(psi3(u, v, w), 0.5, max_relative = 1e-14);
        assert_relative_eq!(psi1(u, v, w), 1.0, max_relative = 1e-14);
        assert_relative_eq!(psi2(u, v, w), 0.5, max_relative = 1e-14);
        assert_eq!(psi3(1.0, 1.0, -2.0), 0.0);
        assert_eq!(psi1(1.0, 1.0, 0.5), 0.0);
        assert_eq!(psi2(1.0, -1.0, 2.0), 0.0);
    }

    #[test]
    fn retiming_leaves_epsilon_scale_consistent() {
        let lists = vec![vec![1.0, 12.0, 13.0], vec![15.0, 19.0]];
        let l = EventLog::new(20.0, lists.clone(), 0).unwrap();
        let eps = epsilon_hat(&EstimatorInput::new(&l, 2, 2, 10.0, 7).unwrap()).unwrap();
        let c = 3.0;
        let stretched: Vec<Vec<f64>> =
            lists.iter().map(|v| v.iter().map(|s| s * c).collect()).collect();
        let l2 = EventLog::new(60.0, stretched, 0).unwrap();
        let eps2 = epsilon_hat(&EstimatorInput::new(&l2, 2, 2, 30.0, 7).unwrap()).unwrap();
        // same counts over a window c times longer
        assert_relative_eq!(eps2 * c, eps, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn psi3_is_a_probability(u in -1e6f64..1e6, v in -1e6f64..1e6, w in -1e6f64..1e6) {
            let p = psi3(u, v, w);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
