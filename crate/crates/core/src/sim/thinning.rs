//! Ogata-style thinning with the current total intensity as the dominating
//! rate.
//!
//! Kernels are non-increasing, so between events every λ_i can only decay and
//! the left-limit total intensity bounds the total intensity until the next
//! accepted event.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::EventLog;
use crate::error::{invalid, Error, Result};
use crate::graph::Adjacency;
use crate::kernels::{Kernel, ModelParams};
use crate::rng;

pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

/// Excitation scale below which the exponential path renormalizes its state.
const RENORMALIZE_BELOW: f64 = 1e-150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimPath {
    /// Markovian path for exponential kernels, windowed path otherwise.
    #[default]
    Auto,
    /// Always use the windowed path that evaluates φ on the retained history.
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub event_cap: u64,
    pub path: SimPath,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { event_cap: DEFAULT_EVENT_CAP, path: SimPath::Auto }
    }
}

pub fn simulate(adj: &Adjacency, params: &ModelParams, horizon: f64, seed: u64) -> Result<EventLog> {
    simulate_with(adj, params, horizon, seed, &SimOptions::default())
}

pub fn simulate_with(
    adj: &Adjacency,
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<EventLog> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be > 0, got {horizon}")));
    }
    if !(params.mu >= 0.0 && params.mu.is_finite()) {
        return Err(invalid(format!("mu must be >= 0, got {}", params.mu)));
    }
    params.kernel.validate()?;

    let mut rng = rng::stream(seed);
    let events = match (params.kernel, opts.path) {
        (Kernel::Exponential { rate, amplitude }, SimPath::Auto) => exponential_path(
            adj,
            params.mu,
            rate,
            amplitude,
            horizon,
            opts.event_cap,
            &mut rng,
        )?,
        (kernel, _) => {
            windowed_path(adj, params.mu, &kernel, horizon, opts.event_cap, &mut rng)?
        }
    };
    Ok(EventLog::new_unchecked(horizon, events, seed))
}

#[inline]
fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    // 1 − U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln()
}

/// Exponential kernel: λ_i = μ + e_i where every e_i decays at the same rate,
/// so the state is stored as e_i = stored_i · scale and only `scale` moves
/// between events.
fn exponential_path(
    adj: &Adjacency,
    mu: f64,
    rate: f64,
    amplitude: f64,
    horizon: f64,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let n = adj.n();
    let base = n as f64 * mu;
    let jump = amplitude / n as f64;
    let mut events = vec![Vec::new(); n];
    let mut stored = vec![0.0f64; n];
    let mut stored_sum = 0.0f64;
    let mut scale = 1.0f64;
    let mut t = 0.0f64;
    let mut count = 0u64;
    let mut bound = base;

    while bound > 0.0 {
        let s = t + exp1(rng) / bound;
        if s > horizon {
            break;
        }
        if !(s > t) {
            continue;
        }
        scale *= (-rate * (s - t)).exp();
        t = s;
        let current = base + stored_sum * scale;
        assert!(current <= bound * (1.0 + 1e-12), "thinning acceptance exceeded 1");

        let u = rng.random::<f64>() * bound;
        if u >= current {
            bound = current;
            continue;
        }
        let i = if u < base {
            ((u / mu) as usize).min(n - 1)
        } else {
            locate(&stored, (u - base) / scale)
        };
        events[i].push(t);
        count += 1;
        if count > cap {
            return Err(Error::ExplosionAbort { count, cap });
        }

        if jump > 0.0 {
            let add = jump / scale;
            adj.for_each_influenced(i, |k| stored[k] += add);
            stored_sum += add * adj.col_sums()[i] as f64;
            if scale < RENORMALIZE_BELOW {
                stored.iter_mut().for_each(|v| *v *= scale);
                stored_sum = stored.iter().sum();
                scale = 1.0;
            }
        }
        bound = base + stored_sum * scale;
    }
    Ok(events)
}

/// Index i with cumulative weight covering `target`; falls back to the last
/// positive weight when rounding leaves `target` past the end.
fn locate(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    last
}

struct Active {
    time: f64,
    source: usize,
    /// (number of processes the source influences) / N
    reach: f64,
}

/// Any non-increasing kernel. The history still able to excite (φ(age) > 0)
/// is kept in a queue; an accepted point is attributed either to the baseline
/// or to one past event, and then to one of the processes that event reaches.
fn windowed_path(
    adj: &Adjacency,
    mu: f64,
    kernel: &Kernel,
    horizon: f64,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let n = adj.n();
    let nf = n as f64;
    let base = nf * mu;
    let mut events = vec![Vec::new(); n];
    let mut active: VecDeque<Active> = VecDeque::new();
    // Σ reach over the queue; exact for the indicator kernel where φ is flat
    let mut reach_sum = 0.0f64;
    let flat_height = match *kernel {
        Kernel::Indicator { height, .. } => Some(height),
        _ => None,
    };
    let excites = kernel.peak() > 0.0;

    let excitation_at = |active: &mut VecDeque<Active>, reach_sum: &mut f64, s: f64| -> f64 {
        while let Some(front) = active.front() {
            if kernel.value(s - front.time) == 0.0 {
                *reach_sum -= front.reach;
                active.pop_front();
            } else {
                break;
            }
        }
        if active.is_empty() {
            *reach_sum = 0.0;
            return 0.0;
        }
        match flat_height {
            Some(h) => h * *reach_sum,
            None => active.iter().map(|e| kernel.value(s - e.time) * e.reach).sum(),
        }
    };

    let mut t = 0.0f64;
    let mut count = 0u64;
    let mut bound = base;
    while bound > 0.0 {
        let s = t + exp1(rng) / bound;
        if s > horizon {
            break;
        }
        if !(s > t) {
            continue;
        }
        t = s;
        let current = base + excitation_at(&mut active, &mut reach_sum, s);
        assert!(current <= bound * (1.0 + 1e-12), "thinning acceptance exceeded 1");

        let u = rng.random::<f64>() * bound;
        if u >= current {
            bound = current;
            continue;
        }
        let i = if u < base {
            ((u / mu) as usize).min(n - 1)
        } else {
            let target = u - base;
            let mut acc = 0.0;
            let mut chosen = None;
            for e in active.iter() {
                acc += kernel.value(s - e.time) * e.reach;
                chosen = Some(e.source);
                if target < acc {
                    break;
                }
            }
            let src = chosen.expect("excitation without history");
            let r = rng.random_range(0..adj.col_sums()[src]);
            adj.nth_influenced(src, r).expect("rank within column sum")
        };
        events[i].push(t);
        count += 1;
        if count > cap {
            return Err(Error::ExplosionAbort { count, cap });
        }
        let deg = adj.col_sums()[i];
        if excites && deg > 0 {
            let reach = deg as f64 / nf;
            active.push_back(Active { time: t, source: i, reach });
            reach_sum += reach;
        }
        bound = base + excitation_at(&mut active, &mut reach_sum, t);
    }
    Ok(events)
}
