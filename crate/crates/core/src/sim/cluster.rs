//! Immigration–birth sampler, used only to cross-check the thinning sampler
//! on small systems.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::EventLog;
use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::kernels::ModelParams;
use crate::rng;

pub const MAX_ORACLE_DIMENSION: usize = 32;

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Each process receives Poisson(μ·horizon) uniform immigrants; every event of
/// j at time s then spawns Poisson(Λ/N) children on each i with θ_{ij} = 1, at
/// delays drawn from φ/Λ.
pub fn simulate_cluster_oracle(
    adj: &Adjacency,
    params: &ModelParams,
    horizon: f64,
    seed: u64,
) -> Result<EventLog> {
    let n = adj.n();
    if n > MAX_ORACLE_DIMENSION {
        return Err(Error::OracleDomainError(format!(
            "N = {n} exceeds {MAX_ORACLE_DIMENSION}"
        )));
    }
    let lambda = params.lambda();
    let bound = lambda * adj.max_row_sum() as f64 / n as f64;
    if !(bound < 1.0) {
        return Err(Error::OracleDomainError(format!("Λ·max row sum/N = {bound} >= 1")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::OracleDomainError(format!("horizon must be > 0, got {horizon}")));
    }

    let mut rng = rng::stream(seed);
    let mut events = vec![Vec::new(); n];
    let mut pending: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        for _ in 0..poisson(params.mu * horizon, &mut rng) {
            pending.push((horizon * (1.0 - rng.random::<f64>()), i));
        }
    }
    let offspring_mean = lambda / n as f64;
    while let Some((s, j)) = pending.pop() {
        events[j].push(s);
        if offspring_mean == 0.0 {
            continue;
        }
        let mut children = Vec::new();
        adj.for_each_influenced(j, |i| children.push(i));
        for i in children {
            for _ in 0..poisson(offspring_mean, &mut rng) {
                let child = s + params.kernel.sample_delay(&mut rng);
                if child <= horizon {
                    pending.push((child, i));
                }
            }
        }
    }
    for list in &mut events {
        list.sort_by(f64::total_cmp);
        // ties have probability zero; drop them so the log stays strictly increasing
        list.dedup();
    }
    Ok(EventLog::new_unchecked(horizon, events, seed))
}
