//! E_θ[Z_t] = μ Σ_{n≥0} [∫₀^t s φ^{*n}(t − s) ds] A_Nⁿ 1_N, evaluated with
//! binned convolution powers of φ.

use crate::error::{invalid, Error, Result};
use crate::graph::Adjacency;
use crate::kernels::ModelParams;

const MAX_TERMS: usize = 10_000;
const TERM_TOLERANCE: f64 = 1e-10;

/// Expected counts E_θ[Z_t^i] for every process i. `grid` is the bin width for
/// the convolution powers and must not exceed t/100.
pub fn expected_counts(adj: &Adjacency, params: &ModelParams, t: f64, grid: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("t must be > 0, got {t}")));
    }
    if !(grid > 0.0 && grid <= t / 100.0) {
        return Err(invalid(format!("grid must lie in (0, t/100], got {grid}")));
    }
    let n = adj.n();
    let nf = n as f64;
    let lambda = params.lambda();
    let row_bound = lambda * adj.max_row_sum() as f64 / nf;
    if !(row_bound < 1.0) {
        return Err(invalid(format!("Λ|||A_N|||_∞ = {row_bound} >= 1")));
    }

    let bins = (t / grid).ceil() as usize;
    let h = t / bins as f64;
    let kernel_mass: Vec<f64> =
        (0..bins).map(|k| params.kernel.integral(k as f64 * h, (k + 1) as f64 * h)).collect();
    // ∫₀^t (t − u) dF(u) with the mass of bin k placed at its midpoint
    let weighted = |mass: &[f64]| -> f64 {
        mass.iter().enumerate().map(|(k, m)| (t - (k as f64 + 0.5) * h) * m).sum()
    };

    let mu = params.mu;
    let mut out = vec![mu * t; n];
    let mut power = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut mass = kernel_mass.clone();
    for _ in 1..=MAX_TERMS {
        adj.mul_vec(&power, &mut next);
        next.iter_mut().for_each(|v| *v /= nf);
        std::mem::swap(&mut power, &mut next);

        let g = weighted(&mass);
        let sup = power.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        out.iter_mut().zip(&power).for_each(|(o, v)| *o += mu * g * v);
        if mu * g * sup < TERM_TOLERANCE * mu * t {
            return Ok(out);
        }
        mass = convolve_binned(&mass, &kernel_mass);
    }
    Err(Error::SeriesFailure { terms: MAX_TERMS })
}

/// Convolution of two binned densities. Bin centers a + ½ and b + ½ add up to
/// the edge a + b + 1, so each product is split evenly between the two bins
/// sharing that edge. Mass past the last bin is dropped.
fn convolve_binned(a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut out = vec![0.0; m];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(m - i) {
            let half = 0.5 * ai * bj;
            out[i + j] += half;
            if i + j + 1 < m {
                out[i + j + 1] += half;
            }
        }
    }
    out
}
