//! Limit objects driven by Q_N = (I − ΛA_N)⁻¹ with A_N = θ/N.
//!
//! Only ℓ_N = Q_N 1_N and c_N^K = Q_Nᵀ 1_K are ever needed, so both come from
//! Krylov solves against the bit-packed θ; Q_N itself is never formed.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::Adjacency;
use crate::kernels::ModelParams;

/// Relative ∞-norm residual above which a solve is reported as failed.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

const GMRES_TOLERANCE: f64 = 1e-14;
const GMRES_RESTART: usize = 40;
const GMRES_MAX_ITERATIONS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphAnalysis {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    /// ℓ_N(i) = Σ_j Q_N(i, j).
    pub ell: Vec<f64>,
    /// (1/K) Σ_{i≤K} ℓ_N(i).
    pub ell_bar_k: f64,
    /// c_N^K(j) = Σ_{i≤K} Q_N(i, j).
    pub c_k: Vec<f64>,
    /// ‖x_N^K‖₂² with x_N^K(i) = (ℓ_N(i) − ℓ̄_K) 1{i ≤ K}.
    pub x_k_sq_norm: f64,
    /// 𝒱_∞ = (Nμ²/K) ‖x_N^K‖₂².
    pub v_inf: f64,
    /// Σ_j c_N^K(j)² ℓ_N(j).
    pub a_inf: f64,
    /// 𝒲_∞ = μ (N/K²) A_∞.
    pub w_inf: f64,
    /// 𝒳_∞ = 𝒲_∞ − ((N − K)μ/K) ℓ̄_K.
    pub x_inf: f64,
    /// max of the two relative ∞-norm residuals.
    pub residual: f64,
}

/// ℓ_N, c_N^K and every scalar derived from them.
pub fn analyze_graph(adj: &Adjacency, lambda: f64, mu: f64, k: usize) -> Result<GraphAnalysis> {
    let n = adj.n();
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= K <= N, got K = {k}, N = {n}")));
    }
    let row_bound = lambda * adj.max_row_sum() as f64 / n as f64;
    if !(row_bound < 1.0) {
        return Err(Error::SpectralFailure(format!(
            "Λ|||A_N|||_∞ = {row_bound} >= 1, invertibility not certified"
        )));
    }

    let (ell, r1) = solve_ell(adj, lambda)?;
    let mut rhs = vec![0.0; n];
    rhs[..k].iter_mut().for_each(|v| *v = 1.0);
    let (c_k, r2) = solve_system(adj, lambda, true, &rhs)?;

    let kf = k as f64;
    let nf = n as f64;
    let ell_bar_k = ell[..k].iter().sum::<f64>() / kf;
    let x_k_sq_norm: f64 = ell[..k].iter().map(|&l| (l - ell_bar_k).powi(2)).sum();
    let v_inf = nf * mu * mu / kf * x_k_sq_norm;
    let a_inf: f64 = c_k.iter().zip(&ell).map(|(c, l)| c * c * l).sum();
    let w_inf = mu * nf / (kf * kf) * a_inf;
    let x_inf = w_inf - (nf - kf) * mu / kf * ell_bar_k;

    Ok(GraphAnalysis {
        n,
        k,
        lambda,
        mu,
        ell,
        ell_bar_k,
        c_k,
        x_k_sq_norm,
        v_inf,
        a_inf,
        w_inf,
        x_inf,
        residual: r1.max(r2),
    })
}

/// Solves (I − ΛA_N) ℓ = 1_N. Returns ℓ and the relative residual.
pub fn solve_ell(adj: &Adjacency, lambda: f64) -> Result<(Vec<f64>, f64)> {
    solve_system(adj, lambda, false, &vec![1.0; adj.n()])
}

/// Solves (I − ΛA_N) x = b, or the transposed system.
pub fn solve_system(
    adj: &Adjacency,
    lambda: f64,
    transposed: bool,
    b: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = adj.n();
    let scale = lambda / n as f64;
    let apply = |x: &[f64], y: &mut [f64]| {
        if transposed {
            adj.mul_vec_transposed(x, y);
        } else {
            adj.mul_vec(x, y);
        }
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - scale * *yi;
        }
    };
    let x = gmres(&apply, b, GMRES_TOLERANCE, GMRES_RESTART, GMRES_MAX_ITERATIONS);

    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let residual = ax.iter().zip(b).fold(0.0f64, |m, (a, bi)| m.max((a - bi).abs())) / b_norm;
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::SpectralFailure(format!(
            "relative residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok((x, residual))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
fn gmres(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Vec<f64> {
    let n = b.len();
    let m = restart.min(n).max(1);
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return x;
    }
    let mut r = b.to_vec();
    let mut beta = b_norm;
    let mut iterations = 0;
    let mut w = vec![0.0; n];

    while iterations < max_iterations && beta > tol * b_norm {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;

        for j in 0..m {
            apply(&basis[j], &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let h_next = norm(&w);
            h[j + 1][j] = h_next;
            for i in 0..j {
                let (a, b2) = (h[i][j], h[i + 1][j]);
                h[i][j] = cs[i] * a + sn[i] * b2;
                h[i + 1][j] = -sn[i] * a + cs[i] * b2;
            }
            let (a, b2) = (h[j][j], h[j + 1][j]);
            let rho = a.hypot(b2);
            if rho == 0.0 {
                break;
            }
            cs[j] = a / rho;
            sn[j] = b2 / rho;
            h[j][j] = rho;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            iterations += 1;
            if g[j + 1].abs() <= tol * b_norm || h_next == 0.0 || iterations >= max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        if used == 0 {
            break;
        }

        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = ((i + 1)..used).map(|l| h[i][l] * y[l]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += yi * vk);
        }
        apply(&x, &mut w);
        r.iter_mut().zip(b.iter().zip(&w)).for_each(|(rk, (bk, wk))| *rk = bk - wk);
        beta = norm(&r);
    }
    x
}

/// 1/(1 − Λp), the limit of ℓ̄_N^K.
pub fn ell_bar_limit(params: &ModelParams) -> Result<f64> {
    let c = params.check_subcritical()?;
    Ok(1.0 / (1.0 - c.branching))
}

/// The limits (u*, v*, w*) of (ε, 𝒱, 𝒳).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitTriple {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

pub fn limit_triple(params: &ModelParams) -> Result<LimitTriple> {
    let c = params.check_subcritical()?;
    let (mu, lambda, p) = (params.mu, params.lambda(), params.p);
    let d = 1.0 - c.branching;
    Ok(LimitTriple {
        u: mu / d,
        v: mu * mu * lambda * lambda * p * (1.0 - p) / (d * d),
        w: mu / (d * d * d),
    })
}
