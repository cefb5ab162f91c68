//! Matrix quantities against a truncated Neumann series and a dense LU solve
//! written independently here.

use mfhawkes::graph::Adjacency;
use mfhawkes::oracle::{analyze_graph, solve_ell, solve_system};
use proptest::prelude::*;

fn dense(adj: &Adjacency, lambda: f64) -> Vec<Vec<f64>> {
    let n = adj.n();
    (0..n)
        .map(|i| (0..n).map(|j| if adj.get(i, j) { lambda / n as f64 } else { 0.0 }).collect())
        .collect()
}

fn neumann_ell(m: &[Vec<f64>], terms: usize) -> Vec<f64> {
    let n = m.len();
    let mut power = vec![1.0; n];
    let mut sum = power.clone();
    for _ in 0..terms {
        power = (0..n).map(|i| (0..n).map(|j| m[i][j] * power[j]).sum()).collect();
        sum.iter_mut().zip(&power).for_each(|(s, p)| *s += p);
    }
    sum
}

/// Solves (I − M) x = b, or (I − M)ᵀ x = b, by Gaussian elimination with
/// partial pivoting.
fn lu_solve(m: &[Vec<f64>], b: &[f64], transposed: bool) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = if transposed { m[j][i] } else { m[i][j] };
                    if i == j { 1.0 - v } else { -v }
                })
                .collect()
        })
        .collect();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, piv);
        x.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (x[r] - s) / a[r][r];
    }
    x
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn neumann_series_matches_solver_on_fifty_graphs() {
    for seed in 0..50u64 {
        let n = 8 + (seed as usize * 7) % 57;
        let adj = Adjacency::sample(n, 0.5, seed).unwrap();
        let m = dense(&adj, 0.5);
        let series = neumann_ell(&m, 200);
        let (ell, _) = solve_ell(&adj, 0.5).unwrap();
        for (a, b) in ell.iter().zip(&series) {
            assert!((a - b).abs() < 1e-8, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn derived_quantities_match_dense_lu() {
    for seed in 0..20u64 {
        let n = 10 + seed as usize * 3;
        let k = n / 2 + 1;
        let (lambda, mu) = (0.7, 1.3);
        let adj = Adjacency::sample(n, 0.6, 100 + seed).unwrap();
        let m = dense(&adj, lambda);
        let ell = lu_solve(&m, &vec![1.0; n], false);
        let mut ind = vec![0.0; n];
        ind[..k].iter_mut().for_each(|v| *v = 1.0);
        let c = lu_solve(&m, &ind, true);

        let ell_bar: f64 = ell[..k].iter().sum::<f64>() / k as f64;
        let x_sq: f64 = ell[..k].iter().map(|l| (l - ell_bar).powi(2)).sum();
        let v_inf = n as f64 * mu * mu / k as f64 * x_sq;
        let a_inf: f64 = c.iter().zip(&ell).map(|(c, l)| c * c * l).sum();
        let w_inf = mu * n as f64 / (k * k) as f64 * a_inf;
        let x_inf = w_inf - (n - k) as f64 * mu / k as f64 * ell_bar;

        let g = analyze_graph(&adj, lambda, mu, k).unwrap();
        assert!(close(g.ell_bar_k, ell_bar, 1e-10));
        assert!(close(g.v_inf, v_inf, 1e-8), "{} vs {v_inf}", g.v_inf);
        assert!(close(g.a_inf, a_inf, 1e-10));
        assert!(close(g.w_inf, w_inf, 1e-10));
        assert!(close(g.x_inf, x_inf, 1e-10));
        for (a, b) in g.c_k.iter().zip(&c) {
            assert!(close(*a, *b, 1e-10));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn solver_agrees_with_lu(n in 2usize..40, p in 0.0f64..1.0, lambda in 0.0f64..0.95, seed: u64, transposed: bool) {
        let adj = Adjacency::sample(n, p, seed).unwrap();
        let m = dense(&adj, lambda);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let (x, _) = solve_system(&adj, lambda, transposed, &b).unwrap();
        let y = lu_solve(&m, &b, transposed);
        for (a, e) in x.iter().zip(&y) {
            prop_assert!(close(*a, *e, 1e-9));
        }
    }
}
