//! Independent oracles used by the integration and acceptance tests.
//!
//! Everything here derives expected values through a different computational
//! route than the library: dense Gaussian elimination instead of banded
//! factorizations, explicit matrix products instead of stencils, exhaustive
//! vertex enumeration instead of Sinkhorn, and a damped Newton method on the
//! joint filtering objective instead of the alternating outer loop.

#![allow(dead_code)]

use wtv_core::GroundCost;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        assert!(m[col][col].abs() > 0.0, "singular system in oracle");
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = m[row][n];
        for k in row + 1..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// Dense second-difference matrix, built by multiplying two explicit
/// first-difference matrices (not the library's stencil).
pub fn dense_second_difference(t: usize) -> Vec<Vec<f64>> {
    let first = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; cols]; rows];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 1.0;
            row[i + 1] = -1.0;
        }
        d
    };
    let d1a = first(t - 2, t - 1);
    let d1b = first(t - 1, t);
    let mut out = vec![vec![0.0; t]; t - 2];
    for i in 0..t - 2 {
        for j in 0..t {
            out[i][j] = (0..t - 1).map(|k| d1a[i][k] * d1b[k][j]).sum();
        }
    }
    out
}

/// Closed-form l2 trend filter via a dense solve of
/// `(I + 2 lambda D2^T D2) y = x`.
pub fn l2_dense_oracle(x: &[f64], lambda: f64) -> Vec<f64> {
    let t = x.len();
    let d2 = dense_second_difference(t);
    let mut system = vec![vec![0.0; t]; t];
    for (i, row) in system.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for r in 0..t - 2 {
        for i in 0..t {
            for j in 0..t {
                system[i][j] += 2.0 * lambda * d2[r][i] * d2[r][j];
            }
        }
    }
    dense_solve(&system, x)
}

/// l1 trend filter oracle: plain projected gradient on the dual box QP
/// `min ||x - lambda D2^T g||^2 over g in [-1, 1]^(T-2)`, run until the
/// iterate change drops to 1e-12, then `y = x - lambda D2^T g*`.
pub fn l1_dual_qp_oracle(x: &[f64], lambda: f64) -> Vec<f64> {
    let t = x.len();
    if lambda == 0.0 {
        return x.to_vec();
    }
    let d2 = dense_second_difference(t);
    let m = t - 2;
    let apply = |g: &[f64]| -> Vec<f64> {
        // y = x - lambda D2^T g
        (0..t)
            .map(|j| x[j] - lambda * (0..m).map(|r| d2[r][j] * g[r]).sum::<f64>())
            .collect()
    };
    let step = 1.0 / (16.0 * lambda * lambda);
    let mut g = vec![0.0; m];
    let cap = 2_000_000;
    for iter in 0..cap {
        let y = apply(&g);
        let mut max_change = 0.0f64;
        let mut g_new = vec![0.0; m];
        for r in 0..m {
            let dy: f64 = (0..t).map(|j| d2[r][j] * y[j]).sum();
            g_new[r] = (g[r] + step * lambda * dy).clamp(-1.0, 1.0);
            max_change = max_change.max((g_new[r] - g[r]).abs());
        }
        g = g_new;
        if max_change <= 1e-12 {
            break;
        }
        assert!(iter + 1 < cap, "l1 oracle failed to converge");
    }
    apply(&g)
}

/// Exact transportation LP value by brute force: enumerates every basic
/// solution (spanning trees of the complete bipartite supply/demand graph),
/// keeps the feasible ones, and returns the minimum cost. Exponential in `d`;
/// meant for `d <= 5`.
pub fn transport_lp_oracle(mu: &[f64], nu: &[f64], cost: &GroundCost) -> f64 {
    let d = mu.len();
    assert_eq!(nu.len(), d);
    let cells = d * d;
    let basis_size = 2 * d - 1;
    let mut best = f64::INFINITY;

    // iterate over all subsets of `basis_size` cells
    let mut subset: Vec<usize> = (0..basis_size).collect();
    loop {
        if let Some(value) = tree_flow_cost(&subset, mu, nu, cost) {
            best = best.min(value);
        }
        // next combination
        let mut i = basis_size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + cells - basis_size {
                subset[i] += 1;
                for k in i + 1..basis_size {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the flows of a candidate basis by leaf elimination; `None` when the
/// cells do not form a spanning tree or a flow goes negative.
fn tree_flow_cost(cells: &[usize], mu: &[f64], nu: &[f64], cost: &GroundCost) -> Option<f64> {
    let d = mu.len();
    let nodes = 2 * d;
    let mut degree = vec![0usize; nodes];
    let mut supply: Vec<f64> = mu.iter().chain(nu.iter().map(|v| v)).copied().collect();
    for s in supply[d..].iter_mut() {
        *s = -*s;
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &cell) in cells.iter().enumerate() {
        let (i, j) = (cell / d, d + cell % d);
        degree[i] += 1;
        degree[j] += 1;
        incident[i].push(e);
        incident[j].push(e);
    }
    let mut removed_edge = vec![false; cells.len()];
    let mut removed_node = vec![false; nodes];
    let mut flows = vec![0.0; cells.len()];
    let mut queue: Vec<usize> = (0..nodes).filter(|&n| degree[n] == 1).collect();
    let mut processed = 0;
    while let Some(node) = queue.pop() {
        if removed_node[node] || degree[node] != 1 {
            continue;
        }
        let &edge = incident[node]
            .iter()
            .find(|&&e| !removed_edge[e])
            .expect("degree-one node has a live edge");
        let cell = cells[edge];
        let (i, j) = (cell / d, d + cell % d);
        let other = if node == i { j } else { i };
        // flow on the edge balances this leaf: positive means i -> j shipping
        let f = if node == i { supply[i] } else { -supply[j] };
        flows[edge] = f;
        supply[node] = 0.0;
        // the fixed flow leaves the remaining problem: the demand side has
        // negated supplies, so it gains f while the supply side loses f
        supply[other] += if other == j { f } else { -f };
        removed_edge[edge] = true;
        removed_node[node] = true;
        degree[node] -= 1;
        degree[other] -= 1;
        processed += 1;
        if degree[other] == 1 {
            queue.push(other);
        }
    }
    // a spanning tree eliminates all but one node and every edge
    if processed != nodes - 1 || removed_edge.iter().any(|&r| !r) {
        return None;
    }
    if flows.iter().any(|&f| f < -1e-12) {
        return None;
    }
    let mut total = 0.0;
    for (e, &cell) in cells.iter().enumerate() {
        total += flows[e].max(0.0) * cost.get(cell / d, cell % d);
    }
    Some(total)
}

/// Solution of the joint two-frame filtering objective found by the Newton
/// oracle.
pub struct JointSolution {
    pub plan: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub objective: f64,
}

/// Minimizes the joint objective
/// `1/2 ||x1 - P 1||^2 + 1/2 ||x2 - P^T 1||^2 + lambda <C, P> + gamma (sum P log P - 1)`
/// over positive plans, optionally subject to the normalization constraint
/// `sum P = 1`, by damped Newton steps on the KKT system (the entropy term
/// acts as the interior barrier). The estimate frames are the plan marginals.
///
/// Run to a 1e-11 stationarity residual; with entropic strong convexity this
/// pins the unique global optimum.
pub fn wtv_joint_oracle_t2(
    x1: &[f64],
    x2: &[f64],
    cost: &GroundCost,
    lambda: f64,
    gamma: f64,
    mass_constrained: bool,
) -> JointSolution {
    let d = x1.len();
    let n = d * d;
    let vars = if mass_constrained { n + 1 } else { n };
    let mut p = vec![1.0 / n as f64; n];
    let mut nu = 0.0f64;

    let grad = |p: &[f64], nu: f64| -> Vec<f64> {
        let mut r = vec![0.0; d];
        let mut c = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                r[i] += p[i * d + j];
                c[j] += p[i * d + j];
            }
        }
        let mut g = vec![0.0; n];
        for i in 0..d {
            for j in 0..d {
                g[i * d + j] = (r[i] - x1[i])
                    + (c[j] - x2[j])
                    + lambda * cost.get(i, j)
                    + gamma * (p[i * d + j].ln() + 1.0)
                    + if mass_constrained { nu } else { 0.0 };
            }
        }
        g
    };
    let objective = |p: &[f64]| -> f64 {
        let mut r = vec![0.0; d];
        let mut c = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                r[i] += p[i * d + j];
                c[j] += p[i * d + j];
            }
        }
        let fid1: f64 = x1.iter().zip(&r).map(|(&x, &m)| 0.5 * (x - m) * (x - m)).sum();
        let fid2: f64 = x2.iter().zip(&c).map(|(&x, &m)| 0.5 * (x - m) * (x - m)).sum();
        let tc: f64 = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| cost.get(i, j) * p[i * d + j])
            .sum();
        let ent: f64 = p.iter().map(|&v| v * v.ln()).sum::<f64>() - 1.0;
        fid1 + fid2 + lambda * tc + gamma * ent
    };
    let residual_norm = |p: &[f64], nu: f64| -> f64 {
        let g = grad(p, nu);
        let mut norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if mass_constrained {
            norm = norm.max((p.iter().sum::<f64>() - 1.0).abs());
        }
        norm
    };

    for _ in 0..300 {
        if residual_norm(&p, nu) <= 1e-11 {
            break;
        }
        let g = grad(&p, nu);
        // KKT system: [H A^T; A 0] [dp; dnu] = [-g; 1 - sum P]
        let mut sys = vec![vec![0.0; vars]; vars];
        let mut rhs = vec![0.0; vars];
        for i in 0..d {
            for j in 0..d {
                let row = i * d + j;
                for l in 0..d {
                    sys[row][i * d + l] += 1.0; // d r_i / d P_il
                }
                for k in 0..d {
                    sys[row][k * d + j] += 1.0; // d c_j / d P_kj
                }
                sys[row][row] += gamma / p[row];
                rhs[row] = -g[row];
                if mass_constrained {
                    sys[row][n] = 1.0;
                    sys[n][row] = 1.0;
                }
            }
        }
        if mass_constrained {
            rhs[n] = 1.0 - p.iter().sum::<f64>();
        }
        let delta = dense_solve(&sys, &rhs);

        // fraction-to-boundary damping keeps the plan strictly positive
        let mut tau = 1.0f64;
        for (pi, di) in p.iter().zip(&delta) {
            if *di < 0.0 {
                tau = tau.min(-0.95 * pi / di);
            }
        }
        let base = residual_norm(&p, nu);
        let mut accepted = false;
        for _ in 0..40 {
            let trial_p: Vec<f64> = p.iter().zip(&delta).map(|(&v, &dv)| v + tau * dv).collect();
            let trial_nu = if mass_constrained { nu + tau * delta[n] } else { 0.0 };
            if trial_p.iter().all(|&v| v > 0.0)
                && residual_norm(&trial_p, trial_nu) <= (1.0 - 0.1 * tau) * base + 1e-14
            {
                p = trial_p;
                nu = trial_nu;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        assert!(accepted, "newton oracle line search failed");
    }
    assert!(
        residual_norm(&p, nu) <= 1e-9,
        "newton oracle did not reach stationarity: {}",
        residual_norm(&p, nu)
    );

    let mut y1 = vec![0.0; d];
    let mut y2 = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            y1[i] += p[i * d + j];
            y2[j] += p[i * d + j];
        }
    }
    let objective = objective(&p);
    JointSolution {
        plan: p,
        y1,
        y2,
        objective,
    }
}

/// Random simplex vector with entries bounded away from zero.
pub fn random_simplex(d: usize, rng: &mut impl rand::Rng, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(floor..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}
