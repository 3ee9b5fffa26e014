//! Exact solver for the Kantorovich linear OT problem.
//!
//! Network simplex on the complete bipartite transportation graph. Returns a
//! vertex-optimal plan (at most m + n - 1 nonzeros) together with dual
//! potentials, certified by complementary slackness. Used standalone and as
//! the direction oracle inside conditional gradient.

use ndarray::Array2;

use crate::transport::{CouplingPlan, Histogram};
use crate::{GwError, Scalar};

#[derive(Debug, Clone)]
pub struct OtSolution<S> {
    pub plan: CouplingPlan<S>,
    pub cost: S,
    pub iterations: usize,
    /// Dual potentials (u, v): optimal cost equals sum u_i alpha_i + sum v_j beta_j.
    pub row_potentials: Vec<S>,
    pub col_potentials: Vec<S>,
}

struct Arc<S> {
    src: usize,
    dst: usize, // sink index in 0..n
    flow: S,
}

/// Solves `min <C, pi>` over couplings of (alpha, beta).
///
/// Zero-mass rows and columns are pruned before solving and re-inserted as
/// zero rows/columns afterward. Tie-breaking: the entering arc is the first
/// most-negative reduced cost in row-major order, so results are
/// deterministic given input ordering.
pub fn solve_ot<S: Scalar>(
    cost: &Array2<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Result<OtSolution<S>, GwError> {
    let (m, n) = cost.dim();
    if m != alpha.len() || n != beta.len() {
        return Err(GwError::DimensionMismatch(format!(
            "cost is {m}x{n} but marginals have lengths {} and {}",
            alpha.len(),
            beta.len()
        )));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(GwError::NumericalFailure("cost matrix has non-finite entries".into()));
    }
    let total_a: S = alpha.weights().iter().copied().sum();
    let total_b: S = beta.weights().iter().copied().sum();
    if (total_a - total_b).abs() > S::of(1e-9) {
        return Err(GwError::InfeasibleMarginals(format!(
            "supplies sum to {total_a}, demands to {total_b}"
        )));
    }

    // Prune zero-mass nodes.
    let rows: Vec<usize> = (0..m).filter(|&i| alpha.get(i) > S::zero()).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| beta.get(j) > S::zero()).collect();
    let a: Vec<S> = rows.iter().map(|&i| alpha.get(i)).collect();
    let b: Vec<S> = cols.iter().map(|&j| beta.get(j)).collect();
    let mr = rows.len();
    let nc = cols.len();
    let sub_cost = |i: usize, j: usize| cost[[rows[i], cols[j]]];

    let (arcs, u_sub, v_sub, iterations) = simplex(mr, nc, &sub_cost, &a, &b)?;

    // Rebuild the full plan and potentials.
    let mut plan = Array2::zeros((m, n));
    for arc in &arcs {
        plan[[rows[arc.src], cols[arc.dst]]] += arc.flow;
    }
    let mut u = vec![S::zero(); m];
    let mut v = vec![S::zero(); n];
    for (i_sub, &i) in rows.iter().enumerate() {
        u[i] = u_sub[i_sub];
    }
    for (j_sub, &j) in cols.iter().enumerate() {
        v[j] = v_sub[j_sub];
    }
    // Dual-feasible completion for pruned nodes: they carry no mass, so any
    // potential below every reduced cost works.
    for j in 0..n {
        if beta.get(j) == S::zero() {
            let mut best = S::infinity();
            for i in 0..m {
                if alpha.get(i) > S::zero() {
                    best = best.min(cost[[i, j]] - u[i]);
                }
            }
            v[j] = if best.is_finite() { best } else { S::zero() };
        }
    }
    for i in 0..m {
        if alpha.get(i) == S::zero() {
            let mut best = S::infinity();
            for j in 0..n {
                best = best.min(cost[[i, j]] - v[j]);
            }
            u[i] = if best.is_finite() { best } else { S::zero() };
        }
    }

    let mut total = S::zero();
    for i in 0..m {
        for j in 0..n {
            total += cost[[i, j]] * plan[[i, j]];
        }
    }

    // Complementary slackness certificate.
    let scale = cost.iter().fold(S::one(), |acc, &c| acc.max(c.abs()));
    let tol = scale * S::of(1e-9);
    for i in 0..m {
        for j in 0..n {
            let rc = cost[[i, j]] - u[i] - v[j];
            if rc < -tol {
                return Err(GwError::NumericalFailure(format!(
                    "dual infeasibility {rc} at ({i}, {j}) after termination"
                )));
            }
            if plan[[i, j]] > S::zero() && rc.abs() > tol {
                return Err(GwError::NumericalFailure(format!(
                    "complementary slackness violated at ({i}, {j}): flow {} rc {rc}",
                    plan[[i, j]]
                )));
            }
        }
    }

    let plan = CouplingPlan::with_tolerance(plan, alpha.clone(), beta.clone(), S::of(1e-9))?;
    Ok(OtSolution { plan, cost: total, iterations, row_potentials: u, col_potentials: v })
}

type SimplexOut<S> = (Vec<Arc<S>>, Vec<S>, Vec<S>, usize);

fn simplex<S: Scalar>(
    m: usize,
    n: usize,
    cost: &dyn Fn(usize, usize) -> S,
    a: &[S],
    b: &[S],
) -> Result<SimplexOut<S>, GwError> {
    // Northwest-corner initial basis: exactly m + n - 1 arcs, degenerate
    // zero-flow arcs included.
    let mut arcs: Vec<Arc<S>> = Vec::with_capacity(m + n - 1);
    {
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = ra[i].min(rb[j]);
            arcs.push(Arc { src: i, dst: j, flow: f });
            ra[i] -= f;
            rb[j] -= f;
            if i + 1 == m && j + 1 == n {
                break;
            }
            if (ra[i] <= rb[j] && i + 1 < m) || j + 1 == n {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let nodes = m + n; // sources 0..m, sinks m..m+n
    let scale = {
        let mut s = S::one();
        for i in 0..m {
            for j in 0..n {
                s = s.max(cost(i, j).abs());
            }
        }
        s
    };
    let enter_tol = scale * S::of(1e-11);
    let max_pivots = 20 * (m + n) * (m + n) + 200;

    let mut u = vec![S::zero(); m];
    let mut v = vec![S::zero(); n];

    for pivot in 0..max_pivots {
        // Potentials from the basis tree (root = source 0, u[0] = 0).
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (idx, arc) in arcs.iter().enumerate() {
            adj[arc.src].push((m + arc.dst, idx));
            adj[m + arc.dst].push((arc.src, idx));
        }
        let mut seen = vec![false; nodes];
        let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = S::zero();
        while let Some(node) = stack.pop() {
            for &(next, arc_idx) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                parent[next] = (node, arc_idx);
                let arc = &arcs[arc_idx];
                let c = cost(arc.src, arc.dst);
                if next >= m {
                    v[next - m] = c - u[arc.src];
                } else {
                    u[next] = c - v[arcs[arc_idx].dst];
                }
                stack.push(next);
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(GwError::NumericalFailure("basis tree became disconnected".into()));
        }

        // Entering arc: most negative reduced cost, first hit wins ties.
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -enter_tol;
        for i in 0..m {
            for j in 0..n {
                let rc = cost(i, j) - u[i] - v[j];
                if rc < best {
                    best = rc;
                    entering = Some((i, j));
                }
            }
        }
        let (ei, ej) = match entering {
            None => {
                return Ok((arcs, u, v, pivot));
            }
            Some(e) => e,
        };

        // Cycle: entering arc + tree path from sink ej back to source ei.
        let path = tree_path(ei, m + ej, &parent, nodes)?;
        // path is the arc sequence from ei to m+ej through the tree; the
        // cycle alternates orientation starting with the entering arc (+).
        let mut theta = S::infinity();
        let mut leave: Option<usize> = None;
        for (pos, &arc_idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                // arcs that lose flow
                let f = arcs[arc_idx].flow;
                if f < theta {
                    theta = f;
                    leave = Some(arc_idx);
                }
            }
        }
        let leave = leave.ok_or_else(|| {
            GwError::NumericalFailure("degenerate cycle without a leaving arc".into())
        })?;
        let theta = theta.max(S::zero());
        for (pos, &arc_idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                arcs[arc_idx].flow -= theta;
            } else {
                arcs[arc_idx].flow += theta;
            }
        }
        arcs[leave] = Arc { src: ei, dst: ej, flow: theta };
    }

    Err(GwError::NumericalFailure(
        "network simplex exceeded its pivot budget (stalled)".into(),
    ))
}

/// Arc indices on the tree path from node `src` to node `dst_node`, ordered
/// starting at `src`. Splices the two root chains at their first common node.
fn tree_path(
    src: usize,
    dst_node: usize,
    parent: &[(usize, usize)],
    _nodes: usize,
) -> Result<Vec<usize>, GwError> {
    let chain = |start: usize| -> (Vec<usize>, Vec<usize>) {
        let mut nodes = vec![start];
        let mut arcs = Vec::new();
        let mut cur = start;
        while parent[cur].0 != usize::MAX {
            arcs.push(parent[cur].1);
            cur = parent[cur].0;
            nodes.push(cur);
        }
        (nodes, arcs)
    };
    let (src_nodes, src_arcs) = chain(src);
    let (dst_nodes, dst_arcs) = chain(dst_node);
    for (si, &snode) in src_nodes.iter().enumerate() {
        if let Some(di) = dst_nodes.iter().position(|&x| x == snode) {
            let mut path = src_arcs[..si].to_vec();
            path.extend(dst_arcs[..di].iter().rev());
            return Ok(path);
        }
    }
    Err(GwError::NumericalFailure("cycle detection lost the tree".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Histogram;
    use ndarray::array;

    fn hist(w: &[f64]) -> Histogram<f64> {
        Histogram::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn singleton_problem_is_forced() {
        let sol = solve_ot(&array![[7.0]], &hist(&[1.0]), &hist(&[1.0])).unwrap();
        assert_eq!(sol.plan.entries()[[0, 0]], 1.0);
        assert!((sol.cost - 7.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_matching_takes_the_diagonal() {
        let c = array![[0.0, 1.0], [1.0, 0.0]];
        let sol = solve_ot(&c, &hist(&[0.5, 0.5]), &hist(&[0.5, 0.5])).unwrap();
        assert!(sol.cost.abs() < 1e-12);
        assert!((sol.plan.entries()[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((sol.plan.entries()[[1, 1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_instance_matches_parametric_oracle() {
        // Couplings are pi(t) = [[t, .4-t], [.5-t, .1+t]], t in [0, 0.4];
        // cost = 2.4 - 3t is minimized at t = 0.4.
        let c = array![[1.0, 2.0], [3.0, 1.0]];
        let sol = solve_ot(&c, &hist(&[0.4, 0.6]), &hist(&[0.5, 0.5])).unwrap();
        assert!((sol.cost - 1.2).abs() < 1e-12, "cost {}", sol.cost);
        let e = sol.plan.entries();
        assert!((e[[0, 0]] - 0.4).abs() < 1e-12);
        assert!(e[[0, 1]].abs() < 1e-12);
        assert!((e[[1, 0]] - 0.1).abs() < 1e-12);
        assert!((e[[1, 1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn permutation_costs_recover_the_permutation() {
        // zero cost exactly on a permutation pattern
        let perm = [2usize, 0, 3, 1];
        let n = 4;
        let mut c = Array2::from_elem((n, n), 1.0);
        for (i, &p) in perm.iter().enumerate() {
            c[[i, p]] = 0.0;
        }
        let h = Histogram::<f64>::uniform(n);
        let sol = solve_ot(&c, &h, &h).unwrap();
        assert!(sol.cost.abs() < 1e-12);
        for (i, &p) in perm.iter().enumerate() {
            assert!((sol.plan.entries()[[i, p]] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_solutions_have_sparse_support() {
        let mut state = 3u64;
        let mut unif = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / (1u64 << 53) as f64
        };
        for _ in 0..40 {
            let m = 2 + (unif() * 6.0) as usize;
            let n = 2 + (unif() * 6.0) as usize;
            let mut c = Array2::zeros((m, n));
            for v in c.iter_mut() {
                *v = unif() * 5.0;
            }
            let a = hist(&(0..m).map(|_| 0.05 + unif()).collect::<Vec<_>>());
            let b = hist(&(0..n).map(|_| 0.05 + unif()).collect::<Vec<_>>());
            let sol = solve_ot(&c, &a, &b).unwrap();
            assert!(sol.plan.nnz(0.0) <= m + n - 1, "support too large");
        }
    }

    #[test]
    fn duality_gap_is_zero_on_random_instances() {
        let mut state = 11u64;
        let mut unif = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let m = 1 + (unif() * 8.0) as usize;
            let n = 1 + (unif() * 8.0) as usize;
            let mut c = Array2::zeros((m, n));
            for v in c.iter_mut() {
                *v = unif() * 4.0 - 1.0;
            }
            let a = hist(&(0..m).map(|_| 0.1 + unif()).collect::<Vec<_>>());
            let b = hist(&(0..n).map(|_| 0.1 + unif()).collect::<Vec<_>>());
            let sol = solve_ot(&c, &a, &b).unwrap();
            let dual: f64 = (0..m).map(|i| sol.row_potentials[i] * a.get(i)).sum::<f64>()
                + (0..n).map(|j| sol.col_potentials[j] * b.get(j)).sum::<f64>();
            assert!(
                (sol.cost - dual).abs() <= 1e-8,
                "primal {} vs dual {dual}",
                sol.cost
            );
        }
    }

    #[test]
    fn never_beats_an_independent_coupling() {
        let mut state = 17u64;
        let mut unif = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / (1u64 << 53) as f64
        };
        for _ in 0..30 {
            let m = 2 + (unif() * 5.0) as usize;
            let n = 2 + (unif() * 5.0) as usize;
            let mut c = Array2::zeros((m, n));
            for v in c.iter_mut() {
                *v = unif() * 3.0;
            }
            let a = hist(&(0..m).map(|_| 0.1 + unif()).collect::<Vec<_>>());
            let b = hist(&(0..n).map(|_| 0.1 + unif()).collect::<Vec<_>>());
            let sol = solve_ot(&c, &a, &b).unwrap();
            let indep = CouplingPlan::independent(&a, &b);
            let mut indep_cost = 0.0;
            for i in 0..m {
                for j in 0..n {
                    indep_cost += c[[i, j]] * indep.entries()[[i, j]];
                }
            }
            assert!(sol.cost <= indep_cost + 1e-10);
        }
    }

    #[test]
    fn zero_mass_marginals_are_pruned_and_reinserted() {
        let c: Array2<f64> = array![[1.0, 2.0, 5.0], [3.0, 1.0, 5.0], [9.0, 9.0, 9.0]];
        let a = Histogram::from_weights(vec![0.4, 0.6, 0.0]).unwrap();
        let b = Histogram::from_weights(vec![0.5, 0.5, 0.0]).unwrap();
        let sol = solve_ot(&c, &a, &b).unwrap();
        assert!((sol.cost - 1.2).abs() < 1e-12);
        for j in 0..3 {
            assert_eq!(sol.plan.entries()[[2, j]], 0.0);
        }
        for i in 0..3 {
            assert_eq!(sol.plan.entries()[[i, 2]], 0.0);
        }
    }
}
