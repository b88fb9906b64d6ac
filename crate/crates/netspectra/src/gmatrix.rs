//! Damped column-stochastic link operator and PageRank.
//!
//! For a directed graph with adjacency A (A_ij = 1 when j links to i) the
//! operator is G = alpha * S + (1 - alpha) / n * J, where S is A with each
//! column divided by its out-degree, columns of zero out-degree (dangling
//! nodes) replaced by the uniform column 1/n, and J the all-ones matrix.
//! G is applied matrix-free in O(edges + n); the dense form exists only for
//! verification at small n.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::ops::{AddAssign, Mul};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Matrix-free representation of G (column-stochastic, damping `alpha`).
#[derive(Debug, Clone)]
pub struct GoogleOperator {
    alpha: f64,
    n: usize,
    /// CSR by source: for node j, `targets[offsets[j]..offsets[j+1]]` with
    /// uniform column weight `1 / out_degree(j)`.
    offsets: Vec<usize>,
    targets: Vec<usize>,
    inv_out_degree: Vec<f64>,
    /// Nodes with zero out-degree; their columns are uniform 1/n.
    dangling: Vec<usize>,
}

/// PageRank solution: the lambda = 1 right eigenvector of G, normalized to
/// sum 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PageRankVector {
    pub probabilities: Vec<f64>,
    /// L1 change of the final power-iteration step.
    pub residual: f64,
    pub iterations: usize,
}

/// Build the operator for `g` with damping `alpha` in (0, 1).
pub fn build_operator(g: &DirectedGraph, alpha: f64) -> Result<GoogleOperator> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::Param("graph has no nodes".into()));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(g.n_edges());
    let mut inv_out_degree = vec![0.0; n];
    let mut dangling = Vec::new();
    offsets.push(0);
    for j in 0..n {
        let out = g.out_edges(j);
        if out.is_empty() {
            dangling.push(j);
        } else {
            inv_out_degree[j] = 1.0 / out.len() as f64;
            targets.extend_from_slice(out);
        }
        offsets.push(targets.len());
    }
    Ok(GoogleOperator {
        alpha,
        n,
        offsets,
        targets,
        inv_out_degree,
        dangling,
    })
}

impl GoogleOperator {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    /// y = G v without forming G. Works for real and complex scalars.
    pub fn apply<T>(&self, v: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Zero + AddAssign + Mul<f64, Output = T>,
    {
        if v.len() != self.n {
            return Err(Error::Param(format!(
                "vector length {} does not match operator size {}",
                v.len(),
                self.n
            )));
        }
        let mut out = vec![T::zero(); self.n];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// In-place variant of [`apply`](Self::apply); `out` must have length n.
    pub fn apply_into<T>(&self, v: &[T], out: &mut [T])
    where
        T: Copy + Zero + AddAssign + Mul<f64, Output = T>,
    {
        assert_eq!(v.len(), self.n);
        assert_eq!(out.len(), self.n);
        for o in out.iter_mut() {
            *o = T::zero();
        }
        // Sparse scatter: alpha * S restricted to real links.
        for j in 0..self.n {
            let lo = self.offsets[j];
            let hi = self.offsets[j + 1];
            if lo == hi {
                continue;
            }
            let w = v[j] * (self.alpha * self.inv_out_degree[j]);
            for &i in &self.targets[lo..hi] {
                out[i] += w;
            }
        }
        // Rank-one parts: dangling columns and damping, both uniform.
        let mut total = T::zero();
        for &x in v {
            total += x;
        }
        let mut dangling_sum = T::zero();
        for &j in &self.dangling {
            dangling_sum += v[j];
        }
        let uniform = dangling_sum * (self.alpha / self.n as f64)
            + total * ((1.0 - self.alpha) / self.n as f64);
        for o in out.iter_mut() {
            *o += uniform;
        }
    }

    /// Dense n x n form of G in row-major order. Verification only; guarded
    /// the same way as the dense eigensolver.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let teleport = (1.0 - self.alpha) / n as f64;
        let mut m = vec![teleport; n * n];
        for &j in &self.dangling {
            let w = self.alpha / n as f64;
            for i in 0..n {
                m[i * n + j] += w;
            }
        }
        for j in 0..n {
            let w = self.alpha * self.inv_out_degree[j];
            for &i in &self.targets[self.offsets[j]..self.offsets[j + 1]] {
                m[i * n + j] += w;
            }
        }
        m
    }

    /// Dense column-stochastic link matrix S alone (row-major): the operator
    /// with the damping stripped off. Dangling columns are uniform.
    pub fn to_dense_link_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for &j in &self.dangling {
            let w = 1.0 / n as f64;
            for i in 0..n {
                m[i * n + j] += w;
            }
        }
        for j in 0..n {
            let w = self.inv_out_degree[j];
            for &i in &self.targets[self.offsets[j]..self.offsets[j + 1]] {
                m[i * n + j] += w;
            }
        }
        m
    }
}

/// Power iteration for PageRank from the uniform start vector. Stops when the
/// L1 change drops below `tol`; errors (carrying the last iterate) if
/// `max_iter` is exhausted first.
pub fn pagerank(op: &GoogleOperator, tol: f64, max_iter: usize) -> Result<PageRankVector> {
    if tol <= 0.0 {
        return Err(Error::Param(format!("tolerance must be positive, got {tol}")));
    }
    let n = op.n();
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        op.apply_into(&p, &mut next);
        residual = p
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
        // G is exactly column-stochastic, but renormalize to stop drift from
        // accumulating over long runs.
        let sum: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= sum;
        }
        std::mem::swap(&mut p, &mut next);
        if residual < tol {
            return Ok(PageRankVector {
                probabilities: p,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual,
        last: p,
    })
}

/// Node permutation by descending PageRank probability, ties broken by
/// ascending node index. `order[0]` is the top-ranked node.
pub fn order_by_pagerank(pr: &PageRankVector) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pr.probabilities.len()).collect();
    order.sort_by(|&a, &b| {
        pr.probabilities[b]
            .total_cmp(&pr.probabilities[a])
            .then(a.cmp(&b))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_chain, generate_cycle, generate_preferential};
    use rand::{Rng, SeedableRng};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn alpha_outside_open_interval_rejected() {
        let g = generate_cycle(3).unwrap();
        assert!(build_operator(&g, 0.0).is_err());
        assert!(build_operator(&g, 1.0).is_err());
        assert!(build_operator(&g, 0.5).is_ok());
    }

    #[test]
    fn dense_form_of_two_node_chain() {
        let g = generate_chain(2).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        let d = op.to_dense();
        let expect = [0.075, 0.5, 0.925, 0.5];
        for (a, b) in d.iter().zip(expect.iter()) {
            assert_close(*a, *b, 1e-15);
        }
    }

    #[test]
    fn apply_on_three_cycle_basis_vector() {
        let g = generate_cycle(3).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        let out = op.apply(&[1.0, 0.0, 0.0]).unwrap();
        assert_close(out[0], 0.05, 1e-15);
        assert_close(out[1], 0.90, 1e-15);
        assert_close(out[2], 0.05, 1e-15);
    }

    #[test]
    fn columns_sum_to_one_dense_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 7, 40, 200] {
            let edges: Vec<(usize, usize)> = (0..3 * n)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect();
            let g = DirectedGraph::from_edges(n, edges, None).unwrap();
            let op = build_operator(&g, 0.85).unwrap();
            let d = op.to_dense();
            for j in 0..n {
                let col: f64 = (0..n).map(|i| d[i * n + j]).sum();
                assert_close(col, 1.0, 1e-12);
            }
        }
    }

    #[test]
    fn apply_matches_dense_and_preserves_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let g = generate_preferential(60, 2, 9).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        let d = op.to_dense();
        let n = op.n();
        for _ in 0..20 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = op.apply(&v).unwrap();
            for i in 0..n {
                let slow: f64 = (0..n).map(|j| d[i * n + j] * v[j]).sum();
                assert_close(fast[i], slow, 1e-12);
            }
            let sv: f64 = v.iter().sum();
            let sf: f64 = fast.iter().sum();
            assert_close(sf, sv, 1e-12);
        }
    }

    #[test]
    fn zero_sum_vectors_contract_by_alpha() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let alpha = 0.85;
        for case in 0..200 {
            let n = 2 + (case % 40);
            let edges: Vec<(usize, usize)> = (0..2 * n)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect();
            let g = DirectedGraph::from_edges(n, edges, None).unwrap();
            let op = build_operator(&g, alpha).unwrap();
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            for x in v.iter_mut() {
                *x -= mean;
            }
            let gv = op.apply(&v).unwrap();
            let l1v: f64 = v.iter().map(|x| x.abs()).sum();
            let l1gv: f64 = gv.iter().map(|x| x.abs()).sum();
            assert!(l1gv <= alpha * l1v + 1e-12, "{l1gv} > alpha * {l1v}");
        }
    }

    #[test]
    fn pagerank_two_node_chain_exact() {
        let g = generate_chain(2).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        let pr = pagerank(&op, 1e-14, 10_000).unwrap();
        // Exact fixed point of [[0.075, 0.5], [0.925, 0.5]]: (20/57, 37/57).
        assert_close(pr.probabilities[0], 20.0 / 57.0, 1e-12);
        assert_close(pr.probabilities[1], 37.0 / 57.0, 1e-12);
    }

    #[test]
    fn pagerank_uniform_on_cycles() {
        for n in [1usize, 2, 3, 10, 101] {
            let g = generate_cycle(n).unwrap();
            let op = build_operator(&g, 0.85).unwrap();
            let pr = pagerank(&op, 1e-13, 10_000).unwrap();
            for &p in &pr.probabilities {
                assert_close(p, 1.0 / n as f64, 1e-12);
            }
        }
    }

    #[test]
    fn pagerank_residual_is_true_fixed_point_gap() {
        let g = generate_preferential(150, 2, 5).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        let pr = pagerank(&op, 1e-12, 10_000).unwrap();
        let gp = op.apply(&pr.probabilities).unwrap();
        let gap: f64 = gp
            .iter()
            .zip(pr.probabilities.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(gap <= 1e-10, "fixed-point gap {gap}");
        // damping bound: contraction by alpha per sweep
        let bound = (1e-12f64).ln() / 0.85f64.ln();
        assert!(
            (pr.iterations as f64) < 1.5 * bound + 20.0,
            "took {} iterations, bound {bound}",
            pr.iterations
        );
    }

    #[test]
    fn pagerank_budget_error_carries_last_iterate() {
        let g = generate_preferential(80, 2, 5).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        match pagerank(&op, 1e-12, 3) {
            Err(Error::Convergence {
                iterations, last, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 80);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn order_by_pagerank_breaks_ties_by_index() {
        let pr = PageRankVector {
            probabilities: vec![0.25, 0.25, 0.4, 0.1],
            residual: 0.0,
            iterations: 1,
        };
        assert_eq!(order_by_pagerank(&pr), vec![2, 0, 1, 3]);
    }
}
