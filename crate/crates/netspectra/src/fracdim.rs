//! Cluster-growing dimension: how the number of nodes reachable within l
//! directed hops grows with l, averaged over all seeds, and the log-log
//! slope over a chosen window.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::graph::DirectedGraph;

/// Number of distinct nodes within hop distance 0..=l_max of `seed`,
/// following out-edges only. The seed counts, so the list starts at 1 and is
/// non-decreasing; once the reachable set is exhausted the count stays flat.
pub fn cluster_mass(g: &DirectedGraph, seed: usize, l_max: usize) -> Result<Vec<u64>> {
    let n = g.n_nodes();
    if seed >= n {
        return Err(Error::Param(format!(
            "seed {seed} out of range for a graph with {n} nodes"
        )));
    }
    let mut visited = vec![false; n];
    visited[seed] = true;
    let mut frontier = vec![seed];
    let mut next = Vec::new();
    let mut count = 1u64;
    let mut masses = Vec::with_capacity(l_max + 1);
    masses.push(count);
    for _ in 1..=l_max {
        if !frontier.is_empty() {
            for &u in &frontier {
                for &v in g.out_edges(u) {
                    if !visited[v] {
                        visited[v] = true;
                        count += 1;
                        next.push(v);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        masses.push(count);
    }
    Ok(masses)
}

/// Average cluster mass per distance, over every node as seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthCurve {
    /// masses[l] = mean number of nodes within l hops, l = 0..=l_max.
    pub masses: Vec<f64>,
    pub n_seeds: usize,
    /// The final-distance average, where the curve has flattened out.
    pub saturation_mass: f64,
}

impl GrowthCurve {
    pub fn l_max(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "l,mean_mass")?;
        for (l, m) in self.masses.iter().enumerate() {
            writeln!(w, "{l},{m}")?;
        }
        Ok(())
    }
}

/// Mean of [`cluster_mass`] over all seeds, including sink nodes (they
/// contribute a constant 1 and genuinely depress the average). Seeds run in
/// parallel; per-seed masses are integers, so the sum is exact and the
/// result does not depend on scheduling.
pub fn average_mass(g: &DirectedGraph, l_max: usize) -> Result<GrowthCurve> {
    if l_max < 1 {
        return Err(Error::Param("l_max must be at least 1".into()));
    }
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::Data("cannot average over an empty graph".into()));
    }
    let totals: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|s| cluster_mass(g, s, l_max))
        .try_reduce(
            || vec![0u64; l_max + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += *y;
                }
                Ok(a)
            },
        )?;
    let nf = n as f64;
    let masses: Vec<f64> = totals.iter().map(|&t| t as f64 / nf).collect();
    Ok(GrowthCurve {
        saturation_mass: *masses.last().unwrap(),
        masses,
        n_seeds: n,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionFit {
    /// Slope of ln(mass) vs ln(l) over the window: the growth dimension.
    pub d: f64,
    pub stderr: f64,
    pub l_lo: usize,
    pub l_hi: usize,
    /// Set when the window top reaches past half the network, where growth
    /// is capped by system size and the slope underestimates the dimension.
    pub saturated: bool,
}

/// Log-log slope of the growth curve over l in [l_lo, l_hi].
pub fn dimension_fit(curve: &GrowthCurve, l_lo: usize, l_hi: usize) -> Result<DimensionFit> {
    if l_lo < 1 {
        return Err(Error::Param(
            "fit window must start at l >= 1 (ln 0 is undefined)".into(),
        ));
    }
    if l_hi > curve.l_max() {
        return Err(Error::Param(format!(
            "fit window top {l_hi} exceeds the curve's l_max {}",
            curve.l_max()
        )));
    }
    if l_hi < l_lo + 1 {
        return Err(Error::Param(format!(
            "fit window [{l_lo}, {l_hi}] holds fewer than two points"
        )));
    }
    let mut x = Vec::with_capacity(l_hi - l_lo + 1);
    let mut y = Vec::with_capacity(l_hi - l_lo + 1);
    for l in l_lo..=l_hi {
        x.push((l as f64).ln());
        y.push(curve.masses[l].ln());
    }
    let fit = fit_line(&x, &y)?;
    let saturated = curve.masses[l_hi] > 0.5 * curve.n_seeds as f64;
    if saturated {
        log::warn!(
            "growth fit window reaches saturation: mean mass {} at l={} out of {} nodes",
            curve.masses[l_hi],
            l_hi,
            curve.n_seeds
        );
    }
    Ok(DimensionFit {
        d: fit.slope,
        stderr: fit.stderr,
        l_lo,
        l_hi,
        saturated,
    })
}

/// The same analysis on the symmetrized graph (every link made two-way).
pub fn undirected_dimension(
    g: &DirectedGraph,
    l_max: usize,
    l_lo: usize,
    l_hi: usize,
) -> Result<(GrowthCurve, DimensionFit)> {
    let u = g.to_undirected();
    let curve = average_mass(&u, l_max)?;
    let fit = dimension_fit(&curve, l_lo, l_hi)?;
    Ok((curve, fit))
}
