//! Eigenvector localization: participation ratios and coarse-grained
//! probability maps over a caller-supplied node ordering (typically the
//! PageRank order, so localization on top-ranked nodes is visible).

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectrumResult;

/// Eigenvalues closer than this are treated as one degenerate cluster when
/// picking representative states and the one-per-cluster average.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Effective number of nodes an eigenstate occupies:
/// `xi = (sum |psi_j|^2)^2 / sum |psi_j|^4`. 1 for a delta state, n for a
/// uniform one, and invariant under overall rescaling of psi.
pub fn participation_ratio(psi: &[Complex64]) -> Result<f64> {
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    for z in psi {
        let m2 = z.norm_sqr();
        s2 += m2;
        s4 += m2 * m2;
    }
    if s4 == 0.0 {
        return Err(Error::Param(
            "participation ratio of the zero vector is undefined".into(),
        ));
    }
    Ok(s2 * s2 / s4)
}

/// Participation ratios across a spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParProfile {
    /// (|lambda|, xi) per state carrying an eigenvector, in spectrum order.
    pub points: Vec<(f64, f64)>,
    /// Mean xi over all states (each member of a degenerate cluster counts).
    pub mean: f64,
    /// Mean xi counting each degenerate cluster once (cluster value = mean
    /// xi of its members).
    pub mean_one_per_cluster: f64,
}

impl ParProfile {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "modulus,xi")?;
        for (m, xi) in &self.points {
            writeln!(w, "{m},{xi}")?;
        }
        Ok(())
    }
}

/// Group pair indices into degenerate clusters by eigenvalue proximity.
/// Pairs are assumed sorted by descending modulus (spectrum order), so a
/// greedy first-fit scan is deterministic.
fn clusters(spec: &SpectrumResult) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in spec.pairs.iter().enumerate() {
        let found = groups.iter_mut().find(|g| {
            let rep = spec.pairs[g[0]].lambda;
            (rep - p.lambda).norm() <= CLUSTER_TOL
        });
        match found {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// PAR of every eigenstate plus the two averaging conventions. States whose
/// eigenvector did not converge are skipped with a warning; a spectrum with
/// no eigenvectors at all is a data error.
pub fn par_profile(spec: &SpectrumResult) -> Result<ParProfile> {
    let mut xi = vec![None; spec.pairs.len()];
    let mut points = Vec::new();
    for (i, p) in spec.pairs.iter().enumerate() {
        match &p.vector {
            Some(v) => {
                let x = participation_ratio(v)?;
                xi[i] = Some(x);
                points.push((p.lambda.norm(), x));
            }
            None => log::warn!(
                "state at lambda = {} has no converged eigenvector; excluded from PAR profile",
                p.lambda
            ),
        }
    }
    if points.is_empty() {
        return Err(Error::Data(
            "spectrum carries no eigenvectors to profile".into(),
        ));
    }
    let mean = points.iter().map(|(_, x)| x).sum::<f64>() / points.len() as f64;

    let mut cluster_means = Vec::new();
    for group in clusters(spec) {
        let vals: Vec<f64> = group.iter().filter_map(|&i| xi[i]).collect();
        if !vals.is_empty() {
            cluster_means.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    let mean_one_per_cluster =
        cluster_means.iter().sum::<f64>() / cluster_means.len() as f64;

    Ok(ParProfile {
        points,
        mean,
        mean_one_per_cluster,
    })
}

/// Probability mass of eigenstates summed over consecutive cells of a node
/// ordering. Rows are states by descending |lambda|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoarseGrid {
    pub n_states: usize,
    pub n_cells: usize,
    pub cell_size: usize,
    /// Row-major (state, cell) masses.
    pub values: Vec<f64>,
    /// Eigenvalue (re, im) behind each row.
    pub lambdas: Vec<(f64, f64)>,
}

impl CoarseGrid {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cells..(i + 1) * self.n_cells]
    }

    /// Matrix CSV: one row per state, no header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n_states {
            let line = self
                .row(i)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Geometry and per-row eigenvalues, for tools reading the CSV matrix.
    pub fn write_sidecar_json<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            n_states: usize,
            n_cells: usize,
            cell_size: usize,
            lambdas: &'a [(f64, f64)],
        }
        serde_json::to_writer_pretty(
            w,
            &Sidecar {
                n_states: self.n_states,
                n_cells: self.n_cells,
                cell_size: self.cell_size,
                lambdas: &self.lambdas,
            },
        )?;
        Ok(())
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::Param(format!(
            "ordering has {} entries for {} nodes",
            order.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n || seen[k] {
            return Err(Error::Param("ordering is not a permutation of the nodes".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Representative pair index per degenerate cluster (the member with the
/// smallest residual among those carrying an eigenvector), in descending
/// |lambda| order, capped at max_states.
fn representatives(spec: &SpectrumResult, max_states: usize) -> Vec<usize> {
    let mut reps = Vec::new();
    for group in clusters(spec) {
        let best = group
            .iter()
            .copied()
            .filter(|&i| spec.pairs[i].vector.is_some())
            .min_by(|&a, &b| spec.pairs[a].residual.total_cmp(&spec.pairs[b].residual));
        if let Some(i) = best {
            reps.push(i);
        }
        if reps.len() == max_states {
            break;
        }
    }
    reps
}

/// Normalized probability |psi|^2 of one state, permuted so position k holds
/// node order[k].
fn probability_in_order(psi: &[Complex64], order: &[usize]) -> Vec<f64> {
    let s2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    order.iter().map(|&node| psi[node].norm_sqr() / s2).collect()
}

/// Coarse-grain the top eigenstates over `n_cells` consecutive cells of the
/// ordering. Cell size is ceil(n / n_cells); when that leaves trailing cells
/// empty the grid shrinks to the cells actually covering nodes, so the last
/// cell may be short but never empty. One representative state per
/// degenerate cluster. Every row sums to 1.
pub fn coarse_grain(
    spec: &SpectrumResult,
    order: &[usize],
    n_cells: usize,
    max_states: usize,
) -> Result<CoarseGrid> {
    let n = spec.n;
    if n_cells == 0 || n_cells > n {
        return Err(Error::Param(format!(
            "cell count {n_cells} invalid for {n} nodes"
        )));
    }
    if max_states == 0 {
        return Err(Error::Param("max_states must be positive".into()));
    }
    check_permutation(order, n)?;
    let cell_size = n.div_ceil(n_cells);
    let eff_cells = n.div_ceil(cell_size);
    let reps = representatives(spec, max_states);
    if reps.is_empty() {
        return Err(Error::Data("spectrum carries no eigenvectors to grid".into()));
    }
    let mut values = Vec::with_capacity(reps.len() * eff_cells);
    let mut lambdas = Vec::with_capacity(reps.len());
    for &i in &reps {
        let p = &spec.pairs[i];
        let w = probability_in_order(p.vector.as_ref().unwrap(), order);
        for c in 0..eff_cells {
            let lo = c * cell_size;
            let hi = ((c + 1) * cell_size).min(n);
            values.push(w[lo..hi].iter().sum());
        }
        lambdas.push((p.lambda.re, p.lambda.im));
    }
    Ok(CoarseGrid {
        n_states: reps.len(),
        n_cells: eff_cells,
        cell_size,
        values,
        lambdas,
    })
}

/// Like [`coarse_grain`] but restricted to the leading
/// `first_cells * cell_size` positions of the ordering, with the caller
/// fixing the cell size. Masses stay normalized against the full vector, so
/// a row sums to the state's total probability inside the window.
pub fn zoom_grid(
    spec: &SpectrumResult,
    order: &[usize],
    first_cells: usize,
    cell_size: usize,
    max_states: usize,
) -> Result<CoarseGrid> {
    let n = spec.n;
    if first_cells == 0 || cell_size == 0 {
        return Err(Error::Param("zoom window must be non-empty".into()));
    }
    if first_cells.checked_mul(cell_size).is_none_or(|w| w > n) {
        return Err(Error::Param(format!(
            "zoom window {first_cells} x {cell_size} exceeds {n} nodes"
        )));
    }
    if max_states == 0 {
        return Err(Error::Param("max_states must be positive".into()));
    }
    check_permutation(order, n)?;
    let reps = representatives(spec, max_states);
    if reps.is_empty() {
        return Err(Error::Data("spectrum carries no eigenvectors to grid".into()));
    }
    let mut values = Vec::with_capacity(reps.len() * first_cells);
    let mut lambdas = Vec::with_capacity(reps.len());
    for &i in &reps {
        let p = &spec.pairs[i];
        let w = probability_in_order(p.vector.as_ref().unwrap(), order);
        for c in 0..first_cells {
            let lo = c * cell_size;
            values.push(w[lo..lo + cell_size].iter().sum());
        }
        lambdas.push((p.lambda.re, p.lambda.im));
    }
    Ok(CoarseGrid {
        n_states: reps.len(),
        n_cells: first_cells,
        cell_size,
        values,
        lambdas,
    })
}
