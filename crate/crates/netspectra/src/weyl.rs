//! Integrated density of states over relaxation rates, eigenvalue counting,
//! degeneracy census, and the power-law fit of count versus network size.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::spectral::SpectrumResult;

/// Relaxation rate of each eigenvalue, `gamma = -2 ln |lambda|`, sorted
/// ascending. Rates are clamped at 0 (moduli cannot exceed 1, but rounding
/// can leave |lambda| a few ulps above it). Zero-modulus eigenvalues have no
/// finite rate and are skipped with a warning.
pub fn relaxation_rates(spec: &SpectrumResult) -> Vec<f64> {
    let mut rates: Vec<f64> = Vec::with_capacity(spec.pairs.len());
    for p in &spec.pairs {
        let m = p.lambda.norm();
        if m == 0.0 {
            log::warn!("zero-modulus eigenvalue has infinite relaxation rate; skipped");
            continue;
        }
        rates.push((-2.0 * m.ln()).max(0.0));
    }
    rates.sort_by(f64::total_cmp);
    rates
}

/// Cumulative fraction of retained states at each distinct relaxation rate:
/// a step function that is a CDF over the spectrum above the cutoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCurve {
    pub gammas: Vec<f64>,
    pub w: Vec<f64>,
    /// Number of states the fractions are normalized on.
    pub n_states: usize,
}

impl DensityCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "gamma,W")?;
        for (g, f) in self.gammas.iter().zip(&self.w) {
            writeln!(w, "{g},{f}")?;
        }
        Ok(())
    }
}

/// W(gamma) = fraction of eigenvalues with |lambda| >= lambda_min whose rate
/// is <= gamma, evaluated at each distinct rate. An m-fold degenerate
/// modulus shows up as a vertical step of height m / n_states.
pub fn integrated_density(spec: &SpectrumResult, lambda_min: f64) -> Result<DensityCurve> {
    let mut rates: Vec<f64> = Vec::new();
    for p in &spec.pairs {
        let m = p.lambda.norm();
        if m < lambda_min {
            continue;
        }
        if m == 0.0 {
            log::warn!("zero-modulus eigenvalue has infinite relaxation rate; skipped");
            continue;
        }
        rates.push((-2.0 * m.ln()).max(0.0));
    }
    if rates.is_empty() {
        return Err(Error::Data(format!(
            "no eigenvalues with |lambda| >= {lambda_min} to normalize the density on"
        )));
    }
    rates.sort_by(f64::total_cmp);
    let total = rates.len();
    let mut gammas = Vec::new();
    let mut w = Vec::new();
    let mut i = 0;
    while i < total {
        let g = rates[i];
        let mut j = i;
        while j < total && rates[j] == g {
            j += 1;
        }
        gammas.push(g);
        w.push(j as f64 / total as f64);
        i = j;
    }
    Ok(DensityCurve {
        gammas,
        w,
        n_states: total,
    })
}

/// Number of eigenvalues with |lambda| strictly above `threshold`, counting
/// multiplicity. The threshold must not undercut the spectrum's own cutoff,
/// or the count would silently miss states that were never computed.
pub fn count_eigenvalues(spec: &SpectrumResult, threshold: f64) -> Result<usize> {
    if threshold < spec.lambda_min {
        return Err(Error::Param(format!(
            "threshold {threshold} is below the spectrum cutoff {}; the count would be incomplete",
            spec.lambda_min
        )));
    }
    Ok(spec
        .pairs
        .iter()
        .filter(|p| p.lambda.norm() > threshold)
        .count())
}

/// For m = 1..=m_max, how many eigenvalues sit on the circle |lambda| =
/// alpha/m (within tol). Disconnected or absorbing substructures pile
/// eigenvalues onto exactly these moduli.
pub fn degeneracy_census(
    spec: &SpectrumResult,
    alpha: f64,
    m_max: usize,
    tol: f64,
) -> Result<Vec<(usize, usize)>> {
    if m_max < 1 {
        return Err(Error::Param("census needs m_max >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok((1..=m_max)
        .map(|m| {
            let target = alpha / m as f64;
            let count = spec
                .pairs
                .iter()
                .filter(|p| (p.lambda.norm() - target).abs() <= tol)
                .count();
            (m, count)
        })
        .collect())
}

/// Power-law fit of eigenvalue count against network size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylFit {
    /// Fitted exponent: count grows like size^nu.
    pub nu: f64,
    /// Standard error of the slope estimator (0 for a two-point fit).
    pub stderr: f64,
    pub intercept: f64,
    /// Modulus cutoff the counts were taken at.
    pub threshold: f64,
    /// The fitted (size, count) points.
    pub points: Vec<(u64, u64)>,
}

impl WeylFit {
    pub fn write_points_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "N,N_lambda")?;
        for (n, c) in &self.points {
            writeln!(w, "{n},{c}")?;
        }
        Ok(())
    }
}

/// Unweighted least squares of ln(count) against ln(size).
pub fn weyl_fit(points: &[(u64, u64)], threshold: f64) -> Result<WeylFit> {
    if points.len() < 2 {
        return Err(Error::Data(format!(
            "exponent fit needs at least two (size, count) points, got {}",
            points.len()
        )));
    }
    let mut x = Vec::with_capacity(points.len());
    let mut y = Vec::with_capacity(points.len());
    for &(n, c) in points {
        if n == 0 || c == 0 {
            return Err(Error::Data(format!(
                "exponent fit needs positive sizes and counts, got ({n}, {c})"
            )));
        }
        x.push((n as f64).ln());
        y.push((c as f64).ln());
    }
    let fit = fit_line(&x, &y)?;
    Ok(WeylFit {
        nu: fit.slope,
        stderr: fit.stderr,
        intercept: fit.intercept,
        threshold,
        points: points.to_vec(),
    })
}

/// Fractal dimension of the support of the decaying eigenstates, d = 2 nu.
pub fn dimension_from_nu(nu: f64) -> f64 {
    2.0 * nu
}
