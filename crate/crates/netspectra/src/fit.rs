//! Least-squares line fit shared by the log-log scaling analyses.

use crate::error::{Error, Result};

pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimator; defined as 0 for a two-point
    /// fit, where the line is exact and there are no residual degrees of
    /// freedom.
    pub stderr: f64,
}

pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Param(format!(
            "fit needs matching coordinate counts, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Data("line fit needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::Data("line fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n == 2 {
        0.0
    } else {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let r = yi - slope * xi - intercept;
                r * r
            })
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    };
    Ok(LineFit {
        slope,
        intercept,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_three_points() {
        let x = [1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 0.5).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-14);
        assert!((f.intercept + 0.5).abs() < 1e-14);
        assert!(f.stderr < 1e-14);
    }

    #[test]
    fn two_points_zero_stderr() {
        let f = fit_line(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(f.slope, 2.0);
        assert_eq!(f.stderr, 0.0);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(fit_line(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn known_stderr_value() {
        // y = x with the center point pulled up by 0.3. The pull sits at the
        // mean of x, so the slope stays exactly 1, the intercept absorbs
        // 0.3/5, and SSR = 4*(0.06)^2 + (0.24)^2 = 0.072.
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 1.0, 2.3, 3.0, 4.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-10);
        assert!((f.intercept - 0.06).abs() < 1e-10);
        assert!((f.stderr - (0.072f64 / 3.0 / 10.0).sqrt()).abs() < 1e-10);
    }
}
