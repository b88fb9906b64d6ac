//! Complex eigenvalue spectra of the damped link operator.
//!
//! Two independent routes produce spectra. [`arnoldi_spectrum`] is the
//! production path: explicitly restarted Arnoldi iteration in complex
//! arithmetic, with modified Gram-Schmidt plus full reorthogonalization,
//! deflation against the locked Schur basis, and fresh random start vectors
//! per restart so degenerate eigenvalue multiplicities are recovered one
//! copy at a time. [`dense_spectrum`] is the verification oracle for small
//! matrices: eigenvalues from a third-party Schur decomposition, eigenvectors
//! from inverse iteration on the Householder-reduced matrix. Both report
//! per-pair residuals measured against the actual operator.

mod hessenberg;
pub mod io;
mod linalg;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gmatrix::{build_operator, GoogleOperator};
use crate::graph::DirectedGraph;
use hessenberg::{hessenberg_eigenvalues, hessenberg_eigenvector, real_hessenberg};
use linalg::{axpy, cdot, norm2, project_out, scale, CMat};

/// Largest matrix the dense verification route will materialize.
pub const DENSE_LIMIT: usize = 2000;

/// One converged eigenpair. The eigenvector is absent when only the Schur
/// direction converged (defective or ill-conditioned eigenvector); the
/// residual then refers to the Schur relation instead of `G psi = lambda psi`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub vector: Option<Vec<Complex64>>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumMeta {
    pub source: String,
    pub alpha: f64,
}

/// Spectrum of the operator above a modulus cutoff, sorted by descending
/// modulus.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub pairs: Vec<EigenPair>,
    pub lambda_min: f64,
    pub n: usize,
    pub meta: SpectrumMeta,
    /// Restart budget ran out while restarts were still productive, so
    /// degenerate multiplicities are only a lower bound.
    pub multiplicity_lower_bound: bool,
    /// Nothing above the cutoff converged (Krylov dimension too small).
    pub partial: bool,
}

impl SpectrumResult {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

/// Arnoldi iteration parameters. Defaults match the CLI defaults.
#[derive(Debug, Clone)]
pub struct ArnoldiConfig {
    /// Keep eigenvalues with |lambda| >= lambda_min.
    pub lambda_min: f64,
    /// Krylov subspace dimension per restart (clamped to n).
    pub krylov_dim: usize,
    /// Residual acceptance threshold.
    pub tol: f64,
    /// Restart budget; hunting multiplicities costs one restart per copy.
    pub max_restarts: usize,
    pub seed: u64,
    /// Two pairs merge when eigenvalues are this close and eigenvectors
    /// overlap above 0.999.
    pub merge_tol: f64,
}

impl Default for ArnoldiConfig {
    fn default() -> Self {
        Self {
            lambda_min: 0.1,
            krylov_dim: 600,
            tol: 1e-8,
            max_restarts: 64,
            seed: 0,
            merge_tol: 1e-8,
        }
    }
}

/// L2 residual of a candidate eigenpair, `|G psi - lambda psi| / |psi|`.
pub fn residual(op: &GoogleOperator, lambda: Complex64, psi: &[Complex64]) -> Result<f64> {
    let nrm = norm2(psi);
    if nrm == 0.0 {
        return Err(Error::Param("residual of the zero vector is undefined".into()));
    }
    let mut g_psi = op.apply(psi)?;
    axpy(&mut g_psi, -lambda, psi);
    Ok(norm2(&g_psi) / nrm)
}

/// Locked partial Schur decomposition: G Q = Q R with Q orthonormal columns
/// and R upper triangular, stored as columns (`r_cols[j]` has length j+1 and
/// `r_cols[j][j]` is the eigenvalue locked with Schur vector j).
#[derive(Default)]
struct LockState {
    q: Vec<Vec<Complex64>>,
    r_cols: Vec<Vec<Complex64>>,
    pairs: Vec<EigenPair>,
}

impl LockState {
    /// Try to lock (theta, x) where x is unit-norm and orthogonal to Q, with
    /// gx = G x precomputed. On success the output pair carries a recovered
    /// eigenvector when one exists with residual within tol.
    fn try_lock(
        &mut self,
        op: &GoogleOperator,
        theta: Complex64,
        x: Vec<Complex64>,
        gx: &[Complex64],
        tol: f64,
    ) -> Result<bool> {
        let k = self.q.len();
        let mut s = Vec::with_capacity(k);
        for q in &self.q {
            s.push(cdot(q, gx));
        }
        // Schur residual: G x - Q s - theta x.
        let mut r = gx.to_vec();
        for (j, q) in self.q.iter().enumerate() {
            axpy(&mut r, -s[j], q);
        }
        axpy(&mut r, -theta, &x);
        let schur_res = norm2(&r);
        if !(schur_res <= tol) {
            return Ok(false);
        }

        // Recover an eigenvector in span(Q, x): psi = x + Q z with
        // (R - theta I) z = -s. Back-substitution; a (near-)singular diagonal
        // means theta collides with an already-locked eigenvalue, where the
        // consistent choice for the free component is zero.
        let mut z = vec![Complex64::ZERO; k];
        for i in (0..k).rev() {
            let mut rhs = -s[i];
            for j in (i + 1)..k {
                rhs -= self.r_cols[j][i] * z[j];
            }
            let denom = self.r_cols[i][i] - theta;
            z[i] = if denom.norm() <= 1e-12 {
                Complex64::ZERO
            } else {
                rhs / denom
            };
        }
        let mut psi = x.clone();
        for (j, q) in self.q.iter().enumerate() {
            axpy(&mut psi, z[j], q);
        }
        let psi_norm = norm2(&psi);
        scale(&mut psi, 1.0 / psi_norm);
        let full_res = residual(op, theta, &psi)?;

        let pair = if full_res <= tol {
            EigenPair {
                lambda: theta,
                vector: Some(psi),
                residual: full_res,
            }
        } else {
            // Schur direction converged but no eigenvector exists at this
            // tolerance (defective eigenvalue): record the pair without one.
            EigenPair {
                lambda: theta,
                vector: None,
                residual: schur_res,
            }
        };

        let mut col = s;
        col.push(theta);
        self.q.push(x);
        self.r_cols.push(col);
        self.pairs.push(pair);
        Ok(true)
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize, q: &[Vec<Complex64>]) -> Option<Vec<Complex64>> {
    for _ in 0..8 {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        project_out(&mut v, q);
        project_out(&mut v, q);
        let nrm = norm2(&v);
        if nrm > 1e-8 {
            scale(&mut v, 1.0 / nrm);
            return Some(v);
        }
    }
    None
}

/// Arnoldi factorization of the deflated operator (I - QQ*) G, starting from
/// `v0` (unit, orthogonal to Q). Returns the basis and the Hessenberg columns
/// (`h_cols[k]` has length k+2, last entry the next-vector norm).
fn arnoldi_factorization(
    op: &GoogleOperator,
    q: &[Vec<Complex64>],
    v0: Vec<Complex64>,
    m_cap: usize,
) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
    let mut v = vec![v0];
    let mut h_cols: Vec<Vec<Complex64>> = Vec::with_capacity(m_cap);
    for k in 0..m_cap {
        let mut w = op.apply(&v[k])?;
        project_out(&mut w, q);
        let mut hcol = vec![Complex64::ZERO; k + 2];
        for i in 0..=k {
            let c = cdot(&v[i], &w);
            hcol[i] = c;
            axpy(&mut w, -c, &v[i]);
        }
        // One full reorthogonalization pass keeps the basis orthonormal to
        // machine precision even for clustered spectra.
        project_out(&mut w, q);
        for i in 0..=k {
            let c = cdot(&v[i], &w);
            hcol[i] += c;
            axpy(&mut w, -c, &v[i]);
        }
        let beta = norm2(&w);
        hcol[k + 1] = Complex64::new(beta, 0.0);
        h_cols.push(hcol);
        if beta <= 1e-12 {
            break; // happy breakdown: exact invariant subspace found
        }
        scale(&mut w, 1.0 / beta);
        v.push(w);
    }
    Ok((v, h_cols))
}

/// Eigenvalues (and eigenvectors where they exist) of G with
/// |lambda| >= lambda_min, via restarted deflated Arnoldi iteration.
///
/// Restarting with random start vectors orthogonalized against the locked
/// Schur basis re-discovers degenerate eigenvalues one copy per restart; the
/// iteration stops once a full restart contributes nothing new, or when the
/// restart budget is exhausted (then `multiplicity_lower_bound` is set).
pub fn arnoldi_spectrum(
    op: &GoogleOperator,
    cfg: &ArnoldiConfig,
    source: impl Into<String>,
) -> Result<SpectrumResult> {
    let n = op.n();
    if !(cfg.lambda_min > 0.0 && cfg.lambda_min <= 1.0) {
        return Err(Error::Param(format!(
            "lambda_min must lie in (0, 1], got {}",
            cfg.lambda_min
        )));
    }
    if cfg.tol <= 0.0 {
        return Err(Error::Param(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    if cfg.krylov_dim < 2 && n > 1 {
        return Err(Error::Param(format!(
            "krylov_dim must be at least 2, got {}",
            cfg.krylov_dim
        )));
    }
    let meta = SpectrumMeta {
        source: source.into(),
        alpha: op.alpha(),
    };
    if n == 1 {
        // G = [1] regardless of the single node's links.
        return Ok(SpectrumResult {
            pairs: vec![EigenPair {
                lambda: Complex64::new(1.0, 0.0),
                vector: Some(vec![Complex64::new(1.0, 0.0)]),
                residual: 0.0,
            }],
            lambda_min: cfg.lambda_min,
            n,
            meta,
            multiplicity_lower_bound: false,
            partial: false,
        });
    }

    let accept_floor = cfg.lambda_min - 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = LockState::default();
    let mut lower_bound = false;

    let mut restarts = 0;
    while restarts < cfg.max_restarts && state.q.len() < n {
        let m_cap = cfg.krylov_dim.min(n - state.q.len());
        let Some(v0) = random_unit_vector(&mut rng, n, &state.q) else {
            break; // complement numerically exhausted
        };
        let (v, h_cols) = arnoldi_factorization(op, &state.q, v0, m_cap)?;
        let m = h_cols.len();
        let mut hm = CMat::zeros(m);
        for (j, col) in h_cols.iter().enumerate() {
            for (i, &val) in col.iter().enumerate().take(m) {
                *hm.at_mut(i, j) = val;
            }
        }
        let mut thetas = hessenberg_eigenvalues(&hm)?;
        thetas.sort_by(|a, b| b.norm().total_cmp(&a.norm()));

        let mut new_pairs = 0usize;
        for &theta in &thetas {
            if theta.norm() < accept_floor {
                break; // sorted by modulus: nothing below can qualify
            }
            let y = hessenberg_eigenvector(&hm, theta)?;
            let mut x = vec![Complex64::ZERO; n];
            for (i, vi) in v.iter().enumerate().take(m) {
                axpy(&mut x, y[i], vi);
            }
            // Ritz vectors are orthogonal to the Q held during factorization;
            // re-project against pairs locked within this restart.
            project_out(&mut x, &state.q);
            let nx = norm2(&x);
            if nx < 1e-6 {
                continue; // direction already locked
            }
            scale(&mut x, 1.0 / nx);
            project_out(&mut x, &state.q);
            let nx = norm2(&x);
            if nx < 1e-6 {
                continue;
            }
            scale(&mut x, 1.0 / nx);

            let gx = op.apply(&x)?;
            if !state.try_lock(op, theta, x, &gx, cfg.tol)? {
                continue;
            }
            new_pairs += 1;

            // A real operator pairs every complex eigenvalue with its
            // conjugate; lock the partner now instead of waiting for a
            // restart to stumble on it.
            if theta.im.abs() > cfg.merge_tol {
                if let Some(psi) = state.pairs.last().and_then(|p| p.vector.clone()) {
                    let mut xc: Vec<Complex64> = psi.iter().map(|z| z.conj()).collect();
                    project_out(&mut xc, &state.q);
                    let nc = norm2(&xc);
                    if nc > 1e-6 {
                        scale(&mut xc, 1.0 / nc);
                        project_out(&mut xc, &state.q);
                        let nc = norm2(&xc);
                        if nc > 1e-6 {
                            scale(&mut xc, 1.0 / nc);
                            let gxc = op.apply(&xc)?;
                            if state.try_lock(op, theta.conj(), xc, &gxc, cfg.tol)? {
                                new_pairs += 1;
                            }
                        }
                    }
                }
            }
        }

        restarts += 1;
        if new_pairs == 0 {
            // A whole restart added nothing: multiplicities are exhausted.
            return Ok(finish(state, cfg, n, meta, false));
        }
        if restarts == cfg.max_restarts {
            lower_bound = true;
        }
    }
    Ok(finish(state, cfg, n, meta, lower_bound))
}

fn finish(
    state: LockState,
    cfg: &ArnoldiConfig,
    n: usize,
    meta: SpectrumMeta,
    lower_bound: bool,
) -> SpectrumResult {
    let mut pairs = state.pairs;
    pairs.retain(|p| p.lambda.norm() >= cfg.lambda_min - 1e-9);
    sort_pairs(&mut pairs);

    // Merge duplicates: same eigenvalue and essentially the same eigenvector
    // means the deflation let one direction through twice.
    let mut kept: Vec<EigenPair> = Vec::with_capacity(pairs.len());
    'outer: for p in pairs {
        for k in kept.iter_mut() {
            if (k.lambda - p.lambda).norm() <= cfg.merge_tol {
                if let (Some(a), Some(b)) = (&k.vector, &p.vector) {
                    if cdot(a, b).norm() > 0.999 {
                        if p.residual < k.residual {
                            *k = p;
                        }
                        continue 'outer;
                    }
                }
            }
        }
        kept.push(p);
    }

    let partial = kept.is_empty();
    SpectrumResult {
        pairs: kept,
        lambda_min: cfg.lambda_min,
        n,
        meta,
        multiplicity_lower_bound: lower_bound,
        partial,
    }
}

fn sort_pairs(pairs: &mut [EigenPair]) {
    pairs.sort_by(|a, b| {
        b.lambda
            .norm()
            .total_cmp(&a.lambda.norm())
            .then(b.lambda.re.total_cmp(&a.lambda.re))
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
}

/// Eigenvalues of an arbitrary dense real matrix (row-major), via a Schur
/// decomposition from the linear-algebra backend.
pub fn dense_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<Complex64>> {
    if matrix.len() != n * n {
        return Err(Error::Param(format!(
            "matrix buffer has {} entries, expected {}",
            matrix.len(),
            n * n
        )));
    }
    // The backend's convenience call runs its QR iteration without a budget
    // and cycles forever on strongly defective matrices (heavily degenerate
    // spectra), so impose one. LAPACK converges in ~30n sweeps when it
    // converges at all; 80n is generous.
    let dm = nalgebra::DMatrix::from_row_slice(n, n, matrix);
    if let Some(schur) = nalgebra::linalg::Schur::try_new(dm, f64::EPSILON, 80 * n.max(10)) {
        return Ok(schur
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect());
    }
    log::warn!("backend Schur iteration stalled at n = {n}; using the built-in Hessenberg QR");
    let (h, _) = real_hessenberg(matrix, n);
    let mut hm = CMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if j + 1 >= i {
                *hm.at_mut(i, j) = Complex64::new(h[i * n + j], 0.0);
            }
        }
    }
    hessenberg_eigenvalues(&hm)
}

/// Full eigendecomposition of the dense operator, for verification at small
/// n (guarded by [`DENSE_LIMIT`]). All n eigenvalues are returned, each with
/// an inverse-iteration eigenvector and its measured residual.
pub fn dense_spectrum(g: &DirectedGraph, alpha: f64) -> Result<SpectrumResult> {
    let n = g.n_nodes();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let op = build_operator(g, alpha)?;
    let dense = op.to_dense();
    let eig = dense_eigenvalues(&dense, n)?;

    let (h, q) = real_hessenberg(&dense, n);
    let mut hm = CMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            *hm.at_mut(i, j) = Complex64::new(h[i * n + j], 0.0);
        }
    }

    let mut pairs = Vec::with_capacity(n);
    for &lambda in &eig {
        let y = hessenberg_eigenvector(&hm, lambda)?;
        // Map back through the orthogonal reduction: psi = Q y.
        let mut psi = vec![Complex64::ZERO; n];
        for (i, p) in psi.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for (j, &yj) in y.iter().enumerate() {
                acc += yj * q[i * n + j];
            }
            *p = acc;
        }
        let nrm = norm2(&psi);
        scale(&mut psi, 1.0 / nrm);
        let res = residual(&op, lambda, &psi)?;
        pairs.push(EigenPair {
            lambda,
            vector: Some(psi),
            residual: res,
        });
    }
    sort_pairs(&mut pairs);
    Ok(SpectrumResult {
        pairs,
        lambda_min: 0.0,
        n,
        meta: SpectrumMeta {
            source: String::new(),
            alpha,
        },
        multiplicity_lower_bound: false,
        partial: false,
    })
}

/// Greedy nearest-distance matching between two eigenvalue multisets.
/// Returns the largest matched distance, or None when the counts differ.
pub fn greedy_match_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a_sorted = a.to_vec();
    a_sorted.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in &a_sorted {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        used[best] = true;
        worst = worst.max(best_d);
    }
    Some(worst)
}
