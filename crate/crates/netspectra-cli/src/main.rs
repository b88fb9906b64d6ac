//! Command-line front end: a pipeline of small commands connected by files
//! (edge lists, spectrum JSON + eigenvector binaries, CSV curves), so the
//! expensive artifacts — spectra of big networks — are computed once and
//! reused by the cheaper analyses.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use netspectra::gmatrix::{build_operator, order_by_pagerank, pagerank};
use netspectra::spectral::{
    arnoldi_spectrum, dense_spectrum, io as spectrum_io, ArnoldiConfig, SpectrumResult,
};
use netspectra::{callgraph, eigenstates, fracdim, graph, weyl, DirectedGraph};
use serde_json::json;

#[derive(Parser)]
#[command(name = "netspectra", version, about = "Spectral analysis of directed networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract a procedure-call network from a C source tree
    Extract {
        /// Root directory of the source tree
        root: PathBuf,
        /// Output prefix: writes <prefix>.edges, <prefix>.labels, <prefix>.report.json
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Eigenvalue spectrum of the damped link operator of a graph
    Spectrum {
        /// Edge-list file (integer pairs or label pairs per line)
        edges: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        alpha: f64,
        /// Keep eigenvalues with modulus at or above this cutoff
        #[arg(long, default_value_t = 0.1)]
        lambda_min: f64,
        /// Krylov subspace dimension per restart
        #[arg(long, default_value_t = 600)]
        krylov: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Analyze the graph with every link direction reversed
        #[arg(long)]
        inverted: bool,
        /// Use the dense full-spectrum solver (small graphs only)
        #[arg(long)]
        dense: bool,
        /// Spectrum JSON path; eigenvectors go to the same path with
        /// extension `vec`
        #[arg(short, long)]
        out: PathBuf,
    },
    /// PageRank vector and node ranking of a graph
    Pagerank {
        edges: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        inverted: bool,
        /// Output JSON path
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit eigenvalue-count scaling across several spectra
    Weyl {
        /// Spectrum JSON files (two or more, different network sizes)
        spectra: Vec<PathBuf>,
        /// Modulus cutoffs to count at
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.1])]
        thresholds: Vec<f64>,
        /// Output prefix: writes <prefix>.fit-<t>.json, <prefix>.points-<t>.csv,
        /// and <prefix>.density-<k>.csv per input spectrum
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Cluster-growing dimension of a graph
    Dimension {
        edges: PathBuf,
        /// Largest hop distance of the growth curve
        #[arg(long, default_value_t = 30)]
        lmax: usize,
        /// Fit window lo:hi over hop distance
        #[arg(long, value_parser = parse_range, default_value = "1:10")]
        fit_range: (usize, usize),
        #[arg(long)]
        inverted: bool,
        /// Symmetrize the graph before the analysis
        #[arg(long)]
        undirected: bool,
        /// Output prefix: writes <prefix>.curve.csv and <prefix>.fit.json
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Participation ratios and coarse-grained eigenstate maps
    Eigenstates {
        /// Spectrum JSON produced by the spectrum command
        spectrum: PathBuf,
        /// Eigenvector file (defaults to the spectrum path with extension `vec`)
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Edge-list file; its PageRank ordering positions the grid cells
        #[arg(long)]
        edges: PathBuf,
        /// Number of cells (full grid), or number of leading cells in zoom mode
        #[arg(long, default_value_t = 307)]
        cells: usize,
        /// Sites per cell; setting this switches to the zoom over the
        /// leading cells*cell_size positions of the ordering
        #[arg(long)]
        cell_size: Option<usize>,
        /// Keep at most this many top states (one per degenerate cluster)
        #[arg(long, default_value_t = 64)]
        max_states: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Output prefix: writes <prefix>.par.csv, <prefix>.par.json,
        /// <prefix>.grid.csv, <prefix>.grid.json
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write a synthetic benchmark graph as an edge list
    Generate {
        /// chain | cycle | grid | preferential
        #[arg(value_parser = ["chain", "cycle", "grid", "preferential"])]
        kind: String,
        /// Node count (chain, cycle, preferential)
        #[arg(long)]
        n: Option<usize>,
        /// Out-links per new node (preferential)
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge-list output path
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

fn load_graph(path: &Path, inverted: bool) -> Result<DirectedGraph> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let g = graph::load_edge_list(BufReader::new(f))
        .with_context(|| format!("reading edge list {}", path.display()))?;
    Ok(if inverted { g.invert_links() } else { g })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_spectrum_file(path: &Path) -> Result<spectrum_io::SpectrumFile> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    spectrum_io::read_spectrum(BufReader::new(f))
        .with_context(|| format!("reading spectrum {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Ok(v) = std::env::var("NETSPECTRA_THREADS") {
        let threads: usize = v
            .parse()
            .with_context(|| format!("NETSPECTRA_THREADS must be a thread count, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match Cli::parse().cmd {
        Cmd::Extract { root, out } => cmd_extract(&root, &out),
        Cmd::Spectrum {
            edges,
            alpha,
            lambda_min,
            krylov,
            tol,
            seed,
            inverted,
            dense,
            out,
        } => cmd_spectrum(&edges, alpha, lambda_min, krylov, tol, seed, inverted, dense, &out),
        Cmd::Pagerank {
            edges,
            alpha,
            tol,
            inverted,
            out,
        } => cmd_pagerank(&edges, alpha, tol, inverted, &out),
        Cmd::Weyl {
            spectra,
            thresholds,
            out,
        } => cmd_weyl(&spectra, &thresholds, &out),
        Cmd::Dimension {
            edges,
            lmax,
            fit_range,
            inverted,
            undirected,
            out,
        } => cmd_dimension(&edges, lmax, fit_range, inverted, undirected, &out),
        Cmd::Eigenstates {
            spectrum,
            vectors,
            edges,
            cells,
            cell_size,
            max_states,
            tol,
            out,
        } => cmd_eigenstates(
            &spectrum, vectors, &edges, cells, cell_size, max_states, tol, &out,
        ),
        Cmd::Generate {
            kind,
            n,
            m,
            width,
            height,
            seed,
            out,
        } => cmd_generate(&kind, n, m, width, height, seed, &out),
    }
}

fn cmd_extract(root: &Path, out: &Path) -> Result<()> {
    let options = callgraph::ExtractOptions::default();
    let (g, report) = callgraph::extract_pcn(root, &options)?;
    g.write_edge_list(create(&with_suffix(out, ".edges"))?)?;
    g.write_labels(create(&with_suffix(out, ".labels"))?)?;
    let doc = json!({
        "config": { "root": root, "extensions": options.extensions },
        "report": report,
    });
    serde_json::to_writer_pretty(create(&with_suffix(out, ".report.json"))?, &doc)?;
    eprintln!(
        "extracted {} procedures, {} calls ({} unresolved names, {} files skipped)",
        report.n_procedures,
        report.n_calls,
        report.unresolved_call_names,
        report.skipped_files.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    edges: &Path,
    alpha: f64,
    lambda_min: f64,
    krylov: usize,
    tol: f64,
    seed: u64,
    inverted: bool,
    dense: bool,
    out: &Path,
) -> Result<()> {
    let g = load_graph(edges, inverted)?;
    let source = edges.display().to_string();
    let config = json!({
        "alpha": alpha,
        "lambda_min": lambda_min,
        "krylov_dim": krylov,
        "tol": tol,
        "seed": seed,
        "inverted": inverted,
        "dense": dense,
        "edges": edges,
    });
    let (mut spec, method): (SpectrumResult, &str) = if dense {
        (dense_spectrum(&g, alpha)?, "dense")
    } else {
        let cfg = ArnoldiConfig {
            lambda_min,
            krylov_dim: krylov,
            tol,
            seed,
            ..Default::default()
        };
        let op = build_operator(&g, alpha)?;
        (arnoldi_spectrum(&op, &cfg, source.clone())?, "arnoldi")
    };
    spec.meta.source = source;
    if spec.partial {
        log::warn!("no eigenvalue converged above the cutoff; spectrum is marked partial");
    }
    spectrum_io::write_spectrum(create(out)?, &spec, method, config)?;
    let k = spectrum_io::write_vectors(create(&out.with_extension("vec"))?, &spec)?;
    eprintln!(
        "{} eigenvalues (|lambda| >= {}), {} eigenvectors -> {}",
        spec.pairs.len(),
        spec.lambda_min,
        k,
        out.display()
    );
    Ok(())
}

fn cmd_pagerank(edges: &Path, alpha: f64, tol: f64, inverted: bool, out: &Path) -> Result<()> {
    let g = load_graph(edges, inverted)?;
    let op = build_operator(&g, alpha)?;
    let pr = pagerank(&op, tol, 10_000)?;
    let order = order_by_pagerank(&pr);
    let doc = json!({
        "config": { "alpha": alpha, "tol": tol, "inverted": inverted, "edges": edges },
        "n": g.n_nodes(),
        "iterations": pr.iterations,
        "residual": pr.residual,
        "probabilities": pr.probabilities,
        "order": order,
    });
    serde_json::to_writer_pretty(create(out)?, &doc)?;
    Ok(())
}

fn cmd_weyl(spectra: &[PathBuf], thresholds: &[f64], out: &Path) -> Result<()> {
    if spectra.len() < 2 {
        bail!(
            "the exponent fit needs at least two spectrum files, got {}",
            spectra.len()
        );
    }
    if thresholds.is_empty() {
        bail!("no thresholds given");
    }
    let mut loaded = Vec::new();
    for (k, path) in spectra.iter().enumerate() {
        let file = read_spectrum_file(path)?;
        let density = weyl::integrated_density(&file.spectrum, file.spectrum.lambda_min)?;
        density.write_csv(create(&with_suffix(out, &format!(".density-{k}.csv")))?)?;
        loaded.push((path, file.spectrum));
    }
    for &t in thresholds {
        let mut points = Vec::new();
        for (path, spec) in &loaded {
            let count = weyl::count_eigenvalues(spec, t)
                .with_context(|| format!("counting in {}", path.display()))?;
            points.push((spec.n as u64, count as u64));
        }
        points.sort();
        let fit = weyl::weyl_fit(&points, t)?;
        let doc = json!({
            "config": { "thresholds": thresholds, "spectra": spectra },
            "fit": fit,
            "dimension": weyl::dimension_from_nu(fit.nu),
        });
        serde_json::to_writer_pretty(create(&with_suffix(out, &format!(".fit-{t}.json")))?, &doc)?;
        fit.write_points_csv(create(&with_suffix(out, &format!(".points-{t}.csv")))?)?;
        eprintln!(
            "threshold {t}: nu = {:.4} +/- {:.4} over {} spectra",
            fit.nu,
            fit.stderr,
            loaded.len()
        );
    }
    Ok(())
}

fn cmd_dimension(
    edges: &Path,
    lmax: usize,
    (l_lo, l_hi): (usize, usize),
    inverted: bool,
    undirected: bool,
    out: &Path,
) -> Result<()> {
    let g = load_graph(edges, inverted)?;
    let (curve, fit) = if undirected {
        fracdim::undirected_dimension(&g, lmax, l_lo, l_hi)?
    } else {
        let curve = fracdim::average_mass(&g, lmax)?;
        let fit = fracdim::dimension_fit(&curve, l_lo, l_hi)?;
        (curve, fit)
    };
    curve.write_csv(create(&with_suffix(out, ".curve.csv"))?)?;
    let doc = json!({
        "config": {
            "edges": edges,
            "l_max": lmax,
            "fit_range": [l_lo, l_hi],
            "inverted": inverted,
            "undirected": undirected,
        },
        "n_seeds": curve.n_seeds,
        "saturation_mass": curve.saturation_mass,
        "fit": fit,
    });
    serde_json::to_writer_pretty(create(&with_suffix(out, ".fit.json"))?, &doc)?;
    eprintln!(
        "d = {:.3} +/- {:.3} over l in [{l_lo}, {l_hi}]{}",
        fit.d,
        fit.stderr,
        if fit.saturated { " (saturated)" } else { "" }
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eigenstates(
    spectrum: &Path,
    vectors: Option<PathBuf>,
    edges: &Path,
    cells: usize,
    cell_size: Option<usize>,
    max_states: usize,
    tol: f64,
    out: &Path,
) -> Result<()> {
    let mut file = read_spectrum_file(spectrum)?;
    let vec_path = vectors.unwrap_or_else(|| spectrum.with_extension("vec"));
    let vf = File::open(&vec_path).with_context(|| format!("opening {}", vec_path.display()))?;
    let (n, cols) = spectrum_io::read_vectors(BufReader::new(vf))?;
    file.attach_vectors(n, cols)?;
    let spec = file.spectrum;

    // Order nodes by PageRank of the same operator the spectrum came from.
    let inverted = file.config["inverted"].as_bool().unwrap_or(false);
    let g = load_graph(edges, inverted)?;
    if g.n_nodes() != spec.n {
        bail!(
            "edge list has {} nodes but the spectrum was computed on {}",
            g.n_nodes(),
            spec.n
        );
    }
    let op = build_operator(&g, spec.meta.alpha)?;
    let pr = pagerank(&op, tol, 10_000)?;
    let order = order_by_pagerank(&pr);

    let profile = eigenstates::par_profile(&spec)?;
    profile.write_csv(create(&with_suffix(out, ".par.csv"))?)?;
    let config = json!({
        "spectrum": spectrum,
        "edges": edges,
        "cells": cells,
        "cell_size": cell_size,
        "max_states": max_states,
        "tol": tol,
        "inverted": inverted,
        "alpha": spec.meta.alpha,
    });
    let par_doc = json!({
        "config": config,
        "mean_xi": profile.mean,
        "mean_xi_one_per_cluster": profile.mean_one_per_cluster,
        "n_states": profile.points.len(),
    });
    serde_json::to_writer_pretty(create(&with_suffix(out, ".par.json"))?, &par_doc)?;

    let grid = match cell_size {
        Some(size) => eigenstates::zoom_grid(&spec, &order, cells, size, max_states)?,
        None => eigenstates::coarse_grain(&spec, &order, cells, max_states)?,
    };
    grid.write_csv(create(&with_suffix(out, ".grid.csv"))?)?;
    let grid_doc = json!({
        "config": config,
        "n_states": grid.n_states,
        "n_cells": grid.n_cells,
        "cell_size": grid.cell_size,
        "zoom": cell_size.is_some(),
        "lambdas": grid.lambdas,
    });
    serde_json::to_writer_pretty(create(&with_suffix(out, ".grid.json"))?, &grid_doc)?;
    eprintln!(
        "mean xi = {:.3} over {} states; grid {} x {} written",
        profile.mean,
        profile.points.len(),
        grid.n_states,
        grid.n_cells
    );
    Ok(())
}

fn cmd_generate(
    kind: &str,
    n: Option<usize>,
    m: usize,
    width: Option<usize>,
    height: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let need_n = || n.with_context(|| format!("--n is required for '{kind}'"));
    let g = match kind {
        "chain" => graph::generate_chain(need_n()?)?,
        "cycle" => graph::generate_cycle(need_n()?)?,
        "grid" => {
            let w = width.context("--width is required for 'grid'")?;
            let h = height.context("--height is required for 'grid'")?;
            graph::generate_grid(w, h)?
        }
        "preferential" => graph::generate_preferential(need_n()?, m, seed)?,
        other => bail!("unknown graph kind '{other}'"),
    };
    g.write_edge_list(create(out)?)?;
    eprintln!("{} nodes, {} edges -> {}", g.n_nodes(), g.n_edges(), out.display());
    Ok(())
}
