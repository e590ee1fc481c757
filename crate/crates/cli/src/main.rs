//! Experiment runner: dispatches the named experiment, writes JSON and CSV
//! reports, and maps failures to exit codes (1 = invalid config,
//! 2 = numerical failure).

use chebwidths::ect1d;
use chebwidths::elliptic2d::{self, RectGrid};
use chebwidths::report::{fmt_float, write_csv, write_json, ExtReal};
use chebwidths::rng::CounterRng;
use chebwidths::sampled::Interval;
use chebwidths::spectral1d;
use chebwidths::symbols::{self, Polynomial2};
use chebwidths::widths;
use clap::Parser;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "chebwidths", about = "ECT systems, Kolmogorov spectra and harmonic widths")]
struct Cli {
    /// One of: ect, widths1d, eigen2d, widths2d, direct, symdiv, convergence
    experiment: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long = "N", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One integer or a list, as the config file allows either.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumOrList {
    One(usize),
    Many(Vec<usize>),
}

impl NumOrList {
    fn to_vec(&self) -> Vec<usize> {
        match self {
            NumOrList::One(v) => vec![*v],
            NumOrList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    p: Option<usize>,
    #[serde(rename = "N")]
    n: Option<NumOrList>,
    grid: Option<NumOrList>,
    seed: Option<u64>,
    symbol: Option<String>,
    weights_file: Option<String>,
    out: Option<String>,
}

#[derive(Debug)]
struct Config {
    experiment: String,
    p: Option<usize>,
    n: Option<Vec<usize>>,
    grid: Option<Vec<usize>>,
    seed: Option<u64>,
    symbol: Option<String>,
    weights_file: Option<String>,
    out: Option<PathBuf>,
}

enum RunError {
    Config(String),
    Numerical(String),
}

impl RunError {
    fn config(field: &str) -> Self {
        RunError::Config(format!("missing required field `{field}`"))
    }
}

impl<E: std::error::Error> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError::Numerical(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<Config, RunError> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read config {path:?}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| RunError::Config(format!("invalid config: {e}")))?
        }
        None => FileConfig::default(),
    };
    if let Some(exp) = &file.experiment {
        if exp != &cli.experiment {
            return Err(RunError::Config(format!(
                "config experiment `{exp}` does not match CLI experiment `{}`",
                cli.experiment
            )));
        }
    }
    Ok(Config {
        experiment: cli.experiment.clone(),
        p: cli.p.or(file.p),
        n: cli.n_list.clone().or_else(|| file.n.as_ref().map(NumOrList::to_vec)),
        grid: cli
            .grid
            .clone()
            .or_else(|| file.grid.as_ref().map(NumOrList::to_vec)),
        seed: cli.seed.or(file.seed),
        symbol: cli.symbol.clone().or(file.symbol),
        weights_file: file.weights_file,
        out: cli.out.clone().or_else(|| file.out.as_ref().map(PathBuf::from)),
    })
}

fn out_dir(config: &Config) -> Result<PathBuf, RunError> {
    let out = config.out.clone().ok_or_else(|| RunError::config("out"))?;
    std::fs::create_dir_all(&out)
        .map_err(|e| RunError::Numerical(format!("cannot create out dir: {e}")))?;
    Ok(out)
}

fn single_grid(config: &Config, default: usize) -> usize {
    config
        .grid
        .as_ref()
        .and_then(|g| g.first().copied())
        .unwrap_or(default)
}

fn validate_odd_grids(config: &Config, p: usize) -> Result<(), RunError> {
    if let Some(grids) = &config.grid {
        for &m in grids {
            if m % 2 == 0 || m < 2 * p + 3 {
                return Err(RunError::Config(format!(
                    "field `grid`: 2D grids must be odd and >= 2p+3, got {m}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(1);
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let result = match config.experiment.as_str() {
        "ect" => run_ect(&config),
        "widths1d" => run_widths1d(&config),
        "eigen2d" => run_eigen2d(&config),
        "widths2d" => run_widths2d(&config),
        "direct" => run_direct(&config),
        "symdiv" => run_symdiv(&config),
        "convergence" => run_convergence(&config),
        other => Err(RunError::Config(format!(
            "field `experiment`: unknown experiment `{other}`"
        ))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

#[derive(Serialize)]
struct EctReport {
    n_weights: usize,
    n_quad: usize,
    round_trip_max_rel_error: f64,
    wronskian_check_max_rel_error: f64,
}

fn run_ect(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    let n_quad = single_grid(config, 2048);
    let ws = match &config.weights_file {
        Some(path) => ect1d::load_weights_csv(Path::new(path))?,
        None => {
            let seed = config.seed.ok_or_else(|| RunError::config("seed"))?;
            let mut rng = CounterRng::new(seed);
            let iv = Interval::new(0.0, 1.0).expect("unit interval");
            ect1d::seeded_smooth_weights(iv, config.p.unwrap_or(3), n_quad, &mut rng)
        }
    };
    let ect = ect1d::build_ect(&ws)?;
    let recovered = ect1d::recover_weights(&ect)?;
    let mut round_trip: f64 = 0.0;
    for (orig, back) in ws.weights.iter().zip(&recovered.weights) {
        for (a, b) in orig.values.iter().zip(&back.values) {
            round_trip = round_trip.max(((a - b) / a).abs());
        }
    }
    let mut wronskian_dev: f64 = 0.0;
    for k in 1..=ws.len() {
        let (off, wk) = ect1d::wronskian_numeric(&ect.basis, k)?;
        for (i, &v) in wk.iter().enumerate() {
            let reference = ect.wronskians[k - 1].values[off + i];
            wronskian_dev = wronskian_dev.max(((v - reference) / reference).abs());
        }
    }
    ect1d::export_weights_csv(&out.join("weights.csv"), &ws)?;
    ect1d::export_basis_csv(&out.join("basis.csv"), &ect)?;
    write_json(
        &out.join("report.json"),
        &EctReport {
            n_weights: ws.len(),
            n_quad: ws.n_quad,
            round_trip_max_rel_error: round_trip,
            wronskian_check_max_rel_error: wronskian_dev,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Width1dRow {
    p: usize,
    #[serde(rename = "N")]
    n: usize,
    value: ExtReal,
    bound: ExtReal,
}

fn run_widths1d(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    let p = config.p.ok_or_else(|| RunError::config("p"))?;
    let n_list = config.n.clone().ok_or_else(|| RunError::config("N"))?;
    let grid = single_grid(config, 2049);
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    let spec = spectral1d::solve_spectrum(p, grid, max_n + 2)?;
    spectral1d::export_spectrum_csv(&out.join("spectrum.csv"), &spec)?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for &n in &n_list {
        let w = spectral1d::kolmogorov_width(&spec, n)?;
        rows.push(vec![
            p.to_string(),
            n.to_string(),
            grid.to_string(),
            w.value.to_csv_field(),
            w.value.to_csv_field(),
        ]);
        json_rows.push(Width1dRow {
            p,
            n,
            value: w.value,
            bound: w.value,
        });
    }
    write_csv(&out.join("widths.csv"), &["p", "N", "n", "value", "bound"], &rows)?;
    write_json(&out.join("report.json"), &json_rows)?;
    Ok(())
}

fn parse_symbol_field(config: &Config) -> Result<Polynomial2, RunError> {
    let text = config
        .symbol
        .clone()
        .unwrap_or_else(|| "2,0:1 0,2:1".to_string());
    Polynomial2::parse(&text).map_err(|e| RunError::Config(format!("field `symbol`: {e}")))
}

#[derive(Serialize)]
struct Eigen2dReport {
    p: usize,
    grid: usize,
    kernel_dim: usize,
    eigenvalues: Vec<f64>,
}

fn run_eigen2d(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    let p = config.p.ok_or_else(|| RunError::config("p"))?;
    validate_odd_grids(config, p)?;
    let m = single_grid(config, 17);
    let count = config.n.as_ref().and_then(|v| v.first().copied()).unwrap_or(8);
    let symbol = if config.symbol.is_some() {
        parse_symbol_field(config)?
    } else {
        symbols::laplacian_symbol(p as u32)
    };
    let grid = RectGrid::new(m);
    let op = elliptic2d::assemble(&symbol, p, grid)?;
    let clamped = elliptic2d::clamped_spectrum(&op, count)?;
    let spectrum = elliptic2d::lift_eigenfunctions(&op, &clamped)?;
    elliptic2d::export_spectrum2d_csv(&out.join("spectrum.csv"), &spectrum)?;
    for j in 0..spectrum.positive_count().min(4) {
        elliptic2d::export_field_csv(
            &out.join(format!("psi_{}.csv", j + 1)),
            &grid,
            &spectrum.psi_j(j),
        )?;
    }
    write_json(
        &out.join("report.json"),
        &Eigen2dReport {
            p,
            grid: m,
            kernel_dim: spectrum.kernel_dim(),
            eigenvalues: spectrum.eigenvalues.clone(),
        },
    )?;
    Ok(())
}

fn run_widths2d(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    let p = config.p.ok_or_else(|| RunError::config("p"))?;
    validate_odd_grids(config, p)?;
    let m = single_grid(config, 17);
    let n_list = config.n.clone().unwrap_or_else(|| (0..=3).collect());
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    let symbol = if config.symbol.is_some() {
        parse_symbol_field(config)?
    } else {
        symbols::laplacian_symbol(p as u32)
    };
    let grid = RectGrid::new(m);
    let op = elliptic2d::assemble(&symbol, p, grid)?;
    let clamped = elliptic2d::clamped_spectrum(&op, max_n + 3)?;
    let spectrum = elliptic2d::lift_eigenfunctions(&op, &clamped)?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &n in &n_list {
        let report = widths::harmonic_width(&op, &spectrum, n)?;
        rows.push(report.csv_row());
        reports.push(report);
    }
    write_csv(
        &out.join("widths.csv"),
        &widths::WidthReport2D::CSV_HEADER,
        &rows,
    )?;
    write_json(&out.join("report.json"), &reports)?;
    Ok(())
}

#[derive(Serialize)]
struct DirectCaseReport {
    case: String,
    grids: Vec<usize>,
    residuals: Vec<f64>,
    observed_orders: Vec<f64>,
    common_nodes: usize,
}

fn run_direct(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    validate_odd_grids(config, 1)?;
    let grids = config.grid.clone().unwrap_or_else(|| vec![17, 33, 65]);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for case in ["isotropic", "ball"] {
        let study = widths::residual_refinement_study(&grids, |grid| match case {
            "isotropic" => Ok((widths::isotropic_m2(grid)?, widths::isotropic_m2_data(&grid))),
            _ => Ok((widths::ball_example(grid)?, widths::ball_example_data(&grid))),
        })?;
        for (i, &m) in grids.iter().enumerate() {
            rows.push(vec![
                case.to_string(),
                m.to_string(),
                fmt_float(study.maxima[i]),
                if i == 0 {
                    String::new()
                } else {
                    fmt_float(study.observed_orders[i - 1])
                },
            ]);
        }
        reports.push(DirectCaseReport {
            case: case.to_string(),
            grids: study.grids,
            residuals: study.maxima,
            observed_orders: study.observed_orders,
            common_nodes: study.common_nodes,
        });
    }
    write_csv(
        &out.join("direct.csv"),
        &["case", "grid", "residual", "observed_order"],
        &rows,
    )?;
    write_json(&out.join("report.json"), &reports)?;
    Ok(())
}

#[derive(Serialize)]
struct SymdivReport {
    divides: bool,
    quotient: Option<String>,
    remainder: String,
    quotient_elliptic: Option<bool>,
}

fn run_symdiv(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    let text = config.symbol.clone().ok_or_else(|| RunError::config("symbol"))?;
    let (num_text, den_text) = text
        .split_once('/')
        .ok_or_else(|| RunError::Config("field `symbol`: expected `NUM / DEN`".to_string()))?;
    let num = Polynomial2::parse(num_text.trim())
        .map_err(|e| RunError::Config(format!("field `symbol` numerator: {e}")))?;
    let den = Polynomial2::parse(den_text.trim())
        .map_err(|e| RunError::Config(format!("field `symbol` denominator: {e}")))?;
    let cert = symbols::factorization_certificate(&num, &den)?;
    write_json(
        &out.join("report.json"),
        &SymdivReport {
            divides: cert.divides,
            quotient: cert.quotient.as_ref().map(Polynomial2::to_text),
            remainder: cert.remainder.to_text(),
            quotient_elliptic: cert.quotient_elliptic,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceReport {
    p: usize,
    grids: Vec<usize>,
    mu_1: Vec<f64>,
    oracle: f64,
    rows: Vec<ConvergenceRow>,
}

#[derive(Serialize)]
struct ConvergenceRow {
    grid: usize,
    value: f64,
    error_vs_oracle: f64,
    observed_order: Option<f64>,
}

fn run_convergence(config: &Config) -> Result<(), RunError> {
    let out = out_dir(config)?;
    let p = config.p.ok_or_else(|| RunError::config("p"))?;
    validate_odd_grids(config, p)?;
    let grids = config.grid.clone().unwrap_or_else(|| vec![17, 33, 65]);
    if grids.len() < 2 {
        return Err(RunError::Config(
            "field `grid`: convergence needs at least two grids".to_string(),
        ));
    }
    if grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RunError::Config(
            "field `grid`: grids must be strictly increasing".to_string(),
        ));
    }
    let symbol = if config.symbol.is_some() {
        parse_symbol_field(config)?
    } else {
        symbols::laplacian_symbol(p as u32)
    };
    let mut mu_1 = Vec::new();
    for &m in &grids {
        let op = elliptic2d::assemble(&symbol, p, RectGrid::new(m))?;
        let clamped = elliptic2d::clamped_spectrum(&op, 1)?;
        mu_1.push(clamped[0].0);
    }
    // generalized Richardson: estimate the rate from the finest grid triple
    // (exponent-free three-grid formula), then extrapolate
    let k = mu_1.len();
    let alpha = if k >= 3 {
        ((mu_1[k - 3] - mu_1[k - 2]) / (mu_1[k - 2] - mu_1[k - 1]))
            .abs()
            .log2()
            .clamp(0.25, 4.0)
    } else {
        1.0
    };
    let oracle = mu_1[k - 1] + (mu_1[k - 1] - mu_1[k - 2]) / (2f64.powf(alpha) - 1.0);
    let errors: Vec<f64> = mu_1.iter().map(|v| (v - oracle).abs()).collect();
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for i in 0..k {
        let order = if i > 0 {
            Some((errors[i - 1] / errors[i]).log2())
        } else {
            None
        };
        rows.push(ConvergenceRow {
            grid: grids[i],
            value: mu_1[i],
            error_vs_oracle: errors[i],
            observed_order: order,
        });
        csv_rows.push(vec![
            grids[i].to_string(),
            fmt_float(mu_1[i]),
            fmt_float(errors[i]),
            order.map(fmt_float).unwrap_or_default(),
        ]);
    }
    write_csv(
        &out.join("convergence.csv"),
        &["grid", "value", "error_vs_oracle", "observed_order"],
        &csv_rows,
    )?;
    write_json(
        &out.join("report.json"),
        &ConvergenceReport {
            p,
            grids,
            mu_1,
            oracle,
            rows,
        },
    )?;
    Ok(())
}
