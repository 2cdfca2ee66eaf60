//! `steerkit` — build steerable filter banks, run convolutions on stored
//! fields, and measure equivariance errors from the command line.
//!
//! Every subcommand is deterministic: the same flags, config and input
//! files produce byte-identical outputs, independent of the thread count.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use steerable::cg::CGTable;
use steerable::conv::conv_higher;
use steerable::filters::{
    assemble, assemble_higher, basis_cartesian, basis_cartesian_higher, basis_first,
    basis_higher, default_tau_profile,
};
use steerable::harness::{
    fit_log_slope, rate_study, scan, verify, write_rate_csv, write_scan_csv, FilterFamily,
    RateRow, ScanConfig, VerifySuite,
};
use steerable::interp::InterpKernelSpec;
use steerable::io::{
    read_field, read_filter_bank, read_weights, write_field, write_filter_bank, FilterBank,
};
use steerable::sphere::GridScheme;

#[derive(Parser)]
#[command(name = "steerkit", version, about = "Steerable-convolution toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpArg {
    Nearest,
    Linear,
    Cartesian,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadArg {
    Uniform,
    Dh,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    First,
    Higher,
}

#[derive(Subcommand)]
enum Cmd {
    /// Precompute a filter bank and write it as an STFB1 file.
    Precompute {
        /// Spatial dimension of the lattice (2 or 3).
        #[arg(long)]
        dim: usize,
        /// Largest irrep degree carried by the bank.
        #[arg(long)]
        cutoff: usize,
        /// Number of radial shells.
        #[arg(long = "radial")]
        radial: usize,
        /// Azimuthal grid order (ignored by Cartesian banks, which have no
        /// angular quadrature).
        #[arg(long = "angular")]
        angular: usize,
        /// Filter radius h; offsets reach up to ceil(h)+1 per axis.
        #[arg(long = "radius")]
        radius: f64,
        /// Kernel family the basis is built from.
        #[arg(long, value_enum)]
        interp: InterpArg,
        /// Angular quadrature weights (3D only for dh).
        #[arg(long, value_enum, default_value = "uniform")]
        quadrature: QuadArg,
        /// First-layer basis (scalar input) or higher-layer basis.
        #[arg(long, value_enum)]
        layer: LayerArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convolve a stored field with a bank and a weight tensor.
    Convolve {
        /// STFB1 filter bank.
        #[arg(long)]
        filters: PathBuf,
        /// STFW1 weight tensor (shells × slots × out × in).
        #[arg(long)]
        weights: PathBuf,
        /// STFD1 input field.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the rotation scan described by a JSON config; write CSV rows.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; falls back to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the angular resolution at a fixed 30° rotation; write CSV rows
    /// and report the fitted log-log slopes.
    Rate {
        #[arg(long)]
        config: PathBuf,
        /// Angular orders to sweep, e.g. --na 8,16,32,64.
        #[arg(long = "na", value_delimiter = ',', required = true)]
        na: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run built-in verification suites; exit 0 on pass, 1 on failure.
    Check {
        /// One of: all, cg, sht, steer, delta, oracle.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Precompute { dim, cutoff, radial, angular, radius, interp, quadrature, layer, out } => {
            let scheme = match quadrature {
                QuadArg::Uniform => GridScheme::Uniform,
                QuadArg::Dh => GridScheme::DriscollHealy,
            };
            let bank = match (interp, layer) {
                (InterpArg::Cartesian, LayerArg::First) => FilterBank::First(basis_cartesian(
                    dim,
                    cutoff,
                    radial,
                    radius,
                    &default_tau_profile(radial),
                )?),
                (InterpArg::Cartesian, LayerArg::Higher) => {
                    let cg = CGTable::build(dim, cutoff);
                    FilterBank::Higher(basis_cartesian_higher(
                        dim,
                        cutoff,
                        radial,
                        radius,
                        &default_tau_profile(radial),
                        &cg,
                    )?)
                }
                (kind, layer) => {
                    let spec = match kind {
                        InterpArg::Nearest => InterpKernelSpec::nearest(dim),
                        _ => InterpKernelSpec::linear(dim),
                    };
                    match layer {
                        LayerArg::First => FilterBank::First(basis_first(
                            dim, cutoff, radial, angular, radius, &spec, scheme,
                        )?),
                        LayerArg::Higher => {
                            let cg = CGTable::build(dim, cutoff);
                            FilterBank::Higher(basis_higher(
                                dim, cutoff, radial, angular, radius, &spec, scheme, &cg,
                            )?)
                        }
                    }
                }
            };
            write_filter_bank(&out, &bank)
                .with_context(|| format!("writing {}", out.display()))?;
            let (kind, tables) = match &bank {
                FilterBank::First(b) => ("first-layer", b.tables.len() * b.tables[0].len()),
                FilterBank::Higher(b) => ("higher-layer", b.tables.len() * b.tables[0].len()),
            };
            println!("wrote {kind} bank with {tables} tables to {}", out.display());
        }
        Cmd::Convolve { filters, weights, input, out } => {
            let bank = read_filter_bank(&filters)
                .with_context(|| format!("reading {}", filters.display()))?;
            let w = read_weights(&weights)
                .with_context(|| format!("reading {}", weights.display()))?;
            let field = read_field(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let kernels = match &bank {
                FilterBank::First(b) => assemble(b, &w)?,
                FilterBank::Higher(b) => assemble_higher(b, &w)?,
            };
            let result = conv_higher(&field, &kernels)?;
            write_field(&out, &result)
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote field of shape {:?} with {} irreps to {}",
                result.shape,
                result.irreps.len(),
                out.display()
            );
        }
        Cmd::Scan { config, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ScanConfig::from_json(&text)?;
            let dest = match (out, &cfg.output) {
                (Some(p), _) => p,
                (None, Some(p)) => PathBuf::from(p),
                (None, None) => bail!("no output path: pass --out or set `output` in the config"),
            };
            let rows = scan(&cfg)?;
            write_scan_csv(&rows, &dest)
                .with_context(|| format!("writing {}", dest.display()))?;
            println!("wrote {} rows to {}", rows.len(), dest.display());
        }
        Cmd::Rate { config, na, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ScanConfig::from_json(&text)?;
            let rows = rate_study(&cfg, &na)?;
            write_rate_csv(&rows, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            for family in [FilterFamily::Nearest, FilterFamily::Linear] {
                let pts = mean_by_na(&rows, family);
                if pts.len() >= 2 {
                    println!("{family}: log-log slope {:+.3}", fit_log_slope(&pts));
                }
            }
        }
        Cmd::Check { suite } => {
            let suite: VerifySuite = suite.parse()?;
            let report = verify(suite);
            print!("{report}");
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Mean error per n_a for one family, in ascending n_a order.
fn mean_by_na(rows: &[RateRow], family: FilterFamily) -> Vec<(f64, f64)> {
    let mut nas: Vec<usize> =
        rows.iter().filter(|r| r.filter == family).map(|r| r.n_a).collect();
    nas.sort_unstable();
    nas.dedup();
    nas.into_iter()
        .map(|n_a| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.filter == family && r.n_a == n_a)
                .map(|r| r.error)
                .collect();
            (n_a as f64, errs.iter().sum::<f64>() / errs.len() as f64)
        })
        .collect()
}
