use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dimred::ivp::Integrator;
use dimred::numerics::{Axis, QuadratureRule, DEFAULT_NT, DEFAULT_NX, DEFAULT_NY};
use dimred::pipeline::{
    self, CutoffMode, FieldFormat, RunConfig, SweepAxis, DEFAULT_CUTOFF_MARGIN, DEFAULT_CUTOFF_SWEEP,
    DEFAULT_NOISE_SWEEP, DEFAULT_PHI_THRESHOLD, EXIT_BLOWUP,
};
use dimred::{basis::Interval, problems, Error};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Rk4,
    Rk45,
    Euler,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepArg {
    Noise,
    Cutoff,
    Depth,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum QuadratureArg {
    Simpson,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Csv,
    Binary,
}

/// Reconstructs the solution of a sideways (lateral Cauchy) heat problem
/// from value and flux data on one face of the domain.
#[derive(Debug, Parser)]
#[command(name = "dimred", version)]
struct Cli {
    /// Built-in problem (1-4).
    #[arg(long, default_value_t = 1)]
    test: u32,
    /// Multiplicative noise level δ applied to both Cauchy data fields.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `auto`, `recommended` or a comma list (transverse axes first, time last).
    #[arg(long, default_value = "auto")]
    cutoffs: String,
    /// φ level accepted by the automatic cutoff rule.
    #[arg(long, default_value_t = DEFAULT_PHI_THRESHOLD)]
    phi_threshold: f64,
    /// Modes added to the automatic corner on every axis.
    #[arg(long, default_value_t = DEFAULT_CUTOFF_MARGIN)]
    cutoff_margin: usize,
    #[arg(long, value_enum, default_value = "rk4")]
    integrator: IntegratorArg,
    #[arg(long, default_value_t = Integrator::DEFAULT_RTOL)]
    rtol: f64,
    #[arg(long, default_value_t = Integrator::DEFAULT_ATOL)]
    atol: f64,
    #[arg(long, default_value_t = DEFAULT_NX)]
    nx: usize,
    #[arg(long, default_value_t = DEFAULT_NY)]
    ny: usize,
    #[arg(long, default_value_t = DEFAULT_NT)]
    nt: usize,
    #[arg(long, value_enum, default_value = "simpson")]
    quadrature: QuadratureArg,
    /// Keep every k-th node per axis in the solution dump.
    #[arg(long)]
    field_stride: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    field_format: FormatArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run across one axis instead of a single run.
    #[arg(long, value_enum)]
    sweep: Option<SweepArg>,
    /// Noise levels for `--sweep noise`.
    #[arg(long, value_delimiter = ',')]
    sweep_noise: Option<Vec<f64>>,
    /// Time cutoff range `lo,hi` for `--sweep cutoff`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    sweep_range: Option<Vec<usize>>,
    /// Re-run the configuration stored in a manifest.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    /// Print the instability example for frequency n and exit.
    #[arg(long)]
    demo: Option<u32>,
}

fn parse_cutoffs(text: &str, threshold: f64, margin: usize) -> Result<CutoffMode, Error> {
    match text {
        "auto" => Ok(CutoffMode::Auto { threshold, margin }),
        "recommended" => Ok(CutoffMode::Recommended),
        list => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad cutoff list '{list}'")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|cutoffs| CutoffMode::Fixed { cutoffs }),
    }
}

fn config(cli: &Cli) -> Result<RunConfig, Error> {
    if let Some(path) = &cli.from_manifest {
        return pipeline::config_from_manifest(path);
    }
    Ok(RunConfig {
        test: cli.test,
        noise: cli.noise,
        seed: cli.seed,
        cutoffs: parse_cutoffs(&cli.cutoffs, cli.phi_threshold, cli.cutoff_margin)?,
        integrator: match cli.integrator {
            IntegratorArg::Rk4 => Integrator::Rk4,
            IntegratorArg::Rk45 => Integrator::Rk45 {
                rtol: cli.rtol,
                atol: cli.atol,
            },
            IntegratorArg::Euler => Integrator::Euler,
        },
        nx: cli.nx,
        ny: cli.ny,
        nt: cli.nt,
        quadrature: match cli.quadrature {
            QuadratureArg::Simpson => QuadratureRule::Simpson,
            QuadratureArg::Trapezoid => QuadratureRule::Trapezoid,
        },
        field_stride: cli.field_stride,
        field_format: match cli.field_format {
            FormatArg::Auto => FieldFormat::Auto,
            FormatArg::Csv => FieldFormat::Csv,
            FormatArg::Binary => FieldFormat::Binary,
        },
        out: cli.out.clone(),
    })
}

fn demo(n: u32, cli: &Cli) -> Result<(), Error> {
    let x_axis = Axis::new(Interval::new(0.0, 1.0)?, cli.nx)?;
    let t_axis = Axis::new(Interval::new(0.0, 1.5)?, cli.nt)?;
    let report = problems::ill_posedness_demo(n, &x_axis, &t_axis)?;
    println!("n={}", report.n);
    println!("relative_residual={}", report.relative_residual);
    println!("boundary_mismatch={}", report.boundary_mismatch);
    println!("flux_max={}", report.flux_max);
    println!("amplitude_ratio={}", report.amplitude_ratio);
    println!("expected_ratio={}", report.expected_ratio);
    println!("max_error={}", report.max_error);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.demo {
        return match demo(n, &cli) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(pipeline::exit_code(&e) as u8)
            }
        };
    }
    let outcome = config(&cli).and_then(|config| match cli.sweep {
        None => pipeline::run(&config).map(|r| {
            print!("{}", std::fs::read_to_string(config.out.join("errors.txt")).unwrap_or_default());
            r.is_complete()
        }),
        Some(axis) => {
            let axis = match axis {
                SweepArg::Noise => SweepAxis::Noise,
                SweepArg::Cutoff => SweepAxis::Cutoff,
                SweepArg::Depth => SweepAxis::Depth,
            };
            let levels = cli.sweep_noise.clone().unwrap_or_else(|| DEFAULT_NOISE_SWEEP.to_vec());
            let range = cli.sweep_range.as_ref().map_or(DEFAULT_CUTOFF_SWEEP, |r| (r[0], r[1]));
            pipeline::sweep(&config, axis, &levels, range).map(|table| {
                print!("{}", table.to_csv());
                !table.blowup
            })
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: the march stopped before the last depth node");
            ExitCode::from(EXIT_BLOWUP as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
