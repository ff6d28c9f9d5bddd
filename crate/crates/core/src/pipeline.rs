//! End-to-end runs: choose cutoffs, project the Cauchy data, march along the
//! depth axis, reconstruct and write artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::MAX_BASIS_SIZE;
use crate::ivp::{Integrator, ReducedState, ReducedSystem, Trajectory};
use crate::numerics::{Cylinder, CylinderField, Grid, QuadratureRule, DEFAULT_NT, DEFAULT_NX, DEFAULT_NY};
use crate::problems::{self, add_noise, NoiseSpec, ProblemDefinition, STREAM_G, STREAM_Q};
use crate::reduction::{self, assemble_coupling, project_data, CutoffSelection};
use crate::report::{self, ErrorReport, SolutionField};
use crate::tensor::{MultiIndexSet, TensorBasis};
use crate::{Error, Result};

/// Largest cutoff the automatic rule may pick on any axis.
pub const AUTO_CUTOFF_CAP: usize = 20;
pub const DEFAULT_PHI_THRESHOLD: f64 = 0.05;
pub const DEFAULT_CUTOFF_MARGIN: usize = 5;
/// Solution fields with more nodes than this go to the binary format.
pub const CSV_NODE_LIMIT: usize = 250_000;
const SHD1_MAGIC: &[u8; 4] = b"SHD1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CutoffMode {
    /// Corner of the φ curve (first cutoff with φ ≤ threshold, else the knee)
    /// plus `margin` on every axis, capped at [`AUTO_CUTOFF_CAP`].
    Auto { threshold: f64, margin: usize },
    /// The cutoffs stored with the problem.
    Recommended,
    /// Explicit cutoffs, transverse axes first and time last.
    Fixed { cutoffs: Vec<usize> },
}

impl Default for CutoffMode {
    fn default() -> Self {
        Self::Auto {
            threshold: DEFAULT_PHI_THRESHOLD,
            margin: DEFAULT_CUTOFF_MARGIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    /// CSV up to [`CSV_NODE_LIMIT`] nodes, binary beyond.
    #[default]
    Auto,
    Csv,
    Binary,
}

impl FromStr for FieldFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "csv" => Ok(Self::Csv),
            "binary" | "shd1" => Ok(Self::Binary),
            other => Err(Error::Config(format!("unknown field format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub test: u32,
    pub noise: f64,
    pub seed: u64,
    pub cutoffs: CutoffMode,
    pub integrator: Integrator,
    pub nx: usize,
    /// Node count on every transverse axis.
    pub ny: usize,
    pub nt: usize,
    pub quadrature: QuadratureRule,
    /// Keep every `field_stride`-th node per axis in the solution dump;
    /// `None` keeps all nodes in one dimension and every tenth in two.
    pub field_stride: Option<usize>,
    pub field_format: FieldFormat,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            test: 1,
            noise: 0.0,
            seed: 0,
            cutoffs: CutoffMode::default(),
            integrator: Integrator::Rk4,
            nx: DEFAULT_NX,
            ny: DEFAULT_NY,
            nt: DEFAULT_NT,
            quadrature: QuadratureRule::Simpson,
            field_stride: None,
            field_format: FieldFormat::Auto,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<ProblemDefinition> {
        let problem = problems::builtin(self.test)?;
        NoiseSpec::new(self.noise, self.seed)?;
        if self.nx < 2 || self.ny < 2 || self.nt < 3 {
            return Err(Error::Config(format!(
                "grid needs nx >= 2, ny >= 2, nt >= 3 (got {}, {}, {})",
                self.nx, self.ny, self.nt
            )));
        }
        let d = problem.dimension();
        match &self.cutoffs {
            CutoffMode::Auto { threshold, .. } => {
                if !(*threshold > 0.0 && *threshold < 1.0) {
                    return Err(Error::Config(format!("phi threshold {threshold} outside (0, 1)")));
                }
            }
            CutoffMode::Recommended => {}
            CutoffMode::Fixed { cutoffs } => {
                if cutoffs.len() != d {
                    return Err(Error::Config(format!(
                        "test {} needs {d} cutoffs (transverse axes, then time), got {}",
                        self.test,
                        cutoffs.len()
                    )));
                }
                if let Some(&bad) = cutoffs.iter().find(|&&n| n == 0 || n > MAX_BASIS_SIZE) {
                    return Err(Error::Config(format!("cutoff {bad} outside 1..={MAX_BASIS_SIZE}")));
                }
            }
        }
        if let Integrator::Rk45 { rtol, atol } = self.integrator {
            if !(rtol > 0.0 && atol > 0.0) {
                return Err(Error::Config("rk45 tolerances must be positive".into()));
            }
        }
        if self.field_stride == Some(0) {
            return Err(Error::Config("field stride must be positive".into()));
        }
        Ok(problem)
    }

    fn stride(&self, dimension: usize) -> usize {
        self.field_stride.unwrap_or(if dimension == 1 { 1 } else { 10 })
    }
}

/// Problem, grid and (possibly noisy) Cauchy data of a run.
pub struct Prepared {
    pub problem: ProblemDefinition,
    pub grid: Grid,
    pub cylinder: Cylinder,
    pub g: CylinderField,
    pub q: CylinderField,
}

/// Step 0: builds the grid and samples the noisy data.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let problem = config.validate()?;
    let grid = problem.grid(config.nx, config.ny, config.nt)?;
    let cylinder = grid.cylinder(config.quadrature);
    let k = problem.transverse.len();
    let sample = |f: &problems::FieldFn| cylinder.sample(|p| f(&p[..k], p[k]));
    let spec = NoiseSpec::new(config.noise, config.seed)?;
    let g = add_noise(&sample(problem.g.as_ref()), spec, STREAM_G);
    let q = add_noise(&sample(problem.q.as_ref()), spec, STREAM_Q);
    Ok(Prepared {
        problem,
        grid,
        cylinder,
        g,
        q,
    })
}

fn tensor_basis(problem: &ProblemDefinition, cutoffs: &[usize]) -> Result<TensorBasis> {
    TensorBasis::new(
        &problem.transverse,
        problem.time_interval(),
        MultiIndexSet::new(cutoffs.to_vec())?,
    )
}

/// Step 1: the cutoff box, with the φ sweeps when it is chosen automatically.
pub fn choose_cutoffs(prepared: &Prepared, mode: &CutoffMode) -> Result<(Vec<usize>, Option<CutoffSelection>)> {
    match mode {
        CutoffMode::Fixed { cutoffs } => Ok((cutoffs.clone(), None)),
        CutoffMode::Recommended => Ok((prepared.problem.recommended_cutoffs.clone(), None)),
        CutoffMode::Auto { threshold, margin } => {
            let d = prepared.problem.dimension();
            let tb = tensor_basis(&prepared.problem, &vec![AUTO_CUTOFF_CAP; d])?;
            let sampled = tb.sample(&prepared.cylinder)?;
            let selection = reduction::select_cutoff(&prepared.g, &sampled, *threshold)?;
            let cutoffs = selection
                .cutoffs
                .iter()
                .map(|&n| (n + margin).min(AUTO_CUTOFF_CAP))
                .collect();
            Ok((cutoffs, Some(selection)))
        }
    }
}

/// Steps 2 to 5 for a fixed cutoff box.
pub fn solve_with(
    prepared: &Prepared,
    cutoffs: &[usize],
    integrator: Integrator,
    stride: usize,
) -> Result<(Trajectory, SolutionField, Option<ErrorReport>)> {
    let problem = &prepared.problem;
    let tb = tensor_basis(problem, cutoffs)?;
    let sampled = tb.sample(&prepared.cylinder)?;
    let data = project_data(&prepared.g, &prepared.q, &sampled)?;
    let coupling = assemble_coupling(&tb)?;
    let system = ReducedSystem::new(coupling, problem.nonlinearity.clone(), sampled)?;
    let x_axis = prepared.grid.x_axis;
    let initial = ReducedState::new(x_axis.node(0), data.g, data.q)?;
    let trajectory = system.integrate(&initial, &x_axis.nodes(), integrator)?;
    let (field, errors) = report::evaluate(
        &trajectory,
        system.sampled(),
        &x_axis,
        problem.true_solution.as_deref(),
        problem.report_time,
        stride,
    )?;
    Ok((trajectory, field, errors))
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub problem: String,
    pub dimension: usize,
    pub cutoffs: Vec<usize>,
    pub selection: Option<CutoffSelection>,
    pub field: SolutionField,
    pub errors: Option<ErrorReport>,
    pub blowup_at: Option<f64>,
    pub wall_seconds: f64,
}

impl RunResult {
    pub fn is_complete(&self) -> bool {
        self.blowup_at.is_none()
    }
}

/// Runs the full pipeline without touching the file system.
pub fn execute(config: &RunConfig) -> Result<RunResult> {
    let start = Instant::now();
    let prepared = prepare(config)?;
    let (cutoffs, selection) = choose_cutoffs(&prepared, &config.cutoffs)?;
    let stride = config.stride(prepared.problem.dimension());
    let (trajectory, field, errors) = solve_with(&prepared, &cutoffs, config.integrator, stride)?;
    Ok(RunResult {
        config: config.clone(),
        problem: prepared.problem.name.clone(),
        dimension: prepared.problem.dimension(),
        cutoffs,
        selection,
        field,
        errors,
        blowup_at: trajectory.blowup_at,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the pipeline and writes its artifacts into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    let result = execute(config)?;
    write_artifacts(&result, &config.out)?;
    Ok(result)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io_error(&tmp))?;
    file.write_all(bytes).map_err(io_error(&tmp))?;
    file.sync_all().map_err(io_error(&tmp))?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_error(path))
}

fn axis_names(dimension: usize) -> Vec<String> {
    let mut names = vec!["x".to_string()];
    match dimension {
        1 => {}
        2 => names.push("y".into()),
        _ => names.extend((2..=dimension).map(|i| format!("x{i}"))),
    }
    names.push("t".into());
    names
}

fn solution_csv(field: &SolutionField, dimension: usize) -> String {
    let mut out = axis_names(dimension).join(",");
    let has_truth = field.truth.is_some();
    out.push_str(if has_truth { ",u_comp,u_true,abs_err\n" } else { ",u_comp\n" });
    let mut point = vec![0.0; dimension + 1];
    for (k, value) in field.computed.iter().enumerate() {
        field.point(k, &mut point);
        for p in &point {
            out.push_str(&format!("{p},"));
        }
        match value {
            Some(v) => out.push_str(&format!("{v}")),
            None => out.push_str("NA"),
        }
        if let Some(truth) = &field.truth {
            let t = truth[k];
            match value {
                Some(v) => out.push_str(&format!(",{t},{}", (v - t).abs())),
                None => out.push_str(&format!(",{t},NA")),
            }
        }
        out.push('\n');
    }
    out
}

/// `SHD1` dump: magic, axis count, per-axis node counts and coordinates
/// (depth first, time last), a truth flag, then `u_comp` (NaN where the march
/// stopped) and optionally `u_true`, all little-endian, time slowest within
/// each depth and the first transverse axis fastest.
pub fn solution_binary(field: &SolutionField) -> Vec<u8> {
    let mut axes: Vec<&[f64]> = vec![&field.xs];
    axes.extend(field.cylinder_nodes.iter().map(Vec::as_slice));
    let mut out = Vec::with_capacity(16 + 8 * field.len() * 2);
    out.extend_from_slice(SHD1_MAGIC);
    out.extend_from_slice(&(axes.len() as u64).to_le_bytes());
    for axis in &axes {
        out.extend_from_slice(&(axis.len() as u64).to_le_bytes());
    }
    for axis in &axes {
        for v in *axis {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.push(u8::from(field.truth.is_some()));
    for v in &field.computed {
        out.extend_from_slice(&v.unwrap_or(f64::NAN).to_le_bytes());
    }
    if let Some(truth) = &field.truth {
        for v in truth {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Axes, `u_comp` and optional `u_true` of a decoded dump.
pub type BinaryField = (Vec<Vec<f64>>, Vec<f64>, Option<Vec<f64>>);

/// Decodes an `SHD1` dump.
pub fn read_binary(bytes: &[u8]) -> Result<BinaryField> {
    let bad = || Error::Config("malformed SHD1 dump".into());
    if bytes.len() < 12 || &bytes[..4] != SHD1_MAGIC {
        return Err(bad());
    }
    let mut pos = 4;
    let u64_at = |pos: &mut usize| -> Result<u64> {
        let chunk = bytes.get(*pos..*pos + 8).ok_or_else(bad)?;
        *pos += 8;
        Ok(u64::from_le_bytes(chunk.try_into().expect("8 bytes")))
    };
    let n_axes = u64_at(&mut pos)? as usize;
    let counts = (0..n_axes).map(|_| u64_at(&mut pos).map(|c| c as usize)).collect::<Result<Vec<_>>>()?;
    let f64_at = |pos: &mut usize| -> Result<f64> {
        let chunk = bytes.get(*pos..*pos + 8).ok_or_else(bad)?;
        *pos += 8;
        Ok(f64::from_le_bytes(chunk.try_into().expect("8 bytes")))
    };
    let axes = counts
        .iter()
        .map(|&c| (0..c).map(|_| f64_at(&mut pos)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let has_truth = *bytes.get(pos).ok_or_else(bad)? == 1;
    pos += 1;
    let len: usize = counts.iter().product();
    let computed = (0..len).map(|_| f64_at(&mut pos)).collect::<Result<Vec<_>>>()?;
    let truth = if has_truth {
        Some((0..len).map(|_| f64_at(&mut pos)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    if pos != bytes.len() {
        return Err(bad());
    }
    Ok((axes, computed, truth))
}

fn errors_text(result: &RunResult) -> String {
    let c = &result.config;
    let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut lines = vec![
        format!("problem={}", result.problem),
        format!("noise={}", c.noise),
        format!("cutoffs={}", list(&result.cutoffs)),
        format!("integrator={}", c.integrator.name()),
        format!("complete={}", result.is_complete()),
        format!(
            "blowup_at={}",
            result.blowup_at.map_or_else(|| "none".to_string(), |x| x.to_string())
        ),
    ];
    if let Some(sel) = &result.selection {
        lines.push(format!("phi_corner={}", list(&sel.cutoffs)));
        lines.push(format!("phi_threshold_met={}", sel.threshold_met));
    }
    match &result.errors {
        Some(e) => {
            lines.push(format!("report_time={}", e.report_time));
            lines.push(format!("relative_l2={}", e.relative_l2));
            lines.push(format!("relative_l2_percent={}", 100.0 * e.relative_l2));
            lines.push(format!("relative_l2_full={}", e.relative_l2_full));
            lines.push(format!("relative_linf={}", e.relative_linf));
            lines.push(format!("valid_depth={}/{}", e.valid_depth, e.depth_nodes));
        }
        None => lines.push("relative_l2=NA".into()),
    }
    lines.join("\n") + "\n"
}

fn phi_csv(selection: &CutoffSelection) -> String {
    let mut out = String::from("axis,cutoff,phi,chosen\n");
    for sweep in &selection.sweeps {
        for (&n, &phi) in sweep.cutoffs.iter().zip(&sweep.phi) {
            out.push_str(&format!("{},{n},{phi},{}\n", sweep.axis, u8::from(n == sweep.chosen)));
        }
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    problem: &'a str,
    config: &'a RunConfig,
    seed: u64,
    cutoffs: &'a [usize],
    artifacts: Vec<String>,
    wall_seconds: f64,
}

/// Writes the solution dump, error report, φ table, timing and manifest.
pub fn write_artifacts(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut written = Vec::new();
    let put = |written: &mut Vec<PathBuf>, name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    let binary = match result.config.field_format {
        FieldFormat::Csv => false,
        FieldFormat::Binary => true,
        FieldFormat::Auto => result.field.len() > CSV_NODE_LIMIT,
    };
    if binary {
        put(&mut written, "solution.shd1", &solution_binary(&result.field))?;
    } else {
        put(&mut written, "solution.csv", solution_csv(&result.field, result.dimension).as_bytes())?;
    }
    put(&mut written, "errors.txt", errors_text(result).as_bytes())?;
    if let Some(sel) = &result.selection {
        put(&mut written, "phi_sweep.csv", phi_csv(sel).as_bytes())?;
    }
    put(&mut written, "timing.txt", format!("wall_seconds={}\n", result.wall_seconds).as_bytes())?;
    let mut artifacts: Vec<String> = written
        .iter()
        .map(|p| p.file_name().expect("file name").to_string_lossy().into_owned())
        .collect();
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        problem: &result.problem,
        config: &result.config,
        seed: result.config.seed,
        cutoffs: &result.cutoffs,
        artifacts,
        wall_seconds: result.wall_seconds,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    put(&mut written, "manifest.json", json.as_bytes())?;
    Ok(written)
}

/// Reads the configuration echoed in a manifest.
pub fn config_from_manifest(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
    serde_json::from_value(value["config"].clone())
        .map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Noise,
    Cutoff,
    Depth,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Self::Noise),
            "cutoff" => Ok(Self::Cutoff),
            "depth" => Ok(Self::Depth),
            other => Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// One CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// True when some point stopped early.
    pub blowup: bool,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",") + "\n";
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of column `name` parsed as numbers (`NA` becomes NaN).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }
}

pub const DEFAULT_NOISE_SWEEP: [f64; 3] = [0.0, 0.05, 0.10];
pub const DEFAULT_CUTOFF_SWEEP: (usize, usize) = (5, 30);

fn number_or_na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

/// Runs the pipeline across one axis and writes `sweep_<axis>.csv`.
///
/// * noise: one full run per level in `noise_<level>/`.
/// * cutoff: φ and the error for time cutoffs `range`, transverse cutoffs
///   taken from the configured mode.
/// * depth: one run, errors over `(a, x̄)` for every reached depth node.
pub fn sweep(
    config: &RunConfig,
    axis: SweepAxis,
    noise_levels: &[f64],
    range: (usize, usize),
) -> Result<SweepTable> {
    config.validate()?;
    let table = match axis {
        SweepAxis::Noise => {
            let mut rows = Vec::new();
            let mut blowup = false;
            for &level in noise_levels {
                let mut point = config.clone();
                point.noise = level;
                point.out = config.out.join(format!("noise_{level}"));
                let result = run(&point)?;
                blowup |= !result.is_complete();
                let e = result.errors.as_ref();
                rows.push(vec![
                    level.to_string(),
                    number_or_na(e.map(|e| e.relative_l2)),
                    number_or_na(e.map(|e| e.relative_l2_full)),
                    number_or_na(e.map(|e| e.relative_linf)),
                    result.is_complete().to_string(),
                    result.cutoffs.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                ]);
            }
            SweepTable {
                header: ["noise", "relative_l2", "relative_l2_full", "relative_linf", "complete", "cutoffs"]
                    .map(String::from)
                    .to_vec(),
                rows,
                blowup,
            }
        }
        SweepAxis::Cutoff => {
            let (lo, hi) = range;
            if lo == 0 || lo > hi || hi > MAX_BASIS_SIZE {
                return Err(Error::Config(format!("cutoff range {lo}..={hi} outside 1..={MAX_BASIS_SIZE}")));
            }
            let prepared = prepare(config)?;
            let (base, _) = choose_cutoffs(&prepared, &config.cutoffs)?;
            let time = base.len() - 1;
            let mut widest = base.clone();
            widest[time] = hi;
            let sampled = tensor_basis(&prepared.problem, &widest)?.sample(&prepared.cylinder)?;
            let (ns, phis) = reduction::phi_sweep(&prepared.g, &sampled, &widest, time, lo..=hi)?;
            let stride = config.stride(prepared.problem.dimension());
            let mut rows = Vec::new();
            let mut blowup = false;
            for (&n, &phi) in ns.iter().zip(&phis) {
                let mut cutoffs = base.clone();
                cutoffs[time] = n;
                let (traj, _, errors) = solve_with(&prepared, &cutoffs, config.integrator, stride)?;
                blowup |= !traj.is_complete();
                rows.push(vec![
                    n.to_string(),
                    phi.to_string(),
                    number_or_na(errors.as_ref().map(|e| e.relative_l2)),
                    traj.is_complete().to_string(),
                ]);
            }
            SweepTable {
                header: ["cutoff", "phi", "relative_l2", "complete"].map(String::from).to_vec(),
                rows,
                blowup,
            }
        }
        SweepAxis::Depth => {
            let result = run(config)?;
            let rows = result
                .errors
                .as_ref()
                .map(|e| {
                    e.depth_profile
                        .iter()
                        .map(|d| vec![d.x.to_string(), d.slice.to_string(), d.cumulative.to_string()])
                        .collect()
                })
                .unwrap_or_default();
            SweepTable {
                header: ["x", "slice_l2", "cumulative_l2"].map(String::from).to_vec(),
                rows,
                blowup: !result.is_complete(),
            }
        }
    };
    fs::create_dir_all(&config.out).map_err(io_error(&config.out))?;
    let name = match axis {
        SweepAxis::Noise => "sweep_noise.csv",
        SweepAxis::Cutoff => "sweep_cutoff.csv",
        SweepAxis::Depth => "sweep_depth.csv",
    };
    write_atomic(&config.out.join(name), table.to_csv().as_bytes())?;
    Ok(table)
}

/// Process exit code for a failed run.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io { .. } => 4,
        _ => 2,
    }
}

/// Exit code when a run finished but stopped marching early.
pub const EXIT_BLOWUP: i32 = 3;
