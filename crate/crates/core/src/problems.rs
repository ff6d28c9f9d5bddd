//! Built-in benchmark problems, the multiplicative noise model and the
//! explicit instability example for the sideways heat equation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::numerics::{Axis, CylinderField, Grid, DEFAULT_NT, DEFAULT_NX, DEFAULT_NY};
use crate::reduction::{Nonlinearity, NodeState};
use crate::{Error, Result};

/// A function of `(point, t)`. For data on the measurement face the point is
/// `x̃ = (x_2, …, x_d)`; for solutions it is the full `(x, x_2, …, x_d)`.
pub type FieldFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// A lateral Cauchy problem `u_t = Δu + F` on `Ω × (0, T)` with data on `x = a`.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub name: String,
    pub x_interval: Interval,
    pub transverse: Vec<Interval>,
    pub final_time: f64,
    /// Errors are reported on `(0, report_time)`; the solver ignores it.
    pub report_time: f64,
    /// `None` for the pure heat equation.
    pub nonlinearity: Option<Arc<Nonlinearity>>,
    pub g: Arc<FieldFn>,
    pub q: Arc<FieldFn>,
    pub true_solution: Option<Arc<FieldFn>>,
    /// `∂_x u_true`, used only for consistency checks.
    pub true_flux: Option<Arc<FieldFn>>,
    pub recommended_cutoffs: Vec<usize>,
}

impl std::fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("x_interval", &self.x_interval)
            .field("transverse", &self.transverse)
            .field("final_time", &self.final_time)
            .field("report_time", &self.report_time)
            .field("recommended_cutoffs", &self.recommended_cutoffs)
            .finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    pub fn dimension(&self) -> usize {
        self.transverse.len() + 1
    }

    pub fn time_interval(&self) -> Interval {
        Interval::new(0.0, self.final_time).expect("positive final time")
    }

    /// Uniform grid with the given node counts (`ny` applies to every
    /// transverse axis).
    pub fn grid(&self, nx: usize, ny: usize, nt: usize) -> Result<Grid> {
        Ok(Grid {
            x_axis: Axis::new(self.x_interval, nx)?,
            transverse: self
                .transverse
                .iter()
                .map(|&i| Axis::new(i, ny))
                .collect::<Result<_>>()?,
            time: Axis::new(self.time_interval(), nt)?,
        })
    }

    pub fn default_grid(&self) -> Result<Grid> {
        self.grid(DEFAULT_NX, DEFAULT_NY, DEFAULT_NT)
    }

    /// Largest deviation of `g` from `u_true(a, ·)` and of `q` from
    /// `∂_x u_true(a, ·)` over the cylinder nodes of `grid`.
    pub fn data_consistency(&self, grid: &Grid) -> Option<f64> {
        let truth = self.true_solution.as_ref()?;
        let flux = self.true_flux.as_ref()?;
        let cylinder = grid.cylinder(Default::default());
        let a = self.x_interval.lo();
        let k = self.transverse.len();
        let mut worst = 0.0_f64;
        let mut coords = vec![0.0; k + 1];
        let mut full = vec![0.0; k + 1];
        for flat in 0..cylinder.len() {
            cylinder.point(flat, &mut coords);
            let t = coords[k];
            full[0] = a;
            full[1..].copy_from_slice(&coords[..k]);
            worst = worst
                .max(((self.g)(&coords[..k], t) - truth(&full, t)).abs())
                .max(((self.q)(&coords[..k], t) - flux(&full, t)).abs());
        }
        Some(worst)
    }
}

/// The four benchmark problems.
pub fn builtin(test_id: u32) -> Result<ProblemDefinition> {
    let unit = |lo, hi| Interval::new(lo, hi).expect("literal interval");
    let time = 1.5;
    let report = 1.3;
    match test_id {
        1 => Ok(ProblemDefinition {
            name: "test1".into(),
            x_interval: unit(0.0, 1.0),
            transverse: vec![],
            final_time: time,
            report_time: report,
            nonlinearity: None,
            g: Arc::new(|_, t| 2.0 * (8.0 * t).sin()),
            q: Arc::new(|_, _| 0.0),
            true_solution: Some(Arc::new(|p, t| {
                let x = p[0];
                (2.0 * x).exp() * (8.0 * t + 2.0 * x).sin() + (-2.0 * x).exp() * (8.0 * t - 2.0 * x).sin()
            })),
            true_flux: Some(Arc::new(|p, t| {
                let x = p[0];
                let (a, b) = (8.0 * t + 2.0 * x, 8.0 * t - 2.0 * x);
                2.0 * (2.0 * x).exp() * (a.sin() + a.cos()) - 2.0 * (-2.0 * x).exp() * (b.sin() + b.cos())
            })),
            recommended_cutoffs: vec![15],
        }),
        2 => Ok(ProblemDefinition {
            name: "test2".into(),
            x_interval: unit(0.0, 1.0),
            transverse: vec![],
            final_time: time,
            report_time: report,
            nonlinearity: Some(Arc::new(|s: &NodeState<'_>| {
                let x = s.point[0];
                let phase = x * x + s.t;
                s.grad[0] * s.grad[0] + 4.0 * x * x * s.u - 4.0 * x * x * phase.cos().powi(2) - phase.cos()
            })),
            g: Arc::new(|_, t| t.sin()),
            q: Arc::new(|_, _| 0.0),
            true_solution: Some(Arc::new(|p, t| (p[0] * p[0] + t).sin())),
            true_flux: Some(Arc::new(|p, t| 2.0 * p[0] * (p[0] * p[0] + t).cos())),
            recommended_cutoffs: vec![5],
        }),
        3 => Ok(ProblemDefinition {
            name: "test3".into(),
            x_interval: unit(0.0, 0.5),
            transverse: vec![unit(-1.0, 1.0)],
            final_time: time,
            report_time: report,
            // The squared cosine makes cos(x² + y² + t) an exact solution.
            nonlinearity: Some(Arc::new(|s: &NodeState<'_>| {
                let r2 = s.point[0] * s.point[0] + s.point[1] * s.point[1];
                let phase = r2 + s.t;
                s.u * s.u + 4.0 * r2 * s.u - phase.cos().powi(2) + 3.0 * phase.sin()
            })),
            g: Arc::new(|p, t| (p[0] * p[0] + t).cos()),
            q: Arc::new(|_, _| 0.0),
            true_solution: Some(Arc::new(|p, t| (p[0] * p[0] + p[1] * p[1] + t).cos())),
            true_flux: Some(Arc::new(|p, t| -2.0 * p[0] * (p[0] * p[0] + p[1] * p[1] + t).sin())),
            recommended_cutoffs: vec![10, 6],
        }),
        4 => Ok(ProblemDefinition {
            name: "test4".into(),
            x_interval: unit(0.0, 0.5),
            transverse: vec![unit(-1.0, 1.0)],
            final_time: time,
            report_time: report,
            // |∇u|² = 5cos²(2x + y + t) for the exact solution; the forcing cancels it.
            nonlinearity: Some(Arc::new(|s: &NodeState<'_>| {
                let phase = 2.0 * s.point[0] + s.point[1] + s.t;
                let grad_sq: f64 = s.grad.iter().map(|g| g * g).sum();
                grad_sq + 5.0 * s.u - 5.0 * phase.cos().powi(2) + phase.cos()
            })),
            g: Arc::new(|p, t| (p[0] + t).sin()),
            q: Arc::new(|p, t| 2.0 * (p[0] + t).cos()),
            true_solution: Some(Arc::new(|p, t| (2.0 * p[0] + p[1] + t).sin())),
            true_flux: Some(Arc::new(|p, t| 2.0 * (2.0 * p[0] + p[1] + t).cos())),
            recommended_cutoffs: vec![8, 8],
        }),
        other => Err(Error::UnknownTest(other)),
    }
}

/// Multiplicative uniform noise `f (1 + δ r)`, `r ~ U[-1, 1]` i.i.d. per node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(level: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&level) {
            return Err(Error::Config(format!("noise level {level} outside [0, 1)")));
        }
        Ok(Self { level, seed })
    }
}

/// Noise stream used for the Dirichlet data `g`.
pub const STREAM_G: u64 = 0;
/// Noise stream used for the flux data `q`.
pub const STREAM_Q: u64 = 1;

/// Applies `spec` to `field` with draws from sub-stream `stream` of the seed.
pub fn add_noise(field: &CylinderField, spec: NoiseSpec, stream: u64) -> CylinderField {
    let mut out = field.clone();
    if spec.level == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    for v in out.values_mut() {
        let r: f64 = rng.gen_range(-1.0..=1.0);
        *v *= 1.0 + spec.level * r;
    }
    out
}

/// Diagnostics of the explicit instability example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IllPosednessReport {
    pub n: u32,
    /// `max |η_t - η_xx| / max |η_t|` over interior nodes (central differences).
    pub relative_residual: f64,
    /// `max_t |η(0, t) - 2 n^{-2} sin(2 n² t)|`.
    pub boundary_mismatch: f64,
    /// `max_t |∂_x η(0, t)|`.
    pub flux_max: f64,
    /// `max_t |η(b, t)| / max_t |η(0, t)|`.
    pub amplitude_ratio: f64,
    /// `e^{n b} / 2`.
    pub expected_ratio: f64,
    /// `(x, max_t |η(x, t)|, n^{-2} e^{n x})` at every depth node.
    pub profile: Vec<(f64, f64, f64)>,
    /// Largest `|u - u*|` over the grid, with `u*` the first benchmark solution.
    pub max_error: f64,
}

/// Builds `u = u* + η` with
/// `η = n^{-2}[e^{nx} sin(2n²t + nx) + e^{-nx} sin(2n²t - nx)]` on the
/// `x × t` grid, `u*` being the exact solution of the first benchmark.
/// Both solve the heat equation; their Cauchy data differ only by the
/// `O(n^{-2})` term `η(0, t)` while the interior gap grows like `e^{nx}`.
pub fn ill_posedness_demo(n: u32, x_axis: &Axis, t_axis: &Axis) -> Result<IllPosednessReport> {
    if n == 0 {
        return Err(Error::Config("frequency n must be positive".into()));
    }
    let nf = n as f64;
    let omega = 2.0 * nf * nf;
    let product = omega * t_axis.step();
    if product >= 1.0 {
        return Err(Error::Unresolved { n, product });
    }
    let eta = |x: f64, t: f64| {
        ((nf * x).exp() * (omega * t + nf * x).sin() + (-nf * x).exp() * (omega * t - nf * x).sin()) / (nf * nf)
    };
    let eta_x = |x: f64, t: f64| {
        let (a, b) = (omega * t + nf * x, omega * t - nf * x);
        ((nf * x).exp() * (a.sin() + a.cos()) - (-nf * x).exp() * (b.sin() + b.cos())) / nf
    };
    let truth = builtin(1)?.true_solution.expect("analytic solution");

    let xs = x_axis.nodes();
    let ts = t_axis.nodes();
    let (hx, ht) = (x_axis.step(), t_axis.step());
    let mut residual = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 1..xs.len() - 1 {
        for j in 1..ts.len() - 1 {
            let (x, t) = (xs[i], ts[j]);
            let ut = (eta(x, ts[j + 1]) - eta(x, ts[j - 1])) / (2.0 * ht);
            let uxx = (eta(xs[i + 1], t) - 2.0 * eta(x, t) + eta(xs[i - 1], t)) / (hx * hx);
            residual = residual.max((ut - uxx).abs());
            scale = scale.max(ut.abs());
        }
    }
    let boundary_mismatch = ts
        .iter()
        .map(|&t| (eta(xs[0], t) - 2.0 * (omega * t).sin() / (nf * nf)).abs())
        .fold(0.0, f64::max);
    let flux_max = ts.iter().map(|&t| eta_x(xs[0], t).abs()).fold(0.0, f64::max);
    let sup_at = |x: f64| ts.iter().map(|&t| eta(x, t).abs()).fold(0.0, f64::max);
    let profile: Vec<(f64, f64, f64)> =
        xs.iter().map(|&x| (x, sup_at(x), (nf * x).exp() / (nf * nf))).collect();
    let amplitude_ratio = profile[profile.len() - 1].1 / profile[0].1;
    let b = x_axis.interval().hi();
    let mut max_error = 0.0_f64;
    for &x in &xs {
        for &t in &ts {
            let perturbed = truth(&[x], t) + eta(x, t);
            max_error = max_error.max((perturbed - truth(&[x], t)).abs());
        }
    }
    Ok(IllPosednessReport {
        n,
        relative_residual: residual / scale.max(f64::MIN_POSITIVE),
        boundary_mismatch,
        flux_max,
        amplitude_ratio,
        expected_ratio: (nf * b).exp() / 2.0,
        profile,
        max_error,
    })
}
