//! Marching the reduced first-order system `w' = F(x, w)`, `w = [u; u']`,
//! along the depth axis.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::reduction::{project_nonlinearity, CouplingMatrix, Nonlinearity};
use crate::tensor::SampledBasis;
use crate::{Error, Result};

/// A first-order system `y' = f(x, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.1)(x, y, dy);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Integrator {
    /// Classical fixed-step RK4, one step per grid interval.
    #[default]
    Rk4,
    /// Dormand-Prince 5(4) with adaptive substeps between grid nodes.
    Rk45 { rtol: f64, atol: f64 },
    /// Forward Euler, one step per grid interval.
    Euler,
}

impl Integrator {
    pub const DEFAULT_RTOL: f64 = 1e-6;
    pub const DEFAULT_ATOL: f64 = 1e-9;

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::Rk45 { .. } => "rk45",
            Self::Euler => "euler",
        }
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "rk45" => Ok(Self::Rk45 {
                rtol: Self::DEFAULT_RTOL,
                atol: Self::DEFAULT_ATOL,
            }),
            "euler" => Ok(Self::Euler),
            other => Err(Error::Config(format!("unknown integrator '{other}'"))),
        }
    }
}

/// Solution of a generic system at the requested nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub xs: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Depth at which a non-finite state (or forcing) stopped the march.
    pub blowup_at: Option<f64>,
}

/// Integrates `system` from `y0` at `nodes[0]` and records the state at every node.
/// A non-finite state or right-hand side truncates the output.
pub fn solve<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    nodes: &[f64],
    method: Integrator,
) -> Result<Solution> {
    let n = system.dim();
    if y0.len() != n {
        return Err(Error::ShapeMismatch {
            expected: vec![n],
            got: vec![y0.len()],
        });
    }
    if nodes.is_empty() {
        return Err(Error::Config("empty integration grid".into()));
    }
    let mut out = Solution {
        xs: vec![nodes[0]],
        states: vec![y0.to_vec()],
        blowup_at: None,
    };
    if y0.iter().any(|v| !v.is_finite()) {
        out.blowup_at = Some(nodes[0]);
        return Ok(out);
    }
    let mut work = Workspace::new(n);
    let mut y = y0.to_vec();
    for pair in nodes.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        let step = match method {
            Integrator::Rk4 => rk4_step(system, x0, x1 - x0, &mut y, &mut work),
            Integrator::Euler => euler_step(system, x0, x1 - x0, &mut y, &mut work),
            Integrator::Rk45 { rtol, atol } => dopri_span(system, x0, x1, &mut y, &mut work, rtol, atol),
        };
        match step {
            Ok(()) if y.iter().all(|v| v.is_finite()) => {
                out.xs.push(x1);
                out.states.push(y.clone());
            }
            Ok(()) | Err(Error::NonFinite(_)) => {
                out.blowup_at = Some(x1);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            next: vec![0.0; n],
        }
    }
}

fn euler_step<S: OdeSystem + ?Sized>(s: &S, x: f64, h: f64, y: &mut [f64], w: &mut Workspace) -> Result<()> {
    s.rhs(x, y, &mut w.k[0])?;
    y.iter_mut().zip(&w.k[0]).for_each(|(v, k)| *v += h * k);
    Ok(())
}

fn rk4_step<S: OdeSystem + ?Sized>(s: &S, x: f64, h: f64, y: &mut [f64], w: &mut Workspace) -> Result<()> {
    let Workspace { k, tmp, .. } = w;
    let [k1, k2, k3, k4, ..] = k;
    s.rhs(x, y, k1)?;
    axpy(tmp, y, 0.5 * h, k1);
    s.rhs(x + 0.5 * h, tmp, k2)?;
    axpy(tmp, y, 0.5 * h, k2);
    s.rhs(x + 0.5 * h, tmp, k3)?;
    axpy(tmp, y, h, k3);
    s.rhs(x + h, tmp, k4)?;
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = a + h * b;
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince from `x0` to exactly `x1`.
#[allow(clippy::needless_range_loop)]
fn dopri_span<S: OdeSystem + ?Sized>(
    s: &S,
    x0: f64,
    x1: f64,
    y: &mut [f64],
    w: &mut Workspace,
    rtol: f64,
    atol: f64,
) -> Result<()> {
    let span = x1 - x0;
    let mut x = x0;
    let mut h = span;
    let min_step = 1e-12 * span.abs().max(1e-300);
    while (x1 - x) > 1e-14 * span.abs() {
        h = h.min(x1 - x);
        for stage in 0..7 {
            for i in 0..y.len() {
                let mut acc = y[i];
                for (j, a) in A[stage].iter().enumerate().take(stage) {
                    acc += h * a * w.k[j][i];
                }
                w.tmp[i] = acc;
            }
            let (_, tail) = w.k.split_at_mut(stage);
            s.rhs(x + C[stage] * h, &w.tmp, &mut tail[0])?;
        }
        let mut err = 0.0_f64;
        for i in 0..y.len() {
            let hi: f64 = (0..7).map(|j| B5[j] * w.k[j][i]).sum();
            let lo: f64 = (0..7).map(|j| B4[j] * w.k[j][i]).sum();
            w.next[i] = y[i] + h * hi;
            let scale = atol + rtol * y[i].abs().max(w.next[i].abs());
            let e = h * (hi - lo) / scale;
            err = err.max(e.abs());
        }
        if !err.is_finite() {
            return Err(Error::NonFinite("rk45 step"));
        }
        let accepted = err <= 1.0;
        if accepted {
            x += h;
            y.copy_from_slice(&w.next);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if !accepted && h < min_step {
            return Err(Error::NonFinite("rk45 step size underflow"));
        }
    }
    Ok(())
}

/// Coefficient vectors of the truncated expansion at one depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedState {
    pub x: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl ReducedState {
    pub fn new(x: f64, u: Vec<f64>, du: Vec<f64>) -> Result<Self> {
        if u.len() != du.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![u.len()],
                got: vec![du.len()],
            });
        }
        Ok(Self { x, u, du })
    }

    fn packed(&self) -> Vec<f64> {
        self.u.iter().chain(&self.du).copied().collect()
    }
}

/// States at the depth nodes actually reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<ReducedState>,
    pub blowup_at: Option<f64>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.blowup_at.is_none()
    }
}

/// `u_m'' = Σ_n s_mn u_n - F_m(x, u, u')` as a first-order system.
pub struct ReducedSystem {
    coupling: CouplingMatrix,
    nonlinearity: Option<Arc<Nonlinearity>>,
    sampled: SampledBasis,
}

impl ReducedSystem {
    pub fn new(coupling: CouplingMatrix, nonlinearity: Option<Arc<Nonlinearity>>, sampled: SampledBasis) -> Result<Self> {
        if coupling.len() != sampled.index_set().len() {
            return Err(Error::ShapeMismatch {
                expected: vec![sampled.index_set().len()],
                got: vec![coupling.len()],
            });
        }
        Ok(Self {
            coupling,
            nonlinearity,
            sampled,
        })
    }

    pub fn sampled(&self) -> &SampledBasis {
        &self.sampled
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    /// Derivative `[u'; u'']` of `state`.
    pub fn derivative(&self, state: &ReducedState) -> Result<ReducedState> {
        let packed = state.packed();
        let mut out = vec![0.0; packed.len()];
        self.rhs(state.x, &packed, &mut out)?;
        let n = state.u.len();
        ReducedState::new(state.x, out[..n].to_vec(), out[n..].to_vec())
    }

    pub fn integrate(&self, initial: &ReducedState, nodes: &[f64], method: Integrator) -> Result<Trajectory> {
        if nodes.first() != Some(&initial.x) {
            return Err(Error::Config("initial state must sit on the first depth node".into()));
        }
        let sol = solve(self, &initial.packed(), nodes, method)?;
        let n = initial.u.len();
        let states = sol
            .xs
            .into_iter()
            .zip(sol.states)
            .map(|(x, w)| ReducedState {
                x,
                u: w[..n].to_vec(),
                du: w[n..].to_vec(),
            })
            .collect();
        Ok(Trajectory {
            states,
            blowup_at: sol.blowup_at,
        })
    }
}

impl OdeSystem for ReducedSystem {
    fn dim(&self) -> usize {
        2 * self.coupling.len()
    }

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reduced state"));
        }
        let n = self.coupling.len();
        let (u, du) = y.split_at(n);
        let (first, second) = dy.split_at_mut(n);
        first.copy_from_slice(du);
        self.coupling.apply(u, second);
        if let Some(f) = &self.nonlinearity {
            let forcing = project_nonlinearity(f.as_ref(), x, u, du, &self.sampled)?;
            second.iter_mut().zip(forcing).for_each(|(s, fm)| *s -= fm);
        }
        Ok(())
    }
}
