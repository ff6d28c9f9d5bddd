//! Reconstruction of `u(x, x̃, t)` from the marched coefficients and error
//! norms against a known solution.
//!
//! Norms use trapezoid weights on the full grid and are accumulated one
//! depth node at a time, so the full space-time field is never stored. Only a
//! strided sub-grid is kept for output.

use rayon::prelude::*;
use serde::Serialize;

use crate::ivp::Trajectory;
use crate::numerics::{quadrature_weights, Axis, QuadratureRule};
use crate::problems::FieldFn;
use crate::tensor::SampledBasis;
use crate::{Error, Result};

/// Error summary of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    /// `‖u_comp - u_true‖ / ‖u_true‖` in L² over `Ω × (0, report_time)`.
    pub relative_l2: f64,
    /// Same over the full time window `(0, T)`.
    pub relative_l2_full: f64,
    /// Sup-norm counterpart on `(0, report_time)`.
    pub relative_linf: f64,
    pub report_time: f64,
    /// Depth nodes reached by the marching scheme.
    pub valid_depth: usize,
    pub depth_nodes: usize,
    pub complete: bool,
    /// Errors on `(0, report_time)` resolved along the reached depth nodes.
    pub depth_profile: Vec<DepthError>,
}

/// Relative L² error on the slice `x = x_i` and over `(a, x_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthError {
    pub x: f64,
    pub slice: f64,
    pub cumulative: f64,
}

/// Output sub-grid of the reconstruction. Depth nodes beyond the reach of the
/// marching scheme are present with `u_comp = None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    /// Kept depth coordinates.
    pub xs: Vec<f64>,
    /// Kept node coordinates per cylinder axis (transverse axes, then time).
    pub cylinder_nodes: Vec<Vec<f64>>,
    /// `u_comp` per kept node, depth slowest, first cylinder axis fastest.
    pub computed: Vec<Option<f64>>,
    /// `u_true` per kept node when a reference solution is known.
    pub truth: Option<Vec<f64>>,
    /// `max |u_true|` over the full grid, for normalizing pointwise errors.
    pub truth_scale: Option<f64>,
    pub cutoffs: Vec<usize>,
}

impl SolutionField {
    pub fn len(&self) -> usize {
        self.computed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.computed.is_empty()
    }

    /// Coordinates `(x, x_2, …, x_d, t)` of kept node `k`.
    pub fn point(&self, mut k: usize, out: &mut [f64]) {
        for (slot, nodes) in (1..).zip(&self.cylinder_nodes) {
            out[slot] = nodes[k % nodes.len()];
            k /= nodes.len();
        }
        out[0] = self.xs[k];
    }

    /// `|u_comp - u_true| / max |u_true|` per kept node.
    pub fn normalized_error(&self) -> Option<Vec<Option<f64>>> {
        let truth = self.truth.as_ref()?;
        let scale = self.truth_scale?;
        Some(
            self.computed
                .iter()
                .zip(truth)
                .map(|(c, t)| c.map(|c| (c - t).abs() / scale))
                .collect(),
        )
    }
}

/// Indices `0, stride, 2 stride, …` plus the last node.
pub fn strided(count: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (0..count).step_by(stride).collect();
    if out.last() != Some(&(count - 1)) {
        out.push(count - 1);
    }
    out
}

#[derive(Default, Clone, Copy)]
struct Sums {
    err_report: f64,
    ref_report: f64,
    err_full: f64,
    ref_full: f64,
    err_sup: f64,
    ref_sup: f64,
    ref_sup_full: f64,
    slice_err: f64,
    slice_ref: f64,
}

impl Sums {
    fn merge(mut self, o: Self) -> Self {
        self.err_report += o.err_report;
        self.ref_report += o.ref_report;
        self.err_full += o.err_full;
        self.ref_full += o.ref_full;
        self.err_sup = self.err_sup.max(o.err_sup);
        self.ref_sup = self.ref_sup.max(o.ref_sup);
        self.ref_sup_full = self.ref_sup_full.max(o.ref_sup_full);
        self
    }
}

/// Reconstructs `u` on the grid from `trajectory`, keeps every `stride`-th
/// node on each axis for output and, given `truth`, measures the error.
pub fn evaluate(
    trajectory: &Trajectory,
    sampled: &SampledBasis,
    x_axis: &Axis,
    truth: Option<&FieldFn>,
    report_time: f64,
    stride: usize,
) -> Result<(SolutionField, Option<ErrorReport>)> {
    let valid = trajectory.states.len();
    if valid > x_axis.count() {
        return Err(Error::ShapeMismatch {
            expected: vec![x_axis.count()],
            got: vec![valid],
        });
    }
    let cylinder = sampled.cylinder();
    let axes = cylinder.axes();
    let k = axes.len();
    let time_axis = cylinder.time_axis();
    let report_nodes = time_axis
        .nodes()
        .iter()
        .take_while(|&&t| t <= report_time + 1e-9 * time_axis.step())
        .count();
    if report_nodes < 2 {
        return Err(Error::Config(format!("report time {report_time} leaves fewer than two time nodes")));
    }

    // Trapezoid weights; the report window reuses them truncated in time.
    let trap = |count: usize, step: f64| {
        if count == 1 {
            vec![1.0]
        } else {
            quadrature_weights(QuadratureRule::Trapezoid, count, step)
        }
    };
    let x_weights = trap(valid.max(1), x_axis.step());
    let mut cyl_weights: Vec<Vec<f64>> = axes.iter().map(|a| trap(a.count(), a.step())).collect();
    let full_time_weights = cyl_weights[k - 1].clone();
    let report_time_weights = {
        let mut w = trap(report_nodes, time_axis.step());
        w.resize(time_axis.count(), 0.0);
        w
    };
    cyl_weights.pop();

    let kept: Vec<Vec<usize>> = axes.iter().map(|a| strided(a.count(), stride)).collect();
    let kept_x = strided(x_axis.count(), stride);
    let kept_len: usize = kept.iter().map(Vec::len).product();
    let plain = vec![0; k];

    // Per-node coordinates and weights, shared by every depth.
    let n_cyl = cylinder.len();
    let mut node_coords = vec![0.0; n_cyl * k];
    let mut node_weights = vec![(0.0, 0.0, false); n_cyl];
    {
        let shape = cylinder.shape();
        for flat in 0..n_cyl {
            cylinder.point(flat, &mut node_coords[flat * k..(flat + 1) * k]);
            let mut rest = flat;
            let mut w = 1.0;
            for (axis, weights) in cyl_weights.iter().enumerate() {
                w *= weights[rest % shape[axis]];
                rest /= shape[axis];
            }
            node_weights[flat] = (w * full_time_weights[rest], w * report_time_weights[rest], rest < report_nodes);
        }
    }

    // One pass per depth node, in parallel.
    type DepthPass = (Sums, Option<Vec<f64>>, Option<Vec<f64>>);
    let per_depth: Vec<DepthPass> = (0..x_axis.count())
        .into_par_iter()
        .map(|i| {
            let x = x_axis.node(i);
            let keep = kept_x.binary_search(&i).is_ok();
            let field = trajectory.states.get(i).map(|s| sampled.synthesize(&s.u, &plain));
            let mut sums = Sums::default();
            let mut kept_comp = keep.then(|| Vec::with_capacity(kept_len));
            let mut kept_truth = (keep && truth.is_some()).then(|| Vec::with_capacity(kept_len));
            let mut full = vec![0.0; k];
            full[0] = x;
            let mut ref_values = Vec::new();
            if let Some(u_true) = truth {
                ref_values = node_coords
                    .chunks_exact(k)
                    .map(|c| {
                        full[1..].copy_from_slice(&c[..k - 1]);
                        u_true(&full, c[k - 1])
                    })
                    .collect();
                for (flat, (&r, &(wf, wr, in_report))) in ref_values.iter().zip(&node_weights).enumerate() {
                    sums.ref_sup_full = sums.ref_sup_full.max(r.abs());
                    if let Some(field) = &field {
                        let xw = x_weights[i];
                        let e = field.values()[flat] - r;
                        sums.err_full += xw * wf * e * e;
                        sums.ref_full += xw * wf * r * r;
                        sums.err_report += xw * wr * e * e;
                        sums.ref_report += xw * wr * r * r;
                        sums.slice_err += wr * e * e;
                        sums.slice_ref += wr * r * r;
                        if in_report {
                            sums.err_sup = sums.err_sup.max(e.abs());
                            sums.ref_sup = sums.ref_sup.max(r.abs());
                        }
                    }
                }
            }
            if keep {
                let comp = kept_comp.as_mut().expect("kept depth");
                let mut idx = vec![0usize; k];
                for _ in 0..kept_len {
                    let mut flat = 0;
                    let mut mult = 1;
                    for (axis, list) in kept.iter().enumerate() {
                        flat += list[idx[axis]] * mult;
                        mult *= axes[axis].count();
                    }
                    comp.push(field.as_ref().map_or(f64::NAN, |f| f.values()[flat]));
                    if let Some(tr) = kept_truth.as_mut() {
                        tr.push(ref_values[flat]);
                    }
                    for (axis, list) in kept.iter().enumerate() {
                        idx[axis] += 1;
                        if idx[axis] < list.len() {
                            break;
                        }
                        idx[axis] = 0;
                    }
                }
            }
            (sums, kept_comp, kept_truth)
        })
        .collect();

    let mut total = Sums::default();
    let mut slices = Vec::with_capacity(valid);
    let mut computed = Vec::with_capacity(kept_x.len() * kept_len);
    let mut truth_values = truth.map(|_| Vec::with_capacity(kept_x.len() * kept_len));
    for (i, (sums, comp, tr)) in per_depth.into_iter().enumerate() {
        total = total.merge(sums);
        if i < valid {
            slices.push((x_axis.node(i), sums.slice_err, sums.slice_ref));
        }
        if let Some(comp) = comp {
            let reached = i < valid;
            computed.extend(comp.into_iter().map(|v| reached.then_some(v)));
        }
        if let (Some(all), Some(tr)) = (truth_values.as_mut(), tr) {
            all.extend(tr);
        }
    }
    let field = SolutionField {
        xs: kept_x.iter().map(|&i| x_axis.node(i)).collect(),
        cylinder_nodes: kept
            .iter()
            .zip(axes)
            .map(|(list, a)| list.iter().map(|&j| a.node(j)).collect())
            .collect(),
        computed,
        truth: truth_values,
        truth_scale: truth.map(|_| total.ref_sup_full),
        cutoffs: sampled.index_set().cutoffs().to_vec(),
    };
    let report = truth.map(|_| {
        let ratio = |num: f64, den: f64| if den > 0.0 { (num / den).sqrt() } else { f64::NAN };
        let h = x_axis.step();
        let (mut cum_err, mut cum_ref) = (0.0, 0.0);
        let depth_profile = slices
            .iter()
            .enumerate()
            .map(|(i, &(x, e, r))| {
                // Trapezoid over (a, x_i): the newest slice enters with half weight.
                if i > 0 {
                    cum_err += 0.5 * h * (e + slices[i - 1].1);
                    cum_ref += 0.5 * h * (r + slices[i - 1].2);
                }
                let cumulative = if i == 0 { ratio(e, r) } else { ratio(cum_err, cum_ref) };
                DepthError {
                    x,
                    slice: ratio(e, r),
                    cumulative,
                }
            })
            .collect();
        ErrorReport {
            relative_l2: ratio(total.err_report, total.ref_report),
            relative_l2_full: ratio(total.err_full, total.ref_full),
            relative_linf: if total.ref_sup > 0.0 { total.err_sup / total.ref_sup } else { f64::NAN },
            report_time,
            valid_depth: valid,
            depth_nodes: x_axis.count(),
            complete: trajectory.is_complete() && valid == x_axis.count(),
            depth_profile,
        }
    });
    Ok((field, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Interval;
    use crate::ivp::ReducedState;
    use crate::numerics::Cylinder;
    use crate::tensor::{MultiIndexSet, TensorBasis};

    fn setup() -> (SampledBasis, Axis) {
        let iv = |a, b| Interval::new(a, b).unwrap();
        let tb = TensorBasis::new(&[iv(-1.0, 1.0)], iv(0.0, 1.5), MultiIndexSet::new(vec![3, 4]).unwrap()).unwrap();
        let cyl = Cylinder::new(
            vec![Axis::new(iv(-1.0, 1.0), 21).unwrap(), Axis::new(iv(0.0, 1.5), 31).unwrap()],
            QuadratureRule::Simpson,
        );
        (tb.sample(&cyl).unwrap(), Axis::new(iv(0.0, 0.5), 11).unwrap())
    }

    fn trajectory(x_axis: &Axis, scale: f64, reached: usize) -> Trajectory {
        let states = (0..reached)
            .map(|i| {
                let x = x_axis.node(i);
                let u: Vec<f64> = (0..12).map(|m| scale * (1.0 + x) * (m as f64 * 0.3).cos()).collect();
                ReducedState::new(x, u, vec![0.0; 12]).unwrap()
            })
            .collect();
        Trajectory {
            states,
            blowup_at: (reached < x_axis.count()).then(|| x_axis.node(reached)),
        }
    }

    fn truth_of(sampled: &SampledBasis, x_axis: &Axis, scale: f64) -> impl Fn(&[f64], f64) -> f64 {
        // Exactly the expansion the trajectory encodes, evaluated at grid nodes.
        let reference = trajectory(x_axis, 1.0, x_axis.count());
        let field = sampled.synthesize(&reference.states[0].u, &[0, 0]);
        let cyl = sampled.cylinder().clone();
        move |p: &[f64], t: f64| {
            let ny = cyl.axes()[0].count();
            let j = ((p[1] + 1.0) / cyl.axes()[0].step()).round() as usize;
            let n = (t / cyl.axes()[1].step()).round() as usize;
            scale * (1.0 + p[0]) * field.values()[j + ny * n]
        }
    }

    #[test]
    fn exact_reconstruction_has_zero_error() {
        let (sampled, x_axis) = setup();
        let truth = truth_of(&sampled, &x_axis, 1.0);
        let traj = trajectory(&x_axis, 1.0, 11);
        let (field, report) = evaluate(&traj, &sampled, &x_axis, Some(&truth), 1.3, 1).unwrap();
        let report = report.unwrap();
        assert!(report.relative_l2 < 1e-14);
        assert!(report.relative_linf < 1e-14);
        assert!(report.complete);
        assert_eq!(field.len(), 11 * 21 * 31);
    }

    #[test]
    fn scaled_reconstruction_has_scaled_error() {
        let (sampled, x_axis) = setup();
        let truth = truth_of(&sampled, &x_axis, 1.0);
        let traj = trajectory(&x_axis, 1.01, 11);
        let (_, report) = evaluate(&traj, &sampled, &x_axis, Some(&truth), 1.3, 1).unwrap();
        let report = report.unwrap();
        assert!((report.relative_l2 - 0.01).abs() < 1e-12);
        assert!((report.relative_l2_full - 0.01).abs() < 1e-12);
        assert!((report.relative_linf - 0.01).abs() < 1e-12);
        for depth in &report.depth_profile {
            assert!((depth.slice - 0.01).abs() < 1e-12);
            assert!((depth.cumulative - 0.01).abs() < 1e-12);
        }
        let last = report.depth_profile.last().unwrap();
        assert!((last.cumulative - report.relative_l2).abs() < 1e-12);
    }

    #[test]
    fn relative_error_is_scale_free() {
        let (sampled, x_axis) = setup();
        let base = {
            let truth = truth_of(&sampled, &x_axis, 1.0);
            evaluate(&trajectory(&x_axis, 1.2, 11), &sampled, &x_axis, Some(&truth), 1.3, 1).unwrap().1.unwrap()
        };
        let scaled = {
            let truth = truth_of(&sampled, &x_axis, 7.0);
            evaluate(&trajectory(&x_axis, 8.4, 11), &sampled, &x_axis, Some(&truth), 1.3, 1).unwrap().1.unwrap()
        };
        assert!((base.relative_l2 - scaled.relative_l2).abs() < 1e-12);
    }

    #[test]
    fn missing_depths_are_flagged_not_zeroed() {
        let (sampled, x_axis) = setup();
        let truth = truth_of(&sampled, &x_axis, 1.0);
        let traj = trajectory(&x_axis, 1.0, 4);
        let (field, report) = evaluate(&traj, &sampled, &x_axis, Some(&truth), 1.3, 2).unwrap();
        let report = report.unwrap();
        assert!(!report.complete);
        assert_eq!(report.valid_depth, 4);
        assert!(report.relative_l2 < 1e-14);
        let per_depth = field.len() / field.xs.len();
        let mut point = vec![0.0; 3];
        for (k, v) in field.computed.iter().enumerate() {
            field.point(k, &mut point);
            assert_eq!(v.is_some(), point[0] < x_axis.node(4) - 1e-12, "node {k}");
        }
        for (x, expected) in field.xs.iter().zip([0.0, 0.1, 0.2, 0.3, 0.4, 0.5]) {
            assert!((x - expected).abs() < 1e-15);
        }
        assert_eq!(per_depth, 11 * 16);
    }

    #[test]
    fn strided_keeps_both_ends() {
        assert_eq!(strided(10, 4), vec![0, 4, 8, 9]);
        assert_eq!(strided(9, 4), vec![0, 4, 8]);
        assert_eq!(strided(5, 1), vec![0, 1, 2, 3, 4]);
    }
}
