//! Galerkin reduction of the parabolic equation onto the truncated basis.
//!
//! Multiplying `u_t = Δu + F` by `P_m` and integrating over the cylinder
//! gives, for every retained index `m`,
//!
//! ```text
//! u_m''(x) = Σ_n s_mn u_n(x) - F_m(x, {u_n}, {u_n'})
//! s_mn     = ∫ [∂_t P_n - Δ_x̃ P_n] P_m
//! ```
//!
//! with Cauchy data `u_m(a) = g_m`, `u_m'(a) = q_m`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::numerics::CylinderField;
use crate::tensor::{SampledBasis, TensorBasis};
use crate::{Error, Result};

/// Arguments handed to the nonlinearity at one space-time node.
#[derive(Debug, Clone, Copy)]
pub struct NodeState<'a> {
    /// Full spatial point `(x, x_2, …, x_d)`.
    pub point: &'a [f64],
    pub t: f64,
    pub u: f64,
    /// Full gradient `(u_x, ∂_2 u, …, ∂_d u)`.
    pub grad: &'a [f64],
}

/// `F(x, t, u, ∇u)` in `u_t = Δu + F`.
pub type Nonlinearity = dyn Fn(&NodeState<'_>) -> f64 + Send + Sync;

/// Projections `g_m`, `q_m` of the Cauchy data, in line-up order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyCoefficients {
    pub g: Vec<f64>,
    pub q: Vec<f64>,
}

/// `g_m = ∫ g P_m`, `q_m = ∫ q P_m` by cylinder quadrature.
pub fn project_data(
    g: &CylinderField,
    q: &CylinderField,
    sampled: &SampledBasis,
) -> Result<CauchyCoefficients> {
    Ok(CauchyCoefficients {
        g: sampled.analyze(g)?,
        q: sampled.analyze(q)?,
    })
}

/// Galerkin matrix of `∂_t - Δ_x̃` in the tensor basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: Array2<f64>,
}

impl CouplingMatrix {
    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(S u)_m = Σ_n s_mn u_n`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (slot, row) in out.iter_mut().zip(self.entries.rows()) {
            *slot = row.iter().zip(u).map(|(s, v)| s * v).sum();
        }
    }
}

/// Assembles `s_mn` from the exact one-dimensional derivative Gram matrices:
/// the time factor contributes `∫ Ψ_n' Ψ_m`, each transverse axis `-∫ Ψ_n'' Ψ_m`,
/// and the remaining axes contribute Kronecker deltas.
pub fn assemble_coupling(tb: &TensorBasis) -> Result<CouplingMatrix> {
    let set = tb.index_set();
    let d = set.dimension();
    let time = d - 1;
    let mut blocks = Vec::with_capacity(d);
    for (axis, basis) in tb.axes().iter().enumerate() {
        let order = if axis == time { 1 } else { 2 };
        blocks.push(basis.derivative_gram(order)?);
    }
    let len = set.len();
    let indices: Vec<Vec<usize>> = (1..=len)
        .map(|p| set.multi_index(p).map(|v| v.into_iter().map(|n| n - 1).collect()))
        .collect::<Result<_>>()?;
    let mut entries = Array2::zeros((len, len));
    for (m, mi) in indices.iter().enumerate() {
        for (n, ni) in indices.iter().enumerate() {
            let mut value = 0.0;
            for axis in 0..d {
                let others_match = (0..d).all(|a| a == axis || mi[a] == ni[a]);
                if !others_match {
                    continue;
                }
                let entry = blocks[axis][[mi[axis], ni[axis]]];
                value += if axis == time { entry } else { -entry };
            }
            entries[[m, n]] = value;
        }
    }
    Ok(CouplingMatrix { entries })
}

/// Nonlinear forcing projected onto the basis:
/// `F_m = ∫ F(x, x̃, t, u, u_x, ∇_x̃ u) P_m` with `u`, `u_x` and `∇_x̃ u`
/// resummed from the coefficient vectors on the cylinder grid.
pub fn project_nonlinearity(
    f: &Nonlinearity,
    x: f64,
    coeffs: &[f64],
    dcoeffs: &[f64],
    sampled: &SampledBasis,
) -> Result<Vec<f64>> {
    let d = sampled.index_set().dimension();
    let transverse = d - 1;
    let plain = vec![0; d];
    let u = sampled.synthesize(coeffs, &plain);
    let ux = sampled.synthesize(dcoeffs, &plain);
    let grads: Vec<CylinderField> = (0..transverse)
        .map(|axis| {
            let mut orders = plain.clone();
            orders[axis] = 1;
            sampled.synthesize(coeffs, &orders)
        })
        .collect();

    let cylinder = sampled.cylinder();
    let axes = cylinder.axes();
    let nodes: Vec<Vec<f64>> = axes.iter().map(|a| a.nodes()).collect();
    let mut values = vec![0.0; cylinder.len()];
    const CHUNK: usize = 4096;
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            // Multi-index of the current node, advanced like an odometer.
            let mut idx = vec![0usize; d];
            let mut rest = chunk * CHUNK;
            for (slot, axis) in idx.iter_mut().zip(axes) {
                *slot = rest % axis.count();
                rest /= axis.count();
            }
            let mut point = vec![0.0; d];
            let mut grad = vec![0.0; d];
            point[0] = x;
            for (offset, slot) in out.iter_mut().enumerate() {
                let flat = chunk * CHUNK + offset;
                for axis in 0..transverse {
                    point[axis + 1] = nodes[axis][idx[axis]];
                }
                grad[0] = ux.values()[flat];
                for (g, field) in grad[1..].iter_mut().zip(&grads) {
                    *g = field.values()[flat];
                }
                *slot = f(&NodeState {
                    point: &point,
                    t: nodes[transverse][idx[transverse]],
                    u: u.values()[flat],
                    grad: &grad,
                });
                for (axis, i) in idx.iter_mut().enumerate() {
                    *i += 1;
                    if *i < nodes[axis].len() {
                        break;
                    }
                    *i = 0;
                }
            }
        });
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nonlinearity"));
    }
    let field = CylinderField::from_values(cylinder.shape(), values)?;
    sampled.analyze(&field)
}

/// Relative sup-norm misfit between `g` and its truncated expansion over the
/// cutoff box `cutoffs` (which must fit inside `sampled`).
pub fn phi_misfit(g: &CylinderField, cutoffs: &[usize], sampled: &SampledBasis) -> Result<f64> {
    let norm = g.sup_norm();
    if norm == 0.0 {
        return Err(Error::ZeroData);
    }
    let truncated = sampled.truncated(cutoffs)?;
    let coeffs = truncated.analyze(g)?;
    let recon = truncated.synthesize(&coeffs, &vec![0; cutoffs.len()]);
    let misfit = g
        .values()
        .iter()
        .zip(recon.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(misfit / norm)
}

/// φ swept along one axis with the other cutoffs held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSweep {
    pub axis: usize,
    pub cutoffs: Vec<usize>,
    pub phi: Vec<f64>,
    pub chosen: usize,
    pub threshold_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSelection {
    pub cutoffs: Vec<usize>,
    /// False when some axis fell back to the knee of its φ curve.
    pub threshold_met: bool,
    pub sweeps: Vec<AxisSweep>,
}

/// φ along `axis` for cutoffs `range`, other axes fixed at `base`.
pub fn phi_sweep(
    g: &CylinderField,
    sampled: &SampledBasis,
    base: &[usize],
    axis: usize,
    range: std::ops::RangeInclusive<usize>,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut cutoffs = base.to_vec();
    let mut ns = Vec::new();
    let mut phis = Vec::new();
    for n in range {
        cutoffs[axis] = n;
        ns.push(n);
        phis.push(phi_misfit(g, &cutoffs, sampled)?);
    }
    Ok((ns, phis))
}

/// Coordinate-wise cutoff choice: on each axis, the smallest cutoff with
/// `φ ≤ threshold`, or the knee of the φ curve when the threshold is out
/// of reach. Never exceeds the cutoffs of `sampled`.
pub fn select_cutoff(g: &CylinderField, sampled: &SampledBasis, threshold: f64) -> Result<CutoffSelection> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("phi threshold {threshold} outside (0, 1)")));
    }
    let max = sampled.index_set().cutoffs().to_vec();
    let d = max.len();
    let mut current = max.clone();
    let mut sweeps = Vec::new();
    let passes = if d == 1 { 1 } else { 2 };
    for _ in 0..passes {
        sweeps.clear();
        for axis in 0..d {
            let (ns, phis) = phi_sweep(g, sampled, &current, axis, 1..=max[axis])?;
            let hit = phis.iter().position(|&p| p <= threshold);
            let chosen = match hit {
                Some(i) => ns[i],
                None => knee(&ns, &phis),
            };
            current[axis] = chosen;
            sweeps.push(AxisSweep {
                axis,
                cutoffs: ns,
                phi: phis,
                chosen,
                threshold_met: hit.is_some(),
            });
        }
    }
    let threshold_met = sweeps.iter().all(|s| s.threshold_met);
    Ok(CutoffSelection {
        cutoffs: current,
        threshold_met,
        sweeps,
    })
}

/// Corner of a decreasing L-shaped curve: after scaling both coordinates to
/// `[0, 1]`, the point lying farthest below the chord joining the endpoints.
pub fn knee(xs: &[usize], ys: &[f64]) -> usize {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    if xs.len() < 3 {
        return xs[xs.len() - 1];
    }
    let (x0, x1) = (xs[0] as f64, xs[xs.len() - 1] as f64);
    let (ymin, ymax) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let span = (ymax - ymin).max(f64::MIN_POSITIVE);
    let norm_y = |y: f64| (y - ymin) / span;
    let (c0, c1) = (norm_y(ys[0]), norm_y(ys[ys.len() - 1]));
    let mut best = (f64::NEG_INFINITY, xs[0]);
    for (&x, &y) in xs.iter().zip(ys) {
        let s = (x as f64 - x0) / (x1 - x0);
        let gap = c0 + (c1 - c0) * s - norm_y(y);
        if gap > best.0 {
            best = (gap, x);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Interval;
    use crate::numerics::{Axis, Cylinder, QuadratureRule};
    use crate::tensor::MultiIndexSet;

    fn interval(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn time_setup(n: usize, nodes: usize) -> (TensorBasis, SampledBasis) {
        let tb = TensorBasis::new(&[], interval(0.0, 1.5), MultiIndexSet::new(vec![n]).unwrap()).unwrap();
        let cyl = Cylinder::new(vec![Axis::new(interval(0.0, 1.5), nodes).unwrap()], QuadratureRule::Simpson);
        let sampled = tb.sample(&cyl).unwrap();
        (tb, sampled)
    }

    fn plane_setup(ny: usize, nt: usize) -> (TensorBasis, SampledBasis) {
        let tb = TensorBasis::new(
            &[interval(-1.0, 1.0)],
            interval(0.0, 1.5),
            MultiIndexSet::new(vec![ny, nt]).unwrap(),
        )
        .unwrap();
        let cyl = Cylinder::new(
            vec![
                Axis::new(interval(-1.0, 1.0), 401).unwrap(),
                Axis::new(interval(0.0, 1.5), 301).unwrap(),
            ],
            QuadratureRule::Simpson,
        );
        let sampled = tb.sample(&cyl).unwrap();
        (tb, sampled)
    }

    #[test]
    fn basis_member_projects_to_unit_vector() {
        let (_, sampled) = plane_setup(3, 4);
        for k in 0..12 {
            let mut unit = vec![0.0; 12];
            unit[k] = 1.0;
            let g = sampled.synthesize(&unit, &[0, 0]);
            let zero = sampled.cylinder().sample(|_| 0.0);
            let coeffs = project_data(&g, &zero, &sampled).unwrap();
            for (i, c) in coeffs.g.iter().enumerate() {
                assert!((c - unit[i]).abs() < 1e-6);
            }
            assert!(coeffs.q.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn coupling_single_entry_closed_form() {
        let (tb, _) = time_setup(4, 601);
        let s = assemble_coupling(&tb).unwrap();
        let psi = &tb.axes()[0];
        let at = |n: usize, t: f64| psi.eval(n, t, 0).unwrap();
        let expected = (at(1, 1.5).powi(2) - at(1, 0.0).powi(2)) / 2.0;
        assert!((s.entries()[[0, 0]] - expected).abs() < 1e-12);
    }

    #[test]
    fn coupling_integration_by_parts_identity() {
        let (tb, _) = time_setup(12, 601);
        let s = assemble_coupling(&tb).unwrap();
        let psi = &tb.axes()[0];
        for m in 1..=12 {
            for n in 1..=12 {
                let boundary = psi.eval(m, 1.5, 0).unwrap() * psi.eval(n, 1.5, 0).unwrap()
                    - psi.eval(m, 0.0, 0).unwrap() * psi.eval(n, 0.0, 0).unwrap();
                let sum = s.entries()[[m - 1, n - 1]] + s.entries()[[n - 1, m - 1]];
                assert!((sum - boundary).abs() < 1e-8, "({m},{n})");
            }
        }
    }

    #[test]
    fn zero_and_linear_nonlinearities() {
        let (_, sampled) = plane_setup(3, 4);
        let coeffs: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.4).collect();
        let dcoeffs: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let zero = project_nonlinearity(&|_: &NodeState<'_>| 0.0, 0.2, &coeffs, &dcoeffs, &sampled).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let linear =
            project_nonlinearity(&|s: &NodeState<'_>| 2.5 * s.u, 0.2, &coeffs, &dcoeffs, &sampled).unwrap();
        for (a, b) in linear.iter().zip(&coeffs) {
            assert!((a - 2.5 * b).abs() < 1e-6);
        }
    }

    #[test]
    fn forcing_equal_to_basis_member() {
        let (tb, sampled) = plane_setup(3, 3);
        let target = [2, 3];
        let tb2 = tb.clone();
        let f = move |s: &NodeState<'_>| match tb2
            .eval(&target, &s.point[1..], s.t, crate::tensor::TensorQuantity::Value)
            .unwrap()
        {
            crate::tensor::TensorValue::Scalar(v) => v,
            _ => unreachable!(),
        };
        let zeros = vec![0.0; 9];
        let fm = project_nonlinearity(&f, 0.0, &zeros, &zeros, &sampled).unwrap();
        let k = tb.index_set().lineup(&target).unwrap() - 1;
        for (i, v) in fm.iter().enumerate() {
            let expected = if i == k { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-6, "{i}: {v}");
        }
    }

    #[test]
    fn non_finite_forcing_is_reported() {
        let (_, sampled) = time_setup(3, 31);
        let z = vec![0.0; 3];
        let err = project_nonlinearity(&|_: &NodeState<'_>| f64::NAN, 0.0, &z, &z, &sampled);
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    #[test]
    fn phi_vanishes_in_span_and_rejects_zero_data() {
        let (_, sampled) = plane_setup(4, 5);
        let coeffs: Vec<f64> = (0..20).map(|i| if i % 4 < 2 && i / 4 < 3 { 1.0 + i as f64 } else { 0.0 }).collect();
        let g = sampled.synthesize(&coeffs, &[0, 0]);
        // Quadrature error on this grid is about 1e-7.
        assert!(phi_misfit(&g, &[2, 3], &sampled).unwrap() < 1e-5);
        assert!(phi_misfit(&g, &[1, 3], &sampled).unwrap() > 1e-3);
        let zero = sampled.cylinder().sample(|_| 0.0);
        assert!(matches!(phi_misfit(&zero, &[1, 1], &sampled), Err(Error::ZeroData)));

        let sel = select_cutoff(&g, &sampled, 1e-4).unwrap();
        assert_eq!(sel.cutoffs, vec![2, 3]);
        assert!(sel.threshold_met);
    }

    #[test]
    fn phi_of_constant_data_decays() {
        let (_, sampled) = time_setup(10, 601);
        let g = sampled.cylinder().sample(|_| 3.0);
        let (_, phis) = phi_sweep(&g, &sampled, &[10], 0, 1..=10).unwrap();
        assert!(phis[0] > 0.1);
        assert!(phis[9] < 1e-6);
        assert!(phis[9] < phis[0]);
    }

    #[test]
    fn knee_of_synthetic_l_curve() {
        let xs: Vec<usize> = (1..=20).collect();
        let ys: Vec<f64> = xs.iter().map(|&n| if n <= 6 { 1.0 - 0.16 * n as f64 } else { 0.04 - 0.001 * n as f64 }).collect();
        assert_eq!(knee(&xs, &ys), 6);
    }

    #[test]
    fn threshold_must_be_a_fraction() {
        let (_, sampled) = time_setup(3, 31);
        let g = sampled.cylinder().sample(|p| p[0]);
        assert!(select_cutoff(&g, &sampled, 0.0).is_err());
        assert!(select_cutoff(&g, &sampled, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn projection_is_idempotent(coeffs in proptest::collection::vec(-3.0f64..3.0, 12)) {
                let (_, sampled) = plane_setup(3, 4);
                let field = sampled.synthesize(&coeffs, &[0, 0]);
                let back = sampled.analyze(&field).unwrap();
                for (a, b) in back.iter().zip(&coeffs) {
                    prop_assert!((a - b).abs() < 1e-6);
                }
            }

            #[test]
            fn phi_is_scale_invariant(scale in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], freq in 1.0f64..9.0) {
                let (_, sampled) = time_setup(12, 301);
                let g = sampled.cylinder().sample(|p| (freq * p[0]).sin() + 0.3);
                let a = phi_misfit(&g, &[7], &sampled).unwrap();
                let b = phi_misfit(&g.scaled(scale), &[7], &sampled).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }
}
