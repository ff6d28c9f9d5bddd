//! Uniform grids, sampled cylinder fields and composite quadrature.
//!
//! The cylinder `Ω̃ × (0, T)` is the product of the transverse spatial axes
//! and the time axis. Fields on it are flat arrays in line-up order: the first
//! transverse axis varies fastest and time varies slowest, matching the
//! ordering of the coefficient vectors.

use ndarray::{linalg::general_mat_mul, Array2, ArrayView2, ArrayView3, ArrayViewMut2, ArrayViewMut3};
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::{Error, Result};

/// Default node counts.
pub const DEFAULT_NX: usize = 201;
pub const DEFAULT_NY: usize = 1001;
pub const DEFAULT_NT: usize = 601;

/// Uniform partition of a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    interval: Interval,
    count: usize,
}

impl Axis {
    pub fn new(interval: Interval, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config(format!("axis needs at least 2 nodes, got {count}")));
        }
        Ok(Self { interval, count })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn step(&self) -> f64 {
        self.interval.length() / (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.interval.hi()
        } else {
            self.interval.lo() + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }
}

/// Composite rule on uniformly spaced nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Trapezoid,
    /// Composite Simpson; an even node count closes with a 3/8 panel.
    #[default]
    Simpson,
}

impl QuadratureRule {
    pub fn weights(self, axis: &Axis) -> Vec<f64> {
        quadrature_weights(self, axis.count(), axis.step())
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(Self::Trapezoid),
            "simpson" => Ok(Self::Simpson),
            other => Err(Error::Config(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// Weights of `rule` on `count` nodes with spacing `step`.
pub fn quadrature_weights(rule: QuadratureRule, count: usize, step: f64) -> Vec<f64> {
    let mut w = vec![0.0; count];
    if count < 2 {
        return w;
    }
    let trapezoid = |w: &mut [f64]| {
        let n = w.len();
        w.iter_mut().for_each(|v| *v = step);
        w[0] = 0.5 * step;
        w[n - 1] = 0.5 * step;
    };
    match rule {
        QuadratureRule::Trapezoid => trapezoid(&mut w),
        QuadratureRule::Simpson => {
            if count == 2 {
                trapezoid(&mut w);
            } else {
                let simpson_end = if count % 2 == 1 { count - 1 } else { count - 4 };
                for panel in (0..simpson_end).step_by(2) {
                    w[panel] += step / 3.0;
                    w[panel + 1] += 4.0 * step / 3.0;
                    w[panel + 2] += step / 3.0;
                }
                if count.is_multiple_of(2) {
                    let s = simpson_end;
                    w[s] += 3.0 * step / 8.0;
                    w[s + 1] += 9.0 * step / 8.0;
                    w[s + 2] += 9.0 * step / 8.0;
                    w[s + 3] += 3.0 * step / 8.0;
                }
            }
        }
    }
    w
}

/// The space-time grid: depth axis, transverse axes and time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_axis: Axis,
    pub transverse: Vec<Axis>,
    pub time: Axis,
}

impl Grid {
    /// The sub-grid on which data and coefficients live.
    pub fn cylinder(&self, rule: QuadratureRule) -> Cylinder {
        let mut axes = self.transverse.clone();
        axes.push(self.time);
        Cylinder::new(axes, rule)
    }

    /// Dimension `d` of the spatial domain.
    pub fn dimension(&self) -> usize {
        self.transverse.len() + 1
    }
}

/// Transverse axes plus time, with quadrature weights for each.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    axes: Vec<Axis>,
    weights: Vec<Vec<f64>>,
    rule: QuadratureRule,
}

impl Cylinder {
    /// `axes` lists the transverse axes in order followed by the time axis.
    pub fn new(axes: Vec<Axis>, rule: QuadratureRule) -> Self {
        let weights = axes.iter().map(|a| rule.weights(a)).collect();
        Self {
            axes,
            weights,
            rule,
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::count).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time_axis(&self) -> &Axis {
        self.axes.last().expect("cylinder has a time axis")
    }

    /// Coordinates `(x_2, …, x_d, t)` of a flat node index.
    pub fn point(&self, mut flat: usize, out: &mut [f64]) {
        for (slot, axis) in out.iter_mut().zip(&self.axes) {
            *slot = axis.node(flat % axis.count());
            flat /= axis.count();
        }
    }

    /// Product quadrature weight of a flat node index.
    pub fn weight(&self, mut flat: usize) -> f64 {
        let mut w = 1.0;
        for (axis, weights) in self.axes.iter().zip(&self.weights) {
            w *= weights[flat % axis.count()];
            flat /= axis.count();
        }
        w
    }

    /// Samples `f(x_2, …, x_d, t)` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> CylinderField {
        let mut point = vec![0.0; self.axes.len()];
        let values = (0..self.len())
            .map(|flat| {
                self.point(flat, &mut point);
                f(&point)
            })
            .collect();
        CylinderField {
            shape: self.shape(),
            values,
        }
    }

    /// Composite quadrature of `field` over the cylinder.
    pub fn integrate(&self, field: &CylinderField) -> Result<f64> {
        self.check(field)?;
        let mut data = field.values.clone();
        let mut shape = field.shape.clone();
        for (axis, weights) in self.weights.iter().enumerate() {
            let row = Array2::from_shape_vec((1, weights.len()), weights.clone())
                .expect("weight row");
            let (d, s) = mode_product(&data, &shape, axis, row.view());
            data = d;
            shape = s;
        }
        Ok(data[0])
    }

    pub fn check(&self, field: &CylinderField) -> Result<()> {
        if field.shape != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: field.shape.clone(),
            });
        }
        Ok(())
    }
}

/// Real values on the cylinder nodes, flat in line-up order.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderField {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl CylinderField {
    pub fn from_values(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: shape,
                got: vec![values.len()],
            });
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Largest absolute node value.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Applies the `m × n` matrix `a` along `axis` of a first-index-fastest
/// tensor whose extent on that axis is `n`; returns the new data and shape.
pub fn mode_product(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    a: ArrayView2<'_, f64>,
) -> (Vec<f64>, Vec<usize>) {
    let inner: usize = shape[..axis].iter().product();
    let n = shape[axis];
    let outer: usize = shape[axis + 1..].iter().product();
    let m = a.nrows();
    assert_eq!(a.ncols(), n, "mode product extent");
    let mut out = vec![0.0; outer * m * inner];
    if inner == 1 {
        // Contiguous fibres: one product `(outer × n) · Aᵀ`.
        let input = ArrayView2::from_shape((outer, n), data).expect("tensor layout");
        let mut output = ArrayViewMut2::from_shape((outer, m), &mut out[..]).expect("tensor layout");
        general_mat_mul(1.0, &input, &a.t(), 0.0, &mut output);
        let mut new_shape = shape.to_vec();
        new_shape[axis] = m;
        return (out, new_shape);
    }
    let input = ArrayView3::from_shape((outer, n, inner), data).expect("tensor layout");
    {
        let mut output =
            ArrayViewMut3::from_shape((outer, m, inner), &mut out[..]).expect("tensor layout");
        for o in 0..outer {
            let src = input.index_axis(ndarray::Axis(0), o);
            let mut dst = output.index_axis_mut(ndarray::Axis(0), o);
            general_mat_mul(1.0, &a, &src, 0.0, &mut dst);
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = m;
    (out, new_shape)
}
