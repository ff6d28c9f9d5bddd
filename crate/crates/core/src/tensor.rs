//! Product basis `P_n(x̃, t) = Ψ_{n_t}(t) Π_i Ψ_{n_i}(x_i)` over the cylinder.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::basis::{Basis1D, Interval};
use crate::numerics::{mode_product, Cylinder, CylinderField};
use crate::{Error, Result};

/// Full tensor box of multi-indices `1 ≤ n_i ≤ N_i` (transverse axes, then time).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndexSet {
    cutoffs: Vec<usize>,
}

impl MultiIndexSet {
    /// `cutoffs = [N_2, …, N_d, N_t]`; a single entry means `d = 1`.
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::Config("cutoff list is empty".into()));
        }
        if let Some(&bad) = cutoffs.iter().find(|&&c| c == 0) {
            return Err(Error::IndexOutOfRange { index: bad, max: 0 });
        }
        Ok(Self { cutoffs })
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    /// Spatial dimension `d`.
    pub fn dimension(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn len(&self) -> usize {
        self.cutoffs.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// One-based flat position
    /// `(n_t - 1) Π N_i + (n_d - 1) Π_{i<d} N_i + … + n_2`.
    pub fn lineup(&self, index: &[usize]) -> Result<usize> {
        self.check(index)?;
        let mut flat = 0;
        let mut stride = 1;
        for (&n, &cut) in index.iter().zip(&self.cutoffs) {
            flat += (n - 1) * stride;
            stride *= cut;
        }
        Ok(flat + 1)
    }

    /// Inverse of [`lineup`](Self::lineup).
    pub fn multi_index(&self, position: usize) -> Result<Vec<usize>> {
        if position == 0 || position > self.len() {
            return Err(Error::IndexOutOfRange {
                index: position,
                max: self.len(),
            });
        }
        let mut rest = position - 1;
        Ok(self
            .cutoffs
            .iter()
            .map(|&cut| {
                let n = rest % cut + 1;
                rest /= cut;
                n
            })
            .collect())
    }

    fn check(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.cutoffs.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.cutoffs.len()],
                got: vec![index.len()],
            });
        }
        for (&n, &cut) in index.iter().zip(&self.cutoffs) {
            if n == 0 || n > cut {
                return Err(Error::IndexOutOfRange { index: n, max: cut });
            }
        }
        Ok(())
    }
}

/// Quantity requested from [`TensorBasis::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorQuantity {
    Value,
    TimeDerivative,
    TransverseLaplacian,
    TransverseGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// One basis per transverse axis plus one for time.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    axes: Vec<Basis1D>,
    index_set: MultiIndexSet,
}

impl TensorBasis {
    /// Builds each axis basis with exactly its cutoff as size.
    pub fn new(transverse: &[Interval], time: Interval, index_set: MultiIndexSet) -> Result<Self> {
        if transverse.len() + 1 != index_set.dimension() {
            return Err(Error::ShapeMismatch {
                expected: vec![transverse.len() + 1],
                got: vec![index_set.dimension()],
            });
        }
        let axes = transverse
            .iter()
            .chain(std::iter::once(&time))
            .zip(index_set.cutoffs())
            .map(|(&interval, &cut)| Basis1D::new(interval, cut))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { axes, index_set })
    }

    /// Wraps prebuilt axis bases; each must hold at least its cutoff.
    pub fn from_axes(axes: Vec<Basis1D>, index_set: MultiIndexSet) -> Result<Self> {
        if axes.len() != index_set.dimension() {
            return Err(Error::ShapeMismatch {
                expected: vec![index_set.dimension()],
                got: vec![axes.len()],
            });
        }
        for (basis, &cut) in axes.iter().zip(index_set.cutoffs()) {
            if basis.n_max() < cut {
                return Err(Error::IndexOutOfRange {
                    index: cut,
                    max: basis.n_max(),
                });
            }
        }
        Ok(Self { axes, index_set })
    }

    pub fn axes(&self) -> &[Basis1D] {
        &self.axes
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn dimension(&self) -> usize {
        self.index_set.dimension()
    }

    /// Evaluates `P_n` or one of its derivatives at `(x̃, t)`.
    pub fn eval(
        &self,
        index: &[usize],
        transverse: &[f64],
        t: f64,
        which: TensorQuantity,
    ) -> Result<TensorValue> {
        self.index_set.check(index)?;
        let k = self.axes.len() - 1;
        if transverse.len() != k {
            return Err(Error::ShapeMismatch {
                expected: vec![k],
                got: vec![transverse.len()],
            });
        }
        let coords: Vec<f64> = transverse.iter().copied().chain(std::iter::once(t)).collect();
        let mut factors = [vec![0.0; k + 1], vec![0.0; k + 1], vec![0.0; k + 1]];
        for (axis, ((basis, &n), &s)) in self.axes.iter().zip(index).zip(&coords).enumerate() {
            for (order, slot) in factors.iter_mut().enumerate() {
                slot[axis] = basis.eval(n, s, order)?;
            }
        }
        let product_with = |axis: usize, order: usize| -> f64 {
            (0..=k)
                .map(|a| if a == axis { factors[order][a] } else { factors[0][a] })
                .product()
        };
        Ok(match which {
            TensorQuantity::Value => TensorValue::Scalar(factors[0].iter().product()),
            TensorQuantity::TimeDerivative => TensorValue::Scalar(product_with(k, 1)),
            TensorQuantity::TransverseLaplacian => {
                TensorValue::Scalar((0..k).map(|axis| product_with(axis, 2)).sum())
            }
            TensorQuantity::TransverseGradient => {
                TensorValue::Vector((0..k).map(|axis| product_with(axis, 1)).collect())
            }
        })
    }

    /// Tabulates every axis basis on the nodes of `cylinder`.
    pub fn sample(&self, cylinder: &Cylinder) -> Result<SampledBasis> {
        if cylinder.axes().len() != self.axes.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.axes.len()],
                got: vec![cylinder.axes().len()],
            });
        }
        let mut tables = Vec::with_capacity(self.axes.len());
        for ((basis, axis), (&cut, weights)) in self
            .axes
            .iter()
            .zip(cylinder.axes())
            .zip(self.index_set.cutoffs().iter().zip(cylinder.weights()))
        {
            let nodes = axis.nodes();
            let take = |order: usize| -> Result<Array2<f64>> {
                Ok(basis.sample(&nodes, order)?.slice(s![..cut, ..]).to_owned())
            };
            let values = take(0)?;
            let mut weighted = values.clone();
            for mut row in weighted.rows_mut() {
                row.iter_mut().zip(weights).for_each(|(v, w)| *v *= w);
            }
            tables.push(AxisTable {
                synth: [values.t().to_owned(), take(1)?.t().to_owned(), take(2)?.t().to_owned()],
                analysis: weighted,
            });
        }
        Ok(SampledBasis {
            tables,
            index_set: self.index_set.clone(),
            cylinder: cylinder.clone(),
        })
    }
}

#[derive(Debug, Clone)]
struct AxisTable {
    /// `nodes × cutoff` tables of Ψ, Ψ', Ψ''.
    synth: [Array2<f64>; 3],
    /// `cutoff × nodes` table of Ψ scaled by the quadrature weights.
    analysis: Array2<f64>,
}

/// Tensor basis tabulated on a cylinder grid; converts between coefficient
/// vectors (line-up order) and sampled fields.
#[derive(Debug, Clone)]
pub struct SampledBasis {
    tables: Vec<AxisTable>,
    index_set: MultiIndexSet,
    cylinder: Cylinder,
}

impl SampledBasis {
    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn cylinder(&self) -> &Cylinder {
        &self.cylinder
    }

    /// `Σ_n c_n ∂^{orders} P_n` on the grid; `orders[a]` is the derivative
    /// order applied on axis `a`.
    pub fn synthesize(&self, coeffs: &[f64], orders: &[usize]) -> CylinderField {
        assert_eq!(coeffs.len(), self.index_set.len(), "coefficient length");
        let mut data = coeffs.to_vec();
        let mut shape = self.index_set.cutoffs().to_vec();
        // Contract the smallest expansions first.
        for axis in (0..self.tables.len()).rev() {
            let table = &self.tables[axis].synth[orders.get(axis).copied().unwrap_or(0)];
            let (d, sh) = mode_product(&data, &shape, axis, table.view());
            data = d;
            shape = sh;
        }
        CylinderField::from_values(shape, data).expect("synthesized shape")
    }

    /// Quadrature projections `∫ f P_n` for every index, in line-up order.
    pub fn analyze(&self, field: &CylinderField) -> Result<Vec<f64>> {
        self.cylinder.check(field)?;
        let mut data = field.values().to_vec();
        let mut shape = field.shape().to_vec();
        for (axis, table) in self.tables.iter().enumerate() {
            let (d, sh) = mode_product(&data, &shape, axis, table.analysis.view());
            data = d;
            shape = sh;
        }
        Ok(data)
    }

    /// Restriction to a smaller cutoff box (tables are nested).
    pub fn truncated(&self, cutoffs: &[usize]) -> Result<Self> {
        let index_set = MultiIndexSet::new(cutoffs.to_vec())?;
        if cutoffs.len() != self.tables.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.tables.len()],
                got: vec![cutoffs.len()],
            });
        }
        let mut tables = Vec::with_capacity(self.tables.len());
        for (table, (&cut, &max)) in self
            .tables
            .iter()
            .zip(cutoffs.iter().zip(self.index_set.cutoffs()))
        {
            if cut > max {
                return Err(Error::IndexOutOfRange { index: cut, max });
            }
            tables.push(AxisTable {
                synth: [
                    table.synth[0].slice(s![.., ..cut]).to_owned(),
                    table.synth[1].slice(s![.., ..cut]).to_owned(),
                    table.synth[2].slice(s![.., ..cut]).to_owned(),
                ],
                analysis: table.analysis.slice(s![..cut, ..]).to_owned(),
            });
        }
        Ok(Self {
            tables,
            index_set,
            cylinder: self.cylinder.clone(),
        })
    }
}
