//! Coefficient fields over a three-dimensional chart.
//!
//! Every field evaluates to a [`Jet2`] (value, gradient, Hessian) at a chart
//! point. Fields are cheap to clone and immutable; derived fields hold
//! their inputs by reference count.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::BoundExpression;
use crate::jet::{Jet2, Scalar};
use crate::linalg::Sym3;

pub trait ScalarSource: Send + Sync {
    fn jet(&self, p: [f64; 3]) -> Result<Jet2>;

    fn value(&self, p: [f64; 3]) -> Result<f64> {
        Ok(self.jet(p)?.value)
    }
}

/// A formula evaluated generically, so that value-only sampling skips
/// derivative propagation.
pub trait ScalarRule: Send + Sync + 'static {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T>;
}

struct RuleSource<R>(R);

impl<R: ScalarRule> ScalarSource for RuleSource<R> {
    fn jet(&self, p: [f64; 3]) -> Result<Jet2> {
        self.0.eval::<Jet2>(p)
    }
    fn value(&self, p: [f64; 3]) -> Result<f64> {
        self.0.eval::<f64>(p)
    }
}

struct Constant(f64);

impl ScalarSource for Constant {
    fn jet(&self, _: [f64; 3]) -> Result<Jet2> {
        Ok(Jet2::constant(self.0))
    }
    fn value(&self, _: [f64; 3]) -> Result<f64> {
        Ok(self.0)
    }
}

struct ExprSource(BoundExpression);

impl ScalarSource for ExprSource {
    fn jet(&self, p: [f64; 3]) -> Result<Jet2> {
        self.0.eval_jet2(p).map_err(|source| Error::Eval { point: p, source })
    }
    fn value(&self, p: [f64; 3]) -> Result<f64> {
        self.0.eval(p).map_err(|source| Error::Eval { point: p, source })
    }
}

struct JetFn<F>(F);

impl<F> ScalarSource for JetFn<F>
where
    F: Fn([Jet2; 3]) -> Jet2 + Send + Sync,
{
    fn jet(&self, p: [f64; 3]) -> Result<Jet2> {
        Ok((self.0)([Jet2::variable(p[0], 0), Jet2::variable(p[1], 1), Jet2::variable(p[2], 2)]))
    }
}

#[derive(Clone)]
pub struct ScalarField {
    source: Arc<dyn ScalarSource>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

impl ScalarField {
    pub fn from_source(source: impl ScalarSource + 'static) -> Self {
        Self { source: Arc::new(source) }
    }

    pub fn from_rule(rule: impl ScalarRule) -> Self {
        Self::from_source(RuleSource(rule))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_source(Constant(c))
    }

    pub fn from_expression(expr: BoundExpression) -> Self {
        Self::from_source(ExprSource(expr))
    }

    /// Analytic field given as a function of the three coordinate jets.
    pub fn from_jet_fn(f: impl Fn([Jet2; 3]) -> Jet2 + Send + Sync + 'static) -> Self {
        Self::from_source(JetFn(f))
    }

    pub fn jet(&self, p: [f64; 3]) -> Result<Jet2> {
        self.source.jet(p)
    }

    pub fn value(&self, p: [f64; 3]) -> Result<f64> {
        self.source.value(p)
    }

    pub fn sample<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
        if T::WITH_DERIVATIVES {
            Ok(T::from_jet(self.source.jet(p)?))
        } else {
            Ok(T::constant(self.source.value(p)?))
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        struct Product(ScalarField, ScalarField);
        impl ScalarRule for Product {
            fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
                Ok(self.0.sample::<T>(p)? * self.1.sample::<T>(p)?)
            }
        }
        ScalarField::from_rule(Product(self.clone(), other.clone()))
    }

    /// Pointwise `self^e` (the base must stay positive where evaluated).
    pub fn powf(&self, e: f64) -> ScalarField {
        struct Pow(ScalarField, f64);
        impl ScalarRule for Pow {
            fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
                let v: T = self.0.sample(p)?;
                if v.value() <= 0.0 {
                    return Err(Error::NonPositive { what: "power base", point: p, value: v.value() });
                }
                Ok(v.powf(self.1))
            }
        }
        ScalarField::from_rule(Pow(self.clone(), e))
    }
}

#[derive(Clone, Debug)]
pub struct VectorField(pub [ScalarField; 3]);

impl VectorField {
    pub fn zero() -> Self {
        let z = ScalarField::constant(0.0);
        VectorField([z.clone(), z.clone(), z])
    }

    pub fn sample<T: Scalar>(&self, p: [f64; 3]) -> Result<[T; 3]> {
        Ok([self.0[0].sample(p)?, self.0[1].sample(p)?, self.0[2].sample(p)?])
    }
}

pub trait MetricSource: Send + Sync {
    fn jet(&self, p: [f64; 3]) -> Result<Sym3<Jet2>>;

    fn value(&self, p: [f64; 3]) -> Result<Sym3<f64>> {
        Ok(self.jet(p)?.values())
    }
}

pub trait MetricRule: Send + Sync + 'static {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>>;
}

struct MetricRuleSource<R>(R);

impl<R: MetricRule> MetricSource for MetricRuleSource<R> {
    fn jet(&self, p: [f64; 3]) -> Result<Sym3<Jet2>> {
        self.0.eval::<Jet2>(p)
    }
    fn value(&self, p: [f64; 3]) -> Result<Sym3<f64>> {
        self.0.eval::<f64>(p)
    }
}

struct Components([ScalarField; 6]);

impl MetricRule for Components {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
        let z = T::constant(0.0);
        let mut out = [z; 6];
        for (o, f) in out.iter_mut().zip(&self.0) {
            *o = f.sample(p)?;
        }
        Ok(Sym3(out))
    }
}

/// Symmetric rank-2 tensor field (a Riemannian metric where it is used as one).
#[derive(Clone)]
pub struct SymMetricField {
    source: Arc<dyn MetricSource>,
}

impl fmt::Debug for SymMetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymMetricField")
    }
}

impl SymMetricField {
    pub fn from_source(source: impl MetricSource + 'static) -> Self {
        Self { source: Arc::new(source) }
    }

    pub fn from_rule(rule: impl MetricRule) -> Self {
        Self::from_source(MetricRuleSource(rule))
    }

    /// Components in packed order `[11, 12, 13, 22, 23, 33]`.
    pub fn from_components(c: [ScalarField; 6]) -> Self {
        Self::from_rule(Components(c))
    }

    pub fn constant(m: Sym3<f64>) -> Self {
        Self::from_components(m.0.map(ScalarField::constant))
    }

    pub fn euclidean() -> Self {
        Self::constant(Sym3::identity())
    }

    pub fn jet(&self, p: [f64; 3]) -> Result<Sym3<Jet2>> {
        self.source.jet(p)
    }

    pub fn value(&self, p: [f64; 3]) -> Result<Sym3<f64>> {
        self.source.value(p)
    }

    pub fn sample<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
        if T::WITH_DERIVATIVES {
            Ok(Sym3(self.source.jet(p)?.0.map(T::from_jet)))
        } else {
            Ok(Sym3(self.source.value(p)?.0.map(T::constant)))
        }
    }

    /// The pointwise conformal multiple `factor * self`.
    pub fn conformal(&self, factor: &ScalarField) -> SymMetricField {
        struct Conformal(SymMetricField, ScalarField);
        impl MetricRule for Conformal {
            fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
                let f: T = self.1.sample(p)?;
                Ok(self.0.sample::<T>(p)?.scale(f))
            }
        }
        SymMetricField::from_rule(Conformal(self.clone(), factor.clone()))
    }

    /// Value at `p`, failing unless positive definite.
    pub fn positive_value(&self, p: [f64; 3], what: &'static str) -> Result<Sym3<f64>> {
        let m = self.value(p)?;
        if !m.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { what, point: p });
        }
        Ok(m)
    }
}

/// Axis-aligned chart box `lower <= x <= upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl ChartBox {
    pub fn new(lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        for k in 0..3 {
            if !(lower[k].is_finite() && upper[k].is_finite()) || lower[k] > upper[k] {
                return Err(Error::InvalidInput(format!(
                    "chart axis {k}: lower {} must not exceed upper {}",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.lower[k] && p[k] <= self.upper[k])
    }

    pub fn center(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| 0.5 * (self.lower[k] + self.upper[k]))
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }
}

/// Tensor-product sample nodes in a box; endpoints included. An axis with
/// a single node samples the box midpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleGrid {
    pub bbox: ChartBox,
    pub counts: [usize; 3],
}

impl SampleGrid {
    pub fn new(bbox: ChartBox, counts: [usize; 3]) -> Result<Self> {
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidInput("sample grid needs at least one node per axis".into()));
        }
        Ok(Self { bbox, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let n = self.counts[axis];
        if n == 1 {
            0.5 * (self.bbox.lower[axis] + self.bbox.upper[axis])
        } else {
            self.bbox.lower[axis] + self.bbox.width(axis) * i as f64 / (n - 1) as f64
        }
    }

    pub fn node(&self, idx: [usize; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| self.coordinate(k, idx[k]))
    }

    pub fn nodes(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        let [nx, ny, nz] = self.counts;
        (0..nx).flat_map(move |i| {
            (0..ny).flat_map(move |j| (0..nz).map(move |k| self.node([i, j, k])))
        })
    }
}

/// Nodal data on a [`SampleGrid`] with derivatives from local
/// tensor-product quadratic interpolation (three nodes per axis).
pub struct TabulatedField {
    grid: SampleGrid,
    values: Vec<f64>,
}

impl TabulatedField {
    /// `values` in the order of [`SampleGrid::nodes`]. Axes need one node
    /// (treated as constant) or at least three.
    pub fn new(grid: SampleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "tabulated field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if grid.counts.iter().any(|&c| c == 2) {
            return Err(Error::InvalidInput("tabulated axes need 1 or >= 3 nodes".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn sample_from(field: &ScalarField, grid: SampleGrid) -> Result<Self> {
        let values = grid.nodes().map(|p| field.value(p)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    /// Start index and Lagrange weights (value, first, second derivative).
    fn axis_stencil(&self, axis: usize, x: f64) -> (usize, usize, [[f64; 3]; 3]) {
        let n = self.grid.counts[axis];
        if n == 1 {
            return (0, 1, [[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]);
        }
        let h = self.grid.bbox.width(axis) / (n - 1) as f64;
        let t = (x - self.grid.bbox.lower[axis]) / h;
        let nearest = t.round().clamp(0.0, (n - 1) as f64) as usize;
        let start = nearest.saturating_sub(1).min(n - 3);
        let s = t - start as f64;
        // Nodes at s = 0, 1, 2.
        let l = [(s - 1.0) * (s - 2.0) / 2.0, -s * (s - 2.0), s * (s - 1.0) / 2.0];
        let d1 = [(2.0 * s - 3.0) / 2.0 / h, -(2.0 * s - 2.0) / h, (2.0 * s - 1.0) / 2.0 / h];
        let d2 = [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)];
        let mut w = [[0.0; 3]; 3];
        for a in 0..3 {
            w[a] = [l[a], d1[a], d2[a]];
        }
        (start, 3, w)
    }
}

impl ScalarSource for TabulatedField {
    fn jet(&self, p: [f64; 3]) -> Result<Jet2> {
        let st: Vec<_> = (0..3).map(|k| self.axis_stencil(k, p[k])).collect();
        let [_, ny, nz] = self.grid.counts;
        let mut out = Jet2::constant(0.0);
        for a in 0..st[0].1 {
            for b in 0..st[1].1 {
                for c in 0..st[2].1 {
                    let idx = ((st[0].0 + a) * ny + (st[1].0 + b)) * nz + (st[2].0 + c);
                    let v = self.values[idx];
                    let (wa, wb, wc) = (st[0].2[a], st[1].2[b], st[2].2[c]);
                    out.value += v * wa[0] * wb[0] * wc[0];
                    out.grad[0] += v * wa[1] * wb[0] * wc[0];
                    out.grad[1] += v * wa[0] * wb[1] * wc[0];
                    out.grad[2] += v * wa[0] * wb[0] * wc[1];
                    out.hess[0] += v * wa[2] * wb[0] * wc[0];
                    out.hess[1] += v * wa[1] * wb[1] * wc[0];
                    out.hess[2] += v * wa[1] * wb[0] * wc[1];
                    out.hess[3] += v * wa[0] * wb[2] * wc[0];
                    out.hess[4] += v * wa[0] * wb[1] * wc[1];
                    out.hess[5] += v * wa[0] * wb[0] * wc[2];
                }
            }
        }
        Ok(out)
    }
}
