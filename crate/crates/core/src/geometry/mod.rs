//! Pointwise semi-Riemannian geometry on a single coordinate chart.
//!
//! Everything here is computed on demand at a point from second-order jets
//! of the metric components: Christoffel symbols from `∂g`, their
//! derivatives (and so the Riemann tensor) from `∂g` and `∂²g`. No mesh or
//! global discretisation is involved.

mod bilinear;
mod curvature;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::expr::{EvalError, Params, ScalarExpr};

pub use bilinear::SymBilinear;
pub use curvature::{PointGeometry, Riemann};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("evaluating {what}: {source}")]
    Eval {
        what: String,
        #[source]
        source: EvalError,
    },
    #[error("metric is degenerate at {point:?} (|det| = {det:e}, threshold {threshold:e})")]
    Degenerate { point: Vec<f64>, det: f64, threshold: f64 },
    #[error("metric at {point:?} has {found} negative eigenvalues, expected {expected}")]
    Signature {
        point: Vec<f64>,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid chart: {0}")]
    Chart(String),
}

impl GeometryError {
    pub(crate) fn eval(what: impl Into<String>, source: EvalError) -> Self {
        GeometryError::Eval {
            what: what.into(),
            source,
        }
    }
}

/// Coordinate names, a sampling box, and a margin kept away from its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    domain: Vec<(f64, f64)>,
    margin: f64,
}

impl Chart {
    pub fn new(names: Vec<String>, domain: Vec<(f64, f64)>, margin: f64) -> Result<Self, GeometryError> {
        if names.is_empty() {
            return Err(GeometryError::Chart("a chart needs at least one coordinate".into()));
        }
        if names.len() != domain.len() {
            return Err(GeometryError::Chart(format!(
                "{} coordinates but {} domain intervals",
                names.len(),
                domain.len()
            )));
        }
        if !(margin >= 0.0) {
            return Err(GeometryError::Chart(format!("margin {margin} must be non-negative")));
        }
        for (name, (lo, hi)) in names.iter().zip(&domain) {
            if !(lo.is_finite() && hi.is_finite() && lo + margin < hi - margin) {
                return Err(GeometryError::Chart(format!(
                    "interval [{lo}, {hi}] for `{name}` is empty after margin {margin}"
                )));
            }
        }
        Ok(Self { names, domain, margin })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// The domain shrunk by the singular margin: where samples are drawn.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        self.domain
            .iter()
            .map(|(lo, hi)| (lo + self.margin, hi - self.margin))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.sample_box().iter().zip(p).all(|((lo, hi), x)| lo <= x && x <= hi)
    }
}

/// Metric components with first and second partial derivatives at a point.
///
/// Layouts are row-major: `g[i*n+j]`, `dg[(k*n+i)*n+j] = ∂_k g_ij`,
/// `ddg[((k*n+l)*n+i)*n+j] = ∂_k ∂_l g_ij`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub dim: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
}

impl MetricJet {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            g: vec![0.0; dim * dim],
            dg: vec![0.0; dim * dim * dim],
            ddg: vec![0.0; dim * dim * dim * dim],
        }
    }

    /// Store the jet of component `(i, j)` (and its mirror).
    pub fn set(&mut self, i: usize, j: usize, jet: &crate::expr::Jet2) {
        let n = self.dim;
        for (a, b) in [(i, j), (j, i)] {
            self.g[a * n + b] = jet.value();
            for k in 0..n {
                self.dg[(k * n + a) * n + b] = jet.grad()[k];
                for l in 0..n {
                    self.ddg[((k * n + l) * n + a) * n + b] = jet.hess(k, l);
                }
            }
        }
    }
}

/// Anything that can report a metric jet at a chart point.
pub trait MetricSource: Sync {
    fn dim(&self) -> usize;
    /// Expected number of negative eigenvalues (0 for Riemannian).
    fn signature(&self) -> usize;
    fn metric_jet(&self, p: &[f64]) -> Result<MetricJet, GeometryError>;
}

/// A metric given by expressions for its upper-triangular components.
#[derive(Debug, Clone)]
pub struct MetricField {
    chart: Chart,
    components: Vec<ScalarExpr>,
    signature: usize,
}

impl MetricField {
    /// `components` is the upper triangle in row-major order:
    /// (0,0), (0,1), .., (0,n-1), (1,1), ..
    pub fn new(chart: Chart, components: Vec<ScalarExpr>, signature: usize) -> Result<Self, GeometryError> {
        let n = chart.dim();
        if components.len() != n * (n + 1) / 2 {
            return Err(GeometryError::Dimension {
                expected: n * (n + 1) / 2,
                got: components.len(),
            });
        }
        if let Some(c) = components.iter().find(|c| c.dim() != n) {
            return Err(GeometryError::Dimension {
                expected: n,
                got: c.dim(),
            });
        }
        Ok(Self {
            chart,
            components,
            signature,
        })
    }

    /// Build from a closure returning the source text of component `(i, j)`.
    pub fn from_sources(
        chart: Chart,
        signature: usize,
        mut source: impl FnMut(usize, usize) -> String,
    ) -> Result<Self, crate::Error> {
        let n = chart.dim();
        let mut comps = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                comps.push(ScalarExpr::parse(&source(i, j), chart.names())?);
            }
        }
        Ok(Self::new(chart, comps, signature)?)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarExpr {
        let n = self.chart.dim();
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.components[i * (2 * n - i - 1) / 2 + j]
    }

    /// Check nondegeneracy and signature at `p`.
    pub fn validate_at(&self, p: &[f64]) -> Result<(), GeometryError> {
        let geo = PointGeometry::at(self, p)?;
        check_signature(&geo.metric_matrix(), self.signature, p)
    }
}

pub(crate) fn check_signature(g: &DMatrix<f64>, expected: usize, p: &[f64]) -> Result<(), GeometryError> {
    let eig = SymmetricEigen::new(g.clone());
    let found = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
    if found != expected {
        return Err(GeometryError::Signature {
            point: p.to_vec(),
            expected,
            found,
        });
    }
    Ok(())
}

impl MetricSource for MetricField {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn signature(&self) -> usize {
        self.signature
    }

    fn metric_jet(&self, p: &[f64]) -> Result<MetricJet, GeometryError> {
        let n = self.dim();
        if p.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        let params = Params::new();
        let mut jet = MetricJet::zeros(n);
        for i in 0..n {
            for j in i..n {
                let names = self.chart.names();
                let c = self
                    .component(i, j)
                    .eval_jet2(p, &params)
                    .map_err(|e| GeometryError::eval(format!("metric component g_{}{}", names[i], names[j]), e))?;
                jet.set(i, j, &c);
            }
        }
        Ok(jet)
    }
}

/// Vector components with their Jacobian at a point:
/// `jac[i*n+k] = ∂_k X^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorJet {
    pub value: Vec<f64>,
    pub jac: Vec<f64>,
}

impl VectorJet {
    pub fn zeros(dim: usize) -> Self {
        Self {
            value: vec![0.0; dim],
            jac: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }
}

/// A vector field that can report its components and first derivatives.
pub trait VectorSource: Sync {
    fn dim(&self) -> usize;
    fn vector_jet(&self, p: &[f64]) -> Result<VectorJet, GeometryError>;
}

/// A vector field given by one expression per coordinate direction.
#[derive(Debug, Clone)]
pub struct VectorFieldExpr {
    components: Vec<ScalarExpr>,
}

impl VectorFieldExpr {
    pub fn new(components: Vec<ScalarExpr>) -> Result<Self, GeometryError> {
        let n = components.len();
        if let Some(c) = components.iter().find(|c| c.dim() != n) {
            return Err(GeometryError::Dimension {
                expected: n,
                got: c.dim(),
            });
        }
        Ok(Self { components })
    }

    pub fn parse(sources: &[&str], coords: &[String]) -> Result<Self, crate::Error> {
        if sources.len() != coords.len() {
            return Err(GeometryError::Dimension {
                expected: coords.len(),
                got: sources.len(),
            }
            .into());
        }
        let comps = sources
            .iter()
            .map(|s| ScalarExpr::parse(s, coords))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(comps)?)
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let params = Params::new();
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| c.eval(p, &params).map_err(|e| GeometryError::eval(format!("vector component {i}"), e)))
            .collect()
    }
}

impl VectorSource for VectorFieldExpr {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn vector_jet(&self, p: &[f64]) -> Result<VectorJet, GeometryError> {
        let n = self.dim();
        let params = Params::new();
        let mut out = VectorJet::zeros(n);
        for (i, c) in self.components.iter().enumerate() {
            let j = c
                .eval_jet2(p, &params)
                .map_err(|e| GeometryError::eval(format!("vector component {i}"), e))?;
            out.value[i] = j.value();
            out.jac[i * n..(i + 1) * n].copy_from_slice(j.grad());
        }
        Ok(out)
    }
}

/// The zero vector field of a given dimension.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField(pub usize);

impl VectorSource for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }

    fn vector_jet(&self, _p: &[f64]) -> Result<VectorJet, GeometryError> {
        Ok(VectorJet::zeros(self.0))
    }
}

pub fn metric_at<M: MetricSource + ?Sized>(m: &M, p: &[f64]) -> Result<SymBilinear, GeometryError> {
    Ok(PointGeometry::at(m, p)?.metric())
}

/// Christoffel symbols of the second kind, `out[(k*n+i)*n+j] = Γ^k_ij`.
pub fn christoffel<M: MetricSource + ?Sized>(m: &M, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(PointGeometry::at(m, p)?.christoffel().to_vec())
}

pub fn grad<M: MetricSource + ?Sized>(m: &M, phi: &ScalarExpr, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let geo = PointGeometry::at(m, p)?;
    let jet = phi
        .eval_jet2(p, &Params::new())
        .map_err(|e| GeometryError::eval("scalar field", e))?;
    Ok(geo.gradient(jet.grad()))
}

pub fn hessian<M: MetricSource + ?Sized>(m: &M, phi: &ScalarExpr, p: &[f64]) -> Result<SymBilinear, GeometryError> {
    let geo = PointGeometry::at(m, p)?;
    let jet = phi
        .eval_jet2(p, &Params::new())
        .map_err(|e| GeometryError::eval("scalar field", e))?;
    Ok(geo.hessian(&jet))
}

pub fn laplacian<M: MetricSource + ?Sized>(m: &M, phi: &ScalarExpr, p: &[f64]) -> Result<f64, GeometryError> {
    let geo = PointGeometry::at(m, p)?;
    let jet = phi
        .eval_jet2(p, &Params::new())
        .map_err(|e| GeometryError::eval("scalar field", e))?;
    Ok(geo.laplacian(&jet))
}

pub fn riemann<M: MetricSource + ?Sized>(m: &M, p: &[f64]) -> Result<Riemann, GeometryError> {
    Ok(PointGeometry::at(m, p)?.riemann())
}

pub fn ricci<M: MetricSource + ?Sized>(m: &M, p: &[f64]) -> Result<SymBilinear, GeometryError> {
    Ok(PointGeometry::at(m, p)?.ricci())
}

pub fn scalar_curv<M: MetricSource + ?Sized>(m: &M, p: &[f64]) -> Result<f64, GeometryError> {
    Ok(PointGeometry::at(m, p)?.scalar())
}

pub fn lie_metric<M: MetricSource + ?Sized, X: VectorSource + ?Sized>(
    m: &M,
    x: &X,
    p: &[f64],
) -> Result<SymBilinear, GeometryError> {
    let geo = PointGeometry::at(m, p)?;
    Ok(geo.lie_metric(&x.vector_jet(p)?))
}

#[cfg(test)]
mod tests;
