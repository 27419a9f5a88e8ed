//! Standard static space-times `I ×_f F` with metric `g = −f² dt² + g_F`.
//!
//! Curvature is available through two independent routes: the warped
//! product formulas, which only need fiber quantities (`Ric_F`, `H_F^f`,
//! `Δ_F f`), and the direct route, which runs the general curvature engine on
//! the `(t, x¹..xˢ)` product chart. The second route is kept as a first-class
//! operation because it is the regression oracle for the first.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Jet2, Params, ScalarExpr};
use crate::geometry::{GeometryError, MetricField, MetricJet, MetricSource, PointGeometry, SymBilinear};
use crate::par;
use crate::sampling::{self, Options, Stream};

/// User-declared global properties of the fiber `(F, g_F)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FiberFlags {
    pub compact: bool,
    pub complete: bool,
    pub ricci_flat: bool,
}

/// Where a bound on the warping function comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    /// The warp expression does not depend on the coordinates.
    Constant,
    Declared,
    /// Only observed on samples; not a certificate for a global bound.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct StaticSpacetime {
    t1: f64,
    t2: f64,
    fiber: MetricField,
    warp: ScalarExpr,
    flags: FiberFlags,
    inf_f: Option<f64>,
    sup_f: Option<f64>,
    t_sample: Option<(f64, f64)>,
}

/// A tangent vector `U + V` split into its `∂_t` coefficient and fiber part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacetimeVector {
    pub u: f64,
    pub v: Vec<f64>,
}

impl SpacetimeVector {
    pub fn new(u: f64, v: Vec<f64>) -> Self {
        Self { u, v }
    }

    pub fn time(dim: usize) -> Self {
        Self { u: 1.0, v: vec![0.0; dim] }
    }

    pub fn spatial(v: Vec<f64>) -> Self {
        Self { u: 0.0, v }
    }

    /// Components on the product chart `(t, x¹..xˢ)`.
    pub fn to_coords(&self) -> Vec<f64> {
        std::iter::once(self.u).chain(self.v.iter().copied()).collect()
    }

    pub fn from_coords(c: &[f64]) -> Self {
        Self {
            u: c[0],
            v: c[1..].to_vec(),
        }
    }
}

const DEFAULT_T_WINDOW: f64 = 5.0;

impl StaticSpacetime {
    pub fn new(fiber: MetricField, warp: ScalarExpr, t1: f64, t2: f64) -> Result<Self> {
        if !(t1 < t2) || t1.is_nan() || t2.is_nan() {
            return Err(Error::invalid(format!("interval ({t1}, {t2}) is empty")));
        }
        if fiber.signature() != 0 {
            return Err(Error::invalid("the fiber metric must be Riemannian"));
        }
        if warp.coords() != fiber.chart().names() {
            return Err(Error::invalid("the warp must be an expression on the fiber chart"));
        }
        Ok(Self {
            t1,
            t2,
            fiber,
            warp,
            flags: FiberFlags::default(),
            inf_f: None,
            sup_f: None,
            t_sample: None,
        })
    }

    pub fn with_flags(mut self, flags: FiberFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_inf_f(mut self, inf_f: Option<f64>) -> Result<Self> {
        if let Some(v) = inf_f {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("declared inf f = {v} must be positive")));
            }
        }
        self.inf_f = inf_f;
        Ok(self)
    }

    pub fn with_sup_f(mut self, sup_f: Option<f64>) -> Self {
        self.sup_f = sup_f;
        self
    }

    /// Restrict time sampling to `[a, b]`, which must lie inside the interval.
    pub fn with_t_sample(mut self, range: Option<(f64, f64)>) -> Result<Self> {
        if let Some((a, b)) = range {
            if !(a < b && a > self.t1 && b < self.t2 && a.is_finite() && b.is_finite()) {
                return Err(Error::invalid(format!(
                    "time sample range [{a}, {b}] must be a finite subinterval of ({}, {})",
                    self.t1, self.t2
                )));
            }
        }
        self.t_sample = range;
        Ok(self)
    }

    pub fn fiber(&self) -> &MetricField {
        &self.fiber
    }

    pub fn warp(&self) -> &ScalarExpr {
        &self.warp
    }

    pub fn flags(&self) -> FiberFlags {
        self.flags
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn is_whole_line(&self) -> bool {
        self.t1 == f64::NEG_INFINITY && self.t2 == f64::INFINITY
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.chart().dim()
    }

    /// Spacetime dimension `n = s + 1`.
    pub fn dim(&self) -> usize {
        self.fiber_dim() + 1
    }

    pub fn declared_inf_f(&self) -> Option<f64> {
        self.inf_f
    }

    pub fn declared_sup_f(&self) -> Option<f64> {
        self.sup_f
    }

    /// Finite window used when sampling `t`.
    pub fn t_sample_range(&self) -> (f64, f64) {
        if let Some(r) = self.t_sample {
            return r;
        }
        let shrink = |a: f64, b: f64| {
            let pad = 1e-3 * (b - a);
            (a + pad, b - pad)
        };
        let lo = self.t1.max(-DEFAULT_T_WINDOW);
        let hi = self.t2.min(DEFAULT_T_WINDOW);
        if lo < hi {
            let (a, b) = shrink(lo, hi);
            (if self.t1.is_finite() { a } else { lo }, if self.t2.is_finite() { b } else { hi })
        } else {
            shrink(self.t1, self.t2)
        }
    }

    pub fn warp_value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.warp.eval(p, &Params::new())?)
    }

    /// Value of `f` when the warp is coordinate-free.
    pub fn constant_warp(&self) -> Option<f64> {
        if self.warp.is_coordinate_free() {
            let origin = vec![0.0; self.fiber_dim()];
            self.warp.eval(&origin, &Params::new()).ok()
        } else {
            None
        }
    }

    /// Load-time invariants at `p`: `f > 0` and a nondegenerate Riemannian fiber metric.
    pub fn validate_at(&self, p: &[f64]) -> Result<()> {
        let f = self.warp_value(p)?;
        if !(f > 0.0) {
            return Err(Error::NonpositiveWarp {
                point: p.to_vec(),
                value: f,
            });
        }
        self.fiber.validate_at(p)?;
        Ok(())
    }

    /// Fiber-level curvature data at `p`.
    pub fn at(&self, p: &[f64]) -> Result<WarpedPoint> {
        let geo = PointGeometry::at(&self.fiber, p)?;
        let f = self
            .warp
            .eval_jet2(p, &Params::new())
            .map_err(|e| GeometryError::eval("warp f", e))?;
        if !(f.value() > 0.0) {
            return Err(Error::NonpositiveWarp {
                point: p.to_vec(),
                value: f.value(),
            });
        }
        let hess_f = geo.hessian(&f).with_label("H_F^f");
        let lap_f = hess_f.trace_with(geo.inverse());
        let ric_f = geo.ricci().with_label("Ric_F");
        let tau_f = ric_f.trace_with(geo.inverse());
        Ok(WarpedPoint {
            geo,
            f,
            hess_f,
            lap_f,
            ric_f,
            tau_f,
        })
    }

    /// The metric on the `(t, x¹..xˢ)` product chart.
    pub fn product_metric(&self) -> ProductMetric<'_> {
        ProductMetric { spacetime: self }
    }
}

/// Fiber curvature data at one point, from which every warped-product
/// formula is evaluated.
#[derive(Debug, Clone)]
pub struct WarpedPoint {
    geo: PointGeometry,
    f: Jet2,
    hess_f: SymBilinear,
    lap_f: f64,
    ric_f: SymBilinear,
    tau_f: f64,
}

impl WarpedPoint {
    pub fn fiber_geometry(&self) -> &PointGeometry {
        &self.geo
    }

    pub fn f(&self) -> f64 {
        self.f.value()
    }

    pub fn f_jet(&self) -> &Jet2 {
        &self.f
    }

    pub fn hess_f(&self) -> &SymBilinear {
        &self.hess_f
    }

    pub fn lap_f(&self) -> f64 {
        self.lap_f
    }

    pub fn ric_f(&self) -> &SymBilinear {
        &self.ric_f
    }

    pub fn tau_f(&self) -> f64 {
        self.tau_f
    }

    pub fn fiber_metric(&self) -> SymBilinear {
        self.geo.metric()
    }

    /// `g(w1, w2) = −f² u1 u2 + g_F(v1, v2)`.
    pub fn inner(&self, w1: &SpacetimeVector, w2: &SpacetimeVector) -> f64 {
        let f = self.f();
        -f * f * w1.u * w2.u + self.geo.inner(&w1.v, &w2.v)
    }

    /// Ricci form of the space-time from fiber data:
    /// `Ric_F(V,W) + fΔf·u1u2 − (1/f) H^f(V,W)`.
    pub fn ricci_sss(&self, w1: &SpacetimeVector, w2: &SpacetimeVector) -> f64 {
        let f = self.f();
        self.ric_f.apply(&w1.v, &w2.v) + f * self.lap_f * w1.u * w2.u - self.hess_f.apply(&w1.v, &w2.v) / f
    }

    /// `τ = τ_F − 2Δf/f`.
    pub fn scalar_sss(&self) -> f64 {
        self.tau_f - 2.0 * self.lap_f / self.f()
    }

    /// `Q_F^f = Δf g_F − H_F^f`.
    pub fn q_tensor(&self) -> SymBilinear {
        self.geo
            .metric()
            .combine(self.lap_f, &self.hess_f, -1.0)
            .with_label("Q_F^f")
    }

    /// `Ric(w,w) = Ric_F(V,V) + (1/f) Q(V,V) − g(w,w) Δf/f`.
    pub fn ricci_q_form(&self, w: &SpacetimeVector) -> f64 {
        let f = self.f();
        self.ric_f.quad(&w.v) + self.q_tensor().quad(&w.v) / f - self.inner(w, w) * self.lap_f / f
    }

    /// `8πT(w,w)` from the Einstein equation and from the fiber decomposition.
    pub fn stress_energy(&self, w: &SpacetimeVector) -> StressEnergy {
        let gww = self.inner(w, w);
        let einstein = self.ricci_sss(w, w) - 0.5 * self.scalar_sss() * gww;
        let f = self.f();
        let decomposed = self.ric_f.quad(&w.v) + self.q_tensor().quad(&w.v) / f - 0.5 * self.tau_f * gww;
        StressEnergy { einstein, decomposed }
    }

    /// The block matrix of `ricci_sss` on the product chart.
    pub fn ricci_block(&self) -> SymBilinear {
        let s = self.ric_f.dim();
        let f = self.f();
        SymBilinear::from_fn("Ric", s + 1, |i, j| match (i, j) {
            (0, 0) => f * self.lap_f,
            (0, _) => 0.0,
            (a, b) => self.ric_f.get(a - 1, b - 1) - self.hess_f.get(a - 1, b - 1) / f,
        })
    }
}

/// `8πT(w, w)` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StressEnergy {
    /// `Ric(w,w) − ½ τ g(w,w)`.
    pub einstein: f64,
    /// `Ric_F(V,V) + (1/f) Q(V,V) − ½ τ_F g(w,w)`.
    pub decomposed: f64,
}

/// `diag(−f², g_F)` on the `(t, x)` product chart.
#[derive(Debug, Clone, Copy)]
pub struct ProductMetric<'a> {
    spacetime: &'a StaticSpacetime,
}

impl MetricSource for ProductMetric<'_> {
    fn dim(&self) -> usize {
        self.spacetime.dim()
    }

    fn signature(&self) -> usize {
        1
    }

    fn metric_jet(&self, p: &[f64]) -> Result<MetricJet, GeometryError> {
        let n = self.dim();
        if p.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        let x = &p[1..];
        let fiber = self.spacetime.fiber.metric_jet(x)?;
        let f = self
            .spacetime
            .warp
            .eval_jet2(x, &Params::new())
            .map_err(|e| GeometryError::eval("warp f", e))?;
        let s = n - 1;
        let mut out = MetricJet::zeros(n);
        // g_tt = −f², independent of t.
        out.g[0] = -f.value() * f.value();
        for k in 0..s {
            out.dg[(k + 1) * n * n] = -2.0 * f.value() * f.grad()[k];
            for l in 0..s {
                out.ddg[((k + 1) * n + (l + 1)) * n * n] =
                    -2.0 * (f.grad()[k] * f.grad()[l] + f.value() * f.hess(k, l));
            }
        }
        for i in 0..s {
            for j in 0..s {
                out.g[(i + 1) * n + (j + 1)] = fiber.g[i * s + j];
                for k in 0..s {
                    out.dg[((k + 1) * n + (i + 1)) * n + (j + 1)] = fiber.dg[(k * s + i) * s + j];
                    for l in 0..s {
                        out.ddg[(((k + 1) * n + (l + 1)) * n + (i + 1)) * n + (j + 1)] =
                            fiber.ddg[((k * s + l) * s + i) * s + j];
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn spacetime_metric_at(s: &StaticSpacetime, t: f64, p: &[f64]) -> Result<SymBilinear> {
    let pt: Vec<f64> = std::iter::once(t).chain(p.iter().copied()).collect();
    let f = s.warp_value(p)?;
    if !(f > 0.0) {
        return Err(Error::NonpositiveWarp {
            point: p.to_vec(),
            value: f,
        });
    }
    Ok(PointGeometry::at(&s.product_metric(), &pt)?.metric())
}

pub fn ricci_sss(s: &StaticSpacetime, p: &[f64], w1: &SpacetimeVector, w2: &SpacetimeVector) -> Result<f64> {
    Ok(s.at(p)?.ricci_sss(w1, w2))
}

pub fn scalar_sss(s: &StaticSpacetime, p: &[f64]) -> Result<f64> {
    Ok(s.at(p)?.scalar_sss())
}

pub fn q_tensor(s: &StaticSpacetime, p: &[f64]) -> Result<SymBilinear> {
    Ok(s.at(p)?.q_tensor())
}

pub fn ricci_q_form(s: &StaticSpacetime, p: &[f64], w: &SpacetimeVector) -> Result<f64> {
    Ok(s.at(p)?.ricci_q_form(w))
}

pub fn stress_energy(s: &StaticSpacetime, p: &[f64], w: &SpacetimeVector) -> Result<StressEnergy> {
    Ok(s.at(p)?.stress_energy(w))
}

/// Ricci tensor of the space-time computed on the product chart by the
/// general curvature engine.
pub fn direct_product_ricci(s: &StaticSpacetime, t: f64, p: &[f64]) -> Result<SymBilinear> {
    let pt: Vec<f64> = std::iter::once(t).chain(p.iter().copied()).collect();
    Ok(PointGeometry::at(&s.product_metric(), &pt)?.ricci())
}

/// Scalar curvature on the product chart.
pub fn direct_product_scalar(s: &StaticSpacetime, t: f64, p: &[f64]) -> Result<f64> {
    let pt: Vec<f64> = std::iter::once(t).chain(p.iter().copied()).collect();
    Ok(PointGeometry::at(&s.product_metric(), &pt)?.scalar())
}

/// Largest relative disagreement between the warped-product formulas and
/// the product-chart computation over a sample sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityGaps {
    pub samples: usize,
    /// `Ric(w1, w2)` for random `w1, w2`, relative to `1 + |Ric|·|w1|·|w2|`.
    pub ricci: f64,
    pub scalar: f64,
    /// `Ric(∂_t, ∂_t)` on the product chart against `f Δ_F f`.
    pub time_time: f64,
    /// `Ric(w, w)` against its `Q`-tensor form.
    pub q_form: f64,
    /// `8πT(w, w)` from the Einstein equation against the fiber decomposition.
    pub stress_energy: f64,
    /// `(t, x)` where the Ricci gap is largest.
    pub worst_point: Vec<f64>,
}

struct PointGaps {
    ricci: f64,
    scalar: f64,
    time_time: f64,
    q_form: f64,
    stress_energy: f64,
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    let g = (a - b).abs() / (1.0 + scale);
    if g.is_nan() {
        f64::INFINITY
    } else {
        g
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cross-check every curvature identity at `opts.samples` random points of
/// the product chart, with standard normal test vectors.
pub fn identity_gaps(s: &StaticSpacetime, opts: &Options) -> Result<IdentityGaps> {
    let points = sampling::spacetime_points(s, opts)?;
    let mut r = sampling::rng(opts.seed, Stream::CausalVectors);
    let n = s.dim();
    let jobs: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = points
        .into_iter()
        .map(|p| (p, sampling::gaussian(&mut r, n), sampling::gaussian(&mut r, n)))
        .collect();
    let gaps = par::try_map(opts.exec, &jobs, |(p, a, b)| -> Result<PointGaps> {
        let (t, x) = (p[0], &p[1..]);
        let wp = s.at(x)?;
        let direct = direct_product_ricci(s, t, x)?;
        let (w1, w2) = (SpacetimeVector::from_coords(a), SpacetimeVector::from_coords(b));
        let tau = direct_product_scalar(s, t, x)?;
        let ric_scale = direct.max_abs();
        let ww = direct.quad(a);
        let se = wp.stress_energy(&w1);
        Ok(PointGaps {
            ricci: rel(wp.ricci_sss(&w1, &w2), direct.apply(a, b), ric_scale * norm(a) * norm(b)),
            scalar: rel(wp.scalar_sss(), tau, tau.abs()),
            time_time: rel(direct.get(0, 0), wp.f() * wp.lap_f(), ric_scale),
            q_form: rel(wp.ricci_q_form(&w1), ww, ric_scale * norm(a) * norm(a)),
            stress_energy: rel(se.einstein, se.decomposed, se.einstein.abs().max(ric_scale * norm(a) * norm(a))),
        })
    })?;
    let worst = (0..gaps.len())
        .max_by(|&i, &j| gaps[i].ricci.total_cmp(&gaps[j].ricci))
        .unwrap_or(0);
    let max = |f: fn(&PointGaps) -> f64| gaps.iter().map(f).fold(0.0, f64::max);
    Ok(IdentityGaps {
        samples: gaps.len(),
        ricci: max(|g| g.ricci),
        scalar: max(|g| g.scalar),
        time_time: max(|g| g.time_time),
        q_form: max(|g| g.q_form),
        stress_energy: max(|g| g.stress_energy),
        worst_point: jobs[worst].0.clone(),
    })
}
