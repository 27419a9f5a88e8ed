//! Energy conditions, conformal hyperbolicity, geodesics, conjugate points
//! and the timelike diameter bound for standard static space-times.
//!
//! Hypotheses about the fiber (definiteness of `Ric_F` and `Q_F^f`, the sign
//! of `Δf/f`) are certified on the sampled box only; the global properties
//! the theorems also need (compactness, completeness, bounds on `f`) come
//! from declarations, and every report says which source was used.

mod geodesic;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{MetricField, PointGeometry, SymBilinear};
use crate::par;
use crate::sampling::{self, Options, Stream};
use crate::warped::{BoundSource, SpacetimeVector, StaticSpacetime, WarpedPoint};

pub use geodesic::{integrate_geodesic, jacobi_conjugate, CausalCharacter, ConjugatePoint, ConjugateReport, GeodesicSample, GeodesicTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definiteness {
    Zero,
    PositiveDefinite,
    PositiveSemidefinite,
    NegativeDefinite,
    NegativeSemidefinite,
    Indefinite,
}

impl Definiteness {
    /// Zero, positive semidefinite or positive definite.
    pub fn is_psd(self) -> bool {
        matches!(self, Self::Zero | Self::PositiveSemidefinite | Self::PositiveDefinite)
    }

    pub fn is_nsd(self) -> bool {
        matches!(self, Self::Zero | Self::NegativeSemidefinite | Self::NegativeDefinite)
    }

    pub fn is_definite(self) -> bool {
        matches!(self, Self::PositiveDefinite | Self::NegativeDefinite)
    }

    fn classify(lo: f64, hi: f64, threshold: f64) -> Self {
        if lo.abs() <= threshold && hi.abs() <= threshold {
            Self::Zero
        } else if lo > threshold {
            Self::PositiveDefinite
        } else if lo >= -threshold {
            Self::PositiveSemidefinite
        } else if hi < -threshold {
            Self::NegativeDefinite
        } else if hi <= threshold {
            Self::NegativeSemidefinite
        } else {
            Self::Indefinite
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinitenessVerdict {
    pub label: String,
    pub class: Definiteness,
    /// Extreme eigenvalues of `g⁻¹B` over all samples.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub min_witness: Vec<f64>,
    pub max_witness: Vec<f64>,
    pub tol: f64,
    /// `tol · (1 + spectral scale)`
    pub threshold: f64,
    pub samples: usize,
    pub domain: Vec<(f64, f64)>,
}

/// Eigenvalues of `B` relative to the Riemannian metric `g`.
fn relative_eigenvalues(b: &SymBilinear, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("metric is not positive definite"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("metric factor is singular"))?;
    let m = &linv * b.to_matrix() * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(m).eigenvalues.iter().copied().collect())
}

fn verdict_from(label: &str, forms: &[(Vec<f64>, SymBilinear, DMatrix<f64>)], tol: f64, domain: Vec<(f64, f64)>) -> Result<DefinitenessVerdict> {
    if forms.is_empty() {
        return Err(Error::invalid(format!("no samples to decide the definiteness of {label}")));
    }
    let mut lo = (f64::INFINITY, 0);
    let mut hi = (f64::NEG_INFINITY, 0);
    for (i, (_, b, g)) in forms.iter().enumerate() {
        for e in relative_eigenvalues(b, g)? {
            if e < lo.0 {
                lo = (e, i);
            }
            if e > hi.0 {
                hi = (e, i);
            }
        }
    }
    let scale = lo.0.abs().max(hi.0.abs());
    let threshold = tol * (1.0 + scale);
    Ok(DefinitenessVerdict {
        label: label.to_string(),
        class: Definiteness::classify(lo.0, hi.0, threshold),
        min_eigenvalue: lo.0,
        max_eigenvalue: hi.0,
        min_witness: forms[lo.1].0.clone(),
        max_witness: forms[hi.1].0.clone(),
        tol,
        threshold,
        samples: forms.len(),
        domain,
    })
}

/// Definiteness of a field of symmetric forms on sampled fiber points.
pub fn definiteness<F>(label: &str, metric: &MetricField, field: F, opts: &Options) -> Result<DefinitenessVerdict>
where
    F: Fn(&[f64]) -> Result<SymBilinear> + Sync + Send,
{
    let points = sampling::fiber_points(metric.chart(), opts)?;
    let forms = par::try_map(opts.exec, &points, |p| -> Result<_> {
        let geo = PointGeometry::at(metric, p)?;
        Ok((p.clone(), field(p)?, geo.metric_matrix()))
    })?;
    verdict_from(label, &forms, opts.tol, metric.chart().sample_box())
}

/// Everything the classifiers need from one fiber sample.
struct Sampled {
    point: Vec<f64>,
    wp: WarpedPoint,
}

fn sample_fiber(s: &StaticSpacetime, opts: &Options) -> Result<Vec<Sampled>> {
    let points = sampling::fiber_points(s.fiber().chart(), opts)?;
    par::try_map(opts.exec, &points, |p| {
        Ok(Sampled {
            point: p.clone(),
            wp: s.at(p)?,
        })
    })
}

fn fiber_verdicts(s: &StaticSpacetime, samples: &[Sampled], tol: f64) -> Result<(DefinitenessVerdict, DefinitenessVerdict)> {
    let domain = s.fiber().chart().sample_box();
    let ric: Vec<_> = samples
        .iter()
        .map(|x| (x.point.clone(), x.wp.ric_f().clone(), x.wp.fiber_geometry().metric_matrix()))
        .collect();
    let q: Vec<_> = samples
        .iter()
        .map(|x| (x.point.clone(), x.wp.q_tensor(), x.wp.fiber_geometry().metric_matrix()))
        .collect();
    Ok((verdict_from("Ric_F", &ric, tol, domain.clone())?, verdict_from("Q_F^f", &q, tol, domain)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

/// A conclusion drawn from one of the energy-condition theorems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Implication {
    pub name: String,
    pub status: Status,
    pub reason: String,
}

/// Extremes of `Ric(w,w)` and `8πT(w,w)` over sampled causal vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalSampling {
    pub count: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
    pub min_ric_causal: f64,
    pub max_ric_causal: f64,
    pub min_ric_null: f64,
    pub max_ric_null: f64,
    pub min_t_causal: f64,
    pub max_t_causal: f64,
    /// Sampled vectors violating an implication that holds.
    pub contradictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub fiber_dim: usize,
    pub ric_f: DefinitenessVerdict,
    pub q: DefinitenessVerdict,
    pub ricci_flat: Option<RicciFlatSource>,
    pub implications: Vec<Implication>,
    pub sampling: CausalSampling,
    pub min_lap_f: f64,
    pub min_tau_f: f64,
    /// `Δf ≥ 0` on samples, necessary for the SEC.
    pub subharmonic_on_samples: bool,
    /// `τ_F ≥ 0` on samples, necessary for the WEC.
    pub tau_f_nonnegative_on_samples: bool,
    pub notes: Vec<String>,
}

impl EnergyReport {
    pub fn implication(&self, name: &str) -> Option<&Implication> {
        self.implications.iter().find(|i| i.name == name)
    }
}

/// How Ricci-flatness of the fiber was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicciFlatSource {
    Declared,
    Sampled,
}

const LAMBDAS: [f64; 4] = [1.0, 1.1, 2.0, 10.0];

/// Causal vector at a sample: unit fiber direction `v` and
/// `u = ±λ/f`, so that `g(w,w) = 1 − λ²`.
fn causal_vector(wp: &WarpedPoint, dir: &[f64], lambda: f64, sign: f64) -> SpacetimeVector {
    let norm = wp.fiber_geometry().inner(dir, dir).sqrt();
    let v: Vec<f64> = dir.iter().map(|x| x / norm).collect();
    SpacetimeVector::new(sign * lambda / wp.f(), v)
}

/// Definiteness hypotheses on `Ric_F` and `Q_F^f`, the implications the
/// energy-condition theorems draw from them, and a sampled check of those
/// implications on causal vectors.
pub fn energy_report(s: &StaticSpacetime, opts: &Options, causal_samples: usize) -> Result<EnergyReport> {
    let samples = sample_fiber(s, opts)?;
    let (ric_f, q) = fiber_verdicts(s, &samples, opts.tol)?;
    let dim = s.fiber_dim();
    let mut notes = vec!["hypotheses verified on sampled domain".to_string()];

    let ricci_flat = if s.flags().ricci_flat {
        Some(RicciFlatSource::Declared)
    } else if ric_f.class == Definiteness::Zero {
        Some(RicciFlatSource::Sampled)
    } else {
        None
    };

    let mut implications = Vec::new();
    let small = dim < 2;
    if small {
        notes.push("fiber dimension below 2: the energy-condition theorems do not apply".into());
    }
    let mut push = |name: &str, status: Status, reason: String| {
        implications.push(Implication {
            name: name.into(),
            status: if small { Status::Inconclusive } else { status },
            reason,
        })
    };
    let both_psd = ric_f.class.is_psd() && q.class.is_psd();
    let both_nsd = ric_f.class.is_nsd() && q.class.is_nsd();
    let classes = format!("Ric_F {:?}, Q {:?}", ric_f.class, q.class);
    push(
        "tcc-ncc",
        if both_psd { Status::Holds } else { Status::Inconclusive },
        format!("{classes}; Ric(w,w) >= 0 on causal w needs both positive semidefinite"),
    );
    push(
        "t-nonnegative",
        if both_psd { Status::Holds } else { Status::Inconclusive },
        format!("{classes}; T(w,w) >= 0 on causal w needs both positive semidefinite"),
    );
    push(
        "ric-nonpositive-causal",
        if both_nsd { Status::Holds } else { Status::Inconclusive },
        format!("{classes}; Ric(w,w) <= 0 on causal w needs both negative semidefinite"),
    );
    push(
        "t-nonpositive",
        if both_nsd { Status::Holds } else { Status::Inconclusive },
        format!("{classes}; T(w,w) <= 0 on causal w needs both negative semidefinite"),
    );
    let ncc = match ricci_flat {
        Some(_) if q.class.is_psd() => Status::Holds,
        Some(_) => Status::Fails,
        None if both_psd => Status::Holds,
        None => Status::Inconclusive,
    };
    push(
        "ncc",
        ncc,
        match ricci_flat {
            Some(src) => format!("fiber Ricci-flat ({src:?}): NCC holds iff Q is positive semidefinite; Q {:?}", q.class),
            None => classes.clone(),
        },
    );
    if ricci_flat.is_some() {
        notes.push("Ricci-flat fiber: 8 pi T(u+v, u+v) = Q(v, v)/f".into());
    }

    let sampling = sample_causal(&samples, &implications, opts, causal_samples);
    if sampling.contradictions > 0 {
        let definite = ric_f.class.is_definite() && q.class.is_definite();
        notes.push(format!(
            "{} sampled causal vectors contradict an implication{}",
            sampling.contradictions,
            if definite { "" } else { " (hypotheses only semidefinite)" }
        ));
    }
    let min_lap_f = samples.iter().map(|x| x.wp.lap_f()).fold(f64::INFINITY, f64::min);
    let min_tau_f = samples.iter().map(|x| x.wp.tau_f()).fold(f64::INFINITY, f64::min);
    Ok(EnergyReport {
        fiber_dim: dim,
        ric_f,
        q,
        ricci_flat,
        implications,
        sampling,
        min_lap_f,
        min_tau_f,
        subharmonic_on_samples: min_lap_f >= -opts.tol,
        tau_f_nonnegative_on_samples: min_tau_f >= -opts.tol,
        notes,
    })
}

fn sample_causal(samples: &[Sampled], implications: &[Implication], opts: &Options, count: usize) -> CausalSampling {
    let holds = |name: &str| implications.iter().any(|i| i.name == name && i.status == Status::Holds);
    let (ric_pos, ric_neg) = (holds("tcc-ncc"), holds("ric-nonpositive-causal"));
    let (t_pos, t_neg) = (holds("t-nonnegative"), holds("t-nonpositive"));
    let ncc = holds("ncc");

    let mut r = sampling::rng(opts.seed, Stream::CausalVectors);
    let dim = samples[0].wp.fiber_geometry().dim();
    let dirs: Vec<Vec<f64>> = (0..count).map(|_| sampling::gaussian(&mut r, dim)).collect();
    let idx: Vec<usize> = (0..count).collect();
    let evals = par::map(opts.exec, &idx, |&k| {
        let x = &samples[k % samples.len()];
        let lambda = LAMBDAS[k % LAMBDAS.len()];
        let sign = if (k / LAMBDAS.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        let w = causal_vector(&x.wp, &dirs[k], lambda, sign);
        let wp = &x.wp;
        let f = wp.f();
        let ric_terms = [
            wp.ric_f().quad(&w.v),
            wp.q_tensor().quad(&w.v) / f,
            -wp.inner(&w, &w) * wp.lap_f() / f,
        ];
        let ric: f64 = ric_terms.iter().sum();
        let scale = 1.0 + ric_terms.iter().map(|x| x.abs()).sum::<f64>() + (wp.tau_f() * wp.inner(&w, &w)).abs();
        let t = wp.stress_energy(&w).decomposed;
        (lambda == 1.0, ric, t, scale)
    });
    let thr = opts.tol;
    let mut out = CausalSampling {
        count,
        seed: opts.seed,
        lambdas: LAMBDAS.to_vec(),
        min_ric_causal: f64::INFINITY,
        max_ric_causal: f64::NEG_INFINITY,
        min_ric_null: f64::INFINITY,
        max_ric_null: f64::NEG_INFINITY,
        min_t_causal: f64::INFINITY,
        max_t_causal: f64::NEG_INFINITY,
        contradictions: 0,
    };
    for (null, ric, t, scale) in evals {
        out.min_ric_causal = out.min_ric_causal.min(ric);
        out.max_ric_causal = out.max_ric_causal.max(ric);
        out.min_t_causal = out.min_t_causal.min(t);
        out.max_t_causal = out.max_t_causal.max(t);
        if null {
            out.min_ric_null = out.min_ric_null.min(ric);
            out.max_ric_null = out.max_ric_null.max(ric);
        }
        let bad = (ric_pos && ric < -thr * scale)
            || (ric_neg && ric > thr * scale)
            || (t_pos && t < -thr * scale)
            || (t_neg && t > thr * scale)
            || (ncc && null && ric < -thr * scale);
        if bad {
            out.contradictions += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hyperbolicity {
    TrivialPseudoDistance,
    ConformallyHyperbolic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOnWarp {
    pub value: f64,
    pub source: BoundSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    pub class: Hyperbolicity,
    pub ric_f: DefinitenessVerdict,
    pub q: DefinitenessVerdict,
    pub inf_f: BoundOnWarp,
    pub checklist: Vec<Hypothesis>,
    pub notes: Vec<String>,
}

fn hyp(name: &str, holds: bool, evidence: impl Into<String>) -> Hypothesis {
    Hypothesis {
        name: name.into(),
        holds,
        evidence: evidence.into(),
    }
}

/// Bound on `f` by precedence: constant warp, declaration, then samples.
fn warp_bound(s: &StaticSpacetime, declared: Option<f64>, sampled: f64) -> BoundOnWarp {
    if let Some(c) = s.constant_warp() {
        BoundOnWarp {
            value: c,
            source: BoundSource::Constant,
        }
    } else if let Some(v) = declared {
        BoundOnWarp {
            value: v,
            source: BoundSource::Declared,
        }
    } else {
        BoundOnWarp {
            value: sampled,
            source: BoundSource::Sampled,
        }
    }
}

fn interval_text(s: &StaticSpacetime) -> String {
    let (a, b) = s.interval();
    format!("I = ({a}, {b})")
}

/// Sufficient conditions for a trivial Lorentzian pseudo-distance or for
/// conformal hyperbolicity; anything else is inconclusive.
pub fn hyperbolicity_classify(s: &StaticSpacetime, opts: &Options) -> Result<HyperbolicityReport> {
    let samples = sample_fiber(s, opts)?;
    let (ric_f, q) = fiber_verdicts(s, &samples, opts.tol)?;
    let min_f = samples.iter().map(|x| x.wp.f()).fold(f64::INFINITY, f64::min);
    let inf_f = warp_bound(s, s.declared_inf_f(), min_f);
    let flags = s.flags();

    let whole_line = s.is_whole_line();
    let nsd = ric_f.class.is_nsd() && q.class.is_nsd();
    let inf_ok = inf_f.value > 0.0 && inf_f.source != BoundSource::Sampled;
    let mut checklist = vec![
        hyp("I = R", whole_line, interval_text(s)),
        hyp("Ric_F negative semidefinite", ric_f.class.is_nsd(), format!("{:?}", ric_f.class)),
        hyp("Q negative semidefinite", q.class.is_nsd(), format!("{:?}", q.class)),
        hyp("fiber compact", flags.compact, "declared flag"),
        hyp("fiber complete", flags.complete, "declared flag"),
        hyp(
            "inf f > 0",
            inf_ok,
            format!("inf f = {} ({:?})", inf_f.value, inf_f.source),
        ),
        hyp("Ric_F positive semidefinite", ric_f.class.is_psd(), format!("{:?}", ric_f.class)),
        hyp(
            "Q positive definite",
            q.class == Definiteness::PositiveDefinite,
            format!("{:?}", q.class),
        ),
    ];
    let mut notes = vec!["hypotheses verified on sampled domain".to_string()];
    let trivial = whole_line && nsd && (flags.compact || (flags.complete && inf_ok));
    let conformal = ric_f.class.is_psd() && q.class == Definiteness::PositiveDefinite;
    let class = if trivial {
        notes.push(if flags.compact {
            "trivial pseudo-distance from the compact-fiber criterion".into()
        } else {
            "trivial pseudo-distance from the complete-fiber criterion with inf f > 0".into()
        });
        Hyperbolicity::TrivialPseudoDistance
    } else if conformal {
        Hyperbolicity::ConformallyHyperbolic
    } else {
        if inf_f.source == BoundSource::Sampled && flags.complete && nsd {
            notes.push("inf f only sampled; declare inf_f to use the complete-fiber criterion".into());
        }
        Hyperbolicity::Inconclusive
    };
    checklist.push(hyp(
        "null generic condition",
        false,
        "not verified; conformal hyperbolicity here rests on Q positive definite",
    ));
    Ok(HyperbolicityReport {
        class,
        ric_f,
        q,
        inf_f,
        checklist,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterItem {
    pub item: u8,
    pub applies: bool,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterReport {
    /// `min Δf / f` over samples.
    pub c: f64,
    pub c_witness: Vec<f64>,
    pub n: usize,
    pub bound: Option<f64>,
    pub ric_f: Definiteness,
    pub q: Definiteness,
    pub sup_f: BoundOnWarp,
    pub items: Vec<DiameterItem>,
    pub reasons: Vec<String>,
}

/// `c = min Δf/f` on samples and, when `c > 0` and `Ric_F`, `Q` are
/// positive semidefinite, the bound `π √((n−1)/c)`.
pub fn diameter_bound(s: &StaticSpacetime, opts: &Options) -> Result<DiameterReport> {
    let samples = sample_fiber(s, opts)?;
    let (ric_f, q) = fiber_verdicts(s, &samples, opts.tol)?;
    let (c, at) = samples
        .iter()
        .map(|x| (x.wp.lap_f() / x.wp.f(), &x.point))
        .fold((f64::INFINITY, &samples[0].point), |m, x| if x.0 < m.0 { x } else { m });
    let max_f = samples.iter().map(|x| x.wp.f()).fold(0.0, f64::max);
    let sup_f = warp_bound(s, s.declared_sup_f(), max_f);
    let n = s.dim();
    let mut reasons = Vec::new();
    if !ric_f.class.is_psd() {
        reasons.push(format!("Ric_F is {:?}, not positive semidefinite", ric_f.class));
    }
    if !q.class.is_psd() {
        reasons.push(format!("Q is {:?}, not positive semidefinite", q.class));
    }
    if !(c > opts.tol) {
        reasons.push(format!("min Δf/f = {c} is not positive"));
    }
    let bound = reasons
        .is_empty()
        .then(|| std::f64::consts::PI * ((n as f64 - 1.0) / c).sqrt());
    let has = bound.is_some();
    let sup_ok = sup_f.source != BoundSource::Sampled && sup_f.value.is_finite();
    let flags = s.flags();
    let global = s.is_whole_line() && flags.complete && sup_ok;
    if has && !global {
        reasons.push(format!(
            "diameter statement needs I = R ({}), a complete fiber ({}) and a certified sup f ({:?})",
            s.is_whole_line(),
            flags.complete,
            sup_f.source
        ));
    }
    let items = vec![
        DiameterItem {
            item: 1,
            applies: has,
            statement: "timelike geodesics with length >= bound have a pair of conjugate points".into(),
        },
        DiameterItem {
            item: 2,
            applies: has,
            statement: "timelike geodesics longer than the bound are not maximal".into(),
        },
        DiameterItem {
            item: 3,
            applies: has && global,
            statement: "timelike diameter <= bound".into(),
        },
    ];
    Ok(DiameterReport {
        c,
        c_witness: at.clone(),
        n,
        bound,
        ric_f: ric_f.class,
        q: q.class,
        sup_f,
        items,
        reasons,
    })
}
