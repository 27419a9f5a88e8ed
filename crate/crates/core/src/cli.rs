//! Command dispatch: run one command against a loaded manifest and collect
//! its checks into a [`Report`].

use serde::Serialize;
use serde_json::json;

use crate::causal::{
    self, integrate_geodesic, jacobi_conjugate, CausalCharacter, GeodesicTrace, Hyperbolicity, Status,
};
use crate::error::{Error, Result};
use crate::killing::{self, KillingReport, Verdict};
use crate::manifest::{Manifest, Numerics};
use crate::report::{Check, CheckStatus, Report};
use crate::sampling::Options;
use crate::warped;

/// Search tolerance for conjugate parameters.
pub const CONJUGATE_TOL: f64 = 1e-8;
/// Allowed drift of `g(γ', γ')` along a geodesic, relative to `1 + |g(γ', γ')|`.
pub const NORM_DRIFT_TOL: f64 = 1e-6;
/// Geodesic samples kept in a report.
pub const MAX_TRACE_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curvature,
    KillingCheck,
    KillingClassify,
    Energy,
    Classify,
    Geodesic,
    FullReport,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Curvature,
        Command::KillingCheck,
        Command::KillingClassify,
        Command::Energy,
        Command::Classify,
        Command::Geodesic,
        Command::FullReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::KillingCheck => "killing-check",
            Command::KillingClassify => "killing-classify",
            Command::Energy => "energy",
            Command::Classify => "classify",
            Command::Geodesic => "geodesic",
            Command::FullReport => "full-report",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Command-line values that replace the manifest's `[numerics]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub step: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, base: &Numerics) -> Result<Numerics> {
        let mut n = base.clone();
        if let Some(s) = self.samples {
            if s == 0 {
                return Err(Error::invalid("--samples must be at least 1"));
            }
            n.samples = s;
        }
        if let Some(s) = self.seed {
            n.seed = s;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::invalid(format!("--tol {t} must be positive")));
            }
            n.tol = t;
        }
        if let Some(h) = self.step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::invalid(format!("--step {h} must be positive")));
            }
            n.step = h;
        }
        Ok(n)
    }
}

struct Ctx<'a> {
    m: &'a Manifest,
    numerics: Numerics,
    opts: Options,
    /// Inside `full-report`: absent manifest sections are informational.
    aggregate: bool,
}

impl Ctx<'_> {
    fn absent(&self, name: &str, what: &str) -> Check {
        let status = if self.aggregate { CheckStatus::Info } else { CheckStatus::Inconclusive };
        Check::new(name, status, self.opts.tol, 0, json!({ "reason": what }))
    }
}

/// Run `command` and return the finished report; `exit_code` is set and
/// `wall_clock_ms` is left for the caller.
pub fn run(command: Command, m: &Manifest, manifest_label: &str, overrides: &Overrides) -> Result<Report> {
    let numerics = overrides.apply(&m.numerics)?;
    let ctx = Ctx {
        m,
        opts: numerics.options(),
        numerics: numerics.clone(),
        aggregate: command == Command::FullReport,
    };
    let mut report = Report::new(command.name(), manifest_label, m, &numerics);
    let checks = match command {
        Command::Curvature => curvature(&ctx)?,
        Command::KillingCheck => killing_check(&ctx)?,
        Command::KillingClassify => killing_classify(&ctx)?,
        Command::Energy => energy(&ctx)?,
        Command::Classify => classify(&ctx)?,
        Command::Geodesic => geodesic(&ctx)?,
        Command::FullReport => {
            let mut all = curvature(&ctx)?;
            all.extend(killing_check(&ctx)?);
            all.extend(killing_classify(&ctx)?);
            all.extend(energy(&ctx)?);
            all.extend(classify_diameter(&ctx)?);
            all.extend(geodesic(&ctx)?);
            all
        }
    };
    for c in checks {
        report.push(c);
    }
    report.finish();
    Ok(report)
}

#[derive(Serialize)]
struct SampleTensors {
    point: Vec<f64>,
    f: f64,
    lap_f: f64,
    tau_f: f64,
    tau: f64,
    ric_f: Vec<Vec<f64>>,
    hess_f: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    ric: Vec<Vec<f64>>,
}

fn curvature(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = &ctx.m.spacetime;
    let tol = ctx.opts.tol;
    let g = warped::identity_gaps(s, &ctx.opts)?;
    let n = g.samples;
    let mut out = vec![
        Check::pass_if("ricci-identity", g.ricci <= tol, tol, n, json!({ "max_relative_gap": g.ricci, "worst_point": g.worst_point })),
        Check::pass_if("scalar-identity", g.scalar <= tol, tol, n, json!({ "max_relative_gap": g.scalar })),
        Check::pass_if("time-time-identity", g.time_time <= tol, tol, n, json!({ "max_relative_gap": g.time_time })),
        Check::pass_if("q-form-identity", g.q_form <= tol, tol, n, json!({ "max_relative_gap": g.q_form })),
        Check::pass_if("stress-energy-identity", g.stress_energy <= tol, tol, n, json!({ "max_relative_gap": g.stress_energy })),
    ];
    let center: Vec<f64> = s.fiber().chart().sample_box().iter().map(|&(a, b)| 0.5 * (a + b)).collect();
    let wp = s.at(&center)?;
    let detail = SampleTensors {
        f: wp.f(),
        lap_f: wp.lap_f(),
        tau_f: wp.tau_f(),
        tau: wp.scalar_sss(),
        ric_f: wp.ric_f().entries(),
        hess_f: wp.hess_f().entries(),
        q: wp.q_tensor().entries(),
        ric: wp.ricci_block().entries(),
        point: center,
    };
    out.push(Check::new("sample-tensors", CheckStatus::Info, tol, 1, detail));
    Ok(out)
}

fn verdict_check(name: &str, r: &KillingReport, accept: &[Verdict]) -> Check {
    Check::pass_if(name, accept.contains(&r.verdict), r.tol, r.samples, r)
}

fn killing_check(ctx: &Ctx) -> Result<Vec<Check>> {
    let m = ctx.m;
    let s = &m.spacetime;
    let opts = &ctx.opts;
    let Some(k) = &m.killing else {
        return Ok(vec![ctx.absent("killing-check", "manifest has no [killing] section")]);
    };
    let mut out = Vec::new();
    for (name, field) in m.basis() {
        let r = killing::check_killing(s.fiber(), &field, opts)?;
        out.push(verdict_check(&format!("fiber-killing:{name}"), &r, &[Verdict::Killing]));
    }
    if let Some(cand) = m.candidate()? {
        let r = killing::check_killing_spacetime(s, &cand, opts)?;
        out.push(verdict_check("candidate-killing", &r, &[Verdict::Killing]));
        if r.verdict != Verdict::Killing {
            let c = killing::check_conformal_spacetime(s, &cand, opts)?;
            out.push(Check::new("candidate-conformal", CheckStatus::Info, c.tol, c.samples, &c));
        }
    }
    if let Some(v) = &k.v {
        let h = match &k.h {
            Some(h) => h.clone(),
            None => crate::ScalarExpr::constant(1.0, &crate::expr::names(&["t"])),
        };
        let field = m.vector(v).expect("resolved at load");
        let r = killing::check_theorem_static_candidate(s, &h, field, opts)?;
        out.push(verdict_check("static-candidate", &r, &[Verdict::Killing, Verdict::Conformal]));
    }
    if let Some(psi) = &k.psi {
        let r = killing::check_f2grad_killing(s.fiber(), s.warp(), psi, opts)?;
        out.push(Check::new("warped-gradient", CheckStatus::Info, r.tol, r.samples, &r));
    }
    if out.is_empty() {
        out.push(ctx.absent("killing-check", "[killing] names no basis, candidate or static field"));
    }
    Ok(out)
}

fn killing_classify(ctx: &Ctx) -> Result<Vec<Check>> {
    let m = ctx.m;
    let s = &m.spacetime;
    let opts = &ctx.opts;
    let mut out = Vec::new();
    if let Some(cand) = m.candidate()? {
        match killing::classify_structured(s, &cand, opts) {
            Ok(r) => out.push(verdict_check("structured-classification", &r, &[Verdict::Killing])),
            Err(Error::Inapplicable(why)) => out.push(Check::new(
                "structured-classification",
                CheckStatus::Inconclusive,
                opts.tol,
                opts.samples,
                json!({ "reason": why }),
            )),
            Err(e) => return Err(e),
        }
    }
    if s.flags().compact && m.killing.is_some() {
        let r = killing::classify_compact_fiber(s, &m.basis(), opts)?;
        out.push(verdict_check("compact-fiber-classification", &r, &[Verdict::Killing]));
    }
    if let Some(k) = &m.killing {
        if let (Some(psi), Some(nu)) = (&k.psi, k.nu) {
            let r = killing::eigen_residual(s.fiber(), s.warp(), psi, nu, opts)?;
            out.push(Check::pass_if(
                "eigenfunction",
                r <= opts.tol,
                opts.tol,
                opts.samples,
                json!({ "nu": nu, "residual": r }),
            ));
        }
    }
    if out.is_empty() {
        out.push(ctx.absent("killing-classify", "no candidate (h) in [killing] and fiber not declared compact"));
    }
    Ok(out)
}

fn energy(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = &ctx.m.spacetime;
    let opts = &ctx.opts;
    let r = causal::energy_report(s, opts, ctx.numerics.causal_samples)?;
    let tol = opts.tol;
    let mut out = Vec::new();
    for i in &r.implications {
        let status = match i.status {
            Status::Holds => CheckStatus::Pass,
            Status::Fails => CheckStatus::Fail,
            Status::Inconclusive => CheckStatus::Info,
        };
        out.push(Check::new(format!("energy:{}", i.name), status, tol, opts.samples, i));
    }
    let conclusive = r.implications.iter().any(|i| i.status != Status::Inconclusive);
    let status = if conclusive { CheckStatus::Pass } else { CheckStatus::Inconclusive };
    out.push(Check::new("energy-conditions", status, tol, opts.samples, &r));
    out.push(Check::pass_if(
        "causal-sampling",
        r.sampling.contradictions == 0,
        tol,
        r.sampling.count,
        &r.sampling,
    ));
    out.push(hyperbolicity(ctx)?);
    Ok(out)
}

fn hyperbolicity(ctx: &Ctx) -> Result<Check> {
    let r = causal::hyperbolicity_classify(&ctx.m.spacetime, &ctx.opts)?;
    let status = if r.class == Hyperbolicity::Inconclusive {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    Ok(Check::new("hyperbolicity", status, ctx.opts.tol, ctx.opts.samples, &r))
}

fn diameter(ctx: &Ctx) -> Result<(Check, Option<f64>)> {
    let r = causal::diameter_bound(&ctx.m.spacetime, &ctx.opts)?;
    let status = if r.bound.is_some() { CheckStatus::Pass } else { CheckStatus::Info };
    Ok((Check::new("diameter-bound", status, ctx.opts.tol, ctx.opts.samples, &r), r.bound))
}

fn classify(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut out = vec![hyperbolicity(ctx)?];
    out.extend(classify_diameter(ctx)?);
    Ok(out)
}

fn classify_diameter(ctx: &Ctx) -> Result<Vec<Check>> {
    Ok(vec![diameter(ctx)?.0])
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    character: CausalCharacter,
    step: f64,
    requested_span: f64,
    integrated_span: f64,
    length: f64,
    norm_drift: f64,
    norm_drift_tol: f64,
    truncated: &'a Option<String>,
    /// Every k-th sample, at most `MAX_TRACE_SAMPLES` of them, always
    /// including the last.
    samples: Vec<&'a crate::causal::GeodesicSample>,
}

fn thin(trace: &GeodesicTrace) -> Vec<&crate::causal::GeodesicSample> {
    let n = trace.samples.len();
    let stride = n.div_ceil(MAX_TRACE_SAMPLES - 1).max(1);
    let mut out: Vec<_> = trace.samples.iter().step_by(stride).collect();
    if !(n - 1).is_multiple_of(stride) {
        out.push(trace.end());
    }
    out
}

fn geodesic(ctx: &Ctx) -> Result<Vec<Check>> {
    let m = ctx.m;
    let s = &m.spacetime;
    let Some(g) = &m.geodesic else {
        return Ok(vec![ctx.absent("geodesic", "manifest has no [geodesic] section")]);
    };
    let trace = integrate_geodesic(s, g.t0, &g.p0, &g.v0, g.span, ctx.numerics.step)?;
    let norm0 = trace.start().norm;
    let drift_ok = trace.norm_drift <= NORM_DRIFT_TOL * (1.0 + norm0.abs());
    let status = if !drift_ok {
        CheckStatus::Fail
    } else if trace.truncated.is_some() {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    let summary = TraceSummary {
        character: trace.character,
        step: trace.step,
        requested_span: trace.requested_span,
        integrated_span: trace.span(),
        length: trace.length(),
        norm_drift: trace.norm_drift,
        norm_drift_tol: NORM_DRIFT_TOL,
        truncated: &trace.truncated,
        samples: thin(&trace),
    };
    let mut out = vec![Check::new("geodesic-trace", status, NORM_DRIFT_TOL, trace.samples.len(), &summary)];

    if trace.character == CausalCharacter::Spacelike {
        out.push(Check::new(
            "conjugate-points",
            CheckStatus::Info,
            CONJUGATE_TOL,
            trace.samples.len(),
            json!({ "reason": "conjugate points are searched along causal geodesics only" }),
        ));
        return Ok(out);
    }
    let conj = jacobi_conjugate(s, &trace, CONJUGATE_TOL)?;
    out.push(Check::new("conjugate-points", CheckStatus::Info, CONJUGATE_TOL, trace.samples.len(), &conj));

    if trace.character == CausalCharacter::Timelike {
        let (_, bound) = diameter(ctx)?;
        if let Some(bound) = bound {
            let first = conj.conjugate.first().and_then(|c| c.length);
            let length = trace.length();
            // A timelike geodesic at least as long as the bound must carry a
            // conjugate point no later than the bound.
            let (status, verdict) = match first {
                Some(l) if l <= bound * (1.0 + ctx.opts.tol) => (CheckStatus::Pass, "conjugate point within the bound"),
                _ if length < bound => (CheckStatus::Info, "geodesic shorter than the bound"),
                _ => (CheckStatus::Fail, "no conjugate point up to the bound"),
            };
            out.push(Check::new(
                "diameter-consistency",
                status,
                ctx.opts.tol,
                trace.samples.len(),
                json!({
                    "bound": bound,
                    "geodesic_length": length,
                    "first_conjugate_length": first,
                    "verdict": verdict,
                }),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
