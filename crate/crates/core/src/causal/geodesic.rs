use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PointGeometry;
use crate::warped::{SpacetimeVector, StaticSpacetime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalCharacter {
    Timelike,
    Null,
    Spacelike,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSample {
    pub param: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub velocity: SpacetimeVector,
    /// `g(γ′, γ′)`
    pub norm: f64,
    /// Lorentzian length from the start (timelike traces only).
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicTrace {
    pub character: CausalCharacter,
    pub step: f64,
    pub requested_span: f64,
    pub samples: Vec<GeodesicSample>,
    /// Why integration stopped early, if it did.
    pub truncated: Option<String>,
    /// `max |g(γ′,γ′) − g(γ′,γ′)₀|`
    pub norm_drift: f64,
}

impl GeodesicTrace {
    pub fn start(&self) -> &GeodesicSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &GeodesicSample {
        self.samples.last().expect("a trace holds its initial point")
    }

    pub fn span(&self) -> f64 {
        self.end().param
    }

    pub fn length(&self) -> f64 {
        self.end().length
    }
}

fn join(t: f64, x: &[f64]) -> Vec<f64> {
    std::iter::once(t).chain(x.iter().copied()).collect()
}

fn inner(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a[i] * g[(i, j)] * b[j];
        }
    }
    acc
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// One classical Runge–Kutta step.
fn rk4<F>(y: &[f64], h: f64, f: &F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * h, &k1))?;
    let k3 = f(&axpy(y, 0.5 * h, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn geodesic_rhs(s: &StaticSpacetime, y: &[f64]) -> Result<Vec<f64>> {
    let n = s.dim();
    let geo = PointGeometry::at(&s.product_metric(), &y[..n])?;
    let u = &y[n..];
    let acc = geo.contract_gamma(u, u);
    Ok(u.iter().copied().chain(acc.into_iter().map(|a| -a)).collect())
}

fn inside(s: &StaticSpacetime, y: &[f64]) -> Option<String> {
    let n = s.dim();
    let (t1, t2) = s.interval();
    if !(y[0] > t1 && y[0] < t2) {
        return Some(format!("left the interval I at t = {}", y[0]));
    }
    if !s.fiber().chart().contains(&y[1..n]) {
        return Some(format!("left the fiber sampling box at {:?}", &y[1..n]));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Some("state became non-finite".into());
    }
    None
}

fn character_of(norm: f64, u: &[f64], g: &DMatrix<f64>) -> CausalCharacter {
    let scale: f64 = (0..u.len()).map(|i| g[(i, i)].abs() * u[i] * u[i]).sum();
    let eps = 1e-12 * (1.0 + scale);
    if norm < -eps {
        CausalCharacter::Timelike
    } else if norm <= eps {
        CausalCharacter::Null
    } else {
        CausalCharacter::Spacelike
    }
}

/// Fixed-step RK4 integration of the geodesic equation on the `(t, x)` chart.
/// Steps are `span / ceil(span / step)`, so the final parameter is `span`
/// unless the curve leaves the sampling box or `I` first.
pub fn integrate_geodesic(s: &StaticSpacetime, t0: f64, p0: &[f64], v0: &SpacetimeVector, span: f64, step: f64) -> Result<GeodesicTrace> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!("step {step} must be positive")));
    }
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::invalid(format!("span {span} must be positive")));
    }
    let n = s.dim();
    if p0.len() != n - 1 || v0.v.len() != n - 1 {
        return Err(Error::invalid(format!("initial point and velocity need {} fiber components", n - 1)));
    }
    let u0 = v0.to_coords();
    if u0.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("initial velocity is zero"));
    }
    let y0: Vec<f64> = join(t0, p0).into_iter().chain(u0.iter().copied()).collect();
    if let Some(why) = inside(s, &y0) {
        return Err(Error::invalid(format!("initial point outside the domain: {why}")));
    }
    let g0 = PointGeometry::at(&s.product_metric(), &y0[..n])?.metric_matrix();
    let norm0 = inner(&g0, &u0, &u0);
    let character = character_of(norm0, &u0, &g0);

    let steps = (span / step - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let sample = |y: &[f64], param: f64, g: &DMatrix<f64>, length: f64| GeodesicSample {
        param,
        t: y[0],
        x: y[1..n].to_vec(),
        velocity: SpacetimeVector::from_coords(&y[n..]),
        norm: inner(g, &y[n..], &y[n..]),
        length,
    };
    let mut samples = vec![sample(&y0, 0.0, &g0, 0.0)];
    let mut y = y0;
    let mut truncated = None;
    let rhs = |y: &[f64]| geodesic_rhs(s, y);
    for k in 1..=steps {
        let next = match rk4(&y, h, &rhs) {
            Ok(v) => v,
            Err(e) => {
                truncated = Some(format!("stopped at parameter {}: {e}", (k - 1) as f64 * h));
                break;
            }
        };
        if let Some(why) = inside(s, &next) {
            truncated = Some(why);
            break;
        }
        let g = match PointGeometry::at(&s.product_metric(), &next[..n]) {
            Ok(geo) => geo.metric_matrix(),
            Err(e) => {
                truncated = Some(e.to_string());
                break;
            }
        };
        let prev = samples.last().expect("nonempty");
        let norm = inner(&g, &next[n..], &next[n..]);
        let length = if character == CausalCharacter::Timelike {
            prev.length + 0.5 * h * ((-prev.norm).max(0.0).sqrt() + (-norm).max(0.0).sqrt())
        } else {
            0.0
        };
        samples.push(sample(&next, k as f64 * h, &g, length));
        y = next;
    }
    let norm_drift = samples.iter().map(|x| (x.norm - norm0).abs()).fold(0.0, f64::max);
    Ok(GeodesicTrace {
        character,
        step: h,
        requested_span: span,
        samples,
        truncated,
        norm_drift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatePoint {
    pub param: f64,
    /// Lorentzian length up to the conjugate point (timelike only).
    pub length: Option<f64>,
    /// Dimension of the space of Jacobi fields vanishing at both ends.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateReport {
    pub character: CausalCharacter,
    /// Number of Jacobi fields in the frame.
    pub fields: usize,
    pub conjugate: Vec<ConjugatePoint>,
    pub integrated_span: f64,
    pub truncated: Option<String>,
    pub search_tol: f64,
    pub notes: Vec<String>,
}

/// Initial Jacobi derivatives spanning the directions transverse to the
/// geodesic, plus the transverse null vector for null geodesics.
fn initial_frame(g: &DMatrix<f64>, u: &[f64], character: CausalCharacter) -> (Vec<Vec<f64>>, Option<Vec<f64>>) {
    let n = u.len();
    let (m, null_partner) = match character {
        CausalCharacter::Timelike => (n - 1, None),
        _ => {
            let mut tdir = vec![0.0; n];
            tdir[0] = 1.0 / (-g[(0, 0)]).sqrt();
            let gut = inner(g, u, &tdir);
            let alpha = -1.0 / gut;
            let beta = -alpha * inner(g, &tdir, &tdir) / (2.0 * gut);
            let partner: Vec<f64> = (0..n).map(|i| alpha * tdir[i] + beta * u[i]).collect();
            (n - 2, Some(partner))
        }
    };
    let project = |e: Vec<f64>| -> Vec<f64> {
        match &null_partner {
            None => {
                let c = inner(g, &e, u) / inner(g, u, u);
                axpy(&e, -c, u)
            }
            Some(nv) => {
                let a = inner(g, &e, nv);
                let b = inner(g, &e, u);
                (0..n).map(|i| e[i] + a * u[i] + b * nv[i]).collect()
            }
        }
    };
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        if frame.len() == m {
            break;
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0 / g[(i, i)].abs().sqrt();
        let mut e = project(e);
        for f in &frame {
            let c = inner(g, &e, f);
            e = axpy(&e, -c, f);
        }
        let norm = inner(g, &e, &e);
        if norm > 1e-8 {
            let k = 1.0 / norm.sqrt();
            frame.push(e.iter().map(|x| x * k).collect());
        }
    }
    (frame, null_partner)
}

struct JacobiSystem<'a> {
    s: &'a StaticSpacetime,
    n: usize,
    m: usize,
    with_partner: bool,
}

impl JacobiSystem<'_> {
    /// State layout: `x, u, (J_a, P_a) for each a, [N]`.
    fn rhs(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let geo = PointGeometry::at(&self.s.product_metric(), &y[..n])?;
        let riemann = geo.riemann();
        let u = &y[n..2 * n];
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(u);
        out.extend(geo.contract_gamma(u, u).into_iter().map(|a| -a));
        for a in 0..self.m {
            let off = 2 * n + 2 * a * n;
            let j = &y[off..off + n];
            let p = &y[off + n..off + 2 * n];
            let gj = geo.contract_gamma(u, j);
            out.extend((0..n).map(|k| p[k] - gj[k]));
            let tidal = riemann.tidal(u, j);
            let gp = geo.contract_gamma(u, p);
            out.extend((0..n).map(|k| -tidal[k] - gp[k]));
        }
        if self.with_partner {
            let off = 2 * n + 2 * self.m * n;
            out.extend(geo.contract_gamma(u, &y[off..off + n]).into_iter().map(|a| -a));
        }
        Ok(out)
    }

    /// Singular values of `[J_1 .. J_m, u, (N)]` divided by the largest,
    /// ascending. The frame degenerates exactly at conjugate points, and the
    /// number of vanishing values is the multiplicity.
    fn spectrum(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut cols: Vec<&[f64]> = (0..self.m).map(|a| &y[2 * n + 2 * a * n..2 * n + 2 * a * n + n]).collect();
        cols.push(&y[n..2 * n]);
        if self.with_partner {
            let off = 2 * n + 2 * self.m * n;
            cols.push(&y[off..off + n]);
        }
        let mut sv: Vec<f64> = DMatrix::from_fn(n, n, |i, c| cols[c][i]).singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        let top = sv.last().copied().unwrap_or(0.0);
        if top > 0.0 && top.is_finite() {
            sv.iter_mut().for_each(|x| *x /= top);
        }
        sv
    }
}

/// Degeneracy ratio below which a refined minimum counts as conjugate.
const DEGENERATE: f64 = 1e-6;
/// Normalized singular values below this count toward the multiplicity.
const VANISHING: f64 = 1e-4;

/// Conjugate points along a causal geodesic.
///
/// The Jacobi frame is integrated with the geodesic's step. Every strict
/// local minimum of the frame's degeneracy ratio `σ_min/σ_max` that sits
/// within one step of a zero is refined by golden-section search on a
/// single RK4 substep of up to two steps and kept if the ratio falls below
/// `1e-6` there. Conjugate points of any multiplicity are found this way.
pub fn jacobi_conjugate(s: &StaticSpacetime, trace: &GeodesicTrace, tol: f64) -> Result<ConjugateReport> {
    if trace.character == CausalCharacter::Spacelike {
        return Err(Error::invalid("conjugate points are searched along causal geodesics only"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("search tolerance {tol} must be positive")));
    }
    let n = s.dim();
    let start = trace.start();
    let x0 = join(start.t, &start.x);
    let u0 = start.velocity.to_coords();
    let g0 = PointGeometry::at(&s.product_metric(), &x0)?.metric_matrix();
    let (frame, partner) = initial_frame(&g0, &u0, trace.character);
    let sys = JacobiSystem {
        s,
        n,
        m: frame.len(),
        with_partner: partner.is_some(),
    };
    let mut y: Vec<f64> = x0.iter().chain(&u0).copied().collect();
    for e in &frame {
        y.extend(std::iter::repeat_n(0.0, n));
        y.extend_from_slice(e);
    }
    if let Some(p) = &partner {
        y.extend_from_slice(p);
    }
    let rhs = |y: &[f64]| sys.rhs(y);
    let ratio = |y: &[f64]| sys.spectrum(y)[0];
    let h = trace.step;
    let steps = trace.samples.len() - 1;
    let mut conjugate = Vec::new();
    let mut notes = Vec::new();
    let mut truncated = trace.truncated.clone();
    let mut integrated = 0.0;
    // States and ratios at steps k-1 and k.
    let mut prev: Option<(Vec<f64>, f64)> = None;
    let mut rho = ratio(&y);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for k in 0..steps {
        let next = match rk4(&y, h, &rhs) {
            Ok(v) => v,
            Err(e) => {
                truncated = Some(format!("Jacobi integration stopped at {}: {e}", k as f64 * h));
                break;
            }
        };
        let rho_next = ratio(&next);
        if let Some((y_prev, rho_prev)) = &prev {
            let local_min = *rho_prev > rho && rho <= rho_next;
            if local_min && rho <= rho_prev.max(rho_next) - rho {
                let f = |sub: f64| -> Result<f64> { Ok(ratio(&rk4(y_prev, sub, &rhs)?)) };
                let (mut a, mut b) = (0.0, 2.0 * h);
                let mut c = b - inv_phi * (b - a);
                let mut d = a + inv_phi * (b - a);
                let (mut fc, mut fd) = (f(c)?, f(d)?);
                while b - a > tol {
                    if fc <= fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - inv_phi * (b - a);
                        fc = f(c)?;
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + inv_phi * (b - a);
                        fd = f(d)?;
                    }
                }
                let sub = 0.5 * (a + b);
                let spec = sys.spectrum(&rk4(y_prev, sub, &rhs)?);
                if spec[0] <= DEGENERATE {
                    let base = &trace.samples[k - 1];
                    let length = (trace.character == CausalCharacter::Timelike)
                        .then(|| base.length + sub * (-base.norm).max(0.0).sqrt());
                    conjugate.push(ConjugatePoint {
                        param: (k - 1) as f64 * h + sub,
                        length,
                        multiplicity: spec.iter().filter(|&&x| x <= VANISHING).count(),
                    });
                }
            }
        }
        prev = Some((std::mem::replace(&mut y, next), rho));
        rho = rho_next;
        integrated = (k + 1) as f64 * h;
    }
    if conjugate.is_empty() {
        notes.push("no degeneracy of the Jacobi frame on the integrated span".into());
    }
    Ok(ConjugateReport {
        character: trace.character,
        fields: frame.len(),
        conjugate,
        integrated_span: integrated,
        truncated,
        search_tol: tol,
        notes,
    })
}
