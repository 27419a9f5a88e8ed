//! Ready-made fiber metrics on standard charts.
//!
//! Charts avoid their coordinate singularities through the sampling box:
//! the sphere chart stops short of the poles, the half-plane short of
//! `y = 0`.

use std::f64::consts::PI;

use crate::expr::names;
use crate::geometry::{Chart, MetricField};
use crate::Result;

fn diagonal(chart: Chart, diag: &[&str]) -> Result<MetricField> {
    MetricField::from_sources(chart, 0, |i, j| if i == j { diag[i].to_string() } else { "0".into() })
}

/// Flat `ℝ^s` on the box `[-half_width, half_width]^s`.
pub fn euclidean(coords: &[&str], half_width: f64) -> Result<MetricField> {
    let chart = Chart::new(names(coords), vec![(-half_width, half_width); coords.len()], 0.0)?;
    let ones = vec!["1"; coords.len()];
    diagonal(chart, &ones)
}

/// Round unit 2-sphere `dθ² + sin²θ dφ²` in coordinates `(th, ph)`.
pub fn round_sphere(margin: f64) -> Result<MetricField> {
    let chart = Chart::new(names(&["th", "ph"]), vec![(0.0, PI), (-PI, PI)], margin)?;
    diagonal(chart, &["1", "sin(th)^2"])
}

/// Hyperbolic upper half-plane `(dx² + dy²)/y²` on `[-w, w] × [y_lo, y_hi]`.
pub fn half_plane(w: f64, y_lo: f64, y_hi: f64) -> Result<MetricField> {
    let chart = Chart::new(names(&["x", "y"]), vec![(-w, w), (y_lo, y_hi)], 0.0)?;
    diagonal(chart, &["1/y^2", "1/y^2"])
}

/// Round 3-sphere of radius `radius` in stereographic coordinates,
/// `4R²/(1+|x|²)² δ`, sampled on `[-w, w]³`.
pub fn stereographic_s3(radius: f64, w: f64) -> Result<MetricField> {
    let chart = Chart::new(names(&["x", "y", "z"]), vec![(-w, w); 3], 0.0)?;
    let c = format!("4*{radius}^2/(1 + x^2 + y^2 + z^2)^2");
    diagonal(chart, &[&c, &c, &c])
}
