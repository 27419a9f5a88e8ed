use nalgebra::DMatrix;

use super::{GeometryError, MetricJet, MetricSource, SymBilinear, VectorJet};
use crate::expr::Jet2;

/// Riemann tensor `R^l_{ijk}` stored as `data[((l*n+i)*n+j)*n+k]`.
///
/// Convention: `R^l_{ijk} = ∂_j Γ^l_{ki} − ∂_k Γ^l_{ji} + Γ^l_{jm} Γ^m_{ki} − Γ^l_{km} Γ^m_{ji}`,
/// so that `Ric_{ik} = R^j_{ijk}` is positive on the round sphere and the
/// Jacobi equation reads `J''^l = −R^l_{ijk} u^i J^j u^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.data[((l * n + i) * n + j) * n + k]
    }

    /// `R(u, J) u` in the form entering the Jacobi equation:
    /// `out^l = R^l_{ijk} u^i J^j u^k`.
    pub fn tidal(&self, u: &[f64], jv: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if jv[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        acc += self.get(l, i, j, k) * u[i] * jv[j] * u[k];
                    }
                }
            }
            *o = acc;
        }
        out
    }

    /// Contraction `Ric_{ik} = R^j_{ijk}` without symmetrisation.
    pub fn contract(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                out[i * n + k] = (0..n).map(|j| self.get(j, i, j, k)).sum();
            }
        }
        out
    }
}

/// Metric, inverse and connection at a single chart point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    point: Vec<f64>,
    jet: MetricJet,
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    /// `gamma[(k*n+i)*n+j] = Γ^k_ij`
    gamma: Vec<f64>,
}

impl PointGeometry {
    pub fn at<M: MetricSource + ?Sized>(source: &M, p: &[f64]) -> Result<Self, GeometryError> {
        let jet = source.metric_jet(p)?;
        Self::from_jet(jet, p)
    }

    pub fn from_jet(jet: MetricJet, p: &[f64]) -> Result<Self, GeometryError> {
        let n = jet.dim;
        let g = DMatrix::from_row_slice(n, n, &jet.g);
        let scale = jet.g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let det = g.determinant();
        let threshold = 1e-12 * scale.powi(n as i32);
        if !(det.abs() > threshold) {
            return Err(GeometryError::Degenerate {
                point: p.to_vec(),
                det,
                threshold,
            });
        }
        let ginv = g.clone().try_inverse().ok_or_else(|| GeometryError::Degenerate {
            point: p.to_vec(),
            det,
            threshold,
        })?;
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += ginv[(k, l)] * first_kind(&jet, l, i, j);
                    }
                    gamma[(k * n + i) * n + j] = 0.5 * acc;
                    gamma[(k * n + j) * n + i] = 0.5 * acc;
                }
            }
        }
        Ok(Self {
            point: p.to_vec(),
            jet,
            g,
            ginv,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.jet.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric_matrix(&self) -> DMatrix<f64> {
        self.g.clone()
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.ginv
    }

    pub fn metric(&self) -> SymBilinear {
        SymBilinear::from_fn("g", self.dim(), |i, j| self.g[(i, j)])
    }

    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * self.g[(i, j)] * w[j];
            }
        }
        acc
    }

    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.g[(i, j)] * v[j]).sum()).collect()
    }

    pub fn christoffel(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.gamma[(k * n + i) * n + j]
    }

    /// `Γ^k_ij a^i b^j` for each `k`.
    pub fn contract_gamma(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += self.gamma(k, i, j) * a[i] * b[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// `∂_m Γ^k_ij` laid out as `[((m*n+k)*n+i)*n+j]`, from `∂g` and `∂²g`.
    pub fn christoffel_derivative(&self) -> Vec<f64> {
        let n = self.dim();
        let jet = &self.jet;
        // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
        let mut dginv = vec![0.0; n * n * n];
        for m in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            acc += self.ginv[(k, a)] * jet.dg[(m * n + a) * n + b] * self.ginv[(b, l)];
                        }
                    }
                    dginv[(m * n + k) * n + l] = -acc;
                }
            }
        }
        let mut out = vec![0.0; n * n * n * n];
        for m in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            acc += dginv[(m * n + k) * n + l] * first_kind(jet, l, i, j)
                                + self.ginv[(k, l)] * first_kind_derivative(jet, m, l, i, j);
                        }
                        out[((m * n + k) * n + i) * n + j] = 0.5 * acc;
                        out[((m * n + k) * n + j) * n + i] = 0.5 * acc;
                    }
                }
            }
        }
        out
    }

    pub fn riemann(&self) -> Riemann {
        let n = self.dim();
        let dgamma = self.christoffel_derivative();
        let dg = |m: usize, k: usize, i: usize, j: usize| dgamma[((m * n + k) * n + i) * n + j];
        let mut data = vec![0.0; n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut r = dg(j, l, k, i) - dg(k, l, j, i);
                        for m in 0..n {
                            r += self.gamma(l, j, m) * self.gamma(m, k, i) - self.gamma(l, k, m) * self.gamma(m, j, i);
                        }
                        data[((l * n + i) * n + j) * n + k] = r;
                    }
                }
            }
        }
        Riemann { dim: n, data }
    }

    pub fn ricci(&self) -> SymBilinear {
        let n = self.dim();
        SymBilinear::symmetrize("Ric", n, &self.riemann().contract())
    }

    pub fn scalar(&self) -> f64 {
        self.ricci().trace_with(&self.ginv)
    }

    /// Index-raised gradient `g^{ij} ∂_j φ` from the partials `dphi`.
    pub fn gradient(&self, dphi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.ginv[(i, j)] * dphi[j]).sum()).collect()
    }

    /// Covariant Hessian `∂_i∂_j φ − Γ^k_ij ∂_k φ`.
    pub fn hessian(&self, phi: &Jet2) -> SymBilinear {
        let n = self.dim();
        SymBilinear::from_fn("H", n, |i, j| {
            let mut h = phi.hess(i, j);
            for k in 0..n {
                h -= self.gamma(k, i, j) * phi.grad()[k];
            }
            h
        })
    }

    pub fn laplacian(&self, phi: &Jet2) -> f64 {
        self.hessian(phi).trace_with(&self.ginv)
    }

    /// `(L_X g)_ij = X^k ∂_k g_ij + g_kj ∂_i X^k + g_ik ∂_j X^k`.
    pub fn lie_metric(&self, x: &VectorJet) -> SymBilinear {
        let n = self.dim();
        let jet = &self.jet;
        SymBilinear::from_fn("L_X g", n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                acc += x.value[k] * jet.dg[(k * n + i) * n + j]
                    + self.g[(k, j)] * x.jac[k * n + i]
                    + self.g[(i, k)] * x.jac[k * n + j];
            }
            acc
        })
    }

    /// Covariant derivative `∇_i X^k = ∂_i X^k + Γ^k_il X^l`, as `[i*n+k]`.
    pub fn covariant_derivative(&self, x: &VectorJet) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let mut acc = x.jac[k * n + i];
                for l in 0..n {
                    acc += self.gamma(k, i, l) * x.value[l];
                }
                out[i * n + k] = acc;
            }
        }
        out
    }

    /// `g(∇_Y X, Z) + g(Y, ∇_Z X)` for coordinate vectors `y`, `z`.
    pub fn lie_metric_covariant(&self, x: &VectorJet, y: &[f64], z: &[f64]) -> f64 {
        let n = self.dim();
        let nabla = self.covariant_derivative(x);
        let along = |v: &[f64]| -> Vec<f64> { (0..n).map(|k| (0..n).map(|i| v[i] * nabla[i * n + k]).sum()).collect() };
        self.inner(&along(y), z) + self.inner(y, &along(z))
    }
}

/// Christoffel symbol of the first kind, `∂_i g_jl + ∂_j g_il − ∂_l g_ij`.
fn first_kind(jet: &MetricJet, l: usize, i: usize, j: usize) -> f64 {
    let n = jet.dim;
    let dg = |k: usize, a: usize, b: usize| jet.dg[(k * n + a) * n + b];
    dg(i, j, l) + dg(j, i, l) - dg(l, i, j)
}

fn first_kind_derivative(jet: &MetricJet, m: usize, l: usize, i: usize, j: usize) -> f64 {
    let n = jet.dim;
    let ddg = |k: usize, q: usize, a: usize, b: usize| jet.ddg[((k * n + q) * n + a) * n + b];
    ddg(m, i, j, l) + ddg(m, j, i, l) - ddg(m, l, i, j)
}
