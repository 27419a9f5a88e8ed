//! Second-order Taylor jets over a fixed number of chart coordinates.
//!
//! A [`Jet2`] carries a value, its gradient and its (symmetric) matrix of
//! second partial derivatives. Arithmetic on jets applies the first and
//! second order chain rule exactly, so derivatives come out exact to
//! roundoff instead of being approximated by differencing.

use std::fmt;

/// Value, gradient and upper-triangular Hessian of a scalar at a point.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    /// Upper triangle, row-major: (0,0), (0,1), .., (0,n-1), (1,1), ..
    hess: Vec<f64>,
}

#[inline]
fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * dim - i - 1) / 2 + j
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut jet = Self::constant(dim, value);
        jet.grad[index] = 1.0;
        jet
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Second partial derivative with respect to coordinates `i` and `j`.
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[packed_index(self.dim(), i, j)]
    }

    /// Dense row-major copy of the Hessian block.
    pub fn hess_matrix(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.hess(i, j);
            }
        }
        out
    }

    pub fn is_constant(&self) -> bool {
        self.grad.iter().chain(&self.hess).all(|&d| d == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().chain(&self.hess).all(|d| d.is_finite())
    }

    /// Compose with a scalar function `g` given `g(a)`, `g'(a)`, `g''(a)`.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self {
        let n = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|d| g1 * d).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                hess.push(g1 * self.hess[packed_index(n, i, j)] + g2 * self.grad[i] * self.grad[j]);
            }
        }
        Self { value: g0, grad, hess }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            value: k * self.value,
            grad: self.grad.iter().map(|d| k * d).collect(),
            hess: self.hess.iter().map(|d| k * d).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let (a, b) = (self.value, other.value);
        let grad = (0..n).map(|i| a * other.grad[i] + b * self.grad[i]).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                let k = packed_index(n, i, j);
                hess.push(
                    a * other.hess[k]
                        + b * self.hess[k]
                        + self.grad[i] * other.grad[j]
                        + self.grad[j] * other.grad[i],
                );
            }
        }
        Self { value: a * b, grad, hess }
    }

    /// `1 / self`; the caller guarantees a nonzero value.
    pub fn recip(&self) -> Self {
        let v = self.value;
        let r = 1.0 / v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            value: op(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| op(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| op(*a, *b)).collect(),
        }
    }
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("hess", &self.hess_matrix())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_layout_covers_upper_triangle() {
        let n = 4;
        let mut seen = vec![false; n * (n + 1) / 2];
        for i in 0..n {
            for j in i..n {
                let k = packed_index(n, i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(k, packed_index(n, j, i));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn product_rule_second_order() {
        // (x*y) at (2,3): grad (3,2), hess [[0,1],[1,0]]
        let x = Jet2::variable(2, 0, 2.0);
        let y = Jet2::variable(2, 1, 3.0);
        let p = x.mul(&y);
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.grad(), &[3.0, 2.0]);
        assert_eq!(p.hess_matrix(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn recip_matches_hand_derivatives() {
        // 1/x at x=2: -1/4, 2/8
        let x = Jet2::variable(1, 0, 2.0);
        let r = x.recip();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.grad(), &[-0.25]);
        assert_eq!(r.hess(0, 0), 0.25);
    }
}
