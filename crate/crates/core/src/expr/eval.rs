use super::{BinOp, EvalError, Func, Jet2, Node, NodeKind, Params, ScalarExpr};

/// Tree walker shared by plain and jet evaluation. In value mode the jets
/// have zero width, so the derivative bookkeeping is free.
pub(super) struct Evaluator<'a> {
    expr: &'a ScalarExpr,
    point: &'a [f64],
    params: &'a Params,
    width: usize,
}

impl<'a> Evaluator<'a> {
    pub(super) fn values(expr: &'a ScalarExpr, point: &'a [f64], params: &'a Params) -> Self {
        Self {
            expr,
            point,
            params,
            width: 0,
        }
    }

    pub(super) fn jets(expr: &'a ScalarExpr, point: &'a [f64], params: &'a Params) -> Self {
        Self {
            expr,
            point,
            params,
            width: point.len(),
        }
    }

    fn differentiating(&self) -> bool {
        self.width > 0
    }

    fn domain(&self, op: &'static str, detail: impl Into<String>, node: &Node) -> EvalError {
        EvalError::Domain {
            op,
            detail: detail.into(),
            span: node.span,
            snippet: self.expr.snippet(node.span),
        }
    }

    fn kink(&self, op: &'static str, node: &Node) -> EvalError {
        EvalError::Nondifferentiable {
            op,
            span: node.span,
            snippet: self.expr.snippet(node.span),
        }
    }

    pub(super) fn run(&self, node: &Node) -> Result<Jet2, EvalError> {
        let out = match &node.kind {
            NodeKind::Const(v) => Jet2::constant(self.width, *v),
            NodeKind::Coord(i) => {
                if self.differentiating() {
                    Jet2::variable(self.width, *i, self.point[*i])
                } else {
                    Jet2::constant(0, self.point[*i])
                }
            }
            NodeKind::Param(name) => match self.params.get(name) {
                Some(v) => Jet2::constant(self.width, *v),
                None => return Err(EvalError::UnboundParameter(name.clone())),
            },
            NodeKind::Neg(a) => self.run(a)?.neg(),
            NodeKind::Func(f, a) => {
                let arg = self.run(a)?;
                self.apply(*f, &arg, node)?
            }
            NodeKind::Binary(op, a, b) => {
                let lhs = self.run(a)?;
                let rhs = self.run(b)?;
                match op {
                    BinOp::Add => lhs.add(&rhs),
                    BinOp::Sub => lhs.sub(&rhs),
                    BinOp::Mul => lhs.mul(&rhs),
                    BinOp::Div => {
                        if rhs.value() == 0.0 {
                            return Err(self.domain("division", "division by zero", node));
                        }
                        lhs.mul(&rhs.recip())
                    }
                    BinOp::Pow => self.pow(&lhs, &rhs, node)?,
                }
            }
        };
        if !out.is_finite() {
            return Err(EvalError::NonFinite {
                span: node.span,
                snippet: self.expr.snippet(node.span),
            });
        }
        Ok(out)
    }

    fn apply(&self, f: Func, a: &Jet2, node: &Node) -> Result<Jet2, EvalError> {
        let x = a.value();
        Ok(match f {
            Func::Sin => a.chain(x.sin(), x.cos(), -x.sin()),
            Func::Cos => a.chain(x.cos(), -x.sin(), -x.cos()),
            Func::Tan => {
                let t = x.tan();
                let sec2 = 1.0 + t * t;
                a.chain(t, sec2, 2.0 * t * sec2)
            }
            Func::Exp => {
                let e = x.exp();
                a.chain(e, e, e)
            }
            Func::Log => {
                if x <= 0.0 {
                    return Err(self.domain("log", format!("argument {x} is not positive"), node));
                }
                a.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(self.domain("sqrt", format!("argument {x} is negative"), node));
                }
                if x == 0.0 && self.differentiating() {
                    return Err(self.kink("sqrt", node));
                }
                let r = x.sqrt();
                if self.differentiating() {
                    a.chain(r, 0.5 / r, -0.25 / (r * x))
                } else {
                    a.chain(r, 0.0, 0.0)
                }
            }
            Func::Sinh => a.chain(x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => a.chain(x.cosh(), x.sinh(), x.cosh()),
            Func::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                a.chain(t, d, -2.0 * t * d)
            }
            Func::Abs => {
                if x == 0.0 && self.differentiating() && !a.is_constant() {
                    return Err(self.kink("abs", node));
                }
                a.chain(x.abs(), x.signum(), 0.0)
            }
        })
    }

    fn pow(&self, base: &Jet2, exponent: &Jet2, node: &Node) -> Result<Jet2, EvalError> {
        let x = base.value();
        let c = exponent.value();
        if exponent.is_constant() {
            let integral = c.fract() == 0.0 && c.abs() < i32::MAX as f64;
            if integral {
                let k = c as i32;
                if x == 0.0 && k < 0 {
                    return Err(self.domain("power", "zero raised to a negative power", node));
                }
                return Ok(match k {
                    0 => base.chain(1.0, 0.0, 0.0),
                    1 => base.clone(),
                    _ => base.chain(
                        x.powi(k),
                        c * x.powi(k - 1),
                        c * (c - 1.0) * x.powi(k - 2),
                    ),
                });
            }
            if x < 0.0 {
                return Err(self.domain("power", format!("negative base {x} with non-integer exponent {c}"), node));
            }
            if x == 0.0 {
                if c < 0.0 {
                    return Err(self.domain("power", "zero raised to a negative power", node));
                }
                if self.differentiating() && !base.is_constant() && c < 2.0 {
                    return Err(self.kink("power", node));
                }
            }
            return Ok(base.chain(x.powf(c), c * x.powf(c - 1.0), c * (c - 1.0) * x.powf(c - 2.0)));
        }
        // Variable exponent: base^e = exp(e * ln base).
        if x <= 0.0 {
            return Err(self.domain("power", format!("base {x} must be positive for a variable exponent"), node));
        }
        let ln_base = base.chain(x.ln(), 1.0 / x, -1.0 / (x * x));
        let arg = exponent.mul(&ln_base);
        let v = x.powf(c);
        Ok(arg.chain(v, v, v))
    }
}
