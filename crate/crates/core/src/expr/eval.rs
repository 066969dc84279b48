use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{function} of negative argument {argument}")]
    Domain {
        function: &'static str,
        argument: f64,
    },
    #[error("point has dimension {found}, expression needs at least {needed}")]
    Dimension { needed: usize, found: usize },
}

/// Non-fatal floating point events raised during evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalFlags {
    pub division_by_zero: bool,
}

impl Expr {
    /// Evaluates at `point`; division by zero follows IEEE semantics.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut flags = EvalFlags::default();
        self.eval_inner(point, &mut flags)
    }

    /// Evaluates and reports whether a division by zero occurred.
    pub fn eval_flagged(&self, point: &[f64]) -> Result<(f64, EvalFlags), EvalError> {
        let mut flags = EvalFlags::default();
        let v = self.eval_inner(point, &mut flags)?;
        Ok((v, flags))
    }

    fn eval_inner(&self, point: &[f64], flags: &mut EvalFlags) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => *point.get(v.index).ok_or(EvalError::Dimension {
                needed: v.index + 1,
                found: point.len(),
            })?,
            Expr::Neg(a) => -a.eval_inner(point, flags)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval_inner(point, flags)?;
                let y = b.eval_inner(point, flags)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            flags.division_by_zero = true;
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, n) => {
                let x = a.eval_inner(point, flags)?;
                if x == 0.0 && *n < 0 {
                    flags.division_by_zero = true;
                }
                x.powi(*n)
            }
            Expr::Call(f, a) => {
                let x = a.eval_inner(point, flags)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x < 0.0 {
                            return Err(EvalError::Domain {
                                function: "ln",
                                argument: x,
                            });
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain {
                                function: "sqrt",
                                argument: x,
                            });
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn arithmetic() {
        let e = parse("x*y*z", &names(&["x", "y", "z"])).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0, 4.0]).unwrap(), 24.0);
    }

    #[test]
    fn free_particle_energy_doubled() {
        let c = names(&["x", "y", "z", "p_x", "p_y", "p_z"]);
        let e = parse("p_x^2 + p_y^2 + p_z^2", &c).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 0.0, 1.0, 2.0, 2.0]).unwrap(), 9.0);
    }

    #[test]
    fn log_and_sqrt_of_negative_are_domain_errors() {
        let c = names(&["x"]);
        let err = parse("ln(x)", &c).unwrap().eval(&[-1.0]).unwrap_err();
        assert!(matches!(err, super::EvalError::Domain { function: "ln", .. }));
        assert!(parse("sqrt(x)", &c).unwrap().eval(&[-4.0]).is_err());
        assert_eq!(parse("sqrt(x)", &c).unwrap().eval(&[4.0]).unwrap(), 2.0);
    }

    #[test]
    fn division_by_zero_is_flagged_not_fatal() {
        let c = names(&["x"]);
        let (v, flags) = parse("1/x", &c).unwrap().eval_flagged(&[0.0]).unwrap();
        assert!(v.is_infinite() && v > 0.0);
        assert!(flags.division_by_zero);
        let (v, flags) = parse("-1/x", &c).unwrap().eval_flagged(&[0.0]).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        assert!(flags.division_by_zero);
        let (_, flags) = parse("x^-1", &c).unwrap().eval_flagged(&[0.0]).unwrap();
        assert!(flags.division_by_zero);
    }

    #[test]
    fn short_point_is_a_dimension_error() {
        let e = parse("y", &names(&["x", "y"])).unwrap();
        assert!(e.eval(&[1.0]).is_err());
    }
}
