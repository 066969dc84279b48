use super::{BinOp, Expr, Func};

impl Expr {
    /// Exact derivative with respect to the coordinate with `index`.
    pub fn derivative(&self, index: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::zero(),
            Expr::Var(v) => {
                if v.index == index {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.derivative(index)),
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.derivative(index), b.derivative(index));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                    BinOp::Div => {
                        // (a/b)' = a'/b - a b'/b^2
                        let first = Expr::div(da, b.clone());
                        let second = Expr::div(Expr::mul(a, db), Expr::powi(b, 2));
                        Expr::sub(first, second)
                    }
                }
            }
            Expr::Pow(a, n) => {
                let da = a.derivative(index);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = Expr::mul(Expr::num(*n as f64), Expr::powi((**a).clone(), n - 1));
                Expr::mul(outer, da)
            }
            Expr::Call(f, a) => {
                let da = a.derivative(index);
                if da.is_zero() {
                    return Expr::zero();
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, u),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, u)),
                    Func::Exp => Expr::call(Func::Exp, u),
                    Func::Ln => return Expr::div(da, u),
                    Func::Sqrt => {
                        return Expr::div(da, Expr::mul(Expr::num(2.0), Expr::call(Func::Sqrt, u)))
                    }
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Derivative with respect to a named coordinate of `chart`.
    pub fn derivative_by_name(&self, name: &str, chart: &[String]) -> Option<Expr> {
        chart
            .iter()
            .position(|c| c == name)
            .map(|i| self.derivative(i))
    }

    /// Symbolic gradient over `dim` coordinates.
    pub fn gradient(&self, dim: usize) -> Vec<Expr> {
        (0..dim).map(|i| self.derivative(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn product_rule_prints_minimal_form() {
        let c = names(&["x", "y", "z"]);
        let d = parse("x*y*z", &c).unwrap().derivative(0);
        assert_eq!(d.to_string(), "y*z");
    }

    #[test]
    fn chain_rule_on_squared_sine() {
        let c = names(&["x"]);
        let d = parse("sin(x)^2", &c).unwrap().derivative(0);
        assert_eq!(d.to_string(), "2*sin(x)*cos(x)");
        let x: f64 = 0.7;
        assert!((d.eval(&[x]).unwrap() - 2.0 * x.sin() * x.cos()).abs() < 1e-15);
    }

    #[test]
    fn constraint_derivative_in_y() {
        let c = names(&["x", "y", "z", "p_x", "p_y", "p_z"]);
        let d = parse("p_x + y*p_z", &c).unwrap().derivative_by_name("y", &c).unwrap();
        assert_eq!(d.to_string(), "p_z");
    }

    #[test]
    fn quotient_log_sqrt_rules() {
        let c = names(&["x"]);
        let cases: [(&str, fn(f64) -> f64); 4] = [
            ("1/x", |x| -1.0 / (x * x)),
            ("ln(x)", |x| 1.0 / x),
            ("sqrt(x)", |x| 0.5 / x.sqrt()),
            ("exp(2*x)*cos(x)", |x| 2.0 * (2.0 * x).exp() * x.cos() - (2.0 * x).exp() * x.sin()),
        ];
        for (src, exact) in cases {
            let d = parse(src, &c).unwrap().derivative(0);
            for x in [0.3, 1.0, 2.5] {
                assert!((d.eval(&[x]).unwrap() - exact(x)).abs() < 1e-12, "{src} at {x}");
            }
        }
    }

    #[test]
    fn constant_derivatives_vanish() {
        let c = names(&["x", "y"]);
        assert!(parse("sin(y)^3 + ln(y)", &c).unwrap().derivative(0).is_zero());
    }
}
