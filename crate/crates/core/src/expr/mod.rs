//! Scalar expressions over the coordinates of a chart.
//!
//! Expressions are parsed from a small infix grammar, evaluated in IEEE
//! double precision and differentiated symbolically. Simplification is
//! limited to constant folding and elimination of `0`/`1` identities, so
//! derivative trees stay close to the textbook rules that produced them.
//!
//! Grammar (standard precedence, left associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' int)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' factor
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. Exponents are
//! integer literals and may carry a sign (`x^-2`). The known functions are
//! `sin`, `cos`, `exp`, `ln` and `sqrt`.

mod diff;
mod display;
mod eval;
mod parse;

use std::sync::Arc;

pub use eval::{EvalError, EvalFlags};
pub use parse::{parse, parse_with_params, ParseError, ParseErrorKind, SourceSpan};

/// Elementary functions understood by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A chart coordinate referenced by an expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Var {
    pub index: usize,
    pub name: Arc<str>,
}

/// Expression tree. Children are reference counted so trees can be shared
/// freely between derivative expressions and across threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Call(Func, Arc<Expr>),
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Num(value)
    }

    pub fn var(index: usize, name: impl Into<Arc<str>>) -> Expr {
        Expr::Var(Var {
            index,
            name: name.into(),
        })
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn one() -> Expr {
        Expr::Num(1.0)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) => a.as_num().map(|v| -v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Add, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            _ => Expr::Binary(BinOp::Sub, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Binary(BinOp::Mul, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a,
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Binary(BinOp::Div, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(x) => Expr::Num(-x),
            Expr::Neg(inner) => (*inner).clone(),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn powi(base: Expr, exponent: i32) -> Expr {
        match (exponent, base.as_num()) {
            (0, _) => Expr::one(),
            (1, _) => base,
            (_, Some(x)) => Expr::Num(x.powi(exponent)),
            _ => Expr::Pow(Arc::new(base), exponent),
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        if let Some(x) = arg.as_num() {
            let folded = match func {
                Func::Sin => Some(x.sin()),
                Func::Cos => Some(x.cos()),
                Func::Exp => Some(x.exp()),
                Func::Ln if x > 0.0 => Some(x.ln()),
                Func::Sqrt if x >= 0.0 => Some(x.sqrt()),
                _ => None,
            };
            if let Some(v) = folded {
                return Expr::Num(v);
            }
        }
        Expr::Call(func, Arc::new(arg))
    }

    /// Sum of an iterator of expressions, `0` when empty.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Replaces every variable `i` by `replacements[i]`.
    ///
    /// This is how pullbacks `f ∘ s` are formed symbolically. Panics if a
    /// variable index is out of range of `replacements`.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(v) => replacements[v.index].clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(replacements)),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.substitute(replacements), b.substitute(replacements));
                match op {
                    BinOp::Add => Expr::add(a, b),
                    BinOp::Sub => Expr::sub(a, b),
                    BinOp::Mul => Expr::mul(a, b),
                    BinOp::Div => Expr::div(a, b),
                }
            }
            Expr::Pow(a, n) => Expr::powi(a.substitute(replacements), *n),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(replacements)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(v) => Some(v.index),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var_index(),
            Expr::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// True when the variable with `index` does not occur.
    pub fn is_free_of(&self, index: usize) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(v) => v.index != index,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.is_free_of(index),
            Expr::Binary(_, a, b) => a.is_free_of(index) && b.is_free_of(index),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Num(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    #[test]
    fn identities_are_eliminated() {
        let x = Expr::var(0, "x");
        assert_eq!(Expr::add(Expr::zero(), x.clone()), x);
        assert_eq!(Expr::mul(Expr::one(), x.clone()), x);
        assert!(Expr::mul(Expr::zero(), x.clone()).is_zero());
        assert_eq!(Expr::powi(x.clone(), 1), x);
        assert!(Expr::powi(x.clone(), 0).is_one());
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
        assert_eq!(Expr::add(Expr::num(2.0), Expr::num(3.0)), Expr::num(5.0));
    }

    #[test]
    fn ln_of_negative_literal_is_not_folded() {
        let e = Expr::call(Func::Ln, Expr::num(-1.0));
        assert!(matches!(e, Expr::Call(Func::Ln, _)));
    }

    #[test]
    fn substitution_forms_pullbacks() {
        let e = parse("x*y + z^2", &xyz()).unwrap();
        let s = vec![Expr::num(2.0), Expr::var(0, "u"), Expr::num(3.0)];
        let pulled = e.substitute(&s);
        assert_eq!(pulled.eval(&[5.0]).unwrap(), 2.0 * 5.0 + 9.0);
    }

    #[test]
    fn variable_queries() {
        let e = parse("x + z", &xyz()).unwrap();
        assert_eq!(e.max_var_index(), Some(2));
        assert!(e.is_free_of(1));
        assert!(!e.is_free_of(0));
    }
}
