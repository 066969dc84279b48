use std::fmt;

use super::{BinOp, Expr};

// Binding strength of the printed form; higher binds tighter.
const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => NEG,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => ATOM,
        Expr::Neg(_) => NEG,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Expr::Pow(..) => POW,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_finite() {
        write!(f, "{v}")
    } else if v.is_nan() {
        write!(f, "(0/0)")
    } else if v > 0.0 {
        write!(f, "(1/0)")
    } else {
        write!(f, "(-1/0)")
    }
}

fn write_with(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(v) => write_num(f, *v),
        Expr::Var(v) => write!(f, "{}", v.name),
        Expr::Neg(a) => {
            write!(f, "-")?;
            // `-` followed by a negative literal would lex as `--`, which is
            // still valid; parenthesize anything looser than a power.
            write_with(f, a, POW)
        }
        Expr::Binary(op, a, b) => {
            let (p, sym) = match op {
                BinOp::Add => (ADD, " + "),
                BinOp::Sub => (ADD, " - "),
                BinOp::Mul => (MUL, "*"),
                BinOp::Div => (MUL, "/"),
            };
            write_with(f, a, p)?;
            write!(f, "{sym}")?;
            // right operand of a left-associative operator needs strictly
            // tighter binding, except for the associative ones
            let right_min = match op {
                BinOp::Add => ADD,
                BinOp::Mul => MUL,
                _ => p + 1,
            };
            write_with(f, b, right_min)
        }
        Expr::Pow(a, n) => {
            write_with(f, a, ATOM)?;
            write!(f, "^{n}")
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
