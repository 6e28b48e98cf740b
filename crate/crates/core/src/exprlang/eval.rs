use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable `{}` is not bound", .0.name())]
    Unbound(Var),
    #[error("result of {0} is not finite")]
    NonFinite(String),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    values: [Option<f64>; 5],
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    /// All five variables bound.
    pub fn full(t: f64, u: [f64; 4]) -> Self {
        Self { values: [Some(t), Some(u[0]), Some(u[1]), Some(u[2]), Some(u[3])] }
    }

    pub fn with(mut self, v: Var, x: f64) -> Self {
        self.values[v.index()] = Some(x);
        self
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        self.values[v.index()]
    }
}

fn finite(x: f64, what: &str) -> Result<f64, EvalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite(what.to_string()))
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalError::Domain(format!("negative base {base} raised to non-integer power {exponent}")));
    }
    let r = if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    };
    finite(r, "^")
}

impl Expr {
    /// Evaluates in IEEE double precision; every failure is an error, never a NaN.
    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        match self {
            Expr::Num(x) => Ok(*x),
            Expr::Var(v) => env.get(*v).ok_or(EvalError::Unbound(*v)),
            Expr::Const(c) => Ok(c.value()),
            Expr::Neg(x) => Ok(-x.eval(env)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                match op {
                    BinOp::Add => finite(a + b, "+"),
                    BinOp::Sub => finite(a - b, "-"),
                    BinOp::Mul => finite(a * b, "*"),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            finite(a / b, "/")
                        }
                    }
                    BinOp::Pow => power(a, b),
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].eval(env)?;
                match func {
                    Func::Exp => finite(x.exp(), "exp"),
                    Func::Abs => Ok(x.abs()),
                    Func::Sqrt => {
                        if x < 0.0 {
                            Err(EvalError::Domain(format!("sqrt of negative value {x}")))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    Func::Log => {
                        if x <= 0.0 {
                            Err(EvalError::Domain(format!("log of non-positive value {x}")))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    Func::Pow => power(x, args[1].eval(env)?),
                }
            }
        }
    }

    /// Replaces every variable-free subtree by its value. Subtrees whose
    /// evaluation fails are kept, so the error surfaces at evaluation time.
    pub fn fold_constants(&self) -> Expr {
        if self.variables().is_empty() {
            if let Ok(x) = self.eval(&Env::new()) {
                return Expr::Num(x);
            }
        }
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Const(_) => self.clone(),
            Expr::Neg(x) => Expr::Neg(Box::new(x.fold_constants())),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.fold_constants(), r.fold_constants()),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(Expr::fold_constants).collect()),
        }
    }
}
