//! Arithmetic expressions over `t, u1..u4` for problem files.
//!
//! Grammar, loosest to tightest: `+ -`, unary `-`, `* /`, `^` (right
//! associative), then atoms: numbers, variables, `pi`, `e`, parenthesized
//! expressions and calls to `exp`, `sqrt`, `abs`, `log`, `pow`.

mod eval;
mod lexer;
mod parser;

use std::fmt;

pub use eval::{Env, EvalError};
pub use parser::{parse, ParseError, ParseErrorKind};

/// The five variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    U1,
    U2,
    U3,
    U4,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::T, Var::U1, Var::U2, Var::U3, Var::U4];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U1 => "u1",
            Var::U2 => "u2",
            Var::U3 => "u3",
            Var::U4 => "u4",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 3,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sqrt,
    Abs,
    Log,
    Pow,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Log => "log",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        [Func::Exp, Func::Sqrt, Func::Abs, Func::Log, Func::Pow].into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Built by [`parse`]; immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

const NEG_PRECEDENCE: u8 = 2;
const ATOM_PRECEDENCE: u8 = 5;

impl Expr {
    pub fn num(x: f64) -> Self {
        Expr::Num(x)
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Whether `v` occurs anywhere in the tree.
    pub fn uses(&self, v: Var) -> bool {
        match self {
            Expr::Var(w) => *w == v,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(x) => x.uses(v),
            Expr::Binary(_, l, r) => l.uses(v) || r.uses(v),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(v)),
        }
    }

    /// Variables occurring in the tree, in canonical order.
    pub fn variables(&self) -> Vec<Var> {
        Var::ALL.into_iter().filter(|&v| self.uses(v)).collect()
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(x) if x.is_sign_negative() => NEG_PRECEDENCE,
            Expr::Num(_) | Expr::Var(_) | Expr::Const(_) | Expr::Call(..) => ATOM_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints with the minimal parentheses needed to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(x) => {
                f.write_str("-")?;
                write_child(f, x, x.precedence() < NEG_PRECEDENCE)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let right_assoc = *op == BinOp::Pow;
                let lp = l.precedence();
                let rp = r.precedence();
                write_child(f, l, lp < p || (right_assoc && lp <= p))?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, rp < p || (!right_assoc && rp <= p))
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            prop::sample::select(Var::ALL.to_vec()).prop_map(Expr::Var),
            prop_oneof![Just(Constant::Pi), Just(Constant::E)].prop_map(Expr::Const),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|x| Expr::Neg(Box::new(x))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                (prop_oneof![Just(Func::Exp), Just(Func::Sqrt), Just(Func::Abs), Just(Func::Log)], inner.clone())
                    .prop_map(|(func, a)| Expr::Call(func, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e, "printed as {}", printed);
            prop_assert_eq!(parse(&reparsed.to_string()).unwrap(), reparsed);
        }
    }

    #[test]
    fn display_is_readable() {
        let e = parse("2/(10+t)^2 + exp(-t)*abs(u1)^0.1").unwrap();
        assert_eq!(e.to_string(), "2.0 / (10.0 + t) ^ 2.0 + exp(-t) * abs(u1) ^ 0.1");
        assert_eq!(parse("(a)").map_err(|e| e.offset), Err(1));
        assert_eq!(parse("-t^2").unwrap().to_string(), "-t ^ 2.0");
        assert_eq!(parse("(-t)^2").unwrap().to_string(), "(-t) ^ 2.0");
        assert_eq!(parse("(2^3)^t").unwrap().to_string(), "(2.0 ^ 3.0) ^ t");
        assert_eq!(parse("1-(2-3)").unwrap().to_string(), "1.0 - (2.0 - 3.0)");
    }

    #[test]
    fn variables_are_collected() {
        let e = parse("u3 + t*u1").unwrap();
        assert_eq!(e.variables(), vec![Var::T, Var::U1, Var::U3]);
        assert!(!e.uses(Var::U2));
    }
}
