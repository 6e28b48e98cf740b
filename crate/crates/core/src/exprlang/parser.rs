use thiserror::Error;

use super::lexer::{tokenize, Spanned, Tok};
use super::{BinOp, Constant, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("at byte {offset}: {kind}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("found {found}, expected one of: {}", expected.join(", "))]
    UnexpectedToken { found: String, expected: Vec<&'static str> },
    #[error("unknown identifier `{0}` (variables are t, u1..u4; constants pi, e)")]
    UnknownIdentifier(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{func}` takes {expected} argument(s), got {found}")]
    Arity { func: &'static str, expected: usize, found: usize },
}

const OPERAND: &[&str] = &["number", "identifier", "`-`", "`(`"];
const AFTER_OPERAND: &[&str] = &["`+`", "`-`", "`*`", "`/`", "`^`", "`)`", "`,`", "end of input"];

// Binding powers: (left, right). `^` is right-associative. Unary minus takes
// a product as its operand (`-2*t` is `-(2*t)`) but never reaches past the
// operator that introduced it (`t^-2*3` is `(t^-2)*3`).
const NEG_BP: u8 = 3;

fn infix_bp(tok: &Tok) -> Option<(BinOp, u8, u8)> {
    Some(match tok {
        Tok::Plus => (BinOp::Add, 1, 2),
        Tok::Minus => (BinOp::Sub, 1, 2),
        Tok::Star => (BinOp::Mul, 3, 4),
        Tok::Slash => (BinOp::Div, 3, 4),
        Tok::Caret => (BinOp::Pow, 8, 7),
        _ => return None,
    })
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// Parses an expression; the whole input must be consumed.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokenize(source)?, pos: 0 };
    let e = p.expr(0)?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.unexpected(&["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"])),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind: ParseErrorKind::UnexpectedToken { found: self.peek().describe(), expected: expected.to_vec() },
        }
    }

    fn expect(&mut self, tok: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix(min_bp)?;
        loop {
            let tok = self.peek();
            let Some((op, lbp, rbp)) = infix_bp(tok) else {
                match tok {
                    Tok::RParen | Tok::Comma | Tok::End => break,
                    _ => return Err(self.unexpected(AFTER_OPERAND)),
                }
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.expr(NEG_BP.max(min_bp))?)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, at) = self.bump();
                if *self.peek() == Tok::LParen {
                    self.call(&name, at)
                } else if let Some(v) = Var::from_name(&name) {
                    Ok(Expr::Var(v))
                } else if name == "pi" {
                    Ok(Expr::Const(Constant::Pi))
                } else if name == "e" {
                    Ok(Expr::Const(Constant::E))
                } else if Func::from_name(&name).is_some() {
                    Err(self.unexpected(&["`(`"]))
                } else {
                    Err(ParseError { offset: at, kind: ParseErrorKind::UnknownIdentifier(name) })
                }
            }
            _ => Err(self.unexpected(OPERAND)),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Expr, ParseError> {
        let func = Func::from_name(name)
            .ok_or_else(|| ParseError { offset: at, kind: ParseErrorKind::UnknownFunction(name.to_string()) })?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr(0)?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => break,
                    _ => return Err(self.unexpected(&["`,`", "`)`"])),
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if args.len() != func.arity() {
            return Err(ParseError {
                offset: at,
                kind: ParseErrorKind::Arity { func: func.name(), expected: func.arity(), found: args.len() },
            });
        }
        Ok(Expr::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(x: f64) -> Expr {
        Expr::Num(x)
    }
    fn var(v: Var) -> Expr {
        Expr::Var(v)
    }
    fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::binary(op, l, r)
    }
    fn neg(x: Expr) -> Expr {
        Expr::Neg(Box::new(x))
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse("2/(10+t)^2").unwrap(),
            bin(BinOp::Div, num(2.0), bin(BinOp::Pow, bin(BinOp::Add, num(10.0), var(Var::T)), num(2.0)))
        );
        assert_eq!(parse("-t^2").unwrap(), neg(bin(BinOp::Pow, var(Var::T), num(2.0))));
        assert_eq!(
            parse("exp(-2*t)*abs(u2)^0.3").unwrap(),
            bin(
                BinOp::Mul,
                Expr::Call(Func::Exp, vec![neg(bin(BinOp::Mul, num(2.0), var(Var::T)))]),
                bin(BinOp::Pow, Expr::Call(Func::Abs, vec![var(Var::U2)]), num(0.3))
            )
        );
    }

    #[test]
    fn associativity() {
        assert_eq!(parse("2^3^t").unwrap(), bin(BinOp::Pow, num(2.0), bin(BinOp::Pow, num(3.0), var(Var::T))));
        assert_eq!(parse("1-2-t").unwrap(), bin(BinOp::Sub, bin(BinOp::Sub, num(1.0), num(2.0)), var(Var::T)));
        assert_eq!(parse("t^-2").unwrap(), bin(BinOp::Pow, var(Var::T), neg(num(2.0))));
        assert_eq!(parse("t^-2*3").unwrap(), bin(BinOp::Mul, bin(BinOp::Pow, var(Var::T), neg(num(2.0))), num(3.0)));
        assert_eq!(parse("-t+1").unwrap(), bin(BinOp::Add, neg(var(Var::T)), num(1.0)));
        assert_eq!(parse(" t\t*\n2 ").unwrap(), parse("t*2").unwrap());
    }

    #[test]
    fn constants_and_pow_builtin() {
        assert_eq!(parse("pi").unwrap(), Expr::Const(Constant::Pi));
        assert_eq!(parse("pow(u1, 2)").unwrap(), Expr::Call(Func::Pow, vec![var(Var::U1), num(2.0)]));
    }

    #[test]
    fn syntax_errors_carry_offset_and_expectations() {
        let e = parse("1 + * 2").unwrap_err();
        assert_eq!(e.offset, 4);
        match e.kind {
            ParseErrorKind::UnexpectedToken { expected, .. } => assert!(expected.contains(&"number")),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse("(t + 1").unwrap_err().offset, 6);
        assert_eq!(parse("t 2").unwrap_err().offset, 2);
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("t)").unwrap_err().offset, 1);
    }

    #[test]
    fn unknown_names_and_arity() {
        assert_eq!(
            parse("2*x").unwrap_err(),
            ParseError { offset: 2, kind: ParseErrorKind::UnknownIdentifier("x".into()) }
        );
        assert!(matches!(parse("sin(t)").unwrap_err().kind, ParseErrorKind::UnknownFunction(_)));
        assert!(matches!(parse("pow(t)").unwrap_err().kind, ParseErrorKind::Arity { expected: 2, found: 1, .. }));
        assert!(matches!(parse("exp(t, 1)").unwrap_err().kind, ParseErrorKind::Arity { .. }));
        assert!(parse("exp + 1").is_err());
        assert!(parse("u5").is_err());
    }
}
