//! Expression trees for metric and vector-field components: a small
//! recursive-descent parser, a precedence-aware printer and a generic
//! evaluator.

use crate::error::{Error, Result};
use crate::jet_algebra::Scalar;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            _ => return None,
        })
    }
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }
    fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    /// For `Pow` the right operand is always a numeric literal.
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Identifiers referenced anywhere in the tree.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Ident(s) => out.push(s),
            Expr::Neg(a) => a.collect_idents(out),
            Expr::Bin(_, a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_idents(out)),
        }
    }

    /// Evaluate with identifiers resolved by `lookup`. Domain checks look at
    /// the constant term, so the same code serves plain numbers and jets.
    pub fn eval<T: Scalar>(&self, lookup: &dyn Fn(&str) -> Option<T>) -> Result<T> {
        Ok(match self {
            Expr::Num(v) => T::cst(*v),
            Expr::Ident(s) => lookup(s).ok_or_else(|| Error::UnknownIdentifier {
                name: s.clone(),
                context: "expression".into(),
            })?,
            Expr::Neg(a) => -a.eval(lookup)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(lookup)?;
                match op {
                    BinOp::Add => x + b.eval(lookup)?,
                    BinOp::Sub => x - b.eval(lookup)?,
                    BinOp::Mul => x * b.eval(lookup)?,
                    BinOp::Div => {
                        let y = b.eval(lookup)?;
                        if y.re() == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => match **b {
                        Expr::Num(p) => power(x, p)?,
                        _ => return Err(Error::Domain("non-literal exponent".into())),
                    },
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval(lookup)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x.re() <= 0.0 {
                            return Err(Error::Domain(format!("log of {}", x.re())));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x.re() < 0.0 {
                            return Err(Error::Domain(format!("sqrt of {}", x.re())));
                        }
                        x.sqrt()
                    }
                    Func::Pow => {
                        let p = args[1].eval(lookup)?;
                        if x.re() <= 0.0 {
                            // only constant integer exponents are defined here
                            match args[1] {
                                Expr::Num(q) => power(x, q)?,
                                _ => return Err(Error::Domain(format!("pow with base {}", x.re()))),
                            }
                        } else {
                            (p * x.ln()).exp()
                        }
                    }
                }
            }
        })
    }
}

fn power<T: Scalar>(x: T, p: f64) -> Result<T> {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        if p < 0.0 && x.re() == 0.0 {
            return Err(Error::Domain("negative power of zero".into()));
        }
        return Ok(x.powi(p as i32));
    }
    if x.re() <= 0.0 {
        return Err(Error::Domain(format!("{}^{}", x.re(), p)));
    }
    Ok(x.powf(p))
}

// ---------------------------------------------------------------- printing

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

// binding strength of the top-level construct when printed
fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 => 3,
        Expr::Num(_) | Expr::Ident(_) | Expr::Call(..) => 5,
        Expr::Neg(_) => 3,
        Expr::Bin(op, ..) => op.prec(),
    }
}

fn write_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v < 0.0 {
        write!(f, "-{}", -v)
    } else {
        write!(f, "{v}")
    }
}

fn write_wrapped(e: &Expr, wrap: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if wrap {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Num(v) => write_num(*v, f),
        Expr::Ident(s) => write!(f, "{s}"),
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_wrapped(a, strength(a) < 3, f)
        }
        Expr::Bin(BinOp::Pow, a, b) => {
            write_wrapped(a, strength(a) < 5, f)?;
            write!(f, "^")?;
            match **b {
                Expr::Num(v) => write_num(v, f),
                _ => write_wrapped(b, true, f),
            }
        }
        Expr::Bin(op, a, b) => {
            let p = op.prec();
            write_wrapped(a, strength(a) < p, f)?;
            write!(f, " {} ", op.symbol())?;
            // left-associative: an equal-precedence right operand needs parentheses
            write_wrapped(b, strength(b) <= p, f)
        }
        Expr::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_expr(a, f)?;
            }
            write!(f, ")")
        }
    }
}

// ----------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &str) -> Result<Lexer> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
                expected: vec!["number".into()],
            })?;
            toks.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or(c);
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                        expected: operand_set(),
                    });
                }
            };
            toks.push((t, start));
            i += 1;
        }
    }
    toks.push((Tok::End, src.len()));
    Ok(Lexer { toks })
}

fn operand_set() -> Vec<String> {
    ["number", "identifier", "(", "-"].iter().map(|s| s.to_string()).collect()
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }
    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn fail<T>(&self, message: &str, expected: Vec<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.to_string(), expected })
    }
    fn expect(&mut self, t: Tok, name: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("unexpected {}", describe(self.peek())), vec![name.to_string()])
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        while *self.peek() == Tok::Op('^') {
            self.bump();
            let neg = if *self.peek() == Tok::Op('-') {
                self.bump();
                true
            } else {
                false
            };
            match self.bump() {
                Tok::Num(v) => {
                    let p = if neg { -v } else { v };
                    base = Expr::bin(BinOp::Pow, base, Expr::Num(p));
                }
                _ => {
                    self.pos -= 1;
                    return self.fail("exponent must be a numeric literal", vec!["number".into()]);
                }
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Ident(name));
                }
                let func = Func::from_name(&name).ok_or(Error::UnknownFunction { name: name.clone(), offset })?;
                self.bump();
                let mut args = vec![self.sum()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.sum()?);
                }
                if args.len() != func.arity() {
                    return Err(Error::Syntax {
                        offset,
                        message: format!("{} takes {} argument(s), got {}", name, func.arity(), args.len()),
                        expected: vec![],
                    });
                }
                self.expect(Tok::RParen, ")")?;
                Ok(Expr::Call(func, args))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect(Tok::RParen, ")")?;
                Ok(e)
            }
            t => self.fail(&format!("unexpected {}", describe(&t)), operand_set()),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parse a component expression. Precedence: `^` > unary `-` > `* /` > `+ -`.
pub fn parse_expression(src: &str) -> Result<Expr> {
    if src.trim().is_empty() {
        return Err(Error::Syntax { offset: 0, message: "empty expression".into(), expected: operand_set() });
    }
    let lexer = lex(src)?;
    let mut p = Parser { toks: lexer.toks, pos: 0 };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        let msg = format!("unexpected {}", describe(p.peek()));
        return p.fail(&msg, ["+", "-", "*", "/", "^", "end of input"].iter().map(|s| s.to_string()).collect());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> Expr {
        Expr::Ident(s.into())
    }
    fn n(v: f64) -> Expr {
        Expr::Num(v)
    }

    #[test]
    fn schwarzschild_g00() {
        let e = parse_expression("-(1-2*M/r)").unwrap();
        let want = Expr::Neg(Box::new(Expr::bin(
            BinOp::Sub,
            n(1.0),
            Expr::bin(BinOp::Div, Expr::bin(BinOp::Mul, n(2.0), id("M")), id("r")),
        )));
        assert_eq!(e, want);
    }

    #[test]
    fn powers_bind_tightest() {
        let e = parse_expression("r^2*sin(theta)^2").unwrap();
        let want = Expr::bin(
            BinOp::Mul,
            Expr::bin(BinOp::Pow, id("r"), n(2.0)),
            Expr::bin(BinOp::Pow, Expr::Call(Func::Sin, vec![id("theta")]), n(2.0)),
        );
        assert_eq!(e, want);
        // unary minus binds looser than ^
        assert_eq!(
            parse_expression("-x^2").unwrap(),
            Expr::Neg(Box::new(Expr::bin(BinOp::Pow, id("x"), n(2.0))))
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_expression("2*+3") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expression("(1+2"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("x^y"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression(""), Err(Error::Syntax { .. })));
        assert_eq!(
            parse_expression("1 + tan(x)"),
            Err(Error::UnknownFunction { name: "tan".into(), offset: 4 })
        );
    }

    #[test]
    fn left_associative() {
        let e = parse_expression("a-b-c").unwrap();
        assert_eq!(e, Expr::bin(BinOp::Sub, Expr::bin(BinOp::Sub, id("a"), id("b")), id("c")));
        assert_eq!(e.to_string(), "a - b - c");
        let e = parse_expression("a-(b-c)").unwrap();
        assert_eq!(e.to_string(), "a - (b - c)");
    }

    #[test]
    fn evaluates() {
        let e = parse_expression("pow(x, 3) + sqrt(4) * exp(0) - log(1) + x^-1").unwrap();
        let v: f64 = e.eval(&|s| (s == "x").then_some(2.0)).unwrap();
        assert!((v - (8.0 + 2.0 + 0.5)).abs() < 1e-14);
        let e = parse_expression("sqrt(x)").unwrap();
        assert!(matches!(e.eval::<f64>(&|_| Some(-1.0)), Err(Error::Domain(_))));
        let e = parse_expression("y").unwrap();
        assert!(matches!(e.eval::<f64>(&|_| None), Err(Error::UnknownIdentifier { .. })));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
            prop_oneof![Just("x"), Just("y"), Just("M")].prop_map(|s| Expr::Ident(s.to_string())),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::bin(op, a, b)
                }),
                (inner.clone(), -3i32..4).prop_map(|(a, p)| Expr::bin(BinOp::Pow, a, Expr::Num(p as f64))),
                (inner.clone(), 0usize..5).prop_map(|(a, k)| {
                    let f = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt][k];
                    Expr::Call(f, vec![a])
                }),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
