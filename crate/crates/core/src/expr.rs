//! The small expression language used by invariants, guards, and effects.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::syntax::{Cursor, Tok};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Enum(s) => f.write_str(s),
        }
    }
}

impl Value {
    pub fn parse(c: &mut Cursor) -> Result<Value> {
        if c.eat_kw("true") {
            return Ok(Value::Bool(true));
        }
        if c.eat_kw("false") {
            return Ok(Value::Bool(false));
        }
        if matches!(c.peek(), Some(Tok::Int(_))) || c.is_punct("-") {
            return Ok(Value::Int(c.expect_int()?));
        }
        Ok(Value::Enum(c.expect_ident()?))
    }
}

/// Attribute and parameter types. All are finite so that bounded search terminates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Type {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum(Vec<String>),
}

impl Type {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Type::Bool, Value::Bool(_)) => true,
            (Type::Int { lo, hi }, Value::Int(x)) => lo <= x && x <= hi,
            (Type::Enum(lits), Value::Enum(l)) => lits.contains(l),
            _ => false,
        }
    }

    /// Every value of the type in ascending order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Type::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Type::Enum(lits) => lits.iter().cloned().map(Value::Enum).collect(),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Type::Bool => Kind::Bool,
            Type::Int { .. } => Kind::Int,
            Type::Enum(_) => Kind::Enum,
        }
    }

    pub fn parse(c: &mut Cursor) -> Result<Type> {
        let (line, col) = c.loc();
        let name = c.expect_ident()?;
        match name.as_str() {
            "Bool" => Ok(Type::Bool),
            "Int" => {
                let lo = c.expect_int()?;
                c.expect_punct("..")?;
                let hi = c.expect_int()?;
                if lo > hi {
                    return Err(Error::at(line, col, format!("empty integer range {lo}..{hi}")));
                }
                Ok(Type::Int { lo, hi })
            }
            "Enum" => {
                c.expect_punct("(")?;
                let mut lits = vec![c.expect_ident()?];
                while c.eat_punct(",") {
                    lits.push(c.expect_ident()?);
                }
                c.expect_punct(")")?;
                let unique: BTreeSet<_> = lits.iter().collect();
                if unique.len() != lits.len() {
                    return Err(Error::at(line, col, "duplicate enumeration literal"));
                }
                Ok(Type::Enum(lits))
            }
            other => Err(Error::at(line, col, format!("unknown type '{other}'"))),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("Bool"),
            Type::Int { lo, hi } => write!(f, "Int {lo}..{hi}"),
            Type::Enum(lits) => write!(f, "Enum({})", lits.join(", ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Bool,
    Int,
    Enum,
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Bool(_) => Kind::Bool,
            Value::Int(_) => Kind::Int,
            Value::Enum(_) => Kind::Enum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    And,
    Or,
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Lit(Value),
    /// `self.name`
    Attr(String),
    /// A parameter or bound variable.
    Var(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Name lookup used during evaluation.
pub trait Scope {
    fn attr(&self, name: &str) -> Option<Value>;
    fn var(&self, name: &str) -> Option<Value>;
}

impl Expr {
    pub fn parse(c: &mut Cursor) -> Result<Expr> {
        parse_binary(c, 1)
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn eval(&self, scope: &dyn Scope) -> Result<Value> {
        match self {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Attr(a) => scope
                .attr(a)
                .ok_or_else(|| Error::Eval(format!("unbound attribute 'self.{a}'"))),
            Expr::Var(v) => scope
                .var(v)
                .ok_or_else(|| Error::Eval(format!("unbound name '{v}'"))),
            Expr::Not(e) => match e.eval(scope)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                other => Err(Error::Eval(format!("'!' applied to non-Boolean {other}"))),
            },
            Expr::Neg(e) => match e.eval(scope)? {
                Value::Int(v) => Ok(Value::Int(-v)),
                other => Err(Error::Eval(format!("'-' applied to non-integer {other}"))),
            },
            Expr::Bin(op, l, r) => {
                let lv = l.eval(scope)?;
                // short-circuit keeps guards like `x != 0 && ...` cheap
                match (op, &lv) {
                    (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                    (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                    _ => {}
                }
                let rv = r.eval(scope)?;
                apply(*op, lv, rv)
            }
        }
    }

    /// Visits every attribute name read by the expression.
    pub fn attrs(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Attr(a) => {
                out.insert(a.clone());
            }
            Expr::Not(e) | Expr::Neg(e) => e.attrs(out),
            Expr::Bin(_, l, r) => {
                l.attrs(out);
                r.attrs(out);
            }
            Expr::Lit(_) | Expr::Var(_) => {}
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Not(e) | Expr::Neg(e) => e.vars(out),
            Expr::Bin(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
            Expr::Lit(_) | Expr::Attr(_) => {}
        }
    }

    /// Rewrites attribute names through `f`.
    pub fn rename_attrs(&self, f: &dyn Fn(&str) -> Option<String>) -> Result<Expr> {
        Ok(match self {
            Expr::Attr(a) => {
                Expr::Attr(f(a).ok_or_else(|| Error::Unresolved(format!("attribute '{a}'")))?)
            }
            Expr::Not(e) => Expr::Not(Box::new(e.rename_attrs(f)?)),
            Expr::Neg(e) => Expr::Neg(Box::new(e.rename_attrs(f)?)),
            Expr::Bin(op, l, r) => Expr::bin(*op, l.rename_attrs(f)?, r.rename_attrs(f)?),
            other => other.clone(),
        })
    }

    /// Turns bare names that are not variables into enumeration literals when
    /// `literals` knows them.
    pub fn resolve_names(
        self,
        is_var: &dyn Fn(&str) -> bool,
        literals: &BTreeSet<String>,
    ) -> Result<Expr> {
        Ok(match self {
            Expr::Var(v) if !is_var(&v) => {
                if literals.contains(&v) {
                    Expr::Lit(Value::Enum(v))
                } else {
                    return Err(Error::Unresolved(format!("name '{v}'")));
                }
            }
            Expr::Not(e) => Expr::Not(Box::new(e.resolve_names(is_var, literals)?)),
            Expr::Neg(e) => Expr::Neg(Box::new(e.resolve_names(is_var, literals)?)),
            Expr::Bin(op, l, r) => Expr::bin(
                op,
                l.resolve_names(is_var, literals)?,
                r.resolve_names(is_var, literals)?,
            ),
            other => other,
        })
    }

    /// Computes the kind of the expression, or explains why it is ill-typed.
    pub fn kind_of(
        &self,
        attr: &dyn Fn(&str) -> Option<Type>,
        var: &dyn Fn(&str) -> Option<Type>,
    ) -> Result<Kind> {
        match self {
            Expr::Lit(v) => Ok(v.kind()),
            Expr::Attr(a) => attr(a)
                .map(|t| t.kind())
                .ok_or_else(|| Error::Unresolved(format!("attribute 'self.{a}'"))),
            Expr::Var(v) => var(v)
                .map(|t| t.kind())
                .ok_or_else(|| Error::Unresolved(format!("name '{v}'"))),
            Expr::Not(e) => expect_kind(e.kind_of(attr, var)?, Kind::Bool, "!").map(|_| Kind::Bool),
            Expr::Neg(e) => expect_kind(e.kind_of(attr, var)?, Kind::Int, "-").map(|_| Kind::Int),
            Expr::Bin(op, l, r) => {
                let lk = l.kind_of(attr, var)?;
                let rk = r.kind_of(attr, var)?;
                match op {
                    BinOp::And | BinOp::Or => {
                        expect_kind(lk, Kind::Bool, op.symbol())?;
                        expect_kind(rk, Kind::Bool, op.symbol())?;
                        Ok(Kind::Bool)
                    }
                    BinOp::Add | BinOp::Sub => {
                        expect_kind(lk, Kind::Int, op.symbol())?;
                        expect_kind(rk, Kind::Int, op.symbol())?;
                        Ok(Kind::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        expect_kind(lk, Kind::Int, op.symbol())?;
                        expect_kind(rk, Kind::Int, op.symbol())?;
                        Ok(Kind::Bool)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if lk != rk {
                            return Err(Error::Typing(format!(
                                "operands of '{}' have different types",
                                op.symbol()
                            )));
                        }
                        Ok(Kind::Bool)
                    }
                }
            }
        }
    }
}

fn expect_kind(got: Kind, want: Kind, op: &str) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::Typing(format!("operand of '{op}' must be {want:?}, found {got:?}")))
    }
}

fn apply(op: BinOp, l: Value, r: Value) -> Result<Value> {
    use Value::*;
    Ok(match (op, l, r) {
        (BinOp::And, Bool(a), Bool(b)) => Bool(a && b),
        (BinOp::Or, Bool(a), Bool(b)) => Bool(a || b),
        (BinOp::Add, Int(a), Int(b)) => Int(a
            .checked_add(b)
            .ok_or_else(|| Error::Eval("integer overflow".into()))?),
        (BinOp::Sub, Int(a), Int(b)) => Int(a
            .checked_sub(b)
            .ok_or_else(|| Error::Eval("integer overflow".into()))?),
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        (BinOp::Eq, a, b) if a.kind() == b.kind() => Bool(a == b),
        (BinOp::Ne, a, b) if a.kind() == b.kind() => Bool(a != b),
        (op, a, b) => {
            return Err(Error::Eval(format!(
                "type mismatch: {a} {} {b}",
                op.symbol()
            )))
        }
    })
}

fn peek_binop(c: &Cursor) -> Option<BinOp> {
    match c.peek()? {
        Tok::Punct("&&") => Some(BinOp::And),
        Tok::Punct("||") => Some(BinOp::Or),
        Tok::Punct("+") => Some(BinOp::Add),
        Tok::Punct("-") => Some(BinOp::Sub),
        Tok::Punct("==") => Some(BinOp::Eq),
        Tok::Punct("!=") => Some(BinOp::Ne),
        Tok::Punct("<") => Some(BinOp::Lt),
        Tok::Punct("<=") => Some(BinOp::Le),
        Tok::Punct(">") => Some(BinOp::Gt),
        Tok::Punct(">=") => Some(BinOp::Ge),
        Tok::Ident(s) if s == "and" => Some(BinOp::And),
        Tok::Ident(s) if s == "or" => Some(BinOp::Or),
        _ => None,
    }
}

fn parse_binary(c: &mut Cursor, min_prec: u8) -> Result<Expr> {
    let mut lhs = parse_unary(c)?;
    while let Some(op) = peek_binop(c) {
        let prec = op.precedence();
        if prec < min_prec {
            break;
        }
        c.bump();
        let rhs = parse_binary(c, prec + 1)?;
        lhs = Expr::bin(op, lhs, rhs);
    }
    Ok(lhs)
}

fn parse_unary(c: &mut Cursor) -> Result<Expr> {
    if c.eat_punct("!") || c.eat_kw("not") {
        return Ok(Expr::Not(Box::new(parse_unary(c)?)));
    }
    if c.is_punct("-") {
        c.bump();
        if let Some(Tok::Int(v)) = c.peek() {
            let v = *v;
            c.bump();
            return Ok(Expr::Lit(Value::Int(-v)));
        }
        return Ok(Expr::Neg(Box::new(parse_unary(c)?)));
    }
    parse_primary(c)
}

fn parse_primary(c: &mut Cursor) -> Result<Expr> {
    if c.eat_punct("(") {
        let e = Expr::parse(c)?;
        c.expect_punct(")")?;
        return Ok(e);
    }
    match c.peek() {
        Some(Tok::Int(v)) => {
            let v = *v;
            c.bump();
            Ok(Expr::Lit(Value::Int(v)))
        }
        Some(Tok::Ident(s)) if s == "true" => {
            c.bump();
            Ok(Expr::Lit(Value::Bool(true)))
        }
        Some(Tok::Ident(s)) if s == "false" => {
            c.bump();
            Ok(Expr::Lit(Value::Bool(false)))
        }
        Some(Tok::Ident(s)) if s == "self" => {
            c.bump();
            c.expect_punct(".")?;
            Ok(Expr::Attr(c.expect_ident()?))
        }
        Some(Tok::Ident(_)) => Ok(Expr::Var(c.expect_ident()?)),
        _ => Err(c.unexpected()),
    }
}

fn fmt_prec(e: &Expr, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
    match e {
        Expr::Lit(v) => write!(f, "{v}"),
        Expr::Attr(a) => write!(f, "self.{a}"),
        Expr::Var(v) => f.write_str(v),
        Expr::Not(inner) => {
            f.write_str("!")?;
            fmt_prec(inner, f, 10)
        }
        Expr::Neg(inner) => {
            f.write_str("-")?;
            fmt_prec(inner, f, 10)
        }
        Expr::Bin(op, l, r) => {
            let p = op.precedence();
            if p < ctx {
                f.write_str("(")?;
            }
            fmt_prec(l, f, p)?;
            write!(f, " {} ", op.symbol())?;
            fmt_prec(r, f, p + 1)?;
            if p < ctx {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    struct Env {
        attrs: BTreeMap<String, Value>,
        vars: BTreeMap<String, Value>,
    }

    impl Scope for Env {
        fn attr(&self, name: &str) -> Option<Value> {
            self.attrs.get(name).cloned()
        }
        fn var(&self, name: &str) -> Option<Value> {
            self.vars.get(name).cloned()
        }
    }

    fn parse(s: &str) -> Expr {
        let mut c = Cursor::new(s).unwrap();
        let e = Expr::parse(&mut c).unwrap();
        c.expect_end().unwrap();
        e
    }

    fn env(attrs: &[(&str, Value)], vars: &[(&str, Value)]) -> Env {
        Env {
            attrs: attrs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            vars: vars.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    #[test]
    fn constant_true() {
        assert_eq!(parse("true").eval(&env(&[], &[])).unwrap(), Value::Bool(true));
    }

    #[test]
    fn attribute_arithmetic() {
        let e = env(&[("trials", Value::Int(2))], &[]);
        assert_eq!(parse("self.trials + 1").eval(&e).unwrap(), Value::Int(3));
    }

    #[test]
    fn parameter_comparison() {
        let e = env(&[("pin", Value::Int(4))], &[("p", Value::Int(4))]);
        assert_eq!(parse("p == self.pin").eval(&e).unwrap(), Value::Bool(true));
    }

    #[test]
    fn unbound_name_is_an_error() {
        assert!(parse("q").eval(&env(&[], &[])).is_err());
    }

    #[test]
    fn precedence_and_printing() {
        let e = parse("self.a && !self.b || self.c == 1 + 2");
        assert_eq!(e.to_string(), "self.a && !self.b || self.c == 1 + 2");
        let e = parse("(self.a || self.b) && self.c");
        assert_eq!(e.to_string(), "(self.a || self.b) && self.c");
        let reparsed = parse(&e.to_string());
        assert_eq!(reparsed, e);
    }

    #[test]
    fn kind_checking() {
        let e = parse("self.b && self.x");
        let attr = |n: &str| match n {
            "b" => Some(Type::Bool),
            "x" => Some(Type::Int { lo: 0, hi: 1 }),
            _ => None,
        };
        assert!(e.kind_of(&attr, &|_| None).is_err());
        assert_eq!(parse("self.x + 1 > 0").kind_of(&attr, &|_| None).unwrap(), Kind::Bool);
    }

    #[test]
    fn out_of_range_values_allowed_inside_expressions() {
        let e = env(&[("trials", Value::Int(3))], &[]);
        assert_eq!(parse("self.trials + 5").eval(&e).unwrap(), Value::Int(8));
    }
}
