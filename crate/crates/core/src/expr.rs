//! Argument and right-hand-side expressions.
//!
//! Only a small string-valued subset is modelled structurally. Anything else
//! is kept as [`Expr::Dynamic`] with its source text.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    StringLiteral(String),
    VarRef(String),
    Concat(Box<Expr>, Box<Expr>),
    Call { callee: String, args: Vec<Expr> },
    Dynamic(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot decode expression `{text}`: {reason}")]
pub struct ExprDecodeError {
    pub text: String,
    pub reason: String,
}

impl Expr {
    pub fn literal(s: impl Into<String>) -> Self {
        Expr::StringLiteral(s.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::VarRef(name.into())
    }

    pub fn dynamic(text: impl Into<String>) -> Self {
        Expr::Dynamic(text.into())
    }

    pub fn concat(lhs: Expr, rhs: Expr) -> Self {
        Expr::Concat(Box::new(lhs), Box::new(rhs))
    }

    pub fn call(callee: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::Call {
            callee: callee.into(),
            args,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, Expr::Dynamic(_))
    }

    /// Variables read by this expression. Call arguments are included.
    pub fn referenced_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::VarRef(v) => {
                out.insert(v.clone());
            }
            Expr::Concat(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::StringLiteral(_) | Expr::Dynamic(_) => {}
        }
    }

    /// Concat operands in left-to-right order.
    pub fn concat_operands(&self) -> Vec<&Expr> {
        match self {
            Expr::Concat(l, r) => {
                let mut v = l.concat_operands();
                v.extend(r.concat_operands());
                v
            }
            other => vec![other],
        }
    }

    /// Encode as a single flat string, the form used in CSV columns.
    ///
    /// * literal: JSON-quoted string (`"abc"`)
    /// * variable: bare name
    /// * dynamic: `?:` followed by the source text
    /// * concat: `+:` followed by a JSON array of encoded operands
    /// * call: `call:` followed by a JSON array `[callee, encoded args...]`
    pub fn encode(&self) -> String {
        match self {
            Expr::StringLiteral(s) => serde_json::Value::String(s.clone()).to_string(),
            Expr::VarRef(v) => v.clone(),
            Expr::Dynamic(t) => format!("?:{t}"),
            Expr::Concat(..) => {
                let parts: Vec<String> = self.concat_operands().iter().map(|e| e.encode()).collect();
                format!("+:{}", serde_json::to_string(&parts).expect("string vec serializes"))
            }
            Expr::Call { callee, args } => {
                let mut parts = vec![callee.clone()];
                parts.extend(args.iter().map(Expr::encode));
                format!("call:{}", serde_json::to_string(&parts).expect("string vec serializes"))
            }
        }
    }

    pub fn decode(text: &str) -> Result<Expr, ExprDecodeError> {
        let err = |reason: &str| ExprDecodeError {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if let Some(rest) = text.strip_prefix("?:") {
            return Ok(Expr::Dynamic(rest.to_string()));
        }
        if text.starts_with('"') {
            return serde_json::from_str::<String>(text)
                .map(Expr::StringLiteral)
                .map_err(|e| err(&e.to_string()));
        }
        if let Some(rest) = text.strip_prefix("+:") {
            let parts: Vec<String> = serde_json::from_str(rest).map_err(|e| err(&e.to_string()))?;
            if parts.len() < 2 {
                return Err(err("concat needs at least two operands"));
            }
            let mut it = parts.iter().map(|p| Expr::decode(p));
            let first = it.next().expect("len checked")?;
            return it.try_fold(first, |acc, e| Ok(Expr::concat(acc, e?)));
        }
        if let Some(rest) = text.strip_prefix("call:") {
            let parts: Vec<String> = serde_json::from_str(rest).map_err(|e| err(&e.to_string()))?;
            let (callee, args) = parts.split_first().ok_or_else(|| err("call without callee"))?;
            let args = args.iter().map(|a| Expr::decode(a)).collect::<Result<_, _>>()?;
            return Ok(Expr::call(callee.clone(), args));
        }
        if text.is_empty() {
            return Err(err("empty expression"));
        }
        Ok(Expr::VarRef(text.to_string()))
    }

    /// Left-associate a concat tree so that structurally different trees with
    /// the same operand sequence compare equal.
    pub fn normalized(&self) -> Expr {
        match self {
            Expr::Concat(..) => {
                let mut ops = self.concat_operands().into_iter().map(Expr::normalized);
                let first = ops.next().expect("concat has operands");
                ops.fold(first, Expr::concat)
            }
            Expr::Call { callee, args } => Expr::call(callee.clone(), args.iter().map(Expr::normalized).collect()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::StringLiteral(s) => write!(f, "{s:?}"),
            Expr::VarRef(v) => f.write_str(v),
            Expr::Concat(l, r) => write!(f, "{l} + {r}"),
            Expr::Call { callee, args } => {
                write!(f, "{callee}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Dynamic(t) => f.write_str(t),
        }
    }
}

/// Encode an argument list as a JSON array of flat strings.
pub fn encode_args(args: &[Expr]) -> String {
    let flat: Vec<String> = args.iter().map(Expr::encode).collect();
    serde_json::to_string(&flat).expect("string vec serializes")
}

pub fn decode_args(text: &str) -> Result<Vec<Expr>, ExprDecodeError> {
    let flat: Vec<String> = serde_json::from_str(text).map_err(|e| ExprDecodeError {
        text: text.to_string(),
        reason: e.to_string(),
    })?;
    flat.iter().map(|s| Expr::decode(s)).collect()
}
