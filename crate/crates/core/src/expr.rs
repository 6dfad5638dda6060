//! Closed-form expressions extracted from trained models.
//!
//! Rendering uses plain math text (`+ - * / ^`, library function names) and
//! is stable across runs for identical parameters.

use serde::{Deserialize, Serialize};

use crate::util::format_sig;

/// A symbolic expression over input variables `x1..xn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SymbolicExpr {
    Const(f64),
    /// 0-based variable index, rendered as `x1`, `x2`, ...
    Var(usize),
    Add(Vec<SymbolicExpr>),
    Mul(Vec<SymbolicExpr>),
    /// Real-exponent power of a subexpression.
    Pow(Box<SymbolicExpr>, f64),
    /// Named univariate function application, e.g. `sin`, `exp`, `1/x`.
    Func(String, Box<SymbolicExpr>),
}

impl SymbolicExpr {
    pub fn constant(v: f64) -> Self {
        SymbolicExpr::Const(v)
    }

    pub fn var(i: usize) -> Self {
        SymbolicExpr::Var(i)
    }

    /// Flattening sum constructor that drops exact zeros.
    pub fn sum(terms: Vec<SymbolicExpr>) -> Self {
        let mut flat = Vec::new();
        for t in terms {
            match t {
                SymbolicExpr::Add(inner) => flat.extend(inner),
                SymbolicExpr::Const(c) if c == 0.0 => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => SymbolicExpr::Const(0.0),
            1 => flat.pop().unwrap(),
            _ => SymbolicExpr::Add(flat),
        }
    }

    /// Flattening product constructor; zero factors collapse the product.
    pub fn product(factors: Vec<SymbolicExpr>) -> Self {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                SymbolicExpr::Mul(inner) => flat.extend(inner),
                SymbolicExpr::Const(c) if c == 1.0 => {}
                SymbolicExpr::Const(c) if c == 0.0 => return SymbolicExpr::Const(0.0),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => SymbolicExpr::Const(1.0),
            1 => flat.pop().unwrap(),
            _ => SymbolicExpr::Mul(flat),
        }
    }

    pub fn pow(base: SymbolicExpr, exponent: f64) -> Self {
        if exponent == 0.0 {
            SymbolicExpr::Const(1.0)
        } else if exponent == 1.0 {
            base
        } else {
            SymbolicExpr::Pow(Box::new(base), exponent)
        }
    }

    pub fn func(name: impl Into<String>, arg: SymbolicExpr) -> Self {
        SymbolicExpr::Func(name.into(), Box::new(arg))
    }

    /// Affine wrapper `a*x + b` that skips identity pieces.
    pub fn affine(arg: SymbolicExpr, a: f64, b: f64) -> Self {
        let scaled = if a == 1.0 {
            arg
        } else {
            SymbolicExpr::product(vec![SymbolicExpr::Const(a), arg])
        };
        if b == 0.0 {
            scaled
        } else {
            SymbolicExpr::sum(vec![scaled, SymbolicExpr::Const(b)])
        }
    }

    /// Numeric evaluation at a point; variables index into `vars`.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            SymbolicExpr::Const(c) => *c,
            SymbolicExpr::Var(i) => vars.get(*i).copied().unwrap_or(f64::NAN),
            SymbolicExpr::Add(ts) => ts.iter().map(|t| t.eval(vars)).sum(),
            SymbolicExpr::Mul(fs) => fs.iter().map(|f| f.eval(vars)).product(),
            SymbolicExpr::Pow(b, e) => b.eval(vars).powf(*e),
            SymbolicExpr::Func(name, arg) => apply_named(name, arg.eval(vars)),
        }
    }

    pub fn render(&self) -> String {
        self.render_prec(0)
    }

    /// Whether the expression tree contains a function call by this name.
    pub fn contains_func(&self, name: &str) -> bool {
        match self {
            SymbolicExpr::Const(_) | SymbolicExpr::Var(_) => false,
            SymbolicExpr::Add(ts) | SymbolicExpr::Mul(ts) => {
                ts.iter().any(|t| t.contains_func(name))
            }
            SymbolicExpr::Pow(b, _) => b.contains_func(name),
            SymbolicExpr::Func(n, arg) => n == name || arg.contains_func(name),
        }
    }

    // Precedence: 0 sum, 1 product, 2 unary/power operand.
    fn render_prec(&self, prec: u8) -> String {
        match self {
            SymbolicExpr::Const(c) => {
                let s = format_sig(*c, 6);
                if *c < 0.0 && prec > 1 {
                    format!("({s})")
                } else {
                    s
                }
            }
            SymbolicExpr::Var(i) => format!("x{}", i + 1),
            SymbolicExpr::Add(ts) => {
                let mut out = String::new();
                for (k, t) in ts.iter().enumerate() {
                    let s = t.render_prec(1);
                    if k == 0 {
                        out.push_str(&s);
                    } else if let Some(stripped) = s.strip_prefix('-') {
                        out.push_str(" - ");
                        out.push_str(stripped);
                    } else {
                        out.push_str(" + ");
                        out.push_str(&s);
                    }
                }
                if prec > 0 {
                    format!("({out})")
                } else {
                    out
                }
            }
            SymbolicExpr::Mul(fs) => {
                // Let a leading negative coefficient render bare ("-2*x1")
                // so sums can fold it into a subtraction.
                let body = fs
                    .iter()
                    .enumerate()
                    .map(|(k, f)| f.render_prec(if k == 0 { 1 } else { 2 }))
                    .collect::<Vec<_>>()
                    .join("*");
                if prec > 1 {
                    format!("({body})")
                } else {
                    body
                }
            }
            SymbolicExpr::Pow(b, e) => {
                let base = b.render_prec(2);
                let expo = format_sig(*e, 4);
                if expo.starts_with('-') || expo.contains('.') {
                    format!("{base}^({expo})")
                } else {
                    format!("{base}^{expo}")
                }
            }
            SymbolicExpr::Func(name, arg) => match name.as_str() {
                "1/x" => format!("1/({})", arg.render_prec(0)),
                "x^2" => format!("{}^2", arg.render_prec(2)),
                "x^3" => format!("{}^3", arg.render_prec(2)),
                "|x|" => format!("abs({})", arg.render_prec(0)),
                "x" => arg.render_prec(prec),
                "constant" => "1".to_string(),
                _ => format!("{name}({})", arg.render_prec(0)),
            },
        }
    }
}

/// Evaluates a library function by name; names match the symbolic
/// snapping library.
pub fn apply_named(name: &str, x: f64) -> f64 {
    match name {
        "x" => x,
        "x^2" => x * x,
        "x^3" => x * x * x,
        "1/x" => 1.0 / x,
        "sqrt" => x.sqrt(),
        "sin" => x.sin(),
        "cos" => x.cos(),
        "tanh" => x.tanh(),
        "exp" => x.exp(),
        "ln" => x.ln(),
        "|x|" => x.abs(),
        "constant" => 1.0,
        _ => f64::NAN,
    }
}
