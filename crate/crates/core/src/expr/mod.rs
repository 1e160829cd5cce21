//! Analytic coefficient expressions.
//!
//! Sources are ordinary infix text over exactly three chart variables and
//! any number of named parameters, e.g. `r^2 - 2*M*r + a^2*cos(theta)^2`.
//! Precedence from tightest: function call, `^` (right associative),
//! unary minus, `*` `/`, `+` `-`. `pi` is a built-in constant unless it
//! is declared as a symbol. Supported functions are `sin`, `cos`, `exp`,
//! `log` (natural), `sqrt` and `abs`.
//!
//! Evaluation is generic over [`Scalar`], so the same tree yields plain
//! values or full second-order jets.

mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::{Jet2, Scalar};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("undeclared symbol `{name}` at line {line}, column {column}")]
    UndeclaredSymbol { name: String, line: usize, column: usize },
    #[error("invalid declaration: {0}")]
    Declaration(String),
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: &'static str },
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
    #[error("unknown parameter `{0}` supplied")]
    UnknownParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
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
            Func::Abs => "abs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Param(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression together with its symbol table.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
    variables: [String; 3],
    parameters: Vec<String>,
}

/// Parse `source` over the given chart variables and parameter names.
pub fn parse(
    source: &str,
    variables: &[&str],
    parameters: &[&str],
) -> Result<Expression, ParseError> {
    Expression::parse(source, variables, parameters)
}

impl Expression {
    pub fn parse(
        source: &str,
        variables: &[&str],
        parameters: &[&str],
    ) -> Result<Self, ParseError> {
        if variables.len() != 3 {
            return Err(ParseError::Declaration(format!(
                "exactly 3 chart variables are required, got {}",
                variables.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in variables.iter().chain(parameters) {
            if !is_identifier(name) {
                return Err(ParseError::Declaration(format!("`{name}` is not an identifier")));
            }
            if Func::from_name(name).is_some() {
                return Err(ParseError::Declaration(format!("`{name}` is a function name")));
            }
            if !seen.insert(*name) {
                return Err(ParseError::Declaration(format!("`{name}` declared twice")));
            }
        }
        let tokens = lexer::tokenize(source)?;
        let root = parser::Parser::new(&tokens, variables, parameters).parse()?;
        Ok(Self {
            root,
            variables: [variables[0].to_string(), variables[1].to_string(), variables[2].to_string()],
            parameters: parameters.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String; 3] {
        &self.variables
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    /// Names of the variables and parameters that actually occur.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_symbols(&self.root, self, &mut out);
        out
    }

    /// Resolve parameter values by name. Every declared parameter must be
    /// bound; names that were never declared are rejected.
    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<BoundExpression, EvalError> {
        for key in params.keys() {
            if !self.parameters.contains(key) {
                return Err(EvalError::UnknownParameter(key.clone()));
            }
        }
        let values = self
            .parameters
            .iter()
            .map(|p| params.get(p).copied().ok_or_else(|| EvalError::UnboundParameter(p.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundExpression { expr: Arc::new(self.clone()), values })
    }

    pub fn eval(&self, point: [f64; 3], params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        self.bind(params)?.eval(point)
    }

    pub fn eval_jet2(
        &self,
        point: [f64; 3],
        params: &BTreeMap<String, f64>,
    ) -> Result<Jet2, EvalError> {
        self.bind(params)?.eval_jet2(point)
    }

    fn write_node(&self, node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match node {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(i) => f.write_str(&self.variables[*i]),
            Node::Param(i) => f.write_str(&self.parameters[*i]),
            Node::Neg(a) => {
                f.write_str("(-")?;
                self.write_node(a, f)?;
                f.write_str(")")
            }
            Node::Binary(op, a, b) => {
                f.write_str("(")?;
                self.write_node(a, f)?;
                write!(f, " {} ", op.symbol())?;
                self.write_node(b, f)?;
                f.write_str(")")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write_node(a, f)?;
                f.write_str(")")
            }
        }
    }

    fn node_text(&self, node: &Node) -> String {
        struct Show<'a>(&'a Expression, &'a Node);
        impl fmt::Display for Show<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write_node(self.1, f)
            }
        }
        Show(self, node).to_string()
    }
}

/// Fully parenthesised form; re-parses to an identical tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(&self.root, f)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn collect_symbols(node: &Node, expr: &Expression, out: &mut BTreeSet<String>) {
    match node {
        Node::Const(_) => {}
        Node::Var(i) => {
            out.insert(expr.variables[*i].clone());
        }
        Node::Param(i) => {
            out.insert(expr.parameters[*i].clone());
        }
        Node::Neg(a) | Node::Call(_, a) => collect_symbols(a, expr, out),
        Node::Binary(_, a, b) => {
            collect_symbols(a, expr, out);
            collect_symbols(b, expr, out);
        }
    }
}

/// An expression with every parameter resolved to a number.
#[derive(Clone, Debug)]
pub struct BoundExpression {
    expr: Arc<Expression>,
    values: Vec<f64>,
}

impl BoundExpression {
    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn eval(&self, point: [f64; 3]) -> Result<f64, EvalError> {
        self.eval_scalar::<f64>(point)
    }

    pub fn eval_jet2(&self, point: [f64; 3]) -> Result<Jet2, EvalError> {
        self.eval_scalar::<Jet2>(point)
    }

    pub fn eval_scalar<T: Scalar>(&self, point: [f64; 3]) -> Result<T, EvalError> {
        let vars = [
            T::coordinate(point, 0),
            T::coordinate(point, 1),
            T::coordinate(point, 2),
        ];
        self.eval_node(&self.expr.root, &vars)
    }

    fn domain(&self, node: &Node, reason: &'static str) -> EvalError {
        EvalError::Domain { node: self.expr.node_text(node), reason }
    }

    fn eval_node<T: Scalar>(&self, node: &Node, vars: &[T; 3]) -> Result<T, EvalError> {
        Ok(match node {
            Node::Const(c) => T::constant(*c),
            Node::Var(i) => vars[*i],
            Node::Param(i) => T::constant(self.values[*i]),
            Node::Neg(a) => -self.eval_node(a, vars)?,
            Node::Binary(op, a, b) => {
                let x = self.eval_node(a, vars)?;
                match op {
                    BinOp::Add => x + self.eval_node(b, vars)?,
                    BinOp::Sub => x - self.eval_node(b, vars)?,
                    BinOp::Mul => x * self.eval_node(b, vars)?,
                    BinOp::Div => {
                        let y = self.eval_node(b, vars)?;
                        if y.value() == 0.0 {
                            return Err(self.domain(node, "division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => self.eval_pow(node, x, b, vars)?,
                }
            }
            Node::Call(func, a) => {
                let x = self.eval_node(a, vars)?;
                let v = x.value();
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(self.domain(node, "logarithm of a non-positive value"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(self.domain(node, "square root of a negative value"));
                        }
                        if v == 0.0 && T::WITH_DERIVATIVES {
                            return Err(self.domain(node, "square root is not differentiable at zero"));
                        }
                        x.sqrt()
                    }
                    Func::Abs => {
                        if v == 0.0 {
                            return Err(self.domain(node, "abs is not differentiable at zero"));
                        }
                        x.abs()
                    }
                }
            }
        })
    }

    fn eval_pow<T: Scalar>(
        &self,
        node: &Node,
        base: T,
        exponent: &Node,
        vars: &[T; 3],
    ) -> Result<T, EvalError> {
        let e = self.eval_node(exponent, vars)?;
        let constant_exponent = !depends_on_variables(exponent);
        let ev = e.value();
        let bv = base.value();
        if constant_exponent && ev.fract() == 0.0 && ev.abs() <= i32::MAX as f64 {
            if bv == 0.0 && ev < 0.0 {
                return Err(self.domain(node, "zero raised to a negative power"));
            }
            return Ok(base.powi(ev as i32));
        }
        if constant_exponent {
            if bv < 0.0 {
                return Err(self.domain(node, "negative base with non-integer exponent"));
            }
            if bv == 0.0 && (ev < 0.0 || (T::WITH_DERIVATIVES && ev < 2.0)) {
                return Err(self.domain(node, "power is not differentiable at zero base"));
            }
            return Ok(base.powf(ev));
        }
        if bv <= 0.0 {
            return Err(self.domain(node, "variable exponent needs a positive base"));
        }
        Ok((e * base.ln()).exp())
    }
}

fn depends_on_variables(node: &Node) -> bool {
    match node {
        Node::Const(_) | Node::Param(_) => false,
        Node::Var(_) => true,
        Node::Neg(a) | Node::Call(_, a) => depends_on_variables(a),
        Node::Binary(_, a, b) => depends_on_variables(a) || depends_on_variables(b),
    }
}
