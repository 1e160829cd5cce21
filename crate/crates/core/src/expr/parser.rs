use super::lexer::{Spanned, Token};
use super::{BinOp, Func, Node, ParseError};

pub(crate) struct Parser<'a> {
    tokens: &'a [Spanned],
    pos: usize,
    variables: &'a [&'a str],
    parameters: &'a [&'a str],
}

impl<'a> Parser<'a> {
    pub(crate) fn new(
        tokens: &'a [Spanned],
        variables: &'a [&'a str],
        parameters: &'a [&'a str],
    ) -> Self {
        Self { tokens, pos: 0, variables, parameters }
    }

    pub(crate) fn parse(mut self) -> Result<Node, ParseError> {
        let node = self.expression()?;
        let t = self.peek();
        if t.token != Token::End {
            return Err(self.error_at(t, format!("unexpected {}", t.token.describe())));
        }
        Ok(node)
    }

    fn peek(&self) -> &'a Spanned {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> &'a Spanned {
        let t = &self.tokens[self.pos];
        if t.token != Token::End {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Spanned, message: String) -> ParseError {
        ParseError::Syntax { line: t.line, column: t.column, message }
    }

    fn expression(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().token {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().token {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek().token {
            Token::Minus => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Token::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek().token == Token::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let t = self.bump();
        match &t.token {
            Token::Number(v) => Ok(Node::Const(*v)),
            Token::LParen => {
                let inner = self.expression()?;
                self.expect_close(t)?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if self.peek().token == Token::LParen {
                    let func = Func::from_name(name).ok_or_else(|| {
                        self.error_at(t, format!("unknown function `{name}`"))
                    })?;
                    let open = self.bump();
                    let arg = self.expression()?;
                    self.expect_close(open)?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.variables.iter().position(|v| v == name) {
                    return Ok(Node::Var(i));
                }
                if let Some(i) = self.parameters.iter().position(|v| v == name) {
                    return Ok(Node::Param(i));
                }
                if name == "pi" {
                    return Ok(Node::Const(std::f64::consts::PI));
                }
                if Func::from_name(name).is_some() {
                    return Err(self.error_at(t, format!("function `{name}` needs an argument")));
                }
                Err(ParseError::UndeclaredSymbol { name: name.clone(), line: t.line, column: t.column })
            }
            other => Err(self.error_at(t, format!("unexpected {}", other.describe()))),
        }
    }

    fn expect_close(&mut self, open: &Spanned) -> Result<(), ParseError> {
        let t = self.peek();
        if t.token == Token::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error_at(
                t,
                format!(
                    "expected `)` to close `(` opened at line {}, column {}; found {}",
                    open.line,
                    open.column,
                    t.token.describe()
                ),
            ))
        }
    }
}
