use super::expr::{Expr, Func};
use super::num::{Num, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at byte {pos}")]
    UnknownFunction { pos: usize, name: String },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnknownFunction { pos, .. } => *pos,
        }
    }
}

/// Parses an expression: `+ - * / ^`, parentheses, integer and decimal
/// literals, identifiers and calls to sin, cos, exp, sqrt, abs, sign.
/// Exponents must be integer literals.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::add_all(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc * self.unary_recip()?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power(false)
    }

    /// Reciprocal of a unary operand. The exponent is negated before the
    /// power is built so `1/(a + b)^2` keeps the sum as its base.
    fn unary_recip(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary_recip()?);
        }
        if self.eat(b'+') {
            return self.unary_recip();
        }
        self.power(true)
    }

    fn power(&mut self, recip: bool) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        let sign = if recip { -1 } else { 1 };
        if !self.eat(b'^') {
            return Ok(base.pow(sign));
        }
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        let k: i64 = digits.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: "exponent out of range".into(),
        })?;
        if paren && !self.eat(b')') {
            return Err(self.err("expected `)`"));
        }
        Ok(base.pow(sign * if neg { -k } else { k }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                if self.peek() == Some(b'(') {
                    let f = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                        pos: start,
                        name: name.to_string(),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)`"));
                    }
                    return Ok(Expr::func(f, arg));
                }
                Ok(Expr::var(name))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut is_float = false;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.s.len() && self.s[self.pos] == b'.' {
            is_float = true;
            self.pos += 1;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'+' || self.s[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits_start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits_start == self.pos {
                self.pos = save;
            } else {
                is_float = true;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        if !is_float {
            if let Ok(v) = text.parse::<i128>() {
                return Ok(Expr::num(Num::Rat(Rational::from_integer(v))));
            }
        }
        text.parse::<f64>()
            .map(Expr::float)
            .map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("bad number `{text}`"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse("1 + 2*3^2 - 4/2").unwrap();
        assert_eq!(e, Expr::int(17));
        assert_eq!(parse("-x1^2").unwrap(), -(Expr::var("x1").pow(2)));
        assert_eq!(parse("x1^(-2)").unwrap(), Expr::var("x1").pow(-2));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse("x1 + * x2").unwrap_err().pos(), 5);
        assert!(matches!(
            parse("tan(x1)"),
            Err(ParseError::UnknownFunction { pos: 0, .. })
        ));
        assert_eq!(parse("(x1").unwrap_err().pos(), 3);
    }

    #[test]
    fn literals() {
        assert_eq!(parse("0.5").unwrap(), Expr::float(0.5));
        assert_eq!(parse("1e-3").unwrap(), Expr::float(1e-3));
        assert_eq!(parse("3/4").unwrap(), Expr::rational(3, 4));
    }

    #[test]
    fn sin_zero() {
        let e = parse("sin(x4)").unwrap();
        assert_eq!(e.subs_var("x4", &Expr::zero()), Expr::zero());
    }
}
