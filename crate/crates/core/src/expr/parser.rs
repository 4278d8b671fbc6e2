//! Recursive-descent parser for the infix field grammar.

use super::{FieldError, Node};

pub(super) fn parse(src: &str, n: usize, m: usize) -> Result<Node, FieldError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, n, m };
    p.skip_ws();
    let node = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
    m: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> FieldError {
        FieldError::Parse { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), FieldError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Node, FieldError> {
        let mut node = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                node = Node::Add(Box::new(node), Box::new(self.term()?));
            } else if self.eat(b'-') {
                node = Node::Sub(Box::new(node), Box::new(self.term()?));
            } else {
                return Ok(node);
            }
        }
    }

    fn term(&mut self) -> Result<Node, FieldError> {
        let mut node = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                node = Node::Mul(Box::new(node), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                node = Node::Div(Box::new(node), Box::new(self.factor()?));
            } else {
                return Ok(node);
            }
        }
    }

    fn factor(&mut self) -> Result<Node, FieldError> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.factor()?;
            return Ok(Node::Sub(Box::new(Node::Const(0.0)), Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, FieldError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.err("exponent must be a nonnegative integer literal"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let k: u32 = text
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, FieldError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let node = self.expr()?;
                self.skip_ws();
                self.expect(b')')?;
                Ok(node)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node, FieldError> {
        let start = self.pos;
        while self.peek().map_or(false, |c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().map_or(false, |c| c.is_ascii_digit()) {
                while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent suffix after all (e.g. `2*exp(t)` split oddly)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(format!("invalid number literal '{text}'")))?;
        Ok(Node::Const(v))
    }

    fn ident(&mut self) -> Result<Node, FieldError> {
        let start = self.pos;
        while self
            .peek()
            .map_or(false, |c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "t" => Ok(Node::Time),
            "abs" | "sign" | "exp" | "sin" | "cos" => {
                self.skip_ws();
                self.expect(b'(')?;
                let arg = Box::new(self.expr()?);
                self.skip_ws();
                self.expect(b')')?;
                Ok(match name.as_str() {
                    "abs" => Node::Abs(arg),
                    "sign" => Node::Sign(arg),
                    "exp" => Node::Exp(arg),
                    "sin" => Node::Sin(arg),
                    _ => Node::Cos(arg),
                })
            }
            "min" | "max" => {
                self.skip_ws();
                self.expect(b'(')?;
                let a = Box::new(self.expr()?);
                self.skip_ws();
                self.expect(b',')?;
                let b = Box::new(self.expr()?);
                self.skip_ws();
                self.expect(b')')?;
                Ok(if name == "min" { Node::Min(a, b) } else { Node::Max(a, b) })
            }
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    let idx: usize = rest.parse().map_err(|_| {
                        self.err(format!("bad state variable '{name}' (want x1..x{})", self.n))
                    })?;
                    if idx == 0 || idx > self.n {
                        return Err(self.err(format!(
                            "state variable {name} out of range 1..={}",
                            self.n
                        )));
                    }
                    return Ok(Node::State(idx - 1));
                }
                if let Some(rest) = name.strip_prefix('a') {
                    let idx: usize = rest.parse().map_err(|_| {
                        self.err(format!("bad control variable '{name}' (want a1..a{})", self.m))
                    })?;
                    if idx == 0 || idx > self.m {
                        return Err(self.err(format!(
                            "control variable {name} out of range 1..={}",
                            self.m
                        )));
                    }
                    return Ok(Node::Control(idx - 1));
                }
                Err(self.err(format!("unknown identifier '{name}'")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::ScalarField;
    use super::super::FieldError;

    #[test]
    fn precedence_and_unary_minus() {
        let f = ScalarField::parse("-x1^2 + 2 * 3", 1, 0).unwrap();
        // unary minus binds looser than the power: -(x1^2) + 6
        assert_eq!(f.eval_state(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn scientific_literals() {
        let f = ScalarField::parse("1e-3 + 2.5E2", 0, 0).unwrap();
        assert_eq!(f.eval_state(&[]).unwrap(), 250.001);
    }

    #[test]
    fn out_of_range_variables_rejected() {
        assert!(matches!(
            ScalarField::parse("x3", 2, 0),
            Err(FieldError::Parse { .. })
        ));
        assert!(matches!(
            ScalarField::parse("a1", 1, 0),
            Err(FieldError::Parse { .. })
        ));
    }

    #[test]
    fn fractional_exponents_rejected() {
        assert!(matches!(
            ScalarField::parse("x1^1.5", 1, 0),
            Err(FieldError::Parse { .. })
        ));
        assert!(matches!(
            ScalarField::parse("x1^x1", 1, 0),
            Err(FieldError::Parse { .. })
        ));
    }

    #[test]
    fn error_position_points_at_problem() {
        match ScalarField::parse("x1 + @", 1, 0) {
            Err(FieldError::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn nested_functions_parse() {
        let f = ScalarField::parse("max(min(x1, x2), abs(x1 - 1))", 2, 0).unwrap();
        assert_eq!(f.eval_state(&[0.25, 0.5]).unwrap(), 0.75);
    }
}
