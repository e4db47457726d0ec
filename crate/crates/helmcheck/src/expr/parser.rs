//! Recursive-descent parser for the ASCII expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := ['-'] factor (('*'|'/') factor)*
//! factor := atom ('^' factor)?            // right-associative
//! atom   := number | ident | '-' atom | '(' expr ')' | func '(' expr ')'
//! ident  := ('x'|'y') digit+
//! func   := sqrt | sin | cos | exp | log
//! ```
//!
//! A leading minus negates the whole term, so `-y1*y2/x2` parses as
//! `Neg(Div(Mul(y1,y2),x2))`, while `^` still binds tighter than the
//! minus in `-y1^2`.

use super::{CoordIndex, Func, ScalarField};
use crate::error::SymError;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

/// Parses `text` into a [`ScalarField`] of dimension `n`.
pub fn parse_expr(text: &str, n: usize) -> Result<ScalarField, SymError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim: n };
    p.skip_ws();
    let f = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> SymError {
        SymError::SyntaxError { offset: self.pos, message: message.to_string() }
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
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ScalarField, SymError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = lhs.add(&rhs);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = lhs.sub(&rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarField, SymError> {
        let negate = self.eat(b'-');
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = lhs.mul(&rhs);
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = lhs.div(&rhs);
            } else {
                break;
            }
        }
        Ok(if negate { lhs.neg() } else { lhs })
    }

    fn factor(&mut self) -> Result<ScalarField, SymError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            Ok(base.pow(&exp))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ScalarField, SymError> {
        if self.eat(b'-') {
            return Ok(self.atom()?.neg());
        }
        if self.eat(b'(') {
            let inner = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)`"));
            }
            return Ok(inner);
        }
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident_or_call(),
            _ => Err(self.err("expected number, variable, function or `(`")),
        }
    }

    fn number(&mut self) -> Result<ScalarField, SymError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. `2exp(...)` is invalid anyway)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| SymError::SyntaxError {
            offset: start,
            message: format!("invalid number `{text}`"),
        })?;
        self.skip_ws();
        Ok(ScalarField::constant(self.dim, value))
    }

    fn ident_or_call(&mut self) -> Result<ScalarField, SymError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        self.skip_ws();

        if let Some(func) = Func::from_name(&word) {
            if !self.eat(b'(') {
                return Err(self.err("expected `(` after function name"));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)`"));
            }
            return Ok(arg.call(func));
        }

        let (head, digits) = word.split_at(1);
        let index: usize = match (head, digits.parse()) {
            ("x", Ok(i)) | ("y", Ok(i)) if i >= 1 => i,
            _ => {
                return Err(SymError::SyntaxError {
                    offset: start,
                    message: format!("unknown identifier `{word}`"),
                })
            }
        };
        if index > self.dim {
            return Err(SymError::IndexOutOfRange { var: word, dim: self.dim });
        }
        let coord = if head == "x" {
            CoordIndex::base(index)
        } else {
            CoordIndex::fiber(index)
        };
        Ok(ScalarField::var(self.dim, coord))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, PhasePoint, DEFAULT_Y_MIN};
    use crate::testutil::seeded_points;
    use proptest::prelude::*;

    #[test]
    fn parse_tree_shapes() {
        let f = parse_expr("y1^2 + y2^2", 2).unwrap();
        match f.expr() {
            Expr::Add(a, b) => {
                assert!(matches!(**a, Expr::Pow(..)));
                assert!(matches!(**b, Expr::Pow(..)));
            }
            other => panic!("expected Add, got {other:?}"),
        }

        let g = parse_expr("-y1*y2/x2", 2).unwrap();
        match g.expr() {
            Expr::Neg(inner) => match &**inner {
                Expr::Div(num, _) => assert!(matches!(**num, Expr::Mul(..))),
                other => panic!("expected Div, got {other:?}"),
            },
            other => panic!("expected Neg, got {other:?}"),
        }

        let h = parse_expr("sqrt(y1^2+y2^2)", 2).unwrap();
        assert!(matches!(h.expr(), Expr::Call(Func::Sqrt, _)));
    }

    #[test]
    fn index_out_of_range() {
        assert!(matches!(
            parse_expr("x5", 2),
            Err(SymError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn syntax_error_carries_offset() {
        match parse_expr("y1 + + y2", 2) {
            Err(SymError::SyntaxError { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn pow_binds_tighter_than_unary_minus() {
        let f = parse_expr("-y1^2", 2).unwrap();
        let p = PhasePoint::new(vec![0.0, 0.0], vec![3.0, 1.0], DEFAULT_Y_MIN).unwrap();
        assert_eq!(f.eval(&p).unwrap(), -9.0);
    }

    #[test]
    fn pow_is_right_associative() {
        let f = parse_expr("2^3^2", 2).unwrap();
        let p = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 0.0], DEFAULT_Y_MIN).unwrap();
        assert_eq!(f.eval(&p).unwrap(), 512.0);
    }

    #[test]
    fn scientific_notation() {
        let f = parse_expr("1.5e-2*y1", 2).unwrap();
        let p = PhasePoint::new(vec![0.0, 0.0], vec![2.0, 0.0], DEFAULT_Y_MIN).unwrap();
        assert!((f.eval(&p).unwrap() - 0.03).abs() < 1e-15);
    }

    fn arb_expr_src() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            Just("x1".to_string()),
            Just("x2".to_string()),
            Just("y1".to_string()),
            Just("y2".to_string()),
            (1u8..9).prop_map(|v| v.to_string()),
        ];
        leaf.prop_recursive(3, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})+({b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})-({b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
                inner.clone().prop_map(|a| format!("-({a})")),
                (inner.clone(), 1u8..4).prop_map(|(a, k)| format!("({a})^{k}")),
                inner.clone().prop_map(|a| format!("sin({a})")),
                inner.prop_map(|a| format!("cos({a})")),
            ]
        })
    }

    proptest! {
        // print-then-parse evaluates identically to the original
        #[test]
        fn print_parse_round_trip(src in arb_expr_src()) {
            let f = parse_expr(&src, 2).unwrap();
            let reparsed = parse_expr(&format!("{f}"), 2).unwrap();
            for p in seeded_points(2, 10, 99, 0.5) {
                if let (Ok(a), Ok(b)) = (f.eval(&p), reparsed.eval(&p)) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }
        }
    }
}
