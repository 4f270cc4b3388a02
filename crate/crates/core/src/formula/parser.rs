//! Recursive-descent parser for the 1D formula language.
//!
//! Precedence, loosest first: `:<=>`/`:=`, `<=>`, `=>`, `or`, `and`,
//! `not`, relations, `+ -`, `* /`, `^`, then postfix index/application.
//! Quantifiers come in a bracketed form, `forall[x with c, body]`, which
//! is an atom, and a prefix form, `∀ x with c : body`, whose body extends
//! as far right as possible.

use serde::Serialize;
use thiserror::Error;

use super::lexer::{tokenize, LexError, Token, TokenKind};
use super::{ops_names, Binder, Declaration, Formula, RelOp};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("parse error at {start}..{end}: expected {}{}", expected.join(" or "), found.as_ref().map(|f| format!(", found {f:?}")).unwrap_or_default())]
pub struct ParseError {
    pub start: usize,
    pub end: usize,
    pub expected: Vec<String>,
    pub found: Option<String>,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError {
            start: e.offset,
            end: e.offset + e.ch.len_utf8(),
            expected: vec!["a symbol of the formula alphabet".into()],
            found: Some(e.ch.to_string()),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_end()?;
    Ok(f)
}

/// Parses the body of a declaration cell: a chain of orphaned quantifiers
/// optionally followed by `let` abbreviations, a lone `let`, or an orphaned
/// implication `F =>`.
pub fn parse_declaration(text: &str) -> Result<Declaration, ParseError> {
    let mut p = Parser::new(text)?;
    let mut items = Vec::new();
    if p.at_keyword("forall") || p.at_keyword("let") {
        while p.at_keyword("forall") {
            p.bump();
            let binder = if p.eat_bracket("[") {
                let (binder, rest) = p.binder_items(false)?;
                debug_assert!(rest.is_none());
                p.expect_bracket("]")?;
                binder
            } else {
                p.prefix_binder()?
            };
            items.push(Declaration::Quantifier { binder });
        }
        while p.at_keyword("let") {
            p.bump();
            let name = p.ident()?;
            p.expect_op("=")?;
            let replacement = p.implies()?;
            items.push(Declaration::Let { name, replacement });
        }
        p.expect_end()?;
    } else {
        if p.at_end() {
            return Err(p.error(&["forall", "let", "=>"]));
        }
        let lhs = p.or()?;
        if !p.eat_op("=>") {
            return Err(p.error(&["=>"]));
        }
        p.expect_end()?;
        items.push(Declaration::Implication { lhs });
    }
    Ok(if items.len() == 1 {
        items.pop().unwrap()
    } else {
        Declaration::Sequence { items }
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
            len: text.len(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek()
            .is_some_and(|t| t.kind == kind && t.text == text)
    }

    fn at_op(&self, op: &str) -> bool {
        self.at(TokenKind::Operator, op)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.at(TokenKind::Keyword, kw)
    }

    fn at_bracket(&self, b: &str) -> bool {
        self.at(TokenKind::Bracket, b)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_bracket(&mut self, b: &str) -> bool {
        if self.at_bracket(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (start, end, found) = match self.peek() {
            Some(t) => (t.start, t.end, Some(t.text.clone())),
            None => (self.len, self.len, None),
        };
        ParseError {
            start,
            end,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(&[op]))
        }
    }

    fn expect_bracket(&mut self, b: &str) -> Result<(), ParseError> {
        if self.eat_bracket(b) {
            Ok(())
        } else {
            Err(self.error(&[b]))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => Ok(self.bump().text),
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.iff()?;
        if self.eat_op(":<=>") {
            let rhs = self.iff()?;
            Ok(Formula::def_iff(lhs, rhs))
        } else if self.eat_op(":=") {
            let rhs = self.iff()?;
            Ok(Formula::def_eq(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implies()?;
        if self.eat_op("<=>") {
            let rhs = self.iff()?;
            Ok(Formula::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat_op("=>") {
            let rhs = self.implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let first = self.and()?;
        if !self.at_keyword("or") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_keyword("or") {
            items.push(self.and()?);
        }
        Ok(Formula::or(items))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let first = self.not()?;
        if !self.at_keyword("and") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_keyword("and") {
            items.push(self.not()?);
        }
        Ok(Formula::and(items))
    }

    fn not(&mut self) -> Result<Formula, ParseError> {
        if self.eat_keyword("not") {
            Ok(Formula::not(self.not()?))
        } else {
            self.relation()
        }
    }

    fn relation(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.text.as_str() {
                "=" => RelOp::Eq,
                "!=" => RelOp::Neq,
                "<=" => RelOp::Le,
                "<" => RelOp::Lt,
                ">=" => RelOp::Ge,
                ">" => RelOp::Gt,
                _ => return Ok(lhs),
            },
            Some(t) if t.kind == TokenKind::Keyword && t.text == "in" => RelOp::In,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Formula::rel(op, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let name = if self.eat_op("+") {
                ops_names::PLUS
            } else if self.eat_op("-") {
                ops_names::MINUS
            } else {
                return Ok(lhs);
            };
            let rhs = self.multiplicative()?;
            lhs = Formula::app(name, vec![lhs, rhs]);
        }
    }

    fn multiplicative(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let name = if self.eat_op("*") {
                ops_names::TIMES
            } else if self.eat_op("/") {
                ops_names::DIVIDE
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Formula::app(name, vec![lhs, rhs]);
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.at_op("-") {
            // `-` directly followed by a numeral is a negative literal.
            if self
                .peek_at(1)
                .is_some_and(|t| t.kind == TokenKind::Integer)
            {
                return self.power();
            }
            self.bump();
            let operand = self.unary()?;
            return Ok(Formula::app(ops_names::MINUS, vec![operand]));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Formula, ParseError> {
        let base = self.postfix()?;
        if self.eat_op("^") {
            let exponent = self.unary()?;
            Ok(Formula::app(ops_names::POWER, vec![base, exponent]))
        } else {
            Ok(base)
        }
    }

    fn postfix(&mut self) -> Result<Formula, ParseError> {
        let (mut f, mut bare_ident) = self.primary()?;
        loop {
            if self.eat_bracket("[") {
                let args = self.list("]")?;
                let head = match f {
                    Formula::Var(name) if bare_ident => Formula::Const(name),
                    other => other,
                };
                f = Formula::App(Box::new(head), args);
            } else if self.eat_op("_") {
                let index = self.index_atom()?;
                f = Formula::index(f, index);
            } else {
                return Ok(f);
            }
            bare_ident = false;
        }
    }

    fn index_atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => Ok(Formula::Var(self.bump().text)),
            Some(t) if t.kind == TokenKind::Integer => {
                let t = self.bump();
                Ok(Formula::Int(t.text.parse().expect("lexer checked range")))
            }
            Some(t) if t.kind == TokenKind::Bracket && t.text == "(" => {
                self.bump();
                let f = self.formula()?;
                self.expect_bracket(")")?;
                Ok(f)
            }
            _ => Err(self.error(&["identifier", "integer", "("])),
        }
    }

    /// Comma-separated formulas up to the closing bracket, which is consumed.
    fn list(&mut self, close: &str) -> Result<Vec<Formula>, ParseError> {
        let mut items = Vec::new();
        if self.eat_bracket(close) {
            return Ok(items);
        }
        loop {
            items.push(self.formula()?);
            if self.eat_bracket(close) {
                return Ok(items);
            }
            if !self.eat_op(",") {
                return Err(self.error(&[",", close]));
            }
        }
    }

    fn integer_literal(&mut self) -> Result<i64, ParseError> {
        let negative = self.eat_op("-");
        match self.peek() {
            Some(t) if t.kind == TokenKind::Integer => {
                let t = self.bump();
                let v: i64 = t.text.parse().expect("lexer checked range");
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    /// The flag is set when the result is a bare identifier, which makes it
    /// a constant head if an argument list follows.
    fn primary(&mut self) -> Result<(Formula, bool), ParseError> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Ident {
                return Ok((Formula::Var(self.bump().text), true));
            }
        }
        self.atom().map(|f| (f, false))
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error(&["expression"]));
        };
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::Integer, _) => {
                self.bump();
                Ok(Formula::Int(tok.text.parse().expect("lexer checked range")))
            }
            (TokenKind::Operator, "-") => {
                // Negative literal, see `unary`.
                let v = self.integer_literal()?;
                Ok(Formula::Int(v))
            }
            (TokenKind::Keyword, "True") => {
                self.bump();
                Ok(Formula::True)
            }
            (TokenKind::Keyword, "False") => {
                self.bump();
                Ok(Formula::False)
            }
            (TokenKind::Keyword, "rat") => {
                self.bump();
                self.expect_bracket("[")?;
                let start = self.peek().map_or(self.len, |t| t.start);
                let num = self.integer_literal()?;
                self.expect_op(",")?;
                let den = self.integer_literal()?;
                self.expect_bracket("]")?;
                Formula::rational(num, den).ok_or_else(|| ParseError {
                    start,
                    end: start,
                    expected: vec!["non-zero denominator".into()],
                    found: Some("0".into()),
                })
            }
            (TokenKind::Keyword, "tuple") => {
                self.bump();
                self.expect_bracket("[")?;
                Ok(Formula::Tuple(self.list("]")?))
            }
            (TokenKind::Keyword, kw @ ("forall" | "exists")) => {
                let universal = kw == "forall";
                self.bump();
                let (binder, body) = if self.eat_bracket("[") {
                    let (binder, body) = self.binder_items(true)?;
                    self.expect_bracket("]")?;
                    (binder, body.expect("formula binder has a body"))
                } else {
                    let binder = self.prefix_binder()?;
                    self.expect_op(":")?;
                    (binder, self.formula()?)
                };
                Ok(if universal {
                    Formula::forall(binder, body)
                } else {
                    Formula::exists(binder, body)
                })
            }
            (TokenKind::Bracket, "(") => {
                self.bump();
                let f = self.formula()?;
                self.expect_bracket(")")?;
                Ok(f)
            }
            (TokenKind::Bracket, "{") => {
                self.bump();
                Ok(Formula::Set(self.list("}")?))
            }
            (TokenKind::Bracket, "⟨") => {
                self.bump();
                Ok(Formula::Tuple(self.list("⟩")?))
            }
            (TokenKind::Operator, "|") => {
                self.bump();
                let inner = self.formula()?;
                if !self.eat_op("|") {
                    return Err(self.error(&["|"]));
                }
                Ok(Formula::length(inner))
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    /// Variables of a binder: `x` or `{x, y}`.
    fn binder_vars(&mut self, allow_comma_list: bool) -> Result<Vec<String>, ParseError> {
        if self.eat_bracket("{") {
            let mut vars = vec![self.ident()?];
            while self.eat_op(",") {
                vars.push(self.ident()?);
            }
            self.expect_bracket("}")?;
            return Ok(vars);
        }
        let mut vars = vec![self.ident()?];
        if allow_comma_list {
            while self.at_op(",") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident) {
                self.bump();
                vars.push(self.ident()?);
            }
        }
        Ok(vars)
    }

    /// `= lo..hi` or `= lo,…,hi` after a single binder variable.
    fn range_tail(&mut self, binder: &mut Binder) -> Result<(), ParseError> {
        if !self.at_op("=") {
            return Ok(());
        }
        if binder.vars.len() != 1 {
            return Err(self.error(&["with", ",", "]"]));
        }
        self.bump();
        let lo = self.additive()?;
        if !self.eat_op("..") {
            if self.at_op(",") && self.peek_at(1).is_some_and(|t| t.text == "..") {
                self.bump();
                self.bump();
                self.expect_op(",")?;
            } else {
                return Err(self.error(&[".."]));
            }
        }
        let hi = self.additive()?;
        *binder = std::mem::replace(binder, Binder::vars(Vec::<String>::new())).with_range(lo, hi);
        Ok(())
    }

    /// Inside `forall[ ... ]`. With `expect_body`, the last comma-separated
    /// item is the body and any items between `with` and it are conditions.
    fn binder_items(&mut self, expect_body: bool) -> Result<(Binder, Option<Formula>), ParseError> {
        let mut binder = Binder::vars(self.binder_vars(false)?);
        self.range_tail(&mut binder)?;
        if self.eat_keyword("with") {
            let mut items = vec![self.formula()?];
            while self.eat_op(",") {
                items.push(self.formula()?);
            }
            let body = if expect_body {
                if items.len() < 2 {
                    return Err(self.error(&[","]));
                }
                items.pop()
            } else {
                None
            };
            binder.condition = Some(Formula::and(items));
            Ok((binder, body))
        } else if expect_body {
            self.expect_op(",")?;
            Ok((binder, Some(self.formula()?)))
        } else {
            Ok((binder, None))
        }
    }

    /// Binder of the prefix form `∀ x, y with c1, c2`.
    fn prefix_binder(&mut self) -> Result<Binder, ParseError> {
        let mut binder = Binder::vars(self.binder_vars(true)?);
        self.range_tail(&mut binder)?;
        if self.eat_keyword("with") {
            let mut items = vec![self.formula()?];
            while self.eat_op(",") {
                items.push(self.formula()?);
            }
            binder.condition = Some(Formula::and(items));
        }
        Ok(binder)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Formula {
        Formula::var(n)
    }

    #[test]
    fn bids_definition() {
        let f = parse_formula("bids[b] :<=> forall[j=1..|b|, b_j >= 0]").unwrap();
        let expected = Formula::def_iff(
            Formula::app("bids", vec![v("b")]),
            Formula::forall(
                Binder::var("j").with_range(Formula::Int(1), Formula::length(v("b"))),
                Formula::rel(RelOp::Ge, Formula::index(v("b"), v("j")), Formula::Int(0)),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn infix_plus() {
        assert_eq!(
            parse_formula("1+1").unwrap(),
            Formula::app("plus", vec![Formula::Int(1), Formula::Int(1)])
        );
    }

    #[test]
    fn conditioned_forall() {
        assert_eq!(
            parse_formula("forall[x with p[x], q[x]]").unwrap(),
            Formula::forall(
                Binder::var("x").with_condition(Formula::app("p", vec![v("x")])),
                Formula::app("q", vec![v("x")])
            )
        );
    }

    #[test]
    fn prefix_form_matches_bracket_form() {
        assert_eq!(
            parse_formula("∀ x with p[x] : q[x]").unwrap(),
            parse_formula("forall[x with p[x], q[x]]").unwrap()
        );
        assert_eq!(
            parse_formula("∀ j = 1,…,|b| : b_j ≥ 0").unwrap(),
            parse_formula("forall[j = 1..|b|, b_j >= 0]").unwrap()
        );
        assert_eq!(
            parse_formula("∀ x, y : p[x, y]").unwrap(),
            parse_formula("forall[{x, y}, p[x, y]]").unwrap()
        );
    }

    #[test]
    fn precedence() {
        let f = parse_formula("a or b and not c = d => e").unwrap();
        let expected = Formula::implies(
            Formula::or(vec![
                v("a"),
                Formula::and(vec![
                    v("b"),
                    Formula::not(Formula::rel(RelOp::Eq, v("c"), v("d"))),
                ]),
            ]),
            v("e"),
        );
        assert_eq!(f, expected);
        assert_eq!(
            parse_formula("a => b => c").unwrap(),
            Formula::implies(v("a"), Formula::implies(v("b"), v("c")))
        );
        assert_eq!(
            parse_formula("1 - 2 - 3").unwrap(),
            Formula::app(
                "minus",
                vec![
                    Formula::app("minus", vec![Formula::Int(1), Formula::Int(2)]),
                    Formula::Int(3)
                ]
            )
        );
        assert_eq!(
            parse_formula("2^3^4").unwrap(),
            Formula::app(
                "power",
                vec![
                    Formula::Int(2),
                    Formula::app("power", vec![Formula::Int(3), Formula::Int(4)])
                ]
            )
        );
    }

    #[test]
    fn negative_literals_and_unary_minus() {
        assert_eq!(parse_formula("-3").unwrap(), Formula::Int(-3));
        assert_eq!(
            parse_formula("-(3)").unwrap(),
            Formula::app("minus", vec![Formula::Int(3)])
        );
        assert_eq!(
            parse_formula("-x").unwrap(),
            Formula::app("minus", vec![v("x")])
        );
    }

    #[test]
    fn lengths_and_literals() {
        assert_eq!(
            parse_formula("|b| = |v|").unwrap(),
            Formula::rel(RelOp::Eq, Formula::length(v("b")), Formula::length(v("v")))
        );
        assert_eq!(
            parse_formula("{1, 2} in tuple[⟨⟩, {}]").unwrap(),
            Formula::rel(
                RelOp::In,
                Formula::Set(vec![Formula::Int(1), Formula::Int(2)]),
                Formula::Tuple(vec![Formula::Tuple(vec![]), Formula::Set(vec![])])
            )
        );
        assert_eq!(parse_formula("rat[6, 4]").unwrap(), Formula::Rational(3, 2));
        assert!(parse_formula("rat[1, 0]").is_err());
    }

    #[test]
    fn app_heads() {
        assert_eq!(
            parse_formula("b_j[x]").unwrap(),
            Formula::App(Box::new(Formula::index(v("b"), v("j"))), vec![v("x")])
        );
        assert_eq!(
            parse_formula("(f)[x]").unwrap(),
            Formula::App(Box::new(v("f")), vec![v("x")])
        );
    }

    #[test]
    fn errors() {
        let e = parse_formula("|b").unwrap_err();
        assert!(e.expected.contains(&"|".to_string()));
        let e = parse_formula("f[a,").unwrap_err();
        assert_eq!(e.found, None);
        assert!(parse_formula("a = b = c").is_err());
        assert!(parse_formula("").is_err());
        assert!(parse_formula("forall[x]").is_err());
        let e = parse_formula("a @").unwrap_err();
        assert_eq!(e.start, 2);
    }

    #[test]
    fn declaration_shapes() {
        let d = parse_declaration(
            "forall[v with valuation[v]] forall[b with bids[b], |b|=|v|] forall[x with allocation[b,x]] forall[p with vickreyPayment[b,p]] let n = |v|",
        )
        .unwrap();
        let Declaration::Sequence { items } = &d else {
            panic!("expected sequence, got {d:?}")
        };
        assert_eq!(items.len(), 5);
        assert!(items[..4]
            .iter()
            .all(|i| matches!(i, Declaration::Quantifier { .. })));
        assert_eq!(
            items[4],
            Declaration::Let {
                name: "n".into(),
                replacement: Formula::length(v("v"))
            }
        );
        let Declaration::Quantifier { binder } = &items[1] else {
            unreachable!()
        };
        assert_eq!(
            binder.condition,
            Some(Formula::And(vec![
                Formula::app("bids", vec![v("b")]),
                Formula::rel(RelOp::Eq, Formula::length(v("b")), Formula::length(v("v"))),
            ]))
        );

        assert_eq!(
            parse_declaration("secondPriceAuction[b,x,p] =>").unwrap(),
            Declaration::Implication {
                lhs: Formula::app("secondPriceAuction", vec![v("b"), v("x"), v("p")])
            }
        );
        assert_eq!(
            parse_declaration("let n = |v|").unwrap(),
            Declaration::Let {
                name: "n".into(),
                replacement: Formula::length(v("v"))
            }
        );
        assert_eq!(
            parse_declaration("∀ b, x, p, v").unwrap(),
            Declaration::Quantifier {
                binder: Binder::vars(["b", "x", "p", "v"])
            }
        );
    }

    #[test]
    fn declaration_errors() {
        assert!(parse_declaration("p[x]").is_err());
        assert!(parse_declaration("").is_err());
        assert!(parse_declaration("forall[x, p[x]]").is_err());
        assert!(parse_declaration("a => b").is_err());
    }
}
