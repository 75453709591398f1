//! Recursive-descent parser for rule lines and expressions.
//!
//! ```text
//! rule   := INT ':' expr '->' effect (',' effect)* attr*
//! effect := ('+' | '-') (ID | '*')
//! attr   := 'desc' '=' STR | 'prov' '=' STR | 'conf' '=' INT '/' INT | 'status' '=' 'retired'
//! expr   := or
//! or     := and ('|' and)*
//! and    := unary ('&' unary)*
//! unary  := '!' unary | atom
//! atom   := ID | ID '=' ID | '(' expr ')'
//! ```

use super::ast::{Confidence, Polarity, RiskEffect, RiskTarget, Rule, RuleExpr};
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    pub(crate) fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn peek_nth_kind(&self, n: usize) -> &TokenKind {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    pub(crate) fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    pub(crate) fn error_here(&self, message: impl Into<String>) -> ParseError {
        let token = self.peek();
        ParseError::Syntax {
            line: token.line,
            column: token.column,
            message: message.into(),
        }
    }

    pub(crate) fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        if *self.peek_kind() == kind {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", self.peek_kind())))
        }
    }

    pub(crate) fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek_kind().clone() {
            TokenKind::Ident(id) => {
                self.bump();
                Ok(id)
            }
            other => Err(self.error_here(format!("expected {what}, found {other}"))),
        }
    }

    pub(crate) fn expect_str(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek_kind().clone() {
            TokenKind::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error_here(format!("expected {what}, found {other}"))),
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), ParseError> {
        self.expect(TokenKind::Eof, "end of line").map(|_| ())
    }

    pub(crate) fn expr(&mut self) -> Result<RuleExpr, ParseError> {
        let first = self.and_expr()?;
        if *self.peek_kind() != TokenKind::Pipe {
            return Ok(first);
        }
        let mut children = vec![first];
        while *self.peek_kind() == TokenKind::Pipe {
            self.bump();
            children.push(self.and_expr()?);
        }
        Ok(RuleExpr::Or(children))
    }

    fn and_expr(&mut self) -> Result<RuleExpr, ParseError> {
        let first = self.unary()?;
        if *self.peek_kind() != TokenKind::Amp {
            return Ok(first);
        }
        let mut children = vec![first];
        while *self.peek_kind() == TokenKind::Amp {
            self.bump();
            children.push(self.unary()?);
        }
        Ok(RuleExpr::And(children))
    }

    fn unary(&mut self) -> Result<RuleExpr, ParseError> {
        if *self.peek_kind() == TokenKind::Bang {
            self.bump();
            return Ok(RuleExpr::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<RuleExpr, ParseError> {
        match self.peek_kind().clone() {
            TokenKind::Ident(id) => {
                self.bump();
                if *self.peek_kind() == TokenKind::Eq {
                    self.bump();
                    let value = self.expect_ident("enum value after `=`")?;
                    Ok(RuleExpr::EnumIs { factor: id, value })
                } else {
                    Ok(RuleExpr::Factor(id))
                }
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(self.error_here(format!("expected factor, `!` or `(`, found {other}"))),
        }
    }

    fn at_attribute(&self) -> bool {
        matches!(self.peek_kind(), TokenKind::Ident(_)) && *self.peek_nth_kind(1) == TokenKind::Eq
    }

    fn effects(&mut self, rule_id: u32) -> Result<Vec<RiskEffect>, ParseError> {
        if matches!(self.peek_kind(), TokenKind::Eof) || self.at_attribute() {
            let token = self.peek();
            return Err(ParseError::EmptyEffects {
                line: token.line,
                column: token.column,
                rule_id,
            });
        }
        let mut effects = vec![self.effect()?];
        while *self.peek_kind() == TokenKind::Comma {
            self.bump();
            effects.push(self.effect()?);
        }
        Ok(effects)
    }

    fn effect(&mut self) -> Result<RiskEffect, ParseError> {
        let polarity = match self.peek_kind() {
            TokenKind::Plus => Polarity::Increases,
            TokenKind::Minus => Polarity::Decreases,
            other => {
                return Err(
                    self.error_here(format!("expected `+` or `-` before risk, found {other}"))
                )
            }
        };
        self.bump();
        let target = match self.peek_kind().clone() {
            TokenKind::Star => {
                self.bump();
                RiskTarget::All
            }
            TokenKind::Ident(id) => {
                self.bump();
                RiskTarget::Risk(id)
            }
            other => return Err(self.error_here(format!("expected risk id or `*`, found {other}"))),
        };
        Ok(RiskEffect { polarity, target })
    }

    fn attributes(&mut self, rule: &mut Rule) -> Result<(), ParseError> {
        let mut seen: Vec<String> = Vec::new();
        while *self.peek_kind() != TokenKind::Eof {
            if !self.at_attribute() {
                return Err(self.error_here(format!(
                    "expected `,` or attribute after effects, found {}",
                    self.peek_kind()
                )));
            }
            let key_token = self.peek().clone();
            let key = self.expect_ident("attribute")?;
            if seen.contains(&key) {
                return Err(ParseError::Syntax {
                    line: key_token.line,
                    column: key_token.column,
                    message: format!("duplicate attribute `{key}`"),
                });
            }
            self.expect(TokenKind::Eq, "`=`")?;
            match key.as_str() {
                "desc" => rule.description = self.expect_str("quoted description")?,
                "prov" => rule.provenance = self.expect_str("quoted provenance note")?,
                "conf" => {
                    let confirmations = self.int("confirmation count")?;
                    self.expect(TokenKind::Slash, "`/`")?;
                    let refutations = self.int("refutation count")?;
                    rule.confidence = Confidence {
                        confirmations,
                        refutations,
                    };
                }
                "status" => {
                    let status = self.expect_ident("status")?;
                    match status.as_str() {
                        "retired" => rule.retired = true,
                        "active" => rule.retired = false,
                        _ => {
                            return Err(ParseError::Syntax {
                                line: key_token.line,
                                column: key_token.column,
                                message: format!("unknown status `{status}`"),
                            })
                        }
                    }
                }
                _ => {
                    return Err(ParseError::Syntax {
                        line: key_token.line,
                        column: key_token.column,
                        message: format!("unknown rule attribute `{key}`"),
                    })
                }
            }
            seen.push(key);
        }
        Ok(())
    }

    fn int(&mut self, what: &str) -> Result<u32, ParseError> {
        match *self.peek_kind() {
            TokenKind::Int(n) => {
                self.bump();
                Ok(n)
            }
            ref other => Err(self.error_here(format!("expected {what}, found {other}"))),
        }
    }

    /// Rule after the optional `rule` keyword, through end of line.
    pub(crate) fn rule(&mut self) -> Result<Rule, ParseError> {
        let id_token = self.peek().clone();
        let id = self.int("rule id")?;
        if id == 0 {
            return Err(ParseError::Syntax {
                line: id_token.line,
                column: id_token.column,
                message: "rule ids start at 1".into(),
            });
        }
        self.expect(TokenKind::Colon, "`:` after rule id")?;
        let expr = self.expr()?;
        self.expect(TokenKind::Arrow, "`->`")?;
        let effects = self.effects(id)?;
        let mut rule = Rule::new(id, expr, effects);
        self.attributes(&mut rule)?;
        Ok(rule)
    }

    /// `expr -> effects` with an optional `<id>:` prefix.
    pub(crate) fn rule_body(
        &mut self,
    ) -> Result<(Option<u32>, RuleExpr, Vec<RiskEffect>), ParseError> {
        let id = if matches!(self.peek_kind(), TokenKind::Int(_)) {
            let id = self.int("rule id")?;
            self.expect(TokenKind::Colon, "`:` after rule id")?;
            Some(id)
        } else {
            None
        };
        let expr = self.expr()?;
        self.expect(TokenKind::Arrow, "`->`")?;
        let effects = self.effects(id.unwrap_or(0))?;
        self.expect_eof()?;
        Ok((id, expr, effects))
    }
}

/// Parses one rule line: `<id>: <expr> -> <effects> [attributes]`.
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut parser = Parser::new(tokenize(text, 1)?);
    parser.rule()
}

/// Parses a bare expression.
pub fn parse_expr(text: &str) -> Result<RuleExpr, ParseError> {
    let mut parser = Parser::new(tokenize(text, 1)?);
    let expr = parser.expr()?;
    parser.expect_eof()?;
    Ok(expr)
}

/// Parses `[<id>:] <expr> -> <effects>` as typed on a command line.
pub fn parse_rule_body(text: &str) -> Result<(Option<u32>, RuleExpr, Vec<RiskEffect>), ParseError> {
    Parser::new(tokenize(text, 1)?).rule_body()
}
