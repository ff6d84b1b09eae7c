use indexmap::IndexMap;

use super::lexer::{tokenize, Token, TokenKind};
use super::{ParseError, ParseErrorKind, SourceSpan};
use crate::model::{self, ComponentParams, Metadata, SystemExpr, SystemSpec, WEIGHT_SUM_TOLERANCE};

/// Parses the text form of a system into a canonical, validated spec.
pub fn parse(text: &str) -> Result<SystemSpec, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        components: IndexMap::new(),
    };
    parser.spec()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    components: IndexMap<String, ComponentParams>,
}

fn syntax(span: SourceSpan, message: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax, span, message)
}

fn semantic(span: SourceSpan, message: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::Semantic, span, message)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        let tok = self.peek();
        if tok.kind == kind {
            Ok(self.advance())
        } else {
            Err(syntax(
                tok.span,
                format!(
                    "expected {}, found {}",
                    kind.describe(),
                    tok.kind.describe()
                ),
            ))
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<Token, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if s == word => Ok(self.advance()),
            other => Err(syntax(
                self.peek().span,
                format!("expected `{word}`, found {}", other.describe()),
            )),
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == word)
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        let tok = self.advance();
        match tok.kind {
            TokenKind::Ident(s) => Ok((s, tok.span)),
            other => Err(syntax(
                tok.span,
                format!("expected identifier, found {}", other.describe()),
            )),
        }
    }

    fn number(&mut self) -> Result<(f64, SourceSpan), ParseError> {
        let tok = self.advance();
        match tok.kind {
            TokenKind::Num(v) => Ok((v, tok.span)),
            other => Err(syntax(
                tok.span,
                format!("expected number, found {}", other.describe()),
            )),
        }
    }

    fn spec(&mut self) -> Result<SystemSpec, ParseError> {
        if !self.at_keyword("comp") {
            return Err(syntax(
                self.peek().span,
                format!(
                    "expected at least one `comp` declaration, found {}",
                    self.peek().kind.describe()
                ),
            ));
        }
        while self.at_keyword("comp") {
            self.component()?;
        }
        self.expect_keyword("system")?;
        self.expect(TokenKind::Colon)?;
        let root = self.expr()?;
        self.expect(TokenKind::Eof)?;

        let spec = SystemSpec {
            components: std::mem::take(&mut self.components),
            root,
            metadata: Metadata::default(),
        };
        // Everything is checked while parsing; this only guards against drift.
        if let Some(v) = model::validate(&spec).into_iter().next() {
            return Err(semantic(SourceSpan::new(1, 1, 1), v.to_string()));
        }
        Ok(spec)
    }

    fn component(&mut self) -> Result<(), ParseError> {
        self.expect_keyword("comp")?;
        let (id, id_span) = self.ident()?;
        if self.components.contains_key(&id) {
            return Err(semantic(id_span, format!("duplicate component id {id}")));
        }
        self.expect(TokenKind::LParen)?;
        self.expect_keyword("lambda")?;
        self.expect(TokenKind::Equals)?;
        let (lambda, lambda_span) = self.number()?;
        if lambda <= 0.0 {
            return Err(semantic(
                lambda_span,
                format!("lambda must be > 0, got {lambda}"),
            ));
        }
        self.expect(TokenKind::Comma)?;
        self.expect_keyword("t0")?;
        self.expect(TokenKind::Equals)?;
        let (t0, t0_span) = self.number()?;
        if t0 < 0.0 {
            return Err(semantic(t0_span, format!("t0 must be >= 0, got {t0}")));
        }
        let mut params = ComponentParams::new(id.clone(), lambda, t0);
        if self.peek().kind == TokenKind::Comma {
            self.advance();
            self.expect_keyword("p")?;
            self.expect(TokenKind::Equals)?;
            let (p, p_span) = self.number()?;
            if !(0.0..=1.0).contains(&p) {
                return Err(semantic(p_span, format!("p must lie in [0, 1], got {p}")));
            }
            params.static_p = Some(p);
        }
        self.expect(TokenKind::RParen)?;
        self.components.insert(id, params);
        Ok(())
    }

    fn expr(&mut self) -> Result<SystemExpr, ParseError> {
        let mut terms = vec![self.term()?];
        while self.peek().kind == TokenKind::Semi {
            self.advance();
            terms.push(self.term()?);
        }
        if terms.len() == 1 {
            return Ok(terms.pop().unwrap());
        }
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match t {
                SystemExpr::Series(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        Ok(SystemExpr::Series(flat))
    }

    fn term(&mut self) -> Result<SystemExpr, ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Ident(id) => {
                self.advance();
                if !self.components.contains_key(&id) {
                    return Err(semantic(tok.span, format!("unresolved reference {id}")));
                }
                Ok(SystemExpr::Leaf(id))
            }
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::LBracket => self.prob_choice(),
            TokenKind::LAngle => self.uniform_choice(),
            other => Err(syntax(
                tok.span,
                format!(
                    "expected a component, `(`, `[` or `<`, found {}",
                    other.describe()
                ),
            )),
        }
    }

    fn prob_choice(&mut self) -> Result<SystemExpr, ParseError> {
        let open = self.expect(TokenKind::LBracket)?;
        let mut explicit: Vec<(Option<f64>, SystemExpr)> = Vec::new();
        let mut residual_seen = false;
        loop {
            let tok = self.advance();
            let weight = match tok.kind {
                TokenKind::Num(w) => {
                    if !(0.0..=1.0).contains(&w) {
                        return Err(semantic(tok.span, format!("weight {w} outside [0, 1]")));
                    }
                    Some(w)
                }
                TokenKind::Underscore => {
                    if residual_seen {
                        return Err(semantic(
                            tok.span,
                            "more than one residual `_` branch in a choice",
                        ));
                    }
                    residual_seen = true;
                    None
                }
                other => {
                    return Err(syntax(
                        tok.span,
                        format!("expected a weight or `_`, found {}", other.describe()),
                    ))
                }
            };
            self.expect(TokenKind::Colon)?;
            explicit.push((weight, self.expr()?));
            match self.peek().kind {
                TokenKind::Comma => {
                    self.advance();
                }
                TokenKind::RBracket => {
                    self.advance();
                    break;
                }
                ref other => {
                    return Err(syntax(
                        self.peek().span,
                        format!("expected `,` or `]`, found {}", other.describe()),
                    ))
                }
            }
        }

        if explicit.len() < 2 {
            return Err(semantic(open.span, "choice needs at least 2 branches"));
        }
        let stated: f64 = explicit.iter().filter_map(|(w, _)| *w).sum();
        let residual = if residual_seen {
            let r = 1.0 - stated;
            if r < -WEIGHT_SUM_TOLERANCE {
                return Err(semantic(
                    open.span,
                    format!("residual weight implied negative (explicit weights sum {stated})"),
                ));
            }
            r.max(0.0)
        } else {
            if (stated - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(semantic(open.span, format!("weights sum {stated} ≠ 1")));
            }
            0.0
        };
        let branches = explicit
            .into_iter()
            .map(|(w, e)| (w.unwrap_or(residual), e))
            .collect();
        Ok(SystemExpr::ProbChoice(branches))
    }

    fn uniform_choice(&mut self) -> Result<SystemExpr, ParseError> {
        let open = self.expect(TokenKind::LAngle)?;
        let mut children = vec![self.expr()?];
        while self.peek().kind == TokenKind::Pipe {
            self.advance();
            children.push(self.expr()?);
        }
        self.expect(TokenKind::RAngle)?;
        if children.len() < 2 {
            return Err(semantic(open.span, "choice needs at least 2 branches"));
        }
        let w = 1.0 / children.len() as f64;
        Ok(SystemExpr::ProbChoice(
            children.into_iter().map(|c| (w, c)).collect(),
        ))
    }
}
