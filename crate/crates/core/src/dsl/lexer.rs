use super::{ParseError, ParseErrorKind, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LAngle,
    RAngle,
    Pipe,
    Comma,
    Colon,
    Semi,
    Equals,
    Underscore,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Num(n) => format!("number `{n}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::LAngle => "`<`".into(),
            TokenKind::RAngle => "`>`".into(),
            TokenKind::Pipe => "`|`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::Underscore => "`_`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits `text` into tokens. The final token is always `Eof`, placed on the
/// last non-whitespace character (or 1:1 for blank input).
pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut last_visible = SourceSpan::new(1, 1, 1);

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                last_visible = SourceSpan::new(cur.line, cur.column, 1);
                cur.bump();
            }
            continue;
        }

        let (line, column) = (cur.line, cur.column);
        let single = match c {
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            '[' => Some(TokenKind::LBracket),
            ']' => Some(TokenKind::RBracket),
            '<' => Some(TokenKind::LAngle),
            '>' => Some(TokenKind::RAngle),
            '|' => Some(TokenKind::Pipe),
            ',' => Some(TokenKind::Comma),
            ':' => Some(TokenKind::Colon),
            ';' => Some(TokenKind::Semi),
            '=' => Some(TokenKind::Equals),
            '_' => Some(TokenKind::Underscore),
            _ => None,
        };
        if let Some(kind) = single {
            cur.bump();
            let span = SourceSpan::new(line, column, 1);
            last_visible = span;
            tokens.push(Token { kind, span });
            continue;
        }

        let mut lexeme = String::new();
        let kind = if c.is_ascii_alphabetic() {
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    lexeme.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Ident(lexeme.clone())
        } else if c.is_ascii_digit() || c == '.' || c == '-' {
            lex_number(&mut cur, &mut lexeme);
            match lexeme.parse::<f64>() {
                Ok(v) if v.is_finite() => TokenKind::Num(v),
                _ => {
                    return Err(ParseError::new(
                        ParseErrorKind::Lex,
                        SourceSpan::new(line, column, lexeme.chars().count().max(1)),
                        format!("malformed number `{lexeme}`"),
                    ))
                }
            }
        } else {
            return Err(ParseError::new(
                ParseErrorKind::Lex,
                SourceSpan::new(line, column, 1),
                format!("unexpected character `{c}`"),
            ));
        };
        let span = SourceSpan::new(line, column, lexeme.chars().count());
        last_visible = SourceSpan::new(line, column + span.length - 1, 1);
        tokens.push(Token { kind, span });
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        span: last_visible,
    });
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, lexeme: &mut String) {
    if cur.peek() == Some('-') {
        lexeme.push('-');
        cur.bump();
    }
    let take_digits = |cur: &mut Cursor<'_>, lexeme: &mut String| {
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            lexeme.push(c);
            cur.bump();
        }
    };
    take_digits(cur, lexeme);
    if cur.peek() == Some('.') {
        lexeme.push('.');
        cur.bump();
        take_digits(cur, lexeme);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        // `2e` with no digits is rejected by the f64 parse in the caller.
        lexeme.push('e');
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            lexeme.push(cur.bump().unwrap());
        }
        take_digits(cur, lexeme);
    }
}
