use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident(String),
    Int(u32),
    Str(String),
    Colon,
    Arrow,
    Plus,
    Minus,
    Star,
    Comma,
    Bang,
    Amp,
    Pipe,
    Eq,
    LParen,
    RParen,
    Slash,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "`{s}`"),
            TokenKind::Int(n) => write!(f, "`{n}`"),
            TokenKind::Str(_) => f.write_str("string literal"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Bang => f.write_str("`!`"),
            TokenKind::Amp => f.write_str("`&`"),
            TokenKind::Pipe => f.write_str("`|`"),
            TokenKind::Eq => f.write_str("`=`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::Eof => f.write_str("end of line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    /// 1-based character column.
    pub column: usize,
}

/// Tokenizes one logical line. `#` starts a comment outside string literals.
pub(crate) fn tokenize(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let simple = |kind| Token { kind, line, column };

        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            tokens.push(simple(TokenKind::Ident(ident)));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let value = digits.parse::<u32>().map_err(|_| ParseError::Syntax {
                line,
                column,
                message: format!("integer `{digits}` out of range"),
            })?;
            tokens.push(simple(TokenKind::Int(value)));
            continue;
        }
        if c == '"' {
            i += 1;
            let mut value = String::new();
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ParseError::Syntax {
                            line,
                            column,
                            message: "unterminated string literal".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => match chars.get(i + 1) {
                        Some(&esc @ ('"' | '\\')) => {
                            value.push(esc);
                            i += 2;
                        }
                        _ => {
                            return Err(ParseError::Syntax {
                                line,
                                column: i + 1,
                                message: "invalid escape in string literal".into(),
                            })
                        }
                    },
                    Some(&other) => {
                        value.push(other);
                        i += 1;
                    }
                }
            }
            tokens.push(simple(TokenKind::Str(value)));
            continue;
        }

        let next = chars.get(i + 1).copied();
        let (kind, width) = match (c, next) {
            ('-', Some('>')) => (TokenKind::Arrow, 2),
            ('→', _) => (TokenKind::Arrow, 1),
            ('&', Some('&')) | ('|', Some('|')) | ('=', Some('=')) | ('!', Some('=')) => {
                return Err(ParseError::UnknownOperator {
                    line,
                    column,
                    operator: format!("{c}{}", next.unwrap_or_default()),
                })
            }
            (':', _) => (TokenKind::Colon, 1),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('*', _) => (TokenKind::Star, 1),
            (',', _) => (TokenKind::Comma, 1),
            ('!', _) => (TokenKind::Bang, 1),
            ('&', _) => (TokenKind::Amp, 1),
            ('|', _) => (TokenKind::Pipe, 1),
            ('=', _) => (TokenKind::Eq, 1),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            ('/', _) => (TokenKind::Slash, 1),
            _ => {
                return Err(ParseError::UnknownOperator {
                    line,
                    column,
                    operator: c.to_string(),
                })
            }
        };
        tokens.push(simple(kind));
        i += width;
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column: chars.len() + 1,
    });
    Ok(tokens)
}
