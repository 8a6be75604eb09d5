//! Tokenizer for `.gsg` grid files.

use super::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Plus,
    Minus,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl Token {
    pub fn span(&self, file: &str) -> SourceSpan {
        SourceSpan::new(file, self.line, self.column, self.length)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Str(_) => "string".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Eof => "end of file".into(),
        }
    }
}

/// Tokenizes the whole input. Never fails; bad characters and unterminated
/// strings become diagnostics and are skipped.
pub fn tokenize(source: &str, file: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = source.chars().peekable();

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            '#' => {
                // comment to end of line
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            '{' | '}' | ':' | ',' | '.' | '+' | '-' => {
                chars.next();
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ':' => TokenKind::Colon,
                    ',' => TokenKind::Comma,
                    '.' => TokenKind::Dot,
                    '+' => TokenKind::Plus,
                    _ => TokenKind::Minus,
                };
                tokens.push(Token {
                    kind,
                    line,
                    column,
                    length: 1,
                });
                column += 1;
            }
            '"' => {
                let (start_line, start_col) = (line, column);
                chars.next();
                column += 1;
                let mut value = String::new();
                let mut raw_len = 2; // the quotes
                let mut terminated = false;
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                    raw_len += 1;
                    if c == '"' {
                        terminated = true;
                        break;
                    }
                    if c == '\\' {
                        if let Some(&esc) = chars.peek() {
                            chars.next();
                            column += 1;
                            raw_len += 1;
                            match esc {
                                'n' => value.push('\n'),
                                't' => value.push('\t'),
                                '"' => value.push('"'),
                                '\\' => value.push('\\'),
                                other => {
                                    value.push('\\');
                                    value.push(other);
                                }
                            }
                        }
                    } else {
                        value.push(c);
                    }
                }
                if !terminated {
                    diags.push(ParseDiagnostic::error(
                        SourceSpan::new(file, start_line, start_col, raw_len.max(1)),
                        "E-PARSE",
                        "unterminated string literal",
                    ));
                }
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    line: start_line,
                    column: start_col,
                    length: raw_len,
                });
            }
            c if c.is_alphanumeric() || c == '_' => {
                let (start_line, start_col) = (line, column);
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                let len = ident.chars().count();
                tokens.push(Token {
                    kind: TokenKind::Ident(ident),
                    line: start_line,
                    column: start_col,
                    length: len,
                });
            }
            other => {
                diags.push(ParseDiagnostic::error(
                    SourceSpan::new(file, line, column, 1),
                    "E-PARSE",
                    format!("unexpected character `{other}`"),
                ));
                chars.next();
                column += 1;
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column,
        length: 0,
    });
    tokens
}
