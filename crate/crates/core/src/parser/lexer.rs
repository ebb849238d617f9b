use std::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    UIdent(String),
    LIdent(String),
    Number(String),
    Eq,
    Semi,
    LParen,
    RParen,
    Comma,
    Dot,
    Plus,
    Lt,
    Gt,
    Slash,
    LBrace,
    RBrace,
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::UIdent(s) | Tok::LIdent(s) | Tok::Number(s) => write!(f, "'{s}'"),
            Tok::Eq => f.write_str("'='"),
            Tok::Semi => f.write_str("';'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Lt => f.write_str("'<'"),
            Tok::Gt => f.write_str("'>'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Split the input into tokens. The last token is always `Eof`.
pub fn lex(text: &str) -> Result<Vec<Token>, (Span, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column };
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if c.is_ascii_uppercase() {
                Tok::UIdent(word)
            } else {
                Tok::LIdent(word)
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let separator = matches!(chars.get(i), Some('.') | Some('/'));
            if separator && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            Tok::Number(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '=' => Tok::Eq,
                ';' => Tok::Semi,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '/' => Tok::Slash,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '*' => Tok::Star,
                other => return Err((span, format!("unexpected character '{other}'"))),
            }
        };
        column += i - start;
        tokens.push(Token { tok, span });
    }
    tokens.push(Token { tok: Tok::Eof, span: Span { line, column } });
    Ok(tokens)
}
