use std::fmt;

use crate::lang::SourceSpan;

use super::diag::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Kw(Keyword),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Assign,
    Semi,
    Comma,
    Dot,
    Bang,
    Question,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Colon,
    Dollar,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Module,
    Interface,
    Class,
    Implements,
    If,
    Else,
    While,
    Return,
    Await,
    New,
    Hold,
    Release,
    Cost,
    After,
    Dl,
    Resources,
}

impl Keyword {
    const ALL: [(&'static str, Keyword); 16] = [
        ("module", Keyword::Module),
        ("interface", Keyword::Interface),
        ("class", Keyword::Class),
        ("implements", Keyword::Implements),
        ("if", Keyword::If),
        ("else", Keyword::Else),
        ("while", Keyword::While),
        ("return", Keyword::Return),
        ("await", Keyword::Await),
        ("new", Keyword::New),
        ("hold", Keyword::Hold),
        ("release", Keyword::Release),
        ("cost", Keyword::Cost),
        ("after", Keyword::After),
        ("dl", Keyword::Dl),
        ("Resources", Keyword::Resources),
    ];

    fn lookup(s: &str) -> Option<Keyword> {
        Self::ALL.iter().find(|(k, _)| *k == s).map(|(_, kw)| *kw)
    }

    pub fn as_str(self) -> &'static str {
        Self::ALL.iter().find(|(_, kw)| *kw == self).map(|(k, _)| *k).unwrap()
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Int(v) => return write!(f, "integer `{v}`"),
            Tok::Kw(k) => return write!(f, "`{}`", k.as_str()),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Assign => "=",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Bang => "!",
            Tok::Question => "?",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Colon => ":",
            Tok::Dollar => "$",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits source text into tokens. `>>` is never produced, so nested generic
/// types such as `List<Fut<Int>>` need no special handling.
pub fn lex(source: &str) -> Result<Vec<Token>, Vec<ParseDiagnostic>> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let span = |len: usize| SourceSpan::new(start.0, start.1, len as u32);
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            col += (i - begin) as u32;
            let tok = match Keyword::lookup(&word) {
                Some(kw) => Tok::Kw(kw),
                None => Tok::Ident(word),
            };
            tokens.push(Token { tok, span: span(i - begin) });
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[begin..i].iter().collect();
            col += (i - begin) as u32;
            match text.parse::<i64>() {
                Ok(v) => tokens.push(Token { tok: Tok::Int(v), span: span(i - begin) }),
                Err(_) => errors.push(ParseDiagnostic::error(span(i - begin), format!("integer literal `{text}` out of range"))),
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('=', _) => (Tok::Assign, 1),
            (';', _) => (Tok::Semi, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            ('!', _) => (Tok::Bang, 1),
            ('?', _) => (Tok::Question, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            (':', _) => (Tok::Colon, 1),
            ('$', _) => (Tok::Dollar, 1),
            _ => {
                errors.push(ParseDiagnostic::error(span(1), format!("unexpected character `{c}`")));
                i += 1;
                col += 1;
                continue;
            }
        };
        tokens.push(Token { tok, span: span(len) });
        i += len;
        col += len as u32;
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(line, col, 0),
    });
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}
