//! Tokenizer for the ASCII surface syntax.
//!
//! Operator encoding: `->` for value sends, `-o` for asset transfers, `>>`
//! for event schedules, `=>` for state transitions, `@Name` for states.
//! `//` starts a line comment.

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    State(String), // @Name
    // keywords
    KwStipula,
    KwAsset,
    KwField,
    KwAgreement,
    KwIf,
    KwElse,
    KwNow,
    KwTrue,
    KwFalse,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    // operators
    Send,    // ->
    Lolli,   // -o
    Sched,   // >>
    Arrow,   // =>
    Plus,
    Minus,
    StarOp,
    Slash,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::State(s) => format!("state `@{s}`"),
            Tok::KwStipula => "`stipula`".into(),
            Tok::KwAsset => "`asset`".into(),
            Tok::KwField => "`field`".into(),
            Tok::KwAgreement => "`agreement`".into(),
            Tok::KwIf => "`if`".into(),
            Tok::KwElse => "`else`".into(),
            Tok::KwNow => "`now`".into(),
            Tok::KwTrue => "`true`".into(),
            Tok::KwFalse => "`false`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Send => "`->`".into(),
            Tok::Lolli => "`-o`".into(),
            Tok::Sched => "`>>`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::StarOp => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn lex(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = source.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            toks.push(Spanned { tok: $tok, pos: $pos })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = Pos { line, col };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '{' => { push!(Tok::LBrace, pos); i += 1; col += 1; }
            '}' => { push!(Tok::RBrace, pos); i += 1; col += 1; }
            '(' => { push!(Tok::LParen, pos); i += 1; col += 1; }
            ')' => { push!(Tok::RParen, pos); i += 1; col += 1; }
            '[' => { push!(Tok::LBracket, pos); i += 1; col += 1; }
            ']' => { push!(Tok::RBracket, pos); i += 1; col += 1; }
            ',' => { push!(Tok::Comma, pos); i += 1; col += 1; }
            ':' => { push!(Tok::Colon, pos); i += 1; col += 1; }
            ';' => { push!(Tok::Semi, pos); i += 1; col += 1; }
            '+' => { push!(Tok::Plus, pos); i += 1; col += 1; }
            '*' => { push!(Tok::StarOp, pos); i += 1; col += 1; }
            '/' => { push!(Tok::Slash, pos); i += 1; col += 1; }
            '-' => {
                // `-o` only when the `o` is a whole word, so `a - old` still
                // lexes as a subtraction.
                if i + 1 < bytes.len() && bytes[i + 1] == b'o'
                    && !(i + 2 < bytes.len() && is_ident_continue(bytes[i + 2]))
                {
                    push!(Tok::Lolli, pos);
                    i += 2;
                    col += 2;
                } else if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    push!(Tok::Send, pos);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Minus, pos);
                    i += 1;
                    col += 1;
                }
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::EqEq, pos);
                    i += 2;
                    col += 2;
                } else if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    push!(Tok::Arrow, pos);
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError::syntax(pos, "`==` or `=>`", "`=`"));
                }
            }
            '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    push!(Tok::Sched, pos);
                    i += 2;
                    col += 2;
                } else if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Ge, pos);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Gt, pos);
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Le, pos);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Lt, pos);
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::NotEq, pos);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Bang, pos);
                    i += 1;
                    col += 1;
                }
            }
            '&' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'&' {
                    push!(Tok::AndAnd, pos);
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError::syntax(pos, "`&&`", "`&`"));
                }
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    push!(Tok::OrOr, pos);
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError::syntax(pos, "`||`", "`|`"));
                }
            }
            '@' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && is_ident_continue(bytes[j]) {
                    j += 1;
                }
                if j == start {
                    return Err(ParseError::syntax(pos, "state name after `@`", "`@`"));
                }
                let name = source[start..j].to_string();
                let len = (j - i) as u32;
                push!(Tok::State(name), pos);
                i = j;
                col += len;
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' && bytes[j] != b'\n' {
                    j += 1;
                }
                if j >= bytes.len() || bytes[j] != b'"' {
                    return Err(ParseError::syntax(pos, "closing `\"`", "unterminated string"));
                }
                let text = source[start..j].to_string();
                let len = (j + 1 - i) as u32;
                push!(Tok::Str(text), pos);
                i = j + 1;
                col += len;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let text = &source[start..j];
                let n: i64 = text.parse().map_err(|_| {
                    ParseError::syntax(pos, "integer within range", &format!("`{text}`"))
                })?;
                let len = (j - i) as u32;
                push!(Tok::Int(n), pos);
                i = j;
                col += len;
            }
            c if is_ident_start(c as u8) => {
                let start = i;
                let mut j = i;
                while j < bytes.len() && is_ident_continue(bytes[j]) {
                    j += 1;
                }
                let text = &source[start..j];
                let tok = match text {
                    "stipula" => Tok::KwStipula,
                    "asset" => Tok::KwAsset,
                    "field" => Tok::KwField,
                    "agreement" => Tok::KwAgreement,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "now" => Tok::KwNow,
                    "true" => Tok::KwTrue,
                    "false" => Tok::KwFalse,
                    _ => Tok::Ident(text.to_string()),
                };
                let len = (j - i) as u32;
                push!(tok, pos);
                i = j;
                col += len;
            }
            other => {
                return Err(ParseError::syntax(
                    pos,
                    "a token",
                    &format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    toks.push(Spanned { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(toks)
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}
