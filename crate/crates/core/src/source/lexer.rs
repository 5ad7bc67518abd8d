//! Tokenizer for `.bfo` source text.

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Digits with an optional fractional part, kept as text so ownership
    /// literals stay exact.
    Num(String),
    Kw(Kw),
    Sym(&'static str),
    Underscore,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Let,
    In,
    Mkref,
    If,
    Ifz,
    Then,
    Else,
    Alias,
    As,
    Newlft,
    Endlft,
    Fail,
    Fn,
    Int,
    Ref,
    Lend,
    Borrow,
    Assert,
}

const KEYWORDS: &[(&str, Kw)] = &[
    ("let", Kw::Let),
    ("in", Kw::In),
    ("mkref", Kw::Mkref),
    ("if", Kw::If),
    ("ifz", Kw::Ifz),
    ("then", Kw::Then),
    ("else", Kw::Else),
    ("alias", Kw::Alias),
    ("as", Kw::As),
    ("newlft", Kw::Newlft),
    ("endlft", Kw::Endlft),
    ("fail", Kw::Fail),
    ("fn", Kw::Fn),
    ("int", Kw::Int),
    ("ref", Kw::Ref),
    ("lend", Kw::Lend),
    ("borrow", Kw::Borrow),
    ("assert", Kw::Assert),
];

// longest first
const SYMBOLS: &[&str] = &[
    ":=", "<=", ">=", "!=", "&&", "->", "=>", "(", ")", "{", "}", "<", ">", ",", ";", ":", "=",
    "*", "+", "-", "/",
];

pub fn keyword_text(kw: Kw) -> &'static str {
    KEYWORDS
        .iter()
        .find(|(_, k)| *k == kw)
        .map(|(s, _)| *s)
        .unwrap()
}

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|(k, _)| *k == s)
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let text: String = chars[i..j].iter().collect();
            out.push(Token {
                tok: Tok::Num(text),
                pos,
            });
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if ident_start(c) {
            let mut j = i + 1;
            while j < chars.len() && ident_continue(chars[j]) {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let tok = if text == "_" {
                Tok::Underscore
            } else if let Some((_, kw)) = KEYWORDS.iter().find(|(k, _)| *k == text) {
                Tok::Kw(*kw)
            } else {
                Tok::Ident(text)
            };
            out.push(Token { tok, pos });
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    pos,
                });
                advance(&mut i, &mut line, &mut col, s.chars().count());
            }
            None => {
                return Err(ParseError::new(pos, format!("unexpected character `{c}`")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}
