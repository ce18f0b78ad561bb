use super::{FrontendError, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Con(String),
    Int(i64),
    Char(char),
    Str(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Con(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Char(c) => format!("{c:?}"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// First token on its line, so it may open or close a layout block.
    pub line_start: bool,
}

const KEYWORDS: &[&str] = &[
    "data", "input", "where", "let", "in", "case", "of", "if", "then", "else", "forall", "mu",
];

// Longest first so that `<**>` wins over `<*>` and `<`.
const SYMBOLS: &[&str] = &[
    "<**>", "<*>", "->", "::", "|>", "<=", ">=", "==", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "\\", "|",
    "+", "-", "*", "<", ">", ".",
];

pub fn lex(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let span = Span { line, col };
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == "_" {
                Tok::Sym("_")
            } else if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                Tok::Kw(k)
            } else if c.is_ascii_uppercase() {
                Tok::Con(word)
            } else {
                Tok::Ident(word)
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse().map_err(|_| FrontendError::syntax(span, "integer literal out of range"))?;
            Tok::Int(n)
        } else if c == '\'' {
            i += 1;
            let ch = read_char(&chars, &mut i, '\'').ok_or_else(|| FrontendError::syntax(span, "bad character literal"))?;
            if chars.get(i) != Some(&'\'') {
                return Err(FrontendError::syntax(span, "unterminated character literal"));
            }
            i += 1;
            Tok::Char(ch)
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(FrontendError::syntax(span, "unterminated string literal")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    _ => s.push(read_char(&chars, &mut i, '"').ok_or_else(|| FrontendError::syntax(span, "bad escape"))?),
                }
            }
            Tok::Str(s)
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src_at(&chars, i, s)) {
            i += sym.chars().count();
            Tok::Sym(sym)
        } else {
            return Err(FrontendError::syntax(span, format!("unexpected character {c:?}")));
        };
        col += (i - start) as u32;
        out.push(Token { tok, span, line_start });
        line_start = false;
    }
    out.push(Token { tok: Tok::Eof, span: Span { line: line + 1, col: 1 }, line_start: true });
    Ok(out)
}

fn src_at(chars: &[char], i: usize, s: &str) -> bool {
    s.chars().enumerate().all(|(k, c)| chars.get(i + k) == Some(&c))
}

fn read_char(chars: &[char], i: &mut usize, quote: char) -> Option<char> {
    let c = *chars.get(*i)?;
    *i += 1;
    if c == quote {
        return None;
    }
    if c != '\\' {
        return Some(c);
    }
    let e = *chars.get(*i)?;
    *i += 1;
    Some(match e {
        'n' => '\n',
        't' => '\t',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        '0' => '\0',
        _ => return None,
    })
}
