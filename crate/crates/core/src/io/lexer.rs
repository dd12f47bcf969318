use super::{ParseError, SourceFile};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// A double-quoted name; never a keyword.
    Quoted(String),
    Punct(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

const PUNCT: [&str; 17] = ["->", "=>", "(", ")", "{", "}", ",", ":", ".", "=", "&", "|", "~", ";", "/", "[", "]"];

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

/// True when `s` lexes as a single bare identifier.
pub fn is_plain(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_ident_char)
}

/// `s` as written in DSL files: bare when plain, quoted otherwise.
pub fn quote(s: &str) -> String {
    if is_plain(s) {
        return s.to_string();
    }
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn lex(src: &SourceFile) -> Result<Vec<Token>, ParseError> {
    let text = src.text.as_str();
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = it.peek() {
                if c == '\n' {
                    break;
                }
                it.next();
            }
            continue;
        }
        if is_ident_char(c) {
            let mut end = i;
            while let Some(&(j, c)) = it.peek() {
                if !is_ident_char(c) {
                    break;
                }
                end = j + c.len_utf8();
                it.next();
            }
            out.push(Token {
                tok: Tok::Ident(text[i..end].to_string()),
                start: i,
                end,
            });
            continue;
        }
        if c == '"' {
            it.next();
            let mut s = String::new();
            let mut closed = None;
            while let Some((j, c)) = it.next() {
                match c {
                    '"' => {
                        closed = Some(j + 1);
                        break;
                    }
                    '\\' => match it.next() {
                        Some((_, 'n')) => s.push('\n'),
                        Some((_, c)) => s.push(c),
                        None => break,
                    },
                    c => s.push(c),
                }
            }
            let Some(end) = closed else {
                return Err(src.error(i, text.len(), "unterminated quoted name"));
            };
            out.push(Token {
                tok: Tok::Quoted(s),
                start: i,
                end,
            });
            continue;
        }
        let rest = &text[i..];
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for _ in 0..p.chars().count() {
                    it.next();
                }
                out.push(Token {
                    tok: Tok::Punct(p),
                    start: i,
                    end: i + p.len(),
                });
            }
            None => return Err(src.error(i, i + c.len_utf8(), format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

/// Cursor over a token list.
pub struct Cursor<'a> {
    pub src: &'a SourceFile,
    pub toks: Vec<Token>,
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a SourceFile) -> Result<Self, ParseError> {
        Ok(Cursor {
            src,
            toks: lex(src)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// Byte offset of the next token, or the end of input.
    pub fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.start).unwrap_or(self.src.text.len())
    }

    /// End offset of the previous token.
    pub fn last_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        match self.toks.get(self.pos) {
            Some(t) => self.src.error(t.start, t.end, msg),
            None => self.src.error(self.src.text.len(), self.src.text.len(), msg),
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`{}", self.found())))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`{}", self.found())))
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            None => ", found end of input".into(),
            Some(Tok::Ident(s)) => format!(", found `{s}`"),
            Some(Tok::Quoted(s)) => format!(", found {}", quote(s)),
            Some(Tok::Punct(p)) => format!(", found `{p}`"),
        }
    }

    /// A bare or quoted name.
    pub fn name(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some(Token {
                tok: Tok::Ident(s) | Tok::Quoted(s),
                start,
                end,
            }) => {
                let r = (s.clone(), *start, *end);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.error(format!("expected {what}{}", self.found()))),
        }
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(format!("unexpected input{}", self.found())))
        }
    }
}
