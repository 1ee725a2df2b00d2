use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokKind {
    Ident(String),
    Number(String),
    Sym(char),
    Arrow,
    FatArrow,
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tok {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
}

impl Tok {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokKind::Ident(s) | TokKind::Number(s) => format!("`{s}`"),
            TokKind::Sym(c) => format!("`{c}`"),
            TokKind::Arrow => "`->`".into(),
            TokKind::FatArrow => "`=>`".into(),
            TokKind::Newline => "end of line".into(),
            TokKind::Eof => "end of input".into(),
        }
    }
}

const SYMBOLS: &str = "()[]{},:;?!=";

pub(crate) fn lex(text: &str) -> Result<Vec<Tok>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let push = |out: &mut Vec<Tok>, kind| {
            out.push(Tok {
                kind,
                line: start.0,
                col: start.1,
            })
        };
        if c == '\n' {
            push(&mut out, TokKind::Newline);
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            push(&mut out, TokKind::Ident(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            push(&mut out, TokKind::Arrow);
            i += 2;
            col += 2;
        } else if c == '=' && chars.get(i + 1) == Some(&'>') {
            push(&mut out, TokKind::FatArrow);
            i += 2;
            col += 2;
        } else if c.is_ascii_digit() || c == '-' || c == '.' {
            let mut s = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || (chars[i] == '-' && s.is_empty())
                    || ((chars[i] == 'e' || chars[i] == 'E') && !s.is_empty())
                    || ((chars[i] == '+' || chars[i] == '-') && matches!(s.chars().last(), Some('e' | 'E'))))
            {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            if s.parse::<f64>().is_err() {
                return Err(ParseError {
                    line: start.0,
                    column: start.1,
                    expected: "number".into(),
                    found: format!("`{s}`"),
                });
            }
            push(&mut out, TokKind::Number(s));
        } else if SYMBOLS.contains(c) {
            push(&mut out, TokKind::Sym(c));
            i += 1;
            col += 1;
        } else {
            return Err(ParseError {
                line,
                column: col,
                expected: "token".into(),
                found: format!("`{c}`"),
            });
        }
    }
    out.push(Tok {
        kind: TokKind::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based_in_chars() {
        let toks = lex("é a\n  -1.5e3 ->").unwrap_err();
        assert_eq!((toks.line, toks.column), (1, 1));
        let toks = lex("a b\n  -1.5e3 ->").unwrap();
        assert_eq!(toks[1].col, 3);
        assert_eq!(toks[3].kind, TokKind::Number("-1.5e3".into()));
        assert_eq!((toks[3].line, toks[3].col), (2, 3));
        assert_eq!(toks[4].kind, TokKind::Arrow);
    }

    #[test]
    fn comments_are_skipped() {
        let toks = lex("# hi\nx # there").unwrap();
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn bad_number_is_reported() {
        let e = lex("x 1.2.3").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }
}
