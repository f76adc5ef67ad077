use super::ast::Pos;
use super::error::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(String),
    /// Punctuation and operators, by their spelling.
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest first, so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    "->", ":=", "<=", ">=", "==", "!=", "..", "||", "{", "}", "[", "]", "(", ")", ";", ",", ":", ".", "+", "-", "*",
    "/", "&", "|", "!", "<", ">", "=",
];

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
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
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            col += i - start;
            out.push(Token { tok: Tok::Num(chars[start..i].iter().collect()), pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
            return Err(ParseError::at(pos, format!("unexpected character `{c}`"), "remove it"));
        };
        advance(&mut i, &mut line, &mut col, sym.len());
        out.push(Token { tok: Tok::Sym(sym), pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, column: col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let t = lex("x <= 2 // c\n  0..3 0.25").unwrap();
        let toks: Vec<Tok> = t.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("x".into()),
                Tok::Sym("<="),
                Tok::Num("2".into()),
                Tok::Num("0".into()),
                Tok::Sym(".."),
                Tok::Num("3".into()),
                Tok::Num("0.25".into()),
                Tok::Eof
            ]
        );
        assert_eq!((t[3].pos.line, t[3].pos.column), (2, 3));
    }

    #[test]
    fn stray_character() {
        let e = lex("x # 1").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }
}
