use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Ident,
    Integer,
    Operator,
    Bracket,
    Keyword,
}

/// A lexical token. `text` is the normalized spelling: unicode aliases
/// carry the text of their ASCII counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unexpected character {ch:?} at offset {offset}")]
pub struct LexError {
    pub offset: usize,
    pub ch: char,
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "with", "and", "or", "not", "in", "let", "True", "False", "rat", "tuple",
];

// Longest first.
const OPERATORS: &[&str] = &[
    ":<=>", "<=>", ":=", "=>", "<=", ">=", "!=", "..", "=", "<", ">", "+", "-", "*", "/", "^", "_",
    ",", ":", "|",
];

fn unicode_alias(c: char) -> Option<(TokenKind, &'static str)> {
    Some(match c {
        '∀' => (TokenKind::Keyword, "forall"),
        '∃' => (TokenKind::Keyword, "exists"),
        '∧' => (TokenKind::Keyword, "and"),
        '∨' => (TokenKind::Keyword, "or"),
        '¬' => (TokenKind::Keyword, "not"),
        '∈' => (TokenKind::Keyword, "in"),
        '⇒' => (TokenKind::Operator, "=>"),
        '⇔' => (TokenKind::Operator, "<=>"),
        '≤' => (TokenKind::Operator, "<="),
        '≥' => (TokenKind::Operator, ">="),
        '≠' => (TokenKind::Operator, "!="),
        '…' => (TokenKind::Operator, ".."),
        '⟨' => (TokenKind::Bracket, "⟨"),
        '⟩' => (TokenKind::Bracket, "⟩"),
        _ => return None,
    })
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        if c.is_ascii_alphabetic() {
            let len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric())
                .count();
            let word = &rest[..len];
            let kind = if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            tokens.push(Token {
                kind,
                text: word.to_string(),
                start: pos,
                end: pos + len,
            });
            pos += len;
            continue;
        }
        if c.is_ascii_digit() {
            let len = rest.bytes().take_while(u8::is_ascii_digit).count();
            if rest[..len].parse::<i64>().is_err() {
                return Err(LexError { offset: pos, ch: c });
            }
            tokens.push(Token {
                kind: TokenKind::Integer,
                text: rest[..len].to_string(),
                start: pos,
                end: pos + len,
            });
            pos += len;
            continue;
        }
        // `:⟺` is the only multi-character unicode spelling.
        if rest.starts_with(":⟺") {
            let len = ":⟺".len();
            tokens.push(Token {
                kind: TokenKind::Operator,
                text: ":<=>".into(),
                start: pos,
                end: pos + len,
            });
            pos += len;
            continue;
        }
        if let Some((kind, norm)) = unicode_alias(c) {
            tokens.push(Token {
                kind,
                text: norm.to_string(),
                start: pos,
                end: pos + c.len_utf8(),
            });
            pos += c.len_utf8();
            continue;
        }
        if matches!(bytes[pos], b'(' | b')' | b'[' | b']' | b'{' | b'}') {
            tokens.push(Token {
                kind: TokenKind::Bracket,
                text: c.to_string(),
                start: pos,
                end: pos + 1,
            });
            pos += 1;
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            tokens.push(Token {
                kind: TokenKind::Operator,
                text: op.to_string(),
                start: pos,
                end: pos + op.len(),
            });
            pos += op.len();
            continue;
        }
        return Err(LexError { offset: pos, ch: c });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_texts(s: &str) -> Vec<(TokenKind, String)> {
        tokenize(s)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn index_expression() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_texts("b_j >= 0"),
            vec![
                (Ident, "b".into()),
                (Operator, "_".into()),
                (Ident, "j".into()),
                (Operator, ">=".into()),
                (Integer, "0".into()),
            ]
        );
    }

    #[test]
    fn aliases_match_ascii() {
        let pairs = [
            ("∀", "forall"),
            ("∃", "exists"),
            ("∧", "and"),
            ("∨", "or"),
            ("¬", "not"),
            ("⇒", "=>"),
            ("⇔", "<=>"),
            ("≤", "<="),
            ("≥", ">="),
            ("≠", "!="),
            ("∈", "in"),
            (":⟺", ":<=>"),
        ];
        for (u, a) in pairs {
            assert_eq!(kinds_and_texts(u), kinds_and_texts(a), "{u} vs {a}");
        }
    }

    #[test]
    fn outside_alphabet() {
        assert_eq!(tokenize("@"), Err(LexError { offset: 0, ch: '@' }));
        let err = tokenize("a + @").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn spans_cover_non_whitespace() {
        let src = "bids[b] :⟺ ∀ j = 1..|b| : b_j ≥ 0";
        let toks = tokenize(src).unwrap();
        let mut covered = vec![false; src.len()];
        let mut last_end = 0;
        for t in &toks {
            assert!(t.start >= last_end, "overlap at {}", t.start);
            last_end = t.end;
            for c in covered.iter_mut().take(t.end).skip(t.start) {
                *c = true;
            }
        }
        for (i, ch) in src.char_indices() {
            if !ch.is_whitespace() {
                assert!(covered[i], "offset {i} not covered");
            }
        }
    }

    #[test]
    fn integer_overflow_is_an_error() {
        assert!(tokenize("99999999999999999999").is_err());
    }
}
