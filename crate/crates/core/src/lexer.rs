//! Emoticon-aware tokenizer for short, noisy social posts, plus the pruning
//! pass that strips links, user handles, punctuation and articles.
//!
//! Scanning is a single left-to-right pass over the NFC-normalized text. At
//! every non-whitespace position the first rule that matches wins:
//!
//! 1. emoticon (verbatim, case-sensitive, longest table entry)
//! 2. URL (`http://`, `https://` or `www.` up to the next whitespace)
//! 3. mention (`@` plus 1..=50 letters, digits, `.` or `_`)
//! 4. number (digit run with internal `,` or `.`)
//! 5. word (letter run with internal apostrophe or hyphen, lowercased)
//! 6. punctuation (any other single character)
//!
//! Spans are character (not byte) offsets into the normalized text.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

const MAX_MENTION_LEN: usize = 50;
const ARTICLES: [&str; 3] = ["a", "an", "the"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Emoticon,
    Url,
    Mention,
    Number,
    Punct,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Word => "WORD",
            TokenKind::Emoticon => "EMOTICON",
            TokenKind::Url => "URL",
            TokenKind::Mention => "MENTION",
            TokenKind::Number => "NUMBER",
            TokenKind::Punct => "PUNCT",
        };
        f.write_str(s)
    }
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub surface: String,
    pub span: Span,
}

impl Token {
    pub fn new(kind: TokenKind, surface: impl Into<String>, start: usize, end: usize) -> Self {
        Token {
            kind,
            surface: surface.into(),
            span: Span { start, end },
        }
    }

    pub fn is(&self, kind: TokenKind) -> bool {
        self.kind == kind
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmoticonTableError {
    #[error("empty emoticon entry")]
    Empty,
    #[error("duplicate emoticon entry {0:?}")]
    Duplicate(String),
    #[error("emoticon {0:?} contains whitespace")]
    Whitespace(String),
}

/// Emoticons in matching order: longest first, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmoticonTable {
    entries: Vec<Vec<char>>,
}

impl EmoticonTable {
    pub fn new<I, S>(entries: I) -> Result<Self, EmoticonTableError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<Vec<char>> = Vec::new();
        for entry in entries {
            let normalized: String = entry.as_ref().nfc().collect();
            if normalized.is_empty() {
                return Err(EmoticonTableError::Empty);
            }
            if normalized.chars().any(char::is_whitespace) {
                return Err(EmoticonTableError::Whitespace(normalized));
            }
            let chars: Vec<char> = normalized.chars().collect();
            if out.contains(&chars) {
                return Err(EmoticonTableError::Duplicate(normalized));
            }
            out.push(chars);
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(EmoticonTable { entries: out })
    }

    pub fn empty() -> Self {
        EmoticonTable {
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = String> + '_ {
        self.entries.iter().map(|e| e.iter().collect())
    }

    fn longest_match(&self, text: &[char], at: usize) -> Option<usize> {
        let rest = &text[at..];
        self.entries
            .iter()
            .find(|e| rest.starts_with(e))
            .map(|e| e.len())
    }
}

/// NFC normalization applied before scanning; token spans index into this.
pub fn normalize(text: &str) -> String {
    text.nfc().collect()
}

pub fn tokenize(text: &str, table: &EmoticonTable) -> Vec<Token> {
    let chars: Vec<char> = text.nfc().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let (kind, len) = scan_one(&chars, i, table);
        let raw: String = chars[i..i + len].iter().collect();
        let surface = match kind {
            TokenKind::Word => raw.to_lowercase(),
            _ => raw,
        };
        tokens.push(Token::new(kind, surface, i, i + len));
        i += len;
    }
    tokens
}

fn scan_one(chars: &[char], at: usize, table: &EmoticonTable) -> (TokenKind, usize) {
    if let Some(len) = table.longest_match(chars, at) {
        return (TokenKind::Emoticon, len);
    }
    if let Some(len) = scan_url(chars, at) {
        return (TokenKind::Url, len);
    }
    if let Some(len) = scan_mention(chars, at) {
        return (TokenKind::Mention, len);
    }
    if let Some(len) = scan_joined(chars, at, is_digit, |c| c == ',' || c == '.') {
        return (TokenKind::Number, len);
    }
    if let Some(len) = scan_joined(chars, at, char::is_alphabetic, is_word_joiner) {
        return (TokenKind::Word, len);
    }
    (TokenKind::Punct, 1)
}

fn starts_with_ignore_ascii_case(chars: &[char], prefix: &str) -> bool {
    let mut it = chars.iter();
    prefix
        .chars()
        .all(|p| it.next().is_some_and(|c| c.eq_ignore_ascii_case(&p)))
}

fn scan_url(chars: &[char], at: usize) -> Option<usize> {
    let rest = &chars[at..];
    let prefix_len = ["https://", "http://", "www."]
        .iter()
        .find(|p| starts_with_ignore_ascii_case(rest, p))?
        .len();
    let len = rest
        .iter()
        .position(|c| c.is_whitespace())
        .unwrap_or(rest.len());
    debug_assert!(len >= prefix_len);
    Some(len)
}

fn scan_mention(chars: &[char], at: usize) -> Option<usize> {
    if chars[at] != '@' {
        return None;
    }
    let body = chars[at + 1..]
        .iter()
        .take(MAX_MENTION_LEN)
        .take_while(|&&c| c.is_alphanumeric() || c == '.' || c == '_')
        .count();
    (body > 0).then_some(body + 1)
}

fn is_digit(c: char) -> bool {
    c.is_numeric()
}

fn is_word_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Length of a maximal run of `unit` characters where single `joiner`
/// characters are allowed only between two `unit` characters.
fn scan_joined(
    chars: &[char],
    at: usize,
    unit: impl Fn(char) -> bool,
    joiner: impl Fn(char) -> bool,
) -> Option<usize> {
    if !unit(chars[at]) {
        return None;
    }
    let mut end = at + 1;
    loop {
        while end < chars.len() && unit(chars[end]) {
            end += 1;
        }
        if end + 1 < chars.len() && joiner(chars[end]) && unit(chars[end + 1]) {
            end += 1;
        } else {
            break;
        }
    }
    Some(end - at)
}

/// Drops URLs, mentions, punctuation and the articles "a", "an", "the".
pub fn prune(tokens: &[Token]) -> Vec<Token> {
    tokens.iter().filter(|t| keep(t)).cloned().collect()
}

fn keep(token: &Token) -> bool {
    match token.kind {
        TokenKind::Url | TokenKind::Mention | TokenKind::Punct => false,
        TokenKind::Word => !ARTICLES.contains(&token.surface.as_str()),
        TokenKind::Emoticon | TokenKind::Number => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmoticonTable {
        EmoticonTable::new([":-)", ":)", "=)", ":D", "☹", ":-(", ":(", "=(", "<3"]).unwrap()
    }

    fn kinds_and_surfaces(text: &str) -> Vec<(TokenKind, String)> {
        tokenize(text, &table())
            .into_iter()
            .map(|t| (t.kind, t.surface))
            .collect()
    }

    fn w(s: &str) -> (TokenKind, String) {
        (TokenKind::Word, s.to_string())
    }

    #[test]
    fn words_and_trailing_emoticon() {
        assert_eq!(
            kinds_and_surfaces("I am happy :-)"),
            vec![w("i"), w("am"), w("happy"), (TokenKind::Emoticon, ":-)".into())]
        );
    }

    #[test]
    fn heart_is_one_emoticon() {
        assert_eq!(
            kinds_and_surfaces("<3 u"),
            vec![(TokenKind::Emoticon, "<3".into()), w("u")]
        );
    }

    #[test]
    fn url_mention_punct() {
        assert_eq!(
            kinds_and_surfaces("see https://a.b @bob!"),
            vec![
                w("see"),
                (TokenKind::Url, "https://a.b".into()),
                (TokenKind::Mention, "@bob".into()),
                (TokenKind::Punct, "!".into()),
            ]
        );
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", &table()).is_empty());
        assert!(tokenize("  \t\n", &table()).is_empty());
    }

    #[test]
    fn longest_emoticon_wins() {
        assert_eq!(
            kinds_and_surfaces(":-(("),
            vec![(TokenKind::Emoticon, ":-(".into()), (TokenKind::Punct, "(".into())]
        );
    }

    #[test]
    fn emoticons_are_case_sensitive() {
        assert_eq!(
            kinds_and_surfaces(":d"),
            vec![(TokenKind::Punct, ":".into()), w("d")]
        );
        assert_eq!(kinds_and_surfaces(":D"), vec![(TokenKind::Emoticon, ":D".into())]);
    }

    #[test]
    fn hashtag_splits_into_punct_and_word() {
        assert_eq!(
            kinds_and_surfaces("#Monday"),
            vec![(TokenKind::Punct, "#".into()), w("monday")]
        );
    }

    #[test]
    fn numbers_with_internal_separators() {
        assert_eq!(
            kinds_and_surfaces("1,000.50 3."),
            vec![
                (TokenKind::Number, "1,000.50".into()),
                (TokenKind::Number, "3".into()),
                (TokenKind::Punct, ".".into()),
            ]
        );
    }

    #[test]
    fn words_with_apostrophe_and_hyphen() {
        assert_eq!(
            kinds_and_surfaces("Don't well-known -x y-"),
            vec![
                w("don't"),
                w("well-known"),
                (TokenKind::Punct, "-".into()),
                w("x"),
                w("y"),
                (TokenKind::Punct, "-".into()),
            ]
        );
    }

    #[test]
    fn www_url_and_bare_at() {
        assert_eq!(
            kinds_and_surfaces("WWW.example.com @ x"),
            vec![
                (TokenKind::Url, "WWW.example.com".into()),
                (TokenKind::Punct, "@".into()),
                w("x"),
            ]
        );
    }

    #[test]
    fn mention_capped_at_fifty() {
        let long = format!("@{}", "b".repeat(60));
        let toks = tokenize(&long, &table());
        assert_eq!(toks[0].kind, TokenKind::Mention);
        assert_eq!(toks[0].span, Span { start: 0, end: 51 });
        assert_eq!(toks[1].kind, TokenKind::Word);
    }

    #[test]
    fn spans_are_char_offsets() {
        let toks = tokenize("é ☹", &table());
        assert_eq!(toks[0].span, Span { start: 0, end: 1 });
        assert_eq!(toks[1].span, Span { start: 2, end: 3 });
    }

    #[test]
    fn decomposed_input_is_composed_first() {
        let toks = tokenize("Cafe\u{301}", &table());
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].surface, "café");
    }

    #[test]
    fn prune_examples() {
        let t = table();
        let surfaces = |text: &str| -> Vec<String> {
            prune(&tokenize(text, &t)).into_iter().map(|t| t.surface).collect()
        };
        assert_eq!(surfaces("the cat"), vec!["cat"]);
        assert_eq!(surfaces("http://x.y @someone hi"), vec!["hi"]);
        assert_eq!(surfaces("A an THE theory, 42 :)"), vec!["theory", "42", ":)"]);
        assert!(prune(&[]).is_empty());
    }

    #[test]
    fn table_rejects_bad_entries() {
        assert_eq!(EmoticonTable::new([""]), Err(EmoticonTableError::Empty));
        assert_eq!(
            EmoticonTable::new([":)", ":)"]),
            Err(EmoticonTableError::Duplicate(":)".into()))
        );
        assert!(EmoticonTable::new([": )"]).is_err());
    }

    #[test]
    fn table_orders_longest_first() {
        let t = EmoticonTable::new([":)", ":-)", "<3"]).unwrap();
        assert_eq!(t.iter().collect::<Vec<_>>(), vec![":-)", ":)", "<3"]);
    }
}
