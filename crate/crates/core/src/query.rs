//! Tokenization, term patterns, and the three query shapes a study needs.
//!
//! The canonical string form doubles as fixture key, cache key, web search
//! string and command-line syntax:
//!
//! | query                      | canonical           |
//! |----------------------------|---------------------|
//! | `Word(fish)`               | `fish`              |
//! | `Phrase(pet fish)`         | `"pet fish"`        |
//! | `And(p, q)`                | `p q`               |
//! | `AndNot(p, q)`             | `p -q`              |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::QueryError;

/// Lowercases `text` and splits it into maximal runs of alphanumeric
/// characters. Everything else, hyphens included, separates tokens.
pub fn normalize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            // Lowercasing can emit combining marks (U+0130 -> "i\u{307}");
            // keep only what would survive a second pass.
            current.extend(ch.to_lowercase().filter(|c| c.is_alphanumeric()));
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn is_normalized_token(token: &str) -> bool {
    !token.is_empty() && normalize(token).len() == 1 && normalize(token)[0] == token
}

/// A single word or an exact multi-word phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermPattern {
    Word(String),
    Phrase(Vec<String>),
}

impl TermPattern {
    pub fn word(token: &str) -> Result<Self, QueryError> {
        if !is_normalized_token(token) {
            return Err(QueryError::UnnormalizedToken(token.to_string()));
        }
        Ok(TermPattern::Word(token.to_string()))
    }

    pub fn phrase<S: AsRef<str>>(tokens: &[S]) -> Result<Self, QueryError> {
        if tokens.len() < 2 {
            return Err(QueryError::Malformed {
                query: tokens
                    .iter()
                    .map(|t| t.as_ref())
                    .collect::<Vec<_>>()
                    .join(" "),
                reason: "a phrase needs at least two tokens".into(),
            });
        }
        let mut out = Vec::with_capacity(tokens.len());
        for t in tokens {
            let t = t.as_ref();
            if !is_normalized_token(t) {
                return Err(QueryError::UnnormalizedToken(t.to_string()));
            }
            out.push(t.to_string());
        }
        Ok(TermPattern::Phrase(out))
    }

    /// Normalizes free text into a pattern: one token gives a word, more give
    /// a phrase. `"Pet-Fish"` becomes the phrase `pet fish`.
    pub fn from_text(text: &str) -> Result<Self, QueryError> {
        let mut tokens = normalize(text);
        match tokens.len() {
            0 => Err(QueryError::EmptyPattern),
            1 => Ok(TermPattern::Word(tokens.pop().unwrap())),
            _ => Ok(TermPattern::Phrase(tokens)),
        }
    }

    pub fn tokens(&self) -> &[String] {
        match self {
            TermPattern::Word(w) => std::slice::from_ref(w),
            TermPattern::Phrase(ts) => ts,
        }
    }

    pub fn is_phrase(&self) -> bool {
        matches!(self, TermPattern::Phrase(_))
    }
}

impl fmt::Display for TermPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermPattern::Word(w) => f.write_str(w),
            TermPattern::Phrase(ts) => write!(f, "\"{}\"", ts.join(" ")),
        }
    }
}

impl FromStr for TermPattern {
    type Err = QueryError;

    /// Accepts both the canonical form (`"pet fish"`) and bare text.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let inner = s
            .strip_prefix('"')
            .and_then(|rest| rest.strip_suffix('"'))
            .unwrap_or(s);
        TermPattern::from_text(inner)
    }
}

impl Serialize for TermPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TermPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A document-level count question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Query {
    Pattern(TermPattern),
    And(TermPattern, TermPattern),
    AndNot(TermPattern, TermPattern),
}

impl Query {
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl From<TermPattern> for Query {
    fn from(p: TermPattern) -> Self {
        Query::Pattern(p)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Pattern(p) => write!(f, "{p}"),
            Query::And(p, q) => write!(f, "{p} {q}"),
            Query::AndNot(p, q) => write!(f, "{p} -{q}"),
        }
    }
}

/// Deterministic serialization used for fixtures, cache keys and requests.
pub fn canonical_query_string(query: &Query) -> String {
    query.canonical()
}

/// One lexical element of the query syntax.
struct Operand {
    negated: bool,
    pattern: TermPattern,
}

fn malformed(query: &str, reason: impl Into<String>) -> QueryError {
    QueryError::Malformed {
        query: query.to_string(),
        reason: reason.into(),
    }
}

fn lex(input: &str) -> Result<Vec<Operand>, QueryError> {
    let mut out = Vec::new();
    let mut rest = input.trim_start();
    while !rest.is_empty() {
        let negated = rest.starts_with('-');
        if negated {
            rest = &rest[1..];
        }
        let (text, tail) = if let Some(body) = rest.strip_prefix('"') {
            let end = body
                .find('"')
                .ok_or_else(|| malformed(input, "unterminated quote"))?;
            (&body[..end], &body[end + 1..])
        } else {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == '"')
                .unwrap_or(rest.len());
            (&rest[..end], &rest[end..])
        };
        let pattern = TermPattern::from_text(text).map_err(|e| match e {
            QueryError::EmptyPattern => malformed(input, "empty term"),
            other => other,
        })?;
        out.push(Operand { negated, pattern });
        rest = tail.trim_start();
    }
    Ok(out)
}

impl FromStr for Query {
    type Err = QueryError;

    /// Parses the canonical syntax. Bare terms are normalized, so `Pet-Fish`
    /// reads as the phrase `"pet fish"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut ops = lex(s)?.into_iter();
        let query = match (ops.next(), ops.next(), ops.next()) {
            (None, _, _) => return Err(QueryError::EmptyPattern),
            (Some(p), None, None) if !p.negated => Query::Pattern(p.pattern),
            (Some(p), Some(q), None) if !p.negated => {
                if q.negated {
                    Query::AndNot(p.pattern, q.pattern)
                } else {
                    Query::And(p.pattern, q.pattern)
                }
            }
            (Some(p), _, _) if p.negated => {
                return Err(malformed(s, "the first term cannot be negated"))
            }
            _ => return Err(malformed(s, "at most two terms are supported")),
        };
        Ok(query)
    }
}

impl Serialize for Query {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Query {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> TermPattern {
        TermPattern::word(s).unwrap()
    }

    fn ph(s: &str) -> TermPattern {
        TermPattern::phrase(&s.split(' ').collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Pet-Fish problem!"), ["pet", "fish", "problem"]);
        assert!(normalize("").is_empty());
        assert_eq!(normalize("guppy GUPPY Guppy"), ["guppy", "guppy", "guppy"]);
    }

    #[test]
    fn normalize_is_unicode_aware() {
        assert_eq!(normalize("Straße ÉCOLE 42x"), ["straße", "école", "42x"]);
        assert_eq!(normalize("ΣΟΦΙΑ—σοφία"), ["σοφια", "σοφία"]);
        assert_eq!(normalize("İstanbul"), ["istanbul"]);
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(
            Query::And(ph("pet fish"), w("guppy")).canonical(),
            "\"pet fish\" guppy"
        );
        assert_eq!(
            Query::AndNot(w("pet"), w("world")).canonical(),
            "pet -world"
        );
        assert_eq!(Query::Pattern(w("fish")).canonical(), "fish");
    }

    #[test]
    fn parse_canonical() {
        assert_eq!(
            "\"pet fish\" -guppy".parse::<Query>().unwrap(),
            Query::AndNot(ph("pet fish"), w("guppy"))
        );
        assert_eq!(
            "Pet-Fish".parse::<Query>().unwrap(),
            Query::Pattern(ph("pet fish"))
        );
        assert_eq!(
            "\"pet\"".parse::<Query>().unwrap(),
            Query::Pattern(w("pet"))
        );
    }

    #[test]
    fn parse_rejects_bad_shapes() {
        for bad in [
            "",
            "   ",
            "-pet",
            "a b c",
            "\"pet fish",
            "pet -\"\"",
            "-a b",
        ] {
            assert!(bad.parse::<Query>().is_err(), "{bad:?} parsed");
        }
    }

    #[test]
    fn pattern_constructors_validate() {
        assert!(TermPattern::word("Pet").is_err());
        assert!(TermPattern::word("pet fish").is_err());
        assert!(TermPattern::word("").is_err());
        assert!(TermPattern::phrase(&["pet"]).is_err());
        assert!(TermPattern::phrase(&["pet", "Fish"]).is_err());
        assert!(TermPattern::from_text(" -- ").is_err());
    }

    fn token() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z0-9]{1,6}",
            Just("é".to_string()),
            Just("straße".to_string())
        ]
    }

    fn pattern() -> impl Strategy<Value = TermPattern> {
        prop_oneof![
            token().prop_map(TermPattern::Word),
            prop::collection::vec(token(), 2..4).prop_map(TermPattern::Phrase),
        ]
    }

    fn query() -> impl Strategy<Value = Query> {
        prop_oneof![
            pattern().prop_map(Query::Pattern),
            (pattern(), pattern()).prop_map(|(p, q)| Query::And(p, q)),
            (pattern(), pattern()).prop_map(|(p, q)| Query::AndNot(p, q)),
        ]
    }

    proptest! {
        #[test]
        fn canonical_round_trips(q in query()) {
            let s = q.canonical();
            prop_assert_eq!(s.parse::<Query>().unwrap(), q);
        }

        #[test]
        fn normalized_tokens_are_stable(text in "\\PC{0,40}") {
            for t in normalize(&text) {
                prop_assert_eq!(normalize(&t), vec![t.clone()]);
            }
        }
    }
}
