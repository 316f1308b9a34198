use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no <label>...</label> span in completion")]
    MissingLabel,
    #[error("label span {0:?} is neither FOO nor BAR")]
    UnknownLabel(String),
    #[error("no \"best_description\" declaration in completion")]
    MissingDeclaration,
}

/// Preference outcome; `None` is the "no preference" answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preference {
    First,
    Second,
    None,
}

impl Preference {
    pub fn code(self) -> Option<u8> {
        match self {
            Preference::First => Some(1),
            Preference::Second => Some(2),
            Preference::None => None,
        }
    }

    pub fn from_code(c: Option<u8>) -> Option<Self> {
        match c {
            Some(1) => Some(Preference::First),
            Some(2) => Some(Preference::Second),
            None => Some(Preference::None),
            _ => None,
        }
    }
}

fn label_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?is)<label>(.*?)</label>").expect("label regex"))
}

fn best_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""best_description"\s*:\s*(1|2|None)"#).expect("best_description regex"))
}

/// Reads the last `<label>` span: FOO is 1, BAR is 0.
pub fn parse_binary_response(completion: &str) -> Result<u8, ParseError> {
    let cap = label_re().captures_iter(completion).last().ok_or(ParseError::MissingLabel)?;
    let raw = cap.get(1).expect("group 1").as_str();
    let body = raw.trim().trim_start_matches('[').trim_end_matches(']').trim();
    if body.eq_ignore_ascii_case("foo") {
        Ok(1)
    } else if body.eq_ignore_ascii_case("bar") {
        Ok(0)
    } else {
        Err(ParseError::UnknownLabel(raw.to_string()))
    }
}

/// Reads the last `"best_description": X` declaration.
pub fn parse_ranking_response(completion: &str) -> Result<Preference, ParseError> {
    let cap = best_re().captures_iter(completion).last().ok_or(ParseError::MissingDeclaration)?;
    Ok(match cap.get(1).expect("group 1").as_str() {
        "1" => Preference::First,
        "2" => Preference::Second,
        _ => Preference::None,
    })
}

/// Completion in the requested format carrying `label` (1 = FOO).
pub fn binary_completion(label: u8) -> String {
    let tag = if label == 1 { "FOO" } else { "BAR" };
    format!(
        "<knowledge> A roguelike dungeon crawler. </knowledge>\n<analysis> Rated by rule table. </analysis>\n<label> {tag} </label>"
    )
}

pub fn ranking_completion(pref: Preference) -> String {
    let v = match pref {
        Preference::First => "1",
        Preference::Second => "2",
        Preference::None => "None",
    };
    format!("Comparative analysis by rule table.\n(\"best_description\": {v})")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_examples() {
        assert_eq!(parse_binary_response("...<label> FOO </label>"), Ok(1));
        assert_eq!(parse_binary_response("...<label>bar</label>"), Ok(0));
        assert_eq!(parse_binary_response("<label> [Foo] </label>"), Ok(1));
        assert_eq!(parse_binary_response("no tags here"), Err(ParseError::MissingLabel));
        assert!(matches!(parse_binary_response("<label> maybe </label>"), Err(ParseError::UnknownLabel(_))));
        // Template echo followed by the answer: the last span wins.
        assert_eq!(parse_binary_response("<label> [FOO/BAR] </label>\n<label>\nBAR\n</label>"), Ok(0));
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(parse_ranking_response("...(\"best_description\": 2)"), Ok(Preference::Second));
        assert_eq!(parse_ranking_response("(\"best_description\": None)"), Ok(Preference::None));
        assert_eq!(parse_ranking_response("(\"best_description\":1)"), Ok(Preference::First));
        assert_eq!(parse_ranking_response("no declaration"), Err(ParseError::MissingDeclaration));
    }

    #[test]
    fn round_trip() {
        for l in [0, 1] {
            assert_eq!(parse_binary_response(&binary_completion(l)), Ok(l));
        }
        for p in [Preference::First, Preference::Second, Preference::None] {
            assert_eq!(parse_ranking_response(&ranking_completion(p)), Ok(p));
        }
    }
}
