use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::options::OptionLetter;
use crate::taskforge::{PromptMode, DIRECT_ANSWER_PREFIX};

/// Result of parsing one response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParsedAnswer {
    Letter(OptionLetter),
    Invalid,
    /// Set by the adapter when generation timed out.
    InvalidTimeout,
}

impl fmt::Display for ParsedAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParsedAnswer::Letter(l) => write!(f, "{l}"),
            ParsedAnswer::Invalid => f.write_str("INVALID"),
            ParsedAnswer::InvalidTimeout => f.write_str("INVALID-TIMEOUT"),
        }
    }
}

impl FromStr for ParsedAnswer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "INVALID" => Ok(ParsedAnswer::Invalid),
            "INVALID-TIMEOUT" => Ok(ParsedAnswer::InvalidTimeout),
            _ => s.parse().map(ParsedAnswer::Letter),
        }
    }
}

impl Serialize for ParsedAnswer {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParsedAnswer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

static STANDALONE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-D])\b").expect("valid regex"));
static ANSWER_IS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i:answer\s+is)\s*:?\s*[*(\[]*([A-D])\b").expect("valid regex"));

fn letter(m: regex::Captures<'_>) -> ParsedAnswer {
    let c = m[1].chars().next().expect("one-letter capture");
    ParsedAnswer::Letter(OptionLetter::from_char(c).expect("capture is A-D"))
}

/// Extracts the chosen option from a model response.
///
/// Direct mode takes the first standalone `A`-`D` after the answer prefix
/// (or from the start when the prefix is not echoed). CoT mode takes the
/// last "answer is X" (case-insensitive phrase), falling back to the last
/// standalone `A`-`D`. No match gives `Invalid`.
pub fn parse_answer(raw: &str, mode: PromptMode) -> ParsedAnswer {
    match mode {
        PromptMode::Direct => {
            let prefix = DIRECT_ANSWER_PREFIX.trim_end();
            let rest = raw.find(prefix).map_or(raw, |i| &raw[i + prefix.len()..]);
            STANDALONE.captures(rest).map_or(ParsedAnswer::Invalid, letter)
        }
        PromptMode::Cot => ANSWER_IS
            .captures_iter(raw)
            .last()
            .or_else(|| STANDALONE.captures_iter(raw).last())
            .map_or(ParsedAnswer::Invalid, letter),
    }
}

/// A canonical response choosing `l`, which parses back to `l`.
pub fn render_answer(l: OptionLetter, mode: PromptMode) -> String {
    match mode {
        PromptMode::Direct => format!("{DIRECT_ANSWER_PREFIX}{l}"),
        PromptMode::Cot => format!("Comparing the shapes, the answer is {l}."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use OptionLetter::*;
    use ParsedAnswer::{Invalid, Letter};

    #[test]
    fn direct() {
        assert_eq!(parse_answer("The correct answer is C", PromptMode::Direct), Letter(C));
        assert_eq!(parse_answer("B", PromptMode::Direct), Letter(B));
        assert_eq!(parse_answer(" (D). Because A is wrong", PromptMode::Direct), Letter(D));
        assert_eq!(parse_answer("REF matches A", PromptMode::Direct), Letter(A));
        assert_eq!(parse_answer("Answer", PromptMode::Direct), Invalid);
        assert_eq!(parse_answer("", PromptMode::Direct), Invalid);
    }

    #[test]
    fn cot() {
        let t = "...REF is a brick and Choice D is a brick so the answer is D.";
        assert_eq!(parse_answer(t, PromptMode::Cot), Letter(D));
        assert_eq!(parse_answer("I cannot tell.", PromptMode::Cot), Invalid);
        assert_eq!(parse_answer("The answer is A. Wait, the Answer is: **B**", PromptMode::Cot), Letter(B));
        assert_eq!(parse_answer("Option C looks closest, then B.", PromptMode::Cot), Letter(B));
        // The phrase is case-insensitive, the letter is not.
        assert_eq!(parse_answer("the answer is a brick, so C", PromptMode::Cot), Letter(C));
        assert_eq!(parse_answer("ANSWER IS (A)", PromptMode::Cot), Letter(A));
    }

    #[test]
    fn render_roundtrip() {
        for l in OptionLetter::ALL {
            for mode in [PromptMode::Direct, PromptMode::Cot] {
                let once = parse_answer(&render_answer(l, mode), mode);
                assert_eq!(once, Letter(l));
                let ParsedAnswer::Letter(again) = once else { unreachable!() };
                assert_eq!(parse_answer(&render_answer(again, mode), mode), once);
            }
        }
    }

    #[test]
    fn serde_strings() {
        assert_eq!(serde_json::to_string(&Letter(A)).unwrap(), "\"A\"");
        assert_eq!(serde_json::to_string(&Invalid).unwrap(), "\"INVALID\"");
        assert_eq!(serde_json::from_str::<ParsedAnswer>("\"INVALID-TIMEOUT\"").unwrap(), ParsedAnswer::InvalidTimeout);
        assert!(serde_json::from_str::<ParsedAnswer>("\"E\"").is_err());
    }
}
