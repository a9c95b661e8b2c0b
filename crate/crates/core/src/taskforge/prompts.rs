use serde::{Deserialize, Serialize};

use super::CorrespondenceInstance;

/// Question text shared by both answering modes. Shipped verbatim in
/// `templates/mcvqa_question.txt`.
pub const QUESTION_TEMPLATE: &str = include_str!("../../templates/mcvqa_question.txt");

/// Forced start of the assistant turn in direct mode.
pub const DIRECT_ANSWER_PREFIX: &str = "The correct answer is ";

/// Sentence appended to the question in chain-of-thought mode.
pub const COT_SUFFIX: &str = "Think step by step before choosing an option.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Direct,
    Cot,
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(PromptMode::Direct),
            "cot" => Ok(PromptMode::Cot),
            other => Err(format!("unknown prompt mode {other:?} (direct, cot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub direct_prompt: String,
    pub direct_answer_prefix: String,
    pub cot_prompt: String,
}

impl PromptBundle {
    pub fn standard() -> Self {
        let question = QUESTION_TEMPLATE.trim_end();
        Self {
            direct_prompt: question.to_string(),
            direct_answer_prefix: DIRECT_ANSWER_PREFIX.to_string(),
            cot_prompt: format!("{question}\n{COT_SUFFIX}"),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.direct_answer_prefix == DIRECT_ANSWER_PREFIX && self.cot_prompt.ends_with(COT_SUFFIX)
    }
}

/// User-turn text for `mode`. In direct mode the caller also forces
/// `prompt_bundle.direct_answer_prefix` as the start of the assistant turn.
pub fn emit_prompts(instance: &CorrespondenceInstance, mode: PromptMode) -> String {
    match mode {
        PromptMode::Direct => instance.prompt_bundle.direct_prompt.clone(),
        PromptMode::Cot => instance.prompt_bundle.cot_prompt.clone(),
    }
}

/// Assistant-turn prefix for `mode`, if any.
pub fn assistant_prefix(instance: &CorrespondenceInstance, mode: PromptMode) -> Option<&str> {
    match mode {
        PromptMode::Direct => Some(&instance.prompt_bundle.direct_answer_prefix),
        PromptMode::Cot => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_bundle_is_well_formed() {
        let b = PromptBundle::standard();
        assert!(b.is_well_formed());
        assert_eq!(b.direct_answer_prefix, "The correct answer is ");
        assert!(b.cot_prompt.ends_with("Think step by step before choosing an option."));
        assert!(b.cot_prompt.starts_with(&b.direct_prompt));
    }

    #[test]
    fn question_mentions_all_labels() {
        let q = PromptBundle::standard().direct_prompt;
        for label in ["\"REF\"", "\"A\"", "\"B\"", "\"C\"", "\"D\""] {
            assert!(q.contains(label), "{label}");
        }
    }
}
