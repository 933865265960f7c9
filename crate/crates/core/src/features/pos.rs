//! A small deterministic tagger over a closed subset of the Penn Treebank tagset.
//!
//! Resolution order per token: punctuation, closed-class lexicon, capitalised
//! non-initial token (proper noun), adjective lexicon, suffix rules, `NN`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::tokenize::is_punctuation;
use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    NN,
    NNS,
    NNP,
    NNPS,
    VB,
    VBZ,
    VBD,
    VBN,
    VBG,
    IN,
    DT,
    WP,
    WRB,
    JJ,
    OTHER,
}

impl PosTag {
    /// Tags that get a count dimension; `OTHER` is excluded.
    pub const COUNTED: [PosTag; 14] = [
        PosTag::NN,
        PosTag::NNS,
        PosTag::NNP,
        PosTag::NNPS,
        PosTag::VB,
        PosTag::VBZ,
        PosTag::VBD,
        PosTag::VBN,
        PosTag::VBG,
        PosTag::IN,
        PosTag::DT,
        PosTag::WP,
        PosTag::WRB,
        PosTag::JJ,
    ];

    /// Maps a tag string onto the closed tagset; anything unknown is `OTHER`.
    pub fn parse(tag: &str) -> PosTag {
        match tag.trim() {
            "NN" => PosTag::NN,
            "NNS" => PosTag::NNS,
            "NNP" => PosTag::NNP,
            "NNPS" => PosTag::NNPS,
            "VB" => PosTag::VB,
            "VBZ" => PosTag::VBZ,
            "VBD" => PosTag::VBD,
            "VBN" => PosTag::VBN,
            "VBG" => PosTag::VBG,
            "IN" => PosTag::IN,
            "DT" => PosTag::DT,
            "WP" => PosTag::WP,
            "WRB" => PosTag::WRB,
            "JJ" => PosTag::JJ,
            _ => PosTag::OTHER,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::NN => "NN",
            PosTag::NNS => "NNS",
            PosTag::NNP => "NNP",
            PosTag::NNPS => "NNPS",
            PosTag::VB => "VB",
            PosTag::VBZ => "VBZ",
            PosTag::VBD => "VBD",
            PosTag::VBN => "VBN",
            PosTag::VBG => "VBG",
            PosTag::IN => "IN",
            PosTag::DT => "DT",
            PosTag::WP => "WP",
            PosTag::WRB => "WRB",
            PosTag::JJ => "JJ",
            PosTag::OTHER => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn closed_class(lower: &str) -> Option<PosTag> {
    use PosTag::*;
    let tag = match lower {
        "the" | "a" | "an" | "this" | "that" | "these" | "those" | "all" | "some" | "every"
        | "each" | "any" | "no" | "both" | "another" => DT,
        "of" | "in" | "on" | "at" | "by" | "for" | "with" | "from" | "to" | "through" | "into"
        | "about" | "under" | "over" | "between" | "during" | "after" | "before" | "since"
        | "than" | "as" | "near" | "across" | "against" | "among" | "within" | "without"
        | "via" | "per" | "onto" | "upon" | "behind" | "beyond" | "like" => IN,
        "what" | "who" | "whom" | "whose" | "which" => WP,
        "when" | "where" | "why" | "how" => WRB,
        "is" | "does" | "has" => VBZ,
        "are" | "do" | "have" | "be" | "give" | "list" | "show" | "name" | "tell" | "find"
        | "count" => VB,
        "was" | "were" | "did" | "had" => VBD,
        "been" => VBN,
        "being" => VBG,
        "many" | "much" | "few" | "more" | "most" | "other" | "same" | "first" | "last"
        | "big" | "large" | "largest" | "small" | "smallest" | "old" | "oldest" | "new"
        | "newest" | "high" | "highest" | "tall" | "tallest" | "long" | "longest" | "famous"
        | "total" | "official" | "main" | "current" | "former" => JJ,
        // pronouns, modals, conjunctions, particles: outside the tagset
        "me" | "i" | "you" | "he" | "she" | "it" | "we" | "they" | "him" | "her" | "them"
        | "its" | "their" | "his" | "my" | "our" | "your" | "can" | "could" | "will"
        | "would" | "should" | "may" | "might" | "must" | "shall" | "and" | "or" | "but"
        | "not" | "there" | "also" | "so" => OTHER,
        _ => return None,
    };
    Some(tag)
}

const ADJECTIVE_SUFFIXES: [&str; 7] = ["ous", "ful", "ive", "able", "ible", "less", "ical"];

fn is_capitalised(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

fn is_numeric(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
        && token.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
}

fn tag_one(tokens: &[String], i: usize) -> PosTag {
    let token = tokens[i].as_str();
    if is_punctuation(token) || is_numeric(token) {
        return PosTag::OTHER;
    }
    let lower = token.to_lowercase();
    if let Some(tag) = closed_class(&lower) {
        return tag;
    }
    let prev = i.checked_sub(1).map(|j| tokens[j].to_lowercase());
    let aux_before = tokens[i.saturating_sub(3)..i].iter().any(|t| {
        matches!(
            t.to_lowercase().as_str(),
            "is" | "are" | "was" | "were" | "be" | "been" | "has" | "have" | "had"
        )
    });
    if i > 0 && is_capitalised(token) {
        if prev.as_deref() == Some("the") && lower.len() > 3 && lower.ends_with('s') && !lower.ends_with("ss") {
            return PosTag::NNPS;
        }
        return PosTag::NNP;
    }
    if ADJECTIVE_SUFFIXES.iter().any(|s| lower.len() > s.len() + 2 && lower.ends_with(s)) {
        return PosTag::JJ;
    }
    if lower.len() > 4 && lower.ends_with("ing") {
        return PosTag::VBG;
    }
    if lower.len() > 3 && lower.ends_with("ed") {
        return if aux_before { PosTag::VBN } else { PosTag::VBD };
    }
    if lower.len() > 2
        && lower.ends_with('s')
        && !lower.ends_with("ss")
        && !lower.ends_with("us")
        && !lower.ends_with("is")
    {
        return PosTag::NNS;
    }
    PosTag::NN
}

/// Tags `tokens`, or maps precomputed tags onto the tagset when given.
pub fn pos_tag(
    tokens: &[String],
    precomputed: Option<&[String]>,
) -> Result<Vec<(String, PosTag)>, FeatureError> {
    if tokens.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    if let Some(tags) = precomputed {
        if tags.len() != tokens.len() {
            return Err(FeatureError::TagCountMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        return Ok(tokens
            .iter()
            .zip(tags)
            .map(|(t, tag)| (t.clone(), PosTag::parse(tag)))
            .collect());
    }
    Ok((0..tokens.len())
        .map(|i| (tokens[i].clone(), tag_one(tokens, i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tokenize;
    use PosTag::*;

    fn tags(text: &str) -> Vec<PosTag> {
        let toks = tokenize(text).unwrap();
        pos_tag(&toks, None).unwrap().into_iter().map(|(_, t)| t).collect()
    }

    #[test]
    fn india_question_tags() {
        assert_eq!(
            tags("What is the timezone of India?"),
            [WP, VBZ, DT, NN, IN, NNP, OTHER]
        );
    }

    #[test]
    fn precomputed_tags_outside_tagset_become_other() {
        let out = pos_tag(&["x".to_string()], Some(&["WDT".to_string()])).unwrap();
        assert_eq!(out, vec![("x".to_string(), OTHER)]);
    }

    #[test]
    fn precomputed_length_mismatch() {
        let err = pos_tag(&["a".to_string(), "b".to_string()], Some(&["DT".to_string()]));
        assert!(matches!(err, Err(FeatureError::TagCountMismatch { tokens: 2, tags: 1 })));
    }

    #[test]
    fn suffix_rules() {
        assert_eq!(pos_tag(&["running".to_string()], None).unwrap()[0].1, VBG);
        assert_eq!(tags("rivers"), [NNS]);
        assert_eq!(tags("Who founded Google?"), [WP, VBD, NNP, OTHER]);
        assert_eq!(tags("Where is Seoul located?"), [WRB, VBZ, NNP, VBN, OTHER]);
        assert_eq!(tags("famous class"), [JJ, NN]);
    }

    #[test]
    fn proper_nouns_and_plural_proper_nouns() {
        assert_eq!(
            tags("Who founded the Beatles in 1960?"),
            [WP, VBD, DT, NNPS, IN, OTHER, OTHER]
        );
        assert_eq!(tags("Is Barack Obama tall?"), [VBZ, NNP, NNP, JJ, OTHER]);
    }
}
