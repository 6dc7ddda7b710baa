use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Adjective,
    Verb,
    Adverb,
    /// Determiners, pronouns, prepositions, conjunctions and auxiliaries.
    Closed,
}

/// Assigns a part-of-speech tag to a single lowercase token.
pub trait PosTagger {
    fn tag(&self, token: &str) -> PosTag;
}

impl<F: Fn(&str) -> PosTag> PosTagger for F {
    fn tag(&self, token: &str) -> PosTag {
        self(token)
    }
}

/// Keeps nouns and adjectives.
pub fn filter_pos<T: PosTagger + ?Sized>(tokens: Vec<String>, tagger: &T) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| matches!(tagger.tag(t), PosTag::Noun | PosTag::Adjective))
        .collect()
}

#[derive(Debug, thiserror::Error)]
#[error("tagger rules line {line}: {message}")]
pub struct RuleError {
    pub line: usize,
    pub message: String,
}

/// Deterministic suffix-and-lexicon tagger.
///
/// Unknown words default to nouns.
#[derive(Debug, Clone, Default)]
pub struct HeuristicTagger {
    nouns: HashSet<String>,
    closed: HashSet<String>,
    verbs: HashSet<String>,
    adverb_suffixes: Vec<String>,
    adjective_suffixes: Vec<String>,
}

const DEFAULT_RULES: &str = include_str!("../../data/tagger_rules.txt");

const MIN_ADVERB_STEM: usize = 2;
const MIN_ADJECTIVE_STEM: usize = 3;

impl HeuristicTagger {
    /// Parses a sectioned rule file (`[nouns]`, `[closed]`, `[verbs]`,
    /// `[adverb_suffixes]`, `[adjective_suffixes]`).
    pub fn from_rules(text: &str) -> Result<Self, RuleError> {
        let mut tagger = Self::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.to_string());
                continue;
            }
            let entry = line.to_lowercase();
            match section.as_deref() {
                Some("nouns") => {
                    tagger.nouns.insert(entry);
                }
                Some("closed") => {
                    tagger.closed.insert(entry);
                }
                Some("verbs") => {
                    tagger.verbs.insert(entry);
                }
                Some("adverb_suffixes") => tagger.adverb_suffixes.push(entry),
                Some("adjective_suffixes") => tagger.adjective_suffixes.push(entry),
                Some(other) => {
                    return Err(RuleError {
                        line: idx + 1,
                        message: format!("unknown section [{other}]"),
                    })
                }
                None => {
                    return Err(RuleError {
                        line: idx + 1,
                        message: "entry before any section header".into(),
                    })
                }
            }
        }
        Ok(tagger)
    }

    /// Tagger loaded from the bundled rule file.
    pub fn bundled() -> Self {
        Self::from_rules(DEFAULT_RULES).expect("bundled tagger rules parse")
    }

    fn has_suffix(token: &str, suffixes: &[String], min_stem: usize) -> bool {
        suffixes.iter().any(|s| {
            token
                .strip_suffix(s.as_str())
                .is_some_and(|stem| stem.chars().count() >= min_stem)
        })
    }

    /// True when `token` is an -ing/-ed form of a known verb.
    fn is_inflected_verb(&self, token: &str) -> bool {
        let stem = token
            .strip_suffix("ing")
            .or_else(|| token.strip_suffix("ed"));
        let Some(stem) = stem else {
            return false;
        };
        if stem.is_empty() {
            return false;
        }
        let mut candidates = vec![stem.to_string(), format!("{stem}e")];
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() >= 2 && chars[chars.len() - 1] == chars[chars.len() - 2] {
            candidates.push(chars[..chars.len() - 1].iter().collect());
        }
        if let Some(s) = stem.strip_suffix('i') {
            candidates.push(format!("{s}y"));
        }
        candidates.iter().any(|c| self.verbs.contains(c))
    }
}

impl PosTagger for HeuristicTagger {
    fn tag(&self, token: &str) -> PosTag {
        if self.nouns.contains(token) {
            PosTag::Noun
        } else if self.closed.contains(token) {
            PosTag::Closed
        } else if Self::has_suffix(token, &self.adverb_suffixes, MIN_ADVERB_STEM) {
            PosTag::Adverb
        } else if self.is_inflected_verb(token) {
            PosTag::Verb
        } else if Self::has_suffix(token, &self.adjective_suffixes, MIN_ADJECTIVE_STEM) {
            PosTag::Adjective
        } else {
            PosTag::Noun
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bundled_rules_example() {
        let tagger = HeuristicTagger::bundled();
        assert_eq!(tagger.tag("quickly"), PosTag::Adverb);
        assert_eq!(tagger.tag("price"), PosTag::Noun);
        assert_eq!(tagger.tag("volatile"), PosTag::Adjective);
        assert_eq!(
            filter_pos(toks(&["quickly", "price", "volatile"]), &tagger),
            toks(&["price", "volatile"])
        );
    }

    #[test]
    fn verbs_need_known_stem() {
        let tagger = HeuristicTagger::bundled();
        assert_eq!(tagger.tag("selling"), PosTag::Verb);
        assert_eq!(tagger.tag("dropped"), PosTag::Verb);
        assert_eq!(tagger.tag("created"), PosTag::Verb);
        assert_eq!(tagger.tag("worried"), PosTag::Verb);
        assert_eq!(tagger.tag("mining"), PosTag::Noun);
        assert_eq!(tagger.tag("blockchain"), PosTag::Noun);
    }

    #[test]
    fn noun_overrides_and_closed_class() {
        let tagger = HeuristicTagger::bundled();
        assert_eq!(tagger.tag("supply"), PosTag::Noun);
        assert_eq!(tagger.tag("the"), PosTag::Closed);
        assert_eq!(tagger.tag("it'll"), PosTag::Noun);
        // Stem too short for the adjective rule.
        assert_eq!(tagger.tag("smile"), PosTag::Noun);
    }

    #[test]
    fn empty_and_all_noun_inputs() {
        let tagger = HeuristicTagger::bundled();
        assert!(filter_pos(vec![], &tagger).is_empty());
        let nouns = toks(&["wallet", "exchange", "bitcoin"]);
        assert_eq!(filter_pos(nouns.clone(), &|_: &str| PosTag::Noun), nouns);
    }

    #[test]
    fn rule_errors() {
        assert!(HeuristicTagger::from_rules("orphan\n").is_err());
        let err = HeuristicTagger::from_rules("[bogus]\nx\n").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
