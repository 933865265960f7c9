//! Bundled lexical resources: the stop-word list and the entity-type gazetteer.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

const STOPWORDS: &str = include_str!("../../resources/stopwords.txt");
const GAZETTEER: &str = include_str!("../../resources/gazetteer.tsv");

/// Coarse entity types, in feature order.
pub const ENTITY_TYPES: [&str; 17] = [
    "person",
    "country",
    "city",
    "organisation",
    "company",
    "university",
    "band",
    "film",
    "book",
    "song",
    "river",
    "mountain",
    "sports_team",
    "language",
    "event",
    "software",
    "species",
];

pub fn stopwords() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(&token.to_lowercase())
}

/// Surface forms (lower-cased, as token sequences) mapped to an index into
/// [`ENTITY_TYPES`].
pub struct Gazetteer {
    entries: BTreeMap<Vec<String>, usize>,
    longest: usize,
}

impl Gazetteer {
    /// Parses `surface<TAB>type` lines. Unknown types and blank lines are skipped.
    pub fn parse(text: &str) -> Gazetteer {
        let mut entries = BTreeMap::new();
        let mut longest = 0;
        for line in text.lines() {
            let Some((surface, ty)) = line.split_once('\t') else {
                continue;
            };
            let Some(idx) = ENTITY_TYPES.iter().position(|t| *t == ty.trim()) else {
                log::debug!("gazetteer: skipping unknown type `{ty}`");
                continue;
            };
            let key: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
            if key.is_empty() {
                continue;
            }
            longest = longest.max(key.len());
            entries.entry(key).or_insert(idx);
        }
        Gazetteer { entries, longest }
    }

    pub fn bundled() -> &'static Gazetteer {
        static G: OnceLock<Gazetteer> = OnceLock::new();
        G.get_or_init(|| Gazetteer::parse(GAZETTEER))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Greedy longest-match count of entity mentions per type.
    pub fn count_types(&self, words: &[&str]) -> [usize; 17] {
        let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let mut counts = [0usize; 17];
        let mut i = 0;
        while i < lower.len() {
            let max = self.longest.min(lower.len() - i);
            let hit = (1..=max)
                .rev()
                .find_map(|n| self.entries.get(&lower[i..i + n]).map(|ty| (n, *ty)));
            match hit {
                Some((n, ty)) => {
                    counts[ty] += 1;
                    i += n;
                }
                None => i += 1,
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_stopword_list_has_fifty_entries() {
        assert_eq!(stopwords().len(), 50);
        for w in ["of", "the", "a", "is", "was"] {
            assert!(is_stopword(w), "{w}");
        }
        assert!(is_stopword("The"));
        assert!(!is_stopword("india"));
    }

    #[test]
    fn gazetteer_covers_all_types_and_prefers_longest_match() {
        let g = Gazetteer::bundled();
        let covered: HashSet<usize> = g.entries.values().copied().collect();
        assert_eq!(covered.len(), ENTITY_TYPES.len());
        let counts = g.count_types(&["Where", "is", "New", "York", "City", "and", "India"]);
        assert_eq!(counts[2], 1, "city");
        assert_eq!(counts[1], 1, "country");
        assert_eq!(counts.iter().sum::<usize>(), 2);
    }

    #[test]
    fn parse_skips_malformed_lines() {
        let g = Gazetteer::parse("Foo\tperson\nbroken line\nBar\tnot_a_type\n\n");
        assert_eq!(g.len(), 1);
    }
}
