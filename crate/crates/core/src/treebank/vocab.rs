use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::inventory::Inventory;

/// Catch-all unknown-word class; always id 0.
pub const UNK: &str = "UNK";

/// Word vocabulary with signature-based unknown-word classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub words: Inventory,
    pub min_count: usize,
}

/// Builds a vocabulary from tokenised sentences. Words seen fewer than
/// `min_count` times are replaced by their signature class, which is added
/// to the inventory. Ids: `UNK`, then unk classes, then words, each group
/// sorted.
pub fn build_vocab<'a, S>(corpus: impl IntoIterator<Item = S>, min_count: usize) -> Vocabulary
where
    S: AsRef<[&'a str]>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let sentences: Vec<S> = corpus.into_iter().collect();
    for s in &sentences {
        for w in s.as_ref() {
            *counts.entry(*w).or_default() += 1;
        }
    }
    let known: BTreeSet<&str> = counts.iter().filter(|(_, &c)| c >= min_count).map(|(w, _)| *w).collect();
    let mut classes = BTreeSet::new();
    for s in &sentences {
        for (pos, w) in s.as_ref().iter().enumerate() {
            if !known.contains(w) {
                classes.insert(signature(w, pos, |lc| known.contains(lc)));
            }
        }
    }
    let mut words = Inventory::new();
    words.insert(UNK);
    classes.iter().for_each(|c| {
        words.insert(c);
    });
    known.iter().for_each(|w| {
        words.insert(w);
    });
    Vocabulary { words, min_count }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: u32) -> &str {
        self.words.symbol(id)
    }

    /// Maps a raw token at sentence position `position` to an id.
    pub fn unkify(&self, word: &str, position: usize) -> u32 {
        if let Some(id) = self.words.get(word) {
            if !word.starts_with(UNK) {
                return id;
            }
        }
        let sig = signature(word, position, |lc| self.words.get(lc).is_some());
        self.words.get(&sig).unwrap_or(0)
    }

    pub fn encode(&self, sentence: &[&str]) -> Vec<u32> {
        sentence.iter().enumerate().map(|(i, w)| self.unkify(w, i)).collect()
    }
}

/// Berkeley-parser style unknown-word signature (position aware).
pub fn signature(word: &str, position: usize, is_known: impl Fn(&str) -> bool) -> String {
    let mut caps = 0;
    let (mut digit, mut dash, mut lower) = (false, false, false);
    for ch in word.chars() {
        if ch.is_ascii_digit() {
            digit = true;
        } else if ch == '-' {
            dash = true;
        } else if ch.is_alphabetic() {
            if ch.is_lowercase() {
                lower = true;
            } else if ch.is_uppercase() {
                caps += 1;
            }
        }
    }
    let lc = word.to_lowercase();
    let mut sig = UNK.to_string();
    let first = word.chars().next().unwrap_or(' ');
    if first.is_uppercase() {
        if position == 0 && caps == 1 {
            sig.push_str("-INITC");
            if is_known(&lc) {
                sig.push_str("-KNOWNLC");
            }
        } else {
            sig.push_str("-CAPS");
        }
    } else if !first.is_alphabetic() && caps > 0 {
        sig.push_str("-CAPS");
    } else if lower {
        sig.push_str("-LC");
    }
    if digit {
        sig.push_str("-NUM");
    }
    if dash {
        sig.push_str("-DASH");
    }
    let chars: Vec<char> = lc.chars().collect();
    let n = chars.len();
    if lc.ends_with('s') && n >= 3 {
        if !matches!(chars[n - 2], 's' | 'i' | 'u') {
            sig.push_str("-s");
        }
    } else if n >= 5 && !dash && !(digit && caps > 0) {
        const SUFFIXES: &[&str] = &["ed", "ing", "ion", "er", "est", "ly", "ity", "y", "al"];
        if let Some(s) = SUFFIXES.iter().find(|s| lc.ends_with(*s)) {
            sig.push('-');
            sig.push_str(s);
        }
    }
    sig
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn corpus() -> Vec<Vec<&'static str>> {
        vec![
            vec!["the", "dog", "barks"],
            vec!["the", "dog", "walked"],
            vec!["The", "cat", "slept"],
            vec!["the", "cat", "barks"],
        ]
    }

    #[test]
    fn known_words_keep_ids() {
        let v = build_vocab(corpus(), 2);
        let id = v.unkify("dog", 1);
        assert_eq!(v.word(id), "dog");
        assert_eq!(v.word(0), UNK);
        // "walked" seen once → its class exists
        assert!(v.words.get("UNK-LC-ed").is_some());
        assert_eq!(v.word(v.unkify("walked", 2)), "UNK-LC-ed");
    }

    #[test]
    fn unknown_words_map_deterministically() {
        let v = build_vocab(corpus(), 2);
        let a = v.unkify("flibbertigibbet", 3);
        assert_eq!(a, v.unkify("flibbertigibbet", 3));
        assert!(v.word(a).starts_with(UNK));
    }

    #[test]
    fn signature_rules() {
        let known = |w: &str| w == "dog";
        let cases = [
            ("Dog", 0, "UNK-INITC-KNOWNLC"),
            ("Zebra", 0, "UNK-INITC"),
            ("Zebra", 3, "UNK-CAPS"),
            ("IBM", 0, "UNK-CAPS"),
            ("walking", 2, "UNK-LC-ing"),
            ("cats", 1, "UNK-LC-s"),
            ("glass", 1, "UNK-LC"),
            ("1990s", 1, "UNK-LC-NUM-s"),
            ("well-known", 1, "UNK-LC-DASH"),
            ("quickly", 1, "UNK-LC-ly"),
            ("flibbertigibbet", 1, "UNK-LC"),
            ("42", 1, "UNK-NUM"),
        ];
        for (w, pos, expected) in cases {
            assert_eq!(signature(w, pos, known), expected, "{w}");
        }
    }
}
