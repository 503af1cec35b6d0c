//! Text normalization for mixed Latin/CJK queries and document titles.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead};
use std::path::Path;
use std::sync::Arc;

use unicode_general_category::{get_general_category, GeneralCategory};

const DEFAULT_EN_STOP_WORDS: &str = include_str!("../../stopwords/en.txt");
const DEFAULT_ZH_STOP_WORDS: &str = include_str!("../../stopwords/zh.txt");

/// Splits a contiguous run of CJK characters into tokens.
pub trait CjkSegmenter: Send + Sync {
    /// Short identifier persisted alongside built artifacts.
    fn name(&self) -> &str;
    fn segment(&self, run: &str) -> Vec<String>;
}

/// Every CJK code point becomes its own token.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnigramSegmenter;

impl CjkSegmenter for UnigramSegmenter {
    fn name(&self) -> &str {
        "unigram"
    }

    fn segment(&self, run: &str) -> Vec<String> {
        run.chars().map(String::from).collect()
    }
}

/// Han ideographs, kana, Hangul and the CJK compatibility blocks.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF        // hiragana, katakana
        | 0x3100..=0x312F      // bopomofo
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF      // extension A
        | 0x4E00..=0x9FFF      // unified ideographs
        | 0xAC00..=0xD7AF      // hangul syllables
        | 0xF900..=0xFAFF      // compatibility ideographs
        | 0x20000..=0x2FA1F)
}

/// Unicode `P*` categories plus the CJK symbols/punctuation and full-width forms blocks.
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    match get_general_category(c) {
        ConnectorPunctuation | DashPunctuation | OpenPunctuation | ClosePunctuation
        | InitialPunctuation | FinalPunctuation | OtherPunctuation => true,
        _ => {
            let cp = c as u32;
            (0x3000..=0x303F).contains(&cp)
                || (0xFF01..=0xFF0F).contains(&cp)
                || (0xFF1A..=0xFF20).contains(&cp)
                || (0xFF3B..=0xFF40).contains(&cp)
                || (0xFF5B..=0xFF65).contains(&cp)
        }
    }
}

/// Stop words for one script, one token per line with `#` comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Self {
        text.lines().collect()
    }

    pub fn from_reader<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            if let Some(word) = clean_stop_word(&line) {
                words.insert(word);
            }
        }
        Ok(Self { words })
    }

    pub fn from_file(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(io::BufReader::new(file))
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_EN_STOP_WORDS)
    }

    pub fn chinese() -> Self {
        Self::parse(DEFAULT_ZH_STOP_WORDS)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted word list, for persistence.
    pub fn to_sorted_vec(&self) -> Vec<String> {
        let mut words: Vec<String> = self.words.iter().cloned().collect();
        words.sort();
        words
    }
}

fn clean_stop_word(line: &str) -> Option<String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    Some(line.to_lowercase())
}

impl<S: AsRef<str>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            words: iter
                .into_iter()
                .filter_map(|w| clean_stop_word(w.as_ref()))
                .collect(),
        }
    }
}

/// Everything `normalize` needs: per-script stop words and the CJK segmenter.
#[derive(Clone)]
pub struct NormalizationRules {
    pub latin_stop_words: StopWords,
    pub cjk_stop_words: StopWords,
    pub segmenter: Arc<dyn CjkSegmenter>,
}

impl fmt::Debug for NormalizationRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalizationRules")
            .field("latin_stop_words", &self.latin_stop_words.len())
            .field("cjk_stop_words", &self.cjk_stop_words.len())
            .field("segmenter", &self.segmenter.name())
            .finish()
    }
}

impl Default for NormalizationRules {
    /// Shipped English and Chinese stop-word lists with the unigram segmenter.
    fn default() -> Self {
        Self {
            latin_stop_words: StopWords::english(),
            cjk_stop_words: StopWords::chinese(),
            segmenter: Arc::new(UnigramSegmenter),
        }
    }
}

impl NormalizationRules {
    /// No stop words at all; lowercasing, punctuation and segmentation only.
    pub fn without_stop_words() -> Self {
        Self {
            latin_stop_words: StopWords::empty(),
            cjk_stop_words: StopWords::empty(),
            segmenter: Arc::new(UnigramSegmenter),
        }
    }

    pub fn with_segmenter(mut self, segmenter: Arc<dyn CjkSegmenter>) -> Self {
        self.segmenter = segmenter;
        self
    }

    fn is_stop_word(&self, token: &str) -> bool {
        self.latin_stop_words.contains(token) || self.cjk_stop_words.contains(token)
    }

    pub fn normalize(&self, text: &str) -> NormalizedText {
        normalize(text, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub original: String,
    pub tokens: Vec<String>,
}

impl NormalizedText {
    /// Canonical identity: tokens joined by single spaces.
    pub fn key(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, treats punctuation as a separator, splits Latin runs on
/// whitespace, hands CJK runs to the segmenter and drops stop words.
pub fn normalize(text: &str, rules: &NormalizationRules) -> NormalizedText {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut latin = String::new();
    let mut cjk = String::new();

    let flush_latin = |buf: &mut String, out: &mut Vec<String>| {
        if !buf.is_empty() {
            out.push(std::mem::take(buf));
        }
    };
    let flush_cjk = |buf: &mut String, out: &mut Vec<String>| {
        if !buf.is_empty() {
            out.extend(
                rules
                    .segmenter
                    .segment(buf)
                    .into_iter()
                    .filter(|t| !t.is_empty()),
            );
            buf.clear();
        }
    };

    for c in lowered.chars() {
        if c.is_whitespace() || is_punctuation(c) || c.is_control() {
            flush_latin(&mut latin, &mut tokens);
            flush_cjk(&mut cjk, &mut tokens);
        } else if is_cjk(c) {
            flush_latin(&mut latin, &mut tokens);
            cjk.push(c);
        } else {
            flush_cjk(&mut cjk, &mut tokens);
            latin.push(c);
        }
    }
    flush_latin(&mut latin, &mut tokens);
    flush_cjk(&mut cjk, &mut tokens);

    tokens.retain(|t| !rules.is_stop_word(t));
    NormalizedText {
        original: text.to_string(),
        tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare() -> NormalizationRules {
        NormalizationRules::without_stop_words()
    }

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(normalize("Java API!", &bare()).tokens, ["java", "api"]);
    }

    #[test]
    fn unigram_segments_cjk_runs() {
        assert_eq!(normalize("svn 安装", &bare()).tokens, ["svn", "安", "装"]);
        // script change splits a run without whitespace
        assert_eq!(normalize("svn安装", &bare()).tokens, ["svn", "安", "装"]);
        assert_eq!(
            normalize("java 多线程", &bare()).tokens,
            ["java", "多", "线", "程"]
        );
    }

    #[test]
    fn full_stop_word_removal_yields_empty() {
        let rules = NormalizationRules {
            latin_stop_words: StopWords::parse("the"),
            ..bare()
        };
        let n = normalize("the", &rules);
        assert!(n.is_empty());
        assert_eq!(n.key(), "");
    }

    #[test]
    fn full_width_punctuation_separates() {
        assert_eq!(
            normalize("怎么删除git分支？（急）", &bare()).tokens,
            ["怎", "么", "删", "除", "git", "分", "支", "急"]
        );
        assert_eq!(normalize("a，b。c、d", &bare()).tokens, ["a", "b", "c", "d"]);
    }

    #[test]
    fn tabs_and_repeated_spaces_collapse() {
        assert_eq!(normalize(" svn\t\tcommit  ", &bare()).key(), "svn commit");
    }

    #[test]
    fn default_lists_drop_common_words() {
        let rules = NormalizationRules::default();
        assert_eq!(
            normalize("How to install the SVN 的 client", &rules).tokens,
            ["install", "svn", "client"]
        );
    }

    #[test]
    fn stop_word_file_parsing_skips_comments() {
        let sw = StopWords::parse("# header\n\nThe\n  of  \n#x\n");
        assert_eq!(sw.to_sorted_vec(), ["of", "the"]);
    }

    #[test]
    fn pluggable_segmenter() {
        struct Whole;
        impl CjkSegmenter for Whole {
            fn name(&self) -> &str {
                "whole"
            }
            fn segment(&self, run: &str) -> Vec<String> {
                vec![run.to_string()]
            }
        }
        let rules = bare().with_segmenter(Arc::new(Whole));
        assert_eq!(normalize("svn 安装指导", &rules).tokens, ["svn", "安装指导"]);
    }
}
