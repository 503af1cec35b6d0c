use std::collections::HashMap;

/// Token vocabulary ordered by descending frequency, ties by token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Keeps tokens occurring at least `min_count` times.
    pub fn build<I, S>(sequences: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let mut freq: HashMap<String, u64> = HashMap::new();
        for seq in sequences {
            for tok in seq.as_ref() {
                if !tok.is_empty() {
                    *freq.entry(tok.clone()).or_insert(0) += 1;
                }
            }
        }
        let mut entries: Vec<(String, u64)> =
            freq.into_iter().filter(|(_, c)| *c >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_entries(entries)
    }

    /// Rebuilds a vocabulary from `(token, count)` rows in index order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        let (tokens, counts) = entries.into_iter().unzip();
        Self {
            tokens,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: u32) -> &str {
        &self.tokens[idx as usize]
    }

    pub fn count(&self, idx: u32) -> u64 {
        self.counts[idx as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(list: &[&[&str]]) -> Vec<Vec<String>> {
        list.iter()
            .map(|s| s.iter().map(|t| t.to_string()).collect())
            .collect()
    }

    #[test]
    fn min_count_cuts_rare_tokens() {
        let v = Vocab::build(seqs(&[&["a", "b"], &["a", "c"]]), 2);
        assert_eq!(v.len(), 1);
        assert_eq!(v.get("a"), Some(0));
        assert_eq!(v.get("b"), None);
    }

    #[test]
    fn ordering_is_frequency_then_token() {
        let v = Vocab::build(seqs(&[&["z", "y", "y", "x"], &["z"]]), 1);
        let order: Vec<_> = v.iter().collect();
        assert_eq!(order, vec![("y", 2), ("z", 2), ("x", 1)]);
    }
}
