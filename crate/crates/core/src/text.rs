//! Small text helpers shared by the retrieval and scoring code.

use alloc::string::String;

/// Number of whitespace-delimited words, the token unit used for block sizing.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Metric names match exactly after trimming and lowercasing.
pub fn normalize_metric(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Canonical form of a root-cause label: lowercase words joined by `_`.
///
/// `"Large Data Fetch"`, `"large-data-fetch"` and `"large_data_fetch"` all map
/// to `large_data_fetch`.
pub fn normalize_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for word in label
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

/// Truncates `text` to its first `max_words` words, appending `...` when cut.
pub fn truncate_words(text: &str, max_words: usize) -> String {
    let mut words = text.split_whitespace();
    let mut out = String::new();
    for (i, w) in words.by_ref().take(max_words).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(w);
    }
    if words.next().is_some() {
        out.push_str("...");
    }
    out
}
