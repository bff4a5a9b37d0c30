//! Character-shingle fingerprints of protected documents, shared by the
//! verbatim-span detector feature and the output filter.

use std::collections::HashSet;

/// Minimum shingle length accepted anywhere.
pub const MIN_SHINGLE_LEN: usize = 8;

/// Default shingle length for verbatim-span detection.
pub const DEFAULT_SHINGLE_LEN: usize = 12;

/// All length-`k` character windows of `text`.
pub fn shingles(text: &str, k: usize) -> HashSet<String> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < k {
        return HashSet::new();
    }
    (0..=chars.len() - k)
        .map(|i| chars[i..i + k].iter().collect())
        .collect()
}

/// True when `payload` shares at least one length-`k` window with `body`.
pub fn shares_shingle(payload: &str, body_shingles: &HashSet<String>, k: usize) -> bool {
    let chars: Vec<char> = payload.chars().collect();
    if chars.len() < k {
        return false;
    }
    (0..=chars.len() - k).any(|i| {
        let window: String = chars[i..i + k].iter().collect();
        body_shingles.contains(&window)
    })
}

/// Character positions of `payload` covered by windows matching the
/// fingerprint. Used to redact exactly the verbatim spans.
pub fn matching_mask(payload: &str, body_shingles: &HashSet<String>, k: usize) -> Vec<bool> {
    let chars: Vec<char> = payload.chars().collect();
    let mut mask = vec![false; chars.len()];
    if chars.len() < k {
        return mask;
    }
    for i in 0..=chars.len() - k {
        let window: String = chars[i..i + k].iter().collect();
        if body_shingles.contains(&window) {
            for m in mask.iter_mut().skip(i).take(k) {
                *m = true;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shingle_overlap_detects_verbatim_span() {
        let body = shingles("the quarterly revenue grew by twenty percent", 12);
        assert!(shares_shingle(
            "report says: revenue grew by twenty",
            &body,
            12
        ));
        assert!(!shares_shingle("totally unrelated text here", &body, 12));
    }

    #[test]
    fn short_payloads_never_match() {
        let body = shingles("confidential body", 12);
        assert!(!shares_shingle("short", &body, 12));
    }
}
