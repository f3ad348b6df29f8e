use unicode_segmentation::UnicodeSegmentation;

/// A word with its position in the source text, in character offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpan<'a> {
    pub word: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Unicode (UAX #29) words of `text` with character offsets. Punctuation and
/// whitespace segments are not words.
pub fn word_spans(text: &str) -> Vec<WordSpan<'_>> {
    let mut spans = Vec::new();
    let mut chars_before = 0usize;
    let mut byte_cursor = 0usize;
    for (byte_start, word) in text.unicode_word_indices() {
        chars_before += text[byte_cursor..byte_start].chars().count();
        let len = word.chars().count();
        spans.push(WordSpan {
            word,
            start: chars_before,
            end: chars_before + len,
        });
        chars_before += len;
        byte_cursor = byte_start + word.len();
    }
    spans
}

/// Lowercased Unicode words; no stemming or stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_splits() {
        assert_eq!(tokenize("Vrak lodi USS Indianapolis"), ["vrak", "lodi", "uss", "indianapolis"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn punctuation_is_not_a_token() {
        assert_eq!(tokenize("Beck, Bogert & Appice"), ["beck", "bogert", "appice"]);
    }

    #[test]
    fn spans_use_character_offsets() {
        let text = "Loď plula, lodí.";
        let spans = word_spans(text);
        let chars: Vec<char> = text.chars().collect();
        for s in &spans {
            let sliced: String = chars[s.start..s.end].iter().collect();
            assert_eq!(sliced, s.word);
        }
        assert_eq!(spans.iter().map(|s| s.word).collect::<Vec<_>>(), ["Loď", "plula", "lodí"]);
        assert_eq!((spans[2].start, spans[2].end), (11, 15));
    }
}
