/// Lowercases `text` and splits it into word and punctuation tokens.
///
/// Runs of alphanumeric characters form words, every other non-whitespace
/// character is a token of its own, whitespace separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_split() {
        assert_eq!(
            tokenize("Read Book, Forget Movie!"),
            ["read", "book", ",", "forget", "movie", "!"]
        );
    }

    #[test]
    fn empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t ").is_empty());
    }

    #[test]
    fn apostrophe() {
        assert_eq!(tokenize("it's GOOD"), ["it", "'", "s", "good"]);
    }

    #[test]
    fn unicode_words() {
        assert_eq!(tokenize("Café-Noir 42"), ["café", "-", "noir", "42"]);
    }
}
