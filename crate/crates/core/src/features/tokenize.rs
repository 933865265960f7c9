use super::FeatureError;

const DETACHABLE: [char; 6] = ['?', '.', '!', ',', '\'', '"'];

pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| DETACHABLE.contains(&c))
}

/// Whitespace split, then leading and trailing `? . ! , ' "` become tokens of
/// their own. Inner punctuation (`India's`, `3.5`) is left alone.
pub fn tokenize(text: &str) -> Result<Vec<String>, FeatureError> {
    if text.trim().is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        while start < chars.len() && DETACHABLE.contains(&chars[start]) {
            out.push(chars[start].to_string());
            start += 1;
        }
        let mut end = chars.len();
        while end > start && DETACHABLE.contains(&chars[end - 1]) {
            end -= 1;
        }
        if end > start {
            out.push(chars[start..end].iter().collect());
        }
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    Ok(out)
}
