use std::collections::HashSet;

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || c.is_numeric()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Blanks out every URL, from its prefix up to the next whitespace.
fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let next = URL_PREFIXES
            .iter()
            .filter_map(|p| rest.find(p))
            .min();
        match next {
            None => {
                out.push_str(rest);
                return out;
            }
            Some(pos) => {
                out.push_str(&rest[..pos]);
                out.push(' ');
                let tail = &rest[pos..];
                let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
                rest = &tail[end..];
            }
        }
    }
}

/// Lowercases, strips URLs and splits on anything that is not a letter,
/// digit, or apostrophe between two word characters. Tokens shorter than two
/// characters are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = strip_urls(&text.to_lowercase());
    let chars: Vec<char> = lowered.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        if current.chars().count() >= 2 {
            tokens.push(std::mem::take(current));
        } else {
            current.clear();
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        if is_word_char(c) {
            current.push(c);
        } else if is_apostrophe(c)
            && !current.is_empty()
            && chars.get(i + 1).copied().is_some_and(is_word_char)
        {
            current.push('\'');
        } else {
            flush(&mut current);
        }
    }
    flush(&mut current);
    tokens
}

/// Removes tokens present in `stoplist`, keeping order.
pub fn remove_stopwords(tokens: Vec<String>, stoplist: &HashSet<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

/// Parses a one-entry-per-line list with `#` comments.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// The bundled English stoplist.
pub fn default_stoplist() -> HashSet<String> {
    parse_word_list(DEFAULT_STOPWORDS)
}
