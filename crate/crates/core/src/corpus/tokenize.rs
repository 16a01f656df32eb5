/// Punctuation split off the end (or start) of a whitespace token.
const PUNCT: &[char] = &['.', '?', '!', ',', ';', ':', '…'];

/// Lowercase, split on whitespace, and peel leading/trailing punctuation into
/// separate tokens. A run of two or more dots (or `…`) becomes a single
/// `...` token so fillers survive.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let lower = raw.to_lowercase();
        let word_start = lower.find(|c: char| !PUNCT.contains(&c));
        let Some(ws) = word_start else {
            push_punct(&lower, &mut out);
            continue;
        };
        let we = lower
            .char_indices()
            .rev()
            .find(|(_, c)| !PUNCT.contains(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(lower.len());
        push_punct(&lower[..ws], &mut out);
        out.push(lower[ws..we].to_string());
        push_punct(&lower[we..], &mut out);
    }
    out
}

fn push_punct(run: &str, out: &mut Vec<String>) {
    if run.is_empty() {
        return;
    }
    let mut chars = run.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '…' {
            out.push("...".into());
        } else if c == '.' {
            let mut n = 1;
            while chars.peek() == Some(&'.') {
                chars.next();
                n += 1;
            }
            out.push(if n >= 2 { "...".into() } else { ".".into() });
        } else {
            out.push(c.to_string());
        }
    }
}

pub fn is_punct_token(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| PUNCT.contains(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_terminal_punctuation() {
        assert_eq!(
            tokenize("a sako um... sako wakaki."),
            ["a", "sako", "um", "...", "sako", "wakaki", "."]
        );
        assert_eq!(tokenize("Is it SAKO?!"), ["is", "it", "sako", "?", "!"]);
        assert_eq!(tokenize("... no no ..."), ["...", "no", "no", "..."]);
        assert_eq!(tokenize("it's"), ["it's"]);
        assert_eq!(tokenize("wait…"), ["wait", "..."]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
    }
}
