//! Vowel-group syllable estimate.
//!
//! Counts runs of `aeiouy`, drops a terminal silent `e`, and corrects a few
//! common spellings where a run spans two syllables (`idea`, `radio`, `quiet`)
//! or a letter acts as a consonant (`qu`, `gu`, `y` between vowels).

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn is_plain_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Marks which letters act as vowels.
fn vowel_mask(w: &[u8]) -> Vec<bool> {
    let n = w.len();
    let mut mask: Vec<bool> = w.iter().map(|&c| is_vowel(c)).collect();
    for i in 0..n {
        match w[i] {
            // Initial y before a vowel, or y between vowels, is a consonant.
            b'y' => {
                let next_vowel = i + 1 < n && is_plain_vowel(w[i + 1]);
                let prev_vowel = i > 0 && is_plain_vowel(w[i - 1]);
                if next_vowel && (i == 0 || prev_vowel) {
                    mask[i] = false;
                }
            }
            // u after q or g before another vowel is a glide.
            b'u' if i > 0
                && matches!(w[i - 1], b'q' | b'g')
                && i + 1 < n
                && is_plain_vowel(w[i + 1]) =>
            {
                mask[i] = false;
            }
            _ => {}
        }
    }
    mask
}

fn count_groups(mask: &[bool]) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for &v in mask {
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    groups
}

/// Vowel pairs that are usually pronounced as two syllables.
fn split_pairs(w: &str) -> usize {
    let mut extra = 0;
    let b = w.as_bytes();
    for i in 0..b.len().saturating_sub(1) {
        let pair = &w[i..i + 2];
        let prev = if i > 0 { b[i - 1] } else { b' ' };
        let after = &w[i + 2..];
        extra += match pair {
            "ia" => usize::from(!matches!(prev, b'c' | b't' | b's') || after.is_empty()),
            "io" => usize::from(
                !(matches!(prev, b'c' | b't' | b's' | b'g' | b'x')
                    && (after.starts_with('n') || after.starts_with("us"))),
            ),
            "eo" => usize::from(after.is_empty()),
            "ea" => usize::from(after.is_empty() || after == "te"),
            "oe" => usize::from(!after.is_empty() && after != "s"),
            "ie" => usize::from(
                after.starts_with('t') || after.starts_with('n') && !after.starts_with("nd"),
            ),
            "ua" => usize::from(!matches!(prev, b'q' | b'g')),
            "uo" => usize::from(!matches!(prev, b'q' | b'g')),
            _ => 0,
        };
    }
    extra
}

/// Estimated syllable count of one word; always at least 1.
pub fn count_syllables(word: &str) -> usize {
    let lower: String = word
        .chars()
        .flat_map(char::to_lowercase)
        .filter(char::is_ascii_lowercase)
        .collect();
    if lower.is_empty() {
        return 1;
    }
    let w = lower.as_bytes();
    let mask = vowel_mask(w);
    let mut count = count_groups(&mask) + split_pairs(&lower);

    let n = w.len();
    let silent_e =
        n >= 2 && w[n - 1] == b'e' && !mask[n - 2] && !(n >= 3 && w[n - 2] == b'l' && !mask[n - 3]);
    let silent_ely = n >= 4 && lower.ends_with("ely") && !mask[n - 4];
    if (silent_e || silent_ely) && count > 1 {
        count -= 1;
    }
    count.max(1)
}
