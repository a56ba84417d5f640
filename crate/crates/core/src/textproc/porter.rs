//! The Porter (1980) suffix-stripping stemmer, original rule set.
//!
//! Works on `char`s so arbitrary tweet tokens (digits, asterisks, non-ASCII)
//! pass through safely; anything outside `a e i o u` counts as a consonant,
//! and `y` follows the usual context rule.

use super::TextError;

struct Stemmer {
    b: Vec<char>,
}

impl Stemmer {
    fn is_cons(&self, i: usize) -> bool {
        match self.b[i] {
            'a' | 'e' | 'i' | 'o' | 'u' => false,
            'y' => i == 0 || !self.is_cons(i - 1),
            _ => true,
        }
    }

    /// Measure of `b[..len]`: the number of VC sequences.
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < len && self.is_cons(i) {
            i += 1;
        }
        loop {
            while i < len && !self.is_cons(i) {
                i += 1;
            }
            if i >= len {
                return m;
            }
            while i < len && self.is_cons(i) {
                i += 1;
            }
            m += 1;
        }
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_cons(i))
    }

    fn ends_double_cons(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_cons(len - 1)
    }

    /// `*o`: stem ends consonant-vowel-consonant, last consonant not w, x or y.
    fn ends_cvc(&self, len: usize) -> bool {
        len >= 3
            && self.is_cons(len - 3)
            && !self.is_cons(len - 2)
            && self.is_cons(len - 1)
            && !matches!(self.b[len - 1], 'w' | 'x' | 'y')
    }

    fn ends_with(&self, suffix: &str) -> bool {
        let n = suffix.chars().count();
        n <= self.b.len()
            && self.b[self.b.len() - n..]
                .iter()
                .copied()
                .eq(suffix.chars())
    }

    fn stem_len(&self, suffix: &str) -> usize {
        self.b.len() - suffix.chars().count()
    }

    fn replace_suffix(&mut self, suffix: &str, with: &str) {
        let keep = self.stem_len(suffix);
        self.b.truncate(keep);
        self.b.extend(with.chars());
    }

    /// First suffix in `rules` that matches decides; its replacement applies
    /// only when the stem measure exceeds `min_m`.
    fn apply_rules(&mut self, rules: &[(&str, &str)], min_m: usize) {
        for &(suffix, with) in rules {
            if self.ends_with(suffix) {
                if self.measure(self.stem_len(suffix)) > min_m {
                    self.replace_suffix(suffix, with);
                }
                return;
            }
        }
    }

    fn step1a(&mut self) {
        if self.ends_with("sses") {
            self.replace_suffix("sses", "ss");
        } else if self.ends_with("ies") {
            self.replace_suffix("ies", "i");
        } else if self.ends_with("ss") {
        } else if self.ends_with("s") {
            self.replace_suffix("s", "");
        }
    }

    fn step1b(&mut self) {
        if self.ends_with("eed") {
            if self.measure(self.stem_len("eed")) > 0 {
                self.replace_suffix("eed", "ee");
            }
            return;
        }
        let removed = ["ed", "ing"]
            .into_iter()
            .find(|s| self.ends_with(s) && self.has_vowel(self.stem_len(s)));
        let Some(suffix) = removed else { return };
        self.replace_suffix(suffix, "");

        if self.ends_with("at") {
            self.replace_suffix("at", "ate");
        } else if self.ends_with("bl") {
            self.replace_suffix("bl", "ble");
        } else if self.ends_with("iz") {
            self.replace_suffix("iz", "ize");
        } else if self.ends_double_cons(self.b.len())
            && !matches!(self.b[self.b.len() - 1], 'l' | 's' | 'z')
        {
            self.b.pop();
        } else if self.measure(self.b.len()) == 1 && self.ends_cvc(self.b.len()) {
            self.b.push('e');
        }
    }

    fn step1c(&mut self) {
        if self.ends_with("y") && self.has_vowel(self.b.len() - 1) {
            let last = self.b.len() - 1;
            self.b[last] = 'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ];
        self.apply_rules(RULES, 0);
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_rules(RULES, 0);
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&str] = &[
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
            "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        ];
        for &suffix in SUFFIXES {
            if self.ends_with(suffix) {
                let stem = self.stem_len(suffix);
                let mut ok = self.measure(stem) > 1;
                if suffix == "ion" {
                    ok &= stem > 0 && matches!(self.b[stem - 1], 's' | 't');
                }
                if ok {
                    self.b.truncate(stem);
                }
                return;
            }
        }
    }

    fn step5(&mut self) {
        if self.ends_with("e") {
            let stem = self.b.len() - 1;
            let m = self.measure(stem);
            if m > 1 || (m == 1 && !self.ends_cvc(stem)) {
                self.b.pop();
            }
        }
        let len = self.b.len();
        if self.measure(len) > 1 && self.ends_double_cons(len) && self.b[len - 1] == 'l' {
            self.b.pop();
        }
    }
}

/// Stems one lowercase word. Words of one or two characters are returned as is.
pub fn porter_stem(word: &str) -> Result<String, TextError> {
    if word.is_empty() {
        return Err(TextError::EmptyWord);
    }
    let chars: Vec<char> = word.chars().collect();
    if chars.len() <= 2 {
        return Ok(word.to_string());
    }
    let mut s = Stemmer { b: chars };
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    Ok(s.b.into_iter().collect())
}
