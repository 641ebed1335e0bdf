use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("answer is empty after normalization")]
    EmptyAnswer,
    #[error("character {ch:?} at position {position} has no grid letter")]
    UnmappableCharacter { ch: char, position: usize },
}

/// Separators that may appear in a displayed answer but never in the grid.
fn is_separator(ch: char) -> bool {
    ch.is_whitespace() || matches!(ch, '-' | '\u{2010}' | '\u{2011}' | '\'' | '\u{2019}' | '\u{2018}' | '`')
}

/// Maps one character onto the grid alphabet, folding Latin diacritics.
fn fold_char(ch: char) -> Option<char> {
    let upper = match ch {
        'a'..='z' => ch.to_ascii_uppercase(),
        'A'..='Z' => ch,
        'à' | 'á' | 'â' | 'ä' | 'ã' | 'å' | 'À' | 'Á' | 'Â' | 'Ä' | 'Ã' | 'Å' => 'A',
        'è' | 'é' | 'ê' | 'ë' | 'È' | 'É' | 'Ê' | 'Ë' => 'E',
        'ì' | 'í' | 'î' | 'ï' | 'Ì' | 'Í' | 'Î' | 'Ï' => 'I',
        'ò' | 'ó' | 'ô' | 'ö' | 'õ' | 'Ò' | 'Ó' | 'Ô' | 'Ö' | 'Õ' => 'O',
        'ù' | 'ú' | 'û' | 'ü' | 'Ù' | 'Ú' | 'Û' | 'Ü' => 'U',
        'ç' | 'Ç' => 'C',
        'ñ' | 'Ñ' => 'N',
        'ý' | 'ÿ' | 'Ý' => 'Y',
        _ => return None,
    };
    Some(upper)
}

/// Converts a displayed answer to its grid form: uppercase A-Z only.
///
/// Spaces, hyphens and apostrophes are dropped and accented letters fold to
/// their base letter. Anything else (digits, punctuation) is an error.
pub fn normalize_answer(raw: &str) -> Result<String, NormalizeError> {
    let mut out = String::with_capacity(raw.len());
    for (position, ch) in raw.trim().chars().enumerate() {
        if is_separator(ch) {
            continue;
        }
        match fold_char(ch) {
            Some(letter) => out.push(letter),
            None => return Err(NormalizeError::UnmappableCharacter { ch, position }),
        }
    }
    if out.is_empty() {
        return Err(NormalizeError::EmptyAnswer);
    }
    Ok(out)
}

/// Lenient variant for free text: keeps only foldable letters, uppercased.
pub fn fold_letters(text: &str) -> String {
    text.chars().filter_map(fold_char).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_answer("soy").unwrap(), "SOY");
        assert_eq!(normalize_answer("SOY").unwrap(), "SOY");
        assert_eq!(normalize_answer("perché").unwrap(), "PERCHE");
        assert_eq!(normalize_answer("  metodo sperimentale ").unwrap(), "METODOSPERIMENTALE");
        assert_eq!(normalize_answer("dell'arte").unwrap(), "DELLARTE");
        assert_eq!(normalize_answer("Curiosità").unwrap(), "CURIOSITA");
        assert_eq!(normalize_answer("àèìòù").unwrap(), "AEIOU");
    }

    #[test]
    fn errors() {
        assert_eq!(normalize_answer("   "), Err(NormalizeError::EmptyAnswer));
        assert_eq!(normalize_answer("- '"), Err(NormalizeError::EmptyAnswer));
        assert_eq!(normalize_answer("R2D2"), Err(NormalizeError::UnmappableCharacter { ch: '2', position: 1 }));
        assert!(matches!(normalize_answer("a.b"), Err(NormalizeError::UnmappableCharacter { ch: '.', .. })));
    }

    #[test]
    fn fold_letters_drops_everything_else() {
        assert_eq!(fold_letters("La ricerca è... 42!"), "LARICERCAE");
    }

    proptest! {
        #[test]
        fn idempotent(raw in "[a-zA-Zàèéìòù' -]{1,24}") {
            if let Ok(once) = normalize_answer(&raw) {
                prop_assert_eq!(normalize_answer(&once).unwrap(), once.clone());
                prop_assert!(once.bytes().all(|b| b.is_ascii_uppercase()));
            }
        }
    }
}
