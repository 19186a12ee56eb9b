//! Textual placeholder substitution performed before parsing.

use thiserror::Error;

use super::ast::ModelParam;
use super::profile::Profile;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("unknown placeholder `${name}` at line {line}, column {column}")]
    UnknownPlaceholder { name: String, line: u32, column: u32 },
}

/// How each known placeholder is rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substitution {
    /// Every placeholder becomes the decimal value of its profile field.
    Numeric,
    /// `$EFFICIENCY` and `$CONC_CASES` become bare parameter names; `$AVAILABILITY`
    /// is still replaced by its value.
    Symbolic,
}

pub fn preprocess(source: &str, profile: &Profile) -> Result<String, PreprocessError> {
    substitute(source, profile, Substitution::Numeric)
}

pub fn preprocess_symbolic(source: &str, profile: &Profile) -> Result<String, PreprocessError> {
    substitute(source, profile, Substitution::Symbolic)
}

pub fn substitute(source: &str, profile: &Profile, mode: Substitution) -> Result<String, PreprocessError> {
    let mut out = String::with_capacity(source.len());
    let mut rest = source;
    let mut line = 1u32;
    let mut column = 1u32;
    while let Some(pos) = rest.find('$') {
        let (before, after_dollar) = rest.split_at(pos);
        advance(&mut line, &mut column, before);
        out.push_str(before);
        let tail = &after_dollar[1..];
        let name_len = tail
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
            .map(|(i, _)| i)
            .unwrap_or(tail.len());
        if name_len == 0 {
            // a lone `$`, e.g. the group separator in `Resources:`
            out.push('$');
            column += 1;
            rest = tail;
            continue;
        }
        let name = &tail[..name_len];
        let param = ModelParam::from_name(name).ok_or_else(|| PreprocessError::UnknownPlaceholder {
            name: name.to_string(),
            line,
            column,
        })?;
        let value = match param {
            ModelParam::Efficiency => profile.efficiency_pct,
            ModelParam::ConcCases => profile.conc_cases,
            ModelParam::Availability => profile.availability_pct,
        };
        match (mode, param) {
            (Substitution::Symbolic, ModelParam::Efficiency | ModelParam::ConcCases) => out.push_str(param.name()),
            _ => out.push_str(&value.to_string()),
        }
        column += 1 + name_len as u32;
        rest = &tail[name_len..];
    }
    out.push_str(rest);
    Ok(out)
}

fn advance(line: &mut u32, column: &mut u32, text: &str) {
    for c in text.chars() {
        if c == '\n' {
            *line += 1;
            *column = 1;
        } else {
            *column += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(eff: u32, cases: u32) -> Profile {
        Profile {
            efficiency_pct: eff,
            conc_cases: cases,
            availability_pct: 60,
            ..Profile::default()
        }
    }

    #[test]
    fn efficiency_is_substituted() {
        let out = preprocess("cost(truncate(150*(100/$EFFICIENCY)));", &profile(100, 1)).unwrap();
        assert_eq!(out, "cost(truncate(150*(100/100)));");
    }

    #[test]
    fn conc_cases_is_substituted() {
        assert_eq!(preprocess("Int max = $CONC_CASES;", &profile(100, 8)).unwrap(), "Int max = 8;");
    }

    #[test]
    fn availability_is_substituted() {
        assert_eq!(preprocess("x = $AVAILABILITY;", &profile(100, 8)).unwrap(), "x = 60;");
    }

    #[test]
    fn plain_text_is_unchanged() {
        let src = "module M; {  }\n";
        assert_eq!(preprocess(src, &profile(70, 3)).unwrap(), src);
    }

    #[test]
    fn group_separator_survives() {
        let src = "Resources:\nVan,1,2,3\n$\nDriver,1,2,3\n";
        assert_eq!(preprocess(src, &profile(70, 3)).unwrap(), src);
    }

    #[test]
    fn unknown_placeholder_is_rejected() {
        let err = preprocess("Int x = 1;\n  y = $SPEED;", &profile(100, 1)).unwrap_err();
        assert_eq!(
            err,
            PreprocessError::UnknownPlaceholder {
                name: "SPEED".into(),
                line: 2,
                column: 7
            }
        );
    }

    #[test]
    fn symbolic_mode_keeps_parameter_names() {
        let out = preprocess_symbolic("a = $EFFICIENCY + $CONC_CASES + $AVAILABILITY;", &profile(70, 2)).unwrap();
        assert_eq!(out, "a = EFFICIENCY + CONC_CASES + 60;");
    }

    proptest::proptest! {
        #[test]
        fn idempotent(text in "[a-z $;()\n0-9]{0,40}", eff in 1u32..200, cases in 1u32..10) {
            let p = profile(eff, cases);
            let src = text.replace("$x", "$EFFICIENCY");
            if let Ok(once) = preprocess(&src, &p) {
                proptest::prop_assert_eq!(preprocess(&once, &p).unwrap(), once.clone());
                proptest::prop_assert!(!once.contains("$EFFICIENCY"));
            }
        }
    }
}
