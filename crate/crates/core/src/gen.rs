//! Generator for the three synthetic benchmark families. Each family pairs a
//! fixed three-rule program with an `edb(0..base*size).` fact interval; the
//! families differ in how the `a` rule consumes `b` (positively, under
//! negation, or through an aggregate).

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pi1,
    Pi2,
    Pi3,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Pi1 => "pi1",
            Family::Pi2 => "pi2",
            Family::Pi3 => "pi3",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pi1" => Ok(Family::Pi1),
            "pi2" => Ok(Family::Pi2),
            "pi3" => Ok(Family::Pi3),
            other => Err(format!("unknown family '{}' (expected pi1, pi2, or pi3)", other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    SizeMustBePositive,
    Overflow,
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::SizeMustBePositive => f.write_str("size must be at least 1"),
            GenError::Overflow => f.write_str("base * size does not fit the fact interval"),
        }
    }
}

impl std::error::Error for GenError {}

/// Program text of the chosen family with facts `edb(0..base*size).`.
pub fn generate(family: Family, size: u64, base: u64) -> Result<String, GenError> {
    if size == 0 {
        return Err(GenError::SizeMustBePositive);
    }
    let upper = base
        .checked_mul(size)
        .filter(|n| *n <= i64::MAX as u64)
        .ok_or(GenError::Overflow)?;
    let rules = match family {
        Family::Pi1 => {
            "a(X,Y) :- edb(X,Y), b(X).\n\
             b(X) :- edb(X,Y).\n\
             c(X,Y) :- a(X,Y), b(Y).\n"
        }
        Family::Pi2 => {
            "b(X) :- edb(X,Y).\n\
             c(X,Y) :- a(X,Y), b(Y).\n\
             a(X,Y) :- edb(X,Y), not b(X).\n"
        }
        Family::Pi3 => {
            "b(X) :- edb(X,Y).\n\
             c(X,Y) :- a(X,Y), b(Y).\n\
             a(X,Y) :- edb(X,Y), #sum{1 : b(X)} = 0.\n"
        }
    };
    Ok(format!("{}edb(0..{}).\n", rules, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depgraph::stratify;
    use crate::parser::parse_program;

    #[test]
    fn pi2_at_base_ten() {
        let text = generate(Family::Pi2, 1, 10).unwrap();
        assert_eq!(
            text,
            "b(X) :- edb(X,Y).\n\
             c(X,Y) :- a(X,Y), b(Y).\n\
             a(X,Y) :- edb(X,Y), not b(X).\n\
             edb(0..10).\n"
        );
        let program = parse_program(&text).unwrap();
        assert_eq!(program.rules.len(), 3 + 11);
    }

    #[test]
    fn size_zero_is_rejected() {
        assert_eq!(generate(Family::Pi1, 0, 10), Err(GenError::SizeMustBePositive));
    }

    #[test]
    fn generated_families_parse_and_stratify() {
        for family in [Family::Pi1, Family::Pi2, Family::Pi3] {
            let text = generate(family, 2, 50).unwrap();
            let program = parse_program(&text).unwrap();
            assert!(program.safety_report().is_empty());
            assert!(stratify(&program).is_ok());
        }
    }

    #[test]
    fn family_names_round_trip() {
        for family in [Family::Pi1, Family::Pi2, Family::Pi3] {
            assert_eq!(family.to_string().parse::<Family>().unwrap(), family);
        }
        assert!("pi4".parse::<Family>().is_err());
    }
}
