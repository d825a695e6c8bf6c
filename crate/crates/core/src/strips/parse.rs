//! Reader for the line-oriented scenario format.
//!
//! ```text
//! # comment
//! cells:
//!   region living
//!   surface table
//! adjacency:
//!   living table
//! entities:
//!   item cup
//! init:
//!   robot-at living
//! goal:
//!   item-at cup table
//! uncertain:
//!   cup living 0.25 table 0.75
//! ```
//!
//! A line holding a single word followed by `:` opens a section. Sections may
//! repeat; their entries accumulate. `totals:` optionally declares
//! `regions N` and `surfaces N`.

use std::fmt;

use thiserror::Error;

use super::scenario::{
    Atom, Cell, CellKind, Entity, EntityKind, Predicate, ScenarioSpec, SemanticError,
    UncertainEntity,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Totals,
    Cells,
    Adjacency,
    Entities,
    Init,
    Goal,
    Uncertain,
}

impl Section {
    fn from_name(name: &str) -> Option<Section> {
        Some(match name {
            "totals" => Section::Totals,
            "cells" => Section::Cells,
            "adjacency" => Section::Adjacency,
            "entities" => Section::Entities,
            "init" => Section::Init,
            "goal" => Section::Goal,
            "uncertain" => Section::Uncertain,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text)
    }
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &line[s..i], column: line[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: line[..s].chars().count() + 1 });
    }
    out
}

struct LineCtx {
    line: usize,
}

impl LineCtx {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, column, message: message.into() }
    }

    fn ident(&self, tok: Token<'_>) -> Result<String, ParseError> {
        let valid = tok
            .text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if valid {
            Ok(tok.text.to_owned())
        } else {
            Err(self.err(tok.column, format!("invalid identifier `{tok}`")))
        }
    }

    fn count(&self, tok: Token<'_>) -> Result<usize, ParseError> {
        if !tok.text.chars().all(|c| c.is_ascii_digit()) {
            return Err(self.err(tok.column, format!("expected a count, found `{tok}`")));
        }
        tok.text
            .parse()
            .map_err(|_| self.err(tok.column, format!("count `{tok}` out of range")))
    }

    fn probability(&self, tok: Token<'_>) -> Result<f64, ParseError> {
        let (int, frac) = match tok.text.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (tok.text, None),
        };
        let digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
        if !digits(int) || frac.is_some_and(|f| !digits(f)) {
            return Err(self.err(tok.column, format!("expected a decimal literal, found `{tok}`")));
        }
        tok.text
            .parse()
            .map_err(|_| self.err(tok.column, format!("bad decimal literal `{tok}`")))
    }

    fn arity(&self, toks: &[Token<'_>], n: usize, what: &str) -> Result<(), ParseError> {
        if toks.len() == n {
            Ok(())
        } else {
            let column = toks.get(n).or(toks.last()).map_or(1, |t| t.column);
            Err(self.err(column, format!("expected {what}")))
        }
    }
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ParseError> {
    let mut spec = ScenarioSpec::default();
    let mut section = None;

    for (idx, raw) in text.lines().enumerate() {
        let ctx = LineCtx { line: idx + 1 };
        let content = raw.split_once('#').map_or(raw, |(before, _)| before);
        let toks = tokens(content);
        let Some(&first) = toks.first() else { continue };

        if toks.len() == 1 && first.text.ends_with(':') {
            let name = &first.text[..first.text.len() - 1];
            section = Some(
                Section::from_name(name)
                    .ok_or_else(|| ctx.err(first.column, format!("unknown section `{name}`")))?,
            );
            continue;
        }
        let Some(current) = section else {
            return Err(ctx.err(first.column, "entry outside of any section"));
        };

        match current {
            Section::Totals => {
                ctx.arity(&toks, 2, "`regions N` or `surfaces N`")?;
                let n = ctx.count(toks[1])?;
                match first.text {
                    "regions" => spec.totals.regions = Some(n),
                    "surfaces" => spec.totals.surfaces = Some(n),
                    other => {
                        return Err(ctx.err(first.column, format!("unknown total `{other}`")))
                    }
                }
            }
            Section::Cells => {
                ctx.arity(&toks, 2, "`region ID` or `surface ID`")?;
                let kind = match first.text {
                    "region" => CellKind::Region,
                    "surface" => CellKind::Surface,
                    other => {
                        return Err(ctx.err(first.column, format!("unknown cell kind `{other}`")))
                    }
                };
                spec.cells.push(Cell { id: ctx.ident(toks[1])?, kind });
            }
            Section::Adjacency => {
                ctx.arity(&toks, 2, "two cell ids")?;
                spec.adjacency.push((ctx.ident(toks[0])?, ctx.ident(toks[1])?));
            }
            Section::Entities => {
                ctx.arity(&toks, 2, "`item ID`, `box ID` or `person ID`")?;
                let kind = match first.text {
                    "item" => EntityKind::Item,
                    "box" => EntityKind::Box,
                    "person" => EntityKind::Person,
                    other => {
                        return Err(ctx.err(first.column, format!("unknown entity kind `{other}`")))
                    }
                };
                spec.entities.push(Entity { id: ctx.ident(toks[1])?, kind });
            }
            Section::Init | Section::Goal => {
                let predicate = Predicate::from_name(first.text).ok_or_else(|| {
                    ctx.err(first.column, format!("unknown predicate `{}`", first.text))
                })?;
                let args = toks[1..].iter().map(|t| ctx.ident(*t)).collect::<Result<Vec<_>, _>>()?;
                let atom = Atom { predicate, args };
                let target = if current == Section::Init { &mut spec.init } else { &mut spec.goal };
                if !target.insert(atom) {
                    return Err(ctx.err(first.column, "duplicate atom"));
                }
            }
            Section::Uncertain => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    let column = toks.last().map_or(1, |t| t.column);
                    return Err(ctx.err(column, "expected `ENTITY CELL P [CELL P]...`"));
                }
                let entity = ctx.ident(first)?;
                let candidates = toks[1..]
                    .chunks(2)
                    .map(|pair| Ok((ctx.ident(pair[0])?, ctx.probability(pair[1])?)))
                    .collect::<Result<Vec<_>, ParseError>>()?;
                spec.uncertain.push(UncertainEntity { entity, candidates });
            }
        }
    }

    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
cells:
  region a
  region b   # trailing comment
adjacency:
  a b
entities:
  item cup
init:
  robot-at a
  item-at cup b
goal:
  item-at cup a
";

    #[test]
    fn minimal_scenario_has_no_uncertainty() {
        let spec = parse_scenario(MINIMAL).unwrap();
        assert_eq!(spec.cells.len(), 2);
        assert!(spec.uncertain.is_empty());
        assert_eq!(spec.goal.len(), 1);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let text = "\
cells:
  region a
  region b
entities:
  item cup
init:
  robot-at a
uncertain:
  cup a 0.4 b 0.5
";
        match parse_scenario(text) {
            Err(ParseError::Semantic(SemanticError::ProbabilitySum { entity, sum })) => {
                assert_eq!(entity, "cup");
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scenario("cells:\n  region a\n  blob b\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax { line: 3, column: 3, message: "unknown cell kind `blob`".into() }
        );
        let err = parse_scenario("  region a\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, column: 3, .. }));
        let err = parse_scenario("uncertain:\n  cup a 0.5 b\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, .. }));
        let err = parse_scenario("uncertain:\n  cup a 1e-3\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, column: 9, .. }));
    }

    #[test]
    fn unknown_cells_are_semantic_errors() {
        let text = MINIMAL.replace("  a b\n", "  a c\n");
        assert_eq!(
            parse_scenario(&text),
            Err(ParseError::Semantic(SemanticError::UnknownCell("c".into())))
        );
    }

    #[test]
    fn duplicate_entities_are_rejected() {
        let text = MINIMAL.replace("  item cup\n", "  item cup\n  person cup\n");
        assert_eq!(
            parse_scenario(&text),
            Err(ParseError::Semantic(SemanticError::DuplicateEntity("cup".into())))
        );
    }

    #[test]
    fn serialization_round_trips() {
        let spec = parse_scenario(MINIMAL).unwrap();
        assert_eq!(parse_scenario(&spec.to_text()).unwrap(), spec);
    }

    proptest::proptest! {
        #[test]
        fn parser_never_panics(text in "[a-z:\\- .0-9#\n]{0,300}") {
            let _ = parse_scenario(&text);
        }

        #[test]
        fn mutated_minimal_scenarios_never_panic(cut in 0usize..MINIMAL.len(), junk in "[a-z 0-9.:\n-]{0,12}") {
            let mut text = MINIMAL.to_owned();
            text.insert_str(cut, &junk);
            if let Ok(spec) = parse_scenario(&text) {
                proptest::prop_assert_eq!(parse_scenario(&spec.to_text()).unwrap(), spec);
            }
        }
    }
}
