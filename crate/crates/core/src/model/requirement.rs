//! Dependency requirement expressions.
//!
//! A requirement is a disjunction of conjunctions of primitive predicates.
//! Each predicate is compiled at parse time into a version interval (or the
//! complement of one for `!=`), so matching is a handful of comparisons.
//!
//! Grammar per ecosystem:
//!
//! | syntax                  | npm | cargo | pypi |
//! |-------------------------|-----|-------|------|
//! | `=`, `<`, `<=`, `>`, `>=` | yes | yes | `==` instead of `=` |
//! | `~`, `^`                | yes | yes   | no   |
//! | `*`, `1.x`, `1.2.*`     | yes | `*` only | `==1.2.*`, `!=1.2.*` |
//! | `a - b` hyphen range    | yes | no    | no   |
//! | `\|\|`                  | yes | no    | no   |
//! | `~=`, `!=`              | no  | no    | yes  |
//! | bare version            | exact / x-range | caret | no |

use std::fmt;

use super::version::{parse_numeric, parse_pep440_subset, parse_prerelease, write_dotted};
use super::{Ecosystem, Identifier, SemVersion};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse requirement {text:?}: {reason}")]
pub struct RequirementError {
    pub text: String,
    pub reason: String,
}

/// A version literal whose trailing components may be missing or wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialVersion {
    pub major: Option<u64>,
    pub minor: Option<u64>,
    pub patch: Option<u64>,
    pub pre: Vec<Identifier>,
}

impl PartialVersion {
    pub fn full(major: u64, minor: u64, patch: u64) -> Self {
        PartialVersion {
            major: Some(major),
            minor: Some(minor),
            patch: Some(patch),
            pre: Vec::new(),
        }
    }

    pub fn any() -> Self {
        PartialVersion {
            major: None,
            minor: None,
            patch: None,
            pre: Vec::new(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.patch.is_some()
    }

    /// Missing components replaced by zero.
    fn floor(&self) -> SemVersion {
        SemVersion::new(
            self.major.unwrap_or(0),
            self.minor.unwrap_or(0),
            self.patch.unwrap_or(0),
        )
        .with_pre(self.pre.clone())
    }

    fn padded(mut self) -> Self {
        if self.major.is_some() {
            self.minor.get_or_insert(0);
            self.patch.get_or_insert(0);
        }
        self
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, wildcard_suffix: bool) -> fmt::Result {
        let Some(major) = self.major else {
            return f.write_str("*");
        };
        write!(f, "{major}")?;
        for part in [self.minor, self.patch] {
            match part {
                Some(n) => write!(f, ".{n}")?,
                None => {
                    if wildcard_suffix {
                        f.write_str(".*")?;
                    }
                    break;
                }
            }
        }
        if !self.pre.is_empty() {
            f.write_str("-")?;
            write_dotted(f, &self.pre)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Exact,
    Greater,
    GreaterEq,
    Less,
    LessEq,
    Tilde,
    Caret,
    /// pypi `~=`
    Compatible,
    /// pypi `!=`
    NotEqual,
}

impl Op {
    fn symbol(self, eco: Ecosystem) -> &'static str {
        match self {
            Op::Exact if eco == Ecosystem::PyPI => "==",
            Op::Exact => "=",
            Op::Greater => ">",
            Op::GreaterEq => ">=",
            Op::Less => "<",
            Op::LessEq => "<=",
            Op::Tilde => "~",
            Op::Caret => "^",
            Op::Compatible => "~=",
            Op::NotEqual => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Compare { op: Op, version: PartialVersion },
    Wildcard(PartialVersion),
    Hyphen {
        lower: PartialVersion,
        upper: PartialVersion,
    },
}

impl Predicate {
    fn literals(&self) -> impl Iterator<Item = &PartialVersion> {
        let (a, b) = match self {
            Predicate::Compare { version, .. } => (version, None),
            Predicate::Wildcard(v) => (v, None),
            Predicate::Hyphen { lower, upper } => (lower, Some(upper)),
        };
        std::iter::once(a).chain(b)
    }

    fn compile(&self) -> Span {
        match self {
            Predicate::Wildcard(v) => x_range(v),
            Predicate::Hyphen { lower, upper } => {
                if lower.major.is_none() && upper.major.is_none() {
                    return Span::ANY;
                }
                let low = lower.major.map(|_| Bound::incl(lower.floor()));
                let high = match upper.major {
                    None => None,
                    Some(_) if upper.is_full() => Some(Bound::incl(upper.floor())),
                    Some(_) => x_range(upper).upper(),
                };
                Span::Within(low, high)
            }
            Predicate::Compare { op, version: v } => compile_compare(*op, v),
        }
    }
}

fn compile_compare(op: Op, v: &PartialVersion) -> Span {
    let Some(major) = v.major else {
        // `<*` and `>*` match nothing; every other operator on `*` matches anything.
        return match op {
            Op::Less | Op::Greater | Op::NotEqual => Span::Nothing,
            _ => Span::ANY,
        };
    };
    let floor = v.floor();
    match op {
        Op::Exact | Op::NotEqual => {
            let r = if v.is_full() {
                Span::Within(Some(Bound::incl(floor.clone())), Some(Bound::incl(floor)))
            } else {
                x_range(v)
            };
            if op == Op::NotEqual {
                r.complement()
            } else {
                r
            }
        }
        Op::GreaterEq => Span::Within(Some(Bound::incl(floor)), None),
        Op::Greater => match (v.minor, v.patch) {
            (Some(_), Some(_)) => Span::Within(Some(Bound::excl(floor)), None),
            (None, _) => Span::Within(Some(Bound::incl(SemVersion::new(major + 1, 0, 0))), None),
            (Some(minor), None) => {
                Span::Within(Some(Bound::incl(SemVersion::new(major, minor + 1, 0))), None)
            }
        },
        Op::Less => {
            if v.is_full() {
                Span::Within(None, Some(Bound::excl(floor)))
            } else {
                let t = floor.triple();
                Span::Within(None, Some(Bound::excl(SemVersion::floor_of(t.0, t.1, t.2))))
            }
        }
        Op::LessEq => {
            if v.is_full() {
                Span::Within(None, Some(Bound::incl(floor)))
            } else {
                Span::Within(None, x_range(v).upper())
            }
        }
        Op::Tilde => {
            let upper = match v.minor {
                Some(minor) => SemVersion::floor_of(major, minor + 1, 0),
                None => SemVersion::floor_of(major + 1, 0, 0),
            };
            Span::Within(Some(Bound::incl(floor)), Some(Bound::excl(upper)))
        }
        Op::Caret => {
            let upper = match (major, v.minor, v.patch) {
                (m, _, _) if m > 0 => SemVersion::floor_of(m + 1, 0, 0),
                (0, None, _) => SemVersion::floor_of(1, 0, 0),
                (0, Some(minor), p) if minor > 0 || p.is_none() => {
                    SemVersion::floor_of(0, minor + 1, 0)
                }
                (_, _, p) => SemVersion::floor_of(0, 0, p.unwrap_or(0) + 1),
            };
            Span::Within(Some(Bound::incl(floor)), Some(Bound::excl(upper)))
        }
        Op::Compatible => {
            // `~=X.Y` allows X.*; `~=X.Y.Z` allows X.Y.*
            let upper = match (v.minor, v.patch) {
                (Some(minor), Some(_)) => SemVersion::floor_of(major, minor + 1, 0),
                _ => SemVersion::floor_of(major + 1, 0, 0),
            };
            Span::Within(Some(Bound::incl(floor)), Some(Bound::excl(upper)))
        }
    }
}

fn x_range(v: &PartialVersion) -> Span {
    let Some(major) = v.major else {
        return Span::ANY;
    };
    let floor = v.floor();
    match (v.minor, v.patch) {
        (Some(_), Some(_)) => Span::Within(Some(Bound::incl(floor.clone())), Some(Bound::incl(floor))),
        (Some(minor), None) => Span::Within(
            Some(Bound::incl(floor)),
            Some(Bound::excl(SemVersion::floor_of(major, minor + 1, 0))),
        ),
        (None, _) => Span::Within(
            Some(Bound::incl(floor)),
            Some(Bound::excl(SemVersion::floor_of(major + 1, 0, 0))),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bound {
    version: SemVersion,
    inclusive: bool,
}

impl Bound {
    fn incl(version: SemVersion) -> Self {
        Bound {
            version,
            inclusive: true,
        }
    }

    fn excl(version: SemVersion) -> Self {
        Bound {
            version,
            inclusive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Span {
    Nothing,
    Within(Option<Bound>, Option<Bound>),
    Outside(Option<Bound>, Option<Bound>),
}

impl Span {
    const ANY: Span = Span::Within(None, None);

    fn upper(self) -> Option<Bound> {
        match self {
            Span::Within(_, u) => u,
            _ => None,
        }
    }

    fn complement(self) -> Span {
        match self {
            Span::Within(l, u) => Span::Outside(l, u),
            Span::Outside(l, u) => Span::Within(l, u),
            Span::Nothing => Span::ANY,
        }
    }

    fn contains(&self, v: &SemVersion) -> bool {
        let within = |l: &Option<Bound>, u: &Option<Bound>| {
            let above = l.as_ref().is_none_or(|b| {
                if b.inclusive {
                    *v >= b.version
                } else {
                    *v > b.version
                }
            });
            let below = u.as_ref().is_none_or(|b| {
                if b.inclusive {
                    *v <= b.version
                } else {
                    *v < b.version
                }
            });
            above && below
        };
        match self {
            Span::Nothing => false,
            Span::Within(l, u) => within(l, u),
            Span::Outside(l, u) => !within(l, u),
        }
    }
}

#[derive(Debug, Clone)]
struct Compiled {
    span: Span,
    /// Triples of pre-release literals; a pre-release candidate must share one.
    pre_triples: Vec<(u64, u64, u64)>,
}

/// A parsed dependency requirement.
#[derive(Debug, Clone)]
pub struct RequirementExpr {
    ecosystem: Ecosystem,
    alternatives: Vec<Vec<Predicate>>,
    compiled: Vec<Vec<Compiled>>,
    source: String,
}

impl PartialEq for RequirementExpr {
    fn eq(&self, other: &Self) -> bool {
        self.ecosystem == other.ecosystem && self.alternatives == other.alternatives
    }
}

impl RequirementExpr {
    pub fn from_alternatives(
        ecosystem: Ecosystem,
        alternatives: Vec<Vec<Predicate>>,
        source: impl Into<String>,
    ) -> Self {
        let compiled = alternatives
            .iter()
            .map(|conj| {
                conj.iter()
                    .map(|p| Compiled {
                        span: p.compile(),
                        pre_triples: p
                            .literals()
                            .filter(|l| !l.pre.is_empty())
                            .map(|l| l.floor().triple())
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        RequirementExpr {
            ecosystem,
            alternatives,
            compiled,
            source: source.into(),
        }
    }

    pub fn ecosystem(&self) -> Ecosystem {
        self.ecosystem
    }

    /// OR of AND of predicates.
    pub fn alternatives(&self) -> &[Vec<Predicate>] {
        &self.alternatives
    }

    pub fn source_text(&self) -> &str {
        &self.source
    }

    /// Whether `v` satisfies the requirement. Pre-release versions only match
    /// a conjunction that names a pre-release of the same `major.minor.patch`.
    pub fn matches(&self, v: &SemVersion) -> bool {
        self.matches_with(v, false)
    }

    /// As [`matches`](Self::matches), optionally admitting every pre-release.
    pub fn matches_with(&self, v: &SemVersion, include_prerelease: bool) -> bool {
        self.compiled.iter().any(|conj| {
            conj.iter().all(|c| c.span.contains(v))
                && (include_prerelease
                    || v.pre.is_empty()
                    || conj
                        .iter()
                        .any(|c| c.pre_triples.contains(&v.triple())))
        })
    }
}

struct PredicateDisplay<'a>(&'a Predicate, Ecosystem);

impl fmt::Display for PredicateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eco = self.1;
        match self.0 {
            Predicate::Compare { op, version } => {
                f.write_str(op.symbol(eco))?;
                let suffix = eco == Ecosystem::PyPI && matches!(op, Op::Exact | Op::NotEqual);
                version.fmt_with(f, suffix)
            }
            Predicate::Wildcard(v) => v.fmt_with(f, true),
            Predicate::Hyphen { lower, upper } => {
                lower.fmt_with(f, false)?;
                f.write_str(" - ")?;
                upper.fmt_with(f, false)
            }
        }
    }
}

impl fmt::Display for RequirementExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let and_sep = match self.ecosystem {
            Ecosystem::Npm => " ",
            Ecosystem::Cargo | Ecosystem::PyPI => ", ",
        };
        for (i, conj) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" || ")?;
            }
            for (j, p) in conj.iter().enumerate() {
                if j > 0 {
                    f.write_str(and_sep)?;
                }
                write!(f, "{}", PredicateDisplay(p, self.ecosystem))?;
            }
        }
        Ok(())
    }
}

pub fn parse_requirement(eco: Ecosystem, text: &str) -> Result<RequirementExpr, RequirementError> {
    let err = |reason: String| RequirementError {
        text: text.to_string(),
        reason,
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err("empty requirement".into()));
    }
    if trimmed.contains("||") && eco != Ecosystem::Npm {
        return Err(err("`||` is only valid in npm-style requirements".into()));
    }
    let mut alternatives = Vec::new();
    for branch in trimmed.split("||") {
        let branch = branch.trim();
        if branch.is_empty() {
            return Err(err("empty alternative".into()));
        }
        alternatives.push(parse_conjunction(eco, branch).map_err(err)?);
    }
    Ok(RequirementExpr::from_alternatives(eco, alternatives, trimmed))
}

fn is_operator(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| matches!(c, '<' | '>' | '=' | '~' | '^' | '!'))
}

fn parse_conjunction(eco: Ecosystem, branch: &str) -> Result<Vec<Predicate>, String> {
    let pieces: Vec<&str> = match eco {
        Ecosystem::Npm => vec![branch],
        Ecosystem::Cargo | Ecosystem::PyPI => branch.split(',').map(str::trim).collect(),
    };
    let mut out = Vec::new();
    for piece in pieces {
        if piece.is_empty() {
            return Err("empty constraint between commas".into());
        }
        let tokens: Vec<&str> = piece.split_whitespace().collect();
        let mut i = 0;
        while i < tokens.len() {
            let tok = tokens[i];
            if tokens.get(i + 1) == Some(&"-") {
                if eco != Ecosystem::Npm {
                    return Err("hyphen ranges are only valid in npm-style requirements".into());
                }
                let upper = tokens
                    .get(i + 2)
                    .ok_or_else(|| "hyphen range is missing its upper bound".to_string())?;
                out.push(Predicate::Hyphen {
                    lower: parse_semver_literal(eco, tok)?.0,
                    upper: parse_semver_literal(eco, upper)?.0,
                });
                i += 3;
            } else if is_operator(tok) {
                let version = tokens
                    .get(i + 1)
                    .ok_or_else(|| format!("operator {tok:?} without a version"))?;
                out.push(parse_predicate(eco, &format!("{tok}{version}"))?);
                i += 2;
            } else {
                out.push(parse_predicate(eco, tok)?);
                i += 1;
            }
        }
    }
    Ok(out)
}

fn split_operator(eco: Ecosystem, piece: &str) -> Result<(Option<Op>, &str), String> {
    const OPS: [(&str, Option<Op>); 13] = [
        ("===", None),
        ("~=", Some(Op::Compatible)),
        ("==", Some(Op::Exact)),
        ("!=", Some(Op::NotEqual)),
        (">=", Some(Op::GreaterEq)),
        ("<=", Some(Op::LessEq)),
        ("~>", Some(Op::Tilde)),
        (">", Some(Op::Greater)),
        ("<", Some(Op::Less)),
        ("=", Some(Op::Exact)),
        ("~", Some(Op::Tilde)),
        ("^", Some(Op::Caret)),
        ("!", None),
    ];
    let Some((symbol, op)) = OPS.iter().find(|(s, _)| piece.starts_with(s)) else {
        return Ok((None, piece));
    };
    let op = op.ok_or_else(|| format!("unsupported operator {symbol:?}"))?;
    let allowed = match eco {
        Ecosystem::Npm => !matches!(*symbol, "~=" | "==" | "!="),
        Ecosystem::Cargo => !matches!(*symbol, "~=" | "==" | "!=" | "~>"),
        Ecosystem::PyPI => matches!(*symbol, "~=" | "==" | "!=" | ">=" | "<=" | ">" | "<"),
    };
    if !allowed {
        return Err(format!("operator {symbol:?} is not valid for {eco}"));
    }
    Ok((Some(op), piece[symbol.len()..].trim_start()))
}

fn parse_predicate(eco: Ecosystem, piece: &str) -> Result<Predicate, String> {
    let (op, literal) = split_operator(eco, piece)?;
    if literal.is_empty() {
        return Err(format!("{piece:?} has no version"));
    }
    if eco == Ecosystem::PyPI {
        return parse_pypi_predicate(op, literal);
    }
    let (version, has_wildcard) = parse_semver_literal(eco, literal)?;
    Ok(match (eco, op) {
        (Ecosystem::Cargo, None) if !has_wildcard => Predicate::Compare {
            op: Op::Caret,
            version,
        },
        (_, None | Some(Op::Exact)) if !version.is_full() => Predicate::Wildcard(version),
        (_, None) => Predicate::Compare {
            op: Op::Exact,
            version,
        },
        (_, Some(op)) => Predicate::Compare { op, version },
    })
}

/// npm/cargo literal: `[v]MAJOR[.MINOR[.PATCH[-PRE]]][+BUILD]`, where any
/// trailing component may be a wildcard. Returns whether a wildcard
/// character was written explicitly.
fn parse_semver_literal(eco: Ecosystem, text: &str) -> Result<(PartialVersion, bool), String> {
    let body = match eco {
        Ecosystem::Npm => text.strip_prefix(['v', 'V']).unwrap_or(text),
        _ => text,
    };
    let body = body.split_once('+').map_or(body, |(b, _)| b);
    let (core, pre) = match body.split_once('-') {
        Some((c, p)) => (c, parse_prerelease(p)?),
        None => (body, Vec::new()),
    };
    let parts: Vec<&str> = core.split('.').collect();
    if parts.len() > 3 {
        return Err(format!("{text:?} has more than three components"));
    }
    let mut nums = [None; 3];
    let mut wildcard = false;
    for (slot, part) in nums.iter_mut().zip(&parts) {
        let is_wild = match eco {
            Ecosystem::Npm => matches!(*part, "*" | "x" | "X"),
            _ => *part == "*",
        };
        if is_wild {
            wildcard = true;
        } else if wildcard {
            return Err(format!("{text:?} has a number after a wildcard"));
        } else {
            *slot = Some(parse_numeric(part, false)?);
        }
    }
    let version = PartialVersion {
        major: nums[0],
        minor: nums[1],
        patch: nums[2],
        pre,
    };
    if !version.pre.is_empty() && !version.is_full() {
        return Err(format!("{text:?}: pre-release needs MAJOR.MINOR.PATCH"));
    }
    Ok((version, wildcard))
}

fn parse_pypi_predicate(op: Option<Op>, literal: &str) -> Result<Predicate, String> {
    let op = op.ok_or_else(|| format!("{literal:?} needs a comparison operator"))?;
    if literal == "*" {
        return Ok(Predicate::Wildcard(PartialVersion::any()));
    }
    if let Some(prefix) = literal.strip_suffix(".*") {
        if !matches!(op, Op::Exact | Op::NotEqual) {
            return Err("`.*` suffix is only valid with == and !=".into());
        }
        let nums = prefix
            .split('.')
            .map(|p| parse_numeric(p, false))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.is_empty() || nums.len() > 2 {
            return Err(format!("{literal:?}: wildcard needs one or two leading components"));
        }
        let version = PartialVersion {
            major: Some(nums[0]),
            minor: nums.get(1).copied(),
            patch: None,
            pre: Vec::new(),
        };
        return Ok(Predicate::Compare { op, version });
    }
    let (release, pre) = parse_pep440_subset(literal)?;
    if release.is_empty() || release.len() > 3 {
        return Err(format!("{literal:?}: expected one to three release components"));
    }
    let version = PartialVersion {
        major: Some(release[0]),
        minor: release.get(1).copied(),
        patch: release.get(2).copied(),
        pre,
    };
    if op == Op::Compatible {
        if version.minor.is_none() {
            return Err("`~=` needs at least two release components".into());
        }
        return Ok(Predicate::Compare { op, version });
    }
    Ok(Predicate::Compare {
        op,
        version: version.padded(),
    })
}
