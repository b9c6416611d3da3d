//! Release versions normalized onto the SEMVER shape.
//!
//! npm-style and cargo-style versions are parsed with the SEMVER 2.0.0
//! grammar (npm additionally tolerates a leading `v`). pypi-style versions
//! accept a restricted PEP 440 subset: two or three numeric release
//! components with an optional `a`/`b`/`rc` pre-release segment. Epochs,
//! post, dev and local segments are rejected.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::Ecosystem;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Identifier {
    // Variant order matters: numeric identifiers sort before alphanumeric ones.
    Numeric(u64),
    Alpha(String),
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identifier::Numeric(n) => write!(f, "{n}"),
            Identifier::Alpha(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse version {text:?}: {reason}")]
pub struct VersionError {
    pub text: String,
    pub reason: String,
}

impl VersionError {
    fn new(text: &str, reason: impl Into<String>) -> Self {
        VersionError {
            text: text.to_string(),
            reason: reason.into(),
        }
    }
}

/// A normalized release version.
///
/// Equality, hashing and ordering look only at the numeric triple and the
/// pre-release identifiers; build metadata and the original spelling are
/// carried along for display.
#[derive(Debug, Clone)]
pub struct SemVersion {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
    pub pre: Vec<Identifier>,
    pub build: String,
    pub original: String,
}

impl SemVersion {
    pub fn new(major: u64, minor: u64, patch: u64) -> Self {
        SemVersion {
            major,
            minor,
            patch,
            pre: Vec::new(),
            build: String::new(),
            original: String::new(),
        }
    }

    pub fn with_pre(mut self, pre: Vec<Identifier>) -> Self {
        self.pre = pre;
        self
    }

    /// The spelling this version was parsed from, or its canonical form for
    /// constructed versions.
    pub fn text(&self) -> String {
        if self.original.is_empty() {
            self.to_string()
        } else {
            self.original.clone()
        }
    }

    pub fn is_prerelease(&self) -> bool {
        !self.pre.is_empty()
    }

    pub fn triple(&self) -> (u64, u64, u64) {
        (self.major, self.minor, self.patch)
    }

    /// The smallest version with this triple (`M.m.p-0`).
    pub(crate) fn floor_of(major: u64, minor: u64, patch: u64) -> Self {
        SemVersion::new(major, minor, patch).with_pre(vec![Identifier::Numeric(0)])
    }
}

impl PartialEq for SemVersion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SemVersion {}

impl Hash for SemVersion {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.triple().hash(state);
        self.pre.hash(state);
    }
}

impl PartialOrd for SemVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SemVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.triple()
            .cmp(&other.triple())
            .then_with(|| match (self.pre.is_empty(), other.pre.is_empty()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                (false, false) => self.pre.cmp(&other.pre),
            })
    }
}

impl fmt::Display for SemVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)?;
        if !self.pre.is_empty() {
            f.write_str("-")?;
            write_dotted(f, &self.pre)?;
        }
        if !self.build.is_empty() {
            write!(f, "+{}", self.build)?;
        }
        Ok(())
    }
}

pub(crate) fn write_dotted(f: &mut fmt::Formatter<'_>, ids: &[Identifier]) -> fmt::Result {
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            f.write_str(".")?;
        }
        write!(f, "{id}")?;
    }
    Ok(())
}

/// Total order on versions (build metadata ignored).
pub fn compare_versions(a: &SemVersion, b: &SemVersion) -> Ordering {
    a.cmp(b)
}

pub fn parse_version(eco: Ecosystem, text: &str) -> Result<SemVersion, VersionError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(VersionError::new(text, "empty version"));
    }
    let mut v = match eco {
        Ecosystem::Npm => {
            let body = trimmed.strip_prefix('v').unwrap_or(trimmed);
            parse_semver(body).map_err(|r| VersionError::new(text, r))?
        }
        Ecosystem::Cargo => parse_semver(trimmed).map_err(|r| VersionError::new(text, r))?,
        Ecosystem::PyPI => {
            let (release, pre) =
                parse_pep440_subset(trimmed).map_err(|r| VersionError::new(text, r))?;
            if !(2..=3).contains(&release.len()) {
                return Err(VersionError::new(
                    text,
                    "expected two or three release components",
                ));
            }
            SemVersion {
                major: release[0],
                minor: release[1],
                patch: release.get(2).copied().unwrap_or(0),
                pre,
                build: String::new(),
                original: String::new(),
            }
        }
    };
    v.original = trimmed.to_string();
    Ok(v)
}

/// Strict SEMVER 2.0.0 `MAJOR.MINOR.PATCH[-PRE][+BUILD]`.
pub(crate) fn parse_semver(text: &str) -> Result<SemVersion, String> {
    let (rest, build) = match text.split_once('+') {
        Some((r, b)) => {
            validate_dotted(b, false).map_err(|e| format!("build metadata: {e}"))?;
            (r, b.to_string())
        }
        None => (text, String::new()),
    };
    let (core, pre) = match rest.split_once('-') {
        Some((c, p)) => (c, parse_prerelease(p)?),
        None => (rest, Vec::new()),
    };
    let parts: Vec<&str> = core.split('.').collect();
    if parts.len() != 3 {
        return Err("expected MAJOR.MINOR.PATCH".into());
    }
    let mut nums = [0u64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = parse_numeric(part, true)?;
    }
    Ok(SemVersion {
        major: nums[0],
        minor: nums[1],
        patch: nums[2],
        pre,
        build,
        original: String::new(),
    })
}

pub(crate) fn parse_prerelease(text: &str) -> Result<Vec<Identifier>, String> {
    validate_dotted(text, true).map_err(|e| format!("pre-release: {e}"))?;
    Ok(text
        .split('.')
        .map(|id| {
            if id.bytes().all(|b| b.is_ascii_digit()) {
                // validate_dotted has already rejected leading zeros and overflow
                Identifier::Numeric(id.parse().expect("validated numeric identifier"))
            } else {
                Identifier::Alpha(id.to_string())
            }
        })
        .collect())
}

fn validate_dotted(text: &str, numeric_rules: bool) -> Result<(), String> {
    for id in text.split('.') {
        if id.is_empty() {
            return Err("empty identifier".into());
        }
        if !id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
            return Err(format!("invalid character in {id:?}"));
        }
        if numeric_rules && id.bytes().all(|b| b.is_ascii_digit()) {
            parse_numeric(id, true)?;
        }
    }
    Ok(())
}

pub(crate) fn parse_numeric(part: &str, strict_zeros: bool) -> Result<u64, String> {
    if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("{part:?} is not a number"));
    }
    if strict_zeros && part.len() > 1 && part.starts_with('0') {
        return Err(format!("{part:?} has a leading zero"));
    }
    part.parse::<u64>()
        .map_err(|_| format!("{part:?} overflows a 64-bit component"))
}

/// Parses `[v]N(.N)*[sep]{a|b|rc|alpha|beta|c|pre|preview}[sep][N]`.
///
/// Returns the release components and the normalized pre-release identifiers.
pub(crate) fn parse_pep440_subset(text: &str) -> Result<(Vec<u64>, Vec<Identifier>), String> {
    let lower = text.to_ascii_lowercase();
    let body = lower.strip_prefix('v').unwrap_or(&lower);
    if body.contains('!') {
        return Err("epoch segments are not supported".into());
    }
    if body.contains('+') {
        return Err("local version segments are not supported".into());
    }
    let release_end = body
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(body.len());
    let (mut release_text, mut suffix) = body.split_at(release_end);
    // A separator before the pre-release tag ends up at the end of the release text.
    if let Some(stripped) = release_text.strip_suffix('.') {
        if !suffix.is_empty() {
            release_text = stripped;
        }
    }
    let release = release_text
        .split('.')
        .map(|p| parse_numeric(p, false))
        .collect::<Result<Vec<_>, _>>()?;

    if suffix.is_empty() {
        return Ok((release, Vec::new()));
    }
    suffix = suffix.trim_start_matches(['-', '_']);
    const TAGS: [(&str, &str); 7] = [
        ("alpha", "a"),
        ("beta", "b"),
        ("preview", "rc"),
        ("pre", "rc"),
        ("rc", "rc"),
        ("a", "a"),
        ("b", "b"),
    ];
    let (tag, rest) = TAGS
        .iter()
        .chain(std::iter::once(&("c", "rc")))
        .find_map(|(spelling, canonical)| suffix.strip_prefix(spelling).map(|r| (*canonical, r)))
        .ok_or_else(|| {
            if suffix.starts_with("post") || suffix.starts_with("dev") || suffix.starts_with('r')
            {
                format!("unsupported segment {suffix:?} (post/dev releases are not normalizable)")
            } else {
                format!("unrecognized suffix {suffix:?}")
            }
        })?;
    let number_text = rest.trim_start_matches(['-', '_', '.']);
    let number = if number_text.is_empty() {
        if rest.is_empty() {
            0
        } else {
            return Err("dangling separator after pre-release tag".into());
        }
    } else {
        parse_numeric(number_text, false)?
    };
    Ok((
        release,
        vec![Identifier::Alpha(tag.to_string()), Identifier::Numeric(number)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npm(text: &str) -> SemVersion {
        parse_version(Ecosystem::Npm, text).unwrap()
    }

    #[test]
    fn plain_release() {
        let v = npm("3.2.1");
        assert_eq!(v.triple(), (3, 2, 1));
        assert!(v.pre.is_empty());
        assert_eq!(v.original, "3.2.1");
    }

    #[test]
    fn prerelease_precedes_release() {
        let pre = npm("1.0.0-alpha.1");
        assert_eq!(
            pre.pre,
            vec![Identifier::Alpha("alpha".into()), Identifier::Numeric(1)]
        );
        assert!(pre < npm("1.0.0"));
        assert_eq!(compare_versions(&npm("1.0.0-alpha"), &npm("1.0.0")), Ordering::Less);
    }

    #[test]
    fn semver_precedence_chain() {
        let chain = [
            "1.0.0-alpha",
            "1.0.0-alpha.1",
            "1.0.0-alpha.beta",
            "1.0.0-beta",
            "1.0.0-beta.2",
            "1.0.0-beta.11",
            "1.0.0-rc.1",
            "1.0.0",
        ];
        for w in chain.windows(2) {
            assert!(npm(w[0]) < npm(w[1]), "{} < {}", w[0], w[1]);
        }
    }

    #[test]
    fn build_metadata_ignored_for_ordering() {
        let a = npm("1.2.3+build.7");
        assert_eq!(a, npm("1.2.3"));
        assert_eq!(a.build, "build.7");
        assert_eq!(a.to_string(), "1.2.3+build.7");
    }

    #[test]
    fn semver_rejections() {
        for bad in ["1.2", "1.2.3.4", "01.2.3", "1.2.x", "1.2.3-", "1.2.3-a..b", "latest"] {
            assert!(parse_version(Ecosystem::Cargo, bad).is_err(), "{bad}");
        }
        assert!(parse_version(Ecosystem::Cargo, "v1.2.3").is_err());
        assert!(parse_version(Ecosystem::Npm, "v1.2.3").is_ok());
    }

    #[test]
    fn pypi_subset() {
        let p = |t| parse_version(Ecosystem::PyPI, t);
        assert_eq!(p("2.28.1").unwrap().triple(), (2, 28, 1));
        assert_eq!(p("1.0").unwrap().triple(), (1, 0, 0));
        let rc = p("1.0.0rc1").unwrap();
        assert_eq!(
            rc.pre,
            vec![Identifier::Alpha("rc".into()), Identifier::Numeric(1)]
        );
        assert_eq!(p("1.0.0-RC.1").unwrap(), rc);
        assert_eq!(p("1.0.0.c1").unwrap(), rc);
        assert!(p("1.0.0a1").unwrap() < p("1.0.0b1").unwrap());
        assert!(p("1.0.0b1").unwrap() < rc);
        assert_eq!(p("1.0a").unwrap().pre[1], Identifier::Numeric(0));
        for bad in ["2!1.0", "1.0.post1", "1.0.dev3", "1.0+local", "1", "1.2.3.4", "1.0-r1"] {
            assert!(p(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn display_round_trips_per_ecosystem() {
        for eco in Ecosystem::ALL {
            for text in ["0.0.0", "1.2.3", "10.20.30"] {
                let v = parse_version(eco, text).unwrap();
                assert_eq!(parse_version(eco, &v.to_string()).unwrap(), v);
            }
        }
        let rc = parse_version(Ecosystem::PyPI, "2.0rc3").unwrap();
        assert_eq!(rc.to_string(), "2.0.0-rc.3");
        assert_eq!(parse_version(Ecosystem::PyPI, &rc.to_string()).unwrap(), rc);
    }
}
