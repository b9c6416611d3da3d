use std::collections::{BTreeMap, HashMap};

use super::{DependencyEdge, PackageId, RequirementExpr, SemVersion};

/// What one importer release declares for one dependency.
#[derive(Debug, Clone, PartialEq)]
pub enum Declaration {
    Requirement(RequirementExpr),
    /// The requirement text could not be parsed; kept so the interval is
    /// reported rather than silently treated as a dropped dependency.
    Unparseable(String),
}

/// Per importer version, the declaration for one dependency.
pub type PairDeclarations = HashMap<SemVersion, Declaration>;

/// Regular dependency declarations grouped as importer → dependency → release.
#[derive(Debug, Clone, Default)]
pub struct DependencyIndex {
    pairs: BTreeMap<PackageId, BTreeMap<PackageId, PairDeclarations>>,
    edge_count: usize,
}

impl DependencyIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a regular edge. Returns `false` if the release already declared
    /// this dependency (the first declaration is kept). Non-regular edges are
    /// ignored and reported as accepted.
    pub fn insert(&mut self, edge: DependencyEdge) -> bool {
        if !edge.is_regular() {
            return true;
        }
        self.declare(
            edge.from_pkg,
            edge.from_version,
            edge.to_pkg,
            Declaration::Requirement(edge.requirement),
        )
    }

    pub fn declare(
        &mut self,
        from: PackageId,
        version: SemVersion,
        to: PackageId,
        declaration: Declaration,
    ) -> bool {
        let slot = self
            .pairs
            .entry(from)
            .or_default()
            .entry(to)
            .or_default();
        if slot.contains_key(&version) {
            return false;
        }
        slot.insert(version, declaration);
        self.edge_count += 1;
        true
    }

    /// ⟨importer, dependency⟩ pairs in sorted order.
    pub fn pairs(&self) -> impl Iterator<Item = (&PackageId, &PackageId, &PairDeclarations)> {
        self.pairs
            .iter()
            .flat_map(|(from, deps)| deps.iter().map(move |(to, decl)| (from, to, decl)))
    }

    pub fn declarations(&self, from: &PackageId, to: &PackageId) -> Option<&PairDeclarations> {
        self.pairs.get(from)?.get(to)
    }

    pub fn importers(&self) -> impl Iterator<Item = &PackageId> {
        self.pairs.keys()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.values().map(BTreeMap::len).sum()
    }

    /// Regular release-level declarations stored.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }
}
