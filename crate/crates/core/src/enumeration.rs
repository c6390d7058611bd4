//! Vertex-transitive subgroups of `Aut(Λ^d)` up to conjugacy.
//!
//! A vertex-transitive group is determined by its point group `P`, a
//! `P`-invariant full-rank lattice `T` whose index divides `|P|`, and a
//! cocycle `P → Z^d/T` whose values cover `Z^d/T`. The search runs over
//! conjugacy-class representatives of `P`, all such lattices and all
//! cocycles (fixed by their values on generators of `P`), and deduplicates by
//! the canonical conjugate.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finite::{self, identify_structure, PointSet, Structure};
use crate::grid::{self, table, GridAutomorphism, SignedPermutation, Vector, MAX_DIM, ZERO};
use crate::lattice::Lattice;
use crate::space_group::SpaceGroupNF;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    /// 1-based position in the catalog.
    pub id: usize,
    pub group: SpaceGroupNF,
    pub generators: Vec<GridAutomorphism>,
    /// 1-based index into [`finite::subgroup_class_reps`].
    pub stabilizer_class: usize,
    pub point_class: usize,
}

#[derive(Clone, Debug)]
pub struct GroupCatalog {
    pub dim: usize,
    pub entries: Vec<CatalogEntry>,
}

impl GroupCatalog {
    pub fn get(&self, id: usize) -> Option<&CatalogEntry> {
        id.checked_sub(1).and_then(|i| self.entries.get(i)).filter(|e| e.id == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Class index (1-based) of a subgroup of the hyperoctahedral group among
/// [`finite::subgroup_class_reps`].
pub fn subgroup_class_of(g: &PointSet, reps: &[PointSet]) -> usize {
    let canon = g.canonical_conjugate().0;
    reps.iter().position(|r| *r == canon).expect("class representative") + 1
}

/// All cocycles `P → Z^d/T` extending the given values on `gens`.
fn extend_cocycle(point: &PointSet, lattice: &Lattice, gens: &[(usize, Vector)]) -> Option<Vec<Vector>> {
    let t = table(point.dim());
    let mut tau: Vec<Option<Vector>> = vec![None; t.elems.len()];
    tau[0] = Some(ZERO);
    let mut stack = vec![0usize];
    while let Some(a) = stack.pop() {
        let ta = tau[a].unwrap();
        for &(gi, gt) in gens {
            let c = t.mul[a][gi] as usize;
            let tc = lattice.reduce(grid::add(t.elems[gi].apply(ta), gt));
            match tau[c] {
                None => {
                    tau[c] = Some(tc);
                    stack.push(c);
                }
                Some(old) if old != tc => return None,
                _ => {}
            }
        }
    }
    debug_assert!(point.indices().all(|i| tau[i].is_some()));
    Some(tau.into_iter().map(|v| v.unwrap_or(ZERO)).collect())
}

/// Canonical forms of every vertex-transitive group whose point group is
/// conjugate to `point`, sorted by key.
pub fn enumerate_for_point_group(point: &PointSet) -> Vec<SpaceGroupNF> {
    let dim = point.dim();
    let order = point.len() as i64;
    let gens: Vec<SignedPermutation> = point.generators();
    let gen_idx: Vec<usize> = gens.iter().map(|g| g.index()).collect();
    let mut found: BTreeSet<(u64, Lattice, Vec<Vector>)> = BTreeSet::new();
    let mut out = Vec::new();
    for n in (1..=order).filter(|n| order % n == 0) {
        for lattice in Lattice::all_with_index(dim, n) {
            if !gens.iter().all(|g| lattice.is_invariant_under(g)) {
                continue;
            }
            let reps = lattice.coset_reps();
            let k = gens.len();
            let mut choice = vec![0usize; k];
            loop {
                let assign: Vec<(usize, Vector)> = gen_idx.iter().zip(&choice).map(|(&g, &c)| (g, reps[c])).collect();
                if let Some(tau) = extend_cocycle(point, &lattice, &assign) {
                    let mut values: Vec<Vector> = point.indices().map(|i| tau[i]).collect();
                    values.sort();
                    values.dedup();
                    if values.len() as i64 == n {
                        let taus: Vec<(SignedPermutation, Vector)> =
                            point.elems().into_iter().map(|w| (w, tau[w.index()])).collect();
                        let g = SpaceGroupNF::from_parts(*point, lattice.clone(), &taus);
                        let (canon, _) = g.canonical_form();
                        let key = canon.key();
                        let key = (key.0, key.1.clone(), key.2);
                        if found.insert(key) {
                            out.push(canon);
                        }
                    }
                }
                // Odometer over generator values.
                let mut i = 0;
                while i < k {
                    choice[i] += 1;
                    if choice[i] < reps.len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
        }
    }
    out.sort_by(|a, b| a.key().cmp(&b.key()));
    out
}

/// Numbers and annotates a set of pairwise non-conjugate vertex-transitive
/// groups. Entries are sorted by stabilizer class, point class, then key.
pub fn assemble_catalog(dim: usize, groups: Vec<SpaceGroupNF>) -> GroupCatalog {
    let reps = finite::subgroup_class_reps(dim);
    let mut annotated: Vec<(usize, usize, SpaceGroupNF)> = groups
        .into_iter()
        .map(|g| {
            let s = subgroup_class_of(&g.stabilizer(), &reps);
            let p = subgroup_class_of(g.point(), &reps);
            (s, p, g)
        })
        .collect();
    annotated.sort_by(|a, b| (a.0, a.1, a.2.key()).cmp(&(b.0, b.1, b.2.key())));
    let entries = annotated
        .into_iter()
        .enumerate()
        .map(|(i, (s, p, g))| CatalogEntry {
            id: i + 1,
            generators: g.generators(),
            group: g,
            stabilizer_class: s,
            point_class: p,
        })
        .collect();
    GroupCatalog { dim, entries }
}

/// Every vertex-transitive subgroup of `Aut(Λ^d)` up to conjugacy.
pub fn enumerate_vertex_transitive(dim: usize) -> Result<GroupCatalog> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let reps = finite::subgroup_class_reps(dim);
    let groups: Vec<SpaceGroupNF> =
        reps.par_iter().map(enumerate_for_point_group).collect::<Vec<_>>().into_iter().flatten().collect();
    Ok(assemble_catalog(dim, groups))
}

/// One conjugacy class of subgroups of the hyperoctahedral group.
#[derive(Clone, Debug)]
pub struct SubgroupClass {
    /// 1-based index into [`finite::subgroup_class_reps`].
    pub class: usize,
    pub structure: Structure,
    pub representative: PointSet,
    pub generators: Vec<SignedPermutation>,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct StabilizerClassification {
    pub stabilizers: Vec<SubgroupClass>,
    pub point_groups: Vec<SubgroupClass>,
}

impl StabilizerClassification {
    /// Whether stabilizers and point groups realize the same set of classes.
    pub fn class_sets_coincide(&self) -> bool {
        let a: BTreeSet<usize> = self.stabilizers.iter().map(|c| c.class).collect();
        let b: BTreeSet<usize> = self.point_groups.iter().map(|c| c.class).collect();
        a == b
    }
}

fn group_classes(cat: &GroupCatalog, pick: impl Fn(&CatalogEntry) -> usize) -> Vec<SubgroupClass> {
    let reps = finite::subgroup_class_reps(cat.dim);
    let mut classes: Vec<SubgroupClass> = Vec::new();
    for e in &cat.entries {
        let c = pick(e);
        match classes.iter_mut().find(|x| x.class == c) {
            Some(x) => x.members.push(e.id),
            None => {
                let rep = reps[c - 1];
                classes.push(SubgroupClass {
                    class: c,
                    structure: identify_structure(&rep),
                    representative: rep,
                    generators: rep.generators(),
                    members: vec![e.id],
                })
            }
        }
    }
    classes.sort_by_key(|c| c.class);
    classes
}

/// Origin stabilizers and point groups of a catalog, grouped up to
/// conjugacy in the point stabilizer of the origin.
pub fn classify_stabilizers(cat: &GroupCatalog) -> StabilizerClassification {
    StabilizerClassification {
        stabilizers: group_classes(cat, |e| e.stabilizer_class),
        point_groups: group_classes(cat, |e| e.point_class),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_one_has_three_classes() {
        let cat = enumerate_vertex_transitive(1).unwrap();
        assert_eq!(cat.len(), 3);
        for e in &cat.entries {
            assert!(e.group.is_vertex_transitive());
        }
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(enumerate_vertex_transitive(0).is_err());
        assert!(enumerate_vertex_transitive(4).is_err());
    }

    #[test]
    fn dimension_two_catalog_is_pairwise_non_conjugate() {
        let cat = enumerate_vertex_transitive(2).unwrap();
        assert!(!cat.is_empty());
        for (i, a) in cat.entries.iter().enumerate() {
            assert!(a.group.is_vertex_transitive());
            assert!(a.group.is_consistent());
            for b in &cat.entries[i + 1..] {
                assert!(a.group.are_conjugate(&b.group).is_none(), "{} ~ {}", a.id, b.id);
            }
        }
        let cls = classify_stabilizers(&cat);
        assert!(cls.class_sets_coincide());
        assert_eq!(cls.stabilizers.len(), 8);
    }
}
