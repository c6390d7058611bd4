//! Saturated class-I realizations per group, their equivalence, and thinning
//! to one maximal representative per class.
//!
//! A realization is maximal when no grid automorphism outside its group
//! lifts to a block-preserving automorphism of its graph. For class I the
//! lift of a grid automorphism is unique, so `w ∈ B_d` fixing the origin
//! lifts iff `K' = ⟨H, w⟩` admits an index-2 subgroup `L'` of `K'_0` with
//! `L' ∩ H_0 = L` and `D·L' ⊆ L'·D`. Two realizations are equivalent iff
//! their maximal forms are conjugate by a point symmetry carrying base
//! vertex to base vertex.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::finite::{index_two_subgroups, PointSet};
use crate::grid::{self, table, GridAutomorphism, SignedPermutation, Vector};
use crate::lattice::Lattice;
use crate::realization::{ConnectionPattern, ConnectionSet, ConnectionType, ExtVertex, GroupFrame, Realization};
use crate::space_group::SpaceGroupNF;

/// One proper overgroup `⟨H, w⟩` with `w` fixing the origin.
#[derive(Debug)]
struct Overgroup {
    witnesses: Vec<SignedPermutation>,
    sections: Vec<(PointSet, Vec<GridAutomorphism>)>,
}

/// Per-group data for maximality tests.
#[derive(Debug)]
pub struct GroupExtensions {
    frame: Arc<GroupFrame>,
    overgroups: Vec<Overgroup>,
}

impl GroupExtensions {
    pub fn new(frame: Arc<GroupFrame>) -> GroupExtensions {
        let h = frame.group().clone();
        let dim = h.dim();
        let s = *frame.stabilizer();
        let gens = h.generators();
        let mut by_group: FxHashMap<SpaceGroupNF, usize> = FxHashMap::default();
        let mut overgroups: Vec<Overgroup> = Vec::new();
        for w in &table(dim).elems {
            if s.contains(w) {
                continue;
            }
            let mut g = gens.clone();
            g.push(GridAutomorphism::linear(*w));
            let k = SpaceGroupNF::closure(dim, &g);
            if let Some(&i) = by_group.get(&k) {
                overgroups[i].witnesses.push(*w);
                continue;
            }
            let k0 = k.stabilizer();
            let sections = index_two_subgroups(&k0)
                .into_iter()
                .map(|l| {
                    let lg = l.generators().into_iter().map(GridAutomorphism::linear).collect();
                    (l, lg)
                })
                .collect();
            by_group.insert(k, overgroups.len());
            overgroups.push(Overgroup { witnesses: vec![*w], sections });
        }
        GroupExtensions { frame, overgroups }
    }

    pub fn frame(&self) -> &Arc<GroupFrame> {
        &self.frame
    }

    /// Point symmetries outside `H_0` that lift to block-preserving
    /// automorphisms of the graph of `r`.
    pub fn liftable(&self, r: &Realization) -> Vec<SignedPermutation> {
        let mut out = Vec::new();
        for og in &self.overgroups {
            if self.overgroup_lifts(og, r).is_some() {
                out.extend(og.witnesses.iter().copied());
            }
        }
        out.sort();
        out
    }

    pub fn is_maximal(&self, r: &Realization) -> bool {
        self.overgroups.iter().all(|og| self.overgroup_lifts(og, r).is_none())
    }

    fn overgroup_lifts<'a>(&self, og: &'a Overgroup, r: &Realization) -> Option<&'a PointSet> {
        let s = self.frame.stabilizer();
        og.sections
            .iter()
            .find(|(l2, lg)| l2.intersect(s) == *r.l() && section_preserves(self.frame.group(), r, l2, lg))
            .map(|(l2, _)| l2)
    }

    /// The realization over the full lifting group, on the same graph.
    pub fn maximal_form(&self, r: &Realization) -> Realization {
        let lift = self.liftable(r);
        if lift.is_empty() {
            return r.clone();
        }
        let dim = r.dim();
        let h = self.frame.group();
        let mut gens = h.generators();
        gens.extend(lift.iter().map(|w| GridAutomorphism::linear(*w)));
        let k = SpaceGroupNF::closure(dim, &gens);
        let k0 = k.stabilizer();
        debug_assert_eq!(k0.len(), lift.len() + self.frame.stabilizer().len());
        let s = self.frame.stabilizer();
        let l_big = index_two_subgroups(&k0)
            .into_iter()
            .find(|l2| {
                let lg: Vec<GridAutomorphism> = l2.generators().into_iter().map(GridAutomorphism::linear).collect();
                l2.intersect(s) == *r.l() && section_preserves(h, r, l2, &lg)
            })
            .expect("lifting group has a compatible section");
        let lel: Vec<GridAutomorphism> = l_big.elems().into_iter().map(GridAutomorphism::linear).collect();
        let mut d = ConnectionSet::empty(dim);
        for g in r.connection_set().elems() {
            for a in &lel {
                d.insert(&a.then(&g));
            }
        }
        Realization::from_frame(GroupFrame::new(Arc::new(k), None), l_big, d, r.saturated())
            .expect("maximal form is a realization")
    }
}

/// `D·l ⊆ L'·D` for every generator `l` of `L'`, tested on `L`-coset
/// representatives of `D`.
fn section_preserves(h: &SpaceGroupNF, r: &Realization, l2: &PointSet, lg: &[GridAutomorphism]) -> bool {
    let d = r.connection_set();
    let l2e = l2.elems();
    for dr in reps_of(r) {
        for l in lg {
            let p = dr.then(l);
            let back = l2e.iter().find_map(|u| {
                let q = GridAutomorphism::new(u.then(&p.point), p.trans);
                h.contains(&q).then_some(q)
            });
            match back {
                Some(q) if d.contains(&q) => {}
                _ => return false,
            }
        }
    }
    true
}

fn reps_of(r: &Realization) -> Vec<GridAutomorphism> {
    let id = ExtVertex::origin();
    let a = r.element_of(id);
    debug_assert!(a.is_identity());
    // Coset representatives: one element of D per neighbour of the origin
    // outside the base block.
    let mut out = Vec::new();
    let mut seen = Vec::new();
    for g in r.connection_set().elems() {
        let v = r.vertex_of(&g);
        if !seen.contains(&v) {
            seen.push(v);
            out.push(g);
        }
    }
    out
}

/// Canonical invariant of an equivalence class of realizations.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct EquivalenceKey {
    pub saturated: bool,
    pub point: u64,
    pub lattice: Lattice,
    pub tau: Vec<Vector>,
    pub section: u64,
    pub connection: ConnectionSet,
}

/// Least conjugate of a maximal realization under point symmetries, and the
/// conjugating element reaching it.
pub fn canonical_key(maximal: &Realization) -> (EquivalenceKey, SignedPermutation) {
    let k = maximal.group();
    let dim = k.dim();
    let conj: Vec<(SignedPermutation, SpaceGroupNF)> =
        table(dim).elems.iter().map(|w| (*w, k.conjugate(&GridAutomorphism::linear(*w)))).collect();
    let best_group = conj.iter().map(|(_, g)| g.key()).min().unwrap();
    let best_group = (best_group.0, best_group.1.clone(), best_group.2);
    let mut best: Option<(EquivalenceKey, SignedPermutation)> = None;
    for (w, g) in &conj {
        let gk = g.key();
        if (gk.0, gk.1, &gk.2) != (best_group.0, &best_group.1, &best_group.2) {
            continue;
        }
        let lw = GridAutomorphism::linear(*w);
        let key = EquivalenceKey {
            saturated: maximal.saturated(),
            point: best_group.0,
            lattice: best_group.1.clone(),
            tau: best_group.2.clone(),
            section: maximal.l().conjugate(w).bits(),
            connection: maximal.connection_set().map(|d| d.conjugate_by(&lw)),
        };
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            best = Some((key, *w));
        }
    }
    best.unwrap()
}

/// How two equivalent realizations are matched: the point symmetry `w`
/// conjugating the maximal form of the first onto that of the second.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceWitness {
    pub grid_map: GridAutomorphism,
    /// Base-vertex stabilizer of the target's maximal form.
    pub target_section: PointSet,
}

impl EquivalenceWitness {
    /// Image of a vertex of `from` in `to`.
    pub fn map_vertex(&self, from: &Realization, to: &Realization, u: ExtVertex) -> ExtVertex {
        let g = from.element_of(u).conjugate_by(&self.grid_map);
        to.vertex_of_in(&g, &self.target_section)
    }
}

/// Maximal form and canonical key of a realization.
#[derive(Clone, Debug)]
pub struct Classified {
    pub maximal: Realization,
    pub key: EquivalenceKey,
    pub to_canonical: SignedPermutation,
    pub is_maximal: bool,
}

pub fn classify(ext: &GroupExtensions, r: &Realization) -> Classified {
    let maximal = ext.maximal_form(r);
    let is_maximal = maximal.group() == r.group();
    let (key, to_canonical) = canonical_key(&maximal);
    Classified { maximal, key, to_canonical, is_maximal }
}

/// Decides equivalence; the witness maps the first onto the second.
pub fn are_equivalent(s1: &Realization, s2: &Realization) -> Option<EquivalenceWitness> {
    if s1.dim() != s2.dim() || s1.saturated() != s2.saturated() {
        return None;
    }
    let c1 = classify(&GroupExtensions::new(s1.frame().clone()), s1);
    let c2 = classify(&GroupExtensions::new(s2.frame().clone()), s2);
    (c1.key == c2.key).then(|| EquivalenceWitness {
        grid_map: GridAutomorphism::linear(c1.to_canonical.then(&c2.to_canonical.inverse())),
        target_section: *c2.maximal.l(),
    })
}

struct Unit {
    set: ConnectionSet,
    dirs: u8,
}

/// Every valid saturated class-I realization over the frame's group, with
/// `X` canonicalized; `maximal_only` drops those whose group is not the
/// full lifting group.
pub fn generate_saturated_with(ext: &GroupExtensions, maximal_only: bool) -> Vec<Realization> {
    let frame = ext.frame();
    let h = frame.group();
    let dim = h.dim();
    let s = *frame.stabilizer();
    let dirs = grid::directions(dim);
    let nd = dirs.len();
    let full_mask: u8 = ((1u16 << nd) - 1) as u8;
    let neighbours: Vec<GridAutomorphism> = dirs.iter().flat_map(|e| h.elements_to(*e).collect::<Vec<_>>()).collect();
    let stab = s.elems();
    let orbit: Vec<u8> = dirs
        .iter()
        .map(|e| stab.iter().fold(0u8, |m, w| m | 1 << grid::direction_index(dim, w.apply(*e)).unwrap()))
        .collect();
    let mut out = Vec::new();
    for l in index_two_subgroups(&s) {
        let lel: Vec<GridAutomorphism> = l.elems().into_iter().map(GridAutomorphism::linear).collect();
        let mut all = ConnectionSet::empty(dim);
        for g in &neighbours {
            all.insert(g);
        }
        let mut units: Vec<Unit> = Vec::new();
        let mut assigned = ConnectionSet::empty(dim);
        for g in all.elems() {
            if assigned.contains(&g) {
                continue;
            }
            let mut set = ConnectionSet::empty(dim);
            for y in [g, g.inverse()] {
                for a in &lel {
                    for b in &lel {
                        set.insert(&a.then(&y).then(b));
                    }
                }
            }
            assigned = assigned.union(&set);
            let dirs_mask = set.elems().iter().fold(0u8, |m, x| m | 1 << grid::direction_index(dim, x.trans).unwrap());
            units.push(Unit { set, dirs: dirs_mask });
        }
        let r0 = Realization::from_frame_unchecked(frame.clone(), l, ConnectionSet::empty(dim), true)
            .expect("index-2 subgroup");
        let m = GridAutomorphism::linear(r0.m());
        // Unit holding each of the four block-to-block products per direction.
        let pattern_units: Vec<[usize; 4]> = dirs
            .iter()
            .map(|e| {
                let ge = frame.block_element(*e);
                let a = [GridAutomorphism::identity(dim), m];
                let b = [ge, m.then(&ge)];
                let mut pu = [0usize; 4];
                for i in 0..2 {
                    for j in 0..2 {
                        let p = b[j].then(&a[i].inverse());
                        pu[2 * i + j] = units.iter().position(|u| u.set.contains(&p)).expect("product in N");
                    }
                }
                pu
            })
            .collect();
        let nu = units.len();
        for mask in 1u32..(1u32 << nu) {
            let reached = (0..nu).filter(|&k| mask >> k & 1 == 1).fold(0u8, |m, k| m | units[k].dirs);
            let covered = (0..nd).filter(|&k| reached >> k & 1 == 1).fold(0u8, |m, k| m | orbit[k]);
            if covered != full_mask {
                continue;
            }
            let class_one = pattern_units.iter().any(|pu| {
                let bits = (0..4).fold(0u8, |b, k| b | (((mask >> pu[k]) & 1) as u8) << k);
                let t = ConnectionPattern(bits).connection_type().expect("covered direction");
                !matches!(t, ConnectionType::TwoParallel | ConnectionType::Four)
            });
            if !class_one {
                continue;
            }
            let d = (0..nu)
                .filter(|&k| mask >> k & 1 == 1)
                .fold(ConnectionSet::empty(dim), |acc, k| acc.union(&units[k].set));
            let r = Realization::from_frame_unchecked(frame.clone(), l, d, true).expect("valid section");
            if !r.is_connected() {
                continue;
            }
            if maximal_only && !ext.is_maximal(&r) {
                continue;
            }
            out.push(r);
        }
    }
    out.sort_by_key(Realization::sort_key);
    out
}

pub fn generate_saturated(group: Arc<SpaceGroupNF>, group_id: Option<usize>) -> Vec<Realization> {
    generate_saturated_with(&GroupExtensions::new(GroupFrame::new(group, group_id)), false)
}

/// One representative per equivalence class: a realization whose group is
/// maximal, ties broken by [`Realization::sort_key`]. Output is sorted by
/// that key and does not depend on input order.
pub fn thin(specs: &[Realization]) -> Vec<Realization> {
    let mut exts: FxHashMap<&SpaceGroupNF, Arc<GroupExtensions>> = FxHashMap::default();
    for r in specs {
        exts.entry(r.group().as_ref()).or_insert_with(|| Arc::new(GroupExtensions::new(r.frame().clone())));
    }
    let classified: Vec<Classified> = specs.par_iter().map(|r| classify(&exts[r.group().as_ref()], r)).collect();
    let mut classes: BTreeMap<EquivalenceKey, usize> = BTreeMap::new();
    for (i, c) in classified.iter().enumerate() {
        let better = |j: usize| {
            let rank = |k: usize| {
                let c = &classified[k];
                (!c.is_maximal, std::cmp::Reverse(specs[k].stabilizer().len()), specs[k].sort_key())
            };
            rank(i) < rank(j)
        };
        match classes.get(&c.key) {
            Some(&j) if !better(j) => {}
            _ => {
                classes.insert(c.key.clone(), i);
            }
        }
    }
    let mut out: Vec<Realization> = classes.into_values().map(|i| specs[i].clone()).collect();
    out.sort_by_key(Realization::sort_key);
    out
}
