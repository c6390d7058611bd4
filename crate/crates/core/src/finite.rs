//! Finite subgroups of the hyperoctahedral group, stored as bitmasks over
//! the canonical element order.

use std::collections::BTreeSet;
use std::fmt;

use crate::grid::{table, SignedPermutation};

/// A set of signed permutations of one dimension.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    dim: u8,
    bits: u64,
}

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        PointSet { dim: dim as u8, bits: 0 }
    }

    pub fn trivial(dim: usize) -> Self {
        PointSet { dim: dim as u8, bits: 1 }
    }

    pub fn full(dim: usize) -> Self {
        let n = table(dim).elems.len();
        PointSet { dim: dim as u8, bits: if n == 64 { u64::MAX } else { (1 << n) - 1 } }
    }

    pub fn from_bits(dim: usize, bits: u64) -> Self {
        PointSet { dim: dim as u8, bits }
    }

    pub fn from_elems<'a>(dim: usize, it: impl IntoIterator<Item = &'a SignedPermutation>) -> Self {
        let mut s = Self::empty(dim);
        for p in it {
            s.insert(p);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, p: &SignedPermutation) -> bool {
        self.contains_index(p.index())
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn insert(&mut self, p: &SignedPermutation) {
        self.bits |= 1 << p.index();
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn intersect(&self, other: &PointSet) -> PointSet {
        PointSet { dim: self.dim, bits: self.bits & other.bits }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits;
        (0..64).filter(move |i| bits >> i & 1 == 1)
    }

    /// Elements in canonical order.
    pub fn elems(&self) -> Vec<SignedPermutation> {
        let t = table(self.dim());
        self.indices().map(|i| t.elems[i]).collect()
    }

    /// Subgroup generated by `self`.
    pub fn closure(&self) -> PointSet {
        let t = table(self.dim());
        let gens: Vec<usize> = self.indices().collect();
        let mut bits = 1u64 | self.bits;
        let mut frontier: Vec<usize> = (0..64).filter(|i| bits >> i & 1 == 1).collect();
        while let Some(a) = frontier.pop() {
            for &g in &gens {
                let c = t.mul[a][g] as usize;
                if bits >> c & 1 == 0 {
                    bits |= 1 << c;
                    frontier.push(c);
                }
            }
        }
        PointSet { dim: self.dim, bits }
    }

    pub fn is_group(&self) -> bool {
        self.contains_index(0) && self.closure() == *self
    }

    /// `w⁻¹ · self · w`.
    pub fn conjugate(&self, w: &SignedPermutation) -> PointSet {
        let t = table(self.dim());
        let wi = w.index();
        let winv = t.inv[wi] as usize;
        let mut bits = 0u64;
        for i in self.indices() {
            let c = t.mul[t.mul[winv][i] as usize][wi] as usize;
            bits |= 1 << c;
        }
        PointSet { dim: self.dim, bits }
    }

    /// Least conjugate (by bitmask) under the whole hyperoctahedral group,
    /// together with every conjugator reaching it.
    pub fn canonical_conjugate(&self) -> (PointSet, Vec<SignedPermutation>) {
        let t = table(self.dim());
        let mut best: Option<PointSet> = None;
        let mut witnesses = Vec::new();
        for w in &t.elems {
            let c = self.conjugate(w);
            match best {
                Some(b) if c.bits > b.bits => {}
                Some(b) if c.bits == b.bits => witnesses.push(*w),
                _ => {
                    best = Some(c);
                    witnesses = vec![*w];
                }
            }
        }
        (best.unwrap(), witnesses)
    }

    /// Elements of the hyperoctahedral group normalizing `self`.
    pub fn normalizer(&self) -> Vec<SignedPermutation> {
        table(self.dim()).elems.iter().filter(|w| self.conjugate(w) == *self).copied().collect()
    }

    /// A small generating set, chosen greedily in canonical order.
    pub fn generators(&self) -> Vec<SignedPermutation> {
        let t = table(self.dim());
        let mut span = PointSet::trivial(self.dim());
        let mut gens = Vec::new();
        // Prefer elements of large order so fewer generators are needed.
        let mut cands: Vec<usize> = self.indices().collect();
        cands.sort_by_key(|&i| std::cmp::Reverse(t.elems[i].order()));
        for i in cands {
            if !span.contains_index(i) {
                gens.push(t.elems[i]);
                span = PointSet::from_elems(self.dim(), &gens).closure();
            }
        }
        gens
    }

    pub fn is_abelian(&self) -> bool {
        let t = table(self.dim());
        let idx: Vec<usize> = self.indices().collect();
        idx.iter().all(|&a| idx.iter().all(|&b| t.mul[a][b] == t.mul[b][a]))
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems()).finish()
    }
}

/// Every subgroup of the hyperoctahedral group of dimension `dim`.
pub fn all_subgroups(dim: usize) -> Vec<PointSet> {
    let t = table(dim);
    let cyclic: BTreeSet<PointSet> = t.elems.iter().map(|p| PointSet::from_elems(dim, [p]).closure()).collect();
    let mut all: BTreeSet<PointSet> = cyclic.clone();
    let mut frontier: Vec<PointSet> = all.iter().copied().collect();
    while let Some(g) = frontier.pop() {
        for c in &cyclic {
            if c.is_subset(&g) {
                continue;
            }
            let joined = PointSet::from_bits(dim, g.bits | c.bits).closure();
            if all.insert(joined) {
                frontier.push(joined);
            }
        }
    }
    all.into_iter().collect()
}

/// One representative (the least conjugate) per conjugacy class of
/// subgroups, ordered by group order then bitmask.
pub fn subgroup_class_reps(dim: usize) -> Vec<PointSet> {
    let reps: BTreeSet<PointSet> = all_subgroups(dim).iter().map(|g| g.canonical_conjugate().0).collect();
    let mut v: Vec<PointSet> = reps.into_iter().collect();
    v.sort_by_key(|g| (g.len(), g.bits));
    v
}

/// All index-2 subgroups of `group`, as kernels of surjections onto `C2`.
pub fn index_two_subgroups(group: &PointSet) -> Vec<PointSet> {
    let t = table(group.dim());
    if group.len() % 2 == 1 {
        return Vec::new();
    }
    let gens: Vec<usize> = group.generators().iter().map(|p| p.index()).collect();
    let mut out = BTreeSet::new();
    for signs in 1u32..(1 << gens.len()) {
        // Propagate a sign assignment from generators to the whole group.
        let mut sign = [u8::MAX; 64];
        sign[0] = 0;
        let mut stack = vec![0usize];
        let mut ok = true;
        while let Some(a) = stack.pop() {
            for (k, &g) in gens.iter().enumerate() {
                let c = t.mul[a][g] as usize;
                let s = sign[a] ^ (signs >> k & 1) as u8;
                if sign[c] == u8::MAX {
                    sign[c] = s;
                    stack.push(c);
                } else if sign[c] != s {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue;
        }
        let mut kernel = 0u64;
        for i in group.indices() {
            if sign[i] == 0 {
                kernel |= 1 << i;
            }
        }
        let k = PointSet::from_bits(group.dim(), kernel);
        if k.len() * 2 == group.len() {
            out.insert(k);
        }
    }
    out.into_iter().collect()
}

/// Abstract structure names for the groups that occur as point stabilizers
/// in dimension 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    Trivial,
    C2,
    C3,
    C2xC2,
    C4,
    C6,
    S3,
    C2xC2xC2,
    C4xC2,
    D8,
    A4,
    D12,
    C2xD8,
    C2xA4,
    S4,
    C2xS4,
    Unrecognized,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::Trivial => "1",
            Structure::C2 => "C2",
            Structure::C3 => "C3",
            Structure::C2xC2 => "C2xC2",
            Structure::C4 => "C4",
            Structure::C6 => "C6",
            Structure::S3 => "S3",
            Structure::C2xC2xC2 => "C2xC2xC2",
            Structure::C4xC2 => "C4xC2",
            Structure::D8 => "D8",
            Structure::A4 => "A4",
            Structure::D12 => "D12",
            Structure::C2xD8 => "C2xD8",
            Structure::C2xA4 => "C2xA4",
            Structure::S4 => "S4",
            Structure::C2xS4 => "C2xS4",
            Structure::Unrecognized => "unrecognized",
        }
    }

    pub fn from_name(s: &str) -> Option<Structure> {
        ALL_STRUCTURES.iter().copied().find(|x| x.name() == s)
    }
}

const ALL_STRUCTURES: [Structure; 17] = [
    Structure::Trivial,
    Structure::C2,
    Structure::C3,
    Structure::C2xC2,
    Structure::C4,
    Structure::C6,
    Structure::S3,
    Structure::C2xC2xC2,
    Structure::C4xC2,
    Structure::D8,
    Structure::A4,
    Structure::D12,
    Structure::C2xD8,
    Structure::C2xA4,
    Structure::S4,
    Structure::C2xS4,
    Structure::Unrecognized,
];

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Decides the structure from the order, commutativity and the number of
/// elements of each order.
pub fn identify_structure(group: &PointSet) -> Structure {
    let t = table(group.dim());
    let mut by_order = [0usize; 13];
    for i in group.indices() {
        let o = t.elems[i].order();
        by_order[o.min(12)] += 1;
    }
    let abelian = group.is_abelian();
    let inv = by_order[2];
    match (group.len(), abelian) {
        (1, _) => Structure::Trivial,
        (2, _) => Structure::C2,
        (3, _) => Structure::C3,
        (4, _) if by_order[4] > 0 => Structure::C4,
        (4, _) => Structure::C2xC2,
        (6, true) => Structure::C6,
        (6, false) => Structure::S3,
        (8, true) if by_order[4] == 0 => Structure::C2xC2xC2,
        (8, true) if by_order[8] == 0 => Structure::C4xC2,
        (8, false) if inv == 5 => Structure::D8,
        (12, false) if by_order[6] == 0 && inv == 3 => Structure::A4,
        (12, false) if by_order[6] == 2 && inv == 7 => Structure::D12,
        (16, false) if inv == 11 && by_order[4] == 4 => Structure::C2xD8,
        (24, false) if inv == 7 && by_order[6] == 8 => Structure::C2xA4,
        (24, false) if inv == 9 && by_order[4] == 6 => Structure::S4,
        (48, false) if inv == 19 => Structure::C2xS4,
        _ => Structure::Unrecognized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridAutomorphism;

    fn grp(words: &[&str]) -> PointSet {
        let elems: Vec<SignedPermutation> = words.iter().map(|w| GridAutomorphism::word(w).unwrap().point).collect();
        PointSet::from_elems(3, &elems).closure()
    }

    #[test]
    fn subgroup_lattice_sizes() {
        assert_eq!(all_subgroups(1).len(), 2);
        assert_eq!(all_subgroups(3).len(), 98);
        assert_eq!(subgroup_class_reps(3).len(), 33);
        // D4 has 10 subgroups in 8 classes.
        assert_eq!(all_subgroups(2).len(), 10);
        assert_eq!(subgroup_class_reps(2).len(), 8);
    }

    #[test]
    fn index_two_examples() {
        assert_eq!(index_two_subgroups(&grp(&["i"])), vec![PointSet::trivial(3)]);
        assert_eq!(index_two_subgroups(&grp(&["r_y^2", "r_z^2"])).len(), 3);
        let s4 = grp(&["m_x r_x^-1", "m_x r_z", "r_z^2"]);
        assert_eq!(s4.len(), 24);
        assert_eq!(index_two_subgroups(&s4).len(), 1);
        assert!(index_two_subgroups(&grp(&["r_y^-1 r_z^-1"])).is_empty());
        for k in index_two_subgroups(&PointSet::full(3)) {
            assert!(k.is_group());
            assert_eq!(k.len(), 24);
        }
        assert_eq!(index_two_subgroups(&PointSet::full(3)).len(), 3);
    }

    #[test]
    fn structures_from_stabilizer_table() {
        assert_eq!(identify_structure(&grp(&["i"])), Structure::C2);
        assert_eq!(identify_structure(&grp(&["r_y^2", "r_z^2"])), Structure::C2xC2);
        assert_eq!(identify_structure(&grp(&["i", "r_y^2 r_z", "r_z^2", "r_z^2 r_x"])), Structure::C2xS4);
        assert_eq!(identify_structure(&grp(&["r_y^-1 r_z^-1"])), Structure::C3);
        assert_eq!(identify_structure(&grp(&["i", "m_x r_y^-1 r_x^-1"])), Structure::C6);
        assert_eq!(identify_structure(&grp(&["r_y r_x^-1", "r_y^2", "r_z^2"])), Structure::A4);
        assert_eq!(identify_structure(&grp(&["i", "r_z^2", "r_z^2 r_x"])), Structure::C2xD8);
        assert_eq!(identify_structure(&grp(&["i", "r_y^2 r_z", "r_z^2 r_x"])), Structure::D12);
        assert_eq!(identify_structure(&grp(&["i", "m_x r_x^-1"])), Structure::C4xC2);
    }

    #[test]
    fn every_class_rep_is_named() {
        for g in subgroup_class_reps(3) {
            assert_ne!(identify_structure(&g), Structure::Unrecognized, "{g:?}");
        }
    }
}
