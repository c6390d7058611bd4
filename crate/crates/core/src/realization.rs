//! The `(H, L, X)` coset model of a symmetrical 2-extension.
//!
//! Vertices are right cosets `L·g` of `L` in `H`; blocks are cosets of the
//! origin stabilizer `S = H_0`, so the block of `L·g` sits over the grid
//! vertex `0·g`. Two vertices `L·a`, `L·b` are adjacent iff `b·a⁻¹ ∈ D` where
//! `D = L (X ∪ X⁻¹) L`; saturated realizations also join the two vertices of
//! every block.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::finite::PointSet;
use crate::grid::{self, table, GridAutomorphism, SignedPermutation, Vector};
use crate::space_group::SpaceGroupNF;

const DSET_WORDS: usize = 5;

/// Set of group elements moving the origin to an adjacent vertex, as a
/// bitset over (direction, point element).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConnectionSet {
    dim: u8,
    bits: [u64; DSET_WORDS],
}

impl ConnectionSet {
    pub fn empty(dim: usize) -> Self {
        ConnectionSet { dim: dim as u8, bits: [0; DSET_WORDS] }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    fn slot(dim: usize, g: &GridAutomorphism) -> Option<usize> {
        let dir = grid::direction_index(dim, g.trans)?;
        Some(dir * table(dim).elems.len() + g.point.index())
    }

    #[inline]
    pub fn contains(&self, g: &GridAutomorphism) -> bool {
        match Self::slot(self.dim(), g) {
            Some(s) => self.bits[s / 64] >> (s % 64) & 1 == 1,
            None => false,
        }
    }

    /// Inserts `g`; returns false when `g` does not move the origin to a
    /// neighbour.
    pub fn insert(&mut self, g: &GridAutomorphism) -> bool {
        match Self::slot(self.dim(), g) {
            Some(s) => {
                self.bits[s / 64] |= 1 << (s % 64);
                true
            }
            None => false,
        }
    }

    pub fn union(&self, other: &ConnectionSet) -> ConnectionSet {
        let mut out = *self;
        for k in 0..DSET_WORDS {
            out.bits[k] |= other.bits[k];
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Elements in canonical order.
    pub fn elems(&self) -> Vec<GridAutomorphism> {
        let d = self.dim();
        let t = table(d);
        let n = t.elems.len();
        let dirs = grid::directions(d);
        let mut out: Vec<GridAutomorphism> = (0..2 * d * n)
            .filter(|s| self.bits[s / 64] >> (s % 64) & 1 == 1)
            .map(|s| GridAutomorphism::new(t.elems[s % n], dirs[s / n]))
            .collect();
        out.sort();
        out
    }

    pub fn map(&self, f: impl Fn(&GridAutomorphism) -> GridAutomorphism) -> ConnectionSet {
        let mut out = ConnectionSet::empty(self.dim());
        for g in self.elems() {
            let ok = out.insert(&f(&g));
            debug_assert!(ok);
        }
        out
    }
}

impl fmt::Debug for ConnectionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems()).finish()
    }
}

/// Edges between two adjacent blocks: bit `2ε + ε'` is set when vertex `ε`
/// of the first block is joined to vertex `ε'` of the second.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ConnectionPattern(pub u8);

impl ConnectionPattern {
    pub fn has(&self, eps: usize, eps2: usize) -> bool {
        self.0 >> (2 * eps + eps2) & 1 == 1
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        ConnectionPattern(pairs.iter().fold(0, |b, &(a, c)| b | 1 << (2 * a + c)))
    }

    pub fn transpose(&self) -> Self {
        let mut out = 0;
        for a in 0..2 {
            for b in 0..2 {
                if self.has(a, b) {
                    out |= 1 << (2 * b + a);
                }
            }
        }
        ConnectionPattern(out)
    }

    pub fn connection_type(&self) -> Result<ConnectionType> {
        Ok(match self.0.count_ones() {
            0 => return Err(Error::NoConnection),
            1 => ConnectionType::One,
            2 if self.0 == 0b1001 || self.0 == 0b0110 => ConnectionType::TwoParallel,
            2 => ConnectionType::TwoV,
            3 => ConnectionType::Three,
            _ => ConnectionType::Four,
        })
    }
}

/// Ordered `1 < 2p < 2v < 3 < 4`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ConnectionType {
    One,
    TwoParallel,
    TwoV,
    Three,
    Four,
}

impl ConnectionType {
    pub fn token(&self) -> &'static str {
        match self {
            ConnectionType::One => "1",
            ConnectionType::TwoParallel => "2p",
            ConnectionType::TwoV => "2v",
            ConnectionType::Three => "3",
            ConnectionType::Four => "4",
        }
    }

    /// Types that only occur in class II when they are the only ones present.
    pub fn is_class_two_type(&self) -> bool {
        matches!(self, ConnectionType::TwoParallel | ConnectionType::Four)
    }
}

impl fmt::Display for ConnectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A vertex of the extension graph: block over `v`, position `eps`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ExtVertex {
    pub v: Vector,
    pub eps: u8,
}

impl ExtVertex {
    pub fn origin() -> Self {
        ExtVertex { v: grid::ZERO, eps: 0 }
    }
}

/// Unvalidated realization data.
#[derive(Clone, Debug)]
pub struct RealizationSpec {
    pub group: Arc<SpaceGroupNF>,
    pub group_id: Option<usize>,
    pub l: Vec<SignedPermutation>,
    pub m: SignedPermutation,
    pub x: Vec<GridAutomorphism>,
    pub saturated: bool,
}

/// Per-group data shared by every realization over the same group.
#[derive(Debug)]
pub struct GroupFrame {
    group: Arc<SpaceGroupNF>,
    group_id: Option<usize>,
    stabilizer: PointSet,
    /// Least point part mapping the origin into each coset of the lattice.
    block_point: FxHashMap<Vector, SignedPermutation>,
}

impl GroupFrame {
    pub fn new(group: Arc<SpaceGroupNF>, group_id: Option<usize>) -> Arc<GroupFrame> {
        let stabilizer = group.stabilizer();
        let block_point = group
            .lattice()
            .coset_reps()
            .into_iter()
            .map(|r| {
                let w = group.least_element_to(r).expect("vertex-transitive group").point;
                (r, w)
            })
            .collect();
        Arc::new(GroupFrame { group, group_id, stabilizer, block_point })
    }

    pub fn group(&self) -> &Arc<SpaceGroupNF> {
        &self.group
    }

    pub fn group_id(&self) -> Option<usize> {
        self.group_id
    }

    pub fn stabilizer(&self) -> &PointSet {
        &self.stabilizer
    }

    /// Canonical element `g_v` over the block at `v`: the least element of
    /// the group mapping the origin to `v`.
    #[inline]
    pub fn block_element(&self, v: Vector) -> GridAutomorphism {
        let r = self.group.lattice().reduce(v);
        GridAutomorphism::new(self.block_point[&r], v)
    }
}

/// A validated realization with its connection set materialized.
#[derive(Clone)]
pub struct Realization {
    frame: Arc<GroupFrame>,
    l: PointSet,
    m: SignedPermutation,
    d: ConnectionSet,
    x: Vec<GridAutomorphism>,
    saturated: bool,
    /// Representatives of the right cosets `L·d`, `d ∈ D`.
    d_reps: Vec<GridAutomorphism>,
}

impl fmt::Debug for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Realization")
            .field("group_id", &self.frame.group_id)
            .field("l", &self.l)
            .field("m", &self.m)
            .field("x", &self.x)
            .field("saturated", &self.saturated)
            .finish()
    }
}

impl PartialEq for Realization {
    fn eq(&self, other: &Self) -> bool {
        self.saturated == other.saturated
            && self.l == other.l
            && self.d == other.d
            && self.frame.group == other.frame.group
    }
}

impl Eq for Realization {}

/// `L x L` for every `x` in `xs` and its inverse.
pub fn connection_set_from(l: &PointSet, xs: &[GridAutomorphism]) -> Result<ConnectionSet> {
    let dim = l.dim();
    let lel: Vec<GridAutomorphism> = l.elems().into_iter().map(GridAutomorphism::linear).collect();
    let mut d = ConnectionSet::empty(dim);
    for x in xs {
        for y in [*x, x.inverse()] {
            for a in &lel {
                for b in &lel {
                    if !d.insert(&a.then(&y).then(b)) {
                        return Err(Error::InvalidX(x.to_string()));
                    }
                }
            }
        }
    }
    Ok(d)
}

/// Splits a symmetric connection set into inverse-closed unions of
/// double cosets `LxL ∪ Lx⁻¹L`, each named by its least element.
pub fn canonical_x(l: &PointSet, d: &ConnectionSet) -> Vec<GridAutomorphism> {
    let lel: Vec<GridAutomorphism> = l.elems().into_iter().map(GridAutomorphism::linear).collect();
    let mut remaining = *d;
    let mut reps = Vec::new();
    while let Some(x) = remaining.elems().into_iter().next() {
        reps.push(x);
        for y in [x, x.inverse()] {
            for a in &lel {
                for b in &lel {
                    let g = a.then(&y).then(b);
                    if let Some(s) = ConnectionSet::slot(d.dim(), &g) {
                        remaining.bits[s / 64] &= !(1 << (s % 64));
                    }
                }
            }
        }
    }
    reps.sort();
    reps
}

impl RealizationSpec {
    /// Checks every structural invariant and returns the normalized form.
    pub fn validate(&self) -> Result<Realization> {
        let h = &self.group;
        let dim = h.dim();
        let s = h.stabilizer();
        let l = PointSet::from_elems(dim, &self.l);
        if !l.is_group() || !l.is_subset(&s) || l.len() * 2 != s.len() {
            return Err(Error::InvalidL);
        }
        if !s.contains(&self.m) || l.contains(&self.m) {
            return Err(Error::InvalidL);
        }
        for x in &self.x {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.dim() });
            }
            if !h.contains(x) || grid::direction_index(dim, x.trans).is_none() {
                return Err(Error::InvalidX(x.to_string()));
            }
        }
        let d = connection_set_from(&l, &self.x)?;
        Realization::from_frame(GroupFrame::new(self.group.clone(), self.group_id), l, d, self.saturated)
    }
}

impl Realization {
    /// Builds a realization from an explicit connection set. `d` must be a
    /// symmetric union of `L`-double cosets inside `H`.
    pub fn from_parts(
        group: Arc<SpaceGroupNF>,
        group_id: Option<usize>,
        l: PointSet,
        d: ConnectionSet,
        saturated: bool,
    ) -> Result<Realization> {
        Self::from_frame(GroupFrame::new(group, group_id), l, d, saturated)
    }

    pub fn from_frame(frame: Arc<GroupFrame>, l: PointSet, d: ConnectionSet, saturated: bool) -> Result<Realization> {
        let r = Self::from_frame_unchecked(frame, l, d, saturated)?;
        r.check_structure()?;
        Ok(r)
    }

    /// Skips the structural checks on `d`; callers guarantee them.
    pub(crate) fn from_frame_unchecked(
        frame: Arc<GroupFrame>,
        l: PointSet,
        d: ConnectionSet,
        saturated: bool,
    ) -> Result<Realization> {
        let dim = frame.group.dim();
        let stabilizer = &frame.stabilizer;
        if !l.is_group() || !l.is_subset(stabilizer) || l.len() * 2 != stabilizer.len() {
            return Err(Error::InvalidL);
        }
        let m = stabilizer.elems().into_iter().find(|w| !l.contains(w)).ok_or(Error::InvalidL)?;
        let lel: Vec<GridAutomorphism> = l.elems().into_iter().map(GridAutomorphism::linear).collect();
        let mut d_reps = Vec::new();
        let mut seen = ConnectionSet::empty(dim);
        for g in d.elems() {
            if seen.contains(&g) {
                continue;
            }
            for a in &lel {
                seen.insert(&a.then(&g));
            }
            d_reps.push(g);
        }
        let x = canonical_x(&l, &d);
        Ok(Realization { frame, l, m, d, x, saturated, d_reps })
    }

    fn check_structure(&self) -> Result<()> {
        let dim = self.dim();
        let lel = self.l_elements();
        for g in self.d.elems() {
            if !self.frame.group.contains(&g) {
                return Err(Error::InvalidX(g.to_string()));
            }
            if !self.d.contains(&g.inverse()) {
                return Err(Error::InvalidX(g.to_string()));
            }
            for a in &lel {
                if !self.d.contains(&a.then(&g)) || !self.d.contains(&g.then(a)) {
                    return Err(Error::InvalidX(g.to_string()));
                }
            }
        }
        // Every direction must be reached from the origin block.
        let dirs = grid::directions(dim);
        let stab = self.frame.stabilizer.elems();
        let mut covered = vec![false; dirs.len()];
        for g in self.d.elems() {
            for s in &stab {
                covered[grid::direction_index(dim, s.apply(g.trans)).unwrap()] = true;
            }
        }
        if let Some(k) = covered.iter().position(|c| !c) {
            return Err(Error::QuotientNotGrid(grid::format_vector(dim, dirs[k])));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.frame.group.dim()
    }

    pub fn frame(&self) -> &Arc<GroupFrame> {
        &self.frame
    }

    pub fn group(&self) -> &Arc<SpaceGroupNF> {
        &self.frame.group
    }

    pub fn group_id(&self) -> Option<usize> {
        self.frame.group_id
    }

    pub fn stabilizer(&self) -> &PointSet {
        &self.frame.stabilizer
    }

    pub fn l(&self) -> &PointSet {
        &self.l
    }

    pub fn m(&self) -> SignedPermutation {
        self.m
    }

    pub fn connection_set(&self) -> &ConnectionSet {
        &self.d
    }

    pub fn x(&self) -> &[GridAutomorphism] {
        &self.x
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn l_elements(&self) -> Vec<GridAutomorphism> {
        self.l.elems().into_iter().map(GridAutomorphism::linear).collect()
    }

    pub fn spec(&self) -> RealizationSpec {
        RealizationSpec {
            group: self.frame.group.clone(),
            group_id: self.frame.group_id,
            l: self.l.elems(),
            m: self.m,
            x: self.x.clone(),
            saturated: self.saturated,
        }
    }

    /// Same triple without the in-block edges.
    pub fn with_saturation(&self, saturated: bool) -> Realization {
        Realization { saturated, ..self.clone() }
    }

    /// The realization transported by `a`: group `a⁻¹Ha`, with the base
    /// vertex moved back to the origin block by an element of `H`.
    pub fn conjugate(&self, a: &GridAutomorphism) -> Realization {
        let back = self.group().least_element_to(a.inverse().apply(grid::ZERO)).expect("vertex-transitive group");
        let b = back.then(a);
        debug_assert_eq!(b.trans, grid::ZERO);
        let group = Arc::new(self.group().conjugate(&b));
        let l = self.l.conjugate(&b.point);
        let d = self.d.map(|g| g.conjugate_by(&b));
        Realization::from_frame(GroupFrame::new(group, None), l, d, self.saturated).expect("conjugate realization")
    }

    /// Canonical element `g_v` over the block at `v`: the least element of
    /// `H` mapping the origin to `v`.
    #[inline]
    pub fn block_element(&self, v: Vector) -> GridAutomorphism {
        self.frame.block_element(v)
    }

    /// Coset representative of a vertex: `g_v` or `m·g_v`.
    #[inline]
    pub fn element_of(&self, u: ExtVertex) -> GridAutomorphism {
        let g = self.block_element(u.v);
        if u.eps == 0 {
            g
        } else {
            GridAutomorphism::linear(self.m).then(&g)
        }
    }

    /// The vertex `L·b`.
    #[inline]
    pub fn vertex_of(&self, b: &GridAutomorphism) -> ExtVertex {
        self.vertex_of_in(b, &self.l)
    }

    /// The vertex `L'·b` for an overgroup realization whose base-vertex
    /// stabilizer `l_big` meets this group's stabilizer in `L`; `b` may lie
    /// outside this realization's group.
    #[inline]
    pub fn vertex_of_in(&self, b: &GridAutomorphism, l_big: &PointSet) -> ExtVertex {
        let g = self.block_element(b.trans);
        let rel = b.point.then(&g.point.inverse());
        ExtVertex { v: b.trans, eps: u8::from(!l_big.contains(&rel)) }
    }

    /// Neighbours of `u`: block partner first (saturated only), then the
    /// `D`-neighbours in connection-set order.
    pub fn neighbors(&self, u: ExtVertex) -> Vec<ExtVertex> {
        let a = self.element_of(u);
        let mut out = Vec::with_capacity(self.d_reps.len() + 1);
        if self.saturated {
            out.push(ExtVertex { v: u.v, eps: 1 - u.eps });
        }
        for d in &self.d_reps {
            out.push(self.vertex_of(&d.then(&a)));
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.d_reps.len() + usize::from(self.saturated)
    }

    #[inline]
    pub fn adjacent(&self, u: ExtVertex, w: ExtVertex) -> bool {
        if u.v == w.v {
            return self.saturated && u.eps != w.eps;
        }
        let a = self.element_of(u);
        let b = self.element_of(w);
        self.d.contains(&b.then(&a.inverse()))
    }

    /// Connection pattern between the origin block and the block at `e`,
    /// computed with the block representative `g_e`.
    pub fn connection_pattern(&self, e: Vector) -> ConnectionPattern {
        self.connection_pattern_with(e, &self.block_element(e))
    }

    /// Same as [`Realization::connection_pattern`] for an arbitrary
    /// representative `ge` of the block at `e`, whose vertex labels follow
    /// `L·ge` (label 0) and `L·m·ge` (label 1).
    pub fn connection_pattern_with(&self, _e: Vector, ge: &GridAutomorphism) -> ConnectionPattern {
        let mm = GridAutomorphism::linear(self.m);
        let a = [GridAutomorphism::identity(self.dim()), mm];
        let b = [*ge, mm.then(ge)];
        let mut bits = 0u8;
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if self.d.contains(&bj.then(&ai.inverse())) {
                    bits |= 1 << (2 * i + j);
                }
            }
        }
        ConnectionPattern(bits)
    }

    /// Connection types toward the `2d` neighbours, ordered as
    /// [`grid::directions`].
    pub fn connection_types(&self) -> Vec<ConnectionType> {
        grid::directions(self.dim())
            .into_iter()
            .map(|e| self.connection_pattern(e).connection_type().expect("quotient edge"))
            .collect()
    }

    pub fn is_class_one(&self) -> bool {
        self.connection_types().iter().any(|t| !t.is_class_two_type())
    }

    /// Lexicographically least `x1x2_y1y2_z1z2` over axis renumberings and
    /// swaps inside each axis.
    pub fn combination_string(&self) -> String {
        combination_string(&self.connection_types())
    }

    /// Whether `⟨L, X, m (if saturated)⟩ = H`.
    pub fn is_connected(&self) -> bool {
        let mut gens = self.l_elements();
        gens.extend(self.x.iter().copied());
        if self.saturated {
            gens.push(GridAutomorphism::linear(self.m));
        }
        SpaceGroupNF::closure(self.dim(), &gens) == *self.frame.group
    }

    /// The non-saturated realization on the same triple, if still connected.
    pub fn desaturate(&self) -> Result<Option<Realization>> {
        if !self.saturated {
            return Err(Error::NotSaturated);
        }
        let r = self.with_saturation(false);
        Ok(r.is_connected().then_some(r))
    }

    /// Total order used for tie-breaking and sorted output.
    pub fn sort_key(&self) -> (Option<usize>, bool, u64, ConnectionSet) {
        (self.frame.group_id, !self.saturated, self.l.bits(), self.d)
    }
}

/// Canonical combination token for per-direction connection types.
pub fn combination_string(types: &[ConnectionType]) -> String {
    let d = types.len() / 2;
    let mut axes: Vec<usize> = (0..d).collect();
    let mut best: Option<Vec<ConnectionType>> = None;
    loop {
        for flips in 0..(1u32 << d) {
            let mut seq = Vec::with_capacity(2 * d);
            for (k, &a) in axes.iter().enumerate() {
                let (lo, hi) = (types[2 * a], types[2 * a + 1]);
                if flips >> k & 1 == 1 {
                    seq.extend([hi, lo]);
                } else {
                    seq.extend([lo, hi]);
                }
            }
            if best.as_ref().is_none_or(|b| seq.cmp(b) == Ordering::Less) {
                best = Some(seq);
            }
        }
        if !next_perm(&mut axes) {
            break;
        }
    }
    let best = best.unwrap();
    best.chunks(2).map(|c| format!("{}{}", c[0], c[1])).collect::<Vec<_>>().join("_")
}

fn next_perm(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
