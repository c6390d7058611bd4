//! Normal form for finitely generated subgroups of `Aut(Λ^d)`.
//!
//! A subgroup `G` is stored as its point group `P`, its translation lattice
//! `T` and a vector system `w ↦ τ_w (mod T)`; `(w, t) ∈ G` iff `w ∈ P` and
//! `t ≡ τ_w`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::finite::PointSet;
use crate::grid::{self, table, GridAutomorphism, SignedPermutation, Vector, ZERO};
use crate::lattice::Lattice;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpaceGroupNF {
    point: PointSet,
    lattice: Lattice,
    /// Indexed by position in the hyperoctahedral table; zero outside `point`.
    tau: Vec<Vector>,
}

impl SpaceGroupNF {
    /// Normal form of the group generated by `gens` (the trivial group when
    /// `gens` is empty).
    pub fn closure(dim: usize, gens: &[GridAutomorphism]) -> SpaceGroupNF {
        let t = table(dim);
        let n = t.elems.len();
        let gens: Vec<(usize, GridAutomorphism)> = gens.iter().map(|g| (g.point.index(), *g)).collect();
        let mut lattice = Lattice::zero(dim);
        let mut tau: Vec<Option<Vector>> = vec![None; n];
        tau[0] = Some(ZERO);
        loop {
            let mut extra: Vec<Vector> = Vec::new();
            let mut stack: Vec<usize> = (0..n).filter(|&i| tau[i].is_some()).collect();
            while let Some(a) = stack.pop() {
                let ta = tau[a].unwrap();
                for (gi, g) in &gens {
                    let c = t.mul[a][*gi] as usize;
                    let tc = lattice.reduce(grid::add(g.point.apply(ta), g.trans));
                    match tau[c] {
                        None => {
                            tau[c] = Some(tc);
                            stack.push(c);
                        }
                        Some(old) if old != tc => extra.push(grid::sub(tc, old)),
                        _ => {}
                    }
                }
            }
            let members: Vec<usize> = (0..n).filter(|&i| tau[i].is_some()).collect();
            let mut grown = lattice.join(extra.iter().copied());
            // Close under the point group.
            let images: Vec<Vector> =
                members.iter().flat_map(|&i| grown.basis().iter().map(move |b| t.elems[i].apply(*b))).collect();
            grown = grown.join(images);
            if grown == lattice {
                break;
            }
            lattice = grown;
            for v in tau.iter_mut().flatten() {
                *v = lattice.reduce(*v);
            }
        }
        let point = PointSet::from_bits(
            dim,
            tau.iter().enumerate().filter(|(_, v)| v.is_some()).fold(0u64, |b, (i, _)| b | 1 << i),
        );
        let tau = tau.into_iter().map(|v| v.unwrap_or(ZERO)).collect();
        SpaceGroupNF { point, lattice, tau }
    }

    /// Builds a normal form from already consistent data. The cocycle
    /// identity is not checked here; see [`SpaceGroupNF::is_consistent`].
    pub fn from_parts(point: PointSet, lattice: Lattice, taus: &[(SignedPermutation, Vector)]) -> SpaceGroupNF {
        let mut tau = vec![ZERO; table(point.dim()).elems.len()];
        for (w, v) in taus {
            tau[w.index()] = lattice.reduce(*v);
        }
        SpaceGroupNF { point, lattice, tau }
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn point(&self) -> &PointSet {
        &self.point
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn tau(&self, w: &SignedPermutation) -> Vector {
        self.tau[w.index()]
    }

    #[inline]
    pub fn tau_index(&self, i: usize) -> Vector {
        self.tau[i]
    }

    /// Point elements with their reduced translation parts, canonical order.
    pub fn vector_system(&self) -> Vec<(SignedPermutation, Vector)> {
        self.point.elems().into_iter().map(|w| (w, self.tau(&w))).collect()
    }

    #[inline]
    pub fn contains(&self, g: &GridAutomorphism) -> bool {
        let i = g.point.index();
        self.point.contains_index(i) && self.lattice.reduce(g.trans) == self.tau[i]
    }

    pub fn member(&self, g: &GridAutomorphism) -> bool {
        g.dim() == self.dim() && self.contains(g)
    }

    /// Whether `(w, t)` is an element, for `w` given by table index.
    #[inline]
    pub fn contains_parts(&self, wi: usize, t: Vector) -> bool {
        self.point.contains_index(wi) && self.lattice.reduce(t) == self.tau[wi]
    }

    /// Generators: lattice basis translations plus one representative per
    /// generator of the point group.
    pub fn generators(&self) -> Vec<GridAutomorphism> {
        let d = self.dim();
        let mut out: Vec<GridAutomorphism> =
            self.lattice.basis().iter().map(|b| GridAutomorphism::translation(d, *b)).collect();
        for w in self.point.generators() {
            out.push(GridAutomorphism::new(w, self.tau(&w)));
        }
        out
    }

    /// The origin stabilizer, a subgroup of the point group.
    pub fn stabilizer(&self) -> PointSet {
        let bits = self.point.indices().filter(|&i| self.tau[i] == ZERO).fold(0u64, |b, i| b | 1 << i);
        PointSet::from_bits(self.dim(), bits)
    }

    pub fn stabilizer_origin(&self) -> Vec<GridAutomorphism> {
        self.stabilizer().elems().into_iter().map(GridAutomorphism::linear).collect()
    }

    pub fn is_vertex_transitive(&self) -> bool {
        let Some(det) = self.lattice.determinant() else {
            return false;
        };
        let mut seen: Vec<Vector> = self.point.indices().map(|i| self.tau[i]).collect();
        seen.sort();
        seen.dedup();
        seen.len() as i64 == det
    }

    pub fn group_descriptors(&self) -> (Vec<SignedPermutation>, Vec<Vector>) {
        (self.point.elems(), self.lattice.basis().to_vec())
    }

    /// Elements mapping the origin to `v`.
    pub fn elements_to(&self, v: Vector) -> impl Iterator<Item = GridAutomorphism> + '_ {
        let r = self.lattice.reduce(v);
        let t = table(self.dim());
        self.point.indices().filter(move |&i| self.tau[i] == r).map(move |i| GridAutomorphism::new(t.elems[i], v))
    }

    /// Least element (canonical order) mapping the origin to `v`.
    pub fn least_element_to(&self, v: Vector) -> Option<GridAutomorphism> {
        self.elements_to(v).next()
    }

    /// Normal form of `a⁻¹ G a`.
    pub fn conjugate(&self, a: &GridAutomorphism) -> SpaceGroupNF {
        let d = self.dim();
        let t = table(d);
        let lattice = self.lattice.image(&a.point);
        let mut tau = vec![ZERO; t.elems.len()];
        let mut bits = 0u64;
        let ainv = a.inverse();
        for i in self.point.indices() {
            let g = GridAutomorphism::new(t.elems[i], self.tau[i]);
            let c = ainv.then(&g).then(a);
            let ci = c.point.index();
            bits |= 1 << ci;
            tau[ci] = lattice.reduce(c.trans);
        }
        SpaceGroupNF { point: PointSet::from_bits(d, bits), lattice, tau }
    }

    /// Cocycle identity check `τ_{w1 w2} ≡ τ_{w1}·w2 + τ_{w2}` and lattice
    /// invariance.
    pub fn is_consistent(&self) -> bool {
        let t = table(self.dim());
        if !self.point.is_group() {
            return false;
        }
        if self.tau[0] != ZERO {
            return false;
        }
        for a in self.point.indices() {
            if !self.lattice.is_invariant_under(&t.elems[a]) {
                return false;
            }
            for b in self.point.indices() {
                let c = t.mul[a][b] as usize;
                let lhs = self.tau[c];
                let rhs = self.lattice.reduce(grid::add(t.elems[b].apply(self.tau[a]), self.tau[b]));
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    /// Comparison key: point set, lattice, vector system.
    pub fn key(&self) -> (u64, &Lattice, Vec<Vector>) {
        (self.point.bits(), &self.lattice, self.point.indices().map(|i| self.tau[i]).collect())
    }

    /// Least conjugate under `Aut(Λ^d)` (by [`SpaceGroupNF::key`]) and a
    /// conjugating element reaching it.
    pub fn canonical_form(&self) -> (SpaceGroupNF, GridAutomorphism) {
        let d = self.dim();
        let (min_point, ws) = self.point.canonical_conjugate();
        debug_assert!(ws.iter().all(|w| self.point.conjugate(w) == min_point));
        let lat_imgs: Vec<(SignedPermutation, Lattice)> = ws.iter().map(|w| (*w, self.lattice.image(w))).collect();
        let min_lat = lat_imgs.iter().map(|(_, l)| l).min().unwrap().clone();
        let mut best: Option<(SpaceGroupNF, GridAutomorphism)> = None;
        for (w, l) in lat_imgs.iter().filter(|(_, l)| *l == min_lat) {
            let base = self.conjugate(&GridAutomorphism::linear(*w));
            let reps = if l.is_full_rank() { l.coset_reps() } else { vec![ZERO] };
            for s in reps {
                let ts = GridAutomorphism::translation(d, s);
                let c = base.conjugate(&ts);
                let better = match &best {
                    None => true,
                    Some((b, _)) => c.key() < b.key(),
                };
                if better {
                    best = Some((c, GridAutomorphism::new(*w, s)));
                }
            }
        }
        best.unwrap()
    }

    /// A conjugating element `a` with `a⁻¹ G1 a = G2`, searched over point
    /// parts compatible with both point groups and lattices and translation
    /// parts in a fundamental domain of `G2`'s lattice.
    pub fn are_conjugate(&self, other: &SpaceGroupNF) -> Option<GridAutomorphism> {
        if self.dim() != other.dim()
            || self.point.len() != other.point.len()
            || self.lattice.determinant() != other.lattice.determinant()
        {
            return None;
        }
        let d = self.dim();
        for w in &table(d).elems {
            if self.point.conjugate(w) != other.point || self.lattice.image(w) != other.lattice {
                continue;
            }
            let base = self.conjugate(&GridAutomorphism::linear(*w));
            let reps = if other.lattice.is_full_rank() { other.lattice.coset_reps() } else { vec![ZERO] };
            for s in reps {
                if base.conjugate(&GridAutomorphism::translation(d, s)) == *other {
                    return Some(GridAutomorphism::new(*w, s));
                }
            }
        }
        None
    }

    pub fn is_subgroup_of(&self, other: &SpaceGroupNF) -> bool {
        self.generators().iter().all(|g| other.contains(g))
    }

    /// `|P| / det(T)`: the number of elements per unit translation cell.
    pub fn density(&self) -> f64 {
        self.point.len() as f64 / self.lattice.determinant().unwrap_or(i64::MAX) as f64
    }
}

impl fmt::Display for SpaceGroupNF {
    /// `dim <TAB> lattice rows <TAB> w;τ w;τ ...`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.dim(), self.lattice)?;
        for (k, (w, v)) in self.vector_system().into_iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", GridAutomorphism::new(w, v))?;
        }
        Ok(())
    }
}

impl FromStr for SpaceGroupNF {
    type Err = Error;

    /// Inverse of `Display`. Rejects text that is not the exact normal form:
    /// non-HNF lattices, unreduced or out-of-order translation parts, and
    /// data violating the cocycle identity.
    fn from_str(s: &str) -> Result<Self> {
        let mut fields = s.split('\t');
        let (Some(d), Some(lat), Some(elems), None) = (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(0, 0, "expected dim, lattice and elements"));
        };
        let dim: usize = d.parse().map_err(|_| Error::parse(0, 0, format!("bad dimension {d:?}")))?;
        if !(1..=grid::MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let lattice = Lattice::parse(dim, lat)?;
        let mut taus = Vec::new();
        for tok in elems.split(' ') {
            let g: GridAutomorphism = tok.parse()?;
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
            }
            taus.push((g.point, g.trans));
        }
        let point = PointSet::from_elems(dim, taus.iter().map(|(w, _)| w));
        let nf = SpaceGroupNF::from_parts(point, lattice, &taus);
        if !nf.is_consistent() {
            return Err(Error::parse(0, 0, "vector system violates the cocycle identity"));
        }
        if nf.to_string() != s {
            return Err(Error::parse(0, 0, "not in normal form"));
        }
        Ok(nf)
    }
}

impl fmt::Debug for SpaceGroupNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpaceGroupNF({})", self.to_string().replace('\t', " | "))
    }
}

/// The full automorphism group of the grid.
pub fn full_group(dim: usize) -> SpaceGroupNF {
    let mut gens: Vec<GridAutomorphism> = table(dim).elems.iter().map(|w| GridAutomorphism::linear(*w)).collect();
    gens.extend((0..dim).map(|k| GridAutomorphism::translation(dim, grid::unit(dim, k, false))));
    SpaceGroupNF::closure(dim, &gens)
}
