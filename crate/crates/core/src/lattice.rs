//! Integer sublattices of `Z^d` in Hermite normal form.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{self, SignedPermutation, Vector, ZERO};

/// Sublattice of `Z^d`, stored as its row-style Hermite normal form: rows in
/// echelon order, positive pivots, entries above each pivot reduced into
/// `[0, pivot)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    dim: u8,
    rows: Vec<Vector>,
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

impl Lattice {
    pub fn zero(dim: usize) -> Self {
        Lattice { dim: dim as u8, rows: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        Self::from_generators(dim, (0..dim).map(|k| grid::unit(dim, k, false)))
    }

    pub fn from_generators(dim: usize, gens: impl IntoIterator<Item = Vector>) -> Self {
        let mut pending: Vec<Vector> = gens.into_iter().filter(|v| *v != ZERO).collect();
        let mut rows = Vec::new();
        for col in 0..dim {
            loop {
                // Row with the smallest nonzero entry in this column.
                let pivot = pending
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r[col] != 0)
                    .min_by_key(|(_, r)| r[col].abs())
                    .map(|(i, _)| i);
                let Some(p) = pivot else { break };
                let mut prow = pending.swap_remove(p);
                if prow[col] < 0 {
                    prow = grid::neg(prow);
                }
                let mut done = true;
                for r in pending.iter_mut() {
                    if r[col] != 0 {
                        let q = floor_div(r[col], prow[col]);
                        for k in 0..dim {
                            r[k] -= q * prow[k];
                        }
                        if r[col] != 0 {
                            done = false;
                        }
                    }
                }
                if done {
                    rows.push(prow);
                    pending.retain(|r| *r != ZERO);
                    break;
                }
                pending.push(prow);
            }
        }
        debug_assert!(pending.iter().all(|r| *r == ZERO));
        let mut lat = Lattice { dim: dim as u8, rows };
        lat.reduce_upper();
        lat
    }

    fn pivot(&self, i: usize) -> usize {
        self.rows[i].iter().position(|&x| x != 0).unwrap()
    }

    fn reduce_upper(&mut self) {
        for i in 0..self.rows.len() {
            let c = self.pivot(i);
            let p = self.rows[i][c];
            for j in 0..i {
                let q = floor_div(self.rows[j][c], p);
                if q != 0 {
                    for k in 0..MAX {
                        self.rows[j][k] -= q * self.rows[i][k];
                    }
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.rows
    }

    /// Index in `Z^d`; `None` when rank-deficient.
    pub fn determinant(&self) -> Option<i64> {
        self.is_full_rank().then(|| (0..self.rank()).map(|i| self.rows[i][i]).product())
    }

    /// Canonical coset representative of `v` modulo the lattice.
    #[inline]
    pub fn reduce(&self, mut v: Vector) -> Vector {
        for r in &self.rows {
            let c = r.iter().position(|&x| x != 0).unwrap();
            let q = floor_div(v[c], r[c]);
            if q != 0 {
                for k in 0..MAX {
                    v[k] -= q * r[k];
                }
            }
        }
        v
    }

    #[inline]
    pub fn contains(&self, v: Vector) -> bool {
        self.reduce(v) == ZERO
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.rows.iter().all(|r| self.contains(*r))
    }

    pub fn join(&self, extra: impl IntoIterator<Item = Vector>) -> Lattice {
        Lattice::from_generators(self.dim(), self.rows.iter().copied().chain(extra))
    }

    pub fn image(&self, w: &SignedPermutation) -> Lattice {
        Lattice::from_generators(self.dim(), self.rows.iter().map(|r| w.apply(*r)))
    }

    pub fn is_invariant_under(&self, w: &SignedPermutation) -> bool {
        self.rows.iter().all(|r| self.contains(w.apply(*r)))
    }

    /// Coset representatives of `Z^d / self` (full rank only), in ascending
    /// lexicographic order.
    pub fn coset_reps(&self) -> Vec<Vector> {
        assert!(self.is_full_rank(), "coset_reps needs a full-rank lattice");
        let d = self.dim();
        let mut out = vec![ZERO];
        for k in 0..d {
            let p = self.rows[k][k];
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..p).map(move |x| {
                        let mut w = v;
                        w[k] = x;
                        w
                    })
                })
                .collect();
        }
        out.sort();
        out
    }

    /// Smallest positive `p` with `p·e_axis` in the lattice.
    pub fn axis_period(&self, axis: usize) -> Option<i64> {
        let mut e = ZERO;
        e[axis] = 1;
        (1..=4096).find(|&p| {
            e[axis] = p;
            self.contains(e)
        })
    }

    /// All full-rank sublattices of `Z^d` with the given index.
    pub fn all_with_index(dim: usize, index: i64) -> Vec<Lattice> {
        let mut out = Vec::new();
        let mut diag = vec![0i64; dim];
        fn rec(dim: usize, k: usize, rest: i64, diag: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
            if k == dim {
                if rest == 1 {
                    out.push(diag.clone());
                }
                return;
            }
            for p in 1..=rest {
                if rest % p == 0 {
                    diag[k] = p;
                    rec(dim, k + 1, rest / p, diag, out);
                }
            }
        }
        let mut diags = Vec::new();
        rec(dim, 0, index, &mut diag, &mut diags);
        for dg in diags {
            // Upper entries of row i in column j > i range over [0, diag[j]).
            let mut slots = Vec::new();
            for i in 0..dim {
                for j in i + 1..dim {
                    slots.push((i, j));
                }
            }
            let mut counters = vec![0i64; slots.len()];
            loop {
                let mut rows = vec![ZERO; dim];
                for i in 0..dim {
                    rows[i][i] = dg[i];
                }
                for (s, &(i, j)) in slots.iter().enumerate() {
                    rows[i][j] = counters[s];
                }
                out.push(Lattice { dim: dim as u8, rows });
                let mut s = 0;
                loop {
                    if s == slots.len() {
                        break;
                    }
                    counters[s] += 1;
                    if counters[s] < dg[slots[s].1] {
                        break;
                    }
                    counters[s] = 0;
                    s += 1;
                }
                if s == slots.len() {
                    break;
                }
            }
        }
        out
    }
}

const MAX: usize = grid::MAX_DIM;

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            return write!(f, "-");
        }
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            grid::write_vector(f, self.dim(), *r)?;
        }
        Ok(())
    }
}

impl Lattice {
    /// Parses the `Display` form (`-` or comma-joined rows) for dimension
    /// `dim`, accepting only text already in Hermite normal form.
    pub fn parse(dim: usize, s: &str) -> Result<Lattice> {
        if s == "-" {
            return Ok(Lattice::zero(dim));
        }
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::parse(0, 0, format!("lattice rows expected, found {s:?}")))?;
        let mut rows = Vec::new();
        for part in inner.split("],[") {
            let row = grid::parse_vector(&format!("[{part}]"))?;
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            let mut v = ZERO;
            v[..dim].copy_from_slice(&row);
            rows.push(v);
        }
        let lattice = Lattice::from_generators(dim, rows.iter().copied());
        if lattice.rows != rows {
            return Err(Error::parse(0, 0, format!("lattice {s} is not in Hermite normal form")));
        }
        Ok(lattice)
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice({self})")
    }
}
