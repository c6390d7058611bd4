//! Automorphisms of the grid `Z^d` as affine maps `v -> v·w + t` where `w` is a
//! signed permutation.
//!
//! All actions are right actions: `v·(gh) = (v·g)·h`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported grid dimension.
pub const MAX_DIM: usize = 3;

/// A grid vertex (or translation). Entries past the dimension are zero.
pub type Vector = [i64; MAX_DIM];

pub const ZERO: Vector = [0; MAX_DIM];

pub fn unit(dim: usize, axis: usize, negative: bool) -> Vector {
    debug_assert!(axis < dim);
    let mut v = ZERO;
    v[axis] = if negative { -1 } else { 1 };
    v
}

pub fn add(a: Vector, b: Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vector, b: Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn neg(a: Vector) -> Vector {
    [-a[0], -a[1], -a[2]]
}

pub fn l1(a: Vector) -> i64 {
    a.iter().map(|x| x.abs()).sum()
}

/// The `2d` signed unit vectors, ordered `-e_1, +e_1, -e_2, +e_2, ...`.
pub fn directions(dim: usize) -> Vec<Vector> {
    (0..dim).flat_map(|axis| [unit(dim, axis, true), unit(dim, axis, false)]).collect()
}

/// Index of a signed unit vector in [`directions`], if it is one.
pub fn direction_index(dim: usize, v: Vector) -> Option<usize> {
    if l1(v) != 1 {
        return None;
    }
    let axis = v.iter().position(|&x| x != 0)?;
    if axis >= dim {
        return None;
    }
    Some(2 * axis + usize::from(v[axis] > 0))
}

/// Signed permutation: entry `k = ±j` (1-based) means `e_k ↦ ±e_j`.
///
/// Slots past `dim` always hold the identity so arithmetic can run on all
/// three slots unconditionally.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    dim: u8,
    images: [i8; MAX_DIM],
}

impl SignedPermutation {
    pub fn identity(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        SignedPermutation { dim: dim as u8, images: [1, 2, 3] }
    }

    pub fn new(images: &[i8]) -> Result<Self> {
        let dim = images.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut seen = [false; MAX_DIM];
        for &s in images {
            let j = s.unsigned_abs() as usize;
            if j == 0 || j > dim || seen[j - 1] {
                return Err(Error::InvalidPermutation(format!("{images:?}")));
            }
            seen[j - 1] = true;
        }
        let mut full = [1, 2, 3];
        full[..dim].copy_from_slice(images);
        Ok(SignedPermutation { dim: dim as u8, images: full })
    }

    /// Central symmetry `v ↦ -v`.
    pub fn central(dim: usize) -> Self {
        let mut p = Self::identity(dim);
        for k in 0..dim {
            p.images[k] = -(k as i8 + 1);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn images(&self) -> &[i8] {
        &self.images[..self.dim()]
    }

    pub fn is_identity(&self) -> bool {
        self.images == [1, 2, 3]
    }

    /// `v·w`.
    #[inline]
    pub fn apply(&self, v: Vector) -> Vector {
        let mut out = ZERO;
        for (k, &s) in self.images.iter().enumerate() {
            let j = s.unsigned_abs() as usize - 1;
            out[j] = if s < 0 { -v[k] } else { v[k] };
        }
        out
    }

    /// `self` followed by `other`.
    #[inline]
    pub fn then(&self, other: &Self) -> Self {
        let mut images = [0i8; MAX_DIM];
        for (k, &s) in self.images.iter().enumerate() {
            let t = other.images[s.unsigned_abs() as usize - 1];
            images[k] = if s < 0 { -t } else { t };
        }
        SignedPermutation { dim: self.dim, images }
    }

    pub fn inverse(&self) -> Self {
        let mut images = [0i8; MAX_DIM];
        for (k, &s) in self.images.iter().enumerate() {
            let j = s.unsigned_abs() as usize - 1;
            let back = k as i8 + 1;
            images[j] = if s < 0 { -back } else { back };
        }
        SignedPermutation { dim: self.dim, images }
    }

    /// Multiplicative order.
    pub fn order(&self) -> usize {
        let mut p = *self;
        let mut n = 1;
        while !p.is_identity() {
            p = p.then(self);
            n += 1;
        }
        n
    }

    fn order_key(&self) -> [(u8, bool); MAX_DIM] {
        self.images.map(|s| (s.unsigned_abs(), s < 0))
    }

    /// Position of this element in [`hyperoctahedral`] for its dimension.
    #[inline]
    pub fn index(&self) -> usize {
        table(self.dim()).index_of(self)
    }
}

/// Entries are compared by absolute value first and sign second, so the
/// identity is the least element of every dimension.
impl Ord for SignedPermutation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim.cmp(&other.dim).then_with(|| self.order_key().cmp(&other.order_key()))
    }
}

impl PartialOrd for SignedPermutation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, s) in self.images().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

/// All `2^d · d!` signed permutations in ascending canonical order.
pub fn hyperoctahedral(dim: usize) -> Result<Vec<SignedPermutation>> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(table(dim).elems.clone())
}

/// Lookup tables for the hyperoctahedral group of one dimension.
pub(crate) struct PointTable {
    pub elems: Vec<SignedPermutation>,
    pub mul: Vec<Vec<u8>>,
    pub inv: Vec<u8>,
    code_to_index: Vec<u8>,
}

impl PointTable {
    fn code(p: &SignedPermutation) -> usize {
        p.images.iter().fold(0usize, |acc, &s| acc * 7 + (s + 3) as usize)
    }

    #[inline]
    pub fn index_of(&self, p: &SignedPermutation) -> usize {
        self.code_to_index[Self::code(p)] as usize
    }

    fn build(dim: usize) -> PointTable {
        let mut elems = Vec::new();
        let mut perm: Vec<usize> = (0..dim).collect();
        loop {
            for signs in 0..(1u32 << dim) {
                let mut images = [1i8, 2, 3];
                for k in 0..dim {
                    let j = perm[k] as i8 + 1;
                    images[k] = if signs >> k & 1 == 1 { -j } else { j };
                }
                elems.push(SignedPermutation { dim: dim as u8, images });
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        elems.sort();
        let mut code_to_index = vec![u8::MAX; 343];
        for (i, p) in elems.iter().enumerate() {
            code_to_index[Self::code(p)] = i as u8;
        }
        let mut table = PointTable { elems, mul: Vec::new(), inv: Vec::new(), code_to_index };
        table.mul = table
            .elems
            .iter()
            .map(|a| table.elems.iter().map(|b| table.index_of(&a.then(b)) as u8).collect())
            .collect();
        table.inv = table.elems.iter().map(|a| table.index_of(&a.inverse()) as u8).collect();
        table
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
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

pub(crate) fn table(dim: usize) -> &'static PointTable {
    static TABLES: [OnceLock<PointTable>; MAX_DIM] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[dim - 1].get_or_init(|| PointTable::build(dim))
}

/// Affine automorphism `v ↦ v·point + trans` of the grid.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridAutomorphism {
    pub point: SignedPermutation,
    pub trans: Vector,
}

impl GridAutomorphism {
    pub fn new(point: SignedPermutation, trans: Vector) -> Self {
        GridAutomorphism { point, trans }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SignedPermutation::identity(dim), ZERO)
    }

    pub fn translation(dim: usize, t: Vector) -> Self {
        Self::new(SignedPermutation::identity(dim), t)
    }

    pub fn linear(point: SignedPermutation) -> Self {
        Self::new(point, ZERO)
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn is_identity(&self) -> bool {
        self.point.is_identity() && self.trans == ZERO
    }

    #[inline]
    pub fn apply(&self, v: Vector) -> Vector {
        add(self.point.apply(v), self.trans)
    }

    /// Checked action on a vertex given as a slice.
    pub fn act(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut full = ZERO;
        full[..v.len()].copy_from_slice(v);
        Ok(self.apply(full)[..v.len()].to_vec())
    }

    /// `self` then `other`: `v·(self·other) = (v·self)·other`.
    #[inline]
    pub fn then(&self, other: &Self) -> Self {
        GridAutomorphism {
            point: self.point.then(&other.point),
            trans: add(other.point.apply(self.trans), other.trans),
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.then(other))
    }

    #[inline]
    pub fn inverse(&self) -> Self {
        let inv = self.point.inverse();
        GridAutomorphism { point: inv, trans: neg(inv.apply(self.trans)) }
    }

    /// `a⁻¹ · self · a`.
    pub fn conjugate_by(&self, a: &Self) -> Self {
        a.inverse().then(self).then(a)
    }

    /// Named generators of `Aut(Λ³)`: `r_x r_y r_z m_x m_y m_z i t_x t_y t_z`.
    pub fn named(name: &str) -> Option<Self> {
        let p = |imgs: &[i8]| Some(Self::linear(SignedPermutation::new(imgs).ok()?));
        match name {
            "r_x" => p(&[1, 3, -2]),
            "r_y" => p(&[-3, 2, 1]),
            "r_z" => p(&[-2, 1, 3]),
            "m_x" => p(&[-1, 2, 3]),
            "m_y" => p(&[1, -2, 3]),
            "m_z" => p(&[1, 2, -3]),
            "i" => p(&[-1, -2, -3]),
            "t_x" => Some(Self::translation(3, [1, 0, 0])),
            "t_y" => Some(Self::translation(3, [0, 1, 0])),
            "t_z" => Some(Self::translation(3, [0, 0, 1])),
            _ => None,
        }
    }

    /// Product of a word of named generators, e.g. `"r_z^2 r_x^-1"`, read
    /// left to right under the right-action convention.
    pub fn word(word: &str) -> Result<Self> {
        let mut acc = Self::identity(3);
        for tok in word.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (n, e.parse::<i32>().map_err(|_| Error::parse(0, 0, tok))?),
                None => (tok, 1),
            };
            let g = Self::named(name).ok_or_else(|| Error::parse(0, 0, tok))?;
            let g = if exp < 0 { g.inverse() } else { g };
            for _ in 0..exp.unsigned_abs() {
                acc = acc.then(&g);
            }
        }
        Ok(acc)
    }
}

impl Ord for GridAutomorphism {
    fn cmp(&self, other: &Self) -> Ordering {
        self.point.cmp(&other.point).then_with(|| self.trans.cmp(&other.trans))
    }
}

impl PartialOrd for GridAutomorphism {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GridAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.point)?;
        write_vector(f, self.dim(), self.trans)
    }
}

impl fmt::Debug for GridAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub(crate) fn write_vector(f: &mut impl fmt::Write, dim: usize, v: Vector) -> fmt::Result {
    write!(f, "[")?;
    for (k, x) in v[..dim].iter().enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "]")
}

pub fn format_vector(dim: usize, v: Vector) -> String {
    let mut s = String::new();
    write_vector(&mut s, dim, v).unwrap();
    s
}

/// Parses `[a,b,c]`.
pub fn parse_vector(s: &str) -> Result<Vec<i64>> {
    let inner = s.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(|| Error::parse(0, 0, s))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| Error::parse(0, 0, s))).collect()
}

impl FromStr for GridAutomorphism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, t) = s.split_once(';').ok_or_else(|| Error::parse(0, 0, s))?;
        let imgs = parse_vector(p)?;
        let trans = parse_vector(t)?;
        if imgs.len() != trans.len() {
            return Err(Error::DimensionMismatch { expected: imgs.len(), found: trans.len() });
        }
        let imgs: Vec<i8> =
            imgs.iter().map(|&x| i8::try_from(x).map_err(|_| Error::parse(0, 0, s))).collect::<Result<_>>()?;
        let point = SignedPermutation::new(&imgs)?;
        let mut full = ZERO;
        full[..trans.len()].copy_from_slice(&trans);
        Ok(GridAutomorphism::new(point, full))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(name: &str) -> GridAutomorphism {
        GridAutomorphism::named(name).unwrap()
    }

    #[test]
    fn named_generators_match_formulas() {
        assert_eq!(g("r_z").apply([1, 2, 3]), [2, -1, 3]);
        assert_eq!(g("r_x").apply([1, 2, 3]), [1, -3, 2]);
        assert_eq!(g("r_y").apply([1, 2, 3]), [3, 2, -1]);
        assert_eq!(g("t_x").apply([1, 2, 3]), [2, 2, 3]);
        assert_eq!(g("i").apply([1, 2, 3]), [-1, -2, -3]);
        assert_eq!(g("r_z").to_string(), "[-2,1,3];[0,0,0]");
    }

    #[test]
    fn act_examples() {
        assert_eq!(g("r_z").act(&[1, 2, 3]).unwrap(), vec![2, -1, 3]);
        let id = GridAutomorphism::identity(3);
        assert_eq!(id.act(&[5, -7, 0]).unwrap(), vec![5, -7, 0]);
        assert!(id.act(&[1, 2]).is_err());
        // i then t_x: (0,0,0) -> (0,0,0) -> (1,0,0)
        let it = g("i").compose(&g("t_x")).unwrap();
        let pointwise = g("t_x").apply(g("i").apply(ZERO));
        assert_eq!(it.apply(ZERO), pointwise);
        assert_eq!(pointwise, [1, 0, 0]);
    }

    #[test]
    fn compose_examples() {
        let mxyz = g("m_x").then(&g("m_y")).then(&g("m_z"));
        assert_eq!(mxyz, g("i"));
        let rz2 = g("r_z").then(&g("r_z"));
        assert_eq!(rz2.apply([1, 2, 3]), [-1, -2, 3]);
        let h = GridAutomorphism::new(g("r_z").point, [1, 0, 0]);
        let hh = h.then(&h);
        // pointwise oracle: v -> r_z(v) + e_x, twice
        let oracle = |v: Vector| {
            let once = add(g("r_z").apply(v), [1, 0, 0]);
            add(g("r_z").apply(once), [1, 0, 0])
        };
        for v in [[0, 0, 0], [1, 2, 3], [-4, 0, 7]] {
            assert_eq!(hh.apply(v), oracle(v));
        }
        assert_eq!(hh, GridAutomorphism::new(rz2.point, [1, -1, 0]));
        assert!(g("r_z").compose(&GridAutomorphism::identity(2)).is_err());
    }

    #[test]
    fn invert_examples() {
        assert_eq!(g("t_x").inverse(), GridAutomorphism::translation(3, [-1, 0, 0]));
        assert_eq!(g("i").inverse(), g("i"));
        let h = GridAutomorphism::new(g("i").point, [1, 0, 0]);
        for v in [[0, 0, 0], [3, -1, 2]] {
            assert_eq!(h.apply(h.apply(v)), v);
        }
        assert_eq!(h.inverse(), h);
    }

    #[test]
    fn hyperoctahedral_sizes_and_order() {
        assert_eq!(hyperoctahedral(1).unwrap().len(), 2);
        assert_eq!(hyperoctahedral(2).unwrap().len(), 8);
        let b3 = hyperoctahedral(3).unwrap();
        assert_eq!(b3.len(), 48);
        assert!(b3[0].is_identity());
        assert!(b3.windows(2).all(|w| w[0] < w[1]));
        assert!(hyperoctahedral(0).is_err());
        assert!(hyperoctahedral(4).is_err());
        for (i, p) in b3.iter().enumerate() {
            assert_eq!(p.index(), i);
        }
    }

    #[test]
    fn text_round_trip() {
        let id: GridAutomorphism = "[1,2,3];[0,0,0]".parse().unwrap();
        assert_eq!(id, GridAutomorphism::identity(3));
        let h: GridAutomorphism = "[-2,1];[4,-1]".parse().unwrap();
        assert_eq!(h.to_string(), "[-2,1];[4,-1]");
        assert!("[1,1];[0,0]".parse::<GridAutomorphism>().is_err());
        assert!("[1,2];[0]".parse::<GridAutomorphism>().is_err());
        assert!("[1,2]".parse::<GridAutomorphism>().is_err());
    }

    #[test]
    fn words() {
        assert_eq!(GridAutomorphism::word("r_z^2").unwrap(), g("r_z").then(&g("r_z")));
        assert_eq!(GridAutomorphism::word("r_x^-1 r_x").unwrap(), GridAutomorphism::identity(3));
    }
}
