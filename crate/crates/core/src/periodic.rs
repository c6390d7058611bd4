//! The infinite extension graph of a realization: growth, balls,
//! periodicity, connectivity through the voltage quotient, and isomorphism
//! between two such graphs.
//!
//! Isomorphisms are searched in equivariant form: a root-preserving map
//! `φ` with `φ(u + t) = φ(u) + A·t` for `t` in a diagonal period lattice of
//! the first graph and `A·t` in the translation lattice of the second. Such a
//! map is fixed by its values on one period box and checked exactly: every
//! box vertex must have its neighbourhood mapped bijectively, images of the
//! box must be distinct modulo `A`, and the cell volumes must agree.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::canon::{self, ColoredGraph};
use crate::error::{Error, Result};
use crate::grid::{self, GridAutomorphism, Vector, ZERO};
use crate::lattice::Lattice;
use crate::realization::{ExtVertex, Realization};

/// Classes and undecided pairs found inside one certificate bucket.
type BucketSplit = (Vec<Vec<usize>>, Vec<(usize, usize)>);

/// Edge labels of ball graphs.
const EDGE: u32 = 1;
const BLOCK: u32 = 2;
const BLOCK_EDGE: u32 = 3;

/// Orders of the balls of radius `1..=radius` around `root`.
pub fn growth_from(r: &Realization, root: ExtVertex, radius: usize) -> Vec<usize> {
    let mut seen: FxHashSet<ExtVertex> = FxHashSet::default();
    seen.insert(root);
    let mut frontier = vec![root];
    let mut out = Vec::with_capacity(radius);
    for _ in 0..radius {
        let mut next = Vec::new();
        for u in &frontier {
            for n in r.neighbors(*u) {
                if seen.insert(n) {
                    next.push(n);
                }
            }
        }
        out.push(seen.len());
        frontier = next;
    }
    out
}

/// Ball orders for radii 1 to 10 from the base vertex.
pub fn growth(r: &Realization) -> Vec<usize> {
    growth_from(r, ExtVertex::origin(), 10)
}

/// Connectivity decided on the finite quotient by the lattice of the group:
/// the lift is connected iff the quotient is connected and the voltages of
/// its cycles generate the lattice.
pub fn voltage_connectivity(r: &Realization) -> bool {
    let lattice = r.group().lattice();
    let dim = r.dim();
    let reps = lattice.coset_reps();
    let index: FxHashMap<Vector, usize> = reps.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = 2 * reps.len();
    let id = |u: ExtVertex| 2 * index[&lattice.reduce(u.v)] + u.eps as usize;
    // Potential: the lifted position of each quotient vertex along a
    // spanning tree.
    let mut lift: Vec<Option<ExtVertex>> = vec![None; n];
    lift[0] = Some(ExtVertex::origin());
    let mut queue = VecDeque::from([ExtVertex::origin()]);
    let mut cycles: Vec<Vector> = Vec::new();
    while let Some(u) = queue.pop_front() {
        for w in r.neighbors(u) {
            let k = id(w);
            match lift[k] {
                None => {
                    lift[k] = Some(w);
                    queue.push_back(w);
                }
                Some(existing) => cycles.push(grid::sub(w.v, existing.v)),
            }
        }
    }
    if lift.iter().any(Option::is_none) {
        return false;
    }
    let generated = Lattice::from_generators(dim, cycles);
    generated == *lattice
}

/// Induced subgraph on the vertices within `radius` of `root`.
#[derive(Clone, Debug)]
pub struct Ball {
    pub radius: usize,
    pub vertices: Vec<ExtVertex>,
    pub distance: Vec<usize>,
    /// Sorted neighbour indices inside the ball.
    pub adjacency: Vec<Vec<usize>>,
    pub root: usize,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Coloured graph for canonical labelling: colour = distance from the
    /// root; with `blocks`, block partners get a dedicated edge label.
    pub fn colored_graph(&self, blocks: bool) -> ColoredGraph {
        let mut g = ColoredGraph::new(self.distance.iter().map(|&d| d as u32).collect());
        let pos: FxHashMap<ExtVertex, usize> = self.vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &j in nb {
                if i < j {
                    let same_block = self.vertices[i].v == self.vertices[j].v;
                    g.add_edge(i, j, if blocks && same_block { BLOCK_EDGE } else { EDGE });
                }
            }
        }
        if blocks {
            for (i, u) in self.vertices.iter().enumerate() {
                let partner = ExtVertex { v: u.v, eps: 1 - u.eps };
                if let Some(&j) = pos.get(&partner) {
                    if i < j && !self.adjacency[i].contains(&j) {
                        g.add_edge(i, j, BLOCK);
                    }
                }
            }
        }
        g.finish();
        g
    }

    /// Digest of the canonical form of the rooted ball.
    pub fn certificate(&self, blocks: bool) -> u128 {
        canon::canonical_form(&self.colored_graph(blocks)).form.digest()
    }
}

pub fn ball(r: &Realization, radius: usize, root: ExtVertex) -> Ball {
    let mut index: FxHashMap<ExtVertex, usize> = FxHashMap::default();
    let mut vertices = vec![root];
    let mut distance = vec![0];
    index.insert(root, 0);
    let mut head = 0;
    while head < vertices.len() {
        let u = vertices[head];
        let du = distance[head];
        head += 1;
        if du == radius {
            continue;
        }
        for w in r.neighbors(u) {
            if let Entry::Vacant(slot) = index.entry(w) {
                slot.insert(vertices.len());
                vertices.push(w);
                distance.push(du + 1);
            }
        }
    }
    let adjacency = vertices
        .iter()
        .map(|u| {
            let mut nb: Vec<usize> = r.neighbors(*u).into_iter().filter_map(|w| index.get(&w).copied()).collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    Ball { radius, vertices, distance, adjacency, root: 0 }
}

/// Label-preserving lattice shifts along the axes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicityWitness {
    pub periods: Vec<i64>,
    pub shifts: Vec<GridAutomorphism>,
}

/// Least `p_i` with `p_i·e_i` in the translation lattice. Vertex labels are
/// periodic under the whole lattice, so these shifts preserve labels.
pub fn periodicity(r: &Realization) -> PeriodicityWitness {
    let dim = r.dim();
    let lattice = r.group().lattice();
    let periods: Vec<i64> = (0..dim).map(|k| lattice.axis_period(k).expect("full-rank lattice")).collect();
    let shifts = periods
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut t = ZERO;
            t[k] = p;
            GridAutomorphism::translation(dim, t)
        })
        .collect();
    PeriodicityWitness { periods, shifts }
}

fn shift(u: ExtVertex, t: Vector) -> ExtVertex {
    ExtVertex { v: grid::add(u.v, t), eps: u.eps }
}

/// A global isomorphism in equivariant form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicIsomorphism {
    /// Diagonal period lattice of the source.
    pub periods: Vec<i64>,
    /// Image displacement of each period vector: the rows of the matrix `M`.
    pub matrix: Vec<Vector>,
    /// Images of the period-box vertices, in box order.
    pub box_images: Vec<(ExtVertex, ExtVertex)>,
}

impl PeriodicIsomorphism {
    pub fn apply(&self, u: ExtVertex) -> ExtVertex {
        let dim = self.periods.len();
        let mut base = u.v;
        let mut disp = ZERO;
        for (k, (b, p)) in base.iter_mut().zip(&self.periods).enumerate().take(dim) {
            let q = u.v[k].div_euclid(*p);
            *b = u.v[k].rem_euclid(*p);
            disp = grid::add(disp, self.matrix[k].map(|x| x * q));
        }
        let b = ExtVertex { v: base, eps: u.eps };
        let img = self.box_images.iter().find(|(s, _)| *s == b).expect("box vertex").1;
        shift(img, disp)
    }
}

fn box_vertices(periods: &[i64]) -> Vec<ExtVertex> {
    let dim = periods.len();
    let mut out = vec![ExtVertex::origin()];
    for k in 0..dim {
        out = out
            .into_iter()
            .flat_map(|u| {
                (0..periods[k]).map(move |x| {
                    let mut v = u.v;
                    v[k] = x;
                    ExtVertex { v, eps: 0 }
                })
            })
            .collect();
    }
    out.into_iter().flat_map(|u| [u, ExtVertex { v: u.v, eps: 1 }]).collect()
}

/// Exact check that an equivariant map is a graph isomorphism.
pub fn verify_isomorphism(r1: &Realization, r2: &Realization, iso: &PeriodicIsomorphism) -> bool {
    let dim = r1.dim();
    let t1 = r1.group().lattice();
    let t2 = r2.group().lattice();
    for (k, &p) in iso.periods.iter().enumerate() {
        let mut e = ZERO;
        e[k] = p;
        if !t1.contains(e) || !t2.contains(iso.matrix[k]) {
            return false;
        }
    }
    let image_lattice = Lattice::from_generators(dim, iso.matrix.iter().copied());
    let volume: i64 = iso.periods.iter().product();
    if image_lattice.determinant() != Some(volume) {
        return false;
    }
    if r1.degree() != r2.degree() {
        return false;
    }
    let mut residues = FxHashSet::default();
    for &(src, img) in &iso.box_images {
        if !residues.insert((image_lattice.reduce(img.v), img.eps)) {
            return false;
        }
        let mut mapped: Vec<ExtVertex> = r1.neighbors(src).into_iter().map(|n| iso.apply(n)).collect();
        let mut expected = r2.neighbors(img);
        mapped.sort();
        expected.sort();
        if mapped != expected {
            return false;
        }
    }
    residues.len() == 2 * volume as usize
}

/// Root-preserving isomorphism between two balls of equal radius, as a
/// vertex map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallIsomorphism {
    pub radius: usize,
    pub map: FxHashMap<ExtVertex, ExtVertex>,
}

/// Extends a ball isomorphism periodically over the source's period box.
/// Needs the box and the period vectors inside the ball.
pub fn extend_isomorphism(
    r1: &Realization,
    r2: &Realization,
    phi: &BallIsomorphism,
) -> Result<Option<PeriodicIsomorphism>> {
    let dim = r1.dim();
    let periods = periodicity(r1).periods;
    let root = ExtVertex::origin();
    let img_root = *phi.map.get(&root).ok_or(Error::NeedsLargerRadius(phi.radius + 1))?;
    let mut matrix = Vec::with_capacity(dim);
    for (k, &p) in periods.iter().enumerate() {
        let mut e = ZERO;
        e[k] = p;
        let c = *phi.map.get(&shift(root, e)).ok_or(Error::NeedsLargerRadius(phi.radius + 1))?;
        if c.eps != img_root.eps {
            return Ok(None);
        }
        matrix.push(grid::sub(c.v, img_root.v));
    }
    let mut box_images = Vec::new();
    for b in box_vertices(&periods) {
        let img = *phi.map.get(&b).ok_or(Error::NeedsLargerRadius(phi.radius + 1))?;
        box_images.push((b, img));
    }
    let iso = PeriodicIsomorphism { periods, matrix, box_images };
    Ok(verify_isomorphism(r1, r2, &iso).then_some(iso))
}

/// Cached neighbourhoods of one graph.
struct NeighbourCache<'a> {
    r: &'a Realization,
    map: FxHashMap<ExtVertex, Vec<ExtVertex>>,
}

impl<'a> NeighbourCache<'a> {
    fn new(r: &'a Realization) -> Self {
        NeighbourCache { r, map: FxHashMap::default() }
    }

    fn get(&mut self, u: ExtVertex) -> &[ExtVertex] {
        let r = self.r;
        self.map.entry(u).or_insert_with(|| {
            let mut n = r.neighbors(u);
            n.sort();
            n
        })
    }

    /// Number of common neighbours: an edge invariant.
    fn triangles(&mut self, u: ExtVertex, w: ExtVertex) -> usize {
        let a = self.get(u).to_vec();
        let b = self.get(w);
        a.iter().filter(|x| b.binary_search(x).is_ok()).count()
    }
}

struct IsoSearch<'a> {
    n1: NeighbourCache<'a>,
    n2: NeighbourCache<'a>,
    t2: &'a Lattice,
    periods: Vec<i64>,
    order: Vec<ExtVertex>,
    parent: Vec<usize>,
    /// Earlier neighbours of each vertex, by position in `order`.
    back: Vec<Vec<usize>>,
    /// First vertex in `order` of the same residue class modulo periods.
    class_first: Vec<usize>,
    pos: FxHashMap<ExtVertex, usize>,
    image: Vec<ExtVertex>,
    used: FxHashMap<ExtVertex, usize>,
    matrix: Vec<Option<Vector>>,
    nodes: usize,
    node_limit: usize,
}

enum Step {
    Found,
    Exhausted,
    Limit,
}

impl IsoSearch<'_> {
    fn residue_coeffs(&self, u: ExtVertex, base: ExtVertex) -> Vec<i64> {
        (0..self.periods.len()).map(|k| (u.v[k] - base.v[k]) / self.periods[k]).collect()
    }

    fn candidates(&mut self, i: usize) -> Vec<ExtVertex> {
        let u = self.order[i];
        let p = self.image[self.parent[i]];
        let mut cands: Vec<ExtVertex> = self.n2.get(p).iter().copied().filter(|x| !self.used.contains_key(x)).collect();
        let first = self.class_first[i];
        if first != i {
            let base = self.image[first];
            let coeffs = self.residue_coeffs(u, self.order[first]);
            cands.retain(|x| x.eps == base.eps);
            let known: Option<Vector> = coeffs.iter().enumerate().try_fold(base.v, |acc, (k, &c)| {
                if c == 0 {
                    Some(acc)
                } else {
                    self.matrix[k].map(|m| grid::add(acc, m.map(|x| x * c)))
                }
            });
            if let Some(target) = known {
                cands.retain(|x| x.v == target);
            }
        }
        cands
    }

    /// Assigns `x` to `order[i]`; returns the matrix rows newly fixed, or
    /// `None` when the assignment is inconsistent.
    fn try_assign(&mut self, i: usize, x: ExtVertex) -> Option<Vec<usize>> {
        let u = self.order[i];
        // Adjacency with earlier vertices, both ways.
        for &j in &self.back[i] {
            let y = self.image[j];
            if self.n2.get(x).binary_search(&y).is_err() {
                return None;
            }
            let w = self.order[j];
            if self.n1.triangles(u, w) != self.n2.triangles(x, y) {
                return None;
            }
        }
        let x_nb = self.n2.get(x).to_vec();
        let mut hits = 0;
        for y in &x_nb {
            if let Some(&j) = self.used.get(y) {
                if !self.back[i].contains(&j) {
                    return None;
                }
                hits += 1;
            }
        }
        if hits != self.back[i].len() {
            return None;
        }
        // Periodic consistency.
        let mut fixed = Vec::new();
        let first = self.class_first[i];
        if first != i {
            let base = self.image[first];
            let coeffs = self.residue_coeffs(u, self.order[first]);
            let unknown: Vec<usize> =
                (0..coeffs.len()).filter(|&k| coeffs[k] != 0 && self.matrix[k].is_none()).collect();
            if unknown.len() == 1 {
                let k = unknown[0];
                let mut rest = grid::sub(x.v, base.v);
                for (j, &c) in coeffs.iter().enumerate() {
                    if j != k && c != 0 {
                        rest = grid::sub(rest, self.matrix[j].unwrap().map(|m| m * c));
                    }
                }
                if rest.iter().any(|&r| r % coeffs[k] != 0) {
                    return None;
                }
                let row = rest.map(|r| r / coeffs[k]);
                if !self.t2.contains(row) {
                    return None;
                }
                self.matrix[k] = Some(row);
                fixed.push(k);
            } else if unknown.len() > 1 {
                // Deferred: only the label is checked until more rows are known.
            }
        }
        self.image[i] = x;
        self.used.insert(x, i);
        Some(fixed)
    }

    fn undo(&mut self, i: usize, fixed: &[usize]) {
        self.used.remove(&self.image[i]);
        for &k in fixed {
            self.matrix[k] = None;
        }
    }

    fn finish(&self, r1: &Realization, r2: &Realization) -> Option<PeriodicIsomorphism> {
        if self.matrix.iter().any(Option::is_none) {
            return None;
        }
        let iso = PeriodicIsomorphism {
            periods: self.periods.clone(),
            matrix: self.matrix.iter().map(|m| m.unwrap()).collect(),
            box_images: box_vertices(&self.periods).into_iter().map(|b| (b, self.image[self.pos[&b]])).collect(),
        };
        // Deferred periodic constraints are implied by the check below.
        verify_isomorphism(r1, r2, &iso).then_some(iso)
    }

    /// Depth-first search over `order[1..]`, kept on an explicit stack since
    /// regions run to thousands of vertices.
    fn search(&mut self, r1: &Realization, r2: &Realization, out: &mut Option<PeriodicIsomorphism>) -> Step {
        struct Frame {
            cands: Vec<ExtVertex>,
            next: usize,
            fixed: Option<Vec<usize>>,
        }
        let n = self.order.len();
        if n == 1 {
            *out = self.finish(r1, r2);
            return if out.is_some() { Step::Found } else { Step::Exhausted };
        }
        let mut stack = vec![Frame { cands: self.candidates(1), next: 0, fixed: None }];
        while !stack.is_empty() {
            let i = stack.len();
            if let Some(fixed) = stack[i - 1].fixed.take() {
                self.undo(i, &fixed);
            }
            let top = stack.last_mut().unwrap();
            let Some(&x) = top.cands.get(top.next) else {
                stack.pop();
                continue;
            };
            top.next += 1;
            self.nodes += 1;
            if self.nodes > self.node_limit {
                return Step::Limit;
            }
            let Some(fixed) = self.try_assign(i, x) else { continue };
            if i + 1 == n {
                if let Some(iso) = self.finish(r1, r2) {
                    *out = Some(iso);
                    return Step::Found;
                }
                self.undo(i, &fixed);
                continue;
            }
            stack.last_mut().unwrap().fixed = Some(fixed);
            let cands = self.candidates(i + 1);
            stack.push(Frame { cands, next: 0, fixed: None });
        }
        Step::Exhausted
    }
}

/// Outcome of an isomorphism search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoSearchOutcome {
    Found(PeriodicIsomorphism),
    /// No equivariant isomorphism with the tried periods.
    NotFound,
    /// The search hit its node budget.
    Aborted,
}

/// Period vectors tried for `r1 → r2`: multiples of the periods of `r1`
/// and of the common periods of both, cheapest first.
fn candidate_periods(r1: &Realization, r2: &Realization, scales: &[i64]) -> Vec<Vec<i64>> {
    let p1 = periodicity(r1).periods;
    let p2 = periodicity(r2).periods;
    let common: Vec<i64> = p1.iter().zip(&p2).map(|(&a, &b)| a / gcd(a, b) * b).collect();
    let mut out: Vec<Vec<i64>> = Vec::new();
    for base in [&p1, &common] {
        for &s in scales {
            let p: Vec<i64> = base.iter().map(|x| x * s).collect();
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out.sort_by_key(|p| p.iter().product::<i64>());
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Searches a root-preserving equivariant isomorphism `r1 → r2` whose
/// periods are multiples (by `scales`) of the periods of `r1` or of the
/// common periods of `r1` and `r2`.
pub fn find_isomorphism(r1: &Realization, r2: &Realization, scales: &[i64], node_limit: usize) -> IsoSearchOutcome {
    if r1.dim() != r2.dim() || r1.degree() != r2.degree() {
        return IsoSearchOutcome::NotFound;
    }
    let mut aborted = false;
    for periods in candidate_periods(r1, r2, scales) {
        let mut out = None;
        match run_search(r1, r2, &periods, node_limit, &mut out) {
            Step::Found => return IsoSearchOutcome::Found(out.expect("found isomorphism")),
            Step::Limit => aborted = true,
            Step::Exhausted => {}
        }
    }
    if aborted {
        IsoSearchOutcome::Aborted
    } else {
        IsoSearchOutcome::NotFound
    }
}

/// Runs [`find_isomorphism`] in both directions; the search is equivariant
/// for the periods of its source only, so one direction can miss.
pub fn isomorphic(r1: &Realization, r2: &Realization, scales: &[i64], node_limit: usize) -> bool {
    matches!(find_isomorphism(r1, r2, scales, node_limit), IsoSearchOutcome::Found(_))
        || matches!(find_isomorphism(r2, r1, scales, node_limit), IsoSearchOutcome::Found(_))
}

fn run_search(
    r1: &Realization,
    r2: &Realization,
    periods: &[i64],
    node_limit: usize,
    out: &mut Option<PeriodicIsomorphism>,
) -> Step {
    let dim = r1.dim();
    let root = ExtVertex::origin();
    let mut targets: FxHashSet<ExtVertex> = box_vertices(periods).into_iter().collect();
    for (k, &p) in periods.iter().enumerate() {
        let mut e = ZERO;
        e[k] = p;
        targets.insert(shift(root, e));
    }
    // BFS until every target is reached, then finish that layer.
    let mut n1 = NeighbourCache::new(r1);
    let mut order = vec![root];
    let mut parent = vec![0usize];
    let mut dist = vec![0usize];
    let mut pos: FxHashMap<ExtVertex, usize> = FxHashMap::default();
    pos.insert(root, 0);
    let mut remaining = targets.len() - usize::from(targets.contains(&root));
    let mut head = 0;
    let mut stop_at = usize::MAX;
    while head < order.len() {
        let u = order[head];
        if dist[head] >= stop_at {
            break;
        }
        for w in n1.get(u).to_vec() {
            if let Entry::Vacant(slot) = pos.entry(w) {
                slot.insert(order.len());
                order.push(w);
                parent.push(head);
                dist.push(dist[head] + 1);
                if targets.contains(&w) {
                    remaining -= 1;
                    if remaining == 0 {
                        stop_at = dist[head] + 1;
                    }
                }
            }
        }
        head += 1;
    }
    let back: Vec<Vec<usize>> = order
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut b: Vec<usize> = n1.get(*u).iter().filter_map(|w| pos.get(w).copied()).filter(|&j| j < i).collect();
            b.sort_unstable();
            b
        })
        .collect();
    let mut first_of: FxHashMap<(Vector, u8), usize> = FxHashMap::default();
    let class_first = order
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut key = u.v;
            for k in 0..dim {
                key[k] = u.v[k].rem_euclid(periods[k]);
            }
            *first_of.entry((key, u.eps)).or_insert(i)
        })
        .collect();
    let n = order.len();
    let mut search = IsoSearch {
        n1,
        n2: NeighbourCache::new(r2),
        t2: r2.group().lattice(),
        periods: periods.to_vec(),
        order,
        parent,
        back,
        class_first,
        pos,
        image: vec![ExtVertex::origin(); n],
        used: FxHashMap::default(),
        matrix: vec![None; dim],
        nodes: 0,
        node_limit,
    };
    search.used.insert(ExtVertex::origin(), 0);
    search.search(r1, r2, out)
}

/// Settings for [`iso_classes`].
#[derive(Clone, Debug)]
pub struct IsoClassConfig {
    pub radius: usize,
    pub max_radius: usize,
    /// Multiples of the source periods tried by the isomorphism search.
    pub scales: Vec<i64>,
    pub node_limit: usize,
}

impl Default for IsoClassConfig {
    fn default() -> Self {
        IsoClassConfig { radius: 4, max_radius: 8, scales: vec![1, 2], node_limit: 2_000_000 }
    }
}

/// Isomorphism classes as sorted lists of input indices, plus the pairs
/// (member, class representative) that stayed ambiguous up to the radius
/// cap.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IsoPartition {
    pub classes: Vec<Vec<usize>>,
    pub undecided: Vec<(usize, usize)>,
}

impl IsoPartition {
    pub fn non_singleton(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.classes.iter().filter(|c| c.len() > 1)
    }
}

/// Partition of the graphs of `specs` up to isomorphism. Graphs with
/// different rooted-ball certificates are non-isomorphic; inside a bucket a
/// member joins the first class whose representative it is found
/// isomorphic to, and failed searches are settled by certificates at larger
/// radii.
pub fn iso_classes(specs: &[Realization], cfg: &IsoClassConfig) -> IsoPartition {
    let certs: Vec<u128> =
        specs.par_iter().map(|r| ball(r, cfg.radius, ExtVertex::origin()).certificate(false)).collect();
    let mut buckets: BTreeMap<(usize, u128), Vec<usize>> = BTreeMap::new();
    for (i, c) in certs.iter().enumerate() {
        buckets.entry((specs[i].degree(), *c)).or_default().push(i);
    }
    let results: Vec<BucketSplit> = buckets
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|members| split_bucket(specs, &members, cfg))
        .collect();
    let mut out = IsoPartition::default();
    for (classes, undecided) in results {
        out.classes.extend(classes);
        out.undecided.extend(undecided);
    }
    out.classes.sort();
    out.undecided.sort();
    out
}

fn split_bucket(
    specs: &[Realization],
    members: &[usize],
    cfg: &IsoClassConfig,
) -> (Vec<Vec<usize>>, Vec<(usize, usize)>) {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut undecided = Vec::new();
    let mut cert_cache: FxHashMap<(usize, usize), u128> = FxHashMap::default();
    let mut cert = |i: usize, radius: usize| {
        *cert_cache
            .entry((i, radius))
            .or_insert_with(|| ball(&specs[i], radius, ExtVertex::origin()).certificate(false))
    };
    for &i in members {
        let mut joined = false;
        let mut ambiguous = Vec::new();
        for class in classes.iter_mut() {
            let rep = class[0];
            if isomorphic(&specs[rep], &specs[i], &cfg.scales, cfg.node_limit) {
                class.push(i);
                joined = true;
                break;
            }
            let separated = (cfg.radius + 1..=cfg.max_radius).any(|r| cert(rep, r) != cert(i, r));
            if !separated {
                ambiguous.push((i, rep));
            }
        }
        if !joined {
            undecided.extend(ambiguous);
            classes.push(vec![i]);
        }
    }
    (classes, undecided)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::tests::{full_spec, type_one_spec};

    #[test]
    fn growth_examples() {
        let f = full_spec().validate().unwrap();
        assert_eq!(growth(&f), vec![14, 50, 126, 258, 462, 754, 1150, 1666, 2318, 3122]);
        // Closed form 2(2r+1)(2r^2+2r+3)/3.
        for (r, g) in growth(&f).iter().enumerate() {
            let r = r as i64 + 1;
            assert_eq!(*g as i64, 2 * (2 * r + 1) * (2 * r * r + 2 * r + 3) / 3);
        }
        let t = type_one_spec(true).validate().unwrap();
        let g = growth(&t);
        assert_eq!(g[0], 5);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let other = ExtVertex { v: [3, -1, 2], eps: 1 };
        assert_eq!(growth_from(&t, other, 10), g);
    }

    #[test]
    fn voltage_examples() {
        assert!(voltage_connectivity(&full_spec().validate().unwrap()));
        assert!(voltage_connectivity(&type_one_spec(true).validate().unwrap()));
        assert!(!voltage_connectivity(&type_one_spec(false).validate().unwrap()));
    }

    #[test]
    fn ball_examples() {
        let f = full_spec().validate().unwrap();
        assert_eq!(ball(&f, 0, ExtVertex::origin()).len(), 1);
        assert_eq!(ball(&f, 4, ExtVertex::origin()).len(), 258);
        let b = ball(&type_one_spec(true).validate().unwrap(), 3, ExtVertex::origin());
        let g = b.colored_graph(true);
        assert_eq!(g.len(), b.len());
    }

    #[test]
    fn periodicity_and_self_isomorphism() {
        let t = type_one_spec(true).validate().unwrap();
        let p = periodicity(&t);
        assert_eq!(p.periods, vec![1, 1, 1]);
        match find_isomorphism(&t, &t, &[1], 100_000) {
            IsoSearchOutcome::Found(iso) => assert!(verify_isomorphism(&t, &t, &iso)),
            other => panic!("{other:?}"),
        }
        let f = full_spec().validate().unwrap();
        assert_eq!(find_isomorphism(&t, &f, &[1, 2], 100_000), IsoSearchOutcome::NotFound);
    }

    #[test]
    fn conjugate_graphs_are_isomorphic() {
        let t = type_one_spec(true).validate().unwrap();
        let c = t.conjugate(&GridAutomorphism::word("r_z t_x").unwrap());
        assert!(matches!(find_isomorphism(&t, &c, &[1, 2], 100_000), IsoSearchOutcome::Found(_)));
        let b1 = ball(&t, 4, ExtVertex::origin());
        let b2 = ball(&c, 4, ExtVertex::origin());
        assert_eq!(b1.certificate(true), b2.certificate(true));
    }

    #[test]
    fn identity_ball_map_extends() {
        let t = type_one_spec(true).validate().unwrap();
        let b = ball(&t, 4, ExtVertex::origin());
        let phi = BallIsomorphism { radius: 4, map: b.vertices.iter().map(|v| (*v, *v)).collect() };
        let iso = extend_isomorphism(&t, &t, &phi).unwrap().unwrap();
        assert_eq!(iso.apply(ExtVertex { v: [5, -3, 2], eps: 1 }), ExtVertex { v: [5, -3, 2], eps: 1 });
        let small =
            BallIsomorphism { radius: 0, map: [(ExtVertex::origin(), ExtVertex::origin())].into_iter().collect() };
        assert_eq!(extend_isomorphism(&t, &t, &small).unwrap_err(), Error::NeedsLargerRadius(1));
    }
}
