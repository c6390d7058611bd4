//! Canonical labelling of finite vertex- and edge-coloured graphs by
//! individualization and refinement.
//!
//! The canonical form is the least leaf of the search tree under the order
//! (refinement trace, relabelled graph). Subtrees are cut when their trace
//! prefix exceeds the best one, when an automorphism fixing the current
//! prefix maps a child onto an explored sibling, and by jumping back to the
//! common ancestor whenever a leaf reproduces an earlier one.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

/// Undirected graph with vertex colours and edge labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    colors: Vec<u32>,
    /// Sorted `(neighbour, label)` lists.
    adj: Vec<Vec<(u32, u32)>>,
}

impl ColoredGraph {
    pub fn new(colors: Vec<u32>) -> Self {
        let n = colors.len();
        ColoredGraph { colors, adj: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize, label: u32) {
        self.adj[a].push((b as u32, label));
        self.adj[b].push((a as u32, label));
    }

    /// Sorts adjacency lists; call once after the last `add_edge`.
    pub fn finish(&mut self) {
        for l in &mut self.adj {
            l.sort_unstable();
            l.dedup();
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// The graph with vertex `v` renamed `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> ColoredGraph {
        let n = self.len();
        let mut colors = vec![0; n];
        let mut adj = vec![Vec::new(); n];
        for v in 0..n {
            colors[perm[v]] = self.colors[v];
            adj[perm[v]] = self.adj[v].iter().map(|&(w, l)| (perm[w as usize] as u32, l)).collect();
        }
        let mut g = ColoredGraph { colors, adj };
        g.finish();
        g
    }
}

/// Canonical form: the relabelled graph in a flat comparable encoding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(Vec<u32>);

impl CanonicalForm {
    /// 128-bit digest of the form, used as a bucketing certificate.
    pub fn digest(&self) -> u128 {
        let mut a = DefaultHasher::new();
        self.0.hash(&mut a);
        let mut b = DefaultHasher::new();
        0x9e37_79b9u32.hash(&mut b);
        self.0.hash(&mut b);
        (a.finish() as u128) << 64 | b.finish() as u128
    }
}

fn encode(g: &ColoredGraph, perm: &[usize]) -> Vec<u32> {
    let n = g.len();
    let mut inv = vec![0usize; n];
    for (v, &p) in perm.iter().enumerate() {
        inv[p] = v;
    }
    let mut out = Vec::with_capacity(n + 3 * g.edge_count() + 1);
    out.push(n as u32);
    for &v in &inv {
        out.push(g.colors[v]);
    }
    for (p, &v) in inv.iter().enumerate() {
        let mut row: Vec<(u32, u32)> =
            g.adj[v].iter().map(|&(w, l)| (perm[w as usize] as u32, l)).filter(|&(q, _)| q as usize > p).collect();
        row.sort_unstable();
        out.push(row.len() as u32);
        for (q, l) in row {
            out.push(q);
            out.push(l);
        }
    }
    out
}

/// Ordered partition: `order` lists vertices cell by cell; `cell_of[v]` is
/// the start index of the cell holding `v`.
#[derive(Clone)]
struct Partition {
    order: Vec<usize>,
    cell_of: Vec<usize>,
    /// `cell_end[start]` is one past the last index of the cell at `start`.
    cell_end: Vec<usize>,
}

impl Partition {
    fn from_colors(colors: &[u32]) -> Partition {
        let n = colors.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| (colors[v], v));
        let mut p = Partition { order, cell_of: vec![0; n], cell_end: vec![0; n] };
        let mut start = 0;
        for i in 1..=n {
            if i == n || colors[p.order[i]] != colors[p.order[start]] {
                for k in start..i {
                    p.cell_of[p.order[k]] = start;
                }
                p.cell_end[start] = i;
                start = i;
            }
        }
        p
    }

    fn is_discrete(&self) -> bool {
        let n = self.order.len();
        let mut i = 0;
        while i < n {
            if self.cell_end[i] - i > 1 {
                return false;
            }
            i = self.cell_end[i];
        }
        true
    }

    /// Refines to the coarsest equitable partition; returns a trace digest.
    fn refine(&mut self, g: &ColoredGraph) -> u64 {
        let n = self.order.len();
        let mut trace = DefaultHasher::new();
        loop {
            let mut changed = false;
            let mut sigs: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
            for (v, sig) in sigs.iter_mut().enumerate() {
                sig.extend(g.adj[v].iter().map(|&(w, l)| (self.cell_of[w as usize], l)));
                sig.sort_unstable();
            }
            let mut i = 0;
            while i < n {
                let end = self.cell_end[i];
                if end - i > 1 {
                    let cell = &mut self.order[i..end];
                    cell.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]).then(a.cmp(&b)));
                    let mut start = i;
                    for k in i + 1..=end {
                        if k == end || sigs[self.order[k]] != sigs[self.order[start]] {
                            if start != i || k != end {
                                changed = true;
                            }
                            for j in start..k {
                                self.cell_of[self.order[j]] = start;
                            }
                            self.cell_end[start] = k;
                            (start, k - start).hash(&mut trace);
                            sigs[self.order[start]].hash(&mut trace);
                            start = k;
                        }
                    }
                }
                i = end;
            }
            if !changed {
                break;
            }
        }
        trace.finish()
    }

    fn individualize(&mut self, v: usize) {
        let start = self.cell_of[v];
        let end = self.cell_end[start];
        let pos = self.order[start..end].iter().position(|&x| x == v).unwrap() + start;
        self.order.swap(start, pos);
        self.cell_end[start] = start + 1;
        for k in start + 1..end {
            self.cell_of[self.order[k]] = start + 1;
        }
        self.cell_end[start + 1] = end;
        self.cell_of[v] = start;
    }

    /// First smallest non-singleton cell.
    fn target_cell(&self) -> Option<(usize, usize)> {
        let n = self.order.len();
        let mut best: Option<(usize, usize)> = None;
        let mut i = 0;
        while i < n {
            let e = self.cell_end[i];
            if e - i > 1 && best.is_none_or(|(s, t)| e - i < t - s) {
                best = Some((i, e));
            }
            i = e;
        }
        best
    }

    fn labelling(&self) -> Vec<usize> {
        let mut perm = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            perm[v] = i;
        }
        perm
    }
}

struct Leaf {
    traces: Vec<u64>,
    form: Vec<u32>,
    perm: Vec<usize>,
    path: Vec<usize>,
}

struct Search<'a> {
    g: &'a ColoredGraph,
    best: Option<Leaf>,
    first: Option<Leaf>,
    autos: Vec<Vec<usize>>,
    leaves: usize,
}

impl Search<'_> {
    /// Returns `Some(level)` to abandon every node deeper than `level`.
    fn visit(&mut self, mut part: Partition, traces: &mut Vec<u64>, path: &mut Vec<usize>) -> Option<usize> {
        let t = part.refine(self.g);
        traces.push(t);
        let res = self.visit_refined(part, traces, path);
        traces.pop();
        res
    }

    fn visit_refined(&mut self, part: Partition, traces: &mut Vec<u64>, path: &mut Vec<usize>) -> Option<usize> {
        if let Some(best) = &self.best {
            let k = traces.len().min(best.traces.len());
            if traces[..k] > best.traces[..k] {
                return None;
            }
        }
        if part.is_discrete() {
            return self.leaf(&part, traces, path);
        }
        let (s, e) = part.target_cell().unwrap();
        let mut cell: Vec<usize> = part.order[s..e].to_vec();
        cell.sort_unstable();
        let mut explored: Vec<usize> = Vec::new();
        let level = path.len();
        for &v in &cell {
            if !explored.is_empty() && self.in_explored_orbit(v, &explored, path) {
                continue;
            }
            explored.push(v);
            let mut child = part.clone();
            child.individualize(v);
            path.push(v);
            let jump = self.visit(child, traces, path);
            path.pop();
            if let Some(j) = jump {
                if j < level {
                    return Some(j);
                }
            }
        }
        None
    }

    fn in_explored_orbit(&self, v: usize, explored: &[usize], path: &[usize]) -> bool {
        // Orbit of v under automorphisms fixing the prefix pointwise.
        let gens: Vec<&Vec<usize>> = self.autos.iter().filter(|a| path.iter().all(|&p| a[p] == p)).collect();
        if gens.is_empty() {
            return false;
        }
        let mut orbit = vec![v];
        let mut i = 0;
        while i < orbit.len() {
            let x = orbit[i];
            for a in &gens {
                let y = a[x];
                if !orbit.contains(&y) {
                    orbit.push(y);
                }
            }
            i += 1;
        }
        orbit.iter().any(|x| explored.contains(x))
    }

    fn leaf(&mut self, part: &Partition, traces: &[u64], path: &[usize]) -> Option<usize> {
        self.leaves += 1;
        let perm = part.labelling();
        let form = encode(self.g, &perm);
        let leaf = Leaf { traces: traces.to_vec(), form, perm, path: path.to_vec() };
        // Automorphism against the first or best leaf, then jump back.
        for other in [&self.first, &self.best].into_iter().flatten() {
            if other.traces == leaf.traces && other.form == leaf.form {
                let n = leaf.perm.len();
                let mut inv = vec![0; n];
                for (v, &p) in leaf.perm.iter().enumerate() {
                    inv[p] = v;
                }
                let auto: Vec<usize> = (0..n).map(|v| inv[other.perm[v]]).collect();
                let common = other.path.iter().zip(path).take_while(|(a, b)| a == b).count();
                if !auto.iter().enumerate().all(|(i, &x)| i == x) {
                    self.autos.push(auto);
                }
                return Some(common);
            }
        }
        if self.first.is_none() {
            self.first = Some(Leaf {
                traces: leaf.traces.clone(),
                form: leaf.form.clone(),
                perm: leaf.perm.clone(),
                path: leaf.path.clone(),
            });
        }
        let better = match &self.best {
            None => true,
            Some(b) => (&leaf.traces, &leaf.form) < (&b.traces, &b.form),
        };
        if better {
            self.best = Some(leaf);
        }
        None
    }
}

/// Canonical labelling result.
pub struct Canonical {
    /// `labelling[v]` is the canonical position of vertex `v`.
    pub labelling: Vec<usize>,
    pub form: CanonicalForm,
    /// Automorphism generators found during the search.
    pub automorphisms: Vec<Vec<usize>>,
    pub leaves: usize,
}

pub fn canonical_form(g: &ColoredGraph) -> Canonical {
    let part = Partition::from_colors(&g.colors);
    let mut search = Search { g, best: None, first: None, autos: Vec::new(), leaves: 0 };
    let mut color_trace = DefaultHasher::new();
    let mut sorted = g.colors.clone();
    sorted.sort_unstable();
    sorted.hash(&mut color_trace);
    let mut traces = vec![color_trace.finish()];
    search.visit(part, &mut traces, &mut Vec::new());
    let best = search.best.expect("search reaches a leaf");
    let mut form = best.traces.iter().flat_map(|t| [(*t >> 32) as u32, *t as u32]).collect::<Vec<u32>>();
    form.insert(0, best.traces.len() as u32);
    form.extend(best.form);
    Canonical { labelling: best.perm, form: CanonicalForm(form), automorphisms: search.autos, leaves: search.leaves }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn cycle(n: usize) -> ColoredGraph {
        let mut g = ColoredGraph::new(vec![0; n]);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n, 0);
        }
        g.finish();
        g
    }

    fn petersen() -> ColoredGraph {
        let mut g = ColoredGraph::new(vec![0; 10]);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5, 0);
            g.add_edge(i, i + 5, 0);
            g.add_edge(5 + i, 5 + (i + 2) % 5, 0);
        }
        g.finish();
        g
    }

    fn permuted(g: &ColoredGraph, seed: u64) -> ColoredGraph {
        let mut perm: Vec<usize> = (0..g.len()).collect();
        perm.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        g.relabel(&perm)
    }

    #[test]
    fn relabelled_graphs_share_forms() {
        for g in [cycle(12), petersen()] {
            let c = canonical_form(&g);
            for seed in 0..10 {
                assert_eq!(canonical_form(&permuted(&g, seed)).form, c.form);
            }
            assert_eq!(g.relabel(&c.labelling), permuted(&g, 3).relabel(&canonical_form(&permuted(&g, 3)).labelling));
        }
    }

    #[test]
    fn distinguishes_non_isomorphic() {
        // Two 6-cycles versus one 12-cycle: both 2-regular on 12 vertices.
        let mut two = ColoredGraph::new(vec![0; 12]);
        for i in 0..6 {
            two.add_edge(i, (i + 1) % 6, 0);
            two.add_edge(6 + i, 6 + (i + 1) % 6, 0);
        }
        two.finish();
        assert_ne!(canonical_form(&two).form, canonical_form(&cycle(12)).form);
        // Edge labels matter.
        let mut a = cycle(4);
        a.adj[0].iter_mut().for_each(|e| e.1 = if e.0 == 1 { 1 } else { e.1 });
        a.adj[1].iter_mut().for_each(|e| e.1 = if e.0 == 0 { 1 } else { e.1 });
        assert_ne!(canonical_form(&a).form, canonical_form(&cycle(4)).form);
    }

    #[test]
    fn automorphisms_are_valid() {
        let g = petersen();
        let c = canonical_form(&g);
        assert!(!c.automorphisms.is_empty());
        for a in &c.automorphisms {
            assert_eq!(g.relabel(a), g);
        }
    }

    proptest! {
        #[test]
        fn random_graphs_are_canonical(n in 1usize..18, edges in prop::collection::vec((0usize..18, 0usize..18, 0u32..2), 0..40), colors in prop::collection::vec(0u32..3, 18), seed in any::<u64>()) {
            let mut g = ColoredGraph::new(colors[..n].to_vec());
            for (a, b, l) in edges {
                if a < n && b < n && a != b {
                    g.add_edge(a, b, l);
                }
            }
            g.finish();
            let h = permuted(&g, seed);
            prop_assert_eq!(canonical_form(&g).form, canonical_form(&h).form);
        }
    }
}
