//! Checks shared by the property tests and the acceptance suite. Each
//! check panics on the first disagreement.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use grid2x_core::enumeration::{enumerate_vertex_transitive, GroupCatalog};
use grid2x_core::finite::subgroup_class_reps;
use grid2x_core::generate::{are_equivalent, classify, generate_saturated_with, thin, GroupExtensions};
use grid2x_core::grid::{self, directions, hyperoctahedral, Vector, ZERO};
use grid2x_core::periodic::{ball, growth, growth_from, voltage_connectivity};
use grid2x_core::pipeline::{run_pipeline, PipelineConfig};
use grid2x_core::realization::{ExtVertex, GroupFrame, Realization, RealizationSpec};
use grid2x_core::{GridAutomorphism, Lattice, PointSet, SignedPermutation, SpaceGroupNF};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rustc_hash::{FxHashMap, FxHashSet};

fn random_generators(rng: &mut StdRng, dim: usize) -> Vec<GridAutomorphism> {
    let points = hyperoctahedral(dim).unwrap();
    let mut gens: Vec<GridAutomorphism> = (0..dim)
        .map(|k| {
            let mut t = ZERO;
            t[k] = rng.gen_range(1..=2);
            GridAutomorphism::translation(dim, t)
        })
        .collect();
    for _ in 0..rng.gen_range(1..=2) {
        let mut t = ZERO;
        for c in t.iter_mut().take(dim) {
            *c = rng.gen_range(-1..=1);
        }
        gens.push(GridAutomorphism::new(*points.choose(rng).unwrap(), t));
    }
    gens
}

/// Every product of at most `len` generators or inverses.
fn words(dim: usize, gens: &[GridAutomorphism], len: usize) -> FxHashSet<GridAutomorphism> {
    let mut alphabet = gens.to_vec();
    alphabet.extend(gens.iter().map(GridAutomorphism::inverse));
    let mut seen = FxHashSet::default();
    seen.insert(GridAutomorphism::identity(dim));
    let mut frontier = vec![GridAutomorphism::identity(dim)];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &frontier {
            for a in &alphabet {
                let p = w.then(a);
                if seen.insert(p) {
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    seen
}

pub fn normal_form_agrees_with_word_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut rebuilt_count = 0;
    for case in 0..100 {
        let dim = 2 + case % 2;
        let gens = random_generators(&mut rng, dim);
        let nf = SpaceGroupNF::closure(dim, &gens);
        let elems = words(dim, &gens, if dim == 2 { 6 } else { 5 });
        for g in &elems {
            assert!(nf.member(g), "case {case}: word element {g} outside the closure");
        }
        // Rebuild the group from the words alone.
        let point = PointSet::from_elems(dim, elems.iter().map(|g| &g.point));
        let mut base: FxHashMap<SignedPermutation, Vector> = FxHashMap::default();
        let mut diffs = Vec::new();
        for g in &elems {
            match base.get(&g.point) {
                Some(t) => diffs.push(grid::sub(g.trans, *t)),
                None => {
                    base.insert(g.point, g.trans);
                }
            }
        }
        let lattice = Lattice::from_generators(dim, diffs);
        assert!(point.is_subset(nf.point()), "case {case}");
        assert!(nf.lattice().contains_lattice(&lattice), "case {case}");
        if point == *nf.point() && lattice == *nf.lattice() {
            let taus: Vec<(SignedPermutation, Vector)> = base.into_iter().collect();
            let rebuilt = SpaceGroupNF::from_parts(point, lattice, &taus);
            assert_eq!(rebuilt, nf, "case {case}");
            rebuilt_count += 1;
        }
    }
    assert!(rebuilt_count >= 50, "{rebuilt_count}");
}

pub fn closure_rejects_elements_off_the_coset() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..100 {
        let dim = 2;
        let gens = random_generators(&mut rng, dim);
        let nf = SpaceGroupNF::closure(dim, &gens);
        for w in nf.point().elems() {
            let tau = nf.tau(&w);
            assert!(nf.member(&GridAutomorphism::new(w, tau)));
            for b in nf.lattice().basis() {
                assert!(nf.member(&GridAutomorphism::new(w, grid::add(tau, *b))));
            }
            let reps = nf.lattice().coset_reps();
            for r in reps.iter().filter(|r| **r != ZERO) {
                assert!(!nf.member(&GridAutomorphism::new(w, grid::add(tau, *r))));
            }
        }
    }
}

pub fn every_normal_form_satisfies_the_cocycle_identity() {
    let cat = enumerate_vertex_transitive(3).unwrap();
    assert!(cat.entries.iter().all(|e| e.group.is_consistent()));
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let gens = random_generators(&mut rng, 3);
        let nf = SpaceGroupNF::closure(3, &gens);
        assert!(nf.is_consistent());
        let a = random_generators(&mut rng, 3).pop().unwrap();
        assert!(nf.conjugate(&a).is_consistent());
    }
}

fn d2_realizations() -> Vec<Realization> {
    let cat = enumerate_vertex_transitive(2).unwrap();
    cat.entries
        .iter()
        .flat_map(|e| {
            let ext = GroupExtensions::new(GroupFrame::new(Arc::new(e.group.clone()), Some(e.id)));
            generate_saturated_with(&ext, false)
        })
        .collect()
}

pub fn subgroup_and_voltage_connectivity_agree() {
    let all = d2_realizations();
    let mut disconnected = 0;
    for r in &all {
        assert!(r.is_connected());
        assert!(voltage_connectivity(r));
        let non = r.with_saturation(false);
        let c = non.is_connected();
        assert_eq!(c, voltage_connectivity(&non), "{r:?}");
        disconnected += usize::from(!c);
    }
    assert!(disconnected > 0);
}

/// Ball orders of the graph where every vertex meets its block partner
/// and both vertices of each neighbouring block, by breadth-first search
/// on explicit coordinates.
fn full_graph_growth(dim: usize, radius: usize) -> Vec<usize> {
    let start = (ZERO, 0u8);
    let mut dist: FxHashMap<(Vector, u8), usize> = FxHashMap::default();
    dist.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    while let Some((v, e)) = queue.pop_front() {
        let d = dist[&(v, e)];
        if d == radius {
            continue;
        }
        let mut next = vec![(v, 1 - e)];
        for dir in grid::directions(dim) {
            next.push((grid::add(v, dir), 0));
            next.push((grid::add(v, dir), 1));
        }
        for n in next {
            dist.entry(n).or_insert_with(|| {
                queue.push_back(n);
                d + 1
            });
        }
    }
    (1..=radius).map(|r| dist.values().filter(|&&d| d <= r).count()).collect()
}

fn full_connection(dim: usize) -> Realization {
    let central = SignedPermutation::central(dim);
    let mut gens: Vec<GridAutomorphism> =
        (0..dim).map(|k| GridAutomorphism::translation(dim, grid::unit(dim, k, false))).collect();
    gens.push(GridAutomorphism::linear(central));
    let mut x = gens[..dim].to_vec();
    for k in 0..dim {
        for neg in [false, true] {
            x.push(GridAutomorphism::new(central, grid::unit(dim, k, neg)));
        }
    }
    RealizationSpec {
        group: Arc::new(SpaceGroupNF::closure(dim, &gens)),
        group_id: None,
        l: vec![SignedPermutation::identity(dim)],
        m: central,
        x,
        saturated: true,
    }
    .validate()
    .unwrap()
}

pub fn full_connection_growth_matches_explicit_search() {
    let r = full_connection(3);
    assert_eq!(r.degree(), 13);
    let closed: Vec<usize> = (1..=10).map(|r: usize| 2 * (2 * r + 1) * (2 * r * r + 2 * r + 3) / 3).collect();
    assert_eq!(closed, [14, 50, 126, 258, 462, 754, 1150, 1666, 2318, 3122]);
    assert_eq!(growth(&r), closed);
    assert_eq!(growth(&r), full_graph_growth(3, 10));
    let r2 = full_connection(2);
    assert_eq!(growth_from(&r2, ExtVertex::origin(), 8), full_graph_growth(2, 8));
}

fn check_vertex_map(a: &Realization, b: &Realization, map: impl Fn(ExtVertex) -> ExtVertex) {
    let ball = ball(a, 2, ExtVertex::origin());
    let images: Vec<ExtVertex> = ball.vertices.iter().map(|u| map(*u)).collect();
    let distinct: FxHashSet<&ExtVertex> = images.iter().collect();
    assert_eq!(distinct.len(), images.len(), "vertex map is not injective");
    for (i, u) in ball.vertices.iter().enumerate() {
        for (j, w) in ball.vertices.iter().enumerate().skip(i + 1) {
            assert_eq!(a.adjacent(*u, *w), b.adjacent(images[i], images[j]), "{u:?} {w:?}");
            assert_eq!(u.v == w.v, images[i].v == images[j].v, "blocks not preserved");
        }
    }
}

pub fn equivalent_realizations_share_invariants() {
    let all = d2_realizations();
    let mut exts: BTreeMap<usize, GroupExtensions> = BTreeMap::new();
    let mut classes: BTreeMap<_, Vec<&Realization>> = BTreeMap::new();
    for r in &all {
        let ext = exts.entry(r.group_id().unwrap()).or_insert_with(|| GroupExtensions::new(r.frame().clone()));
        classes.entry(classify(ext, r).key).or_default().push(r);
    }
    let mut pairs = 0;
    for members in classes.values() {
        let first = members[0];
        for other in &members[1..] {
            for saturated in [true, false] {
                let (a, b) = (first.with_saturation(saturated), other.with_saturation(saturated));
                if !a.is_connected() {
                    assert!(!b.is_connected());
                    continue;
                }
                let w = are_equivalent(&a, &b).expect("same key means equivalent");
                assert_eq!(growth(&a), growth(&b));
                assert_eq!(a.combination_string(), b.combination_string());
                check_vertex_map(&a, &b, |u| w.map_vertex(&a, &b, u));
                let root = ExtVertex::origin();
                assert_eq!(ball(&a, 3, root).certificate(true), ball(&b, 3, root).certificate(true));
                pairs += 1;
            }
        }
    }
    assert!(pairs > 50, "{pairs}");
}

pub fn maximal_form_keeps_the_graph() {
    let all = d2_realizations();
    let mut lifted = 0;
    for r in &all {
        let ext = GroupExtensions::new(r.frame().clone());
        for r in [r.clone(), r.with_saturation(false)] {
            let m = ext.maximal_form(&r);
            if m.group() != r.group() {
                lifted += 1;
            }
            check_vertex_map(&r, &m, |u| m.vertex_of(&r.element_of(u)));
            assert_eq!(growth_from(&r, ExtVertex::origin(), 5), growth_from(&m, ExtVertex::origin(), 5));
        }
    }
    assert!(lifted > 0);
}

pub fn certificates_survive_relabelling() {
    let all = d2_realizations();
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..100 {
        let r = all.choose(&mut rng).unwrap();
        let b = ball(r, rng.gen_range(1..=4), ExtVertex::origin());
        for blocks in [false, true] {
            let g = b.colored_graph(blocks);
            let mut perm: Vec<usize> = (0..g.len()).collect();
            perm.shuffle(&mut rng);
            let h = g.relabel(&perm);
            assert_eq!(grid2x_core::canon::canonical_form(&g).form, grid2x_core::canon::canonical_form(&h).form);
        }
    }
}

pub fn thinning_ignores_input_order() {
    let mut all = d2_realizations();
    let reference: Vec<String> = thin(&all).iter().map(|r| format!("{r:?}")).collect();
    assert_eq!(reference.len(), 49);
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..3 {
        all.shuffle(&mut rng);
        let again: Vec<String> = thin(&all).iter().map(|r| format!("{r:?}")).collect();
        assert_eq!(again, reference);
    }
}

/// Generating only maximal realizations loses no class.
pub fn maximal_only_generation_keeps_every_class() {
    let cat = enumerate_vertex_transitive(2).unwrap();
    let maximal: Vec<Realization> = cat
        .entries
        .iter()
        .flat_map(|e| {
            let ext = GroupExtensions::new(GroupFrame::new(Arc::new(e.group.clone()), Some(e.id)));
            generate_saturated_with(&ext, true)
        })
        .collect();
    let key = |r: &Realization| classify(&GroupExtensions::new(r.frame().clone()), r).key;
    let a: Vec<_> = thin(&maximal).iter().map(key).collect();
    let b: Vec<_> = thin(&d2_realizations()).iter().map(key).collect();
    assert_eq!(a, b);
}

// Second, independent enumeration of vertex-transitive groups for d <= 2:
// a group is generated by its origin stabilizer `S` and one element per
// `S`-orbit of neighbours moving the origin there.

pub fn oracle(dim: usize) -> Vec<SpaceGroupNF> {
    let points = hyperoctahedral(dim).unwrap();
    let mut found: Vec<SpaceGroupNF> = Vec::new();
    for s in subgroup_class_reps(dim) {
        let s_elems: Vec<GridAutomorphism> = s.elems().into_iter().map(GridAutomorphism::linear).collect();
        // One direction per S-orbit.
        let mut reps = Vec::new();
        let mut seen = Vec::new();
        for e in directions(dim) {
            if !seen.contains(&e) {
                reps.push(e);
                seen.extend(s_elems.iter().map(|g| g.apply(e)));
            }
        }
        let mut choice = vec![0usize; reps.len()];
        loop {
            let mut gens = s_elems.clone();
            gens.extend(reps.iter().zip(&choice).map(|(&e, &c)| GridAutomorphism::new(points[c], e)));
            let h = SpaceGroupNF::closure(dim, &gens);
            if h.is_vertex_transitive() && h.stabilizer() == s && !found.iter().any(|f| f.are_conjugate(&h).is_some()) {
                found.push(h);
            }
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < points.len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    found
}

pub fn assert_bijection(cat: &GroupCatalog, other: &[SpaceGroupNF]) {
    assert_eq!(cat.len(), other.len());
    for h in other {
        let hits = cat.entries.iter().filter(|e| e.group.are_conjugate(h).is_some()).count();
        assert_eq!(hits, 1, "{h:?}");
    }
}

pub fn dimension_one_matches_oracle() {
    let groups = oracle(1);
    assert_eq!(groups.len(), 3);
    assert_bijection(&enumerate_vertex_transitive(1).unwrap(), &groups);
}

pub fn dimension_two_matches_oracle() {
    let groups = oracle(2);
    assert_bijection(&enumerate_vertex_transitive(2).unwrap(), &groups);
}

fn catalog_texts(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Two full d=2 runs with different worker counts write identical files.
pub fn independent_runs_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, jobs) in dirs.iter().zip([1, 4]) {
        let mut cfg = PipelineConfig::new(2);
        cfg.jobs = jobs;
        cfg.out = Some(dir.path().to_path_buf());
        run_pipeline(&cfg).unwrap();
    }
    let (a, b) = (catalog_texts(dirs[0].path()), catalog_texts(dirs[1].path()));
    assert!(a.iter().any(|(n, _)| n == "iso-classes.cat"));
    assert_eq!(a, b);
}
