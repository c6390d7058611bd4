//! Acceptance suite: one line per criterion.
//!
//! Runs without the libtest harness so the report reaches stdout. Set
//! `GRID2X_ACCEPTANCE=desk` to skip the long d=3 criteria. The process
//! fails when the set of failing criteria differs from
//! [`KNOWN_DISCREPANCIES`], so a regression and an unexpected fix both
//! surface.

mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use grid2x_core::enumeration::{classify_stabilizers, enumerate_vertex_transitive};
use grid2x_core::pipeline::{run_pipeline, PipelineConfig, PipelineSummary};

/// Criteria whose published values this implementation does not reproduce;
/// the measured values and the analysis are in the decisions ledger.
const KNOWN_DISCREPANCIES: &[u32] = &[4, 5];

const STABILIZER_BUDGET: Duration = Duration::from_secs(60);
const D2_CENSUS_BUDGET: Duration = Duration::from_secs(10 * 60);
const PROPERTY_BUDGET: Duration = Duration::from_secs(15 * 60);

/// Structure names of the 33 origin stabilizers with multiplicities.
const STABILIZER_STRUCTURES: &[(&str, usize)] = &[
    ("1", 1),
    ("C2", 5),
    ("C3", 1),
    ("C2xC2", 7),
    ("C4", 2),
    ("C6", 1),
    ("S3", 2),
    ("C2xC2xC2", 2),
    ("C4xC2", 1),
    ("D8", 4),
    ("A4", 1),
    ("D12", 1),
    ("C2xD8", 1),
    ("C2xA4", 1),
    ("S4", 2),
    ("C2xS4", 1),
];

struct Outcome {
    id: u32,
    kind: &'static str,
    title: &'static str,
    pass: Option<bool>,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn pinned(name: &str, got: Option<usize>, want: usize) -> (bool, String) {
    match got {
        Some(g) => (g == want, format!("{name}={g} (expected {want})")),
        None => (false, format!("{name}=missing (expected {want})")),
    }
}

fn all_pinned(checks: &[(bool, String)]) -> (bool, String) {
    (checks.iter().all(|c| c.0), checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join(", "))
}

fn stabilizers() -> (bool, String) {
    let ((cat, cls), took) = timed(|| {
        let cat = enumerate_vertex_transitive(3).expect("d=3 enumeration");
        let cls = classify_stabilizers(&cat);
        (cat, cls)
    });
    let mut got: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &cls.stabilizers {
        *got.entry(c.structure.name()).or_default() += 1;
    }
    let want: BTreeMap<&str, usize> = STABILIZER_STRUCTURES.iter().copied().collect();
    let pass = cls.stabilizers.len() == 33 && got == want && took < STABILIZER_BUDGET;
    let detail = format!(
        "classes={} over {} groups, structure multiset {}, {:.1}s (budget {}s)",
        cls.stabilizers.len(),
        cat.len(),
        if got == want { "matches" } else { "differs" },
        took.as_secs_f64(),
        STABILIZER_BUDGET.as_secs()
    );
    (pass, detail)
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn full_run(dim: usize) -> (PipelineSummary, Duration) {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut cfg = PipelineConfig::new(dim);
    cfg.jobs = jobs();
    cfg.out = Some(dir.path().to_path_buf());
    let (summary, took) = timed(|| run_pipeline(&cfg));
    (summary.expect("pipeline run"), took)
}

fn d2_census() -> (bool, String) {
    let (s, took) = full_run(2);
    let (ok, detail) = pinned("class_one", s.class_one(), 87);
    (
        ok && took < D2_CENSUS_BUDGET,
        format!("{detail}, {:.1}s (budget {}s)", took.as_secs_f64(), D2_CENSUS_BUDGET.as_secs()),
    )
}

/// Runs a property check, reporting its panic message instead of unwinding.
fn property(name: &'static str, check: fn()) -> (bool, String) {
    match catch_unwind(AssertUnwindSafe(check)) {
        Ok(()) => (true, format!("{name} ok")),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("{name} FAILED: {msg}"))
        }
    }
}

fn property_suites() -> (bool, String) {
    let suites: [(&'static str, fn()); 6] = [
        ("a:membership", support::normal_form_agrees_with_word_enumeration),
        ("b:cocycle", support::every_normal_form_satisfies_the_cocycle_identity),
        ("c:connectivity", support::subgroup_and_voltage_connectivity_agree),
        ("d:growth", support::full_connection_growth_matches_explicit_search),
        ("e:equivalence", support::equivalent_realizations_share_invariants),
        ("f:determinism", support::independent_runs_are_byte_identical),
    ];
    let (results, took) = timed(|| suites.iter().map(|(n, f)| property(n, *f)).collect::<Vec<_>>());
    let (ok, detail) = all_pinned(&results);
    (
        ok && took < PROPERTY_BUDGET,
        format!("{detail}, {:.1}s (budget {}s)", took.as_secs_f64(), PROPERTY_BUDGET.as_secs()),
    )
}

fn main() -> ExitCode {
    let desk_only = std::env::var("GRID2X_ACCEPTANCE").is_ok_and(|v| v == "desk");
    let mut outcomes = Vec::new();
    let mut record = |id, kind, title, result: Option<(bool, String)>| {
        let (pass, detail) = match result {
            Some((p, d)) => (Some(p), d),
            None => (None, "skipped (GRID2X_ACCEPTANCE=desk)".to_string()),
        };
        let o = Outcome { id, kind, title, pass, detail };
        let verdict = match o.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        println!("criterion {} [{}] {}: {verdict} | {}", o.id, o.kind, o.title, o.detail);
        outcomes.push(o);
    };

    record(1, "desk", "d=3 origin stabilizers", Some(stabilizers()));
    record(2, "desk", "d=2 class-I census", Some(d2_census()));

    if desk_only {
        record(3, "extended", "d=3 group census", None);
        record(4, "extended", "d=3 realization census", None);
        record(5, "extended", "d=3 isomorphism classes", None);
    } else {
        let (s, took) = full_run(3);
        println!("d=3 pipeline finished in {:.1}s with {} workers", took.as_secs_f64(), jobs());
        record(3, "extended", "d=3 group census", Some(pinned("groups", s.groups, 786)));
        record(
            4,
            "extended",
            "d=3 realization census",
            Some(all_pinned(&[
                pinned("saturated", s.saturated, 2872),
                pinned("disconnected", s.disconnected, 171),
                pinned("non_saturated", s.non_saturated, 2701),
                pinned("combinations", s.combinations, 59),
            ])),
        );
        record(
            5,
            "extended",
            "d=3 isomorphism classes",
            Some(all_pinned(&[
                pinned("saturated_classes", s.iso_classes_saturated, 2792),
                pinned("non_saturated_classes", s.iso_classes_non_saturated, 2594),
                pinned("classes", s.iso_classes, 5350),
                pinned("non_singleton", s.non_singleton_classes, 199),
                pinned("undecided", s.undecided, 0),
            ])),
        );
    }

    record(6, "desk", "property suites", Some(property_suites()));
    record(
        7,
        "desk",
        "d=1 enumeration against oracle",
        Some(property("d1-oracle", support::dimension_one_matches_oracle)),
    );

    let failing: Vec<u32> = outcomes.iter().filter(|o| o.pass == Some(false)).map(|o| o.id).collect();
    let passed = outcomes.iter().filter(|o| o.pass == Some(true)).count();
    let ran = outcomes.iter().filter(|o| o.pass.is_some()).count();
    println!(
        "acceptance: {passed}/{ran} criteria pass; failing {failing:?}; known discrepancies {KNOWN_DISCREPANCIES:?}"
    );
    let unexpected = failing.iter().any(|id| !KNOWN_DISCREPANCIES.contains(id))
        || (!desk_only && KNOWN_DISCREPANCIES.iter().any(|id| !failing.contains(id)));
    if unexpected {
        println!("acceptance: failing set differs from the known discrepancies");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
