use std::fs;
use std::path::Path;

use grid2x_core::catalog::{CatalogFile, Stage};
use grid2x_core::pipeline::{run_pipeline, PipelineConfig, PipelineStage};

fn config(out: &Path, checkpoint: Option<&Path>) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(2);
    cfg.jobs = 2;
    cfg.out = Some(out.to_path_buf());
    cfg.checkpoint = checkpoint.map(Path::to_path_buf);
    cfg
}

fn files(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn d2_run_counts_and_outputs() {
    let out = tempfile::tempdir().unwrap();
    let summary = run_pipeline(&config(out.path(), None)).unwrap();
    assert_eq!(summary.groups, Some(36));
    assert_eq!(summary.stabilizer_classes, Some(8));
    assert_eq!(summary.saturated, Some(49));
    assert_eq!(summary.non_saturated, Some(38));
    assert_eq!(summary.class_one(), Some(87));
    assert_eq!(summary.disconnected, Some(11));
    assert_eq!(summary.iso_classes, Some(78));
    assert_eq!(summary.undecided, Some(0));

    let names: Vec<String> = files(out.path()).into_iter().map(|(n, _)| n).collect();
    for want in ["groups.cat", "thinned.cat", "desaturated.cat", "iso-classes.tsv", "stabilizers.tsv", "summary.txt"] {
        assert!(names.iter().any(|n| n == want), "{want} missing");
    }
    // Every catalog parses back to the identical text.
    for (name, text) in files(out.path()) {
        if name.ends_with(".cat") {
            let file: CatalogFile = text.parse().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(file.to_string(), text, "{name}");
        }
    }
    let summary_text = fs::read_to_string(out.path().join("summary.txt")).unwrap();
    assert!(summary_text.contains("class_one\t87\n"));
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let fresh = tempfile::tempdir().unwrap();
    run_pipeline(&config(fresh.path(), None)).unwrap();

    let ckpt = tempfile::tempdir().unwrap();
    let resumed = tempfile::tempdir().unwrap();
    let mut partial = config(resumed.path(), Some(ckpt.path()));
    partial.until = PipelineStage::Thin;
    let s = run_pipeline(&partial).unwrap();
    assert_eq!(s.non_saturated, None);
    assert!(ckpt.path().join("thinned.cat").exists());
    assert!(!ckpt.path().join("desaturated.cat").exists());

    let full = run_pipeline(&config(resumed.path(), Some(ckpt.path()))).unwrap();
    assert_eq!(full.class_one(), Some(87));
    assert_eq!(files(fresh.path()), files(resumed.path()));
    // A second resume reads every stage back from the checkpoints.
    let again = run_pipeline(&config(resumed.path(), Some(ckpt.path()))).unwrap();
    assert_eq!(again, full);
    assert_eq!(files(fresh.path()), files(resumed.path()));
}

#[test]
fn stale_checkpoints_are_recomputed() {
    let ckpt = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    run_pipeline(&config(out.path(), Some(ckpt.path()))).unwrap();
    let before: CatalogFile = fs::read_to_string(ckpt.path().join("iso-classes.cat")).unwrap().parse().unwrap();
    let mut cfg = config(out.path(), Some(ckpt.path()));
    cfg.iso.max_radius = 6;
    run_pipeline(&cfg).unwrap();
    let after: CatalogFile = fs::read_to_string(ckpt.path().join("iso-classes.cat")).unwrap().parse().unwrap();
    assert_eq!(after.header.stage, Stage::IsoClasses);
    assert_ne!(before.header.config, after.header.config);
    assert_eq!(before.records, after.records);
}

#[test]
fn corrupt_checkpoint_stops_the_run() {
    let ckpt = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = config(out.path(), Some(ckpt.path()));
    cfg.until = PipelineStage::EnumGroups;
    run_pipeline(&cfg).unwrap();
    let path = ckpt.path().join("groups.cat");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("G\t3\t", "G\t3x\t", 1)).unwrap();
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, grid2x_core::Error::Checkpoint { .. }), "{err}");
}
