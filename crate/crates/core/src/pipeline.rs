//! End-to-end runs: groups, stabilizers, realizations, thinning,
//! desaturation, growth and isomorphism classes, with stage checkpoints.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::catalog::{
    sha256_hex, CatalogFile, GrowthRecord, Header, IsoClassRecord, Label, RealizationRecord, Record, Stage,
    FORMAT_VERSION,
};
use crate::enumeration::{
    classify_stabilizers, enumerate_vertex_transitive, CatalogEntry, GroupCatalog, StabilizerClassification,
};
use crate::error::{Error, Result};
use crate::generate::{generate_saturated_with, thin, GroupExtensions};
use crate::periodic::{growth, iso_classes, IsoClassConfig};
use crate::realization::{GroupFrame, Realization};

/// Steps of a full run, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PipelineStage {
    EnumGroups,
    ClassifyStabilizers,
    GenRealizations,
    Thin,
    Desaturate,
    Growth,
    IsoClasses,
}

impl PipelineStage {
    pub const ALL: [PipelineStage; 7] = [
        PipelineStage::EnumGroups,
        PipelineStage::ClassifyStabilizers,
        PipelineStage::GenRealizations,
        PipelineStage::Thin,
        PipelineStage::Desaturate,
        PipelineStage::Growth,
        PipelineStage::IsoClasses,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PipelineStage::EnumGroups => "enum-groups",
            PipelineStage::ClassifyStabilizers => "classify-stabilizers",
            PipelineStage::GenRealizations => "gen-realizations",
            PipelineStage::Thin => "thin",
            PipelineStage::Desaturate => "desaturate",
            PipelineStage::Growth => "growth",
            PipelineStage::IsoClasses => "iso-classes",
        }
    }
}

impl fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PipelineStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PipelineStage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub dim: usize,
    /// Last stage to run.
    pub until: PipelineStage,
    pub jobs: usize,
    /// Stage catalogs are read from and written to this directory.
    pub checkpoint: Option<PathBuf>,
    /// Catalogs, tables and the summary are written here.
    pub out: Option<PathBuf>,
    pub iso: IsoClassConfig,
    /// Stop with [`Error::BudgetExhausted`] after the first stage that ends
    /// past this much wall time.
    pub budget: Option<Duration>,
}

impl PipelineConfig {
    pub fn new(dim: usize) -> Self {
        PipelineConfig {
            dim,
            until: PipelineStage::IsoClasses,
            jobs: 1,
            checkpoint: None,
            out: None,
            iso: IsoClassConfig::default(),
            budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::grid::MAX_DIM).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.iso.max_radius < self.iso.radius {
            return Err(Error::Config("max radius below the starting radius".into()));
        }
        Ok(())
    }
}

/// Config digest of a stage output: hash of the input digest and the
/// parameters of the step, truncated to 16 hex digits.
pub fn chain_digest(input: &str, step: &str) -> String {
    sha256_hex(format!("{input}\n{step}").as_bytes())[..16].to_string()
}

pub fn groups_digest(dim: usize) -> String {
    chain_digest("", &format!("grid2x/{FORMAT_VERSION};groups;dim={dim}"))
}

pub const GENERATE_STEP: &str = "generated;maximal-only";
pub const THIN_STEP: &str = "thinned";
pub const DESATURATE_STEP: &str = "desaturated";
pub const GROWTH_STEP: &str = "growth;radius=10";

pub fn iso_step(cfg: &IsoClassConfig) -> String {
    format!(
        "iso-classes;radius={};max-radius={};scales={:?};node-limit={}",
        cfg.radius, cfg.max_radius, cfg.scales, cfg.node_limit
    )
}

pub fn header(dim: usize, stage: Stage, config: String) -> Header {
    Header { version: FORMAT_VERSION, dim, stage, config }
}

pub fn groups_file(cat: &GroupCatalog) -> CatalogFile {
    CatalogFile::new(
        header(cat.dim, Stage::Groups, groups_digest(cat.dim)),
        cat.entries.iter().cloned().map(Record::Group).collect(),
    )
}

/// Group catalog held by a `groups` file.
pub fn group_catalog(file: &CatalogFile) -> Result<GroupCatalog> {
    expect_stage(file, Stage::Groups)?;
    let entries: Vec<CatalogEntry> = file.groups().cloned().collect();
    if entries.iter().enumerate().any(|(i, e)| e.id != i + 1) {
        return Err(Error::parse(2, 1, "group ids must be 1, 2, 3, ..."));
    }
    Ok(GroupCatalog { dim: file.header.dim, entries })
}

fn expect_stage(file: &CatalogFile, stage: Stage) -> Result<()> {
    if file.header.stage != stage {
        return Err(Error::parse(1, 1, format!("expected a {stage} catalog, found {}", file.header.stage)));
    }
    Ok(())
}

/// Saturated class-I realizations of every catalogued group whose group is
/// the full block-preserving group of their graph.
pub fn gen_realizations(cat: &GroupCatalog) -> Vec<Realization> {
    cat.entries
        .par_iter()
        .flat_map(|e| {
            let ext = GroupExtensions::new(GroupFrame::new(Arc::new(e.group.clone()), Some(e.id)));
            generate_saturated_with(&ext, true)
        })
        .collect()
}

pub fn number(reals: Vec<Realization>) -> Vec<RealizationRecord> {
    reals.into_iter().enumerate().map(|(i, realization)| RealizationRecord { id: i + 1, realization }).collect()
}

pub fn realizations_file(
    dim: usize,
    stage: Stage,
    config: String,
    groups: &[CatalogEntry],
    records: Vec<RealizationRecord>,
) -> CatalogFile {
    CatalogFile::of_realizations(header(dim, stage, config), groups, records)
}

pub fn realization_records(file: &CatalogFile) -> Vec<RealizationRecord> {
    file.realizations().cloned().collect()
}

/// Non-saturated versions that stay connected, and the saturated records
/// whose non-saturated version is disconnected. Ids are kept.
pub fn desaturate_all(thinned: &[RealizationRecord]) -> Result<(Vec<RealizationRecord>, Vec<RealizationRecord>)> {
    let results: Vec<Option<Realization>> =
        thinned.par_iter().map(|r| r.realization.desaturate()).collect::<Result<_>>()?;
    let mut kept = Vec::new();
    let mut disconnected = Vec::new();
    for (r, d) in thinned.iter().zip(results) {
        match d {
            Some(realization) => kept.push(RealizationRecord { id: r.id, realization }),
            None => disconnected.push(r.clone()),
        }
    }
    Ok((kept, disconnected))
}

pub fn growth_records(records: &[RealizationRecord]) -> Vec<GrowthRecord> {
    records.par_iter().map(|r| GrowthRecord { label: r.label(), growth: growth(&r.realization) }).collect()
}

/// Isomorphism classes numbered with non-singleton classes first, each
/// group ordered by its least member; members listed saturated-first by id.
pub fn iso_records(records: &[RealizationRecord], cfg: &IsoClassConfig) -> (Vec<IsoClassRecord>, Vec<(Label, Label)>) {
    let reals: Vec<Realization> = records.iter().map(|r| r.realization.clone()).collect();
    let part = iso_classes(&reals, cfg);
    let mut classes: Vec<Vec<Label>> = part
        .classes
        .iter()
        .map(|c| {
            let mut m: Vec<Label> = c.iter().map(|&i| records[i].label()).collect();
            m.sort_by_key(Label::listing_key);
            m
        })
        .collect();
    classes.sort_by_key(|c| (c.len() == 1, c[0].listing_key()));
    let out = classes.into_iter().enumerate().map(|(k, members)| IsoClassRecord { class: k + 1, members }).collect();
    let mut undecided: Vec<(Label, Label)> =
        part.undecided.iter().map(|&(a, b)| (records[a].label(), records[b].label())).collect();
    undecided.sort_by_key(|(a, b)| (a.listing_key(), b.listing_key()));
    (out, undecided)
}

pub fn iso_file(dim: usize, config: String, classes: &[IsoClassRecord], undecided: &[(Label, Label)]) -> CatalogFile {
    let mut records: Vec<Record> = classes.iter().cloned().map(Record::IsoClass).collect();
    records.extend(undecided.iter().map(|&(a, b)| Record::Undecided(a, b)));
    CatalogFile::new(header(dim, Stage::IsoClasses, config), records)
}

/// Tables emitted by [`emit_table`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    Stabilizers,
    Combinations,
    IsoClasses,
}

/// Inputs for [`emit_table`]; each table needs only some of them.
#[derive(Default)]
pub struct TableInputs<'a> {
    pub stabilizers: Option<&'a StabilizerClassification>,
    pub saturated: Option<&'a [RealizationRecord]>,
    pub non_saturated: Option<&'a [RealizationRecord]>,
    pub iso_classes: Option<&'a [IsoClassRecord]>,
}

pub fn emit_table(which: TableKind, inputs: &TableInputs<'_>) -> Result<String> {
    let mut out = String::new();
    match which {
        TableKind::Stabilizers => {
            let cls = inputs.stabilizers.ok_or_else(|| Error::MissingInput("stabilizer classification".into()))?;
            out.push_str("row\tclass\tstructure\tgenerators\tgroups\n");
            for (k, c) in cls.stabilizers.iter().enumerate() {
                let gens: Vec<String> = c.generators.iter().map(|g| g.to_string()).collect();
                let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
                let gens = if gens.is_empty() { "-".to_string() } else { gens.join(" ") };
                writeln!(out, "{}\t{}\t{}\t{}\t{}", k + 1, c.class, c.structure, gens, members.join(",")).unwrap();
            }
        }
        TableKind::Combinations => {
            let sat = inputs.saturated.ok_or_else(|| Error::MissingInput("saturated realizations".into()))?;
            let non = inputs.non_saturated.ok_or_else(|| Error::MissingInput("non-saturated realizations".into()))?;
            let mut census: BTreeMap<String, (usize, usize)> = BTreeMap::new();
            for r in sat {
                census.entry(r.realization.combination_string()).or_default().0 += 1;
            }
            for r in non {
                census.entry(r.realization.combination_string()).or_default().1 += 1;
            }
            out.push_str("combination\tsaturated\tnon_saturated\ttotal\n");
            for (s, (a, b)) in census {
                writeln!(out, "{s}\t{a}\t{b}\t{}", a + b).unwrap();
            }
        }
        TableKind::IsoClasses => {
            let classes = inputs.iso_classes.ok_or_else(|| Error::MissingInput("isomorphism classes".into()))?;
            out.push_str("class\tsize\tmembers\n");
            for c in classes {
                let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
                writeln!(out, "{}\t{}\t{}", c.class, c.members.len(), members.join(",")).unwrap();
            }
        }
    }
    Ok(out)
}

/// Headline counts of a run; stages not reached are `None`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineSummary {
    pub dim: usize,
    pub groups: Option<usize>,
    pub stabilizer_classes: Option<usize>,
    pub generated: Option<usize>,
    pub saturated: Option<usize>,
    pub non_saturated: Option<usize>,
    pub disconnected: Option<usize>,
    pub combinations: Option<usize>,
    pub growth_records: Option<usize>,
    pub iso_classes: Option<usize>,
    pub iso_classes_saturated: Option<usize>,
    pub iso_classes_non_saturated: Option<usize>,
    pub non_singleton_classes: Option<usize>,
    pub undecided: Option<usize>,
}

impl PipelineSummary {
    /// Saturated plus non-saturated class-I representatives.
    pub fn class_one(&self) -> Option<usize> {
        Some(self.saturated? + self.non_saturated?)
    }

    fn rows(&self) -> Vec<(&'static str, Option<usize>)> {
        vec![
            ("dim", Some(self.dim)),
            ("groups", self.groups),
            ("stabilizer_classes", self.stabilizer_classes),
            ("generated", self.generated),
            ("saturated", self.saturated),
            ("non_saturated", self.non_saturated),
            ("class_one", self.class_one()),
            ("disconnected", self.disconnected),
            ("combinations", self.combinations),
            ("growth_records", self.growth_records),
            ("iso_classes", self.iso_classes),
            ("iso_classes_saturated", self.iso_classes_saturated),
            ("iso_classes_non_saturated", self.iso_classes_non_saturated),
            ("non_singleton_classes", self.non_singleton_classes),
            ("undecided", self.undecided),
        ]
    }
}

impl fmt::Display for PipelineSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.rows() {
            if let Some(v) = v {
                writeln!(f, "{k}\t{v}")?;
            }
        }
        Ok(())
    }
}

/// Writes `text` to `path` through a temporary file, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_catalog(path: &Path) -> Result<CatalogFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    text.parse()
}

/// Reads `<checkpoint>/<name>.cat` when its header equals `expect`;
/// otherwise runs `compute` and stores the result there. Unreadable or
/// malformed checkpoints are errors, stale ones are replaced.
pub fn load_or_compute(
    checkpoint: Option<&Path>,
    name: &str,
    expect: &Header,
    compute: impl FnOnce() -> Result<CatalogFile>,
) -> Result<CatalogFile> {
    let path = checkpoint.map(|d| d.join(format!("{name}.cat")));
    let stop = |p: &Path, e: Error| Error::Checkpoint { path: p.display().to_string(), msg: e.to_string() };
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        let text = fs::read_to_string(p).map_err(|e| stop(p, e.into()))?;
        let file: CatalogFile = text.parse().map_err(|e| stop(p, e))?;
        if file.header == *expect {
            return Ok(file);
        }
    }
    let file = compute()?;
    debug_assert_eq!(file.header, *expect);
    if let Some(p) = path {
        write_atomic(&p, &file.to_string()).map_err(|e| stop(&p, e))?;
    }
    Ok(file)
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    start: Instant,
}

impl Run<'_> {
    fn stage(&self, name: &str, expect: &Header, compute: impl FnOnce() -> Result<CatalogFile>) -> Result<CatalogFile> {
        load_or_compute(self.cfg.checkpoint.as_deref(), name, expect, compute)
    }

    fn output(&self, name: &str, text: &str) -> Result<()> {
        match &self.cfg.out {
            Some(dir) => write_atomic(&dir.join(name), text),
            None => Ok(()),
        }
    }

    /// Budget check between stages.
    fn checkpoint_stop(&self, done: PipelineStage) -> Result<bool> {
        if done >= self.cfg.until {
            return Ok(true);
        }
        if self.cfg.budget.is_some_and(|b| self.start.elapsed() > b) {
            return Err(Error::BudgetExhausted { after: done.to_string() });
        }
        Ok(false)
    }
}

/// Runs the stages up to `cfg.until` on a pool of `cfg.jobs` threads.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run_stages(cfg))
}

fn run_stages(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    let run = Run { cfg, start: Instant::now() };
    let dim = cfg.dim;
    let mut summary = PipelineSummary { dim, ..Default::default() };

    let groups_hdr = header(dim, Stage::Groups, groups_digest(dim));
    let groups = run.stage("groups", &groups_hdr, || {
        let cat = enumerate_vertex_transitive(dim)?;
        Ok(groups_file(&cat))
    })?;
    run.output("groups.cat", &groups.to_string())?;
    let cat = group_catalog(&groups)?;
    summary.groups = Some(cat.len());
    if run.checkpoint_stop(PipelineStage::EnumGroups)? {
        return finish(&run, summary);
    }

    let cls = classify_stabilizers(&cat);
    summary.stabilizer_classes = Some(cls.stabilizers.len());
    let inputs = TableInputs { stabilizers: Some(&cls), ..Default::default() };
    run.output("stabilizers.tsv", &emit_table(TableKind::Stabilizers, &inputs)?)?;
    if run.checkpoint_stop(PipelineStage::ClassifyStabilizers)? {
        return finish(&run, summary);
    }

    let gen_hdr = header(dim, Stage::Generated, chain_digest(&groups_hdr.config, GENERATE_STEP));
    let generated = run.stage("generated", &gen_hdr, || {
        Ok(realizations_file(
            dim,
            Stage::Generated,
            gen_hdr.config.clone(),
            &cat.entries,
            number(gen_realizations(&cat)),
        ))
    })?;
    run.output("generated.cat", &generated.to_string())?;
    summary.generated = Some(generated.realizations().count());
    if run.checkpoint_stop(PipelineStage::GenRealizations)? {
        return finish(&run, summary);
    }

    let thin_hdr = header(dim, Stage::Thinned, chain_digest(&gen_hdr.config, THIN_STEP));
    let thinned = run.stage("thinned", &thin_hdr, || {
        let reals: Vec<Realization> = generated.realizations().map(|r| r.realization.clone()).collect();
        Ok(realizations_file(dim, Stage::Thinned, thin_hdr.config.clone(), &cat.entries, number(thin(&reals))))
    })?;
    run.output("thinned.cat", &thinned.to_string())?;
    let sat = realization_records(&thinned);
    summary.saturated = Some(sat.len());
    if run.checkpoint_stop(PipelineStage::Thin)? {
        return finish(&run, summary);
    }

    let desat_cfg = chain_digest(&thin_hdr.config, DESATURATE_STEP);
    let desat_hdr = header(dim, Stage::Desaturated, desat_cfg.clone());
    let disc_hdr = header(dim, Stage::Disconnected, desat_cfg.clone());
    let mut split = None;
    let mut compute_split = || -> Result<(Vec<RealizationRecord>, Vec<RealizationRecord>)> {
        if split.is_none() {
            split = Some(desaturate_all(&sat)?);
        }
        Ok(split.clone().unwrap())
    };
    let desaturated = run.stage("desaturated", &desat_hdr, || {
        let (kept, _) = compute_split()?;
        Ok(realizations_file(dim, Stage::Desaturated, desat_cfg.clone(), &cat.entries, kept))
    })?;
    let disconnected = run.stage("disconnected", &disc_hdr, || {
        let (_, lost) = compute_split()?;
        Ok(realizations_file(dim, Stage::Disconnected, desat_cfg.clone(), &cat.entries, lost))
    })?;
    run.output("desaturated.cat", &desaturated.to_string())?;
    run.output("disconnected.cat", &disconnected.to_string())?;
    let non = realization_records(&desaturated);
    summary.non_saturated = Some(non.len());
    summary.disconnected = Some(disconnected.realizations().count());
    let inputs = TableInputs { saturated: Some(&sat), non_saturated: Some(&non), ..Default::default() };
    let combos = emit_table(TableKind::Combinations, &inputs)?;
    summary.combinations = Some(combos.lines().count() - 1);
    run.output("combinations.tsv", &combos)?;
    if run.checkpoint_stop(PipelineStage::Desaturate)? {
        return finish(&run, summary);
    }

    let mut both = sat.clone();
    both.extend(non.iter().cloned());
    let growth_hdr = header(dim, Stage::Growth, chain_digest(&desat_cfg, GROWTH_STEP));
    let growth = run.stage("growth", &growth_hdr, || {
        let recs = growth_records(&both);
        Ok(CatalogFile::new(growth_hdr.clone(), recs.into_iter().map(Record::Growth).collect()))
    })?;
    run.output("growth.cat", &growth.to_string())?;
    summary.growth_records = Some(growth.records.len());
    if run.checkpoint_stop(PipelineStage::Growth)? {
        return finish(&run, summary);
    }

    let iso_hdr = header(dim, Stage::IsoClasses, chain_digest(&desat_cfg, &iso_step(&cfg.iso)));
    let iso = run.stage("iso-classes", &iso_hdr, || {
        let (classes, undecided) = iso_records(&both, &cfg.iso);
        Ok(iso_file(dim, iso_hdr.config.clone(), &classes, &undecided))
    })?;
    run.output("iso-classes.cat", &iso.to_string())?;
    let classes: Vec<IsoClassRecord> = iso
        .records
        .iter()
        .filter_map(|r| match r {
            Record::IsoClass(c) => Some(c.clone()),
            _ => None,
        })
        .collect();
    summary.iso_classes = Some(classes.len());
    summary.iso_classes_saturated = Some(classes.iter().filter(|c| c.members.iter().any(|m| m.saturated)).count());
    summary.iso_classes_non_saturated = Some(classes.iter().filter(|c| c.members.iter().any(|m| !m.saturated)).count());
    summary.non_singleton_classes = Some(classes.iter().filter(|c| c.members.len() > 1).count());
    summary.undecided = Some(iso.records.len() - classes.len());
    let inputs = TableInputs { iso_classes: Some(&classes), ..Default::default() };
    run.output("iso-classes.tsv", &emit_table(TableKind::IsoClasses, &inputs)?)?;
    finish(&run, summary)
}

fn finish(run: &Run<'_>, summary: PipelineSummary) -> Result<PipelineSummary> {
    run.output("summary.txt", &summary.to_string())?;
    Ok(summary)
}

/// Group catalog rebuilt from the groups embedded in a realization file.
pub fn embedded_groups(file: &CatalogFile) -> Vec<CatalogEntry> {
    file.groups().cloned().collect()
}

/// Realization records of one or more catalogs from the same run, saturated
/// stages first, with the config digest the union descends from. A
/// desaturated catalog must derive from the thinned catalog given with it.
pub fn combine_inputs(files: &[CatalogFile]) -> Result<(usize, String, Vec<RealizationRecord>)> {
    let first = files.first().ok_or_else(|| Error::MissingInput("no input catalogs".into()))?;
    let dim = first.header.dim;
    let mut sorted: Vec<&CatalogFile> = files.iter().collect();
    sorted.sort_by_key(|f| f.header.stage);
    for f in &sorted {
        if f.header.dim != dim {
            return Err(Error::StaleInput(format!("dimensions {dim} and {} mixed", f.header.dim)));
        }
        if !matches!(f.header.stage, Stage::Generated | Stage::Thinned | Stage::Desaturated) {
            return Err(Error::StaleInput(format!("{} catalog does not hold realizations to compare", f.header.stage)));
        }
    }
    for w in sorted.windows(2) {
        let (a, b) = (&w[0].header, &w[1].header);
        let linked = a.stage == Stage::Thinned
            && b.stage == Stage::Desaturated
            && chain_digest(&a.config, DESATURATE_STEP) == b.config;
        if !linked {
            return Err(Error::StaleInput(format!("{} ({}) and {} ({})", a.stage, a.config, b.stage, b.config)));
        }
    }
    let base = sorted.last().unwrap().header.config.clone();
    let records = sorted.iter().flat_map(|f| f.realizations().cloned()).collect();
    Ok((dim, base, records))
}
