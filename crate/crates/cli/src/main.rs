use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use grid2x_core::catalog::{CatalogFile, IsoClassRecord, Record, Stage};
use grid2x_core::enumeration::{classify_stabilizers, enumerate_vertex_transitive};
use grid2x_core::generate::thin;
use grid2x_core::periodic::IsoClassConfig;
use grid2x_core::pipeline::{self as pl, PipelineConfig, PipelineStage, TableInputs, TableKind};
use grid2x_core::realization::Realization;
use grid2x_core::Error;

const EXIT_INVALID: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_UNDECIDED: u8 = 4;

#[derive(Parser)]
#[command(name = "grid2x", version, about = "Census of symmetrical 2-extensions of the grid Z^d")]
struct Cli {
    /// Worker threads.
    #[arg(long, global = true, env = "GRID2X_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vertex-transitive subgroups of Aut(Z^d) up to conjugacy.
    EnumGroups {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Table of origin stabilizers up to conjugacy.
    ClassifyStabilizers {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Saturated class-I realizations over every group of a catalog.
    GenRealizations {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// One representative per equivalence class.
    Thin {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Non-saturated versions of thinned realizations.
    Desaturate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report_disconnected: PathBuf,
    },
    /// Growth sequences (radii 1 to 10).
    Growth {
        /// Thinned and/or desaturated catalogs of one run.
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition of the graphs into isomorphism classes.
    IsoClasses {
        /// Thinned and/or desaturated catalogs of one run.
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        radius: usize,
        #[arg(long, default_value_t = 8)]
        max_radius: usize,
        /// Search nodes per isomorphism attempt.
        #[arg(long, default_value_t = IsoClassConfig::default().node_limit)]
        node_limit: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        undecided: Option<PathBuf>,
    },
    /// Every stage in order, with checkpoints.
    Run {
        #[arg(long)]
        dim: usize,
        /// Output directory for catalogs, tables and summary.txt.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "iso-classes")]
        until: String,
        #[arg(long, default_value_t = 4)]
        radius: usize,
        #[arg(long, default_value_t = 8)]
        max_radius: usize,
        #[arg(long, default_value_t = IsoClassConfig::default().node_limit)]
        node_limit: usize,
        /// Stop after the first stage that ends past this many seconds.
        #[arg(long)]
        budget_secs: Option<u64>,
    },
    /// Tab-separated summary tables.
    EmitTable {
        #[arg(value_enum)]
        which: Which,
        /// Groups catalog (stabilizers).
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Thinned and desaturated catalogs (combinations) or an
        /// iso-classes catalog (iso-classes).
        #[arg(long = "in")]
        input: Vec<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Stabilizers,
    Combinations,
    IsoClasses,
}

fn read(path: &Path) -> Result<CatalogFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
    let file: CatalogFile = text.parse().with_context(|| format!("reading {}", path.display()))?;
    Ok(file)
}

fn write(path: &Path, text: &str) -> Result<()> {
    pl::write_atomic(path, text).with_context(|| format!("writing {}", path.display()))
}

fn expect_stage(file: &CatalogFile, path: &Path, stage: Stage) -> Result<()> {
    if file.header.stage != stage {
        return Err(Error::MissingInput(format!(
            "{} is a {} catalog, expected {stage}",
            path.display(),
            file.header.stage
        ))
        .into());
    }
    Ok(())
}

fn iso_config(radius: usize, max_radius: usize, node_limit: usize) -> IsoClassConfig {
    IsoClassConfig { radius, max_radius, node_limit, ..IsoClassConfig::default() }
}

/// Exit status for a successful command.
enum Outcome {
    Done,
    Undecided(usize),
}

fn execute(cmd: Command, jobs: usize) -> Result<Outcome> {
    match cmd {
        Command::EnumGroups { dim, out, checkpoint } => {
            let hdr = pl::header(dim, Stage::Groups, pl::groups_digest(dim));
            let file = pl::load_or_compute(checkpoint.as_deref(), "groups", &hdr, || {
                Ok(pl::groups_file(&enumerate_vertex_transitive(dim)?))
            })?;
            write(&out, &file.to_string())?;
            eprintln!("{} groups", file.records.len());
        }
        Command::ClassifyStabilizers { groups, out } => {
            let file = read(&groups)?;
            let cat = pl::group_catalog(&file)?;
            let cls = classify_stabilizers(&cat);
            let inputs = TableInputs { stabilizers: Some(&cls), ..Default::default() };
            write(&out, &pl::emit_table(TableKind::Stabilizers, &inputs)?)?;
            eprintln!("{} stabilizer classes", cls.stabilizers.len());
        }
        Command::GenRealizations { groups, dim, out } => {
            let file = read(&groups)?;
            let cat = pl::group_catalog(&file)?;
            if cat.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: cat.dim }.into());
            }
            let config = pl::chain_digest(&file.header.config, pl::GENERATE_STEP);
            let recs = pl::number(pl::gen_realizations(&cat));
            let n = recs.len();
            write(&out, &pl::realizations_file(dim, Stage::Generated, config, &cat.entries, recs).to_string())?;
            eprintln!("{n} realizations");
        }
        Command::Thin { input, out } => {
            let file = read(&input)?;
            expect_stage(&file, &input, Stage::Generated)?;
            let reals: Vec<Realization> = file.realizations().map(|r| r.realization.clone()).collect();
            let config = pl::chain_digest(&file.header.config, pl::THIN_STEP);
            let recs = pl::number(thin(&reals));
            let n = recs.len();
            let groups = pl::embedded_groups(&file);
            write(&out, &pl::realizations_file(file.header.dim, Stage::Thinned, config, &groups, recs).to_string())?;
            eprintln!("{n} saturated representatives");
        }
        Command::Desaturate { input, out, report_disconnected } => {
            let file = read(&input)?;
            expect_stage(&file, &input, Stage::Thinned)?;
            let config = pl::chain_digest(&file.header.config, pl::DESATURATE_STEP);
            let (kept, lost) = pl::desaturate_all(&pl::realization_records(&file))?;
            let (nk, nl) = (kept.len(), lost.len());
            let groups = pl::embedded_groups(&file);
            let dim = file.header.dim;
            write(&out, &pl::realizations_file(dim, Stage::Desaturated, config.clone(), &groups, kept).to_string())?;
            write(
                &report_disconnected,
                &pl::realizations_file(dim, Stage::Disconnected, config, &groups, lost).to_string(),
            )?;
            eprintln!("{nk} non-saturated, {nl} disconnected");
        }
        Command::Growth { input, out } => {
            let files = input.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
            let (dim, base, recs) = pl::combine_inputs(&files)?;
            let hdr = pl::header(dim, Stage::Growth, pl::chain_digest(&base, pl::GROWTH_STEP));
            let records = pl::growth_records(&recs).into_iter().map(Record::Growth).collect();
            write(&out, &CatalogFile::new(hdr, records).to_string())?;
        }
        Command::IsoClasses { input, radius, max_radius, node_limit, out, undecided } => {
            let cfg = iso_config(radius, max_radius, node_limit);
            if max_radius < radius {
                return Err(Error::Config("max radius below the starting radius".into()).into());
            }
            let files = input.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
            let (dim, base, recs) = pl::combine_inputs(&files)?;
            let (classes, pairs) = pl::iso_records(&recs, &cfg);
            let config = pl::chain_digest(&base, &pl::iso_step(&cfg));
            write(&out, &pl::iso_file(dim, config, &classes, &pairs).to_string())?;
            if let Some(path) = undecided {
                let text: String = pairs.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect();
                write(&path, &text)?;
            }
            let non_singleton = classes.iter().filter(|c| c.members.len() > 1).count();
            eprintln!("{} classes, {non_singleton} non-singleton, {} undecided pairs", classes.len(), pairs.len());
            if !pairs.is_empty() {
                return Ok(Outcome::Undecided(pairs.len()));
            }
        }
        Command::Run { dim, out, checkpoint, until, radius, max_radius, node_limit, budget_secs } => {
            let mut cfg = PipelineConfig::new(dim);
            cfg.until = until.parse::<PipelineStage>()?;
            cfg.jobs = jobs;
            cfg.out = Some(out);
            cfg.checkpoint = checkpoint;
            cfg.iso = iso_config(radius, max_radius, node_limit);
            cfg.budget = budget_secs.map(Duration::from_secs);
            let summary = pl::run_pipeline(&cfg)?;
            print!("{summary}");
            if let Some(n) = summary.undecided.filter(|&n| n > 0) {
                return Ok(Outcome::Undecided(n));
            }
        }
        Command::EmitTable { which, groups, input, out } => {
            let text = match which {
                Which::Stabilizers => {
                    let path = groups.ok_or_else(|| Error::MissingInput("--groups is required".into()))?;
                    let cat = pl::group_catalog(&read(&path)?)?;
                    let cls = classify_stabilizers(&cat);
                    pl::emit_table(
                        TableKind::Stabilizers,
                        &TableInputs { stabilizers: Some(&cls), ..Default::default() },
                    )?
                }
                Which::Combinations => {
                    let files = input.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
                    pl::combine_inputs(&files)?;
                    let pick = |stage: Stage| {
                        files
                            .iter()
                            .find(|f| f.header.stage == stage)
                            .map(pl::realization_records)
                            .ok_or_else(|| Error::MissingInput(format!("a {stage} catalog is required")))
                    };
                    let (sat, non) = (pick(Stage::Thinned)?, pick(Stage::Desaturated)?);
                    let inputs = TableInputs { saturated: Some(&sat), non_saturated: Some(&non), ..Default::default() };
                    pl::emit_table(TableKind::Combinations, &inputs)?
                }
                Which::IsoClasses => {
                    let [path] = input.as_slice() else {
                        return Err(Error::MissingInput("exactly one iso-classes catalog is required".into()).into());
                    };
                    let file = read(path)?;
                    expect_stage(&file, path, Stage::IsoClasses)?;
                    let classes: Vec<IsoClassRecord> = file
                        .records
                        .iter()
                        .filter_map(|r| match r {
                            Record::IsoClass(c) => Some(c.clone()),
                            _ => None,
                        })
                        .collect();
                    pl::emit_table(
                        TableKind::IsoClasses,
                        &TableInputs { iso_classes: Some(&classes), ..Default::default() },
                    )?
                }
            };
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(Outcome::Done)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Checkpoint { .. } | Error::BudgetExhausted { .. } | Error::Io(_)) => EXIT_RESOURCE,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(EXIT_INVALID);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RESOURCE);
        }
    };
    match pool.install(|| execute(cli.command, cli.jobs)) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Undecided(n)) => {
            eprintln!("{n} pairs left undecided at the radius cap");
            ExitCode::from(EXIT_UNDECIDED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
