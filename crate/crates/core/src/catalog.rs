//! Text catalogs: one header line followed by tab-separated records.
//!
//! ```text
//! #grid2x	version=1	dim=2	stage=thinned	config=ac23eb4adc961aec
//! G	19	2	5	2	[1,0],[0,2]	[1,2];[0,0] [1,-2];[0,1] [-1,2];[0,0] [-1,-2];[0,1]
//! R	1	19	[1,2]	[-1,2]	[1,-2];[0,1] [-1,2];[-1,0] [-1,-2];[0,-1]	S
//! ```
//!
//! Record kinds: `G` group (id, stabilizer class, point class, normal form),
//! `R` realization (id, group id, `L`, `m`, `X`, `S`/`N`), `W` growth,
//! `C` isomorphism class and `U` undecided pair. Realizations are referred
//! to by [`Label`]: their id, starred when non-saturated.
#![allow(clippy::tabs_in_doc_comments)]

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use crate::enumeration::{subgroup_class_of, CatalogEntry};
use crate::error::{Error, Result};
use crate::finite::{self, PointSet};
use crate::grid::{GridAutomorphism, SignedPermutation};
use crate::lattice::Lattice;
use crate::realization::{connection_set_from, GroupFrame, Realization};
use crate::space_group::SpaceGroupNF;

pub const FORMAT_VERSION: u32 = 1;

/// Pipeline stage that produced a catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Groups,
    Generated,
    Thinned,
    Desaturated,
    Disconnected,
    Growth,
    IsoClasses,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Groups,
        Stage::Generated,
        Stage::Thinned,
        Stage::Desaturated,
        Stage::Disconnected,
        Stage::Growth,
        Stage::IsoClasses,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Groups => "groups",
            Stage::Generated => "generated",
            Stage::Thinned => "thinned",
            Stage::Desaturated => "desaturated",
            Stage::Disconnected => "disconnected",
            Stage::Growth => "growth",
            Stage::IsoClasses => "iso-classes",
        }
    }

    fn allows(&self, kind: char) -> bool {
        match self {
            Stage::Groups => kind == 'G',
            Stage::Generated | Stage::Thinned | Stage::Desaturated | Stage::Disconnected => matches!(kind, 'G' | 'R'),
            Stage::Growth => kind == 'W',
            Stage::IsoClasses => matches!(kind, 'C' | 'U'),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::parse(0, 0, format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub dim: usize,
    pub stage: Stage,
    /// Digest of the configuration that produced the file.
    pub config: String,
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#grid2x\tversion={}\tdim={}\tstage={}\tconfig={}", self.version, self.dim, self.stage, self.config)
    }
}

/// Reference to a realization: `17` (saturated) or `17*` (non-saturated).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub id: usize,
    pub saturated: bool,
}

impl Label {
    /// Order used in listings: id first, saturated before starred.
    pub fn listing_key(&self) -> (usize, bool) {
        (self.id, !self.saturated)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.id, if self.saturated { "" } else { "*" })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (digits, saturated) = match s.strip_suffix('*') {
            Some(d) => (d, false),
            None => (s, true),
        };
        let id = parse_id(digits)?;
        Ok(Label { id, saturated })
    }
}

/// Positive integer without sign or leading zeros.
fn parse_id(s: &str) -> Result<usize> {
    let bad = || Error::parse(0, 0, format!("expected a positive integer, found {s:?}"));
    if s.is_empty() || s.starts_with('0') || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    s.parse().map_err(|_| bad())
}

fn parse_count(s: &str) -> Result<usize> {
    if s == "0" {
        Ok(0)
    } else {
        parse_id(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealizationRecord {
    pub id: usize,
    pub realization: Realization,
}

impl RealizationRecord {
    pub fn label(&self) -> Label {
        Label { id: self.id, saturated: self.realization.saturated() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthRecord {
    pub label: Label,
    pub growth: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoClassRecord {
    pub class: usize,
    pub members: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Group(CatalogEntry),
    Realization(RealizationRecord),
    Growth(GrowthRecord),
    IsoClass(IsoClassRecord),
    Undecided(Label, Label),
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    let mut out = String::new();
    for (k, x) in items.into_iter().enumerate() {
        if k > 0 {
            out.push_str(sep);
        }
        write!(out, "{x}").unwrap();
    }
    out
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Group(e) => write!(f, "G\t{}\t{}\t{}\t{}", e.id, e.stabilizer_class, e.point_class, e.group),
            Record::Realization(r) => {
                let real = &r.realization;
                let group_id = real.group_id().expect("catalogued realization has a group id");
                write!(
                    f,
                    "R\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.id,
                    group_id,
                    join(real.l().elems(), " "),
                    real.m(),
                    join(real.x().iter(), " "),
                    if real.saturated() { "S" } else { "N" }
                )
            }
            Record::Growth(g) => write!(f, "W\t{}\t{}", g.label, join(&g.growth, ",")),
            Record::IsoClass(c) => write!(f, "C\t{}\t{}", c.class, join(&c.members, ",")),
            Record::Undecided(a, b) => write!(f, "U\t{a}\t{b}"),
        }
    }
}

/// A parsed catalog file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogFile {
    pub header: Header,
    pub records: Vec<Record>,
}

impl fmt::Display for CatalogFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header)?;
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Tab-separated fields of one line with their 1-based columns.
struct Fields<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
}

impl<'a> Fields<'a> {
    fn split(line: usize, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut col = 1;
        for part in text.split('\t') {
            items.push((col, part));
            col += part.chars().count() + 1;
        }
        Fields { line, items }
    }

    fn expect_len(&self, n: usize) -> Result<()> {
        if self.items.len() != n {
            let col = self.items.get(n).map_or_else(|| self.end_column(), |f| f.0);
            return Err(Error::parse(self.line, col, format!("expected {n} fields, found {}", self.items.len())));
        }
        Ok(())
    }

    fn end_column(&self) -> usize {
        self.items.last().map_or(1, |(c, s)| c + s.chars().count())
    }

    fn get(&self, k: usize) -> &'a str {
        self.items[k].1
    }

    /// Runs `f` on field `k`, anchoring any error at that field.
    fn parse<T>(&self, k: usize, f: impl FnOnce(&'a str) -> Result<T>) -> Result<T> {
        let (col, s) = self.items[k];
        f(s).map_err(|e| anchor(e, self.line, col))
    }
}

fn anchor(e: Error, line: usize, column: usize) -> Error {
    match e {
        Error::Parse { .. } => e.at(line, column),
        other => Error::parse(line, column, other.to_string()),
    }
}

fn parse_header(text: &str) -> Result<Header> {
    let f = Fields::split(1, text);
    f.expect_len(5)?;
    if f.get(0) != "#grid2x" {
        return Err(Error::parse(1, 1, "missing #grid2x header"));
    }
    let value = |k: usize, key: &str| -> Result<&str> {
        f.parse(k, |s| {
            s.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| Error::parse(0, 0, format!("expected {key}=...")))
        })
    };
    let version: u32 = f.parse(1, |_| {
        let v = value(1, "version")?;
        v.parse().map_err(|_| Error::parse(0, 0, format!("bad version {v:?}")))
    })?;
    if version != FORMAT_VERSION {
        return Err(Error::parse(1, f.items[1].0, format!("unsupported format version {version}")));
    }
    let dim = value(2, "dim")?;
    let dim: usize = f.parse(2, |_| parse_id(dim))?;
    if !(1..=crate::grid::MAX_DIM).contains(&dim) {
        return Err(Error::parse(1, f.items[2].0, format!("unsupported dimension {dim}")));
    }
    let stage = value(3, "stage")?;
    let stage: Stage = f.parse(3, |_| stage.parse())?;
    let config = value(4, "config")?;
    if config.is_empty() || !config.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()) {
        return Err(Error::parse(1, f.items[4].0, "config digest must be lowercase hex"));
    }
    Ok(Header { version, dim, stage, config: config.to_string() })
}

fn parse_signed_perm(s: &str) -> Result<SignedPermutation> {
    let v = crate::grid::parse_vector(s)?;
    let imgs: Vec<i8> = v
        .iter()
        .map(|&x| i8::try_from(x).map_err(|_| Error::InvalidPermutation(s.to_string())))
        .collect::<Result<_>>()?;
    let p = SignedPermutation::new(&imgs)?;
    if p.to_string() != s {
        return Err(Error::parse(0, 0, format!("non-canonical permutation {s:?}")));
    }
    Ok(p)
}

/// Parser state: groups seen so far, shared by later realization records.
struct Context {
    dim: usize,
    frames: FxHashMap<usize, Arc<GroupFrame>>,
    class_reps: Vec<PointSet>,
}

impl Context {
    fn group(&mut self, f: &Fields<'_>, last_id: Option<usize>) -> Result<CatalogEntry> {
        f.expect_len(7)?;
        let id = f.parse(1, parse_id)?;
        if last_id.is_some_and(|p| id <= p) {
            return Err(Error::parse(f.line, f.items[1].0, "group ids must increase"));
        }
        let stabilizer_class = f.parse(2, parse_id)?;
        let point_class = f.parse(3, parse_id)?;
        let dim: usize = f.parse(4, parse_id)?;
        f.parse(5, |s| Lattice::parse(dim, s))?;
        let nf_text = format!("{}\t{}\t{}", f.get(4), f.get(5), f.get(6));
        let group: SpaceGroupNF = f.parse(6, |_| nf_text.parse())?;
        if group.dim() != self.dim {
            return Err(Error::parse(
                f.line,
                f.items[4].0,
                format!("group of dimension {} in a dimension {} catalog", group.dim(), self.dim),
            ));
        }
        if !group.is_vertex_transitive() {
            return Err(Error::parse(f.line, f.items[4].0, "group is not vertex-transitive"));
        }
        if self.class_reps.is_empty() {
            self.class_reps = finite::subgroup_class_reps(self.dim);
        }
        if subgroup_class_of(&group.stabilizer(), &self.class_reps) != stabilizer_class {
            return Err(Error::parse(f.line, f.items[2].0, "stabilizer class does not match the group"));
        }
        if subgroup_class_of(group.point(), &self.class_reps) != point_class {
            return Err(Error::parse(f.line, f.items[3].0, "point class does not match the group"));
        }
        self.frames.insert(id, GroupFrame::new(Arc::new(group.clone()), Some(id)));
        Ok(CatalogEntry { id, generators: group.generators(), group, stabilizer_class, point_class })
    }

    fn realization(&self, f: &Fields<'_>) -> Result<RealizationRecord> {
        f.expect_len(7)?;
        let id = f.parse(1, parse_id)?;
        let group_id = f.parse(2, parse_id)?;
        let frame =
            self.frames.get(&group_id).cloned().ok_or_else(|| {
                Error::parse(f.line, f.items[2].0, format!("group {group_id} not declared before use"))
            })?;
        let l_elems: Vec<SignedPermutation> = f.parse(3, |s| s.split(' ').map(parse_signed_perm).collect())?;
        let m = f.parse(4, parse_signed_perm)?;
        let x: Vec<GridAutomorphism> = f.parse(5, |s| s.split(' ').map(|t| t.parse()).collect())?;
        let saturated = f.parse(6, |s| match s {
            "S" => Ok(true),
            "N" => Ok(false),
            _ => Err(Error::parse(0, 0, format!("saturation flag must be S or N, found {s:?}"))),
        })?;
        let l = PointSet::from_elems(self.dim, &l_elems);
        for g in x.iter().map(|g| g.point).chain(l_elems.iter().copied()).chain([m]) {
            if g.dim() != self.dim {
                return Err(Error::parse(f.line, f.items[3].0, "element of the wrong dimension"));
            }
        }
        let realization = f.parse(5, |_| {
            let d = connection_set_from(&l, &x)?;
            Realization::from_frame(frame, l, d, saturated)
        })?;
        let record = RealizationRecord { id, realization };
        // Canonical text only: element order, the choice of m and of X.
        let canonical = Record::Realization(record.clone()).to_string();
        let original = f.items.iter().map(|(_, s)| *s).collect::<Vec<_>>().join("\t");
        if canonical != original {
            let canon_fields = Fields::split(f.line, &canonical);
            let k = (0..7).find(|&k| canon_fields.get(k) != f.get(k)).unwrap_or(0);
            return Err(Error::parse(f.line, f.items[k].0, "realization record is not in canonical form"));
        }
        Ok(record)
    }
}

fn parse_growth(f: &Fields<'_>) -> Result<GrowthRecord> {
    f.expect_len(3)?;
    let label = f.parse(1, |s| s.parse())?;
    let growth = f.parse(2, |s| s.split(',').map(parse_count).collect())?;
    Ok(GrowthRecord { label, growth })
}

fn parse_iso_class(f: &Fields<'_>) -> Result<IsoClassRecord> {
    f.expect_len(3)?;
    let class = f.parse(1, parse_id)?;
    let members: Vec<Label> = f.parse(2, |s| s.split(',').map(|t| t.parse()).collect())?;
    Ok(IsoClassRecord { class, members })
}

impl FromStr for CatalogFile {
    type Err = Error;

    /// Parses a whole catalog. Every line, including the last, must end
    /// with a newline; the first malformed line aborts with its position.
    fn from_str(text: &str) -> Result<Self> {
        let Some(body) = text.strip_suffix('\n') else {
            let line = text.lines().count().max(1);
            return Err(Error::parse(line, 1, "missing final newline"));
        };
        let mut lines = body.split('\n');
        let header = parse_header(lines.next().unwrap_or(""))?;
        let mut ctx = Context { dim: header.dim, frames: FxHashMap::default(), class_reps: Vec::new() };
        let mut records = Vec::new();
        let mut last_group = None;
        for (k, text) in lines.enumerate() {
            let line = k + 2;
            let f = Fields::split(line, text);
            let kind = f.get(0);
            let tag = match kind {
                "G" | "R" | "W" | "C" | "U" => kind.chars().next().unwrap(),
                _ => return Err(Error::parse(line, 1, format!("unknown record kind {kind:?}"))),
            };
            if !header.stage.allows(tag) {
                return Err(Error::parse(line, 1, format!("{kind} record in a {} catalog", header.stage)));
            }
            let record = match tag {
                'G' => {
                    let e = ctx.group(&f, last_group)?;
                    last_group = Some(e.id);
                    Record::Group(e)
                }
                'R' => Record::Realization(ctx.realization(&f)?),
                'W' => Record::Growth(parse_growth(&f)?),
                'C' => Record::IsoClass(parse_iso_class(&f)?),
                _ => {
                    f.expect_len(3)?;
                    Record::Undecided(f.parse(1, |s| s.parse())?, f.parse(2, |s| s.parse())?)
                }
            };
            if record.to_string() != text {
                return Err(Error::parse(line, 1, "record is not in canonical form"));
            }
            records.push(record);
        }
        Ok(CatalogFile { header, records })
    }
}

impl CatalogFile {
    pub fn new(header: Header, records: Vec<Record>) -> Self {
        CatalogFile { header, records }
    }

    /// SHA-256 of the serialized file, lowercase hex.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_string().as_bytes())
    }

    pub fn groups(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.records.iter().filter_map(|r| match r {
            Record::Group(e) => Some(e),
            _ => None,
        })
    }

    pub fn realizations(&self) -> impl Iterator<Item = &RealizationRecord> {
        self.records.iter().filter_map(|r| match r {
            Record::Realization(x) => Some(x),
            _ => None,
        })
    }

    /// Catalog of realizations, preceded by the groups they use.
    pub fn of_realizations(header: Header, groups: &[CatalogEntry], reals: Vec<RealizationRecord>) -> Self {
        let mut used: Vec<usize> = reals.iter().filter_map(|r| r.realization.group_id()).collect();
        used.sort_unstable();
        used.dedup();
        let mut records: Vec<Record> =
            groups.iter().filter(|e| used.binary_search(&e.id).is_ok()).cloned().map(Record::Group).collect();
        records.extend(reals.into_iter().map(Record::Realization));
        CatalogFile { header, records }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(bytes) {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_vertex_transitive;
    use crate::pipeline::groups_file;

    fn position(e: Error) -> (usize, usize) {
        match e {
            Error::Parse { line, column, .. } => (line, column),
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn identity_automorphism_text() {
        let id = GridAutomorphism::identity(3);
        assert_eq!(id.to_string(), "[1,2,3];[0,0,0]");
        assert_eq!("[1,2,3];[0,0,0]".parse::<GridAutomorphism>().unwrap(), id);
    }

    #[test]
    fn labels_round_trip() {
        for s in ["1", "17", "17*", "2872*"] {
            assert_eq!(s.parse::<Label>().unwrap().to_string(), s);
        }
        for bad in ["", "0", "01", "*", "1**", "-3", "+4"] {
            assert!(bad.parse::<Label>().is_err(), "{bad}");
        }
    }

    #[test]
    fn group_catalog_round_trips_with_equal_digest() {
        for dim in 1..=2 {
            let file = groups_file(&enumerate_vertex_transitive(dim).unwrap());
            let text = file.to_string();
            let back: CatalogFile = text.parse().unwrap();
            assert_eq!(back, file);
            assert_eq!(back.to_string(), text);
            assert_eq!(back.digest(), file.digest());
        }
    }

    #[test]
    fn rejects_unknown_stage_and_bad_headers() {
        let e = "#grid2x\tversion=1\tdim=2\tstage=bogus\tconfig=00\n".parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (1, 25));
        let e = "#grid2x\tversion=2\tdim=2\tstage=groups\tconfig=00\n".parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (1, 9));
        let e = "#grid2x\tversion=1\tdim=4\tstage=groups\tconfig=00\n".parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (1, 19));
        assert!("#grid2x\tversion=1\tdim=2\tstage=groups\tconfig=00".parse::<CatalogFile>().is_err());
    }

    #[test]
    fn corrupted_field_reports_position() {
        let text = groups_file(&enumerate_vertex_transitive(2).unwrap()).to_string();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        // Break the lattice of the fifth group.
        let fields: Vec<&str> = lines[5].split('\t').collect();
        let column = fields[..5].iter().map(|f| f.len() + 1).sum::<usize>() + 1;
        let mut broken: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
        broken[5] = broken[5].replacen('[', "(", 1);
        lines[5] = broken.join("\t");
        let e = (lines.join("\n") + "\n").parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (6, column));
    }

    #[test]
    fn rejects_records_of_the_wrong_kind_or_form() {
        let head = "#grid2x\tversion=1\tdim=1\tstage=groups\tconfig=ab\n";
        let e = format!("{head}W\t1\t2,4\n").parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (2, 1));
        let e = format!("{head}X\t1\n").parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (2, 1));
        let iso = "#grid2x\tversion=1\tdim=1\tstage=iso-classes\tconfig=ab\n";
        let ok: CatalogFile = format!("{iso}C\t1\t3,3*\nU\t4\t5*\n").parse().unwrap();
        assert_eq!(ok.records.len(), 2);
        let e = format!("{iso}C\t1\t3,03*\n").parse::<CatalogFile>().unwrap_err();
        assert_eq!(position(e), (2, 5));
    }
}
