//! On-disk corpora: chunked plain-text machine files plus a manifest.
//!
//! Each chunk holds one machine per line in generation order, so a record's
//! identifier is its 1-based line number across the chunk sequence. The
//! manifest pins the generation settings, per-chunk line counts and SHA-256
//! digests, and a digest over the whole stream.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::enumerate::{self, b0_candidates, CorpusRecord, Emitted, GenConfig, GenMode, SinkError};
use crate::machine::{
    format_machine, parse_machine, Action, Dimension, Machine, ParseError, StateId, StatusKind,
    Symbol,
};
use crate::sim::RunOptions;
use crate::transform::{self, NormalizeVerdict, NotNormalizable};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const DEFAULT_CHUNK: u64 = 1_000_000;
pub const FORMAT_VERSION: u32 = 1;
/// Identifies the branch order used by the tnf generator.
pub const BRANCH_ORDER: &str = "b0-table;halt-first;ns-asc;o-asc;l-before-r";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} already holds a corpus")]
    Exists(PathBuf),
    #[error("chunk size must be at least 1")]
    ChunkSize,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{file}:{line}: {source}")]
    Parse {
        file: String,
        line: u64,
        source: ParseError,
    },
    #[error("corrupt corpus: {0}")]
    Corrupt(String),
    #[error("machine is {found}, corpus is {expected}")]
    DimensionMismatch { expected: Dimension, found: Dimension },
    #[error("machine cannot be normalized: {0}")]
    NotNormalizable(NormalizeVerdict),
    #[error("writing stopped after {written} records: {source}")]
    Aborted { written: u64, source: Box<CorpusError> },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkInfo {
    pub file: String,
    pub lines: u64,
    pub sha256: String,
}

/// Generation settings and content digests of a corpus directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub version: u32,
    pub dim: Dimension,
    pub mode: GenMode,
    pub run_options: RunOptions,
    pub branch_order: String,
    pub chunk: u64,
    pub total: u64,
    pub chunks: Vec<ChunkInfo>,
    /// SHA-256 over the concatenated chunk contents.
    pub checksum: String,
}

impl Manifest {
    pub fn render(&self) -> String {
        let o = &self.run_options;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| s.push_str(&format!("{k}={v}\n"));
        kv("version", &self.version);
        kv("dim", &self.dim);
        kv("mode", &self.mode);
        kv("bound", &o.bound);
        kv("detect_blank_tape", &o.detect_blank_tape);
        kv("detect_cycles", &o.detect_cycles);
        kv("cycle_history_cap", &o.cycle_history_cap);
        kv("branch_order", &self.branch_order);
        kv("chunk", &self.chunk);
        kv("total", &self.total);
        kv("checksum", &self.checksum);
        kv("chunks", &self.chunks.len());
        for (i, c) in self.chunks.iter().enumerate() {
            kv(&format!("chunk.{i}"), &format!("{} {} {}", c.file, c.lines, c.sha256));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let bad = |msg: String| CorpusError::Manifest(msg);
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
            map.insert(k.to_string(), v.to_string());
        }
        fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CorpusError> {
            let v = map
                .get(key)
                .ok_or_else(|| CorpusError::Manifest(format!("missing {key}")))?;
            v.parse()
                .map_err(|_| CorpusError::Manifest(format!("bad {key} value {v:?}")))
        }
        let n: usize = field(&map, "chunks")?;
        let mut chunks = Vec::with_capacity(n);
        for i in 0..n {
            let v: String = field(&map, &format!("chunk.{i}"))?;
            let parts: Vec<&str> = v.split(' ').collect();
            let [file, lines, sha] = parts[..] else {
                return Err(bad(format!("bad chunk.{i} value {v:?}")));
            };
            chunks.push(ChunkInfo {
                file: file.to_string(),
                lines: lines
                    .parse()
                    .map_err(|_| bad(format!("bad chunk.{i} line count")))?,
                sha256: sha.to_string(),
            });
        }
        Ok(Manifest {
            version: field(&map, "version")?,
            dim: field(&map, "dim")?,
            mode: field(&map, "mode")?,
            run_options: RunOptions {
                bound: field(&map, "bound")?,
                detect_blank_tape: field(&map, "detect_blank_tape")?,
                detect_cycles: field(&map, "detect_cycles")?,
                cycle_history_cap: field(&map, "cycle_history_cap")?,
            },
            branch_order: field(&map, "branch_order")?,
            chunk: field(&map, "chunk")?,
            total: field(&map, "total")?,
            chunks,
            checksum: field(&map, "checksum")?,
        })
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Self::parse(&text)
    }
}

/// Streams records into chunk files.
pub struct CorpusWriter {
    dir: PathBuf,
    cfg: GenConfig,
    chunk: u64,
    current: Option<(BufWriter<File>, Sha256, ChunkInfo)>,
    chunks: Vec<ChunkInfo>,
    overall: Sha256,
    total: u64,
}

impl CorpusWriter {
    /// Creates `dir` if needed. Fails if it already holds a manifest.
    pub fn create(dir: &Path, cfg: GenConfig, chunk: u64) -> Result<Self, CorpusError> {
        if chunk == 0 {
            return Err(CorpusError::ChunkSize);
        }
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        if dir.join(MANIFEST_FILE).exists() {
            return Err(CorpusError::Exists(dir.to_path_buf()));
        }
        Ok(CorpusWriter {
            dir: dir.to_path_buf(),
            cfg,
            chunk,
            current: None,
            chunks: Vec::new(),
            overall: Sha256::new(),
            total: 0,
        })
    }

    fn chunk_name(&self, index: usize) -> String {
        format!("{}_{}_{index}.txt", self.cfg.dim, self.cfg.mode)
    }

    /// Appends one already formatted line (without newline).
    pub fn push_line(&mut self, line: &str) -> Result<(), CorpusError> {
        if self.current.is_none() {
            let name = self.chunk_name(self.chunks.len());
            let path = self.dir.join(&name);
            let file = File::create(&path).map_err(io_err(&path))?;
            let info = ChunkInfo {
                file: name,
                lines: 0,
                sha256: String::new(),
            };
            self.current = Some((BufWriter::new(file), Sha256::new(), info));
        }
        let (w, h, info) = self.current.as_mut().expect("chunk just opened");
        let path = self.dir.join(&info.file);
        w.write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(io_err(&path))?;
        for hasher in [&mut *h, &mut self.overall] {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        info.lines += 1;
        self.total += 1;
        if info.lines == self.chunk {
            self.close_chunk()?;
        }
        Ok(())
    }

    pub fn push(&mut self, machine: &Machine, status: crate::machine::MachineStatus) -> Result<(), CorpusError> {
        self.push_line(&format_machine(machine, status))
    }

    fn close_chunk(&mut self) -> Result<(), CorpusError> {
        if let Some((mut w, h, mut info)) = self.current.take() {
            let path = self.dir.join(&info.file);
            w.flush().map_err(io_err(&path))?;
            info.sha256 = hex::encode(h.finalize());
            self.chunks.push(info);
        }
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.total
    }

    /// Closes the last chunk and writes the manifest.
    pub fn finish(mut self) -> Result<Manifest, CorpusError> {
        self.close_chunk()?;
        let manifest = Manifest {
            version: FORMAT_VERSION,
            dim: self.cfg.dim,
            mode: self.cfg.mode,
            run_options: self.cfg.run_options,
            branch_order: BRANCH_ORDER.to_string(),
            chunk: self.chunk,
            total: self.total,
            chunks: self.chunks,
            checksum: hex::encode(self.overall.finalize()),
        };
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, manifest.render()).map_err(io_err(&path))?;
        Ok(manifest)
    }
}

fn aborted(written: u64, e: CorpusError) -> CorpusError {
    CorpusError::Aborted {
        written,
        source: Box::new(e),
    }
}

/// Generates `cfg` serially into `dir`.
pub fn write_corpus(cfg: &GenConfig, dir: &Path, chunk: u64) -> Result<Manifest, CorpusError> {
    let mut writer = CorpusWriter::create(dir, *cfg, chunk)?;
    let mut sink = |rec: Emitted<'_>| writer.push(rec.machine, rec.status);
    enumerate::generate(cfg, &mut sink).map_err(|SinkError { emitted, source }| aborted(emitted, source))?;
    writer.finish()
}

/// Writes an existing record stream into `dir`.
pub fn write_records<'a>(
    cfg: &GenConfig,
    records: impl IntoIterator<Item = &'a CorpusRecord>,
    dir: &Path,
    chunk: u64,
) -> Result<Manifest, CorpusError> {
    let mut writer = CorpusWriter::create(dir, *cfg, chunk)?;
    for rec in records {
        writer
            .push(&rec.machine, rec.status)
            .map_err(|e| aborted(writer.written(), e))?;
    }
    writer.finish()
}

/// Tnf generation split by `(b,0)` branch across `workers` threads. Each
/// branch goes to a private scratch file; the files are then concatenated
/// in branch order, so the result is byte-identical to [`write_corpus`].
/// Other modes fall back to serial generation.
pub fn write_corpus_parallel(
    cfg: &GenConfig,
    dir: &Path,
    chunk: u64,
    workers: usize,
) -> Result<Manifest, CorpusError> {
    if cfg.mode != GenMode::Tnf || workers <= 1 {
        return write_corpus(cfg, dir, chunk);
    }
    let mut writer = CorpusWriter::create(dir, *cfg, chunk)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CorpusError::Io {
            path: dir.to_path_buf(),
            source: io::Error::other(e),
        })?;
    let branches = b0_candidates(cfg.dim);
    let scratch: Vec<PathBuf> = (0..branches.len())
        .map(|i| dir.join(format!(".branch_{i}.tmp")))
        .collect();
    let results: Vec<Result<(), CorpusError>> = pool.install(|| {
        branches
            .par_iter()
            .zip(scratch.par_iter())
            .map(|(&b0, path)| {
                let file = File::create(path).map_err(io_err(path))?;
                let mut w = BufWriter::new(file);
                let mut sink = |rec: Emitted<'_>| writeln!(w, "{}", format_machine(rec.machine, rec.status));
                enumerate::generate_tnf_branch(cfg.dim, &cfg.run_options, b0, &mut sink)
                    .map_err(|e| io_err(path)(e.source))?;
                w.flush().map_err(io_err(path))
            })
            .collect()
    });
    let cleanup = || {
        for p in &scratch {
            let _ = fs::remove_file(p);
        }
    };
    if let Some(e) = results.into_iter().find_map(Result::err) {
        cleanup();
        return Err(e);
    }
    for path in &scratch {
        let file = File::open(path).map_err(io_err(path))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(io_err(path))?;
            if let Err(e) = writer.push_line(&line) {
                cleanup();
                return Err(aborted(writer.written(), e));
            }
        }
    }
    cleanup();
    writer.finish()
}

/// Reads records back in identifier order, checking chunk digests and line
/// counts against the manifest.
pub struct CorpusReader {
    dir: PathBuf,
    manifest: Manifest,
    chunk: usize,
    lines: Option<(io::Lines<BufReader<File>>, Sha256, u64)>,
    overall: Sha256,
    next_id: u64,
    failed: bool,
}

impl CorpusReader {
    pub fn open(dir: &Path) -> Result<Self, CorpusError> {
        let manifest = Manifest::load(dir)?;
        Ok(CorpusReader {
            dir: dir.to_path_buf(),
            manifest,
            chunk: 0,
            lines: None,
            overall: Sha256::new(),
            next_id: 1,
            failed: false,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn advance(&mut self) -> Result<Option<CorpusRecord>, CorpusError> {
        loop {
            if self.lines.is_none() {
                let Some(info) = self.manifest.chunks.get(self.chunk) else {
                    let got = hex::encode(std::mem::take(&mut self.overall).finalize());
                    if got != self.manifest.checksum {
                        return Err(CorpusError::Corrupt("overall checksum mismatch".into()));
                    }
                    if self.next_id - 1 != self.manifest.total {
                        return Err(CorpusError::Corrupt(format!(
                            "manifest total {} but {} records read",
                            self.manifest.total,
                            self.next_id - 1
                        )));
                    }
                    return Ok(None);
                };
                let path = self.dir.join(&info.file);
                let file = File::open(&path).map_err(io_err(&path))?;
                self.lines = Some((BufReader::new(file).lines(), Sha256::new(), 0));
            }
            let info = &self.manifest.chunks[self.chunk];
            let (lines, hasher, count) = self.lines.as_mut().expect("chunk open");
            match lines.next() {
                Some(line) => {
                    let path = self.dir.join(&info.file);
                    let line = line.map_err(io_err(&path))?;
                    *count += 1;
                    for h in [&mut *hasher, &mut self.overall] {
                        h.update(line.as_bytes());
                        h.update(b"\n");
                    }
                    let (machine, status) = parse_machine(&line).map_err(|source| CorpusError::Parse {
                        file: info.file.clone(),
                        line: *count,
                        source,
                    })?;
                    let id = self.next_id;
                    self.next_id += 1;
                    return Ok(Some(CorpusRecord { id, machine, status }));
                }
                None => {
                    let (_, hasher, count) = self.lines.take().expect("chunk open");
                    if count != info.lines {
                        return Err(CorpusError::Corrupt(format!(
                            "{} has {count} lines, manifest says {}",
                            info.file, info.lines
                        )));
                    }
                    if hex::encode(hasher.finalize()) != info.sha256 {
                        return Err(CorpusError::Corrupt(format!("{} checksum mismatch", info.file)));
                    }
                    self.chunk += 1;
                }
            }
        }
    }
}

impl Iterator for CorpusReader {
    type Item = Result<CorpusRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.advance();
        if r.is_err() {
            self.failed = true;
        }
        r.transpose()
    }
}

/// Reads a whole corpus into memory.
pub fn read_corpus(dir: &Path) -> Result<(Manifest, Vec<CorpusRecord>), CorpusError> {
    let reader = CorpusReader::open(dir)?;
    let manifest = reader.manifest().clone();
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, records))
}

/// Per-branch and per-status record counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub total: u64,
    /// Counts keyed by `(b,0)` action, in candidate order; machines without
    /// a `(b,0)` action or with one outside the candidates come last.
    pub per_b0: Vec<(Option<Action>, u64)>,
    pub per_status: BTreeMap<StatusKind, u64>,
}

impl CorpusStats {
    pub fn new(dim: Dimension) -> Self {
        CorpusStats {
            total: 0,
            per_b0: b0_candidates(dim).into_iter().map(|a| (Some(a), 0)).collect(),
            per_status: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, machine: &Machine, status: StatusKind) {
        self.total += 1;
        *self.per_status.entry(status).or_insert(0) += 1;
        let b0 = machine.get(StateId::new(1), Symbol::BLANK);
        match self.per_b0.iter_mut().find(|(a, _)| *a == b0) {
            Some((_, n)) => *n += 1,
            None => self.per_b0.push((b0, 1)),
        }
    }

    pub fn b0_count(&self, action: Action) -> u64 {
        self.per_b0
            .iter()
            .find(|(a, _)| *a == Some(action))
            .map_or(0, |(_, n)| *n)
    }

    pub fn status_count(&self, kind: StatusKind) -> u64 {
        self.per_status.get(&kind).copied().unwrap_or(0)
    }

    /// Branch shares in candidate order as tenths of a percent, rounded half
    /// up.
    pub fn b0_tenths(&self) -> Vec<(Option<Action>, u64)> {
        self.per_b0
            .iter()
            .map(|&(a, n)| (a, percent_tenths(n, self.total)))
            .collect()
    }
}

/// `100·part/whole` in tenths of a percent, rounded half up.
pub fn percent_tenths(part: u64, whole: u64) -> u64 {
    if whole == 0 {
        return 0;
    }
    let (p, w) = (part as u128, whole as u128);
    ((2000 * p + w) / (2 * w)) as u64
}

/// Renders tenths of a percent as `12.3%`.
pub fn format_percent(tenths: u64) -> String {
    format!("{}.{}%", tenths / 10, tenths % 10)
}

/// Counts a corpus, verifying its digests on the way.
pub fn stats(dir: &Path) -> Result<CorpusStats, CorpusError> {
    let reader = CorpusReader::open(dir)?;
    let mut s = CorpusStats::new(reader.manifest().dim);
    for rec in reader {
        let rec = rec?;
        s.add(&rec.machine, rec.status.kind);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    /// Same table.
    Exact,
    /// The corpus record is a partial machine whose defined cells all agree.
    Prefix,
}

/// Compares a corpus record against a target table.
pub fn match_machine(record: &Machine, target: &Machine) -> Option<MatchKind> {
    if record.dim() != target.dim() {
        return None;
    }
    if record == target {
        return Some(MatchKind::Exact);
    }
    record
        .transitions()
        .all(|t| target.get(t.state, t.input) == Some(t.action))
        .then_some(MatchKind::Prefix)
}

/// Normalizes `m` and scans the corpus for matching records.
pub fn find(dir: &Path, m: &Machine, opts: &RunOptions) -> Result<Vec<(u64, MatchKind)>, CorpusError> {
    let reader = CorpusReader::open(dir)?;
    let expected = reader.manifest().dim;
    if m.dim() != expected {
        return Err(CorpusError::DimensionMismatch {
            expected,
            found: m.dim(),
        });
    }
    let report = transform::normalize(m, opts);
    if let NormalizeVerdict::NotNormalizable(why) = report.verdict {
        if !matches!(why, NotNormalizable::Violates(_)) {
            return Err(CorpusError::NotNormalizable(report.verdict));
        }
    }
    let mut hits = Vec::new();
    for rec in reader {
        let rec = rec?;
        if let Some(kind) = match_machine(&rec.machine, &report.result) {
            hits.push((rec.id, kind));
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkTally {
    pub file: String,
    pub manifest_lines: u64,
    pub counted_lines: Option<u64>,
    pub checksum_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountReport {
    pub expected: u64,
    pub manifest_total: u64,
    pub counted: u64,
    pub chunks: Vec<ChunkTally>,
}

impl CountReport {
    pub fn ok(&self) -> bool {
        self.counted == self.expected
            && self.manifest_total == self.expected
            && self
                .chunks
                .iter()
                .all(|c| c.checksum_ok && c.counted_lines == Some(c.manifest_lines))
    }

    /// Chunks whose line count or digest disagrees with the manifest.
    pub fn bad_chunks(&self) -> impl Iterator<Item = &ChunkTally> {
        self.chunks
            .iter()
            .filter(|c| !c.checksum_ok || c.counted_lines != Some(c.manifest_lines))
    }
}

/// Recounts every chunk and compares with the manifest and `expected`.
pub fn verify_counts(dir: &Path, expected: u64) -> Result<CountReport, CorpusError> {
    let manifest = Manifest::load(dir)?;
    let mut chunks = Vec::new();
    let mut counted = 0;
    for info in &manifest.chunks {
        let path = dir.join(&info.file);
        let tally = match fs::read(&path) {
            Ok(bytes) => {
                let lines = bytes.iter().filter(|&&b| b == b'\n').count() as u64;
                counted += lines;
                ChunkTally {
                    file: info.file.clone(),
                    manifest_lines: info.lines,
                    counted_lines: Some(lines),
                    checksum_ok: hex::encode(Sha256::digest(&bytes)) == info.sha256,
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => ChunkTally {
                file: info.file.clone(),
                manifest_lines: info.lines,
                counted_lines: None,
                checksum_ok: false,
            },
            Err(e) => return Err(io_err(&path)(e)),
        };
        chunks.push(tally);
    }
    Ok(CountReport {
        expected,
        manifest_total: manifest.total,
        counted,
        chunks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_percentages() {
        assert_eq!(percent_tenths(9, 36), 250);
        assert_eq!(percent_tenths(1, 8), 125);
        assert_eq!(percent_tenths(1, 2000), 1);
        assert_eq!(percent_tenths(1, 2001), 0);
        assert_eq!(percent_tenths(0, 0), 0);
        assert_eq!(format_percent(65), "6.5%");
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            version: 1,
            dim: Dimension::new(2, 2).unwrap(),
            mode: GenMode::Tnf,
            run_options: RunOptions::default(),
            branch_order: BRANCH_ORDER.into(),
            chunk: 10,
            total: 12,
            chunks: vec![
                ChunkInfo {
                    file: "2x2_tnf_0.txt".into(),
                    lines: 10,
                    sha256: "ab".into(),
                },
                ChunkInfo {
                    file: "2x2_tnf_1.txt".into(),
                    lines: 2,
                    sha256: "cd".into(),
                },
            ],
            checksum: "ef".into(),
        };
        assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
        assert!(Manifest::parse("version=1\n").is_err());
    }

    #[test]
    fn matching() {
        let full: Machine = "2x2 1rb 1lb 1la 1rz".parse().unwrap();
        let partial: Machine = "2x2 1rb --- 1la ---".parse().unwrap();
        let other: Machine = "2x2 1rb 0lb 1la ---".parse().unwrap();
        assert_eq!(match_machine(&full, &full), Some(MatchKind::Exact));
        assert_eq!(match_machine(&partial, &full), Some(MatchKind::Prefix));
        assert_eq!(match_machine(&other, &full), None);
        assert_eq!(match_machine(&full, &partial), None);
    }
}
