mod common;

use std::fs;

use beaver_zoo::corpus::{
    self, find, read_corpus, stats, verify_counts, write_corpus, write_records, CorpusError, Manifest, MatchKind,
    MANIFEST_FILE,
};
use beaver_zoo::enumerate;
use beaver_zoo::transform::normalize;
use beaver_zoo::{GenConfig, GenMode, Machine, RunOptions, StatusKind};
use common::*;
use proptest::prelude::*;
use tempfile::tempdir;

fn tnf(n: u32, m: u32) -> GenConfig {
    GenConfig::new(dim(n, m), GenMode::Tnf)
}

#[test]
fn records_survive_a_round_trip() {
    let cfg = tnf(3, 2);
    let dir = tempdir().unwrap();
    let manifest = write_corpus(&cfg, dir.path(), 500).unwrap();
    let (loaded, records) = read_corpus(dir.path()).unwrap();
    assert_eq!(loaded, manifest);
    assert_eq!(loaded, Manifest::load(dir.path()).unwrap());
    assert_eq!(records, enumerate::collect(&cfg));
}

#[test]
fn chunks_split_at_the_chunk_size() {
    let dir = tempdir().unwrap();
    let manifest = write_corpus(&tnf(3, 2), dir.path(), 1_000).unwrap();
    let lines: Vec<u64> = manifest.chunks.iter().map(|c| c.lines).collect();
    assert_eq!(lines, [1_000, 1_000, 1_000, 508]);
    let names: Vec<&str> = manifest.chunks.iter().map(|c| c.file.as_str()).collect();
    assert_eq!(names, ["3x2_tnf_0.txt", "3x2_tnf_1.txt", "3x2_tnf_2.txt", "3x2_tnf_3.txt"]);
    assert!(matches!(
        write_corpus(&tnf(2, 2), tempdir().unwrap().path(), 0),
        Err(CorpusError::ChunkSize)
    ));
}

#[test]
fn existing_corpora_are_not_overwritten() {
    let dir = tempdir().unwrap();
    write_corpus(&tnf(2, 2), dir.path(), 10).unwrap();
    assert!(matches!(write_corpus(&tnf(2, 2), dir.path(), 10), Err(CorpusError::Exists(_))));
}

#[test]
fn stats_count_branches_and_statuses() {
    let dir = tempdir().unwrap();
    write_corpus(&tnf(2, 2), dir.path(), 10).unwrap();
    let s = stats(dir.path()).unwrap();
    assert_eq!(s.total, 36);
    assert_eq!(s.status_count(StatusKind::Complete), 36);
    assert!(s.per_b0.iter().all(|&(_, n)| n == 9));

    let dir = tempdir().unwrap();
    write_corpus(&tnf(3, 2), dir.path(), 1_000).unwrap();
    let s = stats(dir.path()).unwrap();
    assert_eq!(s.total, 3_508);
    assert_eq!(s.status_count(StatusKind::Complete), 3_158);
    assert_eq!(s.status_count(StatusKind::BoundExceeded), 268);
    assert_eq!(s.status_count(StatusKind::BlankTapeIrrelevant), 82);
}

#[test]
fn tampering_is_detected() {
    let dir = tempdir().unwrap();
    write_corpus(&tnf(3, 2), dir.path(), 1_000).unwrap();
    assert!(verify_counts(dir.path(), 3_508).unwrap().ok());
    assert!(!verify_counts(dir.path(), 3_507).unwrap().ok());

    let chunk = dir.path().join("3x2_tnf_1.txt");
    let text = fs::read_to_string(&chunk).unwrap();
    let edited = text.replacen("H:", "B:", 1);
    fs::write(&chunk, edited).unwrap();
    let report = verify_counts(dir.path(), 3_508).unwrap();
    assert!(!report.ok());
    assert_eq!(report.bad_chunks().count(), 1);
    assert!(matches!(read_corpus(dir.path()), Err(CorpusError::Corrupt(_))));

    let dropped: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(&chunk, dropped).unwrap();
    let report = verify_counts(dir.path(), 3_508).unwrap();
    assert_eq!(report.counted, 3_507);
    assert!(!report.ok());

    fs::remove_file(&chunk).unwrap();
    let report = verify_counts(dir.path(), 3_508).unwrap();
    assert_eq!(report.bad_chunks().next().unwrap().counted_lines, None);
}

#[test]
fn missing_manifest_is_an_error() {
    let dir = tempdir().unwrap();
    assert!(matches!(read_corpus(dir.path()), Err(CorpusError::Io { .. })));
    fs::write(dir.path().join(MANIFEST_FILE), "version=1\n").unwrap();
    assert!(matches!(read_corpus(dir.path()), Err(CorpusError::Manifest(_))));
}

#[test]
fn find_reports_exact_and_prefix_matches() {
    let cfg = tnf(3, 2);
    let dir = tempdir().unwrap();
    write_corpus(&cfg, dir.path(), 1_000).unwrap();
    let records = enumerate::collect(&cfg);
    let opts = RunOptions::default();

    let target = records.iter().find(|r| r.status.kind == StatusKind::Complete).unwrap();
    let hits = find(dir.path(), &target.machine, &opts).unwrap();
    assert!(hits.contains(&(target.id, MatchKind::Exact)), "{hits:?}");

    // Completing a bound-exceeded record finds that record as a prefix.
    let partial = records.iter().find(|r| r.status.kind == StatusKind::BoundExceeded).unwrap();
    let mut full = partial.machine.clone();
    let holes: Vec<_> = full.undefined_cells().collect();
    for (s, i) in holes {
        full.insert(s, i, "1rz".parse().unwrap()).unwrap();
    }
    let hits = find(dir.path(), &full, &opts).unwrap();
    assert!(hits.contains(&(partial.id, MatchKind::Prefix)), "{hits:?}");

    let wrong_dim = machine(2, 2, &["a01rb"]);
    assert!(matches!(
        find(dir.path(), &wrong_dim, &opts),
        Err(CorpusError::DimensionMismatch { .. })
    ));
    let silent = machine(3, 2, &["a00rz"]);
    assert!(matches!(find(dir.path(), &silent, &opts), Err(CorpusError::NotNormalizable(_))));
}

#[test]
fn record_streams_can_be_rewritten() {
    let cfg = tnf(2, 3);
    let records = enumerate::collect(&cfg);
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let first = write_corpus(&cfg, a.path(), 700).unwrap();
    let second = write_records(&cfg, &records, b.path(), 700).unwrap();
    assert_eq!(first, second);
}

fn corpus_2x3() -> (tempfile::TempDir, Vec<Machine>) {
    let cfg = tnf(2, 3);
    let dir = tempdir().unwrap();
    corpus::write_corpus(&cfg, dir.path(), 1_000).unwrap();
    let complete = enumerate::collect(&cfg)
        .into_iter()
        .filter(|r| r.status.kind == StatusKind::Complete)
        .map(|r| r.machine)
        .collect();
    (dir, complete)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn find_is_stable_under_renormalization(m in machine_in(dim(2, 3), 1.0), k in any::<prop::sample::Index>()) {
        thread_local! {
            static CORPUS: (tempfile::TempDir, Vec<Machine>) = corpus_2x3();
        }
        CORPUS.with(|(dir, complete)| {
            let opts = RunOptions::default();
            for target in [m.clone(), complete[k.index(complete.len())].clone()] {
                let once = find(dir.path(), &target, &opts);
                let twice = find(dir.path(), &normalize(&target, &opts).result, &opts);
                match (once, twice) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                    (Err(_), _) => {}
                    (Ok(a), Err(e)) => prop_assert!(false, "{a:?} then {e}"),
                }
            }
            Ok(())
        })?;
    }
}
