//! Corpus ingestion: parse a directory of MIDI files, filter, and assign
//! hash-based splits.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use md5::{Digest, Md5};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::EventSequence;
use crate::midi::parse_midi;
use crate::text::write_event_sequences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|split| split.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown split {s:?}")))
    }
}

/// Split by the leading hex digit of an MD5 digest: `0`-`d` train, `e`
/// validation, `f` test.
pub fn split_for_digest(hex: &str) -> Result<Split> {
    match hex.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('0'..='9' | 'a'..='d') => Ok(Split::Train),
        Some('e') => Ok(Split::Valid),
        Some('f') => Ok(Split::Test),
        _ => Err(Error::invalid(format!("not a hex digest: {hex:?}"))),
    }
}

pub fn md5_hex(bytes: &[u8]) -> String {
    Md5::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    ParseError,
    TooShortEvents,
    TooShortSeconds,
    TooLong,
    TooManyParts,
}

impl RejectReason {
    pub const ALL: [RejectReason; 5] = [
        RejectReason::ParseError,
        RejectReason::TooShortEvents,
        RejectReason::TooShortSeconds,
        RejectReason::TooLong,
        RejectReason::TooManyParts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RejectReason::ParseError => "parse-error",
            RejectReason::TooShortEvents => "too-short-events",
            RejectReason::TooShortSeconds => "too-short-seconds",
            RejectReason::TooLong => "too-long",
            RejectReason::TooManyParts => "too-many-parts",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusFilters {
    pub min_events: usize,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub max_parts: usize,
}

impl Default for CorpusFilters {
    fn default() -> Self {
        CorpusFilters {
            min_events: 100,
            min_seconds: 10.0,
            max_seconds: 3600.0,
            max_parts: 16,
        }
    }
}

impl CorpusFilters {
    pub fn check(&self, seq: &EventSequence) -> Option<RejectReason> {
        let seconds = seq.seconds();
        if seq.len() < self.min_events {
            Some(RejectReason::TooShortEvents)
        } else if seconds < self.min_seconds {
            Some(RejectReason::TooShortSeconds)
        } else if seconds > self.max_seconds {
            Some(RejectReason::TooLong)
        } else if seq.instruments().len() > self.max_parts {
            Some(RejectReason::TooManyParts)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub md5: String,
    pub split: Split,
    pub events: usize,
    pub seconds: f64,
    pub parts: usize,
    pub reject: Option<RejectReason>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: &str = "id\tmd5\tsplit\tevents\tseconds\tparts\treason";

impl CorpusManifest {
    pub fn accepted(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.reject.is_none())
    }

    pub fn reject_count(&self, reason: RejectReason) -> usize {
        self.entries.iter().filter(|e| e.reject == Some(reason)).count()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.2}\t{}\t{}\n",
                e.id,
                e.md5,
                e.split,
                e.events,
                e.seconds,
                e.parts,
                e.reject.map_or("-", RejectReason::name)
            ));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == MANIFEST_HEADER => {}
            _ => {
                return Err(Error::TextFormat {
                    line: 1,
                    message: "missing manifest header".into(),
                })
            }
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::TextFormat {
                line: i + 1,
                message: format!("bad {what} in {line:?}"),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(bad("column count"));
            }
            let reject = match cols[6] {
                "-" => None,
                name => Some(
                    RejectReason::ALL
                        .into_iter()
                        .find(|r| r.name() == name)
                        .ok_or_else(|| bad("reason"))?,
                ),
            };
            entries.push(ManifestEntry {
                id: cols[0].to_string(),
                md5: cols[1].to_string(),
                split: cols[2].parse().map_err(|_| bad("split"))?,
                events: cols[3].parse().map_err(|_| bad("events"))?,
                seconds: cols[4].parse().map_err(|_| bad("seconds"))?,
                parts: cols[5].parse().map_err(|_| bad("parts"))?,
                reject,
            });
        }
        Ok(CorpusManifest { entries })
    }
}

/// Manifest plus the accepted sequences, in manifest order.
#[derive(Debug, Clone, Default)]
pub struct PreprocessedCorpus {
    pub manifest: CorpusManifest,
    /// `(index into manifest.entries, sequence)` for each accepted file.
    pub sequences: Vec<(usize, EventSequence)>,
}

impl PreprocessedCorpus {
    pub fn split(&self, split: Split) -> Vec<&EventSequence> {
        self.sequences
            .iter()
            .filter(|(i, _)| self.manifest.entries[*i].split == split)
            .map(|(_, s)| s)
            .collect()
    }
}

/// Processes one file's bytes into a manifest entry and, when accepted, its
/// sequence.
pub fn preprocess_file(
    id: &str,
    bytes: &[u8],
    filters: &CorpusFilters,
) -> (ManifestEntry, Option<EventSequence>) {
    let md5 = md5_hex(bytes);
    let split = split_for_digest(&md5).expect("md5 hex is non-empty");
    let mut entry = ManifestEntry {
        id: id.to_string(),
        md5,
        split,
        events: 0,
        seconds: 0.0,
        parts: 0,
        reject: Some(RejectReason::ParseError),
    };
    let Ok(seq) = parse_midi(bytes) else {
        return (entry, None);
    };
    entry.events = seq.len();
    entry.seconds = seq.seconds();
    entry.parts = seq.instruments().len();
    entry.reject = filters.check(&seq);
    let accepted = entry.reject.is_none().then_some(seq);
    (entry, accepted)
}

fn is_midi(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::at_path(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::at_path(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if is_midi(&path) {
            let id = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.push((id, path));
        }
    }
    Ok(())
}

/// Parses and filters every `.mid`/`.midi` file under `dir`. Per-file
/// failures are recorded in the manifest; only an unreadable directory aborts.
pub fn preprocess_corpus(dir: &Path, filters: &CorpusFilters) -> Result<PreprocessedCorpus> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();

    let results: Vec<(ManifestEntry, Option<EventSequence>)> = files
        .par_iter()
        .map(|(id, path)| match fs::read(path) {
            Ok(bytes) => preprocess_file(id, &bytes, filters),
            Err(_) => preprocess_file(id, &[], filters),
        })
        .collect();

    let mut corpus = PreprocessedCorpus::default();
    for (i, (entry, seq)) in results.into_iter().enumerate() {
        corpus.manifest.entries.push(entry);
        if let Some(seq) = seq {
            corpus.sequences.push((i, seq));
        }
    }
    Ok(corpus)
}

/// Writes `manifest.tsv` and one `<split>.events` file per split.
pub fn write_corpus(corpus: &PreprocessedCorpus, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::at_path(out_dir, e))?;
    let manifest = out_dir.join("manifest.tsv");
    fs::write(&manifest, corpus.manifest.to_tsv()).map_err(|e| Error::at_path(&manifest, e))?;
    for split in Split::ALL {
        let path = out_dir.join(format!("{split}.events"));
        let text = write_event_sequences(corpus.split(split));
        fs::write(&path, text).map_err(|e| Error::at_path(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, OrderMode};
    use crate::midi::write_midi;

    fn melody(n: usize, step: u32, instruments: u32) -> EventSequence {
        let events = (0..n)
            .map(|i| {
                let inst = i as u32 % instruments;
                Event::from_raw(i as u32 * step, step.min(999), inst * 128 + 60).unwrap()
            })
            .collect();
        EventSequence::new(events, OrderMode::Reject).unwrap()
    }

    #[test]
    fn digest_splits() {
        assert_eq!(split_for_digest("0abc").unwrap(), Split::Train);
        assert_eq!(split_for_digest("d000").unwrap(), Split::Train);
        assert_eq!(split_for_digest("e123").unwrap(), Split::Valid);
        assert_eq!(split_for_digest("F123").unwrap(), Split::Test);
        assert!(split_for_digest("").is_err());
        assert!(split_for_digest("g").is_err());
        assert_eq!(md5_hex(b""), "d41d8cd98f00b204e9800998ecf8427e");
    }

    #[test]
    fn split_proportions_are_14_1_1() {
        let mut counts = [0usize; 3];
        let n = 160_000;
        for i in 0..n {
            let split = split_for_digest(&md5_hex(&(i as u64).to_le_bytes())).unwrap();
            counts[split as usize] += 1;
        }
        let expect = [14.0 / 16.0, 1.0 / 16.0, 1.0 / 16.0];
        for (c, p) in counts.iter().zip(expect) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() < 5.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn filters() {
        let f = CorpusFilters::default();
        assert_eq!(f.check(&melody(99, 20, 1)), Some(RejectReason::TooShortEvents));
        assert_eq!(f.check(&melody(100, 5, 1)), Some(RejectReason::TooShortSeconds));
        // 61 minutes
        assert_eq!(f.check(&melody(100, 3660, 1)), Some(RejectReason::TooLong));
        assert_eq!(f.check(&melody(200, 20, 17)), Some(RejectReason::TooManyParts));
        assert_eq!(f.check(&melody(200, 20, 16)), None);
    }

    #[test]
    fn manifest_round_trips() {
        let manifest = CorpusManifest {
            entries: vec![
                ManifestEntry {
                    id: "a.mid".into(),
                    md5: "e0".into(),
                    split: Split::Valid,
                    events: 120,
                    seconds: 12.5,
                    parts: 2,
                    reject: None,
                },
                ManifestEntry {
                    id: "b/c.mid".into(),
                    md5: "01".into(),
                    split: Split::Train,
                    events: 0,
                    seconds: 0.0,
                    parts: 0,
                    reject: Some(RejectReason::ParseError),
                },
            ],
        };
        let text = manifest.to_tsv();
        assert!(text.starts_with(MANIFEST_HEADER));
        assert_eq!(CorpusManifest::from_tsv(&text).unwrap(), manifest);
    }

    #[test]
    fn file_with_e_digest_goes_to_validation() {
        let base = write_midi(&melody(120, 10, 1)).unwrap();
        // append an unknown chunk until the digest starts with 'e'
        let bytes = (0u32..)
            .map(|salt| {
                let mut b = base.clone();
                b.extend_from_slice(b"XTRA");
                b.extend_from_slice(&4u32.to_be_bytes());
                b.extend_from_slice(&salt.to_be_bytes());
                b
            })
            .find(|b| md5_hex(b).starts_with('e'))
            .unwrap();
        let (entry, seq) = preprocess_file("x.mid", &bytes, &CorpusFilters::default());
        assert_eq!(entry.split, Split::Valid);
        assert_eq!(entry.reject, None);
        assert_eq!(seq.unwrap().len(), 120);
    }

    #[test]
    fn directory_batch_counts_every_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("good.mid"), write_midi(&melody(150, 10, 2)).unwrap()).unwrap();
        fs::write(dir.path().join("short.mid"), write_midi(&melody(99, 20, 1)).unwrap()).unwrap();
        fs::write(dir.path().join("junk.MID"), b"not midi").unwrap();
        fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/long.midi"), write_midi(&melody(100, 3660, 1)).unwrap())
            .unwrap();
        let corpus = preprocess_corpus(dir.path(), &CorpusFilters::default()).unwrap();
        let ids: Vec<&str> = corpus.manifest.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["good.mid", "junk.MID", "short.mid", "sub/long.midi"]);
        let rejected = corpus.manifest.entries.iter().filter(|e| e.reject.is_some()).count();
        assert_eq!(rejected + corpus.sequences.len(), 4);
        assert_eq!(corpus.manifest.reject_count(RejectReason::ParseError), 1);
        assert_eq!(corpus.manifest.reject_count(RejectReason::TooShortEvents), 1);
        assert_eq!(corpus.manifest.reject_count(RejectReason::TooLong), 1);

        let out = dir.path().join("out");
        write_corpus(&corpus, &out).unwrap();
        assert!(out.join("manifest.tsv").exists());
        let total: usize = Split::ALL
            .iter()
            .map(|s| {
                let text = fs::read_to_string(out.join(format!("{s}.events"))).unwrap();
                crate::text::parse_event_sequences(&text).unwrap().len()
            })
            .sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn missing_directory_is_an_error() {
        assert!(preprocess_corpus(Path::new("/nonexistent/dir"), &CorpusFilters::default()).is_err());
    }
}
