use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Corpus, Label, Requirement, SpecMeta};
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["spec_id", "req_id", "text", "label"];
const META_HEADER: [&str; 4] = ["spec_id", "spec_type", "project_type", "prelabeled"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guesses the format from the file extension (`.jsonl`/`.ndjson` vs anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => {
                CorpusFormat::Jsonl
            }
            _ => CorpusFormat::Csv,
        }
    }
}

/// `corpus.csv` → `corpus.meta.csv`
pub fn meta_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.csv"))
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    spec_id: String,
    req_id: String,
    text: String,
    label: Option<u8>,
}

/// Loads a corpus and, when present, its `<name>.meta.csv` sidecar.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let rows = match format {
        CorpusFormat::Csv => read_csv_rows(path)?,
        CorpusFormat::Jsonl => read_jsonl_rows(path)?,
    };
    let requirements = validate_rows(rows)?;
    let meta = meta_path(path);
    if meta.exists() {
        Corpus::new(requirements, read_meta(&meta)?)
    } else {
        Corpus::with_default_specs(requirements)
    }
}

/// Writes the corpus rows plus the metadata sidecar next to them.
pub fn save_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<()> {
    match format {
        CorpusFormat::Csv => write_csv(corpus, path)?,
        CorpusFormat::Jsonl => write_jsonl(corpus, path)?,
    }
    write_meta(corpus.specs(), &meta_path(path))
}

fn csv_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = csv_line(&err);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.is_empty() {
        return Err(Error::NoRows(path.to_path_buf()));
    }
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", expected.join(","), header),
        });
    }
    Ok(())
}

fn read_csv_rows(path: &Path) -> Result<Vec<(u64, JsonRow)>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(open(path)?);
    check_header(path, &mut reader, &HEADER)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let label = match record[3].trim() {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("label must be 0, 1 or empty, found {other:?}"),
                })
            }
        };
        rows.push((
            line,
            JsonRow {
                spec_id: record[0].to_string(),
                req_id: record[1].to_string(),
                text: record[2].to_string(),
                label,
            },
        ));
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<(u64, JsonRow)>> {
    let reader = BufReader::new(open(path)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if matches!(row.label, Some(l) if l > 1) {
            return Err(Error::Parse {
                line: line_no,
                message: "label must be 0, 1 or null".into(),
            });
        }
        rows.push((line_no, row));
    }
    Ok(rows)
}

fn validate_rows(rows: Vec<(u64, JsonRow)>) -> Result<Vec<Requirement>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.spec_id.trim().is_empty() || row.req_id.trim().is_empty() {
            return Err(Error::Parse {
                line,
                message: "spec_id and req_id must be non-empty".into(),
            });
        }
        if row.text.trim().is_empty() {
            return Err(Error::EmptyText { line });
        }
        if !seen.insert((row.spec_id.clone(), row.req_id.clone())) {
            return Err(Error::DuplicateKey {
                line,
                spec_id: row.spec_id,
                req_id: row.req_id,
            });
        }
        if row.text.split_whitespace().count() == 1 {
            log::warn!(
                "line {line}: requirement ({}, {}) is a single word",
                row.spec_id,
                row.req_id
            );
        }
        out.push(Requirement {
            spec_id: row.spec_id,
            req_id: row.req_id,
            text: row.text,
            label: row.label.map(|l| Label::from_bool(l == 1)),
        });
    }
    Ok(out)
}

fn read_meta(path: &Path) -> Result<Vec<SpecMeta>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(open(path)?);
    check_header(path, &mut reader, &META_HEADER)?;
    let mut specs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |e: Error| Error::Parse {
            line,
            message: format!("{}: {e}", path.display()),
        };
        specs.push(SpecMeta {
            spec_id: record[0].to_string(),
            spec_type: record[1].parse().map_err(parse_err)?,
            project_type: record[2].parse().map_err(parse_err)?,
            prelabeled: record[3].parse().map_err(parse_err)?,
        });
    }
    Ok(specs)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn label_field(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Positive) => "1",
        Some(Label::Negative) => "0",
        None => "",
    }
}

fn write_csv(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    writer.write_record(HEADER).map_err(|e| csv_error(path, e))?;
    for r in corpus.requirements() {
        writer
            .write_record([
                r.spec_id.as_str(),
                r.req_id.as_str(),
                r.text.as_str(),
                label_field(r.label),
            ])
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    for r in corpus.requirements() {
        let row = JsonRow {
            spec_id: r.spec_id.clone(),
            req_id: r.req_id.clone(),
            text: r.text.clone(),
            label: r.label.map(Label::as_digit),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn write_meta(specs: &[SpecMeta], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    writer.write_record(META_HEADER).map_err(|e| csv_error(path, e))?;
    for m in specs {
        writer
            .write_record([
                m.spec_id.as_str(),
                m.spec_type.as_str(),
                m.project_type.as_str(),
                m.prelabeled.as_str(),
            ])
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Prelabeled, ProjectType, SpecType};
    use proptest::prelude::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_row_maps_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.csv",
            "spec_id,req_id,text,label\nS1,R1,\"The system shall encrypt data at rest\",1\nS1,R2,\"Print, then store\",\n",
        );
        let c = load_corpus(&p, CorpusFormat::Csv).unwrap();
        let r = &c.requirements()[0];
        assert_eq!(r.spec_id, "S1");
        assert_eq!(r.req_id, "R1");
        assert_eq!(r.text, "The system shall encrypt data at rest");
        assert_eq!(r.label, Some(Label::Positive));
        assert_eq!(c.requirements()[1].label, None);
        assert_eq!(c.requirements()[1].text, "Print, then store");
        assert_eq!(c.specs(), &[SpecMeta::unknown("S1")]);
    }

    #[test]
    fn duplicate_key_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.csv",
            "spec_id,req_id,text,label\nS1,R1,a b,1\nS1,R1,c d,0\n",
        );
        match load_corpus(&p, CorpusFormat::Csv) {
            Err(Error::DuplicateKey { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "spec_id,req_id,text,label\nS1,R1,a b,1\nS1,R2,c\n");
        assert!(matches!(load_corpus(&p, CorpusFormat::Csv), Err(Error::Parse { line: 3, .. })));

        let p = write(dir.path(), "b.csv", "spec_id,req_id,text,label\nS1,R1,a b,yes\n");
        assert!(matches!(load_corpus(&p, CorpusFormat::Csv), Err(Error::Parse { line: 2, .. })));

        let p = write(dir.path(), "c.csv", "spec_id,req_id,text,label\nS1,R1,  ,1\n");
        assert!(matches!(load_corpus(&p, CorpusFormat::Csv), Err(Error::EmptyText { line: 2 })));

        let p = write(dir.path(), "d.csv", "id,text\n");
        assert!(matches!(load_corpus(&p, CorpusFormat::Csv), Err(Error::Parse { line: 1, .. })));

        let p = write(dir.path(), "e.csv", "");
        assert!(matches!(load_corpus(&p, CorpusFormat::Csv), Err(Error::NoRows(_))));

        let p = write(dir.path(), "f.jsonl", "{\"spec_id\":\"S1\",\"req_id\":\"R1\",\"text\":\"a\",\"label\":1}\n{oops\n");
        assert!(matches!(load_corpus(&p, CorpusFormat::Jsonl), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_corpus_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        save_corpus(&Corpus::default(), &p, CorpusFormat::Csv).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "spec_id,req_id,text,label\n");
        let back = load_corpus(&p, CorpusFormat::Csv).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn sidecar_metadata_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let reqs = vec![
            Requirement {
                spec_id: "S1".into(),
                req_id: "R1".into(),
                text: "The Vendor shall ensure, \"quoted\", data is secure".into(),
                label: Some(Label::Positive),
            },
            Requirement {
                spec_id: "S2".into(),
                req_id: "R1".into(),
                text: "Print\nreports".into(),
                label: None,
            },
        ];
        let specs = vec![
            SpecMeta {
                spec_id: "S1".into(),
                spec_type: SpecType::Rfp,
                project_type: ProjectType::Commercial,
                prelabeled: Prelabeled::Partially,
            },
            SpecMeta {
                spec_id: "S2".into(),
                spec_type: SpecType::Bl,
                project_type: ProjectType::Research,
                prelabeled: Prelabeled::No,
            },
        ];
        let c = Corpus::new(reqs, specs).unwrap();
        for (name, fmt) in [("c.csv", CorpusFormat::Csv), ("c.jsonl", CorpusFormat::Jsonl)] {
            let p = dir.path().join(name);
            save_corpus(&c, &p, fmt).unwrap();
            assert!(meta_path(&p).exists());
            assert_eq!(load_corpus(&p, fmt).unwrap(), c);
        }
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        let row = (0u8..3, "\\PC{1,40}", prop::option::of(any::<bool>()));
        prop::collection::vec(row, 0..20).prop_map(|rows| {
            let reqs = rows
                .into_iter()
                .enumerate()
                .filter(|(_, (_, text, _))| !text.trim().is_empty())
                .map(|(i, (spec, text, label))| Requirement {
                    spec_id: format!("S{spec}"),
                    req_id: format!("R{i}"),
                    text,
                    label: label.map(Label::from_bool),
                })
                .collect();
            Corpus::with_default_specs(reqs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn save_then_load_is_identity(c in arb_corpus(), jsonl in any::<bool>()) {
            let dir = tempfile::tempdir().unwrap();
            let (name, fmt) = if jsonl { ("c.jsonl", CorpusFormat::Jsonl) } else { ("c.csv", CorpusFormat::Csv) };
            let p = dir.path().join(name);
            save_corpus(&c, &p, fmt).unwrap();
            prop_assert_eq!(load_corpus(&p, fmt).unwrap(), c);
        }
    }
}
