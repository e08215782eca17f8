//! Sequence manifest.
//!
//! ```text
//! index,timestamp,filename,exposure_time_s,tag,provenance,level,stops
//! 0,0/1,frame_00000.ppm,0.04,H,real,,2
//! 1,3/2,hdr_00001.pfm,,,synth,1,2
//! ```
//!
//! UTF-8, LF line endings, header row required and fixed. Timestamps are
//! written as `num/den`; the reader also accepts bare integers. `exposure_time_s`
//! and `tag` may be empty (HDR outputs); `level` is empty exactly when
//! `provenance` is `real`. Exposure times are written in shortest
//! round-trip form.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::radiometry::{ExposureTag, Provenance};
use crate::scheduler::Timestamp;
use crate::{Error, Result};

pub const HEADER: [&str; 8] = [
    "index",
    "timestamp",
    "filename",
    "exposure_time_s",
    "tag",
    "provenance",
    "level",
    "stops",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub index: u64,
    pub timestamp: Timestamp,
    pub filename: String,
    pub exposure_time_s: Option<f64>,
    pub tag: Option<ExposureTag>,
    pub provenance: Provenance,
    pub stops: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut last_real_tag: Option<ExposureTag> = None;
        for (i, r) in records.iter().enumerate() {
            if i > 0 && r.index <= records[i - 1].index {
                let what = if r.index == records[i - 1].index { "duplicate" } else { "decreasing" };
                return Err(Error::Manifest(format!("{what} index {} at row {}", r.index, i + 1)));
            }
            if r.filename.is_empty() || r.filename.contains(['\n', '\r']) {
                return Err(Error::Manifest(format!("bad filename at row {}", i + 1)));
            }
            if !names.insert(r.filename.as_str()) {
                return Err(Error::Manifest(format!("duplicate filename {:?}", r.filename)));
            }
            if let Some(dt) = r.exposure_time_s {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::Manifest(format!("exposure time {dt} at row {}", i + 1)));
                }
            }
            if let (Provenance::Real, Some(tag)) = (r.provenance, r.tag) {
                if last_real_tag == Some(tag) {
                    return Err(Error::Manifest(format!(
                        "real frames do not alternate: two consecutive {tag} at index {}",
                        r.index
                    )));
                }
                last_real_tag = Some(tag);
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ManifestRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Manifest(e.to_string());
        w.write_record(HEADER).map_err(csv_err)?;
        for r in &self.records {
            let (prov, level) = match r.provenance {
                Provenance::Real => ("real", String::new()),
                Provenance::Synthesized { level } => ("synth", level.to_string()),
            };
            w.write_record([
                r.index.to_string(),
                r.timestamp.to_string(),
                r.filename.clone(),
                r.exposure_time_s.map(|v| v.to_string()).unwrap_or_default(),
                r.tag.map(|t| t.as_str().to_string()).unwrap_or_default(),
                prov.to_string(),
                level,
                r.stops.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_reader(bytes);
        let headers = rdr.headers().map_err(|e| Error::Manifest(e.to_string()))?.clone();
        if let Some(unknown) = headers.iter().find(|h| !HEADER.contains(h)) {
            return Err(Error::Manifest(format!("unknown column {unknown:?}")));
        }
        if headers.iter().ne(HEADER) {
            return Err(Error::Manifest(format!(
                "header must be exactly {:?}, got {:?}",
                HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Manifest(e.to_string()))?;
            records.push(parse_record(&rec, row + 2)?);
        }
        Self::new(records)
    }
}

fn parse_record(rec: &csv::StringRecord, line: usize) -> Result<ManifestRecord> {
    let field = |i: usize| rec.get(i).unwrap_or("");
    let bad = |col: &str, v: &str| Error::Manifest(format!("line {line}: bad {col} {v:?}"));
    let index = field(0).parse().map_err(|_| bad("index", field(0)))?;
    let timestamp: Timestamp = field(1)
        .parse()
        .map_err(|e| Error::Manifest(format!("line {line}: {e}")))?;
    let exposure_time_s = match field(3) {
        "" => None,
        s => Some(s.parse().map_err(|_| bad("exposure_time_s", s))?),
    };
    let tag = match field(4) {
        "" => None,
        "H" => Some(ExposureTag::High),
        "L" => Some(ExposureTag::Low),
        s => return Err(bad("tag", s)),
    };
    let provenance = match (field(5), field(6)) {
        ("real", "") => Provenance::Real,
        ("synth", lvl) => Provenance::Synthesized {
            level: lvl.parse().map_err(|_| bad("level", lvl))?,
        },
        (p, l) => return Err(bad("provenance/level", &format!("{p},{l}"))),
    };
    let stops = field(7).parse().map_err(|_| bad("stops", field(7)))?;
    Ok(ManifestRecord {
        index,
        timestamp,
        filename: field(2).to_string(),
        exposure_time_s,
        tag,
        provenance,
        stops,
    })
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    Manifest::from_bytes(&fs::read(path)?)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    fs::write(path, manifest.to_bytes()?)?;
    Ok(())
}
