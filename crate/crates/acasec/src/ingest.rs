//! Parses a template workbook (a directory of CSV worksheets mirroring the
//! Excel templates) into a schema-checked [`WorkbookModel`].
//!
//! One file per (phase, factor) worksheet, named `<PHASE>__<FACTOR>.csv`,
//! plus `manifest.csv` and an optional `defeaters.csv`. Rows with a blank
//! PDLC column are continuation rows and fold into the preceding stage's
//! entry list, matching the multi-row-per-stage layout of the templates.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::taxonomy::{DecompositionFrame, FactorId};

/// Canonical worksheet header columns.
pub const HEADER: [&str; 5] = [
    "PDLC",
    "Sub-claims",
    "Evidence",
    "Measurement Claim (MC)",
    "Measurement Evidence (ME)",
];

/// Optional sixth column.
pub const CONFIDENCE_HEADER: &str = "Confidence";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{file}: malformed CSV: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("manifest.csv not found in `{0}`")]
    MissingManifest(PathBuf),
    #[error("manifest.csv: missing required key `{0}`")]
    MissingManifestKey(&'static str),
    #[error("missing worksheet for {phase} x {factor} (expected file `{file}`)")]
    MissingWorksheet {
        phase: String,
        factor: FactorId,
        file: String,
    },
    #[error("{file}: header mismatch in column {column}: expected `{expected}`, found `{found}`")]
    HeaderMismatch {
        file: String,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("{file} row {row}: unknown stage `{title}`")]
    UnknownStage {
        file: String,
        row: usize,
        title: String,
    },
    #[error("{file}: no row for stage `{stage}`")]
    MissingStage { file: String, stage: String },
    #[error("{file}: duplicate stage `{title}`")]
    DuplicateStage { file: String, title: String },
    #[error("{file} stage `{stage}`: delegation target `{target}` is not a stage of this phase")]
    DanglingDelegation {
        file: String,
        stage: String,
        target: String,
    },
    #[error("{file} stage `{stage}`: evidence given without a sub-claim")]
    EmptySubClaim { file: String, stage: String },
    #[error("{file} stage `{stage}`: sub-claim given without any evidence entry")]
    NoEvidence { file: String, stage: String },
    #[error("{file} row {row}: continuation row without a populated stage above it")]
    OrphanContinuation { file: String, row: usize },
    #[error("{file} stage `{stage}` entry {index}: MC and ME must both be present or both blank")]
    IncompleteMeasurementPair {
        file: String,
        stage: String,
        index: usize,
    },
    #[error("{file} stage `{stage}`: confidence `{value}` is not a number in [0,1]")]
    BadConfidence {
        file: String,
        stage: String,
        value: String,
    },
    #[error("defeaters.csv row {row}: {message}")]
    BadDefeater { row: usize, message: String },
}

/// One evidence row of a populated cell, with its paired measurement columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    /// Evidence text with any `E<k>:` prefix stripped; ordinals are
    /// re-derived from row order.
    pub evidence: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub measurement: Option<MeasurementPair>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPair {
    pub claim: String,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulatedCell {
    pub sub_claim: String,
    pub entries: Vec<EvidenceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelegationKind {
    Cell,
    MeasurementOfCell,
}

/// An `N/A - covered in <stage>` reference. Targets are always stages of the
/// same phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelegationRef {
    pub kind: DelegationKind,
    /// Stage id of the covering cell.
    pub target_stage: String,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum StageContent {
    Populated(PopulatedCell),
    Delegated(DelegationRef),
    /// The literal `N/A - not occurred` marker, only meaningful for
    /// conditional stages such as incident handling.
    NotOccurred,
    /// A scaffolded row with no content yet; surfaces as a missing cell in
    /// the coverage report.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageBlock {
    /// Stage id within the frame.
    pub stage: String,
    pub content: StageContent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worksheet {
    pub phase: String,
    pub factor: FactorId,
    /// One block per frame stage of the phase, in frame order.
    pub rows: Vec<StageBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub system_name: String,
    pub frame: String,
    pub top_claim_subject: String,
    /// Optional keys such as version, author, date.
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefeaterStatus {
    Open,
    Resolved,
    AcceptedResidual,
}

/// Node path a defeater record attaches to: `PHASE/Stage Title/FACTOR[/E<k>]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefeaterTarget {
    pub phase: String,
    /// Stage id.
    pub stage: String,
    pub factor: FactorId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub evidence_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefeaterRecord {
    pub target: DefeaterTarget,
    pub text: String,
    pub status: DefeaterStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resolution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkbookModel {
    pub manifest: Manifest,
    pub worksheets: BTreeMap<(String, FactorId), Worksheet>,
    /// Worksheets required by the frame but absent on disk. Only populated
    /// in lenient mode; strict parsing errors instead.
    pub missing_worksheets: Vec<(String, FactorId)>,
    pub defeaters: Vec<DefeaterRecord>,
}

impl WorkbookModel {
    pub fn worksheet(&self, phase: &str, factor: FactorId) -> Option<&Worksheet> {
        self.worksheets.get(&(phase.to_string(), factor))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Error on absent worksheet files instead of recording them.
    pub require_all_worksheets: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            require_all_worksheets: true,
        }
    }
}

pub fn worksheet_file_name(phase: &str, factor: FactorId) -> String {
    format!("{}__{}.csv", phase, factor.token())
}

static DELEGATION_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^\s*N/A\s*[-\u{2013}]\s*covered\s+in\s+(measurement\s+of\s+)?(.+?)\s*$")
        .expect("delegation pattern")
});

static NOT_OCCURRED_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^\s*N/A\s*[-\u{2013}]\s*not\s+occurred\s*$").expect("not-occurred pattern")
});

/// Recognizes the `N/A - covered in [Measurement of] <Stage Title>` grammar.
/// Returns the delegation kind and the raw target title; anything that does
/// not match is ordinary content.
pub fn parse_delegation(cell_text: &str) -> Option<(DelegationKind, String)> {
    let caps = DELEGATION_RE.captures(cell_text)?;
    let kind = if caps.get(1).is_some() {
        DelegationKind::MeasurementOfCell
    } else {
        DelegationKind::Cell
    };
    Some((kind, caps[2].trim().to_string()))
}

static E_PREFIX_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*E\s*\d+\s*[:.]\s*").expect("prefix pattern"));
static MC_PREFIX_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*MC\s*\d+\s*[:.]\s*").expect("prefix pattern"));
static ME_PREFIX_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*ME\s*\d+\s*[:.]\s*").expect("prefix pattern"));

fn strip_label_prefix(text: &str, tag: &str) -> String {
    let re: &Regex = match tag {
        "E" => &E_PREFIX_RE,
        "MC" => &MC_PREFIX_RE,
        "ME" => &ME_PREFIX_RE,
        other => unreachable!("no label prefix pattern for `{other}`"),
    };
    re.replace(text.trim(), "").trim().to_string()
}

fn field(record: &csv::StringRecord, idx: usize) -> String {
    record.get(idx).unwrap_or("").trim().to_string()
}

/// Parses a single worksheet from CSV text.
pub fn parse_worksheet_str(
    content: &str,
    file: &str,
    phase: &str,
    factor: FactorId,
    frame: &DecompositionFrame,
) -> Result<Worksheet, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());

    let headers = reader
        .headers()
        .map_err(|source| IngestError::Csv {
            file: file.to_string(),
            source,
        })?
        .clone();
    let mut has_confidence = false;
    for (i, expected) in HEADER.iter().enumerate() {
        let found = headers.get(i).unwrap_or("").trim();
        if found != *expected {
            return Err(IngestError::HeaderMismatch {
                file: file.to_string(),
                column: i + 1,
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }
    if let Some(extra) = headers.get(5) {
        if extra.trim() != CONFIDENCE_HEADER {
            return Err(IngestError::HeaderMismatch {
                file: file.to_string(),
                column: 6,
                expected: CONFIDENCE_HEADER.to_string(),
                found: extra.trim().to_string(),
            });
        }
        has_confidence = true;
    }

    struct OpenBlock {
        stage: String,
        stage_title: String,
        content: StageContent,
    }

    let mut blocks: Vec<OpenBlock> = Vec::new();

    let parse_entry = |record: &csv::StringRecord,
                       stage_title: &str,
                       index: usize|
     -> Result<Option<EvidenceEntry>, IngestError> {
        let evidence = strip_label_prefix(&field(record, 2), "E");
        let mc = strip_label_prefix(&field(record, 3), "MC");
        let me = strip_label_prefix(&field(record, 4), "ME");
        let conf_raw = if has_confidence { field(record, 5) } else { String::new() };
        if evidence.is_empty() {
            if mc.is_empty() && me.is_empty() && conf_raw.is_empty() {
                return Ok(None);
            }
            return Err(IngestError::IncompleteMeasurementPair {
                file: file.to_string(),
                stage: stage_title.to_string(),
                index,
            });
        }
        let measurement = match (mc.is_empty(), me.is_empty()) {
            (true, true) => None,
            (false, false) => Some(MeasurementPair {
                claim: mc,
                evidence: me,
            }),
            _ => {
                return Err(IngestError::IncompleteMeasurementPair {
                    file: file.to_string(),
                    stage: stage_title.to_string(),
                    index,
                })
            }
        };
        let confidence = if conf_raw.is_empty() {
            None
        } else {
            let v: f64 = conf_raw.parse().map_err(|_| IngestError::BadConfidence {
                file: file.to_string(),
                stage: stage_title.to_string(),
                value: conf_raw.clone(),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(IngestError::BadConfidence {
                    file: file.to_string(),
                    stage: stage_title.to_string(),
                    value: conf_raw.clone(),
                });
            }
            Some(v)
        };
        Ok(Some(EvidenceEntry {
            evidence,
            measurement,
            confidence,
        }))
    };

    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|source| IngestError::Csv {
            file: file.to_string(),
            source,
        })?;
        let stage_title = field(&record, 0);
        let sub_claim = field(&record, 1);

        if stage_title.is_empty() {
            // continuation row
            let all_blank = (1..record.len()).all(|i| field(&record, i).is_empty());
            if all_blank {
                continue;
            }
            let Some(block) = blocks.last_mut() else {
                return Err(IngestError::OrphanContinuation {
                    file: file.to_string(),
                    row,
                });
            };
            let StageContent::Populated(cell) = &mut block.content else {
                return Err(IngestError::OrphanContinuation {
                    file: file.to_string(),
                    row,
                });
            };
            let index = cell.entries.len() + 1;
            if let Some(entry) = parse_entry(&record, &block.stage_title, index)? {
                cell.entries.push(entry);
            }
            continue;
        }

        let Some(stage) = frame.stage_by_title(phase, &stage_title) else {
            return Err(IngestError::UnknownStage {
                file: file.to_string(),
                row,
                title: stage_title,
            });
        };
        if blocks.iter().any(|b| b.stage == stage.id) {
            return Err(IngestError::DuplicateStage {
                file: file.to_string(),
                title: stage.title.clone(),
            });
        }

        let content = if let Some((kind, target_title)) = parse_delegation(&sub_claim) {
            let Some(target) = frame.stage_by_title(phase, &target_title) else {
                return Err(IngestError::DanglingDelegation {
                    file: file.to_string(),
                    stage: stage.title.clone(),
                    target: target_title,
                });
            };
            StageContent::Delegated(DelegationRef {
                kind,
                target_stage: target.id.clone(),
                raw_text: sub_claim.trim().to_string(),
            })
        } else if NOT_OCCURRED_RE.is_match(&sub_claim) {
            StageContent::NotOccurred
        } else {
            let entry = parse_entry(&record, &stage.title, 1)?;
            match (sub_claim.is_empty(), entry) {
                (true, None) => StageContent::Empty,
                (true, Some(_)) => {
                    return Err(IngestError::EmptySubClaim {
                        file: file.to_string(),
                        stage: stage.title.clone(),
                    })
                }
                (false, first) => StageContent::Populated(PopulatedCell {
                    sub_claim,
                    entries: first.into_iter().collect(),
                }),
            }
        };

        blocks.push(OpenBlock {
            stage: stage.id.clone(),
            stage_title: stage.title.clone(),
            content,
        });
    }

    // Populated blocks must carry at least one entry.
    for b in &blocks {
        if let StageContent::Populated(cell) = &b.content {
            if cell.entries.is_empty() {
                return Err(IngestError::NoEvidence {
                    file: file.to_string(),
                    stage: b.stage_title.clone(),
                });
            }
        }
    }

    // Every frame stage must appear; output follows frame order.
    let mut rows = Vec::new();
    for stage in frame.stages_of(phase) {
        match blocks.iter().find(|b| b.stage == stage.id) {
            Some(b) => rows.push(StageBlock {
                stage: stage.id.clone(),
                content: b.content.clone(),
            }),
            None => {
                return Err(IngestError::MissingStage {
                    file: file.to_string(),
                    stage: stage.title.clone(),
                })
            }
        }
    }

    Ok(Worksheet {
        phase: phase.to_string(),
        factor,
        rows,
    })
}

/// Parses one worksheet file.
pub fn parse_worksheet(
    path: &Path,
    phase: &str,
    factor: FactorId,
    frame: &DecompositionFrame,
) -> Result<Worksheet, IngestError> {
    let content =
        fs::read_to_string(path).map_err(|e| IngestError::Io(path.to_path_buf(), e))?;
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_worksheet_str(&content, &file, phase, factor, frame)
}

fn parse_manifest(root: &Path) -> Result<Manifest, IngestError> {
    let path = root.join("manifest.csv");
    if !path.exists() {
        return Err(IngestError::MissingManifest(root.to_path_buf()));
    }
    let content = fs::read_to_string(&path).map_err(|e| IngestError::Io(path.clone(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut map = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|source| IngestError::Csv {
            file: "manifest.csv".into(),
            source,
        })?;
        let key = field(&record, 0);
        let value = field(&record, 1);
        if key.is_empty() || (key == "key" && value == "value") {
            continue;
        }
        map.insert(key, value);
    }
    let mut take = |key: &'static str| -> Result<String, IngestError> {
        map.remove(key).ok_or(IngestError::MissingManifestKey(key))
    };
    Ok(Manifest {
        system_name: take("system_name")?,
        frame: take("frame")?,
        top_claim_subject: take("top_claim_subject")?,
        extra: map,
    })
}

fn parse_defeaters(
    root: &Path,
    frame: &DecompositionFrame,
) -> Result<Vec<DefeaterRecord>, IngestError> {
    let path = root.join("defeaters.csv");
    if !path.exists() {
        return Ok(Vec::new());
    }
    let content = fs::read_to_string(&path).map_err(|e| IngestError::Io(path.clone(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|source| IngestError::Csv {
            file: "defeaters.csv".into(),
            source,
        })?;
        let target_raw = field(&record, 0);
        let text = field(&record, 1);
        let status_raw = field(&record, 2);
        let resolution = {
            let r = field(&record, 3);
            (!r.is_empty()).then_some(r)
        };
        if target_raw.is_empty() && text.is_empty() {
            continue;
        }
        let target = parse_defeater_target(&target_raw, frame).map_err(|message| {
            IngestError::BadDefeater { row, message }
        })?;
        let status = match status_raw.to_ascii_lowercase().as_str() {
            "open" => DefeaterStatus::Open,
            "resolved" => DefeaterStatus::Resolved,
            "accepted_residual" => DefeaterStatus::AcceptedResidual,
            other => {
                return Err(IngestError::BadDefeater {
                    row,
                    message: format!("unknown status `{other}`"),
                })
            }
        };
        if matches!(status, DefeaterStatus::Resolved | DefeaterStatus::AcceptedResidual)
            && resolution.is_none()
        {
            return Err(IngestError::BadDefeater {
                row,
                message: format!("status `{status_raw}` requires a resolution"),
            });
        }
        if text.is_empty() {
            return Err(IngestError::BadDefeater {
                row,
                message: "empty defeater text".into(),
            });
        }
        out.push(DefeaterRecord {
            target,
            text,
            status,
            resolution,
        });
    }
    Ok(out)
}

fn parse_defeater_target(
    raw: &str,
    frame: &DecompositionFrame,
) -> Result<DefeaterTarget, String> {
    let parts: Vec<&str> = raw.split('/').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!(
            "target `{raw}` must be PHASE/Stage Title/FACTOR[/E<k>]"
        ));
    }
    let phase = parts[0].to_string();
    if frame.phase(&phase).is_none() {
        return Err(format!("unknown phase `{phase}`"));
    }
    let stage = frame
        .stage_by_title(&phase, parts[1])
        .ok_or_else(|| format!("unknown stage `{}` in phase `{phase}`", parts[1]))?;
    let factor = FactorId::parse_token(parts[2])
        .filter(|f| *f != FactorId::Measurement)
        .ok_or_else(|| format!("unknown factor `{}`", parts[2]))?;
    let evidence_index = match parts.get(3) {
        None => None,
        Some(p) => {
            let rest = p
                .strip_prefix('E')
                .or_else(|| p.strip_prefix('e'))
                .ok_or_else(|| format!("bad evidence selector `{p}`"))?;
            Some(
                rest.parse::<usize>()
                    .map_err(|_| format!("bad evidence selector `{p}`"))?,
            )
        }
    };
    Ok(DefeaterTarget {
        phase,
        stage: stage.id.clone(),
        factor,
        evidence_index,
    })
}

/// Parses the whole workbook directory against a frame.
pub fn parse_workbook(
    root: &Path,
    frame: &DecompositionFrame,
    options: ParseOptions,
) -> Result<WorkbookModel, IngestError> {
    let manifest = parse_manifest(root)?;
    let defeaters = parse_defeaters(root, frame)?;

    let mut jobs = Vec::new();
    let mut missing_worksheets = Vec::new();
    for (phase, factor) in crate::taxonomy::worksheet_ids(frame) {
        let file = worksheet_file_name(&phase, factor);
        let path = root.join(&file);
        if path.exists() {
            jobs.push((phase, factor, path));
        } else if options.require_all_worksheets {
            return Err(IngestError::MissingWorksheet {
                phase,
                factor,
                file,
            });
        } else {
            missing_worksheets.push((phase, factor));
        }
    }

    let parsed = par::map_collect(jobs, |(phase, factor, path)| {
        parse_worksheet(&path, &phase, factor, frame).map(|ws| ((phase, factor), ws))
    });

    let mut worksheets = BTreeMap::new();
    for result in parsed {
        let (key, ws) = result?;
        worksheets.insert(key, ws);
    }

    Ok(WorkbookModel {
        manifest,
        worksheets,
        missing_worksheets,
        defeaters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::standard_frame;

    #[test]
    fn delegation_grammar() {
        assert_eq!(
            parse_delegation("N/A - covered in Requirement Analysis"),
            Some((DelegationKind::Cell, "Requirement Analysis".into()))
        );
        assert_eq!(
            parse_delegation("N/A - covered in Measurement of Requirement Analysis"),
            Some((
                DelegationKind::MeasurementOfCell,
                "Requirement Analysis".into()
            ))
        );
        assert_eq!(
            parse_delegation("  n/a  -  COVERED IN   Test Planning  "),
            Some((DelegationKind::Cell, "Test Planning".into()))
        );
        assert_eq!(parse_delegation("Documented Change logs"), None);
        assert_eq!(parse_delegation("N/A"), None);
    }

    fn header() -> &'static str {
        "PDLC,Sub-claims,Evidence,Measurement Claim (MC),Measurement Evidence (ME)\n"
    }

    #[test]
    fn continuation_rows_fold() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Operational Monitoring,The method is appropriate,E1: Doc A,MC1: A measured,ME1: A report\n");
        csv.push_str(",,E2: Doc B,MC2: B measured,ME2: B report\n");
        for title in [
            "Incident and Event Handling",
            "Change Management",
            "Field Update and Maintenance",
        ] {
            csv.push_str(&format!("{title},claim,E1: x,MC1: y,ME1: z\n"));
        }
        let ws =
            parse_worksheet_str(&csv, "PD__METHOD.csv", "PD", FactorId::Method, &frame).unwrap();
        assert_eq!(ws.rows.len(), 4);
        let StageContent::Populated(cell) = &ws.rows[0].content else {
            panic!("expected populated");
        };
        assert_eq!(cell.entries.len(), 2);
        assert_eq!(cell.entries[0].evidence, "Doc A");
        assert_eq!(cell.entries[1].measurement.as_ref().unwrap().evidence, "B report");
    }

    #[test]
    fn header_only_file_reports_missing_stage() {
        let frame = standard_frame();
        let err = parse_worksheet_str(header(), "RE__MAN.csv", "RE", FactorId::Man, &frame)
            .unwrap_err();
        assert!(matches!(err, IngestError::MissingStage { .. }));
    }

    #[test]
    fn blank_measurement_pair_is_accepted() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Requirement Elicitation,claim,E1: artefact,,\n");
        for title in [
            "Requirement Analysis",
            "Requirement Specification",
            "Requirement Checking",
            "Requirement Management",
        ] {
            csv.push_str(&format!("{title},claim,E1: x,MC1: y,ME1: z\n"));
        }
        let ws =
            parse_worksheet_str(&csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap();
        let StageContent::Populated(cell) = &ws.rows[0].content else {
            panic!();
        };
        assert!(cell.entries[0].measurement.is_none());
    }

    #[test]
    fn lone_measurement_column_rejected() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Requirement Elicitation,claim,E1: artefact,MC1: only claim,\n");
        let err =
            parse_worksheet_str(&csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap_err();
        assert!(matches!(err, IngestError::IncompleteMeasurementPair { .. }));
    }

    #[test]
    fn unknown_stage_rejected() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Sprint Review,claim,E1: x,,\n");
        let err =
            parse_worksheet_str(&csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap_err();
        assert!(matches!(err, IngestError::UnknownStage { .. }));
    }

    #[test]
    fn header_mismatch_names_column() {
        let frame = standard_frame();
        let csv = "PDLC,Claims,Evidence,Measurement Claim (MC),Measurement Evidence (ME)\n";
        let err =
            parse_worksheet_str(csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap_err();
        match err {
            IngestError::HeaderMismatch { column, found, .. } => {
                assert_eq!(column, 2);
                assert_eq!(found, "Claims");
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn evidence_without_subclaim_rejected() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Requirement Elicitation,,E1: artefact,,\n");
        let err =
            parse_worksheet_str(&csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap_err();
        assert!(matches!(err, IngestError::EmptySubClaim { .. }));
    }

    #[test]
    fn cross_phase_delegation_rejected() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Requirement Elicitation,N/A - covered in Test Planning,,,\n");
        let err =
            parse_worksheet_str(&csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap_err();
        assert!(matches!(err, IngestError::DanglingDelegation { .. }));
    }

    #[test]
    fn not_occurred_marker() {
        let frame = standard_frame();
        let mut csv = String::from(header());
        csv.push_str("Operational Monitoring,claim,E1: x,MC1: y,ME1: z\n");
        csv.push_str("Incident and Event Handling,N/A - not occurred,,,\n");
        csv.push_str("Change Management,claim,E1: x,MC1: y,ME1: z\n");
        csv.push_str("Field Update and Maintenance,claim,E1: x,MC1: y,ME1: z\n");
        let ws =
            parse_worksheet_str(&csv, "PD__METHOD.csv", "PD", FactorId::Method, &frame).unwrap();
        assert_eq!(ws.rows[1].content, StageContent::NotOccurred);
    }

    #[test]
    fn confidence_column() {
        let frame = standard_frame();
        let mut csv = String::from(
            "PDLC,Sub-claims,Evidence,Measurement Claim (MC),Measurement Evidence (ME),Confidence\n",
        );
        csv.push_str("Requirement Elicitation,claim,E1: artefact,MC1: m,ME1: r,0.4\n");
        for title in [
            "Requirement Analysis",
            "Requirement Specification",
            "Requirement Checking",
            "Requirement Management",
        ] {
            csv.push_str(&format!("{title},claim,E1: x,MC1: y,ME1: z,\n"));
        }
        let ws = parse_worksheet_str(&csv, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap();
        let StageContent::Populated(cell) = &ws.rows[0].content else {
            panic!();
        };
        assert_eq!(cell.entries[0].confidence, Some(0.4));

        let bad = csv.replace("0.4", "1.5");
        let err = parse_worksheet_str(&bad, "RE__MAN.csv", "RE", FactorId::Man, &frame).unwrap_err();
        assert!(matches!(err, IngestError::BadConfidence { .. }));
    }
}
