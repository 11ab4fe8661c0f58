//! Serialization: the canonical case document (round-trips and diffs), DOT
//! graph text for diagram rendering, Markdown coverage reports, and the
//! workbook writer that inverts ingest.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    DefeaterStatus as RecordStatus, StageContent, WorkbookModel, CONFIDENCE_HEADER, HEADER,
};
use crate::model::{
    AssuranceCase, DefeaterStatus, Edge, EdgeKind, Node, NodeId, StructuralViolation,
};
use crate::taxonomy::{DecompositionFrame, FactorId};
use crate::validate::{CellState, CoverageReport, Verdict};

pub const SCHEMA_VERSION: &str = "assurance-case/1";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("malformed canonical document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported schema version `{0}` (expected `{SCHEMA_VERSION}`)")]
    SchemaVersion(String),
    #[error("canonical document repeats node id `{0}`")]
    DuplicateNodeId(NodeId),
    #[error("canonical document violates case invariants: {}", format_violations(.0))]
    Violations(Vec<StructuralViolation>),
    #[error("unknown scope node `{0}`")]
    UnknownScope(NodeId),
    #[error("diagram style lacks a shape for node kind `{0}`")]
    IncompleteStyle(&'static str),
}

fn format_violations(violations: &[StructuralViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// The stable serialized form of a case: sorted node and edge lists under a
/// fixed schema version, so identical cases yield identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCaseDocument {
    pub schema_version: String,
    pub frame_name: String,
    pub meta: BTreeMap<String, String>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

pub fn to_canonical(case: &AssuranceCase) -> Vec<u8> {
    let doc = CanonicalCaseDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        frame_name: case.frame_name.clone(),
        meta: case.meta.clone(),
        nodes: case.nodes().cloned().collect(),
        edges: case.edges().cloned().collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("case serializes");
    bytes.push(b'\n');
    bytes
}

/// Loads a canonical document without enforcing invariants; the caller gets
/// the reconstructed case together with every structural violation found.
pub fn load_canonical(bytes: &[u8]) -> Result<(AssuranceCase, Vec<StructuralViolation>), EmitError> {
    let doc: CanonicalCaseDocument = serde_json::from_slice(bytes)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(EmitError::SchemaVersion(doc.schema_version));
    }
    let mut case = AssuranceCase::new(doc.frame_name, doc.meta);
    let mut seen = HashSet::new();
    for node in doc.nodes {
        if !seen.insert(node.id().clone()) {
            return Err(EmitError::DuplicateNodeId(node.id().clone()));
        }
        case.insert_node_unchecked(node);
    }
    for edge in doc.edges {
        case.insert_edge_unchecked(edge);
    }
    let violations = case.audit_structure();
    Ok((case, violations))
}

/// Strict inverse of [`to_canonical`]: any invariant violation is an error.
pub fn from_canonical(bytes: &[u8]) -> Result<AssuranceCase, EmitError> {
    let (case, violations) = load_canonical(bytes)?;
    if !violations.is_empty() {
        return Err(EmitError::Violations(violations));
    }
    Ok(case)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKindKey {
    Claim,
    SideClaim,
    Argument,
    Evidence,
    Defeater,
}

impl NodeKindKey {
    pub const ALL: [NodeKindKey; 5] = [
        NodeKindKey::Claim,
        NodeKindKey::SideClaim,
        NodeKindKey::Argument,
        NodeKindKey::Evidence,
        NodeKindKey::Defeater,
    ];

    fn of(node: &Node) -> NodeKindKey {
        match node {
            Node::Claim(_) => NodeKindKey::Claim,
            Node::SideClaim(_) => NodeKindKey::SideClaim,
            Node::Argument(_) => NodeKindKey::Argument,
            Node::Evidence(_) => NodeKindKey::Evidence,
            Node::Defeater(_) => NodeKindKey::Defeater,
        }
    }

    fn name(self) -> &'static str {
        match self {
            NodeKindKey::Claim => "claim",
            NodeKindKey::SideClaim => "side_claim",
            NodeKindKey::Argument => "argument",
            NodeKindKey::Evidence => "evidence",
            NodeKindKey::Defeater => "defeater",
        }
    }
}

/// Visual vocabulary of the emitted diagram. Construction fails unless every
/// node kind has a shape entry, so emission never falls back to a default.
#[derive(Debug, Clone)]
pub struct DiagramStyle {
    shapes: BTreeMap<NodeKindKey, String>,
    colors: BTreeMap<NodeKindKey, String>,
    defeater_status_colors: BTreeMap<DefeaterStatus, String>,
}

impl DiagramStyle {
    pub fn new(
        shapes: BTreeMap<NodeKindKey, String>,
        colors: BTreeMap<NodeKindKey, String>,
        defeater_status_colors: BTreeMap<DefeaterStatus, String>,
    ) -> Result<DiagramStyle, EmitError> {
        for kind in NodeKindKey::ALL {
            if !shapes.contains_key(&kind) {
                return Err(EmitError::IncompleteStyle(kind.name()));
            }
        }
        Ok(DiagramStyle {
            shapes,
            colors,
            defeater_status_colors,
        })
    }

    fn shape_attrs(&self, kind: NodeKindKey) -> &str {
        self.shapes.get(&kind).expect("validated at construction")
    }
}

impl Default for DiagramStyle {
    fn default() -> Self {
        let shapes = BTreeMap::from([
            (NodeKindKey::Claim, "shape=box, style=rounded".to_string()),
            (NodeKindKey::SideClaim, "shape=box, style=dashed".to_string()),
            (NodeKindKey::Argument, "shape=parallelogram".to_string()),
            (NodeKindKey::Evidence, "shape=cylinder".to_string()),
            (NodeKindKey::Defeater, "shape=octagon".to_string()),
        ]);
        let colors = BTreeMap::from([
            (NodeKindKey::Claim, "lightblue".to_string()),
            (NodeKindKey::SideClaim, "lightyellow".to_string()),
            (NodeKindKey::Argument, "lightgrey".to_string()),
            (NodeKindKey::Evidence, "lightgreen".to_string()),
            (NodeKindKey::Defeater, "lightpink".to_string()),
        ]);
        let defeater_status_colors = BTreeMap::from([
            (DefeaterStatus::Open, "red".to_string()),
            (DefeaterStatus::Resolved, "darkgreen".to_string()),
            (DefeaterStatus::AcceptedResidual, "orange".to_string()),
        ]);
        DiagramStyle {
            shapes,
            colors,
            defeater_status_colors,
        }
    }
}

/// What part of the case to render.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Full,
    /// The top substitution region and the phase claims only.
    Level1,
    Subtree(NodeId),
}

fn node_label(node: &Node) -> String {
    match node {
        Node::Claim(c) => c.text.clone(),
        Node::SideClaim(s) => s.text.clone(),
        Node::Argument(a) => a.kind.label().to_string(),
        Node::Evidence(e) => e.label.clone(),
        Node::Defeater(d) => format!("Defeater: {}", d.text),
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

fn in_scope_ids(case: &AssuranceCase, scope: &Scope) -> Result<BTreeSet<NodeId>, EmitError> {
    match scope {
        Scope::Full => Ok(case.nodes().map(|n| n.id().clone()).collect()),
        Scope::Level1 => {
            let mut ids: BTreeSet<NodeId> = ["case.top", "case.substitution", "case.substituted", "case.side-claim", "case.decomposition"]
                .into_iter()
                .map(NodeId::new)
                .filter(|id| case.node(id).is_some())
                .collect();
            for node in case.nodes() {
                if let Node::Claim(c) = node {
                    if c.role == crate::model::ClaimRole::Phase {
                        ids.insert(c.id.clone());
                    }
                }
            }
            Ok(ids)
        }
        Scope::Subtree(root) => {
            if case.node(root).is_none() {
                return Err(EmitError::UnknownScope(root.clone()));
            }
            let mut ids = BTreeSet::new();
            let mut stack = vec![root.clone()];
            while let Some(id) = stack.pop() {
                if !ids.insert(id.clone()) {
                    continue;
                }
                let node = case.node(&id).expect("traversal stays inside the case");
                for e in case.edges() {
                    if e.to != id {
                        continue;
                    }
                    let descend = match e.kind {
                        EdgeKind::Concludes => {
                            matches!(node, Node::Claim(_) | Node::SideClaim(_))
                        }
                        EdgeKind::Premise | EdgeKind::Evidences => {
                            matches!(node, Node::Argument(_))
                        }
                        // follow side supports only from genuine side claims;
                        // delegation cross-links would pull in foreign subtrees
                        EdgeKind::SideSupports => matches!(
                            case.node(&e.from),
                            Some(Node::SideClaim(_))
                        ),
                        EdgeKind::Defeats => true,
                    };
                    if descend {
                        stack.push(e.from.clone());
                    }
                }
            }
            Ok(ids)
        }
    }
}

/// Emits DOT graph text for the case (or a scoped part of it). Node and edge
/// statements are ordered deterministically; edges are drawn parent-to-child
/// to match the tree diagrams, side supports dashed, defeats colored.
pub fn to_graph_text(
    case: &AssuranceCase,
    style: &DiagramStyle,
    scope: &Scope,
) -> Result<String, EmitError> {
    let ids = in_scope_ids(case, scope)?;
    let mut out = String::new();
    out.push_str("digraph assurance_case {\n");
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");

    for id in &ids {
        let node = case.node(id).expect("scope ids come from the case");
        let kind = NodeKindKey::of(node);
        let mut attrs = format!(
            "label=\"{}\", {}",
            escape(&node_label(node)),
            style.shape_attrs(kind)
        );
        let color = match node {
            Node::Defeater(d) => style.defeater_status_colors.get(&d.status),
            _ => style.colors.get(&kind),
        };
        if let Some(c) = color {
            write!(attrs, ", fillcolor=\"{c}\"").unwrap();
        }
        writeln!(out, "  \"{}\" [{}];", escape(id.as_str()), attrs).unwrap();
    }

    for e in case.edges() {
        if !(ids.contains(&e.from) && ids.contains(&e.to)) {
            continue;
        }
        // visual direction: parent above child
        let (a, b, attrs) = match e.kind {
            EdgeKind::Concludes => (&e.to, &e.from, String::new()),
            EdgeKind::Premise | EdgeKind::Evidences => (&e.to, &e.from, String::new()),
            EdgeKind::SideSupports => (&e.from, &e.to, " [style=dashed]".to_string()),
            EdgeKind::Defeats => {
                let color = case
                    .node(&e.from)
                    .and_then(|n| match n {
                        Node::Defeater(d) => style.defeater_status_colors.get(&d.status),
                        _ => None,
                    })
                    .map(String::as_str)
                    .unwrap_or("red");
                (&e.from, &e.to, format!(" [color=\"{color}\", style=bold]"))
            }
        };
        writeln!(
            out,
            "  \"{}\" -> \"{}\"{};",
            escape(a.as_str()),
            escape(b.as_str()),
            attrs
        )
        .unwrap();
    }

    out.push_str("}\n");
    Ok(out)
}

fn cell_summary(state: &CellState, gaps: usize) -> String {
    let mut s = match state {
        CellState::Populated { entries } => format!("populated({entries})"),
        CellState::Delegated {
            target: Some(t),
            sound,
        } => {
            if *sound {
                format!("delegated({t})")
            } else {
                format!("delegated({t}) UNSOUND")
            }
        }
        CellState::Delegated { target: None, .. } => "not-occurred".to_string(),
        CellState::Missing => "missing".to_string(),
    };
    if gaps > 0 {
        write!(s, " gaps:{gaps}").unwrap();
    }
    s
}

/// Renders the coverage report as Markdown with the fixed section headings.
pub fn report_markdown(coverage: &CoverageReport, frame: &DecompositionFrame) -> String {
    let mut out = String::new();
    out.push_str("# Coverage\n\n");
    writeln!(
        out,
        "Frame: `{}` — verdict: **{}**\n",
        coverage.frame_name,
        match coverage.verdict {
            Verdict::Complete => "complete",
            Verdict::Incomplete => "incomplete",
        }
    )
    .unwrap();
    writeln!(
        out,
        "subcases: {}/{}\n",
        coverage.subcases_populated, coverage.subcase_total
    )
    .unwrap();

    for phase in &frame.phases {
        writeln!(out, "## {} ({})\n", phase.title, phase.id).unwrap();
        out.push_str("| Stage |");
        for factor in FactorId::WORKSHEET_FACTORS {
            write!(out, " {} |", factor.display_name()).unwrap();
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in FactorId::WORKSHEET_FACTORS {
            out.push_str("---|");
        }
        out.push('\n');
        for stage in frame.stages_of(&phase.id) {
            write!(out, "| {} |", stage.title).unwrap();
            for factor in FactorId::WORKSHEET_FACTORS {
                let status = coverage.cells.iter().find(|s| {
                    s.cell.phase == phase.id && s.cell.stage == stage.id && s.cell.factor == factor
                });
                match status {
                    Some(s) => {
                        write!(out, " {} |", cell_summary(&s.state, s.measurement_gaps)).unwrap()
                    }
                    None => out.push_str(" ? |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }

    let missing: Vec<&crate::validate::CellStatus> = coverage
        .cells
        .iter()
        .filter(|s| s.state == CellState::Missing)
        .collect();
    if !missing.is_empty() {
        out.push_str("## Missing\n\n");
        for s in &missing {
            writeln!(out, "- {}", s.cell).unwrap();
        }
        out.push('\n');
    }

    out.push_str("# Defeaters\n\n");
    if coverage.open_defeaters == 0 && coverage.accepted_residuals == 0 {
        out.push_str("none\n\n");
    } else {
        writeln!(out, "- open: {}", coverage.open_defeaters).unwrap();
        writeln!(out, "- accepted residual: {}", coverage.accepted_residuals).unwrap();
        out.push('\n');
    }

    out.push_str("# Warnings\n\n");
    if coverage.warnings.is_empty() {
        out.push_str("none\n");
    } else {
        for w in &coverage.warnings {
            writeln!(out, "- {w}").unwrap();
        }
    }
    out
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), EmitError> {
    fs::write(path, content).map_err(|e| EmitError::Io(path.to_path_buf(), e))
}

/// Writes a workbook model back to worksheet files. Re-parsing the written
/// directory yields an equal model.
pub fn write_workbook(
    model: &WorkbookModel,
    frame: &DecompositionFrame,
    root: &Path,
) -> Result<(), EmitError> {
    fs::create_dir_all(root).map_err(|e| EmitError::Io(root.to_path_buf(), e))?;

    let mut manifest = String::new();
    for (key, value) in [
        ("system_name", &model.manifest.system_name),
        ("frame", &model.manifest.frame),
        ("top_claim_subject", &model.manifest.top_claim_subject),
    ] {
        writeln!(manifest, "{},{}", key, csv_field(value)).unwrap();
    }
    for (key, value) in &model.manifest.extra {
        writeln!(manifest, "{},{}", csv_field(key), csv_field(value)).unwrap();
    }
    write_file(&root.join("manifest.csv"), &manifest)?;

    for ((phase, factor), worksheet) in &model.worksheets {
        let with_confidence = worksheet.rows.iter().any(|r| {
            matches!(&r.content, StageContent::Populated(p)
                if p.entries.iter().any(|e| e.confidence.is_some()))
        });
        let mut out = String::new();
        out.push_str(&HEADER.map(csv_field).join(","));
        if with_confidence {
            out.push(',');
            out.push_str(CONFIDENCE_HEADER);
        }
        out.push('\n');
        let blank_tail = if with_confidence { ",,,," } else { ",,," };
        for row in &worksheet.rows {
            let stage_title = frame
                .stage(&row.stage)
                .map(|s| s.title.as_str())
                .unwrap_or(row.stage.as_str());
            match &row.content {
                StageContent::Empty => {
                    writeln!(out, "{},{}", csv_field(stage_title), blank_tail).unwrap()
                }
                StageContent::NotOccurred => writeln!(
                    out,
                    "{},N/A - not occurred,{}",
                    csv_field(stage_title),
                    if with_confidence { ",,," } else { ",," }
                )
                .unwrap(),
                StageContent::Delegated(d) => writeln!(
                    out,
                    "{},{},{}",
                    csv_field(stage_title),
                    csv_field(&d.raw_text),
                    if with_confidence { ",,," } else { ",," }
                )
                .unwrap(),
                StageContent::Populated(cell) => {
                    for (i, entry) in cell.entries.iter().enumerate() {
                        let k = i + 1;
                        let (stage_col, claim_col) = if i == 0 {
                            (csv_field(stage_title), csv_field(&cell.sub_claim))
                        } else {
                            (String::new(), String::new())
                        };
                        let (mc, me) = match &entry.measurement {
                            Some(pair) => (
                                csv_field(&format!("MC{k}: {}", pair.claim)),
                                csv_field(&format!("ME{k}: {}", pair.evidence)),
                            ),
                            None => (String::new(), String::new()),
                        };
                        write!(
                            out,
                            "{},{},{},{},{}",
                            stage_col,
                            claim_col,
                            csv_field(&format!("E{k}: {}", entry.evidence)),
                            mc,
                            me
                        )
                        .unwrap();
                        if with_confidence {
                            match entry.confidence {
                                Some(c) => write!(out, ",{c}").unwrap(),
                                None => out.push(','),
                            }
                        }
                        out.push('\n');
                    }
                }
            }
        }
        write_file(
            &root.join(crate::ingest::worksheet_file_name(phase, *factor)),
            &out,
        )?;
    }

    if !model.defeaters.is_empty() {
        let mut out = String::from("Target,Text,Status,Resolution\n");
        for d in &model.defeaters {
            let stage_title = frame
                .stage(&d.target.stage)
                .map(|s| s.title.as_str())
                .unwrap_or(d.target.stage.as_str());
            let mut target = format!(
                "{}/{}/{}",
                d.target.phase,
                stage_title,
                d.target.factor.token()
            );
            if let Some(k) = d.target.evidence_index {
                write!(target, "/E{k}").unwrap();
            }
            let status = match d.status {
                RecordStatus::Open => "open",
                RecordStatus::Resolved => "resolved",
                RecordStatus::AcceptedResidual => "accepted_residual",
            };
            writeln!(
                out,
                "{},{},{},{}",
                csv_field(&target),
                csv_field(&d.text),
                status,
                csv_field(d.resolution.as_deref().unwrap_or(""))
            )
            .unwrap();
        }
        write_file(&root.join("defeaters.csv"), &out)?;
    }

    Ok(())
}
