//! Completeness, measurement-pairing, and defeater audits over a workbook /
//! case pair. Findings are data: the functions never fail, they report.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{DefeaterStatus as RecordStatus, StageContent, WorkbookModel};
use crate::model::{
    AssuranceCase, DefeaterNode, DefeaterStatus, EdgeKind, EvidenceKind, Node, NodeId,
};
use crate::par;
use crate::taxonomy::{enumerate_cells, expected_subcase_count, CellKey, DecompositionFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum CellState {
    Populated {
        entries: usize,
    },
    /// `target` is the covering stage id; `None` records a cell marked
    /// `N/A - not occurred`. `sound` is false when the target cell is not
    /// itself populated.
    Delegated {
        target: Option<String>,
        sound: bool,
    },
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub cell: CellKey,
    pub state: CellState,
    /// Entries lacking their MC/ME measurement pair.
    pub measurement_gaps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub frame_name: String,
    pub cells: Vec<CellStatus>,
    pub subcase_total: usize,
    pub subcases_populated: usize,
    pub open_defeaters: usize,
    pub accepted_residuals: usize,
    pub warnings: Vec<String>,
    pub verdict: Verdict,
}

/// Produces one status per enumerated cell plus the overall verdict.
///
/// A cell counts as covered when it is populated, soundly delegated, or
/// marked not-occurred. The verdict is complete only with no missing cells,
/// no measurement gaps, no unsound delegations, and no open defeaters.
pub fn check_coverage(frame: &DecompositionFrame, workbook: &WorkbookModel) -> CoverageReport {
    let cells = enumerate_cells(frame);
    let content_of = |cell: &CellKey| -> Option<&StageContent> {
        workbook
            .worksheet(&cell.phase, cell.factor)
            .and_then(|ws| ws.rows.iter().find(|r| r.stage == cell.stage))
            .map(|r| &r.content)
    };

    let statuses: Vec<CellStatus> = par::map_collect(cells, |cell| {
        let (state, gaps) = match content_of(&cell) {
            None | Some(StageContent::Empty) => (CellState::Missing, 0),
            Some(StageContent::Populated(p)) => {
                let gaps = p.entries.iter().filter(|e| e.measurement.is_none()).count();
                (
                    CellState::Populated {
                        entries: p.entries.len(),
                    },
                    gaps,
                )
            }
            Some(StageContent::Delegated(d)) => {
                let target_cell = CellKey {
                    phase: cell.phase.clone(),
                    stage: d.target_stage.clone(),
                    factor: cell.factor,
                };
                let sound = matches!(content_of(&target_cell), Some(StageContent::Populated(_)));
                (
                    CellState::Delegated {
                        target: Some(d.target_stage.clone()),
                        sound,
                    },
                    0,
                )
            }
            Some(StageContent::NotOccurred) => (
                CellState::Delegated {
                    target: None,
                    sound: true,
                },
                0,
            ),
        };
        CellStatus {
            cell,
            state,
            measurement_gaps: gaps,
        }
    });

    let mut warnings = Vec::new();
    let mut subcases_populated = 0;
    let mut missing = 0;
    let mut gaps_total = 0;
    let mut unsound = 0;
    for s in &statuses {
        match &s.state {
            CellState::Populated { .. } => {
                subcases_populated += 1; // factor subcase
                if s.measurement_gaps == 0 {
                    subcases_populated += 1; // measurement subcase
                } else {
                    gaps_total += s.measurement_gaps;
                    warnings.push(format!(
                        "cell {} has {} evidence entr{} without a measurement pair",
                        s.cell,
                        s.measurement_gaps,
                        if s.measurement_gaps == 1 { "y" } else { "ies" }
                    ));
                }
            }
            CellState::Delegated { target, sound } => {
                if target.is_none() {
                    warnings.push(format!("cell {} is marked as not occurred", s.cell));
                }
                if *sound {
                    subcases_populated += 2;
                } else {
                    unsound += 1;
                    warnings.push(format!(
                        "cell {} delegates to a cell that is not populated",
                        s.cell
                    ));
                }
            }
            CellState::Missing => missing += 1,
        }
    }
    warnings.push(
        "the requirements-completeness side claim carries no evidence of its own".to_string(),
    );

    let open_defeaters = workbook
        .defeaters
        .iter()
        .filter(|d| d.status == RecordStatus::Open)
        .count();
    let accepted_residuals = workbook
        .defeaters
        .iter()
        .filter(|d| d.status == RecordStatus::AcceptedResidual)
        .count();
    if accepted_residuals > 0 {
        warnings.push(format!(
            "{accepted_residuals} defeater(s) accepted as residual risk"
        ));
    }

    let verdict = if missing == 0 && gaps_total == 0 && unsound == 0 && open_defeaters == 0 {
        Verdict::Complete
    } else {
        Verdict::Incomplete
    };

    CoverageReport {
        frame_name: frame.name.clone(),
        subcase_total: expected_subcase_count(frame),
        subcases_populated,
        cells: statuses,
        open_defeaters,
        accepted_residuals,
        warnings,
        verdict,
    }
}

/// Partition of a case's defeater nodes by status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefeaterPartition<'a> {
    pub open: Vec<&'a DefeaterNode>,
    pub accepted: Vec<&'a DefeaterNode>,
    pub resolved: Vec<&'a DefeaterNode>,
}

pub fn check_defeaters(case: &AssuranceCase) -> DefeaterPartition<'_> {
    let mut partition = DefeaterPartition {
        open: Vec::new(),
        accepted: Vec::new(),
        resolved: Vec::new(),
    };
    for node in case.nodes() {
        if let Node::Defeater(d) = node {
            match d.status {
                DefeaterStatus::Open => partition.open.push(d),
                DefeaterStatus::AcceptedResidual => partition.accepted.push(d),
                DefeaterStatus::Resolved => partition.resolved.push(d),
            }
        }
    }
    partition
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceCalculus {
    WeakestLink,
    Average,
}

/// A non-normative confidence heuristic. Scores propagate from evidence
/// confidence values (default 1.0) up the core subgraph; an open defeater
/// zeroes its target and, under weakest-link, everything above it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceAssessment {
    pub scores: BTreeMap<NodeId, f64>,
    pub calculus: ConfidenceCalculus,
    pub notes: String,
}

pub fn assess_confidence(case: &AssuranceCase, calculus: ConfidenceCalculus) -> ConfidenceAssessment {
    let defeated: HashSet<&NodeId> = case
        .nodes()
        .filter_map(|n| match n {
            Node::Defeater(d) if d.status == DefeaterStatus::Open => Some(&d.target),
            _ => None,
        })
        .collect();

    // supports[arg] = evidence and premise sources; conclusions[claim] = args
    let mut supports: HashMap<&NodeId, Vec<&NodeId>> = HashMap::new();
    let mut conclusions: HashMap<&NodeId, Vec<&NodeId>> = HashMap::new();
    for e in case.edges() {
        match e.kind {
            EdgeKind::Premise | EdgeKind::Evidences => {
                supports.entry(&e.to).or_default().push(&e.from)
            }
            EdgeKind::Concludes => conclusions.entry(&e.to).or_default().push(&e.from),
            _ => {}
        }
    }

    let agg = |values: Vec<f64>| -> f64 {
        if values.is_empty() {
            return 1.0;
        }
        match calculus {
            ConfidenceCalculus::WeakestLink => values.into_iter().fold(f64::INFINITY, f64::min),
            ConfidenceCalculus::Average => {
                let n = values.len() as f64;
                values.into_iter().sum::<f64>() / n
            }
        }
    };

    let mut scores: HashMap<NodeId, f64> = HashMap::new();
    let order = case
        .core_topological_order()
        .unwrap_or_else(|| case.nodes().map(|n| n.id().clone()).collect());
    // premises come before the arguments they feed, so a single forward pass
    // resolves every dependency
    for id in order.iter() {
        let Some(node) = case.node(id) else { continue };
        let score = if defeated.contains(id) {
            0.0
        } else {
            match node {
                Node::Evidence(ev) => ev.confidence.unwrap_or(1.0),
                Node::Argument(_) => agg(
                    supports
                        .get(id)
                        .map(|srcs| srcs.iter().filter_map(|s| scores.get(*s).copied()).collect())
                        .unwrap_or_default(),
                ),
                Node::Claim(_) => agg(
                    conclusions
                        .get(id)
                        .map(|srcs| srcs.iter().filter_map(|s| scores.get(*s).copied()).collect())
                        .unwrap_or_default(),
                ),
                _ => continue,
            }
        };
        scores.insert(id.clone(), score);
    }

    let claim_scores: BTreeMap<NodeId, f64> = case
        .nodes()
        .filter_map(|n| match n {
            Node::Claim(c) => scores.get(&c.id).map(|s| (c.id.clone(), *s)),
            _ => None,
        })
        .collect();

    ConfidenceAssessment {
        scores: claim_scores,
        calculus,
        notes: "Heuristic score; evidence confidence defaults to 1.0, open defeaters force 0."
            .to_string(),
    }
}

/// Fraction-free check used by tests: every primary evidence node has exactly
/// one incoming measurement side-support edge.
pub fn measurement_pairing_holds(case: &AssuranceCase) -> bool {
    case.nodes().all(|n| match n {
        Node::Evidence(ev) if ev.kind == EvidenceKind::Primary => {
            let incoming = case
                .edges()
                .filter(|e| e.kind == EdgeKind::SideSupports && e.to == ev.id)
                .count();
            incoming == 1
        }
        _ => true,
    })
}
