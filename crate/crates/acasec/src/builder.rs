//! Deterministic construction of the full three-level assurance case graph
//! from a frame plus a parsed workbook.
//!
//! The construction rules, top to bottom:
//! - the top claim is substituted into a requirements claim, justified by a
//!   side claim, then decomposed into one claim per phase;
//! - each phase claim is decomposed into its lifecycle stage claims;
//! - each stage claim is decomposed into the five factor claims;
//! - each populated cell gets an evidence-incorporation argument fed by its
//!   evidence nodes;
//! - each evidence entry with a measurement pair gets a measurement side
//!   claim pointing at the evidence node, itself supported by its own
//!   evidence-incorporation argument fed by the ME evidence node;
//! - a delegated cell gets an explicit delegated claim cross-linked from the
//!   covering cell, never a copied subtree.
//!
//! Worksheet subtrees may be assembled in parallel; node ids and insertion
//! order are fixed, so the output is identical regardless of scheduling.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ingest::{
    DefeaterRecord, DefeaterStatus as RecordStatus, DelegationKind, StageContent, WorkbookModel,
};
use crate::model::{
    ArgumentKind, ArgumentNode, AssuranceCase, ClaimNode, ClaimRole, DefeaterNode, DefeaterStatus,
    Edge, EdgeKind, EvidenceKind, EvidenceNode, ModelError, Node, NodeId, SideClaimKind,
    SideClaimNode,
};
use crate::par;
use crate::taxonomy::{CellKey, DecompositionFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelegationStyle {
    /// Delegated cells become explicit claims cross-linked from the covering
    /// cell.
    #[default]
    LinkClaim,
    /// Reserved: duplicate the covering subtree instead of linking.
    Merge,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub include_defeaters: bool,
    pub delegation_style: DelegationStyle,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            include_defeaters: true,
            delegation_style: DelegationStyle::LinkClaim,
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("workbook declares frame `{workbook}` but was parsed against `{frame}`")]
    FrameMismatch { workbook: String, frame: String },
    #[error("cell {cell} delegates to {target}, which is itself delegated (chains are rejected)")]
    DelegationChain { cell: CellKey, target: CellKey },
    #[error("defeater targets `{0}`, which names no node in the built case")]
    DefeaterTarget(String),
    #[error("delegation style `merge` is not implemented")]
    MergeUnsupported,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Derives the stable node id for a role within a cell. Pure and injective
/// over distinct inputs.
///
/// Roles `evidence`, `measurement-claim`, and `measurement-evidence` shorten
/// to the template's E / MC / ME labels; other roles appear verbatim.
pub fn stable_id(cell: &CellKey, role: &str, ordinal: Option<usize>) -> NodeId {
    let tag = match role {
        "evidence" => "E",
        "measurement-claim" => "MC",
        "measurement-evidence" => "ME",
        other => other,
    };
    let suffix = match ordinal {
        Some(k) => format!("{tag}{k}"),
        None => tag.to_string(),
    };
    NodeId::new(format!(
        "{}.{}.{}.{}",
        cell.phase, cell.stage, cell.factor, suffix
    ))
}

fn phase_id(phase: &str, suffix: &str) -> NodeId {
    NodeId::new(format!("{phase}.{suffix}"))
}

fn stage_node_id(phase: &str, stage: &str, suffix: &str) -> NodeId {
    NodeId::new(format!("{phase}.{stage}.{suffix}"))
}

/// Nodes and edges contributed by one worksheet, ready to splice under the
/// stage decompositions.
struct CellBatch {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

fn fill(template: &str, subject: &str) -> String {
    template.replace("{subject}", subject)
}

fn build_cell(
    cell: &CellKey,
    content: &StageContent,
    frame: &DecompositionFrame,
    stage_decomp: &NodeId,
) -> CellBatch {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let stage_title = frame
        .stage(&cell.stage)
        .map(|s| s.title.clone())
        .unwrap_or_else(|| cell.stage.clone());

    let premise_of_stage = |id: &NodeId, edges: &mut Vec<Edge>| {
        edges.push(Edge {
            from: id.clone(),
            to: stage_decomp.clone(),
            kind: EdgeKind::Premise,
        });
    };

    match content {
        StageContent::Populated(cellv) => {
            let claim_id = stable_id(cell, "claim", None);
            nodes.push(Node::Claim(ClaimNode {
                id: claim_id.clone(),
                text: cellv.sub_claim.clone(),
                role: ClaimRole::Factor,
                cell: Some(cell.clone()),
            }));
            premise_of_stage(&claim_id, &mut edges);

            let ei_id = stable_id(cell, "ei", None);
            nodes.push(Node::Argument(ArgumentNode {
                id: ei_id.clone(),
                kind: ArgumentKind::EvidenceIncorporation,
                rationale: format!(
                    "Evidence incorporated for the {} of {}",
                    cell.factor.display_name(),
                    stage_title
                ),
            }));
            edges.push(Edge {
                from: ei_id.clone(),
                to: claim_id.clone(),
                kind: EdgeKind::Concludes,
            });

            for (i, entry) in cellv.entries.iter().enumerate() {
                let k = i + 1;
                let e_id = stable_id(cell, "evidence", Some(k));
                nodes.push(Node::Evidence(EvidenceNode {
                    id: e_id.clone(),
                    label: format!("E{k}: {}", entry.evidence),
                    artifact_ref: None,
                    cell: cell.clone(),
                    index: k,
                    kind: EvidenceKind::Primary,
                    confidence: entry.confidence,
                }));
                edges.push(Edge {
                    from: e_id.clone(),
                    to: ei_id.clone(),
                    kind: EdgeKind::Evidences,
                });

                if let Some(pair) = &entry.measurement {
                    let mc_id = stable_id(cell, "measurement-claim", Some(k));
                    nodes.push(Node::SideClaim(SideClaimNode {
                        id: mc_id.clone(),
                        text: pair.claim.clone(),
                        kind: SideClaimKind::Measurement,
                    }));
                    edges.push(Edge {
                        from: mc_id.clone(),
                        to: e_id.clone(),
                        kind: EdgeKind::SideSupports,
                    });

                    let mc_ei_id = NodeId::new(format!("{}.ei", mc_id));
                    nodes.push(Node::Argument(ArgumentNode {
                        id: mc_ei_id.clone(),
                        kind: ArgumentKind::EvidenceIncorporation,
                        rationale: format!("Measurement evidence incorporated for E{k}"),
                    }));
                    edges.push(Edge {
                        from: mc_ei_id.clone(),
                        to: mc_id.clone(),
                        kind: EdgeKind::Concludes,
                    });

                    let me_id = stable_id(cell, "measurement-evidence", Some(k));
                    nodes.push(Node::Evidence(EvidenceNode {
                        id: me_id.clone(),
                        label: format!("ME{k}: {}", pair.evidence),
                        artifact_ref: None,
                        cell: cell.clone(),
                        index: k,
                        kind: EvidenceKind::Measurement,
                        confidence: entry.confidence,
                    }));
                    edges.push(Edge {
                        from: me_id,
                        to: mc_ei_id,
                        kind: EdgeKind::Evidences,
                    });
                }
            }
        }
        StageContent::Delegated(delegation) => {
            let target_title = frame
                .stage(&delegation.target_stage)
                .map(|s| s.title.clone())
                .unwrap_or_else(|| delegation.target_stage.clone());
            let claim_id = stable_id(cell, "delegated", None);
            nodes.push(Node::Claim(ClaimNode {
                id: claim_id.clone(),
                text: format!(
                    "Covered by {}/{}/{}",
                    cell.phase, target_title, cell.factor
                ),
                role: ClaimRole::Delegated,
                cell: Some(cell.clone()),
            }));
            premise_of_stage(&claim_id, &mut edges);
            // cross-links from the covering cell are added after all cells exist
        }
        StageContent::NotOccurred => {
            let claim_id = stable_id(cell, "not-occurred", None);
            nodes.push(Node::Claim(ClaimNode {
                id: claim_id.clone(),
                text: format!("Not applicable: {stage_title} did not occur"),
                role: ClaimRole::Delegated,
                cell: Some(cell.clone()),
            }));
            premise_of_stage(&claim_id, &mut edges);
        }
        StageContent::Empty => {
            let claim_id = stable_id(cell, "claim", None);
            nodes.push(Node::Claim(ClaimNode {
                id: claim_id.clone(),
                text: format!(
                    "The {} of {} is appropriate",
                    cell.factor.display_name(),
                    stage_title
                ),
                role: ClaimRole::Factor,
                cell: Some(cell.clone()),
            }));
            premise_of_stage(&claim_id, &mut edges);
        }
    }

    CellBatch { nodes, edges }
}

fn cell_content<'a>(
    workbook: &'a WorkbookModel,
    cell: &CellKey,
) -> Option<&'a StageContent> {
    workbook
        .worksheet(&cell.phase, cell.factor)
        .and_then(|ws| ws.rows.iter().find(|r| r.stage == cell.stage))
        .map(|r| &r.content)
}

/// Builds the full case graph. Succeeds on incomplete workbooks (empty and
/// missing cells become unevidenced claims that the coverage report flags);
/// only structural contradictions such as delegation chains are errors.
pub fn build_case(
    frame: &DecompositionFrame,
    workbook: &WorkbookModel,
    options: &BuildOptions,
) -> Result<AssuranceCase, BuildError> {
    if options.delegation_style == DelegationStyle::Merge {
        return Err(BuildError::MergeUnsupported);
    }
    if workbook.manifest.frame != frame.name {
        return Err(BuildError::FrameMismatch {
            workbook: workbook.manifest.frame.clone(),
            frame: frame.name.clone(),
        });
    }

    let subject = workbook.manifest.top_claim_subject.as_str();
    let mut meta: BTreeMap<String, String> = workbook.manifest.extra.clone();
    meta.insert("system_name".into(), workbook.manifest.system_name.clone());
    meta.insert(
        "top_claim_subject".into(),
        workbook.manifest.top_claim_subject.clone(),
    );

    let mut case = AssuranceCase::new(frame.name.clone(), meta);

    // Level 1 skeleton
    let top = NodeId::new("case.top");
    case.add_node(Node::Claim(ClaimNode {
        id: top.clone(),
        text: fill(&frame.top_claim_template, subject),
        role: ClaimRole::Top,
        cell: None,
    }))?;
    let substitution = NodeId::new("case.substitution");
    case.add_node(Node::Argument(ArgumentNode {
        id: substitution.clone(),
        kind: ArgumentKind::Substitution,
        rationale: "Safety is argued through satisfaction of the complete requirement set".into(),
    }))?;
    case.connect(&substitution, &top, EdgeKind::Concludes)?;
    let substituted = NodeId::new("case.substituted");
    case.add_node(Node::Claim(ClaimNode {
        id: substituted.clone(),
        text: fill(&frame.substituted_claim_template, subject),
        role: ClaimRole::Substituted,
        cell: None,
    }))?;
    case.connect(&substituted, &substitution, EdgeKind::Premise)?;
    let side = NodeId::new("case.side-claim");
    case.add_node(Node::SideClaim(SideClaimNode {
        id: side.clone(),
        text: fill(&frame.side_claim_template, subject),
        kind: SideClaimKind::Justification,
    }))?;
    case.connect(&side, &substitution, EdgeKind::SideSupports)?;
    let root_decomp = NodeId::new("case.decomposition");
    case.add_node(Node::Argument(ArgumentNode {
        id: root_decomp.clone(),
        kind: ArgumentKind::Decomposition,
        rationale: "Decomposed by development phase".into(),
    }))?;
    case.connect(&root_decomp, &substituted, EdgeKind::Concludes)?;

    // Levels 1-2: phase and stage claims
    for phase in &frame.phases {
        let phase_claim = phase_id(&phase.id, "phase");
        case.add_node(Node::Claim(ClaimNode {
            id: phase_claim.clone(),
            text: fill(&phase.claim_template, subject),
            role: ClaimRole::Phase,
            cell: None,
        }))?;
        case.connect(&phase_claim, &root_decomp, EdgeKind::Premise)?;

        let phase_decomp = phase_id(&phase.id, "decomposition");
        case.add_node(Node::Argument(ArgumentNode {
            id: phase_decomp.clone(),
            kind: ArgumentKind::Decomposition,
            rationale: format!("Decomposed by the lifecycle of the {} Phase", phase.title),
        }))?;
        case.connect(&phase_decomp, &phase_claim, EdgeKind::Concludes)?;

        for stage in frame.stages_of(&phase.id) {
            let stage_claim = stage_node_id(&phase.id, &stage.id, "stage");
            case.add_node(Node::Claim(ClaimNode {
                id: stage_claim.clone(),
                text: format!("The {} is appropriate", stage.title),
                role: ClaimRole::Stage,
                cell: None,
            }))?;
            case.connect(&stage_claim, &phase_decomp, EdgeKind::Premise)?;

            let stage_decomp = stage_node_id(&phase.id, &stage.id, "decomposition");
            case.add_node(Node::Argument(ArgumentNode {
                id: stage_decomp.clone(),
                kind: ArgumentKind::Decomposition,
                rationale: format!("Decomposed by the 5M1E factors of {}", stage.title),
            }))?;
            case.connect(&stage_decomp, &stage_claim, EdgeKind::Concludes)?;
        }
    }

    // Level 3 and evidence: one batch per cell, assembled in parallel, then
    // spliced in the fixed cell enumeration order.
    let cells = crate::taxonomy::enumerate_cells(frame);
    let jobs: Vec<(CellKey, StageContent)> = cells
        .iter()
        .map(|cell| {
            let content = cell_content(workbook, cell)
                .cloned()
                .unwrap_or(StageContent::Empty);
            (cell.clone(), content)
        })
        .collect();
    let batches = par::map_collect(jobs, |(cell, content)| {
        let stage_decomp = stage_node_id(&cell.phase, &cell.stage, "decomposition");
        build_cell(&cell, &content, frame, &stage_decomp)
    });
    for batch in batches {
        for node in batch.nodes {
            case.add_node(node)?;
        }
        for edge in batch.edges {
            case.connect(&edge.from, &edge.to, edge.kind)?;
        }
    }

    // Delegation cross-links, after every cell exists.
    for cell in &cells {
        let Some(StageContent::Delegated(delegation)) = cell_content(workbook, cell) else {
            continue;
        };
        let target_cell = CellKey {
            phase: cell.phase.clone(),
            stage: delegation.target_stage.clone(),
            factor: cell.factor,
        };
        let target_content = cell_content(workbook, &target_cell);
        if matches!(target_content, Some(StageContent::Delegated(_))) {
            return Err(BuildError::DelegationChain {
                cell: cell.clone(),
                target: target_cell,
            });
        }
        let delegated_claim = stable_id(cell, "delegated", None);
        match delegation.kind {
            DelegationKind::Cell => {
                let covering = stable_id(&target_cell, "claim", None);
                if case.node(&covering).is_some() {
                    case.connect(&covering, &delegated_claim, EdgeKind::SideSupports)?;
                }
            }
            DelegationKind::MeasurementOfCell => {
                if let Some(StageContent::Populated(cellv)) = target_content {
                    for k in 1..=cellv.entries.len() {
                        if cellv.entries[k - 1].measurement.is_some() {
                            let mc = stable_id(&target_cell, "measurement-claim", Some(k));
                            case.connect(&mc, &delegated_claim, EdgeKind::SideSupports)?;
                        }
                    }
                }
            }
        }
    }

    if options.include_defeaters {
        for (i, record) in workbook.defeaters.iter().enumerate() {
            attach_defeater(&mut case, record, i + 1)?;
        }
    }

    Ok(case)
}

fn attach_defeater(
    case: &mut AssuranceCase,
    record: &DefeaterRecord,
    ordinal: usize,
) -> Result<(), BuildError> {
    let cell = CellKey {
        phase: record.target.phase.clone(),
        stage: record.target.stage.clone(),
        factor: record.target.factor,
    };
    let target = match record.target.evidence_index {
        Some(k) => stable_id(&cell, "evidence", Some(k)),
        None => [
            stable_id(&cell, "claim", None),
            stable_id(&cell, "delegated", None),
            stable_id(&cell, "not-occurred", None),
        ]
        .into_iter()
        .find(|id| case.node(id).is_some())
        .ok_or_else(|| BuildError::DefeaterTarget(cell.to_string()))?,
    };
    if case.node(&target).is_none() {
        return Err(BuildError::DefeaterTarget(format!(
            "{}/E{}",
            cell,
            record.target.evidence_index.unwrap_or(0)
        )));
    }
    let id = NodeId::new(format!("defeater.{ordinal:03}"));
    case.add_node(Node::Defeater(DefeaterNode {
        id: id.clone(),
        text: record.text.clone(),
        status: match record.status {
            RecordStatus::Open => DefeaterStatus::Open,
            RecordStatus::Resolved => DefeaterStatus::Resolved,
            RecordStatus::AcceptedResidual => DefeaterStatus::AcceptedResidual,
        },
        resolution: record.resolution.clone(),
        target: target.clone(),
    }))?;
    case.connect(&id, &target, EdgeKind::Defeats)?;
    Ok(())
}
