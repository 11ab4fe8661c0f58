//! The three-level decomposition frame: phases, lifecycle stages, and the
//! six-factor model that together define the expected shape of a case.
//!
//! A [`DecompositionFrame`] is pure data. The frame shipped by
//! [`standard_frame`] covers self-driving vehicle development (RE / VnV / PD
//! phases); other domains are supported by loading a frame-definition
//! document with [`load_frame`] instead of changing code.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the six factors of the adapted 5M1E model.
///
/// `Measurement` is the outermost layer: it is never a worksheet factor of
/// its own, it is realized as the MC/ME columns paired with the other five.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FactorId {
    Man,
    Machine,
    Method,
    Material,
    Environment,
    Measurement,
}

impl FactorId {
    /// The five factors that get a worksheet column of their own, in the
    /// fixed enumeration order used everywhere (reports, cell ids, files).
    pub const WORKSHEET_FACTORS: [FactorId; 5] = [
        FactorId::Man,
        FactorId::Machine,
        FactorId::Method,
        FactorId::Material,
        FactorId::Environment,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FactorId::Man => "MAN",
            FactorId::Machine => "MACHINE",
            FactorId::Method => "METHOD",
            FactorId::Material => "MATERIAL",
            FactorId::Environment => "ENVIRONMENT",
            FactorId::Measurement => "MEASUREMENT",
        }
    }

    /// Human-readable name as used in claim texts.
    pub fn display_name(self) -> &'static str {
        match self {
            FactorId::Man => "Man (Human)",
            FactorId::Machine => "Machine",
            FactorId::Method => "Method",
            FactorId::Material => "Material",
            FactorId::Environment => "Environment",
            FactorId::Measurement => "Measurement",
        }
    }

    pub fn parse_token(s: &str) -> Option<FactorId> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MAN" => Some(FactorId::Man),
            "MACHINE" => Some(FactorId::Machine),
            "METHOD" => Some(FactorId::Method),
            "MATERIAL" => Some(FactorId::Material),
            "ENVIRONMENT" => Some(FactorId::Environment),
            "MEASUREMENT" => Some(FactorId::Measurement),
            _ => None,
        }
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Onion layer of a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorLayer {
    Core,
    Inner,
    Outer,
    Outermost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub id: FactorId,
    pub layer: FactorLayer,
    pub definition: String,
}

/// A top-level lifecycle phase (e.g. RE, VNV, PD).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    /// Short token, unique within a frame (e.g. `RE`).
    pub id: String,
    pub title: String,
    /// Claim text template; `{subject}` is replaced with the system name.
    pub claim_template: String,
}

/// A product-development lifecycle stage within a phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleStage {
    /// Slug derived from the title, unique within a frame.
    pub id: String,
    /// Id of the owning phase.
    pub phase: String,
    pub title: String,
    /// 1-based position within the phase.
    pub ordinal: usize,
    pub goal: String,
}

/// Identifies one (stage, factor) cell of the decomposition matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub phase: String,
    pub stage: String,
    pub factor: FactorId,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.phase, self.stage, self.factor)
    }
}

/// A full decomposition frame: the expected shape of an assurance case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionFrame {
    pub name: String,
    pub phases: Vec<Phase>,
    pub stages: Vec<LifecycleStage>,
    pub factors: Vec<Factor>,
    pub top_claim_template: String,
    pub substituted_claim_template: String,
    pub side_claim_template: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame has no phases")]
    NoPhases,
    #[error("duplicate phase id `{0}`")]
    DuplicatePhase(String),
    #[error("duplicate stage `{title}` in phase `{phase}`")]
    DuplicateStage { phase: String, title: String },
    #[error("stage `{title}` references unknown phase `{phase}`")]
    UnknownPhase { phase: String, title: String },
    #[error("empty field: {0}")]
    EmptyField(&'static str),
    #[error("frame document line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("frame must define exactly the six 5M1E factors")]
    BadFactorSet,
}

/// Turns a title into the slug used for stage ids and node ids.
pub fn slug(title: &str) -> String {
    let mut out = String::with_capacity(title.len());
    let mut last_dash = true;
    for ch in title.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
            last_dash = false;
        } else if !last_dash {
            out.push('-');
            last_dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

impl DecompositionFrame {
    /// Validates all frame invariants, normalizing stage ordinals.
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.phases.is_empty() {
            return Err(FrameError::NoPhases);
        }
        if self.name.trim().is_empty() {
            return Err(FrameError::EmptyField("frame name"));
        }
        for t in [
            ("top_claim_template", &self.top_claim_template),
            ("substituted_claim_template", &self.substituted_claim_template),
            ("side_claim_template", &self.side_claim_template),
        ] {
            if t.1.trim().is_empty() {
                return Err(FrameError::EmptyField(t.0));
            }
        }
        let mut phase_ids = HashSet::new();
        for p in &self.phases {
            if p.title.trim().is_empty() {
                return Err(FrameError::EmptyField("phase title"));
            }
            if !phase_ids.insert(p.id.as_str()) {
                return Err(FrameError::DuplicatePhase(p.id.clone()));
            }
        }
        let mut seen = HashSet::new();
        let mut per_phase_count: Vec<usize> = vec![0; self.phases.len()];
        for s in &self.stages {
            let Some(pi) = self.phases.iter().position(|p| p.id == s.phase) else {
                return Err(FrameError::UnknownPhase {
                    phase: s.phase.clone(),
                    title: s.title.clone(),
                });
            };
            if !seen.insert((s.phase.clone(), s.title.to_ascii_lowercase())) {
                return Err(FrameError::DuplicateStage {
                    phase: s.phase.clone(),
                    title: s.title.clone(),
                });
            }
            per_phase_count[pi] += 1;
            if s.ordinal != per_phase_count[pi] {
                return Err(FrameError::Malformed {
                    line: 0,
                    message: format!(
                        "stage `{}` has ordinal {}, expected {}",
                        s.title, s.ordinal, per_phase_count[pi]
                    ),
                });
            }
        }
        let ids: HashSet<FactorId> = self.factors.iter().map(|f| f.id).collect();
        if self.factors.len() != 6 || ids.len() != 6 {
            return Err(FrameError::BadFactorSet);
        }
        let meas_ok = self
            .factors
            .iter()
            .any(|f| f.id == FactorId::Measurement && f.layer == FactorLayer::Outermost);
        if !meas_ok {
            return Err(FrameError::BadFactorSet);
        }
        Ok(())
    }

    pub fn phase(&self, id: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.id == id)
    }

    pub fn stage(&self, id: &str) -> Option<&LifecycleStage> {
        self.stages.iter().find(|s| s.id == id)
    }

    /// Stages of one phase, in ordinal order.
    pub fn stages_of(&self, phase: &str) -> Vec<&LifecycleStage> {
        self.stages.iter().filter(|s| s.phase == phase).collect()
    }

    /// Finds a stage of a phase by title, case-insensitively.
    pub fn stage_by_title(&self, phase: &str, title: &str) -> Option<&LifecycleStage> {
        let want = title.trim().to_ascii_lowercase();
        self.stages
            .iter()
            .find(|s| s.phase == phase && s.title.to_ascii_lowercase() == want)
    }
}

/// All (stage x factor) cells, ordered by phase, stage ordinal, then the
/// fixed factor order. The ordering is stable across calls.
pub fn enumerate_cells(frame: &DecompositionFrame) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for phase in &frame.phases {
        for stage in frame.stages_of(&phase.id) {
            for factor in FactorId::WORKSHEET_FACTORS {
                cells.push(CellKey {
                    phase: phase.id.clone(),
                    stage: stage.id.clone(),
                    factor,
                });
            }
        }
    }
    cells
}

/// Expected subcase total: each cell contributes one factor subcase plus one
/// paired measurement subcase.
pub fn expected_subcase_count(frame: &DecompositionFrame) -> usize {
    2 * enumerate_cells(frame).len()
}

/// One worksheet per (phase x worksheet factor) pair, in frame order.
pub fn worksheet_ids(frame: &DecompositionFrame) -> Vec<(String, FactorId)> {
    let mut ids = Vec::new();
    for phase in &frame.phases {
        for factor in FactorId::WORKSHEET_FACTORS {
            ids.push((phase.id.clone(), factor));
        }
    }
    ids
}

fn std_factors() -> Vec<Factor> {
    vec![
        Factor {
            id: FactorId::Man,
            layer: FactorLayer::Inner,
            definition: "The roles or personnel responsible for creating the Material.".into(),
        },
        Factor {
            id: FactorId::Machine,
            layer: FactorLayer::Inner,
            definition: "The tools or technologies used to support the creation of Material.".into(),
        },
        Factor {
            id: FactorId::Method,
            layer: FactorLayer::Inner,
            definition: "The processes or techniques used to transform Material.".into(),
        },
        Factor {
            id: FactorId::Material,
            layer: FactorLayer::Core,
            definition: "The input, intermediate, and output artefacts.".into(),
        },
        Factor {
            id: FactorId::Environment,
            layer: FactorLayer::Outer,
            definition: "The organizational context, policies, and physical conditions that \
                         enforce the Method, maintain the Machine, support Man, and protect \
                         Material."
                .into(),
        },
        Factor {
            id: FactorId::Measurement,
            layer: FactorLayer::Outermost,
            definition: "The evaluation and monitoring of all other factors, ensuring that each \
                         component (Man, Machine, Method, Material, and Environment) is assessed \
                         for quality, reliability, and safety."
                .into(),
        },
    ]
}

fn stage(phase: &str, ordinal: usize, title: &str, goal: &str) -> LifecycleStage {
    LifecycleStage {
        id: slug(title),
        phase: phase.to_string(),
        title: title.to_string(),
        ordinal,
        goal: goal.to_string(),
    }
}

/// The built-in frame: three phases (RE, VnV, PD), fifteen stages, and the
/// adapted 5M1E factor set.
pub fn standard_frame() -> DecompositionFrame {
    let phases = vec![
        Phase {
            id: "RE".into(),
            title: "Requirement Engineering".into(),
            claim_template: "The Requirement Engineering Phase of {subject} is acceptably safe"
                .into(),
        },
        Phase {
            id: "VNV".into(),
            title: "Verification and Validation".into(),
            claim_template: "The Verification and Validation Phase of {subject} is acceptably safe"
                .into(),
        },
        Phase {
            id: "PD".into(),
            title: "Post-Deployment".into(),
            claim_template: "The Post-Deployment Phase of {subject} is acceptably safe".into(),
        },
    ];
    let stages = vec![
        stage(
            "RE",
            1,
            "Requirement Elicitation",
            "To understand the needs for the product and gather high-level requirements from stakeholders.",
        ),
        stage(
            "RE",
            2,
            "Requirement Analysis",
            "To refine, prioritize, and resolve conflicts in the gathered requirements.",
        ),
        stage(
            "RE",
            3,
            "Requirement Specification",
            "To document the formal, testable, and unambiguous requirements in a structured, clear, and traceable format.",
        ),
        stage(
            "RE",
            4,
            "Requirement Checking",
            "To ensure that the requirements meet stakeholder needs and are feasible for implementation.",
        ),
        stage(
            "RE",
            5,
            "Requirement Management",
            "To track changes, maintain traceability, and manage versions of the requirements.",
        ),
        stage(
            "VNV",
            1,
            "Test Requirement Analysis",
            "To determine the required procedures for testing.",
        ),
        stage(
            "VNV",
            2,
            "Test Planning",
            "To define the strategy and scope for testing.",
        ),
        stage("VNV", 3, "Test Case Design", "To create detailed test cases."),
        stage(
            "VNV",
            4,
            "Test Environment Setup",
            "To prepare the HW and SW conditions for testing.",
        ),
        stage(
            "VNV",
            5,
            "Test Execution",
            "To run the test cases and log results.",
        ),
        stage(
            "VNV",
            6,
            "Test Cycle Closure",
            "To evaluate the testing process and outcomes.",
        ),
        stage(
            "PD",
            1,
            "Operational Monitoring",
            "To ensure the ADS continues to operate safely and securely, and as intended in real-world conditions.",
        ),
        stage(
            "PD",
            2,
            "Incident and Event Handling",
            "To respond effectively to safety-critical events and prevent recurrence.",
        ),
        stage(
            "PD",
            3,
            "Change Management",
            "To identify, assess, implement, and validate changes to the ADS once it is deployed.",
        ),
        stage(
            "PD",
            4,
            "Field Update and Maintenance",
            "To maintain and improve system performance without compromising safety.",
        ),
    ];
    let frame = DecompositionFrame {
        name: "standard".into(),
        phases,
        stages,
        factors: std_factors(),
        top_claim_template: "{subject} is acceptably safe".into(),
        substituted_claim_template: "{subject} meets all the requirements".into(),
        side_claim_template:
            "The requirements being used for testing {subject} are complete and correct".into(),
    };
    debug_assert!(frame.validate().is_ok());
    frame
}

/// Parses a frame-definition document.
///
/// The format is line-oriented with `[frame]`, `[phase]`, and `[stage]`
/// sections; each section body is `key,value` lines using the same CSV
/// quoting rules as the workbook files. Stage ordinals follow document
/// order within each phase. Factors are fixed: a custom frame always uses
/// the adapted 5M1E factor set.
pub fn load_frame(document: &str) -> Result<DecompositionFrame, FrameError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Frame,
        Phase,
        Stage,
    }

    let mut frame = DecompositionFrame {
        name: String::new(),
        phases: Vec::new(),
        stages: Vec::new(),
        factors: std_factors(),
        top_claim_template: String::new(),
        substituted_claim_template: String::new(),
        side_claim_template: String::new(),
    };
    let mut section = Section::None;
    let mut cur_phase: Option<Phase> = None;
    let mut cur_stage: Option<LifecycleStage> = None;

    fn flush(
        frame: &mut DecompositionFrame,
        phase: &mut Option<Phase>,
        stage: &mut Option<LifecycleStage>,
        line: usize,
    ) -> Result<(), FrameError> {
        if let Some(p) = phase.take() {
            if p.id.is_empty() {
                return Err(FrameError::Malformed {
                    line,
                    message: "phase section without an id".into(),
                });
            }
            frame.phases.push(p);
        }
        if let Some(mut s) = stage.take() {
            if s.phase.is_empty() || s.title.is_empty() {
                return Err(FrameError::Malformed {
                    line,
                    message: "stage section needs phase and title".into(),
                });
            }
            s.id = slug(&s.title);
            s.ordinal = frame.stages.iter().filter(|t| t.phase == s.phase).count() + 1;
            frame.stages.push(s);
        }
        Ok(())
    }

    for (idx, raw) in document.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line {
            "[frame]" => {
                flush(&mut frame, &mut cur_phase, &mut cur_stage, lineno)?;
                section = Section::Frame;
                continue;
            }
            "[phase]" => {
                flush(&mut frame, &mut cur_phase, &mut cur_stage, lineno)?;
                cur_phase = Some(Phase {
                    id: String::new(),
                    title: String::new(),
                    claim_template: String::new(),
                });
                section = Section::Phase;
                continue;
            }
            "[stage]" => {
                flush(&mut frame, &mut cur_phase, &mut cur_stage, lineno)?;
                cur_stage = Some(LifecycleStage {
                    id: String::new(),
                    phase: String::new(),
                    title: String::new(),
                    ordinal: 0,
                    goal: String::new(),
                });
                section = Section::Stage;
                continue;
            }
            _ => {}
        }
        let (key, value) = parse_kv(line).ok_or_else(|| FrameError::Malformed {
            line: lineno,
            message: format!("expected `key,value`, found `{line}`"),
        })?;
        match section {
            Section::None => {
                return Err(FrameError::Malformed {
                    line: lineno,
                    message: "content before the first section header".into(),
                })
            }
            Section::Frame => match key.as_str() {
                "name" => frame.name = value,
                "top_claim_template" => frame.top_claim_template = value,
                "substituted_claim_template" => frame.substituted_claim_template = value,
                "side_claim_template" => frame.side_claim_template = value,
                other => {
                    return Err(FrameError::Malformed {
                        line: lineno,
                        message: format!("unknown frame key `{other}`"),
                    })
                }
            },
            Section::Phase => {
                let p = cur_phase.as_mut().expect("phase section open");
                match key.as_str() {
                    "id" => p.id = value,
                    "title" => p.title = value,
                    "claim_template" => p.claim_template = value,
                    other => {
                        return Err(FrameError::Malformed {
                            line: lineno,
                            message: format!("unknown phase key `{other}`"),
                        })
                    }
                }
            }
            Section::Stage => {
                let s = cur_stage.as_mut().expect("stage section open");
                match key.as_str() {
                    "phase" => s.phase = value,
                    "title" => s.title = value,
                    "goal" => s.goal = value,
                    other => {
                        return Err(FrameError::Malformed {
                            line: lineno,
                            message: format!("unknown stage key `{other}`"),
                        })
                    }
                }
            }
        }
    }
    let last = document.lines().count();
    flush(&mut frame, &mut cur_phase, &mut cur_stage, last)?;
    frame.validate()?;
    Ok(frame)
}

/// Splits a `key,value` line, honoring double-quote wrapping on the value.
fn parse_kv(line: &str) -> Option<(String, String)> {
    let comma = line.find(',')?;
    let key = line[..comma].trim().to_string();
    let mut value = line[comma + 1..].trim().to_string();
    if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
        value = value[1..value.len() - 1].replace("\"\"", "\"");
    }
    if key.is_empty() {
        return None;
    }
    Some((key, value))
}

/// The shipped frame-definition document equivalent to [`standard_frame`].
pub const STANDARD_FRAME_DOCUMENT: &str = include_str!("../assets/standard.frame");
