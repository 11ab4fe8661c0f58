//! The `acasec` command-line interface.
//!
//! Exit codes: 0 = success / case complete, 1 = findings (incomplete case or
//! structural violations), 2 = input could not be parsed, 3 = usage error.
//! Diagnostics go to stderr; requested artifacts go to stdout or `-o`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::builder::{build_case, BuildOptions};
use crate::emit::{
    from_canonical, report_markdown, to_canonical, to_graph_text, DiagramStyle, Scope,
};
use crate::ingest::{parse_workbook, ParseOptions, CONFIDENCE_HEADER, HEADER};
use crate::model::NodeId;
use crate::taxonomy::{
    load_frame, standard_frame, worksheet_ids, DecompositionFrame, STANDARD_FRAME_DOCUMENT,
};
use crate::validate::{assess_confidence, check_coverage, ConfidenceCalculus, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Environment variable consulted when `--frame` is not given.
pub const FRAME_ENV: &str = "ACASEC_FRAME";

#[derive(Parser)]
#[command(name = "acasec", version, about = "Assurance case compiler and validator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FrameArg {
    /// Frame definition file, or `standard` for the built-in frame.
    /// Falls back to the ACASEC_FRAME environment variable.
    #[arg(long, global = true)]
    frame: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Scaffold an empty workbook directory with one worksheet per
    /// phase/factor pair.
    Init {
        dir: PathBuf,
        /// Overwrite existing files.
        #[arg(long)]
        force: bool,
        /// System name written to the manifest.
        #[arg(long, default_value = "Unnamed System")]
        system_name: String,
        #[command(flatten)]
        frame: FrameArg,
    },
    /// Parse a workbook and report coverage findings.
    Check {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
        #[command(flatten)]
        frame: FrameArg,
    },
    /// Compile a workbook into a canonical case document.
    Build {
        dir: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        frame: FrameArg,
    },
    /// Render a canonical case document as DOT graph text.
    Render {
        case: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// `full`, `level1`, or a node id to render the subtree below it.
        #[arg(long, default_value = "full")]
        scope: String,
    },
    /// Produce a Markdown coverage report for a workbook.
    Report {
        dir: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Append a confidence assessment section.
        #[arg(long)]
        with_confidence: bool,
        #[command(flatten)]
        frame: FrameArg,
    },
}

fn resolve_frame(arg: &FrameArg) -> Result<DecompositionFrame, String> {
    let selector = arg
        .frame
        .clone()
        .or_else(|| std::env::var(FRAME_ENV).ok());
    match selector.as_deref() {
        None | Some("standard") => Ok(standard_frame()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read frame file `{path}`: {e}"))?;
            load_frame(&text).map_err(|e| format!("invalid frame `{path}`: {e}"))
        }
    }
}

fn write_output(output: &Option<PathBuf>, content: &[u8]) -> Result<(), String> {
    match output {
        Some(path) => fs::write(path, content)
            .map_err(|e| format!("cannot write `{}`: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(content)
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}

fn scaffold(
    dir: &Path,
    frame: &DecompositionFrame,
    system_name: &str,
    force: bool,
) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create `{}`: {e}", dir.display()))?;
    let write = |name: &str, content: String| -> Result<(), String> {
        let path = dir.join(name);
        if path.exists() && !force {
            return Err(format!(
                "`{}` already exists (use --force to overwrite)",
                path.display()
            ));
        }
        fs::write(&path, content).map_err(|e| format!("cannot write `{}`: {e}", path.display()))
    };

    write(
        "manifest.csv",
        format!(
            "system_name,{system_name}\nframe,{}\ntop_claim_subject,{system_name}\n",
            frame.name
        ),
    )?;
    write("defeaters.csv", "Target,Text,Status,Resolution\n".into())?;
    for (phase, factor) in worksheet_ids(frame) {
        let mut content = HEADER.join(",");
        content.push(',');
        content.push_str(CONFIDENCE_HEADER);
        content.push('\n');
        for stage in frame.stages_of(&phase) {
            content.push_str(&stage.title);
            content.push_str(",,,,,\n");
        }
        write(&crate::ingest::worksheet_file_name(&phase, factor), content)?;
    }
    Ok(())
}

fn human_check(report: &crate::validate::CoverageReport) -> String {
    let mut out = format!(
        "coverage: {}/{} subcases populated ({})\n",
        report.subcases_populated,
        report.subcase_total,
        match report.verdict {
            Verdict::Complete => "complete",
            Verdict::Incomplete => "incomplete",
        }
    );
    let missing: Vec<String> = report
        .cells
        .iter()
        .filter(|c| c.state == crate::validate::CellState::Missing)
        .map(|c| c.cell.to_string())
        .collect();
    if !missing.is_empty() {
        out.push_str(&format!("missing cells ({}):\n", missing.len()));
        for m in &missing {
            out.push_str("  - ");
            out.push_str(m);
            out.push('\n');
        }
    }
    if report.open_defeaters > 0 {
        out.push_str(&format!("open defeaters: {}\n", report.open_defeaters));
    }
    for w in &report.warnings {
        out.push_str("warning: ");
        out.push_str(w);
        out.push('\n');
    }
    out
}

fn run_command(command: Command) -> Result<i32, (i32, String)> {
    let parse_err = |e: String| (EXIT_PARSE, e);
    match command {
        Command::Init {
            dir,
            force,
            system_name,
            frame,
        } => {
            let frame = resolve_frame(&frame).map_err(parse_err)?;
            scaffold(&dir, &frame, &system_name, force).map_err(parse_err)?;
            eprintln!(
                "initialized workbook for frame `{}` in `{}`",
                frame.name,
                dir.display()
            );
            Ok(EXIT_OK)
        }
        Command::Check { dir, format, frame } => {
            let frame = resolve_frame(&frame).map_err(parse_err)?;
            let workbook = parse_workbook(
                &dir,
                &frame,
                ParseOptions {
                    require_all_worksheets: false,
                },
            )
            .map_err(|e| (EXIT_PARSE, e.to_string()))?;
            let report = check_coverage(&frame, &workbook);
            let rendered = match format {
                Format::Human => human_check(&report),
                Format::Structured => {
                    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                    s.push('\n');
                    s
                }
            };
            write_output(&None, rendered.as_bytes()).map_err(parse_err)?;
            Ok(match report.verdict {
                Verdict::Complete => EXIT_OK,
                Verdict::Incomplete => EXIT_FINDINGS,
            })
        }
        Command::Build { dir, output, frame } => {
            let frame = resolve_frame(&frame).map_err(parse_err)?;
            let workbook = parse_workbook(
                &dir,
                &frame,
                ParseOptions {
                    require_all_worksheets: false,
                },
            )
            .map_err(|e| (EXIT_PARSE, e.to_string()))?;
            let case = build_case(&frame, &workbook, &BuildOptions::default())
                .map_err(|e| (EXIT_PARSE, e.to_string()))?;
            let violations = case.audit_structure();
            write_output(&output, &to_canonical(&case)).map_err(parse_err)?;
            let report = check_coverage(&frame, &workbook);
            for v in &violations {
                eprintln!("violation: {v}");
            }
            eprintln!(
                "built case with {} nodes, {} edges; coverage {}/{}",
                case.node_count(),
                case.edge_count(),
                report.subcases_populated,
                report.subcase_total
            );
            Ok(
                if violations.is_empty() && report.verdict == Verdict::Complete {
                    EXIT_OK
                } else {
                    EXIT_FINDINGS
                },
            )
        }
        Command::Render {
            case,
            output,
            scope,
        } => {
            let bytes = fs::read(&case)
                .map_err(|e| (EXIT_PARSE, format!("cannot read `{}`: {e}", case.display())))?;
            let case = from_canonical(&bytes).map_err(|e| (EXIT_PARSE, e.to_string()))?;
            let scope = match scope.as_str() {
                "full" => Scope::Full,
                "level1" => Scope::Level1,
                id => Scope::Subtree(NodeId::new(id)),
            };
            let dot = to_graph_text(&case, &DiagramStyle::default(), &scope)
                .map_err(|e| (EXIT_USAGE, e.to_string()))?;
            write_output(&output, dot.as_bytes()).map_err(parse_err)?;
            Ok(EXIT_OK)
        }
        Command::Report {
            dir,
            output,
            with_confidence,
            frame,
        } => {
            let frame = resolve_frame(&frame).map_err(parse_err)?;
            let workbook = parse_workbook(
                &dir,
                &frame,
                ParseOptions {
                    require_all_worksheets: false,
                },
            )
            .map_err(|e| (EXIT_PARSE, e.to_string()))?;
            let report = check_coverage(&frame, &workbook);
            let mut markdown = report_markdown(&report, &frame);
            if with_confidence {
                let case = build_case(&frame, &workbook, &BuildOptions::default())
                    .map_err(|e| (EXIT_PARSE, e.to_string()))?;
                let assessment = assess_confidence(&case, ConfidenceCalculus::WeakestLink);
                markdown.push_str("\n# Confidence\n\n");
                markdown.push_str(&assessment.notes);
                markdown.push_str("\n\n");
                let top = NodeId::new("case.top");
                if let Some(score) = assessment.scores.get(&top) {
                    markdown.push_str(&format!("- top claim: {score:.3}\n"));
                }
                for phase in &frame.phases {
                    let id = NodeId::new(format!("{}.phase", phase.id));
                    if let Some(score) = assessment.scores.get(&id) {
                        markdown.push_str(&format!("- {}: {score:.3}\n", phase.title));
                    }
                }
            }
            write_output(&output, markdown.as_bytes()).map_err(parse_err)?;
            Ok(match report.verdict {
                Verdict::Complete => EXIT_OK,
                Verdict::Incomplete => EXIT_FINDINGS,
            })
        }
    }
}

/// Parses arguments and executes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not usage errors
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err((code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

/// The built-in frame document, re-exported for `init --frame standard`
/// users who want a starting point for a custom frame.
pub fn standard_frame_document() -> &'static str {
    STANDARD_FRAME_DOCUMENT
}
