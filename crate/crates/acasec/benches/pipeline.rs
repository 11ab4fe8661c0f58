//! Benchmarks the worksheet-parsing and graph-construction pipeline.
//!
//! The hot paths fan out per worksheet / per cell and run on rayon when the
//! default `parallel` feature is on. To compare against the sequential
//! fallback, run the same benchmark with `--no-default-features`:
//!
//! ```text
//! cargo bench --bench pipeline
//! cargo bench --bench pipeline --no-default-features
//! ```

use std::fmt::Write as _;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use acasec::builder::{build_case, BuildOptions};
use acasec::ingest::{parse_workbook, ParseOptions};
use acasec::taxonomy::{standard_frame, worksheet_ids, DecompositionFrame};
use acasec::validate::check_coverage;

/// Writes a fully populated synthetic workbook with `entries` evidence rows
/// per cell.
fn synth_workbook(dir: &Path, frame: &DecompositionFrame, entries: usize) {
    std::fs::write(
        dir.join("manifest.csv"),
        "system_name,Bench System\nframe,standard\ntop_claim_subject,The Bench System\n",
    )
    .unwrap();
    for (phase, factor) in worksheet_ids(frame) {
        let mut out = String::from(
            "PDLC,Sub-claims,Evidence,Measurement Claim (MC),Measurement Evidence (ME)\n",
        );
        for stage in frame.stages_of(&phase) {
            for k in 1..=entries {
                let title = if k == 1 { stage.title.as_str() } else { "" };
                let claim = if k == 1 {
                    format!("The {factor:?} of {} is appropriate", stage.title)
                } else {
                    String::new()
                };
                writeln!(
                    out,
                    "{title},{claim},E{k}: artefact {k} for {stage_id},MC{k}: artefact {k} assessed,ME{k}: assessment record {k}",
                    stage_id = stage.id
                )
                .unwrap();
            }
        }
        std::fs::write(
            dir.join(acasec::ingest::worksheet_file_name(&phase, factor)),
            out,
        )
        .unwrap();
    }
}

fn bench_pipeline(c: &mut Criterion) {
    let frame = standard_frame();
    let dir = tempfile::tempdir().unwrap();
    synth_workbook(dir.path(), &frame, 4);

    let mode = if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    };

    c.bench_function(&format!("parse_workbook/{mode}"), |b| {
        b.iter(|| parse_workbook(dir.path(), &frame, ParseOptions::default()).unwrap())
    });

    let workbook = parse_workbook(dir.path(), &frame, ParseOptions::default()).unwrap();
    c.bench_function(&format!("build_case/{mode}"), |b| {
        b.iter(|| build_case(&frame, &workbook, &BuildOptions::default()).unwrap())
    });

    c.bench_function(&format!("check_coverage/{mode}"), |b| {
        b.iter(|| check_coverage(&frame, &workbook))
    });

    let case = build_case(&frame, &workbook, &BuildOptions::default()).unwrap();
    c.bench_function(&format!("to_canonical/{mode}"), |b| {
        b.iter(|| acasec::emit::to_canonical(&case))
    });
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
