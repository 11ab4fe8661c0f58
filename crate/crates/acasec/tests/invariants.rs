//! Property suites over the parsing and id-derivation primitives.

use proptest::prelude::*;

use acasec::builder::stable_id;
use acasec::ingest::{parse_delegation, parse_worksheet_str, DelegationKind};
use acasec::taxonomy::{load_frame, slug, standard_frame, CellKey, FactorId};

proptest! {
    #[test]
    fn slug_output_alphabet(title in ".{0,80}") {
        let s = slug(&title);
        prop_assert!(s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-'));
        prop_assert!(!s.starts_with('-'));
        prop_assert!(!s.ends_with('-'));
        prop_assert!(!s.contains("--"));
    }

    #[test]
    fn slug_is_idempotent(title in ".{0,80}") {
        let once = slug(&title);
        prop_assert_eq!(slug(&once), once);
    }

    #[test]
    fn delegation_grammar_total(text in ".{0,120}") {
        // never panics, and a recognized match always yields a non-empty target
        if let Some((_, target)) = parse_delegation(&text) {
            prop_assert!(!target.is_empty());
        }
    }

    #[test]
    fn delegation_grammar_complete(title in "[A-Za-z][A-Za-z ]{0,40}[A-Za-z]") {
        let plain = format!("N/A - covered in {title}");
        let measured = format!("N/A - covered in Measurement of {title}");
        let (kind, target) = parse_delegation(&plain).expect("plain form recognized");
        prop_assert_eq!(kind, DelegationKind::Cell);
        prop_assert_eq!(target, title.clone());
        let (kind, _) = parse_delegation(&measured).expect("measured form recognized");
        prop_assert_eq!(kind, DelegationKind::MeasurementOfCell);
    }

    #[test]
    fn stable_id_injective(
        stage_a in "[a-z-]{1,20}", stage_b in "[a-z-]{1,20}",
        ord_a in 1usize..50, ord_b in 1usize..50,
    ) {
        let cell_a = CellKey { phase: "RE".into(), stage: stage_a.clone(), factor: FactorId::Man };
        let cell_b = CellKey { phase: "RE".into(), stage: stage_b.clone(), factor: FactorId::Man };
        let id_a = stable_id(&cell_a, "evidence", Some(ord_a));
        let id_b = stable_id(&cell_b, "evidence", Some(ord_b));
        if stage_a == stage_b && ord_a == ord_b {
            prop_assert_eq!(id_a, id_b);
        } else {
            prop_assert_ne!(id_a, id_b);
        }
    }

    #[test]
    fn frame_loader_total(doc in ".{0,400}") {
        // arbitrary input is rejected or accepted, never a panic
        let _ = load_frame(&doc);
    }

    #[test]
    fn worksheet_parser_total(body in "([A-Za-z ,\"\n]{0,200})") {
        let frame = standard_frame();
        let content = format!(
            "PDLC,Sub-claims,Evidence,Measurement Claim (MC),Measurement Evidence (ME)\n{body}"
        );
        let _ = parse_worksheet_str(&content, "RE__MAN.csv", "RE", FactorId::Man, &frame);
    }
}
