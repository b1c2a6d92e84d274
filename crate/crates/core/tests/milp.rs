mod common;

use common::oracle_instances;
use menuforge::milp::{build_model, check_feasible, decode, encode_layout, export_lp, parse_lp, structural_diff};
use menuforge::{parse_instance, solve_bnb, ObjectiveKind};

fn bundled(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../instances/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn lp_round_trip_on_bundled_instance() {
    let inst = parse_instance(&bundled("notepad")).unwrap();
    for kind in [ObjectiveKind::Ift, ObjectiveKind::TwoFold] {
        let model = build_model(&inst, kind, None).unwrap();
        let text = export_lp(&model);
        assert_eq!(text, export_lp(&build_model(&inst, kind, None).unwrap()));
        let parsed = parse_lp(&text).unwrap();
        assert_eq!(structural_diff(&model, &parsed), Vec::<String>::new());
    }
}

#[test]
fn optimal_layouts_encode_feasibly_and_decode_back() {
    for inst in oracle_instances().iter().take(10) {
        for kind in [ObjectiveKind::Ift, ObjectiveKind::TwoFold] {
            let best = solve_bnb(inst, kind, None, None).unwrap();
            let model = build_model(inst, kind, None).unwrap();
            let a = encode_layout(&best.layout, &model).unwrap();
            assert!(check_feasible(&model, &a).is_empty());
            assert_eq!(decode(&a, &model).unwrap(), best.layout);
        }
    }
}

#[test]
fn adapted_model_round_trips() {
    let inst = &oracle_instances()[2];
    let best = solve_bnb(inst, ObjectiveKind::Ift, None, None).unwrap();
    let model = build_model(inst, ObjectiveKind::Ift, Some((&best.layout, 0.3))).unwrap();
    let parsed = parse_lp(&export_lp(&model)).unwrap();
    assert!(structural_diff(&model, &parsed).is_empty());
    let a = encode_layout(&best.layout, &model).unwrap();
    assert!(check_feasible(&model, &a).is_empty());
}
