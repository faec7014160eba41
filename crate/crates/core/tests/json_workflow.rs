use realizability::io::{parse, to_json, MomentSequenceJson, SemiAlgebraicJson, SequenceJson};
use realizability::moments::check_semialgebraic;
use realizability::oracle::{exact_moments, perturb, sample_atomic_ensemble, Domain, ExactMoments};
use realizability::poly::MultiIndex;
use realizability::quasi::{classify, QaClass, Thresholds};
use realizability::{Moments, Sequence, Spec};

#[test]
fn generated_moments_survive_json_and_pass_box_check() {
    let e = sample_atomic_ensemble::<f64>(7, 4, &Domain::unit_box(2)).unwrap();
    let ExactMoments::Points(m) = exact_moments(&e, 6).unwrap() else { unreachable!() };
    let text = to_json(&MomentSequenceJson::from(&m));
    let back: Moments = parse::<MomentSequenceJson>(&text).unwrap().try_into().unwrap();
    assert_eq!(back, m);

    let spec: Spec = parse::<SemiAlgebraicJson>(r#"{"box": [[0, 1], [0, 1]]}"#).unwrap().try_into().unwrap();
    assert!(check_semialgebraic(&back, &spec, 3, 1e-9).unwrap().passed);

    let bad = perturb(&back, &MultiIndex::new(vec![2, 0]), -1.0).unwrap();
    let report = check_semialgebraic(&bad, &spec, 3, 1e-9).unwrap();
    assert!(!report.passed);
}

#[test]
fn named_rules_classify_from_json() {
    let cases = [
        (r#"{"rule": {"name": "factorial_power", "params": {"p": 1}}}"#, QaClass::QuasiAnalytic),
        (r#"{"rule": {"name": "factorial_power", "params": {"p": 2}}}"#, QaClass::NotQuasiAnalytic),
    ];
    for (text, expected) in cases {
        let s: Sequence = parse::<SequenceJson>(text).unwrap().try_into().unwrap();
        assert_eq!(classify(&s, 200, Thresholds::default()).unwrap().classification, expected, "{text}");
    }
}

#[test]
fn malformed_json_reports_position() {
    let err = parse::<MomentSequenceJson>("{\n  \"d\": 1,\n  \"N\": }").unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
}
