use bernconv::classify::{classify, counterexample_demo, Classification, GapCondition};
use bernconv::oracle::box_count;
use bernconv::product::{discreteness_test, CoordinateLawSeq, Discreteness};
use bernconv::spec::{ConvolutionSpec, DigitLaw, DigitTail, ScaleSeq, TailRule};
use bernconv::support::{dimension_estimate, support_measure, DimensionVariant, SupportMeasure};

fn fair() -> DigitLaw {
    DigitLaw::Constant { p0: 0.5 }
}

fn specs() -> Vec<(&'static str, ConvolutionSpec)> {
    let cantor = ScaleSeq::CantorLike { coef: 2.0, base: 3 };
    vec![
        ("cantor", ConvolutionSpec::new(cantor.clone(), fair()).unwrap()),
        ("geometric 0.3", ConvolutionSpec::new(ScaleSeq::Geometric { lambda: 0.3, coef: 1.0 }, fair()).unwrap()),
        ("uniform", ConvolutionSpec::new(ScaleSeq::Geometric { lambda: 0.5, coef: 1.0 }, fair()).unwrap()),
        ("two-term", ConvolutionSpec::new(ScaleSeq::TwoTerm { epsilon: 0.5 }, fair()).unwrap()),
        (
            "biased uniform",
            ConvolutionSpec::new(ScaleSeq::Geometric { lambda: 0.5, coef: 1.0 }, DigitLaw::Constant { p0: 0.3 }).unwrap(),
        ),
        (
            "discrete",
            ConvolutionSpec::new(
                cantor.clone(),
                DigitLaw::Explicit {
                    prefix: vec![],
                    tail: DigitTail::GeometricPerturbed { p0: 1.0, c: -1.0, ratio: 0.5 },
                },
            )
            .unwrap(),
        ),
        (
            "summable gaps",
            ConvolutionSpec::new(
                ScaleSeq::Explicit {
                    prefix: vec![],
                    tail: TailRule::DeltaExcess { scale: 1.0, ratio: 0.5, mass: 1.0, start_index: 1 },
                },
                fair(),
            )
            .unwrap(),
        ),
    ]
}

#[test]
fn classification_agrees_with_support_measure_and_atoms() {
    for (name, spec) in specs() {
        let verdict = classify(&spec).unwrap();
        let atoms = discreteness_test(&CoordinateLawSeq::binary(spec.digits().clone())).unwrap();
        match verdict.outcome {
            Classification::Discrete => {
                assert!(matches!(atoms.verdict, Discreteness::Discrete { .. }), "{name}");
                assert!(verdict.atom.is_some(), "{name}");
            }
            Classification::AbsolutelyContinuous => {
                match support_measure(&spec) {
                    Ok(m) => assert!(matches!(m, SupportMeasure::Positive { .. }), "{name}"),
                    Err(_) => assert!(
                        matches!(verdict.hypothesis_report.gap_condition, GapCondition::Boundary { .. }),
                        "{name}"
                    ),
                }
                assert!(matches!(atoms.verdict, Discreteness::NotDiscrete), "{name}");
            }
            Classification::SingularContinuous => {
                assert!(matches!(atoms.verdict, Discreteness::NotDiscrete), "{name}");
            }
            Classification::Indeterminate => panic!("{name} should be decided"),
        }
        if let Ok(SupportMeasure::Zero { .. }) = support_measure(&spec) {
            assert_ne!(verdict.outcome, Classification::AbsolutelyContinuous, "{name}");
        }
    }
}

#[test]
fn expected_outcomes() {
    let expect = [
        ("cantor", Classification::SingularContinuous),
        ("geometric 0.3", Classification::SingularContinuous),
        ("uniform", Classification::AbsolutelyContinuous),
        ("two-term", Classification::AbsolutelyContinuous),
        ("biased uniform", Classification::SingularContinuous),
        ("discrete", Classification::Discrete),
        ("summable gaps", Classification::AbsolutelyContinuous),
    ];
    let specs = specs();
    for (name, outcome) in expect {
        let spec = &specs.iter().find(|(n, _)| *n == name).unwrap().1;
        assert_eq!(classify(spec).unwrap().outcome, outcome, "{name}");
    }
}

#[test]
fn dimension_matches_box_counting() {
    for lambda in [0.2, 0.3, 1.0 / 3.0, 0.4] {
        let spec = ConvolutionSpec::new(ScaleSeq::Geometric { lambda, coef: 1.0 }, fair()).unwrap();
        let dim = dimension_estimate(&spec, DimensionVariant::LogCorrected, 10_000).unwrap();
        let level = 18;
        let eps = spec.r(level as u64).unwrap().hi;
        let boxes = box_count(&spec, level, eps).unwrap();
        let d = boxes.dim_estimate;
        assert!((dim.limit.unwrap() - d).abs() < 0.05, "λ = {lambda}: {d} vs {:?}", dim.limit);
    }
}

#[test]
fn counterexample_demo_images_overlap_everywhere() {
    let demo = counterexample_demo(0.4, 0.8, 20).unwrap();
    assert_eq!(demo.histogram_mu.len(), demo.histogram_nu.len());
    assert!(demo.histogram_mu.iter().all(|&m| m > 0.0));
    assert!(demo.histogram_nu.iter().all(|&m| m > 0.0));
    assert!(demo.overlap_mass > 0.5);
    assert!(demo.hellinger_factor < 1.0);
    let total: f64 = demo.histogram_mu.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
}
