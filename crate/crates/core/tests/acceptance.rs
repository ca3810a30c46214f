use std::process::ExitCode;
use std::time::{Duration, Instant};

use bernconv::classify::{classify, Classification};
use bernconv::evaluator::{cdf, char_fn, moments, sample};
use bernconv::image::run_law_suite;
use bernconv::oracle::{box_count, compare_cdf, max_atom_mass, truncated_hellinger};
use bernconv::product::{discreteness_test, hellinger_factor, kakutani_dichotomy, CoordinateLawSeq, Dichotomy, Discreteness};
use bernconv::series::ProductVerdict;
use bernconv::spec::{catalog, DigitLaw};
use bernconv::support::{
    cylinders, dimension_estimate, nowhere_dense_verdict, support_measure, Density, DimensionVariant, SupportMeasure,
    AS_PRINTED_WARNING,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ln2_ln3() -> f64 {
    2f64.ln() / 3f64.ln()
}

fn within(v: bernconv::Interval, target: f64, tol: f64) -> bool {
    (v.lo - target).abs() <= tol && (v.hi - target).abs() <= tol
}

fn cantor_benchmark() -> Check {
    let c = catalog::cantor();
    let cls = classify(&c).map_err(err)?;
    ensure!(cls.outcome == Classification::SingularContinuous, "classify gave {:?}", cls.outcome);
    let m = support_measure(&c).map_err(err)?;
    ensure!(matches!(m, SupportMeasure::Zero { .. }), "support measure {m:?}");
    let d = nowhere_dense_verdict(&c).map_err(err)?;
    ensure!(d.verdict == Density::NowhereDense, "density {:?}", d.verdict);
    let dim = dimension_estimate(&c, DimensionVariant::LogCorrected, 10_000).map_err(err)?;
    let t = ln2_ln3();
    ensure!(
        (dim.liminf_value - t).abs() <= 1e-6 && (dim.limsup_value - t).abs() <= 1e-6,
        "dimension window [{}, {}]",
        dim.liminf_value,
        dim.limsup_value
    );
    let b = box_count(&c, 12, 3f64.powi(-8)).map_err(err)?;
    ensure!((b.dim_estimate - t).abs() <= 0.05, "box-count estimate {}", b.dim_estimate);
    Ok(format!("dimension {:.9}, box count {} boxes -> {:.6}", dim.liminf_value, b.occupied, b.dim_estimate))
}

fn uniform_benchmark() -> Check {
    let u = catalog::uniform();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let x = i as f64 / 199.0;
        let v = cdf(&u, x, 40).map_err(err)?;
        worst = worst.max((v.lo - x).abs()).max((v.hi - x).abs());
    }
    ensure!(worst <= 1e-9, "max |cdf(x) - x| = {worst:e}");
    let m = moments(&u).map_err(err)?;
    ensure!(within(m.mean, 0.5, 1e-10), "mean {}", m.mean);
    ensure!(within(m.variance, 1.0 / 12.0, 1e-10), "variance {}", m.variance);
    let tol = 1e-6;
    let f = char_fn(&u, 2.0 * std::f64::consts::PI, tol).map_err(err)?;
    ensure!(f.modulus() <= tol, "|f(2π)| = {:e}", f.modulus());
    Ok(format!("cdf error {worst:.1e}, |f(2π)| = {:.1e}", f.modulus()))
}

fn two_term_benchmark() -> Check {
    let s = catalog::two_term(0.5).map_err(err)?;
    let d = nowhere_dense_verdict(&s).map_err(err)?;
    ensure!(d.verdict == Density::NowhereDense, "density {:?}", d.verdict);
    let value = match support_measure(&s).map_err(err)? {
        SupportMeasure::Positive { value, .. } => value,
        other => return Err(format!("support measure {other:?}")),
    };
    ensure!(within(value, 0.5, 1e-9), "measure {value}");
    let c = cylinders(&s, 20).map_err(err)?;
    ensure!(within(c.total_length, 0.5, 2f64.powi(-19)), "level-20 length {}", c.total_length);
    Ok(format!("measure {value}, level-20 length {:.12}", c.total_length.mid()))
}

fn trichotomy() -> Check {
    let singular = catalog::cantor();
    let ac = catalog::two_term(0.5).map_err(err)?;
    let discrete = catalog::cantor_discrete();
    for (spec, want) in [
        (&discrete, Classification::Discrete),
        (&ac, Classification::AbsolutelyContinuous),
        (&singular, Classification::SingularContinuous),
    ] {
        let v = classify(spec).map_err(err)?;
        ensure!(v.outcome == want, "expected {want:?}, got {:?}", v.outcome);
        ensure!(v.certificates.iter().all(|c| c.certified), "uncertified certificate for {want:?}");
    }
    let report = discreteness_test(&CoordinateLawSeq::binary(discrete.digits().clone())).map_err(err)?;
    let target = 0.288_788_095_086_602_4;
    let (lo, hi) = match (&report.verdict, &report.criterion) {
        (Discreteness::Discrete { .. }, ProductVerdict::PositiveLimit { lower_bound, upper_bound, .. }) => {
            (*lower_bound, *upper_bound)
        }
        _ => return Err(format!("discreteness {:?}", report.verdict)),
    };
    ensure!((lo - target).abs() <= 1e-6 && (hi - target).abs() <= 1e-6, "atom mass in [{lo}, {hi}]");
    ensure!(matches!(support_measure(&ac).map_err(err)?, SupportMeasure::Positive { .. }), "AC support not positive");
    let atom = max_atom_mass(&singular, 18).map_err(err)?;
    ensure!(atom < 1e-3, "level-18 max atom {atom}");
    Ok(format!("atom mass [{lo:.9}, {hi:.9}], singular level-18 max atom {atom:.2e}"))
}

fn dichotomy_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mu = CoordinateLawSeq::binary(catalog::random_digit_law(&mut rng));
        let nu = CoordinateLawSeq::binary(catalog::random_digit_law(&mut rng));
        let brute = truncated_hellinger(&mu, &nu, 12).map_err(err)?;
        let mut prod = 1.0;
        for k in 1..=12 {
            let m: Vec<f64> = mu.law(k).iter().map(|x| x.mid()).collect();
            let v: Vec<f64> = nu.law(k).iter().map(|x| x.mid()).collect();
            prod *= hellinger_factor(&m, &v).map_err(err)?;
        }
        worst = worst.max((brute - prod).abs());
    }
    ensure!(worst <= 1e-10, "max enumeration discrepancy {worst:e}");
    let fair = CoordinateLawSeq::binary(DigitLaw::Constant { p0: 0.5 });
    let pert = CoordinateLawSeq::binary(DigitLaw::Perturbed { p0: 0.5, c: 1.0, s: 1.0 });
    let tilt = CoordinateLawSeq::binary(DigitLaw::Constant { p0: 0.6 });
    let v = kakutani_dichotomy(&fair, &pert).map_err(err)?;
    ensure!(v.outcome == Dichotomy::AbsolutelyContinuous, "k^-2 deviations gave {:?}", v.outcome);
    let v = kakutani_dichotomy(&fair, &tilt).map_err(err)?;
    ensure!(v.outcome == Dichotomy::Singular, "constant deficit gave {:?}", v.outcome);
    let v = kakutani_dichotomy(&fair, &fair).map_err(err)?;
    let unit = matches!(v.criterion, ProductVerdict::PositiveLimit { lower_bound, upper_bound, .. } if lower_bound == 1.0 && upper_bound == 1.0);
    ensure!(v.outcome == Dichotomy::AbsolutelyContinuous && unit, "identical laws gave {:?}", v.criterion);
    Ok(format!("100 pairs, max discrepancy {worst:.1e}"))
}

fn law_suite() -> Check {
    let r = run_law_suite(20_240_601, 10_000);
    ensure!(r.total_violations() == 0, "{} law violations, first {:?}", r.total_violations(), r.first_counterexample);
    ensure!(r.witness_passes, "witness instance failed");
    Ok(format!("{} instances, 0 violations, witness passes", r.instances))
}

fn cdf_sandwich() -> Check {
    let specs = [
        ("cantor", catalog::cantor()),
        ("uniform", catalog::uniform()),
        ("perturbed", catalog::cantor_perturbed()),
    ];
    let mut detail = Vec::new();
    for (name, s) in &specs {
        let r = compare_cdf(s, 16, 200).map_err(err)?;
        ensure!(r.max_violation <= 1e-10, "{name}: violation {:e} at {}", r.max_violation, r.worst_x);
        detail.push(format!("{name} {:.1e}", r.max_violation));
    }
    let c = catalog::cantor();
    let q16 = cdf(&c, 0.25, 16).map_err(err)?;
    ensure!(within(q16, 1.0 / 3.0, 1e-4), "cdf(1/4) at horizon 16 = {q16}");
    let q40 = cdf(&c, 0.25, 40).map_err(err)?;
    ensure!(within(q40, 1.0 / 3.0, 1e-9), "cdf(1/4) at horizon 40 = {q40}");
    Ok(format!("violations {}; cdf(1/4) width {:.1e}", detail.join(", "), q40.width()))
}

fn sampling() -> Check {
    let c = catalog::cantor();
    let horizon = 40;
    let n = 100_000;
    let xs = sample(&c, n, 7, horizon).map_err(err)?;
    let again = sample(&c, n, 7, horizon).map_err(err)?;
    let bytes = |v: &[f64]| v.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
    ensure!(bytes(&xs) == bytes(&again), "same seed gave different samples");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let bound = 3.0 * (0.125 / n as f64).sqrt();
    ensure!((mean - 0.5).abs() <= bound, "mean {mean} outside ±{bound}");
    let mut sorted = xs;
    sorted.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(&c, x, 48).map_err(err)?;
        ks = ks.max((i + 1) as f64 / n as f64 - f.lo).max(f.hi - i as f64 / n as f64);
    }
    let r = c.r(horizon).map_err(err)?.hi;
    ensure!(ks <= 0.01 + r, "KS distance {ks}");
    Ok(format!("mean {mean:.5}, KS {ks:.4}"))
}

fn dimension_adjudication() -> Check {
    let c = catalog::cantor();
    let p = dimension_estimate(&c, DimensionVariant::AsPrinted, 10_000).map_err(err)?;
    let t = 2f64.ln() / 3.0;
    ensure!((p.liminf_value - t).abs() <= 1e-5 && (p.limsup_value - t).abs() <= 1e-5, "as-printed {}", p.liminf_value);
    ensure!(p.warning.as_deref() == Some(AS_PRINTED_WARNING), "missing discrepancy warning");
    ensure!(DimensionVariant::default() == DimensionVariant::LogCorrected, "default variant is not log-corrected");
    let l = dimension_estimate(&c, DimensionVariant::default(), 10_000).map_err(err)?;
    ensure!(l.warning.is_none() && (l.liminf_value - ln2_ln3()).abs() < 1e-6, "log-corrected {}", l.liminf_value);
    Ok(format!("as-printed {:.5} with warning, log-corrected {:.5}", p.liminf_value, l.liminf_value))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Check, Option<Duration>); 9] = [
        (1, "cantor benchmark", cantor_benchmark, Some(Duration::from_secs(30))),
        (2, "uniform benchmark", uniform_benchmark, Some(Duration::from_secs(10))),
        (3, "nowhere dense positive measure", two_term_benchmark, None),
        (4, "type trichotomy", trichotomy, None),
        (5, "product dichotomy oracle", dichotomy_oracle, None),
        (6, "pushforward law suite", law_suite, Some(Duration::from_secs(20))),
        (7, "cdf sandwich oracle", cdf_sandwich, None),
        (8, "seeded sampling", sampling, None),
        (9, "dimension formula adjudication", dimension_adjudication, None),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > limit {
                outcome = Err(format!("took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {id} {name} ({:.2} s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {name} ({:.2} s): {why}", elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
