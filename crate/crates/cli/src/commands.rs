use serde::Serialize;
use serde_json::json;

use bernconv::classify::{classify_with, counterexample_demo, report_ae_lambda_with, Classification, ClassifyOptions};
use bernconv::evaluator::{cdf_grid, char_fn, grid, moments, sample};
use bernconv::image::run_law_suite;
use bernconv::oracle::{box_count, compare_cdf_with, truncated_hellinger};
use bernconv::product::hellinger_factor;
use bernconv::series::SeriesOptions;
use bernconv::spec::ConvolutionSpec;
use bernconv::support::{
    cylinders, dimension_estimate, nowhere_dense_verdict, support_measure_with, unique_representation, DimensionVariant,
};

use crate::args::*;
use crate::document::{load_laws, load_spec, SpecDocument};
use crate::report::{Failure, Report};

/// Text for standard output plus the exit code.
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: 0 }
    }

    fn report(r: Report) -> Self {
        Outcome::ok(r.to_json())
    }

    fn failure(command: &str, doc: Option<&SpecDocument>, f: Failure) -> Self {
        let code = f.exit_code();
        Outcome { text: Report::failed(command, doc.cloned(), f).to_json(), code }
    }
}

macro_rules! load {
    ($cmd:expr, $path:expr) => {
        match load_spec($path) {
            Ok(x) => x,
            Err(f) => return Outcome::failure($cmd, None, f),
        }
    };
}

macro_rules! attempt {
    ($cmd:expr, $doc:expr, $e:expr) => {
        match $e {
            Ok(x) => x,
            Err(err) => return Outcome::failure($cmd, $doc, Failure::from(err)),
        }
    };
}

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Classify(a) => classify(a),
        Command::Support(a) => support(a),
        Command::Measure(a) => measure(a),
        Command::Dimension(a) => dimension(a),
        Command::Cdf(a) => cdf(a),
        Command::Charfn(a) => charfn(a),
        Command::Moments(a) => moments_cmd(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Laws(a) => laws(a),
        Command::DemoCounterexample(a) => demo(a),
        Command::Oracle(o) => oracle(o),
    }
}

fn classify(a: ClassifyArgs) -> Outcome {
    const CMD: &str = "classify";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let series = SeriesOptions { horizon: a.horizon };
    let v = attempt!(CMD, Some(&doc), classify_with(&spec, ClassifyOptions { strict: a.strict, series }));
    let ae = attempt!(CMD, Some(&doc), report_ae_lambda_with(spec.digits(), a.p, series));
    let result = json!({ "classification": v, "almost_every_lambda": ae });
    if v.outcome == Classification::Indeterminate && !v.hypothesis_report.trichotomy_applied {
        let message = "δ_k > 1 is not certified for every k; the trichotomy does not apply".to_string();
        return Outcome::failure(CMD, Some(&doc), Failure::Hypothesis { message, partial: Some(result) });
    }
    Outcome::report(Report::new(CMD).with_spec(&doc).with_result(&result))
}

fn csv_rows<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn support(a: SupportArgs) -> Outcome {
    const CMD: &str = "support";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let approx = attempt!(CMD, Some(&doc), cylinders(&spec, a.level));
    if let Format::Csv = a.format {
        return Outcome::ok(csv_rows(&["lo", "hi"], approx.intervals.iter().map(|i| (i.lo, i.hi))));
    }
    let uniqueness = unique_representation(&spec);
    match nowhere_dense_verdict(&spec) {
        Ok(density) => Outcome::report(Report::new(CMD).with_spec(&doc).with_result(&json!({
            "density": density,
            "uniqueness": uniqueness,
            "approximation": approx,
        }))),
        Err(e) => {
            let partial = json!({ "uniqueness": uniqueness, "approximation": approx });
            Outcome::failure(CMD, Some(&doc), Failure::Hypothesis { message: e.to_string(), partial: Some(partial) })
        }
    }
}

fn measure(a: MeasureArgs) -> Outcome {
    const CMD: &str = "measure";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let m = attempt!(CMD, Some(&doc), support_measure_with(&spec, SeriesOptions { horizon: a.horizon }));
    Outcome::report(Report::new(CMD).with_spec(&doc).with_result(&m))
}

fn dimension(a: DimensionArgs) -> Outcome {
    const CMD: &str = "dimension";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let variant: DimensionVariant = a.variant.into();
    let d = attempt!(CMD, Some(&doc), dimension_estimate(&spec, variant, a.horizon));
    let mut r = Report::new(CMD).with_spec(&doc).with_result(&d);
    r.warnings.extend(d.warning.clone());
    Outcome::report(r)
}

fn grid_bounds(cmd: &str, doc: &SpecDocument, g: &GridArgs, default_to: f64) -> Result<(f64, f64), Outcome> {
    let (from, to) = (g.from.unwrap_or(0.0), g.to.unwrap_or(default_to));
    if !(from.is_finite() && to.is_finite() && from <= to) {
        let f = Failure::validation("range", format!("grid bounds [{from}, {to}] are not an ordered finite pair"));
        return Err(Outcome::failure(cmd, Some(doc), f));
    }
    Ok((from, to))
}

fn total_mass(spec: &ConvolutionSpec) -> bernconv::Result<f64> {
    Ok(spec.r(0)?.lo)
}

fn cdf(a: CdfArgs) -> Outcome {
    const CMD: &str = "cdf";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let r0 = attempt!(CMD, Some(&doc), total_mass(&spec));
    let (from, to) = match grid_bounds(CMD, &doc, &a.grid, r0) {
        Ok(b) => b,
        Err(o) => return o,
    };
    let rows = attempt!(CMD, Some(&doc), cdf_grid(&spec, from, to, a.grid.points, a.horizon));
    Outcome::ok(csv_rows(&["x", "lo", "hi"], rows.iter().map(|(x, v)| (*x, v.lo, v.hi))))
}

fn charfn(a: CharfnArgs) -> Outcome {
    const CMD: &str = "charfn";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let (from, to) = match grid_bounds(CMD, &doc, &a.grid, 50.0) {
        Ok(b) => b,
        Err(o) => return o,
    };
    let mut rows = Vec::with_capacity(a.grid.points);
    for t in grid(from, to, a.grid.points) {
        let v = attempt!(CMD, Some(&doc), char_fn(&spec, t, a.tol));
        rows.push((t, v.re, v.im));
    }
    Outcome::ok(csv_rows(&["t", "re", "im"], rows))
}

fn moments_cmd(a: SpecArg) -> Outcome {
    const CMD: &str = "moments";
    let (doc, spec) = load!(CMD, &a.spec);
    let m = attempt!(CMD, Some(&doc), moments(&spec));
    Outcome::report(Report::new(CMD).with_spec(&doc).with_result(&m))
}

fn sample_cmd(a: SampleArgs) -> Outcome {
    const CMD: &str = "sample";
    let (doc, spec) = load!(CMD, &a.spec.spec);
    let xs = attempt!(CMD, Some(&doc), sample(&spec, a.count, a.seed, a.horizon));
    let mut out = String::with_capacity(xs.len() * 20);
    for x in xs {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    Outcome::ok(out)
}

fn laws(a: LawsArgs) -> Outcome {
    let suite = run_law_suite(a.seed, a.count);
    let mut r = Report::new("laws").with_result(&suite);
    r.seed = Some(a.seed);
    if suite.total_violations() > 0 {
        r.warnings.push(format!("{} law violations", suite.total_violations()));
    }
    Outcome::report(r)
}

fn demo(a: DemoArgs) -> Outcome {
    const CMD: &str = "demo-counterexample";
    let d = attempt!(CMD, None, counterexample_demo(a.p, a.lambda, a.level));
    let mut r = Report::new(CMD).with_result(&d);
    r.warnings.push(d.images_note.clone());
    Outcome::report(r)
}

fn oracle(o: OracleCommand) -> Outcome {
    match o {
        OracleCommand::BoxCount { spec, level, box_size } => {
            const CMD: &str = "oracle box-count";
            let (doc, spec) = load!(CMD, &spec);
            let b = attempt!(CMD, Some(&doc), box_count(&spec, level, box_size));
            Outcome::report(Report::new(CMD).with_spec(&doc).with_result(&b))
        }
        OracleCommand::Hellinger { mu, nu, level } => {
            const CMD: &str = "oracle hellinger";
            let (mu, nu) = match (load_laws(&mu), load_laws(&nu)) {
                (Ok(m), Ok(n)) => (m, n),
                (Err(f), _) | (_, Err(f)) => return Outcome::failure(CMD, None, f),
            };
            let value = attempt!(CMD, None, truncated_hellinger(&mu, &nu, level));
            let mut product = 1.0;
            for k in 1..=level as u64 {
                let m: Vec<f64> = mu.law(k).iter().map(|x| x.mid()).collect();
                let v: Vec<f64> = nu.law(k).iter().map(|x| x.mid()).collect();
                product *= attempt!(CMD, None, hellinger_factor(&m, &v));
            }
            Outcome::report(Report::new(CMD).with_result(&json!({
                "level": level,
                "enumerated": value,
                "factor_product": product,
                "discrepancy": (value - product).abs(),
            })))
        }
        OracleCommand::CompareCdf { spec, level, grid, horizon } => {
            const CMD: &str = "oracle compare-cdf";
            let (doc, spec) = load!(CMD, &spec);
            let c = attempt!(CMD, Some(&doc), compare_cdf_with(&spec, level, grid, horizon));
            Outcome::report(Report::new(CMD).with_spec(&doc).with_result(&c))
        }
    }
}
