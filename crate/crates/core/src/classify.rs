//! Type classification of `φ`: discrete, absolutely continuous or singular
//! continuous, plus the almost-every-λ condition reports.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::truncated_distribution;
use crate::interval::Interval;
use crate::product::{discreteness_test_with, kakutani_dichotomy, AtomDescriptor, CoordinateLawSeq, Discreteness, PartialProduct};
use crate::series::{series_verdict_with, ProductVerdict, SeriesOptions, SeriesVerdict};
use crate::spec::{ConvolutionSpec, DigitLaw, ScaleSeq, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    Discrete,
    AbsolutelyContinuous,
    SingularContinuous,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `Π max{p_0k, p_1k} > 0`.
    MaxDigitProduct,
    /// `Σ (δ_k - 1) < ∞`.
    GapExcessSeries,
    /// `Σ (½ - p_0k)^2 < ∞`.
    DigitDeviationSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVerdict {
    Series(SeriesVerdict),
    Product(ProductVerdict),
}

impl CriterionVerdict {
    pub fn is_certified(&self) -> bool {
        match self {
            CriterionVerdict::Series(v) => v.is_certified(),
            CriterionVerdict::Product(v) => v.is_certified(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub criterion: Criterion,
    pub certified: bool,
    pub verdict: CriterionVerdict,
}

impl Certificate {
    fn new(criterion: Criterion, verdict: CriterionVerdict) -> Self {
        Certificate { criterion, certified: verdict.is_certified(), verdict }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GapCondition {
    /// `δ_k > 1` for every `k`.
    Certified,
    /// `δ_k >= 1` for every `k` with equality somewhere.
    Boundary { first_equal: u64 },
    Violated { index: u64 },
    Uncertain { index: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub gap_condition: GapCondition,
    pub digits_nondegenerate: Option<bool>,
    /// Whether the trichotomy was applied.
    pub trichotomy_applied: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationVerdict {
    pub outcome: Classification,
    pub certificates: Vec<Certificate>,
    pub hypothesis_report: HypothesisReport,
    /// The maximizing digit sequence when the law is discrete.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomDescriptor>,
}

impl ClassificationVerdict {
    pub fn certificate(&self, c: Criterion) -> Option<&Certificate> {
        self.certificates.iter().find(|x| x.criterion == c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    /// Fail with `HypothesisViolation` instead of reporting `Indeterminate`.
    pub strict: bool,
    pub series: SeriesOptions,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { strict: false, series: SeriesOptions::default() }
    }
}

const PURITY_NOTE: &str =
    "pure type follows from the purity law for convergent sums of independent discrete variables (cited, not computed)";

fn gap_condition(scales: &ScaleSeq) -> GapCondition {
    let p = scales.delta_profile();
    if p.all(Sign::Above) {
        GapCondition::Certified
    } else if let Some(index) = p.first(Sign::Below) {
        GapCondition::Violated { index }
    } else if let Some(index) = p.first_uncertain() {
        GapCondition::Uncertain { index }
    } else {
        let first_equal = p.first(Sign::Equal).expect("profile with no sign other than Above and Equal");
        GapCondition::Boundary { first_equal }
    }
}

pub fn classify(spec: &ConvolutionSpec) -> Result<ClassificationVerdict> {
    classify_with(spec, ClassifyOptions::default())
}

/// Discrete iff `Π max{p_0k, p_1k} > 0`; absolutely continuous iff both
/// `Σ (δ_k - 1)` and `Σ (½ - p_0k)^2` converge; singular continuous otherwise.
pub fn classify_with(spec: &ConvolutionSpec, opts: ClassifyOptions) -> Result<ClassificationVerdict> {
    let gap = gap_condition(spec.scales());
    let mut notes = vec![PURITY_NOTE.to_string()];
    let applies = matches!(gap, GapCondition::Certified | GapCondition::Boundary { .. });
    match gap {
        GapCondition::Boundary { first_equal } => notes.push(format!(
            "δ_{first_equal} = 1: touching cylinders, the trichotomy is extended through the \
             bijection off a null set of dyadic-type endpoints; the CDF evaluator cross-checks"
        )),
        GapCondition::Violated { index } | GapCondition::Uncertain { index } => {
            let msg = format!("δ_k > 1 is not certified at k = {index}");
            if opts.strict {
                return Err(Error::HypothesisViolation(msg));
            }
            notes.push(format!("{msg}; only the discreteness criterion is conclusive"));
        }
        GapCondition::Certified => {}
    }

    let disc = discreteness_test_with(&CoordinateLawSeq::binary(spec.digits().clone()), opts.series)?;
    let gap_series = series_verdict_with(&spec.scales().gap_excess_terms(), opts.series);
    let dev_series = series_verdict_with(&spec.digits().deviation_terms(0.5), opts.series);

    let atom = match &disc.verdict {
        Discreteness::Discrete { atom, .. } => Some(atom.clone()),
        _ => None,
    };
    let gap_cert = Certificate::new(Criterion::GapExcessSeries, CriterionVerdict::Series(gap_series.clone()));
    let certificates = vec![
        Certificate::new(Criterion::MaxDigitProduct, CriterionVerdict::Product(disc.criterion.clone())),
        gap_cert,
        Certificate::new(Criterion::DigitDeviationSeries, CriterionVerdict::Series(dev_series.clone())),
    ];

    // an atom of the digit product measure is an atom of its image under any map
    let outcome = match (&disc.verdict, applies) {
        (Discreteness::Discrete { .. }, _) => Classification::Discrete,
        (Discreteness::NotDiscrete, true) => match (gap_series.converges(), dev_series.converges()) {
            (Some(true), Some(true)) => Classification::AbsolutelyContinuous,
            (Some(false), _) | (_, Some(false)) => Classification::SingularContinuous,
            _ => Classification::Indeterminate,
        },
        _ => Classification::Indeterminate,
    };
    if spec.digits().all_nondegenerate() == Some(false) && outcome != Classification::Discrete {
        notes.push("some digit is deterministic at a finite index".into());
    }
    Ok(ClassificationVerdict {
        outcome,
        certificates,
        hypothesis_report: HypothesisReport {
            gap_condition: gap,
            digits_nondegenerate: spec.digits().all_nondegenerate(),
            trichotomy_applied: applies,
            notes,
        },
        atom,
    })
}

pub const CITED_MARKER: &str = "cited, not verified";

/// Condition report for the λ^k scales, `ψ = Σ φ_k λ^k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlmostEveryLambdaReport {
    /// `Σ (p_0 - p_0k)^2` with `p_0 = 1 - p`.
    pub deviation_verdict: SeriesVerdict,
    pub p: Option<f64>,
    pub target_p0: f64,
    /// `p^p (1 - p)^(1 - p)`; `½` without `p`.
    pub threshold: Interval,
    pub applies: Option<bool>,
    pub conclusion_text: String,
    pub status: &'static str,
}

/// `p^p (1-p)^(1-p)` as an enclosure.
pub fn threshold(p: f64) -> Interval {
    let pi = Interval::point(p);
    let q = Interval::ONE.sub(pi);
    let ln = |x: Interval| if x.hi == 0.0 { Interval::ZERO } else { x.ln() };
    pi.mul(ln(pi)).add(q.mul(ln(q))).exp()
}

pub fn report_ae_lambda(digits: &DigitLaw, p: Option<f64>) -> Result<AlmostEveryLambdaReport> {
    report_ae_lambda_with(digits, p, SeriesOptions::default())
}

pub fn report_ae_lambda_with(digits: &DigitLaw, p: Option<f64>, opts: SeriesOptions) -> Result<AlmostEveryLambdaReport> {
    if let Some(p) = p {
        if !(1.0 / 3.0..=2.0 / 3.0).contains(&p) {
            return Err(Error::Range(format!("p = {p} lies outside [1/3, 2/3]")));
        }
    }
    digits.validate()?;
    let target_p0 = p.map_or(0.5, |p| 1.0 - p);
    let verdict = series_verdict_with(&digits.deviation_terms(target_p0), opts);
    let th = threshold(p.unwrap_or(0.5));
    let applies = verdict.converges();
    let range = if p.is_some() {
        format!("[{:.6}, 1)", th.mid())
    } else {
        "[1/2, 1)".to_string()
    };
    let conclusion_text = match applies {
        Some(true) => format!(
            "Σ({target_p0} - p_0k)^2 converges: for almost every λ in {range} the distribution of \
             Σ φ_k λ^k is absolutely continuous ({CITED_MARKER})"
        ),
        Some(false) => format!(
            "Σ({target_p0} - p_0k)^2 diverges: the almost-every-λ absolute continuity result is inapplicable"
        ),
        None => format!("Σ({target_p0} - p_0k)^2 is undecided; no conclusion is drawn"),
    };
    Ok(AlmostEveryLambdaReport {
        deviation_verdict: verdict,
        p,
        target_p0,
        threshold: th,
        applies,
        conclusion_text,
        status: CITED_MARKER,
    })
}

/// Histogram cell width of the demo grid.
pub const DEMO_CELL: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleDemo {
    pub p: f64,
    pub lambda: f64,
    pub level: u32,
    /// `ν ⊥ μ` for the digit product measures, certified.
    pub hellinger_verdict: ProductVerdict,
    pub hellinger_factor: f64,
    pub hellinger_products: Vec<PartialProduct>,
    pub cell_width: f64,
    pub grid_upper: f64,
    /// Fair digits.
    pub histogram_mu: Vec<f64>,
    /// Digits with `P(φ_k = 1) = p`.
    pub histogram_nu: Vec<f64>,
    pub overlap_mass: f64,
    pub images_note: String,
}

/// Product measures that are mutually singular while their images under
/// `ω -> Σ ω_k λ^k` are not.
pub fn counterexample_demo(p: f64, lambda: f64, n: u32) -> Result<CounterexampleDemo> {
    if !(1.0 / 3.0..=2.0 / 3.0).contains(&p) || p == 0.5 {
        return Err(Error::Range(format!("p = {p} must lie in [1/3, 2/3] and differ from 1/2")));
    }
    if !(lambda > 0.5 && lambda < 1.0) {
        return Err(Error::Range(format!("λ = {lambda} must lie in (1/2, 1)")));
    }
    if n > crate::evaluator::MAX_ENUM_LEVEL {
        return Err(Error::LevelTooLarge { level: n, max: crate::evaluator::MAX_ENUM_LEVEL });
    }
    let fair = DigitLaw::Constant { p0: 0.5 };
    let tilted = DigitLaw::Constant { p0: 1.0 - p };
    let dich = kakutani_dichotomy(&CoordinateLawSeq::binary(fair.clone()), &CoordinateLawSeq::binary(tilted.clone()))?;
    let scales = ScaleSeq::Geometric { lambda, coef: 1.0 };
    let mu = truncated_distribution(&ConvolutionSpec::new(scales.clone(), fair)?, n)?;
    let nu = truncated_distribution(&ConvolutionSpec::new(scales, tilted)?, n)?;
    let upper = lambda / (1.0 - lambda);
    let cells = (upper / DEMO_CELL - 1e-9).ceil().max(1.0) as usize;
    let hm = mu.histogram(0.0, DEMO_CELL, cells);
    let hn = nu.histogram(0.0, DEMO_CELL, cells);
    let overlap = hm.iter().zip(&hn).map(|(a, b)| a.min(*b)).sum();
    Ok(CounterexampleDemo {
        p,
        lambda,
        level: n,
        hellinger_verdict: dich.criterion,
        hellinger_factor: (0.5 * p).sqrt() + (0.5 * (1.0 - p)).sqrt(),
        hellinger_products: dich.hellinger_products,
        cell_width: DEMO_CELL,
        grid_upper: upper,
        histogram_mu: hm,
        histogram_nu: hn,
        overlap_mass: overlap,
        images_note: format!(
            "absolute continuity of the image measures holds for almost every λ ({CITED_MARKER}); \
             the histograms only illustrate common support"
        ),
    })
}
