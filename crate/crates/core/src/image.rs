//! Image measures on finite spaces with the full power set as σ-algebra,
//! where absolute continuity and singularity are decidable, together with a
//! seeded randomized suite for the preservation and reflection laws.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteMeasureSpace {
    points: Vec<String>,
}

impl FiniteMeasureSpace {
    pub fn new(points: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &points {
            if !seen.insert(p) {
                return Err(Error::invalid("points", format!("duplicate point identifier {p:?}")));
            }
        }
        if points.is_empty() {
            return Err(Error::invalid("points", "a probability space needs at least one point"));
        }
        Ok(FiniteMeasureSpace { points })
    }

    /// Points labelled `prefix0, prefix1, ...`.
    pub fn labelled(prefix: &str, n: usize) -> Self {
        FiniteMeasureSpace::new((0..n).map(|i| format!("{prefix}{i}")).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteMeasure {
    space: Arc<FiniteMeasureSpace>,
    mass: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(space: Arc<FiniteMeasureSpace>, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != space.len() {
            return Err(Error::DimensionMismatch { left: mass.len(), right: space.len() });
        }
        if let Some(i) = mass.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid(format!("mass[{i}]"), format!("must be finite and nonnegative, got {}", mass[i])));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid("mass", format!("total mass is {total}, not 1")));
        }
        Ok(FiniteMeasure { space, mass })
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        &self.space
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointMap {
    domain: Arc<FiniteMeasureSpace>,
    codomain: Arc<FiniteMeasureSpace>,
    image: Vec<usize>,
}

impl PointMap {
    pub fn new(domain: Arc<FiniteMeasureSpace>, codomain: Arc<FiniteMeasureSpace>, image: Vec<usize>) -> Result<Self> {
        if image.len() != domain.len() {
            return Err(Error::DimensionMismatch { left: image.len(), right: domain.len() });
        }
        if let Some(i) = image.iter().position(|&q| q >= codomain.len()) {
            return Err(Error::invalid(format!("image[{i}]"), "points outside the codomain"));
        }
        Ok(PointMap { domain, codomain, image })
    }

    pub fn identity(space: Arc<FiniteMeasureSpace>) -> Self {
        let n = space.len();
        PointMap { domain: space.clone(), codomain: space, image: (0..n).collect() }
    }

    pub fn domain(&self) -> &Arc<FiniteMeasureSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FiniteMeasureSpace> {
        &self.codomain
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn is_bijective(&self) -> bool {
        self.domain.len() == self.codomain.len() && self.injective_on(|_| true)
    }

    fn injective_on(&self, keep: impl Fn(usize) -> bool) -> bool {
        let mut hit = vec![false; self.codomain.len()];
        for (p, &q) in self.image.iter().enumerate() {
            if keep(p) {
                if hit[q] {
                    return false;
                }
                hit[q] = true;
            }
        }
        true
    }

    /// Whether some set `N` of points null for every measure in `measures`
    /// can be removed so that `f` restricted to the rest is a bijection.
    pub fn bijective_off_common_null_set(&self, measures: &[&FiniteMeasure]) -> bool {
        let null = |p: usize| measures.iter().all(|m| m.mass[p] == 0.0);
        if !self.injective_on(|p| !null(p)) {
            return false;
        }
        // codomain points missed by non-null points must be covered by a null one
        let mut hit = vec![false; self.codomain.len()];
        for (p, &q) in self.image.iter().enumerate() {
            if !null(p) {
                hit[q] = true;
            }
        }
        let mut spare = vec![false; self.codomain.len()];
        for (p, &q) in self.image.iter().enumerate() {
            if null(p) {
                spare[q] = true;
            }
        }
        hit.iter().zip(&spare).all(|(h, s)| *h || *s)
    }
}

fn same_space(a: &FiniteMeasureSpace, b: &FiniteMeasureSpace, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(what.to_string()))
    }
}

/// `m*(E) = m(f^{-1}(E))`.
pub fn pushforward(m: &FiniteMeasure, f: &PointMap) -> Result<FiniteMeasure> {
    same_space(&m.space, &f.domain, "measure space differs from the map's domain")?;
    let mut mass = vec![0.0; f.codomain.len()];
    for (p, &q) in f.image.iter().enumerate() {
        mass[q] += m.mass[p];
    }
    Ok(FiniteMeasure { space: f.codomain.clone(), mass })
}

/// `m1 ≪ m2`.
pub fn abs_continuous(m1: &FiniteMeasure, m2: &FiniteMeasure) -> Result<bool> {
    same_space(&m1.space, &m2.space, "measures live on different spaces")?;
    Ok(m1.mass.iter().zip(&m2.mass).all(|(a, b)| *b > 0.0 || *a == 0.0))
}

/// `m1 ⊥ m2`: disjoint supports.
pub fn mutually_singular(m1: &FiniteMeasure, m2: &FiniteMeasure) -> Result<bool> {
    same_space(&m1.space, &m2.space, "measures live on different spaces")?;
    Ok(m1.mass.iter().zip(&m2.mass).all(|(a, b)| *a == 0.0 || *b == 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Relations {
    pub abs_continuous: bool,
    pub singular: bool,
}

/// One implication evaluated on an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LawCheck {
    pub hypothesis: bool,
    pub conclusion: bool,
}

impl LawCheck {
    pub fn violated(&self) -> bool {
        self.hypothesis && !self.conclusion
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `η ≪ τ ⇒ η* ≪ τ*`
    AbsContinuityPreserved,
    /// `η* ⊥ τ* ⇒ η ⊥ τ`
    SingularityReflected,
    /// bijective `f`: both relations hold before iff after
    BijectionEquivalence,
    /// bijective off a common null set: both relations hold before iff after
    NullSetBijectionEquivalence,
}

pub const LAWS: [Law; 4] =
    [Law::AbsContinuityPreserved, Law::SingularityReflected, Law::BijectionEquivalence, Law::NullSetBijectionEquivalence];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawReport {
    pub before: Relations,
    pub after: Relations,
    pub abs_continuity_preserved: LawCheck,
    pub singularity_reflected: LawCheck,
    pub bijection_equivalence: LawCheck,
    pub null_set_bijection_equivalence: LawCheck,
}

impl LawReport {
    pub fn check(&self, law: Law) -> LawCheck {
        match law {
            Law::AbsContinuityPreserved => self.abs_continuity_preserved,
            Law::SingularityReflected => self.singularity_reflected,
            Law::BijectionEquivalence => self.bijection_equivalence,
            Law::NullSetBijectionEquivalence => self.null_set_bijection_equivalence,
        }
    }

    pub fn violations(&self) -> Vec<Law> {
        LAWS.into_iter().filter(|&l| self.check(l).violated()).collect()
    }
}

pub fn check_preservation_laws(eta: &FiniteMeasure, tau: &FiniteMeasure, f: &PointMap) -> Result<LawReport> {
    let (eta_s, tau_s) = (pushforward(eta, f)?, pushforward(tau, f)?);
    let before = Relations { abs_continuous: abs_continuous(eta, tau)?, singular: mutually_singular(eta, tau)? };
    let after = Relations { abs_continuous: abs_continuous(&eta_s, &tau_s)?, singular: mutually_singular(&eta_s, &tau_s)? };
    let equivalent = before == after;
    Ok(LawReport {
        before,
        after,
        abs_continuity_preserved: LawCheck { hypothesis: before.abs_continuous, conclusion: after.abs_continuous },
        singularity_reflected: LawCheck { hypothesis: after.singular, conclusion: before.singular },
        bijection_equivalence: LawCheck { hypothesis: f.is_bijective(), conclusion: equivalent },
        null_set_bijection_equivalence: LawCheck {
            hypothesis: f.bijective_off_common_null_set(&[eta, tau]),
            conclusion: equivalent,
        },
    })
}

/// A measure pair and map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    pub eta: FiniteMeasure,
    pub tau: FiniteMeasure,
    pub map: PointMap,
}

/// `η ⊥ τ` on two points, `f` constant: the images coincide, so `η* ≪ τ*`
/// although `η ⊥ τ`. The converse of absolute-continuity preservation fails.
pub fn converse_witness() -> Instance {
    let dom = Arc::new(FiniteMeasureSpace::labelled("w", 2));
    let cod = Arc::new(FiniteMeasureSpace::labelled("z", 1));
    Instance {
        eta: FiniteMeasure::new(dom.clone(), vec![1.0, 0.0]).unwrap(),
        tau: FiniteMeasure::new(dom.clone(), vec![0.0, 1.0]).unwrap(),
        map: PointMap::new(dom, cod, vec![0, 0]).unwrap(),
    }
}

/// Instance families drawn by the randomized suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Arbitrary maps between spaces of sizes 1 to 8.
    General,
    /// Permutations.
    Bijective,
    /// A bijection from the non-null points plus null points mapped anywhere.
    NullSetBijective,
    /// Constant maps.
    Constant,
    /// Point masses.
    PointMass,
}

const FAMILIES: [Family; 5] =
    [Family::General, Family::Bijective, Family::NullSetBijective, Family::Constant, Family::PointMass];

fn random_masses(rng: &mut ChaCha8Rng, n: usize, allowed: &[bool]) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|i| if allowed[i] { rng.random::<f64>() + 1e-3 } else { 0.0 }).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    // put the rounding residue on the largest entry so the total is 1
    let resid = 1.0 - w.iter().sum::<f64>();
    let imax = (0..n).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    w[imax] += resid;
    w
}

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    let keep = rng.random_range(0.2..1.0);
    let mut m: Vec<bool> = (0..n).map(|_| rng.random_bool(keep)).collect();
    if !m.iter().any(|&b| b) {
        m[rng.random_range(0..n)] = true;
    }
    m
}

fn random_measure(rng: &mut ChaCha8Rng, space: &Arc<FiniteMeasureSpace>, mask: &[bool]) -> FiniteMeasure {
    FiniteMeasure::new(space.clone(), random_masses(rng, space.len(), mask)).unwrap()
}

fn point_mass(space: &Arc<FiniteMeasureSpace>, at: usize) -> FiniteMeasure {
    let mut mass = vec![0.0; space.len()];
    mass[at] = 1.0;
    FiniteMeasure::new(space.clone(), mass).unwrap()
}

/// Draws one instance of the given family.
pub fn random_instance(rng: &mut ChaCha8Rng, family: Family) -> Instance {
    let n = rng.random_range(1..=8usize);
    let dom = Arc::new(FiniteMeasureSpace::labelled("w", n));
    match family {
        Family::General | Family::PointMass | Family::Constant => {
            let m = if family == Family::Constant { 1 } else { rng.random_range(1..=8usize) };
            let cod = Arc::new(FiniteMeasureSpace::labelled("z", m));
            let image = (0..n).map(|_| rng.random_range(0..m)).collect();
            let (eta, tau) = if family == Family::PointMass {
                let eta = point_mass(&dom, rng.random_range(0..n));
                let tau = if rng.random_bool(0.5) {
                    point_mass(&dom, rng.random_range(0..n))
                } else {
                    let mask = random_mask(rng, n);
                    random_measure(rng, &dom, &mask)
                };
                (eta, tau)
            } else {
                let (m1, m2) = (random_mask(rng, n), random_mask(rng, n));
                (random_measure(rng, &dom, &m1), random_measure(rng, &dom, &m2))
            };
            Instance { eta, tau, map: PointMap::new(dom, cod, image).unwrap() }
        }
        Family::Bijective => {
            let cod = Arc::new(FiniteMeasureSpace::labelled("z", n));
            let mut image: Vec<usize> = (0..n).collect();
            image.shuffle(rng);
            let (m1, m2) = (random_mask(rng, n), random_mask(rng, n));
            Instance {
                eta: random_measure(rng, &dom, &m1),
                tau: random_measure(rng, &dom, &m2),
                map: PointMap::new(dom, cod, image).unwrap(),
            }
        }
        Family::NullSetBijective => {
            // the first `live` points are non-null for some measure and biject
            // onto the codomain; the rest are null for both
            let live = rng.random_range(1..=n);
            let cod = Arc::new(FiniteMeasureSpace::labelled("z", live));
            let mut image: Vec<usize> = (0..live).collect();
            image.shuffle(rng);
            image.extend((live..n).map(|_| rng.random_range(0..live)));
            let base = random_mask(rng, live);
            let mask_with = |rng: &mut ChaCha8Rng| -> Vec<bool> {
                let mut m: Vec<bool> = (0..n).map(|i| i < live && (base[i] || rng.random_bool(0.5))).collect();
                if !m.iter().any(|&b| b) {
                    m[0] = true;
                }
                m
            };
            let (m1, m2) = (mask_with(rng), mask_with(rng));
            Instance {
                eta: random_measure(rng, &dom, &m1),
                tau: random_measure(rng, &dom, &m2),
                map: PointMap::new(dom, cod, image).unwrap(),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawTally {
    pub law: Law,
    pub hypothesis_held: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub instances: u64,
    pub tallies: Vec<LawTally>,
    /// Instances where `η ⊥ τ` yet `η* ≪ τ*`.
    pub converse_failures_seen: u64,
    pub witness: LawReport,
    pub witness_passes: bool,
    pub first_counterexample: Option<Instance>,
}

impl SuiteReport {
    pub fn total_violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }
}

/// Runs `count` seeded random instances through every law. Instance `i`
/// uses its own ChaCha stream, so results do not depend on scheduling.
pub fn run_law_suite(seed: u64, count: u64) -> SuiteReport {
    let mut tallies: Vec<LawTally> =
        LAWS.iter().map(|&law| LawTally { law, hypothesis_held: 0, violations: 0 }).collect();
    let mut converse = 0;
    let mut first = None;
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let family = FAMILIES[(i % FAMILIES.len() as u64) as usize];
        let inst = random_instance(&mut rng, family);
        let rep = check_preservation_laws(&inst.eta, &inst.tau, &inst.map).expect("generated instance is consistent");
        for t in tallies.iter_mut() {
            let c = rep.check(t.law);
            t.hypothesis_held += c.hypothesis as u64;
            if c.violated() {
                t.violations += 1;
                first.get_or_insert_with(|| inst.clone());
            }
        }
        if rep.before.singular && rep.after.abs_continuous {
            converse += 1;
        }
    }
    let w = converse_witness();
    let witness = check_preservation_laws(&w.eta, &w.tau, &w.map).unwrap();
    let witness_passes = witness.before.singular && witness.after.abs_continuous && witness.violations().is_empty();
    SuiteReport {
        seed,
        instances: count,
        tallies,
        converse_failures_seen: converse,
        witness,
        witness_passes,
        first_counterexample: first,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> Arc<FiniteMeasureSpace> {
        Arc::new(FiniteMeasureSpace::labelled("p", n))
    }

    #[test]
    fn pushforward_examples() {
        let s = space(3);
        let m = FiniteMeasure::new(s.clone(), vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(pushforward(&m, &PointMap::identity(s.clone())).unwrap(), m);
        let ab = Arc::new(FiniteMeasureSpace::new(vec!["a".into(), "b".into()]).unwrap());
        let f = PointMap::new(s.clone(), ab.clone(), vec![0, 0, 1]).unwrap();
        assert_eq!(pushforward(&m, &f).unwrap().mass(), &[0.75, 0.25]);
        let c = PointMap::new(s, ab, vec![1, 1, 1]).unwrap();
        assert_eq!(pushforward(&m, &c).unwrap().mass(), &[0.0, 1.0]);
    }

    #[test]
    fn relation_examples() {
        let s2 = space(2);
        let a = FiniteMeasure::new(s2.clone(), vec![1.0, 0.0]).unwrap();
        let b = FiniteMeasure::new(s2, vec![0.0, 1.0]).unwrap();
        assert!(abs_continuous(&a, &a).unwrap());
        assert!(!abs_continuous(&a, &b).unwrap());
        assert!(mutually_singular(&a, &b).unwrap());
        let s3 = space(3);
        let half = FiniteMeasure::new(s3.clone(), vec![0.5, 0.5, 0.0]).unwrap();
        let third = FiniteMeasure::new(s3.clone(), vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0]).unwrap();
        let last = FiniteMeasure::new(s3, vec![0.0, 0.0, 1.0]).unwrap();
        assert!(abs_continuous(&half, &third).unwrap());
        assert!(mutually_singular(&half, &last).unwrap());
        assert!(!mutually_singular(&third, &third).unwrap());
        assert!(matches!(abs_continuous(&a, &half), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn witness_shows_the_converse_failing() {
        let w = converse_witness();
        let r = check_preservation_laws(&w.eta, &w.tau, &w.map).unwrap();
        assert!(r.before.singular && !r.after.singular && r.after.abs_continuous);
        assert!(r.violations().is_empty());
    }

    #[test]
    fn null_set_bijection_detection() {
        let dom = space(3);
        let cod = space(2);
        let eta = FiniteMeasure::new(dom.clone(), vec![0.5, 0.5, 0.0]).unwrap();
        let tau = FiniteMeasure::new(dom.clone(), vec![0.2, 0.8, 0.0]).unwrap();
        let f = PointMap::new(dom.clone(), cod.clone(), vec![1, 0, 0]).unwrap();
        assert!(!f.is_bijective());
        assert!(f.bijective_off_common_null_set(&[&eta, &tau]));
        let r = check_preservation_laws(&eta, &tau, &f).unwrap();
        assert!(r.null_set_bijection_equivalence.hypothesis && r.null_set_bijection_equivalence.conclusion);
        let g = PointMap::new(dom, cod, vec![0, 0, 1]).unwrap();
        assert!(!g.bijective_off_common_null_set(&[&eta, &tau]));
    }

    #[test]
    fn small_suite_is_clean_and_reproducible() {
        let a = run_law_suite(7, 500);
        assert_eq!(a.total_violations(), 0);
        assert!(a.tallies.iter().all(|t| t.hypothesis_held > 0), "{:?}", a.tallies);
        assert_eq!(a, run_law_suite(7, 500));
    }
}
