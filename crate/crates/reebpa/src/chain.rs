//! Generator-count bookkeeping over orbit censuses.
//!
//! Nothing here computes homology. Every certificate is a counting
//! statement about good generators in one free homotopy class: if all of
//! them share the odd grading the Euler characteristic already bounds the
//! rank from below, and the single-generator cases survive on uniqueness.
//! The torsion model and the cofinality arithmetic are the same style of
//! shadow: exact little computations whose conclusions feed the larger
//! argument, not simulations of it.

use crate::census::{Census, CensusError, HomotopyClassKey, OrbitRecord};
use crate::lefschetz::OrbitType;
use crate::numeric::ls_slope;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("cutoff {cutoff} exceeds the census action horizon {horizon}")]
    IncompleteCensus { cutoff: f64, horizon: f64 },
    #[error("class {class:?} mixes generator kinds across the case split")]
    MixedClass { class: HomotopyClassKey },
    #[error("operation needs {expected}, got {found}")]
    CaseMismatch { expected: String, found: String },
    #[error("class ({m},{n}) is not primitive")]
    NonPrimitive { m: i64, n: i64 },
    #[error("torsion must be at least 1")]
    TorsionZero,
    #[error("cofinal sequence rejected: {0}")]
    InvalidSequence(String),
    #[error("cutoffs must be positive, finite and strictly increasing")]
    InvalidCutoffs,
    #[error("certified count vanishes inside the fit window")]
    EmptyWindow,
    #[error(transparent)]
    Census(#[from] CensusError),
}

// ---------------------------------------------------------------------------
// Chain summaries
// ---------------------------------------------------------------------------

/// Which arm of the per-class case split a summary lands in. The tags
/// follow the usual case numbering in serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainCase {
    /// Every good generator carries the odd grading (hyperbolic of
    /// positive type, or a preserved prong set).
    #[serde(rename = "1a")]
    OddGenerators,
    /// A single good generator, negative hyperbolic.
    #[serde(rename = "1b")]
    UniqueNegativeHyperbolic,
    /// A single good generator of rotating type.
    #[serde(rename = "1c")]
    UniqueRotating,
    #[serde(rename = "empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub class: HomotopyClassKey,
    pub cutoff: f64,
    /// Good generators with grading 0.
    pub n_even: u64,
    /// Good generators with grading 1.
    pub n_odd: u64,
    /// n_even - n_odd.
    pub chi: i64,
    pub case: ChainCase,
}

/// The three kinds a generator can contribute to the case split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CaseKind {
    Odd,
    Negative,
    Rotating,
}

fn case_kind(t: OrbitType) -> CaseKind {
    match t {
        OrbitType::PositiveHyperbolic | OrbitType::NonRotatingSingular { .. } => CaseKind::Odd,
        OrbitType::NegativeHyperbolic => CaseKind::Negative,
        OrbitType::Rotating | OrbitType::RotatingSingular { .. } => CaseKind::Rotating,
    }
}

fn classify(
    class: HomotopyClassKey,
    gens: &[&OrbitRecord],
) -> Result<(u64, u64, ChainCase), ChainError> {
    if gens.is_empty() {
        return Ok((0, 0, ChainCase::Empty));
    }
    let n_even = gens.iter().filter(|r| r.grading == 0).count() as u64;
    let n_odd = gens.len() as u64 - n_even;
    let kinds: Vec<CaseKind> = gens.iter().map(|r| case_kind(r.orbit_type)).collect();
    let case = if kinds.iter().all(|k| *k == CaseKind::Odd) {
        ChainCase::OddGenerators
    } else if kinds.len() == 1 && kinds[0] == CaseKind::Negative {
        ChainCase::UniqueNegativeHyperbolic
    } else if kinds.len() == 1 && kinds[0] == CaseKind::Rotating {
        ChainCase::UniqueRotating
    } else {
        // Several generators of even grading, or a genuine mixture: the
        // class violates the trichotomy the certificates rely on.
        return Err(ChainError::MixedClass { class });
    };
    Ok((n_even, n_odd, case))
}

/// Count good generators of one class up to the action cutoff.
pub fn build_chain_summary(
    census: &Census,
    key: HomotopyClassKey,
    l: f64,
) -> Result<ChainSummary, ChainError> {
    let horizon = census.action_horizon();
    if l > horizon {
        return Err(ChainError::IncompleteCensus { cutoff: l, horizon });
    }
    let gens: Vec<&OrbitRecord> = census
        .records()
        .iter()
        .filter(|r| r.class == key && r.good && r.action <= l)
        .collect();
    let (n_even, n_odd, case) = classify(key, &gens)?;
    Ok(ChainSummary {
        class: key,
        cutoff: l,
        n_even,
        n_odd,
        chi: n_even as i64 - n_odd as i64,
        case,
    })
}

// ---------------------------------------------------------------------------
// Euler identity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerIdentityReport {
    pub pass: bool,
    /// Signed Euler characteristic of the smoothed side.
    pub chi: i64,
    /// Sum of (prongs - 1) over the singular-side orbits.
    pub prong_sum: i64,
    pub difference: i64,
}

/// Check |chi| of an odd-generator summary against the prong count of the
/// orbits it resolves: each p-pronged orbit contributes p - 1, a smooth
/// hyperbolic orbit counts as 2-pronged.
pub fn euler_identity_check(
    summary: &ChainSummary,
    orbits: &[OrbitRecord],
) -> Result<EulerIdentityReport, ChainError> {
    if summary.case != ChainCase::OddGenerators {
        return Err(ChainError::CaseMismatch {
            expected: "an odd-generator (1a) summary".into(),
            found: format!("{:?}", summary.case),
        });
    }
    let mut prong_sum = 0i64;
    for r in orbits {
        let p = match r.orbit_type {
            OrbitType::PositiveHyperbolic => 2,
            OrbitType::NonRotatingSingular { prongs } => prongs as i64,
            other => {
                return Err(ChainError::CaseMismatch {
                    expected: "positive hyperbolic or non-rotating singular orbits".into(),
                    found: format!("{other:?}"),
                })
            }
        };
        prong_sum += p - 1;
    }
    let difference = summary.chi.abs() - prong_sum;
    Ok(EulerIdentityReport {
        pass: difference == 0,
        chi: summary.chi,
        prong_sum,
        difference,
    })
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonvanishingCertificate {
    pub nonzero: bool,
    pub rank_lower_bound: u64,
}

/// Generator-count lower bound for the class. Odd-generator classes are
/// bounded by |chi|; unique-generator classes contribute rank one; empty
/// classes certify nothing.
pub fn nonvanishing_certificate(s: &ChainSummary) -> NonvanishingCertificate {
    match s.case {
        ChainCase::Empty => NonvanishingCertificate {
            nonzero: false,
            rank_lower_bound: 0,
        },
        ChainCase::UniqueNegativeHyperbolic | ChainCase::UniqueRotating => {
            NonvanishingCertificate {
                nonzero: true,
                rank_lower_bound: 1,
            }
        }
        ChainCase::OddGenerators => {
            debug_assert!(s.chi <= -1, "odd generators force chi <= -1");
            NonvanishingCertificate {
                nonzero: true,
                rank_lower_bound: s.chi.unsigned_abs(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypertightReport {
    pub pass: bool,
    pub cutoff: f64,
    /// Contractible records at or under the cutoff.
    pub offenders: Vec<OrbitRecord>,
}

/// No contractible orbit may appear with action at most L. Contractible
/// means the trivial class key: winding 0 with the zero representative.
pub fn hypertight_certificate(census: &Census, l: f64) -> Result<HypertightReport, ChainError> {
    let horizon = census.action_horizon();
    if l > horizon {
        return Err(ChainError::IncompleteCensus { cutoff: l, horizon });
    }
    let offenders: Vec<OrbitRecord> = census
        .records()
        .iter()
        .filter(|r| r.class.winding == 0 && r.class.rep == [0, 0] && r.action <= l)
        .cloned()
        .collect();
    Ok(HypertightReport {
        pass: offenders.is_empty(),
        cutoff: l,
        offenders,
    })
}

// ---------------------------------------------------------------------------
// Cofinality arithmetic
// ---------------------------------------------------------------------------

/// Scalar shadow of a sequence of forms pinched between C^{-1} and C times
/// a reference form, with action thresholds L_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CofinalSequence {
    /// Pinching scalars c_i, each in [1/C, C].
    pub scalars: Vec<f64>,
    /// Action thresholds L_i.
    pub actions: Vec<f64>,
    pub c: f64,
    pub d: f64,
}

impl CofinalSequence {
    pub fn new(
        scalars: Vec<f64>,
        actions: Vec<f64>,
        c: f64,
        d: f64,
    ) -> Result<Self, ChainError> {
        if scalars.len() != actions.len() {
            return Err(ChainError::InvalidSequence(
                "scalar and action lists differ in length".into(),
            ));
        }
        if scalars.len() < 3 {
            return Err(ChainError::InvalidSequence(
                "need at least three terms".into(),
            ));
        }
        if !(c > 1.0) || !(d > c) {
            return Err(ChainError::InvalidSequence(format!(
                "constants must satisfy D > C > 1, got C={c} D={d}"
            )));
        }
        if scalars
            .iter()
            .chain(actions.iter())
            .any(|x| !x.is_finite() || *x <= 0.0)
        {
            return Err(ChainError::InvalidSequence(
                "terms must be finite and positive".into(),
            ));
        }
        Ok(Self {
            scalars,
            actions,
            c,
            d,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CofinalityReport {
    pub pass: bool,
    /// Every scalar inside the pinching band [1/C, C].
    pub band_ok: bool,
    /// Consecutive scalars drift by at most C^2.
    pub ratio_ok: bool,
    /// Action thresholds outrun D^2.
    pub spacing_ok: bool,
    /// Accumulated domination factors stay at or above one.
    pub domination_ok: bool,
    /// Factor (D/C^2)^i * c_i/c_0 per index i >= 1.
    pub factors: Vec<f64>,
    pub first_failure: Option<usize>,
}

/// Arithmetic of the telescope argument: with D > C^2 the pinching loss
/// C^2 per step is beaten by the action gain D per step, so the
/// accumulated factor (D/C^2)^i c_i/c_0 must never dip below one.
pub fn cofinality_check(seq: &CofinalSequence) -> CofinalityReport {
    let n = seq.scalars.len();
    let mut band_ok = true;
    let mut ratio_ok = true;
    let mut spacing_ok = true;
    let mut domination_ok = true;
    let mut first_failure = None;
    let fail_at = |flag: &mut bool, i: usize, first: &mut Option<usize>| {
        *flag = false;
        if first.is_none() {
            *first = Some(i);
        }
    };

    for (i, &s) in seq.scalars.iter().enumerate() {
        if !(s >= 1.0 / seq.c && s <= seq.c) {
            fail_at(&mut band_ok, i, &mut first_failure);
        }
    }
    for i in 0..n - 1 {
        if !(seq.scalars[i + 1] <= seq.c * seq.c * seq.scalars[i]) {
            fail_at(&mut ratio_ok, i + 1, &mut first_failure);
        }
        if !(seq.actions[i + 1] > seq.d * seq.d * seq.actions[i]) {
            fail_at(&mut spacing_ok, i + 1, &mut first_failure);
        }
    }
    let step = seq.d / (seq.c * seq.c);
    let mut factors = Vec::with_capacity(n - 1);
    for i in 1..n {
        let f = step.powi(i as i32) * seq.scalars[i] / seq.scalars[0];
        factors.push(f);
        if !(f >= 1.0) {
            fail_at(&mut domination_ok, i, &mut first_failure);
        }
    }

    CofinalityReport {
        pass: band_ok && ratio_ok && spacing_ok && domination_ok,
        band_ok,
        ratio_ok,
        spacing_ok,
        domination_ok,
        factors,
        first_failure,
    }
}

// ---------------------------------------------------------------------------
// Torsion domains
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionDomainModel {
    pub k: u32,
    pub class: [i64; 2],
    /// Times in [0, k) where the layered direction matches the class.
    pub tori: Vec<f64>,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Times t in [0, k) where (cos 2 pi t, sin 2 pi t) points along the
/// primitive class (m, n): one per turn of the layered direction.
pub fn torsion_tori(k: u32, class: [i64; 2]) -> Result<TorsionDomainModel, ChainError> {
    if k == 0 {
        return Err(ChainError::TorsionZero);
    }
    let [m, n] = class;
    if gcd(m, n) != 1 {
        return Err(ChainError::NonPrimitive { m, n });
    }
    let t0 = ((n as f64).atan2(m as f64) / std::f64::consts::TAU).rem_euclid(1.0);
    let tori = (0..k).map(|j| t0 + j as f64).collect();
    Ok(TorsionDomainModel { k, class, tori })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionGenerator {
    pub label: String,
    /// Which torus the orbit family sits on.
    pub torus: u32,
    pub t_star: f64,
    /// Adjacent parities within one torus: the cap and the cup orbit.
    pub grading: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionRankBound {
    pub generators: Vec<TorsionGenerator>,
    pub bound: u64,
    /// Common action of every generator: the class length, exactly.
    pub action: f64,
    /// First-coordinate pairing of the class; the bound is stated under
    /// theta <= 0.
    pub theta: i64,
    pub theta_nonpositive: bool,
}

/// Two generators per torus with the class length as action. The rank
/// bound 2k is pure counting once each torus survives perturbation as a
/// cap/cup orbit pair.
pub fn torsion_rank_bound(k: u32, class: [i64; 2]) -> Result<TorsionRankBound, ChainError> {
    let model = torsion_tori(k, class)?;
    let [m, n] = class;
    let action = ((m * m + n * n) as f64).sqrt();
    let mut generators = Vec::with_capacity(2 * model.tori.len());
    for (j, &t) in model.tori.iter().enumerate() {
        for (tag, grading) in [("cap", 0u8), ("cup", 1u8)] {
            generators.push(TorsionGenerator {
                label: format!("{tag}_{j}"),
                torus: j as u32,
                t_star: t,
                grading,
            });
        }
    }
    Ok(TorsionRankBound {
        generators,
        bound: 2 * k as u64,
        action,
        theta: m,
        theta_nonpositive: m <= 0,
    })
}

// ---------------------------------------------------------------------------
// Growth of certified classes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChGrowthRow {
    pub l: f64,
    /// Classes with action at most l.
    pub classes: u64,
    /// Classes whose primitive root certifies nonvanishing.
    pub certified: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChGrowthReport {
    pub rows: Vec<ChGrowthRow>,
    /// Slope of log(l * certified(l)) over the upper half window.
    pub rate: f64,
    /// Slope of log certified(l) over the same window.
    pub raw_slope: f64,
    pub window: (f64, f64),
}

/// Certified-class growth. A class counts at cutoff l when its action is
/// at most l and the summary of its primitive root class certifies a
/// nonzero rank. The rate fit mirrors the census growth fit.
pub fn ch_growth(census: &Census, l_values: &[f64]) -> Result<ChGrowthReport, ChainError> {
    if l_values.is_empty()
        || l_values
            .iter()
            .any(|l| !l.is_finite() || *l <= 0.0)
        || l_values.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(ChainError::InvalidCutoffs);
    }
    let horizon = census.action_horizon();
    let top = *l_values.last().expect("nonempty");
    if top > horizon {
        return Err(ChainError::IncompleteCensus {
            cutoff: top,
            horizon,
        });
    }

    // One pass over the classes: action of first appearance, root key,
    // and whether the root class certifies. A root's own generators all
    // share its winding, so its certificate does not depend on l once the
    // iterate class is inside the cutoff.
    let classes = census.by_class();
    let mut cert_by_key: BTreeMap<HomotopyClassKey, bool> = BTreeMap::new();
    for (key, recs) in &classes {
        let gens: Vec<&OrbitRecord> = recs.iter().filter(|r| r.good).copied().collect();
        let (_, _, case) = classify(*key, &gens)?;
        cert_by_key.insert(*key, case != ChainCase::Empty);
    }
    let mut per_class: Vec<(f64, bool)> = Vec::with_capacity(classes.len());
    for (key, recs) in &classes {
        if key.winding == 0 {
            continue;
        }
        let action = recs
            .iter()
            .map(|r| r.action)
            .fold(f64::INFINITY, f64::min);
        let root = recs[0].root_class;
        let certified = *cert_by_key.get(&root).unwrap_or(&false);
        per_class.push((action, certified));
    }

    let mut rows = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let mut total = 0u64;
        let mut cert = 0u64;
        for &(action, ok) in &per_class {
            if action <= l {
                total += 1;
                if ok {
                    cert += 1;
                }
            }
        }
        rows.push(ChGrowthRow {
            l,
            classes: total,
            certified: cert,
        });
    }

    let lo = (rows.len() / 2).max(1) - 1;
    let window = &rows[lo..];
    if window.iter().any(|r| r.certified == 0) || window.len() < 2 {
        return Err(ChainError::EmptyWindow);
    }
    let corrected: Vec<(f64, f64)> = window
        .iter()
        .map(|r| (r.l, (r.l * r.certified as f64).ln()))
        .collect();
    let raw: Vec<(f64, f64)> = window
        .iter()
        .map(|r| (r.l, (r.certified as f64).ln()))
        .collect();
    let rate = ls_slope(&corrected);
    let raw_slope = ls_slope(&raw);
    let span = (window[0].l, window[window.len() - 1].l);
    Ok(ChGrowthReport {
        rows,
        rate,
        raw_slope,
        window: span,
    })
}
