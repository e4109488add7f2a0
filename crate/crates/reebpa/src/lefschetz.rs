//! Fixed point indices and index-sum invariants.
//!
//! The local index of an isolated fixed point is the winding number of the
//! displacement field around it, which survives any perturbation supported
//! away from the boundary of a region. That robustness is the point of the
//! two checks here: `rel_lefschetz_check` compares index sums of two maps
//! agreeing outside a disk, and `tracking_certificate` verifies that a
//! smoothed flow tracks its reference flow orbit by orbit inside tubes.

use crate::census::{Census, HomotopyClassKey};
use crate::flow::{
    find_periodic_orbits, integrate, return_map, FlowError, FlowModel, Section,
};
use crate::models::{wrap_unit, StandardPaMap, TorusAutomorphism};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LefschetzError {
    #[error("a singular orbit needs at least {min} prongs, got {prongs}")]
    InvalidProngs { prongs: u32, min: u32 },
    #[error("rotation amount must satisfy 1 <= k < prongs, got k={rotation} with {prongs} prongs")]
    InvalidRotation { prongs: u32, rotation: u32 },
    #[error("displacement vanishes on the circle of radius {radius}; no winding is defined")]
    DegenerateCircle { radius: f64 },
    #[error("winding count did not stabilize below {samples} samples")]
    WindingUnstable { samples: usize },
    #[error("maps disagree on the comparison rings: gap {gap} exceeds {tolerance}")]
    BoundaryMismatch { gap: f64, tolerance: f64 },
    #[error("census horizon {horizon} cannot answer a question at cutoff {cutoff}")]
    IncompleteCensus { cutoff: f64, horizon: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

// ---------------------------------------------------------------------------
// Orbit types and the index table
// ---------------------------------------------------------------------------

/// Local type of a closed orbit, as seen by its return map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitType {
    PositiveHyperbolic,
    NegativeHyperbolic,
    /// Elliptic or parabolic return with nonzero rotation, smooth point.
    Rotating,
    /// Prong singularity whose return map rotates the prong set.
    RotatingSingular { prongs: u32, rotation: u32 },
    /// Prong singularity with every prong direction preserved.
    NonRotatingSingular { prongs: u32 },
}

impl OrbitType {
    pub fn rotating_singular(prongs: u32, rotation: u32) -> Result<Self, LefschetzError> {
        if prongs < 3 {
            return Err(LefschetzError::InvalidProngs { prongs, min: 3 });
        }
        if rotation == 0 || rotation >= prongs {
            return Err(LefschetzError::InvalidRotation { prongs, rotation });
        }
        Ok(OrbitType::RotatingSingular { prongs, rotation })
    }

    /// Two prongs are allowed here: a fixed 2-prong point is an ordinary
    /// positive hyperbolic point and indexes identically.
    pub fn nonrotating_singular(prongs: u32) -> Result<Self, LefschetzError> {
        if prongs < 2 {
            return Err(LefschetzError::InvalidProngs { prongs, min: 2 });
        }
        Ok(OrbitType::NonRotatingSingular { prongs })
    }

    pub fn index(self) -> i32 {
        index_table(self)
    }

    /// Chain grading bit: 0 for index +1 orbits, 1 for the rest.
    pub fn grading(self) -> u8 {
        if self.index() > 0 {
            0
        } else {
            1
        }
    }

    pub fn is_singular(self) -> bool {
        matches!(
            self,
            OrbitType::RotatingSingular { .. } | OrbitType::NonRotatingSingular { .. }
        )
    }
}

/// Fixed point index of the return map by orbit type. A preserved prong
/// set pins the index at 1 - p; everything that rotates contributes +1;
/// hyperbolic points carry the sign opposite to their expansion.
pub fn index_table(t: OrbitType) -> i32 {
    match t {
        OrbitType::PositiveHyperbolic => -1,
        OrbitType::NegativeHyperbolic => 1,
        OrbitType::Rotating => 1,
        OrbitType::RotatingSingular { .. } => 1,
        OrbitType::NonRotatingSingular { prongs } => 1 - prongs as i32,
    }
}

// ---------------------------------------------------------------------------
// Plane maps
// ---------------------------------------------------------------------------

/// A self-map of a surface chart. `displacement` subtracts the identity in
/// the chart, wrapping where the chart is periodic.
pub trait Map2 {
    fn apply(&self, p: [f64; 2]) -> [f64; 2];

    fn displacement(&self, p: [f64; 2]) -> [f64; 2] {
        let q = self.apply(p);
        [q[0] - p[0], q[1] - p[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap(pub [[f64; 2]; 2]);

impl Map2 for LinearMap {
    fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * p[0] + self.0[0][1] * p[1],
            self.0[1][0] * p[0] + self.0[1][1] * p[1],
        ]
    }
}

impl Map2 for StandardPaMap {
    fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        StandardPaMap::apply(self, p)
    }
}

impl Map2 for TorusAutomorphism {
    fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        TorusAutomorphism::apply(self, p)
    }

    fn displacement(&self, p: [f64; 2]) -> [f64; 2] {
        let q = TorusAutomorphism::apply(self, p);
        let mut d = [q[0] - wrap_unit(p[0]), q[1] - wrap_unit(p[1])];
        for c in &mut d {
            *c -= c.round();
        }
        d
    }
}

pub struct FnMap<F: Fn([f64; 2]) -> [f64; 2]>(pub F);

impl<F: Fn([f64; 2]) -> [f64; 2]> Map2 for FnMap<F> {
    fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        (self.0)(p)
    }
}

// ---------------------------------------------------------------------------
// Winding numbers
// ---------------------------------------------------------------------------

const WINDING_START: usize = 64;
const WINDING_CAP: usize = 8192;

/// Winding number of the displacement field around `center` on the circle
/// of the given radius. The sample count doubles until two consecutive
/// counts agree; a vanishing displacement on the circle shrinks the radius
/// up to six times before giving up.
pub fn winding_index<M: Map2>(
    map: &M,
    center: [f64; 2],
    radius: f64,
) -> Result<i32, LefschetzError> {
    let mut eps = radius;
    let mut last = LefschetzError::DegenerateCircle { radius };
    for _ in 0..6 {
        match winding_once(map, center, eps) {
            Ok(idx) => return Ok(idx),
            Err(e @ LefschetzError::DegenerateCircle { .. }) => {
                last = e;
                eps *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn winding_once<M: Map2>(map: &M, center: [f64; 2], eps: f64) -> Result<i32, LefschetzError> {
    let scale = 1e-12 * (1.0 + center[0].abs() + center[1].abs() + eps);
    let mut prev: Option<i32> = None;
    let mut n = WINDING_START;
    while n <= WINDING_CAP {
        let mut angles = Vec::with_capacity(n);
        for i in 0..n {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            let p = [center[0] + eps * a.cos(), center[1] + eps * a.sin()];
            let v = map.displacement(p);
            if v[0].hypot(v[1]) < scale {
                return Err(LefschetzError::DegenerateCircle { radius: eps });
            }
            angles.push(v[1].atan2(v[0]));
        }
        let mut total = 0.0;
        for i in 0..n {
            let mut d = angles[(i + 1) % n] - angles[i];
            while d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
            }
            while d <= -std::f64::consts::PI {
                d += std::f64::consts::TAU;
            }
            total += d;
        }
        let idx = (total / std::f64::consts::TAU).round() as i32;
        if prev == Some(idx) {
            return Ok(idx);
        }
        prev = Some(idx);
        n *= 2;
    }
    Err(LefschetzError::WindingUnstable {
        samples: WINDING_CAP,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignResult {
    Sign(i32),
    Degenerate { det: f64 },
}

/// Sign of det(Df - I) at a fixed point, by central differences of the
/// displacement. Near-zero determinants are reported, not guessed.
pub fn nondegenerate_sign<M: Map2>(map: &M, p: [f64; 2]) -> SignResult {
    let h = 1e-5 * (1.0 + p[0].abs() + p[1].abs());
    let mut jac = [[0.0f64; 2]; 2];
    for col in 0..2 {
        let mut hi = p;
        let mut lo = p;
        hi[col] += h;
        lo[col] -= h;
        let fh = map.displacement(hi);
        let fl = map.displacement(lo);
        jac[0][col] = (fh[0] - fl[0]) / (2.0 * h);
        jac[1][col] = (fh[1] - fl[1]) / (2.0 * h);
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det.abs() < 1e-12 {
        SignResult::Degenerate { det }
    } else {
        SignResult::Sign(if det > 0.0 { 1 } else { -1 })
    }
}

/// Index of an isolated fixed point: the linearization sign when it is
/// trustworthy, the circle winding otherwise.
pub fn orbit_index<M: Map2>(
    map: &M,
    fixed_point: [f64; 2],
    radius: f64,
) -> Result<i32, LefschetzError> {
    match nondegenerate_sign(map, fixed_point) {
        SignResult::Sign(s) => Ok(s),
        SignResult::Degenerate { .. } => winding_index(map, fixed_point, radius),
    }
}

// ---------------------------------------------------------------------------
// Relative index sums
// ---------------------------------------------------------------------------

const BOUNDARY_TOL: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointIndex {
    pub point: [f64; 2],
    pub index: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelLefschetzReport {
    pub pass: bool,
    pub sum_reference: i32,
    pub sum_perturbed: i32,
    pub fixed_reference: Vec<FixedPointIndex>,
    pub fixed_perturbed: Vec<FixedPointIndex>,
    /// Largest disagreement of the two maps on the comparison rings.
    pub boundary_gap: f64,
}

fn newton_fixed_point<M: Map2>(map: &M, seed: [f64; 2]) -> Option<[f64; 2]> {
    let mut p = seed;
    for _ in 0..60 {
        let f = map.displacement(p);
        let fnorm = f[0].abs().max(f[1].abs());
        if fnorm < NEWTON_TOL {
            return Some(p);
        }
        let h = 1e-7 * (1.0 + p[0].abs() + p[1].abs());
        let mut jac = [[0.0f64; 2]; 2];
        for col in 0..2 {
            let mut ph = p;
            ph[col] += h;
            let fh = map.displacement(ph);
            jac[0][col] = (fh[0] - f[0]) / h;
            jac[1][col] = (fh[1] - f[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        let dx = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dy = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = [p[0] - lambda * dx, p[1] - lambda * dy];
            let fc = map.displacement(cand);
            if fc[0].abs().max(fc[1].abs()) < fnorm {
                p = cand;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    None
}

fn collect_fixed_points<M: Map2>(map: &M, region: f64) -> Vec<[f64; 2]> {
    let mut found: Vec<[f64; 2]> = Vec::new();
    let n = 13;
    for i in 0..n {
        for j in 0..n {
            let seed = [
                region * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0),
                region * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0),
            ];
            if let Some(p) = newton_fixed_point(map, seed) {
                if p[0].abs() >= region || p[1].abs() >= region {
                    continue;
                }
                if found
                    .iter()
                    .all(|q| (q[0] - p[0]).abs().max((q[1] - p[1]).abs()) > 1e-7)
                {
                    found.push(p);
                }
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).expect("fixed points are finite"));
    found
}

fn index_all<M: Map2>(
    map: &M,
    points: &[[f64; 2]],
    region: f64,
) -> Result<Vec<FixedPointIndex>, LefschetzError> {
    let mut out = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let mut radius = 0.05 * region;
        for (j, &q) in points.iter().enumerate() {
            if i != j {
                let d = (p[0] - q[0]).hypot(p[1] - q[1]);
                radius = radius.min(0.4 * d);
            }
        }
        out.push(FixedPointIndex {
            point: p,
            index: winding_index(map, p, radius)?,
        });
    }
    Ok(out)
}

/// Compare fixed point index sums of two maps that agree outside the
/// square of half-width `region`. Agreement is verified on three sample
/// rings before any counting happens.
pub fn rel_lefschetz_check<A: Map2, B: Map2>(
    reference: &A,
    perturbed: &B,
    region: f64,
) -> Result<RelLefschetzReport, LefschetzError> {
    let mut gap = 0.0f64;
    for ring in [1.0, 1.25, 1.5] {
        let rad = region * ring;
        for i in 0..64 {
            let a = std::f64::consts::TAU * i as f64 / 64.0;
            let p = [rad * a.cos(), rad * a.sin()];
            let qa = reference.apply(p);
            let qb = perturbed.apply(p);
            gap = gap.max((qa[0] - qb[0]).abs().max((qa[1] - qb[1]).abs()));
        }
    }
    if gap > BOUNDARY_TOL {
        return Err(LefschetzError::BoundaryMismatch {
            gap,
            tolerance: BOUNDARY_TOL,
        });
    }

    let pts_a = collect_fixed_points(reference, region);
    let pts_b = collect_fixed_points(perturbed, region);
    let fixed_reference = index_all(reference, &pts_a, region)?;
    let fixed_perturbed = index_all(perturbed, &pts_b, region)?;
    let sum_reference: i32 = fixed_reference.iter().map(|f| f.index).sum();
    let sum_perturbed: i32 = fixed_perturbed.iter().map(|f| f.index).sum();
    Ok(RelLefschetzReport {
        pass: sum_reference == sum_perturbed,
        sum_reference,
        sum_perturbed,
        fixed_reference,
        fixed_perturbed,
        boundary_gap: gap,
    })
}

// ---------------------------------------------------------------------------
// Flow tracking
// ---------------------------------------------------------------------------

const IDENTITY_TOL: f64 = 1e-9;
const TUBE_SAMPLES: usize = 1000;
const FIELD_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingOptions {
    /// Radius of the tube around the singular core axis.
    pub core_radius: f64,
    /// Radius of the tubes around tracked regular orbits.
    pub tube_radius: f64,
    /// Upper bound the measured return times must respect.
    pub l_bound: f64,
    /// Allowed velocity disagreement outside all tubes.
    pub field_tol: f64,
    /// Integrator tolerance.
    pub tol: f64,
}

impl TrackingOptions {
    pub fn standard(l_bound: f64) -> Self {
        Self {
            core_radius: 0.2,
            tube_radius: 0.05,
            l_bound,
            field_tol: 1e-9,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    pub anchor: [f64; 2],
    /// Exactly one orbit of the smoothed flow inside the tube.
    pub unique_orbit: bool,
    /// The return map is indistinguishable from the identity near the
    /// anchor, so uniqueness is vacuous and flagged rather than claimed.
    pub identity_degenerate: bool,
    pub orbit_point: [f64; 2],
    pub return_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingCertificate {
    pub pass: bool,
    pub anchors: Vec<AnchorReport>,
    pub tubes_disjoint: bool,
    pub field_agreement: bool,
    pub max_field_gap: f64,
    pub max_return_time: f64,
    pub l_bound: f64,
}

fn embed(t: f64, p: [f64; 2]) -> [f64; 4] {
    let a = std::f64::consts::TAU * t;
    [a.cos(), a.sin(), p[0], p[1]]
}

fn embed_dist(a: [f64; 4], b: [f64; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Verify that `smoothed` tracks `reference`: each anchor tube holds one
/// orbit (or an identity-degenerate family, flagged), tubes are mutually
/// disjoint and clear of the core, the two velocity fields agree outside
/// all tubes, and every measured return time stays under the bound.
pub fn tracking_certificate(
    reference: &FlowModel,
    smoothed: &FlowModel,
    section: &Section,
    anchors: &[[f64; 2]],
    opts: &TrackingOptions,
) -> Result<TrackingCertificate, LefschetzError> {
    let mut reports = Vec::with_capacity(anchors.len());
    let mut tubes: Vec<Vec<[f64; 4]>> = Vec::with_capacity(anchors.len());
    let mut max_return_time = 0.0f64;
    let mut anchors_ok = true;
    let mut times_ok = true;

    for &anchor in anchors {
        // Probe the return map near the anchor for identity degeneracy.
        let mut probe_gap = 0.0f64;
        let mut probe_err = None;
        for i in 0..8 {
            let a = std::f64::consts::TAU * i as f64 / 8.0;
            let q = [
                anchor[0] + 0.5 * opts.tube_radius * a.cos(),
                anchor[1] + 0.5 * opts.tube_radius * a.sin(),
            ];
            match return_map(smoothed, section, q, opts.tol) {
                Ok(r) => {
                    probe_gap = probe_gap
                        .max((r.point[0] - q[0]).abs().max((r.point[1] - q[1]).abs()));
                }
                Err(e) => {
                    probe_err = Some(e);
                    break;
                }
            }
        }
        if let Some(FlowError::NoReturn { .. }) = probe_err {
            // No return at all: every sub-check at this anchor fails.
            reports.push(AnchorReport {
                anchor,
                unique_orbit: false,
                identity_degenerate: false,
                orbit_point: anchor,
                return_time: f64::INFINITY,
            });
            tubes.push(Vec::new());
            anchors_ok = false;
            times_ok = false;
            continue;
        }
        if let Some(e) = probe_err {
            return Err(e.into());
        }

        let (orbit_point, unique, identity) = if probe_gap < IDENTITY_TOL {
            (anchor, true, true)
        } else {
            // Newton from a ring of seeds; all survivors must coincide.
            let mut seeds = vec![anchor];
            for i in 0..8 {
                let a = std::f64::consts::TAU * i as f64 / 8.0;
                seeds.push([
                    anchor[0] + 0.5 * opts.tube_radius * a.cos(),
                    anchor[1] + 0.5 * opts.tube_radius * a.sin(),
                ]);
            }
            let search = find_periodic_orbits(smoothed, section, 1, &seeds, opts.tol)?;
            let inside: Vec<_> = search
                .orbits
                .iter()
                .filter(|o| {
                    (o.point[0] - anchor[0]).hypot(o.point[1] - anchor[1]) < opts.tube_radius
                })
                .collect();
            match inside.as_slice() {
                [only] => (only.point, true, false),
                _ => (anchor, false, false),
            }
        };
        if !unique {
            anchors_ok = false;
        }

        let ret = return_map(smoothed, section, orbit_point, opts.tol)?;
        max_return_time = max_return_time.max(ret.time);
        if !(ret.time <= opts.l_bound) {
            times_ok = false;
        }

        // Sample the orbit's tube centerline in the circle embedding.
        let traj = integrate(smoothed, section.embed(orbit_point), ret.time, opts.tol)?;
        let mut cloud = Vec::with_capacity(TUBE_SAMPLES);
        for i in 0..TUBE_SAMPLES {
            let s = ret.time * i as f64 / TUBE_SAMPLES as f64;
            let x = traj.sample(s);
            cloud.push(embed(x[0], [x[1], x[2]]));
        }
        reports.push(AnchorReport {
            anchor,
            unique_orbit: unique,
            identity_degenerate: identity,
            orbit_point,
            return_time: ret.time,
        });
        tubes.push(cloud);
    }

    // Tube disjointness: pairwise clouds and the core axis.
    let mut tubes_disjoint = true;
    for (i, a) in tubes.iter().enumerate() {
        for p in a {
            // Chart radius of the orbit point is its distance to the core.
            if p[2].abs() < opts.core_radius + opts.tube_radius {
                tubes_disjoint = false;
            }
        }
        for b in tubes.iter().skip(i + 1) {
            let mut min_d = f64::INFINITY;
            for pa in a {
                for pb in b {
                    min_d = min_d.min(embed_dist(*pa, *pb));
                }
            }
            if min_d <= 2.0 * opts.tube_radius {
                tubes_disjoint = false;
            }
        }
    }

    // Velocity agreement outside all tubes, low-discrepancy samples.
    let mut max_field_gap = 0.0f64;
    let r_lo = opts.core_radius + opts.tube_radius;
    let r_hi = section.radius;
    for i in 0..FIELD_SAMPLES {
        let x = i as f64;
        let t = (x * 0.754877666246693).fract();
        let r = r_lo + (x * 0.569840290998053).fract() * (r_hi - r_lo);
        let th = (x * 0.362121726087805).fract() * std::f64::consts::TAU;
        let state = [t, r, th];
        let e = embed(t, [r, th]);
        let near_tube = tubes.iter().flatten().any(|p| {
            embed_dist(*p, e) < 2.0 * opts.tube_radius
        });
        if near_tube {
            continue;
        }
        let va = reference.velocity(state)?;
        let vb = smoothed.velocity(state)?;
        for k in 0..3 {
            max_field_gap = max_field_gap.max((va[k] - vb[k]).abs());
        }
    }
    let field_agreement = max_field_gap <= opts.field_tol;

    Ok(TrackingCertificate {
        pass: anchors_ok && tubes_disjoint && field_agreement && times_ok,
        anchors: reports,
        tubes_disjoint,
        field_agreement,
        max_field_gap,
        max_return_time,
        l_bound: opts.l_bound,
    })
}

// ---------------------------------------------------------------------------
// Orbit census comparison
// ---------------------------------------------------------------------------

/// A census of closed orbits of a flow, complete up to the stated action
/// horizon, carrying only what index bookkeeping needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOrbitCensus {
    pub horizon: f64,
    pub records: Vec<FlowOrbitRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOrbitRecord {
    pub class: HomotopyClassKey,
    pub orbit_type: OrbitType,
    pub period: f64,
}

impl From<&Census> for FlowOrbitCensus {
    fn from(census: &Census) -> Self {
        FlowOrbitCensus {
            horizon: census.winding_bound() as f64,
            records: census
                .records()
                .iter()
                .map(|r| FlowOrbitRecord {
                    class: r.class,
                    orbit_type: r.orbit_type,
                    period: r.action,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingSumReport {
    pub pass: bool,
    pub class: HomotopyClassKey,
    pub cutoff: f64,
    pub sum_reference: i64,
    pub sum_tracked: i64,
}

/// Compare per-class index sums of two orbit censuses below a period
/// cutoff. Both censuses must be complete that far out.
pub fn tracking_sum_check(
    reference: &FlowOrbitCensus,
    tracked: &FlowOrbitCensus,
    class: HomotopyClassKey,
    cutoff: f64,
) -> Result<TrackingSumReport, LefschetzError> {
    for c in [reference, tracked] {
        if cutoff > c.horizon {
            return Err(LefschetzError::IncompleteCensus {
                cutoff,
                horizon: c.horizon,
            });
        }
    }
    let sum = |c: &FlowOrbitCensus| -> i64 {
        c.records
            .iter()
            .filter(|r| r.class == class && r.period <= cutoff)
            .map(|r| r.orbit_type.index() as i64)
            .sum()
    };
    let sum_reference = sum(reference);
    let sum_tracked = sum(tracked);
    Ok(TrackingSumReport {
        pass: sum_reference == sum_tracked,
        class,
        cutoff,
        sum_reference,
        sum_tracked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{fixtures, smooth_step, SmoothingChart, SmoothingFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn a2() -> LinearMap {
        LinearMap([[2.0, 1.0], [1.0, 1.0]])
    }

    #[test]
    fn index_table_values() {
        assert_eq!(index_table(OrbitType::PositiveHyperbolic), -1);
        assert_eq!(index_table(OrbitType::NegativeHyperbolic), 1);
        assert_eq!(index_table(OrbitType::Rotating), 1);
        let rs = OrbitType::rotating_singular(5, 2).unwrap();
        assert_eq!(index_table(rs), 1);
        for p in 2..=6 {
            let ns = OrbitType::nonrotating_singular(p).unwrap();
            assert_eq!(index_table(ns), 1 - p as i32);
        }
        // A fixed 2-prong point is an ordinary hyperbolic point.
        assert_eq!(
            index_table(OrbitType::nonrotating_singular(2).unwrap()),
            index_table(OrbitType::PositiveHyperbolic)
        );
        assert!(OrbitType::rotating_singular(2, 1).is_err());
        assert!(OrbitType::rotating_singular(4, 0).is_err());
        assert!(OrbitType::rotating_singular(4, 4).is_err());
        assert!(OrbitType::nonrotating_singular(1).is_err());
    }

    #[test]
    fn grading_tracks_index_sign() {
        assert_eq!(OrbitType::PositiveHyperbolic.grading(), 1);
        assert_eq!(OrbitType::NegativeHyperbolic.grading(), 0);
        assert_eq!(OrbitType::Rotating.grading(), 0);
        assert_eq!(OrbitType::nonrotating_singular(4).unwrap().grading(), 1);
    }

    #[test]
    fn winding_anchors() {
        assert_eq!(winding_index(&a2(), [0.0, 0.0], 0.5).unwrap(), -1);
        let neg = LinearMap([[-2.0, -1.0], [-1.0, -1.0]]);
        assert_eq!(winding_index(&neg, [0.0, 0.0], 0.5).unwrap(), 1);
        let rot = LinearMap([[0.0, -1.0], [1.0, 0.0]]);
        assert_eq!(winding_index(&rot, [0.0, 0.0], 0.5).unwrap(), 1);
        let pa = StandardPaMap::new(4, 0, 2.0).unwrap();
        assert_eq!(winding_index(&pa, [0.0, 0.0], 0.5).unwrap(), -3);
    }

    #[test]
    fn winding_is_radius_invariant() {
        for radius in [0.5, 0.25, 0.1] {
            assert_eq!(winding_index(&a2(), [0.0, 0.0], radius).unwrap(), -1);
            let pa = StandardPaMap::new(5, 0, 1.8).unwrap();
            assert_eq!(winding_index(&pa, [0.0, 0.0], radius).unwrap(), -4);
        }
    }

    #[test]
    fn winding_matches_prong_index_table() {
        for prongs in [3u32, 4, 5] {
            for lambda in [1.5, 2.0] {
                let pa = StandardPaMap::new(prongs, 0, lambda).unwrap();
                let w = winding_index(&pa, [0.0, 0.0], 0.4).unwrap();
                let t = OrbitType::nonrotating_singular(prongs).unwrap();
                assert_eq!(w, index_table(t), "prongs={prongs} lambda={lambda}");
            }
        }
        for (prongs, rotation) in [(3u32, 1u32), (4, 1), (4, 3), (5, 2)] {
            let pa = StandardPaMap::new(prongs, rotation, 2.0).unwrap();
            let w = winding_index(&pa, [0.0, 0.0], 0.4).unwrap();
            let t = OrbitType::rotating_singular(prongs, rotation).unwrap();
            assert_eq!(w, index_table(t), "prongs={prongs} rotation={rotation}");
        }
    }

    #[test]
    fn winding_equals_linearization_sign_at_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240817);
        let mut tested = 0;
        while tested < 100 {
            let m: [[f64; 2]; 2] = [
                [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
                [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
            ];
            let det = (m[0][0] - 1.0) * (m[1][1] - 1.0) - m[0][1] * m[1][0];
            if det.abs() < 0.05 {
                continue;
            }
            let map = LinearMap(m);
            let w = winding_index(&map, [0.0, 0.0], 1.0).unwrap();
            match nondegenerate_sign(&map, [0.0, 0.0]) {
                SignResult::Sign(s) => assert_eq!(w, s, "matrix {m:?}"),
                SignResult::Degenerate { .. } => panic!("det was checked nonzero"),
            }
            tested += 1;
        }
    }

    #[test]
    fn iterate_of_negative_hyperbolic_is_positive() {
        let neg = LinearMap([[-2.0, -1.0], [-1.0, -1.0]]);
        assert_eq!(winding_index(&neg, [0.0, 0.0], 0.5).unwrap(), 1);
        let sq = LinearMap([[5.0, 3.0], [3.0, 2.0]]);
        assert_eq!(winding_index(&sq, [0.0, 0.0], 0.5).unwrap(), -1);
    }

    #[test]
    fn degenerate_circle_reported_for_identity() {
        let id = LinearMap([[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            winding_index(&id, [0.0, 0.0], 0.5),
            Err(LefschetzError::DegenerateCircle { .. })
        ));
        assert!(matches!(
            nondegenerate_sign(&id, [0.3, 0.4]),
            SignResult::Degenerate { .. }
        ));
    }

    fn bump(s: f64, full: f64, zero: f64) -> f64 {
        1.0 - smooth_step((s - full) / (zero - full))
    }

    #[test]
    fn perturbed_prong_splits_into_simple_points() {
        let pa = StandardPaMap::new(4, 0, 2.0).unwrap();
        let pa2 = pa.clone();
        let pert = FnMap(move |p: [f64; 2]| {
            let q = pa2.apply(p);
            let b = bump(p[0].hypot(p[1]), 0.3, 0.7);
            [q[0] + 0.04 * b, q[1]]
        });
        let report = rel_lefschetz_check(&pa, &pert, 0.8).unwrap();
        assert!(report.pass, "sums {} vs {}", report.sum_reference, report.sum_perturbed);
        assert_eq!(report.sum_reference, -3);
        assert_eq!(report.fixed_reference.len(), 1);
        assert_eq!(report.fixed_reference[0].index, -3);
        assert!(
            report.fixed_perturbed.len() > 1,
            "perturbation should split the prong point"
        );
        for f in &report.fixed_perturbed {
            assert!(f.index.abs() <= 3);
        }
    }

    #[test]
    fn cancelling_pair_preserves_the_sum() {
        let lin = a2();
        let pert = FnMap(move |p: [f64; 2]| {
            let q = [2.0 * p[0] + p[1], p[0] + p[1]];
            let b = bump((p[0] - 1.0).hypot(p[1]), 0.25, 0.5);
            [q[0] - b, q[1] - b]
        });
        let report = rel_lefschetz_check(&lin, &pert, 1.6).unwrap();
        assert!(report.pass);
        assert_eq!(report.sum_reference, -1);
        assert_eq!(report.sum_perturbed, -1);
        assert_eq!(report.fixed_reference.len(), 1);
        assert_eq!(report.fixed_perturbed.len(), 3, "pair creation adds two");
        // All fixed points of the perturbed map sit on the x-axis.
        for f in &report.fixed_perturbed {
            assert!(f.point[1].abs() < 1e-8, "point {:?}", f.point);
        }
        let plus: Vec<_> = report.fixed_perturbed.iter().filter(|f| f.index == 1).collect();
        assert_eq!(plus.len(), 1, "exactly one index +1 point in the pair");
    }

    #[test]
    fn disagreeing_maps_are_rejected() {
        let lin = a2();
        let shifted = FnMap(|p: [f64; 2]| [2.0 * p[0] + p[1] + 0.1, p[0] + p[1]]);
        assert!(matches!(
            rel_lefschetz_check(&lin, &shifted, 1.0),
            Err(LefschetzError::BoundaryMismatch { .. })
        ));
    }

    fn reeb(form: crate::contact::ChartContactForm, smooth: bool) -> FlowModel {
        FlowModel::Reeb {
            form,
            chart: if smooth {
                SmoothingChart::standard()
            } else {
                SmoothingChart::Identity
            },
            chi: if smooth {
                SmoothingFunction::standard()
            } else {
                SmoothingFunction::zero()
            },
        }
    }

    #[test]
    fn tracking_certificate_for_smoothed_branched_form() {
        let reference = reeb(fixtures::bp(), false);
        let smoothed = reeb(fixtures::bp(), true);
        let section = Section::new(&smoothed, 0.0, 0.99).unwrap();
        // The comparison band sits beyond both the chart splice and the
        // support of chi, where the two fields coincide bitwise.
        let opts = TrackingOptions {
            core_radius: 0.955,
            tube_radius: 0.01,
            l_bound: 2.0,
            field_tol: 1e-9,
            tol: 1e-9,
        };
        let anchors = [[0.97, 1.0], [0.98, 4.0]];
        let cert =
            tracking_certificate(&reference, &smoothed, &section, &anchors, &opts).unwrap();
        assert!(cert.pass);
        assert!(cert.tubes_disjoint);
        assert!(cert.field_agreement, "gap {}", cert.max_field_gap);
        assert_eq!(cert.max_field_gap, 0.0);
        assert!(cert.max_return_time <= 2.0);
        for a in &cert.anchors {
            assert!(a.identity_degenerate, "bp holds every disk point fixed");
            assert!((a.return_time - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn tracking_certifies_unique_orbit_in_tube() {
        let ft = crate::expr::parse("1").unwrap();
        let fr = crate::expr::parse("0.2*(0.5 - r)").unwrap();
        let fth = crate::expr::parse("0.3*sin(th)").unwrap();
        let model = FlowModel::UserField { ft, fr, fth };
        let section = Section::new(&model, 0.0, 0.99).unwrap();
        let opts = TrackingOptions {
            core_radius: 0.2,
            tube_radius: 0.05,
            l_bound: 2.0,
            field_tol: 1e-9,
            tol: 1e-9,
        };
        let anchor = [0.51, std::f64::consts::PI - 0.02];
        let cert =
            tracking_certificate(&model, &model, &section, &[anchor], &opts).unwrap();
        assert!(cert.pass);
        let a = &cert.anchors[0];
        assert!(a.unique_orbit);
        assert!(!a.identity_degenerate, "the return map contracts, not fixes");
        assert!((a.orbit_point[0] - 0.5).abs() < 1e-6, "r {}", a.orbit_point[0]);
        assert!(
            (a.orbit_point[1] - std::f64::consts::PI).abs() < 1e-6,
            "th {}",
            a.orbit_point[1]
        );
        assert!((a.return_time - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tracking_detects_slow_return_times() {
        let model = reeb(fixtures::slow(), false);
        let section = Section::new(&model, 0.0, 0.99).unwrap();
        let opts = TrackingOptions {
            core_radius: 0.2,
            tube_radius: 0.05,
            l_bound: 2.0,
            field_tol: 1e-9,
            tol: 1e-9,
        };
        let cert =
            tracking_certificate(&model, &model, &section, &[[0.5, 1.0]], &opts).unwrap();
        assert!(!cert.pass, "return time 3 must break the bound 2");
        assert!(cert.field_agreement, "same model everywhere");
        assert!((cert.max_return_time - 3.0).abs() < 1e-6);
    }

    #[test]
    fn tracking_reports_no_return_as_failure() {
        let torsion = FlowModel::torsion(1).unwrap();
        let section = Section::with_level(0.25, 0.99);
        let opts = TrackingOptions::standard(2.0);
        let cert =
            tracking_certificate(&torsion, &torsion, &section, &[[0.5, 0.5]], &opts).unwrap();
        assert!(!cert.pass);
        assert!(cert.anchors[0].return_time.is_infinite());
    }

    #[test]
    fn index_sums_match_across_prong_resolution() {
        let class = HomotopyClassKey {
            winding: 1,
            rep: [0, 0],
        };
        let singular = FlowOrbitCensus {
            horizon: 10.0,
            records: vec![FlowOrbitRecord {
                class,
                orbit_type: OrbitType::nonrotating_singular(4).unwrap(),
                period: 1.0,
            }],
        };
        let resolved = FlowOrbitCensus {
            horizon: 10.0,
            records: (0..3)
                .map(|i| FlowOrbitRecord {
                    class,
                    orbit_type: OrbitType::PositiveHyperbolic,
                    period: 1.0 + 0.01 * i as f64,
                })
                .collect(),
        };
        let rep = tracking_sum_check(&singular, &resolved, class, 5.0).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.sum_reference, -3);
        assert_eq!(rep.sum_tracked, -3);

        let mut missing = resolved.clone();
        missing.records.pop();
        let rep2 = tracking_sum_check(&singular, &missing, class, 5.0).unwrap();
        assert!(!rep2.pass);
        assert_eq!(rep2.sum_tracked, -2);

        assert!(matches!(
            tracking_sum_check(&singular, &resolved, class, 20.0),
            Err(LefschetzError::IncompleteCensus { .. })
        ));
    }
}
