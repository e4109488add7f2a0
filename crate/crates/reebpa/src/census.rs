//! Exact periodic orbit census for suspensions of hyperbolic torus
//! automorphisms with unit roof.
//!
//! Fixed points of A^k are the lattice cosets of (A^k - I) Z^2: the point
//! x = (A^k - I)^{-1} m is fixed exactly when m is integral, so the level-k
//! points biject with Z^2 / (A^k - I) Z^2. Everything downstream is integer
//! arithmetic: Smith form coordinates put cosets into a canonical box,
//! the base map acts on the box through a conjugated integer matrix, and
//! orbits of that action are the periodic orbits of the flow at winding k.
//! Free homotopy data rides along for free: two closed orbits of equal
//! winding are freely homotopic in the mapping torus iff their cosets lie
//! in the same orbit of the box action, so the canonical orbit
//! representative doubles as a homotopy class key.

use crate::lefschetz::OrbitType;
use crate::models::{ModelError, TorusAutomorphism};
use crate::snf::{mat_det, mat_vec, smith_normal_form, Snf, SnfError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Hard ceiling on fixed points per level; |det(A^k - I)| grows like the
/// expansion factor to the k, so this bounds memory, not correctness.
pub const MAX_LEVEL_POINTS: u128 = 4_000_000;

/// Hard ceiling on the winding bound itself. Levels past this are out of
/// reach for any hyperbolic base anyway by the point ceiling.
pub const MAX_WINDING: u32 = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CensusError {
    #[error("census requires determinant +1, got {0}")]
    DeterminantNotPlusOne(i64),
    #[error("winding bound must be at least 1")]
    WindingBoundZero,
    #[error("winding bound {kmax} exceeds the supported maximum {MAX_WINDING}")]
    WindingBoundTooLarge { kmax: u32 },
    #[error("level {k} has {count} fixed points, over the {MAX_LEVEL_POINTS} ceiling")]
    LevelTooLarge { k: u32, count: u128 },
    #[error("cutoff {cutoff} asks beyond the census horizon {horizon}")]
    IncompleteCensus { cutoff: u32, horizon: u32 },
    #[error("growth rate needs winding bound at least {min}, census stops at {kmax}")]
    WindowTooShort { kmax: u32, min: u32 },
    #[error("growth function vanishes somewhere on the fit window")]
    EmptyLevels,
    #[error("synthetic censuses carry no base automorphism")]
    NoBase,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Snf(#[from] SnfError),
}

/// Free homotopy class of a closed orbit: its winding around the mapping
/// torus direction plus the canonical coset representative at that winding.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct HomotopyClassKey {
    pub winding: u32,
    pub rep: [i64; 2],
}

/// One closed orbit of the suspension at a given winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub winding: u32,
    /// Primitive period of the underlying orbit; divides the winding.
    pub primitive_period: u32,
    /// winding / primitive_period; 1 marks a simple orbit.
    pub iterate: u32,
    pub class: HomotopyClassKey,
    /// Class of the underlying simple orbit at its own winding.
    pub root_class: HomotopyClassKey,
    pub orbit_type: OrbitType,
    /// False exactly for even iterates of negative hyperbolic simple orbits.
    pub good: bool,
    /// Fixed point index of the k-th return map at one orbit point.
    pub lefschetz: i32,
    /// Chain grading bit: 0 for index +1 orbits, 1 otherwise.
    pub grading: u8,
    /// Unit roof makes the action equal to the winding.
    pub action: f64,
    /// One fixed point of A^k on the orbit, wrapped to the unit square.
    pub point: [f64; 2],
}

struct Level {
    snf: Snf,
    /// Box action: u A u^{-1} reduced mod diag(d).
    b: [[i128; 2]; 2],
    m: [[i128; 2]; 2],
    det: i128,
}

/// Where a census came from: the exact lattice enumeration, or records
/// assembled by hand for comparisons and counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Substrate {
    Torus(TorusAutomorphism),
    Synthetic,
}

pub struct Census {
    substrate: Substrate,
    kmax: u32,
    records: Vec<OrbitRecord>,
    counts: Vec<u128>,
}

fn adjugate(m: [[i128; 2]; 2]) -> [[i128; 2]; 2] {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

fn unimodular_inverse(m: [[i128; 2]; 2]) -> [[i128; 2]; 2] {
    let d = mat_det(m);
    debug_assert!(d == 1 || d == -1);
    let a = adjugate(m);
    if d == 1 {
        a
    } else {
        [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]]
    }
}

impl Census {
    /// Enumerate all closed orbits with winding 1..=kmax.
    pub fn enumerate(base: TorusAutomorphism, kmax: u32) -> Result<Self, CensusError> {
        if base.det() != 1 {
            return Err(CensusError::DeterminantNotPlusOne(base.det()));
        }
        if kmax == 0 {
            return Err(CensusError::WindingBoundZero);
        }
        if kmax > MAX_WINDING {
            return Err(CensusError::WindingBoundTooLarge { kmax });
        }

        let a64 = base.matrix();
        let a: [[i128; 2]; 2] = [
            [a64[0][0] as i128, a64[0][1] as i128],
            [a64[1][0] as i128, a64[1][1] as i128],
        ];
        let negative_expansion = base.trace() < 0;

        let mut levels: Vec<Level> = Vec::with_capacity(kmax as usize);
        let mut counts = Vec::with_capacity(kmax as usize);
        for k in 1..=kmax {
            let p = base.pow(k)?;
            let m = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
            let det = mat_det(m);
            let count = det.unsigned_abs();
            if count > MAX_LEVEL_POINTS {
                return Err(CensusError::LevelTooLarge { k, count });
            }
            let snf = smith_normal_form(m)?;
            let b_full = crate::snf::mat_mul(crate::snf::mat_mul(snf.u, a), unimodular_inverse(snf.u));
            // The box action must respect the moduli; a violation would mean
            // the Smith data is inconsistent with the conjugation.
            debug_assert!(snf.d[0] > 0 && snf.d[1] > 0);
            debug_assert_eq!(snf.d[1] % snf.d[0], 0);
            debug_assert_eq!((b_full[0][1] * snf.d[1]).rem_euclid(snf.d[0]), 0);
            debug_assert_eq!((b_full[1][0] * snf.d[0]).rem_euclid(snf.d[1]), 0);
            levels.push(Level {
                snf,
                b: b_full,
                m,
                det,
            });
            counts.push(count);
        }

        let mut records = Vec::new();
        for k in 1..=kmax {
            let lv = &levels[(k - 1) as usize];
            let (d1, d2) = (lv.snf.d[0], lv.snf.d[1]);
            let total = (d1 * d2) as usize;
            let mut visited = vec![false; total];
            let idx = |y: [i128; 2]| (y[0] * d2 + y[1]) as usize;

            for y0 in 0..d1 {
                for y1 in 0..d2 {
                    let start = [y0, y1];
                    if visited[idx(start)] {
                        continue;
                    }
                    // Walk the box orbit, recording members and the
                    // lexicographically least representative.
                    let mut orbit = Vec::new();
                    let mut y = start;
                    loop {
                        visited[idx(y)] = true;
                        orbit.push(y);
                        y = [
                            (lv.b[0][0] * y[0] + lv.b[0][1] * y[1]).rem_euclid(d1),
                            (lv.b[1][0] * y[0] + lv.b[1][1] * y[1]).rem_euclid(d2),
                        ];
                        if y == start {
                            break;
                        }
                        debug_assert!(!visited[idx(y)], "box action not a permutation");
                    }
                    let d = orbit.len() as u32;
                    debug_assert_eq!(k % d, 0, "orbit length must divide the winding");
                    let rep = *orbit.iter().min().unwrap();

                    let record = Self::build_record(
                        k,
                        d,
                        rep,
                        lv,
                        &levels,
                        negative_expansion,
                    );
                    records.push(record);
                }
            }
        }

        records.sort_by(|a, b| (a.winding, a.class.rep).cmp(&(b.winding, b.class.rep)));
        Ok(Self {
            substrate: Substrate::Torus(base),
            kmax,
            records,
            counts,
        })
    }

    /// Assemble a census from explicit records, complete by fiat up to
    /// kmax. Level counts are derived from the records.
    pub fn synthetic(records: Vec<OrbitRecord>, kmax: u32) -> Result<Self, CensusError> {
        if kmax == 0 {
            return Err(CensusError::WindingBoundZero);
        }
        if kmax > MAX_WINDING {
            return Err(CensusError::WindingBoundTooLarge { kmax });
        }
        let mut counts = vec![0u128; kmax as usize];
        for r in &records {
            if r.winding > kmax {
                return Err(CensusError::IncompleteCensus {
                    cutoff: r.winding,
                    horizon: kmax,
                });
            }
            // Winding 0 marks a contractible record; those never arise from
            // enumeration but hypertightness counterexamples need them.
            if r.winding >= 1 {
                counts[(r.winding - 1) as usize] += r.primitive_period as u128;
            }
        }
        let mut records = records;
        records.sort_by(|a, b| (a.winding, a.class.rep).cmp(&(b.winding, b.class.rep)));
        Ok(Self {
            substrate: Substrate::Synthetic,
            kmax,
            records,
            counts,
        })
    }

    fn build_record(
        k: u32,
        d: u32,
        rep: [i128; 2],
        lv: &Level,
        levels: &[Level],
        negative_expansion: bool,
    ) -> OrbitRecord {
        // Integer coset vector for the canonical representative.
        let m_vec = mat_vec(unimodular_inverse(lv.snf.u), rep);
        // Exact fixed point x = adj(M) m / det(M).
        let x_num = mat_vec(adjugate(lv.m), m_vec);
        let x_den = lv.det;

        let root_class = if d == k {
            HomotopyClassKey {
                winding: k,
                rep: [rep[0] as i64, rep[1] as i64],
            }
        } else {
            let lvd = &levels[(d - 1) as usize];
            // Coset of the same point at its primitive winding. The
            // products stay integral because x is genuinely d-periodic.
            let num = mat_vec(lvd.m, x_num);
            debug_assert_eq!(num[0] % x_den, 0);
            debug_assert_eq!(num[1] % x_den, 0);
            let md = [num[0] / x_den, num[1] / x_den];
            let yd = mat_vec(lvd.snf.u, md);
            let y = [yd[0].rem_euclid(lvd.snf.d[0]), yd[1].rem_euclid(lvd.snf.d[1])];
            // Canonicalize within the level-d box orbit.
            let mut best = y;
            let mut cur = y;
            loop {
                cur = [
                    (lvd.b[0][0] * cur[0] + lvd.b[0][1] * cur[1]).rem_euclid(lvd.snf.d[0]),
                    (lvd.b[1][0] * cur[0] + lvd.b[1][1] * cur[1]).rem_euclid(lvd.snf.d[1]),
                ];
                if cur < best {
                    best = cur;
                }
                if cur == y {
                    break;
                }
            }
            HomotopyClassKey {
                winding: d,
                rep: [best[0] as i64, best[1] as i64],
            }
        };

        let root_negative = negative_expansion && d % 2 == 1;
        let iterate = k / d;
        let negative_here = negative_expansion && k % 2 == 1;
        let orbit_type = if negative_here {
            OrbitType::NegativeHyperbolic
        } else {
            OrbitType::PositiveHyperbolic
        };
        // Index of a hyperbolic fixed point: sign of det(I - A^k), which is
        // negative when the expansion eigenvalue of A^k is positive.
        let lefschetz = orbit_type.index();
        let good = !(root_negative && iterate % 2 == 0);

        let fx = x_num[0] as f64 / x_den as f64;
        let fy = x_num[1] as f64 / x_den as f64;
        OrbitRecord {
            winding: k,
            primitive_period: d,
            iterate,
            class: HomotopyClassKey {
                winding: k,
                rep: [rep[0] as i64, rep[1] as i64],
            },
            root_class,
            orbit_type,
            good,
            lefschetz,
            grading: orbit_type.grading(),
            action: k as f64,
            point: [fx.rem_euclid(1.0), fy.rem_euclid(1.0)],
        }
    }

    pub fn substrate(&self) -> Substrate {
        self.substrate
    }

    pub fn base(&self) -> Option<&TorusAutomorphism> {
        match &self.substrate {
            Substrate::Torus(a) => Some(a),
            Substrate::Synthetic => None,
        }
    }

    pub fn winding_bound(&self) -> u32 {
        self.kmax
    }

    /// Action out to which the census is complete. Enumeration covers
    /// exactly the winding bound; a synthetic census vouches for the
    /// larger of its winding bound and its largest recorded action.
    pub fn action_horizon(&self) -> f64 {
        let base = self.kmax as f64;
        match self.substrate {
            Substrate::Torus(_) => base,
            Substrate::Synthetic => {
                self.records.iter().map(|r| r.action).fold(base, f64::max)
            }
        }
    }

    pub fn records(&self) -> &[OrbitRecord] {
        &self.records
    }

    pub fn records_at(&self, k: u32) -> impl Iterator<Item = &OrbitRecord> {
        self.records.iter().filter(move |r| r.winding == k)
    }

    /// |det(A^k - I)|, the raw fixed point count at level k.
    pub fn fixed_point_count(&self, k: u32) -> Option<u128> {
        if k == 0 || k > self.kmax {
            return None;
        }
        Some(self.counts[(k - 1) as usize])
    }

    /// Orbits whose primitive period equals d.
    pub fn simple_orbit_count(&self, d: u32) -> u64 {
        self.records
            .iter()
            .filter(|r| r.winding == d && r.iterate == 1)
            .count() as u64
    }

    /// Distinct homotopy classes realized at winding exactly k.
    pub fn class_count(&self, k: u32) -> u64 {
        self.records.iter().filter(|r| r.winding == k).count() as u64
    }

    /// Number of distinct classes with action at most L. L = 0 is an
    /// honest empty count; anything past the horizon is refused.
    pub fn growth_function(&self, l: u32) -> Result<u64, CensusError> {
        if l > self.kmax {
            return Err(CensusError::IncompleteCensus {
                cutoff: l,
                horizon: self.kmax,
            });
        }
        Ok(self.records.iter().filter(|r| r.winding <= l).count() as u64)
    }

    /// Cumulative class counts: entry L-1 is the number of classes with
    /// action at most L.
    pub fn growth_table(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.kmax as usize);
        let mut acc = 0u64;
        for k in 1..=self.kmax {
            acc += self.class_count(k);
            out.push(acc);
        }
        out
    }

    /// Exponential growth rate estimate from the growth function. Shallow
    /// censuses are refused: the fit window needs depth to mean anything.
    pub fn growth_rate(&self) -> Result<GrowthFit, CensusError> {
        const MIN_DEPTH: u32 = 8;
        if self.kmax < MIN_DEPTH {
            return Err(CensusError::WindowTooShort {
                kmax: self.kmax,
                min: MIN_DEPTH,
            });
        }
        growth_fit(&self.growth_table()).ok_or(CensusError::EmptyLevels)
    }

    /// Per-level breakdown used by reports.
    pub fn level_summary(&self) -> Vec<LevelSummary> {
        let mut out = Vec::new();
        for k in 1..=self.kmax {
            let mut s = LevelSummary {
                winding: k,
                fixed_points: self.counts[(k - 1) as usize],
                orbits: 0,
                simple_orbits: 0,
                good_orbits: 0,
                lefschetz_sum: 0,
            };
            for r in self.records_at(k) {
                s.orbits += 1;
                if r.iterate == 1 {
                    s.simple_orbits += 1;
                }
                if r.good {
                    s.good_orbits += 1;
                }
                s.lefschetz_sum += r.lefschetz as i128 * r.primitive_period as i128;
            }
            out.push(s);
        }
        out
    }

    /// Good records grouped by class key; the chain toolkit consumes this.
    pub fn by_class(&self) -> BTreeMap<HomotopyClassKey, Vec<&OrbitRecord>> {
        let mut map: BTreeMap<HomotopyClassKey, Vec<&OrbitRecord>> = BTreeMap::new();
        for r in &self.records {
            map.entry(r.class).or_default().push(r);
        }
        map
    }
}

/// Class key of the fixed point with coset vector v at winding k, without
/// enumerating anything else. The key only depends on the coset of v mod
/// (A^k - I) Z^2 and is invariant under the base map, so orbit mates and
/// equivalent vectors agree.
pub fn class_key(
    v: [i64; 2],
    k: u32,
    base: &TorusAutomorphism,
) -> Result<HomotopyClassKey, CensusError> {
    if base.det() != 1 {
        return Err(CensusError::DeterminantNotPlusOne(base.det()));
    }
    if k == 0 {
        return Err(CensusError::WindingBoundZero);
    }
    let a64 = base.matrix();
    let a: [[i128; 2]; 2] = [
        [a64[0][0] as i128, a64[0][1] as i128],
        [a64[1][0] as i128, a64[1][1] as i128],
    ];
    let p = base.pow(k)?;
    let m = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
    let det = mat_det(m);
    if det.unsigned_abs() > MAX_LEVEL_POINTS {
        return Err(CensusError::LevelTooLarge {
            k,
            count: det.unsigned_abs(),
        });
    }
    let snf = smith_normal_form(m)?;
    let b = crate::snf::mat_mul(crate::snf::mat_mul(snf.u, a), unimodular_inverse(snf.u));
    let (d1, d2) = (snf.d[0], snf.d[1]);
    let yv = mat_vec(snf.u, [v[0] as i128, v[1] as i128]);
    let start = [yv[0].rem_euclid(d1), yv[1].rem_euclid(d2)];
    let mut best = start;
    let mut cur = start;
    loop {
        cur = [
            (b[0][0] * cur[0] + b[0][1] * cur[1]).rem_euclid(d1),
            (b[1][0] * cur[0] + b[1][1] * cur[1]).rem_euclid(d2),
        ];
        if cur < best {
            best = cur;
        }
        if cur == start {
            break;
        }
    }
    Ok(HomotopyClassKey {
        winding: k,
        rep: [best[0] as i64, best[1] as i64],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusPropertyReport {
    pub pass: bool,
    /// Every root class is realized by a simple record at its winding.
    pub roots_occupied: bool,
    /// Records sharing a class key share an orbit type.
    pub classes_homogeneous: bool,
    pub violations: Vec<String>,
}

/// Structural sanity of a census, enumerated or synthetic.
pub fn census_property_checks(census: &Census) -> CensusPropertyReport {
    let mut violations = Vec::new();

    let simple: std::collections::BTreeSet<HomotopyClassKey> = census
        .records()
        .iter()
        .filter(|r| r.iterate == 1)
        .map(|r| r.class)
        .collect();
    let mut roots_occupied = true;
    for r in census.records() {
        if !simple.contains(&r.root_class) {
            roots_occupied = false;
            violations.push(format!(
                "root {:?} of {:?} is not a simple class",
                r.root_class, r.class
            ));
        }
    }

    let mut classes_homogeneous = true;
    let mut seen: BTreeMap<HomotopyClassKey, OrbitType> = BTreeMap::new();
    for r in census.records() {
        match seen.entry(r.class) {
            std::collections::btree_map::Entry::Occupied(e) => {
                if *e.get() != r.orbit_type {
                    classes_homogeneous = false;
                    violations.push(format!(
                        "class {:?} mixes {:?} and {:?}",
                        r.class,
                        e.get(),
                        r.orbit_type
                    ));
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(r.orbit_type);
            }
        }
    }

    CensusPropertyReport {
        pass: roots_occupied && classes_homogeneous,
        roots_occupied,
        classes_homogeneous,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub winding: u32,
    pub fixed_points: u128,
    pub orbits: u64,
    pub simple_orbits: u64,
    pub good_orbits: u64,
    /// Sum of per-point indices over all fixed points at this level;
    /// equals 2 - tr(A^k) for determinant +1.
    pub lefschetz_sum: i128,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Slope of log(L * gf(L)) against L over the fit window. The L factor
    /// compensates the period dilution of orbit counts, so this converges
    /// to the log of the expansion factor much faster than the raw slope.
    pub rate: f64,
    /// Slope of log gf(L) against L over the same window, for reference.
    pub raw_slope: f64,
    pub window: (u32, u32),
}

use crate::numeric::ls_slope;

/// Fit over the upper half window [kmax/2, kmax]; needs kmax >= 2.
pub fn growth_fit(gf: &[u64]) -> Option<GrowthFit> {
    let kmax = gf.len() as u32;
    if kmax < 2 {
        return None;
    }
    let lo = (kmax / 2).max(1);
    let mut corrected = Vec::new();
    let mut raw = Vec::new();
    for k in lo..=kmax {
        let g = gf[(k - 1) as usize];
        if g == 0 {
            return None;
        }
        corrected.push((k as f64, ((k as u64 * g) as f64).ln()));
        raw.push((k as f64, (g as f64).ln()));
    }
    Some(GrowthFit {
        rate: ls_slope(&corrected),
        raw_slope: ls_slope(&raw),
        window: (lo, kmax),
    })
}
