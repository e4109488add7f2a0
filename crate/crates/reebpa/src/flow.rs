//! Flow integration and section return maps.
//!
//! Suspension models flow exactly: the roof coordinate moves at unit speed
//! and the fiber point jumps by the base map at integer crossings. All
//! other models integrate with an adaptive Dormand-Prince 5(4) stepper and
//! locate section crossings on the dense output of the accepted step.

use crate::contact::{self, ChartContactForm, ContactError, SmoothingChart, SmoothingFunction};
use crate::expr::{Binding, EvalError, Expression};
use crate::models::{wrap_unit, StandardPaMap, SuspensionFlow};
use serde::{Deserialize, Serialize};

/// Return-map search horizon in flow time.
pub const RETURN_HORIZON: f64 = 50.0;

const EVENT_TOL: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-10;
const DEDUPE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error("field evaluation failed at state ({0}, {1}, {2}): {source}", .state[0], .state[1], .state[2])]
    Field {
        state: [f64; 3],
        source: EvalError,
    },
    #[error("step size underflow at s={s} (h={h}); the field is too stiff or singular")]
    StepFailure { s: f64, h: f64 },
    #[error("section t={t0} is not transverse: sampled rate {min_rate} <= 0")]
    NotTransverse { t0: f64, min_rate: f64 },
    #[error("no section return within flow time {horizon}")]
    NoReturn { horizon: f64 },
    #[error("integration tolerance must lie in (0, 1e-2], got {0}")]
    BadTolerance(f64),
    #[error("torsion layer count must be at least 1")]
    EmptyTorsion,
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// A flow on a 3-dimensional chart with state (t, x1, x2). For Reeb and
/// user-defined fields the state is (t, r, theta); for suspensions and
/// torsion layers it is the roof coordinate followed by the fiber point.
#[derive(Debug, Clone)]
pub enum FlowModel {
    Reeb {
        form: ChartContactForm,
        chart: SmoothingChart,
        chi: SmoothingFunction,
    },
    TorusSuspension(SuspensionFlow),
    PaSuspension(StandardPaMap),
    /// k stacked rotation layers on [0, k] x T^2; the field is tangent to
    /// every torus {t = const}, so no disk section is ever transverse.
    Torsion { k: u32 },
    UserField {
        ft: Expression,
        fr: Expression,
        fth: Expression,
    },
}

impl FlowModel {
    pub fn torsion(k: u32) -> Result<Self, FlowError> {
        if k == 0 {
            return Err(FlowError::EmptyTorsion);
        }
        Ok(FlowModel::Torsion { k })
    }

    /// Fiber jumps happen at integer roof times for these models.
    fn is_suspension(&self) -> bool {
        matches!(
            self,
            FlowModel::TorusSuspension(_) | FlowModel::PaSuspension(_)
        )
    }

    /// The fiber coordinates live on the torus and compare mod 1.
    pub fn wraps_fiber(&self) -> bool {
        matches!(self, FlowModel::TorusSuspension(_) | FlowModel::Torsion { .. })
    }

    pub fn velocity(&self, state: [f64; 3]) -> Result<[f64; 3], FlowError> {
        match self {
            FlowModel::Reeb { form, chart, chi } => Ok(contact::reeb_velocity(
                form, chart, chi, state[0], state[1], state[2],
            )?),
            FlowModel::TorusSuspension(_) | FlowModel::PaSuspension(_) => Ok([1.0, 0.0, 0.0]),
            FlowModel::Torsion { .. } => {
                let ang = std::f64::consts::TAU * state[0];
                Ok([0.0, ang.cos(), ang.sin()])
            }
            FlowModel::UserField { ft, fr, fth } => {
                let bind = Binding::chart(state[0], state[1], state[2]);
                let wrap = |source: EvalError| FlowError::Field { state, source };
                Ok([
                    ft.eval(&bind).map_err(wrap)?,
                    fr.eval(&bind).map_err(wrap)?,
                    fth.eval(&bind).map_err(wrap)?,
                ])
            }
        }
    }

    fn apply_base(&self, p: [f64; 2], inverse: bool) -> [f64; 2] {
        match self {
            FlowModel::TorusSuspension(susp) => {
                if inverse {
                    susp.base().apply_inverse(p)
                } else {
                    susp.base().apply(p)
                }
            }
            FlowModel::PaSuspension(pa) => {
                if inverse {
                    pa.inverse_apply(p)
                } else {
                    pa.apply(p)
                }
            }
            _ => unreachable!("apply_base called on a non-suspension model"),
        }
    }
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryNode {
    pub s: f64,
    pub state: [f64; 3],
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    Smooth,
    /// Suspension paths: the fiber point is constant between nodes and
    /// jumps at them, so sampling holds the last node's state.
    PiecewiseConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub nodes: Vec<TrajectoryNode>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn start(&self) -> [f64; 3] {
        self.nodes.first().expect("trajectory is never empty").state
    }

    pub fn end(&self) -> [f64; 3] {
        self.nodes.last().expect("trajectory is never empty").state
    }

    pub fn total_time(&self) -> f64 {
        self.nodes.last().unwrap().s - self.nodes.first().unwrap().s
    }

    /// State at intermediate time, cubic Hermite between step endpoints.
    pub fn sample(&self, s: f64) -> [f64; 3] {
        let nodes = &self.nodes;
        let forward = nodes.last().unwrap().s >= nodes.first().unwrap().s;
        let past = |a: f64, b: f64| if forward { a >= b } else { a <= b };
        if past(nodes[0].s, s) {
            return nodes[0].state;
        }
        let mut hi = nodes.len() - 1;
        for (i, n) in nodes.iter().enumerate().skip(1) {
            if past(n.s, s) {
                hi = i;
                break;
            }
        }
        let (a, b) = (&nodes[hi - 1], &nodes[hi]);
        match self.kind {
            TrajectoryKind::PiecewiseConstant => {
                if past(s, b.s) {
                    b.state
                } else {
                    a.state
                }
            }
            TrajectoryKind::Smooth => hermite(a, b, s),
        }
    }
}

fn hermite(a: &TrajectoryNode, b: &TrajectoryNode, s: f64) -> [f64; 3] {
    let h = b.s - a.s;
    if h == 0.0 {
        return b.state;
    }
    let x = (s - a.s) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
    let h10 = x3 - 2.0 * x2 + x;
    let h01 = -2.0 * x3 + 3.0 * x2;
    let h11 = x3 - x2;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] =
            h00 * a.state[i] + h10 * h * a.velocity[i] + h01 * b.state[i] + h11 * h * b.velocity[i];
    }
    out
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

struct Step {
    y: [f64; 3],
    f_end: [f64; 3],
    err: f64,
}

fn axpy(y: &[f64; 3], h: f64, coeffs: &[(f64, &[f64; 3])]) -> [f64; 3] {
    let mut out = *y;
    for &(c, k) in coeffs {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn dopri5_step(
    model: &FlowModel,
    y: [f64; 3],
    f0: [f64; 3],
    h: f64,
    tol: f64,
) -> Result<Step, FlowError> {
    let k1 = f0;
    let k2 = model.velocity(axpy(&y, h, &[(1.0 / 5.0, &k1)]))?;
    let k3 = model.velocity(axpy(&y, h, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]))?;
    let k4 = model.velocity(axpy(
        &y,
        h,
        &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
    ))?;
    let k5 = model.velocity(axpy(
        &y,
        h,
        &[
            (19372.0 / 6561.0, &k1),
            (-25360.0 / 2187.0, &k2),
            (64448.0 / 6561.0, &k3),
            (-212.0 / 729.0, &k4),
        ],
    ))?;
    let k6 = model.velocity(axpy(
        &y,
        h,
        &[
            (9017.0 / 3168.0, &k1),
            (-355.0 / 33.0, &k2),
            (46732.0 / 5247.0, &k3),
            (49.0 / 176.0, &k4),
            (-5103.0 / 18656.0, &k5),
        ],
    ))?;
    let y5 = axpy(
        &y,
        h,
        &[
            (35.0 / 384.0, &k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    );
    let k7 = model.velocity(y5)?;
    // Difference of the 5th and embedded 4th order weights.
    let errv = axpy(
        &[0.0; 3],
        h,
        &[
            (71.0 / 57600.0, &k1),
            (-71.0 / 16695.0, &k3),
            (71.0 / 1920.0, &k4),
            (-17253.0 / 339200.0, &k5),
            (22.0 / 525.0, &k6),
            (-1.0 / 40.0, &k7),
        ],
    );
    let mut err = 0.0;
    for i in 0..3 {
        let sc = tol + tol * y[i].abs().max(y5[i].abs());
        err += (errv[i] / sc) * (errv[i] / sc);
    }
    Ok(Step {
        y: y5,
        f_end: k7,
        err: (err / 3.0).sqrt(),
    })
}

struct Integrator<'a> {
    model: &'a FlowModel,
    tol: f64,
    s: f64,
    y: [f64; 3],
    f: [f64; 3],
    h: f64,
    accepted: usize,
    rejected: usize,
}

impl<'a> Integrator<'a> {
    fn new(model: &'a FlowModel, start: [f64; 3], direction: f64, tol: f64) -> Result<Self, FlowError> {
        let f = model.velocity(start)?;
        Ok(Integrator {
            model,
            tol,
            s: 0.0,
            y: start,
            f,
            h: 1e-3 * direction.signum(),
            accepted: 0,
            rejected: 0,
        })
    }

    /// Advance one accepted step, no farther than s_cap. Returns the node
    /// left behind (previous position with its velocity).
    fn advance(&mut self, s_cap: f64) -> Result<TrajectoryNode, FlowError> {
        loop {
            let room = s_cap - self.s;
            if self.h.abs() > room.abs() {
                self.h = room;
            }
            let step = dopri5_step(self.model, self.y, self.f, self.h, self.tol)?;
            let factor = if step.err > 0.0 {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            if step.err <= 1.0 {
                let prev = TrajectoryNode {
                    s: self.s,
                    state: self.y,
                    velocity: self.f,
                };
                self.s += self.h;
                self.y = step.y;
                self.f = step.f_end;
                self.h *= factor;
                self.accepted += 1;
                return Ok(prev);
            }
            self.rejected += 1;
            self.h *= factor;
            if self.h.abs() < 1e-14 * (1.0 + self.s.abs()) {
                return Err(FlowError::StepFailure { s: self.s, h: self.h });
            }
        }
    }

    fn node(&self) -> TrajectoryNode {
        TrajectoryNode {
            s: self.s,
            state: self.y,
            velocity: self.f,
        }
    }
}

fn check_tol(tol: f64) -> Result<(), FlowError> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(FlowError::BadTolerance(tol));
    }
    Ok(())
}

/// Flow for signed time `time` from `start`.
pub fn integrate(
    model: &FlowModel,
    start: [f64; 3],
    time: f64,
    tol: f64,
) -> Result<Trajectory, FlowError> {
    check_tol(tol)?;
    if model.is_suspension() {
        return Ok(integrate_suspension(model, start, time));
    }
    if let FlowModel::Torsion { .. } = model {
        // The field is constant along each path: exact two-node answer.
        let v = model.velocity(start)?;
        let end = [
            start[0],
            start[1] + time * v[1],
            start[2] + time * v[2],
        ];
        return Ok(Trajectory {
            kind: TrajectoryKind::Smooth,
            nodes: vec![
                TrajectoryNode { s: 0.0, state: start, velocity: v },
                TrajectoryNode { s: time, state: end, velocity: v },
            ],
            steps_accepted: 1,
            steps_rejected: 0,
        });
    }
    let mut integ = Integrator::new(model, start, if time < 0.0 { -1.0 } else { 1.0 }, tol)?;
    let mut nodes = Vec::new();
    if time == 0.0 {
        nodes.push(integ.node());
    }
    while (time > 0.0 && integ.s < time) || (time < 0.0 && integ.s > time) {
        nodes.push(integ.advance(time)?);
    }
    nodes.push(integ.node());
    Ok(Trajectory {
        kind: TrajectoryKind::Smooth,
        nodes,
        steps_accepted: integ.accepted,
        steps_rejected: integ.rejected,
    })
}

fn integrate_suspension(model: &FlowModel, start: [f64; 3], time: f64) -> Trajectory {
    let t0 = start[0];
    let mut p = [start[1], start[2]];
    let mut nodes = vec![TrajectoryNode {
        s: 0.0,
        state: start,
        velocity: [1.0, 0.0, 0.0],
    }];
    if time > 0.0 {
        let mut m = t0.floor() + 1.0;
        while m - t0 <= time {
            p = model.apply_base(p, false);
            nodes.push(TrajectoryNode {
                s: m - t0,
                state: [m, p[0], p[1]],
                velocity: [1.0, 0.0, 0.0],
            });
            m += 1.0;
        }
    } else if time < 0.0 {
        // Crossing t = floor(t0) downward enters the fiber below, so a
        // start on the fiber applies the inverse immediately.
        let mut m = t0.floor();
        while m - t0 >= time {
            p = model.apply_base(p, true);
            nodes.push(TrajectoryNode {
                s: m - t0,
                state: [m, p[0], p[1]],
                velocity: [1.0, 0.0, 0.0],
            });
            m -= 1.0;
        }
    }
    let last = nodes.last().unwrap();
    if last.s != time {
        nodes.push(TrajectoryNode {
            s: time,
            state: [t0 + time, p[0], p[1]],
            velocity: [1.0, 0.0, 0.0],
        });
    }
    Trajectory {
        kind: TrajectoryKind::PiecewiseConstant,
        nodes,
        steps_accepted: 0,
        steps_rejected: 0,
    }
}

// ---------------------------------------------------------------------------
// Sections and return maps
// ---------------------------------------------------------------------------

/// Transverse slice {t = t0} with section coordinates the remaining two
/// state components. `radius` bounds the plane window used for sampling
/// and seeding; torus fibers use the full fundamental square instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub t0: f64,
    pub radius: f64,
}

impl Section {
    /// Checked constructor: samples the roof rate over the section patch
    /// and rejects the slice unless it is positive everywhere sampled.
    /// Suspension roofs move at unit speed, so they skip the sampling.
    pub fn new(model: &FlowModel, t0: f64, radius: f64) -> Result<Self, FlowError> {
        let sec = Section { t0, radius };
        if model.is_suspension() {
            return Ok(sec);
        }
        let mut min_rate = f64::INFINITY;
        for p in sec.sample_points(model) {
            let v = model.velocity([t0, p[0], p[1]])?;
            min_rate = min_rate.min(v[0]);
        }
        if !(min_rate > 0.0) {
            return Err(FlowError::NotTransverse { t0, min_rate });
        }
        Ok(sec)
    }

    /// Unchecked constructor for slices that are known not to be sections;
    /// return maps on them report failure honestly instead of refusing to
    /// build.
    pub fn with_level(t0: f64, radius: f64) -> Self {
        Section { t0, radius }
    }

    fn sample_points(&self, model: &FlowModel) -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        if model.wraps_fiber() {
            for i in 0..5 {
                for j in 0..5 {
                    pts.push([i as f64 / 5.0, j as f64 / 5.0]);
                }
            }
        } else {
            for i in 1..=4 {
                let r = self.radius * i as f64 / 4.0;
                for j in 0..8 {
                    pts.push([r, std::f64::consts::TAU * j as f64 / 8.0]);
                }
            }
        }
        pts
    }

    pub fn embed(&self, p: [f64; 2]) -> [f64; 3] {
        [self.t0, p[0], p[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionReturn {
    pub point: [f64; 2],
    pub time: f64,
}

/// First return of the flow to the section, starting from a section point.
pub fn return_map(
    model: &FlowModel,
    section: &Section,
    p: [f64; 2],
    tol: f64,
) -> Result<SectionReturn, FlowError> {
    check_tol(tol)?;
    if model.is_suspension() {
        let q = model.apply_base(p, false);
        let point = if model.wraps_fiber() {
            [wrap_unit(q[0]), wrap_unit(q[1])]
        } else {
            q
        };
        return Ok(SectionReturn { point, time: 1.0 });
    }
    let start = section.embed(p);
    let mut integ = Integrator::new(model, start, 1.0, tol)?;
    let up = section.t0 + 1.0;
    let down = section.t0 - 1.0;
    while integ.s < RETURN_HORIZON {
        let prev = integ.advance(RETURN_HORIZON)?;
        let cur = integ.node();
        let crossed_up = prev.state[0] < up && cur.state[0] >= up;
        let crossed_down = prev.state[0] > down && cur.state[0] <= down;
        if crossed_up || crossed_down {
            let target = if crossed_up { up } else { down };
            let s_star = locate_time(&prev, &cur, target);
            let state = hermite(&prev, &cur, s_star);
            let point = if model.wraps_fiber() {
                [wrap_unit(state[1]), wrap_unit(state[2])]
            } else {
                [state[1], state[2]]
            };
            return Ok(SectionReturn {
                point,
                time: s_star,
            });
        }
    }
    Err(FlowError::NoReturn {
        horizon: RETURN_HORIZON,
    })
}

fn locate_time(a: &TrajectoryNode, b: &TrajectoryNode, target: f64) -> f64 {
    let mut lo = a.s;
    let mut hi = b.s;
    let rising = b.state[0] > a.state[0];
    for _ in 0..200 {
        if (hi - lo).abs() < EVENT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let t_mid = hermite(a, b, mid)[0];
        let below = if rising { t_mid < target } else { t_mid > target };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Periodic orbit search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// Section point fixed by the k-th return map.
    pub point: [f64; 2],
    /// Total flow time over the k returns.
    pub period: f64,
    pub returns: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSearch {
    pub orbits: Vec<PeriodicOrbit>,
    pub seeds_attempted: usize,
    pub seeds_failed: usize,
}

fn displacement(model: &FlowModel, from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    let mut d = [to[0] - from[0], to[1] - from[1]];
    if model.wraps_fiber() {
        for c in &mut d {
            *c -= c.round();
        }
    }
    d
}

fn point_distance(model: &FlowModel, a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = displacement(model, a, b);
    d[0].abs().max(d[1].abs())
}

/// Newton search for fixed points of the k-th return map, one damped run
/// per seed. Non-convergent seeds are counted, not fatal.
pub fn find_periodic_orbits(
    model: &FlowModel,
    section: &Section,
    k: u32,
    seeds: &[[f64; 2]],
    tol: f64,
) -> Result<OrbitSearch, FlowError> {
    check_tol(tol)?;
    assert!(k >= 1, "need at least one return");
    let iterate = |p: [f64; 2]| -> Result<([f64; 2], f64), FlowError> {
        let mut q = p;
        let mut time = 0.0;
        for _ in 0..k {
            let r = return_map(model, section, q, tol)?;
            q = r.point;
            time += r.time;
        }
        Ok((q, time))
    };

    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut failed = 0usize;
    'seed: for &seed in seeds {
        let mut p = seed;
        let mut converged = false;
        for _ in 0..50 {
            let f = match iterate(p) {
                Ok((q, _)) => displacement(model, p, q),
                Err(_) => {
                    failed += 1;
                    continue 'seed;
                }
            };
            let fnorm = f[0].abs().max(f[1].abs());
            if fnorm < NEWTON_TOL {
                converged = true;
                break;
            }
            // Finite-difference Jacobian of the displacement.
            let mut jac = [[0.0f64; 2]; 2];
            let mut ok = true;
            for col in 0..2 {
                let h = 1e-6 * (1.0 + p[col].abs());
                let mut ph = p;
                ph[col] += h;
                match iterate(ph) {
                    Ok((qh, _)) => {
                        let fh = displacement(model, ph, qh);
                        jac[0][col] = (fh[0] - f[0]) / h;
                        jac[1][col] = (fh[1] - f[1]) / h;
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if !ok || det.abs() < 1e-12 {
                failed += 1;
                continue 'seed;
            }
            let dx = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
            let dy = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let cand = [p[0] - lambda * dx, p[1] - lambda * dy];
                match iterate(cand) {
                    Ok((qc, _)) => {
                        let fc = displacement(model, cand, qc);
                        if fc[0].abs().max(fc[1].abs()) < fnorm {
                            p = cand;
                            improved = true;
                            break;
                        }
                    }
                    Err(_) => {}
                }
                lambda *= 0.5;
            }
            if !improved {
                failed += 1;
                continue 'seed;
            }
        }
        if !converged {
            failed += 1;
            continue;
        }
        let canonical = if model.wraps_fiber() {
            [wrap_unit(p[0]), wrap_unit(p[1])]
        } else {
            p
        };
        if orbits
            .iter()
            .any(|o| point_distance(model, o.point, canonical) < DEDUPE_TOL)
        {
            continue;
        }
        let (_, period) = iterate(canonical).expect("converged point must iterate");
        orbits.push(PeriodicOrbit {
            point: canonical,
            period,
            returns: k,
        });
    }
    orbits.sort_by(|a, b| {
        a.point
            .partial_cmp(&b.point)
            .expect("orbit points are finite")
    });
    Ok(OrbitSearch {
        orbits,
        seeds_attempted: seeds.len(),
        seeds_failed: failed,
    })
}

/// Evenly spread seed grid over the section window.
pub fn seed_grid(model: &FlowModel, section: &Section, per_axis: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(per_axis * per_axis);
    if model.wraps_fiber() {
        for i in 0..per_axis {
            for j in 0..per_axis {
                out.push([
                    (i as f64 + 0.513) / per_axis as f64,
                    (j as f64 + 0.271) / per_axis as f64,
                ]);
            }
        }
    } else {
        for i in 0..per_axis {
            for j in 0..per_axis {
                out.push([
                    section.radius * (2.0 * (i as f64 + 0.5) / per_axis as f64 - 1.0),
                    section.radius * (2.0 * (j as f64 + 0.5) / per_axis as f64 - 1.0),
                ]);
            }
        }
    }
    out
}
