//! Singular contact forms in tubular chart coordinates and their smoothing.
//!
//! A form lives on R/Z_t x D_(r,theta) as alpha = u dt + a dr + b dtheta.
//! The flattening chart rho(t,r,theta) = (t, g(r), theta) presses a
//! neighborhood of the core onto itself with a map that is infinitely flat
//! at r = 0; the smoothed form adds chi(r) dtheta on top of the pullback.
//! Everything downstream needs only two pointwise quantities: the volume
//! density G + H_chi and the Reeb direction (F_t, F_r, F_theta), both read
//! off the pulled-back components and their first derivatives. Derivatives
//! of components are always taken numerically (central difference with one
//! extrapolation step) because the forms are merely Lipschitz at the core.

use crate::expr::{Binding, EvalError, Expression, ParseError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub mod fixtures;

/// Step for all derivative stencils on chart components.
pub const DERIV_STEP: f64 = 1e-4;

const LADDER_DEPTH: i32 = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContactError {
    #[error("component evaluation failed at (t={t}, r={r}, th={th}): {source}")]
    Eval {
        t: f64,
        r: f64,
        th: f64,
        source: EvalError,
    },
    #[error("volume density {density} is not positive at (t={t}, r={r}, th={th})")]
    NonContactPoint {
        t: f64,
        r: f64,
        th: f64,
        density: f64,
    },
    #[error("no amplitude on the ladder 2^-1 .. 2^-{LADDER_DEPTH} yields a contact form")]
    NoEpsilonFound,
    #[error("grid needs at least 8 samples per axis, got {nt}x{nr}x{nth}")]
    GridTooCoarse { nt: usize, nr: usize, nth: usize },
    #[error("radial range [{r_min}, {r_max}] is invalid")]
    BadRadialRange { r_min: f64, r_max: f64 },
    #[error("smoothing profile rejected: {0}")]
    BadProfile(String),
    #[error("flattening exponent must be positive, got {0}")]
    BadChartExponent(f64),
    #[error("comparison constant must lie in (0,1), got {0}")]
    BadComparisonConstant(f64),
    #[error("annulus radius must lie in (0,1), got {0}")]
    BadAnnulusRadius(f64),
    #[error("exponent fit needs at least two radii with nonzero flux")]
    FluxFitUnderdetermined,
}

// ---------------------------------------------------------------------------
// C-infinity splice machinery
// ---------------------------------------------------------------------------

fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn bump_prime(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp() / (x * x)
    }
}

/// Smooth step: 0 for x <= 0, 1 for x >= 1, strictly increasing between.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = bump(x);
        a / (a + bump(1.0 - x))
    }
}

pub fn smooth_step_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let a = bump(x);
        let b = bump(1.0 - x);
        (bump_prime(x) * b + a * bump_prime(1.0 - x)) / ((a + b) * (a + b))
    }
}

// ---------------------------------------------------------------------------
// Smoothing chart
// ---------------------------------------------------------------------------

const SPLICE_LO: f64 = 0.8;
const SPLICE_HI: f64 = 0.95;

/// Radial flattening g of the chart map rho(t,r,theta) = (t, g(r), theta).
///
/// The built-in family g_c(r) = r exp(1 - r^-c) is infinitely flat at 0 and
/// is spliced to the identity over [0.8, 0.95], so g(r) = r near the chart
/// boundary. `Identity` keeps the singular chart as-is for baseline tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SmoothingChart {
    Identity,
    Flat { c: f64 },
}

impl SmoothingChart {
    pub fn flat(c: f64) -> Result<Self, ContactError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(ContactError::BadChartExponent(c));
        }
        Ok(SmoothingChart::Flat { c })
    }

    pub fn standard() -> Self {
        SmoothingChart::Flat { c: 1.0 }
    }

    fn core(c: f64, r: f64) -> f64 {
        let e = 1.0 - r.powf(-c);
        if e < -700.0 {
            0.0
        } else {
            r * e.exp()
        }
    }

    fn core_prime(c: f64, r: f64) -> f64 {
        let rc = r.powf(-c);
        let e = 1.0 - rc;
        if e < -700.0 {
            0.0
        } else {
            e.exp() * (1.0 + c * rc)
        }
    }

    pub fn g(&self, r: f64) -> f64 {
        match *self {
            SmoothingChart::Identity => r,
            SmoothingChart::Flat { c } => {
                if r <= 0.0 {
                    0.0
                } else if r >= SPLICE_HI {
                    r
                } else if r <= SPLICE_LO {
                    Self::core(c, r)
                } else {
                    let w = smooth_step((r - SPLICE_LO) / (SPLICE_HI - SPLICE_LO));
                    (1.0 - w) * Self::core(c, r) + w * r
                }
            }
        }
    }

    pub fn g_prime(&self, r: f64) -> f64 {
        match *self {
            SmoothingChart::Identity => 1.0,
            SmoothingChart::Flat { c } => {
                if r <= 0.0 {
                    0.0
                } else if r >= SPLICE_HI {
                    1.0
                } else if r <= SPLICE_LO {
                    Self::core_prime(c, r)
                } else {
                    let x = (r - SPLICE_LO) / (SPLICE_HI - SPLICE_LO);
                    let w = smooth_step(x);
                    let wp = smooth_step_prime(x) / (SPLICE_HI - SPLICE_LO);
                    // Positive: both blended slopes are positive and the
                    // splice correction multiplies r - g_c(r) >= 0.
                    (1.0 - w) * Self::core_prime(c, r) + w + wp * (r - Self::core(c, r))
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Smoothing function
// ---------------------------------------------------------------------------

/// Radial profile chi with chi(r) = A r^2 on the core and chi = 0 outside
/// r = 1 - eps_out, C-infinity in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingFunction {
    pub amplitude: f64,
    pub eps_in: f64,
    pub eps_out: f64,
}

impl SmoothingFunction {
    pub fn new(amplitude: f64, eps_in: f64, eps_out: f64) -> Result<Self, ContactError> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(ContactError::BadProfile(format!(
                "amplitude must be nonnegative, got {amplitude}"
            )));
        }
        if !(eps_in > 0.0 && eps_out > 0.0 && eps_in < 1.0 - eps_out) {
            return Err(ContactError::BadProfile(format!(
                "need 0 < eps_in < 1 - eps_out, got eps_in={eps_in} eps_out={eps_out}"
            )));
        }
        Ok(Self {
            amplitude,
            eps_in,
            eps_out,
        })
    }

    /// Default profile used by the fixture suite.
    pub fn standard() -> Self {
        Self {
            amplitude: 0.1,
            eps_in: 0.2,
            eps_out: 0.1,
        }
    }

    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            eps_in: 0.2,
            eps_out: 0.1,
        }
    }

    /// Amplitude rescaling; chi depends linearly on the amplitude.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitude: self.amplitude * factor,
            ..*self
        }
    }

    fn cutoff(&self, r: f64) -> (f64, f64) {
        let width = (1.0 - self.eps_out) - self.eps_in;
        let x = (r - self.eps_in) / width;
        (1.0 - smooth_step(x), -smooth_step_prime(x) / width)
    }

    pub fn chi(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let (m, _) = self.cutoff(r);
        self.amplitude * r * r * m
    }

    pub fn chi_prime(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let (m, mp) = self.cutoff(r);
        self.amplitude * (2.0 * r * m + r * r * mp)
    }
}

// ---------------------------------------------------------------------------
// Chart forms and pullbacks
// ---------------------------------------------------------------------------

/// alpha = u dt + a dr + b dtheta with components given as expressions in
/// (t, r, th). The Lipschitz bound is declared metadata, not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartContactForm {
    pub u: Expression,
    pub a: Expression,
    pub b: Expression,
    pub lipschitz_bound: Option<f64>,
}

impl ChartContactForm {
    pub fn from_strings(u: &str, a: &str, b: &str) -> Result<Self, ParseError> {
        Ok(Self {
            u: crate::expr::parse(u)?,
            a: crate::expr::parse(a)?,
            b: crate::expr::parse(b)?,
            lipschitz_bound: None,
        })
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    /// Raw components (u, a, b) at a chart point, before any pullback.
    pub fn raw_components(&self, t: f64, r: f64, th: f64) -> Result<[f64; 3], ContactError> {
        let bind = Binding::chart(t, r, th);
        let wrap = |e: EvalError| ContactError::Eval {
            t,
            r,
            th,
            source: e,
        };
        Ok([
            self.u.eval(&bind).map_err(wrap)?,
            self.a.eval(&bind).map_err(wrap)?,
            self.b.eval(&bind).map_err(wrap)?,
        ])
    }
}

/// Components of rho^* alpha: (u(rho), g'(r) a(rho), b(rho)).
pub fn pullback_components(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    t: f64,
    r: f64,
    th: f64,
) -> Result<[f64; 3], ContactError> {
    let g = chart.g(r);
    let [u, a, b] = form.raw_components(t, g, th)?;
    Ok([u, chart.g_prime(r) * a, b])
}

/// Components of the smoothed form alpha_chi = rho^* alpha + chi(r) dtheta.
pub fn smoothed_components(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    t: f64,
    r: f64,
    th: f64,
) -> Result<[f64; 3], ContactError> {
    let mut c = pullback_components(form, chart, t, r, th)?;
    c[2] += chi.chi(r);
    Ok(c)
}

// ---------------------------------------------------------------------------
// Derivative entries of a 1-form
// ---------------------------------------------------------------------------

/// Exterior derivative entries: d(omega) = e_tr dt^dr + e_rth dr^dth +
/// e_tht dth^dt for omega with components (p, q, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DformEntries {
    pub e_tr: f64,
    pub e_rth: f64,
    pub e_tht: f64,
}

fn vec_deriv<F>(f: F, x: f64, h: f64) -> Result<[f64; 3], ContactError>
where
    F: Fn(f64) -> Result<[f64; 3], ContactError>,
{
    let d = |hh: f64| -> Result<[f64; 3], ContactError> {
        let plus = f(x + hh)?;
        let minus = f(x - hh)?;
        Ok([
            (plus[0] - minus[0]) / (2.0 * hh),
            (plus[1] - minus[1]) / (2.0 * hh),
            (plus[2] - minus[2]) / (2.0 * hh),
        ])
    };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok([
        (4.0 * fine[0] - coarse[0]) / 3.0,
        (4.0 * fine[1] - coarse[1]) / 3.0,
        (4.0 * fine[2] - coarse[2]) / 3.0,
    ])
}

/// Numeric exterior derivative of a component field at a point.
pub fn dform_entries<F>(f: F, t: f64, r: f64, th: f64, h: f64) -> Result<DformEntries, ContactError>
where
    F: Fn(f64, f64, f64) -> Result<[f64; 3], ContactError>,
{
    let dt = vec_deriv(|x| f(x, r, th), t, h)?;
    let dr = vec_deriv(|x| f(t, x, th), r, h)?;
    let dth = vec_deriv(|x| f(t, r, x), th, h)?;
    Ok(DformEntries {
        e_tr: dt[1] - dr[0],
        e_rth: dr[2] - dth[1],
        e_tht: dth[0] - dt[2],
    })
}

// ---------------------------------------------------------------------------
// Volume decomposition and Reeb field
// ---------------------------------------------------------------------------

/// The smoothed volume density splits as G + H_chi where G is the density
/// of rho^*alpha ^ rho^*dalpha and H_chi = chi' u(rho) + chi e_tr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeDecomposition {
    pub g: f64,
    pub h_chi: f64,
}

impl VolumeDecomposition {
    pub fn density(&self) -> f64 {
        self.g + self.h_chi
    }
}

pub fn volume_decomposition(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    t: f64,
    r: f64,
    th: f64,
) -> Result<VolumeDecomposition, ContactError> {
    let [p, q, s] = pullback_components(form, chart, t, r, th)?;
    let e = dform_entries(
        |tt, rr, hh| pullback_components(form, chart, tt, rr, hh),
        t,
        r,
        th,
        DERIV_STEP,
    )?;
    Ok(VolumeDecomposition {
        g: p * e.e_rth + q * e.e_tht + s * e.e_tr,
        h_chi: chi.chi_prime(r) * p + chi.chi(r) * e.e_tr,
    })
}

/// Reeb data at a point: the velocity (t', r', theta') and the residuals of
/// the defining identities, evaluated with an independent derivative route
/// (the smoothing profile is differenced inside the stencil rather than
/// substituted analytically).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReebField {
    pub velocity: [f64; 3],
    pub residual_alpha: f64,
    pub residual_dalpha: f64,
}

/// Velocity of the smoothed Reeb field alone; used by the integrator,
/// which has no need for the residual stencils.
pub fn reeb_velocity(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    t: f64,
    r: f64,
    th: f64,
) -> Result<[f64; 3], ContactError> {
    let [p, q, s] = pullback_components(form, chart, t, r, th)?;
    let e = dform_entries(
        |tt, rr, hh| pullback_components(form, chart, tt, rr, hh),
        t,
        r,
        th,
        DERIV_STEP,
    )?;
    let g = p * e.e_rth + q * e.e_tht + s * e.e_tr;
    let h = chi.chi_prime(r) * p + chi.chi(r) * e.e_tr;
    let denom = g + h;
    if denom <= 0.0 {
        return Err(ContactError::NonContactPoint {
            t,
            r,
            th,
            density: denom,
        });
    }
    Ok([
        (e.e_rth + chi.chi_prime(r)) / denom,
        e.e_tht / denom,
        e.e_tr / denom,
    ])
}

pub fn reeb_field(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    t: f64,
    r: f64,
    th: f64,
) -> Result<ReebField, ContactError> {
    let velocity = reeb_velocity(form, chart, chi, t, r, th)?;

    let sm = |tt: f64, rr: f64, hh: f64| smoothed_components(form, chart, chi, tt, rr, hh);
    let [sp, sq, ss] = sm(t, r, th)?;
    let residual_alpha =
        (sp * velocity[0] + sq * velocity[1] + ss * velocity[2] - 1.0).abs();
    let ee = dform_entries(sm, t, r, th, DERIV_STEP)?;
    let ins_t = -ee.e_tr * velocity[1] + ee.e_tht * velocity[2];
    let ins_r = ee.e_tr * velocity[0] - ee.e_rth * velocity[2];
    let ins_th = ee.e_rth * velocity[1] - ee.e_tht * velocity[0];
    let residual_dalpha = ins_t.abs().max(ins_r.abs()).max(ins_th.abs());

    Ok(ReebField {
        velocity,
        residual_alpha,
        residual_dalpha,
    })
}

// ---------------------------------------------------------------------------
// Grid verification
// ---------------------------------------------------------------------------

/// Sampling grid: t in [0,1), theta in [0,2pi), r in [r_min, r_max]
/// inclusive. `delta` splits the near-axis band (slope fit) from the bulk
/// (minimum density).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nt: usize,
    pub nr: usize,
    pub nth: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub delta: f64,
}

impl GridSpec {
    pub fn new(
        nt: usize,
        nr: usize,
        nth: usize,
        r_min: f64,
        r_max: f64,
        delta: f64,
    ) -> Result<Self, ContactError> {
        if nt < 8 || nr < 8 || nth < 8 {
            return Err(ContactError::GridTooCoarse { nt, nr, nth });
        }
        if !(r_min > 0.0 && r_min < r_max && r_max <= 1.0) {
            return Err(ContactError::BadRadialRange { r_min, r_max });
        }
        Ok(Self {
            nt,
            nr,
            nth,
            r_min,
            r_max,
            delta,
        })
    }

    pub fn standard() -> Self {
        Self {
            nt: 16,
            nr: 16,
            nth: 16,
            r_min: 0.01,
            r_max: 0.95,
            delta: 0.2,
        }
    }

    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.nt * self.nr * self.nth);
        for i in 0..self.nt {
            let t = i as f64 / self.nt as f64;
            for j in 0..self.nr {
                let r = self.r_min
                    + (self.r_max - self.r_min) * j as f64 / (self.nr - 1) as f64;
                for k in 0..self.nth {
                    let th = std::f64::consts::TAU * k as f64 / self.nth as f64;
                    out.push((t, r, th));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub pass: bool,
    /// Minimum of G + H_chi over cells with r >= delta.
    pub min_density: f64,
    /// Largest c with G + H_chi >= c r on the sampled near-axis band;
    /// absent when the grid has no samples below delta.
    pub axis_slope: Option<f64>,
    pub worst_point: [f64; 3],
    pub cells_checked: usize,
}

pub fn verify_contact(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    grid: &GridSpec,
) -> Result<ContactReport, ContactError> {
    let pts = grid.points();
    let rows: Vec<(f64, f64, f64, f64)> = pts
        .par_iter()
        .map(|&(t, r, th)| {
            volume_decomposition(form, chart, chi, t, r, th).map(|v| (t, r, th, v.density()))
        })
        .collect::<Result<_, _>>()?;

    let mut min_density = f64::INFINITY;
    let mut worst = [0.0; 3];
    let mut axis_slope: Option<f64> = None;
    for &(t, r, th, den) in &rows {
        if r < grid.delta {
            let ratio = den / r;
            if axis_slope.map_or(true, |c| ratio < c) {
                axis_slope = Some(ratio);
            }
        } else if den < min_density {
            min_density = den;
            worst = [t, r, th];
        }
    }
    let pass = min_density > 0.0 && axis_slope.map_or(true, |c| c > 0.0);
    Ok(ContactReport {
        pass,
        min_density,
        axis_slope,
        worst_point: worst,
        cells_checked: rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCertificate {
    pub epsilon: f64,
    pub ladder_exponent: i32,
    pub report: ContactReport,
}

/// Walk amplitudes 2^-1, 2^-2, ... downward; the first pass is the largest
/// verified amplitude on the ladder.
pub fn find_epsilon(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    profile: &SmoothingFunction,
    grid: &GridSpec,
) -> Result<EpsilonCertificate, ContactError> {
    for exp in 1..=LADDER_DEPTH {
        let eps = 2f64.powi(-exp);
        let report = verify_contact(form, chart, &profile.scaled(eps), grid)?;
        if report.pass {
            return Ok(EpsilonCertificate {
                epsilon: eps,
                ladder_exponent: exp,
                report,
            });
        }
    }
    Err(ContactError::NoEpsilonFound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolatingCell {
    pub point: [f64; 3],
    pub smoothed_density: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeInequalityReport {
    pub pass: bool,
    pub constant: f64,
    pub cells_checked: usize,
    /// First violations in grid order, capped at 32.
    pub violations: Vec<ViolatingCell>,
}

/// Pointwise check of density(alpha_chi) >= C * density(rho^* alpha).
pub fn volume_inequality_check(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    constant: f64,
    grid: &GridSpec,
) -> Result<VolumeInequalityReport, ContactError> {
    if !(constant > 0.0 && constant < 1.0) {
        return Err(ContactError::BadComparisonConstant(constant));
    }
    let pts = grid.points();
    let rows: Vec<Option<ViolatingCell>> = pts
        .par_iter()
        .map(|&(t, r, th)| {
            let v = volume_decomposition(form, chart, chi, t, r, th)?;
            let lhs = v.density();
            let floor = constant * v.g;
            Ok(if lhs < floor {
                Some(ViolatingCell {
                    point: [t, r, th],
                    smoothed_density: lhs,
                    floor,
                })
            } else {
                None
            })
        })
        .collect::<Result<_, ContactError>>()?;
    let violations: Vec<ViolatingCell> = rows.into_iter().flatten().take(32).collect();
    Ok(VolumeInequalityReport {
        pass: violations.is_empty(),
        constant,
        cells_checked: pts.len(),
        violations,
    })
}

// ---------------------------------------------------------------------------
// Flux, distances, Gray bound
// ---------------------------------------------------------------------------

/// Integral of the raw form over the circle r = eps in the disk t = t0;
/// only the dtheta component survives. 256-point rectangle rule, which is
/// exact for trigonometric polynomials of the fixture degree.
pub fn annulus_flux(form: &ChartContactForm, t0: f64, eps: f64) -> Result<f64, ContactError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ContactError::BadAnnulusRadius(eps));
    }
    const N: usize = 256;
    let mut sum = 0.0;
    for k in 0..N {
        let th = std::f64::consts::TAU * k as f64 / N as f64;
        let [_, _, b] = form.raw_components(t0, eps, th)?;
        sum += b;
    }
    Ok(sum * std::f64::consts::TAU / N as f64)
}

/// Least-squares slope of log |flux| against log eps.
pub fn flux_exponent(
    form: &ChartContactForm,
    t0: f64,
    radii: &[f64],
) -> Result<f64, ContactError> {
    let mut pts = Vec::new();
    for &eps in radii {
        let f = annulus_flux(form, t0, eps)?;
        if f.abs() > 0.0 {
            pts.push((eps.ln(), f.abs().ln()));
        }
    }
    if pts.len() < 2 {
        return Err(ContactError::FluxFitUnderdetermined);
    }
    Ok(crate::numeric::ls_slope(&pts))
}

/// Anything with chart components; lets distances compare pullbacks against
/// smoothed forms uniformly.
pub trait FormLike: Sync {
    fn components(&self, t: f64, r: f64, th: f64) -> Result<[f64; 3], ContactError>;
}

pub struct PulledBack<'a> {
    pub form: &'a ChartContactForm,
    pub chart: &'a SmoothingChart,
}

impl FormLike for PulledBack<'_> {
    fn components(&self, t: f64, r: f64, th: f64) -> Result<[f64; 3], ContactError> {
        pullback_components(self.form, self.chart, t, r, th)
    }
}

pub struct Smoothed<'a> {
    pub form: &'a ChartContactForm,
    pub chart: &'a SmoothingChart,
    pub chi: &'a SmoothingFunction,
}

impl FormLike for Smoothed<'_> {
    fn components(&self, t: f64, r: f64, th: f64) -> Result<[f64; 3], ContactError> {
        smoothed_components(self.form, self.chart, self.chi, t, r, th)
    }
}

/// C0 distances in the Whitney sense: sup of component differences of the
/// forms and of their numeric exterior derivatives.
pub fn whitney_distance<F1: FormLike, F2: FormLike>(
    f1: &F1,
    f2: &F2,
    grid: &GridSpec,
) -> Result<(f64, f64), ContactError> {
    let pts = grid.points();
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&(t, r, th)| {
            let a = f1.components(t, r, th)?;
            let b = f2.components(t, r, th)?;
            let d0 = (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
            let ea = dform_entries(|tt, rr, hh| f1.components(tt, rr, hh), t, r, th, DERIV_STEP)?;
            let eb = dform_entries(|tt, rr, hh| f2.components(tt, rr, hh), t, r, th, DERIV_STEP)?;
            let d1 = (ea.e_tr - eb.e_tr)
                .abs()
                .max((ea.e_rth - eb.e_rth).abs())
                .max((ea.e_tht - eb.e_tht).abs());
            Ok((d0, d1))
        })
        .collect::<Result<_, ContactError>>()?;
    Ok(rows
        .into_iter()
        .fold((0.0, 0.0), |(m0, m1), (d0, d1)| (m0.max(d0), m1.max(d1))))
}

/// Admissible lower bound for the log of a cofinal scaling constant:
/// max over the grid of 4 |theta-component of the pulled-back Reeb field|,
/// computed with chi = 0.
pub fn gray_bound(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    grid: &GridSpec,
) -> Result<f64, ContactError> {
    let zero = SmoothingFunction::zero();
    let pts = grid.points();
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|&(t, r, th)| reeb_field(form, chart, &zero, t, r, th).map(|f| 4.0 * f.velocity[2].abs()))
        .collect::<Result<_, _>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Sup of the two Reeb residuals over the grid.
pub fn residual_sup(
    form: &ChartContactForm,
    chart: &SmoothingChart,
    chi: &SmoothingFunction,
    grid: &GridSpec,
) -> Result<(f64, f64), ContactError> {
    let pts = grid.points();
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&(t, r, th)| {
            reeb_field(form, chart, chi, t, r, th).map(|f| (f.residual_alpha, f.residual_dalpha))
        })
        .collect::<Result<_, _>>()?;
    Ok(rows
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a.max(x), b.max(y))))
}

#[cfg(test)]
mod tests {
    use super::fixtures;
    use super::*;

    fn grid_small() -> GridSpec {
        GridSpec::new(8, 8, 8, 0.05, 0.95, 0.2).unwrap()
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(-0.5), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        let mut prev = 0.0;
        for i in 1..=20 {
            let x = i as f64 / 20.0;
            let s = smooth_step(x);
            assert!(s >= prev, "not monotone at {x}");
            assert!((smooth_step(1.0 - x) + s - 1.0).abs() < 1e-15);
            prev = s;
        }
        assert!(smooth_step_prime(0.5) > 0.0);
        assert_eq!(smooth_step_prime(0.0), 0.0);
    }

    #[test]
    fn chart_is_flat_monotone_and_identity_near_edge() {
        let ch = SmoothingChart::standard();
        assert_eq!(ch.g(0.0), 0.0);
        // Infinitely flat at the origin: vanishes faster than r^3.
        assert!(ch.g(0.05) / 0.05_f64.powi(3) < 1e-5);
        for i in 0..40 {
            let r = 0.02 + 0.96 * i as f64 / 39.0;
            assert!(ch.g_prime(r) > 0.0, "g' <= 0 at r={r}");
        }
        assert_eq!(ch.g(0.95), 0.95);
        assert_eq!(ch.g(0.97), 0.97);
        assert_eq!(ch.g_prime(0.97), 1.0);
        // Numeric slope agrees with the analytic one through the splice;
        // the tolerance absorbs the large third derivative of the bump.
        for r in [0.3, 0.6, 0.82, 0.9, 0.94] {
            let h = 1e-5;
            let num = (ch.g(r + h) - ch.g(r - h)) / (2.0 * h);
            assert!((num - ch.g_prime(r)).abs() < 1e-6, "slope mismatch at {r}");
        }
    }

    #[test]
    fn chi_profile_shape() {
        let chi = SmoothingFunction::standard();
        for r in [0.05, 0.1, 0.19] {
            assert!((chi.chi(r) - 0.1 * r * r).abs() < 1e-15);
            assert!((chi.chi_prime(r) - 0.2 * r).abs() < 1e-15);
        }
        assert_eq!(chi.chi(0.9), 0.0);
        assert_eq!(chi.chi(0.95), 0.0);
        assert_eq!(chi.chi_prime(0.95), 0.0);
        for i in 0..30 {
            let r = 0.05 + 0.9 * i as f64 / 29.0;
            assert!(chi.chi(r) >= 0.0);
            let h = 1e-5;
            let num = (chi.chi(r + h) - chi.chi(r - h)) / (2.0 * h);
            assert!((num - chi.chi_prime(r)).abs() < 1e-7, "chi' mismatch at {r}");
        }
        assert!((chi.scaled(0.5).chi(0.1) - 0.5 * chi.chi(0.1)).abs() < 1e-18);
        assert!(SmoothingFunction::new(-1.0, 0.2, 0.1).is_err());
        assert!(SmoothingFunction::new(1.0, 0.95, 0.1).is_err());
    }

    #[test]
    fn pullback_examples() {
        let std_form = fixtures::std_form();
        let id = SmoothingChart::Identity;
        let [u, a, b] = pullback_components(&std_form, &id, 0.3, 0.5, 1.0).unwrap();
        assert_eq!([u, a, b], [1.0, 0.0, 0.25]);

        let flat = SmoothingChart::standard();
        let g = flat.g(0.5);
        let [u2, a2, b2] = pullback_components(&std_form, &flat, 0.3, 0.5, 1.0).unwrap();
        assert_eq!(u2, 1.0);
        assert_eq!(a2, 0.0);
        assert!((b2 - g * g).abs() < 1e-15);

        let bp = fixtures::bp();
        let [u3, a3, b3] = pullback_components(&bp, &flat, 0.0, 0.5, 0.0).unwrap();
        assert_eq!(u3, 1.0);
        assert!(a3.abs() < 1e-15);
        assert!((b3 - 2.0 * g * g).abs() < 1e-15);
    }

    #[test]
    fn volume_examples() {
        let id = SmoothingChart::Identity;
        let chi0 = SmoothingFunction::zero();
        let chi = SmoothingFunction::standard();
        for &(t, r, th) in &[(0.0, 0.3, 0.7), (0.4, 0.5, 2.0), (0.9, 0.15, 5.0)] {
            let v = volume_decomposition(&fixtures::std_form(), &id, &chi0, t, r, th).unwrap();
            assert!((v.g - 2.0 * r).abs() < 1e-9, "G != 2r at r={r}");
            assert_eq!(v.h_chi, 0.0);

            let v2 = volume_decomposition(&fixtures::std_form(), &id, &chi, t, r, th).unwrap();
            assert!((v2.h_chi - chi.chi_prime(r)).abs() < 1e-9);

            let vb = volume_decomposition(&fixtures::bp(), &id, &chi, t, r, th).unwrap();
            assert!((vb.g - 2.0 * r).abs() < 1e-9, "bp G != 2r at r={r}");
            assert!((vb.h_chi - chi.chi_prime(r)).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothed_density_difference_is_h() {
        // Independent route: difference the smoothed components wholesale
        // and compare against the split G + H_chi.
        let chart = SmoothingChart::standard();
        let chi = SmoothingFunction::standard();
        let form = fixtures::bp_pert();
        for &(t, r, th) in &[(0.1, 0.3, 0.5), (0.6, 0.55, 2.4), (0.25, 0.8, 4.0)] {
            let [p, q, s] = smoothed_components(&form, &chart, &chi, t, r, th).unwrap();
            let ee = dform_entries(
                |tt, rr, hh| smoothed_components(&form, &chart, &chi, tt, rr, hh),
                t,
                r,
                th,
                DERIV_STEP,
            )
            .unwrap();
            let smoothed = p * ee.e_rth + q * ee.e_tht + s * ee.e_tr;
            let v = volume_decomposition(&form, &chart, &chi, t, r, th).unwrap();
            assert!(
                (smoothed - v.g - v.h_chi).abs() < 1e-6,
                "split mismatch at ({t},{r},{th})"
            );
        }
    }

    #[test]
    fn reeb_standard_and_branched_are_vertical() {
        let id = SmoothingChart::Identity;
        let flat = SmoothingChart::standard();
        let chi0 = SmoothingFunction::zero();
        let chi = SmoothingFunction::standard();
        for &(t, r, th) in &[(0.0, 0.2, 0.0), (0.3, 0.5, 1.3), (0.8, 0.7, 3.9)] {
            let f = reeb_field(&fixtures::std_form(), &id, &chi0, t, r, th).unwrap();
            assert!((f.velocity[0] - 1.0).abs() < 1e-9);
            assert_eq!(f.velocity[1], 0.0);
            assert_eq!(f.velocity[2], 0.0);

            // t-independence makes the off-vertical stencils exactly zero,
            // so the branched form rides the core for every profile.
            for chart in [&id, &flat] {
                let fb = reeb_field(&fixtures::bp(), chart, &chi, t, r, th).unwrap();
                assert!((fb.velocity[0] - 1.0).abs() < 1e-12);
                assert_eq!(fb.velocity[1], 0.0);
                assert_eq!(fb.velocity[2], 0.0);
                assert!(fb.residual_alpha < 1e-12);
                assert!(fb.residual_dalpha < 1e-12);
            }
        }
    }

    #[test]
    fn reeb_residuals_small_on_grid() {
        let chart = SmoothingChart::standard();
        let chi = SmoothingFunction::standard().scaled(0.5);
        for form in [fixtures::std_form(), fixtures::bp(), fixtures::bp_pert()] {
            let (ra, rd) = residual_sup(&form, &chart, &chi, &grid_small()).unwrap();
            assert!(ra < 1e-9, "alpha residual {ra}");
            assert!(rd < 1e-7, "dalpha residual {rd}");
        }
    }

    #[test]
    fn axis_tangency_near_core() {
        let chart = SmoothingChart::standard();
        let chi = SmoothingFunction::standard();
        for form in [fixtures::std_form(), fixtures::bp()] {
            for th in [0.0, 1.0, 2.5, 4.4] {
                let f = reeb_field(&form, &chart, &chi, 0.3, 0.01, th).unwrap();
                assert_eq!(f.velocity[1].abs() + f.velocity[2].abs() * 0.01, 0.0);
            }
        }
    }

    #[test]
    fn reeb_rejects_negative_density() {
        let err = reeb_field(
            &fixtures::neg_axis(),
            &SmoothingChart::Identity,
            &SmoothingFunction::zero(),
            0.0,
            0.4,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, ContactError::NonContactPoint { .. }));
    }

    #[test]
    fn verify_contact_core_profile_slope() {
        let rep = verify_contact(
            &fixtures::std_form(),
            &SmoothingChart::standard(),
            &SmoothingFunction::standard(),
            &GridSpec::standard(),
        )
        .unwrap();
        assert!(rep.pass);
        assert!(rep.min_density > 0.0);
        let c = rep.axis_slope.unwrap();
        // chi' = 0.2 r dominates the flattened density near the axis.
        assert!((c - 0.2).abs() < 0.01, "slope {c}");
    }

    #[test]
    fn verify_contact_rejects_negative_axis_fixture() {
        let rep = verify_contact(
            &fixtures::neg_axis(),
            &SmoothingChart::standard(),
            &SmoothingFunction::standard(),
            &GridSpec::standard(),
        )
        .unwrap();
        assert!(!rep.pass);
        assert!(rep.min_density < 0.0);
    }

    #[test]
    fn epsilon_ladder_finds_half_for_catalogued_forms() {
        let grid = GridSpec::standard();
        let profile = SmoothingFunction::standard();
        let chart = SmoothingChart::standard();
        for form in [fixtures::std_form(), fixtures::bp()] {
            let cert = find_epsilon(&form, &chart, &profile, &grid).unwrap();
            assert_eq!(cert.epsilon, 0.5);
            assert!(cert.report.pass);
            // Halving stays on the contact side of the convex segment.
            let again = verify_contact(
                &form,
                &chart,
                &profile.scaled(cert.epsilon / 2.0),
                &grid,
            )
            .unwrap();
            assert!(again.pass);
        }
        assert!(matches!(
            find_epsilon(&fixtures::neg_axis(), &chart, &profile, &grid),
            Err(ContactError::NoEpsilonFound)
        ));
    }

    #[test]
    fn volume_inequality_examples() {
        let chart = SmoothingChart::standard();
        let grid = grid_small();
        let zero = SmoothingFunction::zero();
        let rep = volume_inequality_check(&fixtures::std_form(), &chart, &zero, 0.999, &grid)
            .unwrap();
        assert!(rep.pass, "equality case must pass");

        let small = SmoothingFunction::standard().scaled(0.25);
        let rep2 =
            volume_inequality_check(&fixtures::std_form(), &chart, &small, 0.9, &grid).unwrap();
        assert!(rep2.pass);

        let huge = SmoothingFunction::new(1000.0, 0.2, 0.1).unwrap();
        let rep3 =
            volume_inequality_check(&fixtures::std_form(), &chart, &huge, 0.99, &grid).unwrap();
        assert!(!rep3.pass);
        assert!(!rep3.violations.is_empty());

        assert!(matches!(
            volume_inequality_check(&fixtures::std_form(), &chart, &zero, 1.5, &grid),
            Err(ContactError::BadComparisonConstant(_))
        ));
    }

    #[test]
    fn flux_values_and_exponent() {
        let f = annulus_flux(&fixtures::std_form(), 0.0, 0.1).unwrap();
        assert!((f - std::f64::consts::TAU * 0.01).abs() < 1e-12);

        // theta-average of 2 r^2 cos^2(2 theta) is r^2.
        let fb = annulus_flux(&fixtures::bp(), 0.3, 0.2).unwrap();
        assert!((fb - std::f64::consts::TAU * 0.04).abs() < 1e-12);

        let slope = flux_exponent(&fixtures::bp(), 0.0, &[0.2, 0.1, 0.05, 0.025]).unwrap();
        assert!((slope - 2.0).abs() < 1e-9, "slope {slope}");

        // Declared Lipschitz bound dominates the small-radius flux.
        let lip = fixtures::bp().lipschitz_bound.unwrap();
        for eps in [0.1, 0.05, 0.02] {
            let v = annulus_flux(&fixtures::bp(), 0.5, eps).unwrap().abs();
            assert!(v <= lip * std::f64::consts::TAU * eps * 1.1);
        }
    }

    #[test]
    fn whitney_distances() {
        let chart = SmoothingChart::standard();
        let form = fixtures::std_form();
        let grid = grid_small();
        let base = PulledBack {
            form: &form,
            chart: &chart,
        };
        let zero_gap = whitney_distance(&base, &base, &grid).unwrap();
        assert_eq!(zero_gap, (0.0, 0.0));

        let chi = SmoothingFunction::standard();
        let sm = Smoothed {
            form: &form,
            chart: &chart,
            chi: &chi,
        };
        let (d0, d1) = whitney_distance(&base, &sm, &grid).unwrap();
        let max_chi = grid
            .points()
            .iter()
            .map(|&(_, r, _)| chi.chi(r))
            .fold(0.0, f64::max);
        assert!((d0 - max_chi).abs() < 1e-15);
        let max_chi_p = grid
            .points()
            .iter()
            .map(|&(_, r, _)| chi.chi_prime(r).abs())
            .fold(0.0, f64::max);
        assert!((d1 - max_chi_p).abs() < 1e-9);

        // Distances scale linearly with the profile amplitude.
        let half = chi.scaled(0.5);
        let smh = Smoothed {
            form: &form,
            chart: &chart,
            chi: &half,
        };
        let (d0h, d1h) = whitney_distance(&base, &smh, &grid).unwrap();
        assert!((d0 / d0h - 2.0).abs() < 1e-9);
        assert!((d1 / d1h - 2.0).abs() < 1e-6);
    }

    #[test]
    fn gray_bound_fixtures() {
        let chart = SmoothingChart::standard();
        let grid = grid_small();
        assert_eq!(gray_bound(&fixtures::std_form(), &chart, &grid).unwrap(), 0.0);
        assert_eq!(gray_bound(&fixtures::bp(), &chart, &grid).unwrap(), 0.0);
        // The dtheta perturbation leaves the t-r entry untouched, so the
        // bound stays exactly zero for bp_pert as well.
        assert_eq!(gray_bound(&fixtures::bp_pert(), &chart, &grid).unwrap(), 0.0);

        let tw = gray_bound(&fixtures::bp_twist(), &chart, &grid).unwrap();
        assert!(tw > 0.0);
        // Analytic value: the dr perturbation gives e_tr = g' 0.02 pi g^2
        // cos(2 pi t); maximize 4 |e_tr| / (G + H) over the same grid.
        let chi0 = SmoothingFunction::zero();
        let mut expect = 0.0f64;
        for (t, r, th) in grid.points() {
            let g = chart.g(r);
            let gp = chart.g_prime(r);
            let e_tr = gp * 0.02 * std::f64::consts::PI * g * g
                * (std::f64::consts::TAU * t).cos();
            let v = volume_decomposition(&fixtures::bp_twist(), &chart, &chi0, t, r, th)
                .unwrap();
            expect = expect.max(4.0 * e_tr.abs() / v.density());
        }
        assert!((tw - expect).abs() < 1e-6, "tw={tw} expect={expect}");
    }
}
