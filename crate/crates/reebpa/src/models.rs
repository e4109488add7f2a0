//! Local dynamics: plane sector maps, hyperbolic torus automorphisms and
//! their unit-roof suspensions.
//!
//! The sector map `StandardPaMap` is the n-pronged singularity model. The
//! plane is cut into n equal sectors; each sector is pressed onto a half
//! plane by doubling the angle relative to its bottom edge (after scaling by
//! n/2), the linear stretch diag(lambda, 1/lambda) acts there, and the result
//! is folded back into the image sector, rotated k sectors on. With n = 2,
//! k = 0 this is exactly the linear stretch.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("prong count must be at least 1, got {0}")]
    InvalidProngCount(u32),
    #[error("sector rotation {k} must be less than prong count {n}")]
    RotationOutOfRange { n: u32, k: u32 },
    #[error("stretch factor must exceed 1, got {0}")]
    StretchOutOfRange(f64),
    #[error("matrix determinant must be +1 or -1, got {0}")]
    NotUnimodular(i64),
    #[error("matrix trace must exceed 2 in absolute value, got {0}")]
    NotHyperbolic(i64),
    #[error("integer overflow while raising matrix to power {0}")]
    Overflow(u32),
}

/// Wrap into [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Sup distance on the unit torus (both coordinates wrapped).
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..2 {
        let d = (wrap_unit(a[i]) - wrap_unit(b[i])).abs();
        m = m.max(d.min(1.0 - d));
    }
    m
}

const TAU: f64 = std::f64::consts::TAU;

/// Pseudo-Anosov local model with n prongs, image rotated k sectors,
/// stretch factor lambda along the horizontal axis downstairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardPaMap {
    n: u32,
    k: u32,
    lambda: f64,
}

impl StandardPaMap {
    pub fn new(n: u32, k: u32, lambda: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidProngCount(n));
        }
        if k >= n {
            return Err(ModelError::RotationOutOfRange { n, k });
        }
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(ModelError::StretchOutOfRange(lambda));
        }
        Ok(Self { n, k, lambda })
    }

    pub fn prongs(&self) -> u32 {
        self.n
    }

    pub fn rotation(&self) -> u32 {
        self.k
    }

    pub fn stretch(&self) -> f64 {
        self.lambda
    }

    /// Sector index and angle within the sector, theta normalized to [0, 2pi).
    fn sector(&self, theta: f64) -> (u32, f64) {
        let n = self.n as f64;
        let t = theta.rem_euclid(TAU);
        let mut j = (t * n / TAU).floor() as i64;
        if j >= self.n as i64 {
            j = self.n as i64 - 1;
        }
        if j < 0 {
            j = 0;
        }
        let phi = t - TAU * (j as f64) / n;
        (j as u32, phi.max(0.0))
    }

    /// Half-plane coordinate of a point, local to its sector: the sector
    /// angle is scaled by n/2 so each sector covers [0, pi) downstairs.
    pub fn project(&self, p: [f64; 2]) -> [f64; 2] {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let theta = p[1].atan2(p[0]);
        let (_, phi) = self.sector(theta);
        let psi = (self.n as f64) * phi / 2.0;
        [r * psi.cos(), r * psi.sin()]
    }

    fn apply_with(&self, p: [f64; 2], lambda: f64, shift: u32) -> [f64; 2] {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let n = self.n as f64;
        let theta = p[1].atan2(p[0]);
        let (j, phi) = self.sector(theta);
        let psi = n * phi / 2.0;
        let wx = lambda * r * psi.cos();
        let wy = r * psi.sin() / lambda;
        let mut psi2 = wy.atan2(wx);
        if psi2 < 0.0 {
            // wy is a nonnegative value times 1/lambda; rounding can still
            // produce a tiny negative angle at the sector floor.
            psi2 = 0.0;
        }
        let j2 = ((j + shift) % self.n) as f64;
        let theta2 = TAU * j2 / n + 2.0 * psi2 / n;
        let r2 = wx.hypot(wy);
        [r2 * theta2.cos(), r2 * theta2.sin()]
    }

    /// Forward map on plane points.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        self.apply_with(p, self.lambda, self.k)
    }

    /// Inverse map: rotate back k sectors and stretch by 1/lambda.
    pub fn inverse_apply(&self, p: [f64; 2]) -> [f64; 2] {
        self.apply_with(p, 1.0 / self.lambda, self.n - self.k)
    }

    /// Jacobian by central differences; adequate away from the prong axes.
    pub fn jacobian(&self, p: [f64; 2], h: f64) -> [[f64; 2]; 2] {
        let mut jm = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[c] += h;
            pm[c] -= h;
            let fp = self.apply(pp);
            let fm = self.apply(pm);
            for r in 0..2 {
                jm[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        jm
    }
}

/// Integer 2x2 torus automorphism, required hyperbolic (|trace| > 2) and
/// unimodular (det = +1 or -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusAutomorphism {
    m: [[i64; 2]; 2],
}

pub const IDENTITY_2X2: [[i128; 2]; 2] = [[1, 0], [0, 1]];

pub fn mat_mul_checked(a: [[i128; 2]; 2], b: [[i128; 2]; 2]) -> Option<[[i128; 2]; 2]> {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let p0 = a[i][0].checked_mul(b[0][j])?;
            let p1 = a[i][1].checked_mul(b[1][j])?;
            out[i][j] = p0.checked_add(p1)?;
        }
    }
    Some(out)
}

impl TorusAutomorphism {
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self, ModelError> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det != 1 && det != -1 {
            return Err(ModelError::NotUnimodular(det));
        }
        let tr = m[0][0] + m[1][1];
        if tr.abs() <= 2 {
            return Err(ModelError::NotHyperbolic(tr));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> i64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Larger eigenvalue magnitude; exceeds 1 by hyperbolicity.
    pub fn expansion(&self) -> f64 {
        let tr = self.trace() as f64;
        let det = self.det() as f64;
        let disc = (tr * tr - 4.0 * det).sqrt();
        ((tr.abs() + disc) / 2.0).abs()
    }

    /// Integer inverse; exact because det = +-1.
    pub fn inverse(&self) -> TorusAutomorphism {
        let d = self.det();
        let m = self.m;
        TorusAutomorphism {
            m: [
                [d * m[1][1], -d * m[0][1]],
                [-d * m[1][0], d * m[0][0]],
            ],
        }
    }

    pub fn apply_lattice(&self, v: [i64; 2]) -> [i64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Action on the unit torus.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let m = self.m;
        [
            wrap_unit(m[0][0] as f64 * p[0] + m[0][1] as f64 * p[1]),
            wrap_unit(m[1][0] as f64 * p[0] + m[1][1] as f64 * p[1]),
        ]
    }

    pub fn apply_inverse(&self, p: [f64; 2]) -> [f64; 2] {
        self.inverse().apply(p)
    }

    /// k-th power with overflow detection.
    pub fn pow(&self, k: u32) -> Result<[[i128; 2]; 2], ModelError> {
        let base = [
            [self.m[0][0] as i128, self.m[0][1] as i128],
            [self.m[1][0] as i128, self.m[1][1] as i128],
        ];
        let mut acc = IDENTITY_2X2;
        for _ in 0..k {
            acc = mat_mul_checked(acc, base).ok_or(ModelError::Overflow(k))?;
        }
        Ok(acc)
    }

    /// Number of fixed points of the k-th power, |det(A^k - I)|.
    /// Nonzero for every k >= 1 because no eigenvalue is a root of unity.
    pub fn count_fixed_points(&self, k: u32) -> Result<u128, ModelError> {
        let p = self.pow(k)?;
        let a = p[0][0] - 1;
        let d = p[1][1] - 1;
        let det = a
            .checked_mul(d)
            .and_then(|x| {
                let bc = p[0][1].checked_mul(p[1][0])?;
                x.checked_sub(bc)
            })
            .ok_or(ModelError::Overflow(k))?;
        Ok(det.unsigned_abs())
    }
}

/// Mapping torus of a hyperbolic automorphism with unit roof function.
/// Points are (s, p) with s in [0, 1) the fiber coordinate; flowing for
/// time T advances s and applies the base map once per full turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuspensionFlow {
    base: TorusAutomorphism,
}

impl SuspensionFlow {
    pub fn new(base: TorusAutomorphism) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &TorusAutomorphism {
        &self.base
    }

    pub fn flow(&self, s: f64, p: [f64; 2], time: f64) -> (f64, [f64; 2]) {
        let total = s + time;
        let turns = total.floor() as i64;
        let frac = wrap_unit(total - turns as f64);
        let mut q = [wrap_unit(p[0]), wrap_unit(p[1])];
        if turns >= 0 {
            for _ in 0..turns {
                q = self.base.apply(q);
            }
        } else {
            let inv = self.base.inverse();
            for _ in 0..(-turns) {
                q = inv.apply(q);
            }
        }
        (frac, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cat() -> TorusAutomorphism {
        TorusAutomorphism::new([[2, 1], [1, 1]]).unwrap()
    }

    fn close(a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
    }

    #[test]
    fn constructor_validation() {
        assert!(StandardPaMap::new(0, 0, 2.0).is_err());
        assert!(StandardPaMap::new(3, 3, 2.0).is_err());
        assert!(StandardPaMap::new(3, 0, 1.0).is_err());
        assert!(StandardPaMap::new(3, 0, 0.5).is_err());
        assert!(StandardPaMap::new(1, 0, 1.5).is_ok());
        assert!(TorusAutomorphism::new([[2, 0], [0, 1]]).is_err());
        assert!(TorusAutomorphism::new([[1, 1], [0, 1]]).is_err());
        assert!(TorusAutomorphism::new([[2, 1], [1, 1]]).is_ok());
        assert!(TorusAutomorphism::new([[0, 1], [-1, 3]]).is_ok());
    }

    #[test]
    fn two_prong_no_rotation_is_linear_stretch() {
        let m = StandardPaMap::new(2, 0, 2.5).unwrap();
        let pts = [
            [1.0, 0.3],
            [-0.7, 0.2],
            [-0.4, -0.9],
            [0.6, -0.1],
            [0.0, 1.0],
            [-1.0, 0.0],
        ];
        for p in pts {
            let q = m.apply(p);
            assert!(
                close(q, [2.5 * p[0], p[1] / 2.5], 1e-12),
                "p={p:?} q={q:?}"
            );
        }
    }

    #[test]
    fn origin_is_fixed_and_isolated() {
        let m = StandardPaMap::new(4, 1, 2.0).unwrap();
        assert_eq!(m.apply([0.0, 0.0]), [0.0, 0.0]);
        // Nearby points move by a definite factor.
        for i in 0..16 {
            let th = TAU * (i as f64 + 0.37) / 16.0;
            let p = [1e-3 * th.cos(), 1e-3 * th.sin()];
            let q = m.apply(p);
            let moved = (q[0] - p[0]).hypot(q[1] - p[1]);
            assert!(moved > 1e-5, "point {p:?} barely moved");
        }
    }

    #[test]
    fn continuity_across_sector_edges() {
        for (n, k) in [(3u32, 1u32), (4, 0), (4, 3), (5, 2)] {
            let m = StandardPaMap::new(n, k, 1.8).unwrap();
            for j in 0..n {
                let edge = TAU * j as f64 / n as f64;
                for r in [0.25, 1.0, 3.0] {
                    let lo = [r * (edge - 1e-9).cos(), r * (edge - 1e-9).sin()];
                    let hi = [r * (edge + 1e-9).cos(), r * (edge + 1e-9).sin()];
                    let ql = m.apply(lo);
                    let qh = m.apply(hi);
                    let gap = (ql[0] - qh[0]).hypot(ql[1] - qh[1]);
                    assert!(gap < 1e-6, "n={n} k={k} edge {j}: gap {gap}");
                }
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for (n, k, lam) in [(2u32, 1u32, 2.0), (3, 0, 1.5), (4, 1, 2.0), (5, 3, 1.3)] {
            let m = StandardPaMap::new(n, k, lam).unwrap();
            for i in 0..24 {
                let th = TAU * (i as f64 + 0.21) / 24.0;
                let p = [1.3 * th.cos(), 1.3 * th.sin()];
                let back = m.inverse_apply(m.apply(p));
                assert!(close(back, p, 1e-10), "n={n} k={k} p={p:?} back={back:?}");
                let fwd = m.apply(m.inverse_apply(p));
                assert!(close(fwd, p, 1e-10), "n={n} k={k} p={p:?} fwd={fwd:?}");
            }
        }
    }

    #[test]
    fn sector_projection_conjugates_to_linear_stretch() {
        // Pressing a sector onto the half plane turns the map into the
        // plain stretch: project(apply(p)) = diag(lam, 1/lam) project(p).
        for (n, k, lam) in [(3u32, 1u32, 2.0), (4, 0, 1.7), (5, 2, 2.2), (6, 5, 1.4)] {
            let m = StandardPaMap::new(n, k, lam).unwrap();
            for i in 0..60 {
                let th = TAU * (i as f64 + 0.13) / 60.0;
                let p = [0.8 * th.cos(), 0.8 * th.sin()];
                let lhs = m.project(m.apply(p));
                let w = m.project(p);
                let rhs = [lam * w[0], w[1] / lam];
                assert!(close(lhs, rhs, 1e-10), "n={n} k={k} p={p:?}");
            }
        }
    }

    #[test]
    fn rotation_advances_sectors() {
        let m = StandardPaMap::new(4, 1, 2.0).unwrap();
        // Mid-sector ray on the stable/unstable bisector keeps its radius
        // budget but lands one sector on.
        let p = [0.5 * (TAU / 16.0).cos(), 0.5 * (TAU / 16.0).sin()];
        let q = m.apply(p);
        let th = q[1].atan2(q[0]).rem_euclid(TAU);
        assert!(th > TAU / 4.0 && th < TAU / 2.0, "theta {th}");
    }

    #[test]
    fn cat_map_fixed_point_counts() {
        let a = cat();
        let expect: [u128; 6] = [1, 5, 16, 45, 121, 320];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(a.count_fixed_points(i as u32 + 1).unwrap(), *e);
        }
    }

    #[test]
    fn fixed_point_count_matches_trace_formula() {
        // det = +1 makes det(A^k - I) = 2 - tr(A^k).
        let a = TorusAutomorphism::new([[3, 2], [1, 1]]).unwrap();
        for k in 1..=8u32 {
            let p = a.pow(k).unwrap();
            let tr = p[0][0] + p[1][1];
            assert_eq!(a.count_fixed_points(k).unwrap() as i128, tr - 2);
        }
    }

    #[test]
    fn power_overflow_detected() {
        let a = cat();
        assert!(matches!(a.pow(400), Err(ModelError::Overflow(_))));
    }

    #[test]
    fn inverse_matrix_exact() {
        for m in [[[2i64, 1], [1, 1]], [[0, 1], [-1, 3]], [[5, 2], [2, 1]]] {
            let a = TorusAutomorphism::new(m).unwrap();
            let inv = a.inverse();
            let prod = mat_mul_checked(
                [
                    [a.m[0][0] as i128, a.m[0][1] as i128],
                    [a.m[1][0] as i128, a.m[1][1] as i128],
                ],
                [
                    [inv.m[0][0] as i128, inv.m[0][1] as i128],
                    [inv.m[1][0] as i128, inv.m[1][1] as i128],
                ],
            )
            .unwrap();
            assert_eq!(prod, IDENTITY_2X2);
        }
    }

    #[test]
    fn suspension_time_one_is_base_map() {
        let f = SuspensionFlow::new(cat());
        let p = [0.3, 0.7];
        let (s, q) = f.flow(0.0, p, 1.0);
        assert_eq!(s, 0.0);
        assert!(torus_distance(q, cat().apply(p)) < 1e-12);
    }

    #[test]
    fn suspension_group_property() {
        let f = SuspensionFlow::new(cat());
        let p = [0.12, 0.49];
        let (s1, q1) = f.flow(0.2, p, 1.7);
        let (s2, q2) = f.flow(s1, q1, 2.6);
        let (s3, q3) = f.flow(0.2, p, 4.3);
        assert!((s2 - s3).abs() < 1e-12);
        assert!(torus_distance(q2, q3) < 1e-9);
    }

    #[test]
    fn suspension_negative_time_inverts() {
        let f = SuspensionFlow::new(cat());
        let p = [0.81, 0.33];
        let (s, q) = f.flow(0.4, p, 3.25);
        let (s0, q0) = f.flow(s, q, -3.25);
        assert!((s0 - 0.4).abs() < 1e-12);
        assert!(torus_distance(q0, p) < 1e-9);
    }

    proptest! {
        #[test]
        fn pa_inverse_roundtrip_random(
            n in 1u32..7,
            kk in 0u32..7,
            lam in 1.05f64..4.0,
            x in -2.0f64..2.0,
            y in -2.0f64..2.0,
        ) {
            let k = kk % n;
            let m = StandardPaMap::new(n, k, lam).unwrap();
            let p = [x, y];
            let r = x.hypot(y);
            prop_assume!(r > 1e-6);
            let back = m.inverse_apply(m.apply(p));
            let err = (back[0]-p[0]).hypot(back[1]-p[1]);
            prop_assert!(err < 1e-8 * (1.0 + r), "err {err}");
        }

        #[test]
        fn pa_projection_conjugacy_random(
            n in 1u32..7,
            kk in 0u32..7,
            lam in 1.05f64..4.0,
            th in 0.0f64..TAU,
            r in 0.05f64..2.0,
        ) {
            let k = kk % n;
            let m = StandardPaMap::new(n, k, lam).unwrap();
            let p = [r*th.cos(), r*th.sin()];
            let lhs = m.project(m.apply(p));
            let w = m.project(p);
            let rhs = [lam*w[0], w[1]/lam];
            let err = (lhs[0]-rhs[0]).hypot(lhs[1]-rhs[1]);
            prop_assert!(err < 1e-8 * (1.0 + r), "err {err}");
        }
    }
}
