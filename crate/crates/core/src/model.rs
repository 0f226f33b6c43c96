//! Dimensional and nondimensional model, reaction terms and their analytic
//! partial derivatives.
//!
//! The scaled local kinetics are
//!
//! ```text
//! f1(u, v) = u (1 - u)(u - m) / (u + n) - sqrt(u) v
//! f2(u, v) = θ v (sqrt(u) - c v)
//! ```
//!
//! The prey growth term is split as `g(u) = Q(u) + R / (u + n)` with `Q`
//! quadratic, which gives closed forms for all of its derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of the dimensional model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams<T> {
    /// Prey intrinsic growth rate.
    pub r: T,
    /// Carrying capacity.
    pub k: T,
    /// Search efficiency of the predator.
    pub a: T,
    /// Biomass conversion rate.
    pub b: T,
    /// Predator mortality coefficient.
    pub d: T,
    /// Allee threshold.
    pub m: T,
    /// Allee auxiliary parameter.
    pub n: T,
    pub d1: T,
    pub d2: T,
}

/// Parameters of the nondimensional model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledParams<T> {
    /// Allee threshold, `-1 < m < 1`.
    pub m: T,
    /// Allee auxiliary parameter, `n > max(0, -m)`.
    pub n: T,
    /// Mortality to conversion ratio.
    pub c: T,
    /// Biomass conversion rate.
    pub theta: T,
    /// Prey diffusion coefficient.
    pub d1: T,
    /// Predator diffusion coefficient.
    pub d2: T,
}

fn bound<T: Scalar>(ok: bool, bound: &'static str, name: &'static str, value: T) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Admissibility {
            bound,
            name,
            value: value.as_f64(),
        })
    }
}

impl<T: Scalar> RawParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        bound(self.r > z, "r > 0", "r", self.r)?;
        bound(self.k > z, "K > 0", "K", self.k)?;
        bound(self.a > z, "A > 0", "A", self.a)?;
        bound(self.b > z, "B > 0", "B", self.b)?;
        bound(self.d > z, "D > 0", "D", self.d)?;
        bound(self.d1 > z, "D1 > 0", "D1", self.d1)?;
        bound(self.d2 > z, "D2 > 0", "D2", self.d2)?;
        bound(self.m > -self.k, "M > -K", "M", self.m)?;
        bound(self.m < self.k, "M < K", "M", self.m)?;
        bound(self.n > z, "N > 0", "N", self.n)?;
        bound(self.n > -self.m, "N > -M", "N", self.n)
    }
}

impl<T: Scalar> ScaledParams<T> {
    /// Builds and validates a parameter set.
    pub fn new(m: T, n: T, c: T, theta: T, d1: T, d2: T) -> Result<Self> {
        let p = ScaledParams {
            m,
            n,
            c,
            theta,
            d1,
            d2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let one = T::one();
        for (name, x) in [
            ("m", self.m),
            ("n", self.n),
            ("c", self.c),
            ("theta", self.theta),
            ("d1", self.d1),
            ("d2", self.d2),
        ] {
            if !x.is_finite() {
                return Err(Error::Admissibility {
                    bound: "finite value",
                    name,
                    value: x.as_f64(),
                });
            }
        }
        bound(self.m > -one, "-1 < m", "m", self.m)?;
        bound(self.m < one, "m < 1", "m", self.m)?;
        bound(self.n > z.max(-self.m), "n > max(0, -m)", "n", self.n)?;
        bound(self.c > z, "c > 0", "c", self.c)?;
        bound(self.theta > z, "theta > 0", "theta", self.theta)?;
        bound(self.d1 > z, "d1 > 0", "d1", self.d1)?;
        bound(self.d2 > z, "d2 > 0", "d2", self.d2)
    }

    pub fn with_theta(mut self, theta: T) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_d2(mut self, d2: T) -> Self {
        self.d2 = d2;
        self
    }

    /// Weak-Allee parameter set with `d1 = 0.01, d2 = 0.02`.
    pub fn h1(theta: T) -> Self {
        ScaledParams {
            m: T::lit(-0.5),
            n: T::lit(50.0) / T::lit(41.0),
            c: T::lit(100.0) / T::lit(41.0),
            theta,
            d1: T::lit(0.01),
            d2: T::lit(0.02),
        }
    }

    /// Weak-Allee parameter set with `d1 = 0.1`; `theta` and `d2` vary.
    pub fn h2(theta: T, d2: T) -> Self {
        ScaledParams {
            m: T::lit(-0.5),
            n: T::lit(50.0) / T::lit(41.0),
            c: T::lit(100.0) / T::lit(41.0),
            theta,
            d1: T::lit(0.1),
            d2,
        }
    }
}

/// Maps dimensional parameters onto the scaled model.
pub fn rescale<T: Scalar>(raw: &RawParams<T>) -> Result<ScaledParams<T>> {
    raw.validate()?;
    let sqrt_k = raw.k.sqrt();
    let theta = raw.b * sqrt_k / raw.r;
    let mortality = raw.d * sqrt_k / raw.a;
    let p = ScaledParams {
        m: raw.m / raw.k,
        n: raw.n / raw.k,
        c: mortality / theta,
        theta,
        d1: raw.d1 / raw.r,
        d2: raw.d2 / raw.r,
    };
    p.validate()?;
    Ok(p)
}

/// Prey growth `u (1 - u)(u - m) / (u + n)`.
pub fn prey_growth<T: Scalar>(u: T, p: &ScaledParams<T>) -> T {
    u * (T::one() - u) * (u - p.m) / (u + p.n)
}

/// Local reaction rates `(f1, f2)` at densities `(u, v)`.
pub fn reaction<T: Scalar>(u: T, v: T, p: &ScaledParams<T>) -> Result<(T, T)> {
    if u < T::zero() || u.is_nan() {
        return Err(Error::Domain(format!(
            "prey density must be nonnegative, got u = {u}"
        )));
    }
    Ok(reaction_clamped(u, v, p))
}

/// Reaction rates with `sqrt(max(u, 0))`; used inside the integrators.
#[inline]
pub fn reaction_clamped<T: Scalar>(u: T, v: T, p: &ScaledParams<T>) -> (T, T) {
    let root = u.max(T::zero()).sqrt();
    let f1 = prey_growth(u, p) - root * v;
    let f2 = p.theta * v * (root - p.c * v);
    (f1, f2)
}

/// `d^k/du^k sqrt(u)` for `k = 0..=3`.
fn sqrt_derivs<T: Scalar>(u: T) -> [T; 4] {
    let s = u.sqrt();
    [
        s,
        T::lit(0.5) / s,
        -T::lit(0.25) / (u * s),
        T::lit(0.375) / (u * u * s),
    ]
}

/// `d^k/du^k g(u)` for `k = 0..=3` where `g` is the prey growth term.
fn growth_derivs<T: Scalar>(u: T, p: &ScaledParams<T>) -> [T; 4] {
    let (m, n) = (p.m, p.n);
    let one = T::one();
    // u(1-u)(u-m) = (u+n)(-u^2 + alpha u + beta) + rem
    let alpha = one + m + n;
    let beta = -m - n * alpha;
    let rem = -beta * n;
    let w = u + n;
    [
        prey_growth(u, p),
        -T::lit(2.0) * u + alpha - rem / (w * w),
        -T::lit(2.0) + T::lit(2.0) * rem / (w * w * w),
        -T::lit(6.0) * rem / (w * w * w * w),
    ]
}

/// Partial derivatives `∂^{i+j} f / ∂u^i ∂v^j` of both reaction components,
/// `i + j <= 3`, at a point with `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials<T> {
    d: [[[T; 2]; 4]; 4],
}

impl<T: Scalar> Partials<T> {
    /// Analytic partials at `(u, v)` with conversion rate `theta`.
    pub fn at(u: T, v: T, m: T, n: T, c: T, theta: T) -> Result<Self> {
        if !(u > T::zero()) {
            return Err(Error::DegeneratePoint(format!(
                "derivatives of sqrt(u) need u > 0, got u = {u}"
            )));
        }
        let p = ScaledParams {
            m,
            n,
            c,
            theta,
            d1: T::one(),
            d2: T::one(),
        };
        let s = sqrt_derivs(u);
        let g = growth_derivs(u, &p);
        let z = T::zero();
        let mut d = [[[z; 2]; 4]; 4];
        for i in 0..4 {
            // prey: g(u) - sqrt(u) v
            d[i][0][0] = g[i] - s[i] * v;
            d[i][1][0] = -s[i];
            // predator: theta (v sqrt(u) - c v^2)
            d[i][0][1] = theta * v * s[i];
            d[i][1][1] = theta * s[i];
        }
        for j in 0..4 {
            for i in 0..4 {
                if i + j > 3 {
                    d[i][j] = [z; 2];
                }
            }
        }
        d[0][0][1] = d[0][0][1] - theta * c * v * v;
        d[0][1][1] = d[0][1][1] - T::lit(2.0) * theta * c * v;
        d[0][2][1] = -T::lit(2.0) * theta * c;
        Ok(Partials { d })
    }

    pub fn of(u: T, v: T, p: &ScaledParams<T>) -> Result<Self> {
        Self::at(u, v, p.m, p.n, p.c, p.theta)
    }

    /// `[∂^{i+j} f1, ∂^{i+j} f2]`; zero for `i + j > 3`.
    pub fn get(&self, i: usize, j: usize) -> [T; 2] {
        if i + j > 3 {
            [T::zero(); 2]
        } else {
            self.d[i][j]
        }
    }
}

/// Index of `(i, j, s)` with `i + j + s <= 3` in a flat table of 20 entries.
fn taylor_index(i: usize, j: usize, s: usize) -> Option<usize> {
    if i + j + s > 3 {
        return None;
    }
    TAYLOR_ORDER.iter().position(|&t| t == (i, j, s))
}

/// Multi-indices stored in a [`TaylorTable`], ordered by total degree.
pub const TAYLOR_ORDER: [(usize, usize, usize); 20] = [
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (2, 0, 0),
    (1, 1, 0),
    (0, 2, 0),
    (1, 0, 1),
    (0, 1, 1),
    (0, 0, 2),
    (3, 0, 0),
    (2, 1, 0),
    (1, 2, 0),
    (0, 3, 0),
    (2, 0, 1),
    (1, 1, 1),
    (0, 2, 1),
    (1, 0, 2),
    (0, 1, 2),
    (0, 0, 3),
];

/// Partial derivatives `f_ijs` of the shifted reaction terms
/// `f̂(u, v, ε)` at the origin, where `ε = θ - θ*` is the unfolding
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorTable<T> {
    pub u: T,
    pub v: T,
    pub theta_star: T,
    entries: [[T; 2]; 20],
}

impl<T: Scalar> TaylorTable<T> {
    /// Builds the table at the positive equilibrium `(u, v)`.
    ///
    /// Positive equilibria solve `h(u) = 0`, `v = sqrt(u)/c`, neither of which
    /// involves θ, so ε enters only through the prefactor of `f2`.
    pub fn new(u: T, v: T, p: &ScaledParams<T>, theta_star: T) -> Result<Self> {
        if !(u > T::zero()) {
            return Err(Error::DegeneratePoint(format!(
                "Taylor table needs a positive equilibrium, got u = {u}"
            )));
        }
        let at_star = Partials::at(u, v, p.m, p.n, p.c, theta_star)?;
        let per_theta = Partials::at(u, v, p.m, p.n, p.c, T::one())?;
        let z = T::zero();
        let mut entries = [[z; 2]; 20];
        for (slot, &(i, j, s)) in entries.iter_mut().zip(TAYLOR_ORDER.iter()) {
            *slot = match s {
                0 => at_star.get(i, j),
                1 => [z, per_theta.get(i, j)[1]],
                _ => [z; 2],
            };
        }
        Ok(TaylorTable {
            u,
            v,
            theta_star,
            entries,
        })
    }

    pub fn entry(&self, i: usize, j: usize, s: usize) -> Option<[T; 2]> {
        taylor_index(i, j, s).map(|k| self.entries[k])
    }

    /// `f_ijs`; panics when `i + j + s > 3`.
    pub fn f(&self, i: usize, j: usize, s: usize) -> [T; 2] {
        self.entry(i, j, s)
            .unwrap_or_else(|| panic!("f_{i}{j}{s} is beyond third order"))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), [T; 2])> + '_ {
        TAYLOR_ORDER.iter().copied().zip(self.entries.iter().copied())
    }
}

/// Shifted reaction terms `f̂(u, v, ε)` centered at `(u0, v0)` with
/// `θ = θ* + ε`.
pub fn shifted_reaction<T: Scalar>(
    du: T,
    dv: T,
    eps: T,
    u0: T,
    v0: T,
    p: &ScaledParams<T>,
    theta_star: T,
) -> Result<(T, T)> {
    let q = p.with_theta(theta_star + eps);
    reaction(u0 + du, v0 + dv, &q)
}

/// Jacobian of the local kinetics at an arbitrary point with `u > 0`.
pub fn jacobian_at<T: Scalar>(u: T, v: T, p: &ScaledParams<T>) -> Result<[[T; 2]; 2]> {
    let d = Partials::of(u, v, p)?;
    let du = d.get(1, 0);
    let dv = d.get(0, 1);
    Ok([[du[0], dv[0]], [du[1], dv[1]]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::find_equilibria;
    use proptest::prelude::*;

    fn h2() -> ScaledParams<f64> {
        ScaledParams::h2(0.6627, 0.15)
    }

    #[test]
    fn identity_scaling() {
        let raw = RawParams {
            r: 1.0,
            k: 1.0,
            a: 1.0,
            b: 1.0,
            d: 1.0,
            m: 0.0,
            n: 1.0,
            d1: 1.0,
            d2: 1.0,
        };
        let p = rescale(&raw).unwrap();
        assert_eq!(p, ScaledParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn rescale_reaches_weak_allee_preset() {
        // K = 4, r = 2, B chosen so theta = 0.7, D so that c = 100/41.
        let (r, k, a) = (2.0f64, 4.0f64, 1.5f64);
        let theta = 0.7;
        let b = theta * r / k.sqrt();
        let d = (100.0 / 41.0) * theta * a / k.sqrt();
        let raw = RawParams {
            r,
            k,
            a,
            b,
            d,
            m: -k / 2.0,
            n: 50.0 * k / 41.0,
            d1: 0.2,
            d2: 0.3,
        };
        let p = rescale(&raw).unwrap();
        assert!((p.m + 0.5).abs() < 1e-15);
        assert!((p.n - 50.0 / 41.0).abs() < 1e-14);
        assert!((p.c - 100.0 / 41.0).abs() < 1e-13);
        assert!((p.theta - 0.7).abs() < 1e-14);
        assert!((p.d1 - 0.1).abs() < 1e-15 && (p.d2 - 0.15).abs() < 1e-15);
    }

    #[test]
    fn rescale_rejects_threshold_at_capacity() {
        let raw = RawParams {
            r: 1.0,
            k: 1.0,
            a: 1.0,
            b: 1.0,
            d: 1.0,
            m: 1.0,
            n: 1.0,
            d1: 1.0,
            d2: 1.0,
        };
        match rescale(&raw) {
            Err(Error::Admissibility { bound, .. }) => assert_eq!(bound, "M < K"),
            other => panic!("expected admissibility error, got {other:?}"),
        }
    }

    #[test]
    fn rescale_invariant_under_biomass_scaling() {
        let base = RawParams {
            r: 1.3f64,
            k: 2.0,
            a: 0.7,
            b: 0.9,
            d: 0.4,
            m: -0.6,
            n: 1.5,
            d1: 0.1,
            d2: 0.2,
        };
        let doubled = RawParams {
            k: 4.0,
            m: -1.2,
            n: 3.0,
            ..base
        };
        let (p, q) = (rescale(&base).unwrap(), rescale(&doubled).unwrap());
        assert!((p.m - q.m).abs() < 1e-15 && (p.n - q.n).abs() < 1e-15);
    }

    #[test]
    fn scaled_admissibility_names_bound() {
        let err = ScaledParams::new(0.2, -0.1, 1.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("n > max(0, -m)"), "{err}");
        assert!(ScaledParams::new(-0.5, 0.4, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn boundary_states_are_steady() {
        let p = h2();
        assert_eq!(reaction(0.0, 0.0, &p).unwrap(), (0.0, 0.0));
        assert_eq!(reaction(1.0, 0.0, &p).unwrap(), (0.0, 0.0));
        assert!(reaction(-1e-3, 0.1, &p).is_err());
    }

    #[test]
    fn interior_state_is_steady() {
        let p = h2();
        let (f1, f2) = reaction(0.09, 0.123, &p).unwrap();
        assert!(f1.abs() < 1e-6 && f2.abs() < 1e-6, "{f1} {f2}");
    }

    #[test]
    fn predator_nullcline() {
        let p = ScaledParams::new(0.3, 0.7, 1.7, 0.9, 0.1, 0.1).unwrap();
        for k in 1..50 {
            let u = k as f64 / 40.0;
            let (_, f2) = reaction(u, u.sqrt() / p.c, &p).unwrap();
            assert!(f2.abs() < 1e-15);
        }
    }

    #[test]
    fn taylor_table_weak_allee_values() {
        let p = h2();
        // θ* = δ1/δ2 with δ1 = 0.19881449..., δ2 = 0.3
        let theta_star = 0.198814490594151_6 / 0.3;
        let t = TaylorTable::new(0.09, 0.123, &p, theta_star).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-4;
        let f200 = t.f(2, 0, 0);
        assert!(close(f200[0], 0.8734) && close(f200[1], -0.7548));
        let f110 = t.f(1, 1, 0);
        assert!(close(f110[0], -1.6667) && close(f110[1], 1.1045));
        assert!(close(t.f(0, 2, 0)[1], -3.2328));
        let f300 = t.f(3, 0, 0);
        assert!(close(f300[0], -22.9552) && close(f300[1], 12.5793));
        let f210 = t.f(2, 1, 0);
        assert!(close(f210[0], 9.2593) && close(f210[1], -6.1362));
        assert_eq!(t.f(1, 2, 0), [0.0, 0.0]);
        assert_eq!(t.f(0, 3, 0), [0.0, 0.0]);
        assert_eq!(t.f(0, 2, 0)[0], 0.0);
        // The θ-derivative of the predator row: ∂u = v/(2√u) = 1/(2c), ∂v = √u - 2cv.
        assert!((t.f(1, 0, 1)[1] - 41.0 / 200.0).abs() < 1e-12);
        assert!((t.f(0, 1, 1)[1] + 0.3).abs() < 1e-12);
        assert_eq!(t.f(1, 0, 1)[0], 0.0);
        assert!(t.entry(2, 1, 1).is_none());
    }

    #[test]
    fn taylor_table_rejects_boundary_point() {
        assert!(TaylorTable::new(0.0, 0.0, &h2(), 0.66).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = ScaledParams::<f32>::h2(0.68, 0.4);
        let (f1, f2) = reaction(0.09f32, 0.123f32, &p).unwrap();
        assert!(f1.abs() < 1e-5 && f2.abs() < 1e-5);
    }

    /// Mixed partial `∂u^i ∂v^j ∂θ^s` of the reaction terms by tensor
    /// central differences.
    fn fd_partial(u: f64, v: f64, p: &ScaledParams<f64>, (i, j, s): (usize, usize, usize)) -> [f64; 2] {
        let w: [[f64; 7]; 4] = [
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0],
            [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0],
            [0.125, -1.0, 1.625, 0.0, -1.625, 1.0, -0.125],
        ];
        let hu = 0.01 * u;
        let hv = 0.01 * v.max(u.sqrt());
        let ht = 0.01 * p.theta;
        let mut acc = [0.0; 2];
        for (a, wa) in w[i].iter().enumerate() {
            for (b, wb) in w[j].iter().enumerate() {
                for (c, wc) in w[s].iter().enumerate() {
                    let wt = wa * wb * wc;
                    if wt == 0.0 {
                        continue;
                    }
                    let q = p.with_theta(p.theta + (c as f64 - 3.0) * ht);
                    let (f1, f2) =
                        reaction(u + (a as f64 - 3.0) * hu, v + (b as f64 - 3.0) * hv, &q).unwrap();
                    acc[0] += wt * f1;
                    acc[1] += wt * f2;
                }
            }
        }
        let scale = hu.powi(i as i32) * hv.powi(j as i32) * ht.powi(s as i32);
        [acc[0] / scale, acc[1] / scale]
    }

    fn positive_draw() -> impl Strategy<Value = (ScaledParams<f64>, f64, f64)> {
        (-0.99f64..0.99, 0.01f64..3.0, 0.05f64..8.0, 0.05f64..3.0).prop_filter_map(
            "needs a positive equilibrium",
            |(m, n, c, th)| {
                let p = ScaledParams::new(m, n, c, th, 0.1, 0.1).ok()?;
                let e = find_equilibria(&p).into_iter().find(|e| e.kind.is_positive())?;
                (e.u > 1e-3).then_some((p, e.u, e.v))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1_000))]
        #[test]
        fn taylor_table_matches_finite_differences((p, u, v) in positive_draw()) {
            let t = TaylorTable::new(u, v, &p, p.theta).unwrap();
            for ((i, j, s), entry) in t.iter() {
                if i + j + s == 0 {
                    continue;
                }
                let fd = fd_partial(u, v, &p, (i, j, s));
                for k in 0..2 {
                    let tol = 1e-6 * fd[k].abs().max(1.0);
                    prop_assert!((entry[k] - fd[k]).abs() < tol,
                        "f_{i}{j}{s}[{k}] = {} vs {}", entry[k], fd[k]);
                }
            }
            let jac = crate::local::jacobian(
                &crate::equilibria::Equilibrium::new(crate::equilibria::EquilibriumKind::E31, u, v), &p).unwrap();
            let (fu, fv) = (t.f(1, 0, 0), t.f(0, 1, 0));
            prop_assert!((fu[0] - jac.j11).abs() < 1e-10 * jac.j11.abs().max(1.0));
            prop_assert!((fv[0] - jac.j12).abs() < 1e-10);
            prop_assert!((fu[1] - jac.j21).abs() < 1e-10);
            prop_assert!((fv[1] - jac.j22).abs() < 1e-10);
        }
    }
}
