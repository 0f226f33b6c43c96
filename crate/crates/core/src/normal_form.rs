//! Third-order normal forms on the center manifold of `E31` for the
//! diffusive system: spatial Hopf (`ρ' = v1 ε ρ + v2 ρ^3`) and steady-state
//! pitchfork (`z' = Q11 ε z + Q30 z^3`) bifurcations, with `ε = θ - θ*`.
//!
//! Quadratic and cubic interactions use the Taylor table at `θ*`:
//!
//! ```text
//! B(a, b)    = f200 a1 b1 + f110 (a1 b2 + a2 b1) + f020 a2 b2
//! C(a, b, c) = f300 a1 b1 c1 + f210 (a1 b1 c2 + a1 b2 c1 + a2 b1 c1) + ...
//! ```

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::equilibria::{positive_equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{ScaledParams, TaylorTable};
use crate::scalar::Scalar;
use crate::spatial::LinearizationAtE31;

type C2<T> = [Complex<T>; 2];

/// Threshold on `|v2|` or `|Q30|` below which the verdict is degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// `∫_0^π ε_s^2 ε_j dx` for the normalized cosine basis.
pub fn sigma<T: Scalar>(s: u32, j: u32) -> T {
    if j == 0 {
        T::one() / T::PI().sqrt()
    } else if j == 2 * s {
        T::one() / (T::lit(2.0) * T::PI()).sqrt()
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfVerdict {
    /// `v2 < 0`: stable periodic orbits.
    SupercriticalStable,
    /// `v2 > 0`: unstable periodic orbits.
    SubcriticalUnstable,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PitchforkVerdict {
    Supercritical,
    Subcritical,
    Degenerate,
}

/// Sign in `h_sj = ± σ_sj H_j^{-1} A20` for the pitchfork reduction.
///
/// `Minus` comes from solving `H_j h + σ A20 = 0` for the second-order
/// center-manifold coefficient, the same relation that fixes `h11` in the
/// Hopf case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HSign {
    #[default]
    Minus,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfNF<T> {
    pub s: u32,
    pub d2: T,
    /// Critical θ on the mode-`s` Hopf curve.
    pub theta_star: T,
    /// Requested θ, reported as `ε = theta - theta_star`.
    pub theta: T,
    pub omega: T,
    pub p: C2<T>,
    pub q: C2<T>,
    pub b21: Complex<T>,
    /// Only for `s = 0`.
    pub c21: Option<Complex<T>>,
    pub a20: C2<T>,
    pub a11: C2<T>,
    pub a02: C2<T>,
    /// `E_(s,j)` keyed by `j`.
    pub e_terms: Vec<(u32, Complex<T>)>,
    pub r1: Complex<T>,
    pub r2: Complex<T>,
    pub v1: T,
    pub v2: T,
    pub verdict: HopfVerdict,
    pub residuals: EigenResiduals<T>,
}

impl<T: Scalar> HopfNF<T> {
    pub fn epsilon(&self) -> T {
        self.theta - self.theta_star
    }

    /// `dρ/dt` of the truncated normal form.
    pub fn rate(&self, eps: T, rho: T) -> T {
        self.v1 * eps * rho + self.v2 * rho * rho * rho
    }
}

/// Max-norm residuals of the eigenvector relations and normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenResiduals<T> {
    pub right: T,
    pub left: T,
    pub normalization: T,
}

impl<T: Scalar> EigenResiduals<T> {
    pub fn max(&self) -> T {
        self.right.max(self.left).max(self.normalization)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchforkNF<T> {
    pub s: u32,
    pub d2: T,
    /// Critical θ on the mode-`s` Turing line.
    pub theta_star: T,
    pub theta: T,
    /// `T_s` at `θ*`, the value used to normalize `q̃`.
    pub t_s: T,
    /// `T_s` at the requested θ.
    pub t_s_at_theta: T,
    pub p: [T; 2],
    pub q: [T; 2],
    pub gamma: T,
    pub gamma_terms: Vec<(u32, T)>,
    pub q11: T,
    pub q30: T,
    pub sign: HSign,
    pub verdict: PitchforkVerdict,
    pub residuals: EigenResiduals<T>,
}

impl<T: Scalar> PitchforkNF<T> {
    pub fn epsilon(&self) -> T {
        self.theta - self.theta_star
    }

    /// Nonzero equilibrium amplitude `sqrt(-Q11 ε / Q30)` if it exists.
    pub fn amplitude(&self, eps: T) -> Option<T> {
        let r = -self.q11 * eps / self.q30;
        (r > T::zero()).then(|| r.sqrt())
    }
}

fn cx<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn cvec<T: Scalar>(v: [T; 2]) -> C2<T> {
    [cx(v[0]), cx(v[1])]
}

fn dot<T: Scalar>(a: &C2<T>, b: &C2<T>) -> Complex<T> {
    a[0] * b[0] + a[1] * b[1]
}

fn conj2<T: Scalar>(a: &C2<T>) -> C2<T> {
    [a[0].conj(), a[1].conj()]
}

fn mat_vec<T: Scalar>(m: &[[Complex<T>; 2]; 2], x: &C2<T>) -> C2<T> {
    [
        m[0][0] * x[0] + m[0][1] * x[1],
        m[1][0] * x[0] + m[1][1] * x[1],
    ]
}

fn solve2<T: Scalar>(m: [[Complex<T>; 2]; 2], b: C2<T>, name: &str) -> Result<C2<T>> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max);
    if det.norm() <= T::lit(1e3) * T::epsilon() * scale * scale {
        return Err(Error::Singular(format!("{name} (det = {det})")));
    }
    Ok([
        (m[1][1] * b[0] - m[0][1] * b[1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ])
}

fn complex_mat<T: Scalar>(h: [[T; 2]; 2]) -> [[Complex<T>; 2]; 2] {
    [[cx(h[0][0]), cx(h[0][1])], [cx(h[1][0]), cx(h[1][1])]]
}

/// Quadratic and cubic forms of the reaction terms at the critical point.
struct Forms<T> {
    f20: [T; 2],
    f11: [T; 2],
    f02: [T; 2],
    f30: [T; 2],
    f21: [T; 2],
    f12: [T; 2],
    f03: [T; 2],
    f101: [T; 2],
    f011: [T; 2],
}

impl<T: Scalar> Forms<T> {
    fn new(t: &TaylorTable<T>) -> Self {
        Forms {
            f20: t.f(2, 0, 0),
            f11: t.f(1, 1, 0),
            f02: t.f(0, 2, 0),
            f30: t.f(3, 0, 0),
            f21: t.f(2, 1, 0),
            f12: t.f(1, 2, 0),
            f03: t.f(0, 3, 0),
            f101: t.f(1, 0, 1),
            f011: t.f(0, 1, 1),
        }
    }

    fn b(&self, a: &C2<T>, b: &C2<T>) -> C2<T> {
        let term = |k: usize| {
            a[0] * b[0] * self.f20[k]
                + (a[0] * b[1] + a[1] * b[0]) * self.f11[k]
                + a[1] * b[1] * self.f02[k]
        };
        [term(0), term(1)]
    }

    fn c(&self, a: &C2<T>, b: &C2<T>, c: &C2<T>) -> C2<T> {
        let term = |k: usize| {
            a[0] * b[0] * c[0] * self.f30[k]
                + (a[0] * b[0] * c[1] + a[0] * b[1] * c[0] + a[1] * b[0] * c[0]) * self.f21[k]
                + (a[0] * b[1] * c[1] + a[1] * b[0] * c[1] + a[1] * b[1] * c[0]) * self.f12[k]
                + a[1] * b[1] * c[1] * self.f03[k]
        };
        [term(0), term(1)]
    }
}

struct Setup<T> {
    lin: LinearizationAtE31<T>,
    forms: Forms<T>,
}

fn setup<T: Scalar>(p: &ScaledParams<T>, d2: T, theta_star: T) -> Result<Setup<T>> {
    let at = p.with_d2(d2).with_theta(theta_star);
    at.validate()?;
    let e = positive_equilibrium(&at, EquilibriumKind::E31)
        .ok_or_else(|| Error::Precondition("parameters admit no E31 equilibrium".to_string()))?;
    let lin = LinearizationAtE31::new(&at)?;
    let table = TaylorTable::new(e.u, e.v, &at, theta_star)?;
    Ok(Setup {
        lin,
        forms: Forms::new(&table),
    })
}

/// Every mode other than `s` must stay off the imaginary axis at `θ*`.
fn check_other_modes<T: Scalar>(lin: &LinearizationAtE31<T>, s: u32) -> Result<()> {
    let k_max = 4 * lin.k_star() + 4;
    let tol = T::lit(1e-10);
    for k in (0..=k_max.max(s + 4)).filter(|&k| k != s) {
        let m = lin.mode(k);
        if m.eigenvalues.iter().any(|l| l.re.abs() <= tol) {
            return Err(Error::DegeneratePoint(format!(
                "mode {k} is also critical at theta* = {}",
                lin.theta
            )));
        }
    }
    Ok(())
}

pub fn hopf_normal_form<T: Scalar>(
    s: u32,
    d2: T,
    theta: T,
    p: &ScaledParams<T>,
) -> Result<HopfNF<T>> {
    let base = LinearizationAtE31::new(&p.with_d2(d2))?;
    let theta_star = base.theta_hopf(s, d2);
    if !(theta_star > T::zero()) {
        return Err(Error::NoHopf(format!(
            "mode-{s} Hopf curve has theta* = {theta_star} <= 0 at d2 = {d2}"
        )));
    }
    let Setup { lin, forms } = setup(p, d2, theta_star)?;
    let ds = lin.d_k(s);
    if !(ds > T::zero()) {
        return Err(Error::NoHopf(format!(
            "D_{s} = {ds} <= 0 on the Hopf curve: eigenvalues are real"
        )));
    }
    check_other_modes(&lin, s)?;

    let two = T::lit(2.0);
    let i = Complex::<T>::i();
    let omega = ds.sqrt();
    let iw = i * omega;
    let ss = T::from_u32(s * s).expect("mode index");
    let (c, d1, delta1, delta2) = (lin.c, lin.d1, lin.delta1, lin.delta2);

    let pv: C2<T> = [
        (cx(d2 * ss + delta2 * theta_star) + iw) * (two * c / theta_star),
        cx(T::one()),
    ];
    let qv: C2<T> = [
        cx(theta_star) / (iw * (T::lit(4.0) * c)),
        (cx(d1 * ss - delta1) + iw) / (iw * two),
    ];
    let pb = conj2(&pv);

    let hs = complex_mat(lin.h_matrix(s));
    let hs_t = [[hs[0][0], hs[1][0]], [hs[0][1], hs[1][1]]];
    let hp = mat_vec(&hs, &pv);
    let hq = mat_vec(&hs_t, &qv);
    let residuals = EigenResiduals {
        right: (hp[0] - iw * pv[0]).norm().max((hp[1] - iw * pv[1]).norm()),
        left: (hq[0] - iw * qv[0]).norm().max((hq[1] - iw * qv[1]).norm()),
        normalization: (dot(&qv, &pv) - cx(T::one())).norm(),
    };

    let a20 = forms.b(&pv, &pv);
    let a11 = {
        let x = forms.b(&pv, &pb);
        [x[0] * two, x[1] * two]
    };
    let a02 = conj2(&a20);
    let b21 = dot(&qv, &forms.c(&pv, &pv, &pb));
    let pi = T::PI();
    let sqrt_pi = pi.sqrt();
    let two_iw_minus = |h: [[Complex<T>; 2]; 2]| {
        [[iw * two - h[0][0], -h[0][1]], [-h[1][0], iw * two - h[1][1]]]
    };

    let (c21, e_terms, r2) = if s == 0 {
        let g20 = dot(&qv, &a20);
        let g11 = dot(&qv, &a11);
        let g02 = dot(&qv, &a02);
        let c21 = i / omega
            * (g20 * g11 - cx(g11.norm_sqr()) - cx(T::lit(2.0 / 3.0) * g02.norm_sqr()));
        let qb = conj2(&qv);
        let project = |x: C2<T>| {
            let (a, b) = (dot(&qv, &x), dot(&qb, &x));
            [x[0] - a * pv[0] - b * pb[0], x[1] - a * pv[1] - b * pb[1]]
        };
        let h0 = complex_mat(lin.h_matrix(0));
        let inv_sqrt_pi = T::one() / sqrt_pi;
        let h20 = solve2(two_iw_minus(h0), project(a20), "2iwI - H_0")?;
        let h11 = solve2(h0, project(a11), "H_0")?;
        let h20 = [h20[0] * inv_sqrt_pi, h20[1] * inv_sqrt_pi];
        let h11 = [-h11[0] * inv_sqrt_pi, -h11[1] * inv_sqrt_pi];
        let e = {
            let x = forms.b(&pv, &h11);
            let y = forms.b(&pb, &h20);
            dot(&qv, &[x[0] + y[0], x[1] + y[1]])
        };
        let r2 = b21 / (two * pi) + c21 / (T::lit(4.0) * pi) + e / (two * sqrt_pi);
        (Some(c21), vec![(0, e)], r2)
    } else {
        let mut r2 = b21 * (T::lit(3.0) / (T::lit(4.0) * pi));
        let mut terms = Vec::new();
        for j in [0, 2 * s] {
            let sg = sigma::<T>(s, j);
            let hj = complex_mat(lin.h_matrix(j));
            let h20 = solve2(two_iw_minus(hj), a20, &format!("2iwI - H_{j}"))?;
            let h11 = solve2(hj, a11, &format!("H_{j}"))?;
            let h20 = [h20[0] * sg, h20[1] * sg];
            let h11 = [-h11[0] * sg, -h11[1] * sg];
            let x = forms.b(&pv, &h11);
            let y = forms.b(&pb, &h20);
            let e = dot(&qv, &[x[0] + y[0], x[1] + y[1]]);
            r2 = r2 + e * (sg / two);
            terms.push((j, e));
        }
        (None, terms, r2)
    };

    let r1 = (pv[0] * forms.f101[1] + pv[1] * forms.f011[1]) * qv[1];
    let v2 = r2.re;
    let verdict = if v2.abs() <= T::lit(DEGENERACY_TOL) {
        HopfVerdict::Degenerate
    } else if v2 < T::zero() {
        HopfVerdict::SupercriticalStable
    } else {
        HopfVerdict::SubcriticalUnstable
    };
    Ok(HopfNF {
        s,
        d2,
        theta_star,
        theta,
        omega,
        p: pv,
        q: qv,
        b21,
        c21,
        a20,
        a11,
        a02,
        e_terms,
        r1,
        r2,
        v1: r1.re,
        v2,
        verdict,
        residuals,
    })
}

pub fn pitchfork_normal_form<T: Scalar>(
    s: u32,
    d2: T,
    theta: T,
    p: &ScaledParams<T>,
    sign: HSign,
) -> Result<PitchforkNF<T>> {
    if s == 0 {
        return Err(Error::Precondition("pitchfork needs mode s >= 1".to_string()));
    }
    let base = LinearizationAtE31::new(&p.with_d2(d2))?;
    let theta_star = base.turing_curve_theta(s, d2)?;
    if !(theta_star > T::zero()) {
        return Err(Error::Precondition(format!(
            "mode-{s} Turing line has theta* = {theta_star} <= 0 at d2 = {d2}"
        )));
    }
    let Setup { lin, forms } = setup(p, d2, theta_star)?;
    let ts = lin.t_k(s);
    if ts.abs() <= T::lit(1e-12) {
        return Err(Error::DegeneratePoint(format!(
            "T_{s} = 0 at theta* (Turing-Hopf point)"
        )));
    }
    check_other_modes(&lin, s)?;

    let ss = T::from_u32(s * s).expect("mode index");
    let (d1, delta1, delta2) = (lin.d1, lin.delta1, lin.delta2);
    let pv = [T::one(), (delta1 - d1 * ss) / delta2];
    let qv = [-(d2 * ss + delta2 * theta_star) / ts, delta2 / ts];
    let h = lin.h_matrix(s);
    let residuals = EigenResiduals {
        right: (h[0][0] * pv[0] + h[0][1] * pv[1])
            .abs()
            .max((h[1][0] * pv[0] + h[1][1] * pv[1]).abs()),
        left: (qv[0] * h[0][0] + qv[1] * h[1][0])
            .abs()
            .max((qv[0] * h[0][1] + qv[1] * h[1][1]).abs()),
        normalization: (qv[0] * pv[0] + qv[1] * pv[1] - T::one()).abs(),
    };

    let pc = cvec(pv);
    let qc = cvec(qv);
    let a20 = forms.b(&pc, &pc);
    let gamma = dot(&qc, &forms.c(&pc, &pc, &pc)).re;
    let pi = T::PI();
    let two = T::lit(2.0);
    let mut q30 = gamma / (T::lit(4.0) * pi);
    let mut gamma_terms = Vec::new();
    let sgn = match sign {
        HSign::Minus => -T::one(),
        HSign::Plus => T::one(),
    };
    for j in [0, 2 * s] {
        let sg = sigma::<T>(s, j);
        let hj = solve2(complex_mat(lin.h_matrix(j)), a20, &format!("H_{j}"))?;
        let hj = [hj[0] * (sgn * sg), hj[1] * (sgn * sg)];
        let g = dot(&qc, &forms.b(&pc, &hj)).re;
        q30 = q30 + g * sg / two;
        gamma_terms.push((j, g));
    }
    let q11 = (forms.f101[1] * pv[0] + forms.f011[1] * pv[1]) * qv[1];
    let verdict = if q30.abs() <= T::lit(DEGENERACY_TOL) {
        PitchforkVerdict::Degenerate
    } else if q30 < T::zero() {
        PitchforkVerdict::Supercritical
    } else {
        PitchforkVerdict::Subcritical
    };
    Ok(PitchforkNF {
        s,
        d2,
        theta_star,
        theta,
        t_s: ts,
        t_s_at_theta: lin.with_theta(theta).t_k(s),
        p: pv,
        q: qv,
        gamma,
        gamma_terms,
        q11,
        q30,
        sign,
        verdict,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reaction;
    use proptest::prelude::*;

    fn h2() -> ScaledParams<f64> {
        ScaledParams::h2(0.662, 0.15)
    }

    #[test]
    fn sigma_table() {
        let pi = std::f64::consts::PI;
        assert!((sigma::<f64>(1, 0) - 1.0 / pi.sqrt()).abs() < 1e-16);
        assert!((sigma::<f64>(1, 2) - 1.0 / (2.0 * pi).sqrt()).abs() < 1e-16);
        assert_eq!(sigma::<f64>(1, 3), 0.0);
    }

    #[test]
    fn homogeneous_hopf() {
        let nf = hopf_normal_form(0, 0.15, 0.662, &h2()).unwrap();
        assert!((nf.theta_star - 0.6627).abs() < 5e-5);
        assert!((nf.omega - 0.035).abs() < 1e-3);
        assert!((nf.v1 + 0.15).abs() < 1e-12);
        assert!(nf.residuals.max() < 1e-10, "{:?}", nf.residuals);
        assert!(nf.v2 > 0.0);
        assert_eq!(nf.verdict, HopfVerdict::SubcriticalUnstable);
        assert!((nf.epsilon() - (0.662 - nf.theta_star)).abs() < 1e-15);
        assert!((nf.rate(0.0, 0.1) - nf.v2 * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn inhomogeneous_hopf() {
        let nf = hopf_normal_form(1, 0.002, 0.32, &h2()).unwrap();
        assert!((nf.theta_star - 0.3227).abs() < 5e-5);
        assert!(nf.residuals.max() < 1e-10);
        assert!((nf.v1 + 0.15).abs() < 1e-12);
        assert_eq!(nf.verdict, HopfVerdict::SupercriticalStable);
        assert_eq!(nf.e_terms.len(), 2);
        assert!(nf.c21.is_none());
    }

    #[test]
    fn pitchfork_mode_one() {
        let nf = pitchfork_normal_form(1, 0.4, 1.24, &h2(), HSign::Minus).unwrap();
        assert!((nf.theta_star - 1.2408).abs() < 5e-5);
        assert!((nf.t_s_at_theta + 0.6732).abs() < 5e-5);
        assert!((nf.p[1] - 0.3294).abs() < 5e-5);
        assert!(nf.residuals.max() < 1e-12);
        assert_eq!(nf.verdict, PitchforkVerdict::Supercritical);
        // Q11 is the Turing transversality dλ/dθ
        let lin = LinearizationAtE31::new(&h2().with_d2(0.4)).unwrap();
        let tr = lin.transversality_turing(1, 0.4).unwrap();
        assert!((nf.q11 - tr).abs() < 1e-12);
        let plus = pitchfork_normal_form(1, 0.4, 1.24, &h2(), HSign::Plus).unwrap();
        assert!(plus.q30 != nf.q30);
        assert!(pitchfork_normal_form(0, 0.4, 1.24, &h2(), HSign::Minus).is_err());
    }

    #[test]
    fn hopf_off_curve_is_rejected() {
        // mode 2 Hopf curve sits at negative θ for this d2
        assert!(matches!(
            hopf_normal_form(2, 0.4, 0.3, &h2()),
            Err(Error::NoHopf(_))
        ));
    }

    /// Oracle for the homogeneous cubic coefficient: integrate the local
    /// system at θ* from a small amplitude and fit the drift of `1/ρ^2`,
    /// which the normal form predicts to be `-2 v2 t`.
    #[test]
    fn homogeneous_cubic_coefficient_matches_direct_integration() {
        let nf = hopf_normal_form(0, 0.15, 0.662, &h2()).unwrap();
        let p = h2().with_theta(nf.theta_star);
        let e = positive_equilibrium(&p, EquilibriumKind::E31).unwrap();
        let (u0, v0) = (e.u, e.v);
        let sp = std::f64::consts::PI.sqrt();
        let f = |x: (f64, f64)| reaction(x.0, x.1, &p).unwrap();
        let rk4 = |s: (f64, f64), dt: f64| {
            let k1 = f(s);
            let k2 = f((s.0 + 0.5 * dt * k1.0, s.1 + 0.5 * dt * k1.1));
            let k3 = f((s.0 + 0.5 * dt * k2.0, s.1 + 0.5 * dt * k2.1));
            let k4 = f((s.0 + dt * k3.0, s.1 + dt * k3.1));
            (
                s.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                s.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            )
        };
        let rho0 = 0.002;
        let mut s = (
            u0 + 2.0 * rho0 * nf.p[0].re / sp,
            v0 + 2.0 * rho0 * nf.p[1].re / sp,
        );
        let (dt, t_fit) = (0.25, 6000.0);
        let steps = (t_fit / dt) as usize;
        let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..=steps {
            let t = i as f64 * dt;
            let z = (nf.q[0] * (s.0 - u0) + nf.q[1] * (s.1 - v0)) * sp;
            let y = 1.0 / z.norm_sqr();
            st += t;
            sy += y;
            stt += t * t;
            sty += t * y;
            s = rk4(s, dt);
        }
        let n = (steps + 1) as f64;
        let slope = (n * sty - st * sy) / (n * stt - st * st);
        let v2 = -slope / 2.0;
        assert!((v2 - nf.v2).abs() / nf.v2.abs() < 0.03, "{v2} vs {}", nf.v2);
    }

    fn hopf_draw() -> impl Strategy<Value = (u32, f64, ScaledParams<f64>)> {
        (0u32..3, 0.0005f64..0.3, 0.02f64..0.2).prop_filter_map(
            "needs a simple Hopf point",
            |(s, d2, d1)| {
                let p = ScaledParams { d1, ..h2() };
                let lin = LinearizationAtE31::new(&p.with_d2(d2)).ok()?;
                let ts = lin.theta_hopf(s, d2);
                (ts > 0.01 && lin.with_theta(ts).d_k(s) > 1e-8).then_some((s, d2, p))
            },
        )
    }

    fn turing_draw() -> impl Strategy<Value = (u32, f64, ScaledParams<f64>)> {
        (1u32..3, 0.05f64..2.0, 0.005f64..0.1).prop_filter_map(
            "needs a Turing point",
            |(s, d2, d1)| {
                let p = ScaledParams { d1, ..h2() };
                let lin = LinearizationAtE31::new(&p.with_d2(d2)).ok()?;
                let tt = lin.turing_curve_theta(s, d2).ok()?;
                (tt > 0.01 && s <= lin.k_star()).then_some((s, d2, p))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn hopf_eigen_residuals((s, d2, p) in hopf_draw()) {
            match hopf_normal_form(s, d2, 0.5, &p) {
                Ok(nf) => {
                    prop_assert!(nf.residuals.max() < 1e-8, "{:?}", nf.residuals);
                    prop_assert!((nf.rate(0.0, 0.1) - nf.v2 * 1e-3).abs() < 1e-15 * nf.v2.abs().max(1.0));
                }
                Err(Error::DegeneratePoint(_)) | Err(Error::Singular(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn pitchfork_eigen_residuals((s, d2, p) in turing_draw()) {
            match pitchfork_normal_form(s, d2, 1.0, &p, HSign::Minus) {
                Ok(nf) => prop_assert!(nf.residuals.max() < 1e-8, "{:?}", nf.residuals),
                Err(Error::DegeneratePoint(_)) | Err(Error::Singular(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
