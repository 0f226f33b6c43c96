//! Linear stability of the local kinetics, the degenerate equilibrium `E33`,
//! and nondegeneracy quantities for the codimension-one local bifurcations.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::equilibria::{classify_case, find_equilibria, m2, Case, Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{Partials, ScaledParams};
use crate::scalar::Scalar;

/// Tolerance for sign decisions on trace, determinant and critical θ.
pub const SIGN_TOL: f64 = 1e-12;
/// Threshold below which a Sotomayor quantity counts as zero.
pub const NONDEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2<T> {
    pub j11: T,
    pub j12: T,
    pub j21: T,
    pub j22: T,
}

impl<T: Scalar> Jacobian2<T> {
    pub fn new(j11: T, j12: T, j21: T, j22: T) -> Self {
        Jacobian2 { j11, j12, j21, j22 }
    }

    pub fn trace(&self) -> T {
        self.j11 + self.j22
    }

    pub fn det(&self) -> T {
        self.j11 * self.j22 - self.j12 * self.j21
    }

    /// `trace^2 - 4 det`; negative for a focus.
    pub fn discriminant(&self) -> T {
        let t = self.trace();
        t * t - T::lit(4.0) * self.det()
    }

    /// Roots of `λ^2 - trace λ + det`, larger real part first.
    pub fn eigenvalues(&self) -> [Complex<T>; 2] {
        quadratic_roots(self.trace(), self.det())
    }
}

/// Roots of `λ^2 - t λ + d = 0`, larger real part (then larger imaginary
/// part) first.
pub fn quadratic_roots<T: Scalar>(t: T, d: T) -> [Complex<T>; 2] {
    let half = T::lit(0.5) * t;
    let disc = half * half - d;
    if disc >= T::zero() {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if half >= T::zero() { half + r } else { half - r };
        let small = if big != T::zero() { d / big } else { T::zero() };
        let (a, b) = if big >= small { (big, small) } else { (small, big) };
        [Complex::new(a, T::zero()), Complex::new(b, T::zero())]
    } else {
        let w = (-disc).sqrt();
        [Complex::new(half, w), Complex::new(half, -w)]
    }
}

pub fn jacobian<T: Scalar>(eq: &Equilibrium<T>, p: &ScaledParams<T>) -> Result<Jacobian2<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    match eq.kind {
        EquilibriumKind::E0 => Err(Error::NotLinearizable("E0 (sqrt(u) is not differentiable at u = 0)")),
        EquilibriumKind::E1 => Ok(Jacobian2::new(
            (p.m - one) / (p.n + one),
            -one,
            T::zero(),
            p.theta,
        )),
        EquilibriumKind::E2 => {
            let s = p.m.sqrt();
            Ok(Jacobian2::new(
                p.m * (one - p.m) / (p.n + p.m),
                -s,
                T::zero(),
                p.theta * s,
            ))
        }
        _ => {
            let u = eq.u;
            if !(u > T::zero()) {
                return Err(Error::DegeneratePoint(format!(
                    "{} has nonpositive prey density {u}",
                    eq.kind
                )));
            }
            let s = u.sqrt();
            let num = (one - (p.m + one) * p.c) * u + two * (p.m * p.c + p.n);
            let j11 = num / (p.c * (u + p.n)) + one / (two * p.c);
            Ok(Jacobian2::new(j11, -s, p.theta / (two * p.c), -p.theta * s))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityLabel {
    Saddle,
    UnstableNode,
    StableFocusOrNode,
    UnstableFocusOrNode,
    SaddleNode,
    CuspCodim2,
    CuspCodimGe3,
    DegenerateSingularity,
    HopfCritical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Thresholds<T> {
    pub theta30: Option<T>,
    pub theta31: Option<T>,
    pub theta33: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict<T> {
    pub kind: EquilibriumKind,
    pub label: StabilityLabel,
    pub trace: T,
    pub det: T,
    pub discriminant: T,
    pub thresholds: Thresholds<T>,
}

/// θ at which the trace of `J(E30)` or `J(E31)` vanishes.
pub fn theta_trace_zero<T: Scalar>(u: T, p: &ScaledParams<T>) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let num = (T::lit(3.0) - two * (p.m + one) * p.c) * u
        + T::lit(4.0) * p.m * p.c
        + T::lit(5.0) * p.n;
    num / (two * p.c * u.sqrt() * (u + p.n))
}

/// `θ33 = 1 / (2c sqrt(u33))`.
pub fn theta33<T: Scalar>(u33: T, c: T) -> T {
    T::one() / (T::lit(2.0) * c * u33.sqrt())
}

pub fn classify<T: Scalar>(eq: &Equilibrium<T>, p: &ScaledParams<T>) -> Result<StabilityVerdict<T>> {
    use StabilityLabel::*;
    let j = jacobian(eq, p)?;
    let tol = T::lit(SIGN_TOL);
    let (tr, det) = (j.trace(), j.det());
    let mut thresholds = Thresholds::default();
    let by_signs = || {
        if det < -tol {
            Saddle
        } else if tr < -tol {
            StableFocusOrNode
        } else if tr > tol {
            UnstableFocusOrNode
        } else {
            HopfCritical
        }
    };
    let label = match eq.kind {
        EquilibriumKind::E0 => unreachable!("jacobian rejects E0"),
        EquilibriumKind::E1 | EquilibriumKind::E32 => by_signs(),
        EquilibriumKind::E2 => {
            if det > tol && tr > tol && j.discriminant() >= T::zero() {
                UnstableNode
            } else {
                by_signs()
            }
        }
        EquilibriumKind::E30 | EquilibriumKind::E31 => {
            let crit = theta_trace_zero(eq.u, p);
            if eq.kind == EquilibriumKind::E30 {
                thresholds.theta30 = Some(crit);
            } else {
                thresholds.theta31 = Some(crit);
            }
            if det <= tol {
                by_signs()
            } else if (p.theta - crit).abs() <= tol * crit.max(T::one()) {
                HopfCritical
            } else if p.theta > crit {
                StableFocusOrNode
            } else {
                UnstableFocusOrNode
            }
        }
        EquilibriumKind::E33 => {
            thresholds.theta33 = Some(theta33(eq.u, p.c));
            degenerate_chain(p)?.classification
        }
    };
    Ok(StabilityVerdict {
        kind: eq.kind,
        label,
        trace: tr,
        det,
        discriminant: j.discriminant(),
        thresholds,
    })
}

/// Expansion coefficients at `E33` and the quantities that decide its type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateChain<T> {
    pub u33: T,
    pub theta33: T,
    /// `a[i-1]` is `a_i`: Taylor coefficients of the prey equation.
    pub a: [T; 6],
    /// `b[i-1]` is `b_i`: Taylor coefficients of the predator equation.
    pub b: [T; 7],
    /// Quadratic coefficients after `u -> u - v/θ`.
    pub c: [T; 3],
    /// Linear part of the predator equation after `u -> u - v/θ`; `d[1]` is the trace.
    pub d: [T; 2],
    /// Coefficient of `u^2` on the center direction; `None` at `θ = θ33`.
    pub k1: Option<T>,
    /// Coefficients after `v -> v + θu` (used at `θ = θ33`).
    pub alpha: [T; 5],
    pub beta: [T; 5],
    pub cusp_test: T,
    pub classification: StabilityLabel,
}

pub fn degenerate_chain<T: Scalar>(p: &ScaledParams<T>) -> Result<DegenerateChain<T>> {
    let cls = classify_case(p);
    if cls.case != Case::D {
        return Err(Error::Precondition(format!(
            "E33 exists only when n = m2 = {} and (m+1)c > 1 (case {:?})",
            m2(p),
            cls.case
        )));
    }
    let e = find_equilibria(p)
        .into_iter()
        .find(|e| e.kind == EquilibriumKind::E33)
        .expect("case d yields E33");
    let th = p.theta;
    let d = Partials::of(e.u, e.v, p)?;
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let a = [
        d.get(1, 0)[0],
        d.get(0, 1)[0],
        half * d.get(2, 0)[0],
        d.get(1, 1)[0],
        half * d.get(2, 1)[0],
        sixth * d.get(3, 0)[0],
    ];
    let b = [
        d.get(1, 0)[1],
        d.get(0, 1)[1],
        half * d.get(2, 0)[1],
        d.get(1, 1)[1],
        half * d.get(0, 2)[1],
        sixth * d.get(3, 0)[1],
        half * d.get(2, 1)[1],
    ];
    let [a1, a2, a3, a4, a5, a6] = a;
    let [b1, b2, b3, b4, b5, b6, b7] = b;
    let two = T::lit(2.0);

    let c1 = a3 - b3 / th;
    let c2 = a4 - b4 / th + two / th * c1;
    let c3 = c1 / (th * th) + (a4 - b4 / th) / th - b5 / th;
    let d1 = b1;
    let d2 = b2 + b1 / th;
    let _ = a1;

    let alpha = [a2, a3 + a4 * th, a4, a5, a6 + a5 * th];
    let beta = [
        b3 + b4 * th + b5 * th * th - a3 * th - a4 * th * th,
        b4 + two * b5 * th - a4 * th,
        b5,
        b7 - a5 * th,
        b6 + b7 * th - a5 * th * th - a6 * th,
    ];
    let cusp_test = two * alpha[1] + alpha[2];

    let t33 = theta33(e.u, p.c);
    let tol = T::lit(SIGN_TOL);
    let at_critical = (th - t33).abs() <= tol * t33.max(T::one());
    let zero = |x: T| x.abs() <= tol;
    let (k1, classification) = if at_critical {
        let label = if zero(beta[0]) {
            StabilityLabel::DegenerateSingularity
        } else if zero(cusp_test) {
            StabilityLabel::CuspCodimGe3
        } else {
            StabilityLabel::CuspCodim2
        };
        (None, label)
    } else {
        let k1 = c1 - c2 * d1 / d2 + c3 * d1 * d1 / (d2 * d2);
        let label = if zero(k1) {
            StabilityLabel::DegenerateSingularity
        } else {
            StabilityLabel::SaddleNode
        };
        (Some(k1), label)
    };
    Ok(DegenerateChain {
        u33: e.u,
        theta33: t33,
        a,
        b,
        c: [c1, c2, c3],
        d: [d1, d2],
        k1,
        alpha,
        beta,
        cusp_test,
        classification,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalBifurcation {
    Transcritical,
    SaddleNode,
    Hopf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SotomayorReport<T> {
    pub bifurcation: LocalBifurcation,
    pub critical_name: &'static str,
    pub critical_value: T,
    pub quantities: Vec<(&'static str, T)>,
    pub nondegenerate: bool,
}

impl<T: Scalar> SotomayorReport<T> {
    pub fn quantity(&self, name: &str) -> Option<T> {
        self.quantities.iter().find(|(n, _)| *n == name).map(|&(_, x)| x)
    }
}

fn nonzero<T: Scalar>(x: T) -> bool {
    x.abs() > T::lit(NONDEGENERACY_TOL)
}

/// Which boundary state the transcritical report is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TranscriticalAt {
    E1,
    E2,
}

/// Transcritical bifurcation of `E1` and `E2` at `m = 1`, with
/// `V = (1, 0)` and `W = (θ, 1)`.
///
/// `W^T [DG_m V]` is `+θ/(n+1)`: differentiating the prey equation in `m`
/// gives `-u(1-u)/(u+n)`, whose `u`-derivative at `u = 1` is `1/(n+1)`.
pub fn sotomayor_transcritical<T: Scalar>(
    p: &ScaledParams<T>,
    at: TranscriticalAt,
) -> Result<SotomayorReport<T>> {
    let one = T::one();
    if (p.m - one).abs() > T::lit(SIGN_TOL) {
        return Err(Error::Precondition(format!(
            "E1 and E2 coincide only at m = 1, got m = {}",
            p.m
        )));
    }
    // The two states coincide, so either anchor gives the same quantities.
    let _ = at;
    let (u, n, th) = (one, p.n, p.theta);
    let w = [th, one];
    let g_m = [-u * (one - u) / (u + n), T::zero()];
    let dg_m_v = [
        -(one - T::lit(2.0) * u) / (u + n) + u * (one - u) / ((u + n) * (u + n)),
        T::zero(),
    ];
    // m = 1 exactly here: prey term is -u(1-u)^2/(u+n); the herd term has no
    // u-curvature on v = 0.
    let d2g_vv = [-T::lit(2.0) * u / (u + n), T::zero()];
    let dot = |x: [T; 2]| w[0] * x[0] + w[1] * x[1];
    let q = [
        ("WT_G_m", dot(g_m)),
        ("WT_DG_m_V", dot(dg_m_v)),
        ("WT_D2G_VV", dot(d2g_vv)),
    ];
    Ok(SotomayorReport {
        bifurcation: LocalBifurcation::Transcritical,
        critical_name: "m",
        critical_value: one,
        nondegenerate: q[0].1.abs() <= T::lit(NONDEGENERACY_TOL) && nonzero(q[1].1) && nonzero(q[2].1),
        quantities: q.to_vec(),
    })
}

/// Saddle-node of `E30` and `E32` at `n = m2`, with
/// `V = (1, 1/(2c sqrt(u33)))` and `W = (-θ, 1)`.
pub fn sotomayor_saddle_node<T: Scalar>(p: &ScaledParams<T>) -> Result<SotomayorReport<T>> {
    let chain = degenerate_chain(p)?;
    if chain.k1.is_none() {
        return Err(Error::Precondition(format!(
            "saddle-node test needs θ != θ33 = {}",
            chain.theta33
        )));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let u = chain.u33;
    let v = u.sqrt() / p.c;
    let th = p.theta;
    let vv = [one, one / (two * p.c * u.sqrt())];
    let w = [-th, one];
    let g_n = [u * (u - one) * (u - p.m) / ((u + p.n) * (u + p.n)), T::zero()];
    let d = Partials::of(u, v, p)?;
    let quad = |k: usize| {
        d.get(2, 0)[k] * vv[0] * vv[0]
            + two * d.get(1, 1)[k] * vv[0] * vv[1]
            + d.get(0, 2)[k] * vv[1] * vv[1]
    };
    let d2g = [quad(0), quad(1)];
    let dot = |x: [T; 2]| w[0] * x[0] + w[1] * x[1];
    let q = [("WT_G_n", dot(g_n)), ("WT_D2G_VV", dot(d2g))];
    Ok(SotomayorReport {
        bifurcation: LocalBifurcation::SaddleNode,
        critical_name: "n_SN",
        critical_value: m2(p),
        nondegenerate: nonzero(q[0].1) && nonzero(q[1].1),
        quantities: q.to_vec(),
    })
}

/// Hopf bifurcation of `E30` or `E31` in θ.
pub fn hopf_local<T: Scalar>(eq: &Equilibrium<T>, p: &ScaledParams<T>) -> Result<SotomayorReport<T>> {
    if !matches!(eq.kind, EquilibriumKind::E30 | EquilibriumKind::E31) {
        return Err(Error::NoHopf(format!("{} is not E30 or E31", eq.kind)));
    }
    let crit = theta_trace_zero(eq.u, p);
    let j = jacobian(eq, &p.with_theta(crit))?;
    if j.det() <= T::zero() {
        return Err(Error::NoHopf(format!(
            "det J({}) = {} <= 0 at the trace-zero point",
            eq.kind,
            j.det()
        )));
    }
    let slope = -eq.u.sqrt();
    Ok(SotomayorReport {
        bifurcation: LocalBifurcation::Hopf,
        critical_name: if eq.kind == EquilibriumKind::E30 { "theta30" } else { "theta31" },
        critical_value: crit,
        quantities: vec![("dtrace_dtheta", slope), ("omega", j.det().sqrt())],
        nondegenerate: nonzero(slope),
    })
}
