//! Boundary and positive steady states of the local kinetics.
//!
//! Positive equilibria lie on the predator nullcline `v = sqrt(u)/c` and
//! solve `h(u) = c u^2 + (1 - (m+1)c) u + mc + n = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{reaction, ScaledParams};
use crate::scalar::Scalar;

/// Absolute tolerance used to decide `n = m1` and `n = m2`.
pub const CASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    E0,
    E1,
    E2,
    E30,
    E31,
    E32,
    E33,
}

impl EquilibriumKind {
    pub fn is_positive(self) -> bool {
        matches!(
            self,
            EquilibriumKind::E30 | EquilibriumKind::E31 | EquilibriumKind::E32 | EquilibriumKind::E33
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::E0 => "E0",
            EquilibriumKind::E1 => "E1",
            EquilibriumKind::E2 => "E2",
            EquilibriumKind::E30 => "E30",
            EquilibriumKind::E31 => "E31",
            EquilibriumKind::E32 => "E32",
            EquilibriumKind::E33 => "E33",
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    pub kind: EquilibriumKind,
    pub u: T,
    pub v: T,
}

impl<T: Scalar> Equilibrium<T> {
    pub fn new(kind: EquilibriumKind, u: T, v: T) -> Self {
        Equilibrium { kind, u, v }
    }

    /// Positive equilibrium with prey density `u` on the predator nullcline.
    pub fn positive(kind: EquilibriumKind, u: T, c: T) -> Self {
        Equilibrium {
            kind,
            u,
            v: u.sqrt() / c,
        }
    }

    /// Max-norm of the reaction terms at this point.
    pub fn residual(&self, p: &ScaledParams<T>) -> T {
        match reaction(self.u, self.v, p) {
            Ok((f1, f2)) => f1.abs().max(f2.abs()),
            Err(_) => T::infinity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// `n < m1`: one positive equilibrium.
    A,
    /// `n = m1`, `(m+1)c > 1`: one positive equilibrium.
    B,
    /// `m1 < n < m2`, `(m+1)c > 1`: two positive equilibria.
    C,
    /// `n = m2`, `(m+1)c > 1`: one double positive equilibrium.
    D,
    /// No positive equilibrium.
    E,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCase<T> {
    pub case: Case,
    pub m1: T,
    pub m2: T,
    pub discriminant: T,
    /// Signed distances `n - m1` and `n - m2`, for continuation callers.
    pub n_minus_m1: T,
    pub n_minus_m2: T,
    /// Set when the parameters sit on a threshold that admits no positive root.
    pub note: Option<String>,
}

/// `h(u) = c u^2 + (1 - (m+1)c) u + mc + n`.
pub fn h_poly<T: Scalar>(u: T, p: &ScaledParams<T>) -> T {
    let one = T::one();
    p.c * u * u + (one - (p.m + one) * p.c) * u + p.m * p.c + p.n
}

pub fn m1<T: Scalar>(p: &ScaledParams<T>) -> T {
    -p.m * p.c
}

pub fn m2<T: Scalar>(p: &ScaledParams<T>) -> T {
    let b = T::one() - (p.m + T::one()) * p.c;
    b * b / (T::lit(4.0) * p.c) - p.m * p.c
}

pub fn discriminant<T: Scalar>(p: &ScaledParams<T>) -> T {
    let b = T::one() - (p.m + T::one()) * p.c;
    b * b - T::lit(4.0) * p.c * (p.m * p.c + p.n)
}

pub fn classify_case<T: Scalar>(p: &ScaledParams<T>) -> EquilibriumCase<T> {
    let tol = T::lit(CASE_TOL);
    let (m1, m2) = (m1(p), m2(p));
    let (d1, d2) = (p.n - m1, p.n - m2);
    let steep = (p.m + T::one()) * p.c > T::one();
    let no_root = |what: &str| {
        Some(format!(
            "{what} with (m+1)c <= 1 admits no positive equilibrium"
        ))
    };
    let (case, note) = if d1.abs() <= tol {
        if steep {
            (Case::B, None)
        } else {
            (Case::E, no_root("n = m1"))
        }
    } else if d1 < T::zero() {
        (Case::A, None)
    } else if d2.abs() <= tol {
        if steep {
            (Case::D, None)
        } else {
            (Case::E, no_root("n = m2"))
        }
    } else if d2 < T::zero() {
        if steep {
            (Case::C, None)
        } else {
            (Case::E, no_root("m1 < n < m2"))
        }
    } else {
        (Case::E, None)
    };
    EquilibriumCase {
        case,
        m1,
        m2,
        discriminant: discriminant(p),
        n_minus_m1: d1,
        n_minus_m2: d2,
        note,
    }
}

/// All nonnegative steady states: `E0`, `E1`, `E2` (strong Allee only), then
/// the positive ones in order of increasing `u`.
pub fn find_equilibria<T: Scalar>(p: &ScaledParams<T>) -> Vec<Equilibrium<T>> {
    use EquilibriumKind::*;
    let z = T::zero();
    let mut out = vec![Equilibrium::new(E0, z, z), Equilibrium::new(E1, T::one(), z)];
    if p.m > z {
        out.push(Equilibrium::new(E2, p.m, z));
    }
    let cls = classify_case(p);
    let two_c = T::lit(2.0) * p.c;
    let axis = ((p.m + T::one()) * p.c - T::one()) / two_c;
    let root = cls.discriminant.max(z).sqrt() / two_c;
    match cls.case {
        Case::A | Case::B => out.push(Equilibrium::positive(E31, axis + root, p.c)),
        Case::C => {
            out.push(Equilibrium::positive(E32, axis - root, p.c));
            out.push(Equilibrium::positive(E30, axis + root, p.c));
        }
        Case::D => out.push(Equilibrium::positive(E33, axis, p.c)),
        Case::E => {}
    }
    out
}

/// The positive equilibrium of the given kind, if present.
pub fn positive_equilibrium<T: Scalar>(
    p: &ScaledParams<T>,
    kind: EquilibriumKind,
) -> Option<Equilibrium<T>> {
    find_equilibria(p).into_iter().find(|e| e.kind == kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(m: f64, n: f64, c: f64) -> ScaledParams<f64> {
        ScaledParams::new(m, n, c, 1.0, 0.1, 0.1).unwrap()
    }

    #[test]
    fn weak_allee_preset_is_case_b() {
        let p = ScaledParams::<f64>::h2(0.68, 0.4);
        let cls = classify_case(&p);
        assert_eq!(cls.case, Case::B);
        assert!((cls.m1 - 50.0 / 41.0).abs() < 1e-14);
        let e = positive_equilibrium(&p, EquilibriumKind::E31).unwrap();
        assert!((e.u - 0.09).abs() < 1e-12 && (e.v - 0.123).abs() < 1e-12);
        assert!(e.residual(&p) < 1e-12);
    }

    #[test]
    fn no_interior_state_when_discriminant_negative() {
        let p = params(0.0, 1.0, 1.0);
        let cls = classify_case(&p);
        assert_eq!(cls.case, Case::E);
        assert!(cls.discriminant < 0.0);
        let kinds: Vec<_> = find_equilibria(&p).iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EquilibriumKind::E0, EquilibriumKind::E1]);
    }

    #[test]
    fn case_a_sample() {
        let p = params(-0.5, 1.0, 3.0);
        let cls = classify_case(&p);
        assert_eq!(cls.case, Case::A);
        assert!((cls.m1 - 1.5).abs() < 1e-15);
        let eq = find_equilibria(&p);
        assert_eq!(eq.len(), 3);
        assert!(h_poly(eq[2].u, &p).abs() < 1e-12);
    }

    #[test]
    fn case_c_roots_straddle_axis() {
        let p = params(-0.5, 1.51, 3.0);
        assert_eq!(classify_case(&p).case, Case::C);
        let pos: Vec<_> = find_equilibria(&p)
            .into_iter()
            .filter(|e| e.kind.is_positive())
            .collect();
        assert_eq!(pos.len(), 2);
        let axis = 0.5 / 6.0;
        assert_eq!(pos[0].kind, EquilibriumKind::E32);
        assert!(pos[0].u < axis && axis < pos[1].u);
        // brute-force sign scan
        let mut roots = vec![];
        let step = 1e-5;
        let mut prev = h_poly(step, &p);
        for i in 2..100_000 {
            let u = i as f64 * step;
            let cur = h_poly(u, &p);
            if prev.signum() != cur.signum() {
                roots.push(u);
            }
            prev = cur;
        }
        assert_eq!(roots.len(), 2);
        for (r, e) in roots.iter().zip(&pos) {
            assert!((r - e.u).abs() < 2e-5);
            assert!(e.residual(&p) < 1e-10);
        }
    }

    #[test]
    fn case_d_double_root() {
        let p0 = params(-0.5, 1.0, 3.0);
        let p = params(-0.5, m2(&p0), 3.0);
        assert_eq!(classify_case(&p).case, Case::D);
        let e = positive_equilibrium(&p, EquilibriumKind::E33).unwrap();
        assert!((e.u - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn threshold_without_steep_slope_reports_note() {
        // (m+1)c = 0.75 <= 1 and n = m1 = 0.75
        let p = params(-0.5, 0.75, 1.5);
        let cls = classify_case(&p);
        assert_eq!(cls.case, Case::E);
        assert!(cls.note.is_some());
    }

    #[test]
    fn strong_allee_includes_e2() {
        let p = params(0.2, 0.5, 1.0);
        let eq = find_equilibria(&p);
        assert_eq!(eq[2].kind, EquilibriumKind::E2);
        assert_eq!(eq[2].u, 0.2);
    }

    fn sign_changes(p: &ScaledParams<f64>) -> usize {
        let u_max = 1f64.max(p.m + 1.0);
        let steps = 100_000;
        let step = u_max / steps as f64;
        let mut count = 0;
        let mut prev = h_poly(step * 0.5, p);
        for i in 1..steps {
            let cur = h_poly((i as f64 + 0.5) * step, p);
            if (prev > 0.0) != (cur > 0.0) {
                count += 1;
            }
            prev = cur;
        }
        count
    }

    fn admissible() -> impl Strategy<Value = ScaledParams<f64>> {
        (-0.99f64..0.99, 0.01f64..3.0, 0.05f64..8.0).prop_filter_map(
            "n > max(0, -m)",
            |(m, n, c)| ScaledParams::new(m, n, c, 1.0, 0.1, 0.1).ok(),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn count_matches_brute_force_scan(p in admissible()) {
            let found = find_equilibria(&p).iter().filter(|e| e.kind.is_positive()).count();
            prop_assert_eq!(found, sign_changes(&p));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]
        #[test]
        fn positive_states_are_steady(p in admissible()) {
            for e in find_equilibria(&p) {
                prop_assert!(e.residual(&p) < 1e-10, "{:?}", e);
                if e.kind.is_positive() {
                    prop_assert!(e.u > 0.0 && e.v > 0.0);
                    prop_assert!(h_poly(e.u, &p).abs() < 1e-10);
                    prop_assert!((e.v - e.u.sqrt() / p.c).abs() < 1e-10);
                }
            }
        }
    }
}
