//! Mode-by-mode linear analysis of the diffusive system at `E31` on
//! `(0, π)` with no-flux boundaries, where mode `k` is `cos(kx)`.
//!
//! With `δ1 = J11(E31)` and `δ2 = sqrt(u31)` the mode-`k` matrix is
//!
//! ```text
//! H_k = [ δ1 - d1 k^2        -δ2            ]
//!       [ θ/(2c)             -θ δ2 - d2 k^2 ]
//! ```

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{positive_equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::local::{jacobian, quadratic_roots};
use crate::model::ScaledParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationAtE31<T> {
    pub delta1: T,
    pub delta2: T,
    pub c: T,
    pub theta: T,
    pub d1: T,
    pub d2: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode<T> {
    pub k: u32,
    pub tk: T,
    pub dk: T,
    pub eigenvalues: [Complex<T>; 2],
}

impl<T: Scalar> SpectralMode<T> {
    pub fn max_re(&self) -> T {
        self.eigenvalues[0].re
    }
}

fn kk<T: Scalar>(k: u32) -> T {
    let k = T::from_u32(k).expect("wavenumber representable");
    k * k
}

impl<T: Scalar> LinearizationAtE31<T> {
    /// Linearization at the `E31` state of `p`; requires `δ1 > 0`.
    pub fn new(p: &ScaledParams<T>) -> Result<Self> {
        let e = positive_equilibrium(p, EquilibriumKind::E31).ok_or_else(|| {
            Error::Precondition("parameters admit no E31 equilibrium".to_string())
        })?;
        let j = jacobian(&e, p)?;
        let lin = LinearizationAtE31 {
            delta1: j.j11,
            delta2: -j.j12,
            c: p.c,
            theta: p.theta,
            d1: p.d1,
            d2: p.d2,
        };
        if !(lin.delta1 > T::zero()) {
            return Err(Error::Precondition(format!(
                "spatial analysis needs delta1 > 0, got {}",
                lin.delta1
            )));
        }
        Ok(lin)
    }

    pub fn with_theta(mut self, theta: T) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_d2(mut self, d2: T) -> Self {
        self.d2 = d2;
        self
    }

    fn half_c(&self) -> T {
        T::one() / (T::lit(2.0) * self.c)
    }

    /// Mode-`k` matrix `H_k` as rows.
    pub fn h_matrix(&self, k: u32) -> [[T; 2]; 2] {
        let k2 = kk::<T>(k);
        [
            [self.delta1 - self.d1 * k2, -self.delta2],
            [self.theta * self.half_c(), -self.theta * self.delta2 - self.d2 * k2],
        ]
    }

    pub fn t_k(&self, k: u32) -> T {
        self.trace_at(kk::<T>(k))
    }

    pub fn d_k(&self, k: u32) -> T {
        self.det_at(kk::<T>(k))
    }

    /// Trace of the linearization at a continuous `x = k^2`.
    pub fn trace_at(&self, x: T) -> T {
        self.delta1 - self.theta * self.delta2 - (self.d1 + self.d2) * x
    }

    /// Determinant of the linearization at a continuous `x = k^2`.
    pub fn det_at(&self, x: T) -> T {
        self.d1 * self.d2 * x * x
            + (self.d1 * self.theta * self.delta2 - self.d2 * self.delta1) * x
            + self.theta * self.delta2 * (T::one() - T::lit(2.0) * self.c * self.delta1)
                / (T::lit(2.0) * self.c)
    }

    /// Dispersion relation: largest `Re λ` at a continuous `x = k^2`.
    pub fn growth_rate_at(&self, x: T) -> T {
        let [a, b] = quadratic_roots(self.trace_at(x), self.det_at(x));
        a.re.max(b.re)
    }

    pub fn mode(&self, k: u32) -> SpectralMode<T> {
        let (tk, dk) = (self.t_k(k), self.d_k(k));
        SpectralMode {
            k,
            tk,
            dk,
            eigenvalues: quadratic_roots(tk, dk),
        }
    }

    /// Largest `k` with `δ1 - d1 k^2 > 0`.
    pub fn k_star(&self) -> u32 {
        let mut k = 0u32;
        while self.delta1 - self.d1 * kk::<T>(k + 1) > T::zero() {
            k += 1;
        }
        k
    }

    /// The horizontal Hopf line of mode 0, `θ = δ1/δ2`.
    pub fn theta_h0(&self) -> T {
        self.delta1 / self.delta2
    }

    /// `d2` on the mode-`k` Hopf curve at conversion rate `theta`.
    pub fn hopf_curve_d2(&self, k: u32, theta: T) -> Result<T> {
        if k == 0 {
            return Err(Error::Precondition(
                "mode 0 has no d2-dependence; use theta_h0".to_string(),
            ));
        }
        let k2 = kk::<T>(k);
        Ok(-(self.delta2 / k2) * theta + (self.delta1 - self.d1 * k2) / k2)
    }

    /// θ on the mode-`k` Hopf curve at predator diffusion `d2`.
    pub fn theta_hopf(&self, k: u32, d2: T) -> T {
        let k2 = kk::<T>(k);
        -(d2 / self.delta2) * k2 + (self.delta1 - self.d1 * k2) / self.delta2
    }

    /// θ where the Hopf and Turing curves of mode `k` meet; the Hopf curve
    /// carries imaginary eigenvalues only above it.
    pub fn theta_star_k(&self, k: u32) -> T {
        let a = self.delta1 - self.d1 * kk::<T>(k);
        T::lit(2.0) * self.c * a * a / self.delta2
    }

    /// `η(x)`, the slope of the Turing line as a function of `x = k^2`.
    pub fn eta(&self, x: T) -> T {
        (self.delta1 - self.d1 * x) * x
            / (self.d1 * self.delta2 * x + self.delta2 * (self.half_c() - self.delta1))
    }

    /// Slope `η_k` of the Turing line `θ = η_k d2` of mode `k >= 1`.
    pub fn turing_slope(&self, k: u32) -> Result<T> {
        if k == 0 {
            return Err(Error::Precondition("Turing lines need k >= 1".to_string()));
        }
        let x = kk::<T>(k);
        let den = self.d1 * self.delta2 * x + self.delta2 * (self.half_c() - self.delta1);
        if den.abs() <= T::epsilon() * (T::one() + x) {
            return Err(Error::Singular(format!("Turing slope denominator vanishes at k = {k}")));
        }
        Ok((self.delta1 - self.d1 * x) * x / den)
    }

    pub fn turing_curve_theta(&self, k: u32, d2: T) -> Result<T> {
        Ok(self.turing_slope(k)? * d2)
    }

    /// Diffusion-driven instability test above the mode-0 Hopf line.
    pub fn turing_instability_test(&self) -> TuringTest {
        let above_h0 = self.theta > self.theta_h0();
        let witnesses: Vec<u32> = (1..=self.k_star())
            .filter(|&k| {
                self.turing_curve_theta(k, self.d2)
                    .map(|t| above_h0 && self.theta < t)
                    .unwrap_or(false)
            })
            .collect();
        TuringTest {
            unstable: !witnesses.is_empty(),
            witnesses,
        }
    }

    pub fn x_star(&self) -> Result<T> {
        let two_c = T::lit(2.0) * self.c;
        let disc = T::one() - two_c * self.delta1;
        if !(disc > T::zero()) {
            return Err(Error::Domain(format!(
                "x* needs 1 - 2c delta1 > 0, got {disc}"
            )));
        }
        Ok((two_c * self.delta1 - T::one() + disc.sqrt()) / (two_c * self.d1))
    }

    /// Critical wavenumber `k_m` and the Turing-Hopf point `(d2_m, θ_m)`.
    pub fn mode_selection(&self) -> Result<ModeSelection<T>> {
        let x_star = self.x_star()?;
        let k_star = self.k_star();
        if k_star == 0 {
            return Err(Error::Precondition(
                "no Turing-unstable wavenumber (k* = 0)".to_string(),
            ));
        }
        let base = x_star.sqrt().floor().to_u32().unwrap_or(0);
        let clamp = |k: u32| k.clamp(1, k_star);
        let (lo, hi) = (clamp(base), clamp(base + 1));
        let k_m = if self.eta(kk::<T>(hi)) > self.eta(kk::<T>(lo)) { hi } else { lo };
        let theta_m = self.theta_h0();
        let d2_m = theta_m / self.turing_slope(k_m)?;
        Ok(ModeSelection {
            x_star,
            k_star,
            k_m,
            d2_m,
            theta_m,
        })
    }

    /// `dRe λ/dθ` across the Hopf curve.
    pub fn transversality_hopf(&self) -> T {
        -self.delta2 / T::lit(2.0)
    }

    /// `dλ/dθ` of the zero eigenvalue on the mode-`k` Turing line at `d2`.
    pub fn transversality_turing(&self, k: u32, d2: T) -> Result<T> {
        let theta = self.turing_curve_theta(k, d2)?;
        let at = self.with_d2(d2).with_theta(theta);
        let tk = at.t_k(k);
        if tk.abs() <= T::lit(1e-12) {
            return Err(Error::DegeneratePoint(format!(
                "T_{k} vanishes on the Turing line (Turing-Hopf point)"
            )));
        }
        let x = kk::<T>(k);
        Ok((self.d1 * self.delta2 * x + self.delta2 * (self.half_c() - self.delta1)) / tk)
    }

    /// Stability label from direct eigenvalues of modes `0..=k_max`.
    pub fn region_label(&self, k_max: u32) -> Region {
        let modes: Vec<_> = (0..=k_max).map(|k| self.mode(k)).collect();
        let z = T::zero();
        if modes[0].tk > z {
            return Region::HopfUnstable;
        }
        if modes.iter().any(|m| m.dk < z) {
            return Region::TuringUnstable;
        }
        if modes.iter().any(|m| m.max_re() > z) {
            return Region::HopfUnstable;
        }
        Region::Stable
    }

    /// Curves, mode selection and a region grid over `thetas x d2s`.
    pub fn diagram(&self, thetas: &[T], d2s: &[T]) -> Result<BifurcationDiagram<T>> {
        let sel = self.mode_selection()?;
        let k_star = sel.k_star;
        let k_max = 4 * k_star + 4;
        let hopf_curves = (0..=k_star)
            .map(|k| HopfCurve {
                k,
                theta_valid_above: self.theta_star_k(k),
            })
            .collect();
        let turing_lines = (1..=k_star)
            .map(|k| self.turing_slope(k).map(|eta| TuringLine { k, eta }))
            .collect::<Result<Vec<_>>>()?;
        let cells: Vec<(T, T)> = thetas
            .iter()
            .flat_map(|&t| d2s.iter().map(move |&d| (t, d)))
            .collect();
        let regions = cells
            .par_iter()
            .map(|&(theta, d2)| RegionSample {
                theta,
                d2,
                region: self.with_theta(theta).with_d2(d2).region_label(k_max),
            })
            .collect();
        Ok(BifurcationDiagram {
            k_star,
            x_star: sel.x_star,
            k_m: sel.k_m,
            hopf_curves,
            turing_lines,
            th_point: (sel.d2_m, sel.theta_m),
            regions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuringTest {
    pub unstable: bool,
    pub witnesses: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSelection<T> {
    pub x_star: T,
    pub k_star: u32,
    pub k_m: u32,
    pub d2_m: T,
    pub theta_m: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Stable,
    TuringUnstable,
    HopfUnstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfCurve<T> {
    pub k: u32,
    /// `d2 = d2ᴴ(k, θ)` carries imaginary eigenvalues for θ above this value.
    pub theta_valid_above: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuringLine<T> {
    pub k: u32,
    pub eta: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample<T> {
    pub theta: T,
    pub d2: T,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram<T> {
    pub k_star: u32,
    pub x_star: T,
    pub k_m: u32,
    pub hopf_curves: Vec<HopfCurve<T>>,
    pub turing_lines: Vec<TuringLine<T>>,
    pub th_point: (T, T),
    pub regions: Vec<RegionSample<T>>,
}
