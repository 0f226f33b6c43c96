//! Time integration of the local system and of the reaction-diffusion
//! system on `(0, π)` with zero-flux boundaries.
//!
//! Space is discretized on a cell-centered grid with mirror ghost cells, so
//! `cos(k x_i)` is an exact eigenvector of the discrete Laplacian and pure
//! diffusion conserves `Σ u_i h` exactly. Time stepping is classical RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{jacobian_at, reaction_clamped, ScaledParams};
use crate::scalar::Scalar;

/// Densities below this are discretization noise and get clamped to 0.
pub const CLAMP_TOL: f64 = 1e-8;
/// Any density above this in magnitude counts as blow-up.
pub const BLOWUP: f64 = 1e3;
/// Fraction of the run (from the end) used for attractor classification.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 8 {
            return Err(Error::Precondition(format!(
                "grid needs at least 8 cells, got {n_cells}"
            )));
        }
        Ok(Grid1D { n_cells })
    }

    pub fn h<T: Scalar>(&self) -> T {
        T::PI() / T::from_usize(self.n_cells).expect("cell count")
    }

    pub fn x<T: Scalar>(&self, i: usize) -> T {
        (T::from_usize(i).expect("cell index") + T::lit(0.5)) * self.h::<T>()
    }

    pub fn xs<T: Scalar>(&self) -> Vec<T> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }
}

/// Snapshot of both densities at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    pub t: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn mean(&self) -> (T, T) {
        (mean(&self.u), mean(&self.v))
    }

    /// Largest spatial variance of the two components.
    pub fn spatial_variance(&self) -> T {
        variance(&self.u).max(variance(&self.v))
    }

    /// Coefficient of `cos(k x)` in `u`, normalized so that
    /// `a cos(k x)` projects to `a`.
    pub fn cos_coefficient(&self, k: u32) -> (T, T) {
        let n = self.u.len();
        let grid = Grid1D { n_cells: n };
        let kk = T::from_u32(k).expect("mode");
        let norm = if k == 0 { T::one() } else { T::lit(2.0) };
        let (mut a, mut b) = (T::zero(), T::zero());
        for i in 0..n {
            let w = (kk * grid.x::<T>(i)).cos();
            a = a + self.u[i] * w;
            b = b + self.v[i] * w;
        }
        let nn = T::from_usize(n).expect("cell count");
        (a * norm / nn, b * norm / nn)
    }

    pub fn max_abs(&self) -> T {
        self.u
            .iter()
            .chain(&self.v)
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize(x.len()).expect("length")
}

fn variance<T: Scalar>(x: &[T]) -> T {
    let m = mean(x);
    x.iter().fold(T::zero(), |a, &b| a + (b - m) * (b - m))
        / T::from_usize(x.len()).expect("length")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition<T> {
    Constant { u0: T, v0: T },
    /// `u0 + au cos(k x)`, `v0 + av cos(k x)`.
    Cosine {
        u0: T,
        au: T,
        v0: T,
        av: T,
        #[serde(default = "one_mode")]
        k: u32,
    },
    Custom { u: Vec<T>, v: Vec<T> },
}

fn one_mode() -> u32 {
    1
}

impl<T: Scalar> InitialCondition<T> {
    pub fn sample(&self, grid: &Grid1D) -> Result<Field<T>> {
        let n = grid.n_cells;
        let (u, v) = match self {
            InitialCondition::Constant { u0, v0 } => (vec![*u0; n], vec![*v0; n]),
            InitialCondition::Cosine { u0, au, v0, av, k } => {
                let kk = T::from_u32(*k).expect("mode");
                grid.xs::<T>()
                    .into_iter()
                    .map(|x| {
                        let c = (kk * x).cos();
                        (*u0 + *au * c, *v0 + *av * c)
                    })
                    .unzip()
            }
            InitialCondition::Custom { u, v } => {
                if u.len() != n || v.len() != n {
                    return Err(Error::Precondition(format!(
                        "custom initial data has {}/{} samples for {n} cells",
                        u.len(),
                        v.len()
                    )));
                }
                (u.clone(), v.clone())
            }
        };
        if u.iter().chain(&v).any(|x| !(*x >= T::zero())) {
            return Err(Error::Precondition(
                "initial densities must be nonnegative".to_string(),
            ));
        }
        Ok(Field { t: T::zero(), u, v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep<T> {
    Fixed(T),
    Auto(AutoStep),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoStep {
    Auto,
}

impl<T> Default for TimeStep<T> {
    fn default() -> Self {
        TimeStep::Auto(AutoStep::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Thresholds<T> {
    pub spatial_variance: T,
    pub oscillation: T,
    /// Tail-envelope ratio (late half over early half) below which an
    /// oscillation counts as decaying.
    #[serde(default = "decay_ratio")]
    pub decay_ratio: T,
}

fn decay_ratio<T: Scalar>() -> T {
    T::lit(0.9)
}

impl<T: Scalar> Default for Thresholds<T> {
    fn default() -> Self {
        Thresholds {
            spatial_variance: T::lit(1e-8),
            oscillation: T::lit(1e-6),
            decay_ratio: decay_ratio(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RunConfig<T> {
    pub params: ScaledParams<T>,
    pub grid: Grid1D,
    pub t_end: T,
    #[serde(default)]
    pub dt: TimeStep<T>,
    pub initial: InitialCondition<T>,
    pub output_every: T,
    #[serde(default)]
    pub thresholds: Thresholds<T>,
    /// Turn the reaction terms off (pure diffusion).
    #[serde(default = "yes")]
    pub reaction: bool,
}

fn yes() -> bool {
    true
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(
        params: ScaledParams<T>,
        n_cells: usize,
        t_end: T,
        initial: InitialCondition<T>,
        output_every: T,
    ) -> Result<Self> {
        let cfg = RunConfig {
            params,
            grid: Grid1D::new(n_cells)?,
            t_end,
            dt: TimeStep::default(),
            initial,
            output_every,
            thresholds: Thresholds::default(),
            reaction: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        Grid1D::new(self.grid.n_cells)?;
        if !(self.t_end > T::zero()) {
            return Err(Error::Precondition("t_end must be positive".to_string()));
        }
        if !(self.output_every > T::zero()) {
            return Err(Error::Precondition("output_every must be positive".to_string()));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > T::zero()) {
                return Err(Error::Precondition("dt must be positive".to_string()));
            }
        }
        Ok(())
    }

    /// Largest stable explicit step for the diffusion part: RK4's real
    /// stability interval is about 2.78 and the discrete Laplacian spectrum
    /// reaches `-4 d / h^2`.
    pub fn dt_cfl_limit(&self) -> T {
        let h = self.grid.h::<T>();
        let d = self.params.d1.max(self.params.d2);
        T::lit(2.78) * h * h / (T::lit(4.0) * d)
    }

    /// Step actually used, shrunk so that it divides `output_every`.
    pub fn resolve_dt(&self, initial: &Field<T>) -> Result<T> {
        let raw = match self.dt {
            TimeStep::Fixed(dt) => {
                let limit = self.dt_cfl_limit();
                if dt > limit {
                    return Err(Error::Instability {
                        time: 0.0,
                        detail: format!(
                            "dt = {dt} exceeds the diffusion stability limit {limit}; use a smaller dt or \"auto\""
                        ),
                    });
                }
                dt
            }
            TimeStep::Auto(_) => {
                let h = self.grid.h::<T>();
                let d = self.params.d1.max(self.params.d2);
                let mut dt = T::lit(0.4) * h * h / (T::lit(2.0) * d);
                if self.reaction {
                    let lam = reaction_rate_bound(initial, &self.params);
                    if lam > T::zero() {
                        dt = dt.min(T::lit(0.1) / lam);
                    }
                }
                dt
            }
        };
        let per = (self.output_every / raw).ceil().max(T::one());
        Ok(self.output_every / per)
    }
}

/// Frobenius-norm bound on the reaction Jacobian's spectral radius over the
/// initial data.
fn reaction_rate_bound<T: Scalar>(f: &Field<T>, p: &ScaledParams<T>) -> T {
    let mut best = T::zero();
    for (&u, &v) in f.u.iter().zip(&f.v) {
        if u > T::lit(1e-6) {
            if let Ok(j) = jacobian_at(u, v, p) {
                let fro = j.iter().flatten().fold(T::zero(), |a, x| a + *x * *x).sqrt();
                best = best.max(fro);
            }
        }
    }
    best
}

/// One RK4 step of the local system. Returns the state and whether a
/// component had to be clamped to 0.
pub fn step_ode<T: Scalar>(state: (T, T), p: &ScaledParams<T>, dt: T) -> Result<((T, T), bool)> {
    if state.0 < T::zero() {
        return Err(Error::Precondition(format!("u = {} < 0", state.0)));
    }
    let half = T::lit(0.5);
    let f = |s: (T, T)| reaction_clamped(s.0, s.1, p);
    let k1 = f(state);
    let k2 = f((state.0 + half * dt * k1.0, state.1 + half * dt * k1.1));
    let k3 = f((state.0 + half * dt * k2.0, state.1 + half * dt * k2.1));
    let k4 = f((state.0 + dt * k3.0, state.1 + dt * k3.1));
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut u = state.0 + sixth * (k1.0 + two * k2.0 + two * k3.0 + k4.0);
    let mut v = state.1 + sixth * (k1.1 + two * k2.1 + two * k3.1 + k4.1);
    let clamped = clamp(&mut u, T::zero())? | clamp(&mut v, T::zero())?;
    Ok(((u, v), clamped))
}

fn clamp<T: Scalar>(x: &mut T, time: T) -> Result<bool> {
    if *x >= T::zero() {
        return Ok(false);
    }
    if *x < -T::lit(CLAMP_TOL) || x.is_nan() {
        return Err(Error::Instability {
            time: time.as_f64(),
            detail: format!("density {x} < -{CLAMP_TOL}; reduce dt"),
        });
    }
    *x = T::zero();
    Ok(true)
}

/// Trajectory of the local system sampled every `every`.
pub fn integrate_ode<T: Scalar>(
    start: (T, T),
    p: &ScaledParams<T>,
    dt: T,
    t_end: T,
    every: T,
) -> Result<Vec<(T, T, T)>> {
    let per = (every / dt).round().max(T::one()).to_usize().expect("step ratio");
    let steps = (t_end / dt).round().to_usize().expect("step count");
    let mut s = start;
    let mut out = vec![(T::zero(), s.0, s.1)];
    for i in 1..=steps {
        let t = T::from_usize(i).expect("step") * dt;
        s = step_ode(s, p, dt)
            .map_err(|e| match e {
                Error::Instability { detail, .. } => Error::Instability {
                    time: t.as_f64(),
                    detail,
                },
                e => e,
            })?
            .0;
        if s.0.abs().max(s.1.abs()) > T::lit(BLOWUP) || s.0.is_nan() {
            return Err(Error::Divergence {
                time: t.as_f64(),
                bound: BLOWUP,
            });
        }
        if i % per == 0 || i == steps {
            out.push((t, s.0, s.1));
        }
    }
    Ok(out)
}

/// Successive crossings of `u = u_section` with `u` increasing, returned as
/// `(t, v)` pairs by linear interpolation.
pub fn poincare_crossings<T: Scalar>(traj: &[(T, T, T)], u_section: T) -> Vec<(T, T)> {
    traj.windows(2)
        .filter(|w| w[0].1 < u_section && w[1].1 >= u_section)
        .map(|w| {
            let s = (u_section - w[0].1) / (w[1].1 - w[0].1);
            (w[0].0 + s * (w[1].0 - w[0].0), w[0].2 + s * (w[1].2 - w[0].2))
        })
        .collect()
}

/// Scratch buffers for the method-of-lines right-hand side.
struct Stepper<'a, T> {
    cfg: &'a RunConfig<T>,
    inv_h2: T,
    k: [Vec<T>; 8],
    tmp_u: Vec<T>,
    tmp_v: Vec<T>,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    fn new(cfg: &'a RunConfig<T>) -> Self {
        let n = cfg.grid.n_cells;
        let h = cfg.grid.h::<T>();
        Stepper {
            cfg,
            inv_h2: T::one() / (h * h),
            k: std::array::from_fn(|_| vec![T::zero(); n]),
            tmp_u: vec![T::zero(); n],
            tmp_v: vec![T::zero(); n],
        }
    }

    fn rhs(cfg: &RunConfig<T>, inv_h2: T, u: &[T], v: &[T], du: &mut [T], dv: &mut [T]) {
        let n = u.len();
        let p = &cfg.params;
        let two = T::lit(2.0);
        for i in 0..n {
            let (ul, vl) = if i == 0 { (u[0], v[0]) } else { (u[i - 1], v[i - 1]) };
            let (ur, vr) = if i + 1 == n { (u[n - 1], v[n - 1]) } else { (u[i + 1], v[i + 1]) };
            let lu = (ul - two * u[i] + ur) * inv_h2;
            let lv = (vl - two * v[i] + vr) * inv_h2;
            let (f1, f2) = if cfg.reaction {
                reaction_clamped(u[i], v[i], p)
            } else {
                (T::zero(), T::zero())
            };
            du[i] = p.d1 * lu + f1;
            dv[i] = p.d2 * lv + f2;
        }
    }

    /// Advances `(u, v)` by one RK4 step in place.
    fn step(&mut self, u: &mut [T], v: &mut [T], dt: T) {
        let half = T::lit(0.5);
        let n = u.len();
        let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut self.k;
        let (tu, tv) = (&mut self.tmp_u, &mut self.tmp_v);
        Self::rhs(self.cfg, self.inv_h2, u, v, k1u, k1v);
        for i in 0..n {
            tu[i] = u[i] + half * dt * k1u[i];
            tv[i] = v[i] + half * dt * k1v[i];
        }
        Self::rhs(self.cfg, self.inv_h2, tu, tv, k2u, k2v);
        for i in 0..n {
            tu[i] = u[i] + half * dt * k2u[i];
            tv[i] = v[i] + half * dt * k2v[i];
        }
        Self::rhs(self.cfg, self.inv_h2, tu, tv, k3u, k3v);
        for i in 0..n {
            tu[i] = u[i] + dt * k3u[i];
            tv[i] = v[i] + dt * k3v[i];
        }
        Self::rhs(self.cfg, self.inv_h2, tu, tv, k4u, k4v);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..n {
            u[i] = u[i] + sixth * (k1u[i] + two * k2u[i] + two * k3u[i] + k4u[i]);
            v[i] = v[i] + sixth * (k1v[i] + two * k2v[i] + two * k3v[i] + k4v[i]);
        }
    }
}

/// One RK4 step of the discretized reaction-diffusion system.
pub fn step_pde<T: Scalar>(field: &Field<T>, cfg: &RunConfig<T>, dt: T) -> Result<Field<T>> {
    if let TimeStep::Fixed(_) = cfg.dt {
        let limit = cfg.dt_cfl_limit();
        if dt > limit {
            return Err(Error::Instability {
                time: field.t.as_f64(),
                detail: format!("dt = {dt} exceeds the diffusion stability limit {limit}"),
            });
        }
    }
    let mut next = field.clone();
    Stepper::new(cfg).step(&mut next.u, &mut next.v, dt);
    next.t = field.t + dt;
    for x in next.u.iter_mut().chain(next.v.iter_mut()) {
        clamp(x, next.t)?;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attractor {
    ConstantState,
    HomogeneousPeriodic,
    InhomogeneousSteady,
    InhomogeneousPeriodic,
    Undecided,
}

impl Attractor {
    pub fn name(self) -> &'static str {
        match self {
            Attractor::ConstantState => "constant_state",
            Attractor::HomogeneousPeriodic => "homogeneous_periodic",
            Attractor::InhomogeneousSteady => "inhomogeneous_steady",
            Attractor::InhomogeneousPeriodic => "inhomogeneous_periodic",
            Attractor::Undecided => "undecided",
        }
    }
}

/// Measurements over the classification window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics<T> {
    pub window_start: T,
    pub spatial_variance: T,
    /// Half the peak-to-peak range of the probe signals over the window.
    pub oscillation_amplitude: T,
    pub turning_points: usize,
    /// Oscillation range in the late half of the window over the early half.
    pub envelope_ratio: T,
    /// `|d/dt|` of the probes at the end of the window over the start.
    pub drift_ratio: T,
    pub clamp_events: u64,
    pub steps: u64,
    pub dt: T,
    pub final_mean: (T, T),
    /// `cos x` coefficient of the final `u` profile.
    pub final_cos1: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary<T> {
    pub attractor: Attractor,
    pub metrics: RunMetrics<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput<T> {
    pub snapshots: Vec<Field<T>>,
    pub summary: RunSummary<T>,
}

impl<T: Scalar> RunOutput<T> {
    pub fn last(&self) -> &Field<T> {
        self.snapshots.last().expect("run emits at least the initial field")
    }
}

pub fn run<T: Scalar>(cfg: &RunConfig<T>) -> Result<RunOutput<T>> {
    cfg.validate()?;
    let mut field = cfg.initial.sample(&cfg.grid)?;
    let dt = cfg.resolve_dt(&field)?;
    let per = (cfg.output_every / dt).round().to_u64().expect("step ratio").max(1);
    let steps = (cfg.t_end / dt).ceil().to_u64().expect("step count");
    let mut stepper = Stepper::new(cfg);
    let mut snapshots = vec![field.clone()];
    let mut clamp_events = 0u64;
    let bound = T::lit(BLOWUP);
    for i in 1..=steps {
        stepper.step(&mut field.u, &mut field.v, dt);
        field.t = T::from_u64(i).expect("step") * dt;
        for x in field.u.iter_mut().chain(field.v.iter_mut()) {
            if !(x.abs() <= bound) {
                return Err(Error::Divergence {
                    time: field.t.as_f64(),
                    bound: BLOWUP,
                });
            }
            if clamp(x, field.t)? {
                clamp_events += 1;
            }
        }
        if i % per == 0 || i == steps {
            snapshots.push(field.clone());
        }
    }
    let summary = classify(&snapshots, &cfg.thresholds, clamp_events, steps, dt);
    Ok(RunOutput { snapshots, summary })
}

/// Probe signals: spatial means and both boundary values of `u`.
fn probes<T: Scalar>(f: &Field<T>) -> [T; 4] {
    let (mu, mv) = f.mean();
    [mu, mv, f.u[0], f.u[f.u.len() - 1]]
}

fn range<T: Scalar>(x: &[T]) -> T {
    let (lo, hi) = x
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(l, h), &v| (l.min(v), h.max(v)));
    if x.is_empty() {
        T::zero()
    } else {
        hi - lo
    }
}

/// Local extrema of the signal, ignoring wiggles below `tol`.
fn turning_points<T: Scalar>(x: &[T], tol: T) -> usize {
    let mut count = 0;
    let mut dir = 0i8;
    let mut anchor = match x.first() {
        Some(&a) => a,
        None => return 0,
    };
    for &v in &x[1..] {
        let d = v - anchor;
        if d.abs() <= tol {
            continue;
        }
        let nd = if d > T::zero() { 1 } else { -1 };
        if dir != 0 && nd != dir {
            count += 1;
        }
        dir = nd;
        anchor = v;
    }
    count
}

/// Classifies the long-time behavior from the last `TAIL_FRACTION` of the
/// snapshots.
///
/// Oscillations whose envelope shrinks by more than `decay_ratio` across the
/// window are read as a damped approach to a steady state, and a monotone
/// drift counts as steady only while it is decelerating.
pub fn classify<T: Scalar>(
    snapshots: &[Field<T>],
    th: &Thresholds<T>,
    clamp_events: u64,
    steps: u64,
    dt: T,
) -> RunSummary<T> {
    let last = snapshots.last().expect("nonempty run");
    let t_end = last.t;
    let start = t_end * (T::one() - T::lit(TAIL_FRACTION));
    let tail: Vec<&Field<T>> = snapshots.iter().filter(|f| f.t >= start).collect();
    let sig: Vec<[T; 4]> = tail.iter().map(|f| probes(f)).collect();
    let spatial_variance = tail
        .iter()
        .fold(T::zero(), |m, f| m.max(f.spatial_variance()));
    let half = sig.len() / 2;
    let mut amp = T::zero();
    let mut turns = 0;
    let mut env = T::zero();
    let mut drift = T::zero();
    for c in 0..4 {
        let s: Vec<T> = sig.iter().map(|p| p[c]).collect();
        let r = range(&s) / T::lit(2.0);
        if r > amp {
            amp = r;
            turns = turning_points(&s, th.oscillation * T::lit(1e-3));
            let (a, b) = (range(&s[..half.max(1)]), range(&s[half..]));
            env = if a > T::zero() { b / a } else { T::one() };
            drift = if s.len() >= 4 {
                let d0 = (s[1] - s[0]).abs();
                let d1 = (s[s.len() - 1] - s[s.len() - 2]).abs();
                if d0 > T::zero() {
                    d1 / d0
                } else {
                    T::one()
                }
            } else {
                T::one()
            };
        }
    }
    let homogeneous = spatial_variance < th.spatial_variance;
    let moving = amp > th.oscillation;
    let periodic = moving && turns >= 2 && env >= th.decay_ratio;
    let settling = !moving || (turns >= 2 && env < th.decay_ratio) || (turns < 2 && drift <= T::one());
    let attractor = match (homogeneous, periodic, settling) {
        (true, true, _) => Attractor::HomogeneousPeriodic,
        (false, true, _) => Attractor::InhomogeneousPeriodic,
        (true, false, true) => Attractor::ConstantState,
        (false, false, true) => Attractor::InhomogeneousSteady,
        _ => Attractor::Undecided,
    };
    RunSummary {
        attractor,
        metrics: RunMetrics {
            window_start: start,
            spatial_variance,
            oscillation_amplitude: amp,
            turning_points: turns,
            envelope_ratio: env,
            drift_ratio: drift,
            clamp_events,
            steps,
            dt,
            final_mean: last.mean(),
            final_cos1: last.cos_coefficient(1).0,
        },
    }
}
