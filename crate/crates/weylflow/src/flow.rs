//! Volume-preserving flow of Weyl-invariant curves as a radial graph.
//!
//! A closed, star-shaped, W-invariant curve is determined by its radial
//! profile r̂(theta) over the chamber arc. The flow moves each point with
//! normal speed `H_bar - H_mod` (average minus pointwise modified curvature);
//! on the fixed angular grid this becomes
//!
//! ```text
//! d r̂/dt at fixed theta = (H_bar - H_mod) * sqrt(r̂^2 + r̂'^2) / r̂
//! ```
//!
//! the normal speed divided by the cosine between the normal and the ray.
//! W-invariance pins the curve orthogonal to the walls, so the profile
//! satisfies even (ghost-reflection) boundary conditions at both ends, and
//! the full curve is recovered by reflecting the arc around the group orbit.
//!
//! Time stepping is explicit Euler under a parabolic step-size bound. The
//! trapezoidal average that defines `H_bar` uses the same weights as the
//! area quadrature, which makes the enclosed area conserved exactly to first
//! order in dt; the observed drift is rounding-level for converged runs.

use crate::curvature::{rho_point_with_wall_tol, CurvatureError};
use crate::rootsys::{RootSystemError, WeightedRootSystem, WALL_TOL};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("initial radius {0} out of range (0, {1})")]
    RadiusOutOfRange(f64, f64),
    #[error("grid needs at least 16 intervals, got {0}")]
    GridTooCoarse(usize),
    #[error("profile radii must lie strictly inside (0, r_s)")]
    InvalidRadii,
    #[error("invalid flow configuration: {0}")]
    BadConfig(String),
    #[error("a node crossed the critical radius at t = {time:.6e}")]
    LeftDomain { time: f64 },
    #[error("curvature blow-up (radius collapse or non-finite values) at t = {time:.6e}")]
    BlowUp { time: f64 },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    RootSystem(#[from] RootSystemError),
}

/// Radial graph of a W-invariant curve over the chamber arc: `n + 1` nodes
/// on uniformly spaced angles, wall nodes at both ends.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    system: Arc<WeightedRootSystem>,
    thetas: Vec<f64>,
    radii: Vec<f64>,
    wall_tol: f64,
}

impl RadialProfile {
    /// The round initial profile: constant radius `r0` on `n` intervals.
    pub fn round(
        system: Arc<WeightedRootSystem>,
        r0: f64,
        n: usize,
    ) -> Result<Self, FlowError> {
        if !(r0 > 0.0 && r0 < system.r_s()) {
            return Err(FlowError::RadiusOutOfRange(r0, system.r_s()));
        }
        Self::from_radii(system, |_n| r0, n)
    }

    /// Build a profile from a per-node radius rule on `n` intervals.
    /// The rule receives the node angle.
    pub fn from_radii(
        system: Arc<WeightedRootSystem>,
        radius_at: impl Fn(f64) -> f64,
        n: usize,
    ) -> Result<Self, FlowError> {
        if n < 16 {
            return Err(FlowError::GridTooCoarse(n));
        }
        let arc = system.chamber_arc()?;
        let mut thetas: Vec<f64> = (0..=n)
            .map(|k| arc.theta_lo + arc.width() * k as f64 / n as f64)
            .collect();
        // Pin the last node to the wall angle exactly.
        thetas[n] = arc.theta_hi;
        let radii: Vec<f64> = thetas.iter().map(|&t| radius_at(t)).collect();
        if radii
            .iter()
            .any(|&r| !(r > 0.0 && r < system.r_s()) || !r.is_finite())
        {
            return Err(FlowError::InvalidRadii);
        }
        Ok(RadialProfile {
            system,
            thetas,
            radii,
            wall_tol: WALL_TOL,
        })
    }

    /// Override the relative wall tolerance used when evaluating rho on the
    /// profile. Any value well below the grid spacing behaves identically;
    /// the knob exists for configuration completeness.
    pub fn with_wall_tol(mut self, wall_tol: f64) -> Self {
        self.wall_tol = wall_tol;
        self
    }

    fn with_radii(&self, radii: Vec<f64>) -> Self {
        RadialProfile {
            system: Arc::clone(&self.system),
            thetas: self.thetas.clone(),
            radii,
            wall_tol: self.wall_tol,
        }
    }

    pub fn system(&self) -> &Arc<WeightedRootSystem> {
        &self.system
    }

    /// Number of grid intervals.
    pub fn n(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn dtheta(&self) -> f64 {
        (self.thetas[self.thetas.len() - 1] - self.thetas[0]) / self.n() as f64
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn wall_tol(&self) -> f64 {
        self.wall_tol
    }

    /// First and second angular derivatives by central differences with
    /// even ghost reflection across the walls (r̂_{-1} = r̂_1), which makes
    /// the one-sided derivative vanish there.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let h = self.dtheta();
        let r = &self.radii;
        let at = |i: isize| -> f64 {
            // Ghost reflection: -1 -> 1, n+1 -> n-1.
            let j = if i < 0 {
                (-i) as usize
            } else if i as usize > n {
                2 * n - i as usize
            } else {
                i as usize
            };
            r[j]
        };
        let mut rp = vec![0.0; n + 1];
        let mut rpp = vec![0.0; n + 1];
        for i in 0..=n {
            let im = at(i as isize - 1);
            let ip = at(i as isize + 1);
            rp[i] = (ip - im) / (2.0 * h);
            rpp[i] = (ip - 2.0 * r[i] + im) / (h * h);
        }
        (rp, rpp)
    }
}

/// Euclidean curvature of the polar graph at every node:
/// `(r̂^2 + 2 r̂'^2 - r̂ r̂'') / (r̂^2 + r̂'^2)^{3/2}`, positive for convex
/// curves (the circle of radius r gives +1/r).
pub fn curve_curvature(profile: &RadialProfile) -> Vec<f64> {
    let (rp, rpp) = profile.derivatives();
    profile
        .radii
        .iter()
        .zip(rp.iter().zip(&rpp))
        .map(|(&r, (&dp, &dpp))| {
            debug_assert!(r > 0.0);
            let g = r * r + dp * dp;
            (g + dp * dp - r * dpp) / (g * g.sqrt())
        })
        .collect()
}

/// The rho correction at every node, evaluated at the curve point
/// `phi = r̂ (cos theta, sin theta)` with the outward unit normal
/// `(r̂ e_r - r̂' e_theta) / sqrt(r̂^2 + r̂'^2)`.
pub fn rho_profile(profile: &RadialProfile) -> Result<Vec<f64>, FlowError> {
    let (rp, _) = profile.derivatives();
    let mut out = Vec::with_capacity(profile.radii.len());
    for i in 0..profile.radii.len() {
        let (c, s) = (profile.thetas[i].cos(), profile.thetas[i].sin());
        let r = profile.radii[i];
        let dp = rp[i];
        let sp = (r * r + dp * dp).sqrt();
        let phi = [r * c, r * s];
        let nu = [(r * c + dp * s) / sp, (r * s - dp * c) / sp];
        out.push(rho_point_with_wall_tol(
            &profile.system,
            &phi,
            &nu,
            profile.wall_tol,
        )?);
    }
    Ok(out)
}

/// Modified curvature per node: Euclidean curvature plus the rho correction.
pub fn modified_h(profile: &RadialProfile) -> Result<Vec<f64>, FlowError> {
    let kappa = curve_curvature(profile);
    let rho = rho_profile(profile)?;
    Ok(kappa.iter().zip(&rho).map(|(k, r)| k + r).collect())
}

/// Trapezoidal weights over the arc (dtheta at interior nodes, half at the
/// walls).
fn trapezoid_weights(profile: &RadialProfile) -> Vec<f64> {
    let n = profile.n();
    let h = profile.dtheta();
    (0..=n)
        .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
        .collect()
}

/// Arclength-weighted trapezoidal average of a per-node field over the arc.
/// By W-invariance this equals the average over the full closed curve.
pub fn average_of(profile: &RadialProfile, field: &[f64]) -> f64 {
    let (rp, _) = profile.derivatives();
    let w = trapezoid_weights(profile);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..field.len() {
        let sp = (profile.radii[i] * profile.radii[i] + rp[i] * rp[i]).sqrt();
        num += w[i] * sp * field[i];
        den += w[i] * sp;
    }
    num / den
}

/// Arclength-weighted average of the modified curvature.
pub fn average_h(profile: &RadialProfile) -> Result<f64, FlowError> {
    Ok(average_of(profile, &modified_h(profile)?))
}

/// Enclosed area of the full W-orbit curve: the arc integral (1/2) r̂^2
/// dtheta times the number of chamber copies.
pub fn enclosed_area(profile: &RadialProfile) -> f64 {
    let w = trapezoid_weights(profile);
    let arc: f64 = profile
        .radii
        .iter()
        .zip(&w)
        .map(|(&r, &wi)| 0.5 * wi * r * r)
        .sum();
    let width = profile.thetas[profile.thetas.len() - 1] - profile.thetas[0];
    let copies = (2.0 * std::f64::consts::PI / width).round();
    copies * arc
}

/// One snapshot of the evolving curve with its derived fields.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub time: f64,
    pub profile: RadialProfile,
    pub kappa: Vec<f64>,
    pub h_mod: Vec<f64>,
    pub h_bar: f64,
    pub area: f64,
}

impl FlowState {
    pub fn evaluate(profile: RadialProfile, time: f64) -> Result<Self, FlowError> {
        let kappa = curve_curvature(&profile);
        let rho = rho_profile(&profile)?;
        let h_mod: Vec<f64> = kappa.iter().zip(&rho).map(|(k, r)| k + r).collect();
        let h_bar = average_of(&profile, &h_mod);
        let area = enclosed_area(&profile);
        Ok(FlowState {
            time,
            profile,
            kappa,
            h_mod,
            h_bar,
            area,
        })
    }

    /// Radial node speeds `(H_bar - H_mod) * sqrt(r̂^2 + r̂'^2) / r̂`.
    pub fn speeds(&self) -> Vec<f64> {
        let (rp, _) = self.profile.derivatives();
        self.h_mod
            .iter()
            .zip(self.profile.radii.iter().zip(&rp))
            .map(|(&h, (&r, &dp))| (self.h_bar - h) * (r * r + dp * dp).sqrt() / r)
            .collect()
    }

    pub fn max_deviation(&self) -> f64 {
        self.h_mod
            .iter()
            .map(|h| (h - self.h_bar).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds().iter().fold(0.0f64, |a, s| a.max(s.abs()))
    }

    /// Stationarity test: both the curvature deviation and the node speeds
    /// are below their tolerances relative to |H_bar|.
    pub fn is_converged(&self, tol_cmc: f64, tol_rate: f64) -> bool {
        let scale = self.h_bar.abs();
        self.max_deviation() < tol_cmc * scale && self.max_speed() < tol_rate * scale
    }
}

/// Parabolic step bound `cfl * (min_i r̂_i * dtheta)^2`. The scheme is
/// stable for cfl in (0, 0.5]; larger values are accepted by the runner to
/// allow instability experiments.
pub fn stable_dt(profile: &RadialProfile, cfl: f64) -> f64 {
    let rmin = profile
        .radii
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let x = rmin * profile.dtheta();
    cfl * x * x
}

/// One explicit Euler step. Radius collapse (r̂ <= 0) and non-finite values
/// report `BlowUp`; crossing the critical radius reports `LeftDomain`.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    let speeds = state.speeds();
    let t_next = state.time + dt;
    let radii: Vec<f64> = state
        .profile
        .radii
        .iter()
        .zip(&speeds)
        .map(|(&r, &v)| r + dt * v)
        .collect();
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(FlowError::BlowUp { time: t_next });
    }
    if radii.iter().any(|r| *r >= state.profile.system.r_s()) {
        return Err(FlowError::LeftDomain { time: t_next });
    }
    FlowState::evaluate(state.profile.with_radii(radii), t_next)
}

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converged,
    MaxSteps,
    BlowUp,
    LeftDomain,
}

/// Flow run parameters. Tolerances are relative to |H_bar|.
#[derive(Clone, Debug)]
pub struct FlowConfig {
    /// Grid intervals over the chamber arc.
    pub n: usize,
    /// Initial (round) radius.
    pub r0: f64,
    /// Step-size factor; (0, 0.5] is the stable range.
    pub cfl: f64,
    /// Convergence tolerance on max|H_mod - H_bar| / |H_bar|.
    pub tol_cmc: f64,
    /// Convergence tolerance on max radial speed / |H_bar|.
    pub tol_rate: f64,
    pub max_steps: u64,
    /// Trajectory sampling stride in steps.
    pub sample_every: u64,
    /// Relative wall tolerance for the rho evaluation.
    pub wall_tolerance: f64,
}

impl FlowConfig {
    pub fn new(r0: f64) -> Self {
        FlowConfig {
            n: 256,
            r0,
            cfl: 0.25,
            tol_cmc: 1e-6,
            tol_rate: 1e-6,
            max_steps: 2_000_000,
            sample_every: 1000,
            wall_tolerance: WALL_TOL,
        }
    }

    pub fn validate(&self, system: &WeightedRootSystem) -> Result<(), FlowError> {
        if self.n < 16 {
            return Err(FlowError::GridTooCoarse(self.n));
        }
        if !(self.r0 > 0.0 && self.r0 < system.r_s()) {
            return Err(FlowError::RadiusOutOfRange(self.r0, system.r_s()));
        }
        let positive = [
            ("cfl", self.cfl),
            ("tol_cmc", self.tol_cmc),
            ("tol_rate", self.tol_rate),
            ("wall_tolerance", self.wall_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FlowError::BadConfig(format!("{name} must be positive")));
            }
        }
        if self.sample_every == 0 {
            return Err(FlowError::BadConfig("sample_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// A sampled run: states at the sampling stride (always including the first
/// and the last computed state) and the terminal status.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    pub status: ConvergenceStatus,
    pub steps: u64,
}

impl Trajectory {
    pub fn initial(&self) -> &FlowState {
        &self.states[0]
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectories are never empty")
    }
}

/// Integrate the flow from the round profile until stationary or a terminal
/// event. Convergence is tested before each step, so an initial profile that
/// is already stationary converges at step 0. The step size is recomputed
/// from the current profile every step.
pub fn run_flow(
    system: Arc<WeightedRootSystem>,
    config: &FlowConfig,
) -> Result<Trajectory, FlowError> {
    config.validate(&system)?;
    let profile = RadialProfile::round(system, config.r0, config.n)?
        .with_wall_tol(config.wall_tolerance);
    let mut state = FlowState::evaluate(profile, 0.0)?;
    let mut states = vec![state.clone()];
    let mut steps = 0u64;
    let status = loop {
        if state.is_converged(config.tol_cmc, config.tol_rate) {
            break ConvergenceStatus::Converged;
        }
        if steps >= config.max_steps {
            break ConvergenceStatus::MaxSteps;
        }
        let dt = stable_dt(&state.profile, config.cfl);
        match step(&state, dt) {
            Ok(next) => {
                state = next;
                steps += 1;
                if steps % config.sample_every == 0 {
                    states.push(state.clone());
                }
            }
            Err(FlowError::LeftDomain { .. }) => break ConvergenceStatus::LeftDomain,
            Err(FlowError::BlowUp { .. }) => break ConvergenceStatus::BlowUp,
            Err(e) => return Err(e),
        }
    };
    if states
        .last()
        .map(|s| s.time != state.time)
        .unwrap_or(true)
    {
        states.push(state);
    }
    Ok(Trajectory {
        states,
        status,
        steps,
    })
}

/// Integrate a fixed number of steps at a fixed dt, keeping every state.
/// Intended for short diagnostic windows; terminal events are returned as
/// errors rather than statuses.
pub fn run_window(
    start: &FlowState,
    dt: f64,
    steps: usize,
) -> Result<Vec<FlowState>, FlowError> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(start.clone());
    for _ in 0..steps {
        let next = step(states.last().expect("nonempty"), dt)?;
        states.push(next);
    }
    Ok(states)
}

/// Assemble the full closed curve: apply every Weyl element to the arc
/// samples, drop duplicated wall points, and order by angle.
pub fn full_orbit_curve(profile: &RadialProfile) -> Result<Vec<[f64; 2]>, FlowError> {
    let system = profile.system();
    let group = system.weyl_group()?;
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(group.order() * profile.radii.len());
    for w in group.elements() {
        for (t, r) in profile.thetas.iter().zip(&profile.radii) {
            let p = [r * t.cos(), r * t.sin()];
            let q = w.apply(&p);
            pts.push([q[0], q[1]]);
        }
    }
    pts.sort_by(|a, b| {
        f64::atan2(a[1], a[0])
            .partial_cmp(&f64::atan2(b[1], b[0]))
            .expect("finite angles")
    });
    // Circular deduplication: wall nodes are shared by adjacent chamber
    // copies; a duplicate pair can also straddle the atan2 branch cut.
    let close = |a: &[f64; 2], b: &[f64; 2]| {
        let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
        (dx * dx + dy * dy).sqrt() < 1e-10
    };
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().map(|q| close(q, &p)).unwrap_or(false) {
            continue;
        }
        out.push(p);
    }
    if out.len() > 1 && close(&out[0], out.last().expect("nonempty")) {
        out.pop();
    }
    Ok(out)
}
