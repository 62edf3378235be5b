//! The root-system curvature correction and curvature of centered spheres.
//!
//! The central quantity is
//!
//! ```text
//! rho(phi, nu) = sum_{alpha in Delta+} m_alpha * alpha(nu) * cot_eps(alpha(phi))
//! ```
//!
//! together with the mean curvature of the centered sphere of radius r seen
//! from the chamber, `H(r, Z) = rho(rZ, Z) + (l-1)/r`. Terms whose root
//! vanishes on `phi` (wall points) are replaced by their limit
//! `m_alpha / ||phi||`, which keeps H continuous up to the chamber walls.
//!
//! The module also computes the extremes of `Z -> H(r, Z)` over the chamber
//! (`eta_bounds`), their hyperbolic large-radius limits (`b_limits`), and two
//! angular quantities of rank-2 systems: the chamber width (`theta_gk`) and
//! the largest separation between neighboring extrema of rho along the arc
//! (`theta0`).

use crate::rootsys::{dir, fold_direction, Epsilon, RootSystemError, WeightedRootSystem, WALL_TOL};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("phi = 0 is a pole of the curvature correction")]
    ZeroPoint,
    #[error("point at distance {radius} leaves the open ball of critical radius {r_s}")]
    OutsideCriticalBall { radius: f64, r_s: f64 },
    #[error("radius {0} out of range (0, {1})")]
    RadiusOutOfRange(f64, f64),
    #[error("direction lies outside the closed chamber (worst root pairing {0:.3e})")]
    OutsideChamber(f64),
    #[error("sampling budget too small: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },
    #[error("large-radius limits exist only for epsilon = -1")]
    RequiresHyperbolic,
    #[error(transparent)]
    RootSystem(#[from] RootSystemError),
}

/// Cotangent kernel: `cot(x)` for epsilon = +1, `coth(x)` for epsilon = -1.
/// Odd in `x`. Near the pole (|x| < 1e-4) the Laurent series
/// `1/x - eps*x/3 - x^3/45 - 2*eps*x^5/945` is used; its truncation error at
/// the branch point is below 1e-30 relative.
///
/// Panics on `x = 0` (a pole; callers handle wall points before calling) and,
/// for epsilon = +1, on `|x| >= pi` (upstream domain restrictions make this
/// unreachable from library callers).
pub fn cot_eps(x: f64, epsilon: Epsilon) -> f64 {
    assert!(x != 0.0, "cot_eps: x = 0 is a pole; use the wall branch");
    if epsilon == Epsilon::Plus {
        assert!(
            x.abs() < std::f64::consts::PI,
            "cot_eps: |x| must be below pi for epsilon = +1, got {x}"
        );
    }
    if x.abs() < 1e-4 {
        let e = epsilon.sign();
        let x2 = x * x;
        1.0 / x - e * x / 3.0 - x * x2 / 45.0 - e * 2.0 * x2 * x2 * x / 945.0
    } else {
        match epsilon {
            Epsilon::Plus => 1.0 / x.tan(),
            Epsilon::Minus => 1.0 / x.tanh(),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The curvature correction rho at a point `phi` (inside the critical ball,
/// away from the origin) for a unit direction `nu`. Root terms vanishing on
/// `phi` within the relative wall tolerance contribute their continuity limit
/// `m_alpha / ||phi||`.
pub fn rho_point(
    system: &WeightedRootSystem,
    phi: &[f64],
    nu: &[f64],
) -> Result<f64, CurvatureError> {
    rho_point_with_wall_tol(system, phi, nu, WALL_TOL)
}

/// [`rho_point`] with an explicit relative wall tolerance: a root term
/// switches to its `m_alpha / ||phi||` limit when
/// `|alpha(phi)| < wall_tol * ||alpha|| * ||phi||`.
pub fn rho_point_with_wall_tol(
    system: &WeightedRootSystem,
    phi: &[f64],
    nu: &[f64],
    wall_tol: f64,
) -> Result<f64, CurvatureError> {
    let r = norm(phi);
    if r == 0.0 {
        return Err(CurvatureError::ZeroPoint);
    }
    if r >= system.r_s() {
        return Err(CurvatureError::OutsideCriticalBall {
            radius: r,
            r_s: system.r_s(),
        });
    }
    debug_assert!((norm(nu) - 1.0).abs() < 1e-10, "nu must be a unit vector");
    let eps = system.epsilon();
    let mut rho = 0.0;
    for (i, alpha) in system.positive_roots().iter().enumerate() {
        let m = f64::from(system.mults()[i]);
        if m == 0.0 {
            continue;
        }
        let a_phi = alpha.pairing(phi);
        if a_phi.abs() < wall_tol * system.root_norm(i) * r {
            rho += m / r;
        } else {
            rho += m * alpha.pairing(nu) * cot_eps(a_phi, eps);
        }
    }
    Ok(rho)
}

/// Mean curvature at `phi` of a surface whose Euclidean profile has mean
/// curvature `euclidean_h` there (inward normal `nu`): the correction is
/// additive.
pub fn lifted_h(
    system: &WeightedRootSystem,
    phi: &[f64],
    nu: &[f64],
    euclidean_h: f64,
) -> Result<f64, CurvatureError> {
    Ok(rho_point(system, phi, nu)? + euclidean_h)
}

/// Curvature of the centered sphere of radius `radius` in the chamber
/// direction `direction`, plus the roots vanishing on that direction.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureSample {
    pub direction: Vec<f64>,
    pub radius: f64,
    pub h: f64,
    /// Indices into the positive roots of the system.
    pub boundary_roots: Vec<usize>,
}

/// Mean curvature of the centered sphere of radius `r` at the point `rZ`
/// with outward normal `Z`: `rho(rZ, Z) + (l-1)/r`, wall terms handled by
/// their continuity limit.
pub fn sphere_h(
    system: &WeightedRootSystem,
    r: f64,
    z: &[f64],
) -> Result<CurvatureSample, CurvatureError> {
    if !(r > 0.0 && r < system.r_s()) {
        return Err(CurvatureError::RadiusOutOfRange(r, system.r_s()));
    }
    let worst = system
        .positive_roots()
        .iter()
        .enumerate()
        .map(|(i, a)| a.pairing(z) / system.root_norm(i))
        .fold(f64::INFINITY, f64::min);
    if worst < -1e-9 {
        return Err(CurvatureError::OutsideChamber(worst));
    }
    debug_assert!((norm(z) - 1.0).abs() < 1e-10, "Z must be a unit vector");
    let phi: Vec<f64> = z.iter().map(|x| x * r).collect();
    let rho = rho_point(system, &phi, z)?;
    let h = rho + (system.rank() as f64 - 1.0) / r;
    Ok(CurvatureSample {
        direction: z.to_vec(),
        radius: r,
        h,
        boundary_roots: system.wall_roots(z),
    })
}

/// Extremes of the sphere curvature over chamber directions at a fixed
/// radius, with the directions attaining them.
#[derive(Clone, Debug, Serialize)]
pub struct EtaBounds {
    pub eta_min: f64,
    pub eta_max: f64,
    pub argmin_dir: Vec<f64>,
    pub argmax_dir: Vec<f64>,
    pub radius: f64,
}

/// Extremes of `Z -> sphere_h(system, s, Z)` over the closed chamber.
///
/// Deterministic quasi-uniform sampling (an inclusive arc grid for rank 2, a
/// folded low-discrepancy sphere sequence otherwise) seeds a local
/// refinement (golden section along the arc, coordinate descent otherwise).
/// The whole procedure is re-run at twice the budget and the wider interval
/// is kept, so reported bounds are certified monotone under sample doubling.
pub fn eta_bounds(
    system: &WeightedRootSystem,
    s: f64,
    n_samples: usize,
) -> Result<EtaBounds, CurvatureError> {
    if !(s > 0.0 && s < system.r_s()) {
        return Err(CurvatureError::RadiusOutOfRange(s, system.r_s()));
    }
    if n_samples < 100 {
        return Err(CurvatureError::TooFewSamples {
            got: n_samples,
            need: 100,
        });
    }
    let objective = |z: &[f64]| {
        sphere_h(system, s, z)
            .expect("folded chamber directions are valid sphere_h inputs")
            .h
    };
    let (lo, hi) = extremize_twice(system, &objective, n_samples)?;
    Ok(EtaBounds {
        eta_min: lo.0,
        eta_max: hi.0,
        argmin_dir: lo.1,
        argmax_dir: hi.1,
        radius: s,
    })
}

/// Large-radius limits of the sphere-curvature extremes for the hyperbolic
/// kernel: the extremes of `Z -> sum m_alpha |alpha(Z)|` over the unit
/// sphere, computed on the chamber where every |alpha| drops.
pub fn b_limits(system: &WeightedRootSystem) -> Result<(f64, f64), CurvatureError> {
    if system.epsilon() == Epsilon::Plus {
        return Err(CurvatureError::RequiresHyperbolic);
    }
    let objective = |z: &[f64]| {
        system
            .positive_roots()
            .iter()
            .enumerate()
            .map(|(i, a)| f64::from(system.mults()[i]) * a.pairing(z))
            .sum::<f64>()
    };
    let (lo, hi) = extremize_twice(system, &objective, 1024)?;
    Ok((lo.0, hi.0))
}

/// Width of the chamber arc (rank 2): the largest angle between two chamber
/// directions.
pub fn theta_gk(system: &WeightedRootSystem) -> Result<f64, CurvatureError> {
    Ok(system.chamber_arc()?.width())
}

/// Largest angular separation between a local maximum of the sphere
/// correction and a neighboring local minimum along the chamber arc.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Theta0 {
    pub angle: f64,
    /// Set when rho is constant along the arc to working precision; the
    /// angle is then reported as 0.
    pub degenerate: bool,
}

/// Evaluate rho along the chamber arc of a rank-2 system on `grid_n` nodes
/// (at the point `r Z` with normal `Z`), locate local extrema (one-sided at
/// the endpoints), and return the largest separation between neighboring
/// extrema of opposite kind.
///
/// Profiles whose peak-to-peak variation is below `1e-10 * |mean|` are
/// reported as degenerate: at that level the extremum structure is noise.
pub fn theta0(
    system: &WeightedRootSystem,
    r: f64,
    grid_n: usize,
) -> Result<Theta0, CurvatureError> {
    if !(r > 0.0 && r < system.r_s()) {
        return Err(CurvatureError::RadiusOutOfRange(r, system.r_s()));
    }
    if grid_n < 8 {
        return Err(CurvatureError::TooFewSamples {
            got: grid_n,
            need: 8,
        });
    }
    let arc = system.chamber_arc()?;
    let thetas: Vec<f64> = (0..grid_n)
        .map(|k| arc.theta_lo + arc.width() * k as f64 / (grid_n - 1) as f64)
        .collect();
    let rho: Vec<f64> = thetas
        .iter()
        .map(|&t| {
            let z = dir(t);
            let phi = [r * z[0], r * z[1]];
            rho_point(system, &phi, &z).expect("arc points stay inside the critical ball")
        })
        .collect();

    let top = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bot = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    if top - bot < 1e-10 * mean.abs().max(f64::MIN_POSITIVE) {
        return Ok(Theta0 {
            angle: 0.0,
            degenerate: true,
        });
    }

    // Classify extrema by the sign pattern of the discrete derivative;
    // plateaus inherit the last nonzero sign.
    #[derive(PartialEq, Clone, Copy)]
    enum Kind {
        Max,
        Min,
    }
    let mut extrema: Vec<(f64, Kind)> = Vec::new();
    let d: Vec<f64> = rho.windows(2).map(|w| w[1] - w[0]).collect();
    let first_sign = d.iter().find(|&&x| x != 0.0).copied().unwrap_or(0.0);
    if first_sign < 0.0 {
        extrema.push((thetas[0], Kind::Max));
    } else if first_sign > 0.0 {
        extrema.push((thetas[0], Kind::Min));
    }
    let mut last = first_sign;
    for i in 1..grid_n - 1 {
        let cur = d[i];
        if cur == 0.0 {
            continue;
        }
        if last > 0.0 && cur < 0.0 {
            extrema.push((thetas[i], Kind::Max));
        } else if last < 0.0 && cur > 0.0 {
            extrema.push((thetas[i], Kind::Min));
        }
        last = cur;
    }
    if last > 0.0 {
        extrema.push((thetas[grid_n - 1], Kind::Max));
    } else if last < 0.0 {
        extrema.push((thetas[grid_n - 1], Kind::Min));
    }

    let mut best = 0.0f64;
    for w in extrema.windows(2) {
        if w[0].1 != w[1].1 {
            best = best.max(w[1].0 - w[0].0);
        }
    }
    if best == 0.0 {
        return Ok(Theta0 {
            angle: 0.0,
            degenerate: true,
        });
    }
    Ok(Theta0 {
        angle: best,
        degenerate: false,
    })
}

/// Run the extremizer at `n` and `2n` samples and keep the wider interval.
#[allow(clippy::type_complexity)]
fn extremize_twice(
    system: &WeightedRootSystem,
    objective: &dyn Fn(&[f64]) -> f64,
    n: usize,
) -> Result<((f64, Vec<f64>), (f64, Vec<f64>)), CurvatureError> {
    let a = extremize(system, objective, n)?;
    let b = extremize(system, objective, 2 * n)?;
    let lo = if a.0 .0 <= b.0 .0 { a.0 } else { b.0 };
    let hi = if a.1 .0 >= b.1 .0 { a.1 } else { b.1 };
    Ok((lo, hi))
}

/// One extremization pass: quasi-uniform seed sampling plus local
/// refinement. Returns ((min, argmin), (max, argmax)).
#[allow(clippy::type_complexity)]
fn extremize(
    system: &WeightedRootSystem,
    objective: &dyn Fn(&[f64]) -> f64,
    n: usize,
) -> Result<((f64, Vec<f64>), (f64, Vec<f64>)), CurvatureError> {
    if system.rank() == 2 {
        let arc = system.chamber_arc()?;
        let g = |t: f64| objective(&dir(t));
        let thetas: Vec<f64> = (0..n)
            .map(|k| arc.theta_lo + arc.width() * k as f64 / (n - 1) as f64)
            .collect();
        let vals: Vec<f64> = thetas.iter().map(|&t| g(t)).collect();
        let refine = |want_max: bool| {
            let (mut bi, mut bv) = (0usize, vals[0]);
            for (i, &v) in vals.iter().enumerate() {
                if (want_max && v > bv) || (!want_max && v < bv) {
                    bi = i;
                    bv = v;
                }
            }
            let a = thetas[bi.saturating_sub(1)];
            let b = thetas[(bi + 1).min(n - 1)];
            let (t, v) = golden_section(&g, a, b, want_max, 60);
            if (want_max && v > bv) || (!want_max && v < bv) {
                (v, dir(t).to_vec())
            } else {
                (bv, dir(thetas[bi]).to_vec())
            }
        };
        Ok((refine(false), refine(true)))
    } else {
        let l = system.rank();
        let mut best_min: (f64, Vec<f64>) = (f64::INFINITY, vec![]);
        let mut best_max: (f64, Vec<f64>) = (f64::NEG_INFINITY, vec![]);
        for k in 1..=n {
            let z = fold_direction(system, &halton_sphere_point(k, l));
            let v = objective(&z);
            if v < best_min.0 {
                best_min = (v, z.clone());
            }
            if v > best_max.0 {
                best_max = (v, z);
            }
        }
        let descend = |seed: (f64, Vec<f64>), want_max: bool| {
            let mut x = seed.1;
            let mut fx = seed.0;
            let mut step = 0.2;
            for _ in 0..200 {
                for j in 0..l {
                    for sgn in [1.0, -1.0] {
                        let mut y = x.clone();
                        y[j] += sgn * step;
                        let nn = norm(&y);
                        for e in &mut y {
                            *e /= nn;
                        }
                        let y = fold_direction(system, &y);
                        let fy = objective(&y);
                        if (want_max && fy > fx) || (!want_max && fy < fx) {
                            x = y;
                            fx = fy;
                        }
                    }
                }
                step *= 0.97;
            }
            (fx, x)
        };
        Ok((descend(best_min, false), descend(best_max, true)))
    }
}

/// Golden-section search on [a, b]; maximization negates the objective.
fn golden_section(
    g: &dyn Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    want_max: bool,
    iters: usize,
) -> (f64, f64) {
    let sgn = if want_max { -1.0 } else { 1.0 };
    let f = |t: f64| sgn * g(t);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, g(t))
}

/// Deterministic quasi-random point on the unit sphere in R^l: Halton
/// coordinates pushed through the Box-Muller map, then normalized. Supports
/// l <= 4.
fn halton_sphere_point(index: usize, l: usize) -> Vec<f64> {
    debug_assert!((2..=4).contains(&l));
    let u: Vec<f64> = [2, 3, 5, 7].iter().map(|&b| halton(index, b)).collect();
    let tau = 2.0 * std::f64::consts::PI;
    let r1 = (-2.0 * u[0].ln()).sqrt();
    let r2 = (-2.0 * u[2].ln()).sqrt();
    let normals = [
        r1 * (tau * u[1]).cos(),
        r1 * (tau * u[1]).sin(),
        r2 * (tau * u[3]).cos(),
        r2 * (tau * u[3]).sin(),
    ];
    let mut z: Vec<f64> = normals[..l].to_vec();
    let nn = norm(&z).max(1e-300);
    for e in &mut z {
        *e /= nn;
    }
    z
}

/// Halton low-discrepancy value: the radical inverse of `index` in the given
/// base. `index >= 1` keeps the value strictly inside (0, 1).
fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}
