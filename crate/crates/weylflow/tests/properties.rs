//! Randomized cross-module invariants: chamber folding, Weyl invariance of
//! the curvature correction, the eta sandwich, and quadrature symmetries.

use proptest::prelude::*;
use std::sync::Arc;
use weylflow::curvature::{b_limits, cot_eps, eta_bounds, rho_point, sphere_h};
use weylflow::flow::{average_of, enclosed_area, full_orbit_curve, RadialProfile};
use weylflow::rootsys::{
    dir, fold_direction, Covector, Epsilon, RootFamily, WeightedRootSystem,
};

fn eps(i: usize) -> Epsilon {
    if i % 2 == 0 {
        Epsilon::Plus
    } else {
        Epsilon::Minus
    }
}

/// Six rank-2 systems covering all supported rank-2 families and both signs.
fn rank2_system(i: usize) -> Arc<WeightedRootSystem> {
    let sys = match i % 6 {
        0 | 1 => WeightedRootSystem::build(RootFamily::A, 2, &[1 + i as u32 % 3], eps(i)),
        2 | 3 => WeightedRootSystem::build(RootFamily::B, 2, &[1, 2], eps(i)),
        _ => WeightedRootSystem::build(RootFamily::G2, 2, &[2, 1], eps(i)),
    };
    Arc::new(sys.unwrap())
}

/// Higher-rank pool for the folding properties (rank 2 through 4).
fn any_rank_system(i: usize) -> Arc<WeightedRootSystem> {
    let sys = match i % 6 {
        0 => WeightedRootSystem::build(RootFamily::A, 3, &[2], eps(i)),
        1 => WeightedRootSystem::build(RootFamily::B, 3, &[1, 3], eps(i)),
        2 => WeightedRootSystem::build(RootFamily::C, 3, &[1, 1], eps(i)),
        3 => WeightedRootSystem::build(RootFamily::BC, 3, &[2, 1, 1], eps(i)),
        4 => WeightedRootSystem::build(RootFamily::D, 4, &[1], eps(i)),
        _ => WeightedRootSystem::build(RootFamily::F4, 4, &[1, 2], eps(i)),
    };
    Arc::new(sys.unwrap())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A radius comfortably inside the domain: fraction of r_S in the compact
/// case, fraction of an arbitrary window in the noncompact one.
fn interior_radius(system: &WeightedRootSystem, frac: f64) -> f64 {
    let cap = if system.r_s().is_finite() {
        0.9 * system.r_s()
    } else {
        20.0
    };
    (0.05 + 0.9 * frac) * cap
}

proptest! {
    /// Pairing is linear in the vector argument.
    #[test]
    fn pairing_is_linear(
        coeffs in prop::collection::vec(-4.0f64..4.0, 2..=4),
        mut v in prop::collection::vec(-5.0f64..5.0, 4),
        mut w in prop::collection::vec(-5.0f64..5.0, 4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        prop_assume!(norm(&coeffs) > 1e-6);
        let l = coeffs.len();
        v.truncate(l);
        w.truncate(l);
        let alpha = Covector::new(coeffs);
        let comb: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let lhs = alpha.pairing(&comb);
        let rhs = a * alpha.pairing(&v) + b * alpha.pairing(&w);
        let scale = alpha.norm() * (a.abs() * norm(&v) + b.abs() * norm(&w) + 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    /// The metric dual has the same norm as the covector and pairs with it
    /// to the squared norm.
    #[test]
    fn dual_preserves_norm(coeffs in prop::collection::vec(-4.0f64..4.0, 2..=4)) {
        prop_assume!(norm(&coeffs) > 1e-6);
        let alpha = Covector::new(coeffs);
        let dual = alpha.dual();
        prop_assert!((norm(&dual) - alpha.norm()).abs() <= 1e-12 * alpha.norm());
        let n2 = alpha.norm() * alpha.norm();
        prop_assert!((alpha.pairing(&dual) - n2).abs() <= 1e-12 * n2);
    }

    /// Group folding lands in the closed chamber, preserves the norm, and is
    /// idempotent (an already-folded vector maps to itself by the identity).
    #[test]
    fn fold_to_chamber_idempotent(
        sys_i in 0usize..6,
        raw in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        prop_assume!(norm(&raw) > 1e-3);
        let system = rank2_system(sys_i);
        let weyl = system.weyl_group().unwrap();
        let (k, img) = weyl.fold_to_chamber(&system, &raw);
        prop_assert!(k < weyl.order());
        prop_assert!((norm(&img) - norm(&raw)).abs() <= 1e-12 * norm(&raw));
        for (i, alpha) in system.positive_roots().iter().enumerate() {
            prop_assert!(
                alpha.pairing(&img) >= -1e-9 * system.root_norm(i) * norm(&raw),
                "root {i} negative on folded image"
            );
        }
        let (k2, img2) = weyl.fold_to_chamber(&system, &img);
        prop_assert_eq!(k2, 0, "second fold should pick the identity");
        prop_assert_eq!(img2, img);
    }

    /// Reflection-descent folding agrees with the group fold: the chamber is
    /// a strict fundamental domain, so the folded representative is unique.
    #[test]
    fn fold_direction_matches_group_fold(
        sys_i in 0usize..6,
        raw in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        prop_assume!(norm(&raw) > 1e-3);
        let system = rank2_system(sys_i);
        let weyl = system.weyl_group().unwrap();
        let (_, by_group) = weyl.fold_to_chamber(&system, &raw);
        let by_descent = fold_direction(&system, &raw);
        for (a, b) in by_group.iter().zip(&by_descent) {
            prop_assert!((a - b).abs() <= 1e-9 * norm(&raw));
        }
    }

    /// Descent folding works at every supported rank: the image lies in the
    /// closed chamber with the norm preserved.
    #[test]
    fn fold_direction_lands_in_chamber(
        sys_i in 0usize..6,
        mut raw in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let system = any_rank_system(sys_i);
        raw.truncate(system.rank());
        prop_assume!(norm(&raw) > 1e-3);
        let img = fold_direction(&system, &raw);
        prop_assert!((norm(&img) - norm(&raw)).abs() <= 1e-12 * norm(&raw));
        for (i, alpha) in system.positive_roots().iter().enumerate() {
            prop_assert!(
                alpha.pairing(&img) >= -1e-9 * system.root_norm(i) * norm(&raw),
                "root {i} negative on folded image"
            );
        }
    }

    /// The curvature correction is Weyl-invariant: rho(w phi, w nu) = rho(phi, nu).
    #[test]
    fn rho_is_weyl_invariant(
        sys_i in 0usize..6,
        elem in 0usize..12,
        theta in 0.0f64..std::f64::consts::TAU,
        psi in 0.0f64..std::f64::consts::TAU,
        frac in 0.0f64..1.0,
    ) {
        let system = rank2_system(sys_i);
        let weyl = system.weyl_group().unwrap();
        let w = &weyl.elements()[elem % weyl.order()];
        let r = interior_radius(&system, frac);
        let phi = [r * theta.cos(), r * theta.sin()];
        let nu = dir(psi);
        let rho = rho_point(&system, &phi, &nu).unwrap();
        let rho_w = rho_point(&system, &w.apply(&phi), &w.apply(&nu)).unwrap();
        prop_assert!((rho - rho_w).abs() <= 1e-10 * (1.0 + rho.abs()));
    }

    /// Weyl invariance through the wall branch: the base point sits exactly
    /// on a wall, so the m/|phi| limit fires on both sides of the identity.
    #[test]
    fn rho_wall_branch_is_weyl_invariant(
        sys_i in 0usize..6,
        elem in 0usize..12,
        psi in 0.0f64..std::f64::consts::TAU,
        frac in 0.0f64..1.0,
        hi_wall in proptest::bool::ANY,
    ) {
        let system = rank2_system(sys_i);
        let arc = system.chamber_arc().unwrap();
        let weyl = system.weyl_group().unwrap();
        let w = &weyl.elements()[elem % weyl.order()];
        let r = interior_radius(&system, frac);
        let theta = if hi_wall { arc.theta_hi } else { arc.theta_lo };
        let phi = [r * theta.cos(), r * theta.sin()];
        prop_assert!(!system.wall_roots(&phi).is_empty(), "endpoint must sit on a wall");
        let nu = dir(psi);
        let rho = rho_point(&system, &phi, &nu).unwrap();
        let rho_w = rho_point(&system, &w.apply(&phi), &w.apply(&nu)).unwrap();
        prop_assert!((rho - rho_w).abs() <= 1e-10 * (1.0 + rho.abs()));
    }

    /// Series branch of the kernel agrees with direct evaluation.
    #[test]
    fn cot_eps_series_matches_direct(
        mag in -6.0f64..-3.7,
        plus in proptest::bool::ANY,
    ) {
        let x = 10f64.powf(mag);
        let (e, direct) = if plus {
            (Epsilon::Plus, 1.0 / x.tan())
        } else {
            (Epsilon::Minus, 1.0 / x.tanh())
        };
        let got = cot_eps(x, e);
        prop_assert!((got - direct).abs() <= 1e-11 * direct.abs());
    }

    /// Constant fields average to themselves under the arclength quadrature.
    #[test]
    fn average_of_constant_is_exact(
        sys_i in 0usize..6,
        c in -50.0f64..50.0,
        frac in 0.0f64..1.0,
        bump in -0.2f64..0.2,
    ) {
        let system = rank2_system(sys_i);
        let arc = system.chamber_arc().unwrap();
        let r0 = interior_radius(&system, frac) * 0.5;
        let profile = RadialProfile::from_radii(
            Arc::clone(&system),
            |t| r0 * (1.0 + bump * ((t - arc.theta_lo) / arc.width()).sin()),
            32,
        )
        .unwrap();
        let field = vec![c; profile.n() + 1];
        let avg = average_of(&profile, &field);
        prop_assert!((avg - c).abs() <= 1e-13 * (1.0 + c.abs()));
    }

    /// Enclosed area is invariant under reflecting the profile across the
    /// chamber bisector (the mirrored curve is congruent).
    #[test]
    fn area_is_reflection_invariant(
        sys_i in 0usize..6,
        frac in 0.0f64..1.0,
        a1 in -0.1f64..0.1,
        a2 in -0.1f64..0.1,
        b1 in -0.1f64..0.1,
    ) {
        let system = rank2_system(sys_i);
        let arc = system.chamber_arc().unwrap();
        let r0 = interior_radius(&system, frac) * 0.5;
        let shape = move |x: f64| {
            1.0 + a1 * (std::f64::consts::PI * x).cos()
                + a2 * (2.0 * std::f64::consts::PI * x).cos()
                + b1 * (std::f64::consts::PI * x).sin()
        };
        let fwd = RadialProfile::from_radii(
            Arc::clone(&system),
            |t| r0 * shape((t - arc.theta_lo) / arc.width()),
            48,
        )
        .unwrap();
        let rev = RadialProfile::from_radii(
            Arc::clone(&system),
            |t| r0 * shape((arc.theta_hi - t) / arc.width()),
            48,
        )
        .unwrap();
        let (af, ar) = (enclosed_area(&fwd), enclosed_area(&rev));
        prop_assert!((af - ar).abs() <= 1e-12 * af.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every sampled sphere curvature lies inside the certified eta interval.
    #[test]
    fn eta_interval_bounds_every_direction(
        sys_i in 0usize..6,
        frac in 0.0f64..1.0,
        angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 8),
    ) {
        let system = rank2_system(sys_i);
        let s = interior_radius(&system, frac);
        let eta = eta_bounds(&system, s, 200).unwrap();
        for theta in angles {
            let z = fold_direction(&system, &dir(theta));
            let h = sphere_h(&system, s, &z).unwrap().h;
            let slack = 1e-12 * (1.0 + h.abs());
            prop_assert!(
                h >= eta.eta_min - slack && h <= eta.eta_max + slack,
                "H = {h} outside [{}, {}] at s = {s}",
                eta.eta_min,
                eta.eta_max
            );
        }
    }
}

/// The assembled orbit curve is setwise invariant under every Weyl element.
fn orbit_invariance_case(system: Arc<WeightedRootSystem>) {
    let arc = system.chamber_arc().unwrap();
    let r0 = if system.r_s().is_finite() {
        0.3 * system.r_s()
    } else {
        1.5
    };
    let profile = RadialProfile::from_radii(
        Arc::clone(&system),
        |t| r0 * (1.0 + 0.08 * (std::f64::consts::PI * (t - arc.theta_lo) / arc.width()).cos()),
        24,
    )
    .unwrap();
    let points = full_orbit_curve(&profile).unwrap();
    let weyl = system.weyl_group().unwrap();
    for w in weyl.elements() {
        for p in &points {
            let q = w.apply(p);
            let nearest = points
                .iter()
                .map(|c| ((c[0] - q[0]).powi(2) + (c[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= 1e-10 * (1.0 + r0),
                "orbit point moved by {nearest} under a Weyl element"
            );
        }
    }
}

#[test]
fn orbit_curve_weyl_invariant_a2() {
    orbit_invariance_case(Arc::new(
        WeightedRootSystem::build(RootFamily::A, 2, &[1], Epsilon::Plus).unwrap(),
    ));
}

#[test]
fn orbit_curve_weyl_invariant_g2() {
    orbit_invariance_case(Arc::new(
        WeightedRootSystem::build(RootFamily::G2, 2, &[1, 2], Epsilon::Minus).unwrap(),
    ));
}

/// b limits are linear in the multiplicities.
#[test]
fn b_limits_scale_with_multiplicity() {
    let one = WeightedRootSystem::build(RootFamily::A, 2, &[1], Epsilon::Minus).unwrap();
    let three = WeightedRootSystem::build(RootFamily::A, 2, &[3], Epsilon::Minus).unwrap();
    let (lo1, hi1) = b_limits(&one).unwrap();
    let (lo3, hi3) = b_limits(&three).unwrap();
    assert!((lo3 - 3.0 * lo1).abs() <= 1e-12 * lo3.abs());
    assert!((hi3 - 3.0 * hi1).abs() <= 1e-12 * hi3.abs());
}
