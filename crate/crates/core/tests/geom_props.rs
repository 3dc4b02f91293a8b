use porca::geom::{closest_approach, HalfPlane, Vector2, VoCone};
use proptest::prelude::*;

fn v(x: f64, y: f64) -> Vector2 {
    Vector2::new(x, y)
}

// First time in (0, tau] at which the ray t*vel enters the disc, from the
// segment-disc quadratic.
fn first_contact(c: Vector2, r: f64, vel: Vector2) -> Option<f64> {
    let a = vel.length_squared();
    let b = -2.0 * vel.dot(c);
    let cc = c.length_squared() - r * r;
    let disc = b * b - 4.0 * a * cc;
    if a == 0.0 || disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    (t > 0.0).then_some(t)
}

// Distance from `p` to the cone boundary, from dense samples of the cutoff
// circle and both tangent rays kept only where containment flips nearby.
fn sampled_boundary_distance(cone: &VoCone, p: Vector2) -> f64 {
    let c = cone.center() / cone.tau();
    let r = cone.combined_radius() / cone.tau();
    let on_boundary = |q: Vector2| {
        let h = 1e-7;
        let probes = [v(h, 0.0), v(-h, 0.0), v(0.0, h), v(0.0, -h)];
        let inside = probes.iter().filter(|d| cone.contains(q + **d)).count();
        inside > 0 && inside < probes.len()
    };
    let mut best = f64::INFINITY;
    let n = 4000;
    for i in 0..n {
        let a = std::f64::consts::TAU * i as f64 / n as f64;
        let q = c + Vector2::from_angle(a) * r;
        if on_boundary(q) {
            best = best.min(q.distance(p));
        }
    }
    let half = (cone.combined_radius() / cone.center().length()).asin();
    let axis = cone.center().angle();
    let reach = p.length() + c.length() + r + 1.0;
    for side in [-1.0, 1.0] {
        let dir = Vector2::from_angle(axis + side * half);
        for i in 0..n {
            let q = dir * (reach * i as f64 / n as f64);
            if on_boundary(q) {
                best = best.min(q.distance(p));
            }
        }
    }
    best
}

fn cone_strategy() -> impl Strategy<Value = VoCone> {
    (
        0.0..std::f64::consts::TAU,
        0.2f64..1.5,
        1.2f64..8.0,
        0.5f64..5.0,
    )
        .prop_map(|(angle, r, dist_factor, tau)| {
            VoCone::new(Vector2::from_angle(angle) * (r * dist_factor), r, tau).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn containment_matches_the_first_contact_oracle(
        cone in cone_strategy(),
        x in -4.0f64..4.0,
        y in -4.0f64..4.0,
    ) {
        let vel = v(x, y);
        let contact = first_contact(cone.center(), cone.combined_radius(), vel);
        // Skip points within rounding of the boundary.
        let near_edge = match contact {
            Some(t) => (t - cone.tau()).abs() < 1e-6,
            None => {
                let a = vel.length_squared();
                let b = -2.0 * vel.dot(cone.center());
                let cc = cone.center().length_squared() - cone.combined_radius().powi(2);
                (b * b - 4.0 * a * cc).abs() < 1e-6
            }
        };
        prop_assume!(!near_edge);
        let expected = contact.is_some_and(|t| t <= cone.tau());
        prop_assert_eq!(cone.contains(vel), expected);
    }

    #[test]
    fn correction_lands_on_the_boundary(
        cone in cone_strategy(),
        x in -4.0f64..4.0,
        y in -4.0f64..4.0,
    ) {
        let p = v(x, y);
        let bp = cone.closest_boundary(p);
        let u = bp.point - p;
        prop_assert!((bp.normal.length() - 1.0).abs() < 1e-9);
        prop_assert!(!cone.contains(bp.point + bp.normal * 1e-6));
        if cone.contains(p) {
            prop_assert!(!cone.contains(p + u * 1.001 + bp.normal * 1e-9));
        }
    }

    #[test]
    fn closest_point_matches_the_sampling_oracle(
        cone in cone_strategy(),
        x in -3.0f64..3.0,
        y in -3.0f64..3.0,
    ) {
        let p = v(x, y);
        let bp = cone.closest_boundary(p);
        let oracle = sampled_boundary_distance(&cone, p);
        prop_assert!(
            (bp.point.distance(p) - oracle).abs() < 1e-3,
            "analytic {} vs sampled {}", bp.point.distance(p), oracle
        );
    }

    #[test]
    fn scaling_keeps_leg_angles(cone in cone_strategy(), k in 0.2f64..5.0) {
        let scaled = VoCone::new(cone.center() * k, cone.combined_radius() * k, cone.tau()).unwrap();
        let expected = (cone.combined_radius() / cone.center().length()).asin();
        prop_assert!((cone.leg_half_angle() - expected).abs() < 1e-12);
        prop_assert!((scaled.leg_half_angle() - expected).abs() < 1e-12);
        prop_assert!((scaled.cutoff_radius() - k * cone.cutoff_radius()).abs() < 1e-9);
        prop_assert!(scaled.cutoff_center().distance(cone.cutoff_center() * k) < 1e-9);
    }

    #[test]
    fn half_plane_containment_is_the_signed_distance_test(
        px in -3.0f64..3.0, py in -3.0f64..3.0,
        nx in -2.0f64..2.0, ny in -2.0f64..2.0,
        x in -3.0f64..3.0, y in -3.0f64..3.0,
    ) {
        prop_assume!(nx.hypot(ny) > 1e-3);
        let hp = HalfPlane::new(v(px, py), v(nx, ny)).unwrap();
        prop_assert!((hp.normal.length() - 1.0).abs() < 1e-9);
        let q = v(x, y);
        prop_assert_eq!(hp.contains(q), (q - hp.point).dot(hp.normal) >= -1e-9);
    }

    #[test]
    fn closest_approach_matches_sampling(
        px in -5.0f64..5.0, py in -5.0f64..5.0,
        vx in -2.0f64..2.0, vy in -2.0f64..2.0,
        horizon in 0.1f64..5.0,
    ) {
        let (p, vel) = (v(px, py), v(vx, vy));
        let exact = closest_approach(p, vel, horizon);
        let sampled = (0..=2000)
            .map(|i| (p + vel * (horizon * i as f64 / 2000.0)).length())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(exact <= sampled + 1e-12);
        prop_assert!(sampled - exact < 1e-2);
    }
}

#[test]
fn documented_examples() {
    let cone = VoCone::new(v(2.0, 0.0), 1.0, 2.0).unwrap();
    assert!(!cone.contains(v(0.0, 1.0)));
    assert!(cone.contains(v(1.0, 0.0)));
    assert!(!cone.contains(v(0.4, 0.0)));

    let far = VoCone::new(v(10.0, 0.0), 1.0, 2.0).unwrap();
    let bp = far.closest_boundary(Vector2::ZERO);
    assert!(bp.point.distance(v(4.5, 0.0)) < 1e-12);
    assert!(bp.normal.distance(v(-1.0, 0.0)) < 1e-12);

    let leg = VoCone::new(v(4.0, 0.0), 1.0, 4.0).unwrap();
    let u = leg.closest_boundary(v(1.0, 0.1)).point - v(1.0, 0.1);
    assert!((u.length() - 0.1532).abs() < 1e-4);
    assert!(u.distance(v(-0.0383, 0.1483)) < 1e-4);
}
