use bregmax::bbar::{bbar_eval, normalize_direction};
use bregmax::beta::BetaSystem;
use bregmax::family::{facial_set, moment_map, Instance, Pm};
use bregmax::numerics::{solve_decreasing_root, Tolerances};
use bregmax::projection::{bregman_div, h_energy, rb_project};
use proptest::prelude::*;

fn beta_strategy(n: usize) -> impl Strategy<Value = BetaSystem> {
    prop_oneof![
        prop::collection::vec(0.2f64..3.0, n).prop_map(|nu| BetaSystem::make_classical(&nu).unwrap()),
        prop::collection::vec(0.0f64..3.0, n).prop_map(|a| BetaSystem::make_entropy_quadratic(&a).unwrap()),
    ]
}

/// Instances with integer statistics (so faces are common) and a pm whose
/// support is a random nonempty subset.
fn instance_and_pm() -> impl Strategy<Value = (Instance, Pm)> {
    (2usize..7, 0usize..4).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-2i32..3, n), d),
            beta_strategy(n),
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(rows, beta, w, keep)| {
                let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
                let mut w: Vec<f64> = w.iter().zip(&keep).map(|(x, k)| if *k { *x } else { 0.0 }).collect();
                if w.iter().all(|&x| x == 0.0) {
                    w[0] = 1.0;
                }
                (Instance::unlabeled(&rows, beta).unwrap(), Pm::from_unnormalized(w).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decreasing_roots_meet_the_residual_bound(
        c in prop::collection::vec(0.1f64..2.0, 1..4),
        k in prop::collection::vec(0.1f64..3.0, 3),
        m in 0.0f64..2.0,
        root in -10.0f64..10.0,
        hint in -20.0f64..20.0,
    ) {
        let g = |r: f64| c.iter().zip(&k).map(|(a, b)| a * (-b * r).exp()).sum::<f64>() - m * r;
        let target = g(root);
        let tol = Tolerances::default();
        let r = solve_decreasing_root(g, target, hint, &tol).unwrap();
        prop_assert!((g(r) - target).abs() <= tol.root_abs * target.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_laws((inst, p) in instance_and_pm()) {
        let r = rb_project(&inst, &p).unwrap();
        let dm = moment_map(&inst, &p).iter().zip(moment_map(&inst, &r.pi)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dm <= 1e-8, "moment mismatch {dm}");
        prop_assert_eq!(r.pi.support(), facial_set(&inst, &p.support()).unwrap().members);
        prop_assert!(r.dual_gap <= 1e-7, "dual gap {}", r.dual_gap);
        let energy = h_energy(inst.beta(), &p) - h_energy(inst.beta(), &r.pi);
        prop_assert!((energy - r.value).abs() <= 1e-9);
        let again = rb_project(&inst, &r.pi).unwrap();
        prop_assert!(again.value <= 1e-9 && again.pi.tv_distance(&r.pi) <= 1e-9);
        prop_assert_eq!(r.theta.is_some(), r.face.members.len() == inst.n());
    }

    #[test]
    fn facial_sets_are_closures((inst, p) in instance_and_pm()) {
        let s = p.support();
        let f = facial_set(&inst, &s).unwrap();
        prop_assert!(s.iter().all(|z| f.members.contains(z)));
        prop_assert_eq!(facial_set(&inst, &f.members).unwrap(), f);
    }

    #[test]
    fn divergence_is_nonnegative_and_vanishes_on_the_diagonal(
        beta in beta_strategy(4),
        u in prop::collection::vec(0.0f64..2.0, 4),
        v in prop::collection::vec(0.01f64..2.0, 4),
    ) {
        prop_assert!(bregman_div(&beta, &u, &v).unwrap() >= 0.0);
        prop_assert_eq!(bregman_div(&beta, &u, &u).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bbar_is_scale_invariant_and_positive(
        beta in beta_strategy(4),
        raw in prop::collection::vec(-1.0f64..1.0, 4),
        scale in 0.01f64..100.0,
    ) {
        let m = raw.iter().sum::<f64>() / 4.0;
        let centered: Vec<f64> = raw.iter().map(|x| x - m).collect();
        let Ok(u) = normalize_direction(&centered) else { return Ok(()) };
        let scaled = normalize_direction(&centered.iter().map(|x| scale * x).collect::<Vec<_>>()).unwrap();
        let a = bbar_eval(&beta, &u, 2, 1).unwrap();
        let b = bbar_eval(&beta, &scaled, 2, 1).unwrap();
        prop_assert!(a.value > 0.0);
        prop_assert!((a.value - b.value).abs() <= 1e-12);
    }
}
