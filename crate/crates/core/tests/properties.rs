use proptest::prelude::*;

use thinfilm_gl::gl2d::random_init;
use thinfilm_gl::report::fmt_f64;
use thinfilm_gl::*;

fn in_disk() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.95f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

struct Small {
    grid: Grid2D,
    thick: ThicknessProfile,
    pot: EffectivePotential,
}

fn small(n: usize) -> Small {
    let grid = build_disk_domain(1.0, n).unwrap();
    let thick = build_preset_thickness(&grid, ThicknessPreset::TiltedParaboloid).unwrap();
    let pot = build_effective_potential(&grid, &thick, [0.6, 0.0, 0.8], PotentialKind::CriticalOblique).unwrap();
    Small { grid, thick, pot }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn green_is_symmetric_and_positive(x in in_disk(), y in in_disk()) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-6);
        let a = green_disk(x, y).unwrap();
        let b = green_disk(y, x).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn measure_minimizer_stays_on_simplex(r in 0.2..0.8f64, cells in 8usize..48, seed in 0u64..1000) {
        let curve = Curve::circle([0.0, 0.0], r, cells).unwrap();
        let init = DiscreteMeasure::random(cells, seed);
        let e0 = measure_energy(&init, &curve).unwrap();
        let res = minimize_measure(&curve, &init, &MeasureOptions::default()).unwrap();
        let sum: f64 = res.measure.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(res.measure.weights.iter().all(|&w| w >= 0.0));
        prop_assert!(res.energy <= e0 + 1e-15);
        prop_assert!(res.energy > 0.0);
    }

    #[test]
    fn energy_is_gauge_invariant(lambda in 0.0..20.0f64, kappa in 1.5..10.0f64, seed in 0u64..1000, amp in 0.0..10.0f64) {
        let s = small(13);
        let f = OrderParameterField::new(&s.grid, random_init(&vec![1.0; s.grid.n_interior()], 2.0, seed), &s.pot, lambda).unwrap();
        let eta: Vec<f64> = random_init(&vec![1.0; s.grid.n_interior()], 1.0, seed + 1)
            .iter()
            .map(|z| amp * z.im)
            .collect();
        let g = gauge_transform(&s.grid, &f, &eta).unwrap();
        let p = GlProblem::new(&s.grid, &s.thick, &s.pot, lambda, kappa, GammaMode::One, None).unwrap();
        let (a, b) = (p.energy(&f).unwrap(), p.energy(&g).unwrap());
        prop_assert!(a.total >= 0.0);
        prop_assert!((a.total - b.total).abs() <= 1e-12 * a.total);
    }

    #[test]
    fn vortices_are_gauge_invariant_and_flip_under_conjugation(seed in 0u64..1000, amp in 0.0..10.0f64) {
        let s = small(17);
        let f = OrderParameterField::new(&s.grid, random_init(&vec![1.0; s.grid.n_interior()], 3.0, seed), &s.pot, 4.0).unwrap();
        let eta: Vec<f64> = random_init(&vec![1.0; s.grid.n_interior()], 1.0, seed + 7)
            .iter()
            .map(|z| amp * z.re)
            .collect();
        let g = gauge_transform(&s.grid, &f, &eta).unwrap();
        let opts = VortexOptions::default();
        let a = detect_vortices(&s.grid, &f, &opts).unwrap();
        prop_assert_eq!(&a, &detect_vortices(&s.grid, &g, &opts).unwrap());
        let c = detect_vortices(&s.grid, &f.conj(), &opts).unwrap();
        prop_assert_eq!(a.total_degree, -c.total_degree);
        prop_assert_eq!(a.total_degree, a.vortices.iter().map(|v| v.degree).sum::<i32>());
        prop_assert!(a.vortices.iter().all(|v| v.degree != 0));
    }

    #[test]
    fn floats_round_trip_through_reports(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_round_trips(n in 5usize..400, kappa in 1.01..100.0f64, lambda in 0.0..100.0f64, seeds in prop::collection::vec(any::<u64>(), 1..5)) {
        let src = format!("seeds = {seeds:?}\n[domain]\nn = {n}\n[field]\nkappa = {kappa:?}\nlambda = {lambda:?}\n");
        let cfg = ExperimentConfig::from_toml_str(&src).unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(cfg, again);
    }

    #[test]
    fn affine_specs_evaluate_exactly(a in -5.0..5.0f64, b in -5.0..5.0f64, x in in_disk()) {
        let spec = FieldSpec::parse(&format!("{a:?} * x1 + {b:?}")).unwrap();
        prop_assert_eq!(spec.eval(x[0], x[1]), a * x[0] + b);
    }

    #[test]
    fn critical_density_is_bounded(d in 0.1..3.0f64, h2 in 0.0..1e4f64, kappa in 1.1..50.0f64) {
        let g = gamma_kappa(d, h2, kappa);
        prop_assert!((0.0..=1.0).contains(&g));
        let ratio = d * d * h2 / (12.0 * kappa * kappa);
        if ratio > 1.0 + 1e-12 {
            prop_assert_eq!(g, 0.0);
        } else if ratio < 1.0 - 1e-12 {
            prop_assert!(g > 0.0);
        }
    }
}
