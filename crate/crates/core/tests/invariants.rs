use std::io::BufReader;

use proptest::prelude::*;

use aniso::family::ScaleLadder;
use aniso::norms::morrey_norm;
use aniso::verify::random_field;
use aniso::weights::ap_local;
use aniso::{
    box_quasi_norm, dilate_point, lp_norm, maximal, rho_quasi_norm, weak_lp_norm, Anisotropy, Backend, BoxFamily,
    Domain, Grid, GridFunction, MorreyParams, Parallelepiped, SummedTable, Weight, RHO_TOL,
};

fn exps(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..3.0, n)
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-1e3f64..1e3).prop_filter("nonzero", |v| v.abs() > 1e-3), n)
}

fn grid1(lo: f64, hi: f64, n: usize) -> Grid {
    Grid::new(Domain::new(vec![lo], vec![hi]).unwrap(), vec![n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rho_root_homogeneity_and_equivalence((a, x) in (1usize..=4).prop_flat_map(|n| (exps(n), point(n))), lambda in 0.05f64..20.0) {
        let a = Anisotropy::new(a).unwrap();
        let r = rho_quasi_norm(&x, &a, RHO_TOL).unwrap();
        let sum: f64 = x.iter().zip(a.exponents()).map(|(xi, ai)| xi * xi * r.powf(-2.0 * ai)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        let rl = rho_quasi_norm(&dilate_point(&x, &a, lambda), &a, RHO_TOL).unwrap();
        prop_assert!((rl / (lambda * r) - 1.0).abs() <= 1e-8);
        // |x|_a <= [x]_a <= n^{1/(2 a_min)} |x|_a
        let b = box_quasi_norm(&x, &a);
        let a_min = a.exponents().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(b <= r * (1.0 + 1e-10));
        prop_assert!(r <= b * (x.len() as f64).powf(0.5 / a_min) * (1.0 + 1e-10));
    }

    #[test]
    fn box_measure_scales((a, c) in (1usize..=3).prop_flat_map(|n| (exps(n), prop::collection::vec(-3f64..3.0, n))), t in 0.01f64..4.0, lambda in 1.0f64..6.0) {
        let a = Anisotropy::new(a).unwrap();
        let e = Parallelepiped::new(c, t, &a).unwrap();
        let big = e.scaled(lambda, &a).unwrap();
        prop_assert!((big.measure(&a) / (lambda.powf(a.trace()) * e.measure(&a)) - 1.0).abs() <= 1e-12);
        prop_assert!(big.contains(e.center()));
    }

    #[test]
    fn summed_table_matches_brute_force(seed in 0u64..1000, cx in 0f64..1.0, cy in 0f64..1.0, t in 0.05f64..0.8) {
        let g = Grid::new(Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), vec![32, 16]).unwrap();
        let a = Anisotropy::new(vec![1.0, 2.0]).unwrap();
        let f = random_field(&g, seed, 8).map(|v| v * 1e6 + 1e-3).unwrap();
        let e = Parallelepiped::new(vec![cx, cy], t, &a).unwrap();
        let brute: f64 = (0..g.len()).filter(|&i| e.contains(&g.center_of(i))).map(|i| f.values()[i]).sum::<f64>() * g.cell_volume();
        match SummedTable::of(&f).box_sum(&e) {
            Ok(s) => prop_assert!((s - brute).abs() <= 1e-6, "{} vs {}", s, brute),
            Err(_) => prop_assert_eq!(brute, 0.0),
        }
    }

    #[test]
    fn local_ap_is_at_least_one_and_decreasing_in_p(alpha in -0.9f64..2.0, c in -0.9f64..0.9, t in 0.02f64..0.5) {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 1.0, 1024);
        let e = Parallelepiped::new(vec![c], t, &a).unwrap();
        let fam = BoxFamily::explicit(&a, vec![e]).unwrap();
        let members = fam.members(&g).unwrap();
        let w = Weight::PowerAbs(alpha);
        let mut prev = f64::INFINITY;
        for p in [1.5, 2.0, 3.0, 5.0] {
            if !aniso::power_ap_predicate(alpha, &a, p) {
                continue;
            }
            let v = ap_local(&w, p, &g, &members, &a, Backend::Snap).unwrap()[0];
            prop_assert!(v >= 1.0 - 1e-12);
            prop_assert!(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn maximal_dominates_and_grows_with_ladder(seed in 0u64..500, extra in 1usize..4) {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-2.0, 2.0, 256);
        let f = random_field(&g, seed, 16);
        let short = ScaleLadder::for_grid(&g, &a, 2.0).unwrap();
        let long = ScaleLadder::new(short.t_min, short.q, short.count + extra).unwrap();
        let ms = maximal(&f, &a, &short).unwrap();
        let ml = maximal(&f, &a, &long).unwrap();
        for ((v, s), l) in f.values().iter().zip(ms.values()).zip(ml.values()) {
            prop_assert!(*s >= v.abs() - 1e-12);
            prop_assert!(*l >= *s - 1e-12);
        }
    }

    #[test]
    fn morrey_homogeneous_subadditive_and_monotone(seed in 0u64..500, c in -5f64..5.0, p in 1.0f64..3.0, kappa in 0.0f64..0.9) {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 1.0, 256);
        let f = random_field(&g, seed, 16);
        let h = random_field(&g, seed + 7, 16);
        let w = Weight::PowerAbs(0.5);
        let params = MorreyParams::new(p, kappa).unwrap();
        let fam = BoxFamily::default_for(&g, &a).unwrap();
        let nf = morrey_norm(&f, &w, params, &fam).unwrap().value;
        let cf = f.map(|v| c * v).unwrap();
        prop_assert!((morrey_norm(&cf, &w, params, &fam).unwrap().value - c.abs() * nf).abs() <= 1e-10 * nf.max(1.0));
        let sum = f.zip_with(&h, |x, y| x + y).unwrap();
        let nh = morrey_norm(&h, &w, params, &fam).unwrap().value;
        prop_assert!(morrey_norm(&sum, &w, params, &fam).unwrap().value <= (nf + nh) * (1.0 + 1e-12));
        let coarse = BoxFamily::with_params(&g, &a, 8, 2.0).unwrap();
        prop_assert!(morrey_norm(&f, &w, params, &coarse).unwrap().value <= nf * (1.0 + 1e-12));
    }

    #[test]
    fn chebyshev_weak_below_strong(seed in 0u64..500, p in 1.0f64..4.0, alpha in -0.9f64..1.0) {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 1.0, 256);
        let f = random_field(&g, seed, 32);
        let w = Weight::PowerAbs(alpha);
        let weak = weak_lp_norm(&f, &w, p, &a, None).unwrap();
        let strong = lp_norm(&f, &w, p, &a).unwrap();
        prop_assert!(weak <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn grid_csv_round_trips_bitwise(seed in 0u64..1000, n in 1usize..64, m in 1usize..8) {
        let g = Grid::new(Domain::new(vec![-1.5, 0.25], vec![2.0, 3.0]).unwrap(), vec![n, m]).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| (x[0] * 1e3 + seed as f64).sin() / (1.0 + x[1] * 1e-7)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(BufReader::new(&buf[..])).unwrap();
        prop_assert_eq!(back.grid(), f.grid());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.values()), bits(f.values()));
    }
}
