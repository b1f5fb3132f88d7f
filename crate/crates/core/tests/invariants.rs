use poisson_clt::experiments::{fit_slope, ks_noise_floor};
use poisson_clt::geometry::{Space, Window};
use poisson_clt::localization::{
    assemble_theorem_bound, estimate_psi, mixed_moment_gap_bound, Adversary, BoundForm, BoundIngredients,
};
use poisson_clt::malliavin::{diff1, diff2, isolated_count_functional, normal_cdf, pair_count_functional};
use poisson_clt::oracle::normal_cdf_reference;
use poisson_clt::process::{fixed_atom_id, sample_poisson};
use poisson_clt::scores::IsolatedScore;
use poisson_clt::{RandomStream, SpaceTimeDomain};
use proptest::prelude::*;
use std::sync::Arc;

fn torus(side: f64, intensity: f64) -> Arc<SpaceTimeDomain> {
    Arc::new(SpaceTimeDomain::space_only(Space::torus(2, side).unwrap(), Window::Full, intensity).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diff2_is_symmetric_and_matches_nested_diff1(seed in any::<u64>(), delta in 0.1f64..1.5, intensity in 0.2f64..3.0) {
        let domain = torus(5.0, intensity);
        let stream = RandomStream::new(seed);
        let chi = sample_poisson(&domain, &Window::Full, stream).unwrap();
        let mut rng = stream.stream(1).rng();
        let p = domain.sample_point(&Window::Full, fixed_atom_id(0), &mut rng).unwrap();
        let q = domain.sample_point(&Window::Full, fixed_atom_id(1), &mut rng).unwrap();
        let f = pair_count_functional(delta, Window::Full).unwrap();
        let pq = diff2(&f, &chi, &p, &q).unwrap();
        prop_assert_eq!(pq.to_bits(), diff2(&f, &chi, &q, &p).unwrap().to_bits());
        let nested = diff1(&f, &chi.augment(&[q]).unwrap(), &p) - diff1(&f, &chi, &p);
        prop_assert_eq!(pq.to_bits(), nested.to_bits());
        // For the pair count, D² is the indicator of the new pair.
        let close = domain.space.dist(&p.loc, &q.loc) < delta;
        prop_assert_eq!(pq, if close { 1.0 } else { 0.0 });
    }

    #[test]
    fn isolated_add_one_cost_is_bounded_by_neighbours(seed in any::<u64>()) {
        let domain = torus(8.0, 1.0);
        let stream = RandomStream::new(seed);
        let chi = sample_poisson(&domain, &Window::Full, stream).unwrap();
        let f = isolated_count_functional(0.4, Window::Full);
        let mut rng = stream.stream(2).rng();
        let p = domain.sample_point(&Window::Full, fixed_atom_id(0), &mut rng).unwrap();
        let near = chi.points().iter().filter(|x| domain.space.dist(&x.loc, &p.loc) < 0.4).count();
        let d = diff1(&f, &chi, &p);
        // Adding p is +1 for p itself if alone, minus every neighbour that was isolated.
        prop_assert!(d <= 1.0 && d >= -(near as f64));
        if near == 0 {
            prop_assert_eq!(d, 1.0);
        }
    }

    #[test]
    fn psi_profile_is_monotone_under_common_numbers(seed in any::<u64>()) {
        let domain = torus(6.0, 1.0);
        let radii = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let prof = estimate_psi(&IsolatedScore::new(0.5), &domain, &radii, 20, &Adversary::panel(), RandomStream::new(seed))
            .unwrap();
        for w in prof.points.windows(2) {
            prop_assert!(w[1].successes <= w[0].successes, "{:?}", prof.points);
        }
        prop_assert!(prof.points.iter().filter(|p| p.arg >= 0.5).all(|p| p.raw == 0.0));
        prop_assert!(prof.points.iter().all(|p| p.value <= 2.0));
    }

    #[test]
    fn gap_bound_is_monotone(q in 1u32..6, scale in 0.0f64..4.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for bounded in [true, false] {
            let x = mixed_moment_gap_bound(q, scale, lo, bounded).unwrap();
            let y = mixed_moment_gap_bound(q, scale, hi, bounded).unwrap();
            prop_assert!(x <= y && x >= 0.0);
        }
    }

    #[test]
    fn kolmogorov_bound_scales_inversely_with_variance(i in 1.0f64..5.0, g in 1.0f64..1e4, m5 in 1.0f64..50.0, var in 0.1f64..1e3) {
        let ing = BoundIngredients::uniform(1.0, i, g);
        let a = assemble_theorem_bound(&ing, m5, var, BoundForm::SpaceTime).unwrap();
        let b = assemble_theorem_bound(&ing, m5, 4.0 * var, BoundForm::SpaceTime).unwrap();
        prop_assert!((a.d_k_bound - 4.0 * b.d_k_bound).abs() <= 1e-12 * a.d_k_bound);
        prop_assert!(a.d_w_bound >= a.d_k_bound);
    }

    #[test]
    fn normal_cdf_agrees_with_reference(x in -8.0f64..8.0) {
        let (a, b) = (normal_cdf(x), normal_cdf_reference(x));
        prop_assert!((a - b).abs() <= 1e-14, "{x}: {a} vs {b}");
    }

    #[test]
    fn torus_distance_is_a_bounded_metric(seed in any::<u64>(), side in 1.0f64..20.0) {
        let space = Space::torus(2, side).unwrap();
        let mut rng = RandomStream::new(seed).rng();
        let p = space.sample_uniform(&Window::Full, 3, &mut rng).unwrap();
        let (ab, bc, ac) = (space.dist(&p[0], &p[1]), space.dist(&p[1], &p[2]), space.dist(&p[0], &p[2]));
        prop_assert_eq!(ab, space.dist(&p[1], &p[0]));
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(ab <= side * 2f64.sqrt() / 2.0 + 1e-12);
    }

    #[test]
    fn hyperbolic_distance_satisfies_triangle_inequality(seed in any::<u64>(), r in 0.5f64..6.0) {
        let space = Space::hyperbolic(2, r).unwrap();
        let mut rng = RandomStream::new(seed).rng();
        let p = space.sample_uniform(&Window::Full, 3, &mut rng).unwrap();
        let (ab, bc, ac) = (space.dist(&p[0], &p[1]), space.dist(&p[1], &p[2]), space.dist(&p[0], &p[2]));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(space.radius_of(&p[0]) <= r + 1e-9);
    }

    #[test]
    fn slope_fit_recovers_power_laws(exponent in -1.5f64..1.5, scale in 0.01f64..10.0) {
        let lambdas: Vec<f64> = (6..=12).map(|k| 2f64.powi(k)).collect();
        let ys: Vec<f64> = lambdas.iter().map(|l| scale * l.powf(exponent)).collect();
        let boot: Vec<Vec<f64>> = ys.iter().map(|y| vec![*y; 20]).collect();
        let fit = fit_slope(&lambdas, &ys, &boot).unwrap();
        prop_assert!((fit.slope - exponent).abs() < 1e-9);
        prop_assert!((fit.lo - exponent).abs() < 1e-9 && (fit.hi - exponent).abs() < 1e-9);
    }
}

#[test]
fn noise_floor_matches_expected_kolmogorov_statistic() {
    // E D_n ≈ √(π/2)·ln 2/√n for continuous data.
    let n = 2000;
    let floor = ks_noise_floor(n);
    assert!((floor * (n as f64).sqrt() - 0.868_731).abs() < 1e-5);
    let mut sum = 0.0;
    let reps = 400;
    for k in 0..reps {
        let mut rng = RandomStream::new(11).substream(k).rng();
        let xs: Vec<f64> = (0..n).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        sum += poisson_clt::malliavin::kolmogorov_to_normal(&xs);
    }
    let avg = sum / reps as f64;
    assert!((avg - floor).abs() < 0.05 * floor, "{avg} vs {floor}");
}
