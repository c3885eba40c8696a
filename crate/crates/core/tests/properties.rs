use idemkit::distance::{min_distance_formula, random_projection};
use idemkit::grid::{block_support, make_qr, Block};
use idemkit::idempotent::{random_idempotent, read_idempotent};
use idemkit::io::to_json_string;
use idemkit::linalg::{
    self, abs, gaussian, hermitian_part, identity, moore_penrose, negative_part, positive_part,
    spectral_norm, C64,
};
use idemkit::nrange::ellipse::ellipse_2x2;
use idemkit::nrange::support::{support_function, SupportEngine};
use idemkit::Idempotent;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn idem() -> impl Strategy<Value = Idempotent> {
    (2usize..12, any::<u64>(), 0.1f64..5.0).prop_flat_map(|(n, seed, a)| {
        (1..n).prop_map(move |k| random_idempotent(n, k, a, seed).unwrap())
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn modulus_squares_to_gram(n in 1usize..8, seed: u64) {
        let t = gaussian(&mut rng(seed), n, n);
        let m = abs(&t, 1e-14).unwrap();
        let gram = t.adjoint() * &t;
        prop_assert!(spectral_norm(&(&m * &m - &gram)) <= 1e-10 * (1.0 + spectral_norm(&gram)));
    }

    #[test]
    fn hermitian_splits_into_parts(n in 1usize..8, seed: u64) {
        let h = hermitian_part(&gaussian(&mut rng(seed), n, n));
        let (p, q) = (positive_part(&h).unwrap(), negative_part(&h).unwrap());
        prop_assert!(spectral_norm(&(&p - &q - &h)) <= 1e-12 * (1.0 + spectral_norm(&h)));
        prop_assert!(spectral_norm(&(&p * &q)) <= 1e-12 * (1.0 + spectral_norm(&h)).powi(2));
    }

    #[test]
    fn pseudoinverse_is_an_involution(r in 1usize..7, c_ in 1usize..7, seed: u64) {
        let mut g = rng(seed);
        // rank-deficient products exercise the cutoff
        let k = r.min(c_).max(2) - 1;
        let m = gaussian(&mut g, r, k) * gaussian(&mut g, k, c_);
        let p = moore_penrose(&m, 1e-12);
        let scale = 1.0 + spectral_norm(&m) * spectral_norm(&p);
        prop_assert!(spectral_norm(&(&m * &p * &m - &m)) <= 1e-9 * scale * spectral_norm(&m));
        prop_assert!(spectral_norm(&(moore_penrose(&p, 1e-12) - &m)) <= 1e-8 * scale * spectral_norm(&m));
    }

    #[test]
    fn matched_projection_laws(q in idem()) {
        let m = q.matched_projection().unwrap();
        let n = q.n();
        prop_assert!(spectral_norm(&(&m * &m - &m)) <= 1e-9);
        prop_assert!(spectral_norm(&(&m - m.adjoint())) <= 1e-9);
        prop_assert!(spectral_norm(&(q.adjoint().matched_projection().unwrap() - &m)) <= 1e-9);
        let mc = q.complement().matched_projection().unwrap();
        prop_assert!(spectral_norm(&(mc - (identity(n) - &m))) <= 1e-9);
        prop_assert!(spectral_norm(&(q.matched_projection_blocked().unwrap() - &m)) <= 1e-9);
    }

    #[test]
    fn projections_sit_between_extremes(q in idem(), seed: u64) {
        let min = min_distance_formula(q.norm());
        let mut g = rng(seed);
        for _ in 0..20 {
            let p = random_projection(&mut g, q.n());
            let d = spectral_norm(&(p - q.matrix()));
            prop_assert!(d >= min - 1e-9 && d <= 1.0 + min + 1e-9);
        }
    }

    #[test]
    fn json_round_trip(q in idem()) {
        let text = to_json_string(&q).unwrap();
        let back = read_idempotent(&text).unwrap();
        prop_assert!(spectral_norm(&(back.matrix() - q.matrix())) <= 1e-13 * q.norm());
    }

    #[test]
    fn half_plane_containment(n in 1usize..7, seed: u64, k in 0usize..32) {
        let mut g = rng(seed);
        let t = gaussian(&mut g, n, n);
        let engine = SupportEngine::new(&t);
        let x = linalg::random_unit_vector(&mut g, n);
        let z = linalg::quadratic_form(&t, &x);
        let alpha = std::f64::consts::TAU * k as f64 / 32.0;
        prop_assert!((z * C64::from_polar(1.0, -alpha)).re <= engine.support(alpha) + 1e-12);
    }

    #[test]
    fn hull_of_union_is_pointwise_max(seed: u64, parts in 1usize..6, k in 0usize..64) {
        let mut g = rng(seed);
        let blocks: Vec<_> = (0..parts).map(|_| gaussian(&mut g, 2, 2)).collect();
        let refs: Vec<_> = blocks.iter().collect();
        let alpha = std::f64::consts::TAU * k as f64 / 64.0;
        let joint = support_function(&linalg::direct_sum(&refs), alpha).0;
        let pointwise = blocks
            .iter()
            .map(|b| ellipse_2x2(&Block::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)])).params().support(alpha))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((joint - pointwise).abs() <= 1e-10);
    }

    #[test]
    fn ellipse_boundary_attains_support(seed: u64, k in 0usize..64) {
        let b = gaussian(&mut rng(seed), 2, 2);
        let e = ellipse_2x2(&Block::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)])).params();
        let alpha = std::f64::consts::TAU * k as f64 / 64.0;
        let z = e.boundary_point(alpha);
        prop_assert!(((z * C64::from_polar(1.0, -alpha)).re - e.support(alpha)).abs() <= 1e-12);
    }

    #[test]
    fn tq_blocks_are_nested(r in 1.1f64..8.0, k in 0usize..64) {
        let t = make_qr(r, 64).unwrap().tq().unwrap();
        let alpha = std::f64::consts::TAU * k as f64 / 64.0;
        for w in t.blocks.windows(2) {
            prop_assert!(block_support(&w[0], alpha) <= block_support(&w[1], alpha) + 1e-12);
        }
    }
}
