use coopmac::coding::*;
use coopmac::*;

fn adder_spec(n: usize, r: f64, eps: f64, seed: u64) -> CodebookSpec {
    let ch = DiscreteChannelSpec::binary_adder();
    let law = InputLaw::uniform(&ch);
    CodebookSpec::new(ch, law, n, vec![0.0, r, r], eps, seed).unwrap()
}

#[test]
fn satellite_symbols_follow_the_conditional_law() {
    let ch = DiscreteChannelSpec::binary_adder();
    let pu = vec![0.3, 0.7];
    let c1 = vec![vec![0.8, 0.2], vec![0.1, 0.9]];
    let law = InputLaw::new(pu.clone(), vec![c1.clone(), vec![vec![0.5, 0.5]; 2]]).unwrap();
    let template = CodebookSpec::new(ch, law, 4, vec![0.0, 0.0, 0.0], 0.1, 0).unwrap();
    // counts[u][x] over every regeneration
    let mut counts = [[0usize; 2]; 2];
    let mut clouds = [0usize; 2];
    let regenerations = 10_000;
    for seed in 0..regenerations {
        let spec = CodebookSpec { seed, ..template.clone() };
        let book = build_codebook(&spec).unwrap();
        let (u, x) = (book.cloud(0), book.satellite(0, 0, 0));
        for t in 0..4 {
            clouds[u[t] as usize] += 1;
            counts[u[t] as usize][x[t] as usize] += 1;
        }
    }
    let total = (4 * regenerations) as f64;
    for (u, c) in clouds.iter().enumerate() {
        let sigma = (total * pu[u] * (1.0 - pu[u])).sqrt();
        assert!((*c as f64 - total * pu[u]).abs() < 3.0 * sigma, "cloud {u}: {c}");
    }
    for u in 0..2 {
        let m = (counts[u][0] + counts[u][1]) as f64;
        for x in 0..2 {
            let p = c1[u][x];
            let sigma = (m * p * (1.0 - p)).sqrt();
            assert!((counts[u][x] as f64 - m * p).abs() < 3.0 * sigma, "u {u} x {x}: {} of {m}", counts[u][x]);
        }
    }
}

#[test]
fn noiseless_bit_pipe_decodes_at_low_rate() {
    let ch = DiscreteChannelSpec::identity(2).unwrap();
    let law = InputLaw::uniform(&ch);
    let template = CodebookSpec::new(ch, law, 16, vec![0.0, 1.0 / 32.0], 0.1, 3).unwrap();
    let opts = SimulationOptions { trials: 1000, trials_per_codebook: 100 };
    let curve = error_curve(&template, &[16, 64, 256], &opts).unwrap();
    // errors come only from atypical bit counts or duplicate codewords, which fade with n
    for w in curve.windows(2) {
        assert!(w[1].error_rate < w[0].error_rate, "{w:?}");
    }
    assert!(curve[2].error_rate < 0.01, "{:?}", curve[2]);
}

#[test]
fn origin_never_errs() {
    let curve = error_curve(&adder_spec(8, 0.0, 0.05, 1), &[8, 12], &SimulationOptions { trials: 500, trials_per_codebook: 50 }).unwrap();
    for p in &curve {
        assert_eq!(p.errors, 0);
        assert_eq!(p.ci_low, 0.0);
    }
}

#[test]
fn same_seed_same_counts() {
    let opts = SimulationOptions { trials: 400, trials_per_codebook: 100 };
    let a = error_curve(&adder_spec(8, 0.4, 0.2, 5), &[8, 12], &opts).unwrap();
    let b = error_curve(&adder_spec(8, 0.4, 0.2, 5), &[8, 12], &opts).unwrap();
    assert_eq!(a, b);
    let c = error_curve(&adder_spec(8, 0.4, 0.2, 6), &[8, 12], &opts).unwrap();
    assert_ne!(a.iter().map(|p| p.errors).collect::<Vec<_>>(), c.iter().map(|p| p.errors).collect::<Vec<_>>());

    let book = build_codebook(&adder_spec(12, 0.4, 0.2, 5)).unwrap();
    let x = transmit_and_decode(&book, &[0, 3, 7], 11).unwrap();
    let y = transmit_and_decode(&book, &[0, 3, 7], 11).unwrap();
    assert_eq!(x, y);
}

#[test]
fn interior_and_exterior_points_separate() {
    let opts = SimulationOptions::default();
    let inner = error_curve(&adder_spec(8, 0.4, 0.2, 0), &[8, 12, 16], &opts).unwrap();
    let outer = error_curve(&adder_spec(16, 0.9, 0.2, 0), &[16], &opts).unwrap();
    assert!(outer[0].error_rate > 0.9, "{:?}", outer[0]);
    assert!(outer[0].error_rate - inner[2].error_rate >= 0.5);
    for w in inner.windows(2) {
        // nonincreasing up to interval overlap
        assert!(w[1].error_rate <= w[0].error_rate || w[1].ci_low <= w[0].ci_high, "{w:?}");
    }
}

#[test]
fn true_tuple_acceptance_grows_with_blocklength() {
    let opts = SimulationOptions { trials: 2000, trials_per_codebook: 100 };
    let curve = error_curve(&adder_spec(8, 0.25, 0.2, 4), &[8, 12, 16, 20], &opts).unwrap();
    let rates: Vec<f64> = curve.iter().map(|p| p.typical_accepts as f64 / p.trials as f64).collect();
    for w in rates.windows(2) {
        assert!(w[1] >= w[0], "{rates:?}");
    }
    assert!(rates[3] > 0.5, "{rates:?}");
}

#[test]
fn wilson_interval_brackets_the_rate() {
    for (k, n) in [(0, 100), (3, 100), (50, 100), (100, 100), (7, 10_000)] {
        let (lo, hi) = wilson_interval(k, n);
        let r = k as f64 / n as f64;
        assert!(lo <= r && r <= hi && (0.0..=1.0).contains(&lo) && hi <= 1.0);
    }
    // closed-form check at k = n / 2: center 0.5, half width z sqrt(n/4 + z^2/4) / (n + z^2)
    let z: f64 = 1.959963984540054;
    let (lo, hi) = wilson_interval(50, 100);
    let half = z * (25.0 + z * z / 4.0).sqrt() / (100.0 + z * z);
    assert!((lo - (0.5 - half)).abs() < 1e-12 && (hi - (0.5 + half)).abs() < 1e-12);
}

#[test]
fn oversized_codebooks_are_refused() {
    let spec = adder_spec(40, 0.9, 0.05, 1);
    assert!(matches!(build_codebook(&spec), Err(Error::Budget { .. })));
    assert!(error_curve(&adder_spec(8, 0.4, 0.05, 1), &[8], &SimulationOptions { trials: 10, trials_per_codebook: 5 }).is_err());
}
