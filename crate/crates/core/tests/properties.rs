use std::f64::consts::PI;

use proptest::prelude::*;

use smallscale::cli_io::{parse_config, to_toml, Snapshot};
use smallscale::diagnostics::{estimate_blowup_time, fit_double_exponential, fit_exponential, TimeSeries};
use smallscale::spectral1d::{hilbert_transform, spectral_derivative, PeriodicGrid1D, SpectralField1D};

fn field(grid: &PeriodicGrid1D, modes: &[(f64, f64)]) -> SpectralField1D {
    let k0 = 2.0 * PI / grid.length();
    SpectralField1D::from_fn(grid, |x| {
        modes
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let t = (j + 1) as f64 * k0 * x;
                a * t.cos() + b * t.sin()
            })
            .sum()
    })
    .unwrap()
}

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..40)
}

fn series(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> TimeSeries {
    let mut s = TimeSeries::new(vec!["v".into()]);
    for i in 0..n {
        let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
        s.push(t, vec![f(t)]).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hilbert_squares_to_minus_identity(m in modes(), length in 1.0..20.0f64) {
        let g = PeriodicGrid1D::new(128, length).unwrap();
        let f = field(&g, &m);
        let hhf = hilbert_transform(&hilbert_transform(&f).unwrap()).unwrap();
        let scale = f.max_abs().max(1e-300);
        for (a, b) in hhf.values().iter().zip(f.values()) {
            prop_assert!((a + b).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn hilbert_is_skew_and_commutes_with_derivative(m1 in modes(), m2 in modes()) {
        let g = PeriodicGrid1D::new(128, 2.0 * PI).unwrap();
        let (f, h) = (field(&g, &m1), field(&g, &m2));
        let lhs = hilbert_transform(&f).unwrap().dot(&h);
        let rhs = f.dot(&hilbert_transform(&h).unwrap());
        prop_assert!((lhs + rhs).abs() <= 1e-12 * (f.l2_norm() * h.l2_norm()).max(1.0));
        let a = spectral_derivative(&hilbert_transform(&f).unwrap()).unwrap();
        let b = hilbert_transform(&spectral_derivative(&f).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + a.max_abs()));
        }
    }

    #[test]
    fn blowup_time_is_shift_equivariant(t_star in 1.5..5.0f64, p in 1usize..=2, shift in -10.0..10.0f64) {
        let end = 0.9 * t_star;
        let base = series(|t| (t_star - t).powi(-(p as i32)), 0.0, end, 60);
        let moved = series(|t| (t_star + shift - t).powi(-(p as i32)), shift, end + shift, 60);
        let a = estimate_blowup_time(&base, "v", None, None).unwrap();
        let b = estimate_blowup_time(&moved, "v", None, None).unwrap();
        prop_assert_eq!(a.exponent, b.exponent);
        let (ta, tb) = (a.blowup_time.unwrap(), b.blowup_time.unwrap());
        prop_assert!((tb - ta - shift).abs() <= 1e-9 * (1.0 + ta.abs() + shift.abs()));
    }

    #[test]
    fn fits_recover_parameters_under_small_noise(rate in 0.2..2.0f64, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut noisy = TimeSeries::new(vec!["v".into()]);
        let mut doubly = TimeSeries::new(vec!["v".into()]);
        for i in 0..200 {
            let t = 3.0 * i as f64 / 199.0;
            noisy.push(t, vec![(rate * t).exp() * (1.0 + rng.gen_range(-1e-3..1e-3))]).unwrap();
            doubly.push(t, vec![(2.0 * (rate * t / 1.5).exp()).exp()]).unwrap();
        }
        let f = fit_exponential(&noisy, "v", None).unwrap();
        prop_assert!((f.rate - rate).abs() <= 0.01 * rate);
        let d = fit_double_exponential(&doubly, "v", None).unwrap();
        prop_assert!((d.rate - rate / 1.5).abs() <= 1e-6);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(
        bits in prop::collection::vec(any::<u64>(), 0..64),
        t in any::<f64>(),
        columns in 1usize..4,
    ) {
        let rows = bits.len() / columns;
        let values: Vec<f64> = bits.iter().map(|b| f64::from_bits(*b)).collect();
        let cols: Vec<(String, Vec<f64>)> =
            (0..columns).map(|c| (format!("c{c}"), values[c * rows..(c + 1) * rows].to_vec())).collect();
        let refs: Vec<(&str, &[f64])> = cols.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        let s = Snapshot::from_columns("hl", "periodic n=4", t, &refs).unwrap();
        let back = Snapshot::from_bytes(&s.to_bytes()).unwrap();
        prop_assert_eq!(back.t.to_bits(), t.to_bits());
        let raw = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(raw(&back.data), raw(&s.data));
        prop_assert_eq!(back.columns, s.columns);
    }

    #[test]
    fn config_round_trip_reparses_equal(
        model in prop::sample::select(vec!["clm", "degregorio", "hl", "cky", "euler2d", "boussinesq", "sqg_patch"]),
        t_end in 0.01..20.0f64,
        seed in any::<u32>(),
        snapshot_every in 0u64..100,
        alpha in 0.0..0.45f64,
    ) {
        let mut text = format!("model = \"{model}\"\nt_end = {t_end:?}\nseed = {seed}\n[output]\nsnapshot_every = {snapshot_every}\n");
        if model == "sqg_patch" {
            text.push_str(&format!("[params]\nalpha = {alpha:?}\n"));
        }
        let spec = match parse_config(&text) {
            Ok(s) => s,
            // an α without a measurable δ_α is rejected
            Err(e) => {
                prop_assert!(model == "sqg_patch", "{e}");
                return Ok(());
            }
        };
        let again = parse_config(&to_toml(&spec).unwrap()).unwrap();
        prop_assert_eq!(again, spec);
    }
}
