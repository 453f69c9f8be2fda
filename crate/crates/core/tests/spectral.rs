use std::f64::consts::PI;

use kglab::spectral::snapshot::{read_field, read_field_on, write_field};
use kglab::spectral::{
    apply_spectral_multiplier, besov_norm, lp_norm, sobolev_norm, Field, Spectrum, TorusGrid,
};
use kglab::Error;
use proptest::prelude::*;

fn sin_field(n: usize) -> Field<f64> {
    let g = TorusGrid::new(1, n, &[1.0]).unwrap();
    Field::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap()
}

/// Composite Simpson rule on [0, 1] with `m` panels.
fn simpson(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    (0..m)
        .map(|i| {
            let a = i as f64 * h;
            h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h))
        })
        .sum()
}

#[test]
fn sine_sobolev_norms_match_quadrature() {
    let f = sin_field(32);
    let l2 = simpson(|x| (2.0 * PI * x).sin().powi(2), 4000);
    let grad = simpson(|x| (2.0 * PI * (2.0 * PI * x).cos()).powi(2), 4000);
    assert!((l2 - 0.5).abs() < 1e-12);
    assert!((sobolev_norm(&f, 0.0).powi(2) - l2).abs() < 1e-12);
    let h1 = sobolev_norm(&f, 1.0).powi(2);
    assert!((h1 - (l2 + grad)).abs() < 1e-9);
    assert!((h1 - (1.0 + 4.0 * PI * PI) / 2.0).abs() < 1e-12);
}

#[test]
fn sine_l6_norm() {
    let f = sin_field(64);
    let oracle = simpson(|x| (2.0 * PI * x).sin().powi(6), 4000);
    assert!((oracle - 5.0 / 16.0).abs() < 1e-12);
    let p6 = lp_norm(&f, 6.0).unwrap();
    assert!((p6 - (5.0f64 / 16.0).powf(1.0 / 6.0)).abs() < 1e-13);
}

#[test]
fn nonfinite_field_is_rejected() {
    let g = TorusGrid::<f64>::new(1, 8, &[1.0]).unwrap();
    let mut v = vec![0.0; 8];
    v[3] = f64::NAN;
    assert!(matches!(
        Field::new(g.clone(), v),
        Err(Error::InvalidField(_))
    ));
    assert!(matches!(
        Field::new(g, vec![0.0; 7]),
        Err(Error::InvalidField(_))
    ));
}

#[test]
fn besov_two_modes_in_distinct_blocks() {
    // |kappa| = 2 pi in [4, 8), 2 pi * 5 in [16, 32); plus a constant
    let g = TorusGrid::new(1, 64, &[1.0]).unwrap();
    let f = Field::from_fn(&g, |x| {
        0.3 + (2.0 * PI * x[0]).cos() + 2.0 * (10.0 * PI * x[0]).sin()
    })
    .unwrap();
    let s = 0.7;
    let block =
        |k: f64, amp: f64| ((1.0 + (2.0 * PI * k).powi(2)).powf(s) * amp * amp / 2.0).sqrt();
    let expected = 0.3 + block(1.0, 1.0).max(block(5.0, 2.0));
    assert!((besov_norm(&f, s) - expected).abs() < 1e-12);
}

#[test]
fn multiplier_examples() {
    let f = sin_field(16);
    let id = apply_spectral_multiplier(&f, |_| 1.0).unwrap();
    let zero = apply_spectral_multiplier(&f, |_| 0.0).unwrap();
    let lap = apply_spectral_multiplier(&f, |k| k[0] * k[0]).unwrap();
    for i in 0..16 {
        assert!((id.values()[i] - f.values()[i]).abs() < 1e-15);
        assert_eq!(zero.values()[i], 0.0);
        assert!((lap.values()[i] - 4.0 * PI * PI * f.values()[i]).abs() < 1e-12);
    }
    assert!(matches!(
        apply_spectral_multiplier(&f, |k| k[0]),
        Err(Error::SymmetryViolation { .. })
    ));
}

#[test]
fn snapshot_file_round_trip() {
    let g = TorusGrid::new(3, 8, &[1.0, 2.0, 3.0]).unwrap();
    let f = Field::from_fn(&g, |x| x[0] * x[1] - x[2]).unwrap();
    let path = std::env::temp_dir().join(format!("kglab-snapshot-{}.kgf", std::process::id()));
    write_field(&f, std::fs::File::create(&path).unwrap()).unwrap();
    let back: Field<f64> = read_field(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.values(), f.values());
    let other = TorusGrid::new(3, 8, &[1.0, 2.0, 3.5]).unwrap();
    assert!(matches!(
        read_field_on(std::fs::File::open(&path).unwrap(), &other),
        Err(Error::GridMismatch)
    ));
    std::fs::remove_file(path).ok();
}

#[test]
fn single_precision_grid() {
    let g = TorusGrid::<f32>::new(1, 32, &[1.0]).unwrap();
    let f = Field::from_fn(&g, |x| (2.0 * std::f32::consts::PI * x[0]).sin()).unwrap();
    assert!((sobolev_norm(&f, 0.0) - 0.5f32.sqrt()).abs() < 1e-6);
}

fn arb_field(dim: usize, n: usize) -> impl Strategy<Value = Field<f64>> {
    let len = n.pow(dim as u32);
    prop::collection::vec(-10.0f64..10.0, len).prop_map(move |v| {
        let lengths: Vec<f64> = (0..dim).map(|a| 1.0 + a as f64 * 0.5).collect();
        let g = TorusGrid::new(dim, n, &lengths).unwrap();
        Field::new(g, v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(f in prop_oneof![arb_field(1, 16), arb_field(2, 8), arb_field(3, 8)]) {
        let a = lp_norm(&f, 2.0).unwrap();
        let b = sobolev_norm(&f, 0.0);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
    }

    #[test]
    fn round_trip(f in prop_oneof![arb_field(1, 16), arb_field(2, 8), arb_field(3, 8)]) {
        let back = Spectrum::forward(&f).to_field();
        let scale = f.max_abs().max(1e-300);
        for (x, y) in back.values().iter().zip(f.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sobolev_monotone_in_s(f in arb_field(1, 16), s1 in -2.0f64..2.0, ds in 0.0f64..2.0) {
        // remove the mean so the field lives off k = 0
        let mean = f.integral() / f.grid().volume();
        let f = f.map(|v| v - mean);
        prop_assert!(sobolev_norm(&f, s1) <= sobolev_norm(&f, s1 + ds) * (1.0 + 1e-12));
    }

    #[test]
    fn besov_bounded_by_sobolev(f in prop_oneof![arb_field(1, 16), arb_field(2, 8)], s in -1.0f64..2.0) {
        prop_assert!(besov_norm(&f, s) <= (sobolev_norm(&f, s) + sobolev_norm(&f, 0.0)) * (1.0 + 1e-12));
    }
}
