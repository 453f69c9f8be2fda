use std::f64::consts::PI;

use kglab::concentration::{
    bump, concentration_events, energy_density, linearizability_gap, localization_radius,
    make_concentrating_data, track_concentration, ConcentrationSpec,
};
use kglab::dynamics::{energy, Equation, Forcing, State, Stepper};
use kglab::spectral::{gradient_norm, lp_norm, sobolev_norm, Field, TorusGrid};
use kglab::Error;

/// Composite Simpson rule on [a, b] with `m` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    (0..m)
        .map(|i| {
            let x = a + i as f64 * h;
            h / 6.0 * (f(x) + 4.0 * f(x + h / 2.0) + f(x + h))
        })
        .sum()
}

/// Radial integral over R^3 of `g(|y|)` for a profile supported in `|y| < r`.
fn radial3(g: impl Fn(f64) -> f64, r: f64) -> f64 {
    4.0 * PI * simpson(|s| s * s * g(s), 0.0, r, 20_000)
}

fn bump_slope(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        bump(s) * (-2.0 * s / (1.0 - s * s).powi(2))
    }
}

#[test]
fn bump_examples() {
    assert_eq!(bump(0.0f64), 1.0);
    assert_eq!(bump(1.0f64), 0.0);
    assert_eq!(bump(-1.5f64), 0.0);
    assert!((bump(0.5f64) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
}

#[test]
fn unit_scale_samples_the_plain_bump() {
    let g = TorusGrid::new(1, 64, &[4.0]).unwrap();
    let spec = ConcentrationSpec::new(1.5, 1.0, vec![2.0]);
    let s = make_concentrating_data(&spec, &g).unwrap();
    for i in 0..64 {
        let x = 4.0 * i as f64 / 64.0;
        assert!((s.u.values()[i] - bump((x - 2.0).abs() / 1.5)).abs() < 1e-14);
    }
    assert!(s.v.is_zero());
}

#[test]
fn critical_norms_are_scale_invariant_in_three_dimensions() {
    let r = 1.5;
    let f2 = radial3(|s| bump(s / r).powi(2), r);
    let f6 = radial3(|s| bump(s / r).powi(6), r).powf(1.0 / 6.0);
    let grad2 = radial3(|s| (bump_slope(s / r) / r).powi(2), r).sqrt();
    let g = TorusGrid::new(3, 64, &[1.0, 1.0, 1.0]).unwrap();
    for h in [0.25, 0.125, 0.0625] {
        let spec = ConcentrationSpec::new(r, h, vec![0.5, 0.5, 0.5]);
        let s = make_concentrating_data(&spec, &g).unwrap();
        // grid sums lose accuracy as the support shrinks to a few cells
        let l2 = sobolev_norm(&s.u, 0.0);
        assert!((l2 - h * f2.sqrt()).abs() < 5e-5 * l2, "h {h}: L2 {l2}");
        let l6 = lp_norm(&s.u, 6.0).unwrap();
        assert!((l6 - f6).abs() < 1e-6 * f6, "h {h}: L6 {l6} vs {f6}");
        let grad = gradient_norm(&s.u);
        assert!(
            (grad - grad2).abs() < 2e-3 * grad2,
            "h {h}: grad {grad} vs {grad2}"
        );
    }
}

#[test]
fn velocity_profile_scales_by_three_halves() {
    let g = TorusGrid::new(1, 128, &[1.0]).unwrap();
    let mut spec = ConcentrationSpec::new(1.0, 0.25, vec![0.5]);
    spec.amplitude = 0.0;
    spec.velocity_amplitude = 2.0;
    let s = make_concentrating_data(&spec, &g).unwrap();
    assert!(s.u.is_zero());
    assert!((s.v.max_abs() - 2.0 * 0.25f64.powf(-1.5)).abs() < 1e-12);
}

#[test]
fn invalid_parameters_are_reported() {
    let g = TorusGrid::new(1, 32, &[1.0]).unwrap();
    let fine = ConcentrationSpec::new(1.0, 1.0 / 16.0, vec![0.5]);
    assert!(matches!(
        make_concentrating_data(&fine, &g),
        Err(Error::Resolution(_))
    ));
    let wide = ConcentrationSpec::new(3.0, 0.25, vec![0.5]);
    assert!(matches!(
        make_concentrating_data(&wide, &g),
        Err(Error::InvalidParameter(_))
    ));
    let flat = ConcentrationSpec::new(1.0, 0.25, vec![0.5, 0.5]);
    assert!(matches!(
        make_concentrating_data(&flat, &g),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn shifting_the_center_rolls_the_data() {
    let g = TorusGrid::<f64>::new(1, 128, &[1.0]).unwrap();
    let a = make_concentrating_data(&ConcentrationSpec::new(1.0, 0.1, vec![0.3]), &g).unwrap();
    let b = make_concentrating_data(
        &ConcentrationSpec::new(1.0, 0.1, vec![0.3 + 5.0 / 128.0]),
        &g,
    )
    .unwrap();
    let rolled = a.u.shift_cells(&[5]);
    for (x, y) in rolled.values().iter().zip(b.u.values()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn density_examples() {
    let g = TorusGrid::new(2, 8, &[1.0, 2.0]).unwrap();
    let c: f64 = 0.7;
    let s = State::new(Field::constant(&g, c).unwrap(), Field::zeros(&g), 0.0).unwrap();
    let e = energy_density(&s, true);
    for v in e.values() {
        assert!((v - (c * c / 2.0 + c.powi(6) / 6.0)).abs() < 1e-15);
    }
    let e = energy_density(&s, false);
    assert!((e.values()[0] - c.powi(6) / 6.0).abs() < 1e-15);
}

#[test]
fn density_integrates_to_the_energy() {
    let g = TorusGrid::new(2, 32, &[1.0, 1.0]).unwrap();
    let u = Field::from_fn(&g, |x| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos()).unwrap();
    let v = Field::from_fn(&g, |x| 0.3 + (2.0 * PI * (x[0] + x[1])).cos()).unwrap();
    let s = State::new(u, v, 0.0).unwrap();
    let total = energy_density(&s, true).integral();
    assert!((total - energy(&s)).abs() < 1e-10 * energy(&s));
}

#[test]
fn uniform_density_is_not_localized() {
    let g = TorusGrid::new(2, 16, &[1.0, 3.0]).unwrap();
    let e = Field::constant(&g, 2.5).unwrap();
    let expected = (1.0f64 + 9.0).sqrt() / 2.0;
    assert!((localization_radius(&e) - expected).abs() < 1e-12);
    assert!((localization_radius(&Field::zeros(&g)) - expected).abs() < 1e-12);
    assert!(concentration_events(&[3.0; 10]).is_empty());
}

#[test]
fn localization_radius_is_translation_invariant() {
    let g = TorusGrid::<f64>::new(2, 64, &[1.0, 1.0]).unwrap();
    let spec = ConcentrationSpec::new(1.0, 0.1, vec![0.2, 0.7]);
    let s = make_concentrating_data(&spec, &g).unwrap();
    let e = energy_density(&s, true);
    let r = localization_radius(&e);
    assert!(r < 0.1 && r > 0.0);
    for shift in [[1, 0], [13, 40], [63, 63]] {
        let moved = localization_radius(&e.shift_cells(&shift));
        assert!((moved - r).abs() < 1e-9, "{shift:?}: {moved} vs {r}");
    }
}

#[test]
fn event_detection_examples() {
    assert_eq!(concentration_events(&[1.0, 1.0, 5.0, 1.0, 1.0]), vec![2]);
    assert_eq!(concentration_events(&[9.0, 1.0, 1.0, 1.0, 1.2]), vec![0]);
    assert_eq!(
        concentration_events(&[1.0, 1.5, 1.0, 1.5, 1.0]),
        Vec::<usize>::new()
    );
    assert!(concentration_events::<f64>(&[]).is_empty());
}

#[test]
fn concentrated_data_disperse() {
    let g = TorusGrid::new(3, 32, &[1.0, 1.0, 1.0]).unwrap();
    let h = 0.125;
    let initial =
        make_concentrating_data(&ConcentrationSpec::new(1.5, h, vec![0.5; 3]), &g).unwrap();
    let stepper = Stepper::new(&g, Equation::KLEIN_GORDON, None).unwrap();
    let traj = stepper
        .simulate(&initial, 10.0 * h, 1e-2, 5, &Forcing::None)
        .unwrap();
    let report = track_concentration(&traj);
    let n = report.times.len();
    assert_eq!(n, traj.len());
    assert!(report.l6[0] > report.l6[n - 1]);
    assert!(report.rho90[0] < report.rho90[n - 1]);
    assert!(report.event_times().first().is_some_and(|t| *t < 2.0 * h));
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,L6_norm_u,E,rho90,event\n"));
    assert_eq!(text.lines().count(), n + 1);
}

#[test]
fn zero_data_have_no_gap() {
    let g = TorusGrid::new(1, 32, &[1.0]).unwrap();
    let gap = linearizability_gap(&State::zero(&g, 0.0), 1.0, 1e-2, 10).unwrap();
    assert_eq!(gap, 0.0);
}

#[test]
fn gap_grows_like_the_fifth_power_of_amplitude() {
    let g = TorusGrid::new(1, 64, &[1.0]).unwrap();
    let gap = |amp: f64| {
        let mut spec = ConcentrationSpec::new(1.0, 0.25, vec![0.5]);
        spec.amplitude = amp;
        let s = make_concentrating_data(&spec, &g).unwrap();
        linearizability_gap(&s, 1.0, 1e-3, 50).unwrap()
    };
    let ratio = gap(0.02) / gap(0.01);
    assert!((ratio - 32.0).abs() < 0.5, "ratio {ratio}");
}
