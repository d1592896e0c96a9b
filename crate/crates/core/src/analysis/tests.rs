use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::grid::SpatialGrid;
use crate::params::Config;
use crate::truestate::WaveState;

fn setup(n: usize, periods: usize) -> (Arc<SpatialGrid>, BandBasis, f64, f64, f64) {
    let s = Config::default().scaled().unwrap();
    let g = SpatialGrid::new(n, periods, s.ktilde()).unwrap();
    let b = compute_band_basis(s.vmax(), g.clone()).unwrap();
    (g, b, s.gamma(), s.ktilde(), s.vmax())
}

#[test]
fn lowest_bands_sit_near_harmonic_levels() {
    let (_, b, ..) = setup(512, 1);
    let e = b.energies();
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    assert!(b.n_states() >= 8);
    assert!((b.band_energy(0) / PI - 1.0).abs() < 0.01, "E0/pi = {}", b.band_energy(0) / PI);
    // the quartic correction grows with n: E1 lands ~1.01% under 3 pi
    assert!((b.band_energy(1) / (3.0 * PI) - 1.0).abs() < 0.0105, "E1/3pi = {}", b.band_energy(1) / (3.0 * PI));
    assert!(b.band_energy(1) < 3.0 * PI && b.band_energy(0) < PI);
}

#[test]
fn level_spacing_tends_to_two_pi_in_deep_wells() {
    let s = Config::default().scaled().unwrap();
    // same V k^2 = pi, so the harmonic frequency is unchanged while the well deepens
    let mut last = f64::INFINITY;
    for scale in [1.0f64, 4.0, 16.0] {
        let k = s.ktilde() / scale.sqrt();
        let g = SpatialGrid::new(512, 1, k).unwrap();
        let b = compute_band_basis(PI / (k * k), g).unwrap();
        let gap = (b.band_energy(1) - b.band_energy(0)) / (2.0 * PI);
        assert!((gap - 1.0).abs() < last, "gap ratio {gap}");
        last = (gap - 1.0).abs();
    }
    assert!(last < 2e-3);
}

#[test]
fn eigenstate_parity_alternates() {
    let (g, b, ..) = setup(512, 1);
    for n in 0..6 {
        let w = b.eigenstate(n).unwrap();
        let parity = w.expectation(crate::truestate::Observable::Parity);
        let expect = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((parity - expect).abs() < 1e-8, "n={n}: {parity}");
    }
    assert_eq!(g.periods(), 1);
}

#[test]
fn basis_is_orthonormal() {
    let (_, b, ..) = setup(256, 1);
    for i in 0..b.n_states() {
        for j in 0..b.n_states() {
            let dot: f64 = b.state(i).iter().zip(b.state(j)).map(|(x, y)| x * y).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expect).abs() < 1e-10, "<{i}|{j}> = {dot}");
        }
    }
}

#[test]
fn populations_of_basis_states() {
    let (g, b, ..) = setup(512, 1);
    let p = b.populations(&b.eigenstate(0).unwrap());
    assert!((p.bands[0] - 1.0).abs() < 1e-12 && p.remainder.abs() < 1e-12);
    let psi: Vec<Complex64> =
        b.state(0).iter().zip(b.state(1)).map(|(a, c)| Complex64::new((a + c) / 2f64.sqrt(), 0.0)).collect();
    let w = WaveState::from_amplitudes(g, psi, b.vmax()).unwrap();
    let p = b.populations(&w);
    assert!((p.bands[0] - 0.5).abs() < 1e-12 && (p.bands[1] - 0.5).abs() < 1e-12);
    assert!(p.bands[2].abs() < 1e-12 && p.bands[3].abs() < 1e-12);
}

#[test]
fn populations_never_exceed_one() {
    let (g, b, _, k, vmax) = setup(512, 1);
    for x0 in [0.0, 1.0, 3.0, 0.58 * PI / (2.0 * k), 9.0] {
        let w = WaveState::gaussian(g.clone(), x0, 0.7, 0.5, vmax).unwrap();
        let p = b.populations(&w);
        assert!(p.bands.iter().sum::<f64>() <= 1.0 + 1e-9);
        assert!(p.remainder >= -1e-9);
    }
}

#[test]
fn multi_period_bands_cluster() {
    let (_, b, ..) = setup(512, 2);
    let e = b.energies();
    // two quasi-momenta per band, split by an exponentially small tunneling width
    assert!((e[1] - e[0]).abs() < 1e-6);
    assert!((b.band_energy(0) / PI - 1.0).abs() < 0.01);
    let (_, one, ..) = setup(256, 1);
    assert!((b.band_energy(0) - one.band_energy(0)).abs() < 1e-6);
}

#[test]
fn projector_is_idempotent() {
    let (g, b, _, _, vmax) = setup(512, 1);
    let w = WaveState::gaussian(g, 2.0, -0.5, 0.5, vmax).unwrap();
    let once = b.project(w.psi(), 3);
    let twice = b.project(&once, 3);
    for (a, c) in once.iter().zip(&twice) {
        assert!((a - c).norm() < 1e-12);
    }
}

#[test]
fn ground_state_heating_agrees_with_harmonic_rewrite() {
    let (g, b, gamma, k, vmax) = setup(512, 1);
    let w = b.eigenstate(0).unwrap();
    // independent quadrature of <cos^2 sin^2> on the eigenvector
    let q: f64 =
        b.state(0).iter().zip(g.positions()).map(|(a, x)| a * a * ((k * x).cos() * (k * x).sin()).powi(2)).sum();
    let r = rate_formulas(&w, vmax, gamma, k, 0.1, b.band_energy(0));
    assert!((r.heating - 8.0 * PI * gamma * k * k * q).abs() < 1e-12);
    let harmonic = 4.0 * gamma * k.powi(4) * b.band_energy(0);
    // sin^2(2kx) ~ 4k^2 x^2 (1 - 4k^2 x^2 / 3): the rewrite overestimates by O(2 k^2)
    let rel = r.heating / harmonic - 1.0;
    assert!(rel < 0.0 && rel.abs() < 2.0 * k * k, "{} vs {harmonic}", r.heating);
}

#[test]
fn gaussian_rates_match_grid_rates() {
    let (g, _, gamma, k, vmax) = setup(512, 1);
    let w = WaveState::gaussian(g, 1.5, 0.3, 0.5, vmax).unwrap();
    let gs = crate::estimator::GaussianState::coherent(1.5, 0.3);
    let a = rate_formulas(&w, vmax, gamma, k, 0.1, PI);
    let b = rate_formulas_gaussian(&gs, vmax, gamma, k, 0.1, PI);
    assert!((a.heating - b.heating).abs() < 1e-9);
    assert!((a.cooling - b.cooling).abs() < 1e-6 * a.cooling.abs());
}

#[test]
fn cooling_vanishes_at_ground_energy() {
    assert_eq!(cooling_rate(PI, PI, 0.1), 0.0);
    assert!(cooling_rate(10.0, PI, 0.1) < 0.0);
}

#[test]
fn parity_statistics_need_enough_trajectories() {
    let few = vec![vec![0.0, 1.0]; 15];
    assert!(parity_statistics(&few, 0.99).is_err());
    let empty = vec![vec![]; 16];
    assert!(parity_statistics(&empty, 0.99).is_err());
}

#[test]
fn parity_statistics_on_fair_purification() {
    let series: Vec<Vec<f64>> = (0..40).map(|i| vec![0.0, if i % 2 == 0 { 0.995 } else { -0.995 }]).collect();
    let s = parity_statistics(&series, 0.99).unwrap();
    assert_eq!(s.purified_fraction, 1.0);
    assert_eq!(s.even_fraction, 0.5);
    assert!(s.martingale_ok() && s.split_ok());
    let biased: Vec<Vec<f64>> = (0..40).map(|_| vec![0.0, 0.995]).collect();
    let s = parity_statistics(&biased, 0.99).unwrap();
    assert!(!s.split_ok());
    assert!(!s.martingale_ok());
}

#[test]
fn purification_counts_the_first_passage() {
    // half reach 0.995 and fall back to 0.9 by the end
    let series: Vec<Vec<f64>> = (0..20).map(|i| vec![0.0, 0.995, if i < 10 { 0.9 } else { 0.999 }]).collect();
    let s = parity_statistics(&series, 0.99).unwrap();
    assert_eq!(s.purified_fraction, 1.0);
    assert_eq!(s.purified_at_end, 0.5);
}

#[test]
fn mean_se_of_single_value() {
    assert_eq!(mean_se(&[3.0]), (3.0, 0.0));
    let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn squeezing_prediction_below_centroid(eps in 0.007f64..1.0, gamma in 0.0f64..50.0) {
        let t = TheoryInputs::harmonic(eps, gamma, 0.155);
        prop_assume!(t.beta() > 0.0 && t.beta() < 1.0);
        let c = theory_ss_energy(&t, TheoryVariant::Centroid).unwrap();
        let s = theory_ss_energy(&t, TheoryVariant::Squeezing).unwrap();
        prop_assert!(s < c);
        prop_assert!(s >= 2.0 * PI);
    }

    #[test]
    fn centroid_prediction_increases_with_beta(b1 in 0.0f64..0.99, db in 1e-6f64..0.5) {
        let b2 = (b1 + db).min(0.999);
        prop_assume!(b2 > b1);
        // beta = Gamma k^4 / (2 eps): set eps = 1 and pick Gamma
        let k: f64 = 0.155;
        let at = |b: f64| theory_ss_energy(&TheoryInputs::harmonic(1.0, 2.0 * b / k.powi(4), k), TheoryVariant::Centroid).unwrap();
        prop_assert!(at(b2) > at(b1));
    }

    #[test]
    fn beta_at_or_above_one_is_uncontrollable(eps in 1e-4f64..0.0068) {
        let t = TheoryInputs::harmonic(eps, 23.6, 0.155);
        prop_assert!(theory_ss_energy(&t, TheoryVariant::Centroid).is_err());
    }
}
