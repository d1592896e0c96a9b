//! Periodic position grid over an integer number of lattice periods, with
//! the FFT plans shared by every state living on it.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct SpatialGrid {
    n: usize,
    periods: usize,
    ktilde: f64,
    length: f64,
    dx: f64,
    positions: Vec<f64>,
    momenta: Vec<f64>,
    cos_sq: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("n", &self.n)
            .field("periods", &self.periods)
            .field("ktilde", &self.ktilde)
            .field("length", &self.length)
            .finish()
    }
}

impl SpatialGrid {
    /// `n` points on `[-L/2, L/2)` with `L = periods * pi / ktilde`. A well
    /// minimum sits at `x = 0` (index `n/2`).
    pub fn new(n: usize, periods: usize, ktilde: f64) -> Result<Arc<Self>> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::Config(format!("grid size must be a power of two >= 8, got {n}")));
        }
        if periods == 0 {
            return Err(Error::Config("grid must span at least one lattice period".into()));
        }
        if !(ktilde.is_finite() && ktilde > 0.0) {
            return Err(Error::Config(format!("ktilde must be positive, got {ktilde}")));
        }
        let length = periods as f64 * PI / ktilde;
        let dx = length / n as f64;
        let positions: Vec<f64> = (0..n).map(|i| -0.5 * length + i as f64 * dx).collect();
        let dp = TAU / length;
        let momenta = (0..n).map(|j| if j < n / 2 { j as f64 * dp } else { (j as f64 - n as f64) * dp }).collect();
        let cos_sq = positions.iter().map(|x| (ktilde * x).cos().powi(2)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self { n, periods, ktilde, length, dx, positions, momenta, cos_sq, fft, ifft }))
    }

    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn periods(&self) -> usize {
        self.periods
    }
    pub fn ktilde(&self) -> f64 {
        self.ktilde
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
    /// FFT-ordered momentum grid (`P = -i d/dx`).
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }
    /// `cos^2(ktilde x_i)`.
    pub fn cos_sq(&self) -> &[f64] {
        &self.cos_sq
    }

    /// Index of the mirror point `-x_i`.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Displacement `x - x0` wrapped into `[-L/2, L/2)`.
    pub fn wrap(&self, d: f64) -> f64 {
        d - self.length * (d / self.length + 0.5).floor()
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.fft.get_inplace_scratch_len().max(self.ifft.get_inplace_scratch_len())
    }

    /// Unnormalized forward transform.
    pub(crate) fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fft.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse transform.
    pub(crate) fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.ifft.process_with_scratch(buf, scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = SpatialGrid::new(512, 1, 0.155).unwrap();
        assert!((g.length() - PI / 0.155).abs() < 1e-12);
        assert_eq!(g.positions()[256], 0.0);
        assert!((g.cos_sq()[256] - 1.0).abs() < 1e-15);
        // domain edges sit on potential maxima
        assert!(g.cos_sq()[0] < 1e-20);
        for i in 0..g.len() {
            let j = g.mirror(i);
            let xi = g.positions()[i];
            let xj = g.positions()[j];
            assert!((g.wrap(xi + xj)).abs() < 1e-9, "{i} -> {j}");
        }
    }

    #[test]
    fn wrap_range() {
        let g = SpatialGrid::new(64, 2, 0.3).unwrap();
        for d in [-100.0, -g.length() / 2.0, 0.0, 3.0, g.length() * 0.49, 77.7] {
            let w = g.wrap(d);
            assert!(w >= -g.length() / 2.0 - 1e-12 && w < g.length() / 2.0);
            let m = (d - w) / g.length();
            assert!((m - m.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(SpatialGrid::new(100, 1, 0.1).is_err());
        assert!(SpatialGrid::new(64, 0, 0.1).is_err());
    }

    proptest::proptest! {
        #[test]
        fn mirror_reflects_positions(log_n in 3u32..11, periods in 1usize..4, i in 0usize..1024) {
            let g = SpatialGrid::new(1 << log_n, periods, 0.154728).unwrap();
            let i = i % g.len();
            let j = g.mirror(i);
            proptest::prop_assert_eq!(g.mirror(j), i);
            let d = g.wrap(g.positions()[i] + g.positions()[j]);
            proptest::prop_assert!(d.abs() < 1e-9);
        }

        #[test]
        fn wrap_lands_in_half_open_period(d in -1e3f64..1e3) {
            let g = SpatialGrid::new(64, 1, 0.154728).unwrap();
            let w = g.wrap(d);
            let half = g.length() / 2.0;
            proptest::prop_assert!((-half..half).contains(&w));
            let periods = (d - w) / g.length();
            proptest::prop_assert!((periods - periods.round()).abs() < 1e-9);
        }
    }
}
