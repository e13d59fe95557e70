//! Sinusoidal-input describing functions of reset elements and a
//! simulation-based first-harmonic estimate used to cross-check them.

use nalgebra::{Complex, DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linear::{check_grid, freq_response, CurveKind, FrequencyResponseCurve, StateSpace};
use crate::reset::{CgLpPidParams, ResetElement, TimeRegularization};
use crate::scalar::{lit, Real};

/// Reset-induced correction matrix
///
/// `Theta = 2/pi (I + E) (I + A_rho E)^-1 (I - A_rho) ((A/w)^2 + I)^-1`,
/// with `E = exp(pi A / w)`. `None` when either inverse does not exist.
pub fn theta_rho<T: Real>(a_r: &DMatrix<T>, a_rho: &DMatrix<T>, omega: T) -> Option<DMatrix<T>> {
    let n = a_r.nrows();
    let eye = DMatrix::<T>::identity(n, n);
    let e = (a_r * (T::pi() / omega)).exp();
    let jump = (&eye + a_rho * &e).try_inverse()?;
    let scaled = a_r / omega;
    let shape = (&scaled * &scaled + &eye).try_inverse()?;
    let out = (&eye + &e) * jump * (&eye - a_rho) * shape * (lit::<T>(2.0) / T::pi());
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn df_point<T: Real>(element: &ResetElement<T>, omega: T) -> Option<Complex<T>> {
    let base = element.base();
    let n = base.n_states();
    let theta = theta_rho(base.a(), &element.a_rho(), omega)?;
    let cplx = |m: &DMatrix<T>| m.map(|v| Complex::new(v, T::zero()));
    let j = Complex::new(T::zero(), T::one());
    let mut resolvent = cplx(base.a()).map(|v| -v);
    for i in 0..n {
        resolvent[(i, i)] += j * omega;
    }
    let resolvent = resolvent.try_inverse()?;
    let mut lifted = cplx(&theta) * j;
    for i in 0..n {
        lifted[(i, i)] += Complex::new(T::one(), T::zero());
    }
    let g = cplx(base.c()) * resolvent * lifted * cplx(base.b()) + cplx(base.d());
    let v = g[(0, 0)];
    (v.re.is_finite() && v.im.is_finite()).then_some(v)
}

/// Describing function of a reset element on a frequency grid (rad/s).
pub fn describing_function<T: Real>(
    element: &ResetElement<T>,
    grid: &[T],
) -> Result<FrequencyResponseCurve<T>> {
    check_grid(grid)?;
    let values = grid.iter().map(|&w| df_point(element, w)).collect();
    FrequencyResponseCurve::new(CurveKind::DescribingFunction, grid.to_vec(), values)
}

/// DF of a reset element in series with purely linear blocks.
pub fn describing_function_with<T: Real>(
    element: &ResetElement<T>,
    linear: &StateSpace<T>,
    grid: &[T],
) -> Result<FrequencyResponseCurve<T>> {
    let df = describing_function(element, grid)?;
    let mut out = df.mul(&freq_response(linear, grid)?)?;
    out.kind = CurveKind::DescribingFunction;
    Ok(out)
}

/// DF of the complete CgLp-PID: reset CgLp times the linear PID response.
pub fn cglp_pid_describing_function<T: Real>(
    params: &CgLpPidParams<T>,
    grid: &[T],
) -> Result<FrequencyResponseCurve<T>> {
    params.validate()?;
    describing_function_with(&params.cglp()?, &params.pid()?, grid)
}

/// Upper frequency (rad/s) below which the describing function stays valid
/// under a holding time `rho`. `None` means unbounded (`rho = 0`).
pub fn df_validity_limit<T: Real>(rho: T) -> Option<T> {
    (rho > T::zero()).then(|| T::pi() / rho)
}

/// Settings for the brute-force first-harmonic estimate.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicOracle<T> {
    pub amplitude: T,
    /// Total simulated periods.
    pub cycles: usize,
    /// Trailing periods used for the projection.
    pub projected: usize,
    /// Sample rate, Hz.
    pub fs: T,
    pub tr: TimeRegularization<T>,
}

impl<T: Real> HarmonicOracle<T> {
    /// 20 periods, the last 5 projected, at `fs` Hz.
    pub fn new(fs: T) -> Self {
        Self {
            amplitude: T::one(),
            cycles: 20,
            projected: 5,
            fs,
            tr: TimeRegularization::none(),
        }
    }

    /// Largest sample rate in `{fs_min, 100 f, ...}` that puts a whole number
    /// of samples (at least `per_period`) in one period of `omega`.
    pub fn sample_rate_for(omega: T, per_period: usize, fs_min: T) -> T {
        let f = omega / T::two_pi();
        let need = (fs_min / f).ceil().to_f64_lossy().max(per_period as f64) as usize;
        f * T::from_usize(need).unwrap()
    }

    /// Complex gain of the first output harmonic relative to `A sin(w t)`.
    pub fn estimate(&self, element: &ResetElement<T>, omega: T) -> Result<Complex<T>> {
        let f = omega / T::two_pi();
        let per_period = self.fs / f;
        let min_per_period = lit::<T>(100.0);
        if per_period < min_per_period * (T::one() - lit(1e-9)) {
            return Err(Error::InsufficientSampling {
                needed: 100.0,
                got: per_period.to_f64_lossy(),
            });
        }
        if self.cycles < 10 || self.projected == 0 || self.projected >= self.cycles {
            return Err(crate::error::invalid(
                "cycles",
                "need cycles >= 10 and 0 < projected < cycles",
            ));
        }
        let mut ctrl = element.controller(self.fs, self.tr)?;
        let total = (per_period * T::from_usize(self.cycles).unwrap())
            .round()
            .to_f64_lossy() as usize;
        let window = (per_period * T::from_usize(self.projected).unwrap())
            .round()
            .to_f64_lossy() as usize;
        let ts = T::one() / self.fs;

        // least-squares fit of u = a sin + b cos + c over the window
        let mut normal = Matrix3::<T>::zeros();
        let mut rhs = Vector3::<T>::zeros();
        for k in 0..total {
            let th = omega * T::from_usize(k).unwrap() * ts;
            let (s, c) = (th.sin(), th.cos());
            let u = ctrl.step(self.amplitude * s);
            if k >= total - window {
                let basis = Vector3::new(s, c, T::one());
                normal += basis * basis.transpose();
                rhs += basis * u;
            }
        }
        let coef = normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| crate::error::invalid("window", "degenerate projection"))?;
        // a sin + b cos = Im{(a + j b) e^{j w t}}
        Ok(Complex::new(coef[0], coef[1]) / self.amplitude)
    }
}

/// Convenience wrapper around [`HarmonicOracle::estimate`].
pub fn harmonic_oracle<T: Real>(
    element: &ResetElement<T>,
    omega: T,
    amplitude: T,
    cycles: usize,
    fs: T,
) -> Result<Complex<T>> {
    HarmonicOracle {
        amplitude,
        cycles,
        projected: 5.min(cycles / 2),
        fs,
        tr: TimeRegularization::none(),
    }
    .estimate(element, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reset::{clegg, gfore};
    use approx::assert_relative_eq;

    #[test]
    fn theta_vanishes_without_reset() {
        let el = gfore(10.0, 1.0).unwrap();
        let th = theta_rho(el.base().a(), &el.a_rho(), 3.0).unwrap();
        assert!(th.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn clegg_theta_is_four_over_pi() {
        let el = clegg::<f64>();
        for w in [0.1, 1.0, 50.0] {
            let th = theta_rho(el.base().a(), &el.a_rho(), w).unwrap();
            assert_relative_eq!(th[(0, 0)], 4.0 / std::f64::consts::PI, epsilon = 1e-14);
        }
    }

    #[test]
    fn gfore_high_frequency_limit() {
        let gamma = 0.3;
        let el = gfore(1.0, gamma).unwrap();
        let th = theta_rho(el.base().a(), &el.a_rho(), 1e7).unwrap();
        let limit = 4.0 / std::f64::consts::PI * (1.0 - gamma) / (1.0 + gamma);
        assert_relative_eq!(th[(0, 0)], limit, max_relative = 1e-6);
    }

    #[test]
    fn singular_jump_is_flagged() {
        // A_rho = -1 with A = 0 makes I + A_rho e^{...} singular
        let a = DMatrix::from_element(1, 1, 0.0);
        let rho = DMatrix::from_element(1, 1, -1.0);
        assert!(theta_rho(&a, &rho, 1.0).is_none());
    }

    #[test]
    fn clegg_df_at_unit_frequency() {
        let c = describing_function(&clegg::<f64>(), &[1.0]).unwrap();
        let v = c.values()[0].unwrap();
        assert_relative_eq!(v.norm(), 1.6189, epsilon = 1e-4);
        assert_relative_eq!(v.arg().to_degrees(), -38.1460, epsilon = 1e-3);
    }

    #[test]
    fn gfore_linear_df_is_lowpass() {
        let wr = 30.0;
        let grid = [1.0, 30.0, 900.0];
        let c = describing_function(&gfore(wr, 1.0).unwrap(), &grid).unwrap();
        for (w, v) in c.iter() {
            let exact = Complex::new(wr, 0.0) / Complex::new(wr, w);
            assert!((v.unwrap() - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn validity_limit() {
        assert_relative_eq!(df_validity_limit(1.0 / 300.0).unwrap(), 300.0 * std::f64::consts::PI);
        assert!(df_validity_limit(0.0).is_none());
    }

    #[test]
    fn oracle_rejects_coarse_sampling() {
        let el = clegg::<f64>();
        let err = harmonic_oracle(&el, 2.0 * std::f64::consts::PI * 200.0, 1.0, 20, 10_000.0).unwrap_err();
        assert!(matches!(err, Error::InsufficientSampling { .. }));
        assert!(harmonic_oracle(&el, 1.0, 1.0, 5, 10_000.0).is_err());
    }

    #[test]
    fn sample_rate_helper_is_integer_per_period() {
        let w = 7.3;
        let fs = HarmonicOracle::<f64>::sample_rate_for(w, 100, 10_000.0);
        let per = fs / (w / (2.0 * std::f64::consts::PI));
        assert!((per - per.round()).abs() < 1e-6);
        assert!(fs >= 10_000.0);
    }
}
