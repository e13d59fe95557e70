//! Fixed-rate execution of the zero-crossing reset law with an optional
//! holding time between resets.

use serde::{Deserialize, Serialize};

use super::elements::ResetElement;
use crate::error::{Error, Result};
use crate::linear::{discretize, tustin_maps, Discretization, StateSpace};
use crate::scalar::{lit, Real};

/// Minimum spacing between consecutive resets.
///
/// `rho_samples = round(rho * fs)`; a reset may fire only while the sample
/// counter since the previous reset exceeds it. `rho = 0` is the plain law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRegularization<T> {
    pub rho: T,
    pub rho_samples: usize,
}

impl<T: Real> TimeRegularization<T> {
    pub fn none() -> Self {
        Self {
            rho: T::zero(),
            rho_samples: 0,
        }
    }

    pub fn new(rho: T, fs: T) -> Result<Self> {
        if !(rho >= T::zero()) || !rho.is_finite() {
            return Err(crate::error::invalid("rho", format!("{rho} must be >= 0")));
        }
        let samples = (rho * fs).round().to_f64_lossy().max(0.0) as usize;
        Ok(Self {
            rho,
            rho_samples: samples,
        })
    }

    /// Holding time from the crossover rule with safety factor `k`.
    pub fn from_bandwidth(fc_hz: T, k: T, fs: T) -> Result<Self> {
        Self::new(rho_from_bandwidth(fc_hz, k), fs)
    }

    pub fn is_active(&self) -> bool {
        self.rho_samples > 0
    }
}

impl<T: Real> Default for TimeRegularization<T> {
    fn default() -> Self {
        Self::none()
    }
}

/// `rho = 1 / (2 k f_c)`.
pub fn rho_from_bandwidth<T: Real>(fc_hz: T, k: T) -> T {
    T::one() / (lit::<T>(2.0) * k * fc_hz)
}

/// Runtime state of a sampled reset controller.
///
/// The base dynamics are integrated with the trapezoidal rule on the
/// physical filter state, so the input/output map of a non-resetting
/// controller equals the Tustin discretization of the base system. Resets
/// act on that physical state.
#[derive(Debug, Clone)]
pub struct ResetController<T: Real> {
    n: usize,
    phi: Vec<T>,
    gain_in: Vec<T>,
    c: Vec<T>,
    d: T,
    reset_diag: Vec<T>,
    selector: Vec<bool>,
    tr: TimeRegularization<T>,
    fs: T,
    discrete_base: StateSpace<T>,

    state: Vec<T>,
    scratch: Vec<T>,
    prev_error: T,
    tau: usize,
    sample: usize,
    events: Vec<usize>,
}

impl<T: Real> ResetController<T> {
    pub fn from_element(
        element: &ResetElement<T>,
        fs: T,
        tr: TimeRegularization<T>,
    ) -> Result<Self> {
        if !(fs > T::zero()) || !fs.is_finite() {
            return Err(Error::InvalidSampleTime);
        }
        let base = element.base();
        let ts = T::one() / fs;
        let n = base.n_states();
        let (phi, gain_in) = if n == 0 {
            (Vec::new(), Vec::new())
        } else {
            let maps = tustin_maps(base.a(), ts)?;
            let g = &maps.inv * base.b() * (ts / lit(2.0));
            (
                maps.phi.transpose().as_slice().to_vec(),
                g.as_slice().to_vec(),
            )
        };
        let discrete_base = discretize(base, ts, Discretization::Tustin)?;
        let mut ctrl = Self {
            n,
            phi,
            gain_in,
            c: base.c().row(0).iter().copied().collect(),
            d: base.d()[(0, 0)],
            reset_diag: element.reset_diag().to_vec(),
            selector: element.selector().to_vec(),
            tr,
            fs,
            discrete_base,
            state: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
            prev_error: T::zero(),
            tau: 0,
            sample: 0,
            events: Vec::new(),
        };
        ctrl.reset_runtime();
        Ok(ctrl)
    }

    /// Clears state, error memory, counters and the event log.
    pub fn reset_runtime(&mut self) {
        self.state.iter_mut().for_each(|x| *x = T::zero());
        self.prev_error = T::zero();
        self.tau = self.tr.rho_samples + 1;
        self.sample = 0;
        self.events.clear();
    }

    pub fn set_time_regularization(&mut self, tr: TimeRegularization<T>) {
        self.tr = tr;
        self.reset_runtime();
    }

    pub fn time_regularization(&self) -> TimeRegularization<T> {
        self.tr
    }

    /// Copy with `A_rho = I`: identical arithmetic, resets become no-ops.
    pub fn linear_twin(&self) -> Self {
        let mut twin = self.clone();
        twin.reset_diag.iter_mut().for_each(|g| *g = T::one());
        twin.reset_runtime();
        twin
    }

    pub fn fs(&self) -> T {
        self.fs
    }
    pub fn n_states(&self) -> usize {
        self.n
    }
    pub fn state(&self) -> &[T] {
        &self.state
    }
    pub fn reset_diag(&self) -> &[T] {
        &self.reset_diag
    }
    pub fn selector(&self) -> &[bool] {
        &self.selector
    }
    pub fn tau(&self) -> usize {
        self.tau
    }
    /// Tustin standard-form model of the base dynamics.
    pub fn discrete_base(&self) -> &StateSpace<T> {
        &self.discrete_base
    }

    /// Sample indices at which a reset was executed.
    pub fn events(&self) -> &[usize] {
        &self.events
    }

    pub fn reset_times(&self) -> Vec<T> {
        let ts = T::one() / self.fs;
        self.events
            .iter()
            .map(|&k| T::from_usize(k).unwrap() * ts)
            .collect()
    }

    /// Crossing test between the previous and the current error sample.
    #[inline]
    fn crossing(prev: T, e: T) -> bool {
        let zero = T::zero();
        prev * e < zero || (e == zero && prev != zero)
    }

    /// Advances one sample with error `e` and returns the control output.
    pub fn step(&mut self, e: T) -> T {
        if Self::crossing(self.prev_error, e) && self.tau > self.tr.rho_samples {
            for i in 0..self.n {
                if self.selector[i] {
                    self.state[i] *= self.reset_diag[i];
                }
            }
            self.tau = 0;
            self.events.push(self.sample);
        }

        let drive = self.prev_error + e;
        for i in 0..self.n {
            let row = &self.phi[i * self.n..(i + 1) * self.n];
            let mut acc = self.gain_in[i] * drive;
            for (p, x) in row.iter().zip(&self.state) {
                acc += *p * *x;
            }
            self.scratch[i] = acc;
        }
        std::mem::swap(&mut self.state, &mut self.scratch);

        let mut u = self.d * e;
        for (c, x) in self.c.iter().zip(&self.state) {
            u += *c * *x;
        }

        self.prev_error = e;
        self.tau = self.tau.saturating_add(1);
        self.sample += 1;
        u
    }

    /// Runs a whole input sequence from the current runtime state.
    pub fn run(&mut self, input: &[T]) -> Vec<T> {
        input.iter().map(|&e| self.step(e)).collect()
    }
}
