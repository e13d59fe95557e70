//! Fixed-rate closed-loop simulation: plant, reset controller, and a sensor
//! path with additive noise followed by a rounding quantizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linear::StateSpace;
use crate::reset::ResetController;
use crate::scalar::{lit, Real};

/// `Q = range / 2^bits`.
pub fn quantization_level<T: Real>(range: T, bits: u32) -> T {
    range / lit::<T>(2.0).powi(bits as i32)
}

/// Nearest multiple of `q`, ties away from zero.
#[inline]
pub fn quantize<T: Real>(x: T, q: T) -> T {
    q * (x / q).round()
}

/// Rounding quantizer on the sensed output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec<T> {
    pub q: T,
    pub range: Option<T>,
    pub bits: Option<u32>,
}

impl<T: Real> QuantizerSpec<T> {
    pub fn from_range_bits(range: T, bits: u32) -> Result<Self> {
        if !(range > T::zero()) || bits == 0 {
            return Err(invalid("quantizer", "need range > 0 and bits >= 1"));
        }
        Ok(Self {
            q: quantization_level(range, bits),
            range: Some(range),
            bits: Some(bits),
        })
    }

    pub fn with_level(q: T) -> Result<Self> {
        if !(q > T::zero()) || !q.is_finite() {
            return Err(invalid("quantizer", "level must be positive"));
        }
        Ok(Self {
            q,
            range: None,
            bits: None,
        })
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        quantize(x, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Reference<T> {
    Zero,
    /// `amplitude * sin(omega t)`, omega in rad/s.
    Sine { amplitude: T, omega: T },
    Step { amplitude: T },
}

impl<T: Real> Reference<T> {
    #[inline]
    pub fn at(&self, t: T) -> T {
        match *self {
            Reference::Zero => T::zero(),
            Reference::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
            Reference::Step { amplitude } => amplitude,
        }
    }
}

/// Uniform white noise in `[-max_amplitude, max_amplitude]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T> {
    pub max_amplitude: T,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    /// Seconds.
    pub duration: T,
    pub reference: Reference<T>,
    pub quantizer: Option<QuantizerSpec<T>>,
    pub noise: Option<NoiseSpec<T>>,
}

impl<T: Real> SimConfig<T> {
    pub fn new(duration: T, reference: Reference<T>) -> Self {
        Self {
            duration,
            reference,
            quantizer: None,
            noise: None,
        }
    }

    pub fn with_quantizer(mut self, q: Option<QuantizerSpec<T>>) -> Self {
        self.quantizer = q;
        self
    }

    pub fn with_noise(mut self, n: Option<NoiseSpec<T>>) -> Self {
        self.noise = n;
        self
    }
}

/// One closed-loop sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub k: usize,
    pub t: T,
    pub r: T,
    pub e: T,
    pub u: T,
    pub y: T,
    pub y_q: T,
    /// A reset was executed at this sample.
    pub reset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace<T> {
    pub fs: T,
    pub t: Vec<T>,
    pub r: Vec<T>,
    pub e: Vec<T>,
    pub u: Vec<T>,
    pub y: Vec<T>,
    pub y_q: Vec<T>,
    /// Sample indices of executed resets.
    pub reset_events: Vec<usize>,
    /// Loop diverged; arrays stop at the last finite sample.
    pub diverged: bool,
}

impl<T: Real> SimulationTrace<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn reset_times(&self) -> Vec<T> {
        self.reset_events
            .iter()
            .map(|&k| T::from_usize(k).unwrap() / self.fs)
            .collect()
    }

    /// Resets whose sample index lies in `[start, end)`.
    pub fn resets_in(&self, start: usize, end: usize) -> usize {
        self.reset_events
            .iter()
            .filter(|&&k| k >= start && k < end)
            .count()
    }

    /// CSV with header `t,r,e,u,y,y_q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 96 + 32);
        out.push_str("t,r,e,u,y,y_q\n");
        for i in 0..self.len() {
            use std::fmt::Write;
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                self.t[i].to_f64_lossy(),
                self.r[i].to_f64_lossy(),
                self.e[i].to_f64_lossy(),
                self.u[i].to_f64_lossy(),
                self.y[i].to_f64_lossy(),
                self.y_q[i].to_f64_lossy(),
            );
        }
        out
    }
}

/// Row-major SISO discrete system without feedthrough, for the hot loop.
struct PlantStepper<T> {
    n: usize,
    a: Vec<T>,
    b: Vec<T>,
    c: Vec<T>,
    x: Vec<T>,
    next: Vec<T>,
}

impl<T: Real> PlantStepper<T> {
    fn new(plant: &StateSpace<T>) -> Result<Self> {
        if !plant.is_siso() {
            return Err(Error::Dimension("plant must be SISO".into()));
        }
        if plant.d()[(0, 0)] != T::zero() {
            return Err(invalid("plant", "direct feedthrough creates an algebraic loop"));
        }
        let n = plant.n_states();
        Ok(Self {
            n,
            a: plant.a().transpose().as_slice().to_vec(),
            b: plant.b().as_slice().to_vec(),
            c: plant.c().as_slice().to_vec(),
            x: vec![T::zero(); n],
            next: vec![T::zero(); n],
        })
    }

    #[inline]
    fn output(&self) -> T {
        self.c
            .iter()
            .zip(&self.x)
            .fold(T::zero(), |acc, (c, x)| acc + *c * *x)
    }

    #[inline]
    fn advance(&mut self, u: T) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            let mut acc = self.b[i] * u;
            for (a, x) in row.iter().zip(&self.x) {
                acc += *a * *x;
            }
            self.next[i] = acc;
        }
        std::mem::swap(&mut self.x, &mut self.next);
    }
}

fn check_rates<T: Real>(plant: &StateSpace<T>, ctrl: &ResetController<T>) -> Result<T> {
    let ts = plant
        .domain()
        .sample_time()
        .ok_or(Error::WrongDomain { expected: "discrete" })?;
    let fs = ctrl.fs();
    if ((T::one() / ts) - fs).abs() > lit::<T>(1e-9) * fs {
        return Err(Error::DomainMismatch);
    }
    Ok(fs)
}

/// Runs the loop from zero state and hands every sample to `visit`.
/// Returns `false` if the loop diverged. The controller's runtime is reset
/// first; its event log holds the resets afterwards.
pub fn run_loop<T: Real, F: FnMut(&Sample<T>)>(
    plant: &StateSpace<T>,
    ctrl: &mut ResetController<T>,
    cfg: &SimConfig<T>,
    mut visit: F,
) -> Result<bool> {
    let fs = check_rates(plant, ctrl)?;
    if !(cfg.duration >= T::zero()) {
        return Err(invalid("duration", "must be >= 0"));
    }
    let mut p = PlantStepper::new(plant)?;
    ctrl.reset_runtime();
    let steps = (cfg.duration * fs).round().to_f64_lossy() as usize;
    let mut rng = cfg.noise.map(|n| (ChaCha8Rng::seed_from_u64(n.seed), n.max_amplitude));
    let limit = lit::<T>(1e100);
    let ts = T::one() / fs;

    for k in 0..steps {
        let t = T::from_usize(k).unwrap() * ts;
        let r = cfg.reference.at(t);
        let y = p.output();
        let noise = match rng.as_mut() {
            Some((g, amp)) => *amp * lit::<T>(g.gen_range(-1.0..=1.0)),
            None => T::zero(),
        };
        let sensed = y + noise;
        let y_q = match &cfg.quantizer {
            Some(q) => q.apply(sensed),
            None => sensed,
        };
        let e = r - y_q;
        let before = ctrl.events().len();
        let u = ctrl.step(e);
        if !(u.abs() < limit) || !(y.abs() < limit) {
            return Ok(false);
        }
        visit(&Sample {
            k,
            t,
            r,
            e,
            u,
            y,
            y_q,
            reset: ctrl.events().len() > before,
        });
        p.advance(u);
    }
    Ok(true)
}

/// Runs the loop and records the full trace.
pub fn simulate_closed_loop<T: Real>(
    plant: &StateSpace<T>,
    ctrl: &mut ResetController<T>,
    cfg: &SimConfig<T>,
) -> Result<SimulationTrace<T>> {
    let mut tr = SimulationTrace {
        fs: ctrl.fs(),
        t: Vec::new(),
        r: Vec::new(),
        e: Vec::new(),
        u: Vec::new(),
        y: Vec::new(),
        y_q: Vec::new(),
        reset_events: Vec::new(),
        diverged: false,
    };
    let ok = run_loop(plant, ctrl, cfg, |s| {
        tr.t.push(s.t);
        tr.r.push(s.r);
        tr.e.push(s.e);
        tr.u.push(s.u);
        tr.y.push(s.y);
        tr.y_q.push(s.y_q);
    })?;
    tr.diverged = !ok;
    tr.reset_events = ctrl.events().iter().copied().filter(|&k| k < tr.len()).collect();
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{discretize, Discretization};
    use crate::presets;
    use crate::reset::{cglp_pid, TimeRegularization};

    #[test]
    fn quantization_levels() {
        assert_eq!(quantization_level(1000.0, 5), 31.25);
        assert_eq!(quantization_level(1000.0, 6), 15.625);
        assert_eq!(quantization_level(5000.0, 9), 9.765625);
    }

    #[test]
    fn rounding_quantizer() {
        assert_eq!(quantize(0.0, 31.25), 0.0);
        assert_eq!(quantize(17.2, 31.25), 31.25);
        assert_eq!(quantize(-15.6249, 31.25), 0.0);
        assert_eq!(quantize(-15.626, 31.25), -31.25);
        // ties away from zero
        assert_eq!(quantize(15.625, 31.25), 31.25);
        assert_eq!(quantize(-15.625, 31.25), -31.25);
    }

    #[test]
    fn quantizer_spec_validation() {
        assert!(QuantizerSpec::from_range_bits(0.0, 9).is_err());
        assert!(QuantizerSpec::from_range_bits(1.0, 0).is_err());
        assert!(QuantizerSpec::<f64>::with_level(-1.0).is_err());
    }

    fn mass_loop() -> (StateSpace<f64>, crate::reset::ResetController<f64>) {
        let p = presets::mass_table1();
        let plant = discretize(&p.plant_model(), 1.0 / p.fs, Discretization::Zoh).unwrap();
        let (ctrl, _) = cglp_pid(&p.controller, p.fs).unwrap();
        (plant, ctrl)
    }

    #[test]
    fn zero_reference_gives_zero_trace() {
        let (plant, mut ctrl) = mass_loop();
        let cfg = SimConfig::new(0.2, Reference::Zero)
            .with_quantizer(Some(QuantizerSpec::with_level(1e-6).unwrap()));
        let tr = simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap();
        assert_eq!(tr.len(), 2000);
        assert!(tr.e.iter().chain(&tr.u).chain(&tr.y).all(|v| *v == 0.0));
        assert!(tr.reset_events.is_empty());
    }

    #[test]
    fn deterministic_with_seed() {
        let (plant, mut ctrl) = mass_loop();
        let cfg = SimConfig::new(
            0.3,
            Reference::Sine {
                amplitude: 1e-3,
                omega: 63.0,
            },
        )
        .with_quantizer(Some(QuantizerSpec::with_level(1e-5).unwrap()))
        .with_noise(Some(NoiseSpec {
            max_amplitude: 1e-6,
            seed: 7,
        }));
        let a = simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap();
        let b = simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.noise.as_mut().unwrap().seed = 8;
        let c = simulate_closed_loop(&plant, &mut ctrl, &other).unwrap();
        assert_ne!(a.e, c.e);
    }

    #[test]
    fn error_is_reference_minus_quantized_output() {
        let (plant, mut ctrl) = mass_loop();
        let q = 1e-5;
        let cfg = SimConfig::new(
            0.2,
            Reference::Sine {
                amplitude: 1e-3,
                omega: 40.0,
            },
        )
        .with_quantizer(Some(QuantizerSpec::with_level(q).unwrap()));
        let tr = simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap();
        for i in 0..tr.len() {
            assert_eq!(tr.e[i], tr.r[i] - tr.y_q[i]);
            let m = tr.y_q[i] / q;
            assert!((m - m.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn unstable_loop_is_truncated() {
        let p = presets::mass_table1();
        let plant = discretize(&p.plant_model(), 1.0 / p.fs, Discretization::Zoh).unwrap();
        let (mut ctrl, _) = cglp_pid(&p.controller.with_gain_scale(-1.0), p.fs).unwrap();
        let cfg = SimConfig::new(20.0, Reference::Step { amplitude: 1e-3 });
        let tr = simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap();
        assert!(tr.diverged);
        assert!(tr.len() < 200_000);
    }

    #[test]
    fn rate_mismatch_rejected() {
        let p = presets::mass_table1();
        let plant = discretize(&p.plant_model(), 1e-3, Discretization::Zoh).unwrap();
        let (mut ctrl, _) = cglp_pid(&p.controller, p.fs).unwrap();
        let cfg = SimConfig::new(0.1, Reference::Zero);
        assert_eq!(
            simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap_err(),
            Error::DomainMismatch
        );
        let _ = TimeRegularization::<f64>::none();
    }

    #[test]
    fn csv_header_and_rows() {
        let (plant, mut ctrl) = mass_loop();
        let cfg = SimConfig::new(0.001, Reference::Step { amplitude: 1.0 });
        let tr = simulate_closed_loop(&plant, &mut ctrl, &cfg).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,r,e,u,y,y_q"));
        assert_eq!(lines.count(), 10);
    }
}
