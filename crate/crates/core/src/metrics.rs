//! Performance metrics: the nonlinear sensitivity S-sigma swept over
//! frequency, quantization floors, peak and improvement-band summaries, and
//! cumulative power spectral density of the error.

use rayon::prelude::*;
use rustfft::{num_complex::Complex as FftComplex, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linear::StateSpace;
use crate::reset::{ResetController, TimeRegularization};
use crate::scalar::{db, lit, Real};
use crate::sim::{run_loop, NoiseSpec, QuantizerSpec, Reference, SimConfig};

/// Everything needed to run the loop at one frequency except the reference.
#[derive(Debug, Clone)]
pub struct LoopSetup<T: Real> {
    /// Sampled plant (ZOH).
    pub plant: StateSpace<T>,
    pub controller: ResetController<T>,
    pub quantizer: Option<QuantizerSpec<T>>,
    pub noise: Option<NoiseSpec<T>>,
}

impl<T: Real> LoopSetup<T> {
    pub fn with_time_regularization(&self, tr: TimeRegularization<T>) -> Self {
        let mut out = self.clone();
        out.controller.set_time_regularization(tr);
        out
    }

    pub fn without_quantizer(&self) -> Self {
        Self {
            quantizer: None,
            ..self.clone()
        }
    }
}

/// Reference amplitude as a function of frequency (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AmplitudePolicy<T> {
    Constant { amplitude: T },
    /// `(f_upper_hz, amplitude)` pairs in increasing `f_upper`; the first band
    /// whose upper edge is at or above `f` applies, the last band otherwise.
    Bands { bands: Vec<(T, T)> },
}

impl<T: Real> AmplitudePolicy<T> {
    pub fn constant(amplitude: T) -> Self {
        Self::Constant { amplitude }
    }

    pub fn at(&self, f_hz: T) -> T {
        match self {
            Self::Constant { amplitude } => *amplitude,
            Self::Bands { bands } => bands
                .iter()
                .find(|(upper, _)| f_hz <= *upper)
                .or(bands.last())
                .map(|(_, a)| *a)
                .unwrap_or_else(T::one),
        }
    }
}

/// Steady-state window: simulate `max(periods, min_duration)` and evaluate
/// over the final `window_periods` periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStatePolicy<T> {
    pub periods: usize,
    pub min_duration: T,
    pub window_periods: usize,
}

impl<T: Real> Default for SteadyStatePolicy<T> {
    fn default() -> Self {
        Self {
            periods: 20,
            min_duration: lit(2.0),
            window_periods: 5,
        }
    }
}

/// One S-sigma evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint<T> {
    pub f_hz: T,
    pub amplitude: T,
    /// `None` if the run diverged.
    pub value_db: Option<T>,
    pub max_error: T,
    /// Mean reset count per reference period inside the evaluation window.
    pub resets_per_period: T,
}

/// S-sigma as a function of frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaCurve<T> {
    pub label: String,
    pub points: Vec<SigmaPoint<T>>,
}

impl<T: Real> SigmaCurve<T> {
    pub fn freqs(&self) -> Vec<T> {
        self.points.iter().map(|p| p.f_hz).collect()
    }

    pub fn values(&self) -> Vec<Option<T>> {
        self.points.iter().map(|p| p.value_db).collect()
    }

    pub fn has_flagged(&self) -> bool {
        self.points.iter().any(|p| p.value_db.is_none())
    }

    /// CSV `f_Hz,value_dB,resets_per_period`; flagged points are written as `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_Hz,value_dB,resets_per_period\n");
        for p in &self.points {
            let v = p
                .value_db
                .map(|v| format!("{:.12e}", v.to_f64_lossy()))
                .unwrap_or_else(|| "nan".into());
            out.push_str(&format!(
                "{:.12e},{},{:.6}\n",
                p.f_hz.to_f64_lossy(),
                v,
                p.resets_per_period.to_f64_lossy()
            ));
        }
        out
    }
}

/// Max steady-state `|e|` over reference amplitude for `A sin(2 pi f t)`.
pub fn s_sigma_point<T: Real>(
    setup: &LoopSetup<T>,
    f_hz: T,
    amplitude: T,
    policy: &SteadyStatePolicy<T>,
) -> Result<SigmaPoint<T>> {
    if !(f_hz > T::zero()) || !(amplitude > T::zero()) {
        return Err(invalid("s_sigma", "frequency and amplitude must be positive"));
    }
    let fs = setup.controller.fs();
    let period = T::one() / f_hz;
    let duration = (period * T::from_usize(policy.periods).unwrap()).max(policy.min_duration);
    let steps = (duration * fs).round().to_f64_lossy() as usize;
    let window = (period * T::from_usize(policy.window_periods).unwrap() * fs)
        .round()
        .to_f64_lossy() as usize;
    let start = steps.saturating_sub(window);

    let cfg = SimConfig {
        duration,
        reference: Reference::Sine {
            amplitude,
            omega: T::two_pi() * f_hz,
        },
        quantizer: setup.quantizer,
        noise: setup.noise,
    };
    let mut ctrl = setup.controller.clone();
    let mut max_e = T::zero();
    let mut resets = 0usize;
    let ok = run_loop(&setup.plant, &mut ctrl, &cfg, |s| {
        if s.k >= start {
            max_e = max_e.max(s.e.abs());
            if s.reset {
                resets += 1;
            }
        }
    })?;
    let per_period = T::from_usize(resets).unwrap() / T::from_usize(policy.window_periods).unwrap();
    Ok(SigmaPoint {
        f_hz,
        amplitude,
        value_db: ok.then(|| db(max_e / amplitude)),
        max_error: max_e,
        resets_per_period: per_period,
    })
}

/// S-sigma over a frequency grid; points are simulated in parallel.
pub fn s_sigma<T: Real>(
    setup: &LoopSetup<T>,
    f_grid: &[T],
    amplitude: &AmplitudePolicy<T>,
    policy: &SteadyStatePolicy<T>,
    label: impl Into<String>,
) -> Result<SigmaCurve<T>> {
    let points = f_grid
        .par_iter()
        .map(|&f| s_sigma_point(setup, f, amplitude.at(f), policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaCurve {
        label: label.into(),
        points,
    })
}

/// `20 log10(Q / A)`.
pub fn quantization_floor<T: Real>(q: T, amplitude: T) -> T {
    db(q / amplitude)
}

/// Largest value and its frequency; flagged points are skipped.
pub fn s_sigma_peak<T: Real>(curve: &SigmaCurve<T>) -> Option<(T, T)> {
    curve
        .points
        .iter()
        .filter_map(|p| p.value_db.map(|v| (v, p.f_hz)))
        .fold(None, |best, (v, f)| match best {
            Some((bv, _)) if bv >= v => best,
            _ => Some((v, f)),
        })
}

/// Degraded region and the best reduction achieved inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementBand<T> {
    pub f_lo: T,
    pub f_hi: T,
    /// Frequency where `std - ideal` is largest inside the band.
    pub f_worst: T,
    /// `std - ideal` at `f_worst`.
    pub worst_excess_db: T,
    /// `std - tr` at `f_worst`.
    pub gain_at_worst_db: T,
    /// Largest `std - tr` inside the band.
    pub max_gain_db: T,
    /// Frequency of `max_gain_db`.
    pub f_max_gain: T,
}

/// Threshold used by [`improvement_band`] to call a point degraded.
pub const DEGRADATION_THRESHOLD_DB: f64 = 1.0;

fn aligned<T: Real>(a: &SigmaCurve<T>, b: &SigmaCurve<T>) -> bool {
    a.points.len() == b.points.len()
        && a.points.iter().zip(&b.points).all(|(x, y)| x.f_hz == y.f_hz)
}

/// Finds the contiguous run of grid points where `std` exceeds `ideal` by
/// more than [`DEGRADATION_THRESHOLD_DB`] with the largest total excess, and
/// reports how much `tr` reduces `std` there. `Ok(None)` when nothing is
/// degraded.
pub fn improvement_band<T: Real>(
    std: &SigmaCurve<T>,
    tr: &SigmaCurve<T>,
    ideal: &SigmaCurve<T>,
) -> Result<Option<ImprovementBand<T>>> {
    improvement_band_with(std, tr, ideal, lit(DEGRADATION_THRESHOLD_DB), None)
}

/// [`improvement_band`] with an explicit threshold (excess must be at least
/// `threshold_db`) and an optional upper frequency limit.
pub fn improvement_band_with<T: Real>(
    std: &SigmaCurve<T>,
    tr: &SigmaCurve<T>,
    ideal: &SigmaCurve<T>,
    threshold_db: T,
    below_hz: Option<T>,
) -> Result<Option<ImprovementBand<T>>> {
    if !aligned(std, tr) || !aligned(std, ideal) {
        return Err(Error::InvalidGrid);
    }
    let thr = threshold_db;
    let excess: Vec<Option<T>> = std
        .points
        .iter()
        .zip(&ideal.points)
        .map(|(s, i)| {
            if below_hz.is_some_and(|f| s.f_hz >= f) {
                return None;
            }
            Some(s.value_db? - i.value_db?)
        })
        .collect();

    // contiguous runs above threshold, scored by summed excess
    let mut best: Option<(usize, usize, T)> = None;
    let mut i = 0;
    while i < excess.len() {
        if matches!(excess[i], Some(x) if x >= thr) {
            let start = i;
            let mut score = T::zero();
            while i < excess.len() && matches!(excess[i], Some(x) if x >= thr) {
                score += excess[i].unwrap();
                i += 1;
            }
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((start, i, score));
            }
        } else {
            i += 1;
        }
    }
    let Some((lo, hi, _)) = best else {
        return Ok(None);
    };

    let gain = |k: usize| -> T {
        match (std.points[k].value_db, tr.points[k].value_db) {
            (Some(s), Some(t)) => s - t,
            _ => T::zero(),
        }
    };
    let worst = (lo..hi)
        .max_by(|&a, &b| excess[a].unwrap().partial_cmp(&excess[b].unwrap()).unwrap())
        .unwrap();
    let best_gain = (lo..hi)
        .max_by(|&a, &b| gain(a).partial_cmp(&gain(b)).unwrap())
        .unwrap();
    Ok(Some(ImprovementBand {
        f_lo: std.points[lo].f_hz,
        f_hi: std.points[hi - 1].f_hz,
        f_worst: std.points[worst].f_hz,
        worst_excess_db: excess[worst].unwrap(),
        gain_at_worst_db: gain(worst),
        max_gain_db: gain(best_gain),
        f_max_gain: std.points[best_gain].f_hz,
    }))
}

/// Per-`k` summary row of a safety-factor sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSummary<T> {
    pub k: T,
    pub rho: T,
    pub rho_samples: usize,
    pub peak_db: Option<T>,
    pub peak_f_hz: Option<T>,
    pub band: Option<ImprovementBand<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweep<T> {
    pub standard: SigmaCurve<T>,
    pub ideal: SigmaCurve<T>,
    pub curves: Vec<SigmaCurve<T>>,
    pub summary: Vec<KSummary<T>>,
}

/// S-sigma for each safety factor `k` (holding time `1/(2 k f_c)`), plus the
/// standard-reset and no-quantization references on the same grid.
pub fn sweep_k<T: Real>(
    setup: &LoopSetup<T>,
    fc_hz: T,
    ks: &[T],
    f_grid: &[T],
    amplitude: &AmplitudePolicy<T>,
    policy: &SteadyStatePolicy<T>,
) -> Result<KSweep<T>> {
    if ks.is_empty() {
        return Err(invalid("k", "empty safety-factor list"));
    }
    if let Some(bad) = ks.iter().find(|k| !(**k >= T::one())) {
        return Err(invalid("k", format!("{bad} < 1")));
    }
    let fs = setup.controller.fs();
    let std_setup = setup.with_time_regularization(TimeRegularization::none());
    let standard = s_sigma(&std_setup, f_grid, amplitude, policy, "standard")?;
    let ideal = s_sigma(&std_setup.without_quantizer(), f_grid, amplitude, policy, "ideal")?;
    let mut curves = Vec::with_capacity(ks.len());
    let mut summary = Vec::with_capacity(ks.len());
    for &k in ks {
        let tr = TimeRegularization::from_bandwidth(fc_hz, k, fs)?;
        let curve = s_sigma(
            &setup.with_time_regularization(tr),
            f_grid,
            amplitude,
            policy,
            format!("k={k}"),
        )?;
        let peak = s_sigma_peak(&curve);
        summary.push(KSummary {
            k,
            rho: tr.rho,
            rho_samples: tr.rho_samples,
            peak_db: peak.map(|p| p.0),
            peak_f_hz: peak.map(|p| p.1),
            band: improvement_band(&standard, &curve, &ideal)?,
        });
        curves.push(curve);
    }
    Ok(KSweep {
        standard,
        ideal,
        curves,
        summary,
    })
}

/// Cumulative power spectral density: `f[i]` in Hz and the running integral
/// of the one-sided PSD up to `f[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpsd<T> {
    pub f_hz: Vec<T>,
    pub psd: Vec<T>,
    pub cumulative: Vec<T>,
}

impl<T: Real> Cpsd<T> {
    pub fn total(&self) -> T {
        self.cumulative.last().copied().unwrap_or_else(T::zero)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_Hz,psd,cpsd\n");
        for i in 0..self.f_hz.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e}\n",
                self.f_hz[i].to_f64_lossy(),
                self.psd[i].to_f64_lossy(),
                self.cumulative[i].to_f64_lossy()
            ));
        }
        out
    }
}

/// Minimum input length accepted by [`cpsd`].
pub const CPSD_MIN_SAMPLES: usize = 1 << 14;

/// Averaged periodogram: 8 Hann-windowed segments with 50 % overlap.
pub fn cpsd<T: Real + FftNum>(signal: &[T], fs: T) -> Result<Cpsd<T>> {
    if signal.len() < CPSD_MIN_SAMPLES {
        return Err(Error::SignalTooShort {
            needed: CPSD_MIN_SAMPLES,
            got: signal.len(),
        });
    }
    let segments = 8usize;
    // 8 half-overlapping segments span 4.5 segment lengths
    let seg = signal.len() * 2 / (segments + 1);
    let hop = seg / 2;
    let window: Vec<T> = (0..seg)
        .map(|i| {
            let x = T::two_pi() * T::from_usize(i).unwrap() / T::from_usize(seg).unwrap();
            lit::<T>(0.5) * (T::one() - x.cos())
        })
        .collect();
    let w_energy = window.iter().fold(T::zero(), |acc, w| acc + *w * *w);

    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(seg);
    let bins = seg / 2 + 1;
    let mut acc = vec![T::zero(); bins];
    let mut buf = vec![FftComplex::new(T::zero(), T::zero()); seg];
    for s in 0..segments {
        let off = s * hop;
        for i in 0..seg {
            buf[i] = FftComplex::new(signal[off + i] * window[i], T::zero());
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].re * buf[k].re + buf[k].im * buf[k].im;
        }
    }
    let norm = T::from_usize(segments).unwrap() * fs * w_energy;
    let two = lit::<T>(2.0);
    let psd: Vec<T> = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (seg % 2 == 0 && k == bins - 1) {
                T::one()
            } else {
                two
            };
            *p * one_sided / norm
        })
        .collect();
    let df = fs / T::from_usize(seg).unwrap();
    let mut running = T::zero();
    let cumulative = psd
        .iter()
        .map(|p| {
            running += *p * df;
            running
        })
        .collect();
    let f_hz = (0..bins).map(|k| T::from_usize(k).unwrap() * df).collect();
    Ok(Cpsd {
        f_hz,
        psd,
        cumulative,
    })
}
