//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails. Built with `harness = false`.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use resetq::hbeta::{reverify, search_certificate, SearchOptions, SearchOutcome};
use resetq::linear::{discretize, linear_sensitivity, Discretization};
use resetq::metrics::{
    cpsd, improvement_band_with, quantization_floor, s_sigma, s_sigma_peak, sweep_k,
    AmplitudePolicy, KSweep, LoopSetup, SteadyStatePolicy,
};
use resetq::presets::{self, SystemPreset};
use resetq::reset::{cglp_first_order, cglp_pid, clegg, gfore, gsore, ResetElement};
use resetq::reset::TimeRegularization;
use resetq::scalar::{db, logspace};
use resetq::sidf::{describing_function, df_validity_limit, HarmonicOracle};
use resetq::sim::{simulate_closed_loop, NoiseSpec, QuantizerSpec, Reference, SimConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn loop_setup(p: &SystemPreset, gamma: f64, q: Option<f64>) -> LoopSetup<f64> {
    let plant = discretize(&p.plant_model(), 1.0 / p.fs, Discretization::Zoh).unwrap();
    let (controller, _) = cglp_pid(&p.controller.with_gamma(gamma), p.fs).unwrap();
    LoopSetup {
        plant,
        controller,
        quantizer: q.map(|q| QuantizerSpec::with_level(q).unwrap()),
        noise: None,
    }
}

// ---------------------------------------------------------------- DF --------

fn df_correctness() -> Outcome {
    let table1 = presets::mass_table1().controller;
    let cases: Vec<(&str, ResetElement<f64>, f64)> = vec![
        ("CI", clegg(), 1.0),
        ("GFORE g=0", gfore(10.0, 0.0).unwrap(), 10.0),
        ("GFORE g=0.5", gfore(10.0, 0.5).unwrap(), 10.0),
        ("GFORE g=1", gfore(10.0, 1.0).unwrap(), 10.0),
        ("GSORE g=0", gsore(10.0, 0.7, 0.0).unwrap(), 10.0),
        ("GSORE g=0.5", gsore(10.0, 0.7, 0.5).unwrap(), 10.0),
        (
            "CgLp table 1",
            cglp_first_order(table1.wra, table1.wr, table1.wf, table1.gamma).unwrap(),
            table1.wr,
        ),
    ];
    let mut worst = (0.0_f64, "", 0.0);
    for (name, el, wr) in &cases {
        let grid = logspace(wr / 10.0, wr * 10.0, 30);
        let df = describing_function(el, &grid).unwrap();
        for (i, &w) in grid.iter().enumerate() {
            let fs = HarmonicOracle::<f64>::sample_rate_for(w, 10_000, 0.0);
            let o = HarmonicOracle::new(fs).estimate(el, w).unwrap();
            let d = df.values()[i].unwrap();
            let rel = (d - o).norm() / o.norm();
            if rel > worst.0 {
                worst = (rel, name, w);
            }
        }
    }
    let ci = describing_function(&clegg::<f64>(), &[1.0]).unwrap();
    let phase = ci.values()[0].unwrap().arg().to_degrees();
    let pass = worst.0 < 0.01 && (phase + 38.15).abs() <= 0.1;
    outcome(
        pass,
        format!(
            "max rel err {:.3}% ({} at {:.3} rad/s, tol 1%); CI phase {:.3} deg (tol -38.15 +- 0.1)",
            worst.0 * 100.0,
            worst.1,
            worst.2,
            phase
        ),
    )
}

// ---------------------------------------------------------- linear limit ----

fn linear_limit() -> Outcome {
    let p = presets::mass_table1();
    let setup = loop_setup(&p, 1.0, None);
    let grid = logspace(1.0, 500.0, 20);
    let curve = s_sigma(
        &setup,
        &grid,
        &AmplitudePolicy::constant(1e-3),
        &SteadyStatePolicy::default(),
        "gamma=1",
    )
    .unwrap();
    let w: Vec<f64> = grid.iter().map(|f| 2.0 * PI * f).collect();
    // the simulated loop is sampled: compare against S of the same ZOH plant
    // and Tustin controller
    let (_, twin) = cglp_pid(&p.controller.with_gamma(1.0), p.fs).unwrap();
    let sampled = linear_sensitivity(&setup.plant, &twin, &w).unwrap();
    let continuous = linear_sensitivity(
        &p.plant_model(),
        &p.controller.with_gamma(1.0).base_linear().unwrap(),
        &w,
    )
    .unwrap();
    let worst = |lin: &resetq::linear::FrequencyResponseCurve<f64>| {
        let mut worst = (0.0_f64, 0.0);
        for (i, pt) in curve.points.iter().enumerate() {
            let s = db(lin.values()[i].unwrap().norm());
            let d = (pt.value_db.unwrap_or(f64::INFINITY) - s).abs();
            if d > worst.0 {
                worst = (d, pt.f_hz);
            }
        }
        worst
    };
    let (d, f) = worst(&sampled);
    let (dc, fc) = worst(&continuous);
    outcome(
        d <= 0.5,
        format!(
            "max |S_sigma - |S|| = {d:.3} dB at {f:.1} Hz over 20 points (tol 0.5 dB); \
             against the continuous-time S: {dc:.3} dB at {fc:.1} Hz (sampling, informational)"
        ),
    )
}

// ---------------------------------------------------------- floors ----------

fn floors() -> Outcome {
    let p = presets::stage_table2();
    let amp = 30e-6;
    let grid = logspace(0.2, 2.0, 8);
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, target) in [(10e-9, -69.5), (80e-9, -51.5)] {
        let setup = loop_setup(&p, p.controller.gamma, Some(q));
        let c = s_sigma(
            &setup,
            &grid,
            &AmplitudePolicy::constant(amp),
            &SteadyStatePolicy::default(),
            "std",
        )
        .unwrap();
        let mut v: Vec<f64> = c.values().into_iter().flatten().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if v.is_empty() { f64::NAN } else { v[v.len() / 2] };
        let ok = (median - target).abs() <= 1.0;
        pass &= ok;
        parts.push(format!(
            "Q={:.0} nm floor {:.2} dB vs {target} (20log10(Q/A) = {:.2})",
            q * 1e9,
            median,
            quantization_floor(q, amp)
        ));
    }
    outcome(pass, format!("{} (tol 1 dB)", parts.join("; ")))
}

// ----------------------------------------------- degradation, TR, k sweep --

const MASS_Q: f64 = 9.765625e-6;
const KS: [f64; 4] = [1.0, 1.5, 2.0, 2.5];

struct MassStudy {
    amplitude: f64,
    ideal_at_10: f64,
    floor: f64,
    sweep: KSweep<f64>,
}

/// Largest value of the 1-2-5 series not above `x`.
fn round_down_125(x: f64) -> f64 {
    let e = x.log10().floor();
    let base = 10f64.powf(e);
    [5.0, 2.0, 1.0]
        .into_iter()
        .map(|m| m * base)
        .find(|v| *v <= x)
        .unwrap()
}

fn mass_study() -> &'static MassStudy {
    static STUDY: OnceLock<MassStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        let p = presets::mass_table1();
        let setup = loop_setup(&p, p.controller.gamma, Some(MASS_Q));
        let pol = SteadyStatePolicy::default();
        let f10 = 10.0 / (2.0 * PI);
        // without quantization the loop is homogeneous in A, so this
        // value does not depend on the probe amplitude
        let probe = s_sigma(
            &setup.without_quantizer(),
            &[f10],
            &AmplitudePolicy::constant(1e-3),
            &pol,
            "probe",
        )
        .unwrap();
        let s10 = probe.points[0].value_db.unwrap();
        let a_max = MASS_Q * 10f64.powf(-(s10 + 10.0) / 20.0);
        let amplitude = round_down_125(a_max);
        let ideal_at_10 = s_sigma(
            &setup.without_quantizer(),
            &[f10],
            &AmplitudePolicy::constant(amplitude),
            &pol,
            "ideal",
        )
        .unwrap()
        .points[0]
            .value_db
            .unwrap();
        let grid = logspace(0.5, 300.0, 40);
        let sweep = sweep_k(
            &setup,
            p.fc_hz,
            &KS,
            &grid,
            &AmplitudePolicy::constant(amplitude),
            &pol,
        )
        .unwrap();
        MassStudy {
            amplitude,
            ideal_at_10,
            floor: quantization_floor(MASS_Q, amplitude),
            sweep,
        }
    })
}

fn degradation_band(
    s: &MassStudy,
    k_index: usize,
) -> Option<resetq::metrics::ImprovementBand<f64>> {
    improvement_band_with(
        &s.sweep.standard,
        &s.sweep.curves[k_index],
        &s.sweep.ideal,
        5.0,
        Some(presets::mass_table1().fc_hz),
    )
    .unwrap()
}

fn degradation() -> Outcome {
    let s = mass_study();
    let protocol = s.ideal_at_10 <= s.floor - 10.0;
    let band = degradation_band(s, 3);
    let Some(b) = band else {
        return outcome(
            false,
            format!("A = {:.3e} m: no band with >= 5 dB excess below crossover", s.amplitude),
        );
    };
    let min_resets = s
        .sweep
        .standard
        .points
        .iter()
        .filter(|p| p.f_hz >= b.f_lo && p.f_hz <= b.f_hi)
        .map(|p| p.resets_per_period)
        .fold(f64::INFINITY, f64::min);
    let pass = protocol && min_resets > 2.0;
    outcome(
        pass,
        format!(
            "A = {:.3e} m (ideal at 10 rad/s {:.2} dB, floor {:.2} dB, need 10 dB gap); \
             band {:.2}-{:.2} Hz, worst excess {:.2} dB at {:.2} Hz (need >= 5); \
             min resets/period in band {:.1} (need > 2)",
            s.amplitude, s.ideal_at_10, s.floor, b.f_lo, b.f_hi, b.worst_excess_db, b.f_worst,
            min_resets
        ),
    )
}

fn tr_mitigation() -> Outcome {
    let s = mass_study();
    let Some(b) = degradation_band(s, 3) else {
        return outcome(false, "no degradation band to evaluate");
    };
    let pass =
        b.gain_at_worst_db >= 6.0 && (6.0..=14.0).contains(&b.max_gain_db);
    outcome(
        pass,
        format!(
            "k=5/2 gain at worst frequency {:.2} Hz: {:.2} dB (need >= 6); \
             max gain {:.2} dB at {:.2} Hz (need in [6, 14])",
            b.f_worst, b.gain_at_worst_db, b.max_gain_db, b.f_max_gain
        ),
    )
}

fn k_tradeoff() -> Outcome {
    let s = mass_study();
    let peak = |i: usize| s_sigma_peak(&s.sweep.curves[i]).map(|p| p.0).unwrap_or(f64::NAN);
    let (p1, p25) = (peak(0), peak(3));
    let gains: Vec<f64> = s
        .sweep
        .summary
        .iter()
        .map(|k| k.band.map(|b| b.max_gain_db).unwrap_or(0.0))
        .collect();
    let monotone = gains.windows(2).all(|w| w[1] >= w[0]);
    let pass = p1 > p25 && monotone;
    outcome(
        pass,
        format!(
            "peak k=1 {:.2} dB vs k=5/2 {:.2} dB (need strict >); low-frequency gain for k = {:?}: {:?} dB (need non-decreasing)",
            p1,
            p25,
            KS,
            gains.iter().map(|g| (g * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

// ------------------------------------------------------- TR invariants -----

fn tr_invariants() -> Outcome {
    let p = presets::mass_table1();
    let amp = mass_study().amplitude;
    let setup = loop_setup(&p, p.controller.gamma, Some(MASS_Q));
    let mut spacing_ok = true;
    let mut checked = 0usize;
    for k in [1.0, 1.5, 2.0, 2.5, 3.0, 5.0] {
        let tr = TimeRegularization::from_bandwidth(p.fc_hz, k, p.fs).unwrap();
        for f in [2.0, 11.0, 50.0] {
            let mut ctrl = setup.controller.clone();
            ctrl.set_time_regularization(tr);
            let cfg = SimConfig::new(
                2.0,
                Reference::Sine {
                    amplitude: amp,
                    omega: 2.0 * PI * f,
                },
            )
            .with_quantizer(setup.quantizer);
            let trace = simulate_closed_loop(&setup.plant, &mut ctrl, &cfg).unwrap();
            checked += trace.reset_events.len();
            spacing_ok &= trace
                .reset_events
                .windows(2)
                .all(|w| w[1] - w[0] > tr.rho_samples);
        }
    }

    let cfg = SimConfig::new(
        1.0,
        Reference::Sine {
            amplitude: amp,
            omega: 2.0 * PI * 11.0,
        },
    )
    .with_quantizer(setup.quantizer);
    let mut a = setup.controller.clone();
    let mut b = setup.controller.clone();
    b.set_time_regularization(TimeRegularization::new(0.0, p.fs).unwrap());
    let ta = simulate_closed_loop(&setup.plant, &mut a, &cfg).unwrap();
    let tb = simulate_closed_loop(&setup.plant, &mut b, &cfg).unwrap();
    let bit_exact = !ta.reset_events.is_empty()
        && ta.reset_events == tb.reset_events
        && ta.e.iter().zip(&tb.e).all(|(x, y)| x.to_bits() == y.to_bits())
        && ta.u.iter().zip(&tb.u).all(|(x, y)| x.to_bits() == y.to_bits());

    let mut worst_ulps = 0u64;
    for k in [1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0] {
        let rho = resetq::reset::rho_from_bandwidth(p.fc_hz, k);
        let w = df_validity_limit(rho).unwrap();
        worst_ulps = worst_ulps.max((w * rho).to_bits().abs_diff(PI.to_bits()));
    }
    let pass = spacing_ok && bit_exact && worst_ulps <= 1 && checked > 0;
    outcome(
        pass,
        format!(
            "spacing > rho_samples over {checked} events: {spacing_ok}; rho=0 bit-exact: {bit_exact}; \
             w_DFmax * rho = pi within {worst_ulps} ulp (need <= 1, rounding)"
        ),
    )
}

// ------------------------------------------------------------ stability -----

fn stability() -> Outcome {
    let opts = SearchOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in presets::NAMES {
        let p = presets::by_name(name).unwrap();
        let plant = p.plant_model();
        let el = p.controller.element().unwrap();
        match search_certificate(&plant, &el, &opts).unwrap() {
            SearchOutcome::Found(c) => {
                let r = reverify(&plant, &el, &c, &opts.dense_grid()).unwrap();
                pass &= r.passed();
                parts.push(format!(
                    "{name}: beta {:.4e}, margin {:.3e}, dense margin {:.3e}, partial-reset max eig {:.1e}",
                    c.beta[0], c.spr_margin, r.spr.margin, r.partial_reset_max_eig
                ));
            }
            SearchOutcome::NotFound {
                reason,
                best_margin,
            } => {
                pass = false;
                parts.push(format!(
                    "{name}: not found ({reason}; best margin {:.3e})",
                    best_margin.unwrap_or(f64::NAN)
                ));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- CPSD ------

fn cpsd_property() -> Outcome {
    let p = presets::stage_table2();
    let mut setup = loop_setup(&p, p.controller.gamma, Some(10e-9));
    setup.noise = Some(NoiseSpec {
        max_amplitude: 700e-9,
        seed: 1,
    });
    let cfg = SimConfig::new(10.0, Reference::Zero)
        .with_quantizer(setup.quantizer)
        .with_noise(setup.noise);
    let run = |tr: TimeRegularization<f64>| {
        let mut c = setup.controller.clone();
        c.set_time_regularization(tr);
        simulate_closed_loop(&setup.plant, &mut c, &cfg).unwrap()
    };
    let std = run(TimeRegularization::none());
    let c_std = cpsd(&std.e, p.fs).unwrap();
    let ms = std.e.iter().map(|v| v * v).sum::<f64>() / std.e.len() as f64;
    let parseval = (c_std.total() - ms).abs() / ms;
    let mut totals = Vec::new();
    for k in [1.0, 2.5] {
        let tr = TimeRegularization::from_bandwidth(p.fc_hz, k, p.fs).unwrap();
        totals.push((k, cpsd(&run(tr).e, p.fs).unwrap().total()));
    }
    let pass = parseval <= 0.05 && totals.iter().all(|(_, t)| *t <= c_std.total());
    outcome(
        pass,
        format!(
            "Parseval rel err {:.2}% (tol 5%); final CPSD std {:.4e} m^2, k=1 {:.4e}, k=5/2 {:.4e} (need TR <= std)",
            parseval * 100.0,
            c_std.total(),
            totals[0].1,
            totals[1].1
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome, u64); 9] = [
        ("DF correctness", df_correctness, 60),
        ("Linear-limit equivalence", linear_limit, 120),
        ("Quantization floors", floors, 300),
        ("Degradation reproduction", degradation, 600),
        ("TR mitigation", tr_mitigation, 600),
        ("k trade-off", k_tradeoff, 900),
        ("TR invariants", tr_invariants, 600),
        ("Stability", stability, 600),
        ("CPSD property", cpsd_property, 600),
    ];
    let mut failed = 0;
    for (name, check, limit) in checks {
        let t = Instant::now();
        let o = check();
        let took = t.elapsed();
        let in_time = took <= Duration::from_secs(limit);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} [{:.1} s, limit {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
