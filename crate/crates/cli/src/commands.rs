use std::fs;
use std::path::Path;

use resetq::hbeta::{assess, reverify, SearchOptions, Verdict};
use resetq::linear::freq_response;
use resetq::metrics::{
    cpsd, improvement_band, quantization_floor, s_sigma, s_sigma_peak, sweep_k, LoopSetup,
    SigmaCurve,
};
use resetq::presets;
use resetq::reset::{cglp_first_order, clegg, gfore, gsore, ResetElement};
use resetq::scalar::logspace;
use resetq::sidf::{cglp_pid_describing_function, describing_function, df_validity_limit};
use resetq::sim::{simulate_closed_loop, Reference, SimConfig};
use resetq::{FrequencyResponse, TimeRegularization};
use serde_json::{json, Value};

use crate::cli::{
    CpsdArgs, ElementKind, GridArgs, KSweepArgs, SidfArgs, SimulateArgs, SsigmaArgs, SystemArgs,
};
use crate::config::{self, Config, GridConfig, NoiseConfig, System};
use crate::csvio::write_table;
use crate::error::CliError;
use crate::units::{self, Dim};

const DEFAULT_AMPLITUDE: f64 = 1e-3;

/// What a command printed and whether any point was flagged non-finite.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub flagged: usize,
}

fn load(args: &SystemArgs) -> Result<Config, CliError> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(p) = &args.preset {
        cfg.preset = Some(p.clone());
    }
    if let Some(g) = args.gamma {
        cfg.gamma = Some(g);
    }
    if let Some(s) = args.gain_scale {
        cfg.gain_scale = Some(s);
    }
    if let Some(t) = &args.tr {
        cfg.tr = config::parse_tr_flag(t)?;
    }
    if let Some(q) = &args.quantizer {
        cfg.quantizer = config::parse_quantizer_flag(q)?;
    }
    if let Some(n) = &args.noise {
        cfg.noise = Some(NoiseConfig {
            amplitude: n.clone(),
            seed: None,
        });
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    Ok(cfg)
}

fn apply_grid(cfg: &mut Config, g: &GridArgs) {
    let mut grid = cfg.grid.clone().unwrap_or(GridConfig::default());
    if let Some(v) = &g.fmin {
        grid.f_min = Some(v.clone());
    }
    if let Some(v) = &g.fmax {
        grid.f_max = Some(v.clone());
    }
    if g.points.is_some() {
        grid.points = g.points;
    }
    cfg.grid = Some(grid);
    if let Some(a) = &g.amplitude {
        cfg.amplitude = Some(a.clone());
    }
}

fn out_dir(path: &Path) -> Result<&Path, CliError> {
    fs::create_dir_all(path)?;
    Ok(path)
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_sigma(dir: &Path, name: &str, curve: &SigmaCurve<f64>) -> Result<Value, CliError> {
    let file = format!("{name}.csv");
    write_table(
        dir.join(&file),
        &["f_Hz", "value_dB", "resets_per_period"],
        curve
            .points
            .iter()
            .map(|p| vec![Some(p.f_hz), p.value_db, Some(p.resets_per_period)]),
    )?;
    let peak = s_sigma_peak(curve);
    Ok(json!({
        "label": curve.label,
        "file": file,
        "peak_dB": peak.map(|p| p.0),
        "peak_f_Hz": peak.map(|p| p.1),
        "flagged": curve.points.iter().filter(|p| p.value_db.is_none()).count(),
    }))
}

fn flagged(curve: &SigmaCurve<f64>) -> usize {
    curve.points.iter().filter(|p| p.value_db.is_none()).count()
}

pub fn sidf(args: &SidfArgs) -> Result<Report, CliError> {
    let w = |s: &str| units::parse_with_default(s, Dim::AngularFrequency, Some("rad/s"));
    let need = |v: &Option<String>, name: &str| -> Result<f64, CliError> {
        v.as_deref()
            .ok_or_else(|| CliError::config(format!("--{name} is required for this element")))
            .and_then(w)
    };
    let (wmin, wmax) = (w(&args.wmin)?, w(&args.wmax)?);
    if !(wmin > 0.0 && wmax > wmin) || args.points < 2 {
        return Err(CliError::config("need 0 < wmin < wmax and at least 2 points"));
    }
    let grid = logspace(wmin, wmax, args.points);
    let gamma = args.gamma;

    let (label, df, linear): (String, FrequencyResponse, FrequencyResponse) =
        match (args.element, args.preset.as_deref()) {
            (Some(kind), None) => {
                let el: ResetElement<f64> = match kind {
                    ElementKind::Clegg => clegg(),
                    ElementKind::Gfore => gfore(need(&args.wr, "wr")?, 0.0)?,
                    ElementKind::Gsore => gsore(
                        need(&args.wr, "wr")?,
                        args.beta_r
                            .ok_or_else(|| CliError::config("--beta-r is required for gsore"))?,
                        0.0,
                    )?,
                    ElementKind::Cglp => cglp_first_order(
                        need(&args.wra, "wra")?,
                        need(&args.wr, "wr")?,
                        need(&args.wf, "wf")?,
                        0.0,
                    )?,
                };
                let el = match gamma {
                    Some(g) => el.with_gamma(g)?,
                    None => el,
                };
                let lin = freq_response(el.base(), &grid)?;
                (format!("{kind:?}").to_lowercase(), describing_function(&el, &grid)?, lin)
            }
            (None, Some("table1-cglp")) => {
                let mut p = presets::mass_table1().controller;
                if let Some(g) = gamma {
                    p = p.with_gamma(g);
                }
                let el = p.cglp()?;
                let lin = freq_response(el.base(), &grid)?;
                ("table1-cglp".into(), describing_function(&el, &grid)?, lin)
            }
            (None, Some(name)) => {
                let preset = presets::by_name(name)
                    .ok_or_else(|| CliError::config(format!("unknown sidf preset `{name}`")))?;
                let mut p = preset.controller;
                if let Some(g) = gamma {
                    p = p.with_gamma(g);
                }
                let lin = freq_response(&p.base_linear()?, &grid)?;
                (name.into(), cglp_pid_describing_function(&p, &grid)?, lin)
            }
            (None, None) => return Err(CliError::config("give --element or --preset")),
            (Some(_), Some(_)) => unreachable!("clap rejects --element with --preset"),
        };

    let rho = args
        .rho
        .as_deref()
        .map(|r| units::parse(r, Dim::Time))
        .transpose()?;
    let limit = rho.and_then(df_validity_limit);

    let dir = out_dir(&args.out)?;
    let (mag, ph) = (df.magnitude_db(), df.phase_deg());
    let (lmag, lph) = (linear.magnitude_db(), linear.phase_deg());
    write_table(
        dir.join("sidf.csv"),
        &[
            "omega_rad_s",
            "f_Hz",
            "magnitude_dB",
            "phase_deg",
            "linear_magnitude_dB",
            "linear_phase_deg",
        ],
        (0..grid.len()).map(|i| {
            vec![
                Some(grid[i]),
                Some(grid[i] / std::f64::consts::TAU),
                mag[i],
                ph[i],
                lmag[i],
                lph[i],
            ]
        }),
    )?;

    let finite: Vec<f64> = mag.iter().flatten().copied().collect();
    let spread = finite.iter().cloned().fold(f64::MIN, f64::max)
        - finite.iter().cloned().fold(f64::MAX, f64::min);
    let n_flagged = mag.iter().filter(|m| m.is_none()).count();
    let above = limit.map(|l| grid.iter().filter(|&&w| w > l).count());
    write_json(
        &dir.join("sidf.json"),
        &json!({
            "element": label,
            "gamma": gamma,
            "omega_min_rad_s": wmin,
            "omega_max_rad_s": wmax,
            "points": args.points,
            "rho_s": rho,
            "validity_limit_rad_s": limit,
            "points_above_validity_limit": above,
            "magnitude_spread_dB": (!finite.is_empty()).then_some(spread),
            "flagged": n_flagged,
        }),
    )?;

    let mut lines = vec![format!(
        "sidf {label}: {} points, magnitude spread {:.3} dB",
        grid.len(),
        spread
    )];
    if let (Some(l), Some(n)) = (limit, above) {
        lines.push(format!(
            "validity limit pi/rho = {l:.4} rad/s; {n} points lie above it"
        ));
    }
    lines.push(format!("wrote {}", dir.join("sidf.csv").display()));
    Ok(Report {
        lines,
        flagged: n_flagged,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<Report, CliError> {
    let mut cfg = load(&args.system)?;
    if let Some(r) = &args.reference {
        cfg.reference = Some(config::parse_reference_flag(r)?);
    }
    if let Some(a) = &args.amplitude {
        cfg.amplitude = Some(a.clone());
    }
    if let Some(d) = &args.duration {
        cfg.duration = Some(d.clone());
    }
    let system = System::from_config(&cfg)?;
    let (reference, f_ref) = config::resolve_reference(&cfg, DEFAULT_AMPLITUDE)?;
    let default_duration = f_ref.map_or(2.0, |f| (20.0 / f).max(2.0));
    let duration = config::resolve_duration(&cfg, default_duration)?;

    let LoopSetup {
        plant,
        mut controller,
        quantizer,
        noise,
    } = system.loop_setup()?;
    let sim = SimConfig::new(duration, reference)
        .with_quantizer(quantizer)
        .with_noise(noise);
    let trace = simulate_closed_loop(&plant, &mut controller, &sim)?;

    let dir = out_dir(&args.system.out)?;
    let mut is_reset = vec![false; trace.len()];
    for &k in &trace.reset_events {
        if let Some(r) = is_reset.get_mut(k) {
            *r = true;
        }
    }
    write_table(
        dir.join("trace.csv"),
        &["t", "r", "e", "u", "y", "y_q", "reset"],
        (0..trace.len()).map(|i| {
            vec![
                Some(trace.t[i]),
                Some(trace.r[i]),
                Some(trace.e[i]),
                Some(trace.u[i]),
                Some(trace.y[i]),
                Some(trace.y_q[i]),
                Some(if is_reset[i] { 1.0 } else { 0.0 }),
            ]
        }),
    )?;

    // resets per reference period, over the final five periods when possible
    let per_period = f_ref.map(|f| {
        let period = (system.fs / f).round() as usize;
        let periods = (trace.len() / period.max(1)).clamp(1, 5);
        let start = trace.len().saturating_sub(periods * period);
        trace.resets_in(start, trace.len()) as f64 / periods as f64
    });
    let tr = system.time_regularization()?;
    write_json(
        &dir.join("trace.json"),
        &json!({
            "system": system,
            "rho_samples": tr.rho_samples,
            "reference": reference,
            "reference_f_Hz": f_ref,
            "duration_s": duration,
            "samples": trace.len(),
            "resets": trace.reset_events.len(),
            "resets_per_period": per_period,
            "diverged": trace.diverged,
            "max_abs_error": trace.e.iter().fold(0.0f64, |m, e| m.max(e.abs())),
        }),
    )?;
    if trace.diverged {
        return Err(CliError::Numeric(format!(
            "simulation diverged after {} samples; partial trace in {}",
            trace.len(),
            dir.display()
        )));
    }
    let mut lines = vec![format!(
        "simulated {} samples, {} resets",
        trace.len(),
        trace.reset_events.len()
    )];
    if let Some(p) = per_period {
        lines.push(format!("resets per period (final periods): {p:.2}"));
    }
    lines.push(format!("wrote {}", dir.join("trace.csv").display()));
    Ok(Report { lines, flagged: 0 })
}

pub fn ssigma(args: &SsigmaArgs) -> Result<Report, CliError> {
    let mut cfg = load(&args.system)?;
    apply_grid(&mut cfg, &args.grid);
    let system = System::from_config(&cfg)?;
    let grid = config::resolve_grid(&cfg)?;
    let amp = config::amplitude_policy(&cfg, DEFAULT_AMPLITUDE)?;
    let policy = config::steady_state();
    let setup = system.loop_setup()?;

    let std_setup = setup.with_time_regularization(TimeRegularization::none());
    let standard = s_sigma(&std_setup, &grid, &amp, &policy, "standard")?;
    let ideal = s_sigma(&std_setup.without_quantizer(), &grid, &amp, &policy, "ideal")?;
    let tr_curve = match system.tr {
        Some(_) => Some(s_sigma(&setup, &grid, &amp, &policy, "tr")?),
        None => None,
    };

    let dir = out_dir(&args.system.out)?;
    let mut curves = vec![
        write_sigma(dir, "ssigma_standard", &standard)?,
        write_sigma(dir, "ssigma_ideal", &ideal)?,
    ];
    let mut n_flagged = flagged(&standard) + flagged(&ideal);
    if let Some(c) = &tr_curve {
        curves.push(write_sigma(dir, "ssigma_tr", c)?);
        n_flagged += flagged(c);
    }
    let band = improvement_band(&standard, tr_curve.as_ref().unwrap_or(&standard), &ideal)?;
    let a = amp.at(grid[0]);
    let floor = system.quantizer.map(|q| quantization_floor(q.q, a));
    write_json(
        &dir.join("summary.json"),
        &json!({
            "system": system,
            "amplitude_m": a,
            "quantization_floor_dB": floor,
            "curves": curves,
            "band": band,
        }),
    )?;

    let mut lines = vec![format!("swept {} frequencies", grid.len())];
    if let Some(f) = floor {
        lines.push(format!("quantization floor {f:.2} dB"));
    }
    match band {
        Some(b) => lines.push(format!(
            "degraded band {:.3}-{:.3} Hz, worst {:.3} Hz (+{:.2} dB), max gain {:.2} dB",
            b.f_lo, b.f_hi, b.f_worst, b.worst_excess_db, b.max_gain_db
        )),
        None => lines.push("no degraded band".into()),
    }
    Ok(Report {
        lines,
        flagged: n_flagged,
    })
}

pub fn sweep_ks(args: &KSweepArgs) -> Result<Report, CliError> {
    let mut cfg = load(&args.system)?;
    apply_grid(&mut cfg, &args.grid);
    if !args.list.is_empty() {
        cfg.ks = Some(args.list.clone());
    }
    let ks = cfg.ks.clone().unwrap_or_default();
    if ks.is_empty() {
        return Err(CliError::config("empty k list (use --list 1,1.5,2.5)"));
    }
    let system = System::from_config(&cfg)?;
    let grid = config::resolve_grid(&cfg)?;
    let amp = config::amplitude_policy(&cfg, DEFAULT_AMPLITUDE)?;
    let setup = system.loop_setup()?;
    let sweep = sweep_k(&setup, system.fc_hz, &ks, &grid, &amp, &config::steady_state())?;

    let dir = out_dir(&args.system.out)?;
    let mut curves = vec![
        write_sigma(dir, "ssigma_standard", &sweep.standard)?,
        write_sigma(dir, "ssigma_ideal", &sweep.ideal)?,
    ];
    let mut n_flagged = flagged(&sweep.standard) + flagged(&sweep.ideal);
    for (k, c) in ks.iter().zip(&sweep.curves) {
        curves.push(write_sigma(dir, &format!("ssigma_k={k}"), c)?);
        n_flagged += flagged(c);
    }
    write_json(
        &dir.join("summary.json"),
        &json!({
            "system": system,
            "amplitude_m": amp.at(grid[0]),
            "curves": curves,
            "k": sweep.summary,
        }),
    )?;
    let mut lines = vec!["k      rho_ms   peak_dB  max_gain_dB".to_string()];
    for s in &sweep.summary {
        lines.push(format!(
            "{:<6} {:<8.4} {:<8} {}",
            s.k,
            s.rho * 1e3,
            s.peak_db.map_or("-".into(), |p| format!("{p:.2}")),
            s.band.map_or("-".into(), |b| format!("{:.2}", b.max_gain_db)),
        ));
    }
    Ok(Report {
        lines,
        flagged: n_flagged,
    })
}

pub fn cpsd_sweep(args: &CpsdArgs) -> Result<Report, CliError> {
    let mut cfg = load(&args.system)?;
    if let Some(r) = &args.reference {
        cfg.reference = Some(config::parse_reference_flag(r)?);
    }
    if let Some(a) = &args.amplitude {
        cfg.amplitude = Some(a.clone());
    }
    if let Some(d) = &args.duration {
        cfg.duration = Some(d.clone());
    }
    if !args.list.is_empty() {
        cfg.ks = Some(args.list.clone());
    }
    let ks = cfg.ks.clone().unwrap_or_else(|| vec![2.5, 1.0]);
    let system = System::from_config(&cfg)?;
    let (reference, _) = config::resolve_reference(&cfg, DEFAULT_AMPLITUDE)?;
    let duration = config::resolve_duration(&cfg, 10.0)?;
    let setup = system.loop_setup()?;

    let mut runs = vec![("standard".to_string(), TimeRegularization::none())];
    for &k in &ks {
        runs.push((
            format!("k={k}"),
            TimeRegularization::from_bandwidth(system.fc_hz, k, system.fs)?,
        ));
    }
    let dir = out_dir(&args.system.out)?;
    let mut results = Vec::new();
    let mut lines = Vec::new();
    for (label, tr) in runs {
        let mut s = setup.with_time_regularization(tr);
        let sim = SimConfig::new(duration, reference)
            .with_quantizer(s.quantizer)
            .with_noise(s.noise);
        let trace = simulate_closed_loop(&s.plant, &mut s.controller, &sim)?;
        if trace.diverged {
            return Err(CliError::Numeric(format!("{label}: simulation diverged")));
        }
        let c = cpsd(&trace.e, system.fs)?;
        let file = format!("cpsd_{label}.csv");
        write_table(
            dir.join(&file),
            &["f_Hz", "psd", "cpsd"],
            (0..c.f_hz.len()).map(|i| vec![Some(c.f_hz[i]), Some(c.psd[i]), Some(c.cumulative[i])]),
        )?;
        let mean_square = trace.e.iter().map(|e| e * e).sum::<f64>() / trace.e.len() as f64;
        lines.push(format!(
            "{label}: final CPSD {:.4e}, time-domain mean square {:.4e}",
            c.total(),
            mean_square
        ));
        results.push(json!({
            "label": label,
            "file": file,
            "rho_s": tr.rho,
            "total": c.total(),
            "mean_square": mean_square,
        }));
    }
    let reference = match reference {
        Reference::Zero => json!("zero"),
        r => json!(r),
    };
    write_json(
        &dir.join("summary.json"),
        &json!({
            "system": system,
            "reference": reference,
            "duration_s": duration,
            "runs": results,
        }),
    )?;
    Ok(Report { lines, flagged: 0 })
}

pub fn stability(args: &SystemArgs) -> Result<Report, CliError> {
    let cfg = load(args)?;
    let system = System::from_config(&cfg)?;
    let plant = system.plant.model();
    let element = system.controller.element()?;
    let opts = SearchOptions::default();
    let verdict = assess(&plant, &element, &opts)?;

    let (summary, report) = match &verdict {
        Verdict::Linear { hurwitz } => {
            let text = if *hurwitz {
                "linear loop (identity resets): Hurwitz, stable"
            } else {
                "base loop unstable"
            };
            (text.to_string(), json!({ "verdict": "linear", "hurwitz": hurwitz }))
        }
        Verdict::QuadraticallyStable(cert) => {
            let check = reverify(&plant, &element, cert, &opts.dense_grid())?;
            let p: Vec<Vec<f64>> = cert.p_rho.row_iter().map(|r| r.iter().copied().collect()).collect();
            (
                format!(
                    "certificate found: beta = {:?}, P_rho = {:?}, margin = {:.4e}",
                    cert.beta, p, cert.spr_margin
                ),
                json!({
                    "verdict": "certificate found",
                    "beta": cert.beta,
                    "p_rho": p,
                    "spr_margin": cert.spr_margin,
                    "dense_recheck": {
                        "passed": check.passed(),
                        "spr_margin": check.spr.margin,
                        "partial_reset_max_eig": check.partial_reset_max_eig,
                        "p_rho_min_eig": check.p_rho_min_eig,
                    },
                }),
            )
        }
        Verdict::Inconclusive(reason) => (reason.to_string(), json!({ "verdict": reason.to_string() })),
    };
    let dir = out_dir(&args.out)?;
    write_json(
        &dir.join("stability.json"),
        &json!({ "system": system, "result": report }),
    )?;
    Ok(Report {
        lines: vec![summary],
        flagged: 0,
    })
}
