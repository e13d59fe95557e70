//! Quadratic stability of the reset loop through the H-beta condition.
//!
//! The base loop (controller with resets disabled, unit negative feedback,
//! zero reference) is written with states ordered `[plant; non-reset; reset]`.
//! For a candidate `beta` and `P_rho` the transfer
//!
//! ```text
//! H(s) = [beta*Cp, 0, P_rho] (sI - A_cl)^-1 [0; 0; I]
//! ```
//!
//! must be strictly positive real, and `A_rho P_rho A_rho - P_rho` must be
//! negative semidefinite. Both are sufficient conditions, so a failed search
//! is inconclusive rather than a proof of instability.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linear::{check_grid, is_hurwitz, Domain, StateSpace};
use crate::reset::ResetElement;
use crate::scalar::{cabs, lit, logspace, Real};

/// Matrix-valued frequency response with the data needed for the
/// high-frequency limit of an SPR check.
#[derive(Debug, Clone)]
pub struct MatrixResponseCurve<T: Real> {
    omega: Vec<T>,
    values: Vec<Option<DMatrix<Complex<T>>>>,
    limit_ok: bool,
}

impl<T: Real> MatrixResponseCurve<T> {
    /// Evaluates a square continuous model on `grid`.
    pub fn from_state_space(model: &StateSpace<T>, grid: &[T]) -> Result<Self> {
        check_grid(grid)?;
        if !model.domain().is_continuous() {
            return Err(Error::WrongDomain { expected: "continuous" });
        }
        if model.n_inputs() != model.n_outputs() {
            return Err(Error::Dimension("SPR needs a square transfer matrix".into()));
        }
        let values = grid.iter().map(|&w| model.response_matrix(w)).collect();
        Ok(Self {
            omega: grid.to_vec(),
            values,
            limit_ok: high_frequency_ok(model),
        })
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn values(&self) -> &[Option<DMatrix<Complex<T>>>] {
        &self.values
    }

    /// Whether the `omega -> infinity` limit keeps the Hermitian part positive.
    pub fn limit_ok(&self) -> bool {
        self.limit_ok
    }
}

/// Result of an SPR evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprVerdict<T> {
    pub spr: bool,
    /// Smallest eigenvalue of the Hermitian part seen on the grid.
    pub margin: T,
}

/// Smallest eigenvalue of `(H + H^*) / 2`.
fn hermitian_min_eig<T: Real>(h: &DMatrix<Complex<T>>) -> T {
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    let herm = (h + h.adjoint()) * Complex::new(lit::<T>(0.5), T::zero());
    herm.symmetric_eigenvalues()
        .iter()
        .fold(T::max_value().unwrap(), |acc, &v| acc.min(v))
}

fn sym_min_eig<T: Real>(m: &DMatrix<T>) -> T {
    let s = (m + m.transpose()) * lit::<T>(0.5);
    s.symmetric_eigenvalues()
        .iter()
        .fold(T::max_value().unwrap(), |acc, &v| acc.min(v))
}

/// High-frequency behaviour of `Re H(jw)`:
/// `Herm(D) + Herm(CB / jw) - Herm(CAB) / w^2 + ...`.
fn high_frequency_ok<T: Real>(model: &StateSpace<T>) -> bool {
    let d = model.d();
    if d.nrows() > 0 && sym_min_eig(d) > T::zero() {
        return true;
    }
    let scale = d.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    if d.iter().any(|v| v.abs() > T::epsilon() * scale * lit(64.0)) {
        // feedthrough present but not positive definite
        return false;
    }
    if model.n_states() == 0 {
        return false;
    }
    let cb = model.c() * model.b();
    let skew = &cb - cb.transpose();
    let cb_scale = cb.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if skew.iter().any(|v| v.abs() > lit::<T>(1e-9) * cb_scale.max(T::one())) {
        return false;
    }
    let cab = model.c() * model.a() * model.b();
    sym_min_eig(&(-cab)) > T::zero()
}

/// SPR on the grid plus the high-frequency limit.
pub fn is_spr<T: Real>(curve: &MatrixResponseCurve<T>) -> SprVerdict<T> {
    let mut margin = T::max_value().unwrap();
    let mut bounded = true;
    for v in &curve.values {
        match v {
            Some(h) => margin = margin.min(hermitian_min_eig(h)),
            None => bounded = false,
        }
    }
    SprVerdict {
        spr: bounded && curve.limit_ok && margin > T::zero() && !curve.values.is_empty(),
        margin,
    }
}

/// Base closed loop with states ordered `[plant; non-reset; reset]`.
#[derive(Debug, Clone)]
pub struct ClosedLoop<T: Real> {
    a: DMatrix<T>,
    n_p: usize,
    n_nr: usize,
    n_r: usize,
    cp: DMatrix<T>,
}

impl<T: Real> ClosedLoop<T> {
    /// Interconnects a strictly proper SISO plant with the base controller.
    ///
    /// The reset pattern is only used to order states; stability of the
    /// result is checked by [`ClosedLoop::is_hurwitz`].
    pub fn new(plant: &StateSpace<T>, ctrl_base: &StateSpace<T>, selector: &[bool]) -> Result<Self> {
        if !plant.domain().is_continuous() || !ctrl_base.domain().is_continuous() {
            return Err(Error::WrongDomain { expected: "continuous" });
        }
        if !plant.is_siso() || !ctrl_base.is_siso() {
            return Err(Error::Dimension("H-beta check expects SISO plant and controller".into()));
        }
        if plant.d()[(0, 0)] != T::zero() {
            return Err(Error::Dimension("plant must be strictly proper".into()));
        }
        let nc = ctrl_base.n_states();
        if selector.len() != nc {
            return Err(Error::Dimension(format!(
                "selector has {} entries, controller has {nc} states",
                selector.len()
            )));
        }
        let order: Vec<usize> = (0..nc)
            .filter(|&i| !selector[i])
            .chain((0..nc).filter(|&i| selector[i]))
            .collect();
        let n_r = selector.iter().filter(|&&s| s).count();
        let ar = DMatrix::from_fn(nc, nc, |i, j| ctrl_base.a()[(order[i], order[j])]);
        let br = DMatrix::from_fn(nc, 1, |i, _| ctrl_base.b()[(order[i], 0)]);
        let cr = DMatrix::from_fn(1, nc, |_, j| ctrl_base.c()[(0, order[j])]);
        let dr = ctrl_base.d()[(0, 0)];
        let (ap, bp, cp) = (plant.a(), plant.b(), plant.c());
        let np = plant.n_states();
        let n = np + nc;

        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (np, np)).copy_from(&(ap - bp * cp * dr));
        a.view_mut((0, np), (np, nc)).copy_from(&(bp * &cr));
        a.view_mut((np, 0), (nc, np)).copy_from(&(-(&br * cp)));
        a.view_mut((np, np), (nc, nc)).copy_from(&ar);

        let mut cp_full = DMatrix::zeros(1, n);
        cp_full.view_mut((0, 0), (1, np)).copy_from(cp);
        Ok(Self {
            a,
            n_p: np,
            n_nr: nc - n_r,
            n_r,
            cp: cp_full,
        })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn n_plant(&self) -> usize {
        self.n_p
    }
    pub fn n_non_reset(&self) -> usize {
        self.n_nr
    }
    pub fn n_reset(&self) -> usize {
        self.n_r
    }
    pub fn is_hurwitz(&self) -> bool {
        is_hurwitz(&self.a)
    }

    fn input(&self) -> DMatrix<T> {
        let n = self.a.nrows();
        let mut b = DMatrix::zeros(n, self.n_r);
        for i in 0..self.n_r {
            b[(n - self.n_r + i, i)] = T::one();
        }
        b
    }

    fn output(&self, beta: &[T], p_rho: &DMatrix<T>) -> DMatrix<T> {
        let n = self.a.nrows();
        let mut c = DMatrix::zeros(self.n_r, n);
        for i in 0..self.n_r {
            for j in 0..n {
                c[(i, j)] = beta[i] * self.cp[(0, j)];
            }
        }
        c.view_mut((0, n - self.n_r), (self.n_r, self.n_r))
            .copy_from(p_rho);
        c
    }

    /// `H_beta` as a state-space model.
    pub fn hbeta_model(&self, beta: &[T], p_rho: &DMatrix<T>) -> Result<StateSpace<T>> {
        if beta.len() != self.n_r || p_rho.shape() != (self.n_r, self.n_r) {
            return Err(Error::Dimension(format!(
                "beta/P_rho must match {} reset states",
                self.n_r
            )));
        }
        StateSpace::new(
            self.a.clone(),
            self.input(),
            self.output(beta, p_rho),
            DMatrix::zeros(self.n_r, self.n_r),
            Domain::Continuous,
        )
    }
}

/// Evaluates `H_beta` on `grid`. Fails with [`Error::BaseLoopUnstable`]
/// before any evaluation when the base loop is not Hurwitz.
pub fn build_hbeta<T: Real>(
    plant: &StateSpace<T>,
    ctrl_base: &StateSpace<T>,
    selector: &[bool],
    beta: &[T],
    p_rho: &DMatrix<T>,
    grid: &[T],
) -> Result<MatrixResponseCurve<T>> {
    let cl = ClosedLoop::new(plant, ctrl_base, selector)?;
    if !cl.is_hurwitz() {
        return Err(Error::BaseLoopUnstable);
    }
    MatrixResponseCurve::from_state_space(&cl.hbeta_model(beta, p_rho)?, grid)
}

/// Eigenvalues of `A_rho P A_rho - P`, ascending.
pub fn partial_reset_eigenvalues<T: Real>(a_rho: &DMatrix<T>, p_rho: &DMatrix<T>) -> Vec<T> {
    let m = a_rho * p_rho * a_rho - p_rho;
    let s = (&m + m.transpose()) * lit::<T>(0.5);
    let mut ev: Vec<T> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate<T: Real> {
    pub beta: Vec<T>,
    pub p_rho: DMatrix<T>,
    pub spr_margin: T,
}

/// Search settings. The defaults give a grid with 400 points per decade on
/// `[1e-2, 1e6]` rad/s and `beta` in `{0} U +-logspace(1e-3, beta_max, 61)`.
#[derive(Debug, Clone)]
pub struct SearchOptions<T> {
    pub w_min: T,
    pub w_max: T,
    pub points_per_decade: usize,
    pub beta_max: T,
    pub beta_min: T,
    pub magnitudes: usize,
    /// Extra randomized candidates when there are two reset states.
    pub random_candidates: usize,
    pub seed: u64,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            w_min: lit(1e-2),
            w_max: lit(1e6),
            points_per_decade: 400,
            beta_max: lit(1e3),
            beta_min: lit(1e-3),
            magnitudes: 61,
            random_candidates: 2000,
            seed: 0,
        }
    }
}

impl<T: Real> SearchOptions<T> {
    pub fn grid(&self) -> Vec<T> {
        log_grid(self.w_min, self.w_max, self.points_per_decade)
    }

    /// Same range at ten times the density.
    pub fn dense_grid(&self) -> Vec<T> {
        log_grid(self.w_min, self.w_max, self.points_per_decade * 10)
    }

    fn beta_values(&self) -> Vec<T> {
        let mags = logspace(self.beta_min, self.beta_max, self.magnitudes);
        std::iter::once(T::zero())
            .chain(mags.iter().copied())
            .chain(mags.iter().map(|&m| -m))
            .collect()
    }
}

fn log_grid<T: Real>(lo: T, hi: T, per_decade: usize) -> Vec<T> {
    let decades = (hi / lo).log10().to_f64_lossy();
    let n = (decades * per_decade as f64).round() as usize + 1;
    logspace(lo, hi, n.max(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotFoundReason {
    BaseLoopUnstable,
    /// Every candidate failed; the condition is only sufficient.
    NoCandidate { tried: usize },
}

impl std::fmt::Display for NotFoundReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::BaseLoopUnstable => write!(f, "base loop unstable"),
            Self::NoCandidate { tried } => {
                write!(f, "inconclusive: no certificate among {tried} candidates")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome<T: Real> {
    Found(StabilityCertificate<T>),
    NotFound {
        reason: NotFoundReason,
        /// Best SPR margin reached by any candidate, when any was evaluated.
        best_margin: Option<T>,
    },
}

impl<T: Real> SearchOutcome<T> {
    pub fn certificate(&self) -> Option<&StabilityCertificate<T>> {
        match self {
            Self::Found(c) => Some(c),
            Self::NotFound { .. } => None,
        }
    }
}

/// Resolvent data shared by every candidate on one grid.
struct Basis<T: Real> {
    /// `Cp (jwI - A)^-1 B0`, 1 x n_r.
    plant: Vec<DMatrix<Complex<T>>>,
    /// Reset rows of `(jwI - A)^-1 B0`, n_r x n_r.
    reset: Vec<DMatrix<Complex<T>>>,
    /// `Cp A B0` and the reset rows of `A B0`, for the limit check.
    cab_plant: DMatrix<T>,
    cab_reset: DMatrix<T>,
}

impl<T: Real> Basis<T> {
    fn new(cl: &ClosedLoop<T>, grid: &[T]) -> Option<Self> {
        let n = cl.a.nrows();
        let nr = cl.n_r;
        let b0 = cl.input();
        let ac = cl.a.map(|v| Complex::new(v, T::zero()));
        let bc = b0.map(|v| Complex::new(v, T::zero()));
        let cpc = cl.cp.map(|v| Complex::new(v, T::zero()));
        let rows: Vec<_> = grid
            .par_iter()
            .map(|&w| {
                let mut m = -&ac;
                for i in 0..n {
                    m[(i, i)] += Complex::new(T::zero(), w);
                }
                let x = m.lu().solve(&bc)?;
                let plant = &cpc * &x;
                let reset = x.rows(n - nr, nr).into_owned();
                if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return None;
                }
                Some((plant, reset))
            })
            .collect();
        let mut plant = Vec::with_capacity(grid.len());
        let mut reset = Vec::with_capacity(grid.len());
        for r in rows {
            let (p, q) = r?;
            plant.push(p);
            reset.push(q);
        }
        let ab = &cl.a * &b0;
        Some(Self {
            plant,
            reset,
            cab_plant: &cl.cp * &ab,
            cab_reset: ab.rows(n - nr, nr).into_owned(),
        })
    }

    fn hbeta_at(&self, k: usize, beta: &[T], p_rho: &DMatrix<T>) -> DMatrix<Complex<T>> {
        let nr = beta.len();
        let pc = p_rho.map(|v| Complex::new(v, T::zero()));
        let mut h = &pc * &self.reset[k];
        for i in 0..nr {
            for j in 0..nr {
                h[(i, j)] += self.plant[k][(0, j)] * Complex::new(beta[i], T::zero());
            }
        }
        h
    }

    /// `C0 B0 = P_rho` is symmetric, so only `-C0 A B0` matters at infinity.
    fn limit_ok(&self, beta: &[T], p_rho: &DMatrix<T>) -> bool {
        let nr = beta.len();
        let mut cab = p_rho * &self.cab_reset;
        for i in 0..nr {
            for j in 0..nr {
                cab[(i, j)] += beta[i] * self.cab_plant[(0, j)];
            }
        }
        sym_min_eig(&(-cab)) > T::zero()
    }

    /// Grid margin and the margin relative to `|H|`, both `-inf` when the
    /// high-frequency limit fails.
    fn margins(&self, beta: &[T], p_rho: &DMatrix<T>) -> (T, T) {
        let ninf = -T::max_value().unwrap();
        if !self.limit_ok(beta, p_rho) {
            return (ninf, ninf);
        }
        let mut m = T::max_value().unwrap();
        let mut rel = T::max_value().unwrap();
        for k in 0..self.plant.len() {
            let h = self.hbeta_at(k, beta, p_rho);
            let e = hermitian_min_eig(&h);
            m = m.min(e);
            let scale = h.iter().fold(T::zero(), |a, v| a.max(cabs(*v)));
            if scale > T::zero() {
                rel = rel.min(e / scale);
            }
        }
        (m, rel)
    }
}

fn rotation_spd<T: Real>(ratio: T, theta: T) -> DMatrix<T> {
    let (s, c) = theta.sin_cos();
    let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ratio, T::one()]));
    let p = &r * d * r.transpose();
    (&p + p.transpose()) * lit::<T>(0.5)
}

fn p_rho_candidates<T: Real>(n_r: usize) -> Vec<DMatrix<T>> {
    match n_r {
        // H-beta is homogeneous in (beta, P_rho), so P_rho = 1 loses nothing.
        1 => vec![DMatrix::from_element(1, 1, T::one())],
        _ => {
            let mut out = Vec::new();
            for ratio in logspace(lit::<T>(1e-2), lit(1e2), 9) {
                for i in 0..12 {
                    let theta = lit::<T>(std::f64::consts::PI * i as f64 / 12.0);
                    out.push(rotation_spd(ratio, theta));
                }
            }
            out
        }
    }
}

/// Searches for `(beta, P_rho)` certifying quadratic stability of the reset
/// loop formed by `plant` and `element`.
///
/// Time regularization is not an input: the verdict is defined on the
/// unregularized system and carries over unchanged.
pub fn search_certificate<T: Real>(
    plant: &StateSpace<T>,
    element: &ResetElement<T>,
    opts: &SearchOptions<T>,
) -> Result<SearchOutcome<T>> {
    let n_r = element.n_reset();
    if n_r == 0 || n_r > 2 {
        return Err(Error::Dimension(format!(
            "certificate search supports 1 or 2 reset states, got {n_r}"
        )));
    }
    let cl = ClosedLoop::new(plant, element.base(), element.selector())?;
    if !cl.is_hurwitz() {
        return Ok(SearchOutcome::NotFound {
            reason: NotFoundReason::BaseLoopUnstable,
            best_margin: None,
        });
    }
    let grid = opts.grid();
    let Some(basis) = Basis::new(&cl, &grid) else {
        return Ok(SearchOutcome::NotFound {
            reason: NotFoundReason::NoCandidate { tried: 0 },
            best_margin: None,
        });
    };
    let a_rho = reset_block(element);

    let betas = opts.beta_values();
    let mut candidates: Vec<(Vec<T>, DMatrix<T>)> = Vec::new();
    for p in p_rho_candidates::<T>(n_r) {
        if partial_reset_eigenvalues(&a_rho, &p).last().copied().unwrap_or(T::zero())
            > lit(1e-12)
        {
            continue;
        }
        if n_r == 1 {
            for &b in &betas {
                candidates.push((vec![b], p.clone()));
            }
        } else {
            candidates.push((vec![T::zero(), T::zero()], p.clone()));
        }
    }
    if n_r == 2 {
        let pool = candidates.iter().map(|c| c.1.clone()).collect::<Vec<_>>();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.random_candidates {
            let b = vec![
                betas[rng.gen_range(0..betas.len())],
                betas[rng.gen_range(0..betas.len())],
            ];
            let p = pool[rng.gen_range(0..pool.len())].clone();
            candidates.push((b, p));
        }
    }

    let tried = candidates.len();
    let scored: Vec<(Vec<T>, DMatrix<T>, T, T)> = candidates
        .into_par_iter()
        .map(|(b, p)| {
            let (m, rel) = basis.margins(&b, &p);
            (b, p, m, rel)
        })
        .collect();
    let best_margin = scored.iter().map(|c| c.2).fold(-T::max_value().unwrap(), |a, v| a.max(v));
    let mut feasible: Vec<_> = scored.into_iter().filter(|c| c.2 > T::zero()).collect();

    let pick = if feasible.is_empty() {
        None
    } else if n_r == 1 {
        // the feasible set is an interval in beta; its middle candidate keeps
        // away from both ends, where a denser grid could fail
        feasible.sort_by(|a, b| a.0[0].partial_cmp(&b.0[0]).unwrap());
        Some(feasible.swap_remove(feasible.len() / 2))
    } else {
        feasible
            .into_iter()
            .reduce(|x, y| if y.3 > x.3 { y } else { x })
    };

    Ok(match pick {
        Some((beta, p_rho, spr_margin, _)) => SearchOutcome::Found(StabilityCertificate {
            beta,
            p_rho,
            spr_margin,
        }),
        None => SearchOutcome::NotFound {
            reason: NotFoundReason::NoCandidate { tried },
            best_margin: Some(best_margin),
        },
    })
}

/// Exact set of `beta` (with `P_rho = 1`) passing every grid point and the
/// high-frequency limit, for a single reset state. `None` when empty.
///
/// Each constraint `Re(beta a_k + b_k) > 0` is affine in `beta`, so the set
/// is an open interval, possibly unbounded.
pub fn feasible_beta_interval<T: Real>(
    plant: &StateSpace<T>,
    element: &ResetElement<T>,
    grid: &[T],
) -> Result<Option<(T, T)>> {
    if element.n_reset() != 1 {
        return Err(Error::Dimension("beta interval needs exactly one reset state".into()));
    }
    check_grid(grid)?;
    let cl = ClosedLoop::new(plant, element.base(), element.selector())?;
    if !cl.is_hurwitz() {
        return Err(Error::BaseLoopUnstable);
    }
    let Some(basis) = Basis::new(&cl, grid) else {
        return Ok(None);
    };
    let inf = T::max_value().unwrap();
    let (mut lo, mut hi) = (-inf, inf);
    let mut cut = |a: T, b: T| {
        // a * beta + b > 0
        if a > T::zero() {
            lo = lo.max(-b / a);
        } else if a < T::zero() {
            hi = hi.min(-b / a);
        } else if !(b > T::zero()) {
            hi = -inf;
        }
    };
    for k in 0..grid.len() {
        cut(basis.plant[k][(0, 0)].re, basis.reset[k][(0, 0)].re);
    }
    // -(beta * CAB_p + CAB_r) > 0
    cut(-basis.cab_plant[(0, 0)], -basis.cab_reset[(0, 0)]);
    Ok((lo < hi).then_some((lo, hi)))
}

fn reset_block<T: Real>(element: &ResetElement<T>) -> DMatrix<T> {
    let diag: Vec<T> = element
        .selector()
        .iter()
        .zip(element.reset_diag())
        .filter(|(s, _)| **s)
        .map(|(_, &g)| g)
        .collect();
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

/// Outcome of re-checking a certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reverification<T> {
    pub spr: SprVerdict<T>,
    /// Largest eigenvalue of `A_rho P_rho A_rho - P_rho`.
    pub partial_reset_max_eig: T,
    pub p_rho_min_eig: T,
}

impl<T: Real> Reverification<T> {
    pub fn passed(&self) -> bool {
        self.spr.spr && self.partial_reset_max_eig <= lit(1e-12) && self.p_rho_min_eig > T::zero()
    }
}

/// Re-checks a certificate from scratch on `grid`.
pub fn reverify<T: Real>(
    plant: &StateSpace<T>,
    element: &ResetElement<T>,
    cert: &StabilityCertificate<T>,
    grid: &[T],
) -> Result<Reverification<T>> {
    let curve = build_hbeta(
        plant,
        element.base(),
        element.selector(),
        &cert.beta,
        &cert.p_rho,
        grid,
    )?;
    let a_rho = reset_block(element);
    let ev = partial_reset_eigenvalues(&a_rho, &cert.p_rho);
    Ok(Reverification {
        spr: is_spr(&curve),
        partial_reset_max_eig: ev.last().copied().unwrap_or(T::zero()),
        p_rho_min_eig: sym_min_eig(&cert.p_rho),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<T: Real> {
    /// Resets are identity maps; the verdict is the Hurwitz test.
    Linear { hurwitz: bool },
    QuadraticallyStable(StabilityCertificate<T>),
    Inconclusive(NotFoundReason),
}

impl<T: Real> Verdict<T> {
    pub fn is_stable(&self) -> bool {
        matches!(
            self,
            Verdict::Linear { hurwitz: true } | Verdict::QuadraticallyStable(_)
        )
    }
}

/// Full stability report: the linear shortcut when every reset factor is 1,
/// otherwise the certificate search.
pub fn assess<T: Real>(
    plant: &StateSpace<T>,
    element: &ResetElement<T>,
    opts: &SearchOptions<T>,
) -> Result<Verdict<T>> {
    if element.reset_diag().iter().all(|&g| g == T::one()) {
        let cl = ClosedLoop::new(plant, element.base(), element.selector())?;
        return Ok(Verdict::Linear {
            hurwitz: cl.is_hurwitz(),
        });
    }
    Ok(match search_certificate(plant, element, opts)? {
        SearchOutcome::Found(c) => Verdict::QuadraticallyStable(c),
        SearchOutcome::NotFound { reason, .. } => Verdict::Inconclusive(reason),
    })
}
