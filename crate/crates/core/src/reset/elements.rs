//! Continuous-time descriptions of reset elements and the CgLp-PID.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::controller::{ResetController, TimeRegularization};
use crate::error::{invalid, Error, Result};
use crate::linear::{
    discretize, make_transfer_function, series, series_all, Discretization, Domain, StateSpace,
};
use crate::scalar::{lit, Real};

/// Continuous base-linear system plus a diagonal reset map.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetElement<T: Real> {
    base: StateSpace<T>,
    reset_diag: Vec<T>,
    selector: Vec<bool>,
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if gamma >= -T::one() && gamma <= T::one() {
        Ok(())
    } else {
        Err(invalid("gamma", format!("{gamma} outside [-1, 1]")))
    }
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} must be positive")))
    }
}

impl<T: Real> ResetElement<T> {
    /// `selector[i]` marks state `i` as resetting; its post-reset value is
    /// `gamma[i] * x[i]`. Non-selected entries of the diagonal are forced to 1.
    pub fn new(base: StateSpace<T>, selector: Vec<bool>, gamma: T) -> Result<Self> {
        if !base.domain().is_continuous() {
            return Err(Error::WrongDomain {
                expected: "continuous",
            });
        }
        if !base.is_siso() {
            return Err(Error::Dimension("reset elements are SISO".into()));
        }
        if selector.len() != base.n_states() {
            return Err(Error::Dimension(format!(
                "selector has {} entries for {} states",
                selector.len(),
                base.n_states()
            )));
        }
        check_gamma(gamma)?;
        let reset_diag = selector
            .iter()
            .map(|&s| if s { gamma } else { T::one() })
            .collect();
        Ok(Self {
            base,
            reset_diag,
            selector,
        })
    }

    pub fn base(&self) -> &StateSpace<T> {
        &self.base
    }

    /// Diagonal of the reset matrix.
    pub fn reset_diag(&self) -> &[T] {
        &self.reset_diag
    }

    pub fn a_rho(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.reset_diag))
    }

    pub fn selector(&self) -> &[bool] {
        &self.selector
    }

    pub fn n_reset(&self) -> usize {
        self.selector.iter().filter(|s| **s).count()
    }

    /// Same element with `A_rho = I` (its base-linear behaviour).
    pub fn linearized(&self) -> Self {
        Self {
            base: self.base.clone(),
            reset_diag: vec![T::one(); self.reset_diag.len()],
            selector: self.selector.clone(),
        }
    }

    /// Same base and selector, new partial-reset factor.
    pub fn with_gamma(&self, gamma: T) -> Result<Self> {
        Self::new(self.base.clone(), self.selector.clone(), gamma)
    }

    /// Tustin-discretized controller running at `fs` Hz.
    pub fn controller(&self, fs: T, tr: TimeRegularization<T>) -> Result<ResetController<T>> {
        ResetController::from_element(self, fs, tr)
    }
}

/// Clegg integrator: `A_r = 0, B_r = 1, C_r = 1, D_r = 0`, full reset.
pub fn clegg<T: Real>() -> ResetElement<T> {
    let base = make_transfer_function(&[T::one()], &[T::one(), T::zero()])
        .expect("integrator is proper");
    ResetElement::new(base, vec![true], T::zero()).expect("valid clegg")
}

/// First-order reset low-pass filter with corner `wr` and partial reset `gamma`.
pub fn gfore<T: Real>(wr: T, gamma: T) -> Result<ResetElement<T>> {
    check_positive("wr", wr)?;
    check_gamma(gamma)?;
    let m = |v: T| DMatrix::from_element(1, 1, v);
    let base = StateSpace::new(m(-wr), m(wr), m(T::one()), m(T::zero()), Domain::Continuous)?;
    ResetElement::new(base, vec![true], gamma)
}

/// Second-order reset low-pass filter, damping `beta_r`, `A_rho = gamma I`.
pub fn gsore<T: Real>(wr: T, beta_r: T, gamma: T) -> Result<ResetElement<T>> {
    check_positive("wr", wr)?;
    check_positive("beta_r", beta_r)?;
    check_gamma(gamma)?;
    let two = lit::<T>(2.0);
    let a = DMatrix::from_row_slice(2, 2, &[T::zero(), T::one(), -wr * wr, -two * beta_r * wr]);
    let b = DMatrix::from_row_slice(2, 1, &[T::zero(), wr * wr]);
    let c = DMatrix::from_row_slice(1, 2, &[T::one(), T::zero()]);
    let d = DMatrix::zeros(1, 1);
    let base = StateSpace::new(a, b, c, d, Domain::Continuous)?;
    ResetElement::new(base, vec![true, true], gamma)
}

/// First-order CgLp: reset lag at `wra` followed by a linear lead `wr -> wf`.
/// Only the lag state resets.
pub fn cglp_first_order<T: Real>(wra: T, wr: T, wf: T, gamma: T) -> Result<ResetElement<T>> {
    check_positive("wra", wra)?;
    if !(wra <= wr && wr < wf) {
        return Err(invalid("cglp", format!("need wra <= wr < wf, got {wra}, {wr}, {wf}")));
    }
    check_gamma(gamma)?;
    let ratio = wf / wr;
    let a = DMatrix::from_row_slice(2, 2, &[-wra, T::zero(), wf, -wf]);
    let b = DMatrix::from_row_slice(2, 1, &[wra, T::zero()]);
    let c = DMatrix::from_row_slice(1, 2, &[ratio, T::one() - ratio]);
    let d = DMatrix::zeros(1, 1);
    let base = StateSpace::new(a, b, c, d, Domain::Continuous)?;
    ResetElement::new(base, vec![true, false], gamma)
}

/// Parameters of `K (1 + wi/s) (s/wd + 1)/(s/wt + 1) * CgLp(wra, wr, wf, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgLpPidParams<T> {
    pub k: T,
    pub wc: T,
    pub wi: T,
    pub wd: T,
    pub wt: T,
    pub wra: T,
    pub wr: T,
    pub wf: T,
    pub gamma: T,
}

impl<T: Real> CgLpPidParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wc", self.wc),
            ("wi", self.wi),
            ("wd", self.wd),
            ("wt", self.wt),
            ("wra", self.wra),
            ("wr", self.wr),
            ("wf", self.wf),
        ] {
            check_positive(name, v)?;
        }
        if !self.k.is_finite() || self.k == T::zero() {
            return Err(invalid("k", "gain must be finite and nonzero"));
        }
        if !(self.wd < self.wc && self.wc < self.wt) {
            return Err(invalid("wd/wc/wt", "need wd < wc < wt"));
        }
        if !(self.wra <= self.wr && self.wr < self.wf) {
            return Err(invalid("wra/wr/wf", "need wra <= wr < wf"));
        }
        check_gamma(self.gamma)
    }

    /// `K (1 + wi/s)`, one state.
    pub fn pi(&self) -> Result<StateSpace<T>> {
        make_transfer_function(&[self.k, self.k * self.wi], &[T::one(), T::zero()])
    }

    /// `(s/wd + 1)/(s/wt + 1)`, one state.
    pub fn lead(&self) -> Result<StateSpace<T>> {
        make_transfer_function(
            &[T::one() / self.wd, T::one()],
            &[T::one() / self.wt, T::one()],
        )
    }

    /// The linear PID part `K (1 + wi/s) (s/wd + 1)/(s/wt + 1)`.
    pub fn pid(&self) -> Result<StateSpace<T>> {
        series(&self.pi()?, &self.lead()?)
    }

    pub fn cglp(&self) -> Result<ResetElement<T>> {
        cglp_first_order(self.wra, self.wr, self.wf, self.gamma)
    }

    /// Full controller, states ordered `[PI; D; CgLp lag; CgLp lead]`.
    pub fn element(&self) -> Result<ResetElement<T>> {
        self.validate()?;
        let cglp = self.cglp()?;
        let base = series_all(&[&self.pi()?, &self.lead()?, cglp.base()])?;
        let mut selector = vec![false; 2];
        selector.extend_from_slice(cglp.selector());
        ResetElement::new(base, selector, self.gamma)
    }

    /// Continuous base-linear controller (reset disabled).
    pub fn base_linear(&self) -> Result<StateSpace<T>> {
        Ok(self.element()?.base().clone())
    }

    pub fn with_gamma(&self, gamma: T) -> Self {
        Self { gamma, ..*self }
    }

    pub fn with_gain_scale(&self, scale: T) -> Self {
        Self {
            k: self.k * scale,
            ..*self
        }
    }
}

/// Discrete CgLp-PID at `fs` Hz and its Tustin base-linear model.
pub fn cglp_pid<T: Real>(
    params: &CgLpPidParams<T>,
    fs: T,
) -> Result<(ResetController<T>, StateSpace<T>)> {
    params.validate()?;
    check_positive("fs", fs)?;
    let limit = lit::<T>(2.0) * fs;
    for w in [params.wc, params.wi, params.wd, params.wt, params.wra, params.wr, params.wf] {
        if w >= limit {
            return Err(Error::TustinSingular);
        }
    }
    let element = params.element()?;
    let ctrl = element.controller(fs, TimeRegularization::none())?;
    let twin = discretize(element.base(), T::one() / fs, Discretization::Tustin)?;
    Ok((ctrl, twin))
}
