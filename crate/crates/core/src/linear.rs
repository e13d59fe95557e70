//! Dense LTI state-space models: construction, series composition,
//! frequency response and discretization.
//!
//! All systems handled here are small (a handful of states), so matrices are
//! dense and dynamically sized.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, carg, db, lit, Real};

/// Time domain of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain<T> {
    Continuous,
    /// Sampled at a fixed period `ts` (seconds).
    Discrete { ts: T },
}

impl<T: Real> Domain<T> {
    pub fn is_continuous(&self) -> bool {
        matches!(self, Domain::Continuous)
    }

    pub fn sample_time(&self) -> Option<T> {
        match *self {
            Domain::Continuous => None,
            Domain::Discrete { ts } => Some(ts),
        }
    }
}

/// `x' = A x + B u`, `y = C x + D u` (or the sampled analogue).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    domain: Domain<T>,
}

impl<T: Real> StateSpace<T> {
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
        domain: Domain<T>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A has {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} cols, A has {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if let Domain::Discrete { ts } = domain {
            if !(ts > T::zero()) || !ts.is_finite() {
                return Err(Error::InvalidSampleTime);
            }
        }
        Ok(Self { a, b, c, d, domain })
    }

    /// Static SISO gain with no states.
    pub fn gain(k: T, domain: Domain<T>) -> Self {
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: DMatrix::from_element(1, 1, k),
            domain,
        }
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }
    pub fn domain(&self) -> Domain<T> {
        self.domain
    }
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_siso(&self) -> bool {
        self.n_inputs() == 1 && self.n_outputs() == 1
    }

    /// Multiplies the output equation by `k`.
    pub fn scaled(&self, k: T) -> Self {
        let mut out = self.clone();
        out.c *= k;
        out.d *= k;
        out
    }

    /// Transfer matrix `C (pI - A)^-1 B + D` at an arbitrary complex point.
    /// Returns `None` when `pI - A` is numerically singular.
    pub fn eval_at(&self, p: Complex<T>) -> Option<DMatrix<Complex<T>>> {
        let cplx = |m: &DMatrix<T>| m.map(|v| Complex::new(v, T::zero()));
        let d = cplx(&self.d);
        let n = self.n_states();
        if n == 0 {
            return Some(d);
        }
        let mut m = cplx(&self.a).map(|v| -v);
        for i in 0..n {
            m[(i, i)] += p;
        }
        // row equilibration makes the pivot test independent of gain scaling
        let mut rhs = cplx(&self.b);
        for i in 0..n {
            let r = (0..n).map(|j| cabs(m[(i, j)])).fold(T::zero(), |a, v| a.max(v));
            if !(r > T::zero()) {
                return None;
            }
            let inv = Complex::new(T::one() / r, T::zero());
            for j in 0..n {
                m[(i, j)] *= inv;
            }
            for j in 0..rhs.ncols() {
                rhs[(i, j)] *= inv;
            }
        }
        let lu = m.lu();
        let tol = lit::<T>(64.0) * T::epsilon() * T::from_usize(n).unwrap();
        if lu.u().diagonal().iter().any(|v| !(cabs(*v) > tol)) {
            return None;
        }
        let x = lu.solve(&rhs)?;
        let h = cplx(&self.c) * x + d;
        if h.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Some(h)
        } else {
            None
        }
    }

    /// Transfer matrix on the imaginary axis (continuous) or unit circle (discrete).
    pub fn response_matrix(&self, omega: T) -> Option<DMatrix<Complex<T>>> {
        let p = match self.domain {
            Domain::Continuous => Complex::new(T::zero(), omega),
            Domain::Discrete { ts } => {
                let th = omega * ts;
                Complex::new(th.cos(), th.sin())
            }
        };
        self.eval_at(p)
    }

    /// SISO frequency response at one frequency.
    pub fn response(&self, omega: T) -> Option<Complex<T>> {
        self.response_matrix(omega).map(|m| m[(0, 0)])
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<Complex<T>> {
        if self.n_states() == 0 {
            return Vec::new();
        }
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Continuous: all poles in the open left half-plane.
    /// Discrete: all poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        match self.domain {
            Domain::Continuous => is_hurwitz(&self.a),
            Domain::Discrete { .. } => self.poles().iter().all(|p| cabs(*p) < T::one()),
        }
    }

    /// Simulates a SISO discrete model from zero state.
    pub fn simulate(&self, input: &[T]) -> Result<Vec<T>> {
        if self.domain.is_continuous() {
            return Err(Error::WrongDomain { expected: "discrete" });
        }
        if !self.is_siso() {
            return Err(Error::Dimension("simulate expects a SISO model".into()));
        }
        let mut x = DVector::<T>::zeros(self.n_states());
        let mut out = Vec::with_capacity(input.len());
        for &u in input {
            let y = (&self.c * &x)[0] + self.d[(0, 0)] * u;
            x = &self.a * &x + &self.b * u;
            out.push(y);
        }
        Ok(out)
    }
}

pub(crate) fn is_hurwitz<T: Real>(a: &DMatrix<T>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    a.complex_eigenvalues().iter().all(|p| p.re < T::zero())
}

/// Controllable canonical realization of `num(s) / den(s)`.
///
/// Coefficients are in descending powers of `s`. Leading zeros of the
/// numerator are ignored.
pub fn make_transfer_function<T: Real>(num: &[T], den: &[T]) -> Result<StateSpace<T>> {
    make_transfer_function_in(num, den, Domain::Continuous)
}

pub fn make_transfer_function_in<T: Real>(
    num: &[T],
    den: &[T],
    domain: Domain<T>,
) -> Result<StateSpace<T>> {
    if den.is_empty() || den[0] == T::zero() {
        return Err(Error::InvalidDenominator);
    }
    let first_nz = num.iter().position(|v| *v != T::zero());
    let num: &[T] = match first_nz {
        Some(i) => &num[i..],
        None => &[],
    };
    let n = den.len() - 1;
    if num.len() > den.len() {
        return Err(Error::ImproperTransferFunction {
            num: num.len() - 1,
            den: n,
        });
    }
    let lead = den[0];
    let a_coef: Vec<T> = den.iter().map(|v| *v / lead).collect();
    // numerator padded to n + 1 coefficients
    let mut b_coef = vec![T::zero(); n + 1 - num.len()];
    b_coef.extend(num.iter().map(|v| *v / lead));

    let d0 = b_coef[0];
    if n == 0 {
        return Ok(StateSpace::gain(d0, domain));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = T::one();
    }
    // last row: -a_n ... -a_1 (state x1 is the lowest derivative)
    for j in 0..n {
        a[(n - 1, j)] = -a_coef[n - j];
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = T::one();
    let mut c = DMatrix::zeros(1, n);
    for j in 0..n {
        c[(0, j)] = b_coef[n - j] - a_coef[n - j] * d0;
    }
    let d = DMatrix::from_element(1, 1, d0);
    StateSpace::new(a, b, c, d, domain)
}

fn same_domain<T: Real>(a: Domain<T>, b: Domain<T>) -> bool {
    match (a, b) {
        (Domain::Continuous, Domain::Continuous) => true,
        (Domain::Discrete { ts: t1 }, Domain::Discrete { ts: t2 }) => t1 == t2,
        _ => false,
    }
}

/// Cascade `first` then `second`; composite state is `[x_first; x_second]`.
pub fn series<T: Real>(first: &StateSpace<T>, second: &StateSpace<T>) -> Result<StateSpace<T>> {
    if !same_domain(first.domain, second.domain) {
        return Err(Error::DomainMismatch);
    }
    if first.n_outputs() != second.n_inputs() {
        return Err(Error::Dimension(format!(
            "first has {} outputs, second has {} inputs",
            first.n_outputs(),
            second.n_inputs()
        )));
    }
    let (n1, n2) = (first.n_states(), second.n_states());
    let n = n1 + n2;
    let m = first.n_inputs();
    let p = second.n_outputs();

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&first.a);
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(&second.b * &first.c));
    a.view_mut((n1, n1), (n2, n2)).copy_from(&second.a);

    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&first.b);
    b.view_mut((n1, 0), (n2, m)).copy_from(&(&second.b * &first.d));

    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, n1)).copy_from(&(&second.d * &first.c));
    c.view_mut((0, n1), (p, n2)).copy_from(&second.c);

    let d = &second.d * &first.d;
    StateSpace::new(a, b, c, d, first.domain)
}

/// Cascade of several models, applied left to right.
pub fn series_all<T: Real>(parts: &[&StateSpace<T>]) -> Result<StateSpace<T>> {
    let (head, rest) = parts
        .split_first()
        .ok_or_else(|| Error::Dimension("empty series".into()))?;
    rest.iter().try_fold((*head).clone(), |acc, next| series(&acc, next))
}

/// What a curve represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    PlantFrf,
    DescribingFunction,
    LinearSensitivity,
    Response,
}

/// Complex response sampled on a strictly increasing positive frequency grid.
/// `None` marks a point where the response is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseCurve<T: Real> {
    pub kind: CurveKind,
    omega: Vec<T>,
    values: Vec<Option<Complex<T>>>,
}

pub(crate) fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    let positive = grid.iter().all(|w| *w > T::zero() && w.is_finite());
    let increasing = grid.windows(2).all(|p| p[1] > p[0]);
    if positive && increasing {
        Ok(())
    } else {
        Err(Error::InvalidGrid)
    }
}

impl<T: Real> FrequencyResponseCurve<T> {
    pub fn new(kind: CurveKind, omega: Vec<T>, values: Vec<Option<Complex<T>>>) -> Result<Self> {
        check_grid(&omega)?;
        if omega.len() != values.len() {
            return Err(Error::Dimension("grid and values differ in length".into()));
        }
        Ok(Self {
            kind,
            omega,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }
    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
    pub fn omega(&self) -> &[T] {
        &self.omega
    }
    pub fn values(&self) -> &[Option<Complex<T>>] {
        &self.values
    }
    pub fn iter(&self) -> impl Iterator<Item = (T, Option<Complex<T>>)> + '_ {
        self.omega.iter().copied().zip(self.values.iter().copied())
    }
    pub fn all_bounded(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
    pub fn magnitude_db(&self) -> Vec<Option<T>> {
        self.values.iter().map(|v| v.map(|c| db(cabs(c)))).collect()
    }
    pub fn phase_deg(&self) -> Vec<Option<T>> {
        self.values
            .iter()
            .map(|v| v.map(|c| carg(c) * lit::<T>(180.0) / T::pi()))
            .collect()
    }

    /// Pointwise product with another curve on the same grid.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.omega != other.omega {
            return Err(Error::InvalidGrid);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| Some((*a)? * (*b)?))
            .collect();
        Ok(Self {
            kind: self.kind,
            omega: self.omega.clone(),
            values,
        })
    }
}

/// SISO frequency response on a grid (rad/s).
pub fn freq_response<T: Real>(model: &StateSpace<T>, grid: &[T]) -> Result<FrequencyResponseCurve<T>> {
    if !model.is_siso() {
        return Err(Error::Dimension("freq_response expects a SISO model".into()));
    }
    check_grid(grid)?;
    let values = grid.iter().map(|&w| model.response(w)).collect();
    FrequencyResponseCurve::new(CurveKind::Response, grid.to_vec(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    Tustin,
    Zoh,
}

/// Samples a continuous model at period `ts`.
pub fn discretize<T: Real>(
    model: &StateSpace<T>,
    ts: T,
    method: Discretization,
) -> Result<StateSpace<T>> {
    if !model.domain.is_continuous() {
        return Err(Error::WrongDomain {
            expected: "continuous",
        });
    }
    if !(ts > T::zero()) || !ts.is_finite() {
        return Err(Error::InvalidSampleTime);
    }
    let n = model.n_states();
    let domain = Domain::Discrete { ts };
    if n == 0 {
        let mut out = model.clone();
        out.domain = domain;
        return Ok(out);
    }
    match method {
        Discretization::Tustin => {
            let TustinMaps { inv, .. } = tustin_maps(&model.a, ts)?;
            let half = ts / lit(2.0);
            let eye = DMatrix::<T>::identity(n, n);
            let ad = &inv * (&eye + &model.a * half);
            let bd = &inv * &model.b * ts;
            let cd = &model.c * &inv;
            let dd = &model.d + &model.c * &inv * &model.b * half;
            StateSpace::new(ad, bd, cd, dd, domain)
        }
        Discretization::Zoh => {
            let m = model.n_inputs();
            let mut aug = DMatrix::<T>::zeros(n + m, n + m);
            aug.view_mut((0, 0), (n, n)).copy_from(&(&model.a * ts));
            aug.view_mut((0, n), (n, m)).copy_from(&(&model.b * ts));
            let e = aug.exp();
            let ad = e.view((0, 0), (n, n)).into_owned();
            let bd = e.view((0, n), (n, m)).into_owned();
            StateSpace::new(ad, bd, model.c.clone(), model.d.clone(), domain)
        }
    }
}

/// `(I - A ts/2)^-1` together with the trapezoidal transition matrix.
pub(crate) struct TustinMaps<T: Real> {
    pub inv: DMatrix<T>,
    pub phi: DMatrix<T>,
}

pub(crate) fn tustin_maps<T: Real>(a: &DMatrix<T>, ts: T) -> Result<TustinMaps<T>> {
    let n = a.nrows();
    let half = ts / lit(2.0);
    let pole = lit::<T>(2.0) / ts;
    if a.nrows() > 0 {
        let near = a
            .complex_eigenvalues()
            .iter()
            .any(|p| cabs(*p - Complex::new(pole, T::zero())) <= lit::<T>(1e-9) * pole);
        if near {
            return Err(Error::TustinSingular);
        }
    }
    let eye = DMatrix::<T>::identity(n, n);
    let inv = (&eye - a * half)
        .try_inverse()
        .ok_or(Error::TustinSingular)?;
    let phi = &inv * (&eye + a * half);
    Ok(TustinMaps { inv, phi })
}

/// Linear sensitivity `1 / (1 + P C)` on a grid.
pub fn linear_sensitivity<T: Real>(
    plant: &StateSpace<T>,
    controller: &StateSpace<T>,
    grid: &[T],
) -> Result<FrequencyResponseCurve<T>> {
    if !plant.is_siso() || !controller.is_siso() {
        return Err(Error::Dimension("linear_sensitivity expects SISO models".into()));
    }
    check_grid(grid)?;
    let tol = lit::<T>(1e3) * T::epsilon();
    let values = grid
        .iter()
        .map(|&w| {
            let l = plant.response(w)? * controller.response(w)?;
            let den = Complex::new(T::one(), T::zero()) + l;
            if cabs(den) <= tol * (T::one() + cabs(l)) {
                None
            } else {
                Some(Complex::new(T::one(), T::zero()) / den)
            }
        })
        .collect();
    FrequencyResponseCurve::new(CurveKind::LinearSensitivity, grid.to_vec(), values)
}

/// Open-loop gain crossover: first grid frequency where `|L|` falls through 1,
/// refined by log-linear interpolation.
pub fn gain_crossover<T: Real>(loop_tf: &FrequencyResponseCurve<T>) -> Option<T> {
    let pts: Vec<(T, T)> = loop_tf
        .iter()
        .filter_map(|(w, v)| v.map(|c| (w, cabs(c))))
        .collect();
    pts.windows(2).find_map(|p| {
        let ((w0, m0), (w1, m1)) = (p[0], p[1]);
        if m0 >= T::one() && m1 < T::one() {
            let f = m0.ln() / (m0.ln() - m1.ln());
            Some((w0.ln() + f * (w1.ln() - w0.ln())).exp())
        } else {
            None
        }
    })
}
