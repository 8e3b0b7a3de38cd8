//! Cardinal B-splines, their refinement masks and tensor-product refinable
//! functions.
//!
//! A mask `a_0..a_n` has symbol `â(ξ) = Σ a_k e^{-ikξ}` normalised by
//! `â(0) = 1`. The B-spline `B_m` is the `m`-fold convolution of the
//! indicator of `(0, 1]`, has support `[0, m]` and mask `binom(m, k) / 2^m`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance on `|Σ a_k - 1|` accepted by [`Mask1D::new`].
const MASK_SUM_TOL: f64 = 1e-12;

/// Default tolerance on symbol derivatives used by [`Mask1D::sum_rule_order`].
pub const SUM_RULE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Mask1D {
    coefficients: Vec<f64>,
}

impl Mask1D {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidMask("mask has no coefficients".into()));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidMask(
                "mask has non-finite coefficients".into(),
            ));
        }
        let sum: f64 = coefficients.iter().sum();
        if (sum - 1.0).abs() > MASK_SUM_TOL {
            return Err(Error::InvalidMask(format!(
                "coefficients sum to {sum}, symbol must satisfy â(0) = 1"
            )));
        }
        Ok(Self { coefficients })
    }

    /// The identity for mask convolution, `δ = (1)`.
    pub fn delta() -> Self {
        Self {
            coefficients: vec![1.0],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Index of the last coefficient, `n` in `a_0..a_n`.
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn symbol(&self, xi: f64) -> Complex64 {
        self.symbol_derivative(0, xi)
    }

    /// `â^{(j)}(ξ) = Σ a_k (-ik)^j e^{-ikξ}`.
    pub fn symbol_derivative(&self, order: u32, xi: f64) -> Complex64 {
        let factor = Complex64::new(0.0, -1.0).powu(order);
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let k = k as f64;
                a * k.powi(order as i32) * Complex64::from_polar(1.0, -k * xi)
            })
            .sum::<Complex64>()
            * factor
    }

    /// Number of sum rules: the largest `κ + 1` such that `â^{(j)}(π)`
    /// vanishes for `j = 0..=κ`.
    ///
    /// Each derivative is compared against `tol · max(1, Σ |a_k| k^j)` so that
    /// the rounding of the large intermediate terms of high derivatives does
    /// not mask a genuine zero.
    pub fn sum_rule_order(&self, tol: f64) -> usize {
        // A nonzero trigonometric polynomial of degree n cannot vanish to
        // order n + 1 at a point.
        let mut order = 0;
        for j in 0..=self.coefficients.len() as u32 {
            let scale: f64 = self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, a)| a.abs() * (k as f64).powi(j as i32))
                .sum();
            if self.symbol_derivative(j, PI).norm() < tol * scale.max(1.0) {
                order += 1;
            } else {
                break;
            }
        }
        order
    }

    /// The nonnegativity condition: at least three coefficients, all strictly
    /// positive, with even- and odd-indexed coefficients each summing to 1/2.
    pub fn satisfies_nonnegativity_condition(&self) -> bool {
        if self.degree() < 2 {
            return false;
        }
        if self.coefficients.iter().any(|&a| a <= 0.0) {
            return false;
        }
        let even: f64 = self.coefficients.iter().step_by(2).sum();
        let odd: f64 = self.coefficients.iter().skip(1).step_by(2).sum();
        (even - 0.5).abs() <= 1e-12 && (odd - 0.5).abs() <= 1e-12
    }

    /// Discrete convolution; the symbol of the result is the product of the
    /// two symbols.
    pub fn convolve(&self, other: &Mask1D) -> Mask1D {
        let mut out = vec![0.0; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Mask1D { coefficients: out }
    }

    /// Returns `Some(m)` if this is the mask of `B_m` to within `tol`.
    pub fn as_bspline_order(&self, tol: f64) -> Option<usize> {
        let m = self.degree();
        if m == 0 {
            return None;
        }
        let reference = bspline_mask_coefficients(m);
        let close = self
            .coefficients
            .iter()
            .zip(&reference)
            .all(|(a, b)| (a - b).abs() <= tol);
        close.then_some(m)
    }
}

fn bspline_mask_coefficients(m: usize) -> Vec<f64> {
    let scale = 0.5f64.powi(m as i32);
    let mut binom = 1.0f64;
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        out.push(binom * scale);
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    out
}

/// Mask of `B_m`: `(1 + e^{-iξ})^m / 2^m`, coefficients `binom(m, k) / 2^m`.
pub fn bspline_mask(m: usize) -> Result<Mask1D> {
    if m == 0 {
        return Err(Error::InvalidOrder(m));
    }
    Ok(Mask1D {
        coefficients: bspline_mask_coefficients(m),
    })
}

pub fn sum_rule_order(mask: &Mask1D, tol: f64) -> usize {
    mask.sum_rule_order(tol)
}

pub fn check_nonnegativity_condition(mask: &Mask1D) -> bool {
    mask.satisfies_nonnegativity_condition()
}

pub fn convolve_masks(a: &Mask1D, b: &Mask1D) -> Mask1D {
    a.convolve(b)
}

/// Evaluates `B_m(x)`.
///
/// `B_1` is the indicator of `(0, 1]`; higher orders follow
/// `B_m(x) = x/(m-1) B_{m-1}(x) + (m-x)/(m-1) B_{m-1}(x-1)`.
pub fn eval_bspline(m: usize, x: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidOrder(m));
    }
    Ok(bspline_value(m, x))
}

/// Unchecked `B_m(x)` for `m >= 1`.
pub(crate) fn bspline_value(m: usize, x: f64) -> f64 {
    debug_assert!(m >= 1);
    if !(x > 0.0 && x <= m as f64) {
        return 0.0;
    }
    // vals[j] holds B_r(x - j) for the current order r.
    let mut vals = [0.0f64; 32];
    let mut heap;
    let vals: &mut [f64] = if m <= vals.len() {
        &mut vals[..m]
    } else {
        heap = vec![0.0; m];
        &mut heap[..]
    };
    for (j, v) in vals.iter_mut().enumerate() {
        let t = x - j as f64;
        *v = if t > 0.0 && t <= 1.0 { 1.0 } else { 0.0 };
    }
    for r in 2..=m {
        let denom = (r - 1) as f64;
        for j in 0..=(m - r) {
            let t = x - j as f64;
            vals[j] = (t * vals[j] + (r as f64 - t) * vals[j + 1]) / denom;
        }
    }
    vals[0]
}

/// Closed-form Fourier transform `B̂_m(ξ) = e^{-imξ/2} (sin(ξ/2) / (ξ/2))^m`.
pub fn bspline_fourier(m: usize, xi: f64) -> Complex64 {
    let half = xi / 2.0;
    let sinc = if half == 0.0 { 1.0 } else { half.sin() / half };
    Complex64::from_polar(sinc.powi(m as i32), -(m as f64) * half)
}

/// Tensor-product refinable function `φ(x) = Π_l B_{m_l}(x_l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinableFunction {
    orders: Vec<usize>,
}

impl RefinableFunction {
    pub fn bspline(order: usize) -> Result<Self> {
        Self::tensor(&[order])
    }

    pub fn tensor(orders: &[usize]) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        if let Some(&m) = orders.iter().find(|&&m| m == 0) {
            return Err(Error::InvalidOrder(m));
        }
        Ok(Self {
            orders: orders.to_vec(),
        })
    }

    /// Builds the function from per-axis masks. Only B-spline masks (and
    /// therefore their convolutions) are supported for evaluation.
    pub fn from_masks(masks: &[Mask1D]) -> Result<Self> {
        let orders = masks
            .iter()
            .map(|mask| {
                mask.as_bspline_order(1e-12).ok_or_else(|| {
                    Error::InvalidMask(
                        "pointwise evaluation is only available for B-spline masks".into(),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::tensor(&orders)
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    /// Support extents `M_l`: `supp φ = [0, M_1] × … × [0, M_d]`.
    pub fn support(&self) -> Vec<u32> {
        self.orders.iter().map(|&m| m as u32).collect()
    }

    pub fn masks(&self) -> Vec<Mask1D> {
        self.orders
            .iter()
            .map(|&m| Mask1D {
                coefficients: bspline_mask_coefficients(m),
            })
            .collect()
    }

    /// Minimum number of sum rules over the axes (`sr_{B_m} = m`).
    pub fn sum_rule_order(&self) -> usize {
        *self.orders.iter().min().expect("non-empty")
    }

    /// Sobolev smoothness exponent `ν₂ = min_l m_l - 1/2`.
    pub fn smoothness(&self) -> f64 {
        self.sum_rule_order() as f64 - 0.5
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut value = 1.0;
        for (&m, &xl) in self.orders.iter().zip(x) {
            value *= bspline_value(m, xl);
            if value == 0.0 {
                break;
            }
        }
        value
    }

    /// `|Σ_k φ(x - k) - 1|` over the finitely many shifts touching `x`.
    pub fn unit_partition_residual(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let mut total = 1.0;
        for (&m, &xl) in self.orders.iter().zip(x) {
            let lo = (xl - m as f64).floor() as i64;
            let hi = xl.ceil() as i64;
            let axis_sum: f64 = (lo..=hi).map(|k| bspline_value(m, xl - k as f64)).sum();
            total *= axis_sum;
        }
        Ok((total - 1.0).abs())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}
