//! Truncated Taylor machinery around `√(1 − s²)`.
//!
//! With `(1 − s²)^{1/2} = 1 − Σ_{k≥1} C_k s^{2k}` the auxiliary series
//!
//! * `F(s) = Σ k/(k+1) · C_k s^{2(k−1)}`
//! * `G(s) = 1/2 − Σ C_k s^{2k} / (2(k+1))`
//!
//! satisfy `Σ 2k C_k s^{2(k−1)} ψ = 1`, `3G s² = 1 − ψ³`, `2G = ψ + F s²` and
//! `F ψ ≤ 1/4`, where `ψ = √(1 − s²)`. Everything here evaluates the series
//! truncated after `K` terms and reports how far each identity is from exact.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig<T> {
    /// Number of retained terms `K`.
    pub truncation: usize,
    /// Largest admissible argument; must lie in `[0, 1)`.
    pub s_max: T,
}

impl<T: Real> Default for SeriesConfig<T> {
    fn default() -> Self {
        Self { truncation: 100, s_max: T::lit(0.9) }
    }
}

impl<T: Real> SeriesConfig<T> {
    pub fn new(truncation: usize, s_max: T) -> Result<Self> {
        let cfg = Self { truncation, s_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation < 1 {
            return domain("series truncation K must be at least 1");
        }
        if !(self.s_max >= T::zero() && self.s_max < T::one()) {
            return domain(format!("s_max = {} outside [0, 1)", self.s_max));
        }
        Ok(())
    }
}

/// `C_k = binom(2k, k) / (4^k (2k − 1))`, by the recurrence
/// `C_{k+1} = C_k (2k − 1)/(2k + 2)` from `C_1 = 1/2`.
pub fn coeff_c<T: Real>(k: usize) -> Result<T> {
    if k == 0 {
        return domain("C_k is defined for k >= 1");
    }
    Ok(coefficient_table::<T>(k)[k - 1])
}

fn coefficient_table<T: Real>(k_max: usize) -> Vec<T> {
    let mut table = Vec::with_capacity(k_max);
    let mut c = T::lit(0.5);
    for k in 1..=k_max {
        table.push(c);
        let kf = T::from_usize_lossy(k);
        c = c * (T::lit(2.0) * kf - T::one()) / (T::lit(2.0) * kf + T::lit(2.0));
    }
    table
}

/// Residuals of the four identities at one argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactResiduals<T> {
    /// `|Σ 2k C_k s^{2(k−1)} ψ − 1|`
    pub r_b: T,
    /// `|3 G s² − (1 − ψ³)|`
    pub r_c: T,
    /// `|2G − ψ − F s²|`
    pub r_d: T,
    /// `max(F ψ − 1/4, 0)`
    pub r_e: T,
}

/// Precomputed truncated series. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Series<T> {
    cfg: SeriesConfig<T>,
    coeffs: Vec<T>,
}

impl<T: Real> Series<T> {
    pub fn new(cfg: SeriesConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, coeffs: coefficient_table(cfg.truncation) })
    }

    pub fn config(&self) -> &SeriesConfig<T> {
        &self.cfg
    }

    /// `C_1..=C_K`.
    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    fn check(&self, s: T) -> Result<()> {
        if s >= T::zero() && s <= self.cfg.s_max {
            Ok(())
        } else {
            domain(format!("argument s = {s} outside [0, {}]", self.cfg.s_max))
        }
    }

    /// Horner evaluation of `Σ_{k=1}^{K} a_k x^{k−1}`.
    fn horner(&self, x: T, weight: impl Fn(usize) -> T) -> T {
        let mut acc = T::zero();
        for k in (1..=self.coeffs.len()).rev() {
            acc = acc * x + weight(k) * self.coeffs[k - 1];
        }
        acc
    }

    /// `1 − Σ C_k s^{2k}`.
    pub fn psi(&self, s: T) -> Result<T> {
        self.check(s)?;
        let x = s * s;
        Ok(T::one() - x * self.horner(x, |_| T::one()))
    }

    pub fn f(&self, s: T) -> Result<T> {
        self.check(s)?;
        let x = s * s;
        Ok(self.horner(x, |k| T::from_usize_lossy(k) / T::from_usize_lossy(k + 1)))
    }

    pub fn g(&self, s: T) -> Result<T> {
        self.check(s)?;
        let x = s * s;
        Ok(T::lit(0.5) - x * self.horner(x, |k| T::one() / T::from_usize_lossy(2 * (k + 1))))
    }

    /// `Σ 2k C_k s^{2(k−1)}`, the derivative series that multiplies to one against `ψ`.
    pub fn derivative_sum(&self, s: T) -> Result<T> {
        self.check(s)?;
        let x = s * s;
        Ok(self.horner(x, |k| T::from_usize_lossy(2 * k)))
    }

    pub fn residuals(&self, s: T) -> Result<FactResiduals<T>> {
        let f = self.f(s)?;
        let g = self.g(s)?;
        let b = self.derivative_sum(s)?;
        let psi = (T::one() - s * s).sqrt();
        let three = T::lit(3.0);
        Ok(FactResiduals {
            r_b: (b * psi - T::one()).abs(),
            r_c: (three * g * s * s - (T::one() - psi * psi * psi)).abs(),
            r_d: (T::lit(2.0) * g - psi - f * s * s).abs(),
            r_e: (f * psi - T::lit(0.25)).max(T::zero()),
        })
    }

    /// `P = −3 F φ_n² + 2 φ_n − 3 G`, admissible for `0 ≤ φ_n ≤ √(1 − s²)`.
    pub fn p_pointwise(&self, s: T, phi_n: T) -> Result<T> {
        self.check(s)?;
        let psi = (T::one() - s * s).sqrt();
        // admit rounding-level excess over the exact bound
        let slack = T::lit(8.0) * T::epsilon();
        if !(phi_n >= T::zero() && phi_n <= psi + slack) {
            return domain(format!("phi_n = {phi_n} outside [0, sqrt(1 - s^2) = {psi}]"));
        }
        let f = self.f(s)?;
        let g = self.g(s)?;
        Ok(-T::lit(3.0) * f * phi_n * phi_n + T::lit(2.0) * phi_n - T::lit(3.0) * g)
    }
}

pub fn eval_psi_series<T: Real>(s: T, cfg: &SeriesConfig<T>) -> Result<T> {
    Series::new(*cfg)?.psi(s)
}

pub fn eval_f<T: Real>(s: T, cfg: &SeriesConfig<T>) -> Result<T> {
    Series::new(*cfg)?.f(s)
}

pub fn eval_g<T: Real>(s: T, cfg: &SeriesConfig<T>) -> Result<T> {
    Series::new(*cfg)?.g(s)
}

pub fn fact_residuals<T: Real>(s: T, cfg: &SeriesConfig<T>) -> Result<FactResiduals<T>> {
    Series::new(*cfg)?.residuals(s)
}

pub fn p_pointwise<T: Real>(s: T, phi_n: T, cfg: &SeriesConfig<T>) -> Result<T> {
    Series::new(*cfg)?.p_pointwise(s, phi_n)
}
