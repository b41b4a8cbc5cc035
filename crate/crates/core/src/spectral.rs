//! Closed-form spectral quantities for ball reference bodies: the
//! highest-weight pairing, the E-norm bound and the eigenvalue-ratio lower
//! bound, with the identity tying them together.
//!
//! `v_d` is the volume of the unit ball in `R^d` and `s_d` the area of the unit
//! sphere `S^d`. Factorials and binomials are exact integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{ball_volume, sphere_volume};

fn factorial(k: usize) -> Result<u128> {
    (1..=k as u128)
        .try_fold(1u128, |acc, v| acc.checked_mul(v))
        .ok_or_else(|| Error::InvalidParameter(format!("{k}! overflows")))
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

fn v(d: i64) -> Result<f64> {
    ball_volume(d)
}

fn s(d: i64) -> Result<f64> {
    sphere_volume(d)
}

/// Parameters `(n, r, m)` of the highest weight `(m, 2, …, 2, 0, …, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub n: usize,
    pub r: usize,
    pub m: usize,
}

impl SpectralParams {
    pub fn new(n: usize, r: usize, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n = {n} must be at least 2")));
        }
        if r < 1 || 2 * r > n {
            return Err(Error::InvalidParameter(format!("r = {r} outside 1..={}", n / 2)));
        }
        if m < 2 {
            return Err(Error::InvalidParameter(format!("m = {m} must be at least 2")));
        }
        Ok(Self { n, r, m })
    }
}

/// `(n-2r)! (m+r-1)(n+m-r) v_{n+2m-2} / (v_{r+m-2}² s_{2m-3})`.
pub fn hw_pairing(params: SpectralParams) -> Result<f64> {
    let SpectralParams { n, r, m } = SpectralParams::new(params.n, params.r, params.m)?;
    let (ni, ri, mi) = (n as i64, r as i64, m as i64);
    let f = factorial(n - 2 * r)? as f64;
    let num = f * ((m + r - 1) * (n + m - r)) as f64 * v(ni + 2 * mi - 2)?;
    let den = v(ri + mi - 2)?.powi(2) * s(2 * mi - 3)?;
    Ok(num / den)
}

/// `(n+m-r-2) s_{n+2m-3} / (s_{n+m-r-3}² s_{2m-3}) · C(n-2k, r-k)` for
/// `0 <= k <= r <= n-k`, `m >= 2`.
pub fn e_norm_bound(r: usize, k: usize, m: usize, n: usize) -> Result<f64> {
    if k > r || r + k > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= k <= r <= n - k, got k = {k}, r = {r}, n = {n}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m = {m} must be at least 2")));
    }
    if n + m < r + 3 {
        return Err(Error::InvalidParameter(format!(
            "sphere index n + m - r - 3 is negative for n = {n}, r = {r}, m = {m}"
        )));
    }
    let (ni, ri, mi) = (n as i64, r as i64, m as i64);
    let num = (n + m - r - 2) as f64 * s(ni + 2 * mi - 3)?;
    let den = s(ni + mi - ri - 3)?.powi(2) * s(2 * mi - 3)?;
    Ok(num / den * binomial(n - 2 * k, r - k) as f64)
}

/// `(n-2r)! (n+m-r)(r+m-1)(r+m-2) / (n+2m-2)`.
pub fn ratio_lower_bound(n: usize, r: usize, m: usize) -> Result<f64> {
    SpectralParams::new(n, r, m)?;
    let f = factorial(n - 2 * r)?;
    let num = f * ((n + m - r) * (r + m - 1) * (r + m - 2)) as u128;
    let den = (n + 2 * m - 2) as u128;
    Ok(num as f64 / den as f64)
}

/// `|hw(n,r,m) / e_norm_bound(n-r, r, m, n) / ratio(n,r,m) - 1|`.
pub fn spectral_consistency(n: usize, r: usize, m: usize) -> Result<f64> {
    let params = SpectralParams::new(n, r, m)?;
    let lhs = hw_pairing(params)? / e_norm_bound(n - r, r, m, n)?;
    Ok((lhs / ratio_lower_bound(n, r, m)? - 1.0).abs())
}

/// One evaluated parameter triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub hw: f64,
    pub bound: f64,
    pub ratio: f64,
    pub consistency: f64,
}

pub fn spectral_row(n: usize, r: usize, m: usize) -> Result<SpectralRow> {
    let params = SpectralParams::new(n, r, m)?;
    Ok(SpectralRow {
        n,
        r,
        m,
        hw: hw_pairing(params)?,
        bound: e_norm_bound(n - r, r, m, n)?,
        ratio: ratio_lower_bound(n, r, m)?,
        consistency: spectral_consistency(n, r, m)?,
    })
}

/// Every valid triple with `2 <= n <= n_max`, `1 <= r <= n/2`,
/// `2 <= m <= m_max`, in `(n, r, m)` order.
pub fn spectral_sweep(n_max: usize, m_max: usize) -> Result<Vec<SpectralRow>> {
    let mut rows = Vec::new();
    for n in 2..=n_max {
        for r in 1..=n / 2 {
            for m in 2..=m_max {
                rows.push(spectral_row(n, r, m)?);
            }
        }
    }
    Ok(rows)
}
