//! Complex exterior algebra on `R^{2m}` with complex structure
//! `J(v, w) = (-w, v)` and coordinates `z_j = x_j + i y_j`.
//!
//! A `(p, q)`-form is stored densely over the monomials `dz_I ∧ dz̄_J`
//! (`I`, `J` ascending, `|I| = p`, `|J| = q`). Subsets are bitmasks; sorting
//! masks numerically gives colexicographic order.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{tangential_hessian, Body, TangentFrame};

pub type C64 = Complex<f64>;

pub const MAX_COMPLEX_DIM: usize = 4;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Threshold on singular values, relative to the largest.
pub const KERNEL_TOL: f64 = 1e-10;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `k`-subsets of `{0, …, m-1}` in colex order.
pub fn subsets(m: usize, k: usize) -> Vec<u32> {
    (0u32..1 << m).filter(|s| s.count_ones() as usize == k).collect()
}

/// Colex rank: `Σ C(e_i, i+1)` over the ascending elements `e_i`.
fn subset_index(set: u32) -> usize {
    let mut rank = 0;
    let mut i = 0;
    for e in 0..32 {
        if set & (1 << e) != 0 {
            i += 1;
            rank += binomial(e as usize, i);
        }
    }
    rank
}

/// Sign of the shuffle putting `a ⧺ b` in ascending order; `None` on overlap.
fn merge_sign(a: u32, b: u32) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0;
    for e in 0..32 {
        if b & (1 << e) != 0 {
            inversions += (a >> (e + 1)).count_ones();
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.norm()))
}

fn parity(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_dim(m: usize) -> Result<()> {
    if m == 0 || m > MAX_COMPLEX_DIM {
        return Err(Error::UnsupportedDimension {
            n: m,
            min: 1,
            max: MAX_COMPLEX_DIM,
        });
    }
    Ok(())
}

/// A form of pure bidegree `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PQForm {
    m: usize,
    p: usize,
    q: usize,
    coeffs: Vec<C64>,
}

impl PQForm {
    pub fn zero(m: usize, p: usize, q: usize) -> Result<PQForm> {
        check_dim(m)?;
        Ok(PQForm {
            m,
            p,
            q,
            coeffs: vec![ZERO; binomial(m, p) * binomial(m, q)],
        })
    }

    /// The constant form `c` of bidegree `(0, 0)`.
    pub fn scalar(m: usize, c: C64) -> Result<PQForm> {
        let mut f = Self::zero(m, 0, 0)?;
        f.coeffs[0] = c;
        Ok(f)
    }

    /// `c · dz_I ∧ dz̄_J` for index lists in any order (the sign of sorting
    /// is applied); repeated indices give the zero form.
    pub fn monomial(m: usize, i: &[usize], j: &[usize], c: C64) -> Result<PQForm> {
        let mut f = Self::zero(m, i.len(), j.len())?;
        let mut sign = 1.0;
        let mut masks = [0u32; 2];
        for (slot, list) in [i, j].iter().enumerate() {
            for &e in list.iter() {
                if e >= m {
                    return Err(Error::InvalidInput(format!("index {e} out of range for m = {m}")));
                }
                match merge_sign(masks[slot], 1 << e) {
                    Some(s) => {
                        sign *= s;
                        masks[slot] |= 1 << e;
                    }
                    None => return Ok(f),
                }
            }
        }
        let idx = f.index(masks[0], masks[1]);
        f.coeffs[idx] = c * sign;
        Ok(f)
    }

    /// Builds a form from its dense coefficient vector in basis order.
    pub fn from_coeffs(m: usize, p: usize, q: usize, coeffs: Vec<C64>) -> Result<PQForm> {
        let f = Self::zero(m, p, q)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::Arity {
                expected: f.coeffs.len(),
                got: coeffs.len(),
            });
        }
        Ok(PQForm { coeffs, ..f })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Basis monomials `(I, J)` in storage order.
    pub fn basis(m: usize, p: usize, q: usize) -> Vec<(u32, u32)> {
        let js = subsets(m, q);
        subsets(m, p)
            .into_iter()
            .flat_map(|i| js.iter().map(move |&j| (i, j)))
            .collect()
    }

    fn index(&self, i: u32, j: u32) -> usize {
        subset_index(i) * binomial(self.m, self.q) + subset_index(j)
    }

    /// Coefficient of `dz_I ∧ dz̄_J` for bitmasks `I`, `J`.
    pub fn get(&self, i: u32, j: u32) -> C64 {
        if i.count_ones() as usize != self.p || j.count_ones() as usize != self.q || (i | j) >> self.m != 0 {
            return ZERO;
        }
        self.coeffs[self.index(i, j)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &PQForm) -> Result<PQForm> {
        if (self.m, self.p, self.q) != (other.m, other.p, other.q) {
            return Err(Error::InvalidInput("adding forms of different type".into()));
        }
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> PQForm {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= c);
        out
    }

    /// `[α]_top`: the coefficient of `dx_1∧dy_1∧⋯∧dx_m∧dy_m`, using
    /// `dz_[m] ∧ dz̄_[m] = (-1)^{C(m,2)} (-2i)^m dx_1∧dy_1∧⋯∧dx_m∧dy_m`.
    pub fn top(&self) -> C64 {
        if self.p != self.m || self.q != self.m {
            return ZERO;
        }
        let m = self.m;
        self.coeffs[0] * C64::new(0.0, -2.0).powu(m as u32) * parity(binomial(m, 2))
    }
}

impl PQForm {
    fn new_unchecked(m: usize, p: usize, q: usize) -> PQForm {
        PQForm {
            m,
            p,
            q,
            coeffs: vec![ZERO; binomial(m, p) * binomial(m, q)],
        }
    }
}

/// `α ∧ β`. Terms beyond bidegree `(m, m)` vanish.
pub fn wedge(alpha: &PQForm, beta: &PQForm) -> Result<PQForm> {
    if alpha.m != beta.m {
        return Err(Error::InvalidInput(format!(
            "wedge of forms in dimensions {} and {}",
            alpha.m, beta.m
        )));
    }
    let m = alpha.m;
    let (p, q) = (alpha.p + beta.p, alpha.q + beta.q);
    if p > m || q > m {
        // no monomials of that bidegree exist
        return Ok(PQForm {
            m,
            p,
            q,
            coeffs: Vec::new(),
        });
    }
    let mut out = PQForm::new_unchecked(m, p, q);
    // dz_I ∧ dz̄_J ∧ dz_K ∧ dz̄_L = (-1)^{|J||K|} dz_I ∧ dz_K ∧ dz̄_J ∧ dz̄_L
    let cross = parity(alpha.q * beta.p);
    let a_basis = PQForm::basis(m, alpha.p, alpha.q);
    let b_basis = PQForm::basis(m, beta.p, beta.q);
    for (&(i, j), &a) in a_basis.iter().zip(&alpha.coeffs) {
        if a == ZERO {
            continue;
        }
        for (&(k, l), &b) in b_basis.iter().zip(&beta.coeffs) {
            if b == ZERO {
                continue;
            }
            if let (Some(s1), Some(s2)) = (merge_sign(i, k), merge_sign(j, l)) {
                let idx = out.index(i | k, j | l);
                out.coeffs[idx] += a * b * (cross * s1 * s2);
            }
        }
    }
    Ok(out)
}

/// `ᾱ`: `conj(c · dz_I ∧ dz̄_J) = (-1)^{pq} c̄ · dz_J ∧ dz̄_I`.
pub fn conjugate(alpha: &PQForm) -> PQForm {
    let (m, p, q) = (alpha.m, alpha.p, alpha.q);
    let mut out = PQForm::new_unchecked(m, q, p);
    let sign = parity(p * q);
    for (&(i, j), &c) in PQForm::basis(m, p, q).iter().zip(&alpha.coeffs) {
        let idx = out.index(j, i);
        out.coeffs[idx] = c.conj() * sign;
    }
    out
}

/// The (1,1)-form `ω_H = (i/2) Σ H_jk dz_j ∧ dz̄_k` of a hermitian matrix,
/// so that `ω_H(v, Jv) = Σ H_jk v_j v̄_k`; positive iff `H` is.
#[derive(Debug, Clone, PartialEq)]
pub struct OneOneForm {
    h: DMatrix<C64>,
    min_eigenvalue: f64,
}

impl OneOneForm {
    pub fn new(h: DMatrix<C64>) -> Result<OneOneForm> {
        let m = h.nrows();
        if h.ncols() != m {
            return Err(Error::InvalidInput("hermitian matrix must be square".into()));
        }
        check_dim(m)?;
        let skew = max_abs(&(&h - h.adjoint()));
        if skew > 1e-13 * max_abs(&h).max(1.0) {
            return Err(Error::InvalidInput(format!("matrix is not hermitian (defect {skew:e})")));
        }
        let sym = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let min_eigenvalue = sym.clone().symmetric_eigenvalues().min();
        Ok(OneOneForm { h: sym, min_eigenvalue })
    }

    pub fn from_real(h: &DMatrix<f64>) -> Result<OneOneForm> {
        Self::new(h.map(|v| C64::new(v, 0.0)))
    }

    /// `ω_I = (i/2) Σ dz_j ∧ dz̄_j`.
    pub fn standard(m: usize) -> Result<OneOneForm> {
        Self::new(DMatrix::identity(m, m))
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.h
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_positive(&self) -> bool {
        self.min_eigenvalue > 0.0
    }

    pub fn to_form(&self) -> PQForm {
        let m = self.dim();
        let mut f = PQForm::new_unchecked(m, 1, 1);
        for j in 0..m {
            for k in 0..m {
                let idx = f.index(1 << j, 1 << k);
                f.coeffs[idx] = I * 0.5 * self.h[(j, k)];
            }
        }
        f
    }

    /// Pull-back under the complex-linear map `g`: `H ↦ gᵀ H ḡ`.
    pub fn pull_back(&self, g: &DMatrix<C64>) -> Result<OneOneForm> {
        Self::new(g.transpose() * &self.h * g.conjugate())
    }

    /// `ω_H(v, Jv) = Σ H_jk v_j v̄_k` for `v ∈ C^m ≅ R^{2m}`.
    pub fn evaluate_on(&self, v: &DVector<C64>) -> f64 {
        (v.transpose() * &self.h * v.conjugate())[(0, 0)].re
    }
}

/// Random positive hermitian matrix `A A* + δ I` with complex gaussian `A`.
pub fn random_positive_form<R: Rng>(m: usize, rng: &mut R) -> Result<OneOneForm> {
    let a = DMatrix::from_fn(m, m, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let h = &a * a.adjoint() + DMatrix::identity(m, m) * C64::new(0.1, 0.0);
    OneOneForm::new((&h + h.adjoint()) * C64::new(0.5, 0.0))
}

/// Random complex matrix, invertible with probability one.
pub fn random_complex_matrix<R: Rng>(m: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(m, m, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `ω_1 ∧ ⋯ ∧ ω_r`, or the constant 1 for an empty list.
pub fn wedge_all(m: usize, forms: &[OneOneForm]) -> Result<PQForm> {
    let mut acc = PQForm::scalar(m, C64::new(1.0, 0.0))?;
    for (idx, f) in forms.iter().enumerate() {
        if f.dim() != m {
            return Err(Error::InvalidInput(format!("form {idx} has dimension {}", f.dim())));
        }
        acc = wedge(&acc, &f.to_form())?;
    }
    Ok(acc)
}

fn common_dim(forms: &[&OneOneForm]) -> Result<usize> {
    let m = forms
        .first()
        .map(|f| f.dim())
        .ok_or_else(|| Error::InvalidInput("empty list of forms".into()))?;
    if forms.iter().any(|f| f.dim() != m) {
        return Err(Error::InvalidInput("forms of different dimensions".into()));
    }
    Ok(m)
}

/// Matrix of `α ↦ Ω ∧ α` from bidegree `(p, q)` to `(m-q, m-p)`, for a
/// product `Ω` of `m - p - q` forms.
pub fn lefschetz_matrix(m: usize, omegas: &[OneOneForm], p: usize, q: usize) -> Result<DMatrix<C64>> {
    check_dim(m)?;
    if p + q > m || omegas.len() != m - p - q {
        return Err(Error::Arity {
            expected: m.saturating_sub(p + q),
            got: omegas.len(),
        });
    }
    let omega = wedge_all(m, omegas)?;
    multiplication_matrix(&omega, p, q)
}

/// Matrix of `α ↦ Ω ∧ α` on bidegree `(p, q)`; zero rows when the target
/// bidegree is out of range.
fn multiplication_matrix(omega: &PQForm, p: usize, q: usize) -> Result<DMatrix<C64>> {
    let m = omega.m;
    let (tp, tq) = (omega.p + p, omega.q + q);
    let source = binomial(m, p) * binomial(m, q);
    let target = binomial(m, tp) * binomial(m, tq);
    let columns = (0..source)
        .into_par_iter()
        .map(|c| {
            let mut basis = PQForm::new_unchecked(m, p, q);
            basis.coeffs[c] = C64::new(1.0, 0.0);
            wedge(omega, &basis).map(|w| w.coeffs)
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    let mut mat = DMatrix::zeros(target, source);
    for (c, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            mat[(r, c)] = *v;
        }
    }
    Ok(mat)
}

fn singular_values(a: &DMatrix<C64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Orthonormal basis (columns) of the numerical kernel.
fn kernel(a: &DMatrix<C64>, rel_tol: f64) -> DMatrix<C64> {
    let cols = a.ncols();
    if a.nrows() == 0 || max_abs(a) == 0.0 {
        return DMatrix::identity(cols, cols);
    }
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V*");
    let smax = svd.singular_values.max();
    let vecs: Vec<DVector<C64>> = (0..cols)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax)
        .map(|i| v_t.row(i).adjoint())
        .collect();
    if vecs.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&vecs)
    }
}

/// Orthonormal basis of `{α ∈ Λ^{(p,q)} : ω_0 ∧ Ω ∧ α = 0}`, one column per
/// basis form (coefficients in [`PQForm::basis`] order).
pub fn primitive_basis(omega0: &OneOneForm, omegas: &[OneOneForm], p: usize, q: usize) -> Result<DMatrix<C64>> {
    let m = omega0.dim();
    lefschetz_matrix(m, omegas, p, q)?;
    let mut all = vec![omega0.clone()];
    all.extend_from_slice(omegas);
    let product = wedge_all(m, &all)?;
    let map = multiplication_matrix(&product, p, q)?;
    Ok(kernel(&map, KERNEL_TOL))
}

/// `C(m,p) C(m,q) - C(m,p-1) C(m,q-1)`.
pub fn expected_primitive_dimension(m: usize, p: usize, q: usize) -> usize {
    let lower = if p == 0 || q == 0 {
        0
    } else {
        binomial(m, p - 1) * binomial(m, q - 1)
    };
    binomial(m, p) * binomial(m, q) - lower
}

/// `q(α, β) = i^{p-q} (-1)^{C(p+q,2)} [α ∧ β̄ ∧ Ω]_top`.
pub fn hr_pairing(alpha: &PQForm, beta: &PQForm, omega: &PQForm) -> Result<C64> {
    let (p, q) = alpha.bidegree();
    let w = wedge(&wedge(alpha, &conjugate(beta))?, omega)?;
    Ok(I.powi(p as i32 - q as i32) * parity(binomial(p + q, 2)) * w.top())
}

/// Matrix `Q_ab = q(b_a, b_b)` over the columns of `basis`, with
/// `Ω = ω_1 ∧ ⋯ ∧ ω_{m-p-q}`.
pub fn hr_form_matrix(
    m: usize,
    omegas: &[OneOneForm],
    p: usize,
    q: usize,
    basis: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    check_dim(m)?;
    if p + q > m || omegas.len() != m - p - q {
        return Err(Error::Arity {
            expected: m.saturating_sub(p + q),
            got: omegas.len(),
        });
    }
    if basis.nrows() != binomial(m, p) * binomial(m, q) {
        return Err(Error::Arity {
            expected: binomial(m, p) * binomial(m, q),
            got: basis.nrows(),
        });
    }
    let omega = wedge_all(m, omegas)?;
    let forms = (0..basis.ncols())
        .map(|c| PQForm::from_coeffs(m, p, q, basis.column(c).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    let count = forms.len();
    let entries = (0..count * count)
        .into_par_iter()
        .map(|idx| hr_pairing(&forms[idx / count], &forms[idx % count], &omega))
        .collect::<Result<Vec<C64>>>()?;
    Ok(DMatrix::from_row_slice(count, count, &entries))
}

/// Outcome of a Timorin verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimorinReport {
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub lefschetz_min_singular: f64,
    pub lefschetz_norm: f64,
    pub lefschetz_isomorphism: bool,
    pub primitive_dimension: usize,
    pub expected_primitive_dimension: usize,
    /// Eigenvalues of the hermitian form on the primitive basis, ascending.
    pub hr_eigenvalues: Vec<f64>,
    pub hermiticity_defect: f64,
    /// Smallest eigenvalue relative to the largest in absolute value.
    pub margin: f64,
    pub pass: bool,
}

/// Checks hard Lefschetz and the Hodge–Riemann relations for
/// `forms = (ω_0, ω_1, …, ω_{m-p-q})`.
pub fn timorin_check(forms: &[OneOneForm], p: usize, q: usize) -> Result<TimorinReport> {
    let m = common_dim(&forms.iter().collect::<Vec<_>>())?;
    check_dim(m)?;
    if p + q > m || forms.len() != m - p - q + 1 {
        return Err(Error::Arity {
            expected: (m + 1).saturating_sub(p + q),
            got: forms.len(),
        });
    }
    if let Some((index, f)) = forms.iter().enumerate().find(|(_, f)| !f.is_positive()) {
        return Err(Error::NonPositiveForm {
            index,
            min_eigenvalue: f.min_eigenvalue(),
        });
    }
    let (omega0, omegas) = (&forms[0], &forms[1..]);
    let lmat = lefschetz_matrix(m, omegas, p, q)?;
    let sv = singular_values(&lmat);
    let (smin, smax) = (sv.min(), sv.max());
    let iso = smin > KERNEL_TOL * smax;

    let basis = primitive_basis(omega0, omegas, p, q)?;
    let qmat = hr_form_matrix(m, omegas, p, q, &basis)?;
    let defect = max_abs(&(&qmat - qmat.adjoint()));
    let herm = (&qmat + qmat.adjoint()) * C64::new(0.5, 0.0);
    let mut eig: Vec<f64> = if herm.is_empty() {
        Vec::new()
    } else {
        herm.symmetric_eigenvalues().iter().copied().collect()
    };
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let largest = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let smallest = eig.first().copied().unwrap_or(f64::INFINITY);
    let margin = if largest > 0.0 { smallest / largest } else { 0.0 };
    Ok(TimorinReport {
        m,
        p,
        q,
        lefschetz_min_singular: smin,
        lefschetz_norm: smax,
        lefschetz_isomorphism: iso,
        primitive_dimension: basis.ncols(),
        expected_primitive_dimension: expected_primitive_dimension(m, p, q),
        hr_eigenvalues: eig,
        hermiticity_defect: defect,
        margin,
        pass: iso && smallest > 0.0,
    })
}

/// `Ω_A` on `u^⊥ ⊕ u^⊥ ≅ C^{n-1}`: the hermitian matrix is the tangential
/// Hessian of `h_A` at `u`.
pub fn contact_fiber_forms(bodies: &[Body], u: &[f64], frame: &TangentFrame) -> Result<Vec<OneOneForm>> {
    bodies
        .iter()
        .map(|b| {
            b.ensure_admissible()?;
            OneOneForm::from_real(&tangential_hessian(b, u, frame)?)
        })
        .collect()
}

/// `D(Q_1, …, Q_m) = [ω_{Q_1} ∧ ⋯ ∧ ω_{Q_m}]_top / m!`.
pub fn fiber_mixed_discriminant(forms: &[OneOneForm]) -> Result<f64> {
    let m = common_dim(&forms.iter().collect::<Vec<_>>())?;
    if forms.len() != m {
        return Err(Error::Arity {
            expected: m,
            got: forms.len(),
        });
    }
    let top = wedge_all(m, forms)?.top();
    Ok(top.re / (1..=m).product::<usize>() as f64)
}

/// Aggregate of [`timorin_check`] over seeded random positive tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimorinSummary {
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub trials: usize,
    pub passed: usize,
    /// Smallest `σ_min / σ_max` of the Lefschetz matrices.
    pub min_lefschetz_ratio: f64,
    pub primitive_dimension_matches: usize,
    pub expected_primitive_dimension: usize,
    /// Smallest HR eigenvalue margin seen.
    pub min_margin: f64,
    pub max_hermiticity_defect: f64,
    /// Trials whose verdict survived pull-back by a random `GL(m, C)` map.
    pub gl_invariant: usize,
    pub pass: bool,
}

pub fn timorin_suite(m: usize, p: usize, q: usize, trials: usize, seed: u64) -> Result<TimorinSummary> {
    check_dim(m)?;
    if p + q > m {
        return Err(Error::InvalidParameter(format!("p + q = {} exceeds m = {m}", p + q)));
    }
    let mut r = crate::random::rng(seed);
    let mut summary = TimorinSummary {
        m,
        p,
        q,
        trials,
        passed: 0,
        min_lefschetz_ratio: f64::INFINITY,
        primitive_dimension_matches: 0,
        expected_primitive_dimension: expected_primitive_dimension(m, p, q),
        min_margin: f64::INFINITY,
        max_hermiticity_defect: 0.0,
        gl_invariant: 0,
        pass: false,
    };
    for _ in 0..trials {
        let forms = (0..m - p - q + 1)
            .map(|_| random_positive_form(m, &mut r))
            .collect::<Result<Vec<_>>>()?;
        let report = timorin_check(&forms, p, q)?;
        let g = random_complex_matrix(m, &mut r);
        let moved = forms.iter().map(|f| f.pull_back(&g)).collect::<Result<Vec<_>>>()?;
        if timorin_check(&moved, p, q)?.pass == report.pass {
            summary.gl_invariant += 1;
        }
        summary.passed += report.pass as usize;
        summary.min_lefschetz_ratio = summary
            .min_lefschetz_ratio
            .min(report.lefschetz_min_singular / report.lefschetz_norm);
        summary.primitive_dimension_matches +=
            (report.primitive_dimension == report.expected_primitive_dimension) as usize;
        summary.min_margin = summary.min_margin.min(report.margin);
        summary.max_hermiticity_defect = summary.max_hermiticity_defect.max(report.hermiticity_defect);
    }
    summary.pass = summary.passed == trials
        && summary.primitive_dimension_matches == trials
        && summary.gl_invariant == trials;
    Ok(summary)
}
