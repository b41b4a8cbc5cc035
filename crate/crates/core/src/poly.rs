//! Polynomials on the unit sphere and their 1-homogeneous extensions.

use nalgebra::{DMatrix, DVector};

/// All exponent vectors of total degree `degree` in `n` variables, in
/// lexicographically descending order (`x_1^d` first).
pub fn monomial_exponents(n: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(n, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, degree as u32, &mut Vec::with_capacity(n), &mut out);
    out
}

pub fn eval_monomial(exps: &[u32], u: &[f64]) -> f64 {
    exps.iter()
        .zip(u)
        .map(|(&e, &x)| x.powi(e as i32))
        .product()
}

// x^e and its first two derivatives in a single variable.
fn power_derivs(x: f64, e: u32) -> (f64, f64, f64) {
    match e {
        0 => (1.0, 0.0, 0.0),
        1 => (x, 1.0, 0.0),
        _ => {
            let e_f = e as f64;
            (
                x.powi(e as i32),
                e_f * x.powi(e as i32 - 1),
                e_f * (e_f - 1.0) * x.powi(e as i32 - 2),
            )
        }
    }
}

/// A polynomial restricted to the sphere, `Σ c_α u^α`.
///
/// Terms of mixed total degree are allowed; the 1-homogeneous extension
/// `|x|·p(x/|x|)` is taken term by term as `c_α x^α |x|^{1-|α|}`, which is the
/// same function whatever representative of `p` on the sphere is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePolynomial {
    n: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl SpherePolynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn from_terms(n: usize, terms: Vec<(Vec<u32>, f64)>) -> Self {
        let terms = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        Self { n, terms }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    /// `self + scale * other`, merging equal exponents.
    pub fn add_scaled(&mut self, other: &SpherePolynomial, scale: f64) {
        for (exps, c) in &other.terms {
            match self.terms.iter_mut().find(|(e, _)| e == exps) {
                Some((_, existing)) => *existing += scale * c,
                None => self.terms.push((exps.clone(), scale * c)),
            }
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * eval_monomial(e, u)).sum()
    }

    /// Value, gradient and Hessian of the 1-homogeneous extension at a unit
    /// vector `u`.
    ///
    /// Plain polynomial derivatives are accumulated per total degree `d`
    /// (each monomial only touches the variables it contains); the factor
    /// `|x|^{1-d}` is applied once per degree.
    pub fn homogeneous_derivatives(&self, u: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        // per degree: value, gradient, hessian of the plain polynomial part
        let mut groups: Vec<(u32, f64, Vec<f64>, Vec<f64>)> = Vec::new();
        let mut support = [0usize; 8];
        let mut pd = [(0.0, 0.0, 0.0); 8];
        for (exps, c) in &self.terms {
            let degree: u32 = exps.iter().sum();
            let g = match groups.iter().position(|g| g.0 == degree) {
                Some(g) => g,
                None => {
                    groups.push((degree, 0.0, vec![0.0; n], vec![0.0; n * n]));
                    groups.len() - 1
                }
            };
            let mut len = 0;
            for (k, &e) in exps.iter().enumerate() {
                if e > 0 {
                    support[len] = k;
                    pd[len] = power_derivs(u[k], e);
                    len += 1;
                }
            }
            let (_, value, grad, hess) = &mut groups[g];
            // product of the values over the support, skipping up to two slots
            let prod = |skip_a: usize, skip_b: usize| -> f64 {
                (0..len)
                    .filter(|&t| t != skip_a && t != skip_b)
                    .map(|t| pd[t].0)
                    .product()
            };
            *value += c * prod(usize::MAX, usize::MAX);
            for a in 0..len {
                let i = support[a];
                grad[i] += c * pd[a].1 * prod(a, usize::MAX);
                hess[i * n + i] += c * pd[a].2 * prod(a, usize::MAX);
                for b in a + 1..len {
                    let j = support[b];
                    let v = c * pd[a].1 * pd[b].1 * prod(a, b);
                    hess[i * n + j] += v;
                    hess[j * n + i] += v;
                }
            }
        }
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for (degree, m, mg, mh) in &groups {
            let s = 1.0 - *degree as f64;
            value += m;
            for i in 0..n {
                grad[i] += mg[i] + s * m * u[i];
            }
            for i in 0..n {
                for j in 0..n {
                    let mut h = mh[i * n + j]
                        + s * (mg[i] * u[j] + mg[j] * u[i])
                        + s * (s - 2.0) * m * u[i] * u[j];
                    if i == j {
                        h += s * m;
                    }
                    hess[(i, j)] += h;
                }
            }
        }
        (value, grad, hess)
    }
}
