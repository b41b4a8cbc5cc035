//! Product quadrature on unit spheres `S^{n-1}`, `2 <= n <= 6`, real
//! spherical-harmonic bases, and sphere/ball volume constants.
//!
//! Grids are built recursively: a point of `S^{n-1}` is written as
//! `(sqrt(1-t^2) v, t)` with `v` on `S^{n-2}`, which turns the surface measure
//! into `(1-t^2)^{(n-3)/2} dt dσ_{n-2}`. The polar variable is integrated by
//! the symmetric Gauss–Jacobi rule for that weight and the final circle by
//! the uniform trapezoid rule. A grid of resolution `R` integrates every
//! polynomial of degree `<= R - 1` exactly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::{eval_monomial, monomial_exponents, SpherePolynomial};
use crate::sum::{weighted_sum, weighted_sum_complex};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 6;
pub const MIN_RESOLUTION: usize = 4;

/// `Γ(k/2)` for a positive integer `k`, by the half-integer recursion.
fn gamma_half(k: u32) -> f64 {
    debug_assert!(k >= 1);
    let (mut value, mut j) = if k % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while j < k {
        value *= j as f64 / 2.0;
        j += 2;
    }
    value
}

// π^{k/2}
fn pi_half_power(k: u32) -> f64 {
    let whole = PI.powi((k / 2) as i32);
    if k % 2 == 1 {
        whole * PI.sqrt()
    } else {
        whole
    }
}

/// Surface area `s_d` of the unit sphere `S^d ⊂ R^{d+1}`.
///
/// `d = 0` is accepted and gives `s_0 = 2` (two points); it appears in the
/// closed-form spectral bounds for the smallest parameters.
pub fn sphere_volume(d: i64) -> Result<f64> {
    if d < 0 {
        return Err(Error::InvalidParameter(format!(
            "sphere dimension must be nonnegative, got {d}"
        )));
    }
    let k = (d + 1) as u32;
    Ok(2.0 * pi_half_power(k) / gamma_half(k))
}

/// Volume `v_d` of the unit ball in `R^d`.
pub fn ball_volume(d: i64) -> Result<f64> {
    if d < 0 {
        return Err(Error::InvalidParameter(format!(
            "ball dimension must be nonnegative, got {d}"
        )));
    }
    let d = d as u32;
    Ok(pi_half_power(d) / gamma_half(d + 2))
}

fn check_dim(n: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&n) {
        return Err(Error::UnsupportedDimension {
            n,
            min: MIN_DIM,
            max: MAX_DIM,
        });
    }
    Ok(())
}

/// Gauss rule for the weight `(1 - t^2)^a` on `[-1, 1]`, `a >= 0`.
///
/// Golub–Welsch for starting nodes, Newton polish on the orthonormal
/// recurrence, Christoffel numbers `1 / Σ p_k(t)^2` for the weights.
pub(crate) fn gauss_gegenbauer(points: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 1);
    // Monic recurrence coefficients of the symmetric Jacobi family.
    let beta = |k: usize| -> f64 {
        let k = k as f64;
        k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0))
    };
    // μ0 = ∫(1-t^2)^a dt = √π Γ(a+1)/Γ(a+3/2), with 2a an integer here.
    let two_a = (2.0 * a).round() as u32;
    let mu0 = PI.sqrt() * gamma_half(two_a + 2) / gamma_half(two_a + 3);

    let mut jacobi = DMatrix::<f64>::zeros(points, points);
    for k in 1..points {
        let b = beta(k).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let sqrt_beta: Vec<f64> = (0..=points).map(|k| if k == 0 { 0.0 } else { beta(k).sqrt() }).collect();
    // Orthonormal p_0..p_N at t, plus derivative of p_N, plus Σ_{k<N} p_k^2.
    let eval = |t: f64| -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut p = 1.0 / mu0.sqrt();
        let mut dp_prev = 0.0;
        let mut dp = 0.0;
        let mut sumsq = 0.0;
        for k in 0..points {
            sumsq += p * p;
            let p_next = (t * p - sqrt_beta[k] * p_prev) / sqrt_beta[k + 1];
            let dp_next = (p + t * dp - sqrt_beta[k] * dp_prev) / sqrt_beta[k + 1];
            p_prev = p;
            p = p_next;
            dp_prev = dp;
            dp = dp_next;
        }
        (p, dp, sumsq)
    };

    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = eval(*t);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    // Exact symmetry of the rule.
    for i in 0..points / 2 {
        let j = points - 1 - i;
        let m = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -m;
        nodes[j] = m;
    }
    if points % 2 == 1 {
        nodes[points / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes.iter().map(|&t| 1.0 / eval(t).2).collect();
    for i in 0..points / 2 {
        let j = points - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    (nodes, weights)
}

/// Quadrature nodes and weights on `S^{n-1}`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    n: usize,
    resolution: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        check_dim(n)?;
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
            )));
        }
        let (nodes, weights) = build_nodes(n, resolution);
        Ok(Self {
            n,
            resolution,
            nodes,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Highest total degree of polynomials integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        self.resolution - 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.n)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i f(node_i)`. Node values may be computed in parallel; the
    /// reduction is always compensated and in node order.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.node(i)))
            .collect();
        self.integrate_values(&values)
    }

    /// Like [`integrate`](Self::integrate) for a fallible integrand.
    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.node(i)))
            .collect::<Result<Vec<f64>>>()?;
        self.integrate_values(&values)
    }

    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::Arity {
                expected: self.len(),
                got: values.len(),
            });
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NumericInput { node, value });
        }
        Ok(weighted_sum(&self.weights, values))
    }

    pub fn integrate_complex<F>(&self, f: F) -> Result<Complex<f64>>
    where
        F: Fn(&[f64]) -> Complex<f64> + Sync,
    {
        let values: Vec<Complex<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.node(i)))
            .collect();
        if let Some((node, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.re.is_finite() && v.im.is_finite()))
        {
            let value = if v.re.is_finite() { v.im } else { v.re };
            return Err(Error::NumericInput { node, value });
        }
        Ok(weighted_sum_complex(&self.weights, &values))
    }
}

/// Builds the quadrature grid on `S^{n-1}`.
pub fn build_grid(n: usize, resolution: usize) -> Result<SphereGrid> {
    SphereGrid::new(n, resolution)
}

fn build_nodes(n: usize, resolution: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 2 {
        let h = 2.0 * PI / resolution as f64;
        let mut nodes = Vec::with_capacity(2 * resolution);
        for j in 0..resolution {
            // half-step offset keeps nodes off the coordinate axes
            let phi = h * (j as f64 + 0.5);
            nodes.push(phi.cos());
            nodes.push(phi.sin());
        }
        return (nodes, vec![h; resolution]);
    }
    let (inner_nodes, inner_weights) = build_nodes(n - 1, resolution);
    let polar_points = resolution.div_ceil(2);
    let (ts, tw) = gauss_gegenbauer(polar_points, (n as f64 - 3.0) / 2.0);
    let inner_len = inner_weights.len();
    let mut nodes = Vec::with_capacity(n * polar_points * inner_len);
    let mut weights = Vec::with_capacity(polar_points * inner_len);
    for (t, w) in ts.iter().zip(&tw) {
        let radial = (1.0 - t * t).sqrt();
        for (v, iw) in inner_nodes.chunks_exact(n - 1).zip(&inner_weights) {
            let start = nodes.len();
            nodes.extend(v.iter().map(|x| radial * x));
            nodes.push(*t);
            let norm = nodes[start..].iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut nodes[start..] {
                *x /= norm;
            }
            weights.push(w * iw);
        }
    }
    (nodes, weights)
}

/// Dimension of the space of degree-`d` spherical harmonics in `n` variables.
pub fn harmonic_dimension(n: usize, d: usize) -> usize {
    fn binom(a: usize, b: usize) -> usize {
        if b > a {
            return 0;
        }
        (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
    }
    let total = binom(n + d - 1, d);
    if d >= 2 {
        total - binom(n + d - 3, d - 2)
    } else {
        total
    }
}

/// One member of an orthonormal real spherical-harmonic basis.
#[derive(Debug, Clone)]
pub struct Harmonic {
    pub degree: usize,
    /// Index among the members of the same degree.
    pub index: usize,
    pub polynomial: SpherePolynomial,
}

/// Orthonormal real spherical harmonics up to a maximal degree, tabulated on
/// a grid.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    n: usize,
    max_degree: usize,
    members: Vec<Harmonic>,
    /// `values[(node, member)]`
    values: DMatrix<f64>,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Harmonic] {
        &self.members
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn degree_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_degree + 1];
        for m in &self.members {
            counts[m.degree] += 1;
        }
        counts
    }

    /// Quadrature Gram matrix of the tabulated members.
    pub fn gram(&self, grid: &SphereGrid) -> DMatrix<f64> {
        let k = self.len();
        let mut g = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let prod: Vec<f64> = (0..grid.len())
                    .map(|i| self.values[(i, a)] * self.values[(i, b)])
                    .collect();
                let v = weighted_sum(grid.weights(), &prod);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    /// Quadrature coefficients `∫ f Y_j dσ` for tabulated node values of `f`.
    pub fn moments(&self, grid: &SphereGrid, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|j| {
                let prod: Vec<f64> = f
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * self.values[(i, j)])
                    .collect();
                weighted_sum(grid.weights(), &prod)
            })
            .collect()
    }
}

/// Orthonormal spherical harmonics of degree `<= max_degree`, obtained by
/// modified Gram–Schmidt on monomials in degree order under the grid inner
/// product.
pub fn harmonic_basis(grid: &SphereGrid, max_degree: usize) -> Result<HarmonicBasis> {
    if 2 * max_degree > grid.exactness_degree() {
        return Err(Error::ResolutionInsufficient {
            degree: max_degree,
            exactness: grid.exactness_degree(),
        });
    }
    let n = grid.dim();
    let w = grid.weights();
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        weighted_sum(w, &prod)
    };

    let mut members: Vec<Harmonic> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for degree in 0..=max_degree {
        let mut index = 0;
        for exps in monomial_exponents(n, degree) {
            let mut v: Vec<f64> = grid.nodes().map(|u| eval_monomial(&exps, u)).collect();
            let mut poly = SpherePolynomial::from_terms(n, vec![(exps.clone(), 1.0)]);
            let original = inner(&v, &v).sqrt();
            for _ in 0..2 {
                for (col, member) in columns.iter().zip(&members) {
                    let c = inner(&v, col);
                    for (x, y) in v.iter_mut().zip(col) {
                        *x -= c * y;
                    }
                    poly.add_scaled(&member.polynomial, -c);
                }
            }
            let norm = inner(&v, &v).sqrt();
            if norm <= 1e-8 * original {
                continue;
            }
            for x in &mut v {
                *x /= norm;
            }
            let scaled = SpherePolynomial::from_terms(
                n,
                poly.terms().iter().map(|(e, c)| (e.clone(), c / norm)).collect(),
            );
            members.push(Harmonic {
                degree,
                index,
                polynomial: scaled,
            });
            columns.push(v);
            index += 1;
        }
        let expected = harmonic_dimension(n, degree);
        if index != expected {
            return Err(Error::InvalidParameter(format!(
                "harmonic construction found {index} members of degree {degree}, expected {expected}"
            )));
        }
    }
    let values = DMatrix::from_fn(grid.len(), columns.len(), |i, j| columns[j][i]);
    Ok(HarmonicBasis {
        n,
        max_degree,
        members,
        values,
    })
}

type CanonicalCache = Mutex<HashMap<(usize, usize), Arc<Vec<SpherePolynomial>>>>;

/// The degree-`degree` members of the reference harmonic basis in dimension
/// `n`. Reference bases are built once on a grid that is exact for their
/// Gram matrix, so the result does not depend on any user grid.
pub fn canonical_harmonics(n: usize, degree: usize) -> Result<Arc<Vec<SpherePolynomial>>> {
    static CACHE: OnceLock<CanonicalCache> = OnceLock::new();
    check_dim(n)?;
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(n, degree)) {
        return Ok(hit.clone());
    }
    let grid = SphereGrid::new(n, (2 * degree + 2).max(MIN_RESOLUTION))?;
    let basis = harmonic_basis(&grid, degree)?;
    let polys: Vec<SpherePolynomial> = basis
        .members
        .into_iter()
        .filter(|m| m.degree == degree)
        .map(|m| m.polynomial)
        .collect();
    let polys = Arc::new(polys);
    cache
        .lock()
        .unwrap()
        .insert((n, degree), polys.clone());
    Ok(polys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn volumes_closed_forms() {
        assert!(rel(sphere_volume(1).unwrap(), 2.0 * PI) < 1e-15);
        assert!(rel(sphere_volume(2).unwrap(), 4.0 * PI) < 1e-15);
        assert!(rel(sphere_volume(3).unwrap(), 2.0 * PI * PI) < 1e-15);
        assert!(rel(ball_volume(2).unwrap(), PI) < 1e-15);
        assert!(rel(ball_volume(6).unwrap(), PI.powi(3) / 6.0) < 1e-15);
        assert_eq!(sphere_volume(0).unwrap(), 2.0);
        assert_eq!(ball_volume(0).unwrap(), 1.0);
        assert!(sphere_volume(-1).is_err());
        assert!(ball_volume(-3).is_err());
    }

    #[test]
    fn sphere_is_derivative_of_ball() {
        for d in 1..=12i64 {
            let s = sphere_volume(d - 1).unwrap();
            let v = ball_volume(d).unwrap();
            assert!(rel(s, d as f64 * v) < 1e-15, "d = {d}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            SphereGrid::new(7, 10),
            Err(Error::UnsupportedDimension { n: 7, .. })
        ));
        assert!(matches!(SphereGrid::new(1, 10), Err(Error::UnsupportedDimension { .. })));
        assert!(matches!(SphereGrid::new(3, 3), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn gegenbauer_rule_is_exact() {
        for &(points, a) in &[(5usize, 0.0), (6, 0.5), (7, 1.0), (4, 1.5)] {
            let (t, w) = gauss_gegenbauer(points, a);
            let mu0: f64 = w.iter().sum();
            // ∫ t^2 (1-t^2)^a dt = μ0 / (2a + 3)
            let m2: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
            assert!(rel(m2, mu0 / (2.0 * a + 3.0)) < 1e-13, "{points} {a}");
            let m_odd: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(3)).sum();
            assert!(m_odd.abs() < 1e-15);
        }
    }

    #[test]
    fn grid_invariants() {
        for n in 2..=6 {
            let grid = SphereGrid::new(n, 8).unwrap();
            for u in grid.nodes() {
                let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-14);
            }
            assert!(grid.weights().iter().all(|&w| w > 0.0));
            let total = grid.integrate(|_| 1.0).unwrap();
            assert!(rel(total, sphere_volume(n as i64 - 1).unwrap()) < 1e-12, "n = {n}");
            for i in 0..n {
                assert!(grid.integrate(|u| u[i]).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_measure() {
        let grid = build_grid(2, 64).unwrap();
        assert!((grid.integrate(|_| 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!(grid.integrate(|u| u[0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn second_and_fourth_moments_s2() {
        let grid = build_grid(3, 16).unwrap();
        let m2 = grid.integrate(|u| u[0] * u[0]).unwrap();
        assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-12);
        let m4 = grid.integrate(|u| u[0].powi(4)).unwrap();
        assert!((m4 - 4.0 * PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let grid = build_grid(2, 8).unwrap();
        let err = grid
            .integrate(|u| if u[0] > 0.9 { f64::NAN } else { 1.0 })
            .unwrap_err();
        assert!(matches!(err, Error::NumericInput { node: 0, .. }));
    }

    #[test]
    fn harmonic_counts_and_orthonormality() {
        let grid = build_grid(2, 16).unwrap();
        let basis = harmonic_basis(&grid, 3).unwrap();
        assert_eq!(basis.degree_counts(), vec![1, 2, 2, 2]);

        let grid = build_grid(3, 12).unwrap();
        let basis = harmonic_basis(&grid, 2).unwrap();
        assert_eq!(basis.degree_counts(), vec![1, 3, 5]);
        let g = basis.gram(&grid);
        let err = (g - DMatrix::identity(9, 9)).abs().max();
        assert!(err < 1e-10, "gram error {err}");

        let y0 = basis.values()[(0, 0)];
        assert!((y0 - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn harmonic_basis_requires_resolution() {
        let grid = build_grid(3, 6).unwrap();
        assert!(matches!(
            harmonic_basis(&grid, 3),
            Err(Error::ResolutionInsufficient { .. })
        ));
    }

    #[test]
    fn harmonic_polynomials_match_tabulation() {
        let grid = build_grid(4, 10).unwrap();
        let basis = harmonic_basis(&grid, 3).unwrap();
        for (j, m) in basis.members().iter().enumerate() {
            for (i, u) in grid.nodes().enumerate().step_by(37) {
                assert!((m.polynomial.eval(u) - basis.values()[(i, j)]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn harmonic_dimension_formula() {
        assert_eq!(harmonic_dimension(3, 4), 9);
        assert_eq!(harmonic_dimension(2, 5), 2);
        assert_eq!(harmonic_dimension(4, 2), 9);
        assert_eq!(harmonic_dimension(5, 4), 55);
    }
}
