//! Formal linear combinations of mixed-volume valuations and the convolution
//! algebra they span.
//!
//! A generator `gen(A_1, …, A_m)` is the valuation `K ↦ V(A_1, …, A_m, K[n-m])`
//! of degree `n - m`. Convolution acts on generators by
//!
//! ```text
//! gen(S) * gen(T) = (n-|S|)! (n-|T|)! / (n! (n-|S|-|T|)!) · gen(S ⧺ T)
//! ```
//!
//! and vanishes when `|S| + |T| > n`. Tuples are kept sorted by body key, so
//! commutativity holds exactly.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Body;
use crate::mixed::MixedVolumes;
use crate::random::{probe_bodies, DEFAULT_PROBE_SEED};
use crate::sphere::{harmonic_basis, SphereGrid};

pub type C64 = Complex<f64>;

fn factorial_u128(k: usize) -> u128 {
    (1..=k as u128).product()
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(n-k)!(n-l)! / (n!(n-k-l)!)`, reduced in integers before conversion.
pub fn convolution_factor(n: usize, k: usize, l: usize) -> f64 {
    if k + l > n {
        return 0.0;
    }
    let num = factorial_u128(n - k) * factorial_u128(n - l);
    let den = factorial_u128(n) * factorial_u128(n - k - l);
    let g = gcd(num, den);
    (num / g) as f64 / (den / g) as f64
}

/// `V(A_1, …, A_m, ·[n-m])`.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    bodies: Vec<Body>,
}

impl Generator {
    pub fn new(n: usize, mut bodies: Vec<Body>) -> Result<Generator> {
        if bodies.len() > n {
            return Err(Error::Arity {
                expected: n,
                got: bodies.len(),
            });
        }
        if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
            return Err(Error::InvalidInput(format!(
                "body of dimension {} in a generator of dimension {n}",
                b.dim()
            )));
        }
        bodies.sort_by(|a, b| a.key().cmp(b.key()));
        Ok(Generator { n, bodies })
    }

    /// The volume valuation `gen(∅)`.
    pub fn volume(n: usize) -> Generator {
        Generator {
            n,
            bodies: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn degree(&self) -> usize {
        self.n - self.bodies.len()
    }

    fn key(&self) -> Vec<String> {
        self.bodies.iter().map(|b| b.key().to_string()).collect()
    }

    /// Concatenation, or `None` when the tuple would exceed `n`.
    fn concat(&self, other: &Generator) -> Option<Generator> {
        if self.bodies.len() + other.bodies.len() > self.n {
            return None;
        }
        let mut bodies = self.bodies.clone();
        bodies.extend(other.bodies.iter().cloned());
        Some(Generator::new(self.n, bodies).expect("length checked"))
    }

    /// `V(A_1, …, A_m, K[n-m])`.
    pub fn evaluate(&self, mv: &MixedVolumes, body: &Body) -> Result<f64> {
        let mut args = self.bodies.clone();
        args.extend(std::iter::repeat_n(body.clone(), self.n - self.bodies.len()));
        mv.mixed_volume(&args)
    }
}

/// A finite linear combination of generators with complex coefficients.
#[derive(Debug, Clone)]
pub struct FormalValuation {
    n: usize,
    terms: BTreeMap<Vec<String>, (Generator, C64)>,
}

impl FormalValuation {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// The identity element `vol`.
    pub fn volume(n: usize) -> Self {
        Self::from_generator(Generator::volume(n), C64::new(1.0, 0.0))
    }

    pub fn from_generator(g: Generator, coef: C64) -> Self {
        let mut v = Self::zero(g.dim());
        v.add_term(g, coef);
        v
    }

    /// `coef · V(bodies, ·[n-m])`.
    pub fn mixed(n: usize, bodies: Vec<Body>, coef: f64) -> Result<Self> {
        Ok(Self::from_generator(Generator::new(n, bodies)?, C64::new(coef, 0.0)))
    }

    /// `vol(· + A) = Σ_j C(n,j) V(A[j], ·[n-j])`.
    pub fn translated_volume(body: &Body) -> Result<Self> {
        let n = body.dim();
        let mut v = Self::zero(n);
        let mut binom = 1.0;
        for j in 0..=n {
            v.add_term(Generator::new(n, vec![body.clone(); j])?, C64::new(binom, 0.0));
            binom = binom * (n - j) as f64 / (j + 1) as f64;
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Generator, C64)> {
        self.terms.values().map(|(g, c)| (g, *c))
    }

    /// Common degree of all terms, if there is one.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.values().map(|(g, _)| g.degree());
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn add_term(&mut self, g: Generator, coef: C64) {
        assert_eq!(g.dim(), self.n, "generator dimension mismatch");
        let key = g.key();
        let remove = match self.terms.get_mut(&key) {
            Some((_, c)) => {
                *c += coef;
                *c == C64::new(0.0, 0.0)
            }
            None => {
                if coef != C64::new(0.0, 0.0) {
                    self.terms.insert(key.clone(), (g, coef));
                }
                false
            }
        };
        if remove {
            self.terms.remove(&key);
        }
    }

    fn check_dim(&self, other: &FormalValuation) -> Result<()> {
        if self.n != other.n {
            return Err(Error::InvalidInput(format!(
                "valuations of dimensions {} and {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FormalValuation) -> Result<FormalValuation> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (g, c) in other.terms() {
            out.add_term(g.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: C64) -> FormalValuation {
        let mut out = Self::zero(self.n);
        for (g, c) in self.terms() {
            out.add_term(g.clone(), c * factor);
        }
        out
    }

    /// `Σ c · V(A_1, …, A_m, K[n-m])`.
    pub fn evaluate(&self, mv: &MixedVolumes, body: &Body) -> Result<C64> {
        if body.dim() != self.n || mv.dim() != self.n {
            return Err(Error::InvalidInput("dimension mismatch in evaluation".into()));
        }
        let mut re = crate::sum::NeumaierSum::new();
        let mut im = crate::sum::NeumaierSum::new();
        for (g, c) in self.terms() {
            let v = g.evaluate(mv, body)?;
            re.add(c.re * v);
            im.add(c.im * v);
        }
        Ok(C64::new(re.value(), im.value()))
    }
}

/// Convolution product.
pub fn convolve(phi: &FormalValuation, psi: &FormalValuation) -> Result<FormalValuation> {
    phi.check_dim(psi)?;
    let n = phi.n;
    let mut out = FormalValuation::zero(n);
    for (g, a) in phi.terms() {
        for (h, b) in psi.terms() {
            if let Some(gh) = g.concat(h) {
                let f = convolution_factor(n, g.bodies.len(), h.bodies.len());
                out.add_term(gh, a * b * f);
            }
        }
    }
    Ok(out)
}

/// `L_C φ = φ * nV(C, ·[n-1])`; on generators `L_C gen(S) = (n-|S|) gen(S ⧺ C)`.
pub fn lefschetz(body: &Body, phi: &FormalValuation) -> Result<FormalValuation> {
    body.ensure_admissible()?;
    let n = phi.n;
    if body.dim() != n {
        return Err(Error::InvalidInput("Lefschetz body has the wrong dimension".into()));
    }
    let mut out = FormalValuation::zero(n);
    let c = Generator::new(n, vec![body.clone()])?;
    for (g, a) in phi.terms() {
        if let Some(gc) = g.concat(&c) {
            out.add_term(gc, a * (n - g.bodies.len()) as f64);
        }
    }
    Ok(out)
}

/// `L_{C_1} ∘ ⋯ ∘ L_{C_m}`.
pub fn lefschetz_tuple(bodies: &[Body], phi: &FormalValuation) -> Result<FormalValuation> {
    bodies
        .iter()
        .rev()
        .try_fold(phi.clone(), |acc, b| lefschetz(b, &acc))
}

/// `⟨φ, ψ⟩ = (φ * ψ)({0})`. Only the degree-0 part of the product survives
/// at a point.
pub fn poincare_pairing(mv: &MixedVolumes, phi: &FormalValuation, psi: &FormalValuation) -> Result<C64> {
    let product = convolve(phi, psi)?;
    let mut re = crate::sum::NeumaierSum::new();
    let mut im = crate::sum::NeumaierSum::new();
    for (g, c) in product.terms().filter(|(g, _)| g.degree() == 0) {
        let v = mv.mixed_volume(&g.bodies)?;
        re.add(c.re * v);
        im.add(c.im * v);
    }
    Ok(C64::new(re.value(), im.value()))
}

/// Thresholds used by the Hodge–Riemann checks; all relative to the scale
/// reported alongside each quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HrOptions {
    /// Admissible primitivity residual.
    pub primitivity_tol: f64,
    /// Admissible negative part of the Hodge–Riemann value.
    pub sign_tol: f64,
    /// Probe evaluations below this count as the zero valuation.
    pub zero_tol: f64,
    /// Relative singular-value cutoff for numerical null spaces.
    pub null_tol: f64,
    /// Highest harmonic degree of the density moments used for `k = 2`.
    pub moment_degree: usize,
    pub probe_seed: u64,
}

impl Default for HrOptions {
    fn default() -> Self {
        Self {
            primitivity_tol: 1e-6,
            sign_tol: 1e-9,
            zero_tol: 1e-8,
            null_tol: 1e-9,
            moment_degree: 4,
            probe_seed: DEFAULT_PROBE_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitivityMethod {
    /// `k = 0`: the hypothesis involves more than `n` arguments.
    Vacuous,
    /// `k = 1`: a single number.
    Scalar,
    /// `k = 2`: sup-norm of the combined area density modulo linear functions.
    Density,
    /// `k >= 3`: evaluation of `L_C φ` on a probe set; heuristic.
    ProbeSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitivityReport {
    pub k: usize,
    pub method: PrimitivityMethod,
    pub residual: f64,
    pub scale: f64,
    pub approximate: bool,
    pub probe_seed: Option<u64>,
}

impl PrimitivityReport {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// Outcome of a Hodge–Riemann verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrReport {
    pub n: usize,
    pub k: usize,
    pub x: Vec<f64>,
    /// `G_ij = V(A^i ⧺ A^j ⧺ C_1, …, C_{n-2k})`.
    pub gram: Vec<Vec<f64>>,
    pub constraint_residuals: Vec<f64>,
    pub primitivity: PrimitivityReport,
    /// Eigenvalues of `(-1)^k G` on the numerically primitive subspace, ascending.
    pub eigenvalues: Vec<f64>,
    pub primitive_dimension: usize,
    /// `(-1)^k xᵀ G x`.
    pub hr_value: f64,
    /// `q_C(φ) = (-1)^k (n-k)!²/n! · xᵀ G x`.
    pub q_value: f64,
    /// `|x|ᵀ |G| |x|`.
    pub scale: f64,
    /// Largest probe evaluation of `Σ x_i V(A^i, K[n-k])`, relative.
    pub valuation_size: f64,
    pub valuation_nonzero: bool,
    /// `hr_value / scale`.
    pub margin: f64,
    pub pass: bool,
}

fn validate_hr_input(
    n: usize,
    c_full: &[Body],
    tuples: &[Vec<Body>],
) -> Result<usize> {
    let k = tuples.first().map(Vec::len).unwrap_or(0);
    if tuples.iter().any(|t| t.len() != k) {
        return Err(Error::InvalidInput("tuples must share a common length k".into()));
    }
    if 2 * k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n/2 for n = {n}")));
    }
    if c_full.len() != n - 2 * k + 1 {
        return Err(Error::Arity {
            expected: n - 2 * k + 1,
            got: c_full.len(),
        });
    }
    Ok(k)
}

fn concat(parts: &[&[Body]]) -> Vec<Body> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// Gram matrix `G_ij = V(A^i ⧺ A^j ⧺ C_rest)`.
pub fn hr_gram(mv: &MixedVolumes, c_rest: &[Body], tuples: &[Vec<Body>]) -> Result<DMatrix<f64>> {
    let n = mv.dim();
    let count = tuples.len();
    if let Some(t) = tuples.iter().find(|t| 2 * t.len() + c_rest.len() != n) {
        return Err(Error::Arity {
            expected: n - c_rest.len(),
            got: 2 * t.len(),
        });
    }
    let pairs: Vec<(usize, usize)> = (0..count)
        .flat_map(|i| (i..count).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| mv.mixed_volume(&concat(&[&tuples[i], &tuples[j], c_rest])))
        .collect::<Result<Vec<f64>>>()?;
    let mut g = DMatrix::zeros(count, count);
    for (&(i, j), v) in pairs.iter().zip(values) {
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    Ok(g)
}

/// `Σ x_i gen(A^i)`.
pub fn combination(n: usize, tuples: &[Vec<Body>], x: &[f64]) -> Result<FormalValuation> {
    let mut phi = FormalValuation::zero(n);
    for (t, &xi) in tuples.iter().zip(x) {
        phi.add_term(Generator::new(n, t.clone())?, C64::new(xi, 0.0));
    }
    Ok(phi)
}

/// The linear constraints whose common kernel is the primitive subspace,
/// one column per tuple, with a scale per row.
struct Constraints {
    method: PrimitivityMethod,
    matrix: DMatrix<f64>,
}

fn linear_part_removed(grid: &SphereGrid, values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.dim();
    // Least squares against the coordinate functions with the grid's own Gram
    // matrix (exact for degree 2).
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for a in 0..n {
        for b in a..n {
            let v = grid.integrate_values(
                &grid.nodes().map(|u| u[a] * u[b]).collect::<Vec<_>>(),
            )?;
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
        rhs[a] = grid.integrate_values(
            &grid.nodes().zip(values).map(|(u, s)| u[a] * s).collect::<Vec<_>>(),
        )?;
    }
    let coef = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("degenerate coordinate Gram matrix".into()))?
        .solve(&rhs);
    Ok(grid
        .nodes()
        .zip(values)
        .map(|(u, s)| s - (0..n).map(|a| coef[a] * u[a]).sum::<f64>())
        .collect())
}

fn density_columns(mv: &MixedVolumes, c_full: &[Body], tuples: &[Vec<Body>]) -> Result<Vec<Vec<f64>>> {
    tuples
        .iter()
        .map(|t| mv.area_density_values(&concat(&[t, c_full])))
        .collect()
}

fn constraints(
    mv: &MixedVolumes,
    c_full: &[Body],
    tuples: &[Vec<Body>],
    k: usize,
    opts: &HrOptions,
    probes: &[Body],
) -> Result<Constraints> {
    let n = mv.dim();
    let count = tuples.len();
    match k {
        0 => Ok(Constraints {
            method: PrimitivityMethod::Vacuous,
            matrix: DMatrix::zeros(0, count),
        }),
        1 => {
            let row = tuples
                .iter()
                .map(|t| mv.mixed_volume(&concat(&[t, c_full])))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Constraints {
                method: PrimitivityMethod::Scalar,
                matrix: DMatrix::from_row_slice(1, count, &row),
            })
        }
        2 => {
            let grid = mv.grid();
            let degree = opts.moment_degree.min(grid.exactness_degree() / 2);
            let basis = harmonic_basis(grid, degree)?;
            let columns = density_columns(mv, c_full, tuples)?;
            // degree-1 moments are dropped: linear parts of the density are
            // invisible to the valuation
            let rows: Vec<usize> = basis
                .members()
                .iter()
                .enumerate()
                .filter(|(_, m)| m.degree != 1)
                .map(|(j, _)| j)
                .collect();
            let mut matrix = DMatrix::zeros(rows.len(), count);
            for (c, col) in columns.iter().enumerate() {
                let moments = basis.moments(grid, col);
                for (r, &j) in rows.iter().enumerate() {
                    matrix[(r, c)] = moments[j];
                }
            }
            Ok(Constraints {
                method: PrimitivityMethod::Density,
                matrix,
            })
        }
        _ => {
            let mut matrix = DMatrix::zeros(probes.len(), count);
            for (c, t) in tuples.iter().enumerate() {
                let phi = lefschetz_tuple(c_full, &combination(n, std::slice::from_ref(t), &[1.0])?)?;
                for (r, p) in probes.iter().enumerate() {
                    matrix[(r, c)] = phi.evaluate(mv, p)?.re;
                }
            }
            Ok(Constraints {
                method: PrimitivityMethod::ProbeSet,
                matrix,
            })
        }
    }
}

/// Residual of the primitivity hypothesis
/// `Σ x_i V(A^i, C_0, …, C_{n-2k}, ·[k-1]) = 0`.
pub fn primitivity_residual(
    mv: &MixedVolumes,
    c_full: &[Body],
    tuples: &[Vec<Body>],
    x: &[f64],
    opts: &HrOptions,
) -> Result<PrimitivityReport> {
    let n = mv.dim();
    let k = validate_hr_input(n, c_full, tuples)?;
    if x.len() != tuples.len() {
        return Err(Error::Arity {
            expected: tuples.len(),
            got: x.len(),
        });
    }
    let report = |method, residual, scale, approximate, probe_seed| PrimitivityReport {
        k,
        method,
        residual,
        scale,
        approximate,
        probe_seed,
    };
    match k {
        0 => Ok(report(PrimitivityMethod::Vacuous, 0.0, 0.0, false, None)),
        1 => {
            let values = tuples
                .iter()
                .map(|t| mv.mixed_volume(&concat(&[t, c_full])))
                .collect::<Result<Vec<f64>>>()?;
            let residual = crate::sum::compensated_sum(
                &values.iter().zip(x).map(|(v, xi)| v * xi).collect::<Vec<_>>(),
            )
            .abs();
            let scale = values.iter().zip(x).map(|(v, xi)| (v * xi).abs()).sum();
            Ok(report(PrimitivityMethod::Scalar, residual, scale, false, None))
        }
        2 => {
            let columns = density_columns(mv, c_full, tuples)?;
            let len = mv.grid().len();
            let combined: Vec<f64> = (0..len)
                .map(|i| {
                    crate::sum::compensated_sum(
                        &columns.iter().zip(x).map(|(c, xi)| c[i] * xi).collect::<Vec<_>>(),
                    )
                })
                .collect();
            let reduced = linear_part_removed(mv.grid(), &combined)?;
            let residual = reduced.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = columns
                .iter()
                .zip(x)
                .map(|(c, xi)| xi.abs() * c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .sum();
            Ok(report(PrimitivityMethod::Density, residual, scale, false, None))
        }
        _ => {
            let probes = probe_bodies(n, opts.probe_seed, mv.grid())?;
            let phi = lefschetz_tuple(c_full, &combination(n, tuples, x)?)?;
            let mut residual = 0.0f64;
            for p in &probes {
                residual = residual.max(phi.evaluate(mv, p)?.norm());
            }
            let mut scale = 0.0;
            for (t, xi) in tuples.iter().zip(x) {
                let single = lefschetz_tuple(c_full, &combination(n, std::slice::from_ref(t), &[1.0])?)?;
                let mut largest = 0.0f64;
                for p in &probes {
                    largest = largest.max(single.evaluate(mv, p)?.norm());
                }
                scale += xi.abs() * largest;
            }
            Ok(report(
                PrimitivityMethod::ProbeSet,
                residual,
                scale,
                true,
                Some(opts.probe_seed),
            ))
        }
    }
}

/// Orthonormal basis of the numerical kernel of `m` (columns).
fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 || m.abs().max() == 0.0 {
        return DMatrix::identity(cols, cols);
    }
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let kernel: Vec<DVector<f64>> = (0..cols)
        .filter(|&i| svd.singular_values[i] <= rel_tol * sigma_max)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if kernel.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&kernel)
    }
}

fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Largest probe evaluation of `Σ x_i V(A^i, K[n-k])` relative to the sum of
/// the individual magnitudes.
fn valuation_size(mv: &MixedVolumes, tuples: &[Vec<Body>], x: &[f64], probes: &[Body]) -> Result<f64> {
    let n = mv.dim();
    let mut worst = 0.0f64;
    for p in probes {
        let mut total = crate::sum::NeumaierSum::new();
        let mut scale = 0.0;
        for (t, xi) in tuples.iter().zip(x) {
            let v = Generator::new(n, t.clone())?.evaluate(mv, p)?;
            total.add(xi * v);
            scale += (xi * v).abs();
        }
        if scale > 0.0 {
            worst = worst.max(total.value().abs() / scale);
        }
    }
    Ok(worst)
}

/// Verifies `(-1)^k Σ x_i x_j V(A^i, A^j, C_1, …, C_{n-2k}) >= 0` for a
/// primitive `x`, with equality exactly when `Σ x_i gen(A^i)` vanishes.
pub fn hr_check(
    mv: &MixedVolumes,
    c_full: &[Body],
    tuples: &[Vec<Body>],
    x: &[f64],
    opts: &HrOptions,
) -> Result<HrReport> {
    let n = mv.dim();
    let k = validate_hr_input(n, c_full, tuples)?;
    let primitivity = primitivity_residual(mv, c_full, tuples, x, opts)?;
    if primitivity.residual > opts.primitivity_tol * primitivity.scale.max(f64::MIN_POSITIVE) {
        return Err(Error::PreconditionViolation {
            message: format!("x is not primitive ({:?} test)", primitivity.method),
            residual: primitivity.residual,
        });
    }
    let probes = probe_bodies(n, opts.probe_seed, mv.grid())?;
    let cons = constraints(mv, c_full, tuples, k, opts, &probes)?;
    let gram = hr_gram(mv, &c_full[1..], tuples)?;
    assemble_report(mv, tuples, x, k, gram, &cons, primitivity, &probes, opts)
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    mv: &MixedVolumes,
    tuples: &[Vec<Body>],
    x: &[f64],
    k: usize,
    gram: DMatrix<f64>,
    cons: &Constraints,
    primitivity: PrimitivityReport,
    probes: &[Body],
    opts: &HrOptions,
) -> Result<HrReport> {
    let n = mv.dim();
    let xv = DVector::from_column_slice(x);
    let hr_value = sign(k) * (xv.transpose() * &gram * &xv)[(0, 0)];
    let absx = xv.abs();
    let scale = (absx.transpose() * gram.abs() * &absx)[(0, 0)];
    let q_value = hr_value * convolution_factor(n, k, k) * factorial_u128(n - 2 * k) as f64;

    let basis = null_space(&cons.matrix, opts.null_tol);
    let restricted = basis.transpose() * (&gram * sign(k)) * &basis;
    let (eigenvalues, _) = sorted_eigen(&restricted);
    let constraint_residuals = (&cons.matrix * &xv).iter().map(|v| v.abs()).collect();

    let size = valuation_size(mv, tuples, x, probes)?;
    let nonzero = size > opts.zero_tol;
    let tol = opts.sign_tol * scale;
    let pass = if nonzero {
        hr_value > tol
    } else {
        hr_value.abs() <= tol
    };
    Ok(HrReport {
        n,
        k,
        x: x.to_vec(),
        gram: (0..gram.nrows())
            .map(|i| gram.row(i).iter().copied().collect())
            .collect(),
        constraint_residuals,
        primitivity,
        primitive_dimension: basis.ncols(),
        eigenvalues,
        hr_value,
        q_value,
        scale,
        valuation_size: size,
        valuation_nonzero: nonzero,
        margin: if scale > 0.0 { hr_value / scale } else { 0.0 },
        pass,
    })
}

/// Result of the primitive-vector search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub method: PrimitivityMethod,
    /// Dimension of the numerical kernel of the constraint matrix.
    pub null_dimension: usize,
    /// Eigenvalues of `(-1)^k G` restricted to that kernel, ascending.
    pub restricted_eigenvalues: Vec<f64>,
    /// Largest relative probe evaluation among restricted eigenvectors whose
    /// eigenvalue is numerically zero; these must represent the zero valuation.
    pub kernel_valuation_size: f64,
    pub x: Option<Vec<f64>>,
    pub report: Option<HrReport>,
}

/// Finds a primitive `x` from the numerical kernel of the constraint matrix
/// and runs [`hr_check`] on it. Within the kernel the eigenvector of the
/// restricted Hodge–Riemann form with the largest eigenvalue is chosen, so a
/// nonzero valuation is exercised whenever one exists.
pub fn hr_primitive_certificate(
    mv: &MixedVolumes,
    c_full: &[Body],
    tuples: &[Vec<Body>],
    opts: &HrOptions,
) -> Result<Certificate> {
    let n = mv.dim();
    let k = validate_hr_input(n, c_full, tuples)?;
    if tuples.len() < 2 {
        return Err(Error::InvalidParameter("at least two tuples are required".into()));
    }
    let probes = probe_bodies(n, opts.probe_seed, mv.grid())?;
    let cons = constraints(mv, c_full, tuples, k, opts, &probes)?;
    let basis = null_space(&cons.matrix, opts.null_tol);
    if basis.ncols() == 0 {
        return Ok(Certificate {
            method: cons.method,
            null_dimension: 0,
            restricted_eigenvalues: Vec::new(),
            kernel_valuation_size: 0.0,
            x: None,
            report: None,
        });
    }
    let gram = hr_gram(mv, &c_full[1..], tuples)?;
    let restricted = basis.transpose() * (&gram * sign(k)) * &basis;
    let (eigenvalues, vectors) = sorted_eigen(&restricted);

    let absolute = gram.abs().max() * tuples.len() as f64;
    let mut kernel_size = 0.0f64;
    for (i, &ev) in eigenvalues.iter().enumerate() {
        if ev.abs() <= opts.sign_tol * absolute {
            let v: Vec<f64> = (&basis * vectors.column(i)).iter().copied().collect();
            kernel_size = kernel_size.max(valuation_size(mv, tuples, &v, &probes)?);
        }
    }

    let top = vectors.column(eigenvalues.len() - 1);
    let mut x: Vec<f64> = (&basis * top).iter().copied().collect();
    // deterministic sign: largest entry positive
    let lead = x
        .iter()
        .copied()
        .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if lead < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let primitivity = primitivity_residual(mv, c_full, tuples, &x, opts)?;
    let report = assemble_report(mv, tuples, &x, k, gram, &cons, primitivity, &probes, opts)?;
    Ok(Certificate {
        method: cons.method,
        null_dimension: basis.ncols(),
        restricted_eigenvalues: eigenvalues,
        kernel_valuation_size: kernel_size,
        x: Some(x),
        report: Some(report),
    })
}

/// Norm of `nV(A, ·[n-1]) - nV(C, ·[n-1])`:
/// `inf_x ‖h_{A+x} - h_C‖_{L²(S^{n-1})}`. The infimum over translations is an
/// exact linear least-squares problem in the coordinate functions.
pub fn e_norm(grid: &SphereGrid, a: &Body, c: &Body) -> Result<f64> {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = grid.node(i);
            Ok(a.support(u)? - c.support(u)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let reduced = linear_part_removed(grid, &values)?;
    let sq: Vec<f64> = reduced.iter().map(|v| v * v).collect();
    Ok(grid.integrate_values(&sq)?.max(0.0).sqrt())
}

/// `(∫ ‖∇²h_A - ∇²h_C‖_F² dσ)^{1/2}` with ambient Hessians.
pub fn f_norm(grid: &SphereGrid, a: &Body, c: &Body) -> Result<f64> {
    let integral = grid.try_integrate(|u| {
        let diff = a.jet(u)?.hess - c.jet(u)?.hess;
        Ok(diff.norm_squared())
    })?;
    Ok(integral.max(0.0).sqrt())
}

/// Outcome of an Alexandrov–Fenchel signature trial (`k = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureReport {
    pub n: usize,
    /// `G_ij = V(A_i, A_j, C_1, …, C_{n-2})`.
    pub gram: Vec<Vec<f64>>,
    /// Eigenvalues of `G`, descending.
    pub eigenvalues: Vec<f64>,
    pub gram_norm: f64,
    /// Eigenvalues above `signature_tol · ‖G‖`.
    pub positive_count: usize,
    pub signature_tol: f64,
    /// `hr_check` on the certificate vector.
    pub certificate: HrReport,
    /// `hr_check` on a seeded random vector of the primitive hyperplane.
    pub random_primitive: HrReport,
    pub pass: bool,
}

/// Lorentzian signature of the mixed-volume Gram matrix and the
/// Hodge–Riemann sign on the primitive hyperplane
/// `Σ x_i V(A_i, C_0, …, C_{n-2}) = 0`.
pub fn af_signature(
    mv: &MixedVolumes,
    c_full: &[Body],
    tuples: &[Vec<Body>],
    opts: &HrOptions,
    signature_tol: f64,
    seed: u64,
) -> Result<SignatureReport> {
    let n = mv.dim();
    let k = validate_hr_input(n, c_full, tuples)?;
    if k != 1 {
        return Err(Error::InvalidParameter(format!("signature test needs 1-tuples, got k = {k}")));
    }
    let gram = hr_gram(mv, &c_full[1..], tuples)?;
    let (mut eigenvalues, _) = sorted_eigen(&gram);
    eigenvalues.reverse();
    let gram_norm = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let positive_count = eigenvalues.iter().filter(|&&e| e > signature_tol * gram_norm).count();

    let certificate = hr_primitive_certificate(mv, c_full, tuples, opts)?
        .report
        .ok_or_else(|| Error::InvalidInput("primitive hyperplane is trivial".into()))?;

    let a = DVector::from_iterator(
        tuples.len(),
        tuples
            .iter()
            .map(|t| mv.mixed_volume(&concat(&[t, c_full])))
            .collect::<Result<Vec<f64>>>()?,
    );
    let mut r = crate::random::rng(seed);
    let raw = DVector::from_fn(tuples.len(), |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
    let x = &raw - &a * (a.dot(&raw) / a.dot(&a));
    let random_primitive = hr_check(mv, c_full, tuples, x.as_slice(), opts)?;

    let pass = positive_count == 1 && certificate.pass && random_primitive.pass;
    Ok(SignatureReport {
        n,
        gram: (0..gram.nrows())
            .map(|i| gram.row(i).iter().copied().collect())
            .collect(),
        eigenvalues,
        gram_norm,
        positive_count,
        signature_tol,
        certificate,
        random_primitive,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_smooth_body, rng};
    use crate::sphere::{build_grid, sphere_volume};
    use std::f64::consts::PI;

    #[test]
    fn factor_examples() {
        assert!((convolution_factor(3, 1, 1) - 2.0 / 3.0).abs() < 1e-16);
        assert_eq!(convolution_factor(3, 0, 2), 1.0);
        assert_eq!(convolution_factor(3, 2, 2), 0.0);
        // L_C factor: n · factor(n, k, 1) = n - k
        for n in 2..=6 {
            for k in 0..n {
                assert!((n as f64 * convolution_factor(n, k, 1) - (n - k) as f64).abs() < 1e-13);
            }
        }
    }

    fn bodies3() -> (Body, Body, Body) {
        (
            Body::ellipsoid_axes(&[1.0, 1.5, 0.7]).unwrap(),
            Body::ball(3, 0.8).unwrap(),
            Body::ellipsoid_axes(&[0.6, 1.0, 1.2]).unwrap(),
        )
    }

    #[test]
    fn volume_is_identity() {
        let (a, b, _) = bodies3();
        let phi = FormalValuation::mixed(3, vec![a.clone()], 2.0)
            .unwrap()
            .add(&FormalValuation::mixed(3, vec![a, b], -0.5).unwrap())
            .unwrap();
        let prod = convolve(&FormalValuation::volume(3), &phi).unwrap();
        assert_eq!(prod.len(), phi.len());
        for ((g1, c1), (g2, c2)) in prod.terms().zip(phi.terms()) {
            assert_eq!(g1.key(), g2.key());
            assert_eq!(c1, c2);
        }
    }

    #[test]
    fn generator_product_factor() {
        let (a, b, _) = bodies3();
        let ga = FormalValuation::mixed(3, vec![a.clone()], 1.0).unwrap();
        let gb = FormalValuation::mixed(3, vec![b.clone()], 1.0).unwrap();
        let prod = convolve(&ga, &gb).unwrap();
        let (g, c) = prod.terms().next().unwrap();
        assert_eq!(g.bodies().len(), 2);
        assert!((c.re - 2.0 / 3.0).abs() < 1e-16);
        // commutativity is exact
        let other = convolve(&gb, &ga).unwrap();
        let (g2, c2) = other.terms().next().unwrap();
        assert_eq!(g.key(), g2.key());
        assert_eq!(c, c2);
        // too many arguments
        let gab = FormalValuation::mixed(3, vec![a.clone(), b.clone()], 1.0).unwrap();
        assert!(convolve(&gab, &gab).unwrap().is_zero());
    }

    #[test]
    fn lefschetz_on_volume_and_degree_zero() {
        let (a, b, c) = bodies3();
        let l = lefschetz(&c, &FormalValuation::volume(3)).unwrap();
        let (g, coef) = l.terms().next().unwrap();
        assert_eq!(g.bodies()[0].key(), c.key());
        assert_eq!(coef.re, 3.0);
        let top = FormalValuation::mixed(3, vec![a, b, c.clone()], 1.0).unwrap();
        assert!(lefschetz(&c, &top).unwrap().is_zero());
    }

    #[test]
    fn lefschetz_is_derivative() {
        // the stencil divides quadrature noise by the step, so the grid must
        // be fine enough for the symmetry defect to stay near rounding
        let grid = build_grid(3, 64).unwrap();
        let mv = MixedVolumes::new(&grid);
        let (a, c, k) = bodies3();
        let phi = FormalValuation::mixed(3, vec![a.clone()], 1.0)
            .unwrap()
            .add(&FormalValuation::volume(3).scale(C64::new(0.3, 0.0)))
            .unwrap();
        let lphi = lefschetz(&c, &phi).unwrap();
        let step = 1e-4;
        let shifted = |t: f64| {
            let kt = Body::minkowski_sum(&[k.clone(), c.dilate(t).unwrap()]).unwrap();
            phi.evaluate(&mv, &kt).unwrap().re
        };
        // K - tC need not be a body, so use a one-sided second-order stencil
        let fd = (-3.0 * phi.evaluate(&mv, &k).unwrap().re + 4.0 * shifted(step)
            - shifted(2.0 * step))
            / (2.0 * step);
        let exact = lphi.evaluate(&mv, &k).unwrap().re;
        assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{fd} vs {exact}");
    }

    #[test]
    fn pairing_examples() {
        let grid = build_grid(2, 32).unwrap();
        let mv = MixedVolumes::new(&grid);
        let b = Body::ball(2, 1.0).unwrap();
        let gb = FormalValuation::mixed(2, vec![b.clone()], 1.0).unwrap();
        let p = poincare_pairing(&mv, &gb, &gb).unwrap();
        assert!((p.re - PI / 2.0).abs() < 1e-13);

        let e = Body::ellipsoid_axes(&[2.0, 1.0]).unwrap();
        let v = mv.mixed_volume(&[b.clone(), e.clone()]).unwrap();
        let top = FormalValuation::mixed(2, vec![b.clone(), e], 1.7 / v).unwrap();
        let p = poincare_pairing(&mv, &FormalValuation::volume(2), &top).unwrap();
        assert!((p.re - 1.7).abs() < 1e-13);

        // non-complementary degrees pair to zero
        let p = poincare_pairing(&mv, &top, &gb).unwrap();
        assert_eq!(p, C64::new(0.0, 0.0));
    }

    #[test]
    fn evaluation_examples() {
        let grid = build_grid(3, 64).unwrap();
        let mv = MixedVolumes::new(&grid);
        let e = Body::ellipsoid_axes(&[1.0, 2.0, 3.0]).unwrap();
        let vol = FormalValuation::volume(3).evaluate(&mv, &e).unwrap();
        assert!((vol.re - 8.0 * PI).abs() / (8.0 * PI) < 1e-9);

        let b = Body::ball(3, 1.0).unwrap();
        let full = FormalValuation::mixed(3, vec![b.clone(); 3], 1.0).unwrap();
        assert!((full.evaluate(&mv, &e).unwrap().re - 4.0 * PI / 3.0).abs() < 1e-12);

        let (a, c, _) = bodies3();
        let deg2 = FormalValuation::mixed(3, vec![a], 1.0).unwrap();
        let k = c.clone();
        let v1 = deg2.evaluate(&mv, &k).unwrap().re;
        let v3 = deg2.evaluate(&mv, &k.dilate(3.0).unwrap()).unwrap().re;
        assert!((v3 - 9.0 * v1).abs() < 1e-9 * v3.abs());
    }

    #[test]
    fn gram_examples() {
        let grid = build_grid(2, 128).unwrap();
        let mv = MixedVolumes::new(&grid);
        let a = Body::ellipsoid_axes(&[2.0, 1.0]).unwrap();
        let b = Body::ball(2, 1.0).unwrap();
        let g = hr_gram(&mv, &[], &[vec![a.clone()], vec![b.clone()]]).unwrap();
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        assert!((g[(0, 0)] - 2.0 * PI).abs() < 1e-12);
        assert!((g[(1, 1)] - PI).abs() < 1e-12);
        assert!((det - (2.0 * PI * PI - g[(0, 1)].powi(2))).abs() < 1e-10);
        assert!(det < 0.0);
        assert!((g[(0, 1)] - 4.84422).abs() < 1e-5);

        let g = hr_gram(&mv, &[], &[vec![a.clone()], vec![a.clone()], vec![a]]).unwrap();
        let tol = 1e-12 * g.abs().max();
        let rank = g.svd(false, false).rank(tol);
        assert_eq!(rank, 1);
    }

    #[test]
    fn k1_primitivity_and_check() {
        let grid = build_grid(2, 128).unwrap();
        let mv = MixedVolumes::new(&grid);
        let a = Body::ellipsoid_axes(&[2.0, 1.0]).unwrap();
        let b = Body::ball(2, 1.0).unwrap();
        let tuples = vec![vec![a.clone()], vec![b.clone()]];
        let c_full = vec![b.clone()];
        let opts = HrOptions::default();
        let vbb = mv.mixed_volume(&[b.clone(), b.clone()]).unwrap();
        let vab = mv.mixed_volume(&[a.clone(), b.clone()]).unwrap();
        let x = [vbb, -vab];
        let res = primitivity_residual(&mv, &c_full, &tuples, &x, &opts).unwrap();
        assert!(res.residual <= 1e-12 * res.scale);
        assert_eq!(primitivity_residual(&mv, &c_full, &tuples, &[0.0, 0.0], &opts).unwrap().residual, 0.0);

        let report = hr_check(&mv, &c_full, &tuples, &x, &opts).unwrap();
        assert!(report.pass);
        assert!(report.valuation_nonzero);
        assert!(report.hr_value > 0.0);
        assert_eq!(report.primitive_dimension, 1);

        let err = hr_check(&mv, &c_full, &tuples, &[1.0, 0.0], &opts).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolation { .. }));

        let same = vec![vec![a.clone()], vec![a]];
        let res = primitivity_residual(&mv, &c_full, &same, &[1.0, -1.0], &opts).unwrap();
        assert_eq!(res.residual, 0.0);
    }

    #[test]
    fn k0_is_positivity_of_mixed_volume() {
        let grid = build_grid(3, 32).unwrap();
        let mv = MixedVolumes::new(&grid);
        let (a, b, c) = bodies3();
        let c_full = vec![a.clone(), a, b, c];
        let report = hr_check(&mv, &c_full, &[vec![]], &[1.5], &HrOptions::default()).unwrap();
        assert!(report.pass);
        let v = mv.mixed_volume(&c_full[1..]).unwrap();
        assert!((report.hr_value - 2.25 * v).abs() < 1e-12 * v);
        assert_eq!(report.primitivity.method, PrimitivityMethod::Vacuous);
    }

    #[test]
    fn certificate_k1_null_dimension() {
        let grid = build_grid(3, 32).unwrap();
        let mv = MixedVolumes::new(&grid);
        let mut r = rng(5);
        let bodies: Vec<Body> = (0..4).map(|_| random_smooth_body(3, &mut r, &grid).unwrap()).collect();
        let c_full = vec![Body::ball(3, 1.0).unwrap(), bodies[3].clone()];
        let tuples: Vec<Vec<Body>> = bodies[..3].iter().map(|b| vec![b.clone()]).collect();
        let cert = hr_primitive_certificate(&mv, &c_full, &tuples, &HrOptions::default()).unwrap();
        assert_eq!(cert.null_dimension, 2);
        let report = cert.report.unwrap();
        assert!(report.pass, "{report:?}");
        assert!(cert.restricted_eigenvalues.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn certificate_equality_case() {
        let grid = build_grid(3, 24).unwrap();
        let mv = MixedVolumes::new(&grid);
        let a = Body::ellipsoid_axes(&[1.0, 1.4, 0.8]).unwrap();
        let c_full = vec![Body::ball(3, 1.0).unwrap(), Body::ball(3, 1.2).unwrap()];
        let tuples = vec![vec![a.clone()], vec![a]];
        let opts = HrOptions::default();
        let report = hr_check(&mv, &c_full, &tuples, &[1.0, -1.0], &opts).unwrap();
        assert!(!report.valuation_nonzero);
        assert!(report.hr_value.abs() <= 1e-10 * report.scale);
        assert!(report.pass);
    }

    #[test]
    fn norms_for_balls() {
        for n in 2..=4 {
            let grid = build_grid(n, 12).unwrap();
            let (r, s) = (1.7, 0.6);
            let a = Body::ball(n, r).unwrap();
            let c = Body::ball(n, s).unwrap();
            let area = sphere_volume(n as i64 - 1).unwrap();
            let e = e_norm(&grid, &a, &c).unwrap();
            assert!((e - (r - s) * area.sqrt()).abs() < 1e-10);
            let f = f_norm(&grid, &a, &c).unwrap();
            assert!((f - (r - s) * ((n - 1) as f64 * area).sqrt()).abs() < 1e-10);
            let shifted = c.translate(&vec![0.3; n]).unwrap();
            assert!(e_norm(&grid, &shifted, &c).unwrap() < 1e-10);
        }
    }
}
