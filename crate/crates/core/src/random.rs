//! Seeded generators for test bodies and probe sets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{Body, BodySpec, HarmonicTerm};
use crate::sphere::{harmonic_dimension, SphereGrid};

/// Seed of the default probe set.
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed_0001;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Orthogonal matrix from the QR factorization of a uniform random matrix,
/// with the sign of `R`'s diagonal fixed so the result is deterministic.
pub fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn random_center<R: Rng>(n: usize, rng: &mut R, spread: f64) -> Option<Vec<f64>> {
    if spread == 0.0 {
        return None;
    }
    Some((0..n).map(|_| rng.random_range(-spread..spread)).collect())
}

/// Rotated ellipsoid with semi-axes drawn from `[lo, hi)`.
pub fn random_ellipsoid_spec<R: Rng>(n: usize, rng: &mut R, lo: f64, hi: f64) -> BodySpec {
    let rot = random_rotation(n, rng);
    let axes: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let diag = DMatrix::from_fn(n, n, |i, j| if i == j { axes[i] * axes[i] } else { 0.0 });
    let m = &rot * diag * rot.transpose();
    let m = (&m + m.transpose()) * 0.5;
    BodySpec::Ellipsoid {
        matrix: (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect(),
        center: random_center(n, rng, 0.3),
    }
}

/// Unit ball perturbed by random combinations of harmonics of the given
/// degrees, each term with coefficient in `(-amplitude, amplitude)`.
pub fn random_perturbation_spec<R: Rng>(
    n: usize,
    rng: &mut R,
    degrees: &[usize],
    amplitude: f64,
) -> BodySpec {
    let mut terms = Vec::new();
    for &degree in degrees {
        for index in 0..harmonic_dimension(n, degree) {
            terms.push(HarmonicTerm {
                degree,
                index,
                coef: rng.random_range(-amplitude..amplitude),
            });
        }
    }
    BodySpec::HarmonicPerturbation {
        radius: 1.0,
        terms,
        center: random_center(n, rng, 0.3),
    }
}

/// A random certified harmonic perturbation; the amplitude is halved until
/// certification on `grid` succeeds.
pub fn random_certified_perturbation<R: Rng>(
    n: usize,
    rng: &mut R,
    grid: &SphereGrid,
    amplitude: f64,
) -> Result<Body> {
    let mut amp = amplitude;
    loop {
        let spec = random_perturbation_spec(n, rng, &[2, 3], amp);
        match Body::from_spec(n, &spec)?.certify(grid) {
            Ok(body) => return Ok(body),
            Err(e) if amp < 1e-4 => return Err(e),
            Err(_) => amp *= 0.5,
        }
    }
}

/// Random smooth body: an ellipsoid, a certified perturbation, or the
/// Minkowski sum of one of each.
pub fn random_smooth_body<R: Rng>(n: usize, rng: &mut R, grid: &SphereGrid) -> Result<Body> {
    match rng.random_range(0..3u8) {
        0 => Body::from_spec(n, &random_ellipsoid_spec(n, rng, 0.6, 1.6)),
        1 => random_certified_perturbation(n, rng, grid, 0.08),
        _ => {
            let e = Body::from_spec(n, &random_ellipsoid_spec(n, rng, 0.5, 1.2))?;
            let p = random_certified_perturbation(n, rng, grid, 0.06)?;
            Body::minkowski_sum(&[e, p])
        }
    }
}

/// `C^{1,1}` cap `h = 0.9 + 0.6 max(0, ⟨d, u⟩)²` in a random direction,
/// certified on `grid`.
pub fn random_c11_cap<R: Rng>(n: usize, rng: &mut R, grid: &SphereGrid) -> Result<Body> {
    let direction: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let spec = BodySpec::C11Cap {
        radius: 0.9,
        direction,
        strength: 0.6,
        center: random_center(n, rng, 0.3),
    };
    Body::from_spec(n, &spec)?.certify(grid)
}

/// Unit ball, two random ellipsoids and two random certified perturbations.
pub fn probe_bodies(n: usize, seed: u64, grid: &SphereGrid) -> Result<Vec<Body>> {
    let mut r = rng(seed);
    let mut probes = vec![Body::ball(n, 1.0)?];
    for _ in 0..2 {
        probes.push(Body::from_spec(n, &random_ellipsoid_spec(n, &mut r, 0.7, 1.4))?);
    }
    for _ in 0..2 {
        probes.push(random_certified_perturbation(n, &mut r, grid, 0.08)?);
    }
    Ok(probes)
}

/// Data of a Hodge–Riemann test: the Lefschetz bodies `C_0, …, C_{n-2k}` and
/// the `k`-tuples `A^i`.
#[derive(Debug, Clone)]
pub struct HrFamily {
    pub n: usize,
    pub k: usize,
    pub c_full: Vec<Body>,
    pub tuples: Vec<Vec<Body>>,
}

impl HrFamily {
    /// `C_1, …, C_{n-2k}`.
    pub fn c_rest(&self) -> &[Body] {
        &self.c_full[1..]
    }
}

/// `count` random smooth bodies as 1-tuples, with `n - 1` random smooth
/// Lefschetz bodies.
pub fn af_family(n: usize, seed: u64, count: usize, grid: &SphereGrid) -> Result<HrFamily> {
    let mut r = rng(seed);
    let tuples = (0..count)
        .map(|_| random_smooth_body(n, &mut r, grid).map(|b| vec![b]))
        .collect::<Result<Vec<_>>>()?;
    let c_full = (0..n - 1)
        .map(|_| random_smooth_body(n, &mut r, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(HrFamily { n, k: 1, c_full, tuples })
}

/// Perturbations per dimension for [`k2_family`]: enough pairs to exceed the
/// number of degree 0, 2 and 4 harmonics the densities can carry.
pub fn k2_perturbation_count(n: usize) -> usize {
    let constraints = 1 + harmonic_dimension(n, 2) + harmonic_dimension(n, 4);
    (1..).find(|r| (r + 1) * (r + 2) / 2 > constraints + 8).unwrap()
}

/// Pairs with replacement from `{B, B + εY_1, …, B + εY_r}` with `Y_a` random
/// degree-2 harmonics, and balls as Lefschetz bodies. The area densities of
/// such tuples are polynomials of degree at most 4.
pub fn k2_family(n: usize, seed: u64, grid: &SphereGrid) -> Result<HrFamily> {
    let mut r = rng(seed);
    let mut bodies = vec![Body::ball(n, 1.0)?];
    for _ in 0..k2_perturbation_count(n) {
        let mut amp = 0.12;
        let body = loop {
            let spec = random_perturbation_spec(n, &mut r, &[2], amp);
            match Body::from_spec(n, &spec)?.certify(grid) {
                Ok(b) => break b,
                Err(e) if amp < 1e-3 => return Err(e),
                Err(_) => amp *= 0.5,
            }
        };
        bodies.push(body);
    }
    let mut tuples = Vec::new();
    for i in 0..bodies.len() {
        for j in i..bodies.len() {
            tuples.push(vec![bodies[i].clone(), bodies[j].clone()]);
        }
    }
    let c_full = (0..=n - 4)
        .map(|i| Body::ball(n, 1.0 + 0.25 * i as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(HrFamily { n, k: 2, c_full, tuples })
}
