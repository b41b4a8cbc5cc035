//! Mixed discriminants and mixed volumes of smooth bodies.
//!
//! For bodies with `C²` support functions,
//!
//! ```text
//! V(A_1, …, A_n) = (1/n) ∫_{S^{n-1}} h_{A_1}(u) D(Q_{A_2}(u), …, Q_{A_n}(u)) dσ(u)
//! ```
//!
//! where `Q_A(u)` is the tangential Hessian of `h_A` and `D` the mixed
//! discriminant. The first argument plays a distinguished role, so symmetry
//! of the result is a real check on the Hessians.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{restrict, Body, Regularity, TangentFrame};
use crate::sphere::{ball_volume, SphereGrid, MAX_DIM};

const MAX_D: usize = MAX_DIM;
type Small = [[f64; MAX_D]; MAX_D];

fn det_small(a: &mut Small, d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => {
            let mut det = 1.0;
            for col in 0..d {
                let pivot = (col..d)
                    .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                    .unwrap();
                if a[pivot][col] == 0.0 {
                    return 0.0;
                }
                if pivot != col {
                    a.swap(pivot, col);
                    det = -det;
                }
                let p = a[col][col];
                det *= p;
                for row in col + 1..d {
                    let f = a[row][col] / p;
                    if f != 0.0 {
                        for k in col + 1..d {
                            a[row][k] -= f * a[col][k];
                        }
                    }
                }
            }
            det
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Mixed discriminant of `d` symmetric `d × d` matrices stored row-major in
/// `mats[i]`, by inclusion–exclusion over the `2^d - 1` nonempty subsets.
pub(crate) fn mixed_discriminant_flat(mats: &[&[f64]], d: usize) -> f64 {
    debug_assert_eq!(mats.len(), d);
    if d == 0 {
        return 1.0;
    }
    if d == 1 {
        return mats[0][0];
    }
    let mut total = 0.0;
    for mask in 1u32..(1 << d) {
        let mut a: Small = [[0.0; MAX_D]; MAX_D];
        for (i, m) in mats.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for r in 0..d {
                    for c in 0..d {
                        a[r][c] += m[r * d + c];
                    }
                }
            }
        }
        let det = det_small(&mut a, d);
        if (d - mask.count_ones() as usize) % 2 == 0 {
            total += det;
        } else {
            total -= det;
        }
    }
    total / factorial(d)
}

fn det_flat(m: &[f64], d: usize) -> f64 {
    let mut a: Small = [[0.0; MAX_D]; MAX_D];
    for r in 0..d {
        a[r][..d].copy_from_slice(&m[r * d..(r + 1) * d]);
    }
    det_small(&mut a, d)
}

/// `D(M_1, …, M_d)`, the symmetric multilinear polarization of `det`.
pub fn mixed_discriminant(mats: &[DMatrix<f64>]) -> Result<f64> {
    let d = mats.len();
    if d == 0 {
        return Err(Error::InvalidInput("mixed discriminant of zero matrices".into()));
    }
    if d > MAX_D {
        return Err(Error::InvalidInput(format!(
            "mixed discriminant supports at most {MAX_D} matrices"
        )));
    }
    if let Some(m) = mats.iter().find(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::InvalidInput(format!(
            "expected {d}x{d} matrices, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let flat: Vec<Vec<f64>> = mats
        .iter()
        .map(|m| (0..d * d).map(|k| m[(k / d, k % d)]).collect())
        .collect();
    let refs: Vec<&[f64]> = flat.iter().map(Vec::as_slice).collect();
    Ok(mixed_discriminant_flat(&refs, d))
}

/// A body's support value and tangential Hessian at every node of a grid,
/// all in the Householder frame of the node.
#[derive(Debug, Clone)]
pub struct Tabulation {
    d: usize,
    h: Vec<f64>,
    q: Vec<f64>,
}

impl Tabulation {
    pub fn new(body: &Body, grid: &SphereGrid) -> Result<Tabulation> {
        if body.dim() != grid.dim() {
            return Err(Error::Arity {
                expected: body.dim(),
                got: grid.dim(),
            });
        }
        let d = grid.dim() - 1;
        let per_node = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let u = grid.node(i);
                let jet = body.jet(u)?;
                let q = restrict(&jet.hess, &TangentFrame::householder(u));
                Ok((jet.h, q))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut h = Vec::with_capacity(grid.len());
        let mut q = Vec::with_capacity(grid.len() * d * d);
        for (hv, qm) in per_node {
            h.push(hv);
            for r in 0..d {
                for c in 0..d {
                    q.push(qm[(r, c)]);
                }
            }
        }
        Ok(Tabulation { d, h, q })
    }

    /// Tabulation of a Minkowski sum: support values and Hessians add.
    pub fn sum(parts: &[&Tabulation]) -> Tabulation {
        let mut acc = parts[0].clone();
        for p in &parts[1..] {
            acc.h.iter_mut().zip(&p.h).for_each(|(a, b)| *a += b);
            acc.q.iter_mut().zip(&p.q).for_each(|(a, b)| *a += b);
        }
        acc
    }

    pub fn support(&self) -> &[f64] {
        &self.h
    }

    /// Tangential Hessian at `node`, row-major.
    pub fn hessian(&self, node: usize) -> &[f64] {
        let s = self.d * self.d;
        &self.q[node * s..(node + 1) * s]
    }
}

/// Mixed-volume evaluator bound to a grid, caching body tabulations by the
/// body's canonical key and mixed volumes by the multiset of keys.
pub struct MixedVolumes<'g> {
    grid: &'g SphereGrid,
    cache: Mutex<HashMap<String, Arc<Tabulation>>>,
    values: Mutex<HashMap<Vec<String>, f64>>,
}

impl<'g> MixedVolumes<'g> {
    pub fn new(grid: &'g SphereGrid) -> Self {
        Self {
            grid,
            cache: Mutex::new(HashMap::new()),
            values: Mutex::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &'g SphereGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn tabulation(&self, body: &Body) -> Result<Arc<Tabulation>> {
        if let Some(t) = self.cache.lock().unwrap().get(body.key()) {
            return Ok(t.clone());
        }
        let t = Arc::new(Tabulation::new(body, self.grid)?);
        self.cache
            .lock()
            .unwrap()
            .insert(body.key().to_string(), t.clone());
        Ok(t)
    }

    fn check(&self, bodies: &[Body], expected: usize) -> Result<()> {
        if bodies.len() != expected {
            return Err(Error::Arity {
                expected,
                got: bodies.len(),
            });
        }
        for b in bodies {
            if b.dim() != self.dim() {
                return Err(Error::InvalidInput(format!(
                    "body of dimension {} on a grid of dimension {}",
                    b.dim(),
                    self.dim()
                )));
            }
            b.ensure_admissible()?;
        }
        Ok(())
    }

    /// `V(A_1, …, A_n)`. The arguments are put in key order first, so the
    /// value is exactly symmetric and independent of evaluation history.
    pub fn mixed_volume(&self, bodies: &[Body]) -> Result<f64> {
        self.check(bodies, self.dim())?;
        let mut sorted = bodies.to_vec();
        sorted.sort_by(|a, b| a.key().cmp(b.key()));
        let key: Vec<String> = sorted.iter().map(|b| b.key().to_string()).collect();
        if let Some(&v) = self.values.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = self.mixed_volume_ordered(&sorted)?;
        self.values.lock().unwrap().insert(key, v);
        Ok(v)
    }

    /// `V(A_1, …, A_n)` with `h_{A_1}` as the integrated support function,
    /// uncached. Symmetry of this in its arguments is a nontrivial check.
    pub fn mixed_volume_ordered(&self, bodies: &[Body]) -> Result<f64> {
        let n = self.dim();
        self.check(bodies, n)?;
        let tabs = bodies
            .iter()
            .map(|b| self.tabulation(b))
            .collect::<Result<Vec<_>>>()?;
        let d = n - 1;
        let values: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let mats: Vec<&[f64]> = tabs[1..].iter().map(|t| t.hessian(i)).collect();
                tabs[0].h[i] * mixed_discriminant_flat(&mats, d)
            })
            .collect();
        Ok(self.grid.integrate_values(&values)? / n as f64)
    }

    /// `vol(K) = V(K, …, K)`.
    pub fn volume(&self, body: &Body) -> Result<f64> {
        self.mixed_volume(&vec![body.clone(); self.dim()])
    }

    /// Node values of `D(Q_{A_1}, …, Q_{A_{n-1}})`.
    pub fn area_density_values(&self, bodies: &[Body]) -> Result<Vec<f64>> {
        let n = self.dim();
        self.check(bodies, n - 1)?;
        let tabs = bodies
            .iter()
            .map(|b| self.tabulation(b))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let mats: Vec<&[f64]> = tabs.iter().map(|t| t.hessian(i)).collect();
                mixed_discriminant_flat(&mats, n - 1)
            })
            .collect())
    }

    /// Polarization of the volume:
    /// `V = (1/n!) Σ_{∅≠S⊆[n]} (-1)^{n-|S|} vol(Σ_{i∈S} A_i)`, each volume
    /// `(1/n) ∫ h det Q` of the Minkowski sum itself. Only determinants enter,
    /// never the mixed discriminant. The support data of a sum are the sums
    /// of the parts' tabulated data.
    pub fn polarization_oracle(&self, bodies: &[Body]) -> Result<f64> {
        let n = self.dim();
        self.check(bodies, n)?;
        let tabs = bodies
            .iter()
            .map(|b| self.tabulation(b))
            .collect::<Result<Vec<_>>>()?;
        let mut terms = Vec::with_capacity((1 << n) - 1);
        for mask in 1u32..(1 << n) {
            let parts: Vec<&Tabulation> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| tabs[i].as_ref())
                .collect();
            let tab = Tabulation::sum(&parts);
            let values: Vec<f64> = (0..self.grid.len())
                .into_par_iter()
                .map(|i| tab.h[i] * det_flat(tab.hessian(i), n - 1))
                .collect();
            let vol = self.grid.integrate_values(&values)? / n as f64;
            let sign = if (n - parts.len()) % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(sign * vol);
        }
        Ok(crate::sum::compensated_sum(&terms) / factorial(n))
    }

    /// Largest relative residual of the Steiner polynomial
    /// `vol(K + tB) = Σ_j C(n,j) t^j V(K[n-j], B[j])` over `ts`.
    pub fn steiner_check(&self, body: &Body, ts: &[f64]) -> Result<f64> {
        let n = self.dim();
        self.check(std::slice::from_ref(body), 1)?;
        let ball = Body::ball(n, 1.0)?;
        let coefficients = (0..=n)
            .map(|j| {
                let mut args = vec![body.clone(); n - j];
                args.extend(std::iter::repeat_n(ball.clone(), j));
                self.mixed_volume(&args)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut worst = 0.0f64;
        for &t in ts {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Steiner parameter must be nonnegative, got {t}"
                )));
            }
            let direct = if t == 0.0 {
                self.volume(body)?
            } else {
                self.volume(&Body::minkowski_sum(&[body.clone(), ball.dilate(t)?])?)?
            };
            let poly: f64 = coefficients
                .iter()
                .enumerate()
                .map(|(j, v)| binomial(n, j) * t.powi(j as i32) * v)
                .sum();
            worst = worst.max((direct - poly).abs() / direct.abs());
        }
        Ok(worst)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `V(A_1, …, A_n)` on `grid`.
pub fn mixed_volume(grid: &SphereGrid, bodies: &[Body]) -> Result<f64> {
    MixedVolumes::new(grid).mixed_volume(bodies)
}

pub fn polarization_oracle(grid: &SphereGrid, bodies: &[Body]) -> Result<f64> {
    MixedVolumes::new(grid).polarization_oracle(bodies)
}

pub fn steiner_check(grid: &SphereGrid, body: &Body, ts: &[f64]) -> Result<f64> {
    MixedVolumes::new(grid).steiner_check(body, ts)
}

/// Density `D(Q_{A_1}(u), …, Q_{A_{n-1}}(u))` of the mixed area measure
/// `S(A_1, …, A_{n-1}, ·)` at a unit vector.
pub fn area_measure_density(bodies: &[Body], u: &[f64]) -> Result<f64> {
    let n = u.len();
    if bodies.len() + 1 != n {
        return Err(Error::Arity {
            expected: n.saturating_sub(1),
            got: bodies.len(),
        });
    }
    let frame = TangentFrame::householder(u);
    let mats = bodies
        .iter()
        .map(|b| Ok(restrict(&b.jet(u)?.hess, &frame)))
        .collect::<Result<Vec<_>>>()?;
    mixed_discriminant(&mats)
}

/// Default grid resolution per ambient dimension.
pub fn default_resolution(n: usize) -> usize {
    match n {
        2 => 128,
        3 => 64,
        4 => 32,
        5 => 20,
        _ => 14,
    }
}

/// Relative tolerance expected of mixed volumes at the default grids.
pub fn default_tolerance(n: usize, regularity: Regularity) -> f64 {
    match (regularity, n) {
        (Regularity::C11, _) => 1e-4,
        (_, 2 | 3) => 1e-9,
        _ => 1e-7,
    }
}

/// `v_n · Π r_i`, the mixed volume of balls of radii `r_i`.
pub fn ball_mixed_volume(radii: &[f64]) -> Result<f64> {
    Ok(ball_volume(radii.len() as i64)? * radii.iter().product::<f64>())
}
