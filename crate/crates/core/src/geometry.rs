//! Convex bodies represented by their support functions.
//!
//! Every evaluator takes a unit vector `u` and returns the value, gradient and
//! ambient Hessian of the 1-homogeneous extension of `h` at `u`. The Euler
//! relations `⟨∇h(u), u⟩ = h(u)` and `∇²h(u)·u = 0` hold by construction.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::SpherePolynomial;
use crate::sphere::{canonical_harmonics, SphereGrid};

/// Bodies whose certification margin does not exceed this are rejected.
pub const CERTIFICATION_THRESHOLD: f64 = 1e-6;

/// One term `coef · Y_{degree,index}` of a harmonic perturbation, indexing the
/// reference harmonic basis of [`canonical_harmonics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicTerm {
    pub degree: usize,
    pub index: usize,
    pub coef: f64,
}

/// Serializable description of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodySpec {
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `{x : xᵀ M⁻¹ x <= 1}`, support function `sqrt(uᵀ M u)`.
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `h(u) = radius + Σ coef·Y(u)` on the sphere.
    HarmonicPerturbation {
        radius: f64,
        terms: Vec<HarmonicTerm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `h(u) = radius + strength·max(0, ⟨d, u⟩)²`: gradient Lipschitz, Hessian
    /// discontinuous across the great sphere `⟨d, u⟩ = 0`.
    C11Cap {
        radius: f64,
        direction: Vec<f64>,
        strength: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    MinkowskiSum {
        bodies: Vec<BodySpec>,
    },
    Dilate {
        body: Box<BodySpec>,
        factor: f64,
    },
    Translate {
        body: Box<BodySpec>,
        offset: Vec<f64>,
    },
}

impl BodySpec {
    pub fn ball(radius: f64) -> Self {
        BodySpec::Ball {
            radius,
            center: None,
        }
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn ellipsoid_axes(semi_axes: &[f64]) -> Self {
        let n = semi_axes.len();
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { semi_axes[i] * semi_axes[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        BodySpec::Ellipsoid {
            matrix,
            center: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Smooth,
    C11,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Certification {
    /// Convex by construction (balls, ellipsoids, admissible composites).
    Analytic,
    Certified { margin: f64 },
    Forced,
    Uncertified,
}

#[derive(Debug)]
enum Kind {
    Ball {
        radius: f64,
    },
    Ellipsoid {
        matrix: DMatrix<f64>,
    },
    Harmonic {
        poly: SpherePolynomial,
    },
    C11Cap {
        radius: f64,
        direction: DVector<f64>,
        strength: f64,
    },
    Sum(Vec<Body>),
    Dilate(Body, f64),
    Translate(Body),
}

#[derive(Debug)]
struct Inner {
    n: usize,
    spec: BodySpec,
    key: String,
    kind: Kind,
    /// Linear part `⟨center, u⟩` of the support function.
    center: Option<DVector<f64>>,
    regularity: Regularity,
    certification: Certification,
}

/// Support function value, gradient and ambient Hessian at a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportJet {
    pub h: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// An immutable convex body in `R^n`.
#[derive(Clone)]
pub struct Body(Arc<Inner>);

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Body")
            .field("n", &self.0.n)
            .field("spec", &self.0.spec)
            .field("certification", &self.0.certification)
            .finish()
    }
}

fn vector_of(n: usize, v: &[f64], what: &str) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::InvalidBody(format!(
            "{what} has length {}, expected {n}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidBody(format!("{what} has non-finite entries")));
    }
    Ok(DVector::from_column_slice(v))
}

fn optional_center(n: usize, center: &Option<Vec<f64>>) -> Result<Option<DVector<f64>>> {
    center.as_ref().map(|c| vector_of(n, c, "center")).transpose()
}

fn positive(value: f64, what: &str) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidBody(format!("{what} must be positive, got {value}")));
    }
    Ok(())
}

impl Body {
    /// Builds a body from its description. Harmonic perturbations and C^{1,1}
    /// caps are returned uncertified; see [`Body::certify`].
    pub fn from_spec(n: usize, spec: &BodySpec) -> Result<Body> {
        let (kind, center, regularity, certification) = match spec {
            BodySpec::Ball { radius, center } => {
                positive(*radius, "ball radius")?;
                (
                    Kind::Ball { radius: *radius },
                    optional_center(n, center)?,
                    Regularity::Smooth,
                    Certification::Analytic,
                )
            }
            BodySpec::Ellipsoid { matrix, center } => {
                if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidBody(format!(
                        "ellipsoid matrix must be {n}x{n}"
                    )));
                }
                let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidBody("ellipsoid matrix has non-finite entries".into()));
                }
                let asym = (&m - m.transpose()).abs().max();
                if asym > 1e-12 * m.abs().max() {
                    return Err(Error::InvalidBody("ellipsoid matrix is not symmetric".into()));
                }
                let min_eig = SymmetricEigen::new(m.clone()).eigenvalues.min();
                if min_eig <= 0.0 {
                    return Err(Error::InvalidBody(format!(
                        "ellipsoid matrix is not positive definite (smallest eigenvalue {min_eig:e})"
                    )));
                }
                (
                    Kind::Ellipsoid { matrix: m },
                    optional_center(n, center)?,
                    Regularity::Smooth,
                    Certification::Analytic,
                )
            }
            BodySpec::HarmonicPerturbation {
                radius,
                terms,
                center,
            } => {
                positive(*radius, "base radius")?;
                let mut poly = SpherePolynomial::from_terms(n, vec![(vec![0; n], *radius)]);
                for term in terms {
                    if !term.coef.is_finite() {
                        return Err(Error::InvalidBody("non-finite harmonic coefficient".into()));
                    }
                    let family = canonical_harmonics(n, term.degree)?;
                    let y = family.get(term.index).ok_or_else(|| {
                        Error::InvalidBody(format!(
                            "harmonic index {} out of range for degree {} (count {})",
                            term.index,
                            term.degree,
                            family.len()
                        ))
                    })?;
                    poly.add_scaled(y, term.coef);
                }
                (
                    Kind::Harmonic { poly },
                    optional_center(n, center)?,
                    Regularity::Smooth,
                    Certification::Uncertified,
                )
            }
            BodySpec::C11Cap {
                radius,
                direction,
                strength,
                center,
            } => {
                positive(*radius, "cap base radius")?;
                if !(strength.is_finite() && *strength >= 0.0) {
                    return Err(Error::InvalidBody(format!(
                        "cap strength must be nonnegative, got {strength}"
                    )));
                }
                let d = vector_of(n, direction, "cap direction")?;
                let norm = d.norm();
                if norm == 0.0 {
                    return Err(Error::InvalidBody("cap direction is zero".into()));
                }
                (
                    Kind::C11Cap {
                        radius: *radius,
                        direction: d / norm,
                        strength: *strength,
                    },
                    optional_center(n, center)?,
                    Regularity::C11,
                    Certification::Uncertified,
                )
            }
            BodySpec::MinkowskiSum { bodies } => {
                if bodies.is_empty() {
                    return Err(Error::InvalidBody("empty Minkowski sum".into()));
                }
                let parts = bodies
                    .iter()
                    .map(|b| Body::from_spec(n, b))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(Body::sum_of(parts, spec.clone()));
            }
            BodySpec::Dilate { body, factor } => {
                positive(*factor, "dilation factor")?;
                let base = Body::from_spec(n, body)?;
                return Ok(base.dilate_with_spec(*factor, spec.clone()));
            }
            BodySpec::Translate { body, offset } => {
                let c = vector_of(n, offset, "translation")?;
                let base = Body::from_spec(n, body)?;
                return Ok(base.translate_with_spec(c, spec.clone()));
            }
        };
        Ok(Body::assemble(n, spec.clone(), kind, center, regularity, certification))
    }

    fn assemble(
        n: usize,
        spec: BodySpec,
        kind: Kind,
        center: Option<DVector<f64>>,
        regularity: Regularity,
        certification: Certification,
    ) -> Body {
        let key = format!("{n}:{}", serde_json::to_string(&spec).expect("body spec serializes"));
        Body(Arc::new(Inner {
            n,
            spec,
            key,
            kind,
            center,
            regularity,
            certification,
        }))
    }

    pub fn ball(n: usize, radius: f64) -> Result<Body> {
        Body::from_spec(n, &BodySpec::ball(radius))
    }

    pub fn ellipsoid_axes(semi_axes: &[f64]) -> Result<Body> {
        Body::from_spec(semi_axes.len(), &BodySpec::ellipsoid_axes(semi_axes))
    }

    /// Minkowski sum; the components keep their certification state.
    pub fn minkowski_sum(parts: &[Body]) -> Result<Body> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidBody("empty Minkowski sum".into()))?;
        if parts.iter().any(|p| p.dim() != first.dim()) {
            return Err(Error::InvalidBody("Minkowski sum of bodies of different dimensions".into()));
        }
        let spec = BodySpec::MinkowskiSum {
            bodies: parts.iter().map(|p| p.spec().clone()).collect(),
        };
        Ok(Body::sum_of(parts.to_vec(), spec))
    }

    fn sum_of(parts: Vec<Body>, spec: BodySpec) -> Body {
        let n = parts[0].dim();
        let regularity = if parts.iter().any(|p| p.regularity() == Regularity::C11) {
            Regularity::C11
        } else {
            Regularity::Smooth
        };
        Body::assemble(n, spec, Kind::Sum(parts), None, regularity, Certification::Analytic)
    }

    pub fn dilate(&self, factor: f64) -> Result<Body> {
        positive(factor, "dilation factor")?;
        let spec = BodySpec::Dilate {
            body: Box::new(self.spec().clone()),
            factor,
        };
        Ok(self.dilate_with_spec(factor, spec))
    }

    fn dilate_with_spec(&self, factor: f64, spec: BodySpec) -> Body {
        Body::assemble(
            self.dim(),
            spec,
            Kind::Dilate(self.clone(), factor),
            None,
            self.regularity(),
            Certification::Analytic,
        )
    }

    pub fn translate(&self, offset: &[f64]) -> Result<Body> {
        let c = vector_of(self.dim(), offset, "translation")?;
        let spec = BodySpec::Translate {
            body: Box::new(self.spec().clone()),
            offset: offset.to_vec(),
        };
        Ok(self.translate_with_spec(c, spec))
    }

    fn translate_with_spec(&self, offset: DVector<f64>, spec: BodySpec) -> Body {
        Body::assemble(
            self.dim(),
            spec,
            Kind::Translate(self.clone()),
            Some(offset),
            self.regularity(),
            Certification::Analytic,
        )
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    pub fn spec(&self) -> &BodySpec {
        &self.0.spec
    }

    /// Canonical ordering key, a function of the description only.
    pub fn key(&self) -> &str {
        &self.0.key
    }

    pub fn regularity(&self) -> Regularity {
        self.0.regularity
    }

    /// Certification margin recorded by [`Body::certify`], if any.
    pub fn certified_margin(&self) -> Option<f64> {
        match self.0.certification {
            Certification::Certified { margin } => Some(margin),
            _ => None,
        }
    }

    /// Whether downstream verifications may use this body.
    pub fn is_admissible(&self) -> bool {
        match self.0.certification {
            Certification::Certified { .. } | Certification::Forced => true,
            Certification::Uncertified => false,
            Certification::Analytic => match &self.0.kind {
                Kind::Ball { .. } | Kind::Ellipsoid { .. } => true,
                Kind::Sum(parts) => parts.iter().all(Body::is_admissible),
                Kind::Dilate(b, _) | Kind::Translate(b) => b.is_admissible(),
                Kind::Harmonic { .. } | Kind::C11Cap { .. } => false,
            },
        }
    }

    pub fn ensure_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::Certification {
                body: self.key().to_string(),
                margin: self.certified_margin().unwrap_or(f64::NAN),
            })
        }
    }

    fn with_certification(&self, certification: Certification) -> Body {
        let inner = &self.0;
        let kind = match &inner.kind {
            Kind::Ball { radius } => Kind::Ball { radius: *radius },
            Kind::Ellipsoid { matrix } => Kind::Ellipsoid {
                matrix: matrix.clone(),
            },
            Kind::Harmonic { poly } => Kind::Harmonic { poly: poly.clone() },
            Kind::C11Cap {
                radius,
                direction,
                strength,
            } => Kind::C11Cap {
                radius: *radius,
                direction: direction.clone(),
                strength: *strength,
            },
            Kind::Sum(parts) => Kind::Sum(parts.clone()),
            Kind::Dilate(b, t) => Kind::Dilate(b.clone(), *t),
            Kind::Translate(b) => Kind::Translate(b.clone()),
        };
        Body(Arc::new(Inner {
            n: inner.n,
            spec: inner.spec.clone(),
            key: inner.key.clone(),
            kind,
            center: inner.center.clone(),
            regularity: inner.regularity,
            certification,
        }))
    }

    /// Certifies strict convexity on `grid`: the body is accepted when its
    /// [`convexity_margin`] exceeds [`CERTIFICATION_THRESHOLD`].
    pub fn certify(&self, grid: &SphereGrid) -> Result<Body> {
        let margin = convexity_margin(self, grid)?;
        if margin > CERTIFICATION_THRESHOLD {
            Ok(self.with_certification(Certification::Certified { margin }))
        } else {
            Err(Error::Certification {
                body: self.key().to_string(),
                margin,
            })
        }
    }

    /// Marks the body admissible without certification.
    pub fn force(&self) -> Body {
        self.with_certification(Certification::Forced)
    }

    /// Support function value, gradient and Hessian at unit `u`.
    pub fn jet(&self, u: &[f64]) -> Result<SupportJet> {
        let n = self.dim();
        if u.len() != n {
            return Err(Error::Arity {
                expected: n,
                got: u.len(),
            });
        }
        let uv = DVector::from_column_slice(u);
        let mut jet = match &self.0.kind {
            Kind::Ball { radius } => SupportJet {
                h: *radius,
                grad: &uv * *radius,
                hess: (DMatrix::identity(n, n) - &uv * uv.transpose()) * *radius,
            },
            Kind::Ellipsoid { matrix } => {
                let mu = matrix * &uv;
                let h = uv.dot(&mu).sqrt();
                let grad = mu / h;
                let hess = (matrix - &grad * grad.transpose()) / h;
                SupportJet { h, grad, hess }
            }
            Kind::Harmonic { poly } => {
                let (h, grad, hess) = poly.homogeneous_derivatives(u);
                SupportJet { h, grad, hess }
            }
            Kind::C11Cap {
                radius,
                direction,
                strength,
            } => {
                let s = direction.dot(&uv);
                if s.abs() <= 1e-12 {
                    return Err(Error::SingularPoint { point: u.to_vec() });
                }
                let mut jet = SupportJet {
                    h: *radius,
                    grad: &uv * *radius,
                    hess: (DMatrix::identity(n, n) - &uv * uv.transpose()) * *radius,
                };
                if s > 0.0 {
                    // g(x) = s²/|x| with s = ⟨d, x⟩, at |x| = 1
                    let e = *strength;
                    jet.h += e * s * s;
                    jet.grad += (direction * (2.0 * s) - &uv * (s * s)) * e;
                    let dx = direction * uv.transpose();
                    jet.hess += (direction * direction.transpose() * 2.0
                        - (&dx + dx.transpose()) * (2.0 * s)
                        - (DMatrix::identity(n, n) - &uv * uv.transpose() * 3.0) * (s * s))
                        * e;
                }
                jet
            }
            Kind::Sum(parts) => {
                let mut acc = SupportJet {
                    h: 0.0,
                    grad: DVector::zeros(n),
                    hess: DMatrix::zeros(n, n),
                };
                for p in parts {
                    let j = p.jet(u)?;
                    acc.h += j.h;
                    acc.grad += j.grad;
                    acc.hess += j.hess;
                }
                acc
            }
            Kind::Dilate(b, t) => {
                let j = b.jet(u)?;
                SupportJet {
                    h: j.h * t,
                    grad: j.grad * *t,
                    hess: j.hess * *t,
                }
            }
            Kind::Translate(b) => b.jet(u)?,
        };
        if let Some(c) = &self.0.center {
            jet.h += c.dot(&uv);
            jet.grad += c;
        }
        Ok(jet)
    }

    pub fn support(&self, u: &[f64]) -> Result<f64> {
        Ok(self.jet(u)?.h)
    }
}

/// Free-function form of [`Body::jet`].
pub fn support_grad_hess(body: &Body, u: &[f64]) -> Result<SupportJet> {
    body.jet(u)
}

/// Orthonormal basis of `u^⊥`, stored as the columns of an `n × (n-1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub u: DVector<f64>,
    pub basis: DMatrix<f64>,
}

impl TangentFrame {
    /// Householder frame: the reflection `I - 2vvᵀ/vᵀv` with
    /// `v = u + sign(u_n) e_n` maps `e_n` to `∓u`, so its other columns span
    /// `u^⊥`.
    pub fn householder(u: &[f64]) -> TangentFrame {
        let n = u.len();
        let uv = DVector::from_column_slice(u);
        let mut v = uv.clone();
        let sign = if u[n - 1] >= 0.0 { 1.0 } else { -1.0 };
        v[n - 1] += sign;
        let vv = v.dot(&v);
        let reflection = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / vv);
        TangentFrame {
            u: uv,
            basis: reflection.columns(0, n - 1).into_owned(),
        }
    }

    /// Second deterministic frame: Gram–Schmidt on the coordinate axes,
    /// skipping the axis most aligned with `u`.
    pub fn gram_schmidt(u: &[f64]) -> TangentFrame {
        let n = u.len();
        let uv = DVector::from_column_slice(u);
        let skip = (0..n)
            .max_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap())
            .unwrap();
        let mut cols: Vec<DVector<f64>> = vec![uv.clone()];
        for axis in (0..n).filter(|&a| a != skip) {
            let mut e = DVector::zeros(n);
            e[axis] = 1.0;
            for _ in 0..2 {
                for c in &cols {
                    let p = c.dot(&e);
                    e -= c * p;
                }
            }
            let norm = e.norm();
            cols.push(e / norm);
        }
        TangentFrame {
            u: uv,
            basis: DMatrix::from_columns(&cols[1..]),
        }
    }
}

/// Hessian of `h` restricted to `u^⊥` in the given frame.
pub fn tangential_hessian(body: &Body, u: &[f64], frame: &TangentFrame) -> Result<DMatrix<f64>> {
    let jet = body.jet(u)?;
    Ok(restrict(&jet.hess, frame))
}

pub(crate) fn restrict(hess: &DMatrix<f64>, frame: &TangentFrame) -> DMatrix<f64> {
    let q = frame.basis.transpose() * hess * &frame.basis;
    (&q + q.transpose()) * 0.5
}

/// Smallest eigenvalue of the tangential Hessian over all grid nodes.
pub fn convexity_margin(body: &Body, grid: &SphereGrid) -> Result<f64> {
    if grid.dim() != body.dim() {
        return Err(Error::Arity {
            expected: body.dim(),
            got: grid.dim(),
        });
    }
    let mins = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = grid.node(i);
            let q = tangential_hessian(body, u, &TangentFrame::householder(u))?;
            Ok(SymmetricEigen::new(q).eigenvalues.min())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mins.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::build_grid;

    fn unit(v: &[f64]) -> Vec<f64> {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / r).collect()
    }

    #[test]
    fn ball_jet() {
        let b = Body::ball(3, 2.0).unwrap();
        let u = unit(&[1.0, -2.0, 0.5]);
        let j = b.jet(&u).unwrap();
        assert_eq!(j.h, 2.0);
        let uv = DVector::from_column_slice(&u);
        assert!((&j.grad - &uv * 2.0).norm() < 1e-15);
        let expected = (DMatrix::identity(3, 3) - &uv * uv.transpose()) * 2.0;
        assert!((j.hess - expected).norm() < 1e-15);
    }

    #[test]
    fn translate_adds_linear_term() {
        let b = Body::ball(3, 1.0).unwrap().translate(&[0.5, -1.0, 2.0]).unwrap();
        let u = unit(&[0.2, 0.3, -0.9]);
        let expected = 1.0 + 0.5 * u[0] - u[1] + 2.0 * u[2];
        assert!((b.support(&u).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_gradient_matches_finite_differences() {
        let m = vec![
            vec![2.0, 0.3, -0.1],
            vec![0.3, 1.0, 0.2],
            vec![-0.1, 0.2, 0.7],
        ];
        let body = Body::from_spec(3, &BodySpec::Ellipsoid { matrix: m, center: None }).unwrap();
        let ext = |x: &[f64]| -> f64 {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            r * body.support(&unit(x)).unwrap()
        };
        let u = unit(&[0.4, -0.7, 0.3]);
        let j = body.jet(&u).unwrap();
        let step = 1e-5;
        for i in 0..3 {
            let mut a = u.clone();
            let mut b = u.clone();
            a[i] += step;
            b[i] -= step;
            let fd = (ext(&a) - ext(&b)) / (2.0 * step);
            assert!((fd - j.grad[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_invalid_bodies() {
        let not_pd = BodySpec::Ellipsoid {
            matrix: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            center: None,
        };
        assert!(matches!(Body::from_spec(2, &not_pd), Err(Error::InvalidBody(_))));
        let empty = BodySpec::MinkowskiSum { bodies: vec![] };
        assert!(matches!(Body::from_spec(2, &empty), Err(Error::InvalidBody(_))));
        assert!(Body::ball(2, 0.0).is_err());
        let bad_index = BodySpec::HarmonicPerturbation {
            radius: 1.0,
            terms: vec![HarmonicTerm { degree: 2, index: 5, coef: 0.1 }],
            center: None,
        };
        assert!(Body::from_spec(2, &bad_index).is_err());
    }

    #[test]
    fn euler_identities_all_kinds() {
        let n = 3;
        let specs = sample_specs();
        let grid = build_grid(n, 30).unwrap();
        for spec in &specs {
            let body = Body::from_spec(n, spec).unwrap();
            for u in grid.nodes().step_by(grid.len() / 200) {
                let j = body.jet(u).unwrap();
                let uv = DVector::from_column_slice(u);
                assert!((&j.hess * &uv).norm() <= 1e-10, "{spec:?}");
                assert!((j.grad.dot(&uv) - j.h).abs() <= 1e-12, "{spec:?}");
            }
        }
    }

    fn sample_specs() -> Vec<BodySpec> {
        vec![
            BodySpec::ball(1.5),
            BodySpec::ellipsoid_axes(&[1.0, 2.0, 0.5]),
            BodySpec::HarmonicPerturbation {
                radius: 1.0,
                terms: vec![
                    HarmonicTerm { degree: 2, index: 1, coef: 0.1 },
                    HarmonicTerm { degree: 3, index: 4, coef: -0.05 },
                ],
                center: Some(vec![0.1, 0.0, -0.2]),
            },
            BodySpec::C11Cap {
                radius: 1.0,
                direction: vec![0.3, 0.4, 0.5],
                strength: 0.3,
                center: None,
            },
            BodySpec::MinkowskiSum {
                bodies: vec![BodySpec::ball(1.0), BodySpec::ellipsoid_axes(&[1.0, 1.5, 0.8])],
            },
            BodySpec::Dilate {
                body: Box::new(BodySpec::ellipsoid_axes(&[1.0, 1.5, 0.8])),
                factor: 2.5,
            },
            BodySpec::Translate {
                body: Box::new(BodySpec::ball(1.0)),
                offset: vec![1.0, 2.0, 3.0],
            },
        ]
    }

    #[test]
    fn frames_are_orthonormal_and_frame_independent() {
        let body = Body::ellipsoid_axes(&[1.0, 2.0, 0.5, 1.3]).unwrap();
        let grid = build_grid(4, 8).unwrap();
        for u in grid.nodes() {
            for frame in [TangentFrame::householder(u), TangentFrame::gram_schmidt(u)] {
                let gram = frame.basis.transpose() * &frame.basis;
                assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-13);
                assert!((frame.basis.transpose() * &frame.u).abs().max() < 1e-13);
            }
            let a = tangential_hessian(&body, u, &TangentFrame::householder(u)).unwrap();
            let b = tangential_hessian(&body, u, &TangentFrame::gram_schmidt(u)).unwrap();
            let mut ea: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
            let mut eb: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
            ea.sort_by(|x, y| x.partial_cmp(y).unwrap());
            eb.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in ea.iter().zip(&eb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        // poles
        for u in [[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, -1.0]] {
            let f = TangentFrame::householder(&u);
            assert!((f.basis.transpose() * &f.u).abs().max() < 1e-15);
        }
    }

    #[test]
    fn tangential_hessian_examples() {
        let u = unit(&[0.3, -0.4, 0.2]);
        let frame = TangentFrame::householder(&u);
        let ball = Body::ball(3, 1.7).unwrap();
        let q = tangential_hessian(&ball, &u, &frame).unwrap();
        assert!((q - DMatrix::identity(2, 2) * 1.7).abs().max() < 1e-14);

        let e = Body::ellipsoid_axes(&[1.0, 2.0, 0.5]).unwrap();
        let q = tangential_hessian(&e, &u, &frame).unwrap();
        let q3 = tangential_hessian(&e.dilate(3.0).unwrap(), &u, &frame).unwrap();
        assert!((q3 - &q * 3.0).abs().max() < 1e-13);
        let qt = tangential_hessian(&e.translate(&[1.0, -2.0, 0.3]).unwrap(), &u, &frame).unwrap();
        assert!((qt - q).abs().max() < 1e-15);
    }

    #[test]
    fn rotation_equivariance_for_ellipsoids() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
        let (c, s) = (0.6f64, 0.8f64);
        let rot = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let rotated = &rot * &m * rot.transpose();
        let to_spec = |m: &DMatrix<f64>| BodySpec::Ellipsoid {
            matrix: (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect(),
            center: None,
        };
        let a = Body::from_spec(3, &to_spec(&m)).unwrap();
        let b = Body::from_spec(3, &to_spec(&rotated)).unwrap();
        let u = unit(&[0.1, 0.7, -0.3]);
        let ru: Vec<f64> = (&rot * DVector::from_column_slice(&u)).iter().copied().collect();
        assert!((a.support(&u).unwrap() - b.support(&ru).unwrap()).abs() < 1e-14);
        let eig = |body: &Body, u: &[f64]| {
            let q = tangential_hessian(body, u, &TangentFrame::householder(u)).unwrap();
            let mut e: Vec<f64> = SymmetricEigen::new(q).eigenvalues.iter().copied().collect();
            e.sort_by(|x, y| x.partial_cmp(y).unwrap());
            e
        };
        for (x, y) in eig(&a, &u).iter().zip(eig(&b, &ru).iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn convexity_margins() {
        let grid = build_grid(3, 40).unwrap();
        let ball = Body::ball(3, 1.3).unwrap();
        assert!((convexity_margin(&ball, &grid).unwrap() - 1.3).abs() < 1e-13);

        let perturbed = |coef: f64| {
            Body::from_spec(
                3,
                &BodySpec::HarmonicPerturbation {
                    radius: 1.0,
                    terms: vec![HarmonicTerm { degree: 3, index: 0, coef }],
                    center: None,
                },
            )
            .unwrap()
        };
        assert!(convexity_margin(&perturbed(0.5), &grid).unwrap() < 0.0);
        assert!(convexity_margin(&perturbed(0.02), &grid).unwrap() > 0.0);

        assert!(!perturbed(0.02).is_admissible());
        assert!(perturbed(0.02).certify(&grid).unwrap().is_admissible());
        assert!(matches!(
            perturbed(0.5).certify(&grid),
            Err(Error::Certification { .. })
        ));
        assert!(perturbed(0.5).force().is_admissible());
    }

    #[test]
    fn c11_cap_singular_locus() {
        let cap = Body::from_spec(
            2,
            &BodySpec::C11Cap {
                radius: 1.0,
                direction: vec![1.0, 0.0],
                strength: 0.2,
                center: None,
            },
        )
        .unwrap();
        assert_eq!(cap.regularity(), Regularity::C11);
        assert!(matches!(cap.jet(&[0.0, 1.0]), Err(Error::SingularPoint { .. })));
        // gradient continuous across the crease, Hessian jumps
        let above = cap.jet(&unit(&[1e-7, 1.0])).unwrap();
        let below = cap.jet(&unit(&[-1e-7, 1.0])).unwrap();
        assert!((&above.grad - &below.grad).norm() < 1e-6);
        assert!((&above.hess - &below.hess).norm() > 0.3);
        let grid = build_grid(2, 64).unwrap();
        assert!(cap.certify(&grid).is_ok());
    }

    #[test]
    fn minkowski_sum_is_additive() {
        let a = Body::ellipsoid_axes(&[1.0, 2.0, 0.5]).unwrap();
        let b = Body::ball(3, 0.7).unwrap().translate(&[0.1, 0.2, 0.3]).unwrap();
        let s = Body::minkowski_sum(&[a.clone(), b.clone()]).unwrap();
        let u = unit(&[-0.3, 0.5, 0.8]);
        let (ja, jb, js) = (a.jet(&u).unwrap(), b.jet(&u).unwrap(), s.jet(&u).unwrap());
        assert!((js.h - ja.h - jb.h).abs() < 1e-14);
        assert!((js.grad - ja.grad - jb.grad).norm() < 1e-14);
        assert!((js.hess - ja.hess - jb.hess).norm() < 1e-14);
    }

    #[test]
    fn spec_round_trips_through_json() {
        for spec in sample_specs() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: BodySpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
        let parsed: BodySpec = serde_json::from_str(r#"{"type":"ball","radius":2.0}"#).unwrap();
        assert_eq!(parsed, BodySpec::ball(2.0));
    }
}
