//! Real orthonormal spherical harmonics of degree at most m and their
//! tangential surface gradients.
//!
//! Each basis function is generated once as its homogeneous polynomial
//! extension in (x, y, z): degree-l associated Legendre parts come from
//! the Legendre coefficient recurrence, the longitude factors from
//! Re/Im (x + iy)^k, and odd powers of r are absorbed by parity. Values
//! and ambient gradients are then exact monomial sums, and the surface
//! gradient is the tangential projection
//!     grad0 Y(p) = (I - p p^T) grad Ybar(p).
//! This keeps every quantity smooth through the poles.
//!
//! Normalization is orthonormal over the sphere's surface measure
//! (integral of Y^2 over S^2 equals 1), Condon-Shortley phase omitted.
//! Ordering: l = 0..=m, within l the order k runs -l..=l (sin harmonics,
//! zonal, cos harmonics).

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;

/// Largest supported degree; keeps power tables on the stack.
pub const MAX_DEGREE: usize = 15;

/// Number of spherical harmonics of degree at most m: (m + 1)^2.
pub fn basis_dim(m: usize) -> usize {
    (m + 1) * (m + 1)
}

#[derive(Debug, Clone, Copy)]
struct Term {
    coeff: f64,
    pow: [u8; 3],
}

/// Polynomial in (x, y, z) as a flat monomial list.
#[derive(Debug, Clone, Default)]
struct Poly {
    terms: Vec<Term>,
}

impl Poly {
    fn constant(c: f64) -> Self {
        Poly {
            terms: vec![Term {
                coeff: c,
                pow: [0, 0, 0],
            }],
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for a in &self.terms {
            for b in &other.terms {
                out.terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    pow: [
                        a.pow[0] + b.pow[0],
                        a.pow[1] + b.pow[1],
                        a.pow[2] + b.pow[2],
                    ],
                });
            }
        }
        out.merge();
        out
    }

    fn add_scaled(&mut self, other: &Poly, s: f64) {
        for t in &other.terms {
            self.terms.push(Term {
                coeff: s * t.coeff,
                pow: t.pow,
            });
        }
        self.merge();
    }

    fn scale(&mut self, s: f64) {
        for t in &mut self.terms {
            t.coeff *= s;
        }
    }

    fn merge(&mut self) {
        self.terms.sort_by_key(|t| t.pow);
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match merged.last_mut() {
                Some(last) if last.pow == t.pow => last.coeff += t.coeff,
                _ => merged.push(*t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        self.terms = merged;
    }

    fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::default();
        for t in &self.terms {
            if t.pow[var] > 0 {
                let mut pow = t.pow;
                pow[var] -= 1;
                out.terms.push(Term {
                    coeff: t.coeff * t.pow[var] as f64,
                    pow,
                });
            }
        }
        out.merge();
        out
    }

    #[inline]
    fn eval(&self, pows: &PowerTable) -> f64 {
        let mut sum = 0.0;
        for t in &self.terms {
            sum += t.coeff
                * pows.x[t.pow[0] as usize]
                * pows.y[t.pow[1] as usize]
                * pows.z[t.pow[2] as usize];
        }
        sum
    }
}

struct PowerTable {
    x: [f64; MAX_DEGREE + 1],
    y: [f64; MAX_DEGREE + 1],
    z: [f64; MAX_DEGREE + 1],
}

impl PowerTable {
    #[inline]
    fn new(p: [f64; 3], degree: usize) -> Self {
        let mut t = PowerTable {
            x: [1.0; MAX_DEGREE + 1],
            y: [1.0; MAX_DEGREE + 1],
            z: [1.0; MAX_DEGREE + 1],
        };
        for e in 1..=degree {
            t.x[e] = t.x[e - 1] * p[0];
            t.y[e] = t.y[e - 1] * p[1];
            t.z[e] = t.z[e - 1] * p[2];
        }
        t
    }
}

/// Coefficients of the Legendre polynomial P_l (index = power of t).
fn legendre_coeffs(l: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if l == 0 {
        return prev;
    }
    let mut curr = vec![0.0, 1.0];
    for deg in 1..l {
        let mut next = vec![0.0; deg + 2];
        for (j, &c) in curr.iter().enumerate() {
            next[j + 1] += (2 * deg + 1) as f64 * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= deg as f64 * c;
        }
        for c in &mut next {
            *c /= (deg + 1) as f64;
        }
        prev = std::mem::replace(&mut curr, next);
    }
    curr
}

fn coeff_derivative(q: &[f64]) -> Vec<f64> {
    q.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &c)| j as f64 * c)
        .collect()
}

/// Re and Im of (x + iy)^k as polynomials.
fn circular_parts(k: usize) -> (Poly, Poly) {
    let mut re = Poly::constant(1.0);
    let mut im = Poly::default();
    let x = Poly {
        terms: vec![Term {
            coeff: 1.0,
            pow: [1, 0, 0],
        }],
    };
    let y = Poly {
        terms: vec![Term {
            coeff: 1.0,
            pow: [0, 1, 0],
        }],
    };
    for _ in 0..k {
        let mut new_re = re.mul(&x);
        new_re.add_scaled(&im.mul(&y), -1.0);
        let mut new_im = re.mul(&y);
        new_im.add_scaled(&im.mul(&x), 1.0);
        re = new_re;
        im = new_im;
    }
    (re, im)
}

/// (x^2 + y^2 + z^2)^s.
fn radius_sq_power(s: usize) -> Poly {
    let r2 = Poly {
        terms: vec![
            Term {
                coeff: 1.0,
                pow: [2, 0, 0],
            },
            Term {
                coeff: 1.0,
                pow: [0, 2, 0],
            },
            Term {
                coeff: 1.0,
                pow: [0, 0, 2],
            },
        ],
    };
    let mut out = Poly::constant(1.0);
    for _ in 0..s {
        out = out.mul(&r2);
    }
    out
}

fn factorial_ratio(l: usize, k: usize) -> f64 {
    // (l - k)! / (l + k)!
    let mut r = 1.0;
    for j in (l - k + 1)..=(l + k) {
        r /= j as f64;
    }
    r
}

/// The degree-l, order-k homogeneous polynomial r^l Y_{l,k}(x / r).
fn solid_harmonic(l: usize, k: i64) -> Poly {
    let ka = k.unsigned_abs() as usize;
    let q = {
        let mut q = legendre_coeffs(l);
        for _ in 0..ka {
            q = coeff_derivative(&q);
        }
        q
    };
    // z^j terms of the Legendre part; l - ka - j is even by parity
    let mut base = Poly::default();
    for (j, &c) in q.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut part = radius_sq_power((l - ka - j) / 2);
        let zj = Poly {
            terms: vec![Term {
                coeff: 1.0,
                pow: [0, 0, j as u8],
            }],
        };
        part = part.mul(&zj);
        base.add_scaled(&part, c);
    }
    let (re, im) = circular_parts(ka);
    let mut poly = if k >= 0 { base.mul(&re) } else { base.mul(&im) };
    let mut norm = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)
        * factorial_ratio(l, ka))
    .sqrt();
    if ka > 0 {
        norm *= std::f64::consts::SQRT_2;
    }
    poly.scale(norm);
    poly
}

/// Evaluator for the full basis of degree at most m.
///
/// Construction does all the polynomial generation; evaluation is a plain
/// monomial sum and is cheap enough for assembly inner loops.
pub struct HarmonicBasis {
    degree: usize,
    dim: usize,
    polys: Vec<Poly>,
    grads: Vec<[Poly; 3]>,
}

impl HarmonicBasis {
    pub fn new(m: usize) -> Result<Self> {
        if m > MAX_DEGREE {
            return Err(Error::config(
                "degree",
                format!("harmonic degree {m} exceeds the supported maximum {MAX_DEGREE}"),
            ));
        }
        let dim = basis_dim(m);
        let mut polys = Vec::with_capacity(dim);
        let mut grads = Vec::with_capacity(dim);
        for l in 0..=m {
            for k in -(l as i64)..=(l as i64) {
                let p = solid_harmonic(l, k);
                let g = [p.derivative(0), p.derivative(1), p.derivative(2)];
                polys.push(p);
                grads.push(g);
            }
        }
        Ok(HarmonicBasis {
            degree: m,
            dim,
            polys,
            grads,
        })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Degree l of the basis function at position `idx`.
    pub fn harmonic_degree(&self, idx: usize) -> usize {
        (idx as f64).sqrt() as usize
    }

    /// Evaluate all basis functions at a unit vector.
    pub fn eval_into(&self, p: [f64; 3], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let pows = PowerTable::new(p, self.degree);
        for (o, poly) in out.iter_mut().zip(&self.polys) {
            *o = poly.eval(&pows);
        }
    }

    pub fn eval(&self, p: &SpherePoint) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(p.xyz(), &mut out);
        out
    }

    /// Evaluate the surface gradient of every basis function; `out[i]` is
    /// the tangential 3-vector for basis function i.
    pub fn eval_surface_gradient_into(&self, p: [f64; 3], out: &mut [[f64; 3]]) {
        debug_assert_eq!(out.len(), self.dim);
        let pows = PowerTable::new(p, self.degree);
        for (o, g) in out.iter_mut().zip(&self.grads) {
            let amb = [g[0].eval(&pows), g[1].eval(&pows), g[2].eval(&pows)];
            let radial = amb[0] * p[0] + amb[1] * p[1] + amb[2] * p[2];
            *o = [
                amb[0] - radial * p[0],
                amb[1] - radial * p[1],
                amb[2] - radial * p[2],
            ];
        }
    }

    /// Surface gradients as three component vectors of length dim.
    pub fn eval_surface_gradient(&self, p: &SpherePoint) -> [Vec<f64>; 3] {
        let mut buf = vec![[0.0; 3]; self.dim];
        self.eval_surface_gradient_into(p.xyz(), &mut buf);
        let mut out = [
            Vec::with_capacity(self.dim),
            Vec::with_capacity(self.dim),
            Vec::with_capacity(self.dim),
        ];
        for g in buf {
            out[0].push(g[0]);
            out[1].push(g[1]);
            out[2].push(g[2]);
        }
        out
    }
}

/// Values of the basis of degree at most m at one point.
pub fn eval_basis(p: &SpherePoint, m: usize) -> Result<Vec<f64>> {
    Ok(HarmonicBasis::new(m)?.eval(p))
}

/// Surface-gradient components of the basis of degree at most m.
pub fn eval_surface_gradient_basis(p: &SpherePoint, m: usize) -> Result<[Vec<f64>; 3]> {
    Ok(HarmonicBasis::new(m)?.eval_surface_gradient(p))
}
