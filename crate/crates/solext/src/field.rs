//! Vector field catalog (analytic values, Jacobians, divergences) and the
//! mollified zero-extension pipeline for rough inputs.

use crate::domain::Domain;
use crate::geom::Pt;
use crate::partition::bump;
use crate::quadrature::CubeRule;
use crate::geom::Aabb;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// An evaluatable vector field with an optional analytic Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Pt) -> Pt;
    /// J[i][j] = ∂u_i/∂x_j, when available analytically.
    fn jacobian(&self, x: &Pt) -> Option<[[f64; 3]; 3]>;
    fn divergence(&self, x: &Pt) -> Option<f64> {
        self.jacobian(x).map(|j| (0..self.dim()).map(|d| j[d][d]).sum())
    }
}

/// Polynomial in up to 3 variables: Σ c · x^a y^b z^c.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Poly {
    pub terms: Vec<(u8, u8, u8, f64)>,
}

impl Poly {
    pub fn eval(&self, x: &Pt) -> f64 {
        let n = x.dim();
        self.terms
            .iter()
            .map(|&(a, b, c, coef)| {
                let mut v = coef * x[0].powi(a as i32) * x[1].powi(b as i32);
                if n == 3 {
                    v *= x[2].powi(c as i32);
                } else {
                    debug_assert_eq!(c, 0);
                }
                v
            })
            .sum()
    }

    pub fn diff(&self, axis: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter_map(|&(a, b, c, coef)| {
                let p = [a, b, c][axis];
                if p == 0 {
                    return None;
                }
                let mut e = [a, b, c];
                e[axis] = p - 1;
                Some((e[0], e[1], e[2], coef * p as f64))
            })
            .collect();
        Poly { terms }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|&(a, b, c, _)| (a + b + c) as usize).max().unwrap_or(0)
    }
}

/// Catalog of analytic fields addressable from configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Field {
    Constant { values: Vec<f64> },
    /// 2D rigid rotation (−y, x); 3D ω × x.
    Rotation { #[serde(default)] axis: Option<Vec<f64>> , dim: usize },
    /// u = A x; divergence is tr A (not necessarily solenoidal).
    Linear { matrix: Vec<Vec<f64>> },
    /// 2D u = ∇⊥Q = (∂₂Q, −∂₁Q), solenoidal for any polynomial Q.
    StreamPoly { q: Poly },
    /// 2D u = ∇⊥ of a sum of radial exp-bumps.
    BumpStream { bumps: Vec<StreamBump> },
    /// 2D u = ∇⊥(amp · sin(kx·x + px) · sin(ky·y + py)), entire analytic.
    TrigStream { amp: f64, kx: f64, ky: f64, px: f64, py: f64 },
    /// 3D u = curl A for polynomial components A.
    CurlPoly { a: [Poly; 3] },
    /// §7.2 (a): u = (y^{−α}, 0) on y > 0.
    CuspPlusField { alpha: f64 },
    /// §7.2 (b): u = (x'/|x'|^{n−1} · y^{−α}, 0) for y > 0, else 0.
    CuspMinusField { alpha: f64, dim: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StreamBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl Field {
    pub fn instantiate(&self) -> Arc<dyn VectorField> {
        Arc::new(self.clone())
    }

    /// Whether the analytic divergence vanishes identically.
    pub fn is_solenoidal(&self) -> bool {
        match self {
            Field::Constant { .. }
            | Field::Rotation { .. }
            | Field::StreamPoly { .. }
            | Field::BumpStream { .. }
            | Field::TrigStream { .. }
            | Field::CurlPoly { .. }
            | Field::CuspPlusField { .. } => true,
            Field::Linear { matrix } => {
                (0..matrix.len()).map(|d| matrix[d][d]).sum::<f64>().abs() < 1e-14
            }
            Field::CuspMinusField { .. } => true,
        }
    }
}

fn stream_bump_parts(b: &StreamBump, x: &Pt) -> (f64, Pt, [[f64; 2]; 2]) {
    // radial profile B(r) = amp · bump(r/R); returns (B, ∇B, Hessian)
    let c = Pt::new(&b.center);
    let w = *x - c;
    let r2 = w.dot(&w);
    let rr = b.radius * b.radius;
    let t2 = r2 / rr;
    if t2 >= 1.0 {
        return (0.0, Pt::zero(2), [[0.0; 2]; 2]);
    }
    // B = amp·exp(−1/(1−t²)) as a function of t² = |w|²/R²
    let s = 1.0 - t2;
    let e = b.amplitude * (-1.0 / s).exp();
    // dB/d(t²) = −e/s², d²B/d(t²)² = e(1−2s)/s⁴
    let d1 = -e / (s * s);
    let d2 = e * (1.0 - 2.0 * s) / (s * s * s * s);
    // ∇B = dB/d(t²) · 2w/R²; Hess = 4 d2 w wᵀ/R⁴ + 2 d1 I/R²
    let grad = w.scale(2.0 * d1 / rr);
    let mut hess = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = 4.0 * d2 * w[i] * w[j] / (rr * rr);
            if i == j {
                hess[i][j] += 2.0 * d1 / rr;
            }
        }
    }
    (e, grad, hess)
}

impl VectorField for Field {
    fn dim(&self) -> usize {
        match self {
            Field::Constant { values } => values.len(),
            Field::Rotation { dim, .. } => *dim,
            Field::Linear { matrix } => matrix.len(),
            Field::StreamPoly { .. } | Field::BumpStream { .. } | Field::TrigStream { .. } => 2,
            Field::CurlPoly { .. } => 3,
            Field::CuspPlusField { .. } => 2,
            Field::CuspMinusField { dim, .. } => *dim,
        }
    }

    fn eval(&self, x: &Pt) -> Pt {
        match self {
            Field::Constant { values } => Pt::new(values),
            Field::Rotation { axis, dim } => {
                if *dim == 2 {
                    Pt::new(&[-x[1], x[0]])
                } else {
                    let w = axis.as_ref().map(|a| Pt::new(a)).unwrap_or(Pt::new(&[0.0, 0.0, 1.0]));
                    w.cross(x)
                }
            }
            Field::Linear { matrix } => {
                let n = matrix.len();
                Pt::from_fn(n, |i| (0..n).map(|j| matrix[i][j] * x[j]).sum())
            }
            Field::StreamPoly { q } => {
                Pt::new(&[q.diff(1).eval(x), -q.diff(0).eval(x)])
            }
            Field::BumpStream { bumps } => {
                let mut g = Pt::zero(2);
                for b in bumps {
                    let (_, gb, _) = stream_bump_parts(b, x);
                    g = g + gb;
                }
                Pt::new(&[g[1], -g[0]])
            }
            Field::TrigStream { amp, kx, ky, px, py } => {
                let (sx, cx) = (kx * x[0] + px).sin_cos();
                let (sy, cy) = (ky * x[1] + py).sin_cos();
                Pt::new(&[amp * ky * sx * cy, -amp * kx * cx * sy])
            }
            Field::CurlPoly { a } => {
                let d = |i: usize, j: usize| a[i].diff(j).eval(x);
                Pt::new(&[d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])
            }
            Field::CuspPlusField { alpha } => {
                if x[1] > 0.0 {
                    Pt::new(&[x[1].powf(-alpha), 0.0])
                } else {
                    Pt::zero(2)
                }
            }
            Field::CuspMinusField { alpha, dim } => {
                let n = *dim;
                let y = x[n - 1];
                if y <= 0.0 {
                    return Pt::zero(n);
                }
                let mut xp = Pt::zero(n);
                for d in 0..n - 1 {
                    xp[d] = x[d];
                }
                let r = xp.norm();
                if r == 0.0 {
                    return Pt::zero(n);
                }
                let factor = y.powf(-alpha) / r.powi(n as i32 - 1);
                let mut out = xp.scale(factor);
                out[n - 1] = 0.0;
                out
            }
        }
    }

    fn jacobian(&self, x: &Pt) -> Option<[[f64; 3]; 3]> {
        let mut j = [[0.0f64; 3]; 3];
        match self {
            Field::Constant { .. } => {}
            Field::Rotation { axis, dim } => {
                if *dim == 2 {
                    j[0][1] = -1.0;
                    j[1][0] = 1.0;
                } else {
                    let w = axis.as_ref().map(|a| Pt::new(a)).unwrap_or(Pt::new(&[0.0, 0.0, 1.0]));
                    // (ω×x)_i = ε_ijk ω_j x_k
                    j[0][1] = -w[2];
                    j[0][2] = w[1];
                    j[1][0] = w[2];
                    j[1][2] = -w[0];
                    j[2][0] = -w[1];
                    j[2][1] = w[0];
                }
            }
            Field::Linear { matrix } => {
                for (i, row) in matrix.iter().enumerate() {
                    for (jj, v) in row.iter().enumerate() {
                        j[i][jj] = *v;
                    }
                }
            }
            Field::StreamPoly { q } => {
                let q1 = q.diff(0);
                let q2 = q.diff(1);
                j[0][0] = q2.diff(0).eval(x);
                j[0][1] = q2.diff(1).eval(x);
                j[1][0] = -q1.diff(0).eval(x);
                j[1][1] = -q1.diff(1).eval(x);
            }
            Field::BumpStream { bumps } => {
                let mut h = [[0.0f64; 2]; 2];
                for b in bumps {
                    let (_, _, hb) = stream_bump_parts(b, x);
                    for i in 0..2 {
                        for k in 0..2 {
                            h[i][k] += hb[i][k];
                        }
                    }
                }
                // u = (∂₂B, −∂₁B)
                j[0][0] = h[1][0];
                j[0][1] = h[1][1];
                j[1][0] = -h[0][0];
                j[1][1] = -h[0][1];
            }
            Field::TrigStream { amp, kx, ky, px, py } => {
                let (sx, cx) = (kx * x[0] + px).sin_cos();
                let (sy, cy) = (ky * x[1] + py).sin_cos();
                j[0][0] = amp * ky * kx * cx * cy;
                j[0][1] = -amp * ky * ky * sx * sy;
                j[1][0] = amp * kx * kx * sx * sy;
                j[1][1] = -amp * kx * ky * cx * cy;
            }
            Field::CurlPoly { a } => {
                let dd = |i: usize, j1: usize, j2: usize| a[i].diff(j1).diff(j2).eval(x);
                for col in 0..3 {
                    j[0][col] = dd(2, 1, col) - dd(1, 2, col);
                    j[1][col] = dd(0, 2, col) - dd(2, 0, col);
                    j[2][col] = dd(1, 0, col) - dd(0, 1, col);
                }
            }
            Field::CuspPlusField { alpha } => {
                if x[1] > 0.0 {
                    j[0][1] = -alpha * x[1].powf(-alpha - 1.0);
                }
            }
            Field::CuspMinusField { .. } => return None,
        }
        Some(j)
    }
}

/// Mollified zero-extension u_ε = ρ_ε ∗ ū of a field supported on a domain,
/// evaluatable on the shrunk domain Ω_ε and anywhere the stencil makes
/// sense. The convolution is a fixed quadrature mixture, so its Jacobian is
/// the same mixture of base Jacobians (never finite differences).
pub struct MollifiedField {
    base: Arc<dyn VectorField>,
    domain: Arc<Domain>,
    pub eps: f64,
    /// fixed stencil: (offset w, normalized weight a) with Σa = 1
    stencil: Vec<(Pt, f64)>,
}

impl MollifiedField {
    pub fn new(
        base: Arc<dyn VectorField>,
        domain: Arc<Domain>,
        eps: f64,
        order: usize,
    ) -> Self {
        let n = domain.dim();
        let rule = CubeRule::new(order);
        let cube = Aabb::new(Pt::from_fn(n, |_| -eps), Pt::from_fn(n, |_| eps));
        let mut stencil = Vec::new();
        let mut total = 0.0;
        for (w, wt) in rule.nodes(&cube) {
            let rho = bump(w.norm() / eps);
            if rho > 0.0 {
                total += wt * rho;
                stencil.push((w, wt * rho));
            }
        }
        for s in &mut stencil {
            s.1 /= total;
        }
        MollifiedField { base, domain, eps, stencil }
    }

    fn zero_extended(&self, x: &Pt) -> Pt {
        if self.domain.contains(x) {
            self.base.eval(x)
        } else {
            Pt::zero(self.domain.dim())
        }
    }
}

impl VectorField for MollifiedField {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn eval(&self, x: &Pt) -> Pt {
        let mut acc = Pt::zero(self.dim());
        for (w, a) in &self.stencil {
            acc = acc + self.zero_extended(&(*x - *w)).scale(*a);
        }
        acc
    }

    fn jacobian(&self, x: &Pt) -> Option<[[f64; 3]; 3]> {
        let mut out = [[0.0f64; 3]; 3];
        for (w, a) in &self.stencil {
            let p = *x - *w;
            if self.domain.contains(&p) {
                let j = self.base.jacobian(&p)?;
                for i in 0..3 {
                    for k in 0..3 {
                        out[i][k] += a * j[i][k];
                    }
                }
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainDescriptor;

    fn fd_jacobian(f: &dyn VectorField, x: &Pt, h: f64) -> [[f64; 3]; 3] {
        let n = f.dim();
        let mut j = [[0.0f64; 3]; 3];
        for col in 0..n {
            let mut xp = *x;
            xp[col] += h;
            let mut xm = *x;
            xm[col] -= h;
            let (fp, fm) = (f.eval(&xp), f.eval(&xm));
            for row in 0..n {
                j[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn analytic_jacobians_match_fd() {
        let fields: Vec<Field> = vec![
            Field::Rotation { axis: None, dim: 2 },
            Field::Linear { matrix: vec![vec![0.3, 1.2], vec![-0.7, -0.3]] },
            Field::StreamPoly {
                q: Poly { terms: vec![(2, 3, 0, 1.0), (1, 1, 0, -0.5), (4, 0, 0, 0.25)] },
            },
            Field::BumpStream {
                bumps: vec![StreamBump { center: vec![0.2, 0.1], radius: 0.8, amplitude: 1.3 }],
            },
            Field::CurlPoly {
                a: [
                    Poly { terms: vec![(0, 2, 1, 1.0)] },
                    Poly { terms: vec![(1, 0, 2, -0.6)] },
                    Poly { terms: vec![(2, 1, 0, 0.4)] },
                ],
            },
            Field::CuspPlusField { alpha: 2.5 },
        ];
        for f in &fields {
            let n = f.dim();
            let x = if n == 2 { Pt::new(&[0.31, 0.47]) } else { Pt::new(&[0.31, 0.47, -0.2]) };
            let j = f.jacobian(&x).unwrap();
            let fd = fd_jacobian(f, &x, 1e-6);
            for r in 0..n {
                for c in 0..n {
                    assert!(
                        (j[r][c] - fd[r][c]).abs() < 1e-5 * (1.0 + j[r][c].abs()),
                        "{f:?} J[{r}][{c}]: {} vs {}",
                        j[r][c],
                        fd[r][c]
                    );
                }
            }
            if f.is_solenoidal() {
                assert!(f.divergence(&x).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mollified_constant_is_identity() {
        let domain = Arc::new(
            Domain::new(DomainDescriptor::Rectangle { min: vec![0.0, 0.0], max: vec![1.0, 1.0] })
                .unwrap(),
        );
        let base = Field::Constant { values: vec![1.5, -0.5] }.instantiate();
        let m = MollifiedField::new(base, domain, 0.05, 8);
        let v = m.eval(&Pt::new(&[0.4, 0.6]));
        assert!((v[0] - 1.5).abs() < 1e-14 && (v[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn mollified_l1_error_first_order_in_eps() {
        let domain = Arc::new(
            Domain::new(DomainDescriptor::Rectangle { min: vec![0.0, 0.0], max: vec![1.0, 1.0] })
                .unwrap(),
        );
        let base = Field::StreamPoly { q: Poly { terms: vec![(2, 1, 0, 1.0), (0, 3, 0, 0.5)] } }
            .instantiate();
        let mut errs = Vec::new();
        for eps in [0.04, 0.02, 0.01] {
            let m = MollifiedField::new(base.clone(), domain.clone(), eps, 8);
            // L¹ error over Ω_ε by midpoint grid
            let inner = domain.inset(eps).unwrap();
            let g = 40;
            let bb = inner.bounding_box();
            let mut err = 0.0;
            let mut cells = 0;
            for i in 0..g {
                for j in 0..g {
                    let p = Pt::new(&[
                        bb.min[0] + (i as f64 + 0.5) / g as f64 * (bb.max[0] - bb.min[0]),
                        bb.min[1] + (j as f64 + 0.5) / g as f64 * (bb.max[1] - bb.min[1]),
                    ]);
                    if inner.contains(&p) {
                        err += (m.eval(&p) - base.eval(&p)).norm();
                        cells += 1;
                    }
                }
            }
            errs.push(err / cells as f64);
        }
        // O(ε): halving ε should at least halve the error (allow slack);
        // smooth fields actually give O(ε²), which also passes
        assert!(errs[1] < 0.75 * errs[0], "{errs:?}");
        assert!(errs[2] < 0.75 * errs[1], "{errs:?}");
    }

    #[test]
    fn mollified_solenoidal_divergence_vanishes() {
        let domain = Arc::new(
            Domain::new(DomainDescriptor::Rectangle { min: vec![0.0, 0.0], max: vec![1.0, 1.0] })
                .unwrap(),
        );
        let base = Field::BumpStream {
            bumps: vec![StreamBump { center: vec![0.5, 0.5], radius: 0.45, amplitude: 1.0 }],
        }
        .instantiate();
        let m = MollifiedField::new(base, domain.clone(), 0.05, 8);
        for p in [Pt::new(&[0.4, 0.5]), Pt::new(&[0.6, 0.3]), Pt::new(&[0.25, 0.7])] {
            // analytic divergence (mixture of solenoidal Jacobians) is exact
            assert!(m.divergence(&p).unwrap().abs() < 1e-13);
            // finite-difference divergence small at modest h
            let h = 1e-4;
            let mut div = 0.0;
            for d in 0..2 {
                let mut pp = p;
                pp[d] += h;
                let mut pm = p;
                pm[d] -= h;
                div += (m.eval(&pp)[d] - m.eval(&pm)[d]) / (2.0 * h);
            }
            assert!(div.abs() < 1e-6, "FD divergence {div}");
        }
    }
}
