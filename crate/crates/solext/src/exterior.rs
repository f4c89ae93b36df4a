//! Dense exterior algebra over ℝⁿ for n ∈ {2, 3}.
//!
//! Components are stored against sorted multi-index bases e_{i1}∧…∧e_{ik},
//! i1 < … < ik (lexicographic order, which for n ≤ 3 coincides with
//! increasing bitmask order). Vectors (elements of ⋀^k ℝⁿ) and covectors
//! (⋀^k (ℝⁿ)*) share the layout but are kept as distinct types.

use crate::geom::Pt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExteriorError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("grade mismatch: {0} vs {1}")]
    GradeMismatch(usize, usize),
    #[error("wedge grade overflow: {k} + {l} > n = {n}")]
    GradeOverflow { k: usize, l: usize, n: usize },
    #[error("grade {k} out of range for dimension {n}")]
    GradeOutOfRange { k: usize, n: usize },
}

/// Sorted multi-index bases for (n, k) as bitmasks, in lexicographic order.
pub fn basis_masks(n: usize, k: usize) -> &'static [u8] {
    const N2: [&[u8]; 3] = [&[0b00], &[0b01, 0b10], &[0b11]];
    const N3: [&[u8]; 4] = [&[0b000], &[0b001, 0b010, 0b100], &[0b011, 0b101, 0b110], &[0b111]];
    match n {
        2 => N2[k],
        3 => N3[k],
        _ => panic!("dimension must be 2 or 3"),
    }
}

/// Number of components, C(n, k).
pub fn component_count(n: usize, k: usize) -> usize {
    basis_masks(n, k).len()
}

fn mask_position(n: usize, k: usize, mask: u8) -> usize {
    basis_masks(n, k).iter().position(|&m| m == mask).expect("mask not in basis")
}

/// Sign of e_S ∧ e_T relative to e_{S∪T}; 0 when S and T overlap.
fn wedge_sign(s: u8, t: u8) -> f64 {
    if s & t != 0 {
        return 0.0;
    }
    let mut inversions = 0u32;
    let mut tt = t;
    while tt != 0 {
        let bit = tt.trailing_zeros();
        inversions += (s >> (bit + 1)).count_ones();
        tt &= tt - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Repr {
    n: u8,
    k: u8,
    c: [f64; 3],
}

impl Repr {
    fn zero(n: usize, k: usize) -> Self {
        assert!(n == 2 || n == 3);
        assert!(k <= n, "grade out of range");
        Repr { n: n as u8, k: k as u8, c: [0.0; 3] }
    }

    fn count(&self) -> usize {
        component_count(self.n as usize, self.k as usize)
    }

    fn wedge(&self, other: &Repr) -> Result<Repr, ExteriorError> {
        let n = self.n as usize;
        if other.n != self.n {
            return Err(ExteriorError::DimensionMismatch(n, other.n as usize));
        }
        let (k, l) = (self.k as usize, other.k as usize);
        if k + l > n {
            return Err(ExteriorError::GradeOverflow { k, l, n });
        }
        let mut out = Repr::zero(n, k + l);
        let sb = basis_masks(n, k);
        let tb = basis_masks(n, l);
        for (i, &sm) in sb.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            for (j, &tm) in tb.iter().enumerate() {
                let sign = wedge_sign(sm, tm);
                if sign != 0.0 {
                    let pos = mask_position(n, k + l, sm | tm);
                    out.c[pos] += sign * self.c[i] * other.c[j];
                }
            }
        }
        Ok(out)
    }

    fn add(&self, other: &Repr) -> Repr {
        debug_assert_eq!((self.n, self.k), (other.n, other.k));
        let mut out = *self;
        for i in 0..self.count() {
            out.c[i] += other.c[i];
        }
        out
    }

    fn scale(&self, a: f64) -> Repr {
        let mut out = *self;
        for i in 0..self.count() {
            out.c[i] *= a;
        }
        out
    }

    fn dot(&self, other: &Repr) -> f64 {
        debug_assert_eq!((self.n, self.k), (other.n, other.k));
        (0..self.count()).map(|i| self.c[i] * other.c[i]).sum()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Grade-k exterior vector, an element of ⋀^k(ℝⁿ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KVector(Repr);

/// Grade-k covector, an element of ⋀^k(ℝⁿ)* in the dual basis dx_{i1}∧…∧dx_{ik}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KForm(Repr);

macro_rules! common_impl {
    ($t:ident) => {
        impl $t {
            pub fn zero(n: usize, k: usize) -> Self {
                $t(Repr::zero(n, k))
            }

            pub fn from_components(n: usize, k: usize, comps: &[f64]) -> Self {
                let mut r = Repr::zero(n, k);
                assert_eq!(comps.len(), r.count(), "component count must be C(n,k)");
                r.c[..comps.len()].copy_from_slice(comps);
                $t(r)
            }

            /// Scalar (grade 0) element.
            pub fn scalar(n: usize, value: f64) -> Self {
                $t::from_components(n, 0, &[value])
            }

            /// Basis element for a sorted multi-index given as a bitmask.
            pub fn basis(n: usize, mask: u8) -> Self {
                let k = mask.count_ones() as usize;
                let mut r = Repr::zero(n, k);
                r.c[mask_position(n, k, mask)] = 1.0;
                $t(r)
            }

            pub fn dim(&self) -> usize {
                self.0.n as usize
            }

            pub fn grade(&self) -> usize {
                self.0.k as usize
            }

            pub fn components(&self) -> &[f64] {
                &self.0.c[..self.0.count()]
            }

            pub fn component(&self, mask: u8) -> f64 {
                self.0.c[mask_position(self.dim(), self.grade(), mask)]
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            /// Value of a grade-0 or grade-n element as a plain scalar.
            pub fn as_scalar(&self) -> f64 {
                assert_eq!(self.0.count(), 1, "not a 1-component element");
                self.0.c[0]
            }

            pub fn wedge(&self, other: &$t) -> Result<$t, ExteriorError> {
                self.0.wedge(&other.0).map($t)
            }

            pub fn add(&self, other: &$t) -> $t {
                assert_eq!((self.dim(), self.grade()), (other.dim(), other.grade()));
                $t(self.0.add(&other.0))
            }

            pub fn scale(&self, a: f64) -> $t {
                $t(self.0.scale(a))
            }

            pub fn add_assign(&mut self, other: &$t) {
                *self = self.add(other);
            }
        }
    };
}

common_impl!(KVector);
common_impl!(KForm);

impl KVector {
    /// Grade-1 vector from a point.
    pub fn from_pt(p: &Pt) -> KVector {
        KVector::from_components(p.dim(), 1, p.coords())
    }

    pub fn to_pt(&self) -> Pt {
        assert_eq!(self.grade(), 1);
        Pt::new(self.components())
    }

    /// Left interior product ι_{dx_axis} of the coordinate 1-form with this
    /// k-vector (0-based axis); result has grade k−1.
    pub fn interior_1form(&self, axis: usize) -> KVector {
        let (n, k) = (self.dim(), self.grade());
        assert!(k >= 1);
        let mut out = Repr::zero(n, k - 1);
        let bit = 1u8 << axis;
        for (i, &mask) in basis_masks(n, k).iter().enumerate() {
            if mask & bit != 0 {
                let below = (mask & (bit - 1)).count_ones();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                let pos = mask_position(n, k - 1, mask & !bit);
                out.c[pos] += sign * self.0.c[i];
            }
        }
        KVector(out)
    }
}

/// Euclidean pairing of a k-form with a k-vector in the shared sorted basis.
pub fn pair(form: &KForm, vec: &KVector) -> Result<f64, ExteriorError> {
    if form.dim() != vec.dim() {
        return Err(ExteriorError::DimensionMismatch(form.dim(), vec.dim()));
    }
    if form.grade() != vec.grade() {
        return Err(ExteriorError::GradeMismatch(form.grade(), vec.grade()));
    }
    Ok(form.0.dot(&vec.0))
}

impl KForm {
    /// Contraction by a j-vector: (ω ⌞ m)(w) := ω(m ∧ w), grade k − j.
    pub fn contract(&self, m: &KVector) -> Result<KForm, ExteriorError> {
        let n = self.dim();
        if m.dim() != n {
            return Err(ExteriorError::DimensionMismatch(n, m.dim()));
        }
        let (k, j) = (self.grade(), m.grade());
        if j > k {
            return Err(ExteriorError::GradeMismatch(k, j));
        }
        let mut out = Repr::zero(n, k - j);
        for (ti, &tm) in basis_masks(n, j).iter().enumerate() {
            if m.0.c[ti] == 0.0 {
                continue;
            }
            for (wi, &wm) in basis_masks(n, k - j).iter().enumerate() {
                let sign = wedge_sign(tm, wm);
                if sign != 0.0 {
                    let pos = mask_position(n, k, tm | wm);
                    out.c[wi] += sign * m.0.c[ti] * self.0.c[pos];
                }
            }
        }
        Ok(KForm(out))
    }
}

/// Identify a vector field value with an (n−1)-form:
/// ω_v = Σ_j (−1)^{j−1} v_j dx_1∧…∧d̂x_j∧…∧dx_n.
pub fn vec_to_form(v: &Pt) -> KForm {
    let n = v.dim();
    let mut out = Repr::zero(n, n - 1);
    let full: u8 = (1 << n) - 1;
    for j in 0..n {
        let mask = full & !(1 << j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.c[mask_position(n, n - 1, mask)] += sign * v[j];
    }
    KForm(out)
}

/// Inverse of [`vec_to_form`].
pub fn form_to_vec(w: &KForm) -> Pt {
    let n = w.dim();
    assert_eq!(w.grade(), n - 1);
    let full: u8 = (1 << n) - 1;
    Pt::from_fn(n, |j| {
        let mask = full & !(1 << j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * w.component(mask)
    })
}

/// Simplex normal ν(x₁,…,x_r) = (1/(r−1)!)(x_r−x_{r−1}) ∧ … ∧ (x₂−x₁),
/// a grade-(r−1) vector whose length is the H^{r−1} measure of the convex
/// hull. For r = 1 this is the scalar 1.
pub fn simplex_normal(points: &[Pt]) -> KVector {
    let r = points.len();
    assert!(r >= 1, "need at least one point");
    let n = points[0].dim();
    assert!(r <= n + 1, "at most n+1 points");
    if r == 1 {
        return KVector::scalar(n, 1.0);
    }
    let mut acc = KVector::from_pt(&(points[r - 1] - points[r - 2]));
    let mut factorial = 1.0;
    for s in (1..r - 1).rev() {
        let edge = KVector::from_pt(&(points[s] - points[s - 1]));
        acc = acc.wedge(&edge).expect("grades within range");
        factorial *= (r - s) as f64;
    }
    acc.scale(1.0 / factorial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dx(n: usize, axis: usize) -> KForm {
        KForm::basis(n, 1 << axis)
    }

    #[test]
    fn wedge_basis_cases() {
        let a = dx(2, 0);
        // dx1 ∧ dx1 = 0
        let w = a.wedge(&a).unwrap();
        assert_eq!(w.components(), &[0.0]);
        // dx1 ∧ dx2 = basis covector
        let w = dx(2, 0).wedge(&dx(2, 1)).unwrap();
        assert_eq!(w.component(0b11), 1.0);
        // (dx1 + dx2) ∧ dx2 = dx1∧dx2
        let s = dx(2, 0).add(&dx(2, 1));
        let w = s.wedge(&dx(2, 1)).unwrap();
        assert_eq!(w.component(0b11), 1.0);
    }

    #[test]
    fn wedge_overflow_is_error() {
        let a = dx(2, 0).wedge(&dx(2, 1)).unwrap();
        assert_eq!(
            a.wedge(&dx(2, 0)).unwrap_err(),
            ExteriorError::GradeOverflow { k: 2, l: 1, n: 2 }
        );
    }

    #[test]
    fn simplex_normal_examples() {
        // r=2: x2 − x1
        let v = simplex_normal(&[Pt::new(&[0.0, 0.0]), Pt::new(&[1.0, 0.0])]);
        assert_eq!(v.components(), &[1.0, 0.0]);
        // r=3 in ℝ²: −½ e1∧e2, |ν| = triangle area ½
        let v = simplex_normal(&[
            Pt::new(&[0.0, 0.0]),
            Pt::new(&[1.0, 0.0]),
            Pt::new(&[0.0, 1.0]),
        ]);
        assert!((v.component(0b11) + 0.5).abs() < 1e-15);
        assert!((v.norm() - 0.5).abs() < 1e-15);
        // collinear points degenerate
        let v = simplex_normal(&[
            Pt::new(&[0.0, 0.0]),
            Pt::new(&[1.0, 0.0]),
            Pt::new(&[2.0, 0.0]),
        ]);
        assert_eq!(v.norm(), 0.0);
        // r=1 convention
        let v = simplex_normal(&[Pt::new(&[0.3, 0.4])]);
        assert_eq!(v.as_scalar(), 1.0);
    }

    #[test]
    fn differential_convention() {
        // n=2: e1 → dx2, e2 → −dx1
        let w = vec_to_form(&Pt::new(&[1.0, 0.0]));
        assert_eq!((w.component(0b01), w.component(0b10)), (0.0, 1.0));
        let w = vec_to_form(&Pt::new(&[0.0, 1.0]));
        assert_eq!((w.component(0b01), w.component(0b10)), (-1.0, 0.0));
        // n=3: e2 → −dx1∧dx3
        let w = vec_to_form(&Pt::new(&[0.0, 1.0, 0.0]));
        assert_eq!(w.component(0b101), -1.0);
        assert_eq!(w.component(0b011), 0.0);
        assert_eq!(w.component(0b110), 0.0);
    }

    #[test]
    fn pair_dual_basis() {
        let w = dx(2, 0).wedge(&dx(2, 1)).unwrap();
        let v = KVector::basis(2, 0b01).wedge(&KVector::basis(2, 0b10)).unwrap();
        assert_eq!(pair(&w, &v).unwrap(), 1.0);
        let z = KVector::basis(2, 0b01).wedge(&KVector::basis(2, 0b01)).unwrap();
        assert_eq!(pair(&w, &z).unwrap(), 0.0);
        assert!(pair(&dx(2, 0), &z).is_err());
    }

    #[test]
    fn flux_pairing_is_rotated_tangent_2d() {
        // pair(vec_to_form(u), ν(x1,x2)) = u · R_{−π/2}(x2−x1)
        let u = Pt::new(&[0.3, -1.7]);
        let x1 = Pt::new(&[0.2, 0.9]);
        let x2 = Pt::new(&[-1.1, 0.4]);
        let nu = simplex_normal(&[x1, x2]);
        let lhs = pair(&vec_to_form(&u), &nu).unwrap();
        let rhs = u.dot(&(x2 - x1).rot_cw());
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn flux_pairing_matches_facet_normal_area_3d() {
        // For a flat facet conv(x1,x2,x3), pair(ω_u, ν) = u·n̂ · area.
        let x1 = Pt::new(&[0.1, 0.2, 0.3]);
        let x2 = Pt::new(&[1.0, 0.1, -0.2]);
        let x3 = Pt::new(&[0.4, 1.2, 0.5]);
        let u = Pt::new(&[0.7, -0.3, 0.9]);
        let nu = simplex_normal(&[x1, x2, x3]);
        let cross = (x2 - x1).cross(&(x3 - x1));
        let area = 0.5 * cross.norm();
        let lhs = pair(&vec_to_form(&u), &nu).unwrap();
        let rhs_mag = u.dot(&cross.scale(0.5));
        assert!((lhs.abs() - (rhs_mag).abs()).abs() < 1e-13);
        assert!((nu.norm() - area).abs() < 1e-14);
    }

    #[test]
    fn interior_product_convention() {
        // ι_{dx_α}(e1∧e2∧e3) = (−1)^{α−1} e_{…} per the left-contraction rule
        let vol = KVector::basis(3, 0b111);
        let i1 = vol.interior_1form(0);
        assert_eq!(i1.component(0b110), 1.0);
        let i2 = vol.interior_1form(1);
        assert_eq!(i2.component(0b101), -1.0);
        let i3 = vol.interior_1form(2);
        assert_eq!(i3.component(0b011), 1.0);
    }

    #[test]
    fn contract_convention() {
        // (ω ⌞ m)(w) = ω(m ∧ w) on bases
        let om = KForm::basis(3, 0b111);
        let m = KVector::basis(3, 0b010); // e2
        let c = om.contract(&m).unwrap();
        // ω(e2 ∧ e1∧e3) = sign of e2∧e1∧e3 = −1 on basis {1,3}
        assert_eq!(c.component(0b101), -1.0);
    }

    #[test]
    fn simplex_normal_gram_oracle() {
        // |ν| equals sqrt(det(GᵀG))/(r−1)! for random simplices.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for n in [2usize, 3] {
            for r in 2..=n + 1 {
                for _ in 0..50 {
                    let pts: Vec<Pt> =
                        (0..r).map(|_| Pt::from_fn(n, |_| rnd())).collect();
                    let nu = simplex_normal(&pts);
                    // Gram matrix of edge vectors from pts[0]
                    let edges: Vec<Pt> = (1..r).map(|i| pts[i] - pts[0]).collect();
                    let m = r - 1;
                    let mut g = [[0.0f64; 3]; 3];
                    for i in 0..m {
                        for j in 0..m {
                            g[i][j] = edges[i].dot(&edges[j]);
                        }
                    }
                    let det = match m {
                        1 => g[0][0],
                        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
                        3 => {
                            g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                                - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
                        }
                        _ => unreachable!(),
                    };
                    let fact = (1..=m).product::<usize>() as f64;
                    let measure = det.max(0.0).sqrt() / fact;
                    assert!(
                        (nu.norm() - measure).abs() < 1e-12,
                        "n={n} r={r}: {} vs {}",
                        nu.norm(),
                        measure
                    );
                }
            }
        }
    }

    #[test]
    fn simplex_normal_alternating() {
        let mut pts = vec![
            Pt::new(&[0.3, 0.1, 0.9]),
            Pt::new(&[-0.2, 0.8, 0.4]),
            Pt::new(&[0.5, -0.6, 0.2]),
        ];
        let a = simplex_normal(&pts);
        pts.swap(0, 1);
        let b = simplex_normal(&pts);
        for (x, y) in a.components().iter().zip(b.components()) {
            assert!((x + y).abs() < 1e-14);
        }
    }

    #[test]
    fn roundtrip_form_vec() {
        for n in [2usize, 3] {
            let v = Pt::from_fn(n, |d| 0.3 * d as f64 - 0.7);
            let back = form_to_vec(&vec_to_form(&v));
            for d in 0..n {
                assert_eq!(v[d], back[d]);
            }
        }
    }
}
