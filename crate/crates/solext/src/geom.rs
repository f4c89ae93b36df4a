//! Small fixed-capacity point/vector type for runtime dimension n ∈ {2, 3}.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// A point or vector in ℝⁿ, n ∈ {2, 3}. Unused trailing coordinates are zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pt {
    n: u8,
    c: [f64; 3],
}

impl Pt {
    pub fn new(coords: &[f64]) -> Self {
        assert!(coords.len() == 2 || coords.len() == 3, "dimension must be 2 or 3");
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Pt { n: coords.len() as u8, c }
    }

    pub fn zero(n: usize) -> Self {
        assert!(n == 2 || n == 3);
        Pt { n: n as u8, c: [0.0; 3] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut p = Pt::zero(n);
        for d in 0..n {
            p.c[d] = f(d);
        }
        p
    }

    /// Standard basis vector e_d (0-based axis).
    pub fn basis(n: usize, d: usize) -> Self {
        let mut p = Pt::zero(n);
        p.c[d] = 1.0;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.n as usize]
    }

    #[inline]
    pub fn dot(&self, other: &Pt) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for d in 0..self.dim() {
            s += self.c[d] * other.c[d];
        }
        s
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn dist(&self, other: &Pt) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, a: f64) -> Pt {
        let mut p = *self;
        for d in 0..self.dim() {
            p.c[d] *= a;
        }
        p
    }

    /// Rotation by −π/2 in 2D: (x, y) ↦ (y, −x).
    pub fn rot_cw(&self) -> Pt {
        assert_eq!(self.n, 2);
        Pt::new(&[self.c[1], -self.c[0]])
    }

    /// Rotation by +π/2 in 2D: (x, y) ↦ (−y, x).
    pub fn rot_ccw(&self) -> Pt {
        assert_eq!(self.n, 2);
        Pt::new(&[-self.c[1], self.c[0]])
    }

    pub fn cross(&self, other: &Pt) -> Pt {
        assert_eq!(self.n, 3);
        Pt::new(&[
            self.c[1] * other.c[2] - self.c[2] * other.c[1],
            self.c[2] * other.c[0] - self.c[0] * other.c[2],
            self.c[0] * other.c[1] - self.c[1] * other.c[0],
        ])
    }
}

impl Index<usize> for Pt {
    type Output = f64;
    #[inline]
    fn index(&self, d: usize) -> &f64 {
        debug_assert!(d < self.dim());
        &self.c[d]
    }
}

impl IndexMut<usize> for Pt {
    #[inline]
    fn index_mut(&mut self, d: usize) -> &mut f64 {
        debug_assert!(d < self.dim());
        &mut self.c[d]
    }
}

impl Add for Pt {
    type Output = Pt;
    fn add(self, rhs: Pt) -> Pt {
        debug_assert_eq!(self.n, rhs.n);
        let mut p = self;
        for d in 0..self.dim() {
            p.c[d] += rhs.c[d];
        }
        p
    }
}

impl Sub for Pt {
    type Output = Pt;
    fn sub(self, rhs: Pt) -> Pt {
        debug_assert_eq!(self.n, rhs.n);
        let mut p = self;
        for d in 0..self.dim() {
            p.c[d] -= rhs.c[d];
        }
        p
    }
}

impl Mul<f64> for Pt {
    type Output = Pt;
    fn mul(self, a: f64) -> Pt {
        self.scale(a)
    }
}

impl Neg for Pt {
    type Output = Pt;
    fn neg(self) -> Pt {
        self.scale(-1.0)
    }
}

/// Axis-aligned box, used for cube extents and bounding boxes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Pt,
    pub max: Pt,
}

impl Aabb {
    pub fn new(min: Pt, max: Pt) -> Self {
        assert_eq!(min.dim(), max.dim());
        Aabb { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.dim()
    }

    pub fn center(&self) -> Pt {
        (self.min + self.max).scale(0.5)
    }

    pub fn contains(&self, p: &Pt) -> bool {
        (0..self.dim()).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb {
            min: Pt::from_fn(self.dim(), |d| self.min[d] - r),
            max: Pt::from_fn(self.dim(), |d| self.max[d] + r),
        }
    }

    /// Distance from this box to a point (0 if inside).
    pub fn dist_to_point(&self, p: &Pt) -> f64 {
        let mut s = 0.0;
        for d in 0..self.dim() {
            let g = (self.min[d] - p[d]).max(0.0).max(p[d] - self.max[d]);
            s += g * g;
        }
        s.sqrt()
    }

    /// Distance between two axis-aligned boxes (0 if they intersect).
    pub fn dist_to_box(&self, o: &Aabb) -> f64 {
        let mut s = 0.0;
        for d in 0..self.dim() {
            let g = (self.min[d] - o.max[d]).max(0.0).max(o.min[d] - self.max[d]);
            s += g * g;
        }
        s.sqrt()
    }

    /// Min and max of |x − c| over the box.
    pub fn range_of_dist_to(&self, c: &Pt) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for d in 0..self.dim() {
            let a = self.min[d] - c[d];
            let b = self.max[d] - c[d];
            let lod = if a > 0.0 {
                a
            } else if b < 0.0 {
                -b
            } else {
                0.0
            };
            let hid = a.abs().max(b.abs());
            lo += lod * lod;
            hi += hid * hid;
        }
        (lo.sqrt(), hi.sqrt())
    }

    pub fn corners(&self) -> Vec<Pt> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                Pt::from_fn(n, |d| if mask >> d & 1 == 1 { self.max[d] } else { self.min[d] })
            })
            .collect()
    }
}
