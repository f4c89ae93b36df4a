//! Domain descriptors: containment, signed distance, boundary projection,
//! and the flat/curvilinear simplex maps built from projection-plus-offset
//! coordinates in a collar neighborhood of the boundary.

use crate::exterior::{simplex_normal, KVector};
use crate::geom::{Aabb, Pt};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid descriptor: {0}")]
    Invalid(String),
    #[error("operation unsupported for this variant: {0}")]
    Unsupported(String),
    #[error("point outside projection collar")]
    OutsideCollar,
    #[error("simplex out of collar: {0}")]
    SimplexOutOfCollar(String),
    #[error("vertex outside domain")]
    VertexOutsideDomain,
}

/// Half-space {x : normal·x ≤ offset}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Radial profile ρ(θ) of a star-shaped smooth 2D boundary.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Ellipse { a: f64, b: f64 },
    Trig { r0: f64, #[serde(default)] cos: Vec<f64>, #[serde(default)] sin: Vec<f64> },
}

impl RadialProfile {
    /// (ρ, ρ', ρ'') at angle θ.
    pub fn eval2(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            RadialProfile::Ellipse { a, b } => {
                // ρ = ab / sqrt(b²cos²θ + a²sin²θ)
                let (s, c) = theta.sin_cos();
                let g = b * b * c * c + a * a * s * s;
                let gp = 2.0 * (a * a - b * b) * s * c;
                let gpp = 2.0 * (a * a - b * b) * (c * c - s * s);
                let rho = a * b / g.sqrt();
                let rp = -0.5 * a * b * gp / g.powf(1.5);
                let rpp = a * b * (0.75 * gp * gp / g.powf(2.5) - 0.5 * gpp / g.powf(1.5));
                (rho, rp, rpp)
            }
            RadialProfile::Trig { r0, cos, sin } => {
                let mut rho = *r0;
                let mut rp = 0.0;
                let mut rpp = 0.0;
                for (j, a) in cos.iter().enumerate() {
                    let m = (j + 1) as f64;
                    rho += a * (m * theta).cos();
                    rp -= a * m * (m * theta).sin();
                    rpp -= a * m * m * (m * theta).cos();
                }
                for (j, b) in sin.iter().enumerate() {
                    let m = (j + 1) as f64;
                    rho += b * (m * theta).sin();
                    rp += b * m * (m * theta).cos();
                    rpp -= b * m * m * (m * theta).sin();
                }
                (rho, rp, rpp)
            }
        }
    }
}

/// Supported domain geometries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainDescriptor {
    ConvexPolytope { halfspaces: Vec<HalfSpace> },
    Ball { center: Vec<f64>, radius: f64 },
    Rectangle { min: Vec<f64>, max: Vec<f64> },
    SmoothStar { center: Vec<f64>, profile: RadialProfile },
    CuspPlus { gamma: f64 },
    CuspMinus { gamma: f64 },
}

/// A validated domain with cached derived geometry.
#[derive(Clone, Debug)]
pub struct Domain {
    pub descriptor: DomainDescriptor,
    n: usize,
    bbox: Aabb,
    /// 2D polytope vertices in counterclockwise order (polytope/rectangle).
    polygon: Option<Vec<Pt>>,
    /// Collar half-width for boundary projection, where defined.
    collar: Option<f64>,
    /// Max boundary curvature (smooth star).
    max_curvature: Option<f64>,
}

impl Domain {
    pub fn new(descriptor: DomainDescriptor) -> Result<Self, DomainError> {
        match &descriptor {
            DomainDescriptor::Ball { center, radius } => {
                let n = center.len();
                let radius = *radius;
                if n != 2 && n != 3 {
                    return Err(DomainError::Invalid("ball center must be 2D or 3D".into()));
                }
                if radius <= 0.0 {
                    return Err(DomainError::Invalid("ball radius must be positive".into()));
                }
                let c = Pt::new(center);
                let bbox = Aabb::new(
                    Pt::from_fn(n, |d| c[d] - radius),
                    Pt::from_fn(n, |d| c[d] + radius),
                );
                Ok(Domain {
                    descriptor,
                    n,
                    bbox,
                    polygon: None,
                    collar: Some(radius / 2.0),
                    max_curvature: Some(1.0 / radius),
                })
            }
            DomainDescriptor::Rectangle { min, max } => {
                let n = min.len();
                if n != 2 && n != 3 || max.len() != n {
                    return Err(DomainError::Invalid("rectangle corners must be 2D or 3D".into()));
                }
                if (0..n).any(|d| max[d] <= min[d]) {
                    return Err(DomainError::Invalid("rectangle must have positive extent".into()));
                }
                let bbox = Aabb::new(Pt::new(min), Pt::new(max));
                let polygon = (n == 2).then(|| {
                    vec![
                        Pt::new(&[min[0], min[1]]),
                        Pt::new(&[max[0], min[1]]),
                        Pt::new(&[max[0], max[1]]),
                        Pt::new(&[min[0], max[1]]),
                    ]
                });
                Ok(Domain { descriptor, n, bbox, polygon, collar: None, max_curvature: None })
            }
            DomainDescriptor::ConvexPolytope { halfspaces } => {
                if halfspaces.is_empty() {
                    return Err(DomainError::Invalid("empty half-space list".into()));
                }
                let n = halfspaces[0].normal.len();
                if n != 2 {
                    return Err(DomainError::Unsupported(
                        "convex polytopes are supported in 2D only; use rectangle or ball in 3D"
                            .into(),
                    ));
                }
                let polygon = polytope_vertices_2d(halfspaces)?;
                if polygon.len() < 3 {
                    return Err(DomainError::Invalid("polytope is empty or degenerate".into()));
                }
                let mut min = polygon[0];
                let mut max = polygon[0];
                for p in &polygon {
                    for d in 0..2 {
                        min[d] = min[d].min(p[d]);
                        max[d] = max[d].max(p[d]);
                    }
                }
                Ok(Domain {
                    descriptor,
                    n,
                    bbox: Aabb::new(min, max),
                    polygon: Some(polygon),
                    collar: None,
                    max_curvature: None,
                })
            }
            DomainDescriptor::SmoothStar { center, profile } => {
                if center.len() != 2 {
                    return Err(DomainError::Unsupported("smooth star is 2D only".into()));
                }
                let mut rho_min = f64::INFINITY;
                let mut rho_max = 0.0f64;
                let mut kappa_max = 0.0f64;
                let samples = 4096;
                for i in 0..samples {
                    let th = 2.0 * PI * i as f64 / samples as f64;
                    let (r, rp, rpp) = profile.eval2(th);
                    if r <= 0.0 {
                        return Err(DomainError::Invalid(
                            "star radial profile must be positive".into(),
                        ));
                    }
                    rho_min = rho_min.min(r);
                    rho_max = rho_max.max(r);
                    let num = (r * r + 2.0 * rp * rp - r * rpp).abs();
                    let den = (r * r + rp * rp).powf(1.5);
                    kappa_max = kappa_max.max(num / den);
                }
                let c = Pt::new(center);
                let bbox = Aabb::new(
                    Pt::from_fn(2, |d| c[d] - rho_max),
                    Pt::from_fn(2, |d| c[d] + rho_max),
                );
                // projection validity: inside the curvature reach, and not
                // past the star center
                let collar = (0.5 / kappa_max).min(0.5 * rho_min);
                Ok(Domain {
                    descriptor,
                    n: 2,
                    bbox,
                    polygon: None,
                    collar: Some(collar),
                    max_curvature: Some(kappa_max),
                })
            }
            DomainDescriptor::CuspPlus { gamma } | DomainDescriptor::CuspMinus { gamma } => {
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(DomainError::Invalid("cusp gamma must lie in (0,1)".into()));
                }
                let bbox =
                    Aabb::new(Pt::new(&[-1.0, -1.0]), Pt::new(&[1.0, 1.0]));
                Ok(Domain { descriptor, n: 2, bbox, polygon: None, collar: None, max_curvature: None })
            }
        }
    }

    pub fn from_json(json: &str) -> Result<Self, DomainError> {
        let d: DomainDescriptor = serde_json::from_str(json)
            .map_err(|e| DomainError::Invalid(format!("descriptor JSON: {e}")))?;
        Domain::new(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.descriptor).expect("descriptor serializes")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bounding_box(&self) -> Aabb {
        self.bbox
    }

    pub fn is_convex(&self) -> bool {
        matches!(
            self.descriptor,
            DomainDescriptor::ConvexPolytope { .. }
                | DomainDescriptor::Ball { .. }
                | DomainDescriptor::Rectangle { .. }
        )
    }

    pub fn is_smooth(&self) -> bool {
        matches!(
            self.descriptor,
            DomainDescriptor::Ball { .. } | DomainDescriptor::SmoothStar { .. }
        )
    }

    pub fn collar_halfwidth(&self) -> Option<f64> {
        self.collar
    }

    pub fn max_curvature(&self) -> Option<f64> {
        self.max_curvature
    }

    pub fn polygon(&self) -> Option<&[Pt]> {
        self.polygon.as_deref()
    }

    pub fn contains(&self, x: &Pt) -> bool {
        match &self.descriptor {
            DomainDescriptor::Ball { center, radius } => x.dist(&Pt::new(center)) < *radius,
            DomainDescriptor::Rectangle { min, max } => {
                (0..self.n).all(|d| x[d] > min[d] && x[d] < max[d])
            }
            DomainDescriptor::ConvexPolytope { halfspaces } => halfspaces.iter().all(|h| {
                let a = Pt::new(&h.normal);
                a.dot(x) < h.offset
            }),
            DomainDescriptor::SmoothStar { center, profile } => {
                let c = Pt::new(center);
                let v = *x - c;
                let r = v.norm();
                if r == 0.0 {
                    return true;
                }
                let th = v[1].atan2(v[0]);
                r < profile.eval2(th).0
            }
            DomainDescriptor::CuspPlus { gamma } => {
                in_unit_box(x) && x[1] > cusp_phi(x[0].abs(), *gamma)
            }
            DomainDescriptor::CuspMinus { gamma } => {
                in_unit_box(x) && x[1] < cusp_phi(x[0].abs(), *gamma)
            }
        }
    }

    /// Signed distance to ∂Ω: positive inside, negative outside.
    pub fn signed_distance(&self, x: &Pt) -> f64 {
        match &self.descriptor {
            DomainDescriptor::Ball { center, radius } => radius - x.dist(&Pt::new(center)),
            DomainDescriptor::Rectangle { min, max } => {
                let mut inner = f64::INFINITY;
                let mut inside = true;
                for d in 0..self.n {
                    inner = inner.min(x[d] - min[d]).min(max[d] - x[d]);
                    if x[d] < min[d] || x[d] > max[d] {
                        inside = false;
                    }
                }
                if inside {
                    inner
                } else {
                    -self.bbox.dist_to_point(x)
                }
            }
            DomainDescriptor::ConvexPolytope { .. } => {
                let poly = self.polygon.as_ref().unwrap();
                let d = dist_to_polygon_boundary(x, poly);
                if self.contains(x) {
                    d
                } else {
                    -d
                }
            }
            DomainDescriptor::SmoothStar { .. } => {
                let (b, _) = self.star_closest_boundary(x);
                let d = x.dist(&b);
                if self.contains(x) {
                    d
                } else {
                    -d
                }
            }
            DomainDescriptor::CuspPlus { gamma } | DomainDescriptor::CuspMinus { gamma } => {
                let d = cusp_boundary_distance(x, *gamma);
                if self.contains(x) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Distance from x to ∂Ω (unsigned).
    pub fn boundary_distance(&self, x: &Pt) -> f64 {
        self.signed_distance(x).abs()
    }

    /// Distance-minimizing projection onto ∂Ω.
    pub fn boundary_projection(&self, x: &Pt) -> Result<Pt, DomainError> {
        match &self.descriptor {
            DomainDescriptor::Ball { center, radius } => {
                let c = Pt::new(center);
                let v = *x - c;
                let r = v.norm();
                if r == 0.0 {
                    return Err(DomainError::OutsideCollar);
                }
                Ok(c + v.scale(radius / r))
            }
            DomainDescriptor::Rectangle { min, max } => {
                if !self.contains(x) {
                    let p = Pt::from_fn(self.n, |d| x[d].clamp(min[d], max[d]));
                    return Ok(p);
                }
                // inside: push to the nearest face
                let mut best = f64::INFINITY;
                let mut p = *x;
                for d in 0..self.n {
                    if x[d] - min[d] < best {
                        best = x[d] - min[d];
                        p = *x;
                        p[d] = min[d];
                    }
                    if max[d] - x[d] < best {
                        best = max[d] - x[d];
                        p = *x;
                        p[d] = max[d];
                    }
                }
                Ok(p)
            }
            DomainDescriptor::ConvexPolytope { .. } => {
                let poly = self.polygon.as_ref().unwrap();
                Ok(closest_on_polygon(x, poly))
            }
            DomainDescriptor::SmoothStar { .. } => {
                let (b, _) = self.star_closest_boundary(x);
                let collar = self.collar.unwrap();
                if x.dist(&b) > collar {
                    return Err(DomainError::OutsideCollar);
                }
                Ok(b)
            }
            _ => Err(DomainError::Unsupported("no projection for cusp domains".into())),
        }
    }

    /// Inner unit normal at (or near) a boundary point.
    pub fn inner_normal(&self, boundary_point: &Pt) -> Result<Pt, DomainError> {
        match &self.descriptor {
            DomainDescriptor::Ball { center, radius } => {
                let c = Pt::new(center);
                let v = c - *boundary_point;
                let r = v.norm();
                if r == 0.0 {
                    return Err(DomainError::OutsideCollar);
                }
                let _ = radius;
                Ok(v.scale(1.0 / r))
            }
            DomainDescriptor::SmoothStar { .. } => {
                let (_, theta) = self.star_closest_boundary(boundary_point);
                Ok(self.star_inner_normal(theta))
            }
            _ => Err(DomainError::Unsupported("inner normal needs a smooth boundary".into())),
        }
    }

    /// Distance from an axis-aligned box to ∂Ω (0 if the box crosses it).
    pub fn cube_boundary_distance(&self, cube: &Aabb) -> f64 {
        match &self.descriptor {
            DomainDescriptor::Ball { center, radius } => {
                let (lo, hi) = cube.range_of_dist_to(&Pt::new(center));
                if lo >= *radius {
                    lo - radius
                } else if hi <= *radius {
                    radius - hi
                } else {
                    0.0
                }
            }
            DomainDescriptor::Rectangle { .. } => {
                let rect = self.bbox;
                let inside = (0..self.n)
                    .all(|d| cube.min[d] >= rect.min[d] && cube.max[d] <= rect.max[d]);
                if inside {
                    let mut m = f64::INFINITY;
                    for d in 0..self.n {
                        m = m.min(cube.min[d] - rect.min[d]).min(rect.max[d] - cube.max[d]);
                    }
                    m
                } else {
                    let gap = cube.dist_to_box(&rect);
                    if gap > 0.0 {
                        gap
                    } else {
                        0.0
                    }
                }
            }
            DomainDescriptor::ConvexPolytope { .. } => {
                let poly = self.polygon.as_ref().unwrap();
                let m = poly.len();
                let mut best = f64::INFINITY;
                for i in 0..m {
                    best = best.min(dist_box_segment(cube, &poly[i], &poly[(i + 1) % m]));
                }
                best
            }
            _ => {
                // sampled lower bound via the 1-Lipschitz distance function
                let c = cube.center();
                let half_diam = (cube.max - cube.min).norm() / 2.0;
                let mut m = (self.boundary_distance(&c) - half_diam).max(0.0);
                if m == 0.0 {
                    // refine with corners
                    let mut all = f64::INFINITY;
                    let mut crossing = false;
                    let inside0 = self.contains(&c);
                    for p in cube.corners() {
                        all = all.min(self.boundary_distance(&p));
                        if self.contains(&p) != inside0 {
                            crossing = true;
                        }
                    }
                    m = if crossing { 0.0 } else { (all - half_diam).max(0.0) };
                }
                m
            }
        }
    }

    fn star_parts(&self) -> (&Vec<f64>, &RadialProfile) {
        match &self.descriptor {
            DomainDescriptor::SmoothStar { center, profile } => (center, profile),
            _ => unreachable!(),
        }
    }

    pub(crate) fn star_boundary_point(&self, theta: f64) -> Pt {
        let (center, profile) = self.star_parts();
        let c = Pt::new(center);
        let (r, _, _) = profile.eval2(theta);
        c + Pt::new(&[theta.cos(), theta.sin()]).scale(r)
    }

    fn star_boundary_derivs(&self, theta: f64) -> (Pt, Pt, Pt) {
        let (center, profile) = self.star_parts();
        let c = Pt::new(center);
        let (r, rp, rpp) = profile.eval2(theta);
        let (s, co) = theta.sin_cos();
        let e = Pt::new(&[co, s]);
        let ep = Pt::new(&[-s, co]);
        let p = c + e.scale(r);
        let dp = ep.scale(r) + e.scale(rp);
        let ddp = e.scale(rpp - r) + ep.scale(2.0 * rp);
        (p, dp, ddp)
    }

    /// Closest boundary point on a star boundary: (point, θ).
    fn star_closest_boundary(&self, x: &Pt) -> (Pt, f64) {
        let (center, _) = self.star_parts();
        let c = Pt::new(center);
        let v = *x - c;
        let mut best_theta = if v.norm() > 0.0 { v[1].atan2(v[0]) } else { 0.0 };
        // coarse scan to avoid falling into the wrong basin
        let mut best_d = f64::INFINITY;
        for i in 0..128 {
            let th = 2.0 * PI * i as f64 / 128.0;
            let p = self.star_boundary_point(th);
            let d = x.dist(&p);
            if d < best_d {
                best_d = d;
                best_theta = th;
            }
        }
        // Newton on g(θ) = (x − p(θ))·p'(θ) = 0
        let mut th = best_theta;
        for _ in 0..60 {
            let (p, dp, ddp) = self.star_boundary_derivs(th);
            let w = *x - p;
            let g = w.dot(&dp);
            let gp = -dp.dot(&dp) + w.dot(&ddp);
            if gp.abs() < 1e-300 {
                break;
            }
            let step = g / gp;
            th -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        (self.star_boundary_point(th), th)
    }

    pub(crate) fn star_inner_normal(&self, theta: f64) -> Pt {
        let (center, _) = self.star_parts();
        let c = Pt::new(center);
        let (p, dp, _) = self.star_boundary_derivs(theta);
        let n = dp.rot_ccw().scale(1.0 / dp.norm());
        if n.dot(&(c - p)) >= 0.0 {
            n
        } else {
            n.scale(-1.0)
        }
    }

    /// Shrink a convex domain by ε (for the mollification pipeline).
    pub fn inset(&self, eps: f64) -> Result<Domain, DomainError> {
        if eps <= 0.0 {
            return Err(DomainError::Invalid("inset must be positive".into()));
        }
        let d = match &self.descriptor {
            DomainDescriptor::Ball { center, radius } => {
                if *radius <= eps {
                    return Err(DomainError::Invalid("inset larger than radius".into()));
                }
                DomainDescriptor::Ball { center: center.clone(), radius: radius - eps }
            }
            DomainDescriptor::Rectangle { min, max } => {
                let min2: Vec<f64> = min.iter().map(|v| v + eps).collect();
                let max2: Vec<f64> = max.iter().map(|v| v - eps).collect();
                if min2.iter().zip(&max2).any(|(a, b)| b <= a) {
                    return Err(DomainError::Invalid("inset collapses rectangle".into()));
                }
                DomainDescriptor::Rectangle { min: min2, max: max2 }
            }
            DomainDescriptor::ConvexPolytope { halfspaces } => DomainDescriptor::ConvexPolytope {
                halfspaces: halfspaces
                    .iter()
                    .map(|h| {
                        let norm = Pt::new(&h.normal).norm();
                        HalfSpace { normal: h.normal.clone(), offset: h.offset - eps * norm }
                    })
                    .collect(),
            },
            _ => {
                return Err(DomainError::Unsupported(
                    "inset only defined for convex descriptors".into(),
                ))
            }
        };
        Domain::new(d)
    }
}

fn in_unit_box(x: &Pt) -> bool {
    (0..x.dim()).all(|d| x[d] > -1.0 && x[d] < 1.0)
}

pub(crate) fn cusp_phi(s: f64, gamma: f64) -> f64 {
    if s > 0.0 {
        s.powf(gamma)
    } else {
        0.0
    }
}

fn cusp_boundary_distance(x: &Pt, gamma: f64) -> f64 {
    // distance to the graph y = φ(|x'|) within the box, and to the box walls
    let mut best = f64::INFINITY;
    for d in 0..x.dim() {
        best = best.min((1.0 - x[d]).abs()).min((x[d] + 1.0).abs());
    }
    // golden-section over s ∈ [0, 1] of squared distance to (±s, φ(s))
    for sign in [1.0, -1.0] {
        let f = |s: f64| {
            let dx = x[0] - sign * s;
            let dy = x[1] - cusp_phi(s, gamma);
            dx * dx + dy * dy
        };
        best = best.min(golden_min(f, 0.0, 1.0).sqrt());
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

fn polytope_vertices_2d(halfspaces: &[HalfSpace]) -> Result<Vec<Pt>, DomainError> {
    let m = halfspaces.len();
    let mut verts: Vec<Pt> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (a1, b1) = (Pt::new(&halfspaces[i].normal), halfspaces[i].offset);
            let (a2, b2) = (Pt::new(&halfspaces[j].normal), halfspaces[j].offset);
            let det = a1[0] * a2[1] - a1[1] * a2[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (b1 * a2[1] - b2 * a1[1]) / det;
            let y = (a1[0] * b2 - a2[0] * b1) / det;
            let p = Pt::new(&[x, y]);
            let feasible = halfspaces.iter().all(|h| {
                Pt::new(&h.normal).dot(&p) <= h.offset + 1e-9 * (1.0 + h.offset.abs())
            });
            if feasible && !verts.iter().any(|v| v.dist(&p) < 1e-9) {
                verts.push(p);
            }
        }
    }
    if verts.len() < 3 {
        return Err(DomainError::Invalid("polytope unbounded or empty".into()));
    }
    if verts.iter().any(|v| !v.norm().is_finite()) {
        return Err(DomainError::Invalid("polytope unbounded".into()));
    }
    let centroid = verts.iter().fold(Pt::zero(2), |acc, p| acc + *p).scale(1.0 / verts.len() as f64);
    verts.sort_by(|p, q| {
        let ap = (p[1] - centroid[1]).atan2(p[0] - centroid[0]);
        let aq = (q[1] - centroid[1]).atan2(q[0] - centroid[0]);
        ap.partial_cmp(&aq).unwrap()
    });
    Ok(verts)
}

fn dist_point_segment(x: &Pt, a: &Pt, b: &Pt) -> f64 {
    let ab = *b - *a;
    let t = ((*x - *a).dot(&ab) / ab.dot(&ab)).clamp(0.0, 1.0);
    x.dist(&(*a + ab.scale(t)))
}

fn closest_on_segment(x: &Pt, a: &Pt, b: &Pt) -> Pt {
    let ab = *b - *a;
    let t = ((*x - *a).dot(&ab) / ab.dot(&ab)).clamp(0.0, 1.0);
    *a + ab.scale(t)
}

fn dist_to_polygon_boundary(x: &Pt, poly: &[Pt]) -> f64 {
    let m = poly.len();
    (0..m).map(|i| dist_point_segment(x, &poly[i], &poly[(i + 1) % m])).fold(f64::INFINITY, f64::min)
}

fn closest_on_polygon(x: &Pt, poly: &[Pt]) -> Pt {
    let m = poly.len();
    let mut best = f64::INFINITY;
    let mut out = poly[0];
    for i in 0..m {
        let p = closest_on_segment(x, &poly[i], &poly[(i + 1) % m]);
        let d = x.dist(&p);
        if d < best {
            best = d;
            out = p;
        }
    }
    out
}

fn segment_intersects_box(cube: &Aabb, a: &Pt, b: &Pt) -> bool {
    // Liang–Barsky clip
    let d = *b - *a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for axis in 0..2 {
        let (p, q0, q1) = (d[axis], cube.min[axis] - a[axis], cube.max[axis] - a[axis]);
        if p.abs() < 1e-300 {
            if q0 > 0.0 || q1 < 0.0 {
                return false;
            }
        } else {
            let (mut ta, mut tb) = (q0 / p, q1 / p);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

fn dist_box_segment(cube: &Aabb, a: &Pt, b: &Pt) -> f64 {
    if segment_intersects_box(cube, a, b) {
        return 0.0;
    }
    let mut best = cube.dist_to_point(a).min(cube.dist_to_point(b));
    for c in cube.corners() {
        best = best.min(dist_point_segment(&c, a, b));
    }
    best
}

/// The unit simplex map t ↦ x(t) of eq. S: flat affine barycentric map on a
/// convex domain, or projection-plus-normal-offset coordinates in a collar of
/// a smooth boundary.
#[derive(Clone, Debug)]
pub enum SimplexMap {
    Flat {
        vertices: Vec<Pt>,
    },
    Curvilinear {
        domain: std::sync::Arc<Domain>,
        vertices: Vec<Pt>,
        boundary_points: Vec<Pt>,
        depths: Vec<f64>,
    },
}

/// Threshold below which a simplex is treated as degenerate: |ν| against
/// (max pairwise distance)^{r−1}.
pub const DEGENERACY_REL_TOL: f64 = 1e-12;

impl SimplexMap {
    pub fn flat(domain: &Domain, vertices: Vec<Pt>) -> Result<Self, DomainError> {
        if !domain.is_convex() {
            return Err(DomainError::Unsupported("flat simplices need a convex domain".into()));
        }
        for v in &vertices {
            if domain.signed_distance(v) < -1e-12 {
                return Err(DomainError::VertexOutsideDomain);
            }
        }
        Ok(SimplexMap::Flat { vertices })
    }

    /// Flat map without any domain (used for quadrature oracles).
    pub fn flat_free(vertices: Vec<Pt>) -> Self {
        SimplexMap::Flat { vertices }
    }

    /// Curvilinear simplex per the collar construction. `c1` is the
    /// comparability constant of assumptions (A2)/(A3).
    pub fn curvilinear(
        domain: std::sync::Arc<Domain>,
        vertices: Vec<Pt>,
        c1: f64,
    ) -> Result<Self, DomainError> {
        if !domain.is_smooth() {
            return Err(DomainError::Unsupported(
                "curvilinear simplices need a smooth boundary (ball or star)".into(),
            ));
        }
        let collar = domain
            .collar_halfwidth()
            .ok_or_else(|| DomainError::Unsupported("no collar for this domain".into()))?;
        let mut depths = Vec::with_capacity(vertices.len());
        let mut bpts = Vec::with_capacity(vertices.len());
        for v in &vertices {
            let d = domain.signed_distance(v);
            if d <= 0.0 {
                return Err(DomainError::VertexOutsideDomain);
            }
            if d > collar {
                return Err(DomainError::SimplexOutOfCollar(format!(
                    "vertex depth {d} exceeds collar {collar}"
                )));
            }
            depths.push(d);
            bpts.push(domain.boundary_projection(v)?);
        }
        // (A1)–(A3)
        let eta = depths.iter().cloned().fold(f64::INFINITY, f64::min);
        let dmax = depths.iter().cloned().fold(0.0f64, f64::max);
        let mut sep = 0.0f64;
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                sep = sep.max(vertices[i].dist(&vertices[j]));
            }
        }
        if eta > collar {
            return Err(DomainError::SimplexOutOfCollar("min depth exceeds collar".into()));
        }
        if dmax > c1 * eta {
            return Err(DomainError::SimplexOutOfCollar(format!(
                "depth spread {dmax} > C1·η = {}",
                c1 * eta
            )));
        }
        if sep > c1 * eta {
            return Err(DomainError::SimplexOutOfCollar(format!(
                "vertex separation {sep} > C1·η = {}",
                c1 * eta
            )));
        }
        if sep > collar {
            return Err(DomainError::SimplexOutOfCollar(
                "vertex separation exceeds collar width".into(),
            ));
        }
        Ok(SimplexMap::Curvilinear { domain, vertices, boundary_points: bpts, depths })
    }

    pub fn vertices(&self) -> &[Pt] {
        match self {
            SimplexMap::Flat { vertices } => vertices,
            SimplexMap::Curvilinear { vertices, .. } => vertices,
        }
    }

    /// Simplex order k (number of barycentric parameters).
    pub fn order(&self) -> usize {
        self.vertices().len() - 1
    }

    pub fn dim(&self) -> usize {
        self.vertices()[0].dim()
    }

    pub fn is_degenerate(&self) -> bool {
        let verts = self.vertices();
        let nu = simplex_normal(verts);
        let mut sep = 0.0f64;
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                sep = sep.max(verts[i].dist(&verts[j]));
            }
        }
        nu.norm() <= DEGENERACY_REL_TOL * sep.powi(self.order() as i32)
    }

    /// Evaluate at simplex coordinates t ∈ D^k (k entries, Σt ≤ 1).
    pub fn eval(&self, t: &[f64]) -> Pt {
        match self {
            SimplexMap::Flat { vertices } => {
                let mut p = vertices[0].scale(1.0 - t.iter().sum::<f64>());
                for (j, tj) in t.iter().enumerate() {
                    p = p + vertices[j + 1].scale(*tj);
                }
                p
            }
            SimplexMap::Curvilinear { domain, .. } => {
                let (c, s) = self.collar_combination(t);
                match &domain.descriptor {
                    DomainDescriptor::Ball { center, radius } => {
                        let cc = Pt::new(center);
                        let v = c - cc;
                        let r = v.norm();
                        cc + v.scale((radius - s) / r)
                    }
                    DomainDescriptor::SmoothStar { .. } => {
                        let (b, theta) = domain.star_closest_boundary(&c);
                        let n = domain.star_inner_normal(theta);
                        b + n.scale(s)
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    fn collar_combination(&self, t: &[f64]) -> (Pt, f64) {
        match self {
            SimplexMap::Curvilinear { boundary_points, depths, .. } => {
                let t0 = 1.0 - t.iter().sum::<f64>();
                let mut c = boundary_points[0].scale(t0);
                let mut s = depths[0] * t0;
                for (j, tj) in t.iter().enumerate() {
                    c = c + boundary_points[j + 1].scale(*tj);
                    s += depths[j + 1] * tj;
                }
                (c, s)
            }
            _ => unreachable!(),
        }
    }

    /// Tangent frame ∂S/∂t_j, j = 1..k.
    pub fn tangent_frame(&self, t: &[f64]) -> Vec<Pt> {
        match self {
            SimplexMap::Flat { vertices } => {
                (1..vertices.len()).map(|j| vertices[j] - vertices[0]).collect()
            }
            SimplexMap::Curvilinear { domain, boundary_points, depths, .. } => {
                let (c, s) = self.collar_combination(t);
                let k = self.order();
                match &domain.descriptor {
                    DomainDescriptor::Ball { center, radius } => {
                        let cc = Pt::new(center);
                        let v = c - cc;
                        let r = v.norm();
                        let vhat = v.scale(1.0 / r);
                        (0..k)
                            .map(|j| {
                                let dc = boundary_points[j + 1] - boundary_points[0];
                                let ds = depths[j + 1] - depths[0];
                                // d/dt [(R−s)·v/|v|]
                                let proj = dc - vhat.scale(vhat.dot(&dc));
                                proj.scale((radius - s) / r) - vhat.scale(ds)
                            })
                            .collect()
                    }
                    DomainDescriptor::SmoothStar { .. } => {
                        let (_, theta) = domain.star_closest_boundary(&c);
                        let (p, dp, ddp) = domain.star_boundary_derivs(theta);
                        let w = c - p;
                        let denom = dp.dot(&dp) - w.dot(&ddp);
                        let nrm = domain.star_inner_normal(theta);
                        // n'(θ) = σ (rot(p'')/|p'| − rot(p')(p'·p'')/|p'|³)
                        let sigma = if dp.rot_ccw().dot(&nrm) >= 0.0 { 1.0 } else { -1.0 };
                        let dpn = dp.norm();
                        let nprime = (ddp.rot_ccw().scale(1.0 / dpn)
                            - dp.rot_ccw().scale(dp.dot(&ddp) / dpn.powi(3)))
                        .scale(sigma);
                        (0..k)
                            .map(|j| {
                                let dc = boundary_points[j + 1] - boundary_points[0];
                                let ds = depths[j + 1] - depths[0];
                                let dtheta = dc.dot(&dp) / denom;
                                dp.scale(dtheta) + nrm.scale(ds) + nprime.scale(s * dtheta)
                            })
                            .collect()
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Wedge of the tangent frame: the grade-k surface element whose pairing
    /// with an (n−1)-form gives the flux density (for k = n−1).
    pub fn surface_normal_element(&self, t: &[f64]) -> KVector {
        let frame = self.tangent_frame(t);
        let mut acc = KVector::from_pt(&frame[0]);
        for v in &frame[1..] {
            acc = acc.wedge(&KVector::from_pt(v)).expect("frame wedge");
        }
        acc
    }
}
