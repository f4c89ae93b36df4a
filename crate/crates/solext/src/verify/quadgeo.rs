//! Geometry-adapted quadrature nodes: interiors, boundaries, and exterior
//! offset bands of the supported 2D domains. Each function returns
//! (node, weight) pairs for plain Lebesgue/Hausdorff integrals.

use crate::domain::{Domain, DomainDescriptor};
use crate::geom::Pt;
use crate::quadrature::gauss_legendre;
use std::f64::consts::PI;

fn gauss01(m: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(m);
    x.iter().zip(&w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Composite Gauss nodes on [a, b] with `panels` panels of `order` points.
pub fn line_panels(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let base = gauss01(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (t, w) in &base {
            out.push((lo + t * h, w * h));
        }
    }
    out
}

/// Area quadrature over the domain interior.
pub fn interior_nodes(domain: &Domain, refine: usize) -> Vec<(Pt, f64)> {
    match &domain.descriptor {
        DomainDescriptor::Ball { center, radius } => {
            let c = Pt::new(center);
            let mut out = Vec::new();
            for (r, wr) in line_panels(0.0, *radius, refine, 4) {
                for (th, wth) in line_panels(0.0, 2.0 * PI, 2 * refine, 4) {
                    out.push((c + Pt::new(&[th.cos(), th.sin()]).scale(r), wr * wth * r));
                }
            }
            out
        }
        DomainDescriptor::Rectangle { min, max } if min.len() == 2 => {
            let mut out = Vec::new();
            for (x, wx) in line_panels(min[0], max[0], refine, 4) {
                for (y, wy) in line_panels(min[1], max[1], refine, 4) {
                    out.push((Pt::new(&[x, y]), wx * wy));
                }
            }
            out
        }
        DomainDescriptor::ConvexPolytope { .. } => {
            // fan triangulation from the centroid
            let poly = domain.polygon().expect("2D polytope has a polygon");
            let m = poly.len();
            let centroid =
                poly.iter().fold(Pt::zero(2), |a, p| a + *p).scale(1.0 / m as f64);
            let mut out = Vec::new();
            let base = gauss01(refine.max(4));
            for i in 0..m {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                let area2 = ((a - centroid).rot_cw()).dot(&(b - centroid)).abs();
                for (t1, w1) in &base {
                    for (t2, w2) in &base {
                        // map square to triangle via Duffy
                        let u = *t1;
                        let v = t2 * (1.0 - u);
                        let p = centroid + (a - centroid).scale(u) + (b - centroid).scale(v);
                        out.push((p, w1 * w2 * (1.0 - u) * area2));
                    }
                }
            }
            out
        }
        _ => panic!("interior quadrature unsupported for this domain"),
    }
}

/// Boundary (arc-length) quadrature with outward unit normals:
/// (point, weight, outward normal).
pub fn boundary_nodes(domain: &Domain, refine: usize) -> Vec<(Pt, f64, Pt)> {
    match &domain.descriptor {
        DomainDescriptor::Ball { center, radius } => {
            let c = Pt::new(center);
            line_panels(0.0, 2.0 * PI, 4 * refine, 4)
                .into_iter()
                .map(|(th, w)| {
                    let n = Pt::new(&[th.cos(), th.sin()]);
                    (c + n.scale(*radius), w * radius, n)
                })
                .collect()
        }
        DomainDescriptor::Rectangle { min, max } if min.len() == 2 => {
            let mut out = Vec::new();
            let quarters: [(Pt, Pt, Pt); 4] = [
                (Pt::new(&[min[0], min[1]]), Pt::new(&[max[0], min[1]]), Pt::new(&[0.0, -1.0])),
                (Pt::new(&[max[0], min[1]]), Pt::new(&[max[0], max[1]]), Pt::new(&[1.0, 0.0])),
                (Pt::new(&[max[0], max[1]]), Pt::new(&[min[0], max[1]]), Pt::new(&[0.0, 1.0])),
                (Pt::new(&[min[0], max[1]]), Pt::new(&[min[0], min[1]]), Pt::new(&[-1.0, 0.0])),
            ];
            for (a, b, n) in quarters {
                let len = a.dist(&b);
                for (t, w) in line_panels(0.0, 1.0, refine, 4) {
                    out.push((a + (b - a).scale(t), w * len, n));
                }
            }
            out
        }
        DomainDescriptor::ConvexPolytope { .. } => {
            let poly = domain.polygon().unwrap().to_vec();
            let m = poly.len();
            let centroid = poly.iter().fold(Pt::zero(2), |a, p| a + *p).scale(1.0 / m as f64);
            let mut out = Vec::new();
            for i in 0..m {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                let len = a.dist(&b);
                let mut n = (b - a).rot_cw();
                n = n.scale(1.0 / n.norm());
                if n.dot(&(centroid - a)) > 0.0 {
                    n = n.scale(-1.0);
                }
                for (t, w) in line_panels(0.0, 1.0, refine, 4) {
                    out.push((a + (b - a).scale(t), w * len, n));
                }
            }
            out
        }
        _ => panic!("boundary quadrature unsupported for this domain"),
    }
}

/// Area quadrature over the exterior band {a < dist(·, ∂Ω) < b} with an
/// explicit tangential panel count (features of the extension vary on the
/// scale of the local cube size ~ dist, so deep bands need proportionally
/// more tangential panels).
pub fn exterior_band_nodes_adaptive(
    domain: &Domain,
    a: f64,
    b: f64,
    tangential_panels: usize,
    normal_panels: usize,
) -> Vec<(Pt, f64)> {
    assert!(0.0 <= a && a < b);
    match &domain.descriptor {
        DomainDescriptor::Ball { center, radius } => {
            let c = Pt::new(center);
            let mut out = Vec::new();
            for (r, wr) in line_panels(radius + a, radius + b, normal_panels, 4) {
                for (th, wth) in line_panels(0.0, 2.0 * PI, tangential_panels, 4) {
                    out.push((c + Pt::new(&[th.cos(), th.sin()]).scale(r), wr * wth * r));
                }
            }
            out
        }
        DomainDescriptor::Rectangle { min, max } if min.len() == 2 => {
            let mut out = Vec::new();
            let edges: [(Pt, Pt, Pt); 4] = [
                (Pt::new(&[min[0], min[1]]), Pt::new(&[max[0], min[1]]), Pt::new(&[0.0, -1.0])),
                (Pt::new(&[max[0], min[1]]), Pt::new(&[max[0], max[1]]), Pt::new(&[1.0, 0.0])),
                (Pt::new(&[max[0], max[1]]), Pt::new(&[min[0], max[1]]), Pt::new(&[0.0, 1.0])),
                (Pt::new(&[min[0], max[1]]), Pt::new(&[min[0], min[1]]), Pt::new(&[-1.0, 0.0])),
            ];
            let perimeter: f64 = edges.iter().map(|(p0, p1, _)| p0.dist(p1)).sum();
            for (p0, p1, n) in edges {
                let len = p0.dist(&p1);
                let panels = ((tangential_panels as f64 * len / perimeter).ceil() as usize).max(1);
                for (t, wt) in line_panels(0.0, 1.0, panels, 4) {
                    for (d, wd) in line_panels(a, b, normal_panels, 4) {
                        out.push((p0 + (p1 - p0).scale(t) + n.scale(d), wt * len * wd));
                    }
                }
            }
            let corners = [
                (Pt::new(&[max[0], max[1]]), 0.0),
                (Pt::new(&[min[0], max[1]]), PI / 2.0),
                (Pt::new(&[min[0], min[1]]), PI),
                (Pt::new(&[max[0], min[1]]), 1.5 * PI),
            ];
            let cpanels = (tangential_panels / 8).max(2);
            for (corner, th0) in corners {
                for (r, wr) in line_panels(a.max(1e-300), b, normal_panels, 4) {
                    for (th, wth) in line_panels(th0, th0 + PI / 2.0, cpanels, 4) {
                        out.push((corner + Pt::new(&[th.cos(), th.sin()]).scale(r), wr * wth * r));
                    }
                }
            }
            out
        }
        _ => panic!("exterior band quadrature unsupported for this domain"),
    }
}

/// Arc-length quadrature along the offset curve {dist(·, ∂Ω) = delta}
/// outside the domain, with outward unit normals: (point, weight, ν̂_out).
pub fn offset_curve_nodes(
    domain: &Domain,
    delta: f64,
    tangential_panels: usize,
) -> Vec<(Pt, f64, Pt)> {
    assert!(delta > 0.0);
    match &domain.descriptor {
        DomainDescriptor::Ball { center, radius } => {
            let c = Pt::new(center);
            let r = radius + delta;
            line_panels(0.0, 2.0 * PI, tangential_panels, 4)
                .into_iter()
                .map(|(th, w)| {
                    let n = Pt::new(&[th.cos(), th.sin()]);
                    (c + n.scale(r), w * r, n)
                })
                .collect()
        }
        DomainDescriptor::Rectangle { min, max } if min.len() == 2 => {
            let mut out = Vec::new();
            let edges: [(Pt, Pt, Pt); 4] = [
                (Pt::new(&[min[0], min[1]]), Pt::new(&[max[0], min[1]]), Pt::new(&[0.0, -1.0])),
                (Pt::new(&[max[0], min[1]]), Pt::new(&[max[0], max[1]]), Pt::new(&[1.0, 0.0])),
                (Pt::new(&[max[0], max[1]]), Pt::new(&[min[0], max[1]]), Pt::new(&[0.0, 1.0])),
                (Pt::new(&[min[0], max[1]]), Pt::new(&[min[0], min[1]]), Pt::new(&[-1.0, 0.0])),
            ];
            let perimeter: f64 = edges.iter().map(|(p0, p1, _)| p0.dist(p1)).sum();
            for (p0, p1, n) in edges {
                let len = p0.dist(&p1);
                let panels = ((tangential_panels as f64 * len / perimeter).ceil() as usize).max(1);
                for (t, w) in line_panels(0.0, 1.0, panels, 4) {
                    out.push((p0 + (p1 - p0).scale(t) + n.scale(delta), w * len, n));
                }
            }
            let corners = [
                (Pt::new(&[max[0], max[1]]), 0.0),
                (Pt::new(&[min[0], max[1]]), PI / 2.0),
                (Pt::new(&[min[0], min[1]]), PI),
                (Pt::new(&[max[0], min[1]]), 1.5 * PI),
            ];
            let cpanels = (tangential_panels / 8).max(2);
            for (corner, th0) in corners {
                for (th, w) in line_panels(th0, th0 + PI / 2.0, cpanels, 4) {
                    let n = Pt::new(&[th.cos(), th.sin()]);
                    out.push((corner + n.scale(delta), w * delta, n));
                }
            }
            out
        }
        _ => panic!("offset curve unsupported for this domain"),
    }
}

/// Area quadrature over the exterior band {a < dist(·, ∂Ω) < b}.
pub fn exterior_band_nodes(domain: &Domain, a: f64, b: f64, refine: usize) -> Vec<(Pt, f64)> {
    assert!(0.0 <= a && a < b);
    match &domain.descriptor {
        DomainDescriptor::Ball { center, radius } => {
            let c = Pt::new(center);
            let mut out = Vec::new();
            for (r, wr) in line_panels(radius + a, radius + b, refine, 4) {
                for (th, wth) in line_panels(0.0, 2.0 * PI, 4 * refine, 4) {
                    out.push((c + Pt::new(&[th.cos(), th.sin()]).scale(r), wr * wth * r));
                }
            }
            out
        }
        DomainDescriptor::Rectangle { min, max } if min.len() == 2 => {
            // four edge bands plus four corner annular quadrants
            let mut out = Vec::new();
            let edges: [(Pt, Pt, Pt); 4] = [
                (Pt::new(&[min[0], min[1]]), Pt::new(&[max[0], min[1]]), Pt::new(&[0.0, -1.0])),
                (Pt::new(&[max[0], min[1]]), Pt::new(&[max[0], max[1]]), Pt::new(&[1.0, 0.0])),
                (Pt::new(&[max[0], max[1]]), Pt::new(&[min[0], max[1]]), Pt::new(&[0.0, 1.0])),
                (Pt::new(&[min[0], max[1]]), Pt::new(&[min[0], min[1]]), Pt::new(&[-1.0, 0.0])),
            ];
            for (p0, p1, n) in edges {
                let len = p0.dist(&p1);
                for (t, wt) in line_panels(0.0, 1.0, refine, 4) {
                    for (d, wd) in line_panels(a, b, refine, 4) {
                        out.push((p0 + (p1 - p0).scale(t) + n.scale(d), wt * len * wd));
                    }
                }
            }
            let corners = [
                (Pt::new(&[max[0], max[1]]), 0.0),
                (Pt::new(&[min[0], max[1]]), PI / 2.0),
                (Pt::new(&[min[0], min[1]]), PI),
                (Pt::new(&[max[0], min[1]]), 1.5 * PI),
            ];
            for (corner, th0) in corners {
                for (r, wr) in line_panels(a.max(1e-300), b, refine, 4) {
                    for (th, wth) in line_panels(th0, th0 + PI / 2.0, refine, 4) {
                        out.push((corner + Pt::new(&[th.cos(), th.sin()]).scale(r), wr * wth * r));
                    }
                }
            }
            out
        }
        _ => panic!("exterior band quadrature unsupported for this domain"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainDescriptor;

    #[test]
    fn areas_and_lengths() {
        let disk =
            Domain::new(DomainDescriptor::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
        let area: f64 = interior_nodes(&disk, 8).iter().map(|(_, w)| w).sum();
        assert!((area - PI).abs() < 1e-10, "{area}");
        let perim: f64 = boundary_nodes(&disk, 8).iter().map(|(_, w, _)| w).sum();
        assert!((perim - 2.0 * PI).abs() < 1e-10);
        let sq = Domain::new(DomainDescriptor::Rectangle { min: vec![0.0, 0.0], max: vec![1.0, 1.0] })
            .unwrap();
        let area: f64 = interior_nodes(&sq, 6).iter().map(|(_, w)| w).sum();
        assert!((area - 1.0).abs() < 1e-12);
        // band area: perimeter·(b−a) + π(b²−a²) for the square
        let (a, b) = (0.1, 0.3);
        let band: f64 = exterior_band_nodes(&sq, a, b, 6).iter().map(|(_, w)| w).sum();
        let exact = 4.0 * (b - a) + PI * (b * b - a * a);
        assert!((band - exact).abs() < 1e-10, "{band} vs {exact}");
        // every band node has the right distance range
        for (p, _) in exterior_band_nodes(&sq, a, b, 4) {
            let d = -sq.signed_distance(&p);
            assert!(d > a - 1e-9 && d < b + 1e-9, "dist {d}");
        }
    }

    #[test]
    fn polygon_interior_area() {
        use crate::domain::HalfSpace;
        let tri = Domain::new(DomainDescriptor::ConvexPolytope {
            halfspaces: vec![
                HalfSpace { normal: vec![-1.0, 0.0], offset: 0.0 },
                HalfSpace { normal: vec![0.0, -1.0], offset: 0.0 },
                HalfSpace { normal: vec![1.0, 1.0], offset: 1.0 },
            ],
        })
        .unwrap();
        let area: f64 = interior_nodes(&tri, 8).iter().map(|(_, w)| w).sum();
        assert!((area - 0.5).abs() < 1e-10, "{area}");
    }
}
