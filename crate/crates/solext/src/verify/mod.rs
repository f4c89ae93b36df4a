//! Verification suite: weak and pointwise divergence residuals, L^p norm
//! and strip ratios, Stokes checks on simplices, and the cuspidal-domain
//! counterexample computations.

pub mod cusp;
pub mod quadgeo;

pub use cusp::{
    cusp_flux, cusp_lowerbound, exponent_window, CuspError, CuspFlux, CuspScenario, CuspSide,
    ExponentWindow, LowerBoundReport,
};

use crate::domain::SimplexMap;
use crate::extend::{ExtendError, ExtensionHandle, Region};
use crate::exterior::{form_to_vec, pair, simplex_normal, vec_to_form, KForm};
use crate::field::VectorField;
use crate::geom::Pt;
use crate::partition::bump;
use crate::quadrature::{integrate_simplex, SimplexRule};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Extend(#[from] ExtendError),
    #[error("finite-difference stencil is not strictly exterior at {0:?}")]
    StencilCrossesBoundary(Vec<f64>),
    #[error("unsupported domain for this check: {0}")]
    Unsupported(String),
}

/// Compactly supported smooth scalar test function: a radial exp-bump.
#[derive(Clone, Debug, Serialize)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn eval(&self, x: &Pt) -> f64 {
        let c = Pt::new(&self.center);
        self.amplitude * bump(x.dist(&c) / self.radius)
    }

    pub fn grad(&self, x: &Pt) -> Pt {
        let c = Pt::new(&self.center);
        let w = *x - c;
        let r2 = w.dot(&w) / (self.radius * self.radius);
        if r2 >= 1.0 {
            return Pt::zero(x.dim());
        }
        let s = 1.0 - r2;
        // d/d(r²) of exp(−1/s) = −exp(−1/s)/s²
        let d = -(-1.0 / s).exp() / (s * s);
        w.scale(2.0 * self.amplitude * d / (self.radius * self.radius))
    }

    /// sup |∇ψ| via a dense radial scan of the profile.
    pub fn grad_max(&self) -> f64 {
        let n = self.center.len();
        let c = Pt::new(&self.center);
        let mut m = 0.0f64;
        for i in 1..2000 {
            let r = self.radius * i as f64 / 2000.0;
            let mut x = c;
            x[n - 1] += r;
            m = m.max(self.grad(&x).norm());
        }
        m
    }
}

/// Central-difference divergence with an exterior stencil check.
pub fn pointwise_div_fd(
    f: &mut impl FnMut(&Pt) -> Result<Pt, ExtendError>,
    handle: &ExtensionHandle,
    y: &Pt,
    h: f64,
) -> Result<f64, VerifyError> {
    let n = y.dim();
    for d in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = *y;
            p[d] += s * h;
            if handle.domain.signed_distance(&p) >= 0.0 {
                return Err(VerifyError::StencilCrossesBoundary(y.coords().to_vec()));
            }
        }
    }
    Ok(crate::extend::fd_divergence(f, y, h)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakDivReport {
    /// total residual: bulk weak-divergence plus δ-collar flux mismatch
    pub residual: f64,
    /// ‖∇ψ‖_∞ · ‖u‖_{L¹(Ω)}, the natural scale of the pairing
    pub scale: f64,
    /// |∫_{dist>δ} 𝓔u·∇ψ + ∮_{Γ_δ} ψ 𝓔u·ν̂|  (= |∫ ψ d𝓔| over the bulk)
    pub bulk: f64,
    /// |∮_{∂Ω} ψ u·ν̂ − ∮_{Γ_δ} ψ 𝓔u·ν̂|  (flux continuity across the collar)
    pub flux: f64,
    /// the collar depth δ (just above the cover's resolution floor)
    pub delta: f64,
}

/// Depth below which the truncated cover no longer covers the exterior:
/// scanned tangentially, with a safety factor.
pub fn resolution_floor_depth(handle: &ExtensionHandle) -> f64 {
    let domain = &handle.domain;
    let mut delta = 1.2 * (domain.dim() as f64).sqrt() * (-(handle.config.max_level) as f64).exp2();
    loop {
        let probe = quadgeo::offset_curve_nodes(domain, delta, 257);
        let covered = probe.iter().all(|(p, _, _)| {
            matches!(handle.cover.locate(p), crate::whitney::LocateResult::Covered(_))
        });
        if covered {
            return delta;
        }
        delta *= 1.3;
        assert!(delta < 1.0, "cover leaves a macroscopic sliver");
    }
}

/// Weak-solenoidality residual of the pairing ∫ 𝓔u·∇ψ for a straddling
/// test function.
///
/// The interior part uses the boundary-flux identity; the exterior part is
/// integrated over dyadic offset bands down to the cover's resolution floor
/// δ, and the collar {0 < dist < δ} is closed by the divergence theorem
/// through the flux on the offset curve Γ_δ. The reported residual
/// |bulk| + |flux| is a conservative proxy for |∫ 𝓔u·∇ψ| observed down to
/// scale δ. On rectangle domains the exterior quadrature cells are aligned
/// with the bump-support lines, which the accuracy here requires; other
/// domains get plain banded cells (looser).
pub fn weak_div_residual(
    handle: &ExtensionHandle,
    test: &TestFunction,
    refine: usize,
) -> Result<WeakDivReport, VerifyError> {
    let n = handle.dim();
    if n != 2 {
        return Err(VerifyError::Unsupported("weak residual is wired for 2D domains".into()));
    }
    let domain = &handle.domain;
    // ∮_∂Ω ψ (u·ν̂) dH − ∫_Ω ψ div u dx  (the interior pairing)
    let mut interior = 0.0;
    for (p, w, nu) in quadgeo::boundary_nodes(domain, 16 * refine) {
        interior += w * test.eval(&p) * handle.field.eval(&p).dot(&nu);
    }
    let mut l1_u = 0.0;
    for (p, w) in quadgeo::interior_nodes(domain, 4 * refine) {
        l1_u += w * handle.field.eval(&p).norm();
        if let Some(div) = handle.field.divergence(&p) {
            interior -= w * test.eval(&p) * div;
        }
    }
    let delta = resolution_floor_depth(handle);
    let scale = test.grad_max() * l1_u;
    let aligned = matches!(domain.descriptor, crate::domain::DomainDescriptor::Rectangle { .. });
    let (exterior, gamma_flux) = if aligned {
        aligned_exterior_pairing(handle, test, delta, refine)?
    } else {
        generic_exterior_pairing(handle, test, delta, refine)?
    };
    let bulk = (exterior + gamma_flux).abs();
    let flux = (interior - gamma_flux).abs();
    Ok(WeakDivReport { residual: bulk + flux, scale, bulk, flux, delta })
}

/// Cover levels whose blow-ups can reach depths in (lo, hi): blow-up points
/// of a level-k cube sit at dist ∈ [≈1.30ℓ, ≈7.2ℓ] for n = 2.
fn active_levels(handle: &ExtensionHandle, lo: f64, hi: f64) -> Vec<i32> {
    let max_level = handle.config.max_level;
    let mut out = Vec::new();
    for k in -40..=max_level {
        let l = (-k as f64).exp2();
        if 1.2 * l <= hi && 7.5 * l >= lo {
            out.push(k);
        }
    }
    out
}

/// Breakpoints at every dyadic bump-support line (i + 0.5 ± 7/12)·2^{−k}
/// inside [a, b], for the given levels.
fn support_breakpoints(levels: &[i32], a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    for &k in levels {
        let l = (-k as f64).exp2();
        for off in [-7.0 / 12.0, 7.0 / 12.0] {
            let imin = (a / l - 0.5 - off).floor() as i64 - 1;
            let imax = (b / l - 0.5 - off).ceil() as i64 + 1;
            for i in imin..=imax {
                let p = (i as f64 + 0.5 + off) * l;
                if p > a + 1e-14 && p < b - 1e-14 {
                    pts.push(p);
                }
            }
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    pts
}

fn gauss_on_cells(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let base: Vec<(f64, f64)> = {
        let (x, w) = crate::quadrature::gauss_legendre(order);
        x.iter().zip(&w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
    };
    let mut out = Vec::new();
    for c in breaks.windows(2) {
        let h = c[1] - c[0];
        for (t, w) in &base {
            out.push((c[0] + t * h, w * h));
        }
    }
    out
}

/// Exterior pairing on a rectangle: per-edge bands with support-aligned
/// cells, plus the Γ_δ flux; corner fans carry plain polar cells.
fn aligned_exterior_pairing(
    handle: &ExtensionHandle,
    test: &TestFunction,
    delta: f64,
    refine: usize,
) -> Result<(f64, f64), VerifyError> {
    let (min, max) = match &handle.domain.descriptor {
        crate::domain::DomainDescriptor::Rectangle { min, max } => (min.clone(), max.clone()),
        _ => unreachable!(),
    };
    let order = 3 + refine;
    let tc = Pt::new(&test.center);
    let top0 = handle.support_radius();
    // edges: (anchor point, tangential axis, outward normal axis sign)
    // tangential coordinate runs along `axis`, depth along `perp`
    struct Edge {
        axis: usize,
        perp: usize,
        perp_sign: f64,
        perp_base: f64,
        t_lo: f64,
        t_hi: f64,
    }
    let edges = [
        Edge { axis: 0, perp: 1, perp_sign: -1.0, perp_base: min[1], t_lo: min[0], t_hi: max[0] },
        Edge { axis: 0, perp: 1, perp_sign: 1.0, perp_base: max[1], t_lo: min[0], t_hi: max[0] },
        Edge { axis: 1, perp: 0, perp_sign: -1.0, perp_base: min[0], t_lo: min[1], t_hi: max[1] },
        Edge { axis: 1, perp: 0, perp_sign: 1.0, perp_base: max[0], t_lo: min[1], t_hi: max[1] },
    ];
    let mut exterior = 0.0;
    let mut gamma_flux = 0.0;
    for e in &edges {
        // restrict to the test-function footprint along this edge
        let t_lo = e.t_lo.max(tc[e.axis] - test.radius - 1e-9);
        let t_hi = e.t_hi.min(tc[e.axis] + test.radius + 1e-9);
        if t_hi <= t_lo {
            continue;
        }
        let top = top0.min(test.radius + (tc[e.perp] - e.perp_base).abs() + 0.1);
        // dyadic bands from top down to δ
        let mut hi = top;
        while hi > delta {
            let lo = (hi / 2.0).max(delta);
            let levels = active_levels(handle, lo, hi);
            let tang = support_breakpoints(&levels, t_lo, t_hi);
            // depth breakpoints from the support lines orthogonal to the edge
            let (da, db) = if e.perp_sign < 0.0 {
                (e.perp_base - hi, e.perp_base - lo)
            } else {
                (e.perp_base + lo, e.perp_base + hi)
            };
            let mut depth = support_breakpoints(&levels, da, db);
            if e.perp_sign < 0.0 {
                depth = depth.iter().rev().map(|v| e.perp_base - v).collect();
            } else {
                depth = depth.iter().map(|v| v - e.perp_base).collect();
            }
            for (t, wt) in gauss_on_cells(&tang, order) {
                for (d, wd) in gauss_on_cells(&depth, order) {
                    let mut p = Pt::zero(2);
                    p[e.axis] = t;
                    p[e.perp] = e.perp_base + e.perp_sign * d;
                    let g = test.grad(&p);
                    if g.norm() == 0.0 {
                        continue;
                    }
                    exterior += wt * wd * handle.evaluate(&p)?.dot(&g);
                }
            }
            hi = lo;
        }
        // Γ_δ flux along this edge (aligned 1D cells)
        let levels = active_levels(handle, delta, 2.0 * delta);
        let tang = support_breakpoints(&levels, t_lo, t_hi);
        for (t, wt) in gauss_on_cells(&tang, order) {
            let mut p = Pt::zero(2);
            p[e.axis] = t;
            p[e.perp] = e.perp_base + e.perp_sign * delta;
            let psi = test.eval(&p);
            if psi == 0.0 {
                continue;
            }
            let mut nu = Pt::zero(2);
            nu[e.perp] = e.perp_sign;
            gamma_flux += wt * psi * handle.evaluate(&p)?.dot(&nu);
        }
    }
    // corner fans (plain polar cells; zero work when ψ avoids the corners)
    let corners = [
        (Pt::new(&[max[0], max[1]]), 0.0),
        (Pt::new(&[min[0], max[1]]), std::f64::consts::FRAC_PI_2),
        (Pt::new(&[min[0], min[1]]), std::f64::consts::PI),
        (Pt::new(&[max[0], min[1]]), 1.5 * std::f64::consts::PI),
    ];
    for (corner, th0) in corners {
        if corner.dist(&tc) > test.radius + 1e-9 {
            continue;
        }
        let top = top0.min(test.radius + corner.dist(&tc));
        let mut hi = top;
        while hi > delta {
            let lo = (hi / 2.0).max(delta);
            let feature = lo / 8.0;
            let panels = ((1.6 * (hi) / feature).ceil() as usize).clamp(8, 200_000);
            for (r, wr) in quadgeo::line_panels(lo, hi, 4, 4) {
                for (th, wth) in
                    quadgeo::line_panels(th0, th0 + std::f64::consts::FRAC_PI_2, panels, 4)
                {
                    let p = corner + Pt::new(&[th.cos(), th.sin()]).scale(r);
                    let g = test.grad(&p);
                    if g.norm() == 0.0 {
                        continue;
                    }
                    exterior += wr * wth * r * handle.evaluate(&p)?.dot(&g);
                }
            }
            hi = lo;
        }
        let feature = delta / 8.0;
        let panels = ((1.6 * delta / feature).ceil() as usize).clamp(8, 200_000);
        for (th, wth) in quadgeo::line_panels(th0, th0 + std::f64::consts::FRAC_PI_2, panels, 4) {
            let nu = Pt::new(&[th.cos(), th.sin()]);
            let p = corner + nu.scale(delta);
            let psi = test.eval(&p);
            if psi != 0.0 {
                gamma_flux += wth * delta * psi * handle.evaluate(&p)?.dot(&nu);
            }
        }
    }
    Ok((exterior, gamma_flux))
}

/// Plain banded exterior pairing for smooth domains (used by unit tests;
/// accuracy limited by the unaligned cells).
fn generic_exterior_pairing(
    handle: &ExtensionHandle,
    test: &TestFunction,
    delta: f64,
    refine: usize,
) -> Result<(f64, f64), VerifyError> {
    let n = handle.dim();
    let domain = &handle.domain;
    let tc = Pt::new(&test.center);
    let bb = domain.bounding_box();
    let perimeter = 2.0 * ((bb.max[0] - bb.min[0]) + (bb.max[1] - bb.min[1])) + 2.0;
    let panels_at = |d: f64| -> usize {
        let feature = d / (4.0 * (n as f64).sqrt());
        ((1.5 * refine as f64 * perimeter / feature).ceil() as usize).clamp(16, 500_000)
    };
    let top = (test.radius + tc.dist(&Pt::zero(n)) + 1.0).min(handle.support_radius());
    let mut exterior = 0.0;
    let mut hi = top;
    while hi > delta {
        let lo = (hi / 2.0).max(delta);
        for (p, w) in quadgeo::exterior_band_nodes_adaptive(domain, lo, hi, panels_at(lo), 2) {
            let g = test.grad(&p);
            if g.norm() == 0.0 {
                continue;
            }
            exterior += w * handle.evaluate(&p)?.dot(&g);
        }
        hi = lo;
    }
    let mut gamma_flux = 0.0;
    for (p, w, nu) in quadgeo::offset_curve_nodes(domain, delta, panels_at(delta)) {
        if test.eval(&p) != 0.0 {
            gamma_flux += w * test.eval(&p) * handle.evaluate(&p)?.dot(&nu);
        }
    }
    Ok((exterior, gamma_flux))
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRatioReport {
    pub p: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    /// band actually integrated: dist(·, ∂Ω) ∈ (floor, θ)
    pub band: (f64, f64),
}

/// ‖𝓔u‖_{L^p(band)} / ‖u‖_{L^p(Ω)} over the exterior band
/// floor < dist < θ, via dyadic sub-bands. p = ∞ samples the maximum.
pub fn norm_ratio(
    handle: &ExtensionHandle,
    p: f64,
    floor: f64,
    refine: usize,
) -> Result<NormRatioReport, VerifyError> {
    let domain = &handle.domain;
    let theta = handle.support_radius();
    let mut num = 0.0f64;
    // dyadic bands from θ down to the floor
    let mut hi = theta;
    while hi > floor {
        let lo = (hi / 2.0).max(floor);
        for (pt, w) in quadgeo::exterior_band_nodes(domain, lo, hi, refine) {
            let v = handle.evaluate(&pt)?;
            if p.is_finite() {
                num += w * v.norm().powf(p);
            } else {
                num = num.max(v.norm());
            }
        }
        hi = lo;
    }
    let mut den = 0.0f64;
    for (pt, w) in quadgeo::interior_nodes(domain, 4 * refine) {
        let v = handle.field.eval(&pt);
        if p.is_finite() {
            den += w * v.norm().powf(p);
        } else {
            den = den.max(v.norm());
        }
    }
    let (numerator, denominator) = if p.is_finite() {
        (num.powf(1.0 / p), den.powf(1.0 / p))
    } else {
        (num, den)
    };
    Ok(NormRatioReport {
        p,
        numerator,
        denominator,
        ratio: numerator / denominator,
        band: (floor, theta),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StripRatioReport {
    pub delta: f64,
    pub exterior_mass: f64,
    pub interior_mass: f64,
    pub ratio: f64,
    /// interior comparison constant c̃ (interior strip is dist < c̃δ)
    pub c_tilde: f64,
}

/// eq:strip-style ratio: ∫_{δ/2<dist<δ, exterior} |𝓔u| against
/// ∫_{dist<c̃δ, interior} |u|.
pub fn strip_ratio(
    handle: &ExtensionHandle,
    delta: f64,
    refine: usize,
) -> Result<StripRatioReport, VerifyError> {
    let r = handle.cover.report.w3_c.max(handle.cover.report.j4_c);
    let c_tilde = 2.0 * r;
    let mut ext = 0.0;
    for (pt, w) in quadgeo::exterior_band_nodes(&handle.domain, delta / 2.0, delta, refine) {
        ext += w * handle.evaluate(&pt)?.norm();
    }
    // interior strip dist < c̃δ via boundary-offset bands: reuse the
    // exterior band machinery on the inset description when available;
    // otherwise integrate over the interior and filter by distance
    let mut int = 0.0;
    for (pt, w) in quadgeo::interior_nodes(&handle.domain, 6 * refine) {
        if handle.domain.signed_distance(&pt) < c_tilde * delta {
            int += w * handle.field.eval(&pt).norm();
        }
    }
    Ok(StripRatioReport {
        delta,
        exterior_mass: ext,
        interior_mass: int,
        ratio: ext / int,
        c_tilde,
    })
}

/// |Σ_faces ∫_F u·ν_out dH^{n−1} − ∫_T div u| over a full-dimensional flat
/// simplex, with outward unit normals.
pub fn stokes_check(
    u: &dyn VectorField,
    vertices: &[Pt],
    face_degree: usize,
    volume_degree: usize,
) -> f64 {
    let n = vertices[0].dim();
    assert_eq!(vertices.len(), n + 1, "need a full-dimensional simplex");
    let face_rule = SimplexRule::new(n - 1, face_degree).unwrap();
    let vol_rule = SimplexRule::new(n, volume_degree).unwrap();
    let centroid = vertices
        .iter()
        .fold(Pt::zero(n), |a, p| a + *p)
        .scale(1.0 / (n as f64 + 1.0));
    let mut flux = 0.0;
    for omit in 0..=n {
        let face: Vec<Pt> =
            (0..=n).filter(|&j| j != omit).map(|j| vertices[j]).collect();
        let nu = simplex_normal(&face);
        if nu.norm() == 0.0 {
            continue;
        }
        // orient outward: the flux pairing with ν must point away from the
        // omitted vertex
        let face_mid = face.iter().fold(Pt::zero(n), |a, p| a + *p).scale(1.0 / n as f64);
        let outward = face_mid - centroid;
        let nu_vec = form_to_vec(&{
            // the vector whose pairing reproduces pair(ω_v, ν): components
            // recovered by pairing with basis fields
            let mut comps = vec![0.0; n];
            for (d, c) in comps.iter_mut().enumerate() {
                *c = pair(&vec_to_form(&Pt::basis(n, d)), &nu).unwrap();
            }
            vec_to_form(&Pt::new(&comps))
        });
        let sign = if nu_vec.dot(&outward) >= 0.0 { 1.0 } else { -1.0 };
        // average of the flux density times the H^{n−1} measure |ν|
        let avg = face_rule.average(&face, |z| pair(&vec_to_form(&u.eval(z)), &nu).unwrap());
        flux += sign * avg;
    }
    let map = SimplexMap::flat_free(vertices.to_vec());
    let vol_int = integrate_simplex(&vol_rule, &map, |z| u.divergence(z).unwrap_or(0.0));
    (flux - vol_int.value).abs()
}

/// Convergence order fit for a residual sequence over halved step sizes.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals
        .windows(2)
        .map(|w| (w[0].max(1e-300) / w[1].max(1e-300)).log2())
        .collect()
}

/// One entry of a verification suite report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub residuals: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        SuiteReport { suite: suite.into(), checks: Vec::new(), pass: true }
    }

    pub fn push(&mut self, check: CheckReport) {
        self.pass &= check.pass;
        self.checks.push(check);
    }
}

/// Region classification re-export used by the CLI CSV writer.
pub fn region_tag(region: Region) -> &'static str {
    match region {
        Region::Interior => "interior",
        Region::Exterior => "exterior",
        Region::Zero => "zero",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainDescriptor};
    use crate::extend::{ExtendConfig, QuadConfig};
    use crate::field::{Field, Poly};
    use std::sync::Arc;

    fn disk_handle(field: Field, max_level: i32) -> ExtensionHandle {
        let domain = Arc::new(
            Domain::new(DomainDescriptor::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap(),
        );
        ExtensionHandle::prepare(
            domain,
            field.instantiate(),
            ExtendConfig { max_level, ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn stokes_examples() {
        // constant field: flux sum exactly zero
        let c = Field::Constant { values: vec![0.7, -0.2] };
        let t = [Pt::new(&[0.0, 0.0]), Pt::new(&[1.0, 0.0]), Pt::new(&[0.3, 0.8])];
        assert!(stokes_check(&c, &t, 4, 4) < 1e-14);
        // u = x: div = n, face sum = n·volume
        let idf = Field::Linear { matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]] };
        assert!(stokes_check(&idf, &t, 4, 4) < 1e-13);
        // solenoidal polynomial
        let s = Field::StreamPoly { q: Poly { terms: vec![(2, 2, 0, 1.0), (0, 3, 0, -0.2)] } };
        assert!(stokes_check(&s, &t, 6, 6) < 1e-13);
        // 3D tetrahedron
        let c3 = Field::Linear {
            matrix: vec![
                vec![0.2, 0.5, -0.1],
                vec![0.0, -0.7, 0.3],
                vec![0.4, 0.1, 0.5],
            ],
        };
        let t3 = [
            Pt::new(&[0.0, 0.0, 0.0]),
            Pt::new(&[1.0, 0.1, 0.0]),
            Pt::new(&[0.2, 0.9, 0.1]),
            Pt::new(&[0.3, 0.2, 1.1]),
        ];
        assert!(stokes_check(&c3, &t3, 4, 4) < 1e-13);
    }

    #[test]
    fn weak_residual_small_and_improving() {
        let f = Field::BumpStream {
            bumps: vec![crate::field::StreamBump {
                center: vec![0.3, -0.2],
                radius: 0.9,
                amplitude: 1.0,
            }],
        };
        let h = disk_handle(f.clone(), 9);
        let test = TestFunction { center: vec![0.95, 0.1], radius: 0.35, amplitude: 1.0 };
        let rep = weak_div_residual(&h, &test, 2).unwrap();
        assert!(
            rep.residual < 2e-3 * rep.scale,
            "residual {} scale {} (bulk {} flux {})",
            rep.residual,
            rep.scale,
            rep.bulk,
            rep.flux
        );
        // doubling the operator orders shrinks the bulk residual
        let h2 = ExtensionHandle::prepare(
            h.domain.clone(),
            f.instantiate(),
            ExtendConfig {
                max_level: 9,
                quad: QuadConfig { outer_order: 4, simplex_degree: 8, ..Default::default() },
                ..Default::default()
            },
        )
        .unwrap();
        let rep2 = weak_div_residual(&h2, &test, 2).unwrap();
        assert!(rep2.bulk < rep.bulk, "bulk {} -> {}", rep.bulk, rep2.bulk);
    }

    #[test]
    fn weak_residual_inside_only_test_function() {
        // ψ supported entirely in Ω: the pairing reduces to ∫ u·∇ψ over Ω,
        // which vanishes for solenoidal u
        let f = Field::StreamPoly { q: Poly { terms: vec![(1, 1, 0, 1.0)] } };
        let h = disk_handle(f, 5);
        let test = TestFunction { center: vec![0.0, 0.0], radius: 0.5, amplitude: 2.0 };
        let rep = weak_div_residual(&h, &test, 4).unwrap();
        assert!(rep.residual < 1e-10 * rep.scale.max(1.0), "{}", rep.residual);
    }

    #[test]
    fn weak_residual_scales_linearly() {
        let f = Field::Rotation { axis: None, dim: 2 };
        let h1 = disk_handle(f, 6);
        let f2 = Field::Linear { matrix: vec![vec![0.0, -2.0], vec![2.0, 0.0]] };
        let h2 = disk_handle(f2, 6);
        let test = TestFunction { center: vec![0.9, -0.2], radius: 0.4, amplitude: 1.0 };
        let r1 = weak_div_residual(&h1, &test, 2).unwrap();
        let r2 = weak_div_residual(&h2, &test, 2).unwrap();
        // both components double with the field
        assert!((r2.bulk - 2.0 * r1.bulk).abs() < 1e-9 * (1.0 + r1.bulk));
        assert!((r2.flux - 2.0 * r1.flux).abs() < 1e-9 * (1.0 + r1.flux));
    }

    #[test]
    fn norm_ratio_homogeneous_and_finite() {
        let f = Field::Constant { values: vec![1.0, 0.0] };
        let h = disk_handle(f, 5);
        let floor = 2.0f64.powi(-5) * 8.0;
        let r1 = norm_ratio(&h, 1.0, floor, 2).unwrap();
        assert!(r1.ratio.is_finite() && r1.ratio > 0.0);
        let f3 = Field::Constant { values: vec![3.0, 0.0] };
        let h3 = disk_handle(f3, 5);
        let r3 = norm_ratio(&h3, 1.0, floor, 2).unwrap();
        assert!((r1.ratio - r3.ratio).abs() < 1e-9, "{} vs {}", r1.ratio, r3.ratio);
        let rinf = norm_ratio(&h, f64::INFINITY, floor, 2).unwrap();
        assert!(rinf.ratio.is_finite());
    }

    #[test]
    fn pointwise_fd_examples() {
        let f = Field::Linear { matrix: vec![vec![1.0, 0.0], vec![0.0, -1.0]] };
        let h = disk_handle(f, 5);
        // u = (x, −y) extended... inside Ω the restriction is exact and
        // linear: FD divergence is exactly 0 for the field itself
        let mut field_only = |p: &Pt| Ok::<_, ExtendError>(h.field.eval(p));
        let y = Pt::new(&[1.4, 0.2]);
        let d = pointwise_div_fd(&mut field_only, &h, &y, 1e-3).unwrap();
        assert!(d.abs() < 1e-12);
        // stencil crossing the boundary errors
        let near = Pt::new(&[1.0005, 0.0]);
        assert!(pointwise_div_fd(&mut field_only, &h, &near, 1e-2).is_err());
    }
}
