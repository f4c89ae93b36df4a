//! Whitney decompositions of the domain interior and of a bounded exterior
//! collar, the blow-up neighbor graph, and the matching map Ψ between the
//! two covers.
//!
//! Cubes are selected by the classical rule diam(Q) ≤ dist(Q, ∂Ω) ≤ 4·diam(Q)
//! on the integer-anchored dyadic grid, taking maximal qualifying cubes
//! top-down.

use crate::domain::Domain;
use crate::geom::{Aabb, Pt};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

/// Blow-up factor λ for supports: λQ with λ = 7/6.
pub const BLOWUP: f64 = 7.0 / 6.0;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("domain must be bounded with a valid bounding box")]
    Unbounded,
    #[error("resolution floor reached: {uncovered} region volume left uncovered at level {max_level} exceeds budget")]
    ResolutionFloor { uncovered: f64, max_level: i32 },
    #[error("matching map failed for cube {cube_id} (side {side}): {reason}")]
    MatchFailed { cube_id: u32, side: f64, reason: String },
    #[error("no interior cubes")]
    EmptyInterior,
}

/// A closed dyadic cube: side 2^{-level}, corner at index·2^{-level}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: i32,
    pub index: [i64; 3],
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        (-self.level as f64).exp2()
    }

    pub fn extent(&self, n: usize) -> Aabb {
        let l = self.side();
        Aabb::new(
            Pt::from_fn(n, |d| self.index[d] as f64 * l),
            Pt::from_fn(n, |d| (self.index[d] + 1) as f64 * l),
        )
    }

    pub fn center(&self, n: usize) -> Pt {
        let l = self.side();
        Pt::from_fn(n, |d| (self.index[d] as f64 + 0.5) * l)
    }

    /// The blown-up cube λQ (same center, λ times the side).
    pub fn blowup(&self, n: usize, lambda: f64) -> Aabb {
        let l = self.side();
        let c = self.center(n);
        let h = 0.5 * lambda * l;
        Aabb::new(Pt::from_fn(n, |d| c[d] - h), Pt::from_fn(n, |d| c[d] + h))
    }

    pub fn diam(&self, n: usize) -> f64 {
        self.side() * (n as f64).sqrt()
    }

    fn children(&self, n: usize) -> Vec<DyadicCube> {
        (0..1usize << n)
            .map(|mask| {
                let mut index = [0i64; 3];
                for d in 0..n {
                    index[d] = 2 * self.index[d] + (mask as i64 >> d & 1);
                }
                DyadicCube { level: self.level + 1, index }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverSide {
    Interior,
    Exterior,
}

/// One side of the double cover with dyadic hash lookup per level.
#[derive(Clone, Debug)]
pub struct Cover {
    n: usize,
    pub cubes: Vec<DyadicCube>,
    pub dist_boundary: Vec<f64>,
    levels: Vec<i32>,
    by_level: HashMap<i32, HashMap<[i64; 3], u32>>,
    /// volume skipped at the resolution floor (upper bound)
    pub deficit_volume: f64,
}

impl Cover {
    fn from_cubes(n: usize, mut cubes: Vec<(DyadicCube, f64)>, deficit: f64) -> Cover {
        cubes.sort_by_key(|(c, _)| *c);
        let dist_boundary = cubes.iter().map(|(_, d)| *d).collect();
        let cubes: Vec<DyadicCube> = cubes.into_iter().map(|(c, _)| c).collect();
        let mut by_level: HashMap<i32, HashMap<[i64; 3], u32>> = HashMap::new();
        for (i, c) in cubes.iter().enumerate() {
            by_level.entry(c.level).or_default().insert(c.index, i as u32);
        }
        let mut levels: Vec<i32> = by_level.keys().copied().collect();
        levels.sort();
        Cover { n, cubes, dist_boundary, levels, by_level, deficit_volume: deficit }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Ids of cubes whose blow-up λQ contains y (closed membership).
    pub fn locate_blowups(&self, y: &Pt, lambda: f64) -> Vec<u32> {
        let mut out = Vec::new();
        let margin = lambda / 2.0;
        for &level in &self.levels {
            let map = &self.by_level[&level];
            let l = (-level as f64).exp2();
            let mut ranges = [(0i64, -1i64); 3];
            for (d, r) in ranges.iter_mut().enumerate().take(self.n) {
                let s = y[d] / l - 0.5;
                *r = (((s - margin).ceil() as i64), ((s + margin).floor() as i64));
            }
            let mut idx = [0i64; 3];
            enumerate_ranges(&ranges[..self.n], &mut idx, 0, &mut |index| {
                if let Some(&id) = map.get(index) {
                    let c = self.cubes[id as usize].center(self.n);
                    let h = margin * l;
                    if (0..self.n).all(|d| (y[d] - c[d]).abs() <= h) {
                        out.push(id);
                    }
                }
            });
        }
        out.sort();
        out
    }

    /// Ids of cubes containing y (closed cubes, so faces may yield several).
    pub fn locate_cubes(&self, y: &Pt) -> Vec<u32> {
        self.locate_blowups(y, 1.0)
    }

    /// Nearest cube center among cubes with level in [lo, hi]; deterministic
    /// tie-break by (level, index).
    fn nearest_center_in_levels(&self, y: &Pt, lo: i32, hi: i32) -> Option<u32> {
        let mut best: Option<(f64, u32)> = None;
        for &level in &self.levels {
            if level < lo || level > hi {
                continue;
            }
            let map = &self.by_level[&level];
            let l = (-level as f64).exp2();
            // expanding ring search in cell units
            let base: Vec<i64> = (0..self.n).map(|d| (y[d] / l).floor() as i64).collect();
            let mut radius = 0i64;
            let mut found_at: Option<i64> = None;
            while radius < 1 << 24 {
                let mut hit = false;
                let mut ranges = [(0i64, -1i64); 3];
                for d in 0..self.n {
                    ranges[d] = (base[d] - radius, base[d] + radius);
                }
                let mut idx = [0i64; 3];
                enumerate_ranges(&ranges[..self.n], &mut idx, 0, &mut |index| {
                    // only the ring shell
                    if (0..self.n).all(|d| (index[d] - base[d]).abs() < radius) {
                        return;
                    }
                    if let Some(&id) = map.get(index) {
                        hit = true;
                        let d = self.cubes[id as usize].center(self.n).dist(y);
                        if best.map_or(true, |(bd, bi)| {
                            d < bd - 1e-12
                                || (d < bd + 1e-12
                                    && self.cubes[id as usize] < self.cubes[bi as usize])
                        }) {
                            best = Some((d, id));
                        }
                    }
                });
                if hit && found_at.is_none() {
                    found_at = Some(radius);
                }
                // one extra ring after the first hit to be safe on diagonals
                if let Some(f) = found_at {
                    if radius >= f + 1 {
                        break;
                    }
                }
                radius += 1;
            }
        }
        best.map(|(_, id)| id)
    }
}

fn enumerate_ranges(
    ranges: &[(i64, i64)],
    idx: &mut [i64; 3],
    d: usize,
    f: &mut impl FnMut(&[i64; 3]),
) {
    if d == ranges.len() {
        f(idx);
        return;
    }
    let (lo, hi) = ranges[d];
    for v in lo..=hi {
        idx[d] = v;
        enumerate_ranges(ranges, idx, d + 1, f);
    }
}

/// Constants observed on a built double cover.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CoverReport {
    pub interior_count: usize,
    pub exterior_count: usize,
    /// (W3): max of max(ℓ/dist, dist/ℓ) over both covers
    pub w3_c: f64,
    /// max blow-up neighbor count over exterior cubes
    pub neighbor_max: usize,
    /// (J3): max dist(Q, Ψ(Q))/ℓ(Q)
    pub j3_c: f64,
    /// (J4): max of ratio and inverse ratio of dist(Ψ(Q),∂Ω)/ℓ(Q)
    pub j4_c: f64,
    /// (J5): max of ratio and inverse ratio of dist(Q,Ψ(Q))/ℓ(Q), ℓ(Q) ≤ η
    pub j5_c: f64,
    pub eta: f64,
    pub theta: f64,
    pub coverage_deficit: f64,
    pub retargeted: usize,
}

/// Interior cover W₁ of Ω, exterior cover W₂ of a bounded collar of the
/// complement, neighbor graph, matching map Ψ, threshold η and anchor Q₀.
#[derive(Clone, Debug)]
pub struct WhitneyDoubleCover {
    pub domain: Arc<Domain>,
    pub interior: Cover,
    pub exterior: Cover,
    /// exterior id → interior id
    pub psi: Vec<u32>,
    /// exterior ids mapped to the anchor because ℓ(Q) > η
    pub to_anchor: Vec<bool>,
    pub anchor: u32,
    pub eta: f64,
    /// blow-up intersection neighbor lists over the exterior cover
    pub neighbors: Vec<Vec<u32>>,
    pub report: CoverReport,
    pub max_level: i32,
    /// exterior truncation box
    pub region: Aabb,
}

/// Build one Whitney cover (exposed for tests; `WhitneyDoubleCover::build`
/// is the main entry point).
pub fn build_cover(
    domain: &Domain,
    side: CoverSide,
    region: &Aabb,
    max_level: i32,
) -> Result<Cover, CoverError> {
    let n = domain.dim();
    let extent = (0..n).map(|d| region.max[d] - region.min[d]).fold(0.0f64, f64::max);
    if !extent.is_finite() || extent <= 0.0 {
        return Err(CoverError::Unbounded);
    }
    let root_level = -(extent.log2().ceil() as i32);
    let l = (-root_level as f64).exp2();
    let mut cubes = Vec::new();
    let mut deficit = 0.0;
    let mut ranges = [(0i64, -1i64); 3];
    for d in 0..n {
        ranges[d] = ((region.min[d] / l).floor() as i64, (region.max[d] / l).floor() as i64);
    }
    let mut idx = [0i64; 3];
    let mut roots = Vec::new();
    enumerate_ranges(&ranges[..n], &mut idx, 0, &mut |index| {
        roots.push(DyadicCube { level: root_level, index: *index });
    });
    for root in roots {
        refine(domain, side, region, max_level, root, &mut cubes, &mut deficit);
    }
    Ok(Cover::from_cubes(n, cubes, deficit))
}

fn refine(
    domain: &Domain,
    side: CoverSide,
    region: &Aabb,
    max_level: i32,
    cube: DyadicCube,
    out: &mut Vec<(DyadicCube, f64)>,
    deficit: &mut f64,
) {
    let n = domain.dim();
    let ext = cube.extent(n);
    if ext.dist_to_box(region) > 0.0 {
        return;
    }
    let d = domain.cube_boundary_distance(&ext);
    let center_inside = domain.contains(&ext.center());
    let right_side = match side {
        CoverSide::Interior => center_inside,
        CoverSide::Exterior => !center_inside,
    };
    if d > 0.0 {
        if !right_side {
            return;
        }
        let diam = cube.diam(n);
        if d >= diam && d <= 4.0 * diam {
            out.push((cube, d));
            return;
        }
        if d > 4.0 * diam {
            // no descendant can qualify either; this region stays uncovered
            *deficit += ext_volume(&ext, n);
            return;
        }
    }
    if cube.level >= max_level {
        if d > 0.0 && right_side || d == 0.0 {
            *deficit += ext_volume(&ext, n);
        }
        return;
    }
    for child in cube.children(n) {
        refine(domain, side, region, max_level, child, out, deficit);
    }
}

fn ext_volume(b: &Aabb, n: usize) -> f64 {
    (0..n).map(|d| b.max[d] - b.min[d]).product()
}

impl WhitneyDoubleCover {
    pub fn build(domain: Arc<Domain>, max_level: i32) -> Result<Self, CoverError> {
        let n = domain.dim();
        let interior = build_cover(&domain, CoverSide::Interior, &domain.bounding_box(), max_level)?;
        if interior.is_empty() {
            return Err(CoverError::EmptyInterior);
        }
        // anchor: maximal interior cube, lowest (level, index) among ties
        let anchor = (0..interior.len() as u32)
            .min_by_key(|&i| interior.cubes[i as usize])
            .unwrap();
        let l_max = interior.cubes[anchor as usize].side();
        // a-priori caps fixing the exterior truncation box
        let sqrt_n = (n as f64).sqrt();
        let mut eta_cap = 4.0 * l_max;
        if let Some(collar) = domain.collar_halfwidth() {
            // reflected targets must stay inside the projection collar
            eta_cap = eta_cap.min(collar / (2.0 * (4.0 * sqrt_n + 1.0)));
        }
        let theta_cap = support_radius_formula(eta_cap, 4.0 * sqrt_n + 1.0, n);
        let region = domain.bounding_box().inflate(1.25 * theta_cap + 4.0 * l_max);
        let exterior = build_cover(&domain, CoverSide::Exterior, &region, max_level)?;

        // reflection attempt for every exterior cube
        let mut target: Vec<Option<u32>> = vec![None; exterior.len()];
        for (i, cube) in exterior.cubes.iter().enumerate() {
            target[i] = reflect_target(&domain, &interior, cube, n);
        }
        // η := largest side s such that every exterior cube with ℓ ≤ s has a
        // reflected target (cubes above η are matched to the anchor, (J1))
        let mut sides: Vec<f64> = exterior.cubes.iter().map(|c| c.side()).collect();
        sides.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sides.dedup();
        let mut eta = 0.0f64;
        for &s in &sides {
            let ok = exterior
                .cubes
                .iter()
                .enumerate()
                .filter(|(_, c)| c.side() <= s)
                .all(|(i, _)| target[i].is_some());
            if ok {
                eta = s;
            } else {
                break;
            }
        }
        if eta == 0.0 {
            let bad = exterior
                .cubes
                .iter()
                .enumerate()
                .find(|(i, _)| target[*i].is_none())
                .map(|(i, _)| i as u32)
                .unwrap_or(0);
            return Err(CoverError::MatchFailed {
                cube_id: bad,
                side: exterior.cubes[bad as usize].side(),
                reason: "no interior cube passes the (J2) size filter near the reflected point"
                    .into(),
            });
        }
        eta = eta.min(eta_cap);
        let mut psi = vec![anchor; exterior.len()];
        let mut to_anchor = vec![true; exterior.len()];
        for i in 0..exterior.len() {
            if exterior.cubes[i].side() <= eta {
                psi[i] = target[i].expect("targets exist at or below eta");
                to_anchor[i] = false;
            }
        }

        // neighbor graph over blow-ups; cover cubes near one another differ
        // by at most 3 dyadic levels (see the (W3) band argument)
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); exterior.len()];
        for (i, cube) in exterior.cubes.iter().enumerate() {
            let bi = cube.blowup(n, BLOWUP);
            for dl in -3i32..=3 {
                let level = cube.level + dl;
                let Some(map) = exterior.by_level.get(&level) else { continue };
                let l = (-level as f64).exp2();
                let pad = 0.5 * BLOWUP * l;
                let mut ranges = [(0i64, -1i64); 3];
                for d in 0..n {
                    ranges[d] = (
                        ((bi.min[d] - pad) / l - 0.5).ceil() as i64,
                        ((bi.max[d] + pad) / l - 0.5).floor() as i64,
                    );
                }
                let mut idx = [0i64; 3];
                enumerate_ranges(&ranges[..n], &mut idx, 0, &mut |index| {
                    if let Some(&j) = map.get(index) {
                        let bj = exterior.cubes[j as usize].blowup(n, BLOWUP);
                        if bi.dist_to_box(&bj) <= 0.0 {
                            neighbors[i].push(j);
                        }
                    }
                });
            }
            neighbors[i].sort();
            neighbors[i].dedup();
        }

        // observed constants
        let mut w3_c = 0.0f64;
        for (cubes, dists) in [
            (&interior.cubes, &interior.dist_boundary),
            (&exterior.cubes, &exterior.dist_boundary),
        ] {
            for (c, d) in cubes.iter().zip(dists) {
                let l = c.side();
                w3_c = w3_c.max(d / l).max(l / d);
            }
        }
        let neighbor_max = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        let mut j3_c = 0.0f64;
        let mut j4_c = 0.0f64;
        let mut j5_c = 0.0f64;
        for (i, cube) in exterior.cubes.iter().enumerate() {
            let l = cube.side();
            let qi = cube.extent(n);
            let qt = interior.cubes[psi[i] as usize].extent(n);
            let dpsi = qi.dist_to_box(&qt);
            j3_c = j3_c.max(dpsi / l);
            let dpb = interior.dist_boundary[psi[i] as usize];
            j4_c = j4_c.max(dpb / l).max(l / dpb);
            if !to_anchor[i] {
                j5_c = j5_c.max(dpsi / l).max(l / dpsi.max(1e-300));
            }
        }
        let theta = support_radius_formula(eta, w3_c, n);
        let report = CoverReport {
            interior_count: interior.len(),
            exterior_count: exterior.len(),
            w3_c,
            neighbor_max,
            j3_c,
            j4_c,
            j5_c,
            eta,
            theta,
            coverage_deficit: interior.deficit_volume + exterior.deficit_volume,
            retargeted: 0,
        };
        Ok(WhitneyDoubleCover {
            domain,
            interior,
            exterior,
            psi,
            to_anchor,
            anchor,
            eta,
            neighbors,
            report,
            max_level,
            region,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Status of a point with respect to the exterior cover.
    pub fn locate(&self, y: &Pt) -> LocateResult {
        if self.domain.signed_distance(y) >= 0.0 {
            return LocateResult::Interior;
        }
        if !self.region.contains(y) {
            return LocateResult::OutsideRegion;
        }
        let ids = self.exterior.locate_blowups(y, BLOWUP);
        if ids.is_empty() {
            LocateResult::Hole
        } else {
            LocateResult::Covered(ids)
        }
    }

    /// The half-cube Q̃ = ½Ψ(Q_i) carrying the measure μ^i.
    pub fn mu_support(&self, exterior_id: u32) -> Aabb {
        let q = self.interior.cubes[self.psi[exterior_id as usize] as usize];
        half_cube(&q, self.dim())
    }

    /// Support radius θ = 2η(13√n/12 + c) with the cover's observed (W3)
    /// constant.
    pub fn theta(&self) -> f64 {
        self.report.theta
    }

    /// CSV dump: side, level, index coordinates, side length, boundary
    /// distance, Ψ target id (interior rows: empty).
    pub fn dump_csv(&self) -> String {
        let n = self.dim();
        let mut s = String::new();
        let idx_cols = ["i0", "i1", "i2"][..n].join(",");
        let _ = writeln!(s, "side,level,{idx_cols},len,dist_to_boundary,psi_target_id");
        for (i, c) in self.interior.cubes.iter().enumerate() {
            let idx = c.index[..n].iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(
                s,
                "I,{},{},{},{},",
                c.level,
                idx,
                c.side(),
                self.interior.dist_boundary[i]
            );
        }
        for (i, c) in self.exterior.cubes.iter().enumerate() {
            let idx = c.index[..n].iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(
                s,
                "E,{},{},{},{},{}",
                c.level,
                idx,
                c.side(),
                self.exterior.dist_boundary[i],
                self.psi[i]
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LocateResult {
    Interior,
    OutsideRegion,
    Hole,
    Covered(Vec<u32>),
}

impl LocateResult {
    pub fn covered(&self) -> Option<&[u32]> {
        match self {
            LocateResult::Covered(ids) => Some(ids),
            _ => None,
        }
    }
}

pub fn half_cube(q: &DyadicCube, n: usize) -> Aabb {
    let c = q.center(n);
    let h = q.side() / 4.0;
    Aabb::new(Pt::from_fn(n, |d| c[d] - h), Pt::from_fn(n, |d| c[d] + h))
}

/// True when y keeps a relative margin from the support boundary of every
/// covering bump: |y_d − c_d| ≤ (1−margin)·(7ℓ/12) for all covering cubes.
/// Finite-difference studies need this; the exp-profiles are C^∞ but their
/// derivatives blow up in a thin layer along the support edges.
pub fn well_inside_supports(cover: &WhitneyDoubleCover, y: &Pt, margin: f64) -> bool {
    let n = cover.dim();
    match cover.locate(y) {
        LocateResult::Covered(ids) => ids.iter().all(|&i| {
            let q = &cover.exterior.cubes[i as usize];
            let c = q.center(n);
            let h = 0.5 * BLOWUP * q.side();
            (0..n).all(|d| (y[d] - c[d]).abs() <= (1.0 - margin) * h)
        }),
        _ => false,
    }
}

/// θ = 2η(13√n/12 + c), the compact-support radius.
pub fn support_radius_formula(eta: f64, c: f64, n: usize) -> f64 {
    2.0 * eta * (13.0 * (n as f64).sqrt() / 12.0 + c)
}

/// Reflected matching target: the interior cube nearest (by center) to the
/// doubled-depth inward point, subject to the (J2) size filter.
fn reflect_target(domain: &Domain, interior: &Cover, cube: &DyadicCube, n: usize) -> Option<u32> {
    let p = cube.center(n);
    let xstar = domain.boundary_projection(&p).ok()?;
    let dir = xstar - p;
    let dist = dir.norm();
    if dist == 0.0 {
        return None;
    }
    let m = xstar + dir.scale(2.0);
    // (J2): ¼ℓ(Q) ≤ ℓ(Ψ(Q)) ≤ 4ℓ(Q) ⇔ levels within ±2
    let id = interior.nearest_center_in_levels(&m, cube.level - 2, cube.level + 2)?;
    Some(id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainDescriptor;

    fn square() -> Arc<Domain> {
        Arc::new(
            Domain::new(DomainDescriptor::Rectangle { min: vec![0.0, 0.0], max: vec![1.0, 1.0] })
                .unwrap(),
        )
    }

    fn disk() -> Arc<Domain> {
        Arc::new(Domain::new(DomainDescriptor::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap())
    }

    #[test]
    fn whitney_rule_example_arithmetic() {
        // The rule on the cube [3/8,5/8]² in (0,1)²: diam = √2/4, dist = 0.375
        let diam = (2.0f64).sqrt() / 4.0;
        let dist = 0.375;
        assert!(diam <= dist && dist <= 4.0 * diam);
    }

    #[test]
    fn w_properties_hold_cube_by_cube() {
        for domain in [square(), disk()] {
            let dc = WhitneyDoubleCover::build(domain.clone(), 7).unwrap();
            let n = 2;
            let c_bound = 4.0 * (n as f64).sqrt() + 1.0;
            for (cover, side) in [(&dc.interior, CoverSide::Interior), (&dc.exterior, CoverSide::Exterior)] {
                for (i, cube) in cover.cubes.iter().enumerate() {
                    let l = cube.side();
                    let d = cover.dist_boundary[i];
                    // (W3) with c = 4√n + 1
                    assert!(d >= l / c_bound - 1e-12, "W3 lower: {d} vs {l}");
                    assert!(d <= c_bound * l + 1e-12, "W3 upper: {d} vs {l}");
                    // (W1): blow-up stays strictly on its side
                    let blow = cube.blowup(n, BLOWUP);
                    let bd = domain.cube_boundary_distance(&blow);
                    assert!(bd > 0.0, "blow-up crosses the boundary ({side:?})");
                }
            }
            // interior cubes have pairwise disjoint interiors: dyadic cubes
            // of the same cover may only overlap if one contains the other
            for (i, a) in dc.interior.cubes.iter().enumerate() {
                for b in dc.interior.cubes.iter().skip(i + 1) {
                    if a.level == b.level {
                        assert_ne!(a.index, b.index);
                    } else {
                        let (coarse, fine) = if a.level < b.level { (a, b) } else { (b, a) };
                        let shift = fine.level - coarse.level;
                        let contained = (0..n)
                            .all(|d| fine.index[d] >> shift == coarse.index[d]);
                        assert!(!contained, "nested cubes in one cover");
                    }
                }
            }
        }
    }

    #[test]
    fn locate_agrees_with_brute_force() {
        let dc = WhitneyDoubleCover::build(square(), 6).unwrap();
        let mut state = 99u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut covered = 0;
        for _ in 0..3000 {
            let y = Pt::new(&[rnd() * 6.0 - 2.5, rnd() * 6.0 - 2.5]);
            let fast = dc.exterior.locate_blowups(&y, BLOWUP);
            let slow: Vec<u32> = (0..dc.exterior.len() as u32)
                .filter(|&i| {
                    let b = dc.exterior.cubes[i as usize].blowup(2, BLOWUP);
                    b.contains(&y)
                })
                .collect();
            assert_eq!(fast, slow, "at {y:?}");
            if !fast.is_empty() {
                covered += 1;
            }
        }
        assert!(covered > 1000);
    }

    #[test]
    fn neighbor_graph_symmetric_reflexive_bounded() {
        let dc = WhitneyDoubleCover::build(disk(), 6).unwrap();
        for (i, ns) in dc.neighbors.iter().enumerate() {
            assert!(ns.contains(&(i as u32)), "i ∈ N(i)");
            for &j in ns {
                assert!(dc.neighbors[j as usize].contains(&(i as u32)), "symmetry");
            }
        }
        // observed overlap bound N(2) ≤ 12: max blow-ups covering any point
        let mut state = 7u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut max_over = 0;
        for _ in 0..10000 {
            let y = Pt::new(&[rnd() * 5.0 - 2.5, rnd() * 5.0 - 2.5]);
            let ids = dc.exterior.locate_blowups(&y, BLOWUP);
            max_over = max_over.max(ids.len());
        }
        assert!(max_over <= 12, "overlap {max_over} exceeds N(2) = 12");
    }

    #[test]
    fn j_properties() {
        for domain in [square(), disk()] {
            let dc = WhitneyDoubleCover::build(domain, 7).unwrap();
            let n = 2;
            for (i, cube) in dc.exterior.cubes.iter().enumerate() {
                let l = cube.side();
                let t = dc.psi[i];
                if l > dc.eta {
                    // (J1)
                    assert_eq!(t, dc.anchor);
                } else {
                    // (J2)
                    let lt = dc.interior.cubes[t as usize].side();
                    assert!(lt >= l / 4.0 - 1e-15 && lt <= 4.0 * l + 1e-15);
                    // (J5) lower bound comes for free: Ψ(Q) ⊂ Ω
                    let d = cube.extent(n).dist_to_box(&dc.interior.cubes[t as usize].extent(n));
                    assert!(d >= dc.exterior.dist_boundary[i] - 1e-12);
                }
            }
            // (J3)-(J5) constants are finite and reported
            assert!(dc.report.j3_c.is_finite());
            assert!(dc.report.j4_c.is_finite());
            assert!(dc.report.j5_c.is_finite());
        }
    }

    #[test]
    fn exterior_coverage_no_gaps_above_floor() {
        let dc = WhitneyDoubleCover::build(square(), 8).unwrap();
        // random points in the collar, away from the resolution-floor sliver
        let floor = 2.0f64.powi(-8) * dc.report.w3_c * 1.5;
        let mut state = 2024u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let theta = dc.theta();
        let mut tested = 0;
        for _ in 0..20000 {
            let y = Pt::new(&[rnd() * 4.0 - 1.5, rnd() * 4.0 - 1.5]);
            let sd = dc.domain.signed_distance(&y);
            if sd < -floor && -sd < theta {
                tested += 1;
                match dc.locate(&y) {
                    LocateResult::Covered(_) => {}
                    r => panic!("uncovered exterior point {y:?} at sd {sd}: {r:?}"),
                }
            }
        }
        assert!(tested > 3000);
    }

    #[test]
    fn csv_dump_shape_and_determinism() {
        let a = WhitneyDoubleCover::build(square(), 5).unwrap();
        let b = WhitneyDoubleCover::build(square(), 5).unwrap();
        let ca = a.dump_csv();
        assert_eq!(ca, b.dump_csv());
        let header = ca.lines().next().unwrap();
        assert_eq!(header, "side,level,i0,i1,len,dist_to_boundary,psi_target_id");
        assert_eq!(ca.lines().count(), 1 + a.interior.len() + a.exterior.len());
    }

    #[test]
    fn anchor_is_maximal_interior_cube() {
        let dc = WhitneyDoubleCover::build(square(), 6).unwrap();
        let lmax = dc.interior.cubes.iter().map(|c| c.side()).fold(0.0f64, f64::max);
        assert_eq!(dc.interior.cubes[dc.anchor as usize].side(), lmax);
    }
}

