//! Smooth partition of unity subordinate to the blown-up exterior Whitney
//! cover: tensor-product exp-bumps normalized over the local covering set.

use crate::geom::Pt;
use crate::whitney::{LocateResult, WhitneyDoubleCover, BLOWUP};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("coverage hole at {0:?}: no bump covers this exterior point")]
    CoverageHole(Vec<f64>),
    #[error("point is not in the covered exterior")]
    NotExterior,
}

/// 1D profile b(t) = exp(−1/(1−t²)) on |t| < 1, else 0.
#[inline]
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// b'(t)/b(t) = −2t/(1−t²)², valid on |t| < 1.
#[inline]
fn bump_log_deriv(t: f64) -> f64 {
    let s = 1.0 - t * t;
    -2.0 * t / (s * s)
}

/// Raw bump values and gradients for the exterior cover's cubes.
#[derive(Clone, Debug)]
pub struct BumpFamily {
    cover: Arc<WhitneyDoubleCover>,
}

/// Values and analytic gradients of every φ over the covering set at a point.
pub struct LocalPartition {
    pub ids: Vec<u32>,
    pub phi: Vec<f64>,
    pub grad: Vec<Pt>,
}

impl BumpFamily {
    pub fn new(cover: Arc<WhitneyDoubleCover>) -> Self {
        BumpFamily { cover }
    }

    pub fn cover(&self) -> &Arc<WhitneyDoubleCover> {
        &self.cover
    }

    /// Unnormalized ψ_i(y) = ∏_d b((y_d − c_d)/(7ℓ/12)).
    pub fn eval_raw(&self, i: u32, y: &Pt) -> f64 {
        let n = self.cover.dim();
        let q = &self.cover.exterior.cubes[i as usize];
        let c = q.center(n);
        let h = 0.5 * BLOWUP * q.side();
        let mut v = 1.0;
        for d in 0..n {
            v *= bump((y[d] - c[d]) / h);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// (ψ_i, ∇ψ_i) with the analytic tensor-product derivative.
    pub fn eval_raw_grad(&self, i: u32, y: &Pt) -> (f64, Pt) {
        let n = self.cover.dim();
        let q = &self.cover.exterior.cubes[i as usize];
        let c = q.center(n);
        let h = 0.5 * BLOWUP * q.side();
        let mut v = 1.0;
        let mut logd = [0.0f64; 3];
        for d in 0..n {
            let t = (y[d] - c[d]) / h;
            let b = bump(t);
            if b == 0.0 {
                return (0.0, Pt::zero(n));
            }
            v *= b;
            logd[d] = bump_log_deriv(t) / h;
        }
        (v, Pt::from_fn(n, |d| v * logd[d]))
    }

    /// Partition values and gradients over the covering set at y.
    pub fn local(&self, y: &Pt) -> Result<LocalPartition, PartitionError> {
        match self.cover.locate(y) {
            LocateResult::Covered(ids) => self.local_for(ids, y),
            LocateResult::Hole => Err(PartitionError::CoverageHole(y.coords().to_vec())),
            _ => Err(PartitionError::NotExterior),
        }
    }

    fn local_for(&self, ids: Vec<u32>, y: &Pt) -> Result<LocalPartition, PartitionError> {
        let n = self.cover.dim();
        let mut psi = Vec::with_capacity(ids.len());
        let mut dpsi = Vec::with_capacity(ids.len());
        let mut total = 0.0;
        let mut dtotal = Pt::zero(n);
        for &i in &ids {
            let (v, g) = self.eval_raw_grad(i, y);
            total += v;
            dtotal = dtotal + g;
            psi.push(v);
            dpsi.push(g);
        }
        if total <= 0.0 {
            return Err(PartitionError::CoverageHole(y.coords().to_vec()));
        }
        let phi: Vec<f64> = psi.iter().map(|v| v / total).collect();
        let grad: Vec<Pt> = psi
            .iter()
            .zip(&dpsi)
            .map(|(v, g)| (*g - dtotal.scale(v / total)).scale(1.0 / total))
            .collect();
        Ok(LocalPartition { ids, phi, grad })
    }

    /// φ_i(y); zero off the covering set.
    pub fn eval(&self, i: u32, y: &Pt) -> Result<f64, PartitionError> {
        let lp = self.local(y)?;
        Ok(lp.ids.iter().position(|&j| j == i).map_or(0.0, |p| lp.phi[p]))
    }

    /// ∇φ_i(y); zero off the covering set.
    pub fn grad(&self, i: u32, y: &Pt) -> Result<Pt, PartitionError> {
        let lp = self.local(y)?;
        Ok(lp
            .ids
            .iter()
            .position(|&j| j == i)
            .map_or(Pt::zero(self.cover.dim()), |p| lp.grad[p]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, DomainDescriptor};
    use crate::whitney::WhitneyDoubleCover;

    fn family() -> BumpFamily {
        let domain = Arc::new(
            Domain::new(DomainDescriptor::Rectangle { min: vec![0.0, 0.0], max: vec![1.0, 1.0] })
                .unwrap(),
        );
        BumpFamily::new(Arc::new(WhitneyDoubleCover::build(domain, 7).unwrap()))
    }

    #[test]
    fn raw_profile_values() {
        let f = family();
        let n = 2;
        let q = &f.cover.exterior.cubes[0];
        let c = q.center(n);
        // center: b(0)^n = e^{-n}
        assert!((f.eval_raw(0, &c) - (-(n as f64)).exp()).abs() < 1e-15);
        // support boundary and outside: 0
        let h = 0.5 * BLOWUP * q.side();
        let mut edge = c;
        edge[0] += h;
        assert_eq!(f.eval_raw(0, &edge), 0.0);
        edge[0] += 0.3;
        assert_eq!(f.eval_raw(0, &edge), 0.0);
    }

    fn sample_covered_points(f: &BumpFamily, count: usize, seed: u64) -> Vec<Pt> {
        let mut state = seed;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut pts = Vec::new();
        while pts.len() < count {
            let y = Pt::new(&[rnd() * 4.0 - 1.5, rnd() * 4.0 - 1.5]);
            if matches!(f.cover.locate(&y), LocateResult::Covered(_)) {
                pts.push(y);
            }
        }
        pts
    }

    #[test]
    fn partition_sums_to_one_with_zero_gradient_sum() {
        let f = family();
        for y in sample_covered_points(&f, 500, 11) {
            let lp = f.local(&y).unwrap();
            let total: f64 = lp.phi.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "Σφ = {total}");
            let mut g = Pt::zero(2);
            for v in &lp.grad {
                g = g + *v;
            }
            assert!(g.norm() < 1e-10, "Σ∇φ = {g:?}");
            for v in &lp.phi {
                assert!(*v >= 0.0 && *v <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences_at_second_order() {
        let f = family();
        let pts = sample_covered_points(&f, 40, 5);
        for y in pts {
            let lp = f.local(&y).unwrap();
            let i = lp.ids[0];
            let l = f.cover.exterior.cubes[i as usize].side();
            let mut errs = Vec::new();
            for h in [1e-3 * l, 5e-4 * l, 2.5e-4 * l] {
                let mut err = 0.0f64;
                for d in 0..2 {
                    let mut yp = y;
                    yp[d] += h;
                    let mut ym = y;
                    ym[d] -= h;
                    let (fp, fm) = (f.eval(i, &yp).unwrap(), f.eval(i, &ym).unwrap());
                    let fd = (fp - fm) / (2.0 * h);
                    err = err.max((fd - lp.grad[0][d]).abs());
                }
                errs.push(err.max(1e-16));
            }
            // observed order ≥ 1.9 between successive halvings (skip points
            // where the error already sits at rounding level)
            if errs[0] > 1e-11 {
                let order1 = (errs[0] / errs[1]).log2();
                let order2 = (errs[1] / errs[2]).log2();
                assert!(
                    order1 > 1.9 || order2 > 1.9,
                    "orders {order1:.2}/{order2:.2}, errs {errs:?}"
                );
            }
        }
    }

    #[test]
    fn scaled_gradient_uniformly_bounded() {
        // (PU3): ℓ(Q_i)·‖∇φ_i‖∞ bounded by one constant across levels
        let f = family();
        let mut worst = 0.0f64;
        for y in sample_covered_points(&f, 2000, 77) {
            let lp = f.local(&y).unwrap();
            for (p, &i) in lp.ids.iter().enumerate() {
                let l = f.cover.exterior.cubes[i as usize].side();
                worst = worst.max(l * lp.grad[p].norm());
            }
        }
        assert!(worst < 60.0, "scaled gradient bound {worst}");
        assert!(worst > 0.0);
    }

    #[test]
    fn single_covering_cube_gives_constant_one() {
        let f = family();
        // find a point covered by exactly one blow-up
        for y in sample_covered_points(&f, 3000, 1234) {
            let lp = f.local(&y).unwrap();
            if lp.ids.len() == 1 {
                assert!((lp.phi[0] - 1.0).abs() < 1e-15);
                assert!(lp.grad[0].norm() < 1e-12);
                return;
            }
        }
        panic!("no singleton coverage point found");
    }

    #[test]
    fn hessian_scaling_sampled() {
        // (PU3) second-derivative bound, estimated by differencing ∇φ
        let f = family();
        let mut worst = 0.0f64;
        for y in sample_covered_points(&f, 200, 31) {
            let lp = f.local(&y).unwrap();
            for (p, &i) in lp.ids.iter().enumerate() {
                let l = f.cover.exterior.cubes[i as usize].side();
                let h = 1e-5 * l;
                for d in 0..2 {
                    let mut yp = y;
                    yp[d] += h;
                    let mut ym = y;
                    ym[d] -= h;
                    if let (Ok(gp), Ok(gm)) = (f.grad(i, &yp), f.grad(i, &ym)) {
                        let dd = (gp - gm).scale(1.0 / (2.0 * h));
                        worst = worst.max(l * l * dd.norm());
                        let _ = p;
                    }
                }
            }
        }
        // the exp-profile's curvature constant is a few thousand; the content
        // of (PU3) is that the scaled value does not grow with the level
        assert!(worst < 5e4, "scaled Hessian bound {worst}");
    }
}
