//! Point evaluation of the L¹ divergence-free extension: restriction inside
//! the domain, zero past the support radius, and in between the locally
//! finite sum over multi-indices of partition wedges times cached simplex
//! flux functionals.

use super::{ExtendError, ExtensionHandle, Region, SimplexVariant};
use crate::exterior::{pair, simplex_normal, vec_to_form, KForm};
use crate::geom::{Aabb, Pt};
use crate::quadrature::integrate_product;
use crate::whitney::LocateResult;

impl ExtensionHandle {
    /// The simplex flux functional a_I for an ordered multi-index of
    /// exterior cube ids: the μ^I-average of the simplex flux of u with the
    /// normal ν(x_I), with degenerate simplices contributing zero.
    pub fn simplex_functional(&self, index: &[u32]) -> Result<f64, ExtendError> {
        let n = self.dim();
        debug_assert_eq!(index.len(), n);
        let mut key = [u32::MAX; 3];
        key[..n].copy_from_slice(index);
        if let Some(v) = self.cached_functional(key) {
            return Ok(v);
        }
        let cubes: Vec<Aabb> = index.iter().map(|&i| self.cover.mu_support(i)).collect();
        let field = self.field.clone();
        let mut err: Option<ExtendError> = None;
        let value = match self.variant {
            SimplexVariant::Flat => integrate_product(
                &self.cube_rule,
                &cubes,
                self.config.quad.tensor_budget,
                self.mc_mode(),
                |xs| {
                    let nu = simplex_normal(xs);
                    if is_degenerate(xs, nu.norm()) {
                        return 0.0;
                    }
                    self.flux_rule
                        .average(xs, |z| pair(&vec_to_form(&field.eval(z)), &nu).unwrap())
                },
            )?
            .value,
            SimplexVariant::Curvilinear => {
                let r = integrate_product(
                    &self.cube_rule,
                    &cubes,
                    self.config.quad.tensor_budget,
                    self.mc_mode(),
                    |xs| {
                        let nu = simplex_normal(xs);
                        if is_degenerate(xs, nu.norm()) {
                            return 0.0;
                        }
                        match self.simplex_for(xs) {
                            Ok(Some(map)) => {
                                // flux with Def-5.2 orientation: the frame
                                // wedge equals σ_k·k!·ν on flat simplices
                                let k = n - 1;
                                let sigma = frame_orientation_sign(k);
                                let mut acc = 0.0;
                                for (bary, w) in &self.flux_rule.points {
                                    let t = &bary[1..];
                                    let z = map.eval(t);
                                    let fw = map.surface_normal_element(t);
                                    acc += w * pair(&vec_to_form(&field.eval(&z)), &fw).unwrap();
                                }
                                sigma * acc / factorial(k)
                            }
                            Ok(None) => 0.0,
                            Err(e) => {
                                if err.is_none() {
                                    err = Some(e);
                                }
                                0.0
                            }
                        }
                    },
                )?;
                if let Some(e) = err {
                    return Err(e);
                }
                r.value
            }
        };
        self.store_functional(key, value);
        Ok(value)
    }

    /// Evaluate the extension at a point.
    pub fn evaluate(&self, y: &Pt) -> Result<Pt, ExtendError> {
        Ok(self.evaluate_with_region(y)?.1)
    }

    pub fn evaluate_with_region(&self, y: &Pt) -> Result<(Region, Pt), ExtendError> {
        let n = self.dim();
        let sd = self.domain.signed_distance(y);
        if sd >= 0.0 {
            return Ok((Region::Interior, self.field.eval(y)));
        }
        if -sd > self.support_radius() {
            return Ok((Region::Zero, Pt::zero(n)));
        }
        let ids = match self.cover.locate(y) {
            LocateResult::Covered(ids) => ids,
            _ => return Err(ExtendError::CoverageHole(y.coords().to_vec())),
        };
        let lp = self.bumps.local(y)?;
        debug_assert_eq!(lp.ids, ids);
        let mut total = KForm::zero(n, n - 1);
        let mut index = vec![0u32; n];
        let m = ids.len();
        let mut pos = vec![0usize; n];
        loop {
            // wedge φ_{i_n} ∧ dφ_{i_{n−1}} ∧ … ∧ dφ_{i_1}
            for (slot, &p) in pos.iter().enumerate() {
                index[slot] = ids[p];
            }
            let phi_n = lp.phi[pos[n - 1]];
            if phi_n != 0.0 {
                let mut w = KForm::scalar(n, phi_n);
                let mut vanished = false;
                for slot in (0..n - 1).rev() {
                    let g = &lp.grad[pos[slot]];
                    if g.norm() == 0.0 {
                        vanished = true;
                        break;
                    }
                    w = w.wedge(&KForm::from_components(n, 1, g.coords())).unwrap();
                }
                if !vanished && w.norm() != 0.0 {
                    let a = self.simplex_functional(&index)?;
                    if a != 0.0 {
                        total.add_assign(&w.scale(a));
                    }
                }
            }
            // odometer over pos
            let mut slot = 0;
            loop {
                if slot == n {
                    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
                    return Ok((Region::Exterior, crate::exterior::form_to_vec(&total.scale(sign))));
                }
                pos[slot] += 1;
                if pos[slot] < m {
                    break;
                }
                pos[slot] = 0;
                slot += 1;
            }
        }
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Sign relating the base-vertex frame wedge (x₁−x₀)∧…∧(x_k−x₀) to k!·ν.
pub(crate) fn frame_orientation_sign(k: usize) -> f64 {
    if (k * (k - 1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn is_degenerate(points: &[Pt], nu_norm: f64) -> bool {
    let mut sep = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sep = sep.max(points[i].dist(&points[j]));
        }
    }
    nu_norm <= crate::domain::DEGENERACY_REL_TOL * sep.powi(points.len() as i32 - 1)
}
