//! Cuspidal-domain computations: admissible exponent windows, boundary
//! fluxes with closed forms, and the divergent lower-bound integrals that
//! obstruct bounded solenoidal extension operators on Hölder cusps.

use super::quadgeo::line_panels;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CuspError {
    #[error("gamma must lie in (0,1), got {0}")]
    BadGamma(f64),
    #[error("parameters outside the admissible window: {0}")]
    OutsideWindow(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuspSide {
    Plus,
    Minus,
}

/// Parameters of one counterexample computation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CuspScenario {
    pub gamma: f64,
    pub alpha: f64,
    pub p: f64,
    pub side: CuspSide,
    pub dim: usize,
    /// flux-sign threshold η per the choice 2^{−1/((1−α)(γ−1))}
    pub eta: f64,
}

impl CuspScenario {
    pub fn new(gamma: f64, alpha: f64, p: f64, side: CuspSide, dim: usize) -> Result<Self, CuspError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(CuspError::BadGamma(gamma));
        }
        let eta = match side {
            CuspSide::Plus => (2.0f64).powf(-1.0 / ((1.0 - alpha) * (gamma - 1.0))).min(0.99),
            CuspSide::Minus => 0.5,
        };
        let s = CuspScenario { gamma, alpha, p, side, dim, eta };
        let w = exponent_window(gamma, dim, side)?;
        if !w.contains(alpha, p) {
            return Err(CuspError::OutsideWindow(format!(
                "alpha {} p {} not in {:?}",
                alpha, p, w
            )));
        }
        Ok(s)
    }

    /// Construct without the window check (for control cases).
    pub fn unchecked(gamma: f64, alpha: f64, p: f64, side: CuspSide, dim: usize) -> Self {
        let eta = match side {
            CuspSide::Plus => (2.0f64).powf(-1.0 / ((1.0 - alpha) * (gamma - 1.0))).min(0.99),
            CuspSide::Minus => 0.5,
        };
        CuspScenario { gamma, alpha, p, side, dim, eta }
    }

    /// The divergence-rate exponent of the lower-bound integrand.
    pub fn lower_bound_exponent(&self) -> f64 {
        match self.side {
            CuspSide::Plus => (1.0 - self.p) * self.gamma + self.p * (1.0 - self.alpha),
            CuspSide::Minus => {
                (self.dim as f64 - 1.0) * (1.0 - self.p) / self.gamma
                    + (1.0 - self.alpha) * self.p
            }
        }
    }
}

/// Admissible (α, p) windows for the two cusp sides.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentWindow {
    pub side: CuspSide,
    pub dim: usize,
    pub gamma: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    /// whether the window is nonempty
    pub nonempty: bool,
}

impl ExponentWindow {
    pub fn contains(&self, alpha: f64, p: f64) -> bool {
        // for the plus side the p-window depends on α; re-derive it here
        match self.side {
            CuspSide::Plus => {
                let p_lo = (self.gamma + 1.0) / (self.gamma - 1.0 + alpha);
                let p_hi = (self.gamma + 1.0) / (alpha * self.gamma);
                alpha > self.alpha_lo && alpha < self.alpha_hi && p > p_lo && p < p_hi
            }
            CuspSide::Minus => {
                alpha > 0.0 && alpha < 1.0 / p && p > self.p_lo && p < self.p_hi
            }
        }
    }
}

/// (a): 2 < α < (γ+1)/γ and (γ+1)/(γ−1+α) < p < (γ+1)/(αγ);
/// (b): p in (1 + 1/((n−1)/γ − 1), 1 + 1/(n−2)) and 0 < α < 1/p.
pub fn exponent_window(gamma: f64, dim: usize, side: CuspSide) -> Result<ExponentWindow, CuspError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CuspError::BadGamma(gamma));
    }
    match side {
        CuspSide::Plus => {
            let alpha_lo = 2.0;
            let alpha_hi = (gamma + 1.0) / gamma;
            // the widest p-range over admissible α (reported for orientation;
            // membership is re-checked per α)
            let p_lo = (gamma + 1.0) / (gamma - 1.0 + alpha_hi);
            let p_hi = (gamma + 1.0) / (alpha_lo * gamma);
            Ok(ExponentWindow {
                side,
                dim,
                gamma,
                alpha_lo,
                alpha_hi,
                p_lo,
                p_hi,
                nonempty: alpha_hi > alpha_lo,
            })
        }
        CuspSide::Minus => {
            let p_lo = 1.0 + 1.0 / ((dim as f64 - 1.0) / gamma - 1.0);
            let p_hi = if dim > 2 { 1.0 + 1.0 / (dim as f64 - 2.0) } else { f64::INFINITY };
            Ok(ExponentWindow {
                side,
                dim,
                gamma,
                alpha_lo: 0.0,
                alpha_hi: 1.0,
                p_lo,
                p_hi,
                nonempty: p_hi > p_lo,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CuspFlux {
    pub s: f64,
    pub closed_form: f64,
    pub quadrature: f64,
}

/// Flux of the counterexample field over ∂A_s ∩ Ω₊ (side = plus, n = 2) or
/// over ∂Z_r ∩ Ω₋ (side = minus). Closed form and quadrature are both
/// returned.
pub fn cusp_flux(sc: &CuspScenario, s: f64) -> CuspFlux {
    match sc.side {
        CuspSide::Plus => {
            // −∫_s^{s^γ} y^{−α} dy = (s^{γ(1−α)} − s^{1−α})/(α−1)
            let a = sc.alpha;
            let closed = (s.powf(sc.gamma * (1.0 - a)) - s.powf(1.0 - a)) / (a - 1.0);
            let quad: f64 = line_panels(s, s.powf(sc.gamma), 64, 8)
                .iter()
                .map(|(y, w)| -w * y.powf(-a))
                .sum();
            CuspFlux { s, closed_form: closed, quadrature: quad }
        }
        CuspSide::Minus => {
            // σ_{n−2} ∫_0^r t^{−α} dt = σ_{n−2} r^{1−α}/(1−α), α < 1;
            // σ_0 = 2 (two points), σ_1 = 2π
            let sigma = match sc.dim {
                2 => 2.0,
                3 => 2.0 * std::f64::consts::PI,
                _ => unreachable!(),
            };
            let a = sc.alpha;
            let closed = sigma * s.powf(1.0 - a) / (1.0 - a);
            // integrable singularity: substitute t = s·u^{1/(1−α)}
            let quad: f64 = line_panels(0.0, 1.0, 64, 8)
                .iter()
                .map(|(u, w)| {
                    let t = s * u.powf(1.0 / (1.0 - a));
                    let dt = s / (1.0 - a) * u.powf(1.0 / (1.0 - a) - 1.0);
                    w * sigma * t.powf(-a) * dt
                })
                .sum();
            CuspFlux { s, closed_form: closed, quadrature: quad }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    /// (ε, ∫_ε^η s^e ds) over decreasing ε
    pub partials: Vec<(f64, f64)>,
    pub exponent: f64,
    /// fitted growth rate of the partial integrals against 1/ε
    pub fitted_growth: f64,
    /// |e + 1| when e < −1, the predicted growth rate
    pub predicted_growth: f64,
    pub diverges: bool,
}

/// Partial integrals ∫_ε^η s^e ds with e = (1−p)γ + p(1−α) over a dyadic
/// ladder of ε, with a log–log growth fit.
pub fn cusp_lowerbound(sc: &CuspScenario, eps_floor: f64, levels: usize) -> LowerBoundReport {
    let e = sc.lower_bound_exponent();
    let eta = sc.eta;
    let mut partials = Vec::new();
    let mut eps = eta / 2.0;
    let mut total = 0.0;
    let mut level = 0;
    while eps >= eps_floor && level < levels {
        // quadrature over the dyadic slice [ε, 2ε]
        let slice: f64 = line_panels(eps, (2.0 * eps).min(eta), 16, 8)
            .iter()
            .map(|(s, w)| w * s.powf(e))
            .sum();
        total += slice;
        partials.push((eps, total));
        eps /= 2.0;
        level += 1;
    }
    // log-log regression of the partial integrals against 1/ε over the last
    // half of the ladder (asymptotic regime)
    let tail = &partials[partials.len() / 2..];
    let fitted_growth = if tail.len() >= 2 && e < -1.0 {
        let xs: Vec<f64> = tail.iter().map(|(eps, _)| (1.0 / eps).ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|(_, v)| v.ln()).collect();
        linear_slope(&xs, &ys)
    } else {
        0.0
    };
    LowerBoundReport {
        partials,
        exponent: e,
        fitted_growth,
        predicted_growth: if e < -1.0 { -(e + 1.0) } else { 0.0 },
        diverges: e < -1.0,
    }
}

fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_examples_gamma_half() {
        let w = exponent_window(0.5, 2, CuspSide::Plus).unwrap();
        assert!((w.alpha_lo - 2.0).abs() < 1e-15);
        assert!((w.alpha_hi - 3.0).abs() < 1e-15);
        // for α = 2.5: p ∈ (0.75, 1.2) ∋ 1
        assert!(w.contains(2.5, 1.0));
        assert!(!w.contains(2.5, 1.3));
        assert!(!w.contains(2.5, 0.7));
        // (1−p)γ + p(1−α) = −1.5 < −1 at p = 1, α = 2.5
        let sc = CuspScenario::new(0.5, 2.5, 1.0, CuspSide::Plus, 2).unwrap();
        assert!((sc.lower_bound_exponent() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn window_shrinks_as_gamma_grows() {
        // for p = 1 the α-window (max over α of validity) shrinks to empty
        // as γ → 1⁻
        let w1 = exponent_window(0.5, 2, CuspSide::Plus).unwrap();
        let w2 = exponent_window(0.9, 2, CuspSide::Plus).unwrap();
        let width = |w: &ExponentWindow| {
            let mut count = 0;
            for i in 0..100 {
                let alpha = 2.0 + (w.alpha_hi - 2.0) * (i as f64 + 0.5) / 100.0;
                if w.contains(alpha, 1.0) {
                    count += 1;
                }
            }
            count
        };
        assert!(width(&w2) < width(&w1));
        let w3 = exponent_window(0.99, 2, CuspSide::Plus).unwrap();
        assert!(width(&w3) <= width(&w2));
    }

    #[test]
    fn flux_example_and_quadrature_agreement() {
        let sc = CuspScenario::new(0.5, 2.5, 1.0, CuspSide::Plus, 2).unwrap();
        let f = cusp_flux(&sc, 0.01);
        // (10^{1.5} − 10³)/1.5 ≈ −645.58
        let expect = (10f64.powf(1.5) - 1000.0) / 1.5;
        assert!((f.closed_form - expect).abs() < 1e-9, "{} vs {expect}", f.closed_form);
        assert!((f.closed_form + 645.5848155988554).abs() < 1e-9);
        assert!((f.quadrature - f.closed_form).abs() < 1e-8 * f.closed_form.abs());
        // flux is negative (outflow) for s < η
        let mut s = 1e-4;
        while s < sc.eta {
            assert!(cusp_flux(&sc, s).closed_form < 0.0);
            s *= 3.7;
        }
    }

    #[test]
    fn minus_side_flux() {
        let sc = CuspScenario::new(0.5, 0.4, 2.2, CuspSide::Minus, 2).unwrap();
        let f = cusp_flux(&sc, 0.01);
        assert!((f.quadrature - f.closed_form).abs() < 1e-8 * f.closed_form.abs());
        // analytic check: 2·r^{0.6}/0.6
        assert!((f.closed_form - 2.0 * 0.01f64.powf(0.6) / 0.6).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_growth_and_doubling() {
        let sc = CuspScenario::new(0.5, 2.5, 1.0, CuspSide::Plus, 2).unwrap();
        let rep = cusp_lowerbound(&sc, 1e-8, 40);
        assert!(rep.diverges);
        assert!((rep.predicted_growth - 0.5).abs() < 1e-12);
        assert!(
            (rep.fitted_growth - 0.5).abs() < 0.01,
            "fitted {} vs 0.5",
            rep.fitted_growth
        );
        // doubling check I(ε/2)/I(ε) → 2^{0.5}
        let m = rep.partials.len();
        let ratio = rep.partials[m - 1].1 / rep.partials[m - 2].1;
        assert!((ratio - 2f64.sqrt()).abs() < 0.01, "ratio {ratio}");
        // monotone increasing
        for w in rep.partials.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn control_case_converges() {
        // α = 1.4, p = 1 sits outside the window: exponent −0.4 > −1
        let sc = CuspScenario::unchecked(0.5, 1.4, 1.0, CuspSide::Plus, 2);
        assert!(CuspScenario::new(0.5, 1.4, 1.0, CuspSide::Plus, 2).is_err());
        let rep = cusp_lowerbound(&sc, 1e-10, 50);
        assert!(!rep.diverges);
        let last = rep.partials.last().unwrap().1;
        let closed = (sc.eta.powf(0.6) - 0.0) / 0.6;
        assert!((last - closed).abs() < 1e-3 * closed, "{last} vs {closed}");
    }
}
