//! Quadrature: tensor Gauss rules on cubes (the normalized measures μ̄ and
//! their products μ^I), symmetric rules on simplices, and a seeded Monte
//! Carlo fallback for large tensor products.

use crate::domain::SimplexMap;
use crate::geom::{Aabb, Pt};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("tensor product budget exceeded ({actual} > {budget}) and Monte Carlo disabled")]
    BudgetExceeded { actual: usize, budget: usize },
    #[error("unsupported rule parameter: {0}")]
    Unsupported(String),
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1 && m <= 64);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_m and P_m' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            dp = m as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // recompute p0 for the weight at the converged x
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor Gauss rule with q nodes per axis, producing a *normalized* rule:
/// weights sum to 1, so `integrate` returns the average over the box (the
/// measure μ̄ restricted to the box is a probability measure).
#[derive(Clone, Debug)]
pub struct CubeRule {
    pub order: usize,
    nodes1: Vec<f64>,
    weights1: Vec<f64>,
}

impl CubeRule {
    pub fn new(order: usize) -> Self {
        let (n, w) = gauss_legendre(order);
        // map to [0,1] with weights summing to 1
        let nodes1 = n.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights1 = w.iter().map(|w| 0.5 * w).collect();
        CubeRule { order, nodes1, weights1 }
    }

    /// Nodes and weights on an axis-aligned box; weights sum to 1.
    pub fn nodes(&self, cube: &Aabb) -> Vec<(Pt, f64)> {
        let n = cube.dim();
        let q = self.order;
        let total = q.pow(n as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        loop {
            let mut w = 1.0;
            let p = Pt::from_fn(n, |d| {
                w *= self.weights1[idx[d]];
                cube.min[d] + (cube.max[d] - cube.min[d]) * self.nodes1[idx[d]]
            });
            out.push((p, w));
            let mut d = 0;
            loop {
                if d == n {
                    return out;
                }
                idx[d] += 1;
                if idx[d] < q {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// Average of f over the box: Σ wᵢ f(nodeᵢ) with Σ wᵢ = 1.
    pub fn integrate(&self, cube: &Aabb, mut f: impl FnMut(&Pt) -> f64) -> f64 {
        self.nodes(cube).iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Symmetric rule on the unit simplex D^k (and its barycentric lift D̃^k).
///
/// Weights are normalized to sum to 1, i.e. the rule computes the *average*
/// ⨍_{D^k} f; multiply by Vol(D^k) = 1/k! for the plain integral. Nodes are
/// stored in full barycentric coordinates (k+1 entries summing to 1).
#[derive(Clone, Debug)]
pub struct SimplexRule {
    pub dim: usize,
    pub degree: usize,
    /// (barycentric coordinates, averaged weight)
    pub points: Vec<(Vec<f64>, f64)>,
}

impl SimplexRule {
    pub fn new(dim: usize, degree: usize) -> Result<Self, QuadError> {
        if dim == 0 {
            return Ok(SimplexRule { dim, degree, points: vec![(vec![1.0], 1.0)] });
        }
        let points = if dim == 1 {
            let m = degree / 2 + 1; // exact to 2m-1 >= degree
            let (nodes, weights) = gauss_legendre(m);
            nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| {
                    let t = 0.5 * (x + 1.0);
                    (vec![1.0 - t, t], 0.5 * w)
                })
                .collect()
        } else {
            grundmann_moeller(dim, degree)
        };
        let rule = SimplexRule { dim, degree, points };
        rule.validate()?;
        Ok(rule)
    }

    /// Exactness check against closed-form monomial integrals
    /// ⨍ ∏ bᵢ^{aᵢ} = |a₀|!…|a_k|! · k! / (k + Σaᵢ)!.
    fn validate(&self) -> Result<(), QuadError> {
        let k = self.dim;
        let mut exps = vec![0usize; k + 1];
        loop {
            let total: usize = exps.iter().sum();
            if total <= self.degree {
                let mut exact = factorial(k);
                for &a in &exps {
                    exact *= factorial(a);
                }
                exact /= factorial(k + total);
                let approx: f64 = self
                    .points
                    .iter()
                    .map(|(b, w)| {
                        w * b.iter().zip(&exps).map(|(bi, &a)| bi.powi(a as i32)).product::<f64>()
                    })
                    .sum();
                if (approx - exact).abs() > 1e-12 * exact.abs().max(1.0) {
                    return Err(QuadError::Unsupported(format!(
                        "simplex rule dim {} degree {} fails monomial {:?}: {} vs {}",
                        k, self.degree, exps, approx, exact
                    )));
                }
            }
            // next exponent tuple with sum <= degree
            let mut d = 0;
            loop {
                if d > k {
                    return Ok(());
                }
                exps[d] += 1;
                if exps.iter().sum::<usize>() <= self.degree {
                    break;
                }
                exps[d] = 0;
                d += 1;
            }
        }
    }

    /// Average of f over the simplex spanned by `vertices` (full barycentric
    /// combination of the k+1 vertices).
    pub fn average(&self, vertices: &[Pt], mut f: impl FnMut(&Pt) -> f64) -> f64 {
        let n = vertices[0].dim();
        let mut acc = 0.0;
        for (bary, w) in &self.points {
            let mut p = Pt::zero(n);
            for (v, b) in vertices.iter().zip(bary) {
                p = p + v.scale(*b);
            }
            acc += w * f(&p);
        }
        acc
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Grundmann–Möller rule of degree d = 2s+1 on D^k, weights normalized so
/// they sum to 1 (average form).
fn grundmann_moeller(k: usize, degree: usize) -> Vec<(Vec<f64>, f64)> {
    let s = degree.saturating_sub(1).div_ceil(2);
    let d = 2 * s + 1;
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..=s {
        let denom = (d + k - 2 * i) as f64;
        let mut coeff = if i % 2 == 0 { 1.0 } else { -1.0 };
        coeff *= 0.5f64.powi(2 * s as i32) * denom.powi(d as i32);
        coeff /= factorial(i) * factorial(d + k - i);
        // enumerate β ∈ ℕ₀^{k+1} with |β| = s − i
        let target = s - i;
        let mut beta = vec![0usize; k + 1];
        beta[0] = target;
        loop {
            let bary: Vec<f64> = beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect();
            pts.push((bary, coeff));
            // next composition of `target` into k+1 parts
            if !next_composition(&mut beta, target) {
                break;
            }
        }
    }
    // raw weights sum to Vol(D^k) = 1/k!; normalize to average form
    let norm: f64 = pts.iter().map(|(_, w)| *w).sum();
    for p in &mut pts {
        p.1 /= norm;
    }
    pts
}

fn next_composition(c: &mut [usize], total: usize) -> bool {
    // lexicographic successor over compositions of `total`
    let m = c.len();
    if m == 1 {
        return false;
    }
    if c[0] > 0 {
        c[0] -= 1;
        c[1] += 1;
        return true;
    }
    for i in 1..m - 1 {
        if c[i] > 0 {
            let head: usize = total - c[i..].iter().sum::<usize>() + c[i] - 1;
            c[i + 1] += 1;
            c[i] = 0;
            c[0] = head;
            return true;
        }
    }
    false
}

/// How products of cube measures are integrated.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub enum ProductMode {
    Tensor,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct ProductResult {
    pub value: f64,
    /// Standard error estimate (Monte Carlo only).
    pub std_error: Option<f64>,
}

/// Integral of F over μ^{i₁} × … × μ^{i_r} (each slot a normalized uniform
/// measure on its box). Falls back to Monte Carlo when the tensor node count
/// exceeds `budget` and a Monte Carlo mode is provided.
pub fn integrate_product(
    rule: &CubeRule,
    cubes: &[Aabb],
    budget: usize,
    mc: Option<ProductMode>,
    mut f: impl FnMut(&[Pt]) -> f64,
) -> Result<ProductResult, QuadError> {
    let r = cubes.len();
    let n = cubes[0].dim();
    let tensor_count = rule.order.pow((n * r) as u32);
    if tensor_count <= budget {
        let per_slot: Vec<Vec<(Pt, f64)>> = cubes.iter().map(|c| rule.nodes(c)).collect();
        let mut idx = vec![0usize; r];
        let mut acc = 0.0;
        let mut args = vec![Pt::zero(n); r];
        loop {
            let mut w = 1.0;
            for s in 0..r {
                let (p, ws) = per_slot[s][idx[s]];
                args[s] = p;
                w *= ws;
            }
            acc += w * f(&args);
            let mut s = 0;
            loop {
                if s == r {
                    return Ok(ProductResult { value: acc, std_error: None });
                }
                idx[s] += 1;
                if idx[s] < per_slot[s].len() {
                    break;
                }
                idx[s] = 0;
                s += 1;
            }
        }
    }
    match mc {
        Some(ProductMode::MonteCarlo { samples, seed }) => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut args = vec![Pt::zero(n); r];
            for _ in 0..samples {
                for (s, c) in cubes.iter().enumerate() {
                    args[s] =
                        Pt::from_fn(n, |d| rng.gen_range(c.min[d]..=c.max[d]));
                }
                let v = f(&args);
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / samples as f64;
            let var = (sumsq / samples as f64 - mean * mean).max(0.0);
            Ok(ProductResult {
                value: mean,
                std_error: Some((var / samples as f64).sqrt()),
            })
        }
        _ => Err(QuadError::BudgetExceeded { actual: tensor_count, budget }),
    }
}

#[derive(Clone, Debug)]
pub struct SimplexIntegral {
    pub value: f64,
    pub degenerate: bool,
}

/// ∫_M f dH^k over the image of a simplex map, via the frame Jacobian
/// √det(GᵀG). Degenerate frames yield value 0 with a flag.
pub fn integrate_simplex(
    rule: &SimplexRule,
    map: &SimplexMap,
    mut f: impl FnMut(&Pt) -> f64,
) -> SimplexIntegral {
    let k = map.order();
    assert_eq!(rule.dim, k);
    let mut acc = 0.0;
    let mut any = false;
    for (bary, w) in &rule.points {
        let t = &bary[1..]; // cartesian simplex coordinates
        let p = map.eval(t);
        let frame = map.tangent_frame(t);
        let jac = gram_volume(&frame);
        if jac > 0.0 {
            any = true;
        }
        acc += w * f(&p) * jac;
    }
    let value = acc / factorial(k);
    SimplexIntegral { value, degenerate: !any }
}

/// √det(GᵀG) for a list of frame vectors.
pub fn gram_volume(frame: &[Pt]) -> f64 {
    let m = frame.len();
    let mut g = [[0.0f64; 3]; 3];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = frame[i].dot(&frame[j]);
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
        _ => panic!("frame of order {m}"),
    };
    det.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for m in 1..=8 {
            let (x, w) = gauss_legendre(m);
            for deg in 0..2 * m {
                let approx: f64 =
                    x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!(
                    (approx - exact).abs() < 1e-13,
                    "m={m} deg={deg}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn cube_rule_basics() {
        let rule = CubeRule::new(2);
        let b = Aabb::new(Pt::new(&[0.0, 0.0]), Pt::new(&[1.0, 1.0]));
        assert!((rule.integrate(&b, |_| 1.0) - 1.0).abs() < 1e-15);
        // linear coordinate averages to the center coordinate
        let b2 = Aabb::new(Pt::new(&[1.0, -2.0]), Pt::new(&[3.0, 0.0]));
        assert!((rule.integrate(&b2, |p| p[0]) - 2.0).abs() < 1e-14);
        // x² on [0,1] (1D embedded as degenerate axis is not allowed; use 2D)
        let v = rule.integrate(&b, |p| p[0] * p[0]);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn simplex_rule_dimensions() {
        for k in 1..=3usize {
            for degree in [1, 2, 4, 6, 8] {
                let rule = SimplexRule::new(k, degree).expect("valid rule");
                let total: f64 = rule.points.iter().map(|(_, w)| w).sum();
                assert!((total - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn product_measure_constant_and_split() {
        let rule = CubeRule::new(2);
        let c1 = Aabb::new(Pt::new(&[0.0, 0.0]), Pt::new(&[1.0, 1.0]));
        let c2 = Aabb::new(Pt::new(&[2.0, 0.0]), Pt::new(&[3.0, 1.0]));
        let r = integrate_product(&rule, &[c1, c2], 1 << 20, None, |_| 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        // additive in one slot splits
        let r = integrate_product(&rule, &[c1, c2], 1 << 20, None, |xs| xs[0][0] + xs[1][1])
            .unwrap();
        assert!((r.value - (0.5 + 0.5)).abs() < 1e-13);
    }

    #[test]
    fn product_normal_collapses_to_centers() {
        // ∫ ν(x_I) dμ^I = ν(centers) by slot-wise multilinearity
        use crate::exterior::simplex_normal;
        let rule = CubeRule::new(2);
        let c1 = Aabb::new(Pt::new(&[0.0, 0.0]), Pt::new(&[1.0, 1.0]));
        let c2 = Aabb::new(Pt::new(&[2.0, 1.0]), Pt::new(&[2.5, 1.5]));
        for comp in 0..2 {
            let r = integrate_product(&rule, &[c1, c2], 1 << 20, None, |xs| {
                simplex_normal(xs).components()[comp]
            })
            .unwrap();
            let exact = simplex_normal(&[c1.center(), c2.center()]).components()[comp];
            assert!((r.value - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn monte_carlo_reproducible() {
        let rule = CubeRule::new(2);
        let c = Aabb::new(Pt::new(&[0.0, 0.0]), Pt::new(&[1.0, 1.0]));
        let cubes = vec![c; 3];
        let mode = ProductMode::MonteCarlo { samples: 2000, seed: 7 };
        let f = |xs: &[Pt]| xs[0][0] * xs[1][1] + xs[2][0];
        let a = integrate_product(&rule, &cubes, 1, Some(mode), f).unwrap();
        let b = integrate_product(&rule, &cubes, 1, Some(mode), f).unwrap();
        assert_eq!(a.value, b.value);
        assert!((a.value - 0.75).abs() < 5.0 * a.std_error.unwrap().max(1e-3));
    }
}
