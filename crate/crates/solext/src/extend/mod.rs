//! Divergence-free extension operators over a double Whitney cover: the
//! flux-functional operator for L¹ inputs and the Jones-plus-correctors
//! operator for W^{1,1} inputs.

mod l1;
mod w11;

pub use w11::{smooth_step, CorrectorStack, W11Calibration};

use crate::domain::{Domain, DomainError, SimplexMap};
use crate::field::{MollifiedField, VectorField};
use crate::geom::Pt;
use crate::partition::{BumpFamily, PartitionError};
use crate::quadrature::{CubeRule, ProductMode, QuadError, SimplexRule};
use crate::whitney::{CoverError, WhitneyDoubleCover};
use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtendError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("coverage hole at {0:?}")]
    CoverageHole(Vec<f64>),
    #[error("unsupported domain/simplex combination: {0}")]
    UnsupportedVariant(String),
    #[error("field dimension {field} does not match domain dimension {domain}")]
    DimensionMismatch { field: usize, domain: usize },
    #[error("corrector calibration failed at k = {k}: residual {residual}")]
    Calibration { k: usize, residual: f64 },
}

impl From<PartitionError> for ExtendError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::CoverageHole(loc) => ExtendError::CoverageHole(loc),
            PartitionError::NotExterior => ExtendError::CoverageHole(Vec::new()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexVariant {
    Flat,
    Curvilinear,
}

/// Quadrature configuration for the simplex functionals.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadConfig {
    /// Gauss order per axis of the outer cube measures.
    pub outer_order: usize,
    /// polynomial degree of the inner simplex rule
    pub simplex_degree: usize,
    /// tensor node budget before the Monte Carlo fallback kicks in
    pub tensor_budget: usize,
    /// Monte Carlo sample count (used only past the budget)
    pub mc_samples: Option<usize>,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            outer_order: 2,
            simplex_degree: 4,
            tensor_budget: 1 << 17,
            mc_samples: Some(10_000),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExtendConfig {
    pub variant: SimplexVariant,
    pub quad: QuadConfig,
    /// dyadic resolution floor of the covers
    pub max_level: i32,
    /// comparability constant for curvilinear tuples ((A2)/(A3))
    pub c1_curvilinear: f64,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig {
            variant: SimplexVariant::Flat,
            quad: QuadConfig::default(),
            max_level: 8,
            c1_curvilinear: 64.0,
        }
    }
}

/// Classification of an evaluation point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Exterior,
    Zero,
}

/// A prepared extension operator: domain, double cover, partition of unity,
/// and the lazily filled cache of per-multi-index simplex functionals a_I.
pub struct ExtensionHandle {
    pub domain: Arc<Domain>,
    pub field: Arc<dyn VectorField>,
    pub cover: Arc<WhitneyDoubleCover>,
    pub bumps: BumpFamily,
    pub config: ExtendConfig,
    /// effective variant (curvilinear requests on convex domains run flat)
    pub variant: SimplexVariant,
    pub downgraded_to_flat: bool,
    pub(crate) cube_rule: CubeRule,
    pub(crate) flux_rule: SimplexRule,
    a_cache: DashMap<[u32; 3], f64>,
}

impl ExtensionHandle {
    pub fn prepare(
        domain: Arc<Domain>,
        field: Arc<dyn VectorField>,
        config: ExtendConfig,
    ) -> Result<Self, ExtendError> {
        if field.dim() != domain.dim() {
            return Err(ExtendError::DimensionMismatch {
                field: field.dim(),
                domain: domain.dim(),
            });
        }
        let mut variant = config.variant;
        let mut downgraded = false;
        match variant {
            SimplexVariant::Flat => {
                if !domain.is_convex() {
                    return Err(ExtendError::UnsupportedVariant(
                        "flat simplices need a convex domain; request curvilinear".into(),
                    ));
                }
            }
            SimplexVariant::Curvilinear => {
                if domain.is_convex() {
                    variant = SimplexVariant::Flat;
                    downgraded = true;
                } else if !domain.is_smooth() {
                    return Err(ExtendError::UnsupportedVariant(
                        "curvilinear simplices need a smooth boundary".into(),
                    ));
                } else if domain.dim() == 3 {
                    return Err(ExtendError::UnsupportedVariant(
                        "3D curvilinear evaluation is not enabled in this release".into(),
                    ));
                }
            }
        }
        let cover = Arc::new(WhitneyDoubleCover::build(domain.clone(), config.max_level)?);
        let bumps = BumpFamily::new(cover.clone());
        let cube_rule = CubeRule::new(config.quad.outer_order);
        let flux_rule = SimplexRule::new(domain.dim() - 1, config.quad.simplex_degree)?;
        Ok(ExtensionHandle {
            domain,
            field,
            cover,
            bumps,
            config,
            variant,
            downgraded_to_flat: downgraded,
            cube_rule,
            flux_rule,
            a_cache: DashMap::new(),
        })
    }

    /// Route a rough field through mollification: build the operator on the
    /// inset domain Ω_ε with the mollified field (density pipeline).
    pub fn prepare_mollified(
        domain: Arc<Domain>,
        field: Arc<dyn VectorField>,
        eps: f64,
        mollify_order: usize,
        config: ExtendConfig,
    ) -> Result<Self, ExtendError> {
        let inner = Arc::new(domain.inset(eps)?);
        let mollified: Arc<dyn VectorField> =
            Arc::new(MollifiedField::new(field, domain, eps, mollify_order));
        Self::prepare(inner, mollified, config)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Support radius θ = 2η(13√n/12 + c) from the built cover.
    pub fn support_radius(&self) -> f64 {
        self.cover.theta()
    }

    pub(crate) fn mc_mode(&self) -> Option<ProductMode> {
        self.config.quad.mc_samples.map(|samples| ProductMode::MonteCarlo {
            samples,
            seed: self.config.quad.seed,
        })
    }

    /// Build the simplex map for one outer-integration node.
    pub(crate) fn simplex_for(&self, points: &[Pt]) -> Result<Option<SimplexMap>, ExtendError> {
        match self.variant {
            SimplexVariant::Flat => Ok(Some(SimplexMap::flat_free(points.to_vec()))),
            SimplexVariant::Curvilinear => {
                match SimplexMap::curvilinear(
                    self.domain.clone(),
                    points.to_vec(),
                    self.config.c1_curvilinear,
                ) {
                    Ok(m) => Ok(Some(m)),
                    Err(DomainError::SimplexOutOfCollar(msg)) => {
                        Err(ExtendError::Domain(DomainError::SimplexOutOfCollar(msg)))
                    }
                    Err(e) => Err(e.into()),
                }
            }
        }
    }

    pub(crate) fn cached_functional(&self, key: [u32; 3]) -> Option<f64> {
        self.a_cache.get(&key).map(|v| *v)
    }

    pub(crate) fn store_functional(&self, key: [u32; 3], value: f64) {
        self.a_cache.insert(key, value);
    }

    pub fn cached_count(&self) -> usize {
        self.a_cache.len()
    }
}

/// Central-difference divergence of a vector function.
pub(crate) fn fd_divergence<E>(
    f: &mut impl FnMut(&Pt) -> Result<Pt, E>,
    y: &Pt,
    h: f64,
) -> Result<f64, E> {
    let n = y.dim();
    let mut acc = 0.0;
    for d in 0..n {
        let mut yp = *y;
        yp[d] += h;
        let mut ym = *y;
        ym[d] -= h;
        acc += (f(&yp)?[d] - f(&ym)?[d]) / (2.0 * h);
    }
    Ok(acc)
}
