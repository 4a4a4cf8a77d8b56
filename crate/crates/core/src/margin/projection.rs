use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{norm, FiniteDistribution, LabeledSource, Point, TargetFunction};
use crate::{seed, Error, Result};

/// Constant in `d' = ceil(C ln(1/delta) / gamma^2)`.
pub const JL_CONSTANT: f64 = 32.0;

pub fn jl_dimension(gamma: f64, delta: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidInput(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((JL_CONSTANT * (1.0 / delta).ln() / (gamma * gamma)).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    Gaussian,
    Identity,
}

/// A linear map `R^d -> R^{d'}` followed by radial clipping to the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    kind: ProjectionKind,
    source_dim: usize,
    target_dim: usize,
    seed: u64,
    /// Row-major `target_dim x source_dim`; empty for the identity.
    matrix: Vec<f64>,
}

impl ProjectionMap {
    /// I.i.d. `N(0, 1/d')` entries drawn from `seed`.
    pub fn gaussian(source_dim: usize, target_dim: usize, seed: u64) -> Result<Self> {
        if source_dim == 0 || target_dim == 0 {
            return Err(Error::InvalidInput("projection dimensions must be >= 1".into()));
        }
        let mut rng = seed::rng(seed, "jl", 0);
        let s = 1.0 / (target_dim as f64).sqrt();
        let matrix = (0..source_dim * target_dim)
            .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        Ok(Self { kind: ProjectionKind::Gaussian, source_dim, target_dim, seed, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { kind: ProjectionKind::Identity, source_dim: dim, target_dim: dim, seed: 0, matrix: Vec::new() }
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The linear part, without clipping.
    pub fn linear(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ProjectionKind::Identity => x.to_vec(),
            ProjectionKind::Gaussian => self
                .matrix
                .chunks_exact(self.source_dim)
                .map(|row| crate::domain::dot(row, x))
                .collect(),
        }
    }

    /// `psi(x)`: the linear image, clipped to the unit ball.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.source_dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, projection expects {}",
                x.len(),
                self.source_dim
            )));
        }
        let mut y = self.linear(x);
        let n = norm(&y);
        if n > 1.0 {
            y.iter_mut().for_each(|c| *c /= n);
        }
        Ok(y)
    }

    /// Rows of the matrix (identity rows for the identity map).
    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self.kind {
            ProjectionKind::Identity => (0..self.source_dim)
                .map(|i| (0..self.source_dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            ProjectionKind::Gaussian => self.matrix.chunks_exact(self.source_dim).map(<[f64]>::to_vec).collect(),
        }
    }

    /// Rebuilds a map from its rows.
    pub fn from_rows(kind: ProjectionKind, rows: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let target_dim = rows.len();
        let source_dim = rows.first().map_or(0, Vec::len);
        if target_dim == 0 || source_dim == 0 || rows.iter().any(|r| r.len() != source_dim) {
            return Err(Error::InvalidInput("projection rows must be nonempty and rectangular".into()));
        }
        match kind {
            ProjectionKind::Identity => {
                if target_dim != source_dim {
                    return Err(Error::InvalidInput("identity projection must be square".into()));
                }
                Ok(Self::identity(source_dim))
            }
            ProjectionKind::Gaussian => Ok(Self {
                kind,
                source_dim,
                target_dim,
                seed,
                matrix: rows.into_iter().flatten().collect(),
            }),
        }
    }

    /// The source with every support point replaced by its image and the
    /// labels carried over.
    pub fn map_source(&self, src: &LabeledSource) -> Result<LabeledSource> {
        if self.kind == ProjectionKind::Identity {
            return Ok(src.clone());
        }
        let mut pts = Vec::with_capacity(src.support().len());
        let mut table = Vec::with_capacity(src.support().len());
        for (x, y, _) in src.iter() {
            let p = Point::new(self.apply(x)?)?;
            table.push((p.clone(), y));
            pts.push(p);
        }
        let dist = FiniteDistribution::new(pts, src.probs().to_vec())?;
        LabeledSource::new(dist, TargetFunction::explicit(table)?)
    }
}

/// Draws the Gaussian map with `d' = ceil(32 ln(1/delta) / gamma^2)` and
/// applies it to `src`.
pub fn jl_project(src: &LabeledSource, gamma: f64, delta: f64, seed: u64) -> Result<(ProjectionMap, LabeledSource)> {
    let map = ProjectionMap::gaussian(src.dim(), jl_dimension(gamma, delta)?, seed)?;
    let mapped = map.map_source(src)?;
    Ok((map, mapped))
}

/// `y <A w / |A w|, psi(x)>` for every support point of `src`, where `psi`
/// is the clipped map.
pub fn projected_margins(map: &ProjectionMap, src: &LabeledSource, w: &[f64]) -> Result<Vec<f64>> {
    let aw = map.linear(w);
    let n = norm(&aw);
    if !(n > 0.0) {
        return Err(Error::InvalidInput("weight vector maps to zero".into()));
    }
    src.iter()
        .map(|(x, y, _)| Ok(y.value() * crate::domain::dot(&aw, &map.apply(x)?) / n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{dot, synthetic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimension_formula() {
        assert_eq!(jl_dimension(0.3, 0.05).unwrap(), (32.0 * 20f64.ln() / 0.09).ceil() as usize);
        assert!(jl_dimension(0.0, 0.1).is_err());
    }

    #[test]
    fn deterministic_and_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = synthetic::margin_source(20, 0.4, 40, &mut rng).unwrap();
        let (a, sa) = jl_project(&src, 0.4, 0.2, 77).unwrap();
        let (b, sb) = jl_project(&src, 0.4, 0.2, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa.support(), sb.support());
        assert!(sa.support().iter().all(|p| norm(p.coords()) <= 1.0 + 1e-12));
        assert_eq!(sa.labels(), src.labels());
        assert_ne!(a, jl_project(&src, 0.4, 0.2, 78).unwrap().0);
    }

    #[test]
    fn rows_round_trip() {
        let m = ProjectionMap::gaussian(3, 5, 4).unwrap();
        assert_eq!(ProjectionMap::from_rows(ProjectionKind::Gaussian, m.rows(), 4).unwrap(), m);
        let id = ProjectionMap::identity(3);
        assert_eq!(id.apply(&[0.1, 0.2, 0.3]).unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(ProjectionMap::from_rows(ProjectionKind::Identity, id.rows(), 0).unwrap(), id);
    }

    #[test]
    fn margin_mostly_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = synthetic::margin_source(30, 0.4, 100, &mut rng).unwrap();
        let TargetFunction::LinearThreshold { w, .. } = src.target().clone() else { unreachable!() };
        let (map, mapped) = jl_project(&src, 0.4, 0.1, 5).unwrap();
        let wp = map.linear(&w);
        let n = norm(&wp);
        let wp: Vec<f64> = wp.iter().map(|c| c / n).collect();
        let bad = mapped.iter().filter(|(x, y, _)| y.value() * dot(&wp, x) < 0.2).count();
        assert!(bad <= 10, "{bad}");
        let m = projected_margins(&map, &src, &w).unwrap();
        assert_eq!(m.iter().filter(|&&v| v < 0.2).count(), bad);
    }
}
