use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng64;

pub const CENTER_RADIUS: f64 = 1.0;
pub const CENTER_MARGIN: f64 = 0.1;
pub const MAX_CENTER_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub points: Vec<(f64, f64)>,
    /// Index into `centers` of the blob each point was drawn from.
    pub assignment: Vec<usize>,
    pub cluster_count: usize,
    pub cluster_points: usize,
    pub cluster_std: f64,
    pub centers: Vec<(f64, f64)>,
    pub seed: u64,
}

impl ClusterSet {
    pub fn min_center_distance(&self) -> Option<f64> {
        min_pairwise(&self.centers)
    }
}

fn min_pairwise(centers: &[(f64, f64)]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let d = (centers[i].0 - centers[j].0).hypot(centers[i].1 - centers[j].1);
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

/// Rejection-samples `count` centers in the inner square until no pair is
/// closer than `0.3 * radius`.
fn generate_centers(rng: &mut Rng64, count: usize) -> Result<Vec<(f64, f64)>> {
    let lim = CENTER_RADIUS - CENTER_MARGIN;
    let threshold = CENTER_RADIUS * 0.3;
    for _ in 0..MAX_CENTER_ATTEMPTS {
        let xs: Vec<f64> = (0..count).map(|_| rng.uniform(-lim, lim)).collect();
        let ys: Vec<f64> = (0..count).map(|_| rng.uniform(-lim, lim)).collect();
        let centers: Vec<(f64, f64)> = xs
            .into_iter()
            .zip(ys)
            .map(|(x, y)| (CENTER_RADIUS * x, CENTER_RADIUS * y))
            .collect();
        if min_pairwise(&centers).is_none_or(|d| d >= threshold) {
            return Ok(centers);
        }
    }
    Err(Error::Generation("Could not find well separated centers".into()))
}

/// Isotropic Gaussian blobs around well-separated random centers.
pub fn gen_clusters(
    seed: u64,
    cluster_points: usize,
    cluster_count: usize,
    cluster_std: f64,
) -> Result<ClusterSet> {
    if !(1..=9).contains(&cluster_count) {
        return Err(Error::invalid(format!("cluster_count must be in [1, 9], got {cluster_count}")));
    }
    if !(cluster_std > 0.0 && cluster_std.is_finite()) {
        return Err(Error::invalid(format!("cluster_std must be > 0, got {cluster_std}")));
    }
    if cluster_points == 0 {
        return Err(Error::invalid("cluster_points must be >= 1"));
    }
    let mut rng = Rng64::seed_from(seed);
    let centers = generate_centers(&mut rng, cluster_count)?;

    let mut tagged: Vec<((f64, f64), usize)> = Vec::with_capacity(cluster_points * cluster_count);
    for (k, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..cluster_points {
            let x = rng.normal(cx, cluster_std);
            let y = rng.normal(cy, cluster_std);
            tagged.push(((x, y), k));
        }
    }
    rng.shuffle(&mut tagged);
    let (points, assignment) = tagged.into_iter().unzip();
    Ok(ClusterSet {
        points,
        assignment,
        cluster_count,
        cluster_points,
        cluster_std,
        centers,
        seed,
    })
}
