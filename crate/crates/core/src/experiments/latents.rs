use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::generator::{Sentence, SentenceId};
use crate::probe::SentenceVae;
use crate::seeds::Language;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint {
    pub id: SentenceId,
    pub language: Language,
    pub pattern: String,
    pub z: Vec<f64>,
    pub pc: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentDump {
    pub points: Vec<LatentPoint>,
    /// Share of the latent variance kept by the two components.
    pub explained_variance: f64,
}

/// Projection of the rows onto their two leading principal axes, and the
/// share of variance those axes explain.
///
/// Each axis is sign-fixed so its largest-magnitude coordinate is positive.
pub fn pca_2d(rows: &[Vec<f64>]) -> Result<(Vec<[f64; 2]>, f64)> {
    if rows.len() < 3 {
        return Err(Error::shape(format!(
            "PCA needs at least 3 points, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if d < 2 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::shape("PCA needs rows of one width of at least 2"));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let kept: f64 = order[..2]
        .iter()
        .map(|&k| eig.eigenvalues[k].max(0.0))
        .sum();
    let explained = if total > 0.0 { kept / total } else { 1.0 };

    let axes: Vec<Vec<f64>> = order[..2]
        .iter()
        .map(|&k| {
            let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let lead = v
                .iter()
                .copied()
                .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            v.into_iter().map(|x| x * sign).collect()
        })
        .collect();
    let proj = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let p = |a: &[f64]| row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
            [p(&axes[0]), p(&axes[1])]
        })
        .collect();
    Ok((proj, explained))
}

/// Mean-mode latents of each distinct sentence, with a 2-D PCA view.
pub fn export_latents<'a>(
    model: &SentenceVae,
    sentences: impl IntoIterator<Item = &'a Sentence>,
    table: &EmbeddingTable,
) -> Result<LatentDump> {
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for s in sentences {
        if !seen.insert(s.id) {
            continue;
        }
        points.push(LatentPoint {
            id: s.id,
            language: s.language,
            pattern: s.pattern().to_string(),
            z: model.encode_mean(&table.get_f64(s.id)?)?,
            pc: [0.0; 2],
        });
    }
    let zs: Vec<Vec<f64>> = points.iter().map(|p| p.z.clone()).collect();
    let (proj, explained_variance) = pca_2d(&zs)?;
    for (p, pc) in points.iter_mut().zip(proj) {
        p.pc = pc;
    }
    Ok(LatentDump {
        points,
        explained_variance,
    })
}

/// Distances between (language, pattern) clusters in latent space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    /// Closest pair of cluster centroids that belong to different languages.
    pub min_inter_language_distance: f64,
    /// Farthest any point lies from its own cluster centroid.
    pub max_intra_radius: f64,
}

impl Separation {
    pub fn languages_disjoint(&self) -> bool {
        self.min_inter_language_distance > self.max_intra_radius
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl LatentDump {
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(0, |p| p.z.len());
        let mut out = String::from("id,language,pattern");
        for k in 1..=dim {
            let _ = write!(out, ",z{k}");
        }
        out.push_str(",pc1,pc2\n");
        for p in &self.points {
            let _ = write!(out, "{},{},{}", p.id, p.language, p.pattern);
            for v in p.z.iter().chain(&p.pc) {
                let _ = write!(out, ",{v:.8}");
            }
            out.push('\n');
        }
        out
    }

    /// Latent centroid of every (language, pattern) cluster.
    pub fn centroids(&self) -> BTreeMap<(Language, String), Vec<f64>> {
        let mut sums: BTreeMap<(Language, String), (Vec<f64>, usize)> = BTreeMap::new();
        for p in &self.points {
            let e = sums
                .entry((p.language, p.pattern.clone()))
                .or_insert_with(|| (vec![0.0; p.z.len()], 0));
            for (s, v) in e.0.iter_mut().zip(&p.z) {
                *s += v;
            }
            e.1 += 1;
        }
        sums.into_iter()
            .map(|(k, (s, n))| (k, s.into_iter().map(|v| v / n as f64).collect()))
            .collect()
    }

    /// `None` when fewer than two languages are present.
    pub fn separation(&self) -> Option<Separation> {
        let centroids = self.centroids();
        let max_intra_radius = self
            .points
            .iter()
            .map(|p| distance(&p.z, &centroids[&(p.language, p.pattern.clone())]))
            .fold(0.0, f64::max);
        let list: Vec<_> = centroids.iter().collect();
        let mut min_inter = None::<f64>;
        for (i, ((la, _), ca)) in list.iter().enumerate() {
            for ((lb, _), cb) in &list[i + 1..] {
                if la != lb {
                    let d = distance(ca, cb);
                    min_inter = Some(min_inter.map_or(d, |m| m.min(d)));
                }
            }
        }
        min_inter.map(|min_inter_language_distance| Separation {
            min_inter_language_distance,
            max_intra_radius,
        })
    }
}
