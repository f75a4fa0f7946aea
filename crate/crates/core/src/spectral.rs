//! Spectral clustering of a unit distance matrix.
//!
//! Distances are sparsified into a binary k-nearest-neighbour graph (union
//! symmetrized), the symmetric normalized Laplacian of that graph is
//! eigendecomposed, units are embedded into its lowest eigenvectors with
//! rows scaled to unit length, and k-means partitions the embedding.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DistanceMatrix;

/// Generator behind every random draw in clustering and baselines.
pub type Prng = ChaCha8Rng;

/// Recorded in run reports so runs can be reproduced elsewhere.
pub const PRNG_ID: &str = "chacha8 (rand_chacha 0.9, SeedableRng::seed_from_u64)";

pub fn prng(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric 0/1 adjacency with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityGraph {
    n: usize,
    adj: Vec<bool>,
}

impl AffinityGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = AffinityGraph {
            n,
            adj: vec![false; n * n],
        };
        for &(i, j) in edges {
            if i != j {
                g.adj[i * n + j] = true;
                g.adj[j * n + i] = true;
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i * self.n..(i + 1) * self.n].iter().filter(|&&e| e).count()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }
}

/// Links every unit to its `k_neighbors` nearest others (ties to the lower
/// index) and symmetrizes by union.
pub fn knn_graph(d: &DistanceMatrix, k_neighbors: usize) -> Result<AffinityGraph> {
    let n = d.len();
    if k_neighbors == 0 || k_neighbors >= n {
        return Err(Error::InvalidArgument(format!(
            "k_neighbors must be in 1..{n}, got {k_neighbors}"
        )));
    }
    let mut edges = Vec::with_capacity(n * k_neighbors);
    let mut others: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let row = d.row(i);
        others.clear();
        others.extend((0..n).filter(|&j| j != i));
        others.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        edges.extend(others[..k_neighbors].iter().map(|&j| (i, j)));
    }
    Ok(AffinityGraph::from_edges(n, &edges))
}

/// `I - D^{-1/2} A D^{-1/2}`; isolated vertices keep a diagonal of 1.
pub fn normalized_laplacian(a: &AffinityGraph) -> DMatrix<f64> {
    let n = a.len();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| match a.degree(i) {
            0 => 0.0,
            deg => (deg as f64).sqrt().recip(),
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let off = if a.has_edge(i, j) {
            inv_sqrt[i] * inv_sqrt[j]
        } else {
            0.0
        };
        if i == j {
            1.0 - off
        } else {
            -off
        }
    })
}

/// Eigen-decomposition sorted by ascending eigenvalue.
pub fn sorted_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * n.max(1)).ok_or(Error::EigenNonConvergence(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Rows of the `d` lowest Laplacian eigenvectors, each scaled to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: DMatrix<f64>,
}

impl Embedding {
    pub fn n_points(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }
}

pub fn spectral_embedding(l: &DMatrix<f64>, d: usize) -> Result<Embedding> {
    let n = l.nrows();
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension must be in 1..={n}, got {d}"
        )));
    }
    let (_, vectors) = sorted_eigen(l)?;
    let mut coords = vectors.columns(0, d).into_owned();
    // Fix each eigenvector's sign so its largest entry is positive.
    for mut col in coords.column_iter_mut() {
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            col.neg_mut();
        }
    }
    for mut row in coords.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(Embedding { coords })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 5,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Labels renumbered in order of first appearance.
    pub labels: Vec<usize>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, sq_dist(p, &centers[0]));
    for (c, center) in centers.iter().enumerate().skip(1) {
        let dist = sq_dist(p, center);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut Prng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut weights = vec![0.0; n];
    while centers.len() < k {
        for (w, p) in weights.iter_mut().zip(points) {
            *w = nearest_center(p, &centers).1;
        }
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<usize>, f64) {
    let n = points.len();
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (c, dist) = nearest_center(p, &centers);
            changed |= labels[i] != c;
            labels[i] = c;
            dists[i] = dist;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] == 0 {
                // move the empty center onto the worst-fitted point
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(far) = far {
                    counts[labels[far]] -= 1;
                    for (s, x) in sums[labels[far]].iter_mut().zip(&points[far]) {
                        *s -= x;
                    }
                    labels[far] = c;
                    counts[c] = 1;
                    sums[c].clone_from(&points[far]);
                    dists[far] = 0.0;
                    reseeded = true;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (center, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *center = s / counts[c] as f64;
                }
            }
        }
        if !changed && !reseeded {
            break;
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &c)| sq_dist(p, &centers[c])).sum();
    (labels, inertia)
}

/// Renumbers labels in order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// k-means++ seeded Lloyd iterations, best of `config.restarts` runs drawn
/// from one generator stream.
pub fn kmeans_with(e: &Embedding, k: usize, seed: u64, config: &KMeansConfig) -> Result<KMeansResult> {
    let n = e.n_points();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "number of clusters must be in 1..={n}, got {k}"
        )));
    }
    let points: Vec<Vec<f64>> = e.coords.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut rng = prng(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..config.restarts.max(1) {
        let centers = plus_plus_init(&points, k, &mut rng);
        let (labels, inertia) = lloyd(&points, centers, config.max_iter);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    let (labels, inertia) = best.expect("at least one restart");
    Ok(KMeansResult {
        labels: canonical_labels(&labels),
        inertia,
    })
}

pub fn kmeans(e: &Embedding, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_with(e, k, seed, &KMeansConfig::default())?.labels)
}

/// Cluster labels aligned with unit ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub unit_ids: Vec<String>,
    pub labels: Vec<usize>,
}

impl ClusterAssignment {
    /// `unit_id,label` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["unit_id", "label"])
            .map_err(|e| Error::Csv(e.to_string()))?;
        for (id, l) in self.unit_ids.iter().zip(&self.labels) {
            w.write_record([id.as_str(), &l.to_string()])
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub k_neighbors: usize,
    pub seed: u64,
    pub kmeans: KMeansConfig,
}

impl ClusterConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ClusterConfig {
            k,
            k_neighbors: 5,
            seed,
            kmeans: KMeansConfig::default(),
        }
    }
}

pub fn cluster(d: &DistanceMatrix, k: usize, k_neighbors: usize, seed: u64) -> Result<ClusterAssignment> {
    cluster_with(
        d,
        &ClusterConfig {
            k_neighbors,
            ..ClusterConfig::new(k, seed)
        },
    )
}

/// kNN graph, normalized Laplacian, `k`-dimensional embedding, k-means.
pub fn cluster_with(d: &DistanceMatrix, config: &ClusterConfig) -> Result<ClusterAssignment> {
    if config.k == 0 || config.k > d.len() {
        return Err(Error::InvalidArgument(format!(
            "number of clusters must be in 1..={}, got {}",
            d.len(),
            config.k
        )));
    }
    let graph = knn_graph(d, config.k_neighbors)?;
    let lap = normalized_laplacian(&graph);
    let embedding = spectral_embedding(&lap, config.k)?;
    let result = kmeans_with(&embedding, config.k, config.seed, &config.kmeans)?;
    Ok(ClusterAssignment {
        unit_ids: d.unit_ids().to_vec(),
        labels: result.labels,
    })
}
