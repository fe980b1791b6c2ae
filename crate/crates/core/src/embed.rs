//! Low-dimensional views of a distance matrix: classical multidimensional
//! scaling and agglomerative clustering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::GeometryError;
use crate::spatial::DistanceMatrix;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns (`vectors[row][col]`). Each vector's largest-magnitude entry is
/// made positive so the output is deterministic.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigen(a: &[Vec<f64>], tol: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let mut vectors = vec![vec![0.0; n]; n];
    for (col, &src) in order.iter().enumerate() {
        let pivot = (0..n).max_by(|&a, &b| v[a][src].abs().total_cmp(&v[b][src].abs()).then(b.cmp(&a))).unwrap_or(0);
        let sign = if n > 0 && v[pivot][src] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            vectors[row][col] = sign * v[row][src];
        }
    }
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub labels: Vec<String>,
    /// One row per label.
    pub coordinates: Vec<Vec<f64>>,
    /// All eigenvalues of the centered Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Relative residual `||B - X X^T||_F / ||B||_F`.
    pub strain: f64,
    pub warnings: Vec<String>,
}

pub type Embedding2D = Embedding;

impl Embedding {
    pub fn dims(&self) -> usize {
        self.coordinates.first().map_or(0, Vec::len)
    }
}

pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Classical (Torgerson) scaling of `dist` into `dims` dimensions.
pub fn classical_mds(dist: &DistanceMatrix, dims: usize) -> Result<Embedding, GeometryError> {
    let n = dist.len();
    if n < 3 {
        return Err(GeometryError::TooFew { needed: 3, got: n });
    }
    if dims == 0 || dims > n {
        return Err(GeometryError::DegenerateEmbedding(dims));
    }
    let sq: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dist.get(i, j).powi(2)).collect()).collect();
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| -0.5 * (sq[i][j] - row_mean[i] - row_mean[j] + grand)).collect()).collect();

    let (eigenvalues, vectors) = symmetric_eigen(&b, EIGEN_TOLERANCE);
    let mut warnings = Vec::new();
    let top = eigenvalues[0].abs().max(f64::MIN_POSITIVE);
    let nonnegative = eigenvalues.iter().filter(|&&l| l >= -1e-9 * top).count();
    if nonnegative < dims {
        return Err(GeometryError::DegenerateEmbedding(nonnegative));
    }
    let most_negative = eigenvalues.iter().copied().fold(0.0, f64::min);
    if most_negative < -1e-9 * top {
        warnings.push(format!(
            "distances are not Euclidean: most negative eigenvalue {most_negative:.6e} (largest {:.6e})",
            eigenvalues[0]
        ));
    }
    let mut coordinates = vec![vec![0.0; dims]; n];
    for k in 0..dims {
        let lambda = eigenvalues[k];
        if lambda < -1e-9 * top {
            warnings.push(format!("dimension {} has negative eigenvalue {lambda:.6e}; set to 0", k + 1));
        }
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            coordinates[i][k] = vectors[i][k] * s;
        }
    }
    for k in 0..dims {
        let mean = coordinates.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        for row in coordinates.iter_mut() {
            row[k] -= mean;
        }
    }

    let mut resid = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = coordinates[i].iter().zip(&coordinates[j]).map(|(x, y)| x * y).sum();
            resid += (b[i][j] - dot).powi(2);
            total += b[i][j].powi(2);
        }
    }
    let strain = if total > 0.0 { (resid / total).sqrt() } else { 0.0 };

    Ok(Embedding { labels: dist.labels().to_vec(), coordinates, eigenvalues, strain, warnings })
}

/// Columns rescaled to zero mean and unit (population) variance; constant
/// columns become zero.
pub fn zscore_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let d = rows[0].len();
    let mut out = rows.to_vec();
    for k in 0..d {
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        let sd = (rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for row in out.iter_mut() {
            row[k] = if sd > 0.0 { (row[k] - mean) / sd } else { 0.0 };
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Linkage {
    Single,
    Complete,
    /// UPGMA.
    #[default]
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" | "upgma" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage '{other}'")),
        }
    }
}

/// One merge step. Nodes `0..n` are leaves; merge `k` creates node `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
    pub linkage: Linkage,
}

/// Relative tolerance under which two linkage distances count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

struct Cluster {
    node: usize,
    /// Smallest leaf label, used for tie-breaking.
    key: String,
    size: usize,
}

/// Agglomerative clustering. Among equally close cluster pairs the one whose
/// (smallest-label, smallest-label) pair sorts first is merged.
pub fn agglomerative_cluster(dist: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram, GeometryError> {
    let n = dist.len();
    if n < 2 {
        return Err(GeometryError::TooFew { needed: 2, got: n });
    }
    let labels = dist.labels();
    let mut active: Vec<Cluster> = (0..n).map(|i| Cluster { node: i, key: labels[i].clone(), size: 1 }).collect();
    let mut d: Vec<Vec<f64>> = (0..n).map(|i| dist.row(i).to_vec()).collect();
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let dij = d[i][j];
                let better = match best {
                    None => true,
                    Some((bi, bj, bd)) => {
                        let tol = TIE_TOLERANCE * bd.abs().max(dij.abs()).max(1.0);
                        if dij < bd - tol {
                            true
                        } else if dij <= bd + tol {
                            pair_key(&active[i], &active[j]) < pair_key(&active[bi], &active[bj])
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((i, j, dij));
                }
            }
        }
        let (i, j, height) = best.expect("at least two clusters");
        let (first, second) = if active[i].key <= active[j].key { (i, j) } else { (j, i) };
        let (si, sj) = (active[i].size as f64, active[j].size as f64);
        let merged_row: Vec<f64> = (0..active.len())
            .map(|k| match linkage {
                Linkage::Single => d[i][k].min(d[j][k]),
                Linkage::Complete => d[i][k].max(d[j][k]),
                Linkage::Average => (si * d[i][k] + sj * d[j][k]) / (si + sj),
            })
            .collect();
        let size = active[i].size + active[j].size;
        merges.push(Merge { left: active[first].node, right: active[second].node, height, size });
        let key = active[i].key.clone().min(active[j].key.clone());

        // i < j: overwrite i, drop j
        for k in 0..active.len() {
            d[i][k] = merged_row[k];
            d[k][i] = merged_row[k];
        }
        d[i][i] = 0.0;
        active[i] = Cluster { node: n + merges.len() - 1, key, size };
        active.remove(j);
        d.remove(j);
        for row in d.iter_mut() {
            row.remove(j);
        }
    }
    Ok(Dendrogram { leaves: labels.to_vec(), merges, linkage })
}

fn pair_key<'a>(a: &'a Cluster, b: &'a Cluster) -> (&'a str, &'a str) {
    if a.key <= b.key {
        (&a.key, &b.key)
    } else {
        (&b.key, &a.key)
    }
}

fn newick_label(s: &str) -> String {
    if s.chars().any(|c| "()[]':;, \t".contains(c)) {
        format!("'{}'", s.replace('\'', "''"))
    } else {
        s.to_string()
    }
}

impl Dendrogram {
    fn height_of(&self, node: usize) -> f64 {
        if node < self.leaves.len() {
            0.0
        } else {
            self.merges[node - self.leaves.len()].height
        }
    }

    pub fn root(&self) -> usize {
        self.leaves.len() + self.merges.len() - 1
    }

    /// Leaf labels under `node`, left to right.
    pub fn members(&self, node: usize) -> Vec<String> {
        let n = self.leaves.len();
        if node < n {
            return vec![self.leaves[node].clone()];
        }
        let m = self.merges[node - n];
        let mut out = self.members(m.left);
        out.extend(self.members(m.right));
        out
    }

    /// Newick string with branch lengths as height differences.
    pub fn to_newick(&self) -> String {
        fn rec(t: &Dendrogram, node: usize, out: &mut String) {
            let n = t.leaves.len();
            if node < n {
                out.push_str(&newick_label(&t.leaves[node]));
                return;
            }
            let m = t.merges[node - n];
            out.push('(');
            rec(t, m.left, out);
            out.push_str(&format!(":{}", m.height - t.height_of(m.left)));
            out.push(',');
            rec(t, m.right, out);
            out.push_str(&format!(":{}", m.height - t.height_of(m.right)));
            out.push(')');
        }
        let mut s = String::new();
        rec(self, self.root(), &mut s);
        s.push(';');
        s
    }

    /// Nested `{name | height, children}` tree.
    pub fn to_json(&self) -> Value {
        fn rec(t: &Dendrogram, node: usize) -> Value {
            let n = t.leaves.len();
            if node < n {
                return json!({ "name": t.leaves[node], "height": 0.0 });
            }
            let m = t.merges[node - n];
            json!({
                "height": m.height,
                "size": m.size,
                "children": [rec(t, m.left), rec(t, m.right)],
            })
        }
        json!({ "linkage": format!("{:?}", self.linkage).to_lowercase(), "tree": rec(self, self.root()) })
    }

    /// Flat assignment into `k` clusters, numbered by first appearance in
    /// leaf order.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let n = self.leaves.len();
        let k = k.clamp(1, n);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        // leaf representative of each merge node
        let mut rep: Vec<usize> = (0..n).collect();
        for m in &self.merges[..n - k] {
            let (a, b) = (find(&mut parent, rep[m.left]), find(&mut parent, rep[m.right]));
            parent[b] = a;
            rep.push(a);
        }
        let mut ids = BTreeMap::new();
        (0..n)
            .map(|i| {
                let root = find(&mut parent, i);
                let next = ids.len();
                *ids.entry(root).or_insert(next)
            })
            .collect()
    }
}
