//! Reference implementations written straight from the textbook
//! definitions, plus small data generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use riskdyn::classifiers::{Node, TreeModel};
use riskdyn::FeatureMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows).unwrap()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

fn mean_of(rows: &[&Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut m = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            m[j] += r[j];
        }
    }
    for v in &mut m {
        *v /= rows.len() as f64;
    }
    m
}

fn clusters(labels: &[usize]) -> Vec<usize> {
    let mut c: Vec<usize> = labels.to_vec();
    c.sort();
    c.dedup();
    c
}

/// s(i) = (b - a) / max(a, b); singletons score 0.
pub fn silhouette_oracle(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let ks = clusters(labels);
    let n = rows.len();
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n)
            .filter(|&j| labels[j] == labels[i] && j != i)
            .collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| euclid(&rows[i], &rows[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for &k in &ks {
            if k == labels[i] {
                continue;
            }
            let other: Vec<usize> = (0..n).filter(|&j| labels[j] == k).collect();
            let m = other
                .iter()
                .map(|&j| euclid(&rows[i], &rows[j]))
                .sum::<f64>()
                / other.len() as f64;
            b = b.min(m);
        }
        let denom = if a > b { a } else { b };
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

/// tr(B) / (k - 1) over tr(W) / (n - k).
pub fn calinski_harabasz_oracle(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let ks = clusters(labels);
    let (n, k) = (rows.len(), ks.len());
    let all: Vec<&Vec<f64>> = rows.iter().collect();
    let grand = mean_of(&all);
    let mut trace_b = 0.0;
    let mut trace_w = 0.0;
    for &c in &ks {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(r, _)| r)
            .collect();
        let centre = mean_of(&members);
        trace_b += members.len() as f64 * euclid(&centre, &grand).powi(2);
        for m in &members {
            trace_w += euclid(m, &centre).powi(2);
        }
    }
    if trace_w == 0.0 {
        return f64::INFINITY;
    }
    (trace_b / (k as f64 - 1.0)) / (trace_w / (n as f64 - k as f64))
}

/// Mean over clusters of max_j (s_i + s_j) / d(c_i, c_j).
pub fn davies_bouldin_oracle(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let ks = clusters(labels);
    let mut cents = Vec::new();
    let mut scatter = Vec::new();
    for &c in &ks {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(r, _)| r)
            .collect();
        let centre = mean_of(&members);
        scatter
            .push(members.iter().map(|m| euclid(m, &centre)).sum::<f64>() / members.len() as f64);
        cents.push(centre);
    }
    let mut total = 0.0;
    for i in 0..ks.len() {
        let mut worst: f64 = 0.0;
        for j in 0..ks.len() {
            if i != j {
                worst = worst.max((scatter[i] + scatter[j]) / euclid(&cents[i], &cents[j]));
            }
        }
        total += worst;
    }
    total / ks.len() as f64
}

/// Pair-counting ROC AUC: P(score_pos > score_neg) + P(tie) / 2.
pub fn auc_oracle(scores: &[f64], labels: &[usize]) -> f64 {
    let mut twice = 0u64;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                if scores[i] > scores[j] {
                    twice += 2;
                } else if scores[i] == scores[j] {
                    twice += 1;
                }
            }
        }
    }
    (twice as f64 * 0.5) / (pos as f64 * neg as f64)
}

/// Closed-form spreading scores (1 - alpha) (I - alpha S)^-1 Y by dense LU.
pub fn spreading_closed_form(
    adjacency: &[Vec<f64>],
    seeds: &[Option<usize>],
    classes: usize,
    alpha: f64,
) -> Vec<Vec<f64>> {
    let n = adjacency.len();
    let deg: Vec<f64> = adjacency.iter().map(|r| r.iter().sum()).collect();
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if adjacency[i][j] != 0.0 {
                a[(i, j)] -= alpha * adjacency[i][j] / (deg[i] * deg[j]).sqrt();
            }
        }
    }
    let lu = a.lu();
    let mut out = vec![vec![0.0; classes]; n];
    for c in 0..classes {
        let y = DVector::from_iterator(
            n,
            seeds
                .iter()
                .map(|s| if *s == Some(c) { 1.0 - alpha } else { 0.0 }),
        );
        let f = lu.solve(&y).expect("I - alpha S is nonsingular");
        for i in 0..n {
            out[i][c] = f[i];
        }
    }
    out
}

/// Greedy CART grown by enumerating every (feature, threshold) candidate and
/// scoring it with exact integer arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleTree {
    Leaf(Vec<u64>),
    Split {
        feature: usize,
        threshold: f64,
        counts: Vec<u64>,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

pub fn cart_oracle(
    rows: &[Vec<f64>],
    labels: &[usize],
    idx: &[usize],
    classes: usize,
) -> OracleTree {
    let mut counts = vec![0u64; classes];
    for &i in idx {
        counts[labels[i]] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() <= 1 || idx.len() < 2 {
        return OracleTree::Leaf(counts);
    }
    // Score = sum over sides of sum(c^2) / n_side, kept as a fraction.
    let mut best: Option<(usize, f64, i128, i128)> = None;
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let mut t = w[0] + (w[1] - w[0]) / 2.0;
            if t >= w[1] {
                t = w[0];
            }
            let mut l = vec![0i128; classes];
            let mut r = vec![0i128; classes];
            for &i in idx {
                if rows[i][f] <= t {
                    l[labels[i]] += 1;
                } else {
                    r[labels[i]] += 1;
                }
            }
            let (nl, nr): (i128, i128) = (l.iter().sum(), r.iter().sum());
            let sl: i128 = l.iter().map(|c| c * c).sum();
            let sr: i128 = r.iter().map(|c| c * c).sum();
            let (num, den) = (sl * nr + sr * nl, nl * nr);
            let better = match best {
                None => true,
                Some((_, _, bn, bd)) => num * bd > bn * den,
            };
            if better {
                best = Some((f, t, num, den));
            }
        }
    }
    match best {
        None => OracleTree::Leaf(counts),
        Some((feature, threshold, _, _)) => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| rows[i][feature] <= threshold);
            OracleTree::Split {
                feature,
                threshold,
                counts,
                left: Box::new(cart_oracle(rows, labels, &l, classes)),
                right: Box::new(cart_oracle(rows, labels, &r, classes)),
            }
        }
    }
}

/// Structural equality between a fitted tree and the oracle tree.
pub fn same_tree(model: &TreeModel, at: usize, oracle: &OracleTree) -> bool {
    match (&model.nodes[at], oracle) {
        (Node::Leaf { counts }, OracleTree::Leaf(c)) => counts == c,
        (
            Node::Split {
                feature,
                threshold,
                left,
                right,
                counts,
            },
            OracleTree::Split {
                feature: f,
                threshold: t,
                counts: c,
                left: ol,
                right: or,
            },
        ) => {
            feature == f
                && threshold == t
                && counts == c
                && same_tree(model, *left, ol)
                && same_tree(model, *right, or)
        }
        _ => false,
    }
}

/// Isotropic Gaussian blobs; returns rows and the generating blob index.
pub fn gaussian_blobs(
    centres: &[Vec<f64>],
    per: usize,
    sigma: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per {
            rows.push(centre.iter().map(|m| m + noise.sample(&mut r)).collect());
            labels.push(c);
        }
    }
    (rows, labels)
}

pub fn uniform_rows(n: usize, d: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| r.random_range(-5.0..5.0)).collect())
        .collect()
}

/// Labels in 0..k with every class present (needs n >= k).
pub fn labels_covering(n: usize, k: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let mut l: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { r.random_range(0..k) })
        .collect();
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        l.swap(i, j);
    }
    l
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * b.abs().max(1.0)
}
