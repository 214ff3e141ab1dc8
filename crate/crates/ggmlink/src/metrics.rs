//! Scoring harness: edge-recovery confusion counts, TPR/FPR/MCC, rank-based
//! AUC, differential-edge evaluation across group pairs, relative Frobenius
//! loss, and small-world topology summaries with random-graph baselines.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Edge-classification counts over upper-triangle positions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }
}

/// Count edge agreement between a selected graph and the truth over i < j.
pub fn confusion(g_hat: &DMatrix<u8>, g_true: &DMatrix<u8>) -> Result<Confusion> {
    let p = g_true.nrows();
    if g_hat.nrows() != p || g_hat.ncols() != p || g_true.ncols() != p {
        return Err(Error::Dimension("confusion needs equal square dimensions".into()));
    }
    let mut c = Confusion::default();
    for j in 0..p {
        for i in 0..j {
            match (g_hat[(i, j)] == 1, g_true[(i, j)] == 1) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
    }
    Ok(c)
}

/// TPR, FPR, and Matthews correlation. Degenerate denominators yield zero for
/// the affected statistic and set the flag rather than erroring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
    pub mcc: f64,
    pub degenerate: bool,
}

pub fn rates_and_mcc(c: &Confusion) -> Rates {
    let (tp, fp, tn, fnn) =
        (c.true_pos as f64, c.false_pos as f64, c.true_neg as f64, c.false_neg as f64);
    let mut degenerate = false;
    let tpr = if tp + fnn > 0.0 {
        tp / (tp + fnn)
    } else {
        degenerate = true;
        0.0
    };
    let fpr = if fp + tn > 0.0 {
        fp / (fp + tn)
    } else {
        degenerate = true;
        0.0
    };
    let denom = (tp + fp) * (tp + fnn) * (tn + fp) * (tn + fnn);
    let mcc = if denom > 0.0 {
        (tp * tn - fp * fnn) / denom.sqrt()
    } else {
        degenerate = true;
        0.0
    };
    Rates { tpr, fpr, mcc, degenerate }
}

/// Rank-statistic AUC over flat (score, label) observations: the probability
/// that a random positive outscores a random negative, ties counted half.
/// `None` when either class is empty.
pub fn auc_from_scores(scored: &[(f64, bool)]) -> Option<f64> {
    let n_pos = scored.iter().filter(|&&(_, l)| l).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.partial_cmp(&scored[b].0).expect("finite scores"));
    // Midranks over tied blocks, then the Mann-Whitney identity.
    let mut rank_sum_pos = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let mut end = idx + 1;
        while end < order.len() && scored[order[end]].0 == scored[order[idx]].0 {
            end += 1;
        }
        let midrank = (idx + 1 + end) as f64 / 2.0; // ranks are 1-based
        for &pos in &order[idx..end] {
            if scored[pos].1 {
                rank_sum_pos += midrank;
            }
        }
        idx = end;
    }
    let n_pos_f = n_pos as f64;
    Some((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// AUC of a symmetric score matrix (e.g. posterior inclusion probabilities)
/// against a truth graph. `None` on degenerate truth.
pub fn roc_auc(scores: &DMatrix<f64>, g_true: &DMatrix<u8>) -> Result<Option<f64>> {
    let p = g_true.nrows();
    if scores.nrows() != p || scores.ncols() != p || g_true.ncols() != p {
        return Err(Error::Dimension("roc_auc needs equal square dimensions".into()));
    }
    let mut scored = Vec::with_capacity(p * (p - 1) / 2);
    for j in 0..p {
        for i in 0..j {
            let s = scores[(i, j)];
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("score at ({i},{j})")));
            }
            scored.push((s, g_true[(i, j)] == 1));
        }
    }
    Ok(auc_from_scores(&scored))
}

/// Differential-edge evaluation pooled over all unordered group pairs: truth
/// at (pair, i<j) is disagreement between the two true graphs, prediction is
/// disagreement between the selected graphs, and the score (for AUC) is the
/// absolute PPI difference.
#[derive(Debug, Clone)]
pub struct DifferentialReport {
    pub confusion: Confusion,
    pub rates: Rates,
    pub auc: Option<f64>,
}

pub fn differential_eval(
    selected: &[DMatrix<u8>],
    scores: Option<&[DMatrix<f64>]>,
    truths: &[DMatrix<u8>],
) -> Result<DifferentialReport> {
    let k = truths.len();
    if k < 2 {
        return Err(Error::InvalidArgument("differential evaluation needs >= 2 groups".into()));
    }
    if selected.len() != k || scores.is_some_and(|s| s.len() != k) {
        return Err(Error::Dimension("group count mismatch".into()));
    }
    let p = truths[0].nrows();
    let mut pooled = Confusion::default();
    let mut scored: Vec<(f64, bool)> = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            for j in 0..p {
                for i in 0..j {
                    let truth = truths[a][(i, j)] != truths[b][(i, j)];
                    let pred = selected[a][(i, j)] != selected[b][(i, j)];
                    match (pred, truth) {
                        (true, true) => pooled.true_pos += 1,
                        (true, false) => pooled.false_pos += 1,
                        (false, true) => pooled.false_neg += 1,
                        (false, false) => pooled.true_neg += 1,
                    }
                    if let Some(sc) = scores {
                        scored.push(((sc[a][(i, j)] - sc[b][(i, j)]).abs(), truth));
                    }
                }
            }
        }
    }
    let auc = if scored.is_empty() { None } else { auc_from_scores(&scored) };
    Ok(DifferentialReport { confusion: pooled, rates: rates_and_mcc(&pooled), auc })
}

/// Relative Frobenius loss averaged over groups:
/// `(1/K) sum_k ||hat - true||_F^2 / ||true||_F^2` over full matrices.
pub fn frobenius_loss(omega_hat: &[DMatrix<f64>], omega_true: &[DMatrix<f64>]) -> Result<f64> {
    if omega_hat.len() != omega_true.len() || omega_hat.is_empty() {
        return Err(Error::Dimension("group count mismatch".into()));
    }
    let mut total = 0.0;
    for (hat, truth) in omega_hat.iter().zip(omega_true) {
        if hat.shape() != truth.shape() {
            return Err(Error::Dimension("matrix shape mismatch".into()));
        }
        let denom = truth.norm_squared();
        if denom <= 0.0 {
            return Err(Error::InvalidArgument("zero-norm truth matrix".into()));
        }
        total += (hat - truth).norm_squared() / denom;
    }
    Ok(total / omega_hat.len() as f64)
}

/// Small-world topology summary. Raw clustering and path length come with
/// their random-graph normalizations (same node and edge counts, `n_random`
/// uniform replicates): gamma = C/C_rand, lambda = L/L_rand, sigma =
/// gamma/lambda.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphMetrics {
    pub clustering: f64,
    pub path_length: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub sigma: f64,
}

fn degrees(g: &DMatrix<u8>) -> Vec<usize> {
    let p = g.nrows();
    (0..p).map(|i| (0..p).filter(|&j| g[(i, j)] == 1).count()).collect()
}

/// Mean local clustering coefficient over nodes of degree >= 2; `None` when
/// no node qualifies.
fn mean_clustering(g: &DMatrix<u8>, deg: &[usize]) -> Option<f64> {
    let p = g.nrows();
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in 0..p {
        if deg[v] < 2 {
            continue;
        }
        let neighbors: Vec<usize> = (0..p).filter(|&u| g[(v, u)] == 1).collect();
        let mut links = 0usize;
        for (ai, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[ai + 1..] {
                links += usize::from(g[(a, b)] == 1);
            }
        }
        sum += 2.0 * links as f64 / (deg[v] * (deg[v] - 1)) as f64;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean shortest-path length over connected pairs after dropping isolated
/// nodes; `None` with fewer than 3 non-isolated nodes or no connected pairs.
fn mean_path_length(g: &DMatrix<u8>, deg: &[usize]) -> Option<f64> {
    let nodes: Vec<usize> = (0..g.nrows()).filter(|&v| deg[v] > 0).collect();
    if nodes.len() < 3 {
        return None;
    }
    let index_of: std::collections::HashMap<usize, usize> =
        nodes.iter().enumerate().map(|(idx, &v)| (v, idx)).collect();
    let mut total = 0u64;
    let mut pairs = 0u64;
    let mut dist = vec![usize::MAX; nodes.len()];
    let mut queue = std::collections::VecDeque::new();
    for (start, &s) in nodes.iter().enumerate() {
        dist.fill(usize::MAX);
        dist[start] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            let dv = dist[index_of[&v]];
            for &u in &nodes {
                if g[(v, u)] == 1 && dist[index_of[&u]] == usize::MAX {
                    dist[index_of[&u]] = dv + 1;
                    queue.push_back(u);
                }
            }
        }
        for other in (start + 1)..nodes.len() {
            if dist[other] != usize::MAX {
                total += dist[other] as u64;
                pairs += 1;
            }
        }
    }
    (pairs > 0).then(|| total as f64 / pairs as f64)
}

/// Uniform random graph on `p` nodes with exactly `m` edges.
fn random_graph(p: usize, m: usize, rng: &mut impl Rng) -> DMatrix<u8> {
    let max_edges = p * (p - 1) / 2;
    let chosen = rand::seq::index::sample(rng, max_edges, m.min(max_edges));
    let mut g = DMatrix::<u8>::zeros(p, p);
    for flat in chosen {
        // Invert the upper-triangle flattening (column-major over j, i<j).
        let mut j = 1;
        let mut offset = 0;
        while offset + j <= flat {
            offset += j;
            j += 1;
        }
        let i = flat - offset;
        g[(i, j)] = 1;
        g[(j, i)] = 1;
    }
    g
}

pub fn graph_metrics(g: &DMatrix<u8>, n_random: usize, rng: &mut impl Rng) -> Option<GraphMetrics> {
    let p = g.nrows();
    let deg = degrees(g);
    if deg.iter().filter(|&&d| d > 0).count() < 3 {
        return None;
    }
    let clustering = mean_clustering(g, &deg)?;
    let path_length = mean_path_length(g, &deg)?;
    let m = deg.iter().sum::<usize>() / 2;
    let mut c_sum = 0.0;
    let mut c_n = 0usize;
    let mut l_sum = 0.0;
    let mut l_n = 0usize;
    for _ in 0..n_random {
        let r = random_graph(p, m, rng);
        let rdeg = degrees(&r);
        if let Some(c) = mean_clustering(&r, &rdeg) {
            c_sum += c;
            c_n += 1;
        }
        if let Some(l) = mean_path_length(&r, &rdeg) {
            l_sum += l;
            l_n += 1;
        }
    }
    if c_n == 0 || l_n == 0 {
        return None;
    }
    let c_rand = c_sum / c_n as f64;
    let l_rand = l_sum / l_n as f64;
    if c_rand <= 0.0 || l_rand <= 0.0 {
        return None;
    }
    let gamma = clustering / c_rand;
    let lambda = path_length / l_rand;
    Some(GraphMetrics { clustering, path_length, gamma, lambda, sigma: gamma / lambda })
}

/// Mean and standard error of the mean; SEM is 0 for fewer than two values.
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn graph_from_edges(p: usize, edges: &[(usize, usize)]) -> DMatrix<u8> {
        let mut g = DMatrix::<u8>::zeros(p, p);
        for &(i, j) in edges {
            g[(i, j)] = 1;
            g[(j, i)] = 1;
        }
        g
    }

    #[test]
    fn confusion_hand_enumeration() {
        let truth = graph_from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)]);
        let guess = graph_from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 3)]);
        let c = confusion(&guess, &truth).unwrap();
        assert_eq!(
            c,
            Confusion { true_pos: 3, false_pos: 1, true_neg: 4, false_neg: 2 }
        );
        assert_eq!(c.total(), 10);

        let perfect = confusion(&truth, &truth).unwrap();
        assert_eq!(perfect.true_pos, 5);
        assert_eq!(perfect.false_pos, 0);
        assert_eq!(perfect.false_neg, 0);
        assert_eq!(perfect.true_neg, 5);

        let empty = confusion(&DMatrix::zeros(5, 5), &truth).unwrap();
        assert_eq!(empty.true_pos, 0);
        assert_eq!(empty.false_pos, 0);

        assert!(confusion(&DMatrix::zeros(4, 4), &truth).is_err());
    }

    #[test]
    fn rates_and_mcc_formula() {
        let c = Confusion { true_pos: 3, false_pos: 1, true_neg: 4, false_neg: 2 };
        let r = rates_and_mcc(&c);
        assert!((r.mcc - 10.0 / 600.0_f64.sqrt()).abs() < 1e-12);
        assert!((r.tpr - 0.6).abs() < 1e-12);
        assert!((r.fpr - 0.2).abs() < 1e-12);
        assert!(!r.degenerate);

        let perfect = Confusion { true_pos: 5, false_pos: 0, true_neg: 5, false_neg: 0 };
        assert!((rates_and_mcc(&perfect).mcc - 1.0).abs() < 1e-12);

        // All-negative prediction on nonempty truth: tpr 0, mcc flagged 0.
        let allneg = Confusion { true_pos: 0, false_pos: 0, true_neg: 5, false_neg: 5 };
        let ra = rates_and_mcc(&allneg);
        assert_eq!(ra.tpr, 0.0);
        assert_eq!(ra.mcc, 0.0);
        assert!(ra.degenerate);
    }

    /// Quadratic-time reference: count positive/negative score pairs directly.
    fn auc_brute(scored: &[(f64, bool)]) -> Option<f64> {
        let pos: Vec<f64> = scored.iter().filter(|&&(_, l)| l).map(|&(s, _)| s).collect();
        let neg: Vec<f64> = scored.iter().filter(|&&(_, l)| !l).map(|&(s, _)| s).collect();
        if pos.is_empty() || neg.is_empty() {
            return None;
        }
        let mut wins = 0.0;
        for &a in &pos {
            for &b in &neg {
                if a > b {
                    wins += 1.0;
                } else if a == b {
                    wins += 0.5;
                }
            }
        }
        Some(wins / (pos.len() * neg.len()) as f64)
    }

    #[test]
    fn auc_matches_brute_force_and_monotone_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        use rand::Rng;
        for trial in 0..200 {
            let n = rng.gen_range(2..40);
            let scored: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    // Quantized scores force ties through the midrank path.
                    let s = (rng.gen::<f64>() * 8.0).round() / 8.0;
                    (s, rng.gen::<bool>())
                })
                .collect();
            let fast = auc_from_scores(&scored);
            let brute = auc_brute(&scored);
            match (fast, brute) {
                (None, None) => {}
                (Some(f), Some(b)) => assert!((f - b).abs() < 1e-12, "trial {trial}: {f} vs {b}"),
                other => panic!("trial {trial}: mismatch {other:?}"),
            }
            // Strictly monotone transform leaves AUC unchanged.
            let warped: Vec<(f64, bool)> =
                scored.iter().map(|&(s, l)| ((s * 3.0 + 1.0).exp(), l)).collect();
            assert_eq!(auc_from_scores(&warped), fast);
        }
    }

    #[test]
    fn roc_auc_edge_cases() {
        let truth = graph_from_edges(4, &[(0, 1), (2, 3)]);
        let mut scores = DMatrix::<f64>::zeros(4, 4);
        for j in 0..4 {
            for i in 0..j {
                let s = f64::from(truth[(i, j)]);
                scores[(i, j)] = s;
                scores[(j, i)] = s;
            }
        }
        assert_eq!(roc_auc(&scores, &truth).unwrap(), Some(1.0));
        let flat = DMatrix::<f64>::from_element(4, 4, 0.3);
        assert_eq!(roc_auc(&flat, &truth).unwrap(), Some(0.5));
        // Degenerate truth: no edges.
        assert_eq!(roc_auc(&flat, &DMatrix::zeros(4, 4)).unwrap(), None);
        // And all edges.
        let mut full = DMatrix::<u8>::from_element(4, 4, 1);
        full.fill_diagonal(0);
        assert_eq!(roc_auc(&flat, &full).unwrap(), None);
    }

    #[test]
    fn differential_pooling() {
        let g1 = graph_from_edges(4, &[(0, 1), (1, 2)]);
        let mut g2 = g1.clone();
        // One flip: edge (1,2) absent in group 2, edge (0,3) added.
        g2[(1, 2)] = 0;
        g2[(2, 1)] = 0;
        g2[(0, 3)] = 1;
        g2[(3, 0)] = 1;
        let truths = [g1.clone(), g2.clone()];

        // Perfect predictions recover the differential truth exactly.
        let rep = differential_eval(&truths, None, &truths).unwrap();
        assert_eq!(rep.confusion.true_pos, 2);
        assert_eq!(rep.confusion.false_pos, 0);
        assert_eq!(rep.confusion.false_neg, 0);
        assert_eq!(rep.confusion.total(), 6);
        assert!(rep.auc.is_none(), "no scores supplied");

        // Identical truths: any predicted difference is a false positive.
        let same = [g1.clone(), g1.clone()];
        let rep2 = differential_eval(&[g1.clone(), g2.clone()], None, &same).unwrap();
        assert_eq!(rep2.confusion.true_pos, 0);
        assert_eq!(rep2.confusion.false_pos, 2);

        // Identical predictions on identical truths: clean slate.
        let rep3 = differential_eval(&same, None, &same).unwrap();
        assert_eq!(rep3.confusion.true_pos, 0);
        assert_eq!(rep3.confusion.false_pos, 0);

        // Scores: |ppi difference| ranks the flipped positions first.
        let mut s1 = DMatrix::<f64>::from_element(4, 4, 0.4);
        let mut s2 = DMatrix::<f64>::from_element(4, 4, 0.4);
        s1[(1, 2)] = 0.9;
        s2[(1, 2)] = 0.1;
        s2[(0, 3)] = 0.95;
        s1[(0, 3)] = 0.05;
        let rep4 = differential_eval(&truths, Some(&[s1, s2]), &truths).unwrap();
        assert_eq!(rep4.auc, Some(1.0));

        assert!(differential_eval(&truths[..1], None, &truths[..1]).is_err());
    }

    #[test]
    fn frobenius_loss_cases() {
        let truth = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert_eq!(frobenius_loss(&[truth.clone()], &[truth.clone()]).unwrap(), 0.0);
        // Zero estimate: loss is exactly 1 per group.
        let zero = DMatrix::<f64>::zeros(2, 2);
        assert!((frobenius_loss(&[zero], &[truth.clone()]).unwrap() - 1.0).abs() < 1e-15);
        // Hand case: error only in the off-diagonal pair.
        let hat = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let expect = (2.0 * 0.2_f64.powi(2)) / (2.0 + 2.0 * 0.25);
        assert!((frobenius_loss(&[hat.clone()], &[truth.clone()]).unwrap() - expect).abs() < 1e-15);
        // Joint scaling invariance.
        let l1 = frobenius_loss(&[hat.clone()], &[truth.clone()]).unwrap();
        let l2 = frobenius_loss(&[hat * 3.0], &[truth * 3.0]).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        assert!(frobenius_loss(&[DMatrix::zeros(2, 2)], &[DMatrix::zeros(2, 2)]).is_err());
    }

    #[test]
    fn topology_closed_forms() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        // Complete K5: C = L = 1, and every same-size random graph is K5 too.
        let mut k5 = DMatrix::<u8>::from_element(5, 5, 1);
        k5.fill_diagonal(0);
        let m = graph_metrics(&k5, 20, &mut rng).unwrap();
        assert_eq!(m.clustering, 1.0);
        assert_eq!(m.path_length, 1.0);
        assert_eq!(m.gamma, 1.0);
        assert_eq!(m.lambda, 1.0);
        assert_eq!(m.sigma, 1.0);

        // 5-cycle: no triangles, mean distance 1.5.
        let cycle = graph_from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        let deg = degrees(&cycle);
        assert_eq!(mean_clustering(&cycle, &deg), Some(0.0));
        assert_eq!(mean_path_length(&cycle, &deg), Some(1.5));
        // gamma would divide by a random baseline; with zero clustering the
        // full metric is degenerate, which the closed forms above pin down.

        // Isolated nodes are dropped from path length: a triangle plus two
        // loose nodes behaves like a bare triangle.
        let tri = graph_from_edges(5, &[(0, 1), (1, 2), (0, 2)]);
        let dt = degrees(&tri);
        assert_eq!(mean_path_length(&tri, &dt), Some(1.0));
        assert_eq!(mean_clustering(&tri, &dt), Some(1.0));

        // Fewer than 3 non-isolated nodes: sentinel.
        let pair = graph_from_edges(5, &[(0, 1)]);
        assert!(graph_metrics(&pair, 10, &mut rng).is_none());
    }

    #[test]
    fn random_graph_uniformity_basics() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g = random_graph(7, 9, &mut rng);
            assert_eq!(degrees(&g).iter().sum::<usize>(), 18);
            assert_eq!(g.transpose(), g);
            for d in 0..7 {
                assert_eq!(g[(d, d)], 0);
            }
        }
        // Edge positions cover the full triangle across draws.
        let mut seen = DMatrix::<u8>::zeros(6, 6);
        for _ in 0..400 {
            let g = random_graph(6, 3, &mut rng);
            for j in 0..6 {
                for i in 0..j {
                    seen[(i, j)] |= g[(i, j)];
                }
            }
        }
        for j in 0..6 {
            for i in 0..j {
                assert_eq!(seen[(i, j)], 1, "position ({i},{j}) never sampled");
            }
        }
    }

    #[test]
    fn mean_sem_arithmetic() {
        let (m, s) = mean_sem(&[2.0, 4.0, 6.0]);
        assert!((m - 4.0).abs() < 1e-15);
        assert!((s - (4.0_f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_sem(&[5.0]), (5.0, 0.0));
        assert!(mean_sem(&[]).0.is_nan());
    }
}
