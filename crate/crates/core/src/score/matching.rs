//! Maximum-cardinality one-to-one matching of predicted to true peaks within
//! a tolerance. Greedy closest-first seeds the matching and augmenting paths
//! finish it, since greedy alone can leave a matchable pair unmatched.

/// Pairs `(pred index, truth index)` of a maximum matching where
/// `|pred - truth| ≤ tol`.
pub fn match_within(pred: &[f64], truth: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| {
            let mut c: Vec<usize> = (0..truth.len()).filter(|&j| (p - truth[j]).abs() <= tol).collect();
            c.sort_by(|&a, &b| (p - truth[a]).abs().total_cmp(&(p - truth[b]).abs()));
            c
        })
        .collect();

    let mut truth_of = vec![None; pred.len()];
    let mut pred_of = vec![None; truth.len()];
    let mut edges: Vec<(usize, usize)> = adj.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |&j| (i, j))).collect();
    edges.sort_by(|a, b| {
        let da = (pred[a.0] - truth[a.1]).abs();
        let db = (pred[b.0] - truth[b.1]).abs();
        da.total_cmp(&db).then(a.cmp(b))
    });
    for (i, j) in edges {
        if truth_of[i].is_none() && pred_of[j].is_none() {
            truth_of[i] = Some(j);
            pred_of[j] = Some(i);
        }
    }

    for i in 0..pred.len() {
        if truth_of[i].is_none() {
            let mut seen = vec![false; truth.len()];
            augment(i, &adj, &mut seen, &mut truth_of, &mut pred_of);
        }
    }
    truth_of
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect()
}

fn augment(
    i: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    truth_of: &mut [Option<usize>],
    pred_of: &mut [Option<usize>],
) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if pred_of[j].is_none_or(|k| augment(k, adj, seen, truth_of, pred_of)) {
            truth_of[i] = Some(j);
            pred_of[j] = Some(i);
            return true;
        }
    }
    false
}
