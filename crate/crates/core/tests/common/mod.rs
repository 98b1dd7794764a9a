//! Independent reference implementations used by the integration suites.
#![allow(dead_code)]

use std::collections::HashMap;

use covsent::net::{bce_loss, forward_with_masks, DropoutMasks, NetworkParameters};
use covsent::LabelVector;
use ndarray::Array2;

// ---- metrics, straight from the definitions ----

pub fn bf_hamming(truth: &[Vec<bool>], pred: &[Vec<bool>]) -> f64 {
    let mut wrong = 0usize;
    let mut slots = 0usize;
    for i in 0..truth.len() {
        for k in 0..truth[i].len() {
            slots += 1;
            if truth[i][k] ^ pred[i][k] {
                wrong += 1;
            }
        }
    }
    wrong as f64 / slots as f64
}

fn as_set(v: &[bool]) -> Vec<usize> {
    (0..v.len()).filter(|&k| v[k]).collect()
}

pub fn bf_jaccard(truth: &[Vec<bool>], pred: &[Vec<bool>]) -> f64 {
    let mut sum = 0.0;
    for (t, p) in truth.iter().zip(pred) {
        let (a, b) = (as_set(t), as_set(p));
        let inter = a.iter().filter(|x| b.contains(x)).count();
        let union = a.len() + b.len() - inter;
        sum += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    sum / truth.len() as f64
}

/// (macro, micro)
pub fn bf_f1(truth: &[Vec<bool>], pred: &[Vec<bool>]) -> (f64, f64) {
    let width = truth[0].len();
    let f = |tp: f64, fp: f64, fn_: f64| {
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        }
    };
    let mut per_class = Vec::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0.0, 0.0, 0.0);
    for k in 0..width {
        let tp = (0..truth.len()).filter(|&i| truth[i][k] && pred[i][k]).count() as f64;
        let fp = (0..truth.len()).filter(|&i| !truth[i][k] && pred[i][k]).count() as f64;
        let fn_ = (0..truth.len()).filter(|&i| truth[i][k] && !pred[i][k]).count() as f64;
        per_class.push(f(tp, fp, fn_));
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    (per_class.iter().sum::<f64>() / width as f64, f(tp_all, fp_all, fn_all))
}

/// LRAP via an explicit ranking: sort labels by descending score, earlier
/// index first on ties, then walk the list for each true label.
pub fn bf_lrap(truth: &[Vec<bool>], scores: &[Vec<f64>]) -> Option<f64> {
    let mut total = 0.0;
    let mut used = 0;
    for (t, s) in truth.iter().zip(scores) {
        if !t.iter().any(|&b| b) {
            continue;
        }
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
        let mut precisions = Vec::new();
        for (pos, &label) in order.iter().enumerate() {
            if t[label] {
                let hits = order[..=pos].iter().filter(|&&l| t[l]).count();
                precisions.push(hits as f64 / (pos + 1) as f64);
            }
        }
        total += precisions.iter().sum::<f64>() / precisions.len() as f64;
        used += 1;
    }
    (used > 0).then(|| total / used as f64)
}

// ---- network ----

/// Mean BCE of an inference or fixed-mask forward pass.
pub fn loss_of(
    params: &NetworkParameters<f64>,
    inputs: &Array2<f64>,
    masks: Option<&DropoutMasks<f64>>,
    target: &LabelVector,
) -> f64 {
    let cache = forward_with_masks(inputs.view(), params, masks).unwrap();
    bce_loss(&cache.scores(), target)
}

/// Worst violation found by comparing analytic gradients against central
/// differences: `(tensor, index, analytic, numeric)` for every failure.
pub fn gradient_mismatches(
    params: &NetworkParameters<f64>,
    analytic: &NetworkParameters<f64>,
    inputs: &Array2<f64>,
    masks: Option<&DropoutMasks<f64>>,
    target: &LabelVector,
    step: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> (usize, Vec<(String, usize, f64, f64)>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    let grads: Vec<(String, Vec<f64>)> = analytic.tensors().into_iter().map(|(n, t)| (n, t.to_vec())).collect();
    for (ti, (name, g)) in grads.iter().enumerate() {
        for j in 0..g.len() {
            let mut plus = params.clone();
            plus.tensors_mut()[ti].1[j] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[ti].1[j] -= step;
            let numeric = (loss_of(&plus, inputs, masks, target) - loss_of(&minus, inputs, masks, target)) / (2.0 * step);
            let diff = (g[j] - numeric).abs();
            let scale = g[j].abs().max(numeric.abs());
            if diff > abs_floor && diff / scale > rel_tol {
                bad.push((name.clone(), j, g[j], numeric));
            }
            checked += 1;
        }
    }
    (checked, bad)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One LSTM direction unrolled with scalar loops. Gate column blocks are
/// input, forget, output, candidate.
fn scalar_direction(
    w: &Array2<f64>,
    u: &Array2<f64>,
    b: &[f64],
    xs: &[Vec<f64>],
    reverse: bool,
) -> Vec<Vec<f64>> {
    let hidden = u.nrows();
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut out = vec![vec![0.0; hidden]; xs.len()];
    let steps: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
    for t in steps {
        let x = &xs[t];
        let pre = |gate: usize, j: usize| {
            let col = gate * hidden + j;
            let mut z = b[col];
            for (r, xv) in x.iter().enumerate() {
                z += xv * w[[r, col]];
            }
            for (r, hv) in h.iter().enumerate() {
                z += hv * u[[r, col]];
            }
            z
        };
        let mut nh = vec![0.0; hidden];
        let mut nc = vec![0.0; hidden];
        for j in 0..hidden {
            let i_g = sigmoid(pre(0, j));
            let f_g = sigmoid(pre(1, j));
            let o_g = sigmoid(pre(2, j));
            let g_g = pre(3, j).tanh();
            nc[j] = f_g * c[j] + i_g * g_g;
            nh[j] = o_g * nc[j].tanh();
        }
        h = nh;
        c = nc;
        out[t] = h.clone();
    }
    out
}

/// Scalar re-implementation of the full inference pass.
pub fn scalar_scores(params: &NetworkParameters<f64>, xs: &[Vec<f64>]) -> Vec<f64> {
    let run_layer = |layer: &covsent::net::RecurrentLayer<f64>, xs: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let f = scalar_direction(&layer.forward.w, &layer.forward.u, layer.forward.b.as_slice().unwrap(), xs, false);
        match &layer.backward {
            None => f,
            Some(bp) => {
                let bw = scalar_direction(&bp.w, &bp.u, bp.b.as_slice().unwrap(), xs, true);
                f.into_iter().zip(bw).map(|(mut a, b)| {
                    a.extend(b);
                    a
                }).collect()
            }
        }
    };
    let o1 = run_layer(&params.layer1, xs);
    let o2 = run_layer(&params.layer2, &o1);
    let h2 = params.layer2.forward.u.nrows();
    let last = xs.len() - 1;
    let mut rep: Vec<f64> = o2[last][..h2].to_vec();
    if params.layer2.backward.is_some() {
        rep.extend_from_slice(&o2[0][h2..]);
    }
    (0..params.output_b.len())
        .map(|k| {
            let mut z = params.output_b[k];
            for (r, v) in rep.iter().enumerate() {
                z += v * params.output_w[[r, k]];
            }
            sigmoid(z)
        })
        .collect()
}

// ---- analytics ----

/// Counts n-grams by enumerating every start position explicitly.
pub fn naive_ngrams(corpus: &[Vec<String>], n: usize) -> HashMap<Vec<String>, u64> {
    let mut out = HashMap::new();
    for tweet in corpus {
        if tweet.len() < n {
            continue;
        }
        for start in 0..=tweet.len() - n {
            let gram: Vec<String> = (0..n).map(|k| tweet[start + k].clone()).collect();
            *out.entry(gram).or_insert(0) += 1;
        }
    }
    out
}
