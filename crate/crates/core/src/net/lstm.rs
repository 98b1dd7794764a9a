use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::params::LayerParams;
use super::{NetError, Scalar};

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Applies the gate nonlinearities in place to a `4·hidden` pre-activation
/// row: sigmoid on input/forget/output blocks, tanh on the candidate block.
fn activate<T: Scalar>(a: &mut [T], hidden: usize) {
    let (sig, cand) = a.split_at_mut(3 * hidden);
    for v in sig {
        *v = sigmoid(*v);
    }
    for v in cand {
        *v = v.tanh();
    }
}

/// One LSTM step.
///
/// `i, f, o = σ(x·W + h·U + b)`, `g = tanh(...)`, `c = f⊙c_prev + i⊙g`,
/// `h = o⊙tanh(c)`.
pub fn lstm_cell<T: Scalar>(
    x: ArrayView1<'_, T>,
    h_prev: ArrayView1<'_, T>,
    c_prev: ArrayView1<'_, T>,
    p: &LayerParams<T>,
) -> Result<(Array1<T>, Array1<T>), NetError> {
    p.check_shapes()?;
    let hidden = p.hidden_dim();
    if x.len() != p.input_dim() {
        return Err(NetError::DimensionMismatch {
            what: "cell input",
            expected: p.input_dim(),
            found: x.len(),
        });
    }
    for (v, what) in [(&h_prev, "previous hidden state"), (&c_prev, "previous cell state")] {
        if v.len() != hidden {
            return Err(NetError::DimensionMismatch {
                what,
                expected: hidden,
                found: v.len(),
            });
        }
    }
    let mut a = x.dot(&p.w) + h_prev.dot(&p.u) + &p.b;
    activate(a.as_slice_mut().expect("fresh array"), hidden);
    let mut c = Array1::zeros(hidden);
    let mut h = Array1::zeros(hidden);
    for k in 0..hidden {
        let (i, f, o, g) = (a[k], a[hidden + k], a[2 * hidden + k], a[3 * hidden + k]);
        c[k] = f * c_prev[k] + i * g;
        h[k] = o * c[k].tanh();
    }
    Ok((h, c))
}

/// Activations of one direction over a sequence, kept for BPTT.
///
/// Rows are in processing order. `h` and `c` carry an extra leading zero
/// row for the initial state, so row `t` is the state before step `t`.
#[derive(Debug, Clone)]
pub(crate) struct SequenceCache<T> {
    inputs: Array2<T>,
    h: Array2<T>,
    c: Array2<T>,
    gates: Array2<T>,
    tanh_c: Array2<T>,
    reversed: bool,
}

impl<T: Scalar> SequenceCache<T> {
    /// Hidden states `L × hidden`, in original time order.
    pub(crate) fn outputs(&self) -> Array2<T> {
        let out = self.h.slice(s![1.., ..]);
        if self.reversed {
            out.slice(s![..;-1, ..]).to_owned()
        } else {
            out.to_owned()
        }
    }
}

/// Runs one direction over `inputs` (`L × input_dim`, original order).
pub(crate) fn run_sequence<T: Scalar>(
    p: &LayerParams<T>,
    inputs: ArrayView2<'_, T>,
    reversed: bool,
) -> SequenceCache<T> {
    let len = inputs.nrows();
    let hidden = p.hidden_dim();
    let inputs = if reversed {
        inputs.slice(s![..;-1, ..]).to_owned()
    } else {
        inputs.to_owned()
    };
    let mut gates = inputs.dot(&p.w) + &p.b;
    let mut h = Array2::zeros((len + 1, hidden));
    let mut c = Array2::zeros((len + 1, hidden));
    let mut tanh_c = Array2::zeros((len, hidden));
    for t in 0..len {
        let rec = h.row(t).dot(&p.u);
        let mut row = gates.row_mut(t);
        row += &rec;
        let a = row.as_slice_mut().expect("row of standard-layout array");
        activate(a, hidden);
        for k in 0..hidden {
            let (i, f, o, g) = (a[k], a[hidden + k], a[2 * hidden + k], a[3 * hidden + k]);
            let cell = f * c[[t, k]] + i * g;
            let tc = cell.tanh();
            c[[t + 1, k]] = cell;
            tanh_c[[t, k]] = tc;
            h[[t + 1, k]] = o * tc;
        }
    }
    SequenceCache {
        inputs,
        h,
        c,
        gates,
        tanh_c,
        reversed,
    }
}

/// Backpropagates `d_out` (gradient w.r.t. the outputs, `L × hidden`,
/// original time order) through one direction. Accumulates parameter
/// gradients into `grad` and returns the gradient w.r.t. the inputs in
/// original time order.
pub(crate) fn backprop_sequence<T: Scalar>(
    p: &LayerParams<T>,
    cache: &SequenceCache<T>,
    d_out: ArrayView2<'_, T>,
    grad: &mut LayerParams<T>,
) -> Array2<T> {
    let hidden = p.hidden_dim();
    let len = cache.inputs.nrows();
    let d_out = if cache.reversed {
        d_out.slice(s![..;-1, ..])
    } else {
        d_out.view()
    };
    let one = T::one();
    let mut d_pre = Array2::<T>::zeros((len, 4 * hidden));
    let mut dh_next = Array1::<T>::zeros(hidden);
    let mut dc_next = Array1::<T>::zeros(hidden);
    for t in (0..len).rev() {
        let a = cache.gates.row(t);
        let mut da = d_pre.row_mut(t);
        for k in 0..hidden {
            let (i, f, o, g) = (a[k], a[hidden + k], a[2 * hidden + k], a[3 * hidden + k]);
            let tc = cache.tanh_c[[t, k]];
            let dh = d_out[[t, k]] + dh_next[k];
            let d_o = dh * tc;
            let dc = dc_next[k] + dh * o * (one - tc * tc);
            let d_i = dc * g;
            let d_g = dc * i;
            let d_f = dc * cache.c[[t, k]];
            dc_next[k] = dc * f;
            da[k] = d_i * i * (one - i);
            da[hidden + k] = d_f * f * (one - f);
            da[2 * hidden + k] = d_o * o * (one - o);
            da[3 * hidden + k] = d_g * (one - g * g);
        }
        dh_next = p.u.dot(&da.view());
    }
    grad.w += &cache.inputs.t().dot(&d_pre);
    grad.u += &cache.h.slice(s![..len, ..]).t().dot(&d_pre);
    grad.b += &d_pre.sum_axis(Axis(0));
    let dx = d_pre.dot(&p.w.t());
    if cache.reversed {
        dx.slice(s![..;-1, ..]).to_owned()
    } else {
        dx
    }
}
