use crate::error::{Error, Result};
use crate::idd::clip_llr;
use crate::txchain::{Bit, TrellisSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BcjrOutput {
    /// Decoder extrinsic LLRs of the coded bits (a-posteriori minus channel input).
    pub extrinsic: Vec<f64>,
    /// A-posteriori LLRs of the coded bits.
    pub coded_app: Vec<f64>,
    /// A-posteriori LLRs of the information bits (tail excluded).
    pub info_llr: Vec<f64>,
    pub info_bits: Vec<Bit>,
}

fn max_star(a: f64, b: f64, maxlog: bool) -> f64 {
    let m = a.max(b);
    if maxlog || m == f64::NEG_INFINITY {
        m
    } else {
        m + (-(a - b).abs()).exp().ln_1p()
    }
}

/// Forward-backward MAP decoding of a zero-tail terminated block.
///
/// `channel_llr` holds one LLR per coded bit in encoder output order. With
/// `maxlog` the Jacobian logarithm is replaced by `max`.
pub fn bcjr_decode(channel_llr: &[f64], trellis: &TrellisSpec, maxlog: bool) -> Result<BcjrOutput> {
    let n_out = trellis.outputs_per_step();
    let mem = trellis.memory();
    if channel_llr.len() % n_out != 0 || channel_llr.len() < n_out * mem {
        return Err(Error::dims(
            "bcjr_decode block length",
            format!("a multiple of {n_out} of at least {}", n_out * mem),
            channel_llr.len(),
        ));
    }
    let steps = channel_llr.len() / n_out;
    let info_len = steps - mem;
    let ns = trellis.num_states();
    let llr: Vec<f64> = channel_llr.iter().map(|&x| clip_llr(x)).collect();

    let mut next = vec![[0usize; 2]; ns];
    let mut outs = vec![[0u32; 2]; ns];
    for s in 0..ns {
        for u in 0..2 {
            let (n, o) = trellis.step(s, u as Bit);
            next[s][u] = n;
            outs[s][u] = o;
        }
    }
    let gamma = |t: usize, out: u32| -> f64 {
        (0..n_out)
            .map(|c| {
                let l = llr[t * n_out + c];
                if (out >> c) & 1 == 0 {
                    l / 2.0
                } else {
                    -l / 2.0
                }
            })
            .sum()
    };
    let inputs = |t: usize| if t < info_len { 2 } else { 1 };

    let neg = f64::NEG_INFINITY;
    let mut alpha = vec![vec![neg; ns]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        for s in 0..ns {
            let a = alpha[t][s];
            if a == neg {
                continue;
            }
            for u in 0..inputs(t) {
                let n = next[s][u];
                alpha[t + 1][n] = max_star(alpha[t + 1][n], a + gamma(t, outs[s][u]), maxlog);
            }
        }
        let m = alpha[t + 1].iter().cloned().fold(neg, f64::max);
        if m.is_finite() {
            alpha[t + 1].iter_mut().for_each(|x| *x -= m);
        }
    }
    let mut beta = vec![vec![neg; ns]; steps + 1];
    beta[steps][0] = 0.0;
    for t in (0..steps).rev() {
        for s in 0..ns {
            let mut acc = neg;
            for u in 0..inputs(t) {
                let n = next[s][u];
                acc = max_star(acc, beta[t + 1][n] + gamma(t, outs[s][u]), maxlog);
            }
            beta[t][s] = acc;
        }
        let m = beta[t].iter().cloned().fold(neg, f64::max);
        if m.is_finite() {
            beta[t].iter_mut().for_each(|x| *x -= m);
        }
    }

    let mut coded_app = vec![0.0; channel_llr.len()];
    let mut info_llr = vec![0.0; info_len];
    for t in 0..steps {
        let mut bit_acc = vec![[neg; 2]; n_out];
        let mut in_acc = [neg; 2];
        for s in 0..ns {
            if alpha[t][s] == neg {
                continue;
            }
            for u in 0..inputs(t) {
                let n = next[s][u];
                let o = outs[s][u];
                let m = alpha[t][s] + gamma(t, o) + beta[t + 1][n];
                for (c, acc) in bit_acc.iter_mut().enumerate() {
                    let b = ((o >> c) & 1) as usize;
                    acc[b] = max_star(acc[b], m, maxlog);
                }
                in_acc[u] = max_star(in_acc[u], m, maxlog);
            }
        }
        for (c, acc) in bit_acc.iter().enumerate() {
            coded_app[t * n_out + c] = clip_llr(acc[0] - acc[1]);
        }
        if t < info_len {
            info_llr[t] = clip_llr(in_acc[0] - in_acc[1]);
        }
    }
    let extrinsic = coded_app.iter().zip(&llr).map(|(a, l)| clip_llr(a - l)).collect();
    let info_bits = info_llr.iter().map(|&l| (l < 0.0) as Bit).collect();
    Ok(BcjrOutput {
        extrinsic,
        coded_app,
        info_llr,
        info_bits,
    })
}
