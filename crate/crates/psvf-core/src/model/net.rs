#![allow(clippy::needless_range_loop)]

use super::config::TdnnConfig;
use super::params::Parameters;
use super::tensor::{FrameMatrix, Tensor};
use super::ModelError;
use crate::features::MelSpec;
use crate::scalar::Scalar;

/// Floor applied to the pooled standard deviation before any division in
/// backprop.
const STD_FLOOR: f64 = 1e-9;

pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Mean + population standard deviation per channel, concatenated to a
/// `2C` vector. Accumulation uses Welford's update so the result is stable
/// for long inputs.
pub fn stats_pool<T: Scalar>(frames: &FrameMatrix<T>) -> Vec<T> {
    assert!(frames.frames >= 1, "stats pooling needs at least one frame");
    let c = frames.channels;
    let mut mean = vec![T::zero(); c];
    let mut m2 = vec![T::zero(); c];
    for t in 0..frames.frames {
        let row = frames.row(t);
        let count = T::of_f64((t + 1) as f64);
        for i in 0..c {
            let delta = row[i] - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (row[i] - mean[i]);
        }
    }
    let n = T::of_f64(frames.frames as f64);
    let mut out = Vec::with_capacity(2 * c);
    out.extend_from_slice(&mean);
    for i in 0..c {
        out.push((m2[i] / n).max(T::zero()).sqrt());
    }
    out
}

/// Mean absolute error over a batch.
pub fn l1_loss<T: Scalar>(pred: &[T], target: &[T]) -> Result<T, ModelError> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(ModelError::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let sum: T = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t).abs())
        .sum();
    Ok(sum / T::of_f64(pred.len() as f64))
}

/// Subgradient of `|pred - target|` w.r.t. `pred`: the sign, with 0 at
/// equality. Batch-mean scaling is the caller's.
pub fn l1_grad<T: Scalar>(pred: T, target: T) -> T {
    if pred > target {
        T::one()
    } else if pred < target {
        -T::one()
    } else {
        T::zero()
    }
}

/// Activations retained by a training-mode forward pass.
#[derive(Debug, Clone)]
struct ForwardCache<T> {
    /// `acts[0]` is the input; `acts[i+1] = relu(conv_i(acts[i]))`.
    acts: Vec<FrameMatrix<T>>,
    preacts: Vec<FrameMatrix<T>>,
    mean: Vec<T>,
    std: Vec<T>,
    pooled: Vec<T>,
    embed_pre: Vec<T>,
}

/// Result of a forward pass; `score` is strictly inside (0, 1).
#[derive(Debug, Clone)]
pub struct ForwardOutput<T> {
    pub score: T,
    pub embedding: Vec<T>,
    cache: Option<Box<ForwardCache<T>>>,
}

fn mel_to_frames<T: Scalar>(mel: &MelSpec<T>) -> FrameMatrix<T> {
    FrameMatrix::from_rows(mel.frames, mel.n_mels, mel.data.clone())
}

/// Kernel-major copy of a conv weight (`[out][in][k]` → `[out][k][in]`) so
/// inner products run over contiguous input rows.
fn transpose_weight<T: Scalar>(w: &Tensor<T>) -> Vec<T> {
    let (out_c, in_c, k) = (w.shape[0], w.shape[1], w.shape[2]);
    let mut wt = vec![T::zero(); w.data.len()];
    for o in 0..out_c {
        for i in 0..in_c {
            for kk in 0..k {
                wt[(o * k + kk) * in_c + i] = w.data[(o * in_c + i) * k + kk];
            }
        }
    }
    wt
}

fn conv1d_forward<T: Scalar>(
    input: &FrameMatrix<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    dilation: usize,
) -> FrameMatrix<T> {
    let (out_c, in_c, k) = (w.shape[0], w.shape[1], w.shape[2]);
    debug_assert_eq!(in_c, input.channels);
    let t_out = input.frames - (k - 1) * dilation;
    let wt = transpose_weight(w);
    let mut out = FrameMatrix::zeros(t_out, out_c);
    for t in 0..t_out {
        let out_row = &mut out.data[t * out_c..(t + 1) * out_c];
        for (o, slot) in out_row.iter_mut().enumerate() {
            let mut acc = b.data[o];
            for kk in 0..k {
                let in_row = input.row(t + kk * dilation);
                let w_row = &wt[(o * k + kk) * in_c..(o * k + kk + 1) * in_c];
                let mut dot = T::zero();
                for i in 0..in_c {
                    dot += w_row[i] * in_row[i];
                }
                acc += dot;
            }
            *slot = acc;
        }
    }
    out
}

fn relu<T: Scalar>(m: &FrameMatrix<T>) -> FrameMatrix<T> {
    FrameMatrix {
        frames: m.frames,
        channels: m.channels,
        data: m.data.iter().map(|&v| v.max(T::zero())).collect(),
    }
}

/// Full forward pass: dilated conv blocks + ReLU, statistics pooling,
/// linear → ReLU embedding, linear head, sigmoid. `training` keeps the
/// activation cache for [`backward`].
pub fn forward<T: Scalar>(
    mel: &MelSpec<T>,
    params: &Parameters<T>,
    cfg: &TdnnConfig,
    training: bool,
) -> Result<ForwardOutput<T>, ModelError> {
    if mel.n_mels != cfg.blocks[0].in_channels {
        return Err(ModelError::ShapeMismatch(format!(
            "input has {} mel bins, first block expects {}",
            mel.n_mels, cfg.blocks[0].in_channels
        )));
    }
    let needed = cfg.receptive_field();
    if mel.frames < needed {
        return Err(ModelError::TooFewFrames {
            frames: mel.frames,
            needed,
        });
    }

    let n_blocks = cfg.blocks.len();
    let mut acts: Vec<FrameMatrix<T>> = Vec::with_capacity(n_blocks + 1);
    let mut preacts: Vec<FrameMatrix<T>> = Vec::with_capacity(n_blocks);
    acts.push(mel_to_frames(mel));
    for (i, block) in cfg.blocks.iter().enumerate() {
        let w = params.tensor(2 * i);
        let b = params.tensor(2 * i + 1);
        let pre = conv1d_forward(&acts[i], w, b, block.dilation);
        acts.push(relu(&pre));
        preacts.push(pre);
    }

    let pooled = stats_pool(acts.last().unwrap());
    let c_last = cfg.last_channels();
    let (mean, std) = (pooled[..c_last].to_vec(), pooled[c_last..].to_vec());

    let ew = params.tensor(2 * n_blocks);
    let eb = params.tensor(2 * n_blocks + 1);
    let mut embed_pre = vec![T::zero(); cfg.embed_dim];
    for (j, slot) in embed_pre.iter_mut().enumerate() {
        let row = &ew.data[j * 2 * c_last..(j + 1) * 2 * c_last];
        let mut acc = eb.data[j];
        for (c, &p) in pooled.iter().enumerate() {
            acc += row[c] * p;
        }
        *slot = acc;
    }
    let embedding: Vec<T> = embed_pre.iter().map(|&v| v.max(T::zero())).collect();

    let hw = params.tensor(2 * n_blocks + 2);
    let hb = params.tensor(2 * n_blocks + 3);
    let mut logit = hb.data[0];
    for (j, &e) in embedding.iter().enumerate() {
        logit += hw.data[j] * e;
    }
    let score = sigmoid(logit);

    let cache = training.then(|| {
        Box::new(ForwardCache {
            acts,
            preacts,
            mean,
            std,
            pooled,
            embed_pre,
        })
    });
    Ok(ForwardOutput {
        score,
        embedding,
        cache,
    })
}

/// Conv-stack output (the statistics-pooling input) for a mel input; used
/// by frame-alignment diagnostics and tests.
pub fn forward_frames<T: Scalar>(
    mel: &MelSpec<T>,
    params: &Parameters<T>,
    cfg: &TdnnConfig,
) -> Result<FrameMatrix<T>, ModelError> {
    let needed = cfg.receptive_field();
    if mel.frames < needed {
        return Err(ModelError::TooFewFrames {
            frames: mel.frames,
            needed,
        });
    }
    let mut act = mel_to_frames(mel);
    for (i, block) in cfg.blocks.iter().enumerate() {
        let pre = conv1d_forward(&act, params.tensor(2 * i), params.tensor(2 * i + 1), block.dilation);
        act = relu(&pre);
    }
    Ok(act)
}

/// Backpropagates `d_score` (the loss gradient at the sigmoid output) into
/// per-tensor gradients. Frozen tensors receive exactly-zero gradients, and
/// propagation stops beneath the deepest trainable block (freezing is a
/// prefix of the block stack).
pub fn backward<T: Scalar>(
    output: &ForwardOutput<T>,
    d_score: T,
    params: &Parameters<T>,
    cfg: &TdnnConfig,
) -> Result<Parameters<T>, ModelError> {
    let cache = output.cache.as_deref().ok_or(ModelError::MissingCache)?;
    let n_blocks = cfg.blocks.len();
    let c_last = cfg.last_channels();
    let mut grads = params.zeros_like();

    let s = output.score;
    let d_logit = d_score * s * (T::one() - s);

    // Head.
    let hw = params.tensor(2 * n_blocks + 2);
    let mut d_embedding = vec![T::zero(); cfg.embed_dim];
    {
        let d_hw = grads.tensor_mut(2 * n_blocks + 2);
        for j in 0..cfg.embed_dim {
            d_hw.data[j] = d_logit * output.embedding[j];
        }
    }
    grads.tensor_mut(2 * n_blocks + 3).data[0] = d_logit;
    for j in 0..cfg.embed_dim {
        d_embedding[j] = d_logit * hw.data[j];
    }

    // Embedding linear + ReLU.
    let ew = params.tensor(2 * n_blocks);
    let mut d_pooled = vec![T::zero(); 2 * c_last];
    {
        let d_pre: Vec<T> = (0..cfg.embed_dim)
            .map(|j| {
                if cache.embed_pre[j] > T::zero() {
                    d_embedding[j]
                } else {
                    T::zero()
                }
            })
            .collect();
        let d_ew = grads.tensor_mut(2 * n_blocks);
        for j in 0..cfg.embed_dim {
            let row = &mut d_ew.data[j * 2 * c_last..(j + 1) * 2 * c_last];
            for c in 0..2 * c_last {
                row[c] = d_pre[j] * cache.pooled[c];
            }
        }
        let d_eb = grads.tensor_mut(2 * n_blocks + 1);
        d_eb.data.copy_from_slice(&d_pre);
        for j in 0..cfg.embed_dim {
            let row = &ew.data[j * 2 * c_last..(j + 1) * 2 * c_last];
            for c in 0..2 * c_last {
                d_pooled[c] += d_pre[j] * row[c];
            }
        }
    }

    // Statistics pooling.
    let top = cache.acts.last().unwrap();
    let t_frames = top.frames;
    let inv_t = T::one() / T::of_f64(t_frames as f64);
    let mut d_act = FrameMatrix::<T>::zeros(t_frames, c_last);
    for t in 0..t_frames {
        let x = top.row(t);
        let row = d_act.row_mut(t);
        for c in 0..c_last {
            let d_mean = d_pooled[c];
            let d_std = d_pooled[c_last + c];
            let safe_std = cache.std[c].max(T::of_f64(STD_FLOOR));
            row[c] = d_mean * inv_t + d_std * (x[c] - cache.mean[c]) * inv_t / safe_std;
        }
    }

    // Conv blocks, top down. Stop once every remaining block is frozen.
    for i in (0..n_blocks).rev() {
        let block = &cfg.blocks[i];
        let (out_c, in_c, k, d) = (
            block.out_channels,
            block.in_channels,
            block.kernel,
            block.dilation,
        );
        let pre = &cache.preacts[i];
        // Through ReLU.
        let mut d_pre = d_act;
        for (slot, &p) in d_pre.data.iter_mut().zip(&pre.data) {
            if p <= T::zero() {
                *slot = T::zero();
            }
        }

        let frozen = params.is_frozen(2 * i);
        let input = &cache.acts[i];
        if !frozen {
            let mut d_wt = vec![T::zero(); out_c * in_c * k];
            {
                let d_b = grads.tensor_mut(2 * i + 1);
                for t in 0..d_pre.frames {
                    let g_row = d_pre.row(t);
                    for o in 0..out_c {
                        let g = g_row[o];
                        if g == T::zero() {
                            continue;
                        }
                        d_b.data[o] += g;
                        for kk in 0..k {
                            let in_row = input.row(t + kk * d);
                            let acc = &mut d_wt[(o * k + kk) * in_c..(o * k + kk + 1) * in_c];
                            for i2 in 0..in_c {
                                acc[i2] += g * in_row[i2];
                            }
                        }
                    }
                }
            }
            let d_w = grads.tensor_mut(2 * i);
            for o in 0..out_c {
                for i2 in 0..in_c {
                    for kk in 0..k {
                        d_w.data[(o * in_c + i2) * k + kk] = d_wt[(o * k + kk) * in_c + i2];
                    }
                }
            }
        }

        let below_trainable = i > 0 && !params.is_frozen(2 * (i - 1));
        if !below_trainable {
            break;
        }
        let w = params.tensor(2 * i);
        let wt = transpose_weight(w);
        let mut d_in = FrameMatrix::<T>::zeros(input.frames, in_c);
        for t in 0..d_pre.frames {
            let g_row = d_pre.row(t);
            for o in 0..out_c {
                let g = g_row[o];
                if g == T::zero() {
                    continue;
                }
                for kk in 0..k {
                    let dst = d_in.row_mut(t + kk * d);
                    let w_row = &wt[(o * k + kk) * in_c..(o * k + kk + 1) * in_c];
                    for i2 in 0..in_c {
                        dst[i2] += g * w_row[i2];
                    }
                }
            }
        }
        d_act = d_in;
    }

    Ok(grads)
}
