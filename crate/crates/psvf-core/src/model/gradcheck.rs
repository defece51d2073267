//! Central-finite-difference verification of the hand-written backward
//! pass. The differencing side never touches [`super::backward`]: it probes
//! the loss purely through forward evaluations.

#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{BlockSpec, TdnnConfig};
use super::net::{backward, forward, l1_grad, l1_loss};
use super::params::Parameters;
use super::ModelError;
use crate::features::{MelConfig, MelSpec};

/// The reduced architecture used for gradient verification: two blocks of
/// four channels over the 24-bin input, nothing frozen.
pub fn tiny_config() -> TdnnConfig {
    TdnnConfig {
        blocks: vec![
            BlockSpec {
                in_channels: 24,
                out_channels: 4,
                kernel: 5,
                dilation: 1,
            },
            BlockSpec {
                in_channels: 4,
                out_channels: 4,
                kernel: 3,
                dilation: 2,
            },
        ],
        embed_dim: 6,
        frozen_blocks: 0,
    }
}

fn random_mel(frames: usize, n_mels: usize, rng: &mut ChaCha8Rng) -> MelSpec<f64> {
    MelSpec {
        frames,
        n_mels,
        data: (0..frames * n_mels).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        config: MelConfig::default(),
    }
}

/// Smallest margin of any ReLU pre-activation (and pooled std) from its
/// kink. Central differences are only meaningful on a locally smooth loss,
/// so fixtures that sit on a kink are resampled.
fn kink_margin(mel: &MelSpec<f64>, params: &Parameters<f64>, cfg: &TdnnConfig) -> f64 {
    let mut margin = f64::INFINITY;
    let mut act = super::tensor::FrameMatrix::from_rows(mel.frames, mel.n_mels, mel.data.clone());
    for (i, block) in cfg.blocks.iter().enumerate() {
        let w = params.tensor(2 * i);
        let b = params.tensor(2 * i + 1);
        let t_out = act.frames - (block.kernel - 1) * block.dilation;
        let mut next = super::tensor::FrameMatrix::<f64>::zeros(t_out, block.out_channels);
        for t in 0..t_out {
            for o in 0..block.out_channels {
                let mut acc = b.data[o];
                for kk in 0..block.kernel {
                    let row = act.row(t + kk * block.dilation);
                    for c in 0..block.in_channels {
                        acc += w.data[(o * block.in_channels + c) * block.kernel + kk] * row[c];
                    }
                }
                margin = margin.min(acc.abs());
                next.row_mut(t)[o] = acc.max(0.0);
            }
        }
        act = next;
    }
    let pooled = super::net::stats_pool(&act);
    let c_last = cfg.last_channels();
    for &s in &pooled[c_last..] {
        margin = margin.min(s);
    }
    let ew = params.tensor(2 * cfg.blocks.len());
    let eb = params.tensor(2 * cfg.blocks.len() + 1);
    for j in 0..cfg.embed_dim {
        let mut acc = eb.data[j];
        for (c, &p) in pooled.iter().enumerate() {
            acc += ew.data[j * 2 * c_last + c] * p;
        }
        margin = margin.min(acc.abs());
    }
    margin
}

/// Runs one gradient check in double precision: backward gradients against
/// central finite differences of the L1 loss, for every trainable scalar.
/// Returns the maximum relative error.
pub fn max_relative_error(
    cfg: &TdnnConfig,
    seed: u64,
    frames: usize,
    epsilon: f64,
) -> Result<f64, ModelError> {
    let target = 0.9f64;
    // Resample until the fixture is comfortably differentiable: every ReLU
    // input and the pooled std must sit well clear of zero relative to the
    // probe step.
    let mut attempt = 0u64;
    let (mel, params) = loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b9)));
        let params = Parameters::<f64>::init(cfg, rng.gen())?;
        let mel = random_mel(frames, cfg.blocks[0].in_channels, &mut rng);
        if kink_margin(&mel, &params, cfg) > 50.0 * epsilon {
            break (mel, params);
        }
        attempt += 1;
        assert!(attempt < 64, "could not find a smooth fixture");
    };

    let out = forward(&mel, &params, cfg, true)?;
    let d_score = l1_grad(out.score, target);
    let grads = backward(&out, d_score, &params, cfg)?;

    let loss_at = |p: &Parameters<f64>| -> f64 {
        let o = forward(&mel, p, cfg, false).expect("forward");
        l1_loss(&[o.score], &[target]).expect("loss")
    };

    let mut max_rel = 0.0f64;
    let mut probe = params.clone();
    for idx in 0..params.len() {
        if params.is_frozen(idx) {
            for &g in &grads.tensor(idx).data {
                assert_eq!(g, 0.0, "frozen tensor gradient must be zero");
            }
            continue;
        }
        for slot in 0..params.tensor(idx).numel() {
            let original = params.tensor(idx).data[slot];
            probe.tensor_mut(idx).data[slot] = original + epsilon;
            let up = loss_at(&probe);
            probe.tensor_mut(idx).data[slot] = original - epsilon;
            let down = loss_at(&probe);
            probe.tensor_mut(idx).data[slot] = original;
            let fd = (up - down) / (2.0 * epsilon);
            let g = grads.tensor(idx).data[slot];
            let denom = g.abs().max(fd.abs()).max(1e-3);
            max_rel = max_rel.max((g - fd).abs() / denom);
        }
    }
    Ok(max_rel)
}
