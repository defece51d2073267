//! Windowed-sinc sample-rate conversion.
//!
//! One kernel serves both rate conversion (`resample`) and
//! resampling-based speed change: the output grid is walked at a fixed
//! step through the input, with the sinc cutoff lowered when the step
//! compresses the signal (anti-aliasing).

/// Half-width of the interpolation kernel in zero crossings.
const KERNEL_HALF_WIDTH: usize = 32;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Evaluates the source at fractional positions `j * step` for
/// `j < out_len`. `cutoff` is the lowpass edge relative to Nyquist.
pub(crate) fn sinc_interpolate(input: &[f64], out_len: usize, step: f64, cutoff: f64) -> Vec<f64> {
    let half = KERNEL_HALF_WIDTH as f64;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let center = j as f64 * step;
        let lo = ((center - half / cutoff).ceil() as isize).max(0);
        let hi = ((center + half / cutoff).floor() as isize).min(input.len() as isize - 1);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for k in lo..=hi {
            let t = (k as f64 - center) * cutoff;
            // Hann-windowed sinc.
            let window = 0.5 + 0.5 * (std::f64::consts::PI * t / half).cos();
            let w = sinc(t) * window;
            acc += input[k as usize] * w;
            wsum += w;
        }
        // Normalizing by the kernel sum keeps DC gain at exactly 1 even at
        // the edges where the kernel is truncated.
        out.push(if wsum.abs() > 1e-12 { acc / wsum } else { 0.0 });
    }
    out
}

/// Resamples `input` from `src_rate` to `dst_rate`. Identity when the rates
/// match; output length is `round(len × dst / src)`.
pub fn resample(input: &[f64], src_rate: u32, dst_rate: u32) -> Vec<f64> {
    if src_rate == dst_rate {
        return input.to_vec();
    }
    let ratio = f64::from(dst_rate) / f64::from(src_rate);
    let out_len = (input.len() as f64 * ratio).round() as usize;
    let cutoff = ratio.min(1.0) * 0.95;
    sinc_interpolate(input, out_len, 1.0 / ratio, cutoff)
}
