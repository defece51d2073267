//! Minimal RIFF/WAVE reader and writer: linear PCM, 16-bit integer or
//! 32-bit float, any channel count. Channels are averaged to mono on read.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::FeatureError;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn bad(path: &Path, reason: impl Into<String>) -> FeatureError {
    FeatureError::UnsupportedFormat {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads a WAV file and returns mono `f64` samples plus the source rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, u32), FeatureError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad(path, "not a RIFF/WAVE file"));
    }
    let mut pos = 12usize;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(&bytes, pos + 4) as usize;
        let body_end = (pos + 8 + size).min(bytes.len());
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(bad(path, "fmt chunk too short"));
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos += 8 + size + (size & 1); // chunks are word-aligned
    }
    let (format, channels, rate, bits) = fmt.ok_or_else(|| bad(path, "missing fmt chunk"))?;
    let data = data.ok_or_else(|| bad(path, "missing data chunk"))?;
    if channels == 0 || rate == 0 {
        return Err(bad(path, "zero channels or sample rate"));
    }
    let channels = channels as usize;
    let interleaved: Vec<f64> = match (format, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect(),
        (f, b) => return Err(bad(path, format!("format {f} with {b} bits"))),
    };
    let frames = interleaved.len() / channels;
    let mut mono = Vec::with_capacity(frames);
    for frame in 0..frames {
        let sum: f64 = interleaved[frame * channels..(frame + 1) * channels].iter().sum();
        mono.push(sum / channels as f64);
    }
    Ok((mono, rate))
}

fn header(n_data_bytes: usize, rate: u32, format: u16, bits: u16) -> Vec<u8> {
    let block_align = bits / 8; // mono
    let byte_rate = rate * u32::from(block_align);
    let mut h = Vec::with_capacity(44);
    h.extend_from_slice(b"RIFF");
    h.extend_from_slice(&(36 + n_data_bytes as u32).to_le_bytes());
    h.extend_from_slice(b"WAVEfmt ");
    h.extend_from_slice(&16u32.to_le_bytes());
    h.extend_from_slice(&format.to_le_bytes());
    h.extend_from_slice(&1u16.to_le_bytes()); // mono
    h.extend_from_slice(&rate.to_le_bytes());
    h.extend_from_slice(&byte_rate.to_le_bytes());
    h.extend_from_slice(&block_align.to_le_bytes());
    h.extend_from_slice(&bits.to_le_bytes());
    h.extend_from_slice(b"data");
    h.extend_from_slice(&(n_data_bytes as u32).to_le_bytes());
    h
}

/// Writes mono 16-bit PCM; samples are clamped to `[-1, 1]`.
pub fn write_wav_i16(path: &Path, samples: &[f64], rate: u32) -> Result<(), FeatureError> {
    let mut out = fs::File::create(path)?;
    out.write_all(&header(samples.len() * 2, rate, 1, 16))?;
    let mut buf = Vec::with_capacity(samples.len() * 2);
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Writes mono 32-bit IEEE float.
pub fn write_wav_f32(path: &Path, samples: &[f32], rate: u32) -> Result<(), FeatureError> {
    let mut out = fs::File::create(path)?;
    out.write_all(&header(samples.len() * 4, rate, 3, 32))?;
    let mut buf = Vec::with_capacity(samples.len() * 4);
    for &s in samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}
