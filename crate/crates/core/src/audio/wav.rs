use super::AudioClip;
use crate::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Decodes a RIFF/WAVE file holding 16-bit PCM or 32-bit float samples.
/// Channels are averaged to mono; integer samples are scaled by 1/32768.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(Error::MalformedWav("truncated RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE tags".into()));
    }
    let mut pos = 12;
    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::MalformedWav("truncated fmt chunk".into()));
                }
                let mut code = u16_at(body, 0);
                if code == FORMAT_EXTENSIBLE {
                    if body.len() < 26 {
                        return Err(Error::MalformedWav("truncated extensible fmt chunk".into()));
                    }
                    code = u16_at(body, 24);
                }
                format = Some(Format {
                    code,
                    channels: u16_at(body, 2),
                    sample_rate: u32_at(body, 4),
                    bits: u16_at(body, 14),
                });
            }
            b"data" => {
                data = Some(body);
                break;
            }
            _ => {}
        }
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let format = format.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;
    let width = match (format.code, format.bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_FLOAT, 32) => 4,
        (code, bits) => {
            return Err(Error::UnsupportedEncoding(format!("format code {code} with {bits} bits per sample")));
        }
    };
    if format.channels == 0 || format.sample_rate == 0 {
        return Err(Error::MalformedWav("zero channels or sample rate".into()));
    }
    let channels = format.channels as usize;
    let frame = width * channels;
    let frames = data.len() / frame;
    if frames == 0 {
        return Err(Error::MalformedWav("no samples".into()));
    }
    let mut samples = Vec::with_capacity(frames);
    for f in 0..frames {
        let mut acc = 0.0;
        for c in 0..channels {
            let at = f * frame + c * width;
            acc += if width == 2 {
                i16::from_le_bytes([data[at], data[at + 1]]) as f64 / 32768.0
            } else {
                f32::from_le_bytes([data[at], data[at + 1], data[at + 2], data[at + 3]]) as f64
            };
        }
        let v = acc / channels as f64;
        if !v.is_finite() {
            return Err(Error::MalformedWav("non-finite sample".into()));
        }
        samples.push(v);
    }
    AudioClip::new(samples, format.sample_rate)
}

/// Mono 16-bit PCM WAV. Samples are clamped to `[-1, 1]` and rounded.
pub fn encode_wav_pcm16(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav(code: u16, channels: u16, bits: u16, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVEfmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&code.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&8000u32.to_le_bytes());
        out.extend_from_slice(&(8000 * channels as u32 * bits as u32 / 8).to_le_bytes());
        out.extend_from_slice(&(channels * bits / 8).to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn pcm16_scaling() {
        let data: Vec<u8> = [0i16, i16::MIN, 16384].iter().flat_map(|v| v.to_le_bytes()).collect();
        let clip = decode_wav(&wav(1, 1, 16, &data)).unwrap();
        assert_eq!(clip.samples, vec![0.0, -1.0, 0.5]);
        assert_eq!(clip.sample_rate, 8000);
    }

    #[test]
    fn stereo_is_averaged() {
        let data: Vec<u8> = [0.5f32, -0.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        let clip = decode_wav(&wav(3, 2, 32, &data)).unwrap();
        assert_eq!(clip.samples, vec![0.0]);
    }

    #[test]
    fn unsupported_codecs() {
        assert!(matches!(decode_wav(&wav(1, 1, 8, &[1, 2])), Err(Error::UnsupportedEncoding(_))));
        assert!(matches!(decode_wav(&wav(6, 1, 8, &[1, 2])), Err(Error::UnsupportedEncoding(_))));
    }

    #[test]
    fn truncated_headers() {
        assert!(matches!(decode_wav(b"RIFF"), Err(Error::MalformedWav(_))));
        let full = wav(1, 1, 16, &[0, 0]);
        assert!(matches!(decode_wav(&full[..30]), Err(Error::MalformedWav(_))));
        assert!(matches!(decode_wav(&full[..40]), Err(Error::MalformedWav(_))));
    }

    #[test]
    fn encode_round_trip() {
        let samples = [0.0, 0.25, -0.5, 0.999];
        let clip = decode_wav(&encode_wav_pcm16(&samples, 16000)).unwrap();
        assert_eq!(clip.sample_rate, 16000);
        for (a, b) in clip.samples.iter().zip(samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }
}
