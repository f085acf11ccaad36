//! TFRM frame sequences and PNG heatmaps.
//!
//! Layout (little-endian): `b"TFRM"`, version `u32`, rows `u32`, cols `u32`,
//! channels `u32` (2 or 4), frame count `u32`, dt `f64`, then for every frame
//! each channel as `rows * cols` `f32` values. Channels 3 and 4 are zero
//! padding. The file does not record whether values were normalized.

use std::io::{Read, Write};
use std::path::Path;

use super::{ContactError, TactileFrame};
use crate::io_util::write_atomic;

const MAGIC: &[u8; 4] = b"TFRM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub rows: usize,
    pub cols: usize,
    pub dt: f64,
    pub frames: Vec<TactileFrame>,
}

pub fn write_frames(
    out: &mut dyn Write,
    frames: &[TactileFrame],
    rows: usize,
    cols: usize,
    dt: f64,
    channels: usize,
) -> Result<(), ContactError> {
    if channels != 2 && channels != 4 {
        return Err(ContactError::BadFrameFile(format!(
            "channel count must be 2 or 4, got {channels}"
        )));
    }
    if let Some(f) = frames.iter().find(|f| f.rows != rows || f.cols != cols) {
        return Err(ContactError::BadFrameFile(format!(
            "frame {} is {}x{}, expected {rows}x{cols}",
            f.step, f.rows, f.cols
        )));
    }
    let header_u32 = |v: usize| -> Result<[u8; 4], ContactError> {
        u32::try_from(v)
            .map(u32::to_le_bytes)
            .map_err(|_| ContactError::BadFrameFile(format!("{v} does not fit in u32")))
    };
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&header_u32(rows)?)?;
    out.write_all(&header_u32(cols)?)?;
    out.write_all(&header_u32(channels)?)?;
    out.write_all(&header_u32(frames.len())?)?;
    out.write_all(&dt.to_le_bytes())?;
    let zeros = vec![0u8; rows * cols * 4];
    for f in frames {
        for channel in [&f.depth, &f.force] {
            let bytes: Vec<u8> = channel
                .iter()
                .flat_map(|&v| (v as f32).to_le_bytes())
                .collect();
            out.write_all(&bytes)?;
        }
        for _ in 2..channels {
            out.write_all(&zeros)?;
        }
    }
    Ok(())
}

pub fn read_frames(mut input: impl Read) -> Result<FrameSequence, ContactError> {
    let bad = |m: &str| ContactError::BadFrameFile(m.to_owned());
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut word = || -> Result<u32, ContactError> {
        let mut b = [0u8; 4];
        input
            .read_exact(&mut b)
            .map_err(|_| bad("truncated header"))?;
        Ok(u32::from_le_bytes(b))
    };
    let version = word()?;
    if version != VERSION {
        return Err(ContactError::BadFrameFile(format!(
            "unsupported version {version}"
        )));
    }
    let rows = word()? as usize;
    let cols = word()? as usize;
    let channels = word()? as usize;
    let count = word()? as usize;
    if channels != 2 && channels != 4 {
        return Err(ContactError::BadFrameFile(format!(
            "bad channel count {channels}"
        )));
    }
    let mut b = [0u8; 8];
    input
        .read_exact(&mut b)
        .map_err(|_| bad("truncated header"))?;
    let dt = f64::from_le_bytes(b);

    let n = rows * cols;
    let mut buf = vec![0u8; n * 4];
    let mut read_channel = |input: &mut dyn Read| -> Result<Vec<f64>, ContactError> {
        input
            .read_exact(&mut buf)
            .map_err(|_| bad("truncated frame data"))?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    };
    let mut frames = Vec::with_capacity(count.min(1 << 20));
    for step in 0..count {
        let mut frame = TactileFrame::zeros(rows, cols);
        frame.depth = read_channel(&mut input)?;
        frame.force = read_channel(&mut input)?;
        for _ in 2..channels {
            read_channel(&mut input)?;
        }
        frame.step = step;
        frames.push(frame);
    }
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing bytes after last frame"));
    }
    Ok(FrameSequence {
        rows,
        cols,
        dt,
        frames,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameChannel {
    Depth,
    Force,
}

/// 8-bit grayscale image with one pixel per taxel (rows tall, cols wide).
/// Values are mapped linearly from `[0, max]` to `[0, 255]`.
pub fn write_heatmap_png(
    frame: &TactileFrame,
    channel: FrameChannel,
    max: f64,
    path: &Path,
) -> Result<(), ContactError> {
    let values = match channel {
        FrameChannel::Depth => &frame.depth,
        FrameChannel::Force => &frame.force,
    };
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| ((v / max).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let mut encoded = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut encoded, frame.cols as u32, frame.rows as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header()?.write_image_data(&pixels)?;
    }
    write_atomic(path, |w| w.write_all(&encoded))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_frames() -> Vec<TactileFrame> {
        (0..3)
            .map(|s| {
                let mut f = TactileFrame::zeros(2, 3);
                f.step = s;
                f.depth[s] = 0.001 * (s + 1) as f64;
                f.force[5 - s] = 0.5;
                f
            })
            .collect()
    }

    #[test]
    fn round_trip_preserves_f32_values() {
        for channels in [2, 4] {
            let frames = sample_frames();
            let mut buf = Vec::new();
            write_frames(&mut buf, &frames, 2, 3, 0.01, channels).unwrap();
            assert_eq!(buf.len(), 32 + 3 * channels * 6 * 4);
            let seq = read_frames(buf.as_slice()).unwrap();
            assert_eq!((seq.rows, seq.cols, seq.dt), (2, 3, 0.01));
            assert_eq!(seq.frames.len(), 3);
            for (a, b) in seq.frames.iter().zip(&frames) {
                for (x, y) in a.depth.iter().zip(&b.depth) {
                    assert_eq!(*x, *y as f32 as f64);
                }
                assert_eq!(a.force, b.force);
            }
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        let mut buf = Vec::new();
        write_frames(&mut buf, &sample_frames(), 2, 3, 0.01, 2).unwrap();
        assert!(read_frames(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_frames(extra.as_slice()).is_err());
        buf[0] = b'X';
        assert!(read_frames(buf.as_slice()).is_err());
        assert!(write_frames(&mut Vec::new(), &sample_frames(), 2, 3, 0.01, 3).is_err());
    }

    #[test]
    fn heatmap_png_has_taxel_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let frame = &sample_frames()[2];
        write_heatmap_png(frame, FrameChannel::Force, 1.0, &path).unwrap();
        let decoder =
            png::Decoder::new(std::io::BufReader::new(std::fs::File::open(&path).unwrap()));
        let mut reader = decoder.read_info().unwrap();
        let mut img = vec![0u8; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut img).unwrap();
        assert_eq!((info.width, info.height), (3, 2));
        assert_eq!(img[3], 128);
    }
}
