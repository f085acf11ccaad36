//! TPCD point tables and CSV export.
//!
//! Layout (little-endian): `b"TPCD"`, version `u32`, point count `u64`,
//! channel count `u32`, then `count × channels` `f32` values row by row.

use std::io::{Read, Write};

use nalgebra::Point3;

use super::{Domain, MergedCloud, PerceptionError, PointCloud};

const MAGIC: &[u8; 4] = b"TPCD";
const VERSION: u32 = 1;

/// Raw table of `count × channels` values.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub channels: usize,
    pub values: Vec<f32>,
}

impl PointTable {
    pub fn len(&self) -> usize {
        self.values.len() / self.channels.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }

    pub fn to_cloud(&self, domain: Domain) -> Result<PointCloud, PerceptionError> {
        if self.channels != 4 {
            return Err(PerceptionError::ShapeMismatch(format!(
                "expected a 4-channel cloud, got {} channels",
                self.channels
            )));
        }
        let mut cloud = PointCloud {
            domain,
            ..PointCloud::default()
        };
        for r in self.values.chunks_exact(4) {
            cloud
                .points
                .push(Point3::new(r[0] as f64, r[1] as f64, r[2] as f64));
            cloud.readings.push(r[3] as f64);
        }
        Ok(cloud)
    }

    pub fn to_merged(&self) -> Result<MergedCloud, PerceptionError> {
        if self.channels != 5 {
            return Err(PerceptionError::ShapeMismatch(format!(
                "expected a 5-channel merged cloud, got {} channels",
                self.channels
            )));
        }
        let rows: Vec<[f64; 5]> = self
            .values
            .chunks_exact(5)
            .map(|r| [r[0], r[1], r[2], r[3], r[4]].map(|v| v as f64))
            .collect();
        let n_tactile = rows.iter().filter(|r| r[4] == 1.0).count();
        Ok(MergedCloud {
            n_visual: rows.len() - n_tactile,
            n_tactile,
            rows,
        })
    }
}

impl From<&PointCloud> for PointTable {
    fn from(c: &PointCloud) -> Self {
        Self {
            channels: 4,
            values: c.to_rows().iter().flatten().map(|&v| v as f32).collect(),
        }
    }
}

impl From<&MergedCloud> for PointTable {
    fn from(m: &MergedCloud) -> Self {
        Self {
            channels: 5,
            values: m.to_tensor(),
        }
    }
}

pub fn write_tpcd(out: &mut dyn Write, table: &PointTable) -> std::io::Result<()> {
    let channels = u32::try_from(table.channels).map_err(std::io::Error::other)?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(table.len() as u64).to_le_bytes())?;
    out.write_all(&channels.to_le_bytes())?;
    let bytes: Vec<u8> = table.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    out.write_all(&bytes)
}

pub fn read_tpcd(mut input: impl Read) -> Result<PointTable, PerceptionError> {
    let bad = |m: &str| PerceptionError::BadFile(m.to_owned());
    let mut header = [0u8; 20];
    input
        .read_exact(&mut header)
        .map_err(|_| bad("truncated header"))?;
    if &header[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(PerceptionError::BadFile(format!(
            "unsupported version {version}"
        )));
    }
    let count = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let channels = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    if channels == 0 {
        return Err(bad("zero channels"));
    }
    let len = count
        .checked_mul(channels)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("point count overflows"))?;
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() != len {
        return Err(PerceptionError::BadFile(format!(
            "expected {len} data bytes, found {}",
            data.len()
        )));
    }
    let values = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(PointTable { channels, values })
}

/// Debug CSV with header `x,y,z,reading` (and `,flag` for 5 channels).
pub fn write_csv(out: &mut dyn Write, table: &PointTable) -> std::io::Result<()> {
    let header = match table.channels {
        4 => "x,y,z,reading".to_owned(),
        5 => "x,y,z,reading,flag".to_owned(),
        c => (0..c)
            .map(|i| format!("c{i}"))
            .collect::<Vec<_>>()
            .join(","),
    };
    writeln!(out, "{header}")?;
    for i in 0..table.len() {
        let row: Vec<String> = table.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
