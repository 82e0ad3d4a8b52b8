//! Dataset persistence: binary grids and point clouds plus a JSON manifest.
//!
//! Layout under a dataset directory:
//!   manifest.json          version, one record per shape
//!   <id>.grid              "M3DG", u32 version, u32 resolution, R^3 bytes
//!   <id>.pts               "M3DP", u32 version, u32 n, n * (3 f32 + u16)
//! All integers and floats are little-endian. The manifest stores a sha256
//! of each file so silent corruption is caught at load time.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::cloud::PointCloud;
use crate::geometry::shape::Category;
use crate::geometry::voxel::OccupancyGrid;
use crate::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
const GRID_MAGIC: &[u8; 4] = b"M3DG";
const PTS_MAGIC: &[u8; 4] = b"M3DP";
const GRID_VERSION: u32 = 1;
const PTS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub id: String,
    pub category: Category,
    pub seed: u64,
    pub split: Split,
    pub grid_file: String,
    pub pts_file: String,
    pub grid_sha256: String,
    pub pts_sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub records: Vec<ShapeRecord>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(&r.id) {
                return Err(Error::Format(format!("duplicate shape id '{}'", r.id)));
            }
        }
        Ok(())
    }
}

/// One shape's persisted artifacts.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub category: Category,
    pub seed: u64,
    pub split: Split,
    pub grid: OccupancyGrid,
    pub cloud: PointCloud,
}

pub fn grid_to_bytes(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + grid.values().len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.resolution() as u32).to_le_bytes());
    out.extend_from_slice(grid.values());
    out
}

pub fn grid_from_bytes(bytes: &[u8]) -> Result<OccupancyGrid> {
    let mut r = Reader::new(bytes);
    r.magic(GRID_MAGIC, "grid")?;
    let version = r.u32()?;
    if version != GRID_VERSION {
        return Err(Error::Format(format!(
            "grid version {version} (expected {GRID_VERSION})"
        )));
    }
    let resolution = r.u32()? as usize;
    let values = r.take(resolution.pow(3))?.to_vec();
    r.done()?;
    OccupancyGrid::from_values(resolution, values)
}

pub fn points_to_bytes(cloud: &PointCloud) -> Result<Vec<u8>> {
    let labels = cloud
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("point file needs labels".into()))?;
    let mut out = Vec::with_capacity(12 + cloud.len() * 14);
    out.extend_from_slice(PTS_MAGIC);
    out.extend_from_slice(&PTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(cloud.len() as u32).to_le_bytes());
    for (p, &label) in cloud.points.iter().zip(labels) {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&label.to_le_bytes());
    }
    Ok(out)
}

pub fn points_from_bytes(bytes: &[u8]) -> Result<PointCloud> {
    let mut r = Reader::new(bytes);
    r.magic(PTS_MAGIC, "points")?;
    let version = r.u32()?;
    if version != PTS_VERSION {
        return Err(Error::Format(format!(
            "points version {version} (expected {PTS_VERSION})"
        )));
    }
    let n = r.u32()? as usize;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = [0f32; 3];
        for v in &mut p {
            *v = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
        }
        points.push(p);
        labels.push(u16::from_le_bytes(r.take(2)?.try_into().unwrap()));
    }
    r.done()?;
    PointCloud::new(points, Some(labels))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write all entries plus the manifest into `dir`, creating it if needed.
pub fn save_dataset(entries: &[DatasetEntry], dir: &Path) -> Result<DatasetManifest> {
    fs::create_dir_all(dir)?;
    let mut records = Vec::with_capacity(entries.len());
    for e in entries {
        let grid_bytes = grid_to_bytes(&e.grid);
        let pts_bytes = points_to_bytes(&e.cloud)?;
        let grid_file = format!("{}.grid", e.id);
        let pts_file = format!("{}.pts", e.id);
        fs::write(dir.join(&grid_file), &grid_bytes)?;
        fs::write(dir.join(&pts_file), &pts_bytes)?;
        records.push(ShapeRecord {
            id: e.id.clone(),
            category: e.category,
            seed: e.seed,
            split: e.split,
            grid_sha256: sha256_hex(&grid_bytes),
            pts_sha256: sha256_hex(&pts_bytes),
            grid_file,
            pts_file,
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        records,
    };
    manifest.validate()?;
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Load a dataset directory, verifying versions and checksums.
pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<DatasetEntry>)> {
    let manifest: DatasetManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    manifest.validate()?;
    let mut entries = Vec::with_capacity(manifest.records.len());
    for r in &manifest.records {
        let grid_bytes = fs::read(dir.join(&r.grid_file))?;
        if sha256_hex(&grid_bytes) != r.grid_sha256 {
            return Err(Error::Format(format!("checksum mismatch for {}", r.grid_file)));
        }
        let pts_bytes = fs::read(dir.join(&r.pts_file))?;
        if sha256_hex(&pts_bytes) != r.pts_sha256 {
            return Err(Error::Format(format!("checksum mismatch for {}", r.pts_file)));
        }
        entries.push(DatasetEntry {
            id: r.id.clone(),
            category: r.category,
            seed: r.seed,
            split: r.split,
            grid: grid_from_bytes(&grid_bytes)?,
            cloud: points_from_bytes(&pts_bytes)?,
        });
    }
    Ok((manifest, entries))
}

/// Parse whitespace-separated `x y z label` lines (for ingesting external
/// part-labeled point data). Blank lines are skipped.
pub fn parse_text_points(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "line {}: expected 'x y z label', got {} fields",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_coord = |s: &str| -> Result<f32> {
            s.parse::<f32>()
                .map_err(|_| Error::Format(format!("line {}: bad number '{s}'", lineno + 1)))
        };
        points.push([
            parse_coord(fields[0])?,
            parse_coord(fields[1])?,
            parse_coord(fields[2])?,
        ]);
        labels.push(fields[3].parse::<u16>().map_err(|_| {
            Error::Format(format!("line {}: bad label '{}'", lineno + 1, fields[3]))
        })?);
    }
    PointCloud::new(points, Some(labels))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated file: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn magic(&mut self, expected: &[u8; 4], what: &str) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(Error::Format(format!(
                "bad {what} magic {got:?} (expected {expected:?})"
            )));
        }
        Ok(())
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
