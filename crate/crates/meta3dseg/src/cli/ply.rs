//! ASCII PLY export of colored point clouds.

use std::fmt::Write as _;

use crate::{Error, Result};

/// Fixed part colors; labels index into this table.
pub const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [255, 225, 25],
    [240, 50, 230],
    [70, 240, 240],
    [245, 130, 48],
    [145, 30, 180],
];

/// Render one labeled cloud as an ASCII PLY document. Coordinates print
/// in shortest round-trip form, so reparsing restores the exact floats.
pub fn write_ply(points: &[[f32; 3]], labels: &[usize]) -> Result<String> {
    if points.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points against {} labels",
            points.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= PALETTE.len()) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside the {}-color palette",
            PALETTE.len()
        )));
    }
    let mut out = String::new();
    out.push_str("ply\n");
    out.push_str("format ascii 1.0\n");
    writeln!(out, "element vertex {}", points.len()).expect("string writes are infallible");
    out.push_str("property float x\n");
    out.push_str("property float y\n");
    out.push_str("property float z\n");
    out.push_str("property uchar red\n");
    out.push_str("property uchar green\n");
    out.push_str("property uchar blue\n");
    out.push_str("end_header\n");
    for (p, &l) in points.iter().zip(labels) {
        let [r, g, b] = PALETTE[l];
        writeln!(out, "{} {} {} {r} {g} {b}", p[0], p[1], p[2])
            .expect("string writes are infallible");
    }
    Ok(out)
}

/// Parse a document produced by [`write_ply`] back into points and colors.
pub fn parse_ply(text: &str) -> Result<(Vec<[f32; 3]>, Vec<[u8; 3]>)> {
    let mut lines = text.lines();
    let mut n_vertices: Option<usize> = None;
    for line in lines.by_ref() {
        if let Some(count) = line.strip_prefix("element vertex ") {
            n_vertices = Some(
                count
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("bad vertex count {count:?}")))?,
            );
        }
        if line == "end_header" {
            break;
        }
    }
    let n_vertices =
        n_vertices.ok_or_else(|| Error::Format("no element vertex declaration".into()))?;
    let mut points = Vec::with_capacity(n_vertices);
    let mut colors = Vec::with_capacity(n_vertices);
    for line in lines.take(n_vertices) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Format(format!("bad vertex line {line:?}")));
        }
        let coord = |i: usize| -> Result<f32> {
            fields[i]
                .parse()
                .map_err(|_| Error::Format(format!("bad coordinate {:?}", fields[i])))
        };
        let channel = |i: usize| -> Result<u8> {
            fields[i]
                .parse()
                .map_err(|_| Error::Format(format!("bad color channel {:?}", fields[i])))
        };
        points.push([coord(0)?, coord(1)?, coord(2)?]);
        colors.push([channel(3)?, channel(4)?, channel(5)?]);
    }
    if points.len() != n_vertices {
        return Err(Error::Format(format!(
            "declared {n_vertices} vertices, found {}",
            points.len()
        )));
    }
    Ok((points, colors))
}
