//! CSV and PGM artifact writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::data::write_rows_csv;
use crate::diagnostics::{Grid2D, VectorField2D};
use crate::error::{dim_err, domain_err, Result};
use crate::tensor::Tensor;

/// One row per grid point (`y` outer, `x` inner) under `x,y,value`.
pub fn write_grid_csv(grid: &Grid2D, path: impl AsRef<Path>) -> Result<()> {
    let s = &grid.spec;
    let rows: Vec<[f64; 3]> = (0..s.ny)
        .flat_map(|j| (0..s.nx).map(move |i| (i, j)))
        .map(|(i, j)| [s.x(i), s.y(j), grid.get(i, j)])
        .collect();
    write_rows_csv(path.as_ref(), Some(&["x", "y", "value"]), rows.iter().map(|r| &r[..]))
}

/// As [`write_grid_csv`] with header `x,y,u,v`.
pub fn write_field_csv(field: &VectorField2D, path: impl AsRef<Path>) -> Result<()> {
    let s = &field.spec;
    let rows: Vec<[f64; 4]> = (0..s.ny)
        .flat_map(|j| (0..s.nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let k = j * s.nx + i;
            [s.x(i), s.y(j), field.u.data()[k], field.v.data()[k]]
        })
        .collect();
    write_rows_csv(path.as_ref(), Some(&["x", "y", "u", "v"]), rows.iter().map(|r| &r[..]))
}

/// Constants of the linear map from values to bytes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmMapping {
    pub min: f64,
    pub max: f64,
}

impl PgmMapping {
    pub fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    /// `round(255 (v − min) / (max − min))`; a degenerate range maps
    /// everything to 0.
    pub fn byte(&self, v: f64) -> u8 {
        if self.max > self.min {
            (255.0 * (v - self.min) / (self.max - self.min)).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }
}

/// `<path>.txt`, next to the image.
pub fn pgm_sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Binary PGM (P5) of an `h × w` image with min-max scaling; the mapping
/// constants go to a sidecar text file.
pub fn write_pgm(image: &Tensor, path: impl AsRef<Path>) -> Result<PgmMapping> {
    let path = path.as_ref();
    if image.shape().len() != 2 || image.is_empty() {
        return dim_err("PGM output needs a non-empty h × w image");
    }
    if !image.is_finite() {
        return domain_err("PGM output needs finite values");
    }
    let (h, w) = (image.rows(), image.cols());
    let map = PgmMapping::of(image.data());
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(image.data().iter().map(|&v| map.byte(v)));
    fs::write(path, bytes)?;
    let mut side = fs::File::create(pgm_sidecar_path(path))?;
    writeln!(side, "min {}", map.min)?;
    writeln!(side, "max {}", map.max)?;
    writeln!(side, "byte = round(255 * (value - min) / (max - min)); 0 everywhere when max == min")?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::GridSpec;

    #[test]
    fn grid_csv_rows() {
        let spec = GridSpec::square(0.0, 1.0, 2);
        let grid = Grid2D {
            spec,
            values: Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            boundary_zeroed: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_grid_csv(&grid, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "x,y,value\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n");

        let field = VectorField2D {
            spec,
            u: grid.values.clone(),
            v: grid.values.scale(-1.0),
        };
        write_field_csv(&field, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,u,v\n0,0,1,-1\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn pgm_format_and_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = Tensor::matrix(2, 3, vec![0.0, 0.5, 1.0, -1.0, 1.0, 0.25]).unwrap();
        let map = write_pgm(&img, &path).unwrap();
        assert_eq!(map, PgmMapping { min: -1.0, max: 1.0 });
        let bytes = fs::read(&path).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[128, 191, 255, 0, 255, 159]);
        let side = fs::read_to_string(pgm_sidecar_path(&path)).unwrap();
        assert!(side.starts_with("min -1\nmax 1\n"));
    }

    #[test]
    fn constant_image_maps_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        write_pgm(&Tensor::full(&[4, 4], 0.3), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes[b"P5\n4 4\n255\n".len()..].iter().all(|&b| b == 0));
        assert!(write_pgm(&Tensor::full(&[2, 2], f64::NAN), &path).is_err());
    }
}
