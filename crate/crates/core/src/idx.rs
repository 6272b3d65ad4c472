//! Reader for the big-endian IDX format used by MNIST.

use std::path::Path;

use crate::data::{Dataset, ImageMeta};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IDX_IMAGES: u32 = 0x0000_0803;
pub const IDX_LABELS: u32 = 0x0000_0801;

pub fn load_idx(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    parse_idx(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Images become rows of `h·w` pixels scaled to `[0, 1]` by `/255`; label
/// files become a single column of raw label values.
pub fn parse_idx(bytes: &[u8]) -> Result<Dataset> {
    let magic = read_u32(bytes, 0)?;
    let ndims = match magic {
        IDX_IMAGES => 3,
        IDX_LABELS => 1,
        other => return Err(Error::Format(format!("unsupported IDX magic {other:#010x}"))),
    };
    let dims: Vec<usize> = (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k).map(|v| v as usize))
        .collect::<Result<_>>()?;
    let header = 4 + 4 * ndims;
    let count: usize = dims.iter().product();
    let payload = bytes
        .get(header..header + count)
        .ok_or_else(|| Error::Format(format!("truncated IDX payload: need {count} bytes")))?;
    if dims[0] == 0 {
        return Err(Error::Format("IDX file holds no items".into()));
    }
    if ndims == 3 {
        let (n, h, w) = (dims[0], dims[1], dims[2]);
        let data = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
        Dataset::new(Tensor::matrix(n, h * w, data)?)?.with_image(ImageMeta { height: h, width: w })
    } else {
        let data = payload.iter().map(|&b| f64::from(b)).collect();
        Dataset::new(Tensor::matrix(dims[0], 1, data)?)
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("truncated IDX header".into()))
}
