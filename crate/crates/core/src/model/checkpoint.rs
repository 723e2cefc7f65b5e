//! Parameter checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       9     magic "AUSAMCKPT"
//! 9       1     version
//! 10      2     reserved, zero
//! 12      4     parameter count d (u32)
//! 16      8*d   parameters (f64)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ParamVector;

pub const CHECKPOINT_MAGIC: &[u8; 9] = b"AUSAMCKPT";
pub const CHECKPOINT_VERSION: u8 = 1;
const HEADER_LEN: usize = 16;

pub(crate) fn encode(w: &ParamVector) -> Result<Vec<u8>> {
    let d = u32::try_from(w.len())
        .map_err(|_| Error::Precondition("too many parameters for checkpoint".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * w.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&d.to_le_bytes());
    for v in w.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<ParamVector> {
    let bad = |message: String| Error::Format {
        what: "checkpoint",
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..9] != CHECKPOINT_MAGIC {
        return Err(bad("magic mismatch".into()));
    }
    if bytes[9] != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {}", bytes[9])));
    }
    let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * d {
        return Err(bad(format!(
            "header declares {d} parameters but body has {} bytes",
            body.len()
        )));
    }
    Ok(ParamVector(
        body.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    ))
}

pub fn write_checkpoint(path: &Path, w: &ParamVector) -> Result<()> {
    fs::write(path, encode(w)?).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ParamVector> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = encode(&ParamVector(vec![1.5, -2.0])).unwrap();
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[..9], b"AUSAMCKPT");
        assert_eq!(bytes[9], 1);
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(&bytes[16..24], &1.5f64.to_le_bytes());
    }

    #[test]
    fn rejects_truncated_and_bad_magic() {
        let mut bytes = encode(&ParamVector(vec![1.0, 2.0, 3.0])).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
        assert!(decode(&[0u8; 4]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(v in proptest::collection::vec(any::<f64>(), 1..64)) {
            let w = ParamVector(v);
            let back = decode(&encode(&w).unwrap()).unwrap();
            prop_assert_eq!(
                w.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                back.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
