//! External embedding files: `GEMB`, u32 version, u32 dimension, u64 record
//! count, then per record a u64 evaluation key and the float32 values. No
//! checksum, since other tools write these files.

use std::collections::BTreeMap;
use std::path::Path;

use super::wire::Reader;
use super::{read_file, write_file, IoError};
use crate::behavior::EmbeddingTable;

pub const MAGIC: &[u8; 4] = b"GEMB";
pub const VERSION: u32 = 1;

pub fn encode_embeddings(table: &EmbeddingTable) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(table.dim as u32).to_le_bytes());
    out.extend_from_slice(&(table.vectors.len() as u64).to_le_bytes());
    for (key, v) in &table.vectors {
        out.extend_from_slice(&key.to_le_bytes());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingTable, IoError> {
    let mut r = Reader::raw(bytes);
    let magic = r.bytes(4)?;
    if magic != MAGIC {
        return Err(IoError::BadMagic { expected: "GEMB".into(), found: String::from_utf8_lossy(magic).into() });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(IoError::Version { found: version, supported: VERSION });
    }
    let dim = r.u32()? as usize;
    if dim == 0 {
        return Err(r.bad("zero embedding dimension"));
    }
    let count = r.len(8 + 4 * dim)?;
    let mut vectors = BTreeMap::new();
    for _ in 0..count {
        let key = r.u64()?;
        let v = (0..dim).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
        if vectors.insert(key, v).is_some() {
            return Err(IoError::DuplicateKey(key));
        }
    }
    if !r.at_end() {
        return Err(r.bad("trailing bytes after the last record"));
    }
    Ok(EmbeddingTable { dim, vectors })
}

pub fn read_external_embeddings(path: &Path) -> Result<EmbeddingTable, IoError> {
    decode_embeddings(&read_file(path)?)
}

pub fn write_external_embeddings(path: &Path, table: &EmbeddingTable) -> Result<(), IoError> {
    write_file(path, &encode_embeddings(table))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: u64, dim: usize) -> EmbeddingTable {
        let vectors = (0..n).map(|k| (k * 7 + 1, (0..dim).map(|i| (i as f32 + 0.1) * (k as f32 - 0.5)).collect())).collect();
        EmbeddingTable { dim, vectors }
    }

    #[test]
    fn round_trip_is_exact() {
        let t = table(2, 4);
        assert_eq!(decode_embeddings(&encode_embeddings(&t)).unwrap().vectors.len(), 2);
        let t = table(5, 64);
        assert_eq!(decode_embeddings(&encode_embeddings(&t)).unwrap(), t);
    }

    #[test]
    fn header_layout() {
        let b = encode_embeddings(&table(2, 4));
        assert_eq!(&b[..4], b"GEMB");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(b[12..20].try_into().unwrap()), 2);
        assert_eq!(b.len(), 20 + 2 * (8 + 16));
    }

    #[test]
    fn rejects_bad_files() {
        let mut b = encode_embeddings(&table(2, 4));
        b[0] = b'X';
        assert!(matches!(decode_embeddings(&b), Err(IoError::BadMagic { .. })));
        let b = encode_embeddings(&table(2, 4));
        assert!(matches!(decode_embeddings(&b[..b.len() - 3]), Err(IoError::Truncated(_))));
        // second record reuses the first key
        let mut b = encode_embeddings(&table(2, 4));
        let first_key = b[20..28].to_vec();
        b[44..52].copy_from_slice(&first_key);
        assert!(matches!(decode_embeddings(&b), Err(IoError::DuplicateKey(1))));
    }
}
