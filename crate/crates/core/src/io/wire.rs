use super::checksum::fnv1a64;
use super::IoError;
use crate::archive::{BehaviorVector, DistanceKind};

pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut w = Self { buf: magic.to_vec() };
        w.u32(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn behavior(&mut self, b: &BehaviorVector) {
        self.u8(match b.kind() {
            DistanceKind::Cosine => 0,
            DistanceKind::Euclidean => 1,
        });
        self.len(b.len());
        for &v in b.values() {
            self.f64(v);
        }
    }

    /// Appends the checksum and returns the finished bytes.
    pub fn finish(mut self) -> Vec<u8> {
        let sum = fnv1a64(&self.buf);
        self.u64(sum);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks the trailing checksum, magic and version, and positions the
    /// reader after the header.
    pub fn open(bytes: &'a [u8], magic: &[u8; 4], version: u32) -> Result<Self, IoError> {
        if bytes.len() < 16 {
            return Err(IoError::Truncated(bytes.len()));
        }
        if &bytes[..4] != magic {
            return Err(IoError::BadMagic {
                expected: String::from_utf8_lossy(magic).into(),
                found: String::from_utf8_lossy(&bytes[..4]).into(),
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
        let computed = fnv1a64(body);
        if stored != computed {
            return Err(IoError::Checksum { stored, computed });
        }
        let mut r = Self { buf: body, pos: 4 };
        let found = r.u32()?;
        if found != version {
            return Err(IoError::Version { found, supported: version });
        }
        Ok(r)
    }

    /// A reader over unchecked bytes, header included.
    pub fn raw(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn bad(&self, what: impl Into<String>) -> IoError {
        IoError::Format { at: self.pos, what: what.into() }
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.buf.len() - self.pos < n {
            return Err(IoError::Truncated(self.buf.len()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    pub fn f32(&mut self) -> Result<f32, IoError> {
        Ok(f32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    /// A count, rejected when it cannot fit in the remaining bytes at
    /// `min_item` bytes per item.
    pub fn len(&mut self, min_item: usize) -> Result<usize, IoError> {
        let n = self.u64()?;
        let left = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(min_item.max(1) as u64) > left {
            return Err(IoError::Truncated(self.buf.len()));
        }
        Ok(n as usize)
    }

    pub fn str(&mut self) -> Result<String, IoError> {
        let n = self.len(1)?;
        let at = self.pos;
        let b = self.bytes(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| IoError::Format { at, what: "invalid UTF-8".into() })
    }

    pub fn behavior(&mut self) -> Result<BehaviorVector, IoError> {
        let kind = match self.u8()? {
            0 => DistanceKind::Cosine,
            1 => DistanceKind::Euclidean,
            k => return Err(self.bad(format!("unknown distance kind {k}"))),
        };
        let n = self.len(8)?;
        let at = self.pos;
        let values = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>, _>>()?;
        BehaviorVector::new(values, kind).map_err(|e| IoError::Format { at, what: e.to_string() })
    }
}
