//! Versioned binary container for trained parameters.
//!
//! Layout: 4 magic bytes, format version (u32 LE), caller-defined header and
//! row-major f64 weight arrays (LE), terminated by a CRC32 (u32 LE) over every
//! preceding byte. Readers verify magic, version, and checksum before any
//! field is interpreted, and require the payload to be fully consumed.

use crate::error::{Error, Result};

pub(crate) const FORMAT_VERSION: u32 = 1;

pub(crate) struct ContainerWriter {
    buf: Vec<u8>,
}

impl ContainerWriter {
    pub fn new(magic: [u8; 4]) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(&magic);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        ContainerWriter { buf }
    }

    pub fn push_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn push_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn push_f64_slice(&mut self, vs: &[f64]) {
        for v in vs {
            self.push_f64(*v);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

pub(crate) struct ContainerReader<'a> {
    data: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> ContainerReader<'a> {
    /// Validate magic, version, and checksum; position the cursor after the
    /// version field.
    pub fn open(data: &'a [u8], magic: [u8; 4]) -> Result<Self> {
        if data.len() < 12 {
            return Err(Error::data_format("params file truncated"));
        }
        if data[..4] != magic {
            return Err(Error::data_format(format!(
                "bad magic: expected {:?}",
                std::str::from_utf8(&magic).unwrap_or("?")
            )));
        }
        let body_end = data.len() - 4;
        let stored = u32::from_le_bytes(data[body_end..].try_into().unwrap());
        let computed = crc32fast::hash(&data[..body_end]);
        if stored != computed {
            return Err(Error::data_format(format!(
                "checksum mismatch: stored {stored:#010x} != computed {computed:#010x}"
            )));
        }
        let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::data_format(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        Ok(ContainerReader {
            data,
            pos: 8,
            end: body_end,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.end {
            return Err(Error::data_format("params file truncated payload"));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn read_f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn read_f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::data_format("weight array length overflow")
        })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Require that every payload byte was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.end {
            return Err(Error::data_format(format!(
                "{} unread bytes at end of params file",
                self.end - self.pos
            )));
        }
        Ok(())
    }
}
