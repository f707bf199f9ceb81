//! Binary shard segments.
//!
//! Layout: magic `RFSG`, format version (u32), entry count (u32), then each
//! entry as id (u64), parse status (u8), regularity (u8: 0 absent,
//! 1 regular, 2 extended), pattern, provenance count (u32) and per record a
//! source code (u8) and origin. Strings are a u32 byte length plus UTF-8.
//! Integers are little-endian.

use std::io::{self, Read, Write};

use forge_core::RegularityClass;

use crate::entry::{EntryId, ParseStatus, Provenance, RegexEntry, Source};

const MAGIC: &[u8; 4] = b"RFSG";
pub const SEGMENT_VERSION: u32 = 1;

fn corrupt(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn put_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

pub fn write_segment<'a>(
    w: &mut impl Write,
    entries: impl ExactSizeIterator<Item = &'a RegexEntry>,
) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&SEGMENT_VERSION.to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for e in entries {
        w.write_all(&e.id.0.to_le_bytes())?;
        let status = match e.parse_status {
            ParseStatus::Ok => 0u8,
            ParseStatus::ParseError => 1,
            ParseStatus::Unsupported => 2,
        };
        let regularity = match e.regularity {
            None => 0u8,
            Some(RegularityClass::Regular) => 1,
            Some(RegularityClass::Extended) => 2,
        };
        w.write_all(&[status, regularity])?;
        put_str(w, &e.pattern)?;
        w.write_all(&(e.provenance.len() as u32).to_le_bytes())?;
        for p in &e.provenance {
            w.write_all(&[p.source.code()])?;
            put_str(w, &p.origin)?;
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> io::Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf)?;
        Ok(buf)
    }

    fn u8(&mut self) -> io::Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> io::Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> io::Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.inner.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|_| corrupt("string is not UTF-8"))
    }
}

pub fn read_segment(r: impl Read) -> io::Result<Vec<RegexEntry>> {
    let mut r = Reader { inner: r };
    if &r.bytes::<4>()? != MAGIC {
        return Err(corrupt("not a segment file"));
    }
    let version = r.u32()?;
    if version != SEGMENT_VERSION {
        return Err(corrupt(&format!("unsupported segment version {version}")));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id = EntryId(u64::from_le_bytes(r.bytes()?));
        let parse_status = match r.u8()? {
            0 => ParseStatus::Ok,
            1 => ParseStatus::ParseError,
            2 => ParseStatus::Unsupported,
            _ => return Err(corrupt("bad parse status")),
        };
        let regularity = match r.u8()? {
            0 => None,
            1 => Some(RegularityClass::Regular),
            2 => Some(RegularityClass::Extended),
            _ => return Err(corrupt("bad regularity")),
        };
        let pattern = r.string()?;
        let n = r.u32()? as usize;
        let mut provenance = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let source = Source::from_code(r.u8()?).ok_or_else(|| corrupt("bad source"))?;
            provenance.push(Provenance { source, origin: r.string()? });
        }
        if provenance.is_empty() {
            return Err(corrupt("entry without provenance"));
        }
        out.push(RegexEntry { id, pattern, provenance, parse_status, regularity });
    }
    Ok(out)
}
