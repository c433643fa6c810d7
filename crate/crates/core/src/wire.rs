//! Little-endian binary formats for databases, queries and answers.
//!
//! ```text
//! database  "PIRD" version:u32 q:u64 M:u32 L:u64 values:u64[M*L]
//! query     "PIRQ" version:u32 q:u64 M:u32 L:u64 slots:u32 values:u64[slots*M*L]
//! answer    "PIRA" version:u32 slots:u32 values:u64[slots]
//! ```

use crate::error::{Error, Result};
use crate::field::{Fq, PrimeField};
use crate::protocol::{Answer, Query, RecordSet};

pub const VERSION: u32 = 1;
pub const DB_MAGIC: &[u8; 4] = b"PIRD";
pub const QUERY_MAGIC: &[u8; 4] = b"PIRQ";
pub const ANSWER_MAGIC: &[u8; 4] = b"PIRA";

struct Writer(Vec<u8>);

impl Writer {
    fn with_header(magic: &[u8; 4], values: usize, header: usize) -> Self {
        let mut buf = Vec::with_capacity(8 + header + 8 * values);
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        Self(buf)
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn values(&mut self, vs: &[Fq]) {
        for v in vs {
            self.u64(v.value() as u64);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(buf: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        let mut r = Self { buf, pos: 0 };
        let got = r.take(4)?;
        if got != magic {
            return Err(Error::Malformed(format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(got)
            )));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::UnknownVersion(version));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(Error::Truncated {
            needed: self.pos.saturating_add(n),
            got: self.buf.len(),
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn field(&mut self) -> Result<PrimeField> {
        let q = self.u64()?;
        PrimeField::new(q).map_err(|e| Error::Malformed(format!("bad modulus: {e}")))
    }

    fn count(&mut self, factors: &[u64]) -> Result<usize> {
        let total = factors
            .iter()
            .try_fold(1u64, |acc, &f| acc.checked_mul(f))
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| Error::Malformed("element count overflows".into()))?;
        let needed = total
            .checked_mul(8)
            .and_then(|b| b.checked_add(self.pos))
            .ok_or_else(|| Error::Malformed("element count overflows".into()))?;
        if needed > self.buf.len() {
            return Err(Error::Truncated {
                needed,
                got: self.buf.len(),
            });
        }
        Ok(total)
    }

    fn values(&mut self, count: usize, field: PrimeField) -> Result<Vec<Fq>> {
        (0..count).map(|_| field.checked_elem(self.u64()?)).collect()
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Malformed(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn to_u32(v: usize, what: &str) -> u32 {
    u32::try_from(v).unwrap_or_else(|_| panic!("{what} {v} does not fit the wire format"))
}

pub fn encode_records(db: &RecordSet) -> Vec<u8> {
    let mut w = Writer::with_header(DB_MAGIC, db.flat().len(), 20);
    w.u64(db.field().modulus() as u64);
    w.u32(to_u32(db.count(), "record count"));
    w.u64(db.record_len() as u64);
    w.values(db.flat());
    w.0
}

pub fn decode_records(buf: &[u8]) -> Result<RecordSet> {
    let mut r = Reader::open(buf, DB_MAGIC)?;
    let field = r.field()?;
    let m = r.u32()? as u64;
    let l = r.u64()?;
    let count = r.count(&[m, l])?;
    let data = r.values(count, field)?;
    r.finish()?;
    RecordSet::from_flat(field, m as usize, l as usize, data)
}

pub fn encode_query(query: &Query) -> Vec<u8> {
    let mut w = Writer::with_header(QUERY_MAGIC, query.as_slice().len(), 24);
    w.u64(query.field().modulus() as u64);
    w.u32(to_u32(query.records(), "record count"));
    w.u64(query.record_len() as u64);
    w.u32(to_u32(query.slot_count(), "slot count"));
    w.values(query.as_slice());
    w.0
}

pub fn decode_query(buf: &[u8]) -> Result<Query> {
    let mut r = Reader::open(buf, QUERY_MAGIC)?;
    let field = r.field()?;
    let m = r.u32()? as u64;
    let l = r.u64()?;
    let slots = r.u32()? as u64;
    let count = r.count(&[slots, m, l])?;
    let data = r.values(count, field)?;
    r.finish()?;
    Query::from_parts(field, m as usize, l as usize, slots as usize, data)
}

pub fn encode_answer(answer: &Answer) -> Vec<u8> {
    let mut w = Writer::with_header(ANSWER_MAGIC, answer.len(), 4);
    w.u32(to_u32(answer.len(), "slot count"));
    w.values(answer.values());
    w.0
}

/// Answers carry no modulus, so the caller supplies the query's field.
pub fn decode_answer(buf: &[u8], field: PrimeField) -> Result<Answer> {
    let mut r = Reader::open(buf, ANSWER_MAGIC)?;
    let slots = r.u32()? as u64;
    let count = r.count(&[slots])?;
    let values = r.values(count, field)?;
    r.finish()?;
    Ok(Answer::new(values))
}
