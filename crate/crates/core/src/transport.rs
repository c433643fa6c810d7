//! Length-prefixed TCP transport: one framed query in, one framed answer out
//! per connection.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use crate::error::{Error, Result};
use crate::protocol::{server_answer, Answer, Query, RecordSet};
use crate::wire::{decode_answer, decode_query, encode_answer, encode_query};

/// Frames larger than this are refused before allocation.
pub const MAX_FRAME: usize = 1 << 30;

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n as usize <= MAX_FRAME)
        .ok_or_else(|| Error::Malformed(format!("frame of {} bytes is too large", payload.len())))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(Error::Malformed(format!("frame of {len} bytes is too large")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Answers a single query on `stream`.
pub fn handle_connection(mut stream: TcpStream, records: &RecordSet) -> Result<()> {
    let query = decode_query(&read_frame(&mut stream)?)?;
    let answer = server_answer(&query, records)?;
    write_frame(&mut stream, &encode_answer(&answer))
}

/// Serves connections until the listener fails, one thread per connection.
/// Errors on individual connections are passed to `on_error`.
pub fn serve<F>(listener: TcpListener, records: Arc<RecordSet>, on_error: F) -> Result<()>
where
    F: Fn(Error) + Send + Sync + 'static,
{
    let on_error = Arc::new(on_error);
    for stream in listener.incoming() {
        let stream = stream?;
        let records = Arc::clone(&records);
        let on_error = Arc::clone(&on_error);
        thread::spawn(move || {
            if let Err(e) = handle_connection(stream, &records) {
                on_error(e);
            }
        });
    }
    Ok(())
}

/// Sends `query` to the server at `addr` and waits for its answer.
pub fn fetch<A: ToSocketAddrs>(addr: A, query: &Query) -> Result<Answer> {
    let mut stream = TcpStream::connect(addr)?;
    write_frame(&mut stream, &encode_query(query))?;
    decode_answer(&read_frame(&mut stream)?, query.field())
}

/// Sends query `j` to `addrs[j]` for every server concurrently.
pub fn fetch_all<A: ToSocketAddrs + Sync>(addrs: &[A], queries: &[Query]) -> Result<Vec<Answer>> {
    if addrs.len() != queries.len() {
        return Err(Error::Params(format!(
            "{} endpoints for {} servers",
            addrs.len(),
            queries.len()
        )));
    }
    thread::scope(|s| {
        let handles: Vec<_> = addrs
            .iter()
            .zip(queries)
            .map(|(a, q)| s.spawn(move || fetch(a, q)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("fetch thread panicked".into()))))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn frames_round_trip() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"hello").unwrap();
        write_frame(&mut buf, b"").unwrap();
        assert_eq!(&buf[..4], &[5, 0, 0, 0]);
        let mut r = Cursor::new(buf);
        assert_eq!(read_frame(&mut r).unwrap(), b"hello");
        assert_eq!(read_frame(&mut r).unwrap(), b"");
        assert!(matches!(read_frame(&mut r), Err(Error::Io(_))));
    }

    #[test]
    fn oversized_frame_is_refused() {
        let mut r = Cursor::new(u32::MAX.to_le_bytes().to_vec());
        assert!(matches!(read_frame(&mut r), Err(Error::Malformed(_))));
    }
}
