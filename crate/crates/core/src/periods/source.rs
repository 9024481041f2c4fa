//! Pull-based character sources.

use std::io::{self, BufReader, Read, Seek, SeekFrom};

pub trait CharSource {
    fn next_byte(&mut self) -> io::Result<Option<u8>>;

    /// Restarts at the first byte. `Ok(false)` for single-shot streams.
    fn rewind(&mut self) -> io::Result<bool>;
}

pub struct SliceSource<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> SliceSource<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        SliceSource { data, pos: 0 }
    }
}

impl CharSource for SliceSource<'_> {
    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        let b = self.data.get(self.pos).copied();
        self.pos += b.is_some() as usize;
        Ok(b)
    }

    fn rewind(&mut self) -> io::Result<bool> {
        self.pos = 0;
        Ok(true)
    }
}

/// A seekable reader such as a file.
pub struct SeekSource<R: Read + Seek> {
    inner: BufReader<R>,
}

impl<R: Read + Seek> SeekSource<R> {
    pub fn new(inner: R) -> Self {
        SeekSource { inner: BufReader::new(inner) }
    }
}

fn read_one(r: &mut impl Read) -> io::Result<Option<u8>> {
    let mut b = [0u8];
    loop {
        match r.read(&mut b) {
            Ok(0) => return Ok(None),
            Ok(_) => return Ok(Some(b[0])),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
}

impl<R: Read + Seek> CharSource for SeekSource<R> {
    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        read_one(&mut self.inner)
    }

    fn rewind(&mut self) -> io::Result<bool> {
        self.inner.seek(SeekFrom::Start(0))?;
        Ok(true)
    }
}

/// A stream that can be read once, such as standard input.
pub struct StreamSource<R: Read> {
    inner: BufReader<R>,
}

impl<R: Read> StreamSource<R> {
    pub fn new(inner: R) -> Self {
        StreamSource { inner: BufReader::new(inner) }
    }
}

impl<R: Read> CharSource for StreamSource<R> {
    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        read_one(&mut self.inner)
    }

    fn rewind(&mut self) -> io::Result<bool> {
        Ok(false)
    }
}
