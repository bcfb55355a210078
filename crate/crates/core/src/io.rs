//! Line-oriented JSONL input and output, with zstd compression selected by
//! file extension (`.zst` / `.zstd`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn is_zstd(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("zst") || e.eq_ignore_ascii_case("zstd"))
}

/// Opens a text file for buffered reading, decompressing zstd by extension.
pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if is_zstd(path) {
        let decoder = zstd::stream::read::Decoder::new(file).map_err(|e| Error::io(path, e))?;
        Ok(Box::new(BufReader::new(decoder)))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// A line-oriented writer, zstd-compressing by extension. Call
/// [`LineWriter::finish`] to flush; dropping without finishing loses the
/// zstd epilogue.
pub struct LineWriter {
    inner: Option<Sink>,
    path: PathBuf,
}

enum Sink {
    Plain(BufWriter<File>),
    Zstd(zstd::stream::write::Encoder<'static, BufWriter<File>>),
}

impl LineWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let buf = BufWriter::new(file);
        let inner = if is_zstd(path) {
            Sink::Zstd(zstd::stream::write::Encoder::new(buf, 3).map_err(|e| Error::io(path, e))?)
        } else {
            Sink::Plain(buf)
        };
        Ok(LineWriter {
            inner: Some(inner),
            path: path.to_path_buf(),
        })
    }

    pub fn write_line(&mut self, line: &str) -> Result<()> {
        let io_err = |e| Error::io(&self.path, e);
        let sink: &mut dyn Write = match self.inner.as_mut().expect("writer not finished") {
            Sink::Plain(w) => w,
            Sink::Zstd(w) => w,
        };
        sink.write_all(line.as_bytes()).map_err(io_err)?;
        sink.write_all(b"\n").map_err(io_err)
    }

    pub fn write_json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let line = serde_json::to_string(value)
            .map_err(|e| Error::io(&self.path, std::io::Error::other(e)))?;
        self.write_line(&line)
    }

    pub fn finish(mut self) -> Result<()> {
        let io_err = |e| Error::io(&self.path, e);
        match self.inner.take().expect("writer not finished") {
            Sink::Plain(mut w) => w.flush().map_err(io_err),
            Sink::Zstd(w) => w.finish().and_then(|mut b| b.flush()).map_err(io_err),
        }
    }
}

/// Iterates JSONL records. A line that fails to parse yields
/// `Error::Parse` with its line number; I/O failures yield `Error::Io`.
pub fn jsonl_records<T: DeserializeOwned>(
    reader: Box<dyn BufRead + Send>,
    path: &Path,
) -> impl Iterator<Item = Result<T>> + '_ {
    reader.lines().enumerate().filter_map(move |(i, line)| {
        let line_no = i as u64 + 1;
        match line {
            Err(e) => Some(Err(Error::io(path, e))),
            Ok(line) if line.trim().is_empty() => None,
            Ok(line) => Some(
                serde_json::from_str::<T>(&line)
                    .map_err(|e| Error::parse(path, line_no, e.to_string())),
            ),
        }
    })
}

/// Reads a whole JSONL file of records.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    jsonl_records(open_reader(path)?, path).collect()
}
