//! External merge sort: sorted in-memory chunks are spilled as text runs and
//! merged lazily with a k-way heap.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use tempfile::TempDir;

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};

/// Environment variable naming the directory used for spill files.
pub const TMPDIR_ENV: &str = "WDCS_TMPDIR";

pub const DEFAULT_CHUNK_SIZE: usize = 1_000_000;

/// A record that can be written to and read back from a single spill line.
pub trait SpillRecord: Sized + Ord + Send {
    /// Appends the encoded record without a trailing newline.
    fn encode(&self, out: &mut String);
    fn decode(line: &str) -> Option<Self>;
}

#[derive(Debug, Clone)]
pub struct SortConfig {
    pub chunk_size: usize,
    pub spill_dir: Option<PathBuf>,
    pub mode: ExecMode,
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
            spill_dir: std::env::var_os(TMPDIR_ENV).map(PathBuf::from),
            mode: ExecMode::default(),
        }
    }
}

impl SortConfig {
    fn spill_root(&self) -> PathBuf {
        self.spill_dir.clone().unwrap_or_else(std::env::temp_dir)
    }
}

pub struct ExternalSorter<T> {
    config: SortConfig,
    buffer: Vec<T>,
    dir: Option<TempDir>,
    runs: Vec<PathBuf>,
    spilled_bytes: u64,
}

impl<T: SpillRecord> ExternalSorter<T> {
    pub fn new(config: SortConfig) -> Self {
        let config = SortConfig {
            chunk_size: config.chunk_size.max(1),
            ..config
        };
        ExternalSorter {
            config,
            buffer: Vec::new(),
            dir: None,
            runs: Vec::new(),
            spilled_bytes: 0,
        }
    }

    pub fn push(&mut self, item: T) -> Result<()> {
        self.buffer.push(item);
        if self.buffer.len() >= self.config.chunk_size {
            self.spill()?;
        }
        Ok(())
    }

    /// Number of runs written to disk so far.
    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    fn spill_error(&self, message: impl std::fmt::Display) -> Error {
        let dir = self
            .dir
            .as_ref()
            .map(|d| d.path().to_path_buf())
            .unwrap_or_else(|| self.config.spill_root());
        Error::Spill {
            dir,
            message: format!(
                "{message} ({} bytes already spilled in {} runs)",
                self.spilled_bytes,
                self.runs.len()
            ),
        }
    }

    fn spill(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        if self.dir.is_none() {
            let root = self.config.spill_root();
            let dir = tempfile::Builder::new()
                .prefix("wdcs-sort-")
                .tempdir_in(&root)
                .map_err(|e| self.spill_error(e))?;
            self.dir = Some(dir);
        }
        let path = self
            .dir
            .as_ref()
            .expect("spill dir")
            .path()
            .join(format!("run-{:05}.tsv", self.runs.len()));
        let mut chunk = std::mem::take(&mut self.buffer);
        exec::sort_unstable(self.config.mode, &mut chunk);

        let file = File::create(&path).map_err(|e| self.spill_error(e))?;
        let mut writer = BufWriter::with_capacity(1 << 20, file);
        let mut line = String::new();
        let mut written = 0u64;
        for item in &chunk {
            line.clear();
            item.encode(&mut line);
            line.push('\n');
            writer
                .write_all(line.as_bytes())
                .map_err(|e| self.spill_error(e))?;
            written += line.len() as u64;
        }
        writer.flush().map_err(|e| self.spill_error(e))?;
        self.spilled_bytes += written;
        self.runs.push(path);
        chunk.clear();
        self.buffer = chunk;
        Ok(())
    }

    pub fn finish(mut self) -> Result<Sorted<T>> {
        if self.runs.is_empty() {
            let mut items = std::mem::take(&mut self.buffer);
            exec::sort_unstable(self.config.mode, &mut items);
            return Ok(Sorted {
                inner: Inner::Memory(items.into_iter()),
                _dir: None,
            });
        }
        self.spill()?;
        let mut readers = Vec::with_capacity(self.runs.len());
        for path in &self.runs {
            let file = File::open(path).map_err(|e| self.spill_error(e))?;
            readers.push(RunReader {
                path: path.clone(),
                reader: BufReader::with_capacity(1 << 16, file),
                line: String::new(),
            });
        }
        let mut merger = Merger {
            readers,
            heap: BinaryHeap::new(),
        };
        for i in 0..merger.readers.len() {
            if let Some(item) = merger.readers[i].next_item()? {
                merger.heap.push(Reverse((item, i)));
            }
        }
        Ok(Sorted {
            inner: Inner::Merge(merger),
            _dir: self.dir.take(),
        })
    }
}

struct RunReader {
    path: PathBuf,
    reader: BufReader<File>,
    line: String,
}

impl RunReader {
    fn next_item<T: SpillRecord>(&mut self) -> Result<Option<T>> {
        self.line.clear();
        let n = self
            .reader
            .read_line(&mut self.line)
            .map_err(|e| Error::io(&self.path, e))?;
        if n == 0 {
            return Ok(None);
        }
        let line = crate::tsv::trim_newline(&self.line);
        T::decode(line).map(Some).ok_or_else(|| Error::Spill {
            dir: self.path.clone(),
            message: "corrupted spill record".into(),
        })
    }
}

struct Merger<T> {
    readers: Vec<RunReader>,
    heap: BinaryHeap<Reverse<(T, usize)>>,
}

enum Inner<T> {
    Memory(std::vec::IntoIter<T>),
    Merge(Merger<T>),
}

/// Sorted output of an [`ExternalSorter`]. Spill files are removed on drop.
pub struct Sorted<T> {
    inner: Inner<T>,
    _dir: Option<TempDir>,
}

impl<T: SpillRecord> Iterator for Sorted<T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.inner {
            Inner::Memory(items) => items.next().map(Ok),
            Inner::Merge(merger) => {
                let Reverse((item, i)) = merger.heap.pop()?;
                match merger.readers[i].next_item() {
                    Ok(Some(next)) => merger.heap.push(Reverse((next, i))),
                    Ok(None) => {}
                    Err(e) => return Some(Err(e)),
                }
                Some(Ok(item))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    impl SpillRecord for (u64, String) {
        fn encode(&self, out: &mut String) {
            out.push_str(&self.0.to_string());
            out.push('\t');
            out.push_str(&crate::tsv::escape(&self.1));
        }

        fn decode(line: &str) -> Option<Self> {
            let (n, s) = line.split_once('\t')?;
            Some((n.parse().ok()?, crate::tsv::unescape(s).into_owned()))
        }
    }

    fn sort_all(items: Vec<(u64, String)>, chunk_size: usize) -> (Vec<(u64, String)>, usize) {
        let mut sorter = ExternalSorter::new(SortConfig {
            chunk_size,
            spill_dir: None,
            mode: ExecMode::Sequential,
        });
        for item in items {
            sorter.push(item).unwrap();
        }
        let runs = sorter.spilled_runs();
        let out = sorter.finish().unwrap().collect::<Result<Vec<_>>>().unwrap();
        (out, runs)
    }

    #[test]
    fn spills_and_merges() {
        let items: Vec<_> = (0..1000u64).rev().map(|i| (i % 37, format!("v\t{i}"))).collect();
        let (out, runs) = sort_all(items.clone(), 64);
        assert!(runs >= 15);
        let mut expected = items;
        expected.sort();
        assert_eq!(out, expected);
    }

    #[test]
    fn unwritable_spill_dir_reports_location() {
        let mut sorter = ExternalSorter::<(u64, String)>::new(SortConfig {
            chunk_size: 1,
            spill_dir: Some(PathBuf::from("/nonexistent/wdcs-spill")),
            mode: ExecMode::Sequential,
        });
        let err = sorter.push((1, "x".into())).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/wdcs-spill"), "{err}");
    }

    proptest! {
        #[test]
        fn matches_in_memory_sort(items in prop::collection::vec((0u64..50, "[a-c]{0,3}"), 0..300),
                                  chunk in 1usize..40) {
            let (out, _) = sort_all(items.clone(), chunk);
            let mut expected = items;
            expected.sort();
            prop_assert_eq!(out, expected);
        }
    }
}
