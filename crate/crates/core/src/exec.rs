//! Data-parallel execution with a sequential fallback.
//!
//! Every helper here preserves input order, so results are identical in both
//! modes. Without the `parallel` feature, [`ExecMode::Parallel`] silently runs
//! sequentially.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// The mode that will actually run given the compiled features.
    pub fn effective(self) -> ExecMode {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }
}

/// Order-preserving map over a batch.
pub fn map_batch<T, U, F>(mode: ExecMode, batch: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => batch.into_iter().map(f).collect(),
        ExecMode::Parallel => par::map(batch, f),
    }
}

/// Order-preserving filter over a batch.
pub fn filter_batch<T, F>(mode: ExecMode, batch: Vec<T>, keep: F) -> Vec<T>
where
    T: Send,
    F: Fn(&T) -> bool + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => batch.into_iter().filter(|t| keep(t)).collect(),
        ExecMode::Parallel => par::filter(batch, keep),
    }
}

pub fn sort_unstable<T: Ord + Send>(mode: ExecMode, items: &mut [T]) {
    match mode.effective() {
        ExecMode::Sequential => items.sort_unstable(),
        ExecMode::Parallel => par::sort_unstable(items),
    }
}

/// Fills `out[i] = f(i)` for every index.
pub fn fill_indexed<U, F>(mode: ExecMode, out: &mut [U], f: F)
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
        ExecMode::Parallel => par::fill_indexed(out, f),
    }
}

/// Runs `f` on a pool limited to `jobs` threads, or on the global pool.
pub fn with_jobs<R, F>(jobs: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => par::install(n, f),
        None => Ok(f()),
    }
}

#[cfg(feature = "parallel")]
mod par {
    use rayon::prelude::*;

    use crate::error::{Error, Result};

    pub fn map<T: Send, U: Send>(batch: Vec<T>, f: impl Fn(T) -> U + Sync + Send) -> Vec<U> {
        batch.into_par_iter().map(f).collect()
    }

    pub fn filter<T: Send>(batch: Vec<T>, keep: impl Fn(&T) -> bool + Sync + Send) -> Vec<T> {
        batch.into_par_iter().filter(|t| keep(t)).collect()
    }

    pub fn sort_unstable<T: Ord + Send>(items: &mut [T]) {
        items.par_sort_unstable();
    }

    pub fn fill_indexed<U: Send>(out: &mut [U], f: impl Fn(usize) -> U + Sync + Send) {
        out.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(i, o)| *o = f(i));
    }

    pub fn install<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

#[cfg(not(feature = "parallel"))]
mod par {
    use crate::error::Result;

    pub fn map<T, U>(batch: Vec<T>, f: impl Fn(T) -> U) -> Vec<U> {
        batch.into_iter().map(f).collect()
    }

    pub fn filter<T>(batch: Vec<T>, keep: impl Fn(&T) -> bool) -> Vec<T> {
        batch.into_iter().filter(|t| keep(t)).collect()
    }

    pub fn sort_unstable<T: Ord>(items: &mut [T]) {
        items.sort_unstable();
    }

    pub fn fill_indexed<U>(out: &mut [U], f: impl Fn(usize) -> U) {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }

    pub fn install<R>(_threads: usize, f: impl FnOnce() -> R) -> Result<R> {
        Ok(f())
    }
}
