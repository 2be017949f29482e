//! The server-side cracking loop.
//!
//! Every candidate in the keyspace is hashed once and its raw digest tested
//! against the compiled predicate with one table lookup per byte, so the cost
//! per hash does not depend on how large the decoy set is.

use std::collections::BTreeMap;
use std::io;
use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::hashers::Hasher;
use crate::keyspace::{partition, KeyspaceError, KeyspaceSpec};
use crate::predicate::{ByteMatcher, Digest, PredicateVector};

/// Pairs handed to the sink per call.
pub const BATCH_SIZE: usize = 4096;
/// Default number of hashes between progress callbacks.
pub const PROGRESS_INTERVAL: u64 = 10_000_000;
/// Chunks per worker in the shared work queue.
pub const CHUNKS_PER_WORKER: usize = 16;

// Candidates between checks of the cancel flag and shared counters.
const TICK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidatePair {
    pub password: Vec<u8>,
    pub digest: Digest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrackReport {
    /// Candidates hashed. Together with `skipped` this is `|DS|` unless the
    /// run was cancelled.
    pub hashed: u64,
    pub hits: u64,
    /// Candidates the backend could not hash, e.g. invalid UTF-8 under NTLM.
    pub skipped: u64,
    pub elapsed: Duration,
    /// Hashes per second.
    pub rate: f64,
    pub partial: bool,
}

impl CrackReport {
    fn finish(hashed: u64, hits: u64, skipped: u64, start: Instant, partial: bool) -> Self {
        let elapsed = start.elapsed();
        let secs = elapsed.as_secs_f64();
        CrackReport {
            hashed,
            hits,
            skipped,
            elapsed,
            rate: if secs > 0.0 { hashed as f64 / secs } else { 0.0 },
            partial,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub done: u64,
    pub total: u64,
    pub rate: f64,
    pub eta: Duration,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("vector covers {vector} nibbles but {algo} digests have {digest}")]
    VectorLength {
        algo: String,
        vector: usize,
        digest: usize,
    },
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error(transparent)]
    Keyspace(#[from] KeyspaceError),
    #[error("keyspace of {0} candidates exceeds the 64-bit hash counter")]
    TooLarge(u128),
    #[error("candidate sink failed after {} hashes: {source}", report.hashed)]
    Sink {
        #[source]
        source: io::Error,
        report: CrackReport,
    },
}

/// Receives candidate pairs in batches of at most [`BATCH_SIZE`].
pub trait Sink {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()>;

    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Sink for Vec<CandidatePair> {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()> {
        self.extend_from_slice(batch);
        Ok(())
    }
}

/// Counts pairs and drops them.
#[derive(Debug, Default)]
pub struct CountingSink(pub u64);

impl Sink for CountingSink {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()> {
        self.0 += batch.len() as u64;
        Ok(())
    }
}

impl<S: Sink + ?Sized> Sink for &mut S {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()> {
        (**self).append(batch)
    }

    fn finish(&mut self) -> io::Result<()> {
        (**self).finish()
    }
}

pub struct CrackOptions<'a> {
    pub workers: usize,
    pub progress_interval: u64,
    pub progress: Option<&'a (dyn Fn(Progress) + Sync)>,
    pub cancel: Option<&'a AtomicBool>,
}

impl Default for CrackOptions<'_> {
    fn default() -> Self {
        CrackOptions {
            workers: 1,
            progress_interval: PROGRESS_INTERVAL,
            progress: None,
            cancel: None,
        }
    }
}

impl<'a> CrackOptions<'a> {
    pub fn workers(n: usize) -> Self {
        CrackOptions {
            workers: n,
            ..Self::default()
        }
    }
}

/// Single-threaded crack. Pairs arrive in keyspace order.
pub fn crack<S: Sink + Send>(
    vector: &PredicateVector,
    spec: &KeyspaceSpec,
    hasher: &dyn Hasher,
    sink: S,
) -> Result<CrackReport, EngineError> {
    crack_with(vector, spec, hasher, sink, &CrackOptions::default())
}

/// Multi-threaded crack. The output is identical to [`crack`], including
/// order: chunks are committed to the sink in keyspace order.
pub fn crack_parallel<S: Sink + Send>(
    vector: &PredicateVector,
    spec: &KeyspaceSpec,
    hasher: &dyn Hasher,
    sink: S,
    workers: usize,
) -> Result<CrackReport, EngineError> {
    crack_with(vector, spec, hasher, sink, &CrackOptions::workers(workers))
}

struct Commit<S> {
    sink: S,
    next: usize,
    ready: BTreeMap<usize, Vec<CandidatePair>>,
    failed: Option<io::Error>,
}

impl<S: Sink> Commit<S> {
    fn push(&mut self, pairs: &[CandidatePair]) {
        if self.failed.is_some() {
            return;
        }
        for batch in pairs.chunks(BATCH_SIZE) {
            if let Err(e) = self.sink.append(batch) {
                self.failed = Some(e);
                return;
            }
        }
    }

    /// Writes out every finished chunk that is next in line.
    fn drain(&mut self, next_shared: &AtomicUsize) {
        while let Some(pairs) = self.ready.remove(&self.next) {
            self.push(&pairs);
            self.next += 1;
        }
        next_shared.store(self.next, Ordering::Release);
    }
}

struct Shared<'a, S> {
    hasher: &'a dyn Hasher,
    matcher: ByteMatcher,
    spec: &'a KeyspaceSpec,
    chunks: Vec<Range<u128>>,
    queue: AtomicUsize,
    next_commit: AtomicUsize,
    commit: Mutex<Commit<S>>,
    hashed: AtomicU64,
    skipped: AtomicU64,
    hits: AtomicU64,
    total: u64,
    start: Instant,
    opts: &'a CrackOptions<'a>,
    last_progress: AtomicU64,
    stop: AtomicBool,
}

impl<S: Sink> Shared<'_, S> {
    fn cancelled(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
            || self.opts.cancel.is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn tick(&self, hashed: u64, skipped: u64) {
        let done = self.hashed.fetch_add(hashed, Ordering::Relaxed) + hashed;
        self.skipped.fetch_add(skipped, Ordering::Relaxed);
        let Some(cb) = self.opts.progress else { return };
        let interval = self.opts.progress_interval.max(1);
        let mark = done / interval * interval;
        let prev = self.last_progress.load(Ordering::Relaxed);
        if mark > prev
            && self
                .last_progress
                .compare_exchange(prev, mark, Ordering::Relaxed, Ordering::Relaxed)
                .is_ok()
        {
            let secs = self.start.elapsed().as_secs_f64();
            let rate = if secs > 0.0 { done as f64 / secs } else { 0.0 };
            let left = self.total.saturating_sub(done) as f64;
            cb(Progress {
                done,
                total: self.total,
                rate,
                eta: Duration::from_secs_f64(if rate > 0.0 { left / rate } else { 0.0 }),
            });
        }
    }

    fn worker(&self) {
        let mut out = vec![0u8; self.hasher.digest_bytes()];
        loop {
            let idx = self.queue.fetch_add(1, Ordering::Relaxed);
            if idx >= self.chunks.len() || self.cancelled() {
                return;
            }
            let mut pairs = Vec::new();
            let (mut hashed, mut skipped, mut since_tick) = (0u64, 0u64, 0u64);
            let mut stopped = false;
            self.spec.try_for_each_in(self.chunks[idx].clone(), |pw| {
                match self.hasher.hash_into(pw, &mut out) {
                    Ok(()) => {
                        hashed += 1;
                        if self.matcher.matches(&out) {
                            pairs.push(CandidatePair {
                                password: pw.to_vec(),
                                digest: Digest::from_bytes(&out),
                            });
                            // Stream large runs of hits when this chunk is
                            // next to commit instead of holding them.
                            if pairs.len() >= BATCH_SIZE
                                && self.next_commit.load(Ordering::Acquire) == idx
                            {
                                self.hits.fetch_add(pairs.len() as u64, Ordering::Relaxed);
                                let mut c = self.commit.lock().unwrap();
                                c.push(&pairs);
                                pairs.clear();
                                if c.failed.is_some() {
                                    self.stop.store(true, Ordering::Relaxed);
                                }
                            }
                        }
                    }
                    Err(_) => skipped += 1,
                }
                since_tick += 1;
                if since_tick == TICK {
                    self.tick(hashed, skipped);
                    (hashed, skipped, since_tick) = (0, 0, 0);
                    if self.cancelled() {
                        stopped = true;
                        return false;
                    }
                }
                true
            });
            self.tick(hashed, skipped);
            self.hits.fetch_add(pairs.len() as u64, Ordering::Relaxed);
            let mut c = self.commit.lock().unwrap();
            c.ready.insert(idx, pairs);
            c.drain(&self.next_commit);
            if c.failed.is_some() {
                self.stop.store(true, Ordering::Relaxed);
            }
            if stopped {
                return;
            }
        }
    }
}

/// Cracks `spec` with the options given. On cancellation every pair found
/// so far is still delivered and the report is marked partial.
pub fn crack_with<S: Sink + Send>(
    vector: &PredicateVector,
    spec: &KeyspaceSpec,
    hasher: &dyn Hasher,
    sink: S,
    opts: &CrackOptions<'_>,
) -> Result<CrackReport, EngineError> {
    if vector.len() != hasher.digest_nibbles() {
        return Err(EngineError::VectorLength {
            algo: hasher.id().to_string(),
            vector: vector.len(),
            digest: hasher.digest_nibbles(),
        });
    }
    if opts.workers == 0 {
        return Err(EngineError::NoWorkers);
    }
    let len = spec.len()?;
    let total = u64::try_from(len).map_err(|_| EngineError::TooLarge(len))?;
    let chunks = partition(len, opts.workers * CHUNKS_PER_WORKER);
    let shared = Shared {
        hasher,
        matcher: vector.compile(),
        spec,
        chunks,
        queue: AtomicUsize::new(0),
        next_commit: AtomicUsize::new(0),
        commit: Mutex::new(Commit {
            sink,
            next: 0,
            ready: BTreeMap::new(),
            failed: None,
        }),
        hashed: AtomicU64::new(0),
        skipped: AtomicU64::new(0),
        hits: AtomicU64::new(0),
        total,
        start: Instant::now(),
        opts,
        last_progress: AtomicU64::new(0),
        stop: AtomicBool::new(false),
    };
    if opts.workers == 1 {
        shared.worker();
    } else {
        thread::scope(|s| {
            for _ in 0..opts.workers {
                s.spawn(|| shared.worker());
            }
        });
    }
    let hashed = shared.hashed.load(Ordering::Relaxed);
    let skipped = shared.skipped.load(Ordering::Relaxed);
    let hits = shared.hits.load(Ordering::Relaxed);
    let mut commit = shared.commit.into_inner().unwrap();
    // Anything left is out of line because an earlier chunk never finished.
    for pairs in std::mem::take(&mut commit.ready).into_values() {
        commit.push(&pairs);
    }
    if commit.failed.is_none() {
        if let Err(e) = commit.sink.finish() {
            commit.failed = Some(e);
        }
    }
    let partial = hashed + skipped < total;
    let report = CrackReport::finish(hashed, hits, skipped, shared.start, partial);
    match commit.failed {
        Some(source) => Err(EngineError::Sink {
            source,
            report: CrackReport {
                partial: true,
                ..report
            },
        }),
        None => Ok(report),
    }
}
