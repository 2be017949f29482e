//! The cracking daemon: one job per connection, a thread per connection.

use std::collections::HashMap;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use super::{read_message, write_message, ErrorCode, Message, WireError, DEFAULT_MAX_FRAME, MAX_INLINE_CORPUS};
use crate::engine::{crack_with, CandidatePair, CrackOptions, EngineError, Sink};
use crate::hashers::{measure_rate, Hasher, Registry, MIN_RATE_BUDGET};
use crate::keyspace::{CorpusSource, KeyspaceError, KeyspaceSpec, Wordlist};
use crate::predicate::PredicateVector;

#[derive(Clone)]
pub struct ServerConfig {
    pub corpus_dir: Option<PathBuf>,
    /// Engine threads per job.
    pub workers: usize,
    pub max_frame: u32,
    pub registry: Arc<Registry>,
    /// Hashes spent measuring each algorithm's advertised rate.
    pub rate_budget: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            corpus_dir: None,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
            max_frame: DEFAULT_MAX_FRAME,
            registry: Arc::new(Registry::default()),
            rate_budget: MIN_RATE_BUDGET,
        }
    }
}

struct State {
    config: ServerConfig,
    rates: Mutex<HashMap<String, u64>>,
    stop: AtomicBool,
}

impl State {
    fn rate(&self, hasher: &dyn Hasher) -> u64 {
        let mut rates = self.rates.lock().unwrap();
        *rates
            .entry(hasher.id().to_string())
            .or_insert_with(|| measure_rate(hasher, self.config.rate_budget) as u64)
    }
}

pub struct Server {
    listener: TcpListener,
    state: Arc<State>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: ServerConfig) -> io::Result<Server> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            state: Arc::new(State {
                config,
                rates: Mutex::new(HashMap::new()),
                stop: AtomicBool::new(false),
            }),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until the process exits.
    pub fn run(self) {
        let _ = self.accept_loop();
    }

    /// Serves on a background thread.
    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let state = Arc::clone(&self.state);
        let thread = thread::spawn(move || self.accept_loop());
        Ok(ServerHandle {
            addr,
            state,
            thread: Some(thread),
        })
    }

    fn accept_loop(self) -> Vec<JoinHandle<()>> {
        let mut conns: Vec<JoinHandle<()>> = Vec::new();
        for stream in self.listener.incoming() {
            if self.state.stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let state = Arc::clone(&self.state);
            conns.retain(|h| !h.is_finished());
            conns.push(thread::spawn(move || {
                let _ = handle_connection(stream, &state);
            }));
        }
        conns
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    state: Arc<State>,
    thread: Option<JoinHandle<Vec<JoinHandle<()>>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting, cancels running jobs and waits for every connection
    /// to close. Cancelled jobs end without a done frame.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        let Some(thread) = self.thread.take() else { return };
        self.state.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Ok(conns) = thread.join() {
            for c in conns {
                let _ = c.join();
            }
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

struct ChunkSink<W: Write> {
    out: W,
}

impl<W: Write> Sink for ChunkSink<W> {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()> {
        write_message(
            &mut self.out,
            &Message::CandidateChunk {
                pairs: batch.to_vec(),
            },
        )
    }
}

fn reply<W: Write>(w: &mut W, code: ErrorCode, text: impl Into<String>) -> io::Result<()> {
    write_message(w, &Message::error(code, text))
}

fn keyspace_code(e: &KeyspaceError) -> ErrorCode {
    match e {
        KeyspaceError::UnknownCorpus(_) => ErrorCode::UnknownCorpus,
        KeyspaceError::Io(..) => ErrorCode::Internal,
        _ => ErrorCode::BadKeyspace,
    }
}

fn handle_connection(stream: TcpStream, state: &State) -> io::Result<()> {
    let cfg = &state.config;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let next = |reader: &mut BufReader<TcpStream>, writer: &mut BufWriter<TcpStream>| {
        match read_message(reader, cfg.max_frame) {
            Ok(m) => Ok(Some(m)),
            Err(WireError::Closed) => Ok(None),
            Err(WireError::Io(e)) => Err(e),
            Err(e) => reply(writer, e.code(), e.to_string()).map(|_| None),
        }
    };

    let Some(first) = next(&mut reader, &mut writer)? else { return Ok(()) };
    let Message::HashInfoRequest { algo } = first else {
        return reply(&mut writer, ErrorCode::OutOfOrder, format!("expected HashInfoRequest, got {}", first.name()));
    };
    let hasher = match cfg.registry.get(&algo) {
        Ok(h) => h,
        Err(e) => return reply(&mut writer, ErrorCode::UnknownAlgo, e.to_string()),
    };
    write_message(
        &mut writer,
        &Message::HashInfoAck {
            algo: hasher.id().to_string(),
            digest_nibbles: hasher.digest_nibbles() as u64,
            rate_hps: state.rate(hasher.as_ref()),
        },
    )?;

    let Some(job) = next(&mut reader, &mut writer)? else { return Ok(()) };
    let Message::JobSubmit {
        algo,
        vector_hex,
        keyspace,
        corpus,
    } = job
    else {
        return reply(&mut writer, ErrorCode::OutOfOrder, format!("expected JobSubmit, got {}", job.name()));
    };
    let hasher = match cfg.registry.get(&algo) {
        Ok(h) => h,
        Err(e) => return reply(&mut writer, ErrorCode::UnknownAlgo, e.to_string()),
    };
    let vector = match PredicateVector::from_hex(&vector_hex) {
        Ok(v) => v,
        Err(e) => return reply(&mut writer, ErrorCode::BadVector, e.to_string()),
    };
    if vector.len() != hasher.digest_nibbles() {
        return reply(
            &mut writer,
            ErrorCode::VectorLengthMismatch,
            format!(
                "vector covers {} nibbles but {} digests have {}",
                vector.len(),
                hasher.id(),
                hasher.digest_nibbles()
            ),
        );
    }
    let source = match corpus {
        Some(bytes) if bytes.len() as u64 > MAX_INLINE_CORPUS => {
            return reply(
                &mut writer,
                ErrorCode::CorpusTooLarge,
                format!("inline corpus of {} bytes exceeds {MAX_INLINE_CORPUS}", bytes.len()),
            )
        }
        Some(bytes) => CorpusSource::Inline(Arc::new(Wordlist::from_bytes(&bytes))),
        None => cfg.corpus_dir.as_ref().map_or(CorpusSource::None, CorpusSource::dir),
    };
    let spec = match KeyspaceSpec::parse(&keyspace, &source) {
        Ok(s) => s,
        Err(e) => return reply(&mut writer, keyspace_code(&e), e.to_string()),
    };

    let opts = CrackOptions {
        workers: cfg.workers.max(1),
        cancel: Some(&state.stop),
        ..CrackOptions::default()
    };
    let report = match crack_with(&vector, &spec, hasher.as_ref(), ChunkSink { out: &mut writer }, &opts) {
        Ok(r) => r,
        // The client went away mid-stream.
        Err(EngineError::Sink { .. }) => return Ok(()),
        Err(EngineError::Keyspace(e)) => return reply(&mut writer, keyspace_code(&e), e.to_string()),
        Err(e) => return reply(&mut writer, ErrorCode::BadKeyspace, e.to_string()),
    };
    if report.partial {
        // Cancelled by shutdown: drop the connection without a done frame.
        return Ok(());
    }
    write_message(
        &mut writer,
        &Message::JobDone {
            hashed: report.hashed,
            hits: report.hits,
            elapsed_ms: report.elapsed.as_millis() as u64,
        },
    )
}
