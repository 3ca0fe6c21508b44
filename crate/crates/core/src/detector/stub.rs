//! Stub detection service for exercising the remote backend.
//!
//! Serves a replay log behind the same HTTP contract the real service
//! uses, with knobs for artificial latency and a seeded failure rate so
//! the pipeline's retry and skip behavior can be tested deterministically
//! enough to assert on.

use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiny_http::{Header, Method, Response, Server};

use super::replay::ReplayBackend;
use super::{DetectRequest, DetectResponse, DetectorBackend, WireDetection};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StubOptions {
    /// Port to bind on 127.0.0.1; 0 picks an ephemeral port.
    pub port: u16,
    /// Added delay before each successful response.
    pub latency_ms: u64,
    /// Probability of answering 503 instead of detections.
    pub fail_rate: f64,
    /// Seed for the failure coin flips.
    pub seed: u64,
}

impl Default for StubOptions {
    fn default() -> Self {
        StubOptions {
            port: 0,
            latency_ms: 0,
            fail_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct StubServer {
    addr: SocketAddr,
    base_url: String,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(replay: ReplayBackend, opts: StubOptions) -> io::Result<StubServer> {
        if !(0.0..=1.0).contains(&opts.fail_rate) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("fail rate {} outside [0, 1]", opts.fail_rate),
            ));
        }
        let server = Server::http(("127.0.0.1", opts.port))
            .map_err(|err| io::Error::new(io::ErrorKind::AddrInUse, err.to_string()))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::new(io::ErrorKind::Other, "server has no ip address"))?;
        let stop = Arc::new(AtomicBool::new(false));
        let worker_stop = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            serve(&server, &replay, opts, &worker_stop);
        });
        Ok(StubServer {
            addr,
            base_url: format!("http://{addr}"),
            stop,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve(server: &Server, replay: &ReplayBackend, opts: StubOptions, stop: &AtomicBool) {
    let failures = Mutex::new(ChaCha8Rng::seed_from_u64(opts.seed));
    while !stop.load(Ordering::SeqCst) {
        let mut request = match server.recv_timeout(Duration::from_millis(50)) {
            Ok(Some(request)) => request,
            Ok(None) => continue,
            Err(_) => break,
        };

        if request.method() != &Method::Post || request.url() != "/detect" {
            let _ = request.respond(Response::from_string("not found").with_status_code(404));
            continue;
        }

        let parsed: Result<DetectRequest, _> = serde_json::from_reader(request.as_reader());
        let body = match parsed {
            Ok(body) => body,
            Err(err) => {
                let _ = request.respond(
                    Response::from_string(format!("bad request: {err}")).with_status_code(400),
                );
                continue;
            }
        };
        let pixel_count = body.width as usize * body.height as usize;
        match BASE64.decode(&body.pixels_b64) {
            Ok(pixels) if pixels.len() == pixel_count => {}
            _ => {
                let _ = request.respond(
                    Response::from_string("bad request: pixel payload does not match dimensions")
                        .with_status_code(400),
                );
                continue;
            }
        }

        let fail = opts.fail_rate > 0.0 && failures.lock().unwrap().gen_bool(opts.fail_rate);
        if fail {
            let _ = request
                .respond(Response::from_string("service unavailable").with_status_code(503));
            continue;
        }

        if opts.latency_ms > 0 {
            std::thread::sleep(Duration::from_millis(opts.latency_ms));
        }

        let detections = replay
            .detect_at(body.frame)
            .unwrap_or_default()
            .iter()
            .map(WireDetection::from_detection)
            .collect();
        let payload = serde_json::to_string(&DetectResponse { detections })
            .expect("response serialization cannot fail");
        let response = Response::from_string(payload).with_header(
            Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                .expect("static header is valid"),
        );
        let _ = request.respond(response);
    }
}
