//! Alert publishing: OSH violations and count events fan out to an MQTT
//! topic per camera and kind.
//!
//! The pipeline hands events to [`AlertPublisher`]; a background worker
//! drains them through an [`AlertTransport`]. While the transport is down
//! the events buffer in a bounded FIFO and flush in order on reconnect;
//! overflow drops the oldest event and counts the drop. Consumers must
//! deduplicate by (camera_id, track_id, kind, ts_ms) since delivery is
//! at-least-once.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::atomic::{AtomicU16, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    NoHelmet,
    CountIn,
    CountOut,
}

impl AlertKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlertKind::NoHelmet => "no_helmet",
            AlertKind::CountIn => "count_in",
            AlertKind::CountOut => "count_out",
        }
    }
}

/// Payload schema, serialized as JSON:
/// `{"kind":"no_helmet","camera_id":"gate1","ts_ms":1,"track_id":7,"bbox":{...}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub kind: AlertKind,
    pub camera_id: String,
    pub ts_ms: i64,
    pub track_id: u64,
    /// Last observed box of the track the alert refers to.
    pub bbox: BBox,
}

impl AlertEvent {
    pub fn topic(&self) -> String {
        format!("assist/ppe/{}/{}", self.camera_id, self.kind.as_str())
    }

    pub fn payload(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("alert payload serialization cannot fail")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("transport error: {0}")]
pub struct TransportError(pub String);

/// One delivery attempt. Implementations must be safe to call from the
/// publisher's worker thread.
pub trait AlertTransport: Send {
    fn send(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PublisherStats {
    pub published: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublisherOptions {
    /// Buffered events before the oldest is discarded.
    pub capacity: usize,
    /// Pause between delivery attempts while the transport is failing.
    pub retry_interval: Duration,
}

impl Default for PublisherOptions {
    fn default() -> Self {
        PublisherOptions {
            capacity: 10_000,
            retry_interval: Duration::from_millis(200),
        }
    }
}

#[derive(Debug)]
struct PublisherInner {
    queue: VecDeque<AlertEvent>,
    stats: PublisherStats,
    in_flight: bool,
    stopping: bool,
}

#[derive(Debug)]
struct PublisherShared {
    inner: Mutex<PublisherInner>,
    work: Condvar,
    drained: Condvar,
    capacity: usize,
}

/// Thread-safe bounded queue in front of a delivery worker.
pub struct AlertPublisher {
    shared: Arc<PublisherShared>,
    worker: Option<JoinHandle<()>>,
}

impl AlertPublisher {
    pub fn new(transport: Box<dyn AlertTransport>, opts: PublisherOptions) -> Self {
        assert!(opts.capacity > 0, "publisher capacity must be positive");
        let shared = Arc::new(PublisherShared {
            inner: Mutex::new(PublisherInner {
                queue: VecDeque::new(),
                stats: PublisherStats::default(),
                in_flight: false,
                stopping: false,
            }),
            work: Condvar::new(),
            drained: Condvar::new(),
            capacity: opts.capacity,
        });
        let worker_shared = Arc::clone(&shared);
        let worker = std::thread::spawn(move || {
            deliver_loop(&worker_shared, transport.as_ref(), opts.retry_interval);
        });
        AlertPublisher {
            shared,
            worker: Some(worker),
        }
    }

    /// Enqueues an event, never blocking the pipeline. A full buffer
    /// drops its oldest entry.
    pub fn publish(&self, event: AlertEvent) {
        let mut inner = self.shared.inner.lock().unwrap();
        if inner.queue.len() == self.shared.capacity {
            inner.queue.pop_front();
            inner.stats.dropped += 1;
        }
        inner.queue.push_back(event);
        drop(inner);
        self.shared.work.notify_all();
    }

    /// Waits until every buffered event was delivered. False means the
    /// timeout elapsed with events still pending.
    pub fn flush(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut inner = self.shared.inner.lock().unwrap();
        loop {
            if inner.queue.is_empty() && !inner.in_flight {
                return true;
            }
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            let (guard, _) = self
                .shared
                .drained
                .wait_timeout(inner, deadline - now)
                .unwrap();
            inner = guard;
        }
    }

    pub fn stats(&self) -> PublisherStats {
        self.shared.inner.lock().unwrap().stats
    }

    /// Stops the worker. Pending events get one final delivery attempt
    /// each; if the transport is still down they count as dropped, so
    /// shutdown never hangs on a dead broker.
    pub fn shutdown(mut self) -> PublisherStats {
        self.stop_worker();
        self.stats()
    }

    fn stop_worker(&mut self) {
        {
            let mut inner = self.shared.inner.lock().unwrap();
            inner.stopping = true;
        }
        self.shared.work.notify_all();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for AlertPublisher {
    fn drop(&mut self) {
        if self.worker.is_some() {
            self.stop_worker();
        }
    }
}

fn deliver_loop(shared: &PublisherShared, transport: &dyn AlertTransport, retry: Duration) {
    let mut inner = shared.inner.lock().unwrap();
    loop {
        let Some(event) = inner.queue.pop_front() else {
            inner.in_flight = false;
            shared.drained.notify_all();
            if inner.stopping {
                return;
            }
            inner = shared.work.wait(inner).unwrap();
            continue;
        };
        inner.in_flight = true;
        drop(inner);
        let result = transport.send(&event.topic(), &event.payload());
        inner = shared.inner.lock().unwrap();
        match result {
            Ok(()) => {
                inner.stats.published += 1;
            }
            Err(_) if inner.stopping => {
                inner.stats.dropped += 1 + inner.queue.len() as u64;
                inner.queue.clear();
                inner.in_flight = false;
                shared.drained.notify_all();
                return;
            }
            Err(_) => {
                if inner.queue.len() == shared.capacity {
                    // The in-flight event is the oldest one; the buffer
                    // filled behind it, so it is the one to drop.
                    inner.stats.dropped += 1;
                } else {
                    inner.queue.push_front(event);
                }
                inner.in_flight = false;
                let (guard, _) = shared.work.wait_timeout(inner, retry).unwrap();
                inner = guard;
            }
        }
    }
}

/// Captures alerts for tests and for the `memory` sink of the pipeline.
/// Clones share the same capture buffer and up/down switch.
#[derive(Debug, Clone, Default)]
pub struct MemoryTransport {
    inner: Arc<MemoryInner>,
}

#[derive(Debug, Default)]
struct MemoryInner {
    records: Mutex<Vec<(String, Vec<u8>)>>,
    down: Mutex<bool>,
}

impl MemoryTransport {
    pub fn new() -> Self {
        MemoryTransport::default()
    }

    pub fn set_up(&self, up: bool) {
        *self.inner.down.lock().unwrap() = !up;
    }

    /// Raw `(topic, payload)` records in delivery order.
    pub fn records(&self) -> Vec<(String, Vec<u8>)> {
        self.inner.records.lock().unwrap().clone()
    }

    /// Delivered events in order, parsed back from the payloads.
    pub fn events(&self) -> Vec<AlertEvent> {
        self.records()
            .iter()
            .map(|(_, payload)| {
                serde_json::from_slice(payload).expect("captured payload is valid JSON")
            })
            .collect()
    }
}

impl AlertTransport for MemoryTransport {
    fn send(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        if *self.inner.down.lock().unwrap() {
            return Err(TransportError("memory transport is down".to_owned()));
        }
        self.inner
            .records
            .lock()
            .unwrap()
            .push((topic.to_owned(), payload.to_vec()));
        Ok(())
    }
}

/// Prints one `topic payload` line per alert.
#[derive(Debug, Clone, Copy, Default)]
pub struct StdoutTransport;

impl AlertTransport for StdoutTransport {
    fn send(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        println!("{} {}", topic, String::from_utf8_lossy(payload));
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MqttConfig {
    /// `mqtt://host:port` or bare `host:port`; port defaults to 1883.
    pub url: String,
    pub username: Option<String>,
    pub password: Option<String>,
    pub io_timeout: Duration,
}

impl MqttConfig {
    pub fn new(url: impl Into<String>) -> Self {
        MqttConfig {
            url: url.into(),
            username: None,
            password: None,
            io_timeout: Duration::from_secs(5),
        }
    }

    /// Reads MQTT_URL, MQTT_USER, and MQTT_PASS.
    pub fn from_env() -> Result<Self, TransportError> {
        let url = std::env::var("MQTT_URL")
            .map_err(|_| TransportError("MQTT_URL is not set".to_owned()))?;
        let mut cfg = MqttConfig::new(url);
        cfg.username = std::env::var("MQTT_USER").ok();
        cfg.password = std::env::var("MQTT_PASS").ok();
        Ok(cfg)
    }

    fn host_port(&self) -> String {
        let stripped = self
            .url
            .strip_prefix("mqtt://")
            .or_else(|| self.url.strip_prefix("tcp://"))
            .unwrap_or(&self.url);
        if stripped.contains(':') {
            stripped.to_owned()
        } else {
            format!("{stripped}:1883")
        }
    }
}

/// Minimal MQTT 3.1.1 publisher: CONNECT/CONNACK on demand, QoS-1
/// PUBLISH/PUBACK per alert. Any socket error tears the connection down;
/// the next send reconnects.
pub struct MqttTransport {
    cfg: MqttConfig,
    stream: Mutex<Option<TcpStream>>,
    next_packet_id: AtomicU16,
}

impl MqttTransport {
    pub fn new(cfg: MqttConfig) -> Self {
        MqttTransport {
            cfg,
            stream: Mutex::new(None),
            next_packet_id: AtomicU16::new(1),
        }
    }

    fn connect(&self) -> Result<TcpStream, TransportError> {
        let addr = self.cfg.host_port();
        let stream = TcpStream::connect(&addr)
            .map_err(|err| TransportError(format!("connect {addr}: {err}")))?;
        stream
            .set_read_timeout(Some(self.cfg.io_timeout))
            .and_then(|()| stream.set_write_timeout(Some(self.cfg.io_timeout)))
            .map_err(|err| TransportError(format!("socket setup: {err}")))?;

        let mut connect = Vec::new();
        write_mqtt_string(&mut connect, "MQTT");
        connect.push(0x04);
        let mut flags = 0x02u8;
        if self.cfg.username.is_some() {
            flags |= 0x80;
        }
        if self.cfg.password.is_some() {
            flags |= 0x40;
        }
        connect.push(flags);
        connect.extend_from_slice(&0u16.to_be_bytes());
        write_mqtt_string(&mut connect, "ppe-alerts");
        if let Some(user) = &self.cfg.username {
            write_mqtt_string(&mut connect, user);
        }
        if let Some(pass) = &self.cfg.password {
            write_mqtt_string(&mut connect, pass);
        }

        let mut stream = stream;
        write_packet(&mut stream, 0x10, &connect)
            .map_err(|err| TransportError(format!("send CONNECT: {err}")))?;

        let mut ack = [0u8; 4];
        stream
            .read_exact(&mut ack)
            .map_err(|err| TransportError(format!("read CONNACK: {err}")))?;
        if ack[0] != 0x20 || ack[1] != 0x02 {
            return Err(TransportError(format!(
                "unexpected CONNACK header {:02x} {:02x}",
                ack[0], ack[1]
            )));
        }
        if ack[3] != 0x00 {
            return Err(TransportError(format!("connection refused, code {}", ack[3])));
        }
        Ok(stream)
    }

    fn publish_once(
        &self,
        stream: &mut TcpStream,
        topic: &str,
        payload: &[u8],
    ) -> Result<(), TransportError> {
        let packet_id = self.next_packet_id.fetch_add(1, Ordering::Relaxed).max(1);
        let mut body = Vec::with_capacity(topic.len() + payload.len() + 4);
        write_mqtt_string(&mut body, topic);
        body.extend_from_slice(&packet_id.to_be_bytes());
        body.extend_from_slice(payload);
        write_packet(stream, 0x32, &body)
            .map_err(|err| TransportError(format!("send PUBLISH: {err}")))?;

        let mut ack = [0u8; 4];
        stream
            .read_exact(&mut ack)
            .map_err(|err| TransportError(format!("read PUBACK: {err}")))?;
        if ack[0] != 0x40 || ack[1] != 0x02 {
            return Err(TransportError(format!(
                "unexpected PUBACK header {:02x} {:02x}",
                ack[0], ack[1]
            )));
        }
        let acked = u16::from_be_bytes([ack[2], ack[3]]);
        if acked != packet_id {
            return Err(TransportError(format!(
                "PUBACK for packet {acked}, expected {packet_id}"
            )));
        }
        Ok(())
    }
}

impl AlertTransport for MqttTransport {
    fn send(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        let mut guard = self.stream.lock().unwrap();
        if guard.is_none() {
            *guard = Some(self.connect()?);
        }
        let stream = guard.as_mut().expect("stream was just established");
        let result = self.publish_once(stream, topic, payload);
        if result.is_err() {
            *guard = None;
        }
        result
    }
}

fn write_mqtt_string(buf: &mut Vec<u8>, value: &str) {
    let len = u16::try_from(value.len()).expect("mqtt string fits in u16");
    buf.extend_from_slice(&len.to_be_bytes());
    buf.extend_from_slice(value.as_bytes());
}

fn encode_remaining_length(mut len: usize, buf: &mut Vec<u8>) {
    loop {
        let mut byte = (len % 128) as u8;
        len /= 128;
        if len > 0 {
            byte |= 0x80;
        }
        buf.push(byte);
        if len == 0 {
            break;
        }
    }
}

fn write_packet(stream: &mut TcpStream, header: u8, body: &[u8]) -> std::io::Result<()> {
    let mut packet = Vec::with_capacity(body.len() + 5);
    packet.push(header);
    encode_remaining_length(body.len(), &mut packet);
    packet.extend_from_slice(body);
    stream.write_all(&packet)
}

#[cfg(test)]
pub(crate) mod fake_broker {
    //! In-process MQTT 3.1.1 broker good enough for the transport tests:
    //! accepts one connection at a time, acknowledges QoS-1 publishes,
    //! and can be switched down to sever and refuse connections.

    use std::io::{Read, Write};
    use std::net::{SocketAddr, TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::{Arc, Mutex};
    use std::thread::JoinHandle;
    use std::time::Duration;

    pub struct FakeBroker {
        addr: SocketAddr,
        records: Arc<Mutex<Vec<(String, Vec<u8>)>>>,
        down: Arc<AtomicBool>,
        stop: Arc<AtomicBool>,
        handle: Option<JoinHandle<()>>,
    }

    impl FakeBroker {
        pub fn start() -> FakeBroker {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            listener.set_nonblocking(true).unwrap();
            let addr = listener.local_addr().unwrap();
            let records = Arc::new(Mutex::new(Vec::new()));
            let down = Arc::new(AtomicBool::new(false));
            let stop = Arc::new(AtomicBool::new(false));
            let handle = {
                let records = Arc::clone(&records);
                let down = Arc::clone(&down);
                let stop = Arc::clone(&stop);
                std::thread::spawn(move || {
                    while !stop.load(Ordering::SeqCst) {
                        match listener.accept() {
                            Ok((conn, _)) => {
                                if down.load(Ordering::SeqCst) {
                                    drop(conn);
                                    continue;
                                }
                                serve_connection(conn, &records, &down, &stop);
                            }
                            Err(ref err) if err.kind() == std::io::ErrorKind::WouldBlock => {
                                std::thread::sleep(Duration::from_millis(5));
                            }
                            Err(_) => break,
                        }
                    }
                })
            };
            FakeBroker {
                addr,
                records,
                down,
                stop,
                handle: Some(handle),
            }
        }

        pub fn url(&self) -> String {
            format!("mqtt://{}", self.addr)
        }

        pub fn set_down(&self, is_down: bool) {
            self.down.store(is_down, Ordering::SeqCst);
        }

        pub fn records(&self) -> Vec<(String, Vec<u8>)> {
            self.records.lock().unwrap().clone()
        }
    }

    impl Drop for FakeBroker {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            if let Some(handle) = self.handle.take() {
                let _ = handle.join();
            }
        }
    }

    fn read_packet(conn: &mut TcpStream) -> std::io::Result<(u8, Vec<u8>)> {
        let mut header = [0u8; 1];
        conn.read_exact(&mut header)?;
        let mut remaining = 0usize;
        let mut shift = 0u32;
        loop {
            let mut byte = [0u8; 1];
            conn.read_exact(&mut byte)?;
            remaining |= ((byte[0] & 0x7F) as usize) << shift;
            if byte[0] & 0x80 == 0 {
                break;
            }
            shift += 7;
        }
        let mut body = vec![0u8; remaining];
        conn.read_exact(&mut body)?;
        Ok((header[0], body))
    }

    fn serve_connection(
        mut conn: TcpStream,
        records: &Mutex<Vec<(String, Vec<u8>)>>,
        down: &AtomicBool,
        stop: &AtomicBool,
    ) {
        conn.set_read_timeout(Some(Duration::from_millis(500))).unwrap();
        match read_packet(&mut conn) {
            Ok((header, _)) if header >> 4 == 1 => {
                if conn.write_all(&[0x20, 0x02, 0x00, 0x00]).is_err() {
                    return;
                }
            }
            _ => return,
        }
        conn.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
        loop {
            if down.load(Ordering::SeqCst) || stop.load(Ordering::SeqCst) {
                return;
            }
            let (header, body) = match read_packet(&mut conn) {
                Ok(packet) => packet,
                Err(ref err)
                    if err.kind() == std::io::ErrorKind::WouldBlock
                        || err.kind() == std::io::ErrorKind::TimedOut =>
                {
                    continue;
                }
                Err(_) => return,
            };
            match header >> 4 {
                3 => {
                    let topic_len = u16::from_be_bytes([body[0], body[1]]) as usize;
                    let topic = String::from_utf8_lossy(&body[2..2 + topic_len]).into_owned();
                    let qos = (header >> 1) & 0x03;
                    let mut cursor = 2 + topic_len;
                    let packet_id = if qos > 0 {
                        let id = u16::from_be_bytes([body[cursor], body[cursor + 1]]);
                        cursor += 2;
                        Some(id)
                    } else {
                        None
                    };
                    records
                        .lock()
                        .unwrap()
                        .push((topic, body[cursor..].to_vec()));
                    if let Some(id) = packet_id {
                        let id = id.to_be_bytes();
                        if conn.write_all(&[0x40, 0x02, id[0], id[1]]).is_err() {
                            return;
                        }
                    }
                }
                12 => {
                    if conn.write_all(&[0xD0, 0x00]).is_err() {
                        return;
                    }
                }
                14 => return,
                _ => return,
            }
        }
    }
}
