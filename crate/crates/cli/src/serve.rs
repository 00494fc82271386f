//! Live session over WebSocket.
//!
//! The simulation loop runs on the calling thread and owns all state. Each
//! client connection gets its own thread that forwards torque commands into
//! a channel and relays snapshots back out. Commands only take effect at
//! control-step boundaries. One client is served at a time; a new
//! connection replaces the old one.

use std::io::Write as _;
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use coopsteer::harness::{sidecar_paths, RunConfig, Simulation};
use coopsteer::trace::{write_trace_file, TraceSample};
use serde::Deserialize;
use serde_json::Value;
use tungstenite::{Message, WebSocket};

/// How long a connection thread blocks on a read before checking for
/// outgoing snapshots.
const POLL: Duration = Duration::from_millis(2);

enum Event {
    Connected(u64, Sender<String>),
    Torque(u64, f64),
    Disconnected(u64),
}

#[derive(Deserialize)]
struct CommandMessage {
    #[serde(rename = "type")]
    kind: String,
    torque: f64,
}

/// Parses `{"type": "command", "torque": x}`.
fn parse_command(text: &str) -> std::result::Result<f64, String> {
    let msg: CommandMessage = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if msg.kind != "command" {
        return Err(format!("unexpected message type {:?}", msg.kind));
    }
    if !msg.torque.is_finite() {
        return Err("torque is not finite".into());
    }
    Ok(msg.torque)
}

fn snapshot(row: &TraceSample) -> Result<String> {
    let mut value = serde_json::to_value(row)?;
    if let Value::Object(map) = &mut value {
        map.insert("type".into(), Value::String("snapshot".into()));
    }
    Ok(value.to_string())
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io)
        if matches!(io.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut))
}

fn relay(
    ws: &mut WebSocket<TcpStream>,
    id: u64,
    events: &Sender<Event>,
    outgoing: &Receiver<String>,
) {
    loop {
        loop {
            match outgoing.try_recv() {
                Ok(text) => {
                    if let Err(e) = ws.send(Message::text(text)) {
                        log::info!("client {id}: send failed: {e}");
                        return;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    return;
                }
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => match parse_command(text.as_str()) {
                Ok(torque) => {
                    if events.send(Event::Torque(id, torque)).is_err() {
                        return;
                    }
                }
                Err(e) => log::warn!("client {id}: ignoring malformed command: {e}"),
            },
            Ok(Message::Close(_)) => return,
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(e) => {
                log::info!("client {id}: {e}");
                return;
            }
        }
    }
}

fn handle_client(stream: TcpStream, id: u64, events: Sender<Event>) {
    let _ = stream.set_nodelay(true);
    let mut ws = match tungstenite::accept(stream) {
        Ok(ws) => ws,
        Err(e) => {
            log::warn!("client {id}: handshake failed: {e}");
            return;
        }
    };
    if let Err(e) = ws.get_mut().set_read_timeout(Some(POLL)) {
        log::warn!("client {id}: {e}");
        return;
    }
    let (tx, rx) = mpsc::channel();
    if events.send(Event::Connected(id, tx)).is_err() {
        return;
    }
    log::info!("client {id} connected");
    relay(&mut ws, id, &events, &rx);
    log::info!("client {id} disconnected");
    let _ = events.send(Event::Disconnected(id));
}

fn accept_loop(listener: TcpListener, events: Sender<Event>) {
    for (id, stream) in (0u64..).zip(listener.incoming()) {
        match stream {
            Ok(stream) => {
                let events = events.clone();
                thread::spawn(move || handle_client(stream, id, events));
            }
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
}

/// Binds `addr`, waits for the first client and then runs the closed loop
/// in real time until the scenario ends or `duration` simulated seconds
/// have passed. The session is recorded to `out` when given.
pub fn serve(
    config: RunConfig,
    addr: &str,
    duration: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let mut sim = Simulation::new(config.clone())?;
    let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
    let local = listener.local_addr()?;
    println!("listening on ws://{local}");
    std::io::stdout().flush()?;

    let (tx, events) = mpsc::channel();
    thread::spawn(move || accept_loop(listener, tx));

    let mut client: Option<(u64, Sender<String>)> = None;
    while client.is_none() {
        match events.recv() {
            Ok(Event::Connected(id, s)) => client = Some((id, s)),
            Ok(_) => {}
            Err(_) => anyhow::bail!("listener stopped before any client connected"),
        }
    }

    let period = Duration::from_secs_f64(config.control_period);
    let limit = duration.unwrap_or(f64::INFINITY);
    let mut torque = 0.0;
    let mut trace = Vec::new();
    let start = Instant::now();
    let mut steps: u32 = 0;
    while !sim.done() && sim.time() < limit - 1e-9 {
        for event in events.try_iter() {
            match event {
                Event::Connected(id, s) => {
                    log::info!("client {id} replaces the current session client");
                    client = Some((id, s));
                    torque = 0.0;
                }
                Event::Torque(id, t) if client.as_ref().is_some_and(|c| c.0 == id) => torque = t,
                Event::Torque(..) => {}
                Event::Disconnected(id) => {
                    if client.as_ref().is_some_and(|c| c.0 == id) {
                        client = None;
                        torque = 0.0;
                    }
                }
            }
        }
        let row = sim.step(Some(torque))?;
        if let Some((_, s)) = &client {
            if s.send(snapshot(&row)?).is_err() {
                client = None;
                torque = 0.0;
            }
        }
        trace.push(row);

        steps += 1;
        let deadline = start + period * steps;
        if let Some(wait) = deadline.checked_duration_since(Instant::now()) {
            thread::sleep(wait);
        }
    }
    drop(client);
    log::info!(
        "session ended at t = {:.2} s after {} steps",
        sim.time(),
        trace.len()
    );

    if let Some(path) = out {
        write_trace_file(path, &trace)?;
        let (config_path, _) = sidecar_paths(path);
        std::fs::write(&config_path, serde_json::to_string_pretty(&config)? + "\n")
            .with_context(|| format!("writing {}", config_path.display()))?;
    }
    // Give connection threads a moment to send their close frames.
    thread::sleep(Duration::from_millis(50));
    Ok(())
}
