//! WebSocket front end. One thread owns the session and ticks it against
//! the wall clock; clients send commands into a queue drained once per tick
//! and receive every few ticks a snapshot from a broadcast channel.

use std::net::SocketAddr;
use std::sync::mpsc::{self, TryRecvError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crawler_core::teleop::UserCommand;
use crawler_core::world::Arena;
use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::broadcast;
use tokio_tungstenite::tungstenite::Message;

use crate::calibration::CalibrationRow;
use crate::config::SessionConfig;
use crate::error::Result;
use crate::protocol::{ClientMessage, ServerMessage, WireSnapshot, PROTOCOL_VERSION};
use crate::session::{Session, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOptions {
    /// Upper bound on the snapshot rate sent to clients, Hz.
    pub snapshot_hz: f64,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { snapshot_hz: 20.0, time_scale: 1.0 }
    }
}

enum Control {
    Command(UserCommand),
    Reset,
}

/// Ticks between broadcasts so the rate stays at or below `snapshot_hz`.
pub fn broadcast_every(tick_rate: f64, snapshot_hz: f64) -> u64 {
    ((tick_rate / snapshot_hz).ceil() as u64).max(1)
}

/// Serves sessions on `listener` until the future is dropped.
pub async fn serve(
    listener: TcpListener,
    cfg: SessionConfig,
    arena: Arena,
    calibration: Vec<CalibrationRow>,
    opts: ServeOptions,
) -> Result<()> {
    let session = Session::new(cfg.clone(), arena.clone(), &calibration)?;
    let every = broadcast_every(cfg.tick_rate(), opts.snapshot_hz);
    let hello: Arc<str> = ServerMessage::Hello {
        protocol: PROTOCOL_VERSION,
        tick_rate: cfg.tick_rate(),
        snapshot_hz: cfg.tick_rate() / every as f64,
        arena: arena.clone(),
    }
    .to_text()
    .into();
    let (ctl_tx, ctl_rx) = mpsc::channel();
    let (snap_tx, _) = broadcast::channel::<Arc<str>>(64);

    let tx = snap_tx.clone();
    std::thread::spawn(move || {
        let restart = move || Session::new(cfg.clone(), arena.clone(), &calibration);
        tick_loop(session, restart, ctl_rx, tx, every, opts.time_scale)
    });

    loop {
        let (stream, peer) = listener.accept().await?;
        let (ctl, rx, hello) = (ctl_tx.clone(), snap_tx.subscribe(), hello.clone());
        tokio::spawn(async move {
            if let Err(e) = client(stream, peer, hello, ctl, rx).await {
                log::warn!("client {peer}: {e}");
            }
        });
    }
}

fn tick_loop(
    mut session: Session,
    restart: impl Fn() -> Result<Session>,
    ctl: mpsc::Receiver<Control>,
    out: broadcast::Sender<Arc<str>>,
    every: u64,
    time_scale: f64,
) {
    let period = Duration::from_secs_f64(1.0 / (session.config().tick_rate() * time_scale));
    let mut next = Instant::now();
    loop {
        loop {
            match ctl.try_recv() {
                Ok(Control::Command(c)) => {
                    if let Err(e) = session.submit(c) {
                        log::warn!("rejected command: {e}");
                    }
                }
                Ok(Control::Reset) => match restart() {
                    Ok(s) => session = s,
                    Err(e) => log::error!("reset failed: {e}"),
                },
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        if session.status() == Status::Running {
            match session.step() {
                Ok(snap) => {
                    if snap.tick % every == 0 || snap.status == Status::Collided {
                        let msg = ServerMessage::Snapshot(WireSnapshot::from(&snap)).to_text();
                        // No receivers is fine.
                        let _ = out.send(msg.into());
                    }
                }
                Err(e) => log::error!("tick failed: {e}"),
            }
        }
        next += period;
        let now = Instant::now();
        if next > now {
            std::thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}

async fn client(
    stream: TcpStream,
    peer: SocketAddr,
    hello: Arc<str>,
    ctl: mpsc::Sender<Control>,
    mut snaps: broadcast::Receiver<Arc<str>>,
) -> anyhow::Result<()> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    log::info!("client {peer} connected");
    let (mut tx, mut rx) = ws.split();
    tx.send(Message::text(hello.to_string())).await?;
    loop {
        tokio::select! {
            msg = rx.next() => match msg {
                Some(Ok(Message::Text(text))) => match serde_json::from_str::<ClientMessage>(text.as_str()) {
                    Ok(ClientMessage::Command(w)) => match w.to_user() {
                        Ok(cmd) => ctl.send(Control::Command(cmd))?,
                        Err(message) => tx.send(Message::text(ServerMessage::Error { message }.to_text())).await?,
                    },
                    Ok(ClientMessage::Reset) => ctl.send(Control::Reset)?,
                    Err(e) => {
                        let message = format!("bad message: {e}");
                        tx.send(Message::text(ServerMessage::Error { message }.to_text())).await?;
                    }
                },
                Some(Ok(Message::Close(_))) | None => break,
                Some(Ok(_)) => {}
                Some(Err(e)) => return Err(e.into()),
            },
            snap = snaps.recv() => match snap {
                Ok(text) => tx.send(Message::text(text.to_string())).await?,
                Err(broadcast::error::RecvError::Lagged(n)) => log::debug!("client {peer} skipped {n} snapshots"),
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
    log::info!("client {peer} disconnected");
    Ok(())
}
