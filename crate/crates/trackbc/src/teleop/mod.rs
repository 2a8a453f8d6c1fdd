//! Live teleoperation over a websocket.
//!
//! The service takes one client. A reader task parses incoming frames: the
//! newest action goes into a single cell, and save/reset/disconnect go
//! through a control channel. The tick loop owns the simulator. Each tick it
//! takes whatever is in the cell (idle if nothing arrived) and steps once.
//! Outgoing frames go through a bounded queue to a writer task; when a slow
//! client lets it fill, state frames are dropped rather than waiting.

mod protocol;
mod session;

pub use protocol::{parse_client, ClientMessage, ServerMessage, StateFrame};
pub use session::{sanitize_name, TeleopSession};

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;
use trackbc_core::demo::ControllerKind;
use trackbc_core::domain::ActionTriple;
use trackbc_core::sim::ScenarioSpec;

use crate::{Error, Result};

/// Name used for the recording written when the client goes away.
pub const PARTIAL_NAME: &str = "teleop-partial";

const OUTBOX: usize = 64;

#[derive(Debug, Clone)]
pub struct TeleopConfig {
    pub spec: ScenarioSpec,
    pub kind: ControllerKind,
    pub out_dir: PathBuf,
    /// Control period; 100 ms in normal use.
    pub tick: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionSummary {
    pub ticks: u64,
    pub saved: Vec<PathBuf>,
    /// The incomplete recording written on disconnect, if anything was recorded.
    pub partial: Option<PathBuf>,
    pub dropped_frames: u64,
}

enum Control {
    Save(String),
    Reset,
    Invalid(String),
    Gone,
}

/// Accept one client on `listener` and run its session until it disconnects.
pub async fn serve(listener: TcpListener, cfg: TeleopConfig) -> Result<SessionSummary> {
    let mut session = TeleopSession::new(cfg.spec.clone(), cfg.kind, &cfg.out_dir)?;
    let (tcp, _peer): (_, SocketAddr) = listener
        .accept()
        .await
        .map_err(|e| Error::io("teleop socket", e))?;
    let ws = tokio_tungstenite::accept_async(tcp)
        .await
        .map_err(|e| Error::io("teleop socket", std::io::Error::other(e)))?;
    let (mut sink, mut stream) = ws.split();

    let latest: Arc<Mutex<Option<ActionTriple>>> = Arc::new(Mutex::new(None));
    let (ctrl_tx, mut ctrl_rx) = mpsc::unbounded_channel();
    let (out_tx, mut out_rx) = mpsc::channel::<ServerMessage>(OUTBOX);

    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            if sink.send(Message::text(msg.to_text())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let cell = Arc::clone(&latest);
    let reader = tokio::spawn(async move {
        while let Some(frame) = stream.next().await {
            let text = match frame {
                Ok(Message::Text(t)) => t,
                Ok(Message::Close(_)) | Err(_) => break,
                Ok(_) => continue,
            };
            match parse_client(&text) {
                Ok(ClientMessage::Action { u_a, u_s, u_m }) => {
                    match ActionTriple::new(u_a, u_s, u_m) {
                        Ok(a) => *cell.lock().expect("action cell") = Some(a),
                        Err(e) => {
                            let _ = ctrl_tx.send(Control::Invalid(e.to_string()));
                        }
                    }
                }
                Ok(ClientMessage::Save { name }) => {
                    let _ = ctrl_tx.send(Control::Save(name));
                }
                Ok(ClientMessage::Reset) => {
                    let _ = ctrl_tx.send(Control::Reset);
                }
                Err(e) => {
                    let _ = ctrl_tx.send(Control::Invalid(e));
                }
            }
        }
        let _ = ctrl_tx.send(Control::Gone);
    });

    let mut summary = SessionSummary::default();
    // A closed outbox only means the writer gave up; the reader decides when
    // the session ends.
    let send = |msg: ServerMessage, summary: &mut SessionSummary| {
        if out_tx.try_send(msg).is_err() {
            summary.dropped_frames += 1;
        }
    };
    send(ServerMessage::Scenario(cfg.spec.clone()), &mut summary);

    let mut interval = tokio::time::interval(cfg.tick);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    'session: loop {
        interval.tick().await;
        while let Ok(c) = ctrl_rx.try_recv() {
            match c {
                Control::Save(name) => match session.save(&name, true) {
                    Ok(p) => {
                        send(
                            ServerMessage::Saved {
                                path: p.display().to_string(),
                            },
                            &mut summary,
                        );
                        summary.saved.push(p);
                    }
                    Err(e) => send(
                        ServerMessage::Error {
                            message: e.to_string(),
                        },
                        &mut summary,
                    ),
                },
                Control::Reset => {
                    session.reset()?;
                    latest.lock().expect("action cell").take();
                }
                Control::Invalid(message) => send(ServerMessage::Error { message }, &mut summary),
                Control::Gone => break 'session,
            }
        }
        let action = latest.lock().expect("action cell").take();
        let frame = session.tick(action);
        summary.ticks += 1;
        send(ServerMessage::State(frame), &mut summary);
    }

    drop(out_tx);
    let _ = writer.await;
    let _ = reader.await;
    if !session.is_empty() {
        summary.partial = Some(session.save(PARTIAL_NAME, false)?);
    }
    Ok(summary)
}
