//! HTTP and WebSocket front end of the session hub.
//!
//! `POST /api` takes one protocol request and answers with one response.
//! `GET /ws` carries the same requests as text frames; a socket is subscribed
//! to every session it touches and receives a `turn` push after each turn.

use std::collections::HashSet;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header::CONTENT_TYPE;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::sync::mpsc;

use wrts_core::session::{handle_request, push_message, SessionHub};

pub fn router(hub: Arc<SessionHub>) -> Router {
    Router::new()
        .route("/api", post(api))
        .route("/ws", get(ws))
        .route("/sessions", get(sessions))
        .route("/health", get(|| async { "ok" }))
        .with_state(hub)
}

async fn api(State(hub): State<Arc<SessionHub>>, body: String) -> Response {
    let reply = tokio::task::spawn_blocking(move || handle_request(&hub, &body))
        .await
        .expect("request handler panicked");
    ([(CONTENT_TYPE, "application/json")], reply).into_response()
}

async fn sessions(State(hub): State<Arc<SessionHub>>) -> Json<Vec<String>> {
    Json(hub.ids())
}

async fn ws(State(hub): State<Arc<SessionHub>>, upgrade: WebSocketUpgrade) -> Response {
    upgrade.on_upgrade(move |socket| ws_loop(socket, hub))
}

/// Session id named by a request or its response.
fn session_of(request: &str, reply: &str) -> Option<String> {
    [reply, request].into_iter().find_map(|text| {
        serde_json::from_str::<Value>(text)
            .ok()?
            .get("session")?
            .as_str()
            .map(str::to_string)
    })
}

async fn ws_loop(socket: WebSocket, hub: Arc<SessionHub>) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    let mut subscribed = HashSet::new();
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let h = Arc::clone(&hub);
        let request = text.clone();
        let reply = tokio::task::spawn_blocking(move || handle_request(&h, &request))
            .await
            .expect("request handler panicked");
        if let Some(id) = session_of(&text, &reply) {
            if !subscribed.contains(&id) {
                if let Ok(handle) = hub.get(&id) {
                    let push_tx = tx.clone();
                    handle.lock().subscribe(Box::new(move |push| {
                        let _ = push_tx.send(push_message(push));
                    }));
                    subscribed.insert(id);
                }
            }
        }
        if tx.send(reply).is_err() {
            break;
        }
    }
    writer.abort();
}

/// Serve until the process ends.
pub fn serve_blocking(hub: Arc<SessionHub>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = std::net::TcpListener::bind(addr)?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    run(hub, listener)
}

/// Bind and serve on a background thread; returns the bound address.
pub fn spawn(
    hub: Arc<SessionHub>,
    addr: SocketAddr,
) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = std::net::TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let thread = std::thread::spawn(move || run(hub, listener));
    Ok((local, thread))
}

fn run(hub: Arc<SessionHub>, listener: std::net::TcpListener) -> std::io::Result<()> {
    listener.set_nonblocking(true)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        axum::serve(listener, router(hub)).await
    })
}
