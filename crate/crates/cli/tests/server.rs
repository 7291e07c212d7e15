use std::sync::Arc;
use std::time::{Duration, Instant};

use coinsert::collab::wire::AssistantKind;
use coinsert::collab::{ClientMessage, ServerMessage};
use coinsert::Config;
use coinsert_cli::server::{serve_on, AppState};
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn start() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = Arc::new(AppState::new(Config::default(), None).unwrap());
    tokio::spawn(serve_on(listener, state));
    format!("ws://{addr}/ws")
}

async fn send(ws: &mut Ws, m: ClientMessage) {
    ws.send(Message::Text(m.encode().into())).await.unwrap();
}

async fn recv(ws: &mut Ws) -> ServerMessage {
    loop {
        let m =
            tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("server replies").unwrap().unwrap();
        if let Message::Text(t) = m {
            return ServerMessage::decode(t.as_str()).unwrap();
        }
    }
}

#[tokio::test]
async fn streams_at_wall_clock_rate_with_consecutive_ticks() {
    let url = start().await;
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    send(&mut ws, ClientMessage::Create { assistant: AssistantKind::Admittance, seed: Some(4) }).await;
    let ServerMessage::SessionInfo(info) = recv(&mut ws).await else { panic!("expected session info") };
    assert_eq!(info.seed, 4);
    assert_eq!((info.f_max, info.t_max), (80.0, 8.0));

    send(&mut ws, ClientMessage::Ready).await;
    let started = Instant::now();
    let mut last = 0;
    for _ in 0..30 {
        let ServerMessage::State(s) = recv(&mut ws).await else { panic!("expected state") };
        assert_eq!(s.tick, last + 1);
        last = s.tick;
        assert!(s.time <= started.elapsed().as_secs_f64() + 0.05);
    }
    let took = started.elapsed().as_secs_f64();
    // 30 messages at 30 Hz: about one second, first tick immediate
    assert!(took > 0.8 && took < 2.0, "{took}");
}

#[tokio::test]
async fn errors_are_reported_not_fatal() {
    let url = start().await;
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    send(&mut ws, ClientMessage::Ready).await;
    assert!(matches!(recv(&mut ws).await, ServerMessage::Error { .. }));
    send(&mut ws, ClientMessage::Create { assistant: AssistantKind::Policy, seed: None }).await;
    let ServerMessage::Error { message } = recv(&mut ws).await else { panic!("expected error") };
    assert!(message.contains("checkpoint"), "{message}");
    ws.send(Message::Text(r#"{"v":9,"type":"ready"}"#.into())).await.unwrap();
    assert!(matches!(recv(&mut ws).await, ServerMessage::Error { .. }));
    send(&mut ws, ClientMessage::Create { assistant: AssistantKind::Admittance, seed: Some(1) }).await;
    assert!(matches!(recv(&mut ws).await, ServerMessage::SessionInfo(_)));
}

#[tokio::test]
async fn sessions_resume_after_disconnect() {
    let url = start().await;
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    send(&mut ws, ClientMessage::Create { assistant: AssistantKind::Admittance, seed: Some(2) }).await;
    let ServerMessage::SessionInfo(info) = recv(&mut ws).await else { panic!() };
    send(&mut ws, ClientMessage::SetCursor { x: 0.0, z: 0.0, theta: 0.0 }).await;
    send(&mut ws, ClientMessage::Ready).await;
    let mut last = None;
    for _ in 0..5 {
        if let ServerMessage::State(s) = recv(&mut ws).await {
            last = Some(s);
        }
    }
    let last = last.unwrap();
    ws.close(None).await.unwrap();
    drop(ws);
    tokio::time::sleep(Duration::from_millis(100)).await;

    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    send(&mut ws, ClientMessage::Resume { session: info.session }).await;
    let ServerMessage::SessionInfo(again) = recv(&mut ws).await else { panic!() };
    assert_eq!(again.session, info.session);
    send(&mut ws, ClientMessage::Ready).await;
    let ServerMessage::State(s) = recv(&mut ws).await else { panic!() };
    assert!(s.tick > last.tick);
    assert!(s.target.is_some());

    // a second create gets a different id
    send(&mut ws, ClientMessage::Create { assistant: AssistantKind::Admittance, seed: Some(2) }).await;
    loop {
        if let ServerMessage::SessionInfo(other) = recv(&mut ws).await {
            assert_ne!(other.session, info.session);
            break;
        }
    }
}
