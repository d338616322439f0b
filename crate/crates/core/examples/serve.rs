//! Serves the API on a loopback port and makes one request against it.

use std::io::{Read, Write};

use mediator::net::SystemNetwork;
use mediator::service::{self, AppState};
use mediator::{Engine, UserConfig};

#[tokio::main]
async fn main() {
    let listener = service::bind("127.0.0.1:0".parse().unwrap(), None, &SystemNetwork).expect("loopback bind");
    let addr = listener.local_addr().unwrap();
    let state = AppState::new(Engine::new(UserConfig::default()).unwrap(), service::system_clock(), None);
    tokio::spawn(service::serve(listener, state));
    println!("listening on http://{addr}");

    let reply = tokio::task::spawn_blocking(move || {
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        write!(stream, "GET /v1/config HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
        let mut reply = String::new();
        stream.read_to_string(&mut reply).unwrap();
        reply
    })
    .await
    .unwrap();
    println!("{reply}");
}
