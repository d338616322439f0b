//! The single path through which the crate opens sockets.
//!
//! Every outbound connection and listening bind goes through a
//! [`NetworkLayer`], so a [`RecordingNetwork`] can prove which addresses a run
//! touched.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetOpKind {
    Connect,
    Bind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetOp {
    pub kind: NetOpKind,
    pub addr: SocketAddr,
}

impl NetOp {
    pub fn is_loopback(&self) -> bool {
        self.addr.ip().is_loopback()
    }
}

pub trait NetworkLayer: Send + Sync {
    fn connect(&self, addr: SocketAddr, timeout: Duration) -> io::Result<TcpStream>;
    fn bind(&self, addr: SocketAddr) -> io::Result<TcpListener>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemNetwork;

impl NetworkLayer for SystemNetwork {
    fn connect(&self, addr: SocketAddr, timeout: Duration) -> io::Result<TcpStream> {
        TcpStream::connect_timeout(&addr, timeout)
    }

    fn bind(&self, addr: SocketAddr) -> io::Result<TcpListener> {
        TcpListener::bind(addr)
    }
}

/// Wraps another layer and logs every operation before performing it.
pub struct RecordingNetwork {
    inner: Arc<dyn NetworkLayer>,
    ops: Mutex<Vec<NetOp>>,
}

impl RecordingNetwork {
    pub fn new(inner: Arc<dyn NetworkLayer>) -> Self {
        Self { inner, ops: Mutex::new(Vec::new()) }
    }

    pub fn system() -> Self {
        Self::new(Arc::new(SystemNetwork))
    }

    pub fn ops(&self) -> Vec<NetOp> {
        self.ops.lock().expect("net log poisoned").clone()
    }

    pub fn non_loopback_ops(&self) -> Vec<NetOp> {
        self.ops().into_iter().filter(|o| !o.is_loopback()).collect()
    }

    fn record(&self, kind: NetOpKind, addr: SocketAddr) {
        self.ops.lock().expect("net log poisoned").push(NetOp { kind, addr });
    }
}

impl NetworkLayer for RecordingNetwork {
    fn connect(&self, addr: SocketAddr, timeout: Duration) -> io::Result<TcpStream> {
        self.record(NetOpKind::Connect, addr);
        self.inner.connect(addr, timeout)
    }

    fn bind(&self, addr: SocketAddr) -> io::Result<TcpListener> {
        self.record(NetOpKind::Bind, addr);
        self.inner.bind(addr)
    }
}

/// Refuses everything. Useful for asserting that nothing tries the network.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineNetwork;

impl NetworkLayer for OfflineNetwork {
    fn connect(&self, addr: SocketAddr, _: Duration) -> io::Result<TcpStream> {
        Err(io::Error::new(io::ErrorKind::PermissionDenied, format!("network disabled: connect {addr}")))
    }

    fn bind(&self, addr: SocketAddr) -> io::Result<TcpListener> {
        Err(io::Error::new(io::ErrorKind::PermissionDenied, format!("network disabled: bind {addr}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_before_delegating() {
        let net = RecordingNetwork::new(Arc::new(OfflineNetwork));
        let addr: SocketAddr = "10.0.0.1:80".parse().unwrap();
        assert!(net.connect(addr, Duration::from_millis(10)).is_err());
        assert!(net.bind("127.0.0.1:0".parse().unwrap()).is_err());
        assert_eq!(net.ops().len(), 2);
        assert_eq!(net.non_loopback_ops(), vec![NetOp { kind: NetOpKind::Connect, addr }]);
    }
}
