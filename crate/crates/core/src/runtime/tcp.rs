//! Stream-socket transport: one TCP connection per control link, carrying
//! the line-framed wire format.

use std::collections::BTreeMap;
use std::io::{self, ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use crate::bt::{halt, tick, ActionRegistry, BtError, RemoteTicker, Status, TickContext, TreeNode};
use crate::worldmodel::WorldState;

use super::proxy::AsyncProxy;
use super::wire::{decode, encode, Body, Message};
use super::RuntimeError;

/// Environment variable holding the address child hosts listen on.
pub const LISTEN_ENV: &str = "BTWEAVE_LISTEN";

/// Listen address from [`LISTEN_ENV`], defaulting to an ephemeral
/// loopback port.
pub fn listen_addr() -> String {
    std::env::var(LISTEN_ENV).unwrap_or_else(|_| "127.0.0.1:0".to_string())
}

pub struct TcpTransport {
    stream: TcpStream,
    buf: Vec<u8>,
    seq: u64,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Self::from_stream(TcpStream::connect(addr)?)
    }

    pub fn from_stream(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(TcpTransport {
            stream,
            buf: Vec::new(),
            seq: 0,
        })
    }

    /// Sends `body` with the next sequence number.
    pub fn send(&mut self, node: &str, body: Body) -> io::Result<()> {
        self.seq += 1;
        let line = encode(&Message::new(self.seq, node, body));
        self.stream.write_all(line.as_bytes())
    }

    fn take_lines(&mut self) -> Result<Vec<Message>, RuntimeError> {
        let mut out = Vec::new();
        while let Some(end) = self.buf.iter().position(|&b| b == b'\n') {
            let line: Vec<u8> = self.buf.drain(..=end).collect();
            let text = String::from_utf8(line).map_err(|e| RuntimeError::Io(e.to_string()))?;
            out.push(decode(&text)?);
        }
        Ok(out)
    }

    /// Returns every complete message that has arrived, without waiting.
    pub fn poll(&mut self) -> Result<Vec<Message>, RuntimeError> {
        self.stream.set_nonblocking(true)?;
        let mut chunk = [0u8; 4096];
        let result = loop {
            match self.stream.read(&mut chunk) {
                Ok(0) => break Err(RuntimeError::Io("connection closed".into())),
                Ok(n) => self.buf.extend_from_slice(&chunk[..n]),
                Err(e) if e.kind() == ErrorKind::WouldBlock => break Ok(()),
                Err(e) => break Err(e.into()),
            }
        };
        self.stream.set_nonblocking(false)?;
        let lines = self.take_lines()?;
        match result {
            Err(e) if lines.is_empty() => Err(e),
            _ => Ok(lines),
        }
    }

    /// Waits up to `timeout` for the next message; `None` on a clean close.
    pub fn recv(&mut self, timeout: Duration) -> Result<Option<Message>, RuntimeError> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(m) = self.take_lines()?.into_iter().next() {
                return Ok(Some(m));
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(RuntimeError::Io("timed out".into()));
            }
            self.stream.set_read_timeout(Some(left))?;
            let mut chunk = [0u8; 4096];
            match self.stream.read(&mut chunk) {
                Ok(0) => return Ok(None),
                Ok(n) => self.buf.extend_from_slice(&chunk[..n]),
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
}

/// Runs a child host on one accepted connection: every TICK ticks the
/// tree once and every HALT halts it, each answered with a STATUS. Returns
/// the final tree and world when the parent hangs up.
pub fn serve_child(
    listener: &TcpListener,
    mut tree: TreeNode,
    mut world: WorldState,
    mut actions: ActionRegistry,
    idle_timeout: Duration,
) -> Result<(TreeNode, WorldState), RuntimeError> {
    let (stream, _) = listener.accept()?;
    let mut link = TcpTransport::from_stream(stream)?;
    while let Some(m) = link.recv(idle_timeout)? {
        let mut ctx = TickContext::new(&mut actions);
        let status = match m.body {
            Body::Tick => tick(&mut tree, &mut world, &mut ctx)?,
            Body::Halt => {
                halt(&mut tree, &mut ctx)?;
                Status::Failure
            }
            _ => continue,
        };
        link.send(&m.node, Body::Status(status))?;
    }
    Ok((tree, world))
}

/// Parent side of TCP control links, one connection per remote leaf.
pub struct TcpRemote {
    links: BTreeMap<String, (TcpTransport, AsyncProxy)>,
    /// Current step, advanced by the caller once per tick.
    pub now: u64,
    pub failed: Vec<String>,
}

impl TcpRemote {
    pub fn new() -> Self {
        TcpRemote {
            links: BTreeMap::new(),
            now: 0,
            failed: Vec::new(),
        }
    }

    pub fn add_link(&mut self, node: impl Into<String>, link: TcpTransport, timeout: u64) {
        self.links.insert(node.into(), (link, AsyncProxy::new(timeout)));
    }

    fn link(&mut self, node: &str) -> Result<&mut (TcpTransport, AsyncProxy), BtError> {
        self.links
            .get_mut(node)
            .ok_or_else(|| BtError::UnboundRemote(node.to_string()))
    }
}

impl Default for TcpRemote {
    fn default() -> Self {
        TcpRemote::new()
    }
}

impl RemoteTicker for TcpRemote {
    fn tick_remote(&mut self, node_id: &str, _host: &str, _tree: &str) -> Result<Status, BtError> {
        let now = self.now;
        let (link, proxy) = self.link(node_id)?;
        let mut sends = Vec::new();
        // A dead connection is left to the proxy's timeout.
        for m in link.poll().unwrap_or_default() {
            if let Body::Status(s) = m.body {
                sends.extend(proxy.on_status(s, now));
            }
        }
        let was_failed = proxy.has_failed();
        let (status, more) = proxy.on_tick(now);
        let newly_failed = !was_failed && proxy.has_failed();
        sends.extend(more);
        for b in sends {
            link.send(node_id, b).map_err(|e| BtError::Remote(e.to_string()))?;
        }
        if newly_failed {
            self.failed.push(node_id.to_string());
        }
        Ok(status)
    }

    fn halt_remote(&mut self, node_id: &str, _host: &str, _tree: &str) -> Result<(), BtError> {
        let now = self.now;
        let (link, proxy) = self.link(node_id)?;
        for b in proxy.on_halt(now) {
            link.send(node_id, b).map_err(|e| BtError::Remote(e.to_string()))?;
        }
        Ok(())
    }
}
