//! TCP state-streaming service.
//!
//! The simulation thread owns the [`Executor`]. Client reader threads feed
//! commands into one queue and the simulation thread pushes replies and
//! snapshots into another, which a dispatcher thread writes to the sockets.

use std::collections::BTreeMap;
use std::io::{self, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::executor::Executor;
use super::protocol::{encode, read_frame, snapshot, Envelope, GridStreamer, Message, ProtocolError};
use super::scenario::{Action, Mode};
use crate::geometry::Twist2D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOptions {
    pub snapshot_hz: u32,
    /// Pace the loop against the wall clock; otherwise run as fast as possible.
    pub realtime: bool,
    /// Every n-th snapshot carries the full map.
    pub keyframe_every: u64,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            snapshot_hz: 20,
            realtime: true,
            keyframe_every: 100,
        }
    }
}

type ClientId = u64;

struct Inbound {
    client: ClientId,
    id: u64,
    action: Action,
}

enum Outbound {
    Register(ClientId, TcpStream),
    Disconnect(ClientId),
    Reply(ClientId, Vec<u8>),
    Broadcast(Arc<Vec<u8>>),
    /// Closes every connection and ends the dispatcher.
    Close,
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
    sim: Option<JoinHandle<Executor>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops all threads and hands back the executor.
    pub fn shutdown(mut self) -> Executor {
        self.stop.store(true, Ordering::SeqCst);
        let exec = self
            .sim
            .take()
            .expect("sim thread")
            .join()
            .expect("sim thread panicked");
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        exec
    }

    /// Blocks until the service stops.
    pub fn wait(mut self) {
        if let Some(sim) = self.sim.take() {
            let _ = sim.join();
        }
    }
}

/// Starts the service on `addr` in background threads.
pub fn spawn<A: ToSocketAddrs>(exec: Executor, addr: A, opts: ServeOptions) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let (in_tx, in_rx) = mpsc::channel::<Inbound>();
    let (out_tx, out_rx) = mpsc::channel::<Outbound>();

    let acceptor = {
        let stop = stop.clone();
        let out_tx = out_tx.clone();
        thread::spawn(move || accept_loop(listener, stop, in_tx, out_tx))
    };
    let dispatcher = thread::spawn(move || dispatch_loop(out_rx));
    let sim = {
        let stop = stop.clone();
        thread::spawn(move || sim_loop(exec, opts, stop, in_rx, out_tx))
    };
    Ok(ServerHandle {
        addr: local,
        stop,
        threads: vec![acceptor, dispatcher],
        sim: Some(sim),
    })
}

/// Serves `exec` on `port` until the process is killed.
pub fn serve(exec: Executor, port: u16) -> io::Result<()> {
    let handle = spawn(exec, ("0.0.0.0", port), ServeOptions::default())?;
    eprintln!("listening on {}", handle.local_addr());
    handle.wait();
    Ok(())
}

fn accept_loop(listener: TcpListener, stop: Arc<AtomicBool>, in_tx: Sender<Inbound>, out_tx: Sender<Outbound>) {
    let mut next_id: ClientId = 0;
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let _ = stream.set_nonblocking(false);
                let _ = stream.set_nodelay(true);
                let Ok(writer) = stream.try_clone() else { continue };
                next_id += 1;
                let id = next_id;
                if out_tx.send(Outbound::Register(id, writer)).is_err() {
                    return;
                }
                let in_tx = in_tx.clone();
                let out_tx = out_tx.clone();
                thread::spawn(move || read_loop(id, stream, in_tx, out_tx));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => eprintln!("accept failed: {e}"),
        }
    }
}

fn error_frame(id: Option<u64>, message: String) -> Vec<u8> {
    encode(&Envelope::new(Message::Error { id, message }))
}

fn read_loop(client: ClientId, stream: TcpStream, in_tx: Sender<Inbound>, out_tx: Sender<Outbound>) {
    let mut reader = BufReader::new(stream);
    loop {
        match read_frame(&mut reader) {
            Ok(env) => match env.message {
                Message::Command { id, command } => {
                    if in_tx
                        .send(Inbound {
                            client,
                            id,
                            action: command,
                        })
                        .is_err()
                    {
                        break;
                    }
                }
                other => {
                    let msg = format!("clients may only send commands, got {}", kind(&other));
                    let _ = out_tx.send(Outbound::Reply(client, error_frame(None, msg)));
                }
            },
            Err(ProtocolError::Io(_)) => break,
            Err(e @ ProtocolError::TooLarge(_)) => {
                // the stream is out of sync after an unread body
                let _ = out_tx.send(Outbound::Reply(client, error_frame(None, e.to_string())));
                break;
            }
            Err(e) => {
                let _ = out_tx.send(Outbound::Reply(client, error_frame(None, e.to_string())));
            }
        }
    }
    let _ = out_tx.send(Outbound::Disconnect(client));
}

fn kind(m: &Message) -> &'static str {
    match m {
        Message::Snapshot(_) => "snapshot",
        Message::Command { .. } => "command",
        Message::Ack { .. } => "ack",
        Message::Error { .. } => "error",
    }
}

fn dispatch_loop(out_rx: Receiver<Outbound>) {
    let mut clients: BTreeMap<ClientId, TcpStream> = BTreeMap::new();
    let send = |clients: &mut BTreeMap<ClientId, TcpStream>, id: ClientId, bytes: &[u8]| {
        if let Some(s) = clients.get_mut(&id) {
            if let Err(e) = s.write_all(bytes) {
                eprintln!("client {id}: {e}; dropping");
                let _ = s.shutdown(Shutdown::Both);
                clients.remove(&id);
            }
        }
    };
    for msg in out_rx {
        match msg {
            Outbound::Register(id, s) => {
                clients.insert(id, s);
            }
            Outbound::Disconnect(id) => {
                clients.remove(&id);
            }
            Outbound::Reply(id, bytes) => send(&mut clients, id, &bytes),
            Outbound::Broadcast(bytes) => {
                let ids: Vec<ClientId> = clients.keys().copied().collect();
                for id in ids {
                    send(&mut clients, id, &bytes);
                }
            }
            Outbound::Close => break,
        }
    }
    for s in clients.values() {
        let _ = s.shutdown(Shutdown::Both);
    }
}

fn sim_loop(
    mut exec: Executor,
    opts: ServeOptions,
    stop: Arc<AtomicBool>,
    in_rx: Receiver<Inbound>,
    out_tx: Sender<Outbound>,
) -> Executor {
    let dt = exec.control_dt();
    let per_snapshot = (f64::from(exec.scenario().control_rate_hz) / f64::from(opts.snapshot_hz.max(1)))
        .round()
        .max(1.0) as u64;
    let mut grid = GridStreamer::default();
    let mut keyframe = true;
    let mut seq: u64 = 0;
    let mut loop_count: u64 = 0;
    let mut command = Twist2D::ZERO;
    let mut deadline = Instant::now();

    while !stop.load(Ordering::SeqCst) {
        while let Ok(cmd) = in_rx.try_recv() {
            let reply = match &cmd.action {
                Action::RequestKeyframe => {
                    keyframe = true;
                    Ok(())
                }
                // a goal from the console implies navigation; pushes still win
                Action::SetGoal { .. } if exec.mode() == Mode::Guided => exec
                    .apply(&cmd.action)
                    .and_then(|_| exec.apply(&Action::SetMode { mode: Mode::Hybrid })),
                a => exec.apply(a),
            };
            let msg = match reply {
                Ok(()) => Message::Ack {
                    id: cmd.id,
                    command: cmd.action.name().to_string(),
                },
                Err(e) => Message::Error {
                    id: Some(cmd.id),
                    message: e.to_string(),
                },
            };
            let _ = out_tx.send(Outbound::Reply(cmd.client, encode(&Envelope::new(msg))));
        }

        if let Some(rec) = exec.step() {
            command = rec.command;
        }
        loop_count += 1;
        if loop_count.is_multiple_of(per_snapshot) {
            let key = keyframe || seq.is_multiple_of(opts.keyframe_every.max(1));
            keyframe = false;
            let update = grid.update(exec.map(), key);
            let snap = snapshot(&exec, seq, command, update);
            seq += 1;
            let bytes = Arc::new(encode(&Envelope::new(Message::Snapshot(Box::new(snap)))));
            if out_tx.send(Outbound::Broadcast(bytes)).is_err() {
                break;
            }
        }

        if opts.realtime {
            deadline += Duration::from_secs_f64(dt);
            let now = Instant::now();
            if deadline > now {
                thread::sleep(deadline - now);
            } else if now - deadline > Duration::from_secs(1) {
                // fell far behind; do not try to catch up in a burst
                deadline = now;
            }
        }
    }
    // closing the sockets also unblocks the reader threads
    let _ = out_tx.send(Outbound::Close);
    exec
}

/// Blocking client for the service.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    next_id: u64,
}

impl Client {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            writer: stream.try_clone()?,
            reader: BufReader::new(stream),
            next_id: 0,
        })
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        self.writer.set_read_timeout(t)
    }

    /// Sends a command and returns its id.
    pub fn send(&mut self, action: Action) -> io::Result<u64> {
        self.next_id += 1;
        let env = Envelope::new(Message::Command {
            id: self.next_id,
            command: action,
        });
        self.writer.write_all(&encode(&env))?;
        Ok(self.next_id)
    }

    pub fn send_raw(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.writer.write_all(bytes)
    }

    pub fn recv(&mut self) -> Result<Envelope, ProtocolError> {
        read_frame(&mut self.reader)
    }

    /// Reads until a reply (ack or error) to `id` arrives.
    pub fn wait_reply(&mut self, id: u64) -> Result<Message, ProtocolError> {
        loop {
            let msg = self.recv()?.message;
            match &msg {
                Message::Ack { id: got, .. } if *got == id => return Ok(msg),
                Message::Error { id: Some(got), .. } if *got == id => return Ok(msg),
                _ => {}
            }
        }
    }
}
