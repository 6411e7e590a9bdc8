//! Deterministic toy TCP and DCCP endpoints.
//!
//! Both protocols run strictly stop-and-wait: at most one reliable packet
//! is outstanding per side, which lets the engine own retransmission. The
//! workload is a handshake, five data packets each way, and a clean close.

use crate::simnet::packet::{dccp_types, tcp_flags, Packet, Protocol};

pub const DATA_PACKETS: usize = 5;
pub const PAYLOAD_LEN: usize = 8;
const WINDOW: u64 = 4096;

const TCP_CLIENT_PORT: u64 = 40000;
const TCP_SERVER_PORT: u64 = 80;
const TCP_CLIENT_ISN: u64 = 1000;
const TCP_SERVER_ISN: u64 = 2000;

const DCCP_CLIENT_PORT: u64 = 40000;
const DCCP_SERVER_PORT: u64 = 33;
const DCCP_CLIENT_ISN: u64 = 100;
const DCCP_SERVER_ISN: u64 = 200;
const DCCP_SERVICE_CODE: u32 = 42;

/// A packet queued for sending; reliable packets are retransmitted by the
/// engine until the endpoint reports satisfaction.
#[derive(Debug, Clone)]
pub struct OutPacket {
    pub packet: Packet,
    pub reliable: bool,
}

/// What happened inside an endpoint when a packet arrived.
#[derive(Debug, Clone, Default)]
pub struct Reaction {
    pub sends: Vec<OutPacket>,
    /// The state machine advanced (stall detection resets on this).
    pub progressed: bool,
    /// The outstanding reliable packet was answered.
    pub satisfied: bool,
}

pub trait Endpoint {
    /// Called once at simulation start; only initiators send here.
    fn start(&mut self) -> Vec<OutPacket>;
    fn on_packet(&mut self, packet: &Packet) -> Reaction;
    fn complete(&self) -> bool;
    fn aborted(&self) -> bool;
}

pub fn make_endpoints(protocol: Protocol) -> (Box<dyn Endpoint>, Box<dyn Endpoint>) {
    match protocol {
        Protocol::ToyTcp => (
            Box::new(TcpClient::new()),
            Box::new(TcpServer::new()),
        ),
        Protocol::ToyDccp => (
            Box::new(DccpClient::new()),
            Box::new(DccpServer::new()),
        ),
    }
}

fn make_tcp(src: u64, dst: u64, seq: u64, ack: u64, flags: u64, payload: &[u8]) -> Packet {
    let proto = Protocol::ToyTcp;
    let mut p = Packet::new(proto, payload.len());
    p.set(proto, "Source Port", src);
    p.set(proto, "Destination Port", dst);
    p.set(proto, "Sequence Number", seq);
    p.set(proto, "Acknowledgment Number", ack);
    p.set(proto, "Data Offset", 5);
    p.set(proto, "Control Bits", flags);
    p.set(proto, "Window", WINDOW);
    let header = proto.header_bytes();
    p.bytes[header..].copy_from_slice(payload);
    p.seal(proto);
    p
}

fn tcp_payload(tag: &[u8; 4], index: usize) -> [u8; PAYLOAD_LEN] {
    let mut buf = [0u8; PAYLOAD_LEN];
    buf[..4].copy_from_slice(tag);
    buf[4..].copy_from_slice(&(index as u32).to_be_bytes());
    buf
}

/// Basic receive validation shared by both toy TCP endpoints.
fn tcp_accepts(p: &Packet, my_port: u64) -> bool {
    let proto = Protocol::ToyTcp;
    p.checksum_ok(proto)
        && p.get(proto, "Destination Port") == my_port
        && p.get(proto, "Data Offset") == 5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TcpClientState {
    SynSent,
    Established,
    FinWait,
    Closed,
}

pub struct TcpClient {
    state: TcpClientState,
    snd_next: u64,
    rcv_next: u64,
    peer_window: u64,
    data_sent: usize,
    data_acked: usize,
    data_received: usize,
    /// Data send deferred by a closed peer window.
    send_blocked: bool,
    aborted: bool,
}

impl TcpClient {
    pub fn new() -> TcpClient {
        TcpClient {
            state: TcpClientState::SynSent,
            snd_next: TCP_CLIENT_ISN + 1,
            rcv_next: 0,
            peer_window: WINDOW,
            data_sent: 0,
            data_acked: 0,
            data_received: 0,
            send_blocked: false,
            aborted: false,
        }
    }

    fn data_packet(&mut self) -> Option<OutPacket> {
        if self.data_sent >= DATA_PACKETS {
            return None;
        }
        if self.peer_window < PAYLOAD_LEN as u64 {
            self.send_blocked = true;
            return None;
        }
        self.send_blocked = false;
        let payload = tcp_payload(b"CDAT", self.data_sent);
        let p = make_tcp(
            TCP_CLIENT_PORT,
            TCP_SERVER_PORT,
            self.snd_next,
            self.rcv_next,
            tcp_flags::ACK | tcp_flags::PSH,
            &payload,
        );
        self.snd_next += PAYLOAD_LEN as u64;
        self.data_sent += 1;
        Some(OutPacket {
            packet: p,
            reliable: true,
        })
    }

    fn fin_packet(&mut self) -> OutPacket {
        let p = make_tcp(
            TCP_CLIENT_PORT,
            TCP_SERVER_PORT,
            self.snd_next,
            self.rcv_next,
            tcp_flags::FIN | tcp_flags::ACK,
            &[],
        );
        self.snd_next += 1;
        self.state = TcpClientState::FinWait;
        OutPacket {
            packet: p,
            reliable: true,
        }
    }

    fn ack_packet(&self) -> OutPacket {
        OutPacket {
            packet: make_tcp(
                TCP_CLIENT_PORT,
                TCP_SERVER_PORT,
                self.snd_next,
                self.rcv_next,
                tcp_flags::ACK,
                &[],
            ),
            reliable: false,
        }
    }
}

impl Endpoint for TcpClient {
    fn start(&mut self) -> Vec<OutPacket> {
        vec![OutPacket {
            packet: make_tcp(
                TCP_CLIENT_PORT,
                TCP_SERVER_PORT,
                TCP_CLIENT_ISN,
                0,
                tcp_flags::SYN,
                &[],
            ),
            reliable: true,
        }]
    }

    fn on_packet(&mut self, p: &Packet) -> Reaction {
        let proto = Protocol::ToyTcp;
        let mut r = Reaction::default();
        if self.aborted || !tcp_accepts(p, TCP_CLIENT_PORT) {
            return r;
        }
        let flags = p.get(proto, "Control Bits");
        if flags & tcp_flags::RST != 0 {
            self.aborted = true;
            r.progressed = true;
            return r;
        }
        self.peer_window = p.get(proto, "Window");
        let seq = p.get(proto, "Sequence Number");
        let ack = p.get(proto, "Acknowledgment Number");
        let payload = p.payload(proto);

        match self.state {
            TcpClientState::SynSent => {
                if flags & tcp_flags::SYN != 0
                    && flags & tcp_flags::ACK != 0
                    && ack == TCP_CLIENT_ISN + 1
                {
                    self.rcv_next = seq + 1;
                    self.state = TcpClientState::Established;
                    r.satisfied = true;
                    r.progressed = true;
                    r.sends.push(self.ack_packet());
                    if let Some(data) = self.data_packet() {
                        r.sends.push(data);
                    }
                }
            }
            TcpClientState::Established => {
                if flags & tcp_flags::ACK != 0 && ack == self.snd_next && self.data_acked < self.data_sent
                {
                    // Cumulative ack covering the outstanding data packet.
                    self.data_acked = self.data_sent;
                    r.satisfied = true;
                    r.progressed = true;
                    if let Some(data) = self.data_packet() {
                        r.sends.push(data);
                    }
                }
                if !payload.is_empty() {
                    if seq == self.rcv_next {
                        self.rcv_next += payload.len() as u64;
                        self.data_received += 1;
                        r.progressed = true;
                    }
                    // In-order or duplicate data both get an ack.
                    if self.data_received >= DATA_PACKETS
                        && self.data_acked >= DATA_PACKETS
                        && seq < self.rcv_next
                    {
                        let fin = self.fin_packet();
                        r.sends.push(fin);
                    } else {
                        r.sends.push(self.ack_packet());
                    }
                } else if self.send_blocked && self.peer_window >= PAYLOAD_LEN as u64 {
                    // Window reopened.
                    if let Some(data) = self.data_packet() {
                        r.sends.push(data);
                        r.progressed = true;
                    }
                }
            }
            TcpClientState::FinWait => {
                if flags & tcp_flags::FIN != 0 && flags & tcp_flags::ACK != 0 && ack == self.snd_next
                {
                    self.rcv_next = seq + 1;
                    self.state = TcpClientState::Closed;
                    r.satisfied = true;
                    r.progressed = true;
                    r.sends.push(self.ack_packet());
                }
            }
            TcpClientState::Closed => {
                if flags & tcp_flags::FIN != 0 {
                    // Retransmitted FIN-ACK: re-acknowledge.
                    r.sends.push(self.ack_packet());
                }
            }
        }
        r
    }

    fn complete(&self) -> bool {
        self.state == TcpClientState::Closed
            && self.data_acked == DATA_PACKETS
            && self.data_received == DATA_PACKETS
            && !self.aborted
    }

    fn aborted(&self) -> bool {
        self.aborted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TcpServerState {
    Listen,
    SynRcvd,
    Established,
    LastAck,
    Closed,
}

pub struct TcpServer {
    state: TcpServerState,
    snd_next: u64,
    rcv_next: u64,
    peer_window: u64,
    data_sent: usize,
    data_acked: usize,
    data_received: usize,
    send_blocked: bool,
    fin_received: bool,
    aborted: bool,
}

impl TcpServer {
    pub fn new() -> TcpServer {
        TcpServer {
            state: TcpServerState::Listen,
            snd_next: TCP_SERVER_ISN + 1,
            rcv_next: 0,
            peer_window: WINDOW,
            data_sent: 0,
            data_acked: 0,
            data_received: 0,
            send_blocked: false,
            fin_received: false,
            aborted: false,
        }
    }

    fn ack_packet(&self) -> OutPacket {
        OutPacket {
            packet: make_tcp(
                TCP_SERVER_PORT,
                TCP_CLIENT_PORT,
                self.snd_next,
                self.rcv_next,
                tcp_flags::ACK,
                &[],
            ),
            reliable: false,
        }
    }

    fn data_packet(&mut self) -> Option<OutPacket> {
        if self.data_sent >= DATA_PACKETS || self.data_received < DATA_PACKETS {
            return None;
        }
        if self.peer_window < PAYLOAD_LEN as u64 {
            self.send_blocked = true;
            return None;
        }
        self.send_blocked = false;
        let payload = tcp_payload(b"SDAT", self.data_sent);
        let p = make_tcp(
            TCP_SERVER_PORT,
            TCP_CLIENT_PORT,
            self.snd_next,
            self.rcv_next,
            tcp_flags::ACK | tcp_flags::PSH,
            &payload,
        );
        self.snd_next += PAYLOAD_LEN as u64;
        self.data_sent += 1;
        Some(OutPacket {
            packet: p,
            reliable: true,
        })
    }
}

impl Endpoint for TcpServer {
    fn start(&mut self) -> Vec<OutPacket> {
        Vec::new()
    }

    fn on_packet(&mut self, p: &Packet) -> Reaction {
        let proto = Protocol::ToyTcp;
        let mut r = Reaction::default();
        if self.aborted || !tcp_accepts(p, TCP_SERVER_PORT) {
            return r;
        }
        let flags = p.get(proto, "Control Bits");
        if flags & tcp_flags::RST != 0 {
            self.aborted = true;
            r.progressed = true;
            return r;
        }
        self.peer_window = p.get(proto, "Window");
        let seq = p.get(proto, "Sequence Number");
        let ack = p.get(proto, "Acknowledgment Number");
        let payload = p.payload(proto);

        if self.state == TcpServerState::Listen {
            if flags & tcp_flags::SYN != 0 && flags & tcp_flags::ACK == 0 {
                self.rcv_next = seq + 1;
                self.state = TcpServerState::SynRcvd;
                r.progressed = true;
                r.sends.push(OutPacket {
                    packet: make_tcp(
                        TCP_SERVER_PORT,
                        TCP_CLIENT_PORT,
                        TCP_SERVER_ISN,
                        self.rcv_next,
                        tcp_flags::SYN | tcp_flags::ACK,
                        &[],
                    ),
                    reliable: true,
                });
            }
            return r;
        }

        if self.state == TcpServerState::SynRcvd {
            if flags & tcp_flags::SYN != 0 {
                // Retransmitted SYN; the reliable SYN-ACK will retransmit.
                return r;
            }
            if flags & tcp_flags::ACK != 0 && ack == TCP_SERVER_ISN + 1 {
                self.state = TcpServerState::Established;
                r.satisfied = true;
                r.progressed = true;
                // Fall through: the packet may carry data.
            } else {
                return r;
            }
        }

        if self.state == TcpServerState::Established {
            if flags & tcp_flags::ACK != 0 && ack == self.snd_next && self.data_acked < self.data_sent
            {
                self.data_acked = self.data_sent;
                r.satisfied = true;
                r.progressed = true;
                if let Some(data) = self.data_packet() {
                    r.sends.push(data);
                }
            }
            if !payload.is_empty() {
                if seq == self.rcv_next {
                    self.rcv_next += payload.len() as u64;
                    self.data_received += 1;
                    r.progressed = true;
                }
                r.sends.push(self.ack_packet());
                if let Some(data) = self.data_packet() {
                    r.sends.push(data);
                }
            } else if flags & tcp_flags::FIN != 0 {
                if seq == self.rcv_next && self.data_acked >= DATA_PACKETS {
                    self.rcv_next += 1;
                    self.fin_received = true;
                    self.state = TcpServerState::LastAck;
                    r.progressed = true;
                    r.sends.push(OutPacket {
                        packet: make_tcp(
                            TCP_SERVER_PORT,
                            TCP_CLIENT_PORT,
                            self.snd_next,
                            self.rcv_next,
                            tcp_flags::FIN | tcp_flags::ACK,
                            &[],
                        ),
                        reliable: true,
                    });
                    self.snd_next += 1;
                }
            } else if self.send_blocked && self.peer_window >= PAYLOAD_LEN as u64 {
                if let Some(data) = self.data_packet() {
                    r.sends.push(data);
                    r.progressed = true;
                }
            }
            return r;
        }

        if self.state == TcpServerState::LastAck
            && flags & tcp_flags::ACK != 0
            && ack == self.snd_next
        {
            self.state = TcpServerState::Closed;
            r.satisfied = true;
            r.progressed = true;
        }
        r
    }

    fn complete(&self) -> bool {
        self.state == TcpServerState::Closed
            && self.data_received == DATA_PACKETS
            && self.data_acked == DATA_PACKETS
            && !self.aborted
    }

    fn aborted(&self) -> bool {
        self.aborted
    }
}

fn make_dccp(src: u64, dst: u64, ptype: u64, seq: u64, payload: &[u8]) -> Packet {
    let proto = Protocol::ToyDccp;
    let mut p = Packet::new(proto, payload.len());
    p.set(proto, "Source Port", src);
    p.set(proto, "Dest Port", dst);
    p.set(proto, "Data Offset", 4);
    p.set(proto, "Type", ptype);
    p.set(proto, "X", 1);
    p.set(proto, "Sequence Number", seq);
    let header = proto.header_bytes();
    p.bytes[header..].copy_from_slice(payload);
    p.seal(proto);
    p
}

/// Ack payload: 6-byte acknowledged sequence number plus 2 data bytes.
fn dccp_ack_payload(acked_seq: u64, tag: u8, index: usize) -> [u8; 8] {
    let mut buf = [0u8; 8];
    buf[..6].copy_from_slice(&acked_seq.to_be_bytes()[2..]);
    buf[6] = tag;
    buf[7] = index as u8;
    buf
}

fn dccp_acked_seq(payload: &[u8]) -> Option<u64> {
    if payload.len() < 6 {
        return None;
    }
    let mut buf = [0u8; 8];
    buf[2..].copy_from_slice(&payload[..6]);
    Some(u64::from_be_bytes(buf))
}

fn dccp_accepts(p: &Packet, my_port: u64) -> bool {
    let proto = Protocol::ToyDccp;
    p.checksum_ok(proto)
        && p.get(proto, "Dest Port") == my_port
        && p.get(proto, "Data Offset") == 4
        && p.get(proto, "X") == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DccpClientState {
    ReqSent,
    Established,
    CloseSent,
    Closed,
}

pub struct DccpClient {
    state: DccpClientState,
    snd_next: u64,
    rcv_next: u64,
    data_sent: usize,
    data_acked: usize,
    data_received: usize,
    aborted: bool,
}

impl DccpClient {
    pub fn new() -> DccpClient {
        DccpClient {
            state: DccpClientState::ReqSent,
            snd_next: DCCP_CLIENT_ISN + 1,
            rcv_next: 0,
            data_sent: 0,
            data_acked: 0,
            data_received: 0,
            aborted: false,
        }
    }

    fn next_seq(&mut self) -> u64 {
        let s = self.snd_next;
        self.snd_next += 1;
        s
    }

    fn data_packet(&mut self) -> Option<OutPacket> {
        if self.data_sent >= DATA_PACKETS {
            return None;
        }
        let index = self.data_sent;
        self.data_sent += 1;
        let payload = tcp_payload(b"CDAT", index);
        let seq = self.next_seq();
        Some(OutPacket {
            packet: make_dccp(
                DCCP_CLIENT_PORT,
                DCCP_SERVER_PORT,
                dccp_types::DATA,
                seq,
                &payload,
            ),
            reliable: true,
        })
    }

    fn ack_of(&mut self, acked: u64) -> OutPacket {
        let seq = self.next_seq();
        OutPacket {
            packet: make_dccp(
                DCCP_CLIENT_PORT,
                DCCP_SERVER_PORT,
                dccp_types::ACK,
                seq,
                &dccp_ack_payload(acked, b'A', 0),
            ),
            reliable: false,
        }
    }

    fn close_packet(&mut self) -> OutPacket {
        let seq = self.next_seq();
        self.state = DccpClientState::CloseSent;
        OutPacket {
            packet: make_dccp(DCCP_CLIENT_PORT, DCCP_SERVER_PORT, dccp_types::CLOSE, seq, &[]),
            reliable: true,
        }
    }
}

impl Endpoint for DccpClient {
    fn start(&mut self) -> Vec<OutPacket> {
        vec![OutPacket {
            packet: make_dccp(
                DCCP_CLIENT_PORT,
                DCCP_SERVER_PORT,
                dccp_types::REQUEST,
                DCCP_CLIENT_ISN,
                &DCCP_SERVICE_CODE.to_be_bytes(),
            ),
            reliable: true,
        }]
    }

    fn on_packet(&mut self, p: &Packet) -> Reaction {
        let proto = Protocol::ToyDccp;
        let mut r = Reaction::default();
        if self.aborted || !dccp_accepts(p, DCCP_CLIENT_PORT) {
            return r;
        }
        let ptype = p.get(proto, "Type");
        let seq = p.get(proto, "Sequence Number");
        let payload = p.payload(proto);

        match ptype {
            dccp_types::RESET => {
                if self.state == DccpClientState::CloseSent {
                    self.state = DccpClientState::Closed;
                    r.satisfied = true;
                } else {
                    self.aborted = true;
                }
                r.progressed = true;
            }
            dccp_types::RESPONSE => {
                if self.state == DccpClientState::ReqSent
                    && dccp_acked_seq(payload) == Some(DCCP_CLIENT_ISN)
                {
                    self.rcv_next = seq + 1;
                    self.state = DccpClientState::Established;
                    r.satisfied = true;
                    r.progressed = true;
                    let ack = self.ack_of(seq);
                    r.sends.push(ack);
                    if let Some(data) = self.data_packet() {
                        r.sends.push(data);
                    }
                }
            }
            dccp_types::ACK => {
                if self.state == DccpClientState::Established
                    && self.data_acked < self.data_sent
                    && dccp_acked_seq(payload) == Some(self.snd_next - 1)
                {
                    self.data_acked = self.data_sent;
                    r.satisfied = true;
                    r.progressed = true;
                    if let Some(data) = self.data_packet() {
                        r.sends.push(data);
                    }
                }
            }
            dccp_types::DATA_ACK => {
                // Sequence gaps are tolerated (every packet consumes a
                // sequence number); only true duplicates fall behind.
                if self.state == DccpClientState::Established && seq >= self.rcv_next {
                    self.rcv_next = seq + 1;
                    self.data_received += 1;
                    r.progressed = true;
                    if self.data_received >= DATA_PACKETS && self.data_acked >= DATA_PACKETS {
                        let close = self.close_packet();
                        r.sends.push(close);
                    } else {
                        let ack = self.ack_of(seq);
                        r.sends.push(ack);
                    }
                } else if self.state == DccpClientState::Established {
                    // Duplicate: re-acknowledge so the server advances.
                    let ack = self.ack_of(seq);
                    r.sends.push(ack);
                }
            }
            dccp_types::REQUEST | dccp_types::DATA | dccp_types::CLOSE | dccp_types::CLOSE_REQ => {
                // Not valid client-bound traffic in the toy exchange.
            }
            _ => {
                // Unknown type: reset the connection.
                self.aborted = true;
                r.progressed = true;
                let seq = self.next_seq();
                r.sends.push(OutPacket {
                    packet: make_dccp(
                        DCCP_CLIENT_PORT,
                        DCCP_SERVER_PORT,
                        dccp_types::RESET,
                        seq,
                        &[],
                    ),
                    reliable: false,
                });
            }
        }
        r
    }

    fn complete(&self) -> bool {
        self.state == DccpClientState::Closed
            && self.data_acked == DATA_PACKETS
            && self.data_received == DATA_PACKETS
            && !self.aborted
    }

    fn aborted(&self) -> bool {
        self.aborted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DccpServerState {
    Listen,
    RespSent,
    Established,
    Closed,
}

pub struct DccpServer {
    state: DccpServerState,
    snd_next: u64,
    rcv_next: u64,
    data_sent: usize,
    data_acked: usize,
    data_received: usize,
    aborted: bool,
}

impl DccpServer {
    pub fn new() -> DccpServer {
        DccpServer {
            state: DccpServerState::Listen,
            snd_next: DCCP_SERVER_ISN + 1,
            rcv_next: 0,
            data_sent: 0,
            data_acked: 0,
            data_received: 0,
            aborted: false,
        }
    }

    fn next_seq(&mut self) -> u64 {
        let s = self.snd_next;
        self.snd_next += 1;
        s
    }

    fn data_ack_packet(&mut self, acked: u64) -> Option<OutPacket> {
        if self.data_sent >= DATA_PACKETS || self.data_received < DATA_PACKETS {
            return None;
        }
        let index = self.data_sent;
        self.data_sent += 1;
        let seq = self.next_seq();
        Some(OutPacket {
            packet: make_dccp(
                DCCP_SERVER_PORT,
                DCCP_CLIENT_PORT,
                dccp_types::DATA_ACK,
                seq,
                &dccp_ack_payload(acked, b'S', index),
            ),
            reliable: true,
        })
    }
}

impl Endpoint for DccpServer {
    fn start(&mut self) -> Vec<OutPacket> {
        Vec::new()
    }

    fn on_packet(&mut self, p: &Packet) -> Reaction {
        let proto = Protocol::ToyDccp;
        let mut r = Reaction::default();
        if self.aborted || !dccp_accepts(p, DCCP_SERVER_PORT) {
            return r;
        }
        let ptype = p.get(proto, "Type");
        let seq = p.get(proto, "Sequence Number");
        let payload = p.payload(proto);

        match ptype {
            dccp_types::REQUEST => {
                if self.state == DccpServerState::Listen {
                    self.rcv_next = seq + 1;
                    self.state = DccpServerState::RespSent;
                    r.progressed = true;
                    let rseq = self.next_seq();
                    r.sends.push(OutPacket {
                        packet: make_dccp(
                            DCCP_SERVER_PORT,
                            DCCP_CLIENT_PORT,
                            dccp_types::RESPONSE,
                            rseq,
                            &dccp_ack_payload(seq, b'R', 0),
                        ),
                        reliable: true,
                    });
                }
            }
            dccp_types::ACK => {
                let acked = dccp_acked_seq(payload);
                if self.state == DccpServerState::RespSent && acked == Some(self.snd_next - 1) {
                    self.state = DccpServerState::Established;
                    r.satisfied = true;
                    r.progressed = true;
                } else if self.state == DccpServerState::Established
                    && self.data_acked < self.data_sent
                    && acked == Some(self.snd_next - 1)
                {
                    self.data_acked = self.data_sent;
                    r.satisfied = true;
                    r.progressed = true;
                    if let Some(next) = self.data_ack_packet(seq) {
                        r.sends.push(next);
                    }
                }
            }
            dccp_types::DATA => {
                // Data while RespSent implies the Ack was lost: accept.
                if self.state == DccpServerState::RespSent {
                    self.state = DccpServerState::Established;
                    r.satisfied = true;
                }
                if self.state == DccpServerState::Established {
                    if seq >= self.rcv_next {
                        self.rcv_next = seq + 1;
                        self.data_received += 1;
                        r.progressed = true;
                        let ack_seq = self.next_seq();
                        r.sends.push(OutPacket {
                            packet: make_dccp(
                                DCCP_SERVER_PORT,
                                DCCP_CLIENT_PORT,
                                dccp_types::ACK,
                                ack_seq,
                                &dccp_ack_payload(seq, b'A', 0),
                            ),
                            reliable: false,
                        });
                        if let Some(own) = self.data_ack_packet(seq) {
                            r.sends.push(own);
                        }
                    } else {
                        // Duplicate data: re-ack it.
                        let ack_seq = self.next_seq();
                        r.sends.push(OutPacket {
                            packet: make_dccp(
                                DCCP_SERVER_PORT,
                                DCCP_CLIENT_PORT,
                                dccp_types::ACK,
                                ack_seq,
                                &dccp_ack_payload(seq, b'A', 0),
                            ),
                            reliable: false,
                        });
                    }
                }
            }
            dccp_types::CLOSE => {
                if seq >= self.rcv_next || self.state == DccpServerState::Closed {
                    // A close acknowledges all outstanding data.
                    self.data_acked = self.data_sent;
                    self.state = DccpServerState::Closed;
                    r.satisfied = true;
                    r.progressed = true;
                    let rseq = self.next_seq();
                    r.sends.push(OutPacket {
                        packet: make_dccp(
                            DCCP_SERVER_PORT,
                            DCCP_CLIENT_PORT,
                            dccp_types::RESET,
                            rseq,
                            &[],
                        ),
                        reliable: false,
                    });
                }
            }
            dccp_types::RESET => {
                if self.state != DccpServerState::Closed {
                    self.aborted = true;
                    r.progressed = true;
                }
            }
            dccp_types::RESPONSE | dccp_types::DATA_ACK | dccp_types::CLOSE_REQ => {}
            _ => {
                self.aborted = true;
                r.progressed = true;
                let rseq = self.next_seq();
                r.sends.push(OutPacket {
                    packet: make_dccp(
                        DCCP_SERVER_PORT,
                        DCCP_CLIENT_PORT,
                        dccp_types::RESET,
                        rseq,
                        &[],
                    ),
                    reliable: false,
                });
            }
        }
        r
    }

    fn complete(&self) -> bool {
        self.state == DccpServerState::Closed
            && self.data_received == DATA_PACKETS
            && self.data_acked == DATA_PACKETS
            && !self.aborted
    }

    fn aborted(&self) -> bool {
        self.aborted
    }
}
