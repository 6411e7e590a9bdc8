//! Discrete-event loop: two endpoints connected through a malicious proxy
//! that applies one test strategy to every matching packet. Runs are fully
//! deterministic given the strategy and its seeds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fuzzer::{Action, DeliveryAction, TestStrategy, ValueRule};
use crate::grammar::{PropertyKind, ProtocolGrammar};
use crate::simnet::checksum::internet_checksum;
use crate::simnet::endpoints::{make_endpoints, OutPacket};
use crate::simnet::packet::{get_bits, set_bits, Packet, Protocol};

/// Per-hop latency in time units.
const HOP_LATENCY: u64 = 1;
/// Retransmission timeout in time units.
const RTO: u64 = 5;
/// Retransmissions before a sender gives up.
const MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Client,
    Server,
}

impl Side {
    fn other(self) -> Side {
        match self {
            Side::Client => Side::Server,
            Side::Server => Side::Client,
        }
    }

    fn index(self) -> usize {
        match self {
            Side::Client => 0,
            Side::Server => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Completed,
    Stalled,
    Failed,
}

/// Engine tuning knobs; defaults follow the documented run budget.
#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub event_budget: u64,
    pub stall_window: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            event_budget: 100,
            stall_window: 20,
        }
    }
}

enum EventKind {
    Deliver { to: Side, packet: Packet },
    Retransmit { side: Side, generation: u64 },
}

struct Event {
    time: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first ordering.
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// The in-path attacker. Records the packet-type trace before any
/// modification and applies the strategy's action to matching packets.
struct Proxy<'a> {
    protocol: Protocol,
    strategy: Option<&'a TestStrategy>,
    rng: ChaCha8Rng,
    trace: Vec<String>,
    /// Packet held back by reorder-with-next, with its direction.
    held: Option<(Side, Packet)>,
    /// Bit range of the grammar's PacketType field plus the target value.
    target: Option<(u32, u32, u64)>,
    /// Bit range of the grammar's checksum field, for repair after edits.
    checksum_field: Option<(u32, u32)>,
    /// Bit range and precomputed value for field modification.
    modify: Option<(u32, u32, ValueRule, u64)>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl<'a> Proxy<'a> {
    fn new(
        protocol: Protocol,
        strategy: Option<&'a TestStrategy>,
        grammar: Option<&ProtocolGrammar>,
    ) -> Proxy<'a> {
        let seed = match strategy.map(|s| &s.action) {
            Some(Action::RandomBytes { seed, .. }) => *seed,
            Some(Action::Inject { seed }) => *seed,
            Some(Action::FieldModify {
                rule: ValueRule::Random { seed } | ValueRule::SingleRandom { seed },
                ..
            }) => *seed,
            _ => 0,
        };
        let target = strategy
            .and_then(|s| s.target_packet_type.as_deref())
            .zip(grammar)
            .and_then(|(name, g)| {
                let field = g.field_with_kind(PropertyKind::PacketType)?;
                let value = g
                    .packet_types
                    .iter()
                    .find(|p| p.name == name)
                    .map(|p| p.value)
                    .or_else(|| name.strip_prefix("TYPE_").and_then(|v| v.parse().ok()))?;
                Some((field.offset_bits, field.size_bits, value))
            });
        let checksum_field = grammar
            .and_then(|g| g.field_with_kind(PropertyKind::Checksum))
            .map(|f| (f.offset_bits, f.size_bits));
        let modify = match strategy.map(|s| &s.action) {
            Some(Action::FieldModify { field, rule }) => grammar
                .and_then(|g| g.field(field))
                .map(|f| {
                    let value = match rule {
                        ValueRule::Zeros => 0,
                        ValueRule::Ones => mask(f.size_bits),
                        ValueRule::One => 1,
                        ValueRule::Random { seed } | ValueRule::SingleRandom { seed } => {
                            splitmix64(*seed) & mask(f.size_bits)
                        }
                        // Value depends on the packet; computed at apply time.
                        ValueRule::NotMultiple | ValueRule::HugeOffset => 0,
                    };
                    (f.offset_bits, f.size_bits, *rule, value)
                }),
            _ => None,
        };
        Proxy {
            protocol,
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            trace: Vec::new(),
            held: None,
            target,
            checksum_field,
            modify,
        }
    }

    fn matches(&self, packet: &Packet) -> bool {
        match self.target {
            None => true,
            Some((off, len, value)) => get_bits(&packet.bytes, off, len) == value,
        }
    }

    /// Rewrites the grammar-declared checksum field so an edited packet
    /// still verifies, unless the edit hit the checksum field itself.
    fn repair_checksum(&self, packet: &mut Packet, edited: Option<(u32, u32)>) {
        let Some((off, len)) = self.checksum_field else {
            return;
        };
        if edited == Some((off, len)) {
            return;
        }
        set_bits(&mut packet.bytes, off, len, 0);
        let ck = internet_checksum(&packet.bytes);
        set_bits(&mut packet.bytes, off, len, u64::from(ck));
    }

    /// Processes one endpoint-originated packet. Returns (delay, to, packet)
    /// deliveries to schedule. The trace records the packet before any
    /// modification; proxy-created copies are not recorded.
    fn process(&mut self, from: Side, packet: Packet) -> Vec<(u64, Side, Packet)> {
        self.trace.push(packet.classify(self.protocol));
        let to = from.other();
        let deliver = |p: Packet| (HOP_LATENCY, to, p);

        // Release a held packet when the next one from the same direction
        // passes, swapping their order.
        if let Some((held_from, _)) = &self.held {
            if *held_from == from {
                let (_, held) = self.held.take().expect("checked");
                return vec![deliver(packet), (HOP_LATENCY + 1, to, held)];
            }
        }

        let Some(strategy) = self.strategy else {
            return vec![deliver(packet)];
        };
        let matched = self.matches(&packet);
        match &strategy.action {
            Action::RandomBytes { byte_indices, .. } => {
                let mut p = packet;
                for &i in byte_indices {
                    let i = i as usize;
                    let byte = (self.rng.next_u32() & 0xff) as u8;
                    if i < p.bytes.len() {
                        p.bytes[i] = byte;
                    }
                }
                vec![deliver(p)]
            }
            Action::FieldModify { .. } if matched => {
                let Some((off, len, rule, fixed)) = self.modify else {
                    return vec![deliver(packet)];
                };
                let mut p = packet;
                let value = match rule {
                    ValueRule::NotMultiple => {
                        get_bits(&p.bytes, off, len).wrapping_add(1) & mask(len)
                    }
                    ValueRule::HugeOffset => {
                        let huge = 1u64 << (len.saturating_sub(2)).min(63);
                        get_bits(&p.bytes, off, len).wrapping_add(huge) & mask(len)
                    }
                    _ => fixed,
                };
                set_bits(&mut p.bytes, off, len, value);
                self.repair_checksum(&mut p, Some((off, len)));
                vec![deliver(p)]
            }
            Action::Delivery { delivery } if matched => match delivery {
                DeliveryAction::Drop => vec![],
                DeliveryAction::Duplicate => {
                    vec![deliver(packet.clone()), (HOP_LATENCY + 1, to, packet)]
                }
                DeliveryAction::Delay { events } => vec![(HOP_LATENCY + events, to, packet)],
                DeliveryAction::ReorderWithNext => {
                    self.held = Some((from, packet));
                    vec![]
                }
            },
            Action::Inject { .. } if matched => {
                // Deliver the original, then an off-path duplicate with one
                // fresh random payload byte and a repaired checksum.
                let mut injected = packet.clone();
                let byte = (self.rng.next_u32() & 0xff) as u8;
                if injected.bytes.len() > self.protocol.header_bytes() {
                    let last = injected.bytes.len() - 1;
                    injected.bytes[last] = byte;
                } else {
                    injected.bytes.push(byte);
                }
                self.repair_checksum(&mut injected, None);
                vec![deliver(packet), (HOP_LATENCY + 1, to, injected)]
            }
            _ => vec![deliver(packet)],
        }
    }
}

struct PendingReliable {
    packet: Packet,
    retries: u32,
    generation: u64,
}

/// Outcome of one simulated run before attack classification.
#[derive(Debug, Clone)]
pub struct EngineOutcome {
    pub verdict: Verdict,
    pub trace: Vec<String>,
    pub events_used: u64,
}

/// Runs one strategy (or a pass-through when `strategy` is `None`) to a
/// verdict.
pub fn run_engine(
    protocol: Protocol,
    strategy: Option<&TestStrategy>,
    grammar: Option<&ProtocolGrammar>,
    config: &EngineConfig,
) -> EngineOutcome {
    let (mut client, mut server) = make_endpoints(protocol);
    let mut proxy = Proxy::new(protocol, strategy, grammar);
    let mut queue: BinaryHeap<Event> = BinaryHeap::new();
    let mut event_seq = 0u64;
    let mut pending: [Option<PendingReliable>; 2] = [None, None];
    let mut generation = 0u64;
    let mut events_used = 0u64;
    let mut events_since_progress = 0u64;
    let mut now = 0u64;

    macro_rules! schedule {
        ($time:expr, $kind:expr) => {{
            event_seq += 1;
            queue.push(Event {
                time: $time,
                seq: event_seq,
                kind: $kind,
            });
        }};
    }

    macro_rules! dispatch_sends {
        ($side:expr, $sends:expr) => {{
            let side: Side = $side;
            for out in $sends {
                let OutPacket { packet, reliable } = out;
                if reliable {
                    generation += 1;
                    pending[side.index()] = Some(PendingReliable {
                        packet: packet.clone(),
                        retries: 0,
                        generation,
                    });
                    schedule!(
                        now + RTO,
                        EventKind::Retransmit {
                            side,
                            generation
                        }
                    );
                }
                for (delay, to, p) in proxy.process(side, packet) {
                    schedule!(now + delay, EventKind::Deliver { to, packet: p });
                }
            }
        }};
    }

    let starts = client.start();
    dispatch_sends!(Side::Client, starts);
    let server_starts = server.start();
    dispatch_sends!(Side::Server, server_starts);

    let verdict = loop {
        if client.complete() && server.complete() {
            break Verdict::Completed;
        }
        let Some(event) = queue.pop() else {
            break final_verdict(&*client, &*server);
        };
        now = event.time;
        if events_used >= config.event_budget {
            break final_verdict(&*client, &*server);
        }
        match event.kind {
            EventKind::Deliver { to, packet } => {
                events_used += 1;
                let endpoint: &mut Box<dyn crate::simnet::endpoints::Endpoint> = match to {
                    Side::Client => &mut client,
                    Side::Server => &mut server,
                };
                let reaction = endpoint.on_packet(&packet);
                if reaction.satisfied {
                    pending[to.index()] = None;
                }
                if reaction.progressed {
                    events_since_progress = 0;
                } else {
                    events_since_progress += 1;
                }
                dispatch_sends!(to, reaction.sends);
            }
            EventKind::Retransmit { side, generation } => {
                let stale = match &pending[side.index()] {
                    Some(p) => p.generation != generation,
                    None => true,
                };
                if stale {
                    continue;
                }
                events_used += 1;
                events_since_progress += 1;
                let entry = pending[side.index()].as_mut().expect("not stale");
                if entry.retries >= MAX_RETRIES {
                    break final_verdict(&*client, &*server);
                }
                entry.retries += 1;
                let packet = entry.packet.clone();
                let generation = entry.generation;
                schedule!(now + RTO, EventKind::Retransmit { side, generation });
                for (delay, to, p) in proxy.process(side, packet) {
                    schedule!(now + delay, EventKind::Deliver { to, packet: p });
                }
            }
        }
        if events_since_progress >= config.stall_window {
            break final_verdict(&*client, &*server);
        }
    };

    EngineOutcome {
        verdict,
        trace: proxy.trace,
        events_used,
    }
}

fn final_verdict(
    client: &dyn crate::simnet::endpoints::Endpoint,
    server: &dyn crate::simnet::endpoints::Endpoint,
) -> Verdict {
    if client.complete() && server.complete() {
        Verdict::Completed
    } else if client.aborted() || server.aborted() {
        Verdict::Failed
    } else {
        Verdict::Stalled
    }
}
