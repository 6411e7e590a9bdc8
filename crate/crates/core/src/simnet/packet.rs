//! Raw packets with big-endian bit-addressed field access, the two toy
//! protocol header layouts, and native packet-type classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grammar::ProtocolGrammar;
use crate::simnet::checksum::internet_checksum;

/// Bit 0 is the most significant bit of byte 0.
pub fn get_bits(bytes: &[u8], offset_bits: u32, len_bits: u32) -> u64 {
    debug_assert!(len_bits <= 64);
    let mut value = 0u64;
    for i in 0..len_bits {
        let bit = offset_bits + i;
        let byte = (bit / 8) as usize;
        if byte >= bytes.len() {
            break;
        }
        let shift = 7 - (bit % 8);
        let b = (bytes[byte] >> shift) & 1;
        value = (value << 1) | u64::from(b);
    }
    value
}

/// Writes the low `len_bits` of `value`; bits beyond the buffer are ignored.
pub fn set_bits(bytes: &mut [u8], offset_bits: u32, len_bits: u32, value: u64) {
    debug_assert!(len_bits <= 64);
    for i in 0..len_bits {
        let bit = offset_bits + i;
        let byte = (bit / 8) as usize;
        if byte >= bytes.len() {
            break;
        }
        let shift = 7 - (bit % 8);
        let v = (value >> (len_bits - 1 - i)) & 1;
        bytes[byte] = (bytes[byte] & !(1 << shift)) | ((v as u8) << shift);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    ToyTcp,
    ToyDccp,
}

impl Protocol {
    pub fn id(&self) -> &'static str {
        match self {
            Protocol::ToyTcp => "tcp",
            Protocol::ToyDccp => "dccp",
        }
    }

    pub fn from_id(s: &str) -> Option<Protocol> {
        match s.to_lowercase().as_str() {
            "tcp" | "toytcp" => Some(Protocol::ToyTcp),
            "dccp" | "toydccp" => Some(Protocol::ToyDccp),
            _ => None,
        }
    }

    pub fn header_bytes(&self) -> usize {
        match self {
            Protocol::ToyTcp => 20,
            Protocol::ToyDccp => 16,
        }
    }

    pub fn header_bits(&self) -> u32 {
        self.header_bytes() as u32 * 8
    }

    /// Native fixed-header layout as (name, size in bits), in order.
    pub fn layout(&self) -> &'static [(&'static str, u32)] {
        match self {
            Protocol::ToyTcp => &[
                ("Source Port", 16),
                ("Destination Port", 16),
                ("Sequence Number", 32),
                ("Acknowledgment Number", 32),
                ("Data Offset", 4),
                ("Reserved", 6),
                ("Control Bits", 6),
                ("Window", 16),
                ("Checksum", 16),
                ("Urgent Pointer", 16),
            ],
            Protocol::ToyDccp => &[
                ("Source Port", 16),
                ("Dest Port", 16),
                ("Data Offset", 8),
                ("CCVal", 4),
                ("CsCov", 4),
                ("Checksum", 16),
                ("Res", 3),
                ("Type", 4),
                ("X", 1),
                ("Reserved", 8),
                ("Sequence Number", 48),
            ],
        }
    }

    pub fn field_range(&self, name: &str) -> Option<(u32, u32)> {
        let mut offset = 0u32;
        for (n, size) in self.layout() {
            if *n == name {
                return Some((offset, *size));
            }
            offset += size;
        }
        None
    }

    /// Bit range of the native checksum field.
    pub fn checksum_range(&self) -> (u32, u32) {
        self.field_range("Checksum").expect("layouts have checksums")
    }
}

/// TCP control bit masks within the 6-bit Control Bits field.
pub mod tcp_flags {
    pub const URG: u64 = 0x20;
    pub const ACK: u64 = 0x10;
    pub const PSH: u64 = 0x08;
    pub const RST: u64 = 0x04;
    pub const SYN: u64 = 0x02;
    pub const FIN: u64 = 0x01;
}

/// DCCP packet type values.
pub mod dccp_types {
    pub const REQUEST: u64 = 0;
    pub const RESPONSE: u64 = 1;
    pub const DATA: u64 = 2;
    pub const ACK: u64 = 3;
    pub const DATA_ACK: u64 = 4;
    pub const CLOSE_REQ: u64 = 5;
    pub const CLOSE: u64 = 6;
    pub const RESET: u64 = 7;
}

/// A raw packet: fixed toy header plus payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub bytes: Vec<u8>,
}

impl Packet {
    pub fn new(protocol: Protocol, payload_len: usize) -> Packet {
        Packet {
            bytes: vec![0u8; protocol.header_bytes() + payload_len],
        }
    }

    pub fn payload<'a>(&'a self, protocol: Protocol) -> &'a [u8] {
        &self.bytes[protocol.header_bytes().min(self.bytes.len())..]
    }

    pub fn get(&self, protocol: Protocol, field: &str) -> u64 {
        let (off, len) = protocol
            .field_range(field)
            .unwrap_or_else(|| panic!("unknown native field {field}"));
        get_bits(&self.bytes, off, len)
    }

    pub fn set(&mut self, protocol: Protocol, field: &str, value: u64) {
        let (off, len) = protocol
            .field_range(field)
            .unwrap_or_else(|| panic!("unknown native field {field}"));
        set_bits(&mut self.bytes, off, len, value);
    }

    /// Recomputes and stores the native checksum over the whole packet with
    /// the checksum field zeroed.
    pub fn seal(&mut self, protocol: Protocol) {
        let (off, len) = protocol.checksum_range();
        set_bits(&mut self.bytes, off, len, 0);
        let ck = internet_checksum(&self.bytes);
        set_bits(&mut self.bytes, off, len, u64::from(ck));
    }

    /// Verifies the native checksum.
    pub fn checksum_ok(&self, protocol: Protocol) -> bool {
        if self.bytes.len() < protocol.header_bytes() {
            return false;
        }
        internet_checksum(&self.bytes) == 0
    }

    /// Field view through an arbitrary grammar's layout.
    pub fn parse_fields(&self, grammar: &ProtocolGrammar) -> BTreeMap<String, u64> {
        grammar
            .fields
            .iter()
            .map(|f| {
                (
                    f.name.clone(),
                    get_bits(&self.bytes, f.offset_bits, f.size_bits.min(64)),
                )
            })
            .collect()
    }

    /// Native packet-type name, used for trace recording.
    pub fn classify(&self, protocol: Protocol) -> String {
        if self.bytes.len() < protocol.header_bytes() {
            return "SHORT".to_string();
        }
        match protocol {
            Protocol::ToyTcp => {
                let flags = self.get(protocol, "Control Bits");
                let has_payload = self.bytes.len() > protocol.header_bytes();
                if flags & tcp_flags::RST != 0 {
                    "RST".to_string()
                } else if flags & tcp_flags::SYN != 0 && flags & tcp_flags::ACK != 0 {
                    "SYN-ACK".to_string()
                } else if flags & tcp_flags::SYN != 0 {
                    "SYN".to_string()
                } else if flags & tcp_flags::FIN != 0 {
                    "FIN".to_string()
                } else if has_payload {
                    "DATA".to_string()
                } else {
                    "ACK".to_string()
                }
            }
            Protocol::ToyDccp => {
                let t = self.get(protocol, "Type");
                match t {
                    dccp_types::REQUEST => "Request".to_string(),
                    dccp_types::RESPONSE => "Response".to_string(),
                    dccp_types::DATA => "Data".to_string(),
                    dccp_types::ACK => "Ack".to_string(),
                    dccp_types::DATA_ACK => "DataAck".to_string(),
                    dccp_types::CLOSE_REQ => "CloseReq".to_string(),
                    dccp_types::CLOSE => "Close".to_string(),
                    dccp_types::RESET => "Reset".to_string(),
                    other => format!("OTHER_{other}"),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{GrammarField, ProtocolGrammar};

    #[test]
    fn bit_round_trip() {
        let mut buf = vec![0u8; 8];
        set_bits(&mut buf, 3, 11, 0x5a5);
        assert_eq!(get_bits(&buf, 3, 11), 0x5a5);
        set_bits(&mut buf, 0, 3, 0x7);
        assert_eq!(get_bits(&buf, 0, 3), 0x7);
        assert_eq!(get_bits(&buf, 3, 11), 0x5a5, "neighbor bits untouched");
    }

    #[test]
    fn layouts_sum_to_declared_sizes() {
        assert_eq!(
            Protocol::ToyTcp.layout().iter().map(|(_, s)| s).sum::<u32>(),
            160
        );
        assert_eq!(
            Protocol::ToyDccp
                .layout()
                .iter()
                .map(|(_, s)| s)
                .sum::<u32>(),
            128
        );
    }

    #[test]
    fn field_set_get_round_trip() {
        let mut p = Packet::new(Protocol::ToyTcp, 0);
        p.set(Protocol::ToyTcp, "Source Port", 40000);
        p.set(Protocol::ToyTcp, "Sequence Number", 0xdead_beef);
        p.set(Protocol::ToyTcp, "Control Bits", tcp_flags::SYN);
        assert_eq!(p.get(Protocol::ToyTcp, "Source Port"), 40000);
        assert_eq!(p.get(Protocol::ToyTcp, "Sequence Number"), 0xdead_beef);
        assert_eq!(p.get(Protocol::ToyTcp, "Control Bits"), tcp_flags::SYN);
    }

    #[test]
    fn seal_then_verify() {
        let mut p = Packet::new(Protocol::ToyDccp, 4);
        p.set(Protocol::ToyDccp, "Source Port", 40000);
        p.set(Protocol::ToyDccp, "Type", dccp_types::REQUEST);
        p.bytes[16..20].copy_from_slice(b"PING");
        p.seal(Protocol::ToyDccp);
        assert!(p.checksum_ok(Protocol::ToyDccp));
        let mut bad = p.clone();
        bad.bytes[17] ^= 0xff;
        assert!(!bad.checksum_ok(Protocol::ToyDccp));
    }

    #[test]
    fn tcp_classification() {
        let proto = Protocol::ToyTcp;
        let mut p = Packet::new(proto, 0);
        p.set(proto, "Control Bits", tcp_flags::SYN);
        assert_eq!(p.classify(proto), "SYN");
        p.set(proto, "Control Bits", tcp_flags::SYN | tcp_flags::ACK);
        assert_eq!(p.classify(proto), "SYN-ACK");
        p.set(proto, "Control Bits", tcp_flags::ACK);
        assert_eq!(p.classify(proto), "ACK");
        p.set(proto, "Control Bits", tcp_flags::RST);
        assert_eq!(p.classify(proto), "RST");
        p.set(proto, "Control Bits", tcp_flags::FIN | tcp_flags::ACK);
        assert_eq!(p.classify(proto), "FIN");
        let mut d = Packet::new(proto, 8);
        d.set(proto, "Control Bits", tcp_flags::ACK | tcp_flags::PSH);
        assert_eq!(d.classify(proto), "DATA");
    }

    #[test]
    fn grammar_view_matches_native_layout() {
        let proto = Protocol::ToyTcp;
        let mut fields = Vec::new();
        let mut offset = 0u32;
        for (i, (name, size)) in proto.layout().iter().enumerate() {
            fields.push(GrammarField {
                name: name.to_string(),
                size_bits: *size,
                offset_bits: offset,
                order: i,
            });
            offset += size;
        }
        let grammar = ProtocolGrammar {
            protocol: "tcp".into(),
            header_bits: 160,
            fields,
            symbols: vec![],
            properties: vec![],
            packet_types: vec![],
        };
        let mut p = Packet::new(proto, 0);
        p.set(proto, "Window", 4096);
        p.set(proto, "Destination Port", 80);
        let view = p.parse_fields(&grammar);
        assert_eq!(view["Window"], 4096);
        assert_eq!(view["Destination Port"], 80);
    }
}
