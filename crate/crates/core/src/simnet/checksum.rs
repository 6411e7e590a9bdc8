//! Standard ones-complement internet checksum (RFC 1071 convention).

/// 16-bit ones-complement of the ones-complement sum of 16-bit words;
/// odd-length input is zero-padded.
pub fn internet_checksum(bytes: &[u8]) -> u16 {
    let mut sum = 0u32;
    let mut chunks = bytes.chunks_exact(2);
    for pair in &mut chunks {
        sum += u32::from(u16::from_be_bytes([pair[0], pair[1]]));
    }
    if let [last] = chunks.remainder() {
        sum += u32::from(u16::from_be_bytes([*last, 0]));
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// True when a buffer with its checksum field in place sums to zero.
pub fn verifies(bytes: &[u8]) -> bool {
    internet_checksum(bytes) == 0
}
