use std::sync::Mutex;

use crate::time::Timestamp;

const CROCKFORD: &[u8; 32] = b"0123456789ABCDEFGHJKMNPQRSTVWXYZ";
const COUNTER_BITS: u32 = 80;
const TIME_MASK: u64 = (1 << 48) - 1;

/// Issues ULID-shaped, strictly increasing event ids.
///
/// The 48-bit time part is the largest event timestamp seen so far (ms) and
/// the 80-bit tail is a counter, so ids sort in issue order and the same
/// event sequence always yields the same ids.
#[derive(Debug, Default)]
pub struct EventIdGenerator {
    state: Mutex<(u64, u128)>,
}

impl EventIdGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Continues after `last`, an id previously issued by a generator.
    pub fn resume_after(last: &str) -> Option<Self> {
        let value = decode(last)?;
        let time = (value >> COUNTER_BITS) as u64;
        let counter = value & ((1u128 << COUNTER_BITS) - 1);
        Some(Self {
            state: Mutex::new((time, counter)),
        })
    }

    pub fn next_for(&self, ts: &Timestamp) -> String {
        let ms = ts.timestamp_millis().max(0) as u64 & TIME_MASK;
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.0 = state.0.max(ms);
        state.1 += 1;
        encode(((state.0 as u128) << COUNTER_BITS) | state.1)
    }
}

fn encode(mut value: u128) -> String {
    let mut out = [0u8; 26];
    for slot in out.iter_mut().rev() {
        *slot = CROCKFORD[(value & 0x1f) as usize];
        value >>= 5;
    }
    String::from_utf8(out.to_vec()).expect("ascii")
}

fn decode(text: &str) -> Option<u128> {
    if text.len() != 26 {
        return None;
    }
    let mut value: u128 = 0;
    for b in text.bytes() {
        let digit = CROCKFORD.iter().position(|&c| c == b)? as u128;
        value = value.checked_mul(32)?.checked_add(digit)?;
    }
    Some(value)
}
