use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::Severity;
use crate::registry::DeviceKind;
use crate::taxonomy;
use crate::time::{format_ts, Timestamp};

const SERVICE_DEVICES: [(&str, DeviceKind); 6] = [
    ("SSBRM-01", DeviceKind::SelfServiceMachine),
    ("SSBRM-02", DeviceKind::SelfServiceMachine),
    ("SSBRM-03", DeviceKind::SelfServiceMachine),
    ("SB-01", DeviceKind::SilentBooth),
    ("SHELF-01", DeviceKind::SmartBookshelf),
    ("SHELF-02", DeviceKind::SmartBookshelf),
];

const HEALTHY: [&str; 4] = [
    "Self-check passed",
    "Heartbeat",
    "Session completed normally",
    "Firmware watchdog ok",
];

/// `n` well-formed log lines for the fixture fleet, deterministic per seed.
pub fn generate_log_corpus(seed: u64, n: usize, start: Timestamp) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts = start;
    (0..n)
        .map(|_| {
            ts += Duration::seconds(rng.random_range(1..=90));
            let (device, kind) = SERVICE_DEVICES[rng.random_range(0..SERVICE_DEVICES.len())];
            let faults: Vec<_> = taxonomy::codes_for(kind).collect();
            if rng.random_bool(0.3) {
                let spec = faults[rng.random_range(0..faults.len())];
                let severity = match rng.random_range(0..3) {
                    0 => Severity::Warn,
                    1 => spec.default_severity.max(Severity::Warn),
                    _ => Severity::Error,
                };
                format!(
                    "{} | {device} | {severity} | {} | {} (attempt {})",
                    format_ts(&ts),
                    spec.code,
                    spec.description,
                    rng.random_range(1..=5)
                )
            } else {
                let msg = HEALTHY[rng.random_range(0..HEALTHY.len())];
                format!("{} | {device} | INFO | OK | {msg}", format_ts(&ts))
            }
        })
        .collect()
}

/// Healthy heartbeat lines on devices outside `busy`, spread over `span_secs`.
pub(crate) fn noise_lines(
    rng: &mut ChaCha8Rng,
    start: Timestamp,
    span_secs: i64,
    busy: &[&str],
    count: usize,
) -> Vec<(i64, String)> {
    let idle: Vec<&str> = SERVICE_DEVICES
        .iter()
        .map(|(d, _)| *d)
        .filter(|d| !busy.contains(d))
        .collect();
    if idle.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<(i64, String)> = (0..count)
        .map(|_| {
            let offset = rng.random_range(0..=span_secs.max(1));
            let device = idle[rng.random_range(0..idle.len())];
            let msg = HEALTHY[rng.random_range(0..HEALTHY.len())];
            let ts = start + Duration::seconds(offset);
            (offset, format!("{} | {device} | INFO | OK | {msg}", format_ts(&ts)))
        })
        .collect();
    out.sort();
    out
}
