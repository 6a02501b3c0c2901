//! `HH:MM:SS` service-day times. Hours may exceed 23.

/// Parses `H:MM:SS` / `HH:MM:SS` (hours unbounded) into seconds past midnight.
pub fn parse_time(s: &str) -> Option<u32> {
    let mut parts = s.trim().split(':');
    let h: u32 = parts.next()?.parse().ok()?;
    let m = parts.next()?;
    let sec = parts.next()?;
    if parts.next().is_some() || m.len() != 2 || sec.len() != 2 {
        return None;
    }
    let m: u32 = m.parse().ok()?;
    let sec: u32 = sec.parse().ok()?;
    if m >= 60 || sec >= 60 {
        return None;
    }
    h.checked_mul(3600)?.checked_add(m * 60 + sec)
}

pub fn format_time(secs: u32) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, (secs / 60) % 60, secs % 60)
}

/// `HHMM` label used by panel partitions (e.g. `0750`).
pub fn hhmm(secs: u32) -> String {
    format!("{:02}{:02}", secs / 3600, (secs / 60) % 60)
}
