//! Text forms of numbers and events.

use anyhow::{bail, Context};
use spectral_hom::{Channel, DetectionEvent};

pub const SIGNIFICANT: usize = 12;

/// Shortest rendering of `x` at 12 significant digits, in the manner of
/// C's `%.12g`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const EVENT_HEADER: [&str; 4] = ["kind", "channel", "omega_a", "omega_b"];

pub fn event_record(e: &DetectionEvent) -> [String; 4] {
    let ch = |c: Channel| c.number().to_string();
    match *e {
        DetectionEvent::NoDetection => ["none".into(), String::new(), String::new(), String::new()],
        DetectionEvent::Single { channel, omega } => ["single".into(), ch(channel), num(omega), String::new()],
        DetectionEvent::Bunch { channel, omega_a, omega_b } => ["bunch".into(), ch(channel), num(omega_a), num(omega_b)],
        DetectionEvent::Coincidence { omega_a, omega_b } => {
            ["coincidence".into(), String::new(), num(omega_a), num(omega_b)]
        }
    }
}

pub fn parse_event(record: &csv::StringRecord) -> anyhow::Result<DetectionEvent> {
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let freq = |i: usize| -> anyhow::Result<f64> {
        let v: f64 = field(i).parse().with_context(|| format!("bad frequency {:?}", field(i)))?;
        if !v.is_finite() {
            bail!("frequency must be finite, got {v}");
        }
        Ok(v)
    };
    let channel = || -> anyhow::Result<Channel> {
        match field(1) {
            "1" => Ok(Channel::One),
            "2" => Ok(Channel::Two),
            other => bail!("bad channel {other:?}"),
        }
    };
    Ok(match field(0) {
        "none" => DetectionEvent::NoDetection,
        "single" => DetectionEvent::Single { channel: channel()?, omega: freq(2)? },
        "bunch" => DetectionEvent::Bunch { channel: channel()?, omega_a: freq(2)?, omega_b: freq(3)? },
        "coincidence" => DetectionEvent::Coincidence { omega_a: freq(2)?, omega_b: freq(3)? },
        other => bail!("unknown event kind {other:?}"),
    })
}
