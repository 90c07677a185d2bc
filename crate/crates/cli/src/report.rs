//! Plain-text `key = value` reports.

use std::fmt::Display;

/// Six significant digits, fixed notation for moderate magnitudes.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

/// Seventeen significant digits, for CSV.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            lines: vec![format!("# blowup {command}")],
        }
    }

    pub fn line(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key} = {value}"));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.line(key, fmt6(value));
    }

    pub fn finish(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}
