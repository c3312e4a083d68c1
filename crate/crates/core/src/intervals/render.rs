//! Bracket diagrams of interval systems, one row per level.

use std::fmt::Write;

const CELL: usize = 4;

struct Span {
    start: usize,
    /// `None` when the interval runs past the horizon.
    end: Option<usize>,
}

fn draw(label: &str, spans: &[Span], horizon: usize) -> String {
    let mut cells = vec!["    "; horizon];
    let mut open = false;
    for span in spans {
        let last = span.end.unwrap_or(horizon).min(horizon);
        open |= span.end.is_none_or(|e| e > horizon);
        for t in span.start..=last {
            let closes = Some(t) == span.end;
            cells[t - 1] = match (t == span.start, closes) {
                (true, true) => "[  ]",
                (true, false) => "[---",
                (false, true) => "---]",
                (false, false) => "----",
            };
        }
    }
    let mut row = format!("{label:<5}");
    for c in cells {
        row.push_str(c);
    }
    if open {
        row.push_str(" ...");
    }
    row.trim_end().to_string()
}

fn header(horizon: usize) -> String {
    let mut row = format!("{:<5}", "t");
    for t in 1..=horizon {
        write!(row, "{t:>width$}", width = CELL - 1).unwrap();
        row.push(' ');
    }
    row.trim_end().to_string()
}

fn marker_header(markers: &[usize], horizon: usize) -> String {
    let mut labels = vec![String::new(); horizon];
    for (idx, &s) in markers.iter().enumerate() {
        if s >= 1 && s <= horizon {
            labels[s - 1] = format!("s{}", idx + 1);
        }
    }
    let mut row = format!("{:<5}", "");
    for l in labels {
        write!(row, "{l:<width$}", width = CELL).unwrap();
    }
    row.trim_end().to_string()
}

fn levels(horizon: usize) -> u32 {
    usize::BITS - horizon.leading_zeros()
}

fn round_levels(horizon: usize, odd_only: bool, prefix: &str) -> String {
    let mut out = header(horizon);
    for k in 0..levels(horizon) {
        let width = 1usize << k;
        let spans: Vec<Span> = (1..)
            .map(|i| i * width)
            .take_while(|&start| start <= horizon)
            .filter(|start| !odd_only || (start / width) % 2 == 1)
            .map(|start| Span {
                start,
                end: Some(start + width - 1),
            })
            .collect();
        out.push('\n');
        out.push_str(&draw(&format!("{prefix}{k}"), &spans, horizon));
    }
    out.push('\n');
    out
}

fn marker_levels(markers: &[usize], horizon: usize, odd_only: bool, prefix: &str) -> String {
    let mut out = header(horizon);
    out.push('\n');
    out.push_str(&marker_header(markers, horizon));
    let count = markers.len();
    for k in 0..levels(count.max(1)) {
        let width = 1usize << k;
        let spans: Vec<Span> = (1..)
            .map(|i| i * width)
            .take_while(|&idx| idx <= count)
            .filter(|idx| !odd_only || (idx / width) % 2 == 1)
            .filter(|&idx| markers[idx - 1] <= horizon)
            .map(|idx| Span {
                start: markers[idx - 1],
                end: markers.get(idx + width - 1).map(|s| s - 1),
            })
            .collect();
        out.push('\n');
        out.push_str(&draw(&format!("{prefix}{k}"), &spans, horizon));
    }
    out.push('\n');
    out
}

/// GC intervals: level `k` holds `[i·2^k, (i+1)·2^k − 1]` for all `i ≥ 1`.
pub fn render_gc(horizon: usize) -> String {
    round_levels(horizon, false, "I")
}

/// CGC intervals: as GC but only odd `i`.
pub fn render_cgc(horizon: usize) -> String {
    round_levels(horizon, true, "C")
}

/// Marker-based intervals `[s_{i·2^k}, s_{(i+1)·2^k} − 1]`, all `i ≥ 1`.
/// `markers` are the 1-based rounds `s_1 < s_2 < …`.
pub fn render_pgc(markers: &[usize], horizon: usize) -> String {
    marker_levels(markers, horizon, false, "I~")
}

/// Marker-based intervals with odd `i` only.
pub fn render_cpgc(markers: &[usize], horizon: usize) -> String {
    marker_levels(markers, horizon, true, "C~")
}
