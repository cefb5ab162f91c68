use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// Per-process jump times over (0, horizon].
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    n: usize,
    horizon: f64,
    events: Vec<Vec<f64>>,
    total_count: usize,
    seed: u64,
}

impl EventLog {
    /// Builds a log, checking that every list is strictly increasing inside
    /// (0, horizon].
    pub fn new(horizon: f64, events: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be > 0, got {horizon}")));
        }
        for (i, list) in events.iter().enumerate() {
            if let Some(&first) = list.first() {
                if !(first > 0.0) {
                    return Err(invalid(format!("process {i}: event at {first} <= 0")));
                }
            }
            if let Some(&last) = list.last() {
                if !(last <= horizon) {
                    return Err(invalid(format!("process {i}: event at {last} > horizon")));
                }
            }
            if list.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid(format!("process {i}: times not strictly increasing")));
            }
        }
        Ok(Self::new_unchecked(horizon, events, seed))
    }

    pub(crate) fn new_unchecked(horizon: f64, events: Vec<Vec<f64>>, seed: u64) -> Self {
        let total_count = events.iter().map(Vec::len).sum();
        EventLog { n: events.len(), horizon, events, total_count, seed }
    }

    pub fn empty(n: usize, horizon: f64) -> Self {
        Self::new_unchecked(horizon, vec![Vec::new(); n], 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn events(&self, i: usize) -> &[f64] {
        &self.events[i]
    }

    pub fn all_events(&self) -> &[Vec<f64>] {
        &self.events
    }

    /// Z_t^i = #{s ∈ events_i : s ≤ t}.
    #[inline]
    pub fn count_at(&self, i: usize, t: f64) -> usize {
        self.events[i].partition_point(|&s| s <= t)
    }

    /// Writes `process,time` rows sorted by time then process, with times
    /// printed to 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut rows: Vec<(f64, usize)> = Vec::with_capacity(self.total_count);
        for (i, list) in self.events.iter().enumerate() {
            rows.extend(list.iter().map(|&s| (s, i)));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        writeln!(w, "process,time")?;
        for (s, i) in rows {
            writeln!(w, "{i},{s:.16e}")?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`EventLog::write_csv`]. `n` and `horizon` are
    /// not stored in the file and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, n: usize, horizon: f64) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "missing header".into() })??;
        if header.trim() != "process,time" {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header \"process,time\", found {header:?}"),
            });
        }
        let mut events = vec![Vec::new(); n];
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: lineno, msg };
            let (p, t) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("expected two fields, found {line:?}")))?;
            let p: usize = p.trim().parse().map_err(|e| bad(format!("bad process index: {e}")))?;
            let t: f64 = t.trim().parse().map_err(|e| bad(format!("bad time: {e}")))?;
            if p >= n {
                return Err(bad(format!("process {p} out of range for N = {n}")));
            }
            if !(t > 0.0 && t <= horizon) {
                return Err(bad(format!("time {t} outside (0, {horizon}]")));
            }
            events[p].push(t);
        }
        for list in &mut events {
            list.sort_by(f64::total_cmp);
        }
        Self::new(horizon, events, 0)
    }
}
