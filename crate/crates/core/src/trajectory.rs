//! Recorded sample paths of the type process and their CSV / JSON forms.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::simplex::PopulationType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub n: u32,
    pub lambda: f64,
    pub rule_id: String,
    pub game_id: String,
    pub topology_id: String,
}

/// Piecewise-constant path: `state(k)` holds on `[time(k), time(k + 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    m: usize,
    n: u32,
    times: Vec<f64>,
    counts: Vec<u32>,
    pub absorbed_at: Option<f64>,
    pub absorbing_action: Option<usize>,
    /// Number of state-changing jumps.
    pub event_count: u64,
    /// Clock rings, including those that left the state unchanged.
    pub activations: u64,
    pub meta: RunMeta,
}

/// Per-run summary written next to the trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub n: u32,
    pub absorbed_at: Option<f64>,
    pub absorbing_action: Option<usize>,
    pub final_state: Vec<f64>,
    pub event_count: u64,
}

impl Trajectory {
    pub(crate) fn new(m: usize, n: u32, meta: RunMeta) -> Self {
        Trajectory {
            m,
            n,
            times: Vec::new(),
            counts: Vec::new(),
            absorbed_at: None,
            absorbing_action: None,
            event_count: 0,
            activations: 0,
            meta,
        }
    }

    pub(crate) fn push(&mut self, t: f64, counts: &[u32]) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.counts.extend_from_slice(counts);
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one record")
    }

    pub fn counts_at(&self, k: usize) -> &[u32] {
        &self.counts[k * self.m..(k + 1) * self.m]
    }

    pub fn fraction(&self, k: usize, i: usize) -> f64 {
        self.counts[k * self.m + i] as f64 / self.n as f64
    }

    pub fn fractions_at(&self, k: usize) -> Vec<f64> {
        self.counts_at(k)
            .iter()
            .map(|&c| c as f64 / self.n as f64)
            .collect()
    }

    pub fn state(&self, k: usize) -> PopulationType {
        PopulationType::from_counts(self.counts_at(k).to_vec()).expect("recorded state")
    }

    pub fn final_state(&self) -> PopulationType {
        self.state(self.len() - 1)
    }

    /// Index of the record in force at time `t` (the last one with `time <= t`).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            seed: self.meta.seed,
            n: self.n,
            absorbed_at: self.absorbed_at,
            absorbing_action: self.absorbing_action,
            final_state: self.fractions_at(self.len() - 1),
            event_count: self.event_count,
        }
    }

    /// Header `t,x_0,...,x_{m-1}`, one row per record.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let rows = (0..self.len()).map(|k| (self.times[k], self.fractions_at(k)));
        write_csv_rows(w, self.m, rows)
    }
}

pub(crate) fn write_csv_rows<W, I>(mut w: W, m: usize, rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (f64, Vec<f64>)>,
{
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..m).map(|i| format!("x_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, x) in rows {
        write!(w, "{t}")?;
        for v in x {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
