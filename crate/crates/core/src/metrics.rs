//! Evaluation metrics computed from run telemetry.
//!
//! "Polarization" is reported as per-round alignment counts together with the
//! population variance of opinions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Side;
use crate::engine::{classify_alignment, Alignment, RunTelemetry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("telemetry has no recorded rounds")]
    NoRounds,
    #[error("telemetry lacks the round-0 snapshot")]
    NoInitialSnapshot,
    #[error("metric needs a snapshot for every round (snapshot_stride = {0})")]
    IncompleteSnapshots(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub red: usize,
    pub neutral: usize,
    pub blue: usize,
}

impl AlignmentCounts {
    pub fn total(&self) -> usize {
        self.red + self.neutral + self.blue
    }

    fn add(&mut self, a: Alignment) {
        match a {
            Alignment::RedAligned => self.red += 1,
            Alignment::Neutral => self.neutral += 1,
            Alignment::BlueAligned => self.blue += 1,
        }
    }
}

pub fn alignment_distribution(snapshot: &[f64], band: f64) -> AlignmentCounts {
    let mut counts = AlignmentCounts::default();
    for &x in snapshot {
        counts.add(classify_alignment(x, band));
    }
    counts
}

/// Mean and population variance (two-pass). Empty input gives `(0, 0)`.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationRow {
    pub round: u32,
    pub counts: AlignmentCounts,
    pub var_opinion: f64,
}

pub fn polarization_series(t: &RunTelemetry) -> Vec<PolarizationRow> {
    t.rounds
        .iter()
        .map(|r| PolarizationRow { round: r.round, counts: r.counts, var_opinion: r.var_opinion })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceEfficiency {
    /// Energy spent per net Blue-aligned node gained.
    pub value: f64,
    pub spent: f64,
    pub blue_gain: i64,
    /// Gain was zero or negative, so the divisor was clamped to 1.
    pub degenerate: bool,
}

pub fn resource_efficiency(t: &RunTelemetry, band: f64) -> Result<ResourceEfficiency, MetricsError> {
    let initial = t.initial_snapshot().ok_or(MetricsError::NoInitialSnapshot)?;
    let last = t.snapshots.last().ok_or(MetricsError::NoInitialSnapshot)?;
    let blue_start = alignment_distribution(&initial.opinions, band).blue as i64;
    let blue_end = alignment_distribution(&last.opinions, band).blue as i64;
    let spent_cents = t.initial_energy_cents - t.final_blue_energy_cents();
    let gain = blue_end - blue_start;
    let spent = spent_cents as f64 / 100.0;
    Ok(ResourceEfficiency { value: spent / gain.max(1) as f64, spent, blue_gain: gain, degenerate: gain <= 0 })
}

fn pole_class(side: Side) -> Alignment {
    match side {
        Side::Red => Alignment::RedAligned,
        Side::Blue => Alignment::BlueAligned,
    }
}

/// Per node: the share of challenging broadcasts it came through without
/// ending the round aligned with the broadcaster. A broadcast from side A
/// challenges a node that started the round aligned with A's opponent.
/// Nodes never challenged get `None`.
pub fn node_resilience(t: &RunTelemetry, band: f64) -> Result<Vec<Option<f64>>, MetricsError> {
    if !t.has_every_snapshot() {
        return Err(MetricsError::IncompleteSnapshots(t.snapshot_stride));
    }
    let mut challenged = vec![0u32; t.n];
    let mut resisted = vec![0u32; t.n];
    for (rec, pair) in t.rounds.iter().zip(t.snapshots.windows(2)) {
        if rec.potency == 0 {
            continue;
        }
        let attacker = pole_class(rec.broadcaster);
        let defender = pole_class(rec.broadcaster.opponent());
        for (i, (&before, &after)) in pair[0].opinions.iter().zip(&pair[1].opinions).enumerate() {
            if classify_alignment(before, band) == defender {
                challenged[i] += 1;
                if classify_alignment(after, band) != attacker {
                    resisted[i] += 1;
                }
            }
        }
    }
    Ok(challenged
        .iter()
        .zip(&resisted)
        .map(|(&c, &r)| (c > 0).then(|| f64::from(r) / f64::from(c)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalRow {
    pub round: u32,
    pub delta_mean_opinion: f64,
    pub class_change_rate: f64,
}

/// Round-over-round change in mean opinion and share of nodes that changed
/// class. Round 1 is measured against the initial snapshot.
pub fn temporal_evolution(t: &RunTelemetry) -> Result<Vec<TemporalRow>, MetricsError> {
    let initial = t.initial_snapshot().ok_or(MetricsError::NoInitialSnapshot)?;
    let mut prev_mean = crate::engine::quantize(mean_and_variance(&initial.opinions).0);
    Ok(t.rounds
        .iter()
        .map(|r| {
            let row = TemporalRow {
                round: r.round,
                delta_mean_opinion: r.mean_opinion - prev_mean,
                class_change_rate: r.class_change_rate(),
            };
            prev_mean = r.mean_opinion;
            row
        })
        .collect())
}

/// Final alignment counts, from the last snapshot.
pub fn final_distribution(t: &RunTelemetry, band: f64) -> Result<AlignmentCounts, MetricsError> {
    if t.rounds.is_empty() {
        return Err(MetricsError::NoRounds);
    }
    let last = t.snapshots.last().ok_or(MetricsError::NoInitialSnapshot)?;
    Ok(alignment_distribution(&last.opinions, band))
}
