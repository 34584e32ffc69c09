#[derive(Debug, Clone, PartialEq)]
pub struct EntryReport {
    pub radius: f64,
    /// First sample time after which every value stays within the radius.
    pub entry_time: Option<f64>,
    /// Last sample time with a value above the radius.
    pub last_exceedance: Option<f64>,
}

impl EntryReport {
    pub fn entered(&self) -> bool {
        self.entry_time.is_some()
    }
}

/// Smallest sample time `t_B` with `value(t) ≤ radius` for all samples from
/// `t_B` on. `None` if the last sample exceeds the radius.
pub fn absorbing_entry_time(series: &[(f64, f64)], radius: f64) -> EntryReport {
    let last_bad = series.iter().rposition(|&(_, v)| v > radius || v.is_nan());
    let entry_time = match last_bad {
        None => series.first().map(|s| s.0),
        Some(i) => series.get(i + 1).map(|s| s.0),
    };
    EntryReport {
        radius,
        entry_time,
        last_exceedance: last_bad.map(|i| series[i].0),
    }
}
