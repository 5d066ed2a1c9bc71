//! JSON and flat CSV writers for experiment output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fragshap::Result;
use serde::Serialize;

use crate::outliers::DetectionCurve;
use crate::removal::RemovalCurve;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// `step,removed,accuracy`.
pub fn removal_csv(curve: &RemovalCurve) -> String {
    let mut out = String::from("step,removed,accuracy\n");
    for (step, (removed, acc)) in curve.removed.iter().zip(&curve.accuracies).enumerate() {
        writeln!(out, "{step},{removed},{acc}").unwrap();
    }
    out
}

/// `inspected,recall`.
pub fn detection_csv(curve: &DetectionCurve) -> String {
    let mut out = String::from("inspected,recall\n");
    for (k, r) in curve.inspected.iter().zip(&curve.detected_fraction) {
        writeln!(out, "{k},{r}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::removal::Order;

    #[test]
    fn csv_layouts() {
        let curve = RemovalCurve { order: Order::Random, batch: 2, removed: vec![0, 2], accuracies: vec![0.5, 0.25] };
        assert_eq!(removal_csv(&curve), "step,removed,accuracy\n0,0,0.5\n1,2,0.25\n");
        let det = DetectionCurve { inspected: vec![0, 1], detected_fraction: vec![0.0, 1.0] };
        assert_eq!(detection_csv(&det), "inspected,recall\n0,0\n1,1\n");
    }
}
