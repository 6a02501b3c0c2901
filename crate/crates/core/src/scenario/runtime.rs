use crate::geo::{haversine_m, LatLon};

use super::{RunTimeCalibration, ScenarioError};

/// Segment running times between consecutive stations, in seconds:
/// `max(min_segment_time, round(distance / commercial_speed))`.
pub fn derive_run_times(stations: &[LatLon], cal: &RunTimeCalibration) -> Result<Vec<u32>, ScenarioError> {
    if stations.len() < 2 {
        return Err(ScenarioError::InvalidEdit("run times need at least 2 stations".into()));
    }
    if !(cal.commercial_speed > 0.0 && cal.commercial_speed.is_finite()) {
        return Err(ScenarioError::InvalidEdit(format!(
            "commercial speed {} must be positive",
            cal.commercial_speed
        )));
    }
    stations
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            if w[0] == w[1] && cal.min_segment_time == 0 {
                return Err(ScenarioError::DegenerateSegment { index });
            }
            let t = (haversine_m(w[0], w[1]) / cal.commercial_speed).round() as u32;
            Ok(t.max(cal.min_segment_time))
        })
        .collect()
}

/// End-to-end time of a line: running times plus one dwell per
/// intermediate station.
pub fn line_runtime(stations: &[LatLon], cal: &RunTimeCalibration, dwell_s: u32) -> Result<u32, ScenarioError> {
    let segments = derive_run_times(stations, cal)?;
    Ok(segments.iter().sum::<u32>() + dwell_s * (stations.len() as u32 - 2))
}
