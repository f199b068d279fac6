//! Episode metrics CSV. The file is a pure function of the run (floats are
//! written as shortest-round-trip decimals), so identical seeds produce
//! byte-identical logs; wall-clock timings go to a separate file that is
//! never compared.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::mappo::EpisodeStats;

pub const METRICS_HEADER: &str = "episode,steps,mean_mu_reward,mean_uav_reward,\
weighted_energy,jain_index,penalty_total,mean_mu_energy,mean_uav_energy";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("bad row: {0}")]
    BadRow(String),
}

fn fmt(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    let mut s = format!("{v}");
    if !s.contains(['.', 'e', 'n', 'i']) {
        s.push_str(".0");
    }
    s
}

pub fn to_csv(rows: &[EpisodeStats]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.episode,
            r.steps,
            fmt(r.mean_mu_reward),
            fmt(r.mean_uav_reward),
            fmt(r.weighted_energy),
            fmt(r.jain_index),
            fmt(r.penalty_total),
            fmt(r.mean_mu_energy),
            fmt(r.mean_uav_energy),
        ));
    }
    out
}

pub fn write_csv(path: &Path, rows: &[EpisodeStats]) -> Result<(), MetricsError> {
    fs::write(path, to_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<EpisodeStats>, MetricsError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => return Err(MetricsError::BadHeader(other.unwrap_or("").to_string())),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(MetricsError::BadRow(line.to_string()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| MetricsError::BadRow(line.to_string()));
        rows.push(EpisodeStats {
            episode: f[0].parse().map_err(|_| MetricsError::BadRow(line.to_string()))?,
            steps: f[1].parse().map_err(|_| MetricsError::BadRow(line.to_string()))?,
            mean_mu_reward: num(f[2])?,
            mean_uav_reward: num(f[3])?,
            weighted_energy: num(f[4])?,
            jain_index: num(f[5])?,
            penalty_total: num(f[6])?,
            mean_mu_energy: num(f[7])?,
            mean_uav_energy: num(f[8])?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<EpisodeStats>, MetricsError> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Mean and (population) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ep: u64, x: f64) -> EpisodeStats {
        EpisodeStats {
            episode: ep,
            steps: 300,
            mean_mu_reward: -x,
            mean_uav_reward: -0.2 * x,
            weighted_energy: x,
            jain_index: 0.8,
            penalty_total: 0.1 * x,
            mean_mu_energy: 0.9 * x,
            mean_uav_energy: 118.0 + x,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![row(0, 0.123456789012345678), row(1, 1e-17), row(2, 118.11)];
        let text = to_csv(&rows);
        let back = parse_csv(&text).unwrap();
        assert_eq!(rows, back);
        // Re-serialization is byte-identical.
        assert_eq!(to_csv(&back), text);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_csv("nope\n1,2,3\n").is_err());
        let text = format!("{METRICS_HEADER}\n1,2,3\n");
        assert!(parse_csv(&text).is_err());
    }

    #[test]
    fn mean_std_anchors() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((m - 5.0).abs() < 1e-12);
        assert!((s - 2.0).abs() < 1e-12);
    }
}
