//! Trajectory log serialization: JSON-lines, one record per step.
//!
//! Record shape:
//! `{"user_id": "...", "arm": "A"|"B", "t": 1, "state": [...], "action": 0,
//!   "reward": 0.0, "logged_propensity": 0.5}`
//!
//! Records for a user need not be contiguous; the reader groups by user id
//! (first-appearance order) and sorts each user's records by `t`. The writer
//! emits the canonical form: trajectories in dataset order, steps by `t`,
//! fixed key order, shortest round-trip float formatting.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Arm, Dataset, Step, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    user_id: String,
    arm: Arm,
    t: usize,
    state: Vec<f64>,
    action: usize,
    reward: f64,
    logged_propensity: f64,
}

/// Parse a JSON-lines byte stream into a two-arm dataset.
pub fn read_trajectory_log<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut order: Vec<String> = Vec::new();
    let mut by_user: std::collections::HashMap<String, Vec<Record>> = std::collections::HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if rec.t == 0 {
            return Err(Error::Parse { line: lineno, message: "step index t must be >= 1".into() });
        }
        if !by_user.contains_key(&rec.user_id) {
            order.push(rec.user_id.clone());
        }
        by_user.entry(rec.user_id.clone()).or_default().push(rec);
    }

    let mut trajectories = Vec::with_capacity(order.len());
    for uid in order {
        let mut recs = by_user.remove(&uid).expect("user collected above");
        recs.sort_by_key(|r| r.t);
        for w in recs.windows(2) {
            if w[0].t == w[1].t {
                return Err(Error::Integrity(format!(
                    "duplicate (user_id, t) = ({uid}, {})",
                    w[0].t
                )));
            }
        }
        if recs[0].t != 1 || recs.last().unwrap().t != recs.len() {
            return Err(Error::Integrity(format!(
                "user {uid}: step indices must form 1..=T without gaps"
            )));
        }
        let arm = recs[0].arm;
        if recs.iter().any(|r| r.arm != arm) {
            return Err(Error::Integrity(format!("user {uid}: inconsistent arm labels")));
        }
        let steps = recs
            .into_iter()
            .map(|r| Step::new(r.state, r.action, r.reward, r.logged_propensity))
            .collect::<Result<Vec<_>>>()?;
        trajectories.push(Trajectory::new(uid, arm, steps)?);
    }
    Dataset::new(trajectories)
}

/// Write a dataset in canonical JSON-lines form.
pub fn write_trajectory_log<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    for traj in dataset.trajectories() {
        for (i, step) in traj.steps.iter().enumerate() {
            let rec = Record {
                user_id: traj.user_id.clone(),
                arm: traj.arm,
                t: i + 1,
                state: step.state.clone(),
                action: step.action,
                reward: step.reward,
                logged_propensity: step.logged_propensity,
            };
            serde_json::to_writer(&mut writer, &rec)
                .map_err(|e| Error::Integrity(format!("serialize failure: {e}")))?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Serialize a dataset to bytes in canonical form.
pub fn to_log_bytes(dataset: &Dataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trajectory_log(dataset, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_gives_empty_dataset() {
        let ds = read_trajectory_log(&b""[..]).unwrap();
        assert_eq!((ds.n_a(), ds.n_b()), (0, 0));
    }

    #[test]
    fn grouping_and_ordering() {
        // Two users, one per arm, 3 steps each, records interleaved and shuffled.
        let lines = r#"{"user_id":"u2","arm":"B","t":2,"state":[0.5],"action":1,"reward":0.0,"logged_propensity":0.4}
{"user_id":"u1","arm":"A","t":1,"state":[0.1],"action":0,"reward":1.0,"logged_propensity":0.5}
{"user_id":"u2","arm":"B","t":1,"state":[0.6],"action":0,"reward":0.5,"logged_propensity":0.6}
{"user_id":"u1","arm":"A","t":3,"state":[0.2],"action":1,"reward":0.0,"logged_propensity":0.5}
{"user_id":"u2","arm":"B","t":3,"state":[0.7],"action":1,"reward":1.0,"logged_propensity":0.4}
{"user_id":"u1","arm":"A","t":2,"state":[0.3],"action":0,"reward":1.0,"logged_propensity":0.5}
"#;
        let ds = read_trajectory_log(lines.as_bytes()).unwrap();
        assert_eq!((ds.n_a(), ds.n_b()), (1, 1));
        assert!(ds.trajectories().iter().all(|t| t.horizon() == 3));
        assert_eq!(ds.trajectories()[0].user_id, "u2");
        assert!((ds.trajectories()[0].steps[0].state[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn malformed_line_reports_number() {
        let lines = "{\"user_id\":\"u\",\"arm\":\"A\",\"t\":1,\"state\":[],\"action\":0,\"reward\":0.0,\"logged_propensity\":0.5}\nnot json\n";
        match read_trajectory_log(lines.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_step_index_rejected() {
        let lines = r#"{"user_id":"u","arm":"A","t":1,"state":[],"action":0,"reward":0.0,"logged_propensity":0.5}
{"user_id":"u","arm":"A","t":1,"state":[],"action":1,"reward":0.0,"logged_propensity":0.5}
"#;
        assert!(matches!(read_trajectory_log(lines.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn mixed_state_dims_rejected() {
        let lines = r#"{"user_id":"u","arm":"A","t":1,"state":[0.1],"action":0,"reward":0.0,"logged_propensity":0.5}
{"user_id":"v","arm":"B","t":1,"state":[0.1,0.2],"action":0,"reward":0.0,"logged_propensity":0.5}
"#;
        assert!(matches!(read_trajectory_log(lines.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn write_read_roundtrip_canonical() {
        let lines = r#"{"user_id":"b0","arm":"B","t":1,"state":[0.25,0.5],"action":2,"reward":1.0,"logged_propensity":0.125}
{"user_id":"a0","arm":"A","t":1,"state":[0.1,0.9],"action":0,"reward":0.0,"logged_propensity":0.3}
{"user_id":"a0","arm":"A","t":2,"state":[0.2,0.8],"action":1,"reward":1.0,"logged_propensity":0.7}
"#;
        let ds = read_trajectory_log(lines.as_bytes()).unwrap();
        let bytes = to_log_bytes(&ds).unwrap();
        let ds2 = read_trajectory_log(&bytes[..]).unwrap();
        assert_eq!(ds, ds2);
        // Canonical reserialization is byte-identical.
        assert_eq!(bytes, to_log_bytes(&ds2).unwrap());
    }
}
