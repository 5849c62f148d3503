//! Check-in log parsing, filtering and temporal train/test splitting.
//!
//! Input is a UTF-8 TSV with one check-in per line:
//! `user_id<TAB>venue_id<TAB>unix_timestamp_seconds`. LF and CRLF line
//! endings are both accepted.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::embedding::TOKEN_SEPARATOR;
use crate::error::Error;
use crate::Result;

pub type UserId = String;
pub type VenueId = String;

/// One (user, venue, timestamp) event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckinRecord {
    pub user_id: UserId,
    pub venue_id: VenueId,
    /// Seconds since the Unix epoch, never negative.
    pub timestamp: i64,
}

/// Per-user check-in histories plus global venue visit counts.
///
/// Histories are keyed by user id and sorted ascending by timestamp;
/// ties keep input order. `venue_counts` is the multiset count of
/// `venue_id` over all records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub histories: BTreeMap<UserId, Vec<CheckinRecord>>,
    pub venue_counts: BTreeMap<VenueId, u64>,
}

impl Dataset {
    pub fn n_users(&self) -> usize {
        self.histories.len()
    }

    pub fn n_venues(&self) -> usize {
        self.venue_counts.len()
    }

    pub fn n_checkins(&self) -> usize {
        self.histories.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    fn insert(&mut self, record: CheckinRecord) {
        *self.venue_counts.entry(record.venue_id.clone()).or_insert(0) += 1;
        self.histories
            .entry(record.user_id.clone())
            .or_default()
            .push(record);
    }

    fn sort_histories(&mut self) {
        for history in self.histories.values_mut() {
            // Stable: equal timestamps keep input order.
            history.sort_by_key(|r| r.timestamp);
        }
    }

    fn recount_venues(&mut self) {
        self.venue_counts.clear();
        for history in self.histories.values() {
            for record in history {
                *self.venue_counts.entry(record.venue_id.clone()).or_insert(0) += 1;
            }
        }
    }
}

/// Thresholds for dropping rare venues and inactive users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterConfig {
    /// Venues with fewer total visits than this are removed.
    pub min_venue_visits: u64,
    /// Users with this many or fewer remaining check-ins are removed.
    pub min_user_checkins_exclusive: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_venue_visits: 5,
            min_user_checkins_exclusive: 10,
        }
    }
}

/// A per-user temporal split of a dataset.
///
/// For every retained user, each train timestamp precedes (or equals)
/// each test timestamp, and train followed by test reproduces the user's
/// full history.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
    /// Users excluded because their train or test part would be empty.
    pub users_dropped: u64,
}

fn validate_id(field: &str, value: &str, line: usize) -> Result<()> {
    if value.is_empty() {
        return Err(Error::Parse {
            line,
            reason: format!("empty {field}"),
        });
    }
    if value
        .chars()
        .any(|c| c.is_whitespace() || c == TOKEN_SEPARATOR)
    {
        return Err(Error::Parse {
            line,
            reason: format!("{field} {value:?} contains whitespace or '{TOKEN_SEPARATOR}'"),
        });
    }
    Ok(())
}

/// Parses a check-in log into a [`Dataset`].
///
/// Empty input yields an empty dataset. A malformed line (wrong field
/// count, bad timestamp, invalid id) is an error carrying its 1-based
/// line number.
pub fn parse_checkin_file<R: Read>(source: R) -> Result<Dataset> {
    let reader = BufReader::new(source);
    let mut dataset = Dataset::default();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }

        let mut fields = line.split('\t');
        let (user, venue, ts) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(u), Some(v), Some(t), None) => (u, v, t),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!(
                        "expected 3 tab-separated fields, got {}",
                        line.split('\t').count()
                    ),
                })
            }
        };

        validate_id("user_id", user, line_no)?;
        validate_id("venue_id", venue, line_no)?;
        let timestamp: i64 = ts.parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("timestamp {ts:?} is not an integer"),
        })?;
        if timestamp < 0 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("timestamp {timestamp} is negative"),
            });
        }

        dataset.insert(CheckinRecord {
            user_id: user.to_string(),
            venue_id: venue.to_string(),
            timestamp,
        });
    }

    dataset.sort_histories();
    Ok(dataset)
}

/// Writes a dataset back to TSV. Re-parsing the output reproduces the
/// dataset exactly.
pub fn write_tsv<W: Write>(dataset: &Dataset, sink: &mut W) -> Result<()> {
    for history in dataset.histories.values() {
        for record in history {
            writeln!(
                sink,
                "{}\t{}\t{}",
                record.user_id, record.venue_id, record.timestamp
            )?;
        }
    }
    Ok(())
}

/// Removes rare venues, then inactive users, each in a single pass.
///
/// First every record whose venue has a total visit count below
/// `min_venue_visits` is dropped; then every user left with at most
/// `min_user_checkins_exclusive` check-ins is dropped. Venue counts are
/// recomputed afterwards. The two passes run exactly once, in that
/// order, with no fixpoint iteration.
pub fn filter_dataset(dataset: &Dataset, config: &FilterConfig) -> Dataset {
    let mut filtered = Dataset::default();
    for (user, history) in &dataset.histories {
        let kept: Vec<CheckinRecord> = history
            .iter()
            .filter(|r| dataset.venue_counts[&r.venue_id] >= config.min_venue_visits)
            .cloned()
            .collect();
        if kept.len() as u64 > config.min_user_checkins_exclusive {
            filtered.histories.insert(user.clone(), kept);
        }
    }
    filtered.recount_venues();
    filtered
}

fn train_len(ratio: f64, n: usize) -> usize {
    let exact = ratio * n as f64;
    // Snap values that sit a rounding error below an integer.
    let snapped = exact.round();
    if (exact - snapped).abs() < 1e-9 {
        snapped as usize
    } else {
        exact.floor() as usize
    }
}

/// Splits each user's history into a leading train part and a trailing
/// test part.
///
/// A user with `n` check-ins contributes the first `floor(ratio * n)` to
/// train and the rest to test. Users whose train or test part would be
/// empty are dropped and counted in `users_dropped`.
pub fn temporal_split(dataset: &Dataset, ratio: f64) -> Result<SplitDataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }

    let mut train = Dataset::default();
    let mut test = Dataset::default();
    let mut users_dropped = 0u64;

    for (user, history) in &dataset.histories {
        let n = history.len();
        let n_train = train_len(ratio, n);
        if n_train == 0 || n_train >= n {
            users_dropped += 1;
            continue;
        }
        train
            .histories
            .insert(user.clone(), history[..n_train].to_vec());
        test.histories
            .insert(user.clone(), history[n_train..].to_vec());
    }

    train.recount_venues();
    test.recount_venues();
    Ok(SplitDataset {
        train,
        test,
        ratio,
        users_dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(user: &str, venue: &str, ts: i64) -> CheckinRecord {
        CheckinRecord {
            user_id: user.to_string(),
            venue_id: venue.to_string(),
            timestamp: ts,
        }
    }

    fn dataset_from(records: &[(&str, &str, i64)]) -> Dataset {
        let tsv: String = records
            .iter()
            .map(|(u, v, t)| format!("{u}\t{v}\t{t}\n"))
            .collect();
        parse_checkin_file(tsv.as_bytes()).unwrap()
    }

    #[test]
    fn parse_single_record() {
        let ds = parse_checkin_file("u1\tv1\t1000\n".as_bytes()).unwrap();
        assert_eq!(ds.histories["u1"], vec![record("u1", "v1", 1000)]);
        assert_eq!(ds.venue_counts["v1"], 1);
    }

    #[test]
    fn parse_sorts_by_timestamp() {
        let ds = parse_checkin_file("u1\tv2\t2000\nu1\tv1\t1000\n".as_bytes()).unwrap();
        assert_eq!(
            ds.histories["u1"],
            vec![record("u1", "v1", 1000), record("u1", "v2", 2000)]
        );
    }

    #[test]
    fn parse_keeps_input_order_on_ties() {
        let ds = parse_checkin_file("u1\tva\t5\nu1\tvb\t5\nu1\tvc\t5\n".as_bytes()).unwrap();
        let venues: Vec<&str> = ds.histories["u1"].iter().map(|r| r.venue_id.as_str()).collect();
        assert_eq!(venues, ["va", "vb", "vc"]);
    }

    #[test]
    fn parse_rejects_missing_field() {
        let err = parse_checkin_file("u1\tv1\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_bad_timestamp_with_line_number() {
        let err = parse_checkin_file("u1\tv1\t10\nu2\tv2\tlater\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_negative_timestamp() {
        assert!(parse_checkin_file("u1\tv1\t-5\n".as_bytes()).is_err());
    }

    #[test]
    fn parse_rejects_separator_in_venue_id() {
        assert!(parse_checkin_file("u1\tv1,v2\t10\n".as_bytes()).is_err());
    }

    #[test]
    fn parse_empty_input_is_empty_dataset() {
        let ds = parse_checkin_file("".as_bytes()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn parse_accepts_crlf() {
        let ds = parse_checkin_file("u1\tv1\t10\r\nu1\tv2\t20\r\n".as_bytes()).unwrap();
        assert_eq!(ds.n_checkins(), 2);
    }

    #[test]
    fn tsv_round_trip() {
        let ds = dataset_from(&[
            ("u1", "v1", 10),
            ("u1", "v2", 5),
            ("u2", "v1", 7),
            ("u2", "v3", 7),
        ]);
        let mut buf = Vec::new();
        write_tsv(&ds, &mut buf).unwrap();
        let reparsed = parse_checkin_file(buf.as_slice()).unwrap();
        assert_eq!(ds, reparsed);
    }

    #[test]
    fn filter_removes_rare_venues() {
        // v appears 4 times in total: every record of it goes away.
        let mut records = vec![("u1", "v", 1), ("u1", "v", 2), ("u2", "v", 3), ("u2", "v", 4)];
        for i in 0..12 {
            records.push(("u1", "w", 10 + i));
        }
        for i in 0..12 {
            records.push(("u2", "w", 10 + i));
        }
        let ds = dataset_from(&records);
        let filtered = filter_dataset(
            &ds,
            &FilterConfig {
                min_venue_visits: 5,
                min_user_checkins_exclusive: 10,
            },
        );
        assert!(!filtered.venue_counts.contains_key("v"));
        assert_eq!(filtered.venue_counts["w"], 24);
    }

    #[test]
    fn filter_user_boundary_is_exclusive() {
        // u10 keeps exactly 10 check-ins, u11 keeps 11: only u11 survives.
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(("u10", "w", i));
        }
        for i in 0..11 {
            records.push(("u11", "w", i));
        }
        let ds = dataset_from(&records);
        let filtered = filter_dataset(&ds, &FilterConfig::default());
        assert!(!filtered.histories.contains_key("u10"));
        assert_eq!(filtered.histories["u11"].len(), 11);
    }

    #[test]
    fn filter_empty_dataset() {
        let filtered = filter_dataset(&Dataset::default(), &FilterConfig::default());
        assert!(filtered.is_empty());
    }

    #[test]
    fn filter_enforces_minimums() {
        let mut records = Vec::new();
        for i in 0..3 {
            records.push(("u1", "rare", i));
        }
        for i in 0..15 {
            records.push(("u1", "hub", 100 + i));
        }
        for i in 0..8 {
            records.push(("u2", "hub", 200 + i));
        }
        let ds = dataset_from(&records);
        let cfg = FilterConfig::default();
        let filtered = filter_dataset(&ds, &cfg);
        assert!(filtered
            .venue_counts
            .values()
            .all(|&c| c >= cfg.min_venue_visits));
        assert!(filtered
            .histories
            .values()
            .all(|h| h.len() as u64 > cfg.min_user_checkins_exclusive));
    }

    #[test]
    fn split_80_20() {
        let records: Vec<(&str, &str, i64)> = (0..10).map(|i| ("u1", "v", i)).collect();
        let ds = dataset_from(&records);
        let split = temporal_split(&ds, 0.8).unwrap();
        assert_eq!(split.train.histories["u1"].len(), 8);
        assert_eq!(split.test.histories["u1"].len(), 2);
        assert_eq!(split.users_dropped, 0);
    }

    #[test]
    fn split_floors_train_side() {
        let records: Vec<(&str, &str, i64)> = (0..11).map(|i| ("u1", "v", i)).collect();
        let ds = dataset_from(&records);
        let split = temporal_split(&ds, 0.8).unwrap();
        assert_eq!(split.train.histories["u1"].len(), 8);
        assert_eq!(split.test.histories["u1"].len(), 3);
    }

    #[test]
    fn split_drops_single_checkin_users() {
        let ds = dataset_from(&[("u1", "v", 1)]);
        let split = temporal_split(&ds, 0.8).unwrap();
        assert!(split.train.is_empty());
        assert!(split.test.is_empty());
        assert_eq!(split.users_dropped, 1);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let ds = dataset_from(&[("u1", "v", 1), ("u1", "v", 2)]);
        assert!(temporal_split(&ds, 0.0).is_err());
        assert!(temporal_split(&ds, 1.0).is_err());
        assert!(temporal_split(&ds, -0.2).is_err());
    }

    #[test]
    fn split_preserves_record_multiset() {
        let records: Vec<(&str, &str, i64)> =
            (0..17).map(|i| ("u1", if i % 3 == 0 { "a" } else { "b" }, i)).collect();
        let ds = dataset_from(&records);
        let split = temporal_split(&ds, 0.8).unwrap();
        let mut joined = split.train.histories["u1"].clone();
        joined.extend(split.test.histories["u1"].clone());
        assert_eq!(joined, ds.histories["u1"]);
        let train_max = split.train.histories["u1"].iter().map(|r| r.timestamp).max();
        let test_min = split.test.histories["u1"].iter().map(|r| r.timestamp).min();
        assert!(train_max <= test_min);
    }

    #[test]
    fn train_len_is_exact_floor() {
        assert_eq!(train_len(0.8, 10), 8);
        assert_eq!(train_len(0.8, 11), 8);
        assert_eq!(train_len(0.7, 10), 7);
        assert_eq!(train_len(0.5, 3), 1);
        assert_eq!(train_len(0.8, 1), 0);
    }
}
