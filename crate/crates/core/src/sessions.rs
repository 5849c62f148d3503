//! Session segmentation and venue n-gram extraction.
//!
//! A session is a maximal run of one user's consecutive check-ins where
//! each gap between neighbors is at most `delta_t` seconds. Sub-sequences
//! are the contiguous venue n-grams of a session, the analogue of a
//! word's character n-grams.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::Error;
use crate::ingest::{CheckinRecord, Dataset, UserId, VenueId};
use crate::Result;

/// An ordered venue run produced by the gap rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub user_id: UserId,
    pub venue_ids: Vec<VenueId>,
    pub start_time: i64,
    pub end_time: i64,
}

impl Session {
    pub fn len(&self) -> usize {
        self.venue_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venue_ids.is_empty()
    }
}

/// A contiguous venue n-gram of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSequence {
    pub venue_ids: Vec<VenueId>,
}

/// Parameters for segmentation and n-gram extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationConfig {
    /// Maximum gap, in seconds, between check-ins of one session.
    pub delta_t_secs: i64,
    pub min_n: usize,
    pub max_n: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        // 5 hours, the value the gap statistics of the reference dataset
        // motivate.
        SegmentationConfig {
            delta_t_secs: 18_000,
            min_n: 1,
            max_n: 5,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_t_secs <= 0 {
            return Err(Error::InvalidArgument(format!(
                "delta_t must be positive, got {}",
                self.delta_t_secs
            )));
        }
        if self.min_n == 0 || self.min_n > self.max_n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= min_n <= max_n, got min_n={} max_n={}",
                self.min_n, self.max_n
            )));
        }
        Ok(())
    }
}

/// Splits one user's ordered check-ins into sessions.
///
/// Consecutive check-ins stay in the same session while their gap is at
/// most `delta_t` seconds (a gap exactly equal to `delta_t` does not
/// split). Concatenating the sessions reproduces the input venue order.
pub fn segment_user_history(checkins: &[CheckinRecord], delta_t: i64) -> Vec<Session> {
    let mut sessions = Vec::new();
    let mut current: Option<Session> = None;

    for checkin in checkins {
        match current.as_mut() {
            Some(session) if checkin.timestamp - session.end_time <= delta_t => {
                session.venue_ids.push(checkin.venue_id.clone());
                session.end_time = checkin.timestamp;
            }
            _ => {
                if let Some(done) = current.take() {
                    sessions.push(done);
                }
                current = Some(Session {
                    user_id: checkin.user_id.clone(),
                    venue_ids: vec![checkin.venue_id.clone()],
                    start_time: checkin.timestamp,
                    end_time: checkin.timestamp,
                });
            }
        }
    }
    if let Some(done) = current.take() {
        sessions.push(done);
    }
    sessions
}

/// All contiguous slices of `items` with length `min_n..=max_n`, shortest
/// first and left to right within each length. `max_n` is clipped to the
/// slice length; duplicates are retained.
pub fn ngram_slices<'a, T>(items: &'a [T], min_n: usize, max_n: usize) -> Result<Vec<&'a [T]>> {
    if min_n == 0 || min_n > max_n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= min_n <= max_n, got min_n={min_n} max_n={max_n}"
        )));
    }
    let mut grams = Vec::new();
    for n in min_n..=max_n.min(items.len()) {
        for start in 0..=(items.len() - n) {
            grams.push(&items[start..start + n]);
        }
    }
    Ok(grams)
}

/// Enumerates the venue n-grams of a session as [`SubSequence`]s.
pub fn extract_ngrams(session: &Session, min_n: usize, max_n: usize) -> Result<Vec<SubSequence>> {
    Ok(ngram_slices(&session.venue_ids, min_n, max_n)?
        .into_iter()
        .map(|slice| SubSequence {
            venue_ids: slice.to_vec(),
        })
        .collect())
}

/// Gap statistics over same-day consecutive check-ins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTStats {
    /// Mean of the per-user mean gaps, in seconds.
    pub mean_secs: f64,
    /// Population standard deviation of the per-user means.
    pub stddev_secs: f64,
    /// Users that contributed at least one same-day gap.
    pub n_users: usize,
}

const SECS_PER_DAY: i64 = 86_400;

/// Measures the gap between consecutive check-ins made on the same UTC
/// calendar day, per user, then aggregates the per-user mean gaps.
///
/// Errors if no user has two check-ins on one day.
pub fn estimate_delta_t(dataset: &Dataset) -> Result<DeltaTStats> {
    let mut user_means = Vec::new();

    for history in dataset.histories.values() {
        let mut gaps = Vec::new();
        for pair in history.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.timestamp.div_euclid(SECS_PER_DAY) == b.timestamp.div_euclid(SECS_PER_DAY) {
                gaps.push((b.timestamp - a.timestamp) as f64);
            }
        }
        if !gaps.is_empty() {
            user_means.push(gaps.iter().sum::<f64>() / gaps.len() as f64);
        }
    }

    if user_means.is_empty() {
        return Err(Error::InsufficientData(
            "no user has two check-ins on the same day".into(),
        ));
    }

    let n = user_means.len() as f64;
    let mean = user_means.iter().sum::<f64>() / n;
    let variance = user_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    Ok(DeltaTStats {
        mean_secs: mean,
        stddev_secs: variance.sqrt(),
        n_users: user_means.len(),
    })
}

/// Writes one session per line: `user_id<TAB>v1,v2,…<TAB>start<TAB>end`.
pub fn write_sessions_dump<W: Write>(
    sessions_by_user: &BTreeMap<UserId, Vec<Session>>,
    sink: &mut W,
) -> Result<()> {
    for sessions in sessions_by_user.values() {
        for session in sessions {
            writeln!(
                sink,
                "{}\t{}\t{}\t{}",
                session.user_id,
                session.venue_ids.join(","),
                session.start_time,
                session.end_time
            )?;
        }
    }
    Ok(())
}
