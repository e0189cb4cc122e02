use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

/// Slack allowed on the feasibility test against rounding in deadline sums.
const FEASIBILITY_SLACK: f64 = 1e-9;

/// Random exchange times under the one-to-base protocol.
///
/// Every exchange comes at least `delta_lower` after the previous one and
/// each agent is served by its deadline. The next time is drawn uniformly
/// from the window that still lets an earliest-deadline-first order meet
/// every deadline; the agent is then drawn uniformly among those whose
/// choice keeps that property.
#[derive(Debug, Clone)]
pub struct CommScheduler {
    rng: ChaCha8Rng,
    delta_lower: f64,
    /// How far past an exchange the served agent's next deadline lies.
    horizons: Vec<f64>,
    last: f64,
}

impl CommScheduler {
    /// `horizons[i]` is the longest allowed gap between agent `i`'s
    /// exchanges. The first exchange happens no earlier than `delta_lower`.
    pub fn new(seed: u64, delta_lower: f64, horizons: Vec<f64>) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            delta_lower,
            horizons,
            last: 0.0,
        }
    }

    /// Latest start of an EDF sequence beginning at the earliest slot; `None`
    /// if even the earliest slot misses a deadline.
    fn latest_start(&self, deadlines: &[f64], earliest: f64) -> Option<f64> {
        let mut sorted = deadlines.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut latest = f64::INFINITY;
        for (k, &d) in sorted.iter().enumerate() {
            latest = latest.min(d - k as f64 * self.delta_lower);
        }
        (earliest <= latest + FEASIBILITY_SLACK).then_some(latest.max(earliest))
    }

    /// Picks the next `(agent, time)` given each agent's current deadline.
    pub fn next(&mut self, deadlines: &[f64]) -> Result<(usize, f64), SimError> {
        let earliest = self.last + self.delta_lower;
        let latest = self.latest_start(deadlines, earliest).ok_or_else(|| {
            SimError::Schedule(format!("no feasible exchange after t = {}", self.last))
        })?;
        let time = if latest > earliest {
            self.rng.gen_range(earliest..=latest)
        } else {
            earliest
        };
        let mut after = deadlines.to_vec();
        let eligible: Vec<usize> = (0..deadlines.len())
            .filter(|&a| {
                after.copy_from_slice(deadlines);
                after[a] = time + self.horizons[a];
                deadlines[a] + FEASIBILITY_SLACK >= time
                    && self.latest_start(&after, time + self.delta_lower).is_some()
            })
            .collect();
        let agent = match eligible.choose(&mut self.rng) {
            Some(&a) => a,
            // rounding only: serve the most urgent agent
            None => (0..deadlines.len())
                .min_by(|&a, &b| deadlines[a].total_cmp(&deadlines[b]))
                .expect("agents exist"),
        };
        self.last = time;
        Ok((agent, time))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Runs the scheduler the way the harness does and returns the events.
    fn drive(seed: u64, m: usize, lower: f64, bar: f64, count: usize) -> Vec<(usize, f64)> {
        let mut s = CommScheduler::new(seed, lower, vec![bar; m]);
        let mut last_contact = vec![0.0; m];
        let mut out = Vec::new();
        for _ in 0..count {
            let deadlines: Vec<f64> = last_contact.iter().map(|w| w + bar).collect();
            let (a, t) = s.next(&deadlines).unwrap();
            last_contact[a] = t;
            out.push((a, t));
        }
        out
    }

    fn check(events: &[(usize, f64)], m: usize, lower: f64, bar: f64) {
        let mut last = vec![0.0; m];
        let mut prev = 0.0;
        for &(a, t) in events {
            assert!(
                t - prev >= lower - 1e-9,
                "global gap {} too short",
                t - prev
            );
            assert!(
                t - last[a] <= bar + 1e-9,
                "agent {a} waited {}",
                t - last[a]
            );
            last[a] = t;
            prev = t;
        }
        let end = events.last().unwrap().1;
        for (a, &w) in last.iter().enumerate() {
            assert!(end - w <= bar + 1e-9, "agent {a} starved");
        }
    }

    #[test]
    fn single_agent_gaps_stay_in_bounds() {
        let ev = drive(4, 1, 1.0, 10.0, 500);
        check(&ev, 1, 1.0, 10.0);
        assert!(ev.iter().all(|&(a, _)| a == 0));
    }

    #[test]
    fn two_agents_thousand_events() {
        let ev = drive(9, 2, 1.0, 10.0, 1000);
        check(&ev, 2, 1.0, 10.0);
        assert!(ev.iter().any(|&(a, _)| a == 0) && ev.iter().any(|&(a, _)| a == 1));
    }

    #[test]
    fn tight_schedule_is_still_met() {
        let ev = drive(2, 4, 1.0, 4.0, 2000);
        check(&ev, 4, 1.0, 4.0);
    }

    #[test]
    fn same_seed_same_schedule() {
        assert_eq!(drive(17, 3, 1.0, 10.0, 300), drive(17, 3, 1.0, 10.0, 300));
        assert_ne!(drive(17, 3, 1.0, 10.0, 300), drive(18, 3, 1.0, 10.0, 300));
    }

    #[test]
    fn first_exchange_respects_lower_bound() {
        let ev = drive(1, 3, 2.0, 10.0, 1);
        assert!(ev[0].1 >= 2.0);
    }
}
