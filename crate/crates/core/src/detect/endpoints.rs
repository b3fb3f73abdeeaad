use serde::{Deserialize, Serialize};

use super::events::DetectionEvent;
use crate::error::{Error, Result};

/// Reference keyword endpoints in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointRef {
    pub start_ms: f64,
    pub end_ms: f64,
}

/// Mean absolute endpoint deviations over matched pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointStats {
    pub matched: usize,
    /// References without an overlapping event.
    pub missed: usize,
    /// Events without an overlapping reference.
    pub unmatched_events: usize,
    pub mean_start_ms: f64,
    pub mean_end_ms: f64,
}

fn overlap(e: &DetectionEvent, r: &EndpointRef) -> f64 {
    (e.end_ms().min(r.end_ms) - e.start_ms().max(r.start_ms)).max(0.0)
}

/// One-to-one matching, greedy by largest overlap. Ties go to the lowest
/// event index, then the lowest reference index. Pairs without overlap
/// never match.
pub fn match_endpoints(events: &[DetectionEvent], refs: &[EndpointRef]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = events
        .iter()
        .enumerate()
        .flat_map(|(i, e)| refs.iter().enumerate().map(move |(j, r)| (overlap(e, r), i, j)))
        .filter(|p| p.0 > 0.0)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; events.len()];
    let mut used_r = vec![false; refs.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_e[i] && !used_r[j] {
            used_e[i] = true;
            used_r[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Mean |Δstart| and |Δend| in ms over matched event/reference pairs.
pub fn endpoint_delta(events: &[DetectionEvent], refs: &[EndpointRef]) -> Result<EndpointStats> {
    let pairs = match_endpoints(events, refs);
    if pairs.is_empty() {
        return Err(Error::UndefinedMean);
    }
    let n = pairs.len() as f64;
    let (ds, de) = pairs.iter().fold((0.0, 0.0), |(s, e), &(i, j)| {
        (
            s + (events[i].start_ms() - refs[j].start_ms).abs(),
            e + (events[i].end_ms() - refs[j].end_ms).abs(),
        )
    });
    Ok(EndpointStats {
        matched: pairs.len(),
        missed: refs.len() - pairs.len(),
        unmatched_events: events.len() - pairs.len(),
        mean_start_ms: ds / n,
        mean_end_ms: de / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn event(start: usize, end: usize) -> DetectionEvent {
        DetectionEvent {
            start_frame: start,
            end_frame: end,
            peak_posterior: 0.9,
            peak_step: 0,
            detect_wall_ms: 0.0,
            end_audio_ms: end as f64 * 10.0,
        }
    }

    fn as_ref(e: &DetectionEvent) -> EndpointRef {
        EndpointRef { start_ms: e.start_ms(), end_ms: e.end_ms() }
    }

    #[test]
    fn identical_sets_have_zero_delta() {
        let events = vec![event(0, 99), event(300, 399)];
        let refs: Vec<_> = events.iter().map(as_ref).collect();
        let s = endpoint_delta(&events, &refs).unwrap();
        assert_eq!((s.mean_start_ms, s.mean_end_ms, s.matched, s.missed), (0.0, 0.0, 2, 0));
    }

    #[test]
    fn five_frame_shift_is_fifty_ms() {
        let refs = [EndpointRef { start_ms: 1000.0, end_ms: 1990.0 }];
        let s = endpoint_delta(&[event(105, 204)], &refs).unwrap();
        assert_eq!((s.mean_start_ms, s.mean_end_ms), (50.0, 50.0));
    }

    #[test]
    fn misses_are_reported_not_averaged() {
        let refs = [
            EndpointRef { start_ms: 0.0, end_ms: 990.0 },
            EndpointRef { start_ms: 5000.0, end_ms: 5990.0 },
        ];
        let s = endpoint_delta(&[event(1, 100)], &refs).unwrap();
        assert_eq!((s.matched, s.missed, s.mean_start_ms), (1, 1, 10.0));
        assert!(matches!(endpoint_delta(&[], &refs), Err(Error::UndefinedMean)));
        assert!(matches!(endpoint_delta(&[event(900, 999)], &refs[..1]), Err(Error::UndefinedMean)));
    }

    /// Maximum-total-overlap assignment by trying every permutation.
    fn best_assignment(events: &[DetectionEvent], refs: &[EndpointRef]) -> Vec<(usize, usize)> {
        fn go(
            i: usize,
            events: &[DetectionEvent],
            refs: &[EndpointRef],
            used: &mut Vec<bool>,
            cur: &mut Vec<(usize, usize)>,
            best: &mut (f64, usize, Vec<(usize, usize)>),
        ) {
            if i == events.len() {
                let total: f64 = cur.iter().map(|&(a, b)| overlap(&events[a], &refs[b])).sum();
                if total > best.0 || (total == best.0 && cur.len() > best.1) {
                    *best = (total, cur.len(), cur.clone());
                }
                return;
            }
            go(i + 1, events, refs, used, cur, best);
            for j in 0..refs.len() {
                if !used[j] && overlap(&events[i], &refs[j]) > 0.0 {
                    used[j] = true;
                    cur.push((i, j));
                    go(i + 1, events, refs, used, cur, best);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = (0.0, 0, Vec::new());
        go(0, events, refs, &mut vec![false; refs.len()], &mut Vec::new(), &mut best);
        best.2
    }

    proptest! {
        #[test]
        fn jittered_refs_match_exhaustive_assignment(
            n in 1usize..6,
            jitter in prop::collection::vec((-30i64..30, -30i64..30), 6),
            drop_ref in prop::option::of(0usize..6),
            extra_event in any::<bool>(),
        ) {
            // events 500 frames apart, each 100 frames long
            let mut events: Vec<_> = (0..n).map(|i| event(500 * i + 50, 500 * i + 149)).collect();
            let mut refs: Vec<EndpointRef> = events
                .iter()
                .zip(&jitter)
                .map(|(e, &(a, b))| EndpointRef { start_ms: e.start_ms() + 10.0 * a as f64, end_ms: e.end_ms() + 10.0 * b as f64 })
                .collect();
            if let Some(k) = drop_ref.filter(|&k| k < refs.len() && refs.len() > 1) {
                refs.remove(k);
            }
            if extra_event {
                events.push(event(500 * n + 50, 500 * n + 149));
            }
            let got = match_endpoints(&events, &refs);
            prop_assert_eq!(&got, &best_assignment(&events, &refs));
            let s = endpoint_delta(&events, &refs).unwrap();
            let oracle_start: f64 = got.iter().map(|&(i, j)| (events[i].start_ms() - refs[j].start_ms).abs()).sum::<f64>() / got.len() as f64;
            prop_assert_eq!(s.mean_start_ms, oracle_start);
            prop_assert_eq!(s.missed + s.matched, refs.len());
        }

        #[test]
        fn self_delta_is_zero(starts in prop::collection::vec(0usize..10_000, 1..8)) {
            let events: Vec<_> = starts.iter().map(|&s| event(s, s + 99)).collect();
            let refs: Vec<_> = events.iter().map(as_ref).collect();
            let s = endpoint_delta(&events, &refs).unwrap();
            prop_assert_eq!((s.mean_start_ms, s.mean_end_ms), (0.0, 0.0));
        }
    }
}
