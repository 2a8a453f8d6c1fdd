use alloc::format;
use alloc::vec::Vec;

use super::{grid_index, grid_time, DemoRecord, Demonstration, SourceSpan};
use crate::domain::is_idle;
use crate::error::{Error, Result};

/// Keep the records on `[t0, t1]` (inclusive, both on the 10 Hz grid) and
/// rebase time to 0. Both boundary records must be idle.
pub fn trim(demo: &Demonstration, t0: f64, t1: f64) -> Result<Demonstration> {
    let n = demo.records.len();
    let k0 = grid_index(t0)
        .ok_or_else(|| Error::Range(format!("t0 = {t0} is not on the 0.1 s grid")))?;
    let k1 = grid_index(t1)
        .ok_or_else(|| Error::Range(format!("t1 = {t1} is not on the 0.1 s grid")))?;
    if k0 >= k1 {
        return Err(Error::Range(format!("t0 = {t0} must be before t1 = {t1}")));
    }
    if k1 >= n {
        return Err(Error::Range(format!(
            "t1 = {t1} is past the last record at {:.1}",
            grid_time(n.saturating_sub(1))
        )));
    }
    for k in [k0, k1] {
        if !is_idle(demo.records[k].action) {
            return Err(Error::Boundary { t: grid_time(k) });
        }
    }

    let records = demo.records[k0..=k1]
        .iter()
        .enumerate()
        .map(|(i, r)| DemoRecord {
            t: grid_time(i),
            ..*r
        })
        .collect();
    let mut meta = demo.meta.clone();
    meta.sources = slice_sources(&demo.meta.sources, k0, k1 + 1);
    Ok(Demonstration { meta, records })
}

/// Provenance spans covering record indices `a..b` of a demo.
fn slice_sources(sources: &[SourceSpan], a: usize, b: usize) -> Vec<SourceSpan> {
    let mut out = Vec::new();
    let mut at = 0;
    for s in sources {
        let (lo, hi) = (at.max(a), (at + s.len).min(b));
        if lo < hi {
            out.push(SourceSpan {
                start: s.start + (lo - at),
                len: hi - lo,
                ..s.clone()
            });
        }
        at += s.len;
    }
    out
}

/// Concatenate segments in order with continuous 0.1 s timestamps. At every
/// junction the last record before and the first record after must be idle.
/// Junction `i` sits between `segments[i-1]` and `segments[i]`.
pub fn merge(segments: &[Demonstration]) -> Result<Demonstration> {
    let (first, rest) = segments
        .split_first()
        .ok_or_else(|| Error::Size("nothing to merge".into()))?;
    if rest.is_empty() {
        return Ok(first.clone());
    }
    for (i, seg) in segments.iter().enumerate() {
        if seg.records.is_empty() {
            return Err(Error::Size(format!("segment {i} is empty")));
        }
        if seg.meta.controller != first.meta.controller {
            return Err(Error::Incompatible(format!(
                "segment {i} is for a different controller"
            )));
        }
        if seg.meta.rates != first.meta.rates {
            return Err(Error::Incompatible(format!(
                "segment {i} has different sampling rates"
            )));
        }
    }
    for i in 1..segments.len() {
        let before = segments[i - 1].records.last().expect("checked non-empty");
        if !is_idle(before.action) {
            return Err(Error::Junction {
                index: i,
                side: "end",
            });
        }
        if !is_idle(segments[i].records[0].action) {
            return Err(Error::Junction {
                index: i,
                side: "start",
            });
        }
    }

    let mut records = Vec::with_capacity(segments.iter().map(|s| s.records.len()).sum());
    let mut meta = first.meta.clone();
    meta.sources.clear();
    for seg in segments {
        for r in &seg.records {
            records.push(DemoRecord {
                t: grid_time(records.len()),
                ..*r
            });
        }
        meta.complete &= seg.meta.complete;
        for s in &seg.meta.sources {
            match meta.sources.last_mut() {
                Some(last) if last.continues(s) => last.len += s.len,
                _ => meta.sources.push(s.clone()),
            }
        }
    }
    Ok(Demonstration { meta, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{ControllerKind, CreatedBy, DemoMeta, Rates};
    use crate::domain::{ActionTriple, Observation};
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::*;

    const I: ActionTriple = ActionTriple::IDLE;

    fn a(u_a: i8, u_s: i8, u_m: i8) -> ActionTriple {
        ActionTriple::new(u_a, u_s, u_m).unwrap()
    }

    fn demo(actions: &[ActionTriple]) -> Demonstration {
        let records = actions
            .iter()
            .enumerate()
            .map(|(k, &action)| DemoRecord {
                t: grid_time(k),
                obs: Observation {
                    yaw: k as f64 * 0.5,
                    pitch: 1.0,
                    roll: -2.0,
                    distance: 300.0 - k as f64,
                },
                action,
            })
            .collect();
        Demonstration {
            meta: DemoMeta {
                version: 1,
                controller: ControllerKind::Mobility,
                created_by: CreatedBy::Scripted,
                scenario_digest: String::from("abc"),
                seed: 7,
                rates: Rates::default(),
                complete: true,
                sources: vec![SourceSpan {
                    scenario_digest: String::from("abc"),
                    seed: 7,
                    created_by: CreatedBy::Scripted,
                    start: 0,
                    len: actions.len(),
                }],
            },
            records,
        }
    }

    #[test]
    fn trim_full_span_is_identity() {
        let d = demo(&[I, a(0, 0, 1), a(0, 0, 1), I]);
        assert_eq!(trim(&d, 0.0, 0.3).unwrap(), d);
    }

    #[test]
    fn trim_rebases_and_keeps_idle_ends() {
        let d = demo(&[a(0, 0, 1), I, a(0, -1, 0), I, a(0, 0, 1)]);
        let t = trim(&d, 0.1, 0.3).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.records[0].t, 0.0);
        assert_eq!(t.records[2].t, 0.2);
        assert_eq!(t.records[0].obs, d.records[1].obs);
        assert!(is_idle(t.records[0].action) && is_idle(t.records[2].action));
        assert_eq!(t.meta.sources[0].start, 1);
        assert_eq!(t.meta.sources[0].len, 3);
    }

    #[test]
    fn trim_mid_steer_names_the_time() {
        let d = demo(&[I, a(0, -1, 0), a(0, -1, 0), I]);
        assert_eq!(trim(&d, 0.1, 0.3), Err(Error::Boundary { t: 0.1 }));
        assert_eq!(trim(&d, 0.0, 0.2), Err(Error::Boundary { t: 0.2 }));
    }

    #[test]
    fn trim_range_errors() {
        let d = demo(&[I, I, I]);
        assert!(matches!(trim(&d, 0.0, 0.5), Err(Error::Range(_))));
        assert!(matches!(trim(&d, 0.2, 0.1), Err(Error::Range(_))));
        assert!(matches!(trim(&d, 0.05, 0.2), Err(Error::Range(_))));
    }

    #[test]
    fn merge_single_is_identity() {
        let d = demo(&[a(0, 0, 1), I]);
        assert_eq!(merge(&[d.clone()]).unwrap(), d);
        assert!(matches!(merge(&[]), Err(Error::Size(_))));
    }

    #[test]
    fn merge_retimes_continuously() {
        let m = merge(&[
            demo(&[I, a(0, 0, 1), I]),
            demo(&[I, a(1, 0, 1), I]),
            demo(&[I]),
        ])
        .unwrap();
        assert_eq!(m.len(), 7);
        for (k, r) in m.records.iter().enumerate() {
            assert_eq!(r.t, grid_time(k));
        }
        m.validate().unwrap();
        assert_eq!(m.meta.sources.len(), 3);
    }

    #[test]
    fn merge_rejects_mid_turn_start() {
        let r = merge(&[demo(&[I, I]), demo(&[a(0, 1, 0), I])]);
        assert_eq!(
            r,
            Err(Error::Junction {
                index: 1,
                side: "start"
            })
        );
        let r = merge(&[demo(&[I]), demo(&[I, a(0, 0, 1)]), demo(&[I])]);
        assert_eq!(
            r,
            Err(Error::Junction {
                index: 2,
                side: "end"
            })
        );
    }

    #[test]
    fn merge_rejects_mixed_controllers() {
        let mut b = demo(&[I]);
        b.meta.controller = ControllerKind::Manipulation;
        assert!(matches!(
            merge(&[demo(&[I]), b]),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn incomplete_segment_marks_the_merge() {
        let mut b = demo(&[I]);
        b.meta.complete = false;
        assert!(!merge(&[demo(&[I]), b]).unwrap().meta.complete);
    }

    fn actions() -> impl Strategy<Value = Vec<ActionTriple>> {
        let action = prop_oneof![
            3 => Just(I),
            1 => (0i8..5, -1i8..2, -1i8..2).prop_map(|(x, y, z)| a(x, y, z)),
        ];
        proptest::collection::vec(action, 4..120)
    }

    proptest! {
        #[test]
        fn trim_accepts_exactly_idle_boundaries(acts in actions(), i in 0usize..1000, j in 0usize..1000) {
            let d = demo(&acts);
            let n = acts.len();
            let (k0, k1) = (i % n, j % n);
            prop_assume!(k0 < k1);
            let r = trim(&d, grid_time(k0), grid_time(k1));
            let ok = is_idle(acts[k0]) && is_idle(acts[k1]);
            prop_assert_eq!(r.is_ok(), ok);
            if let Err(e) = r {
                let bad = if is_idle(acts[k0]) { k1 } else { k0 };
                prop_assert_eq!(e, Error::Boundary { t: grid_time(bad) });
            }
        }

        #[test]
        fn merge_accepts_exactly_idle_junctions(a1 in actions(), a2 in actions()) {
            let r = merge(&[demo(&a1), demo(&a2)]);
            let ok = is_idle(*a1.last().unwrap()) && is_idle(a2[0]);
            prop_assert_eq!(r.is_ok(), ok);
            if let Err(e) = r {
                prop_assert!(matches!(e, Error::Junction { index: 1, .. }), "{:?}", e);
            }
        }

        #[test]
        fn split_then_merge_reconstructs(mut acts in actions(), cuts in proptest::collection::vec(1usize..1000, 0..4)) {
            let n = acts.len();
            acts[0] = I;
            acts[n - 1] = I;
            // Force idle pairs at the cut points, then split between them.
            let mut ks: Vec<usize> = cuts.iter().map(|c| 1 + c % (n - 2)).collect();
            ks.sort();
            ks.dedup();
            ks.retain(|&k| k + 1 < n - 1);
            for &k in &ks {
                acts[k] = I;
                acts[k + 1] = I;
            }
            let d = demo(&acts);
            let mut bounds = vec![0];
            for &k in &ks {
                if k > *bounds.last().unwrap() {
                    bounds.push(k);
                    bounds.push(k + 1);
                }
            }
            bounds.push(n - 1);
            let parts: Vec<Demonstration> = bounds
                .chunks(2)
                .filter(|p| p[0] < p[1])
                .map(|p| trim(&d, grid_time(p[0]), grid_time(p[1])).unwrap())
                .collect();
            prop_assume!(parts.iter().map(|p| p.len()).sum::<usize>() == n);
            prop_assert_eq!(merge(&parts).unwrap(), d);
        }
    }
}
