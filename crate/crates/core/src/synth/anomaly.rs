//! Confusion cases applied to a clean flight message list.
//!
//! 1. an ESTIMATED departure is issued before the ACTUAL one;
//! 2. the arrival time is moved before the departure;
//! 3. the departure message is issued after the arrival message;
//! 4. a duplicate departure with a conflicting time is issued just before
//!    the original (same `msgTime`, earlier in the stream).

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::SynthError;
use crate::message::{MsgType, Payload, Qualifier, RawMessage};

fn position(msgs: &[RawMessage], t: MsgType) -> Option<usize> {
    msgs.iter().position(|m| m.msg_type() == t)
}

fn nonzero_offset(rng: &mut ChaCha8Rng, max: i64) -> Duration {
    let k = rng.gen_range(1..=max);
    Duration::minutes(if rng.gen() { k } else { -k })
}

/// Applies exactly one confusion case to a clean flight's messages.
pub fn inject_anomalies(msgs: &[RawMessage], case: u8, seed: u64) -> Result<Vec<RawMessage>, SynthError> {
    if !(1..=4).contains(&case) {
        return Err(SynthError::UnknownCase(case));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = msgs.to_vec();
    let dep_at = position(&out, MsgType::DepartureInformation).ok_or(SynthError::MissingMessage("departure"))?;
    let arr_at = position(&out, MsgType::ArrivalInformation).ok_or(SynthError::MissingMessage("arrival"))?;
    let Payload::Departure(dep) = out[dep_at].payload.clone() else {
        unreachable!("position matched the kind")
    };
    match case {
        1 => {
            let mut estimate = out[dep_at].clone();
            estimate.msg_time = out[dep_at].msg_time - Duration::minutes(rng.gen_range(5..=60));
            estimate.payload = Payload::Departure(crate::message::DeparturePayload {
                departure_time: dep.departure_time + nonzero_offset(&mut rng, 15),
                qualifier: Qualifier::Estimated,
            });
            out.insert(0, estimate);
        }
        2 => {
            let Payload::Arrival(a) = &mut out[arr_at].payload else {
                unreachable!("position matched the kind")
            };
            a.arrival_time = dep.departure_time - Duration::minutes(rng.gen_range(1..=30));
        }
        3 => {
            let mut late = out.remove(dep_at);
            let arr_at = arr_at - usize::from(arr_at > dep_at);
            late.msg_time = out[arr_at].msg_time + Duration::minutes(rng.gen_range(1..=5));
            out.insert(arr_at + 1, late);
        }
        4 => {
            let mut dup = out[dep_at].clone();
            dup.payload = Payload::Departure(crate::message::DeparturePayload {
                departure_time: dep.departure_time + nonzero_offset(&mut rng, 10),
                qualifier: dep.qualifier,
            });
            out.insert(dep_at, dup);
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Drops every ACTUAL departure time from a flight: ACTUAL departure
/// messages are removed and ACTUAL departures carried by arrivals are cleared.
pub fn strip_actual_departures(msgs: &[RawMessage]) -> Vec<RawMessage> {
    msgs.iter()
        .filter(|m| !matches!(&m.payload, Payload::Departure(d) if d.qualifier == Qualifier::Actual))
        .cloned()
        .map(|mut m| {
            if let Payload::Arrival(a) = &mut m.payload {
                if matches!(a.departure, Some((_, Qualifier::Actual))) {
                    a.departure = None;
                }
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{ArrivalPayload, DeparturePayload};
    use crate::time::parse_utc;

    fn clean() -> Vec<RawMessage> {
        let t = |s: &str| parse_utc(&format!("2018-03-14T{s}:00Z")).unwrap();
        vec![
            RawMessage {
                flight_ref: "F".into(),
                msg_time: t("12:00"),
                seq: 0,
                payload: Payload::Departure(DeparturePayload {
                    departure_time: t("12:00"),
                    qualifier: Qualifier::Actual,
                }),
            },
            RawMessage {
                flight_ref: "F".into(),
                msg_time: t("12:40"),
                seq: 0,
                payload: Payload::Arrival(ArrivalPayload {
                    arrival_time: t("12:40"),
                    arrival_qualifier: Qualifier::Actual,
                    departure: Some((t("12:00"), Qualifier::Actual)),
                }),
            },
        ]
    }

    fn estimated(msgs: &[RawMessage]) -> usize {
        msgs.iter()
            .filter(|m| matches!(&m.payload, Payload::Departure(d) if d.qualifier == Qualifier::Estimated))
            .count()
    }

    #[test]
    fn case_1_adds_one_estimate() {
        let out = inject_anomalies(&clean(), 1, 3).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(estimated(&out), 1);
        assert!(out[0].msg_time < out[1].msg_time);
    }

    #[test]
    fn case_2_moves_arrival_before_departure() {
        let out = inject_anomalies(&clean(), 2, 3).unwrap();
        let Payload::Arrival(a) = &out[1].payload else { panic!() };
        assert!(a.arrival_time < clean()[0].msg_time);
    }

    #[test]
    fn case_3_reorders_departure() {
        let out = inject_anomalies(&clean(), 3, 3).unwrap();
        assert_eq!(out[1].msg_type(), MsgType::DepartureInformation);
        assert!(out[1].msg_time > out[0].msg_time);
    }

    #[test]
    fn case_4_duplicates_with_conflict() {
        let out = inject_anomalies(&clean(), 4, 3).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].msg_time, out[1].msg_time);
        assert_ne!(out[0].payload, out[1].payload);
    }

    #[test]
    fn unknown_case() {
        assert_eq!(inject_anomalies(&clean(), 5, 0), Err(SynthError::UnknownCase(5)));
        assert_eq!(inject_anomalies(&clean(), 0, 0), Err(SynthError::UnknownCase(0)));
    }

    #[test]
    fn strip_leaves_only_estimates() {
        let out = strip_actual_departures(&inject_anomalies(&clean(), 1, 3).unwrap());
        assert_eq!(out.len(), 2);
        assert_eq!(estimated(&out), 1);
        let Payload::Arrival(a) = &out[1].payload else { panic!() };
        assert!(a.departure.is_none());
    }
}
