//! Trace CSV ingestion.
//!
//! Membership rows (`time_s, car_id, present, v2v_capable`) are state
//! updates: a car keeps its last reported presence and capability until a
//! later row changes it. An empty `v2v_capable` leaves the capability to the
//! penetration draw. Link rows are either SINR (`time_s, src_id, dst_id,
//! sinr_db`) or direct rates (`time_s, src_id, dst_id, rate_bps, medium`);
//! the latest observation of each ordered pair stays in force. Edge servers
//! are named `edge_0`, `edge_1`, ... in link rows.
//!
//! One snapshot is emitted per distinct time appearing in either file.

use std::collections::BTreeMap;
use std::io::Read;

use hybrid_offload_core::model::{Medium, NodeId};
use hybrid_offload_core::scenario::{LinkObservation, LinkValue, Member, Snapshot, TraceTimeline};
use serde::Deserialize;

use crate::OffloadError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MembershipRow {
    pub time_s: f64,
    pub car_id: String,
    pub present: u8,
    pub v2v_capable: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRow {
    pub time_s: f64,
    pub src_id: String,
    pub dst_id: String,
    pub value: LinkValue,
}

#[derive(Deserialize)]
struct SinrRow {
    time_s: f64,
    src_id: String,
    dst_id: String,
    sinr_db: f64,
}

#[derive(Deserialize)]
struct RateRow {
    time_s: f64,
    src_id: String,
    dst_id: String,
    rate_bps: f64,
    medium: String,
}

fn invalid(what: &str, e: impl std::fmt::Display) -> OffloadError {
    OffloadError::Validation(format!("{what}: {e}"))
}

fn flag(v: u8, what: &str) -> Result<bool, OffloadError> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(invalid(what, format!("expected 0 or 1, got {v}"))),
    }
}

pub fn read_membership<R: Read>(input: R) -> Result<Vec<MembershipRow>, OffloadError> {
    let mut rows = Vec::new();
    for row in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input).deserialize() {
        let row: MembershipRow = row.map_err(|e| invalid("membership csv", e))?;
        if !row.time_s.is_finite() {
            return Err(invalid("membership csv", "non-finite time"));
        }
        flag(row.present, "membership csv present")?;
        if let Some(v) = row.v2v_capable {
            flag(v, "membership csv v2v_capable")?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads either link schema, chosen by the header.
pub fn read_links<R: Read>(input: R) -> Result<Vec<LinkRow>, OffloadError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| invalid("link csv", e))?.clone();
    let has = |name: &str| headers.iter().any(|h| h == name);
    let mut rows = Vec::new();
    if has("sinr_db") {
        for row in reader.deserialize() {
            let r: SinrRow = row.map_err(|e| invalid("link csv", e))?;
            rows.push(LinkRow { time_s: r.time_s, src_id: r.src_id, dst_id: r.dst_id, value: LinkValue::SinrDb(r.sinr_db) });
        }
    } else if has("rate_bps") {
        for row in reader.deserialize() {
            let r: RateRow = row.map_err(|e| invalid("link csv", e))?;
            let medium = match r.medium.to_ascii_lowercase().as_str() {
                "lte" => Medium::Lte,
                "v2v" => Medium::V2v,
                other => return Err(invalid("link csv", format!("unknown medium `{other}`"))),
            };
            if !r.rate_bps.is_finite() || r.rate_bps < 0.0 {
                return Err(invalid("link csv", format!("bad rate {}", r.rate_bps)));
            }
            rows.push(LinkRow {
                time_s: r.time_s,
                src_id: r.src_id,
                dst_id: r.dst_id,
                value: LinkValue::Rate { bps: r.rate_bps, medium },
            });
        }
    } else {
        return Err(invalid("link csv", "header needs sinr_db or rate_bps"));
    }
    if rows.iter().any(|r| !r.time_s.is_finite()) {
        return Err(invalid("link csv", "non-finite time"));
    }
    Ok(rows)
}

#[derive(Clone, Copy)]
struct CarState {
    present: bool,
    v2v: Option<bool>,
}

pub fn build_timeline(membership: &[MembershipRow], links: &[LinkRow]) -> Result<TraceTimeline, OffloadError> {
    let mut m: Vec<&MembershipRow> = membership.iter().collect();
    let mut l: Vec<&LinkRow> = links.iter().collect();
    // stable: equal times keep file order, so later rows win
    m.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    l.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    let mut times: Vec<f64> = m.iter().map(|r| r.time_s).chain(l.iter().map(|r| r.time_s)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut cars: BTreeMap<String, CarState> = BTreeMap::new();
    let mut obs: BTreeMap<(String, String), LinkValue> = BTreeMap::new();
    let (mut mi, mut li) = (0, 0);
    let mut snapshots = Vec::with_capacity(times.len());
    for t in times {
        while mi < m.len() && m[mi].time_s <= t {
            let r = m[mi];
            let state = CarState { present: r.present == 1, v2v: r.v2v_capable.map(|v| v == 1) };
            cars.insert(r.car_id.clone(), state);
            mi += 1;
        }
        while li < l.len() && l[li].time_s <= t {
            let r = l[li];
            obs.insert((r.src_id.clone(), r.dst_id.clone()), r.value);
            li += 1;
        }
        let members = cars
            .iter()
            .filter(|(_, s)| s.present)
            .map(|(id, s)| Member { id: NodeId::new(id.clone()), v2v_capable: s.v2v, position_m: None })
            .collect();
        let links = obs
            .iter()
            .map(|((s, d), v)| LinkObservation { src: NodeId::new(s.clone()), dst: NodeId::new(d.clone()), value: *v })
            .collect();
        snapshots.push(Snapshot { time_s: t, members, links });
    }
    Ok(TraceTimeline { snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MEMBERS: &str = "time_s,car_id,present,v2v_capable\n0,a,1,1\n0,b,1,\n1,b,0,\n2,c,1,0\n";

    #[test]
    fn membership_is_carried_forward() {
        let rows = read_membership(MEMBERS.as_bytes()).unwrap();
        assert_eq!(rows[1].v2v_capable, None);
        let tl = build_timeline(&rows, &[]).unwrap();
        let ids: Vec<Vec<&str>> =
            tl.snapshots.iter().map(|s| s.members.iter().map(|m| m.id.as_str()).collect()).collect();
        assert_eq!(ids, vec![vec!["a", "b"], vec!["a"], vec!["a", "c"]]);
        assert_eq!(tl.snapshots[2].members[1].v2v_capable, Some(false));
    }

    #[test]
    fn sinr_schema_is_detected() {
        let rows = read_links("time_s,src_id,dst_id,sinr_db\n0.5,a,b,12.5\n".as_bytes()).unwrap();
        assert_eq!(rows[0].value, LinkValue::SinrDb(12.5));
    }

    #[test]
    fn rate_schema_is_detected() {
        let text = "time_s,src_id,dst_id,rate_bps,medium\n0,a,edge_0,4e7,lte\n1,a,edge_0,3e7,LTE\n";
        let rows = read_links(text.as_bytes()).unwrap();
        assert_eq!(rows[1].value, LinkValue::Rate { bps: 3e7, medium: Medium::Lte });
        let members = read_membership(MEMBERS.as_bytes()).unwrap();
        let tl = build_timeline(&members, &rows).unwrap();
        // latest observation per pair wins
        assert_eq!(tl.at(1.5).unwrap().links[0].value, rows[1].value);
        assert_eq!(tl.at(0.0).unwrap().links[0].value, rows[0].value);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(read_membership("time_s,car_id,present,v2v_capable\n0,a,2,1\n".as_bytes()).is_err());
        assert!(read_links("time_s,src_id,dst_id,rate_bps,medium\n0,a,b,1e6,wifi\n".as_bytes()).is_err());
        assert!(read_links("time_s,src_id,dst_id,foo\n0,a,b,1\n".as_bytes()).is_err());
        assert!(read_membership("time_s,car_id,present,v2v_capable\nx,a,1,1\n".as_bytes()).is_err());
    }
}
