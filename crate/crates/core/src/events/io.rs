//! CSV ingestion and emission for encounters, attributes and activity spans.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{ActorId, ActorTable, ObservationWindow, RawEncounter, Span};
use crate::error::{Error, Result};

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn check_header(
    reader: &mut csv::Reader<impl Read>,
    source: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<()> {
    let header = reader
        .headers()
        .map_err(|e| Error::data(source, 1, format!("unreadable header: {e}")))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let ok = names.len() >= required.len()
        && names.len() <= required.len() + optional.len()
        && names
            .iter()
            .zip(required.iter().chain(optional))
            .all(|(a, b)| a == b);
    if !ok {
        let mut expected = required.join(",");
        if !optional.is_empty() {
            expected.push_str(&format!("[,{}]", optional.join(",")));
        }
        return Err(Error::data(
            source,
            1,
            format!("header must be `{expected}`, found `{}`", names.join(",")),
        ));
    }
    Ok(())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r)
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, name: &str, source: &str) -> Result<&'a str> {
    rec.get(idx)
        .ok_or_else(|| Error::data(source, line_of(rec), format!("missing column `{name}`")))
}

fn parse_id(rec: &csv::StringRecord, idx: usize, name: &str, source: &str) -> Result<ActorId> {
    let raw = field(rec, idx, name, source)?;
    raw.parse::<u32>().map(ActorId).map_err(|_| {
        Error::data(source, line_of(rec), format!("`{name}` is not an actor id: `{raw}`"))
    })
}

fn parse_time(rec: &csv::StringRecord, idx: usize, name: &str, source: &str) -> Result<f64> {
    let raw = field(rec, idx, name, source)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::data(
            source,
            line_of(rec),
            format!("`{name}` is not a finite number: `{raw}`"),
        )),
    }
}

/// Reads `source_id,target_id,start_hours,end_hours[,same_floor_prob]`.
pub fn read_encounters(r: impl Read, source: &str) -> Result<Vec<RawEncounter>> {
    let mut rdr = reader(r);
    check_header(
        &mut rdr,
        source,
        &["source_id", "target_id", "start_hours", "end_hours"],
        &["same_floor_prob"],
    )?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(source, 0, e.to_string()))?;
        let same_floor_prob = match rec.get(4) {
            None | Some("") => None,
            Some(raw) => Some(raw.parse::<f64>().ok().filter(|p| p.is_finite()).ok_or_else(
                || Error::data(source, line_of(&rec), format!("bad same_floor_prob `{raw}`")),
            )?),
        };
        out.push(RawEncounter {
            source: parse_id(&rec, 0, "source_id", source)?,
            target: parse_id(&rec, 1, "target_id", source)?,
            start: parse_time(&rec, 2, "start_hours", source)?,
            end: parse_time(&rec, 3, "end_hours", source)?,
            same_floor_prob,
        });
    }
    Ok(out)
}

/// Reads the long-format `actor_id,key,value` table. Empty values are missing.
pub fn read_attributes(r: impl Read, source: &str) -> Result<ActorTable> {
    let mut rdr = reader(r);
    check_header(&mut rdr, source, &["actor_id", "key", "value"], &[])?;
    let mut table = ActorTable::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(source, 0, e.to_string()))?;
        let id = parse_id(&rec, 0, "actor_id", source)?;
        let key = field(&rec, 1, "key", source)?;
        if key.is_empty() {
            return Err(Error::data(source, line_of(&rec), "empty attribute key"));
        }
        let value = rec.get(2).unwrap_or("");
        table.ensure(id);
        table.schema.insert(key.to_string());
        if !value.is_empty() {
            table.insert_attribute(id, key, value);
        }
    }
    Ok(table)
}

/// Reads `actor_id,start_hours,end_hours`; spans of one actor are unioned.
pub fn read_activity(r: impl Read, source: &str) -> Result<BTreeMap<ActorId, ObservationWindow>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, source, &["actor_id", "start_hours", "end_hours"], &[])?;
    let mut spans: BTreeMap<ActorId, Vec<Span>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(source, 0, e.to_string()))?;
        let id = parse_id(&rec, 0, "actor_id", source)?;
        let start = parse_time(&rec, 1, "start_hours", source)?;
        let end = parse_time(&rec, 2, "end_hours", source)?;
        if end < start {
            return Err(Error::data(
                source,
                line_of(&rec),
                format!("activity span ends before it starts: [{start}, {end})"),
            ));
        }
        spans.entry(id).or_default().push(Span::new(start, end));
    }
    Ok(spans
        .into_iter()
        .map(|(id, s)| (id, ObservationWindow::from_spans(s)))
        .collect())
}

pub fn write_encounters(w: impl Write, encounters: &[RawEncounter]) -> Result<()> {
    let with_prob = encounters.iter().any(|e| e.same_floor_prob.is_some());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["source_id", "target_id", "start_hours", "end_hours"];
    if with_prob {
        header.push("same_floor_prob");
    }
    wtr.write_record(&header)?;
    for e in encounters {
        let mut row = vec![
            e.source.to_string(),
            e.target.to_string(),
            e.start.to_string(),
            e.end.to_string(),
        ];
        if with_prob {
            row.push(e.same_floor_prob.map(|p| p.to_string()).unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<encounters>", e))?;
    Ok(())
}

pub fn write_attributes(w: impl Write, table: &ActorTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["actor_id", "key", "value"])?;
    for (id, actor) in &table.actors {
        for (k, v) in &actor.attributes {
            wtr.write_record([id.to_string(), k.clone(), v.clone()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<attributes>", e))?;
    Ok(())
}

pub fn write_activity(w: impl Write, activity: &BTreeMap<ActorId, ObservationWindow>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["actor_id", "start_hours", "end_hours"])?;
    for (id, win) in activity {
        for s in win.spans() {
            wtr.write_record([id.to_string(), s.start.to_string(), s.end.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<activity>", e))?;
    Ok(())
}
