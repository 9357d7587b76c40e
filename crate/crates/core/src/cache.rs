//! Line-oriented persistence for enumeration tables.
//!
//! ```text
//! aitlab-cache v1 machine=<id> max_len=<L> max_steps=<T> aux=<bits|eps> records=<N>
//! <program> <output|eps> <steps>
//! ...
//! ```
//!
//! Records are written in the table's shortlex program order, so equal
//! `(machine, budget)` pairs give byte-identical files.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bits::BitString;
use crate::enumeration::{Budget, EnumerationTable, Record};
use crate::error::{Error, Result};
use crate::machine::{run, MachineSpec, Outcome};

const MAGIC: &str = "aitlab-cache v1";

pub fn write_cache<W: Write>(table: &EnumerationTable, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let b = table.budget();
    writeln!(
        w,
        "{MAGIC} machine={} max_len={} max_steps={} aux={} records={}",
        table.version_id(),
        b.max_len,
        b.max_steps,
        b.aux,
        table.len()
    )?;
    for r in table.records() {
        writeln!(w, "{} {} {}", r.program, r.output, r.steps)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save(table: &EnumerationTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_cache(table, fs::File::create(path)?)
}

fn field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("cache header lacks {key}")))
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

/// Parse a cache, rejecting files from another machine revision.
pub fn read_cache<R: Read>(input: R) -> Result<EnumerationTable> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty cache file".into()))??;
    if !header.starts_with(MAGIC) {
        return Err(Error::Parse(format!("not a cache file: {header:?}")));
    }
    let machine = field(&header, "machine")?;
    let expected = &MachineSpec::reference().version_id;
    if machine != expected {
        return Err(Error::MachineMismatch { expected: expected.clone(), found: machine.into() });
    }
    let budget = Budget {
        max_len: number(field(&header, "max_len")?, "max_len")?,
        max_steps: number(field(&header, "max_steps")?, "max_steps")?,
        aux: field(&header, "aux")?.parse()?,
    };
    let count: usize = number(field(&header, "records")?, "record count")?;
    let mut records = Vec::with_capacity(count);
    for line in lines {
        let line = line?;
        let mut parts = line.split_whitespace();
        let (Some(p), Some(o), Some(s), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::Parse(format!("bad record line: {line:?}")));
        };
        records.push(Record { program: p.parse()?, output: o.parse()?, steps: number(s, "steps")? });
    }
    if records.len() != count {
        return Err(Error::Parse(format!("header says {count} records, found {}", records.len())));
    }
    Ok(EnumerationTable::from_records(machine.into(), budget, records))
}

pub fn load(path: &Path) -> Result<EnumerationTable> {
    read_cache(fs::File::open(path)?)
}

/// Re-run every cached program from scratch and confirm the recorded
/// output and step count. Returns the first mismatching program.
pub fn verify_by_replay(table: &EnumerationTable) -> std::result::Result<(), BitString> {
    let b = table.budget();
    for r in table.records() {
        let live = run(&r.program, &b.aux, b.max_steps);
        let ok = live.outcome == Outcome::Halted
            && live.bits_consumed == r.program.len()
            && live.output == r.output
            && live.steps == r.steps;
        if !ok {
            return Err(r.program.clone());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate;

    #[test]
    fn round_trip_is_byte_identical() {
        let b = Budget::new(12, 500).with_aux("0110".parse().unwrap());
        let t = enumerate(&b).unwrap();
        let mut first = Vec::new();
        write_cache(&t, &mut first).unwrap();
        let back = read_cache(first.as_slice()).unwrap();
        assert_eq!(back.records(), t.records());
        assert_eq!(back.budget(), t.budget());
        let mut second = Vec::new();
        write_cache(&back, &mut second).unwrap();
        assert_eq!(first, second);
        assert!(verify_by_replay(&back).is_ok());
    }

    #[test]
    fn rejects_bad_files() {
        let t = enumerate(&Budget::new(6, 10)).unwrap();
        let mut buf = Vec::new();
        write_cache(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let wrong_machine = text.replacen(&t.version_id().to_string(), "deadbeef", 1);
        assert!(matches!(read_cache(wrong_machine.as_bytes()), Err(Error::MachineMismatch { .. })));
        let wrong_count = text.replacen("records=", "records=9", 1);
        assert!(matches!(read_cache(wrong_count.as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_cache("hello\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_cache("".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn tampered_record_fails_replay() {
        let t = enumerate(&Budget::new(9, 100)).unwrap();
        let mut recs = t.records().to_vec();
        recs[0].output.push(true);
        let bad = EnumerationTable::from_records(t.version_id().into(), t.budget().clone(), recs);
        assert!(verify_by_replay(&bad).is_err());
    }
}
