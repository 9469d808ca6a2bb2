//! Parser for known-answer files of `Len = / Msg = / MD =` records.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KatRecord {
    /// Line of the record's `Len` entry (1-based).
    pub line: usize,
    pub len_bits: usize,
    pub msg: Vec<u8>,
    pub md: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Malformed {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct KatFile {
    pub records: Vec<KatRecord>,
    pub malformed: Vec<Malformed>,
}

#[derive(Default)]
struct Pending {
    line: usize,
    len: Option<usize>,
    msg: Option<Vec<u8>>,
    /// Set after an error; later lines of the record are ignored.
    skip: bool,
}

fn decode(value: &str) -> Result<Vec<u8>, String> {
    hex::decode(value).map_err(|e| format!("bad hex: {e}"))
}

/// Parses every record it can; each broken record is reported once with
/// the line where the problem was found.
pub fn parse_kat(text: &str) -> KatFile {
    let mut out = KatFile::default();
    let mut cur = Pending::default();
    let bad = |out: &mut KatFile, cur: &mut Pending, line: usize, reason: String| {
        out.malformed.push(Malformed { line, reason });
        *cur = Pending {
            skip: true,
            ..Default::default()
        };
    };

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bad(
                &mut out,
                &mut cur,
                n,
                format!("expected `key = value`, got `{line}`"),
            );
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "Len" => {
                if cur.len.is_some() {
                    out.malformed.push(Malformed {
                        line: cur.line,
                        reason: "record has no MD".into(),
                    });
                }
                cur = Pending {
                    line: n,
                    ..Default::default()
                };
                match value.parse::<usize>() {
                    Ok(bits) if bits % 8 == 0 => cur.len = Some(bits),
                    Ok(bits) => bad(
                        &mut out,
                        &mut cur,
                        n,
                        format!("Len = {bits} is not a whole number of bytes"),
                    ),
                    Err(e) => bad(&mut out, &mut cur, n, format!("bad Len: {e}")),
                }
            }
            _ if cur.skip => {}
            "Msg" => match (cur.len, decode(value)) {
                (None, _) => bad(&mut out, &mut cur, n, "Msg without Len".into()),
                (_, Err(e)) => bad(&mut out, &mut cur, n, e),
                (Some(bits), Ok(bytes)) => {
                    let msg = if bits == 0 { Vec::new() } else { bytes };
                    if msg.len() * 8 != bits {
                        let reason = format!("Msg has {} bytes, Len says {}", msg.len(), bits / 8);
                        bad(&mut out, &mut cur, n, reason);
                    } else {
                        cur.msg = Some(msg);
                    }
                }
            },
            "MD" | "Output" => match (cur.len, cur.msg.take(), decode(value)) {
                (_, _, Err(e)) => bad(&mut out, &mut cur, n, e),
                (Some(len_bits), Some(msg), Ok(md)) if !md.is_empty() => {
                    out.records.push(KatRecord {
                        line: cur.line,
                        len_bits,
                        msg,
                        md,
                    });
                    cur = Pending::default();
                }
                (Some(_), Some(_), Ok(_)) => bad(&mut out, &mut cur, n, "empty MD".into()),
                _ => bad(&mut out, &mut cur, n, "MD without Len and Msg".into()),
            },
            _ => {}
        }
    }
    if cur.len.is_some() {
        out.malformed.push(Malformed {
            line: cur.line,
            reason: "record has no MD".into(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records_and_comments() {
        let text = "# header\n[L = 32]\n\nLen = 0\nMsg = 00\nMD = abcd\n\nLen = 8 # one byte\nMsg = CC\nMD = 0102\n";
        let f = parse_kat(text);
        assert!(f.malformed.is_empty(), "{:?}", f.malformed);
        assert_eq!(f.records.len(), 2);
        assert_eq!(f.records[0].msg, Vec::<u8>::new());
        assert_eq!(
            f.records[1],
            KatRecord {
                line: 8,
                len_bits: 8,
                msg: vec![0xCC],
                md: vec![1, 2]
            }
        );
    }

    #[test]
    fn malformed_records_keep_line_numbers() {
        let text =
            "Len = 8\nMsg = zz\nMD = 00\nLen = 8\nMsg = 01\nMD = 02\nLen = 16\nMsg = 01\nMD = 03\n";
        let f = parse_kat(text);
        assert_eq!(f.records.len(), 1);
        assert_eq!(f.records[0].line, 4);
        assert_eq!(
            f.malformed.iter().map(|m| m.line).collect::<Vec<_>>(),
            vec![2, 8]
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_kat(""), KatFile::default());
    }
}
