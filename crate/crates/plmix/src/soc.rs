//! Election-file ingestion: strict-order-complete lines with counts, plus
//! tied groups in braces.
//!
//! The format is line-oriented: `#` lines are metadata, one of which must
//! declare the number of alternatives before any data line; data lines read
//! `count: 3,1,2` with 1-based item ids, best first. A tied group `{2,3}`
//! stands for all of its orderings; parsing expands it into weighted strict
//! rankings whose multiplicities are the line count times the extension
//! weight.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ranking::{break_ties, Ranking, RankingDataset, RawRankingWithTies};

/// Tie groups expand fully up to this many linear extensions; beyond it the
/// extensions are sampled.
pub const MAX_TIE_EXPAND: usize = 24;

const ALTERNATIVES_MARKER: &str = "NUMBER ALTERNATIVES";

/// Splits a data line's order part into singleton and braced-group tokens.
/// Returns 1-based ids as written.
fn tokenize_order(text: &str, line_no: usize) -> Result<Vec<Vec<usize>>> {
    let parse_id = |tok: &str| -> Result<usize> {
        tok.trim().parse::<usize>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("expected an item id, found {:?}", tok.trim()),
        })
    };
    let mut groups = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        if let Some(stripped) = rest.strip_prefix('{') {
            let end = stripped.find('}').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "unclosed tie group".into(),
            })?;
            let inner = &stripped[..end];
            let group: Vec<usize> = inner.split(',').map(parse_id).collect::<Result<Vec<_>>>()?;
            if group.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty tie group".into(),
                });
            }
            groups.push(group);
            rest = stripped[end + 1..].trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
        } else {
            let end = rest
                .char_indices()
                .find(|&(_, c)| c == ',' || c == '{')
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            if rest[..end].trim().is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty item position".into(),
                });
            }
            groups.push(vec![parse_id(&rest[..end])?]);
            rest = rest[end..]
                .strip_prefix(',')
                .unwrap_or(&rest[end..])
                .trim_start();
        }
    }
    Ok(groups)
}

/// Parses election-file text into a dataset. Tie groups are expanded through
/// `break_ties` (sampling with `rng` when a group is too large to enumerate),
/// so the result holds strict rankings with real-valued multiplicities.
pub fn parse_soc<R: Rng + ?Sized>(text: &str, rng: &mut R) -> Result<RankingDataset> {
    let mut n: Option<usize> = None;
    let mut rankings: Vec<Ranking> = Vec::new();
    let mut multiplicities: Vec<f64> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(pos) = meta.find(ALTERNATIVES_MARKER) {
                let after = &meta[pos + ALTERNATIVES_MARKER.len()..];
                let value = after
                    .trim_start()
                    .strip_prefix(':')
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: "malformed alternatives header (missing ':')".into(),
                    })?;
                let count: usize = value.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad alternatives count {:?}", value.trim()),
                })?;
                if count < 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("need at least 2 alternatives, got {count}"),
                    });
                }
                n = Some(count);
            }
            continue;
        }

        let n = n.ok_or_else(|| Error::Parse {
            line: line_no,
            message: "data before the '# NUMBER ALTERNATIVES' header".into(),
        })?;
        let (count_part, order_part) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "data line needs the form 'count: order'".into(),
        })?;
        let count: f64 = count_part.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad count {:?}", count_part.trim()),
        })?;
        if !count.is_finite() || count <= 0.0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("count must be positive, got {count}"),
            });
        }
        let groups_1based = tokenize_order(order_part, line_no)?;
        let mut seen = vec![false; n];
        let mut groups = Vec::with_capacity(groups_1based.len());
        for g in &groups_1based {
            let mut zero_based = Vec::with_capacity(g.len());
            for &id in g {
                if id == 0 || id > n {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("item id {id} outside 1..={n}"),
                    });
                }
                if seen[id - 1] {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("item {id} listed twice"),
                    });
                }
                seen[id - 1] = true;
                zero_based.push(id - 1);
            }
            groups.push(zero_based);
        }

        let tied = groups.iter().any(|g| g.len() > 1);
        if !tied {
            let items: Vec<usize> = groups.into_iter().flatten().collect();
            let ranking = Ranking::new(items).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            rankings.push(ranking);
            multiplicities.push(count);
        } else {
            let raw = RawRankingWithTies::new(groups).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            for (ranking, weight) in break_ties(&raw, MAX_TIE_EXPAND, rng)? {
                rankings.push(ranking);
                multiplicities.push(count * weight);
            }
        }
    }

    let n = n.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing '# NUMBER ALTERNATIVES' header".into(),
    })?;
    if rankings.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "no data lines".into(),
        });
    }
    RankingDataset::with_multiplicities(n, rankings, multiplicities)
}

/// Writes a dataset back to election-file text: the alternatives header
/// followed by one `count: order` line per ranking, 1-based, integral counts
/// without a decimal point.
pub fn write_soc(dataset: &RankingDataset) -> String {
    let mut out = String::new();
    out.push_str(&format!("# NUMBER ALTERNATIVES: {}\n", dataset.n()));
    for (ranking, &mult) in dataset.rankings().iter().zip(dataset.multiplicities()) {
        if mult.round() == mult && mult.abs() < 1e15 {
            out.push_str(&format!("{}: ", mult as i64));
        } else {
            out.push_str(&format!("{mult}: "));
        }
        let ids: Vec<String> = ranking
            .items()
            .iter()
            .map(|&i| (i + 1).to_string())
            .collect();
        out.push_str(&ids.join(","));
        out.push('\n');
    }
    out
}
