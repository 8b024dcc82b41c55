//! MacKay alist format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! col_degree_1 ... col_degree_n
//! row_degree_1 ... row_degree_m
//! n lines of 1-based row indices, zero-padded to max_col_degree
//! m lines of 1-based column indices, zero-padded to max_row_degree
//! ```
//!
//! Zeros are accepted only as trailing padding after the declared degree.

use std::fs;
use std::path::Path;

use crate::codes::{CodeError, ParityCheckMatrix};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line as parsed integers, with its 1-based line number.
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>), CodeError> {
        for (i, line) in self.inner.by_ref() {
            let line_no = i + 1;
            self.last = line_no;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| CodeError::Alist {
                        line: line_no,
                        message: format!("expected a non-negative integer, found {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((line_no, nums));
        }
        Err(CodeError::Alist {
            line: self.last + 1,
            message: format!("unexpected end of file while reading {what}"),
        })
    }
}

fn expect_len(line: usize, nums: &[usize], want: usize, what: &str) -> Result<(), CodeError> {
    if nums.len() != want {
        return Err(CodeError::Alist {
            line,
            message: format!("{what}: expected {want} values, found {}", nums.len()),
        });
    }
    Ok(())
}

/// Reads one adjacency line: `degree` 1-based indices in `1..=bound`, then zero padding.
fn adjacency(
    line: usize,
    nums: &[usize],
    degree: usize,
    max_degree: usize,
    bound: usize,
) -> Result<Vec<usize>, CodeError> {
    if nums.len() < degree || nums.len() > max_degree.max(degree) {
        return Err(CodeError::Alist {
            line,
            message: format!(
                "degree mismatch: declared degree {degree} (max {max_degree}) but the line has {} entries",
                nums.len()
            ),
        });
    }
    let (idx, pad) = nums.split_at(degree);
    if let Some(&bad) = idx.iter().find(|&&x| x == 0 || x > bound) {
        return Err(CodeError::Alist {
            line,
            message: format!("index {bad} outside the 1-based range 1..={bound}"),
        });
    }
    if pad.iter().any(|&x| x != 0) {
        return Err(CodeError::Alist {
            line,
            message: "nonzero entry past the declared degree".into(),
        });
    }
    Ok(idx.iter().map(|&x| x - 1).collect())
}

pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix, CodeError> {
    let mut lines = Lines::new(text);
    let (l, dims) = lines.next_numbers("dimensions")?;
    expect_len(l, &dims, 2, "dimensions line")?;
    let (n, m) = (dims[0], dims[1]);
    let (l, maxd) = lines.next_numbers("maximum degrees")?;
    expect_len(l, &maxd, 2, "maximum degree line")?;
    let (max_col, max_row) = (maxd[0], maxd[1]);
    let (l, col_deg) = lines.next_numbers("column degrees")?;
    expect_len(l, &col_deg, n, "column degree line")?;
    let (l, row_deg) = lines.next_numbers("row degrees")?;
    expect_len(l, &row_deg, m, "row degree line")?;

    let mut cols = Vec::with_capacity(n);
    for &d in &col_deg {
        let (l, nums) = lines.next_numbers("column adjacency")?;
        if d > max_col {
            return Err(CodeError::Alist {
                line: l,
                message: format!("column degree {d} exceeds the declared maximum {max_col}"),
            });
        }
        cols.push((l, adjacency(l, &nums, d, max_col, m)?));
    }
    let mut rows = Vec::with_capacity(m);
    let mut row_lines = Vec::with_capacity(m);
    for &d in &row_deg {
        let (l, nums) = lines.next_numbers("row adjacency")?;
        if d > max_row {
            return Err(CodeError::Alist {
                line: l,
                message: format!("row degree {d} exceeds the declared maximum {max_row}"),
            });
        }
        rows.push(adjacency(l, &nums, d, max_row, n)?);
        row_lines.push(l);
    }

    // Column lists must describe the same matrix as the row lists.
    let mut from_rows = vec![Vec::new(); n];
    for (r, row) in rows.iter().enumerate() {
        for &c in row {
            from_rows[c].push(r);
        }
    }
    for (c, (l, list)) in cols.iter().enumerate() {
        let mut sorted = list.clone();
        sorted.sort_unstable();
        if sorted != from_rows[c] {
            return Err(CodeError::Alist {
                line: *l,
                message: format!("column {} disagrees with the row lists", c + 1),
            });
        }
    }
    for (r, row) in rows.iter().enumerate() {
        if row.is_empty() {
            return Err(CodeError::Alist {
                line: row_lines[r],
                message: format!("row {} is empty", r + 1),
            });
        }
    }
    ParityCheckMatrix::new(n, rows)
}

pub fn to_alist_string(h: &ParityCheckMatrix) -> String {
    let cols = h.columns();
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.row_weights().iter().copied().max().unwrap_or(0);
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", h.n_cols(), h.n_rows()));
    out.push_str(&format!("{max_col} {max_row}\n"));
    out.push_str(&join(&mut cols.iter().map(Vec::len)));
    out.push('\n');
    out.push_str(&join(&mut h.row_weights().iter().copied()));
    out.push('\n');
    for col in &cols {
        let mut it = col.iter().map(|&r| r + 1).chain(std::iter::repeat_n(0, max_col - col.len()));
        out.push_str(&join(&mut it));
        out.push('\n');
    }
    for row in h.rows() {
        let mut it = row.iter().map(|&c| c + 1).chain(std::iter::repeat_n(0, max_row - row.len()));
        out.push_str(&join(&mut it));
        out.push('\n');
    }
    out
}

pub fn read_alist(path: impl AsRef<Path>) -> Result<ParityCheckMatrix, CodeError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CodeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_alist(&text)
}

pub fn write_alist(h: &ParityCheckMatrix, path: impl AsRef<Path>) -> Result<(), CodeError> {
    let path = path.as_ref();
    fs::write(path, to_alist_string(h)).map_err(|source| CodeError::Io {
        path: path.to_path_buf(),
        source,
    })
}
