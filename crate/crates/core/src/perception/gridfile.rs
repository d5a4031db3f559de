//! Text formats for occupancy grids.
//!
//! Probability format, rows in index order (row 0 is the bottom row, `y` up):
//!
//! ```text
//! OGRID 1
//! resolution 0.1
//! size <width> <height>
//! origin <x> <y> <theta>
//! <height lines of width probabilities>
//! ```
//!
//! Character format for hand-authored worlds, drawn top row first like an image:
//!
//! ```text
//! CGRID 1
//! resolution 0.1
//! origin <x> <y> <theta>
//! #####
//! #..?#
//! #####
//! ```
//!
//! `#` is occupied, `.` free and `?` unknown. Lines starting with `;` are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::grid::{MapError, OccupancyGrid};
use crate::geometry::Pose2D;

fn parse_err(line: usize, message: impl Into<String>) -> MapError {
    MapError::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    /// Next non-comment line with its 1-based number. Blank lines are skipped
    /// only when `skip_blank` is set.
    fn next_line(&mut self, skip_blank: bool) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim_end();
            if t.starts_with(';') || (skip_blank && t.trim().is_empty()) {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), MapError> {
        let (n, line) = self
            .next_line(true)
            .ok_or_else(|| parse_err(self.last + 1, format!("expected '{key}' line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_err(n, format!("expected '{key}'")));
        }
        Ok((n, parts.collect()))
    }
}

fn numbers<T: std::str::FromStr>(line: usize, parts: &[&str], count: usize) -> Result<Vec<T>, MapError> {
    if parts.len() != count {
        return Err(parse_err(
            line,
            format!("expected {count} values, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| parse_err(line, format!("invalid number '{p}'")))
        })
        .collect()
}

fn geometry(line: usize, res: Result<OccupancyGrid, MapError>) -> Result<OccupancyGrid, MapError> {
    res.map_err(|e| match e {
        MapError::InvalidGeometry(m) => parse_err(line, m),
        other => other,
    })
}

/// Parses either text format, dispatching on the magic line.
pub fn parse_grid(text: &str) -> Result<OccupancyGrid, MapError> {
    let mut lines = Lines::new(text);
    let (n, magic) = lines.next_line(true).ok_or_else(|| parse_err(1, "empty grid file"))?;
    match magic.trim() {
        "OGRID 1" => parse_probabilities(lines),
        "CGRID 1" => parse_chars(lines),
        other => Err(parse_err(n, format!("unknown grid header '{other}'"))),
    }
}

fn parse_probabilities(mut lines: Lines<'_>) -> Result<OccupancyGrid, MapError> {
    let (n, p) = lines.keyed("resolution")?;
    let resolution = numbers::<f64>(n, &p, 1)?[0];
    let (n, p) = lines.keyed("size")?;
    let size = numbers::<usize>(n, &p, 2)?;
    let (n, p) = lines.keyed("origin")?;
    let o = numbers::<f64>(n, &p, 3)?;
    let mut grid = geometry(
        n,
        OccupancyGrid::new(size[0], size[1], resolution, Pose2D::new(o[0], o[1], o[2])),
    )?;
    for cy in 0..grid.height() {
        let (n, line) = lines
            .next_line(true)
            .ok_or_else(|| parse_err(lines.last + 1, format!("missing row {cy}")))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let probs = numbers::<f64>(n, &parts, grid.width())?;
        for (cx, p) in probs.into_iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_err(n, format!("probability {p} outside [0, 1]")));
            }
            let idx = grid.index(cx, cy);
            grid.set_probability(idx, p);
        }
    }
    if let Some((n, _)) = lines.next_line(true) {
        return Err(parse_err(n, "unexpected trailing data"));
    }
    Ok(grid)
}

fn parse_chars(mut lines: Lines<'_>) -> Result<OccupancyGrid, MapError> {
    let (n, p) = lines.keyed("resolution")?;
    let resolution = numbers::<f64>(n, &p, 1)?[0];
    let (n_origin, p) = lines.keyed("origin")?;
    let o = numbers::<f64>(n_origin, &p, 3)?;
    let mut rows: Vec<(usize, &str)> = Vec::new();
    while let Some((n, line)) = lines.next_line(false) {
        rows.push((n, line));
    }
    while rows.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        rows.pop();
    }
    let Some(&(_, first)) = rows.first() else {
        return Err(parse_err(lines.last + 1, "grid has no rows"));
    };
    let width = first.chars().count();
    let height = rows.len();
    let mut grid = geometry(
        n_origin,
        OccupancyGrid::new(width, height, resolution, Pose2D::new(o[0], o[1], o[2])),
    )?;
    for (row, (n, line)) in rows.iter().enumerate() {
        if line.chars().count() != width {
            return Err(parse_err(
                *n,
                format!("row width {} differs from {width}", line.chars().count()),
            ));
        }
        let cy = height - 1 - row;
        for (cx, ch) in line.chars().enumerate() {
            let idx = grid.index(cx, cy);
            match ch {
                '#' => grid.mark_occupied(idx),
                '.' => grid.mark_free(idx),
                '?' => grid.set_log_odds(idx, 0.0),
                other => return Err(parse_err(*n, format!("unexpected cell character '{other}'"))),
            }
        }
    }
    Ok(grid)
}

pub fn load_grid(path: &Path) -> Result<OccupancyGrid, MapError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(0, format!("{}: {e}", path.display())))?;
    parse_grid(&text)
}

/// Writes the probability format.
pub fn to_probability_text(grid: &OccupancyGrid) -> String {
    let o = grid.origin();
    let mut s = String::new();
    let _ = writeln!(s, "OGRID 1");
    let _ = writeln!(s, "resolution {}", grid.resolution());
    let _ = writeln!(s, "size {} {}", grid.width(), grid.height());
    let _ = writeln!(s, "origin {} {} {}", o.x, o.y, o.theta);
    for cy in 0..grid.height() {
        let row: Vec<String> = (0..grid.width())
            .map(|cx| format!("{}", grid.probability(grid.index(cx, cy))))
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

/// Writes the character format, thresholding probabilities.
pub fn to_char_text(grid: &OccupancyGrid) -> String {
    let o = grid.origin();
    let mut s = String::new();
    let _ = writeln!(s, "CGRID 1");
    let _ = writeln!(s, "resolution {}", grid.resolution());
    let _ = writeln!(s, "origin {} {} {}", o.x, o.y, o.theta);
    for cy in (0..grid.height()).rev() {
        for cx in 0..grid.width() {
            let idx = grid.index(cx, cy);
            s.push(if grid.is_occupied(idx) {
                '#'
            } else if grid.is_free(idx) {
                '.'
            } else {
                '?'
            });
        }
        s.push('\n');
    }
    s
}
