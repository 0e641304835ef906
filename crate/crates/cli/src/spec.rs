//! Sweep specification files.
//!
//! ```text
//! # comment
//! axis.eta1 = 0:1:51          # start:stop:count, endpoints included
//! axis.r = 0.3, 0.7, 1.0      # explicit list
//! fixed.T = 0.97
//! fixed.eta2 = 0
//! fixed.m = 1
//! observables = prob, variances, pnd
//! pnd.max = 10
//! ```
//!
//! Each of `r`, `eta1`, `eta2`, `T`, `m` appears exactly once, as an axis or as
//! a fixed value. The phase-space coordinates `x` and `y` default to 0 and
//! only matter for the `wigner` observable.

use std::fmt;

use crate::params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    R,
    Eta1,
    Eta2,
    T,
    M,
    X,
    Y,
}

impl Param {
    pub const ALL: [Param; 7] = [Param::R, Param::Eta1, Param::Eta2, Param::T, Param::M, Param::X, Param::Y];

    pub fn name(self) -> &'static str {
        match self {
            Self::R => "r",
            Self::Eta1 => "eta1",
            Self::Eta2 => "eta2",
            Self::T => "T",
            Self::M => "m",
            Self::X => "x",
            Self::Y => "y",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    fn is_coordinate(self) -> bool {
        matches!(self, Self::X | Self::Y)
    }

    fn check(self, v: f64) -> Result<f64, String> {
        let text = format!("{v}");
        match self {
            Self::R => params::squeezing(&text),
            Self::Eta1 | Self::Eta2 | Self::T => params::unit_interval(&text),
            Self::M => {
                if v.fract() == 0.0 && v >= 0.0 && v <= params::MAX_HERALD as f64 {
                    Ok(v)
                } else {
                    Err(format!("must be an integer in [0, {}]", params::MAX_HERALD))
                }
            }
            Self::X | Self::Y => {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err("must be finite".into())
                }
            }
        }
        .map_err(|e| format!("{}: {e}", self.name()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Prob,
    Variances,
    Threshold,
    Pnd,
    Wigner,
}

impl Observable {
    const ALL: [Observable; 5] = [Self::Prob, Self::Variances, Self::Threshold, Self::Pnd, Self::Wigner];

    pub fn name(self) -> &'static str {
        match self {
            Self::Prob => "prob",
            Self::Variances => "variances",
            Self::Threshold => "threshold",
            Self::Pnd => "pnd",
            Self::Wigner => "wigner",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Axis(Vec<f64>),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Parameters in declaration order; every name in [`Param::ALL`] is present.
    pub params: Vec<(Param, Values)>,
    pub observables: Vec<Observable>,
    /// Highest photon number reported by the `pnd` observable.
    pub pnd_max: usize,
}

impl SweepSpec {
    /// Axes in declaration order; row order is lexicographic over them.
    pub fn axes(&self) -> Vec<(Param, &[f64])> {
        self.params
            .iter()
            .filter_map(|(p, v)| match v {
                Values::Axis(xs) => Some((*p, xs.as_slice())),
                Values::Fixed(_) => None,
            })
            .collect()
    }

    pub fn fixed(&self, p: Param) -> Option<f64> {
        self.params.iter().find_map(|(q, v)| match v {
            Values::Fixed(x) if *q == p => Some(*x),
            _ => None,
        })
    }

    /// Number of rows, or `None` on overflow.
    pub fn row_count(&self) -> Option<usize> {
        self.axes().iter().try_fold(1usize, |acc, (_, xs)| acc.checked_mul(xs.len()))
    }

    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

/// Largest count accepted in a `start:stop:count` triple.
const MAX_AXIS_LEN: usize = 10_000_000;

fn number(text: &str, line: usize, column: usize) -> Result<f64, ParseError> {
    text.trim().parse::<f64>().map_err(|_| ParseError {
        line,
        column,
        message: format!("expected a number, found `{}`", text.trim()),
    })
}

/// Column (1-based, in characters) of `part` inside `line`, given its byte offset.
fn column_of(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

/// Byte offset of the first non-blank character of a sub-slice.
fn trimmed_start(start: usize, part: &str) -> usize {
    start + (part.len() - part.trim_start().len())
}

fn parse_values(line: &str, start: usize, text: &str, lineno: usize) -> Result<Vec<f64>, ParseError> {
    let err_at = |offset: usize, message: String| ParseError {
        line: lineno,
        column: column_of(line, offset),
        message,
    };
    if text.trim().is_empty() {
        return Err(err_at(start, "missing value".into()));
    }
    if text.contains(':') {
        let mut parts = Vec::new();
        let mut offset = start;
        for part in text.split(':') {
            parts.push((trimmed_start(offset, part), part));
            offset += part.len() + 1;
        }
        if parts.len() != 3 {
            return Err(err_at(start, "a range needs the form start:stop:count".into()));
        }
        let lo = number(parts[0].1, lineno, column_of(line, parts[0].0))?;
        let hi = number(parts[1].1, lineno, column_of(line, parts[1].0))?;
        let count_text = parts[2].1.trim();
        let count: usize = count_text.parse().map_err(|_| {
            err_at(parts[2].0, format!("expected a positive integer count, found `{count_text}`"))
        })?;
        if count == 0 || count > MAX_AXIS_LEN {
            return Err(err_at(parts[2].0, format!("count must lie in [1, {MAX_AXIS_LEN}]")));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        return Ok((0..count)
            .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
            .collect());
    }
    let mut out = Vec::new();
    let mut offset = start;
    for part in text.split(',') {
        out.push(number(part, lineno, column_of(line, trimmed_start(offset, part)))?);
        offset += part.len() + 1;
    }
    Ok(out)
}

pub fn parse(source: &str) -> Result<SweepSpec, ParseError> {
    let mut params: Vec<(Param, Values)> = Vec::new();
    let mut observables: Option<Vec<Observable>> = None;
    let mut pnd_max: Option<usize> = None;

    for (i, raw) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(ParseError {
                line: lineno,
                column: column_of(line, trimmed_start(0, line)),
                message: "expected `key = value`".into(),
            });
        };
        let key = line[..eq].trim();
        let key_col = column_of(line, trimmed_start(0, &line[..eq]));
        let value_start = eq + 1;
        let value = &line[value_start..];
        let value_col = column_of(line, trimmed_start(value_start, value));
        let err = |column: usize, message: String| ParseError {
            line: lineno,
            column,
            message,
        };

        if let Some(name) = key.strip_prefix("axis.").or_else(|| key.strip_prefix("fixed.")) {
            let param = Param::from_name(name).ok_or_else(|| {
                err(key_col, format!("unknown parameter `{name}` (expected r, eta1, eta2, T, m, x or y)"))
            })?;
            if params.iter().any(|(p, _)| *p == param) {
                return Err(err(key_col, format!("parameter `{name}` is given more than once")));
            }
            let values = parse_values(line, value_start, value, lineno)?;
            for v in &values {
                param.check(*v).map_err(|m| err(value_col, m))?;
            }
            let entry = if key.starts_with("axis.") {
                Values::Axis(values)
            } else if values.len() == 1 {
                Values::Fixed(values[0])
            } else {
                return Err(err(value_col, format!("fixed.{name} takes a single value")));
            };
            params.push((param, entry));
        } else if key == "observables" {
            if observables.is_some() {
                return Err(err(key_col, "`observables` is given more than once".into()));
            }
            let mut list = Vec::new();
            let mut offset = value_start;
            for part in value.split(',') {
                let col = column_of(line, trimmed_start(offset, part));
                offset += part.len() + 1;
                let name = part.trim();
                let o = Observable::ALL
                    .into_iter()
                    .find(|o| o.name() == name)
                    .ok_or_else(|| err(col, format!("unknown observable `{name}` (expected prob, variances, threshold, pnd or wigner)")))?;
                if !list.contains(&o) {
                    list.push(o);
                }
            }
            observables = Some(list);
        } else if key == "pnd.max" {
            let n = value
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n <= 256)
                .ok_or_else(|| err(value_col, "pnd.max must be an integer in [0, 256]".into()))?;
            pnd_max = Some(n);
        } else {
            return Err(err(key_col, format!("unknown key `{key}`")));
        }
    }

    let end = source.lines().count().max(1);
    for p in Param::ALL {
        if !p.is_coordinate() && !params.iter().any(|(q, _)| *q == p) {
            return Err(ParseError {
                line: end,
                column: 1,
                message: format!("parameter `{}` is missing (give axis.{0} or fixed.{0})", p.name()),
            });
        }
    }
    for p in [Param::X, Param::Y] {
        if !params.iter().any(|(q, _)| *q == p) {
            params.push((p, Values::Fixed(0.0)));
        }
    }
    let observables = observables.ok_or_else(|| ParseError {
        line: end,
        column: 1,
        message: "`observables` is missing".into(),
    })?;
    Ok(SweepSpec {
        params,
        observables,
        pnd_max: pnd_max.unwrap_or(10),
    })
}
