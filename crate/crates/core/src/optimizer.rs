//! Exhaustive grid search over the two repolarization delays.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::information_content;
use crate::model::{Molecule, State};
use crate::schedule::{final_state, Bindings, Mode, Schedule};

pub const FIRST_DELAY: &str = "t1";
pub const SECOND_DELAY: &str = "t2";

/// Uniform axis `min, min + step, …, ≤ max` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let axis = Self { min, max, step };
        axis.points()?;
        Ok(axis)
    }

    pub fn single(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            step: 1.0,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let Self { min, max, step } = *self;
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite axis {min}:{max}:{step}"
            )));
        }
        if min < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "delays cannot be negative ({min})"
            )));
        }
        if min > max {
            return Err(Error::InvalidGrid(format!("min {min} exceeds max {max}")));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if min == max {
            return Ok(vec![min]);
        }
        if step > max - min {
            return Err(Error::EmptyGrid(format!(
                "step {step} exceeds the range {min}..{max}"
            )));
        }
        // Guard against 29.999999 / 0.05 style truncation.
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| min + k as f64 * step).collect())
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// Parses `MIN:MAX:STEP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, step] = parts.as_slice() else {
            return Err(Error::InvalidGrid(format!(
                "expected MIN:MAX:STEP, got `{s}`"
            )));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidGrid(format!("`{x}`: {e}")))
        };
        Self::new(num(min)?, num(max)?, num(step)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t1: Axis,
    pub t2: Axis,
}

impl GridSpec {
    pub fn new(t1: Axis, t2: Axis) -> Self {
        Self { t1, t2 }
    }

    /// 0–30 s on both delays with 0.05 s spacing.
    pub fn default_tce() -> Self {
        let axis = Axis {
            min: 0.0,
            max: 30.0,
            step: 0.05,
        };
        Self { t1: axis, t2: axis }
    }
}

/// Information content of a schedule's final state over a grid of
/// `(t1, t2)` values. Cells are stored with `t1` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    t1_values: Vec<f64>,
    t2_values: Vec<f64>,
    ic: Vec<f64>,
    argmax: (usize, usize),
}

impl Surface {
    fn new(t1_values: Vec<f64>, t2_values: Vec<f64>, ic: Vec<f64>) -> Self {
        // Strictly-greater scan over increasing (t1, t2): ties resolve to
        // the lexicographically smallest cell.
        let mut best = 0;
        for (k, &v) in ic.iter().enumerate() {
            if v > ic[best] {
                best = k;
            }
        }
        let cols = t2_values.len();
        Self {
            argmax: (best / cols, best % cols),
            t1_values,
            t2_values,
            ic,
        }
    }

    pub fn t1_values(&self) -> &[f64] {
        &self.t1_values
    }

    pub fn t2_values(&self) -> &[f64] {
        &self.t2_values
    }

    pub fn values(&self) -> &[f64] {
        &self.ic
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.ic[i * self.t2_values.len() + j]
    }

    pub fn len(&self) -> usize {
        self.ic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ic.is_empty()
    }

    pub fn argmax(&self) -> (usize, usize) {
        self.argmax
    }

    /// `(t1, t2, ic)` of the best cell.
    pub fn best(&self) -> (f64, f64, f64) {
        let (i, j) = self.argmax;
        (self.t1_values[i], self.t2_values[j], self.get(i, j))
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.t1_values.iter().enumerate().flat_map(move |(i, &a)| {
            self.t2_values
                .iter()
                .enumerate()
                .map(move |(j, &b)| (a, b, self.get(i, j)))
        })
    }
}

fn check_template(template: &Schedule) -> Result<()> {
    let found: Vec<String> = template.parameters().into_iter().collect();
    let expected = vec![FIRST_DELAY.to_string(), SECOND_DELAY.to_string()];
    if found != expected {
        return Err(Error::UnexpectedParameters { expected, found });
    }
    Ok(())
}

/// Final information content for one pair of delays.
pub fn evaluate_cell(
    molecule: &Molecule,
    template: &Schedule,
    initial: &State,
    mode: Mode,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let mut bindings = Bindings::new();
    bindings.insert(FIRST_DELAY.to_string(), t1);
    bindings.insert(SECOND_DELAY.to_string(), t2);
    let state = final_state(molecule, template, &bindings, initial.clone(), mode)?;
    Ok(information_content(&state.biases()))
}

/// Evaluates the template on explicit axis values (ascending).
pub fn evaluate_surface(
    molecule: &Molecule,
    template: &Schedule,
    initial: &State,
    mode: Mode,
    t1_values: Vec<f64>,
    t2_values: Vec<f64>,
) -> Result<Surface> {
    check_template(template)?;
    if t1_values.is_empty() || t2_values.is_empty() {
        return Err(Error::EmptyGrid("no delay values".into()));
    }
    template.validate(molecule)?;
    let rows: Vec<Vec<f64>> = t1_values
        .par_iter()
        .map(|&a| {
            t2_values
                .iter()
                .map(|&b| evaluate_cell(molecule, template, initial, mode, a, b))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Surface::new(t1_values, t2_values, rows.concat()))
}

/// Grid search from the molecule's equilibrium state in physical mode.
pub fn optimize_delays(
    molecule: &Molecule,
    template: &Schedule,
    grid: &GridSpec,
) -> Result<Surface> {
    optimize_delays_with(
        molecule,
        template,
        grid,
        &State::Bias(molecule.equilibrium_state()),
        Mode::Physical,
    )
}

pub fn optimize_delays_with(
    molecule: &Molecule,
    template: &Schedule,
    grid: &GridSpec,
    initial: &State,
    mode: Mode,
) -> Result<Surface> {
    evaluate_surface(
        molecule,
        template,
        initial,
        mode,
        grid.t1.points()?,
        grid.t2.points()?,
    )
}

/// Re-searches a 5×5 neighbourhood of the argmax at half the given spacing.
/// The previous best cell is part of the new grid, so the maximum found can
/// only go up.
pub fn refine(
    molecule: &Molecule,
    template: &Schedule,
    initial: &State,
    mode: Mode,
    surface: &Surface,
    t1_step: f64,
    t2_step: f64,
) -> Result<Surface> {
    let (a, b, _) = surface.best();
    let around = |c: f64, step: f64| -> Vec<f64> {
        let h = step / 2.0;
        (-2i32..=2)
            .map(|k| if k == 0 { c } else { c + f64::from(k) * h })
            .filter(|v| *v >= 0.0)
            .collect()
    };
    evaluate_surface(
        molecule,
        template,
        initial,
        mode,
        around(a, t1_step),
        around(b, t2_step),
    )
}

/// CSV `t1_s,t2_s,ic` with six decimals, one row per cell in t1-major order.
pub fn surface_to_csv(surface: &Surface) -> String {
    let mut out = String::from("t1_s,t2_s,ic\n");
    for (a, b, v) in surface.cells() {
        let _ = writeln!(out, "{a:.6},{b:.6},{v:.6}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub t1_s: f64,
    pub t2_s: f64,
    pub ic: f64,
}

pub fn surface_from_csv(text: &str) -> Result<Vec<SurfaceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "t1_s,t2_s,ic" => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                reason: "expected header `t1_s,t2_s,ic`".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let err = |reason: String| Error::Csv {
                line: k + 1,
                reason,
            };
            let fields = l
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| err(format!("`{f}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            match fields.as_slice() {
                [t1_s, t2_s, ic] => Ok(SurfaceRow {
                    t1_s: *t1_s,
                    t2_s: *t2_s,
                    ic: *ic,
                }),
                _ => Err(err(format!("expected 3 fields, got {}", fields.len()))),
            }
        })
        .collect()
}
