//! Declarative cooling schedules and the deterministic runner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::dynamics::{self, Gate};
use crate::error::{Error, Result};
use crate::metrics::{information_content, state_entropy};
use crate::model::{BiasState, JointState, Molecule, State};

/// Delay parameter values keyed by name.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum Delay {
    Fixed(f64),
    /// Resolved by name when the schedule is run.
    Param(String),
}

impl Delay {
    pub fn param(name: impl Into<String>) -> Self {
        Delay::Param(name.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Transfer {
        src: String,
        dst: String,
        efficiency: f64,
    },
    Compress {
        target: String,
        aux1: String,
        aux2: String,
    },
    /// Permutation of the configurations of `operands`; `table` maps each
    /// operand pattern (operand 0 most significant) to its image.
    Permute {
        operands: Vec<String>,
        table: Vec<usize>,
    },
    Wait {
        duration: Delay,
    },
}

impl Step {
    pub fn transfer(src: &str, dst: &str, efficiency: f64) -> Self {
        Step::Transfer {
            src: src.into(),
            dst: dst.into(),
            efficiency,
        }
    }

    pub fn compress(target: &str, aux1: &str, aux2: &str) -> Self {
        Step::Compress {
            target: target.into(),
            aux1: aux1.into(),
            aux2: aux2.into(),
        }
    }

    pub fn wait(seconds: f64) -> Self {
        Step::Wait {
            duration: Delay::Fixed(seconds),
        }
    }

    pub fn wait_param(name: &str) -> Self {
        Step::Wait {
            duration: Delay::param(name),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Step::Transfer { .. } => "pt",
            Step::Compress { .. } => "compress",
            Step::Permute { .. } => "permute",
            Step::Wait { .. } => "wait",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    steps: Vec<Step>,
    bindings: Bindings,
}

impl Schedule {
    pub fn new(steps: Vec<Step>) -> Self {
        Self {
            steps,
            bindings: Bindings::new(),
        }
    }

    /// Default value for a delay parameter; run-time bindings take
    /// precedence.
    pub fn with_binding(mut self, name: &str, seconds: f64) -> Self {
        self.bindings.insert(name.to_string(), seconds);
        self
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn steps_mut(&mut self) -> &mut Vec<Step> {
        &mut self.steps
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    /// Names of all symbolic delays referenced by wait steps.
    pub fn parameters(&self) -> BTreeSet<String> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Wait {
                    duration: Delay::Param(p),
                } => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn needs_joint(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, Step::Compress { .. } | Step::Permute { .. }))
    }

    /// Replaces the efficiencies of the transfer steps, in order.
    pub fn set_efficiencies(&mut self, efficiencies: &[f64]) -> Result<()> {
        let count = self
            .steps
            .iter()
            .filter(|s| matches!(s, Step::Transfer { .. }))
            .count();
        if count != efficiencies.len() {
            return Err(Error::LengthMismatch {
                expected: count,
                actual: efficiencies.len(),
            });
        }
        let mut it = efficiencies.iter();
        for step in &mut self.steps {
            if let Step::Transfer { efficiency, .. } = step {
                *efficiency = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Checks every spin name resolves and every gate is well formed,
    /// without requiring delays to be bound.
    pub fn validate(&self, molecule: &Molecule) -> Result<()> {
        for step in &self.steps {
            match step {
                Step::Wait {
                    duration: Delay::Fixed(t),
                } if !(*t >= 0.0) => return Err(Error::InvalidDuration(*t)),
                Step::Wait { .. } => {}
                _ => {
                    resolve_gate(step, molecule)?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn compile(&self, molecule: &Molecule, bindings: &Bindings) -> Result<Vec<Op>> {
        self.steps
            .iter()
            .map(|step| match step {
                Step::Wait { duration } => {
                    let (seconds, param) = match duration {
                        Delay::Fixed(t) => (*t, None),
                        Delay::Param(p) => {
                            let t = bindings
                                .get(p)
                                .or_else(|| self.bindings.get(p))
                                .copied()
                                .ok_or_else(|| Error::UnboundDelay(p.clone()))?;
                            (t, Some(p.clone()))
                        }
                    };
                    if !(seconds >= 0.0) || !seconds.is_finite() {
                        return Err(Error::InvalidDuration(seconds));
                    }
                    Ok(Op::Wait { seconds, param })
                }
                _ => Ok(Op::Gate(resolve_gate(step, molecule)?)),
            })
            .collect()
    }
}

fn resolve_gate(step: &Step, molecule: &Molecule) -> Result<Gate> {
    let distinct = |names: &[&String]| -> Result<()> {
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::RepeatedOperand(
                    names.iter().map(|s| s.to_string()).collect(),
                ));
            }
        }
        Ok(())
    };
    match step {
        Step::Transfer {
            src,
            dst,
            efficiency,
        } => {
            distinct(&[src, dst])?;
            if !(0.0..=1.0).contains(efficiency) {
                return Err(Error::InvalidEfficiency(*efficiency));
            }
            Ok(Gate::Transfer {
                src: molecule.index_of(src)?,
                dst: molecule.index_of(dst)?,
                efficiency: *efficiency,
            })
        }
        Step::Compress { target, aux1, aux2 } => {
            distinct(&[target, aux1, aux2])?;
            Ok(Gate::Compress {
                target: molecule.index_of(target)?,
                aux1: molecule.index_of(aux1)?,
                aux2: molecule.index_of(aux2)?,
            })
        }
        Step::Permute { operands, table } => {
            let names: Vec<&String> = operands.iter().collect();
            distinct(&names)?;
            let operands = operands
                .iter()
                .map(|o| molecule.index_of(o))
                .collect::<Result<Vec<_>>>()?;
            // Validates the table against the operand count.
            dynamics::lift_local_permutation(molecule.len(), &operands, table)?;
            Ok(Gate::Permutation {
                operands,
                table: table.clone(),
            })
        }
        Step::Wait { .. } => unreachable!("waits are not gates"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Op {
    Gate(Gate),
    Wait { seconds: f64, param: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Waits instantly re-equilibrate the reset spin (largest equilibrium
    /// bias) and freeze everything else.
    Ideal,
    /// Every spin relaxes with its own T1 during waits.
    #[default]
    Physical,
}

pub const POTENT_PROTON: &str = "H";
pub const POTENT_NEAR: &str = "C2";
pub const POTENT_FAR: &str = "C1";

/// The two-reset heat-bath cooling schedule for a two-carbon, one-proton
/// molecule, with symbolic repolarization delays `t1` and `t2`:
///
/// `PT(H→C2), PT(C2→C1), wait t1, PT(H→C2), wait t2`
///
/// `efficiencies` apply to the three transfers in that order (default 1).
pub fn potent_template(efficiencies: Option<[f64; 3]>) -> Result<Schedule> {
    let [e1, e2, e3] = efficiencies.unwrap_or([1.0; 3]);
    for e in [e1, e2, e3] {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidEfficiency(e));
        }
    }
    Ok(Schedule::new(vec![
        Step::transfer(POTENT_PROTON, POTENT_NEAR, e1),
        Step::transfer(POTENT_NEAR, POTENT_FAR, e2),
        Step::wait_param("t1"),
        Step::transfer(POTENT_PROTON, POTENT_NEAR, e3),
        Step::wait_param("t2"),
    ]))
}

/// [`potent_template`] with both delays bound.
pub fn potent_schedule(t1: f64, t2: f64, efficiencies: Option<[f64; 3]>) -> Result<Schedule> {
    for t in [t1, t2] {
        if !(t >= 0.0) {
            return Err(Error::InvalidDuration(t));
        }
    }
    Ok(potent_template(efficiencies)?
        .with_binding("t1", t1)
        .with_binding("t2", t2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub step_index: usize,
    pub kind: &'static str,
    pub description: String,
    pub elapsed_s: f64,
    pub biases: BiasState,
    pub ic: f64,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub spin_names: Vec<String>,
    /// The first entry is the initial state (after any promotion to the
    /// joint representation).
    pub entries: Vec<TraceEntry>,
    pub final_state: State,
}

impl Trace {
    pub fn initial(&self) -> &TraceEntry {
        &self.entries[0]
    }

    pub fn last(&self) -> &TraceEntry {
        self.entries
            .last()
            .expect("trace always holds the initial entry")
    }

    /// CSV with columns `step_index, step_kind, elapsed_s, bias_<spin>...,
    /// ic, entropy_bits`. Entropy gets twelve decimals since its deviation
    /// from n is of order bias_unit².
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step_index,step_kind,elapsed_s");
        for name in &self.spin_names {
            let _ = write!(out, ",bias_{name}");
        }
        out.push_str(",ic,entropy_bits\n");
        for e in &self.entries {
            let _ = write!(out, "{},{},{:.6}", e.step_index, e.kind, e.elapsed_s);
            for b in e.biases.as_slice() {
                let _ = write!(out, ",{b:.6}");
            }
            let _ = writeln!(out, ",{:.6},{:.12}", e.ic, e.entropy_bits);
        }
        out
    }
}

fn prepare(molecule: &Molecule, schedule: &Schedule, initial: State) -> Result<State> {
    match &initial {
        State::Bias(b) => b.validate(molecule)?,
        State::Joint(j) if j.n_spins() != molecule.len() => {
            return Err(Error::LengthMismatch {
                expected: molecule.len(),
                actual: j.n_spins(),
            })
        }
        State::Joint(_) => {}
    }
    match initial {
        State::Bias(b) if schedule.needs_joint() => {
            Ok(State::Joint(JointState::lift(&b, molecule)?))
        }
        s => Ok(s),
    }
}

fn execute_op(op: &Op, state: &mut State, molecule: &Molecule, mode: Mode) -> Result<()> {
    match op {
        Op::Gate(g) => g.apply_in_place(state),
        Op::Wait { seconds, .. } => match mode {
            Mode::Physical => dynamics::relax_in_place(state, molecule, *seconds),
            Mode::Ideal if *seconds == 0.0 => Ok(()),
            Mode::Ideal => dynamics::reset_in_place(state, molecule, &[molecule.reset_spin()]),
        },
    }
}

fn describe(step: &Step, op: &Op) -> String {
    match (step, op) {
        (
            Step::Transfer {
                src,
                dst,
                efficiency,
            },
            _,
        ) => {
            format!("pt {src}->{dst} eta={efficiency}")
        }
        (Step::Compress { target, aux1, aux2 }, _) => format!("compress {target} <- {aux1},{aux2}"),
        (Step::Permute { operands, .. }, _) => format!("permute {}", operands.join(",")),
        (
            _,
            Op::Wait {
                seconds,
                param: Some(p),
            },
        ) => format!("wait {p}={seconds} s"),
        (_, Op::Wait { seconds, .. }) => format!("wait {seconds} s"),
        _ => unreachable!(),
    }
}

/// Runs `schedule` from `initial`, recording the state after every step.
///
/// The state is promoted to the joint representation once, up front, when
/// the schedule contains a compression or permutation.
pub fn run_schedule(
    molecule: &Molecule,
    schedule: &Schedule,
    bindings: &Bindings,
    initial: State,
    mode: Mode,
) -> Result<Trace> {
    let ops = schedule.compile(molecule, bindings)?;
    let mut state = prepare(molecule, schedule, initial)?;
    let record = |step_index, kind, description, elapsed_s, state: &State| -> Result<TraceEntry> {
        let biases = state.biases();
        Ok(TraceEntry {
            step_index,
            kind,
            description,
            elapsed_s,
            ic: information_content(&biases),
            entropy_bits: state_entropy(state, molecule)?,
            biases,
        })
    };
    let mut elapsed = 0.0;
    let mut entries = vec![record(0, "initial", "initial".to_string(), 0.0, &state)?];
    for (i, (step, op)) in schedule.steps().iter().zip(&ops).enumerate() {
        execute_op(op, &mut state, molecule, mode)?;
        if let Op::Wait { seconds, .. } = op {
            elapsed += seconds;
        }
        entries.push(record(
            i + 1,
            step.kind(),
            describe(step, op),
            elapsed,
            &state,
        )?);
    }
    Ok(Trace {
        spin_names: molecule.names().map(String::from).collect(),
        entries,
        final_state: state,
    })
}

/// Final state of a run without recording a trace. Same arithmetic as
/// [`run_schedule`], so the results agree bit for bit.
pub fn final_state(
    molecule: &Molecule,
    schedule: &Schedule,
    bindings: &Bindings,
    initial: State,
    mode: Mode,
) -> Result<State> {
    let ops = schedule.compile(molecule, bindings)?;
    let mut state = prepare(molecule, schedule, initial)?;
    for op in &ops {
        execute_op(op, &mut state, molecule, mode)?;
    }
    Ok(state)
}
