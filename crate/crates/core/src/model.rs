//! Spins, molecules and the two state representations.
//!
//! Biases are carried in *relative* units: 1.0 is the equilibrium bias of
//! the reference spin. The absolute value of that unit (`bias_unit`, about
//! 1e-5 for carbon-13 at room temperature) is only needed when a state is
//! expanded into a joint distribution over spin configurations.
//!
//! Joint distributions index configurations by bit pattern with spin 0 in
//! the most significant bit. A cleared bit means the spin points up (lower
//! energy, population `(1 + ε)/2`), a set bit means down.

use std::collections::HashSet;

use crate::error::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Largest spin count accepted for the joint representation (2^24 states).
pub const MAX_JOINT_SPINS: usize = 24;

/// Two-level Boltzmann polarization `tanh(hν / 2kT)` of a spin-1/2 at
/// resonance frequency `frequency_mhz` in a bath at `temperature_k`.
pub fn equilibrium_bias(frequency_mhz: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) || !temperature_k.is_finite() {
        return Err(Error::InvalidTemperature(temperature_k));
    }
    if !(frequency_mhz >= 0.0) || !frequency_mhz.is_finite() {
        return Err(Error::InvalidMolecule(format!(
            "frequency must be non-negative and finite, got {frequency_mhz}"
        )));
    }
    let x = PLANCK * frequency_mhz * 1e6 / (2.0 * BOLTZMANN * temperature_k);
    Ok(x.tanh())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSpec {
    name: String,
    frequency_mhz: f64,
    t1_s: f64,
}

impl SpinSpec {
    /// `t1_s` may be `f64::INFINITY` for a spin that never relaxes.
    pub fn new(name: impl Into<String>, frequency_mhz: f64, t1_s: f64) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidSpin {
                name,
                reason: "name must not be empty".into(),
            });
        }
        if !(frequency_mhz > 0.0) || !frequency_mhz.is_finite() {
            return Err(Error::InvalidSpin {
                name,
                reason: format!("frequency must be positive, got {frequency_mhz} MHz"),
            });
        }
        if !(t1_s > 0.0) {
            return Err(Error::InvalidSpin {
                name,
                reason: format!("T1 must be positive or infinite, got {t1_s} s"),
            });
        }
        Ok(Self {
            name,
            frequency_mhz,
            t1_s,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn frequency_mhz(&self) -> f64 {
        self.frequency_mhz
    }

    pub fn t1_s(&self) -> f64 {
        self.t1_s
    }
}

/// Scalar coupling between two spins. Carried as metadata only; it does not
/// enter the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub a: String,
    pub b: String,
    pub j_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    spins: Vec<SpinSpec>,
    temperature_k: f64,
    reference: usize,
    bias_unit: f64,
    couplings: Vec<Coupling>,
}

impl Molecule {
    /// Builds a molecule with the first spin as reference. The bias unit is
    /// the reference spin's absolute equilibrium bias.
    pub fn new(spins: Vec<SpinSpec>, temperature_k: f64) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidMolecule(
                "at least one spin is required".into(),
            ));
        }
        let mut seen = HashSet::new();
        for spin in &spins {
            if !seen.insert(spin.name.as_str()) {
                return Err(Error::DuplicateSpin(spin.name.clone()));
            }
        }
        let bias_unit = equilibrium_bias(spins[0].frequency_mhz, temperature_k)?;
        let molecule = Self {
            spins,
            temperature_k,
            reference: 0,
            bias_unit,
            couplings: Vec::new(),
        };
        molecule.check_bias_unit()?;
        Ok(molecule)
    }

    /// Selects the reference spin by name and recomputes the bias unit.
    pub fn with_reference(mut self, name: &str) -> Result<Self> {
        self.reference = self.index_of(name)?;
        self.bias_unit =
            equilibrium_bias(self.spins[self.reference].frequency_mhz, self.temperature_k)?;
        self.check_bias_unit()?;
        Ok(self)
    }

    /// Overrides the absolute value of one relative bias unit.
    pub fn with_bias_unit(mut self, bias_unit: f64) -> Result<Self> {
        self.bias_unit = bias_unit;
        self.check_bias_unit()?;
        Ok(self)
    }

    pub fn with_couplings(mut self, couplings: Vec<Coupling>) -> Result<Self> {
        for c in &couplings {
            self.index_of(&c.a)?;
            self.index_of(&c.b)?;
        }
        self.couplings = couplings;
        Ok(self)
    }

    fn check_bias_unit(&self) -> Result<()> {
        // The largest relative bias must still map to an absolute bias < 1.
        let max_rel = (0..self.len())
            .map(|i| self.relative_equilibrium(i))
            .fold(0.0, f64::max);
        if !(self.bias_unit > 0.0 && self.bias_unit < 1.0) || !(max_rel * self.bias_unit < 1.0) {
            return Err(Error::InvalidMolecule(format!(
                "bias unit {} must lie in (0, 1) and keep every equilibrium bias below 1",
                self.bias_unit
            )));
        }
        Ok(())
    }

    /// Same molecule with every frequency ratio rounded to the nearest
    /// integer, e.g. the pedagogical 1:1:4 version of a two-carbon one-proton
    /// system. T1 values, temperature and bias unit are kept.
    pub fn with_integer_ratios(&self) -> Result<Self> {
        let f_ref = self.spins[self.reference].frequency_mhz;
        let spins = self
            .spins
            .iter()
            .map(|s| {
                let ratio = (s.frequency_mhz / f_ref).round();
                SpinSpec::new(s.name.clone(), ratio * f_ref, s.t1_s)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.spins = spins;
        out.check_bias_unit()?;
        Ok(out)
    }

    pub fn spins(&self) -> &[SpinSpec] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn temperature_k(&self) -> f64 {
        self.temperature_k
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn bias_unit(&self) -> f64 {
        self.bias_unit
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn spin(&self, index: usize) -> &SpinSpec {
        &self.spins[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.spins
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSpin(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.spins.iter().map(|s| s.name.as_str())
    }

    /// Equilibrium bias of spin `index` relative to the reference spin:
    /// the exact frequency ratio.
    pub fn relative_equilibrium(&self, index: usize) -> f64 {
        self.spins[index].frequency_mhz / self.spins[self.reference].frequency_mhz
    }

    pub fn equilibrium_state(&self) -> BiasState {
        BiasState(
            (0..self.len())
                .map(|i| self.relative_equilibrium(i))
                .collect(),
        )
    }

    /// Spin with the largest equilibrium bias; the first listed wins ties.
    pub fn reset_spin(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.spins[i].frequency_mhz > self.spins[best].frequency_mhz {
                best = i;
            }
        }
        best
    }
}

/// Per-spin relative biases of an uncorrelated (product) state.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasState(Vec<f64>);

impl BiasState {
    pub fn new(biases: Vec<f64>) -> Self {
        Self(biases)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the state belongs to `molecule`: matching length and every
    /// absolute bias strictly inside (-1, 1).
    pub fn validate(&self, molecule: &Molecule) -> Result<()> {
        if self.len() != molecule.len() {
            return Err(Error::LengthMismatch {
                expected: molecule.len(),
                actual: self.len(),
            });
        }
        let unit = molecule.bias_unit();
        for (spin, &bias) in self.0.iter().enumerate() {
            if !((bias * unit).abs() < 1.0) {
                return Err(Error::BiasOutOfRange { spin, bias });
            }
        }
        Ok(())
    }
}

impl From<Vec<f64>> for BiasState {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Probability distribution over all 2^n classical spin configurations.
///
/// Populations are stored as their excess over the uniform distribution,
/// `q = N·p − 1` with `N = 2^n`. Near-uniform states (biases of order 1e-5)
/// keep full relative precision in marginals and entropy this way.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    excess: Vec<f64>,
    n: usize,
    bias_unit: f64,
}

const NORM_TOL: f64 = 1e-12;

impl JointState {
    pub fn from_probs(probs: Vec<f64>, bias_unit: f64) -> Result<Self> {
        let len = probs.len();
        Self::check_shape(len, bias_unit)?;
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidJoint(format!(
                "negative or non-finite probability {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidJoint(format!("probabilities sum to {total}")));
        }
        let scale = len as f64;
        Ok(Self {
            excess: probs.iter().map(|p| p * scale - 1.0).collect(),
            n: len.trailing_zeros() as usize,
            bias_unit,
        })
    }

    /// Builds a state directly from excess populations `q = N·p − 1`.
    pub fn from_excess(excess: Vec<f64>, bias_unit: f64) -> Result<Self> {
        let len = excess.len();
        Self::check_shape(len, bias_unit)?;
        if let Some(q) = excess.iter().find(|q| !(**q >= -1.0) || !q.is_finite()) {
            return Err(Error::InvalidJoint(format!(
                "excess population {q} below -1 or non-finite"
            )));
        }
        let drift: f64 = excess.iter().sum::<f64>() / len as f64;
        if drift.abs() > NORM_TOL {
            return Err(Error::InvalidJoint(format!(
                "probabilities sum to {}",
                1.0 + drift
            )));
        }
        Ok(Self {
            excess,
            n: len.trailing_zeros() as usize,
            bias_unit,
        })
    }

    fn check_shape(len: usize, bias_unit: f64) -> Result<()> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidJoint(format!(
                "length {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_JOINT_SPINS {
            return Err(Error::InvalidJoint(format!(
                "{n} spins exceed the joint limit"
            )));
        }
        if !(bias_unit > 0.0 && bias_unit <= 1.0) {
            return Err(Error::InvalidJoint(format!(
                "bias unit {bias_unit} not in (0, 1]"
            )));
        }
        Ok(())
    }

    pub fn uniform(n: usize, bias_unit: f64) -> Result<Self> {
        if n == 0 || n > MAX_JOINT_SPINS {
            return Err(Error::InvalidJoint(format!("unsupported spin count {n}")));
        }
        Self::from_excess(vec![0.0; 1 << n], bias_unit)
    }

    /// Product distribution `Π (1 ± εᵢ·unit)/2` of a bias state.
    pub fn lift(state: &BiasState, molecule: &Molecule) -> Result<Self> {
        state.validate(molecule)?;
        let unit = molecule.bias_unit();
        let absolute: Vec<f64> = state.as_slice().iter().map(|b| b * unit).collect();
        Self::product(&absolute, unit)
    }

    /// Product distribution from absolute biases, with marginals reported in
    /// units of `bias_unit`.
    pub fn product(absolute_biases: &[f64], bias_unit: f64) -> Result<Self> {
        let n = absolute_biases.len();
        if n == 0 || n > MAX_JOINT_SPINS {
            return Err(Error::InvalidJoint(format!("unsupported spin count {n}")));
        }
        for (spin, &e) in absolute_biases.iter().enumerate() {
            if !(e.abs() < 1.0) {
                return Err(Error::BiasOutOfRange {
                    spin,
                    bias: e / bias_unit,
                });
            }
        }
        // N·p = Π (1 ± εᵢ), so q = exp(Σ ln(1 ± εᵢ)) − 1.
        let up: Vec<f64> = absolute_biases.iter().map(|e| e.ln_1p()).collect();
        let down: Vec<f64> = absolute_biases.iter().map(|e| (-e).ln_1p()).collect();
        let excess = (0..1usize << n)
            .map(|x| {
                (0..n)
                    .map(|i| {
                        if (x >> (n - 1 - i)) & 1 == 0 {
                            up[i]
                        } else {
                            down[i]
                        }
                    })
                    .sum::<f64>()
                    .exp_m1()
            })
            .collect();
        Self::from_excess(excess, bias_unit)
    }

    pub fn probs(&self) -> Vec<f64> {
        let scale = self.excess.len() as f64;
        self.excess.iter().map(|q| (1.0 + q) / scale).collect()
    }

    pub fn prob(&self, config: usize) -> f64 {
        (1.0 + self.excess[config]) / self.excess.len() as f64
    }

    /// Excess populations `N·p − 1`.
    pub fn excess(&self) -> &[f64] {
        &self.excess
    }

    pub(crate) fn excess_mut(&mut self) -> &mut [f64] {
        &mut self.excess
    }

    pub fn len(&self) -> usize {
        self.excess.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excess.is_empty()
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn bias_unit(&self) -> f64 {
        self.bias_unit
    }

    /// Bit shift addressing spin `spin` inside a configuration index.
    pub fn shift(&self, spin: usize) -> usize {
        self.n - 1 - spin
    }

    /// `p(up) - p(down)` of one spin, in absolute units.
    pub fn absolute_marginal(&self, spin: usize) -> f64 {
        let bit = 1usize << self.shift(spin);
        let diff: f64 = (0..self.excess.len())
            .filter(|x| x & bit == 0)
            .map(|x| self.excess[x] - self.excess[x | bit])
            .sum();
        diff / self.excess.len() as f64
    }

    /// Marginal biases in relative units.
    pub fn marginals(&self) -> BiasState {
        BiasState(
            (0..self.n)
                .map(|i| self.absolute_marginal(i) / self.bias_unit)
                .collect(),
        )
    }
}

/// A spin-system state in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Bias(BiasState),
    Joint(JointState),
}

impl State {
    pub fn biases(&self) -> BiasState {
        match self {
            State::Bias(b) => b.clone(),
            State::Joint(j) => j.marginals(),
        }
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, State::Joint(_))
    }

    pub fn into_joint(self, molecule: &Molecule) -> Result<JointState> {
        match self {
            State::Bias(b) => JointState::lift(&b, molecule),
            State::Joint(j) => Ok(j),
        }
    }
}

impl From<BiasState> for State {
    fn from(b: BiasState) -> Self {
        State::Bias(b)
    }
}

impl From<JointState> for State {
    fn from(j: JointState) -> Self {
        State::Joint(j)
    }
}
