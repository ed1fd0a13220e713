//! State evolution: T1 relaxation, polarization transfer, compression and
//! general permutations of spin configurations.
//!
//! Every gate is instantaneous. Relaxation only happens through
//! [`relax_state`] (or [`reset_spins`] for the infinite-T1-ratio limit).
//! Public functions are pure and return a new state; the `*_in_place`
//! variants are what the schedule runner uses.

use crate::error::{Error, Result};
use crate::model::{BiasState, JointState, Molecule, State};

/// Probability that a spin keeps its configuration over `t` seconds.
pub fn keep_probability(t: f64, t1: f64) -> f64 {
    if t1.is_infinite() || t == 0.0 {
        1.0
    } else {
        (-t / t1).exp()
    }
}

fn check_duration(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::InvalidDuration(t));
    }
    Ok(())
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidEfficiency(eta));
    }
    Ok(())
}

fn mix(current: f64, target: f64, keep: f64) -> f64 {
    if keep == 1.0 {
        current
    } else if keep == 0.0 {
        target
    } else {
        target + (current - target) * keep
    }
}

/// Exponential return of a bias toward equilibrium:
/// `ε(t) = ε_eq + (ε₀ − ε_eq)·e^(−t/T1)`.
pub fn relax_bias(bias: f64, equilibrium: f64, t: f64, t1: f64) -> Result<f64> {
    check_duration(t)?;
    if !(t1 > 0.0) {
        return Err(Error::InvalidSpin {
            name: String::new(),
            reason: format!("T1 must be positive or infinite, got {t1}"),
        });
    }
    Ok(mix(bias, equilibrium, keep_probability(t, t1)))
}

/// Resamples the bit of `spin` from a coin of absolute bias `target` with
/// probability `1 - keep`. Written on excess populations `q = N·p − 1`:
/// `p₀' = keep·p₀ + (1 − keep)(p₀ + p₁)(1 + target)/2`, and likewise for p₁.
fn joint_kernel(joint: &mut JointState, spin: usize, keep: f64, target: f64) {
    if keep == 1.0 {
        return;
    }
    let bit = 1usize << joint.shift(spin);
    let up = (1.0 + target) / 2.0;
    let down = (1.0 - target) / 2.0;
    let fresh = 1.0 - keep;
    let q = joint.excess_mut();
    for x in 0..q.len() {
        if x & bit != 0 {
            continue;
        }
        let (q0, q1) = (q[x], q[x | bit]);
        let pair = q0 + q1;
        q[x] = keep * q0 + fresh * (pair * up + target);
        q[x | bit] = keep * q1 + fresh * (pair * down - target);
    }
}

fn check_len(state: &State, molecule: &Molecule) -> Result<()> {
    let actual = match state {
        State::Bias(b) => b.len(),
        State::Joint(j) => j.n_spins(),
    };
    if actual != molecule.len() {
        return Err(Error::LengthMismatch {
            expected: molecule.len(),
            actual,
        });
    }
    Ok(())
}

fn check_spin(state: &State, spin: usize) -> Result<()> {
    let n = match state {
        State::Bias(b) => b.len(),
        State::Joint(j) => j.n_spins(),
    };
    if spin >= n {
        return Err(Error::UnknownSpin(format!("#{spin}")));
    }
    Ok(())
}

fn check_distinct(spins: &[usize]) -> Result<()> {
    for (i, a) in spins.iter().enumerate() {
        if spins[i + 1..].contains(a) {
            return Err(Error::RepeatedOperand(
                spins.iter().map(|s| format!("#{s}")).collect(),
            ));
        }
    }
    Ok(())
}

pub(crate) fn relax_in_place(state: &mut State, molecule: &Molecule, t: f64) -> Result<()> {
    check_duration(t)?;
    check_len(state, molecule)?;
    match state {
        State::Bias(b) => {
            for (i, e) in b.as_mut_slice().iter_mut().enumerate() {
                let keep = keep_probability(t, molecule.spin(i).t1_s());
                *e = mix(*e, molecule.relative_equilibrium(i), keep);
            }
        }
        State::Joint(j) => {
            let unit = j.bias_unit();
            for i in 0..molecule.len() {
                let keep = keep_probability(t, molecule.spin(i).t1_s());
                joint_kernel(j, i, keep, molecule.relative_equilibrium(i) * unit);
            }
        }
    }
    Ok(())
}

/// Every spin relaxes independently toward its own equilibrium bias with its
/// own T1 for `t` seconds.
pub fn relax_state(state: &State, molecule: &Molecule, t: f64) -> Result<State> {
    let mut out = state.clone();
    relax_in_place(&mut out, molecule, t)?;
    Ok(out)
}

pub(crate) fn reset_in_place(
    state: &mut State,
    molecule: &Molecule,
    spins: &[usize],
) -> Result<()> {
    check_len(state, molecule)?;
    for &i in spins {
        check_spin(state, i)?;
    }
    match state {
        State::Bias(b) => {
            for &i in spins {
                b.as_mut_slice()[i] = molecule.relative_equilibrium(i);
            }
        }
        State::Joint(j) => {
            let unit = j.bias_unit();
            for &i in spins {
                joint_kernel(j, i, 0.0, molecule.relative_equilibrium(i) * unit);
            }
        }
    }
    Ok(())
}

/// Instantly returns the listed spins to equilibrium, leaving the others
/// untouched: a wait in the limit of infinite T1 ratio.
pub fn reset_spins(state: &State, molecule: &Molecule, spins: &[usize]) -> Result<State> {
    let mut out = state.clone();
    reset_in_place(&mut out, molecule, spins)?;
    Ok(out)
}

fn swap_bits(joint: &mut JointState, a: usize, b: usize) {
    let ma = 1usize << joint.shift(a);
    let mb = 1usize << joint.shift(b);
    let probs = joint.excess_mut();
    for x in 0..probs.len() {
        if x & ma == 0 && x & mb != 0 {
            probs.swap(x, x ^ ma ^ mb);
        }
    }
}

pub(crate) fn transfer_in_place(state: &mut State, src: usize, dst: usize, eta: f64) -> Result<()> {
    check_efficiency(eta)?;
    check_spin(state, src)?;
    check_spin(state, dst)?;
    check_distinct(&[src, dst])?;
    match state {
        State::Bias(b) => {
            let s = b.as_mut_slice();
            let (old_src, old_dst) = (s[src], s[dst]);
            s[dst] = eta * old_src;
            s[src] = eta * old_dst;
        }
        State::Joint(j) => {
            swap_bits(j, src, dst);
            joint_kernel(j, src, eta, 0.0);
            joint_kernel(j, dst, eta, 0.0);
        }
    }
    Ok(())
}

/// Ideal polarization transfer `src → dst`: the two spins are swapped.
pub fn pt_perfect(state: &State, src: usize, dst: usize) -> Result<State> {
    let mut out = state.clone();
    check_spin(&out, src)?;
    check_spin(&out, dst)?;
    check_distinct(&[src, dst])?;
    match &mut out {
        State::Bias(b) => b.as_mut_slice().swap(src, dst),
        State::Joint(j) => swap_bits(j, src, dst),
    }
    Ok(out)
}

/// Lossy transfer with efficiency `eta`: an attenuated swap where the
/// destination receives `eta·src` and the source keeps `eta·dst`.
///
/// In the joint representation this is the bit swap followed by a
/// depolarizing kernel on both operands (keep with probability `eta`,
/// otherwise replace by a fair coin).
pub fn pt_imperfect(state: &State, src: usize, dst: usize, eta: f64) -> Result<State> {
    let mut out = state.clone();
    transfer_in_place(&mut out, src, dst, eta)?;
    Ok(out)
}

/// Classical 3-bit compression on operands `(target, aux1, aux2)`: swaps the
/// populations of patterns 011 and 100, leaving every other configuration
/// untouched. For equal input biases ε the target ends at `(3ε − ε³)/2`.
pub fn compress3(
    joint: &JointState,
    target: usize,
    aux1: usize,
    aux2: usize,
) -> Result<JointState> {
    let mut out = joint.clone();
    compress3_in_place(&mut out, target, aux1, aux2)?;
    Ok(out)
}

pub(crate) fn compress3_in_place(
    joint: &mut JointState,
    target: usize,
    aux1: usize,
    aux2: usize,
) -> Result<()> {
    for s in [target, aux1, aux2] {
        if s >= joint.n_spins() {
            return Err(Error::UnknownSpin(format!("#{s}")));
        }
    }
    check_distinct(&[target, aux1, aux2])?;
    let mt = 1usize << joint.shift(target);
    let m1 = 1usize << joint.shift(aux1);
    let m2 = 1usize << joint.shift(aux2);
    let all = mt | m1 | m2;
    let probs = joint.excess_mut();
    for x in 0..probs.len() {
        if x & all == m1 | m2 {
            probs.swap(x, x ^ all);
        }
    }
    Ok(())
}

/// State-level compression; the bias representation cannot carry the
/// correlations compression creates.
pub fn compress_state(state: &State, target: usize, aux1: usize, aux2: usize) -> Result<State> {
    match state {
        State::Bias(_) => Err(Error::RequiresJoint("compression")),
        State::Joint(j) => Ok(State::Joint(compress3(j, target, aux1, aux2)?)),
    }
}

fn check_bijection(table: &[usize], len: usize) -> Result<()> {
    if table.len() != len {
        return Err(Error::InvalidPermutation(len));
    }
    let mut seen = vec![false; len];
    for &y in table {
        if y >= len || std::mem::replace(&mut seen[y], true) {
            return Err(Error::InvalidPermutation(len));
        }
    }
    Ok(())
}

/// Moves the population of configuration `x` to `table[x]`.
pub fn apply_permutation(joint: &JointState, table: &[usize]) -> Result<JointState> {
    let mut out = joint.clone();
    apply_permutation_in_place(&mut out, table)?;
    Ok(out)
}

pub(crate) fn apply_permutation_in_place(joint: &mut JointState, table: &[usize]) -> Result<()> {
    let probs = joint.excess_mut();
    check_bijection(table, probs.len())?;
    let old = probs.to_vec();
    for (x, &y) in table.iter().enumerate() {
        probs[y] = old[x];
    }
    Ok(())
}

/// Expands a permutation of the `2^k` patterns of `operands` (operand 0 in
/// the most significant position) to a full-state table over `n` spins.
pub fn lift_local_permutation(n: usize, operands: &[usize], local: &[usize]) -> Result<Vec<usize>> {
    let k = operands.len();
    if k == 0 || operands.iter().any(|&s| s >= n) {
        return Err(Error::InvalidPermutation(1 << k));
    }
    check_distinct(operands)?;
    check_bijection(local, 1 << k)?;
    let masks: Vec<usize> = operands.iter().map(|&s| 1usize << (n - 1 - s)).collect();
    let all: usize = masks.iter().fold(0, |acc, m| acc | m);
    let table = (0..1usize << n)
        .map(|x| {
            let pattern = masks
                .iter()
                .fold(0, |acc, &m| (acc << 1) | usize::from(x & m != 0));
            let image = local[pattern];
            masks.iter().enumerate().fold(x & !all, |acc, (i, &m)| {
                if (image >> (k - 1 - i)) & 1 == 1 {
                    acc | m
                } else {
                    acc
                }
            })
        })
        .collect();
    Ok(table)
}

/// A gate addressed by spin index.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Transfer {
        src: usize,
        dst: usize,
        efficiency: f64,
    },
    Compress {
        target: usize,
        aux1: usize,
        aux2: usize,
    },
    /// Permutation of the operand patterns, see [`lift_local_permutation`].
    Permutation {
        operands: Vec<usize>,
        table: Vec<usize>,
    },
}

impl Gate {
    pub fn needs_joint(&self) -> bool {
        !matches!(self, Gate::Transfer { .. })
    }

    pub fn apply(&self, state: &State) -> Result<State> {
        let mut out = state.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub(crate) fn apply_in_place(&self, state: &mut State) -> Result<()> {
        match self {
            Gate::Transfer {
                src,
                dst,
                efficiency,
            } => transfer_in_place(state, *src, *dst, *efficiency),
            Gate::Compress { target, aux1, aux2 } => match state {
                State::Bias(_) => Err(Error::RequiresJoint("compression")),
                State::Joint(j) => compress3_in_place(j, *target, *aux1, *aux2),
            },
            Gate::Permutation { operands, table } => match state {
                State::Bias(_) => Err(Error::RequiresJoint("permutation")),
                State::Joint(j) => {
                    let full = lift_local_permutation(j.n_spins(), operands, table)?;
                    apply_permutation_in_place(j, &full)
                }
            },
        }
    }
}

/// Bias-representation shortcut used by tests and callers that only track
/// biases.
pub fn transfer_biases(biases: &BiasState, src: usize, dst: usize, eta: f64) -> Result<BiasState> {
    match pt_imperfect(&State::Bias(biases.clone()), src, dst, eta)? {
        State::Bias(b) => Ok(b),
        State::Joint(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tce;

    fn bias(v: &[f64]) -> State {
        State::Bias(BiasState::new(v.to_vec()))
    }

    fn biases(s: &State) -> Vec<f64> {
        s.biases().into_vec()
    }

    #[test]
    fn relax_bias_fixed_point_and_limits() {
        assert_eq!(relax_bias(3.98, 3.98, 12.0, 3.5).unwrap(), 3.98);
        assert_eq!(relax_bias(1.0, 3.98, 0.0, 3.5).unwrap(), 1.0);
        assert_eq!(relax_bias(1.0, 3.98, f64::INFINITY, 3.5).unwrap(), 3.98);
        assert_eq!(relax_bias(1.0, 3.98, 100.0, f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(
            relax_bias(1.0, 3.98, -1.0, 3.5),
            Err(Error::InvalidDuration(_))
        ));
    }

    #[test]
    fn relax_bias_analytic_values() {
        // 3.98 - 2.98 e^{-8.25/3.5}
        let e = relax_bias(1.0, 3.98, 8.25, 3.5).unwrap();
        assert!((e - 3.697_823).abs() < 1e-6, "{e}");
        // 1 + 3 e^{-8.25/43}
        let e = relax_bias(4.0, 1.0, 8.25, 43.0).unwrap();
        assert!((e - 3.476_266).abs() < 1e-6, "{e}");
    }

    #[test]
    fn equilibrium_is_stationary() {
        let m = tce();
        let eq = State::Bias(m.equilibrium_state());
        assert_eq!(relax_state(&eq, &m, 5.0).unwrap(), eq);

        let joint = State::Joint(JointState::lift(&m.equilibrium_state(), &m).unwrap());
        let after = relax_state(&joint, &m, 5.0).unwrap();
        let (State::Joint(a), State::Joint(b)) = (&after, &joint) else {
            unreachable!()
        };
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn long_wait_reaches_equilibrium() {
        let m = tce();
        let start = bias(&[3.0, 0.0, 2.0]);
        let end = relax_state(&start, &m, 10.0 * 43.0).unwrap();
        for (a, b) in biases(&end).iter().zip(m.equilibrium_state().as_slice()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn joint_relaxation_matches_bias_relaxation() {
        let m = tce();
        let start = BiasState::new(vec![3.9, 0.2, 1.0]);
        let by_bias = relax_state(&State::Bias(start.clone()), &m, 7.3).unwrap();
        let joint = State::Joint(JointState::lift(&start, &m).unwrap());
        let by_joint = relax_state(&joint, &m, 7.3).unwrap();
        for (a, b) in biases(&by_bias).iter().zip(biases(&by_joint)) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(relax_state(&joint, &m, -1.0).is_err());
    }

    #[test]
    fn pt_perfect_swaps() {
        let s = pt_perfect(&bias(&[1.0, 1.0, 4.0]), 2, 1).unwrap();
        assert_eq!(biases(&s), vec![1.0, 4.0, 1.0]);
        let back = pt_perfect(&s, 2, 1).unwrap();
        assert_eq!(biases(&back), vec![1.0, 1.0, 4.0]);
        assert!(pt_perfect(&s, 1, 1).is_err());
        assert!(pt_perfect(&s, 1, 7).is_err());
    }

    #[test]
    fn pt_perfect_joint_matches_explicit_permutation() {
        let probs: Vec<f64> = (1..=8).map(|x| x as f64 / 36.0).collect();
        let j = JointState::from_probs(probs, 1.0).unwrap();
        let j_excess = j.excess().to_vec();
        let out = pt_perfect(&State::Joint(j), 2, 1).unwrap();
        let State::Joint(out) = out else {
            unreachable!()
        };
        // Swapping spins 1 and 2 (the two low bits): 001 <-> 010, 101 <-> 110.
        let mut expect = j_excess;
        expect.swap(0b001, 0b010);
        expect.swap(0b101, 0b110);
        assert_eq!(out.excess(), expect.as_slice());
    }

    #[test]
    fn pt_imperfect_values() {
        let s = bias(&[1.0, 1.0, 3.98]);
        assert_eq!(
            pt_imperfect(&s, 2, 1, 1.0).unwrap(),
            pt_perfect(&s, 2, 1).unwrap()
        );
        let lossy = biases(&pt_imperfect(&s, 2, 1, 0.92).unwrap());
        assert!((lossy[1] - 3.6616).abs() < 1e-12);
        assert!((lossy[2] - 0.92).abs() < 1e-12);
        assert_eq!(lossy[0], 1.0);
        let dead = biases(&pt_imperfect(&s, 2, 1, 0.0).unwrap());
        assert_eq!(dead, vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            pt_imperfect(&s, 2, 1, 1.2),
            Err(Error::InvalidEfficiency(_))
        ));
        assert!(pt_imperfect(&s, 2, 1, -0.1).is_err());
    }

    #[test]
    fn pt_imperfect_joint_agrees_with_bias() {
        let m = tce();
        let start = BiasState::new(vec![1.0, 1.0, 3.98]);
        let j = State::Joint(JointState::lift(&start, &m).unwrap());
        let b = State::Bias(start);
        for eta in [0.0, 0.3, 0.92, 1.0] {
            let x = biases(&pt_imperfect(&j, 2, 1, eta).unwrap());
            let y = biases(&pt_imperfect(&b, 2, 1, eta).unwrap());
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-12);
            }
        }
        assert_eq!(
            pt_imperfect(&j, 2, 1, 1.0).unwrap(),
            pt_perfect(&j, 2, 1).unwrap()
        );
    }

    /// Brute-force oracle: enumerate the 8 product populations, move 100's
    /// mass onto 011 and vice versa, read off the target marginal.
    fn compress_oracle(eps: f64) -> f64 {
        let pop = |bits: [u8; 3]| -> f64 {
            bits.iter()
                .map(|&b| {
                    if b == 0 {
                        (1.0 + eps) / 2.0
                    } else {
                        (1.0 - eps) / 2.0
                    }
                })
                .product()
        };
        let mut total = 0.0;
        for x in 0u8..8 {
            let bits = [(x >> 2) & 1, (x >> 1) & 1, x & 1];
            let source = match bits {
                [0, 1, 1] => [1, 0, 0],
                [1, 0, 0] => [0, 1, 1],
                b => b,
            };
            let sign = if bits[0] == 0 { 1.0 } else { -1.0 };
            total += sign * pop(source);
        }
        total
    }

    #[test]
    fn compress3_matches_oracle_and_closed_form() {
        for eps in [0.1, 0.5, 0.9] {
            let j = JointState::product(&[eps; 3], 1.0).unwrap();
            let out = compress3(&j, 0, 1, 2).unwrap();
            let got = out.absolute_marginal(0);
            assert!((got - compress_oracle(eps)).abs() < 1e-12);
            assert!((got - (3.0 * eps - eps.powi(3)) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn compress3_leaves_uniform_alone() {
        let j = JointState::uniform(3, 1.0).unwrap();
        assert_eq!(compress3(&j, 0, 1, 2).unwrap(), j);
    }

    #[test]
    fn compress3_small_bias_gain() {
        let eps = 1e-3;
        let j = JointState::product(&[eps; 3], 1.0).unwrap();
        let out = compress3(&j, 1, 0, 2).unwrap();
        assert!((out.absolute_marginal(1) / eps - 1.5).abs() < 1e-6);
    }

    #[test]
    fn compress_requires_joint() {
        let err = compress_state(&bias(&[1.0, 1.0, 1.0]), 0, 1, 2).unwrap_err();
        assert!(matches!(err, Error::RequiresJoint(_)));
        assert!(err.to_string().contains("lift"));
        let j = JointState::uniform(3, 1.0).unwrap();
        assert!(compress3(&j, 0, 0, 2).is_err());
    }

    #[test]
    fn permutation_tables() {
        let j = JointState::from_probs((1..=4).map(|x| x as f64 / 10.0).collect(), 1.0).unwrap();
        assert_eq!(apply_permutation(&j, &[0, 1, 2, 3]).unwrap(), j);
        assert!(matches!(
            apply_permutation(&j, &[0, 0, 2, 3]),
            Err(Error::InvalidPermutation(4))
        ));
        assert!(apply_permutation(&j, &[0, 1, 2]).is_err());

        // Bit swap is pt_perfect.
        let swap = [0b00, 0b10, 0b01, 0b11];
        let by_table = apply_permutation(&j, &swap).unwrap();
        let State::Joint(by_gate) = pt_perfect(&State::Joint(j.clone()), 0, 1).unwrap() else {
            unreachable!()
        };
        assert_eq!(by_table, by_gate);
    }

    #[test]
    fn local_permutation_lifts_compress() {
        // Local table on (target, aux1, aux2) exchanging 011 and 100.
        let mut local: Vec<usize> = (0..8).collect();
        local.swap(0b011, 0b100);
        let j = JointState::product(&[0.1, 0.3, 0.5, 0.7], 1.0).unwrap();
        let g = Gate::Permutation {
            operands: vec![2, 0, 3],
            table: local,
        };
        let a = g.apply(&State::Joint(j.clone())).unwrap();
        let b = compress3(&j, 2, 0, 3).unwrap();
        assert_eq!(a, State::Joint(b));
        assert!(g.apply(&bias(&[0.0; 4])).is_err());
    }
}
