//! Entropy, information content, spin temperature and the reversible-cooling
//! bounds.
//!
//! Information content is reported in units of `ε₀²/ln 4` where ε₀ is the
//! bias unit, so a relative bias state `{εᵢ}` has IC `Σ εᵢ²`. To second order
//! this is `n − H` with `H` the total entropy in bits.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{BiasState, JointState, Molecule, State};

/// Minimum IC gain (relative units) counted as a bypass of the
/// entropy-conservation bound.
pub const BYPASS_TOLERANCE: f64 = 1e-9;

const LN_4: f64 = 2.0 * LN_2;

/// Entropy in bits of a single spin with absolute bias `eps`, i.e. the
/// binary entropy of `(1 + eps)/2`.
pub fn binary_entropy(eps: f64) -> Result<f64> {
    if !(eps.abs() <= 1.0) {
        return Err(Error::AbsoluteBiasOutOfRange(eps));
    }
    // 1 - [(1+ε)log₂(1+ε) + (1−ε)log₂(1−ε)]/2, written with ln_1p so that
    // biases of order 1e-5 do not lose their ε² term to cancellation.
    let term = |x: f64| {
        if x == -1.0 {
            0.0
        } else {
            (1.0 + x) * x.ln_1p()
        }
    };
    let h = 1.0 - (term(eps) + term(-eps)) / (2.0 * LN_2);
    Ok(h.clamp(0.0, 1.0))
}

/// Second-order expansion of [`binary_entropy`]: `1 − ε²/ln 4`.
pub fn entropy_approx(eps: f64) -> f64 {
    1.0 - eps * eps / LN_4
}

pub fn information_content(state: &BiasState) -> f64 {
    state.as_slice().iter().map(|e| e * e).sum()
}

/// Shannon entropy `−Σ p log₂ p` of a joint distribution.
pub fn total_entropy_exact(joint: &JointState) -> f64 {
    // With p = (1 + q)/N: H = n·Σ(1 + q)/N − Σ (1 + q) log₂(1 + q) / N.
    let len = joint.len() as f64;
    let n = joint.n_spins() as f64;
    let mass: f64 = joint.excess().iter().sum::<f64>() / len;
    let spread: f64 = joint
        .excess()
        .iter()
        .filter(|&&q| q > -1.0)
        .map(|&q| (1.0 + q) * q.ln_1p())
        .sum::<f64>()
        / (len * LN_2);
    n * (1.0 + mass) - spread
}

/// Total entropy of an uncorrelated state: the sum of single-spin entropies.
pub fn product_entropy(state: &BiasState, bias_unit: f64) -> Result<f64> {
    state
        .as_slice()
        .iter()
        .map(|e| binary_entropy(e * bias_unit))
        .sum()
}

/// Exact total entropy in bits for either representation.
pub fn state_entropy(state: &State, molecule: &Molecule) -> Result<f64> {
    match state {
        State::Bias(b) => product_entropy(b, molecule.bias_unit()),
        State::Joint(j) => Ok(total_entropy_exact(j)),
    }
}

/// Effective temperature of a spin whose observed bias is `observed`, given
/// its equilibrium bias `equilibrium` at `room_k`.
pub fn spin_temperature(observed: f64, equilibrium: f64, room_k: f64) -> Result<f64> {
    if !(observed > 0.0) {
        return Err(Error::NonPositiveBias(observed));
    }
    if !(room_k > 0.0) {
        return Err(Error::InvalidTemperature(room_k));
    }
    Ok(room_k * equilibrium / observed)
}

/// Largest absolute bias any permutation of configurations can give the
/// `target` spin: the larger half of the sorted populations goes to
/// target-up configurations.
pub fn sorensen_bound(joint: &JointState, target: usize) -> f64 {
    debug_assert!(target < joint.n_spins());
    let mut sorted = joint.excess().to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let half = sorted.len() / 2;
    let top: f64 = sorted[..half].iter().sum();
    let bottom: f64 = sorted[half..].iter().sum();
    (top - bottom) / sorted.len() as f64
}

/// Single-spin bias limit of reversible manipulation in relative units, to
/// second order: compressing all information onto one spin gives it at most
/// `sqrt(Σ εᵢ²)`, i.e. `√n·ε` for n equal spins.
pub fn shannon_single_spin_limit(state: &BiasState) -> f64 {
    information_content(state).sqrt()
}

/// Exact version of [`shannon_single_spin_limit`], in absolute units: the
/// bias `b` whose binary entropy equals `total_entropy − (n − 1)`.
pub fn shannon_single_spin_limit_exact(total_entropy_bits: f64, n: usize) -> f64 {
    let residual = total_entropy_bits - (n as f64 - 1.0);
    if residual <= 0.0 {
        return 1.0;
    }
    if residual >= 1.0 {
        return 0.0;
    }
    // Binary entropy is decreasing on [0, 1]; bisect.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid).unwrap_or(0.0) > residual {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BypassReport {
    pub ic_initial: f64,
    pub ic_final: f64,
    /// `(I_final − I_initial)/I_initial`; zero when both are zero.
    pub relative_increase: f64,
    pub bypass: bool,
}

/// Compares the information content before and after a procedure. A gain
/// beyond [`BYPASS_TOLERANCE`] means total entropy went down, something no
/// closed-system (reversible) manipulation can do.
pub fn bypass_report(initial: &BiasState, final_state: &BiasState) -> Result<BypassReport> {
    if initial.len() != final_state.len() {
        return Err(Error::LengthMismatch {
            expected: initial.len(),
            actual: final_state.len(),
        });
    }
    let ic_initial = information_content(initial);
    let ic_final = information_content(final_state);
    let relative_increase = if ic_initial > 0.0 {
        (ic_final - ic_initial) / ic_initial
    } else {
        0.0
    };
    Ok(BypassReport {
        ic_initial,
        ic_final,
        relative_increase,
        bypass: ic_final - ic_initial > BYPASS_TOLERANCE,
    })
}
