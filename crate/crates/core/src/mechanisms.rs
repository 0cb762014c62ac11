//! Randomized response and Laplace primitives.
//!
//! Budgets may be `+inf`, in which case both mechanisms release the input
//! unchanged. All closed forms are written in terms of `e^{-ε}` so they stay
//! finite in that limit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::error::{check_budget, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    WarnerRr,
    Laplace,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::WarnerRr => "rr",
            Self::Laplace => "laplace",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rr" | "warner" | "warner-rr" | "randomized-response" => Ok(Self::WarnerRr),
            "laplace" | "lap" => Ok(Self::Laplace),
            other => Err(Error::InvalidParameter(format!("unknown mechanism `{other}`"))),
        }
    }
}

/// A local randomizer for one adjacency bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mechanism {
    kind: MechanismKind,
    epsilon: f64,
}

/// Variance σ² of one unbiased noisy adjacency entry.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntryVariance(pub f64);

impl EntryVariance {
    pub fn sigma2(self) -> f64 {
        self.0
    }
}

impl Mechanism {
    pub fn new(kind: MechanismKind, epsilon: f64) -> Result<Self> {
        Ok(Self {
            kind,
            epsilon: check_budget(epsilon)?,
        })
    }

    pub fn rr(epsilon: f64) -> Result<Self> {
        Self::new(MechanismKind::WarnerRr, epsilon)
    }

    pub fn laplace(epsilon: f64) -> Result<Self> {
        Self::new(MechanismKind::Laplace, epsilon)
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn entry_variance(&self) -> EntryVariance {
        entry_variance(self)
    }

    /// Perturbs one bit and maps it to its unbiased real-valued estimate.
    #[inline]
    pub fn noisy_entry<R: RngCore + ?Sized>(&self, bit: bool, rng: &mut R) -> f64 {
        match self.kind {
            MechanismKind::WarnerRr => {
                let keep = rng.random::<f64>() < rr_keep_probability(self.epsilon);
                rr_unbias_value(bit == keep, self.epsilon)
            }
            MechanismKind::Laplace => {
                let x = if bit { 1.0 } else { 0.0 };
                if self.epsilon.is_infinite() {
                    x
                } else {
                    x + laplace_unchecked(1.0 / self.epsilon, rng)
                }
            }
        }
    }
}

/// `e^ε / (e^ε + 1)`.
#[inline]
pub fn rr_keep_probability(eps: f64) -> f64 {
    1.0 / (1.0 + (-eps).exp())
}

/// Likelihood `Pr[R(x) = y]` of Warner's randomized response.
pub fn rr_likelihood(x: bool, y: bool, eps: f64) -> f64 {
    let keep = rr_keep_probability(eps);
    if x == y {
        keep
    } else {
        1.0 - keep
    }
}

/// Largest likelihood ratio `Pr[y|x] / Pr[y|x']` over all inputs and outputs.
pub fn rr_max_likelihood_ratio(eps: f64) -> f64 {
    let bits = [false, true];
    let mut worst: f64 = 0.0;
    for &x in &bits {
        for &x2 in &bits {
            for &y in &bits {
                worst = worst.max(rr_likelihood(x, y, eps) / rr_likelihood(x2, y, eps));
            }
        }
    }
    worst
}

/// Warner's randomized response on one bit.
pub fn rr_perturb<R: RngCore + ?Sized>(x: bool, eps: f64, rng: &mut R) -> Result<bool> {
    let eps = check_budget(eps)?;
    let keep = rng.random::<f64>() < rr_keep_probability(eps);
    Ok(if keep { x } else { !x })
}

#[inline]
fn rr_unbias_value(y: bool, eps: f64) -> f64 {
    // e^ε/(e^ε-1) and -1/(e^ε-1), rewritten to be exact at ε = +inf
    if y {
        1.0 / -(-eps).exp_m1()
    } else {
        -1.0 / eps.exp_m1()
    }
}

/// Unbiased estimate of the original bit from a randomized-response output.
pub fn rr_unbias(y: bool, eps: f64) -> Result<f64> {
    Ok(rr_unbias_value(y, check_budget(eps)?))
}

/// Uniform draw from the open interval (0, 1).
#[inline]
fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub(crate) fn laplace_unchecked<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u = open_unit(rng) - 0.5;
    let mag = -scale * (1.0 - 2.0 * u.abs()).ln();
    if u < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Draw from `Lap(scale)` by inverting the CDF.
pub fn laplace_sample<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidScale(scale));
    }
    Ok(laplace_unchecked(scale, rng))
}

/// CDF of `Lap(scale)` at `x`.
pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// Closed-form entry variance: `e^ε/(e^ε-1)²` for RR, `2/ε²` for Laplace.
pub fn entry_variance(mech: &Mechanism) -> EntryVariance {
    let eps = mech.epsilon;
    let v = match mech.kind {
        MechanismKind::WarnerRr => {
            let t = -(-eps).exp_m1();
            (-eps).exp() / (t * t)
        }
        MechanismKind::Laplace => 2.0 / (eps * eps),
    };
    EntryVariance(v)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation (relative error about 1e-9) followed by
/// one Halley step against the erfc-based CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(p));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement on e = Φ(x) - p; in the upper tail the residual is
    // formed from complements to keep it accurate
    let e = if x > 0.0 {
        (1.0 - p) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    } else {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}
