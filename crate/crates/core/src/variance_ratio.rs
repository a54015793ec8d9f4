//! Lo–MacKinlay variance ratios with heteroskedasticity-robust statistics,
//! and the Chow–Denning multiple-period test.
//!
//! For a log-price path `X_0..X_T` with drift `μ = (X_T − X_0)/T`:
//!
//! ```text
//! σ_a²    = Σ_{t=1..T} (X_t − X_{t−1} − μ)² / (T − 1)
//! σ_c²(q) = Σ_{t=q..T} (X_t − X_{t−q} − qμ)² / h,   h = q(T − q + 1)(1 − q/T)
//! VR(q)   = σ_c²(q) / σ_a²
//! δ(j)    = Σ_{t=j+1..T} ε_t² ε_{t−j}² / (Σ_t ε_t²)²,   ε_t = X_t − X_{t−1} − μ
//! θ(q)    = Σ_{j=1..q−1} [2(q − j)/q]² δ(j)
//! z*(q)   = (VR(q) − 1) / √θ(q)
//! ```
//!
//! The joint test takes `max_q |z*(q)|` over `m` periods and bounds its
//! p-value by the studentized maximum modulus tail with infinite degrees of
//! freedom, `1 − (2Φ(x) − 1)^m`.

use crate::error::{Error, Result};
use crate::series::PriceSeries;
use crate::{normal, Real};

/// Periods tested by default.
pub const DEFAULT_PERIODS: [usize; 4] = [2, 4, 8, 16];

/// Natural-log price levels `X_0..X_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPricePath<F> {
    levels: Vec<F>,
}

impl<F: Real> LogPricePath<F> {
    pub fn from_levels(levels: Vec<F>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::TooFewObservations {
                found: levels.len(),
                required: 2,
            });
        }
        Ok(Self { levels })
    }

    pub fn from_prices(prices: &PriceSeries) -> Self {
        Self {
            levels: prices.prices().iter().map(|&p| F::lit(p.ln())).collect(),
        }
    }

    /// Cumulates `returns` from `start`.
    pub fn from_returns(start: F, returns: &[F]) -> Result<Self> {
        let mut levels = Vec::with_capacity(returns.len() + 1);
        let mut x = start;
        levels.push(x);
        for &r in returns {
            x += r;
            levels.push(x);
        }
        Self::from_levels(levels)
    }

    pub fn levels(&self) -> &[F] {
        &self.levels
    }

    /// Number of one-period returns `T`.
    pub fn returns(&self) -> usize {
        self.levels.len() - 1
    }

    fn drift(&self) -> F {
        let t = self.returns();
        (self.levels[t] - self.levels[0]) / F::count(t)
    }

    // Σ_{t=q..T} (X_t − X_{t−q} − qμ)²
    fn sum_sq_q(&self, q: usize, drift: F) -> F {
        let shift = F::count(q) * drift;
        self.levels
            .iter()
            .zip(&self.levels[q..])
            .map(|(&a, &b)| {
                let d = b - a - shift;
                d * d
            })
            .sum()
    }

    fn one_period_sum_sq(&self, drift: F) -> Result<F> {
        let s = self.sum_sq_q(1, drift);
        // Increments equal up to the rounding of the levels count as constant
        // returns.
        let scale = self.levels.iter().map(|x| x.abs()).fold(F::zero(), F::max);
        let noise = F::lit(64.0) * F::epsilon() * scale;
        if !(s > F::count(self.returns()) * noise * noise) {
            return Err(Error::ZeroVariance);
        }
        Ok(s)
    }

    fn check_period(&self, q: usize, min_multiple: usize) -> Result<()> {
        let t = self.returns();
        if q == 0 || t < 2 || t < min_multiple * q || t <= q {
            return Err(Error::InvalidPeriod { q, returns: t });
        }
        Ok(())
    }
}

/// Variance ratio `VR(q)` with unbiased variance estimators. Requires
/// `1 ≤ q < T`; `VR(1)` is exactly one.
pub fn vr_estimate<F: Real>(path: &LogPricePath<F>, q: usize) -> Result<F> {
    path.check_period(q, 1)?;
    let drift = path.drift();
    let s1 = path.one_period_sum_sq(drift)?;
    Ok(ratio(path, q, drift, s1))
}

fn ratio<F: Real>(path: &LogPricePath<F>, q: usize, drift: F, s1: F) -> F {
    let t = path.returns();
    let sigma_a = s1 / F::count(t - 1);
    // h = q(T − q + 1)(T − q)/T; the integer factors are multiplied first so
    // h(1) is exactly T − 1.
    let h = F::count(q) * F::count(t - q + 1) * F::count(t - q) / F::count(t);
    let sigma_c = path.sum_sq_q(q, drift) / h;
    sigma_c / sigma_a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrResult<F> {
    pub q: usize,
    pub vr: F,
    pub z_star: F,
    pub p_two_sided: F,
}

impl<F: Real> VrResult<F> {
    pub fn rejects(&self, alpha: F) -> bool {
        self.p_two_sided <= alpha
    }
}

/// Heteroskedasticity-robust `z*(q)`. Requires `q ≥ 2` and `T ≥ 2q`.
pub fn z_star<F: Real>(path: &LogPricePath<F>, q: usize) -> Result<VrResult<F>> {
    if q < 2 {
        return Err(Error::InvalidPeriod {
            q,
            returns: path.returns(),
        });
    }
    path.check_period(q, 2)?;
    let drift = path.drift();
    let s1 = path.one_period_sum_sq(drift)?;
    let vr = ratio(path, q, drift, s1);
    let eps2: Vec<F> = path
        .levels
        .windows(2)
        .map(|w| {
            let e = w[1] - w[0] - drift;
            e * e
        })
        .collect();
    let theta = robust_theta(&eps2, q);
    if !(theta > F::zero()) {
        return Err(Error::DegenerateTheta { q });
    }
    let z = (vr - F::one()) / theta.sqrt();
    Ok(VrResult {
        q,
        vr,
        z_star: z,
        p_two_sided: normal::two_sided_p(z),
    })
}

// θ(q) from squared demeaned increments.
fn robust_theta<F: Real>(eps2: &[F], q: usize) -> F {
    let total: F = eps2.iter().copied().sum();
    let denom = total * total;
    let qf = F::count(q);
    (1..q)
        .map(|j| {
            let num: F = eps2[j..].iter().zip(eps2).map(|(&a, &b)| a * b).sum();
            let w = F::lit(2.0) * F::count(q - j) / qf;
            w * w * num / denom
        })
        .sum()
}

/// Upper bound on the p-value of `max |z|` over `m` asymptotically normal
/// statistics: `1 − (2Φ(x) − 1)^m`.
pub fn smm_p_bound<F: Real>(max_abs_z: F, m: usize) -> F {
    let single = normal::two_sided_p(max_abs_z);
    if m <= 1 {
        return single;
    }
    // 1 − (1 − p)^m without cancellation for small p
    let bound = -(F::count(m) * (-single).ln_1p()).exp_m1();
    bound.min(F::one())
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointVrResult<F> {
    pub max_abs_z: F,
    pub argmax_q: usize,
    pub m: usize,
    pub p_bound: F,
    pub individual: Vec<VrResult<F>>,
}

impl<F: Real> JointVrResult<F> {
    pub fn rejects(&self, alpha: F) -> bool {
        self.p_bound <= alpha
    }
}

/// Chow–Denning test over `periods`. The first period (in the given order)
/// attaining the maximum is reported.
pub fn chow_denning<F: Real>(path: &LogPricePath<F>, periods: &[usize]) -> Result<JointVrResult<F>> {
    if periods.is_empty() {
        return Err(Error::Empty("period list"));
    }
    for (i, &q) in periods.iter().enumerate() {
        if periods[..i].contains(&q) {
            return Err(Error::DuplicatePeriod { q });
        }
    }
    let individual = periods.iter().map(|&q| z_star(path, q)).collect::<Result<Vec<_>>>()?;
    Ok(joint_from_individual(individual))
}

/// Combines already-computed individual results.
pub fn joint_from_individual<F: Real>(individual: Vec<VrResult<F>>) -> JointVrResult<F> {
    let mut best = (F::zero(), individual.first().map_or(0, |r| r.q));
    for r in &individual {
        if r.z_star.abs() > best.0 {
            best = (r.z_star.abs(), r.q);
        }
    }
    let m = individual.len();
    JointVrResult {
        max_abs_z: best.0,
        argmax_q: best.1,
        m,
        p_bound: smm_p_bound(best.0, m),
        individual,
    }
}
