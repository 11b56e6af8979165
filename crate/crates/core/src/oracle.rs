//! Brute-force verification of the closed-form robustness on finite spaces.
//!
//! Everything here works on explicit joint pmfs over a small class x feature
//! grid, where the constant-odds-ratio dissimilarity between two measures
//! reduces to the spread of their likelihood ratio:
//! `dstar(P, Q) = max(q/p) / min(q/p)` over P's support.
//!
//! Two directions are checked against the closed form `r_star = p1/p2`:
//!
//! * [`build_witness`] constructs the explicit perturbation that reweights
//!   the top class down and the runner-up class up just enough to tie the
//!   prediction, and attains `dstar = r_star` exactly;
//! * [`min_flipping_dissimilarity`] searches (randomized candidates plus
//!   local clamping, the witness ray always included) for any cheaper
//!   prediction-flipping perturbation. It never finds one below `r_star`,
//!   which is the other half of the claim.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::{robustness_from_joint, RobustnessScore};
use crate::{Error, Result};

/// Tolerance on the total mass of a [`FiniteJointModel`].
pub const PMF_SUM_TOLERANCE: f64 = 1e-9;

/// Default candidate budget for [`min_flipping_dissimilarity`].
pub const DEFAULT_SEARCH_BUDGET: usize = 10_000;

/// Relative slack under which a candidate's top-two conditional counts as
/// tied; the flip boundary itself is the infimum, so ulp-level rounding in
/// candidate construction must not disqualify it.
const FLIP_TIE_SLACK: f64 = 1e-12;

/// An explicit joint pmf `p(y, x)` over classes (rows) and feature values
/// (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJointModel {
    pmf: Array2<f64>,
}

impl FiniteJointModel {
    /// Validates: at least 2 classes and 1 feature value, non-negative
    /// entries, total mass 1 within [`PMF_SUM_TOLERANCE`], and at least one
    /// strictly positive entry in every column.
    pub fn new(pmf: Array2<f64>) -> Result<Self> {
        let (k, m) = pmf.dim();
        if k < 2 || m < 1 {
            return Err(Error::InvalidInput(format!(
                "joint pmf needs at least 2 classes and 1 feature value, got {k}x{m}"
            )));
        }
        for ((y, x), &v) in pmf.indexed_iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "pmf entry ({y}, {x}) is {v}, not a finite non-negative value"
                )));
            }
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "pmf sums to {sum}, more than {PMF_SUM_TOLERANCE} away from 1"
            )));
        }
        for x in 0..m {
            if !pmf.column(x).iter().any(|&v| v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "column {x} has no positive mass"
                )));
            }
        }
        Ok(Self { pmf })
    }

    /// Builds from row-major entries.
    pub fn from_flat(class_count: usize, feature_count: usize, entries: Vec<f64>) -> Result<Self> {
        let pmf = Array2::from_shape_vec((class_count, feature_count), entries)
            .map_err(|e| Error::InvalidInput(format!("bad pmf shape: {e}")))?;
        Self::new(pmf)
    }

    /// A strictly positive random pmf, normalized Exp(1) draws per cell.
    pub fn random(class_count: usize, feature_count: usize, rng: &mut impl Rng) -> Self {
        let mut pmf = Array2::zeros((class_count, feature_count));
        for v in pmf.iter_mut() {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            *v = -u.ln();
        }
        let sum: f64 = pmf.iter().sum();
        pmf.mapv_inplace(|v| v / sum);
        Self::new(pmf).expect("normalized positive pmf is valid")
    }

    pub fn pmf(&self) -> &Array2<f64> {
        &self.pmf
    }

    pub fn class_count(&self) -> usize {
        self.pmf.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.pmf.ncols()
    }

    /// The conditional distribution `p(.|x)` at one column.
    pub fn conditional(&self, x: usize) -> Result<Vec<f64>> {
        self.check_column(x)?;
        let col = self.pmf.column(x);
        let mass: f64 = col.sum();
        Ok(col.iter().map(|&v| v / mass).collect())
    }

    /// Robustness of the prediction at column `x`, computed from the joint
    /// masses directly.
    pub fn column_robustness(&self, x: usize) -> Result<RobustnessScore> {
        self.check_column(x)?;
        robustness_from_joint(self.pmf.column(x).to_vec().as_slice())
    }

    fn check_column(&self, x: usize) -> Result<()> {
        if x >= self.feature_count() {
            return Err(Error::InvalidInput(format!(
                "feature index {x} out of range for {} columns",
                self.feature_count()
            )));
        }
        Ok(())
    }

    fn row_mass(&self, y: usize) -> f64 {
        self.pmf.row(y).sum()
    }
}

/// The witness perturbation's parameters: class marginals of the top and
/// runner-up class, the two reweighting factors, and the odds ratio they
/// realize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessConstruction {
    /// P(Y = top class).
    pub pi1: f64,
    /// P(Y = runner-up class).
    pub pi2: f64,
    /// Factor applied to the whole top-class row (<= 1).
    pub lambda_minus: f64,
    /// Factor applied to the whole runner-up row (>= 1).
    pub lambda_plus: f64,
    /// Top-two joint-mass ratio at the target column; equals
    /// `lambda_plus / lambda_minus`.
    pub ratio: f64,
    /// Top class at the target column.
    pub top: usize,
    /// Runner-up class at the target column.
    pub runner_up: usize,
}

impl WitnessConstruction {
    /// Expectation of the induced likelihood ratio under P; identically 1
    /// when the construction is consistent.
    pub fn expected_likelihood_ratio(&self) -> f64 {
        self.lambda_minus * self.pi1 + self.lambda_plus * self.pi2 + (1.0 - self.pi1 - self.pi2)
    }
}

/// Constant-odds-ratio dissimilarity between two explicit pmfs:
/// the spread `max(q/p) / min(q/p)` of the likelihood ratio over P's
/// support. `+inf` when Q is not absolutely continuous w.r.t. P or the
/// ratio spans zero and a positive value.
pub fn dstar_finite(p: &FiniteJointModel, q: &FiniteJointModel) -> Result<f64> {
    if p.pmf.dim() != q.pmf.dim() {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: {:?} vs {:?}",
            p.pmf.dim(),
            q.pmf.dim()
        )));
    }
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for (&pv, &qv) in p.pmf.iter().zip(q.pmf.iter()) {
        if pv > 0.0 {
            let ratio = qv / pv;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
        } else if qv > 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    if min_ratio == 0.0 {
        // Q vanishes somewhere on P's support; since Q is a pmf carried by
        // that support, it is positive elsewhere on it.
        return Ok(f64::INFINITY);
    }
    Ok(max_ratio / min_ratio)
}

/// Builds the flip-boundary witness at column `x`: Q obtained from P by
/// multiplying the top-class row by `lambda_minus` and the runner-up row by
/// `lambda_plus`. Q ties the top two conditionals at `x` and satisfies
/// `dstar_finite(P, Q) = r_star` exactly.
pub fn build_witness(
    p: &FiniteJointModel,
    x: usize,
) -> Result<(WitnessConstruction, FiniteJointModel)> {
    let score = p.column_robustness(x)?;
    if !score.r_star.is_finite() {
        return Err(Error::NoWitness(format!(
            "runner-up class has zero mass at column {x}"
        )));
    }
    let r = score.r_star;
    let pi1 = p.row_mass(score.top);
    let pi2 = p.row_mass(score.runner_up);
    let denom = pi1 + r * pi2;
    let lambda_minus = (pi1 + pi2) / denom;
    let lambda_plus = (r * pi1 + r * pi2) / denom;

    let mut q = p.pmf.clone();
    for ((y, _), v) in q.indexed_iter_mut() {
        if y == score.top {
            *v *= lambda_minus;
        } else if y == score.runner_up {
            *v *= lambda_plus;
        }
    }
    let witness = WitnessConstruction {
        pi1,
        pi2,
        lambda_minus,
        lambda_plus,
        ratio: r,
        top: score.top,
        runner_up: score.runner_up,
    };
    Ok((witness, FiniteJointModel::new(q)?))
}

/// Searches for the cheapest perturbation Q whose conditional at `x` no
/// longer ranks the original top class strictly first, and returns its
/// dissimilarity. An upper bound on the true minimum; the witness ray is
/// always among the candidates, so the result never exceeds `r_star` by
/// more than rounding.
pub fn min_flipping_dissimilarity(
    p: &FiniteJointModel,
    x: usize,
    search_budget: usize,
    seed: u64,
) -> Result<f64> {
    if search_budget == 0 {
        return Err(Error::InvalidInput("search budget must be >= 1".into()));
    }
    let score = p.column_robustness(x)?;
    let top = score.top;
    let rivals: Vec<usize> = (0..p.class_count())
        .filter(|&y| y != top && p.pmf[(y, x)] > 0.0)
        .collect();
    if rivals.is_empty() {
        return Err(Error::NoFlipPossible(format!(
            "only class {top} has mass at column {x}"
        )));
    }

    let mut best = f64::INFINITY;
    let mut used = 0usize;
    let consider = |q: &FiniteJointModel, best: &mut f64| -> Result<()> {
        if flips_at(q, top, x) {
            let d = dstar_finite(p, q)?;
            if d < *best {
                *best = d;
            }
        }
        Ok(())
    };

    // The witness ray first: the proof says it is optimal, so the search
    // must contain it to be a useful bound.
    let (_, witness_q) = build_witness(p, x)?;
    consider(&witness_q, &mut best)?;
    used += 1;

    // Two-cell reweightings tying the top class with each rival in turn.
    for &rival in &rivals {
        if used >= search_budget {
            break;
        }
        let mut factors = Array2::from_elem(p.pmf.dim(), 1.0);
        let rho = p.pmf[(top, x)] / p.pmf[(rival, x)];
        let beta = rho.sqrt();
        factors[(rival, x)] = beta;
        factors[(top, x)] = beta / rho;
        let q = apply_factors(p, &factors)?;
        consider(&q, &mut best)?;
        used += 1;
    }

    // Randomized candidates: log-uniform cell noise with the tie enforced,
    // each followed by a clamped variant that pulls every free cell into the
    // tied pair's factor interval.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const LOG_SPREAD: f64 = 1.0;
    while used < search_budget {
        let rival = rivals[rng.gen_range(0..rivals.len())];
        let mut factors = Array2::from_elem(p.pmf.dim(), 1.0);
        for (idx, f) in factors.indexed_iter_mut() {
            if p.pmf[idx] > 0.0 {
                *f = (LOG_SPREAD * (2.0 * rng.gen::<f64>() - 1.0)).exp();
            }
        }
        factors[(top, x)] = factors[(rival, x)] * p.pmf[(rival, x)] / p.pmf[(top, x)];
        let q = apply_factors(p, &factors)?;
        consider(&q, &mut best)?;
        used += 1;
        if used >= search_budget {
            break;
        }
        let (lo, hi) = {
            let (a, b) = (factors[(top, x)], factors[(rival, x)]);
            (a.min(b), a.max(b))
        };
        for (idx, f) in factors.indexed_iter_mut() {
            if idx != (top, x) && idx != (rival, x) {
                *f = f.clamp(lo, hi);
            }
        }
        let q = apply_factors(p, &factors)?;
        consider(&q, &mut best)?;
        used += 1;
    }

    Ok(best)
}

/// Materializes `q = factors * p`, normalized to total mass 1. Uniform
/// rescaling preserves both the tie and the ratio spread.
fn apply_factors(p: &FiniteJointModel, factors: &Array2<f64>) -> Result<FiniteJointModel> {
    let mut q = &p.pmf * factors;
    let mass: f64 = q.iter().sum();
    q.mapv_inplace(|v| v / mass);
    FiniteJointModel::new(q)
}

/// True when the conditional at `x` no longer ranks `top` strictly first
/// (some other class reaches it, up to [`FLIP_TIE_SLACK`]).
fn flips_at(q: &FiniteJointModel, top: usize, x: usize) -> bool {
    let col = q.pmf.column(x);
    let threshold = col[top] * (1.0 - FLIP_TIE_SLACK);
    col.iter()
        .enumerate()
        .any(|(y, &v)| y != top && v >= threshold)
}
