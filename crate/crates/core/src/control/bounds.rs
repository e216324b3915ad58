//! Closed-form bounds on the mismatch gap.

use super::solve::BeliefPolicy;
use super::ControlError;
use crate::metrics::tv_distance;
use crate::model::{Belief, PomdpModel};
use serde::Serialize;

/// Discounted continuity bound `2 ||c||_inf / (1 - beta) * tv(mu, nu)`.
pub fn bound_continuity_discounted(model: &PomdpModel, mu: &Belief, nu: &Belief) -> f64 {
    let tv = tv_distance(mu, nu).expect("priors must share the state space");
    2.0 * model.cost_sup() / (1.0 - model.discount) * tv
}

/// Average-cost continuity bound `2 ||c||_inf * tv(mu, nu)`.
pub fn bound_continuity_average(model: &PomdpModel, mu: &Belief, nu: &Belief) -> f64 {
    let tv = tv_distance(mu, nu).expect("priors must share the state space");
    2.0 * model.cost_sup() * tv
}

/// Max minus min of a set of values.
pub fn span_of_values(values: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// Spread of the optimal cost as a function of the prior, over a finite
/// set of priors (default: all grid points). Uses the fresh-prior cost
/// (first observation before first action). A maximum over a subset of the
/// simplex, so this is a lower estimate of the true sup-minus-inf span.
pub fn span_seminorm(model: &PomdpModel, policy: &BeliefPolicy, priors: Option<&[Belief]>) -> f64 {
    let values: Vec<f64> = match priors {
        None => policy
            .grid()
            .points()
            .iter()
            .map(|b| policy.prior_value(model, b.probs()))
            .collect(),
        Some(priors) => priors.iter().map(|b| policy.prior_value(model, b.probs())).collect(),
    };
    span_of_values(&values)
}

/// Prior-independent discounted mismatch bound.
///
/// With `m = ||c||_inf / (1 - beta)`, `rho = (m - span) / m`, and
/// `f(n) = beta^n (rho - 4 alpha^n)`, the gap is at most
/// `m (1 - max_n f(n))` for any pair of priors. The real maximizer is
/// `n* = ln((rho/4) ln(beta) / (ln(alpha) + ln(beta))) / ln(alpha)`
/// and the integer maximizer is its floor or ceiling; when the logarithm's
/// argument is not positive the maximizer comes from exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorIndependentBound {
    /// Fraction of the worst-case discounted cost not covered by the span.
    pub rho: f64,
    /// Real-valued stationary point, when the closed form is in domain.
    pub n_star: Option<f64>,
    /// Integer time the bound is evaluated at.
    pub n_used: usize,
    pub bound: f64,
    /// True when the maximizer came from exhaustive search rather than the
    /// closed form.
    pub fallback_search: bool,
}

/// Largest time considered by the exhaustive fallback search.
pub const PRIOR_INDEPENDENT_SEARCH_MAX: usize = 200;

pub fn bound_prior_independent(
    alpha: f64,
    beta: f64,
    cost_sup: f64,
    span: f64,
) -> Result<PriorIndependentBound, ControlError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ControlError::InvalidDomain(format!(
            "contraction coefficient must lie in (0, 1), got {alpha}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ControlError::InvalidDomain(format!(
            "discount must lie in (0, 1), got {beta}"
        )));
    }
    if !cost_sup.is_finite() || cost_sup < 0.0 || !span.is_finite() || span < 0.0 {
        return Err(ControlError::InvalidDomain(
            "cost bound and span must be finite and non-negative".into(),
        ));
    }
    if cost_sup == 0.0 {
        return Ok(PriorIndependentBound {
            rho: 0.0,
            n_star: None,
            n_used: 0,
            bound: 0.0,
            fallback_search: false,
        });
    }

    let max_cost = cost_sup / (1.0 - beta);
    let rho = (max_cost - span) / max_cost;
    let f = |n: usize| beta.powi(n as i32) * (rho - 4.0 * alpha.powi(n as i32));

    let log_argument = (rho / 4.0) * (beta.ln() / (alpha.ln() + beta.ln()));
    let (n_star, candidates, fallback_search) = if log_argument > 0.0 {
        let n_star = log_argument.ln() / alpha.ln();
        let lo = n_star.floor().max(0.0) as usize;
        let hi = n_star.ceil().max(0.0) as usize;
        (Some(n_star), vec![lo, hi], false)
    } else {
        (None, (0..=PRIOR_INDEPENDENT_SEARCH_MAX).collect(), true)
    };

    let mut n_used = candidates[0];
    let mut best = f(n_used);
    for &n in &candidates[1..] {
        let value = f(n);
        if value > best {
            best = value;
            n_used = n;
        }
    }

    Ok(PriorIndependentBound {
        rho,
        n_star,
        n_used,
        bound: max_cost * (1.0 - best),
        fallback_search,
    })
}
