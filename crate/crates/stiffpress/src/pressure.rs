//! Constitutive pressure laws and the nonlinearities derived from them.
//!
//! Two laws are supported:
//! - power law `p = gamma/(gamma-1) n^(gamma-1)`, valid for `n >= 0`;
//! - singular law `p = eps n/(1-n)`, valid for `0 <= n < 1`.
//!
//! The flux potential `A(n) = ∫_0^n s p'(s) ds` turns the nonlinear
//! advection `∇·(n ∇p)` into `ΔA(n)`. In closed form it is `n^gamma`
//! for the power law and `eps (n/(1-n) + ln(1-n))` for the singular
//! law. `A'(n) = n p'(n)` is the diffusivity that drives the explicit
//! stability bound.

use serde::{Deserialize, Serialize};

/// Which constitutive law maps density to pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LawKind {
    /// `p = gamma/(gamma-1) n^(gamma-1)`, `gamma > 1`.
    Power { gamma: f64 },
    /// `p = eps n/(1-n)`, `eps > 0`; blows up as `n -> 1`.
    Singular { eps: f64 },
}

/// A pressure law plus the configured uniform pressure bound `p_max`.
///
/// `p_max` is an input (the expected maximum-principle bound for the
/// run), not something the law estimates; solvers record the observed
/// maximum alongside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    pub kind: LawKind,
    pub p_max: f64,
}

impl PressureLaw {
    pub fn power(gamma: f64, p_max: f64) -> Self {
        assert!(gamma > 1.0, "power law requires gamma > 1, got {gamma}");
        assert!(
            p_max > 0.0 && p_max.is_finite(),
            "p_max must be positive and finite"
        );
        PressureLaw {
            kind: LawKind::Power { gamma },
            p_max,
        }
    }

    pub fn singular(eps: f64, p_max: f64) -> Self {
        assert!(eps > 0.0, "singular law requires eps > 0, got {eps}");
        assert!(
            p_max > 0.0 && p_max.is_finite(),
            "p_max must be positive and finite"
        );
        PressureLaw {
            kind: LawKind::Singular { eps },
            p_max,
        }
    }

    /// Stiffness of the law: `gamma`, or `1/eps` for the singular law.
    ///
    /// Rate fits are taken against this variable so that "slope -1/2"
    /// reads the same for both laws.
    pub fn stiffness(&self) -> f64 {
        match self.kind {
            LawKind::Power { gamma } => gamma,
            LawKind::Singular { eps } => 1.0 / eps,
        }
    }

    /// Pressure `p(n)`.
    ///
    /// Panics if `n` is outside the law's domain (`n < 0`, or `n >= 1`
    /// for the singular law); upstream code treats that as a violated
    /// maximum principle.
    pub fn pressure(&self, n: f64) -> f64 {
        assert!(n >= 0.0, "density must be nonnegative, got {n}");
        match self.kind {
            LawKind::Power { gamma } => gamma / (gamma - 1.0) * powf_guarded(n, gamma - 1.0),
            LawKind::Singular { eps } => {
                assert!(n < 1.0, "singular law needs n < 1, got {n}");
                eps * n / (1.0 - n)
            }
        }
    }

    /// Flux potential `A(n) = ∫_0^n s p'(s) ds` in closed form.
    pub fn flux_potential(&self, n: f64) -> f64 {
        assert!(n >= 0.0, "density must be nonnegative, got {n}");
        match self.kind {
            LawKind::Power { gamma } => powf_guarded(n, gamma),
            LawKind::Singular { eps } => {
                assert!(n < 1.0, "singular law needs n < 1, got {n}");
                eps * singular_potential(n)
            }
        }
    }

    /// Diffusivity `A'(n) = n p'(n)`.
    pub fn flux_potential_derivative(&self, n: f64) -> f64 {
        assert!(n >= 0.0, "density must be nonnegative, got {n}");
        match self.kind {
            LawKind::Power { gamma } => gamma * powf_guarded(n, gamma - 1.0),
            LawKind::Singular { eps } => {
                assert!(n < 1.0, "singular law needs n < 1, got {n}");
                eps * n / ((1.0 - n) * (1.0 - n))
            }
        }
    }

    /// Largest density the law admits under the configured `p_max`:
    /// `c_gamma` for the power law, `1` for the singular law.
    pub fn density_cap(&self) -> f64 {
        match self.kind {
            LawKind::Power { gamma } => c_gamma(gamma, self.p_max),
            LawKind::Singular { .. } => 1.0,
        }
    }
}

/// `n/(1-n) + ln(1-n)`, stable across the whole domain.
///
/// The two terms cancel to `n^2/2 + 2n^3/3 + ...` near zero, so a short
/// series takes over below `n = 1e-3`.
fn singular_potential(n: f64) -> f64 {
    if n < 1e-3 {
        // sum_{j>=2} (j-1)/j n^j, truncated after j = 6
        let n2 = n * n;
        n2 * (0.5 + n * (2.0 / 3.0 + n * (0.75 + n * (0.8 + n * 5.0 / 6.0))))
    } else {
        n / (1.0 - n) + (-n).ln_1p()
    }
}

/// `n^q` with the vacuum case pinned to zero for any exponent.
#[inline]
fn powf_guarded(n: f64, q: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n.powf(q)
    }
}

/// Density scale `c_gamma = ((gamma-1)/gamma)^(1/(gamma-1)) p_max^(1/(gamma-1))`.
///
/// Densities whose pressure respects `p_max` are capped by it, and
/// `c_gamma -> 1` as `gamma -> infinity`.
pub fn c_gamma(gamma: f64, p_max: f64) -> f64 {
    assert!(gamma > 1.0 && p_max > 0.0);
    let q = 1.0 / (gamma - 1.0);
    ((gamma - 1.0) / gamma).powf(q) * p_max.powf(q)
}
