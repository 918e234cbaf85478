"""Emphatic weightings f and m, the lambda-kernel P_lambda and the constants kappa, beta."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mdp import (
    DimensionError,
    NonErgodicChainError,
    ValidationError,
    importance_ratios,
    induced_chain,
    stationary_distribution,
)

CLAMP_ATOL = 1e-10
TINY = 1e-300


def _check_square(P, n=None):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {P.shape}")
    if n is not None and P.shape[0] != n:
        raise DimensionError(f"matrix is {P.shape}, vector has length {n}")
    return P


def as_interest(interest, n_states):
    if interest is None:
        return np.ones(n_states)
    i = np.asarray(interest, dtype=float)
    if i.shape != (n_states,):
        raise DimensionError(f"interest must have length {n_states}, got {i.shape}", field="interest")
    if not np.all(i > 0) or not np.all(np.isfinite(i)):
        raise ValidationError("interest must be finite and strictly positive", field="interest")
    return i


def followon_vector(d_mu, P_pi, gamma):
    """Solve f^T (I - gamma P_pi) = d_mu^T."""
    d_mu = np.asarray(d_mu, dtype=float)
    P = _check_square(P_pi, len(d_mu))
    return np.linalg.solve(np.eye(len(d_mu)) - gamma * P.T, d_mu)


def kappa(d_mu, f):
    d_mu = np.asarray(d_mu, dtype=float)
    f = np.asarray(f, dtype=float)
    if d_mu.shape != f.shape:
        raise DimensionError(f"d_mu and f differ in shape: {d_mu.shape} vs {f.shape}")
    if np.any(f <= TINY):
        raise ValidationError("follow-on weights must be strictly positive")
    return float(np.min(d_mu / f))


def beta(gamma, lam):
    return gamma * (1.0 - lam) / (1.0 - lam * gamma)


def plambda(P_pi, gamma, lam):
    """I - (I - gamma*lam*P)^{-1} (I - gamma*P), with rounding noise clamped to zero.

    Exact entries are nonnegative; anything below -1e-10 means the input was
    not a stochastic matrix.
    """
    P = _check_square(P_pi)
    eye = np.eye(P.shape[0])
    out = eye - np.linalg.solve(eye - gamma * lam * P, eye - gamma * P)
    if np.min(out) < -CLAMP_ATOL:
        raise ArithmeticError(f"P_lambda has entry {np.min(out):.3e} < 0 beyond rounding")
    return np.clip(out, 0.0, None)


def emphasis_vector(interest, d_mu, P_lambda):
    """Solve m^T (I - P_lambda) = (interest * d_mu)^T."""
    d_mu = np.asarray(d_mu, dtype=float)
    P = _check_square(P_lambda, len(d_mu))
    i_weighted = as_interest(interest, len(d_mu)) * d_mu
    return np.linalg.solve(np.eye(len(d_mu)) - P.T, i_weighted)


@dataclass(frozen=True, eq=False)
class EmphasisBundle:
    gamma: float
    lam: float
    d_mu: np.ndarray
    d_pi: Optional[np.ndarray]
    interest: np.ndarray
    i_weighted: np.ndarray
    f: np.ndarray
    m: np.ndarray
    kappa: float
    beta: float
    plambda: np.ndarray

    def residuals(self, P_pi):
        """Sup-norm residuals of the two defining linear systems."""
        n = len(self.f)
        r_f = self.f @ (np.eye(n) - self.gamma * P_pi) - self.d_mu
        r_m = self.m @ (np.eye(n) - self.plambda) - self.i_weighted
        return float(np.max(np.abs(r_f))), float(np.max(np.abs(r_m)))


def emphasis_bundle(mdp, target, behavior, lam=0.0, interest=None):
    if not 0.0 <= lam < 1.0:
        raise ValidationError(f"lambda must lie in [0, 1), got {lam}", field="lambda")
    importance_ratios(target, behavior)
    gamma = mdp.discount
    pi_chain = induced_chain(mdp, target)
    mu_chain = induced_chain(mdp, behavior)
    d_mu = stationary_distribution(mu_chain)
    if np.any(d_mu <= 0):
        raise NonErgodicChainError("behavior chain has transient states (d_mu not strictly positive)")
    try:
        d_pi = stationary_distribution(pi_chain)
    except NonErgodicChainError:
        d_pi = None
    i = as_interest(interest, mdp.n_states)
    P_pi = pi_chain.transition_matrix
    f = followon_vector(d_mu, P_pi, gamma)
    P_lam = plambda(P_pi, gamma, lam)
    m = emphasis_vector(i, d_mu, P_lam)
    return EmphasisBundle(
        gamma=gamma,
        lam=float(lam),
        d_mu=d_mu,
        d_pi=d_pi,
        interest=i,
        i_weighted=i * d_mu,
        f=f,
        m=m,
        kappa=kappa(d_mu, f),
        beta=beta(gamma, lam),
        plambda=P_lam,
    )
