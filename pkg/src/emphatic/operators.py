"""Bellman operators, weighted projections and exact contraction checks."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .emphasis import plambda
from .mdp import DimensionError, ValidationError

RESIDUAL_ATOL = 1e-10
SLACK_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class AffineOperator:
    """v -> linear @ v + offset"""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.linear, dtype=float)
        b = np.asarray(self.offset, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise DimensionError(f"inconsistent affine operator: A {A.shape}, b {b.shape}")
        object.__setattr__(self, "linear", A)
        object.__setattr__(self, "offset", b)

    def __call__(self, v):
        return self.linear @ v + self.offset

    def compose_after(self, projector):
        """The operator ``projector o self``."""
        Pi = projector.matrix
        return AffineOperator(Pi @ self.linear, Pi @ self.offset)


def _positive_weight(d, n=None):
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or (n is not None and len(d) != n):
        raise DimensionError(f"weight has shape {d.shape}, expected ({n},)")
    if not np.all(d > 0):
        raise ValidationError("norm weights must be strictly positive")
    return d


def weighted_norm(v, d):
    v = np.asarray(v, dtype=float)
    d = _positive_weight(d, len(v))
    return float(np.sqrt(np.sum(d * v * v)))


def bellman_operator(chain, gamma):
    return AffineOperator(gamma * chain.transition_matrix, chain.reward_vector)


def bellman_apply(chain, gamma, v):
    return bellman_operator(chain, gamma)(np.asarray(v, dtype=float))


def bellman_lambda_operator(chain, gamma, lam, P_lambda=None):
    P = chain.transition_matrix
    n = P.shape[0]
    offset = np.linalg.solve(np.eye(n) - gamma * lam * P, chain.reward_vector)
    if P_lambda is None:
        P_lambda = plambda(P, gamma, lam)
    return AffineOperator(P_lambda, offset)


def bellman_lambda_apply(chain, gamma, lam, v):
    return bellman_lambda_operator(chain, gamma, lam)(np.asarray(v, dtype=float))


class WeightedProjector:
    """Orthogonal projection onto span(features) under the d-weighted inner product.

    ``matrix`` is Phi (Phi^T D Phi)^{-1} Phi^T D, formed through a Cholesky
    factorization of the weighted Gram matrix.
    """

    def __init__(self, features, weight):
        phi = np.asarray(features, dtype=float)
        if phi.ndim != 2:
            raise DimensionError(f"features must be 2-d, got {phi.shape}")
        d = _positive_weight(weight, phi.shape[0])
        sv = np.linalg.svd(phi, compute_uv=False)
        if phi.shape[1] > phi.shape[0] or sv[-1] <= 1e-10:
            raise ValidationError(
                f"features do not have full column rank (smallest singular value {sv[-1]:.3e})"
            )
        self.features = phi
        self.weight = d
        gram = phi.T @ (d[:, None] * phi)
        self._chol = linalg.cho_factor(gram)
        # (Phi^T D Phi)^{-1} Phi^T D, maps a value vector to feature weights
        self.coef_map = linalg.cho_solve(self._chol, phi.T * d[None, :])
        self.matrix = phi @ self.coef_map

    def weights(self, v):
        """Feature weights theta with features @ theta the projection of v."""
        return self.coef_map @ v

    def __call__(self, v):
        return self.matrix @ v


def make_projector(features, d):
    return WeightedProjector(features, d)


def contraction_modulus(op, d):
    """Lipschitz constant of ``op`` in the d-weighted Euclidean norm.

    Equal to the spectral norm of D^{1/2} A D^{-1/2}; the affine offset plays
    no part. ``op`` may be an AffineOperator or a bare matrix.
    """
    A = np.asarray(getattr(op, "linear", op), dtype=float)
    d = _positive_weight(d, A.shape[0])
    s = np.sqrt(d)
    return float(np.linalg.norm(s[:, None] * A / s[None, :], 2))


@dataclass(frozen=True)
class ContractionReport:
    modulus_exact: float
    bound: float
    norm_weight_id: str

    @property
    def slack(self):
        return self.bound - self.modulus_exact

    @property
    def holds(self):
        return self.slack >= -SLACK_ATOL


def theorem1_report(bundle, chain, features):
    """Exact modulus of Pi_f T^pi in the f-norm against sqrt(gamma (1 - kappa))."""
    proj = make_projector(features, bundle.f)
    op = bellman_operator(chain, bundle.gamma).compose_after(proj)
    return ContractionReport(
        modulus_exact=contraction_modulus(op, bundle.f),
        bound=float(np.sqrt(bundle.gamma * (1.0 - bundle.kappa))),
        norm_weight_id="f",
    )


def theorem2_report(bundle, chain, features, projected=True):
    """Exact modulus of Pi_m T^(lambda) (or bare T^(lambda)) in the m-norm against sqrt(beta)."""
    op = bellman_lambda_operator(chain, bundle.gamma, bundle.lam, bundle.plambda)
    if projected:
        op = op.compose_after(make_projector(features, bundle.m))
    return ContractionReport(
        modulus_exact=contraction_modulus(op, bundle.m),
        bound=float(np.sqrt(bundle.beta)),
        norm_weight_id="m",
    )


def td0_modulus(bundle, chain, features):
    """Modulus of Pi_{d_mu} T^pi in the d_mu-norm (the operator behind off-policy TD(0))."""
    proj = make_projector(features, bundle.d_mu)
    op = bellman_operator(chain, bundle.gamma).compose_after(proj)
    return contraction_modulus(op, bundle.d_mu)


def solve_projected_fixed_point(features, m, chain, gamma, lam, P_lambda=None):
    """theta with features @ theta = Pi_m T^(lambda)(features @ theta).

    Solves Phi^T M (I - P_lambda) Phi theta = Phi^T M b_lambda directly.
    """
    phi = np.asarray(features, dtype=float)
    m = _positive_weight(m, phi.shape[0])
    op = bellman_lambda_operator(chain, gamma, lam, P_lambda)
    n = phi.shape[0]
    weighted = phi.T * m[None, :]
    lhs = weighted @ (np.eye(n) - op.linear) @ phi
    rhs = weighted @ op.offset
    return np.linalg.solve(lhs, rhs)


def fixed_point_residual(theta, features, m, chain, gamma, lam, P_lambda=None):
    v = np.asarray(features) @ theta
    op = bellman_lambda_operator(chain, gamma, lam, P_lambda)
    proj = make_projector(features, m)
    return weighted_norm(v - proj(op(v)), m)


@dataclass(frozen=True)
class ErrorBoundReport:
    lhs: float
    proj_err: float
    rhs: float
    modulus: float

    @property
    def holds(self):
        return self.lhs <= self.rhs + SLACK_ATOL


def check_error_bound(theta_star, V_pi, features, weight, modulus):
    """||Phi theta* - V||_w <= ||Pi_w V - V||_w / (1 - modulus)."""
    if not modulus < 1.0:
        raise ValueError(f"error bound needs a contraction, got modulus {modulus}")
    phi = np.asarray(features, dtype=float)
    V = np.asarray(V_pi, dtype=float)
    proj = make_projector(phi, weight)
    lhs = weighted_norm(phi @ theta_star - V, weight)
    proj_err = weighted_norm(proj(V) - V, weight)
    return ErrorBoundReport(lhs, proj_err, proj_err / (1.0 - modulus), float(modulus))


def jensen_gap(P, rowsum, weight, v):
    """rowsum * v^T diag(w^T P) v - v^T P^T diag(w) P v; nonnegative by Jensen."""
    P = np.asarray(P, dtype=float)
    w = np.asarray(weight, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.max(np.abs(P.sum(axis=1) - rowsum)) > SLACK_ATOL:
        raise ValidationError(f"rows of P do not all sum to {rowsum}")
    Pv = P @ v
    return float(rowsum * np.sum((w @ P) * v * v) - np.sum(w * Pv * Pv))


def jensen_step_check(P, rowsum, weight, v):
    return jensen_gap(P, rowsum, weight, v) >= -RESIDUAL_ATOL


def proof_inequality_margins(bundle, chain, gamma, lam, v):
    """Margins (>= 0 when the inequality holds) of the proof steps of both theorems.

    theorem1_energy: ||v||_f^2 - gamma ||P v||_f^2 - ||v||_{d_mu}^2
    theorem1_kappa:  ||v||_{d_mu}^2 - kappa ||v||_f^2
    theorem2_energy: ||v||_m^2 - ||P_lambda v||_m^2 / beta - ||v||_i^2
    """
    v = np.asarray(v, dtype=float)
    P = chain.transition_matrix
    f, m, d_mu = bundle.f, bundle.m, bundle.d_mu
    P_lam = bundle.plambda
    if lam != bundle.lam or gamma != bundle.gamma:
        raise ValueError("bundle was built for different (gamma, lambda)")

    def sq(x, w):
        return float(np.sum(w * x * x))

    out = {
        "theorem1_energy": sq(v, f) - gamma * sq(P @ v, f) - sq(v, d_mu),
        "theorem1_kappa": sq(v, d_mu) - bundle.kappa * sq(v, f),
    }
    if bundle.beta > 0:
        out["theorem2_energy"] = sq(v, m) - sq(P_lam @ v, m) / bundle.beta - sq(v, bundle.i_weighted)
    return out


def proof_inequality_check(bundle, chain, gamma, lam, v):
    margins = proof_inequality_margins(bundle, chain, gamma, lam, v)
    return all(x >= -RESIDUAL_ATOL for x in margins.values())
