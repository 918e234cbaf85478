"""Full audit of one instance: emphasis, exact moduli against the theorem bounds,
fixed points, error bounds and proof-step inequalities, as a JSON-ready dict."""

import numpy as np

from .emphasis import emphasis_bundle
from .fixtures import fixture_two_state, two_state_closed_form
from .mdp import induced_chain, true_value
from .operators import (
    RESIDUAL_ATOL,
    SLACK_ATOL,
    check_error_bound,
    contraction_modulus,
    fixed_point_residual,
    jensen_gap,
    proof_inequality_margins,
    solve_projected_fixed_point,
    td0_modulus,
    theorem1_report,
    theorem2_report,
    weighted_norm,
)

SCHEMA_VERSION = 1


def _contraction(rep):
    return {
        "modulus_exact": rep.modulus_exact,
        "bound": rep.bound,
        "slack": rep.slack,
        "norm_weight": rep.norm_weight_id,
        "holds": rep.holds,
    }


def _bound(rep):
    return {
        "lhs": rep.lhs,
        "proj_err": rep.proj_err,
        "rhs": rep.rhs,
        "modulus": rep.modulus,
        "holds": rep.holds,
    }


def proof_checks(bundle, chain, n_samples=64, seed=0):
    """Evaluate the Jensen steps and proof inequalities of both theorems on random v."""
    rng = np.random.default_rng(seed)
    P = chain.transition_matrix
    margins = {"jensen_theorem1": [], "jensen_theorem2": [], "theorem1_energy": [],
               "theorem1_kappa": [], "theorem2_energy": []}
    for _ in range(n_samples):
        v = rng.normal(size=len(P))
        margins["jensen_theorem1"].append(jensen_gap(P, 1.0, bundle.f, v))
        if bundle.beta > 0:
            margins["jensen_theorem2"].append(jensen_gap(bundle.plambda, bundle.beta, bundle.m, v))
        for k, x in proof_inequality_margins(bundle, chain, bundle.gamma, bundle.lam, v).items():
            margins[k].append(x)
    out = {"samples": n_samples, "seed": seed}
    for k, xs in margins.items():
        out[f"min_margin_{k}"] = min(xs) if xs else None
    out["holds"] = all(min(xs) >= -RESIDUAL_ATOL for xs in margins.values() if xs)
    return out


def tightness_section(bundle, chain, epsilon):
    """Two-state example quantities at v = (0, 1)."""
    g = bundle.gamma
    v = np.array([0.0, 1.0])
    Pv = chain.transition_matrix @ v
    v_sq = weighted_norm(v, bundle.f) ** 2
    Pv_sq = weighted_norm(Pv, bundle.f) ** 2
    closed = two_state_closed_form(epsilon, g)
    ratio = g * g * Pv_sq / v_sq
    return {
        "epsilon": epsilon,
        "v": v.tolist(),
        "v_sq_f": v_sq,
        "Pv_sq_f": Pv_sq,
        "closed_form_v_sq_f": closed["v_sq_f"],
        "closed_form_Pv_sq_f": closed["Pv_sq_f"],
        # ||gamma P v||_f^2 / ||v||_f^2, which tends to gamma as epsilon -> 0
        "ratio": ratio,
        "gamma": g,
        "gap_to_gamma": abs(ratio - g),
        # gamma ||P v||_f^2 / ||v||_f^2 against its Theorem 1 ceiling 1 - kappa
        "step_ratio": g * Pv_sq / v_sq,
        "one_minus_kappa": 1.0 - bundle.kappa,
    }


def audit_instance(inst, source="spec", proof_samples=64, proof_seed=0, epsilon=None):
    """Build the audit report. ``epsilon`` (two-state fixture only) adds the tightness section."""
    mdp, phi = inst.mdp, inst.features
    gamma, lam = mdp.discount, inst.lam
    chain = induced_chain(mdp, inst.target)
    P = chain.transition_matrix
    V = true_value(chain, gamma)

    # Theorem 1 lives on the ETD(0) weighting: lambda = 0, interest = 1
    b0 = emphasis_bundle(mdp, inst.target, inst.behavior, 0.0)
    bl = emphasis_bundle(mdp, inst.target, inst.behavior, lam, inst.interest)
    res_f, _ = b0.residuals(P)
    _, res_m = bl.residuals(P)
    row_sums = bl.plambda.sum(axis=1)

    t1 = theorem1_report(b0, chain, phi)
    t2 = theorem2_report(bl, chain, phi)
    t2_bare = theorem2_report(bl, chain, phi, projected=False)
    td0 = td0_modulus(b0, chain, phi)
    on_policy_mod = contraction_modulus(gamma * P, b0.f)

    theta0 = solve_projected_fixed_point(phi, b0.f, chain, gamma, 0.0, b0.plambda)
    thetal = solve_projected_fixed_point(phi, bl.m, chain, gamma, lam, bl.plambda)
    r0 = fixed_point_residual(theta0, phi, b0.f, chain, gamma, 0.0, b0.plambda)
    rl = fixed_point_residual(thetal, phi, bl.m, chain, gamma, lam, bl.plambda)

    c1 = check_error_bound(theta0, V, phi, b0.f, t1.bound)
    c2 = check_error_bound(thetal, V, phi, bl.m, t2.bound)

    emphasis = {
        "d_mu": b0.d_mu,
        "d_pi": b0.d_pi if b0.d_pi is not None else None,
        "f": b0.f,
        "m": bl.m,
        "interest": bl.interest,
        "i_weighted": bl.i_weighted,
        "kappa": b0.kappa,
        "one_minus_gamma": 1.0 - gamma,
        "beta": bl.beta,
        "plambda_row_sums": row_sums,
        "residual_f": res_f,
        "residual_m": res_m,
        "holds": bool(
            res_f <= RESIDUAL_ATOL
            and res_m <= RESIDUAL_ATOL
            and np.max(np.abs(row_sums - bl.beta)) <= RESIDUAL_ATOL
            and 0.0 < b0.kappa <= 1.0 - gamma + 1e-12
        ),
    }
    moduli = {
        "theorem1": _contraction(t1),
        "theorem2": _contraction(t2),
        "theorem2_unprojected": _contraction(t2_bare),
        "gamma_P_pi_in_f_norm": on_policy_mod,
        "td0_projected_d_mu": {"modulus_exact": td0, "expansive": td0 > 1.0},
    }
    fixed_point = {
        "etd0": {"theta": theta0, "residual": r0, "holds": r0 <= SLACK_ATOL},
        "etd_lambda": {"theta": thetal, "residual": rl, "holds": rl <= SLACK_ATOL},
    }
    report = {
        "schema_version": SCHEMA_VERSION,
        "instance": {
            "name": inst.name,
            "source": source,
            "content_hash": inst.content_hash(),
            "n_states": mdp.n_states,
            "n_actions": mdp.n_actions,
            "n_features": phi.shape[1],
            "gamma": gamma,
            "lambda": lam,
            "spec": inst.to_dict(),
        },
        "value": {"V_pi": V, "norm_f": weighted_norm(V, b0.f), "norm_m": weighted_norm(V, bl.m)},
        "emphasis": emphasis,
        "moduli": moduli,
        "fixed_point": fixed_point,
        "error_bounds": {"corollary1": _bound(c1), "corollary2": _bound(c2)},
        "proof_checks": proof_checks(bl, chain, proof_samples, proof_seed),
    }
    if epsilon is not None:
        report["tightness"] = tightness_section(b0, chain, epsilon)
    report["holds"] = all_holds(report)
    return report


def holds_flags(obj, path=""):
    """Yield (path, value) for every ``holds`` key in a nested report."""
    if isinstance(obj, dict):
        for k, v in obj.items():
            p = f"{path}.{k}" if path else k
            if k == "holds" and isinstance(v, (bool, np.bool_)):
                yield p, bool(v)
            else:
                yield from holds_flags(v, p)


def all_holds(report):
    return all(v for p, v in holds_flags(report) if p != "holds")


def example_table(epsilon, gamma):
    """Rows (quantity, computed, closed form, |difference|) for the two-state example."""
    inst = fixture_two_state(epsilon, gamma)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
    chain = induced_chain(inst.mdp, inst.target)
    closed = two_state_closed_form(epsilon, gamma)
    tight = tightness_section(b, chain, epsilon)
    e, g = epsilon, gamma
    rows = [
        ("d_mu(Left)", b.d_mu[0], closed["d_mu"][0]),
        ("d_mu(Right)", b.d_mu[1], closed["d_mu"][1]),
        ("f(Left)", b.f[0], closed["f"][0]),
        ("f(Right)", b.f[1], closed["f"][1]),
        ("||v||_f^2", tight["v_sq_f"], closed["v_sq_f"]),
        ("||P_pi v||_f^2", tight["Pv_sq_f"], closed["Pv_sq_f"]),
        ("||gamma P_pi v||_f^2 / ||v||_f^2", tight["ratio"],
         g * g * (1 - e) ** 2 / (e + g - 2 * e * g)),
        ("gamma ||P_pi v||_f^2 / ||v||_f^2", tight["step_ratio"],
         g * (1 - e) ** 2 / (e + g - 2 * e * g)),
    ]
    return [(name, float(x), float(y), abs(float(x) - float(y))) for name, x, y in rows], tight


def format_example_table(rows, tight):
    width = max(len(r[0]) for r in rows)
    lines = [f"{'quantity':<{width}}  {'computed':>22}  {'closed form':>22}  {'|diff|':>9}"]
    for name, x, y, d in rows:
        lines.append(f"{name:<{width}}  {x:>22.17g}  {y:>22.17g}  {d:>9.2e}")
    lines.append("")
    lines.append(f"ratio ||gamma P v||^2/||v||^2 = {tight['ratio']:.6f}  (gamma = {tight['gamma']}, "
                 f"gap {tight['gap_to_gamma']:.2e})")
    lines.append(f"gamma ||P v||^2/||v||^2 = {tight['step_ratio']:.6f} <= 1 - kappa = "
                 f"{tight['one_minus_kappa']:.6f}")
    return "\n".join(lines)
