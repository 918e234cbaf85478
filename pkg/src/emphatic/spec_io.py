"""JSON spec files for MDP instances, and the canonical (byte-stable) JSON writer.

A spec file looks like::

    {
      "name": "two_state",
      "states": ["Left", "Right"],          # or a count
      "actions": ["go_left", "go_right"],   # or a count
      "transition": [[[1, 0], [1, 0]], [[0, 1], [0, 1]]],   # [action][state][next]
      "reward": [[0, 1], [0, 1]],                           # [state][action]
      "gamma": 0.9,
      "initial_dist": [0.5, 0.5],
      "policies": {"target": [[0.1, 0.9], [0.1, 0.9]],
                   "behavior": [[0.9, 0.1], [0.9, 0.1]]},
      "features": [[1, 0], [0, 1]],        # optional, default identity
      "interest": [1, 1],                  # optional, default ones
      "lambda": 0.0                        # optional, default 0
    }
"""

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mdp import (
    CoverageError,
    Policy,
    TabularMdp,
    ValidationError,
    as_features,
    importance_ratios,
)
from .emphasis import as_interest

SPEC_KEYS = (
    "name", "states", "actions", "transition", "reward", "gamma", "initial_dist",
    "policies", "features", "interest", "lambda", "meta",
)
REQUIRED_KEYS = ("states", "actions", "transition", "reward", "gamma", "initial_dist", "policies")


class SpecError(ValueError):
    """Spec file rejected. ``code`` is one of malformed, dimension,
    stochasticity, coverage, invalid."""

    def __init__(self, code, message, field=None, line=None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.field = field
        self.line = line

    def __str__(self):
        where = []
        if self.field:
            where.append(f"field {self.field!r}")
        if self.line:
            where.append(f"line {self.line}")
        suffix = f" ({', '.join(where)})" if where else ""
        return f"[{self.code}] {self.message}{suffix}"


@dataclass(frozen=True, eq=False)
class Instance:
    """Everything needed to audit or learn: model, the two policies, features, interest, lambda."""

    mdp: TabularMdp
    target: Policy
    behavior: Policy
    features: np.ndarray
    interest: np.ndarray
    lam: float = 0.0
    name: str = "instance"
    state_names: tuple = ()
    action_names: tuple = ()

    def __post_init__(self):
        importance_ratios(self.target, self.behavior)
        n = self.mdp.n_states
        for p in (self.target, self.behavior):
            if p.table.shape != (n, self.mdp.n_actions):
                raise ValidationError(
                    f"policy shape {p.table.shape} does not match MDP", field="policies"
                )
        phi = as_features(self.features)
        if phi.shape[0] != n:
            raise ValidationError(f"features have {phi.shape[0]} rows, MDP has {n} states", field="features")
        object.__setattr__(self, "features", phi)
        object.__setattr__(self, "interest", as_interest(self.interest, n))
        lam = float(self.lam)
        if not 0.0 <= lam < 1.0:
            raise ValidationError(f"lambda must lie in [0, 1), got {lam}", field="lambda")
        object.__setattr__(self, "lam", lam)

    @property
    def gamma(self):
        return self.mdp.discount

    def with_lambda(self, lam):
        return Instance(self.mdp, self.target, self.behavior, self.features, self.interest,
                        lam, self.name, self.state_names, self.action_names)

    def to_dict(self):
        mdp = self.mdp
        return {
            "name": self.name,
            "states": list(self.state_names) if self.state_names else mdp.n_states,
            "actions": list(self.action_names) if self.action_names else mdp.n_actions,
            "transition": mdp.transition.tolist(),
            "reward": mdp.reward.tolist(),
            "gamma": mdp.discount,
            "initial_dist": mdp.initial_dist.tolist(),
            "policies": {
                "target": self.target.table.tolist(),
                "behavior": self.behavior.table.tolist(),
            },
            "features": self.features.tolist(),
            "interest": self.interest.tolist(),
            "lambda": self.lam,
        }

    def content_hash(self):
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def _fmt_float(x):
    if not math.isfinite(x):
        # not valid JSON numbers; spelled as strings so the output still parses
        return json.dumps(repr(x))
    if x == int(x) and abs(x) < 1e16:
        return "%.1f" % x
    return format(x, ".17g")


def canonical_json(obj, indent=2, _level=0):
    """JSON text with a fixed layout and floats printed at 17 significant digits.

    Keys keep insertion order, so callers control section ordering; the same
    object always yields the same bytes.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(canonical_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + canonical_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_spec(instance):
    return canonical_json(instance.to_dict()) + "\n"


def write_spec(instance, path):
    Path(path).write_text(dumps_spec(instance), encoding="utf-8")


def _line_of(text, key):
    if text is None:
        return None
    needle = json.dumps(key) + ":"
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line.replace('" :', '":'):
            return lineno
    return None


def _names(value, key):
    if isinstance(value, bool):
        raise SpecError("malformed", f"{key} must be a positive integer or a list of names", key)
    if isinstance(value, int):
        if value < 1:
            raise SpecError("dimension", f"{key} must be positive", key)
        return value, ()
    if isinstance(value, list) and value and all(isinstance(v, str) for v in value):
        return len(value), tuple(value)
    raise SpecError("malformed", f"{key} must be a positive integer or a list of names", key)


def _array(doc, key, ndim):
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError("malformed", f"{key} is not a numeric array: {exc}", key) from None
    if arr.ndim != ndim:
        raise SpecError("dimension", f"{key} must be a {ndim}-d array, got shape {arr.shape}", key)
    return arr


def spec_from_dict(doc, text=None):
    """Build an Instance from a decoded spec document."""
    if not isinstance(doc, dict):
        raise SpecError("malformed", "top level must be a JSON object", line=1)
    unknown = sorted(set(doc) - set(SPEC_KEYS))
    if unknown:
        raise SpecError("malformed", f"unknown keys {unknown}", unknown[0], _line_of(text, unknown[0]))
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise SpecError("malformed", f"missing required key {key!r}", key)
    try:
        n_states, state_names = _names(doc["states"], "states")
        n_actions, action_names = _names(doc["actions"], "actions")
        P = _array(doc, "transition", 3)
        if P.shape != (n_actions, n_states, n_states):
            raise SpecError(
                "dimension",
                f"transition has shape {P.shape}, expected {(n_actions, n_states, n_states)}",
                "transition",
            )
        R = _array(doc, "reward", 2)
        rho0 = _array(doc, "initial_dist", 1)
        gamma = doc["gamma"]
        if isinstance(gamma, bool) or not isinstance(gamma, (int, float)):
            raise SpecError("malformed", "gamma must be a number", "gamma")
        mdp = TabularMdp(P, R, float(gamma), rho0)

        pols = doc["policies"]
        if not isinstance(pols, dict) or not {"target", "behavior"} <= set(pols):
            raise SpecError("malformed", "policies must map 'target' and 'behavior' to tables", "policies")
        tables = {}
        for role in ("target", "behavior"):
            t = np.array(pols[role], dtype=float)
            if t.shape != (n_states, n_actions):
                raise SpecError(
                    "dimension", f"{role} policy has shape {t.shape}, expected {(n_states, n_actions)}",
                    f"policies.{role}",
                )
            try:
                tables[role] = Policy(t)
            except ValidationError as exc:
                raise SpecError(exc.code, str(exc), f"policies.{role}") from None
        try:
            importance_ratios(tables["target"], tables["behavior"])
        except CoverageError as exc:
            raise SpecError("coverage", str(exc), "policies") from None

        phi = _array(doc, "features", 2) if doc.get("features") is not None else np.eye(n_states)
        interest = _array(doc, "interest", 1) if doc.get("interest") is not None else None
        lam = doc.get("lambda", 0.0)
        if lam is None:
            lam = 0.0
        if isinstance(lam, bool) or not isinstance(lam, (int, float)):
            raise SpecError("malformed", "lambda must be a number", "lambda")
        name = doc.get("name", "spec")
        if not isinstance(name, str):
            raise SpecError("malformed", "name must be a string", "name")
        inst = Instance(
            mdp, tables["target"], tables["behavior"], phi, interest, float(lam), name,
            state_names, action_names,
        )
    except SpecError as exc:
        if exc.line is None and exc.field:
            exc.line = _line_of(text, exc.field.split(".")[0])
        raise
    except ValidationError as exc:
        top = (exc.field or "").split(".")[0] or None
        raise SpecError(exc.code, str(exc), exc.field, _line_of(text, top) if top else None) from None
    return inst


def loads_spec(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("malformed", exc.msg, line=exc.lineno) from None
    return spec_from_dict(doc, text)


def parse_spec(path):
    """Read and validate a spec file. Raises SpecError (or OSError if unreadable)."""
    return loads_spec(Path(path).read_text(encoding="utf-8"))
