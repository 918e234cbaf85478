"""Command line: ``etd-lab audit|learn|example``.

Exit codes: 0 success (every audit check holds), 1 input error,
2 an audited invariant failed, 3 internal error.
"""

import argparse
import sys
from pathlib import Path

from .audit import all_holds, audit_instance, example_table, format_example_table
from .fixtures import (
    FIXTURES,
    FixtureCorruptedError,
    divergence_meta,
    fixture_divergence,
    fixture_random,
    fixture_two_state,
)
from .learners import ALGORITHMS, LearningConfig, StepSchedule, run_learning
from .mdp import NonErgodicChainError, ValidationError
from .spec_io import SpecError, canonical_json, parse_spec

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for invariant failures here
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="etd-lab", description="Emphatic TD audit and learning laboratory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_instance(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--spec", metavar="PATH", help="JSON MDP spec file")
        src.add_argument("--fixture", choices=FIXTURES, help="built-in instance")
        sp.add_argument("--lambda", dest="lam", type=float, default=None, help="overrides the spec's lambda")
        sp.add_argument("--epsilon", type=float, default=0.1, help="two-state fixture parameter")
        sp.add_argument("--gamma", type=float, default=0.9, help="discount for fixtures")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--states", type=int, default=5, help="random fixture size")
        sp.add_argument("--actions", type=int, default=3, help="random fixture actions")
        sp.add_argument("--features", type=int, default=None,
                        help="random fixture feature count (default tabular)")
        sp.add_argument("--out", metavar="PATH")

    a = sub.add_parser("audit", help="exact theorem and bound checks on one instance")
    add_instance(a)
    a.add_argument("--proof-samples", type=int, default=64)

    learn = sub.add_parser("learn", help="run a stochastic learner, write a CSV learning curve")
    add_instance(learn)
    learn.add_argument("--alg", choices=ALGORITHMS, default="etd0")
    learn.add_argument("--steps", type=int, default=200_000)
    learn.add_argument("--schedule", choices=("harmonic", "constant"), default="harmonic")
    learn.add_argument("--alpha", type=float, default=StepSchedule.alpha0)
    learn.add_argument("--offset", type=float, default=StepSchedule.offset)
    learn.add_argument("--stride", type=int, default=1000)
    learn.add_argument("--summary", metavar="PATH", help="summary JSON (default: stderr)")

    ex = sub.add_parser("example", help="two-state example: computed vs closed-form quantities")
    ex.add_argument("--epsilon", type=float, default=0.1)
    ex.add_argument("--gamma", type=float, default=0.9)
    return p


def load_instance(args):
    """Returns (instance, source label, epsilon or None)."""
    if args.spec:
        inst = parse_spec(args.spec)
        source, eps = f"spec:{args.spec}", None
    elif args.fixture == "two-state":
        inst = fixture_two_state(args.epsilon, args.gamma)
        source, eps = "fixture:two-state", args.epsilon
    elif args.fixture in ("random", "on-policy"):
        seed = 7 if args.seed is None else args.seed
        inst = fixture_random(seed, args.states, args.actions, 0.05, args.features,
                              on_policy=args.fixture == "on-policy", gamma=args.gamma)
        source, eps = f"fixture:{args.fixture}", None
    else:
        inst = fixture_divergence()
        source, eps = "fixture:divergence", None
    if args.lam is not None:
        inst = inst.with_lambda(args.lam)
    return inst, source, eps


def _emit(text, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_audit(args):
    inst, source, eps = load_instance(args)
    report = audit_instance(inst, source, proof_samples=args.proof_samples, epsilon=eps)
    _emit(canonical_json(report) + "\n", args.out)
    return EXIT_OK if all_holds(report) else EXIT_INVARIANT


def cmd_learn(args):
    inst, source, _ = load_instance(args)
    seed = args.seed
    if seed is None:
        seed = divergence_meta().get("learner_seed", 0) if args.fixture == "divergence" else 0
    try:
        config = LearningConfig(
            algorithm=args.alg,
            schedule=StepSchedule(args.schedule, args.alpha, args.offset),
            steps=args.steps,
            seed=seed,
            stride=args.stride,
            lam=inst.lam,
        )
    except ValueError as exc:
        raise ValidationError(str(exc), field="learn") from None
    curve = run_learning(inst, config)
    _emit(curve.to_csv(), args.out)
    summary = {"source": source, "instance_hash": inst.content_hash(), **curve.summary()}
    text = canonical_json(summary) + "\n"
    if args.summary:
        Path(args.summary).write_text(text, encoding="utf-8")
    else:
        sys.stderr.write(text)
    return EXIT_OK


def cmd_example(args):
    rows, tight = example_table(args.epsilon, args.gamma)
    print(format_example_table(rows, tight))
    return EXIT_OK


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"etd-lab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    handler = {"audit": cmd_audit, "learn": cmd_learn, "example": cmd_example}[args.command]
    try:
        return handler(args)
    except (SpecError, ValidationError, NonErgodicChainError, OSError) as exc:
        print(f"etd-lab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FixtureCorruptedError as exc:
        print(f"etd-lab: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"etd-lab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
