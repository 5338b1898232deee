"""Command line front end.

Subcommands::

    wecp run ecp1 --alpha-sq 0.5 --beta-sq 0.3
    wecp sweep --beta-sq 0.3333333333333333 --points 200 --out fig4.csv
    wecp verify --seed 42 --trials 50

Coefficients are given as squared magnitudes; gamma^2 is always derived as
1 - alpha^2 - beta^2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from wecp import oracle
from wecp.protocols import IterationSchedule, ecp1_run, ecp1_total_prob, ecp2_run, ecp2_total_prob
from wecp.state import SYMMETRIC, WCoefficients

log = logging.getLogger("wecp")

FIXTURES = (SYMMETRIC, WCoefficients.from_squares(0.5, 1 / 3, 1 / 6))


def fmt(x: float) -> str:
    """Fixed 15-significant-digit rendering used by every CSV writer."""
    return f"{x:.14e}"


@dataclass(frozen=True)
class SweepSpec:
    """Grid over alpha^2 at fixed beta^2.

    ``alpha_sq_range`` is an open interval and defaults to (0, 1 - beta^2).
    """

    beta_sq: float = 1 / 3
    alpha_sq_range: tuple[float, float] | None = None
    points: int = 200
    schedule: IterationSchedule = field(default_factory=IterationSchedule)

    @property
    def bounds(self) -> tuple[float, float]:
        return self.alpha_sq_range or (0.0, 1.0 - self.beta_sq)

    def grid(self) -> list[float]:
        """Evenly spaced interior points, anchored so the interval midpoint is a grid point.

        Spacing is (hi - lo) / (points + 1). For odd ``points`` this is the
        usual open linspace; for even ``points`` the grid is shifted by half a
        step so that the midpoint (where alpha^2 = gamma^2) is sampled exactly.
        """
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError(f"empty alpha^2 range ({lo}, {hi})")
        step = (hi - lo) / (self.points + 1)
        mid = (lo + hi) / 2
        offset = self.points // 2
        xs = [mid + (i - offset) * step for i in range(self.points)]
        for x in xs:
            if not (lo < x < hi) or 1.0 - x - self.beta_sq <= 0.0:
                raise ValueError(f"grid point alpha^2={x!r} leaves gamma^2 <= 0 or lies outside the range")
        return xs


def sweep_rows(spec: SweepSpec) -> list[tuple[float, float, float]]:
    rows = []
    for a in spec.grid():
        c = WCoefficients.from_squares(a, spec.beta_sq)
        rows.append((a, ecp1_total_prob(c), ecp2_total_prob(c, spec.schedule)))
    return rows


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def sweep_csv(rows: list[tuple[float, float, float]]) -> str:
    return _csv_text(["alpha_sq", "p_ecp1", "p_ecp2"], [[fmt(v) for v in row] for row in rows])


def _csv_cell(value: object) -> str:
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, list):
        if value and isinstance(value[0], list):
            return ";".join(",".join(fmt(x) for x in item) for item in value)
        if value and isinstance(value[0], str):
            return " + ".join(value)
        return ";".join(fmt(x) for x in value)
    return str(value)


def report_csv(record: dict[str, object]) -> str:
    return _csv_text(list(record), [[_csv_cell(v) for v in record.values()]])


def _coefficients(alpha_sq: float, beta_sq: float) -> WCoefficients:
    gamma_sq = 1.0 - alpha_sq - beta_sq
    if alpha_sq < 0 or beta_sq < 0 or gamma_sq < -1e-12:
        raise ValueError(f"invalid coefficients: alpha^2={alpha_sq}, beta^2={beta_sq}, gamma^2={gamma_sq:.6g}")
    return WCoefficients.from_squares(alpha_sq, beta_sq)


def _schedule(args: argparse.Namespace) -> IterationSchedule:
    return IterationSchedule(args.n, args.m, args.cutoff)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_run(args: argparse.Namespace) -> int:
    protocol = args.protocol_flag or args.protocol
    if protocol is None:
        raise ValueError("choose a protocol: ecp1 or ecp2")
    if args.protocol_flag and args.protocol and args.protocol_flag != args.protocol:
        raise ValueError("conflicting protocol arguments")
    c = _coefficients(args.alpha_sq, args.beta_sq)
    report = ecp1_run(c) if protocol == "ecp1" else ecp2_run(c, _schedule(args))
    record = report.to_record()
    if args.format == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        text = report_csv(record)
    _emit(text, args.out)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = SweepSpec(beta_sq=args.beta_sq, points=args.points, schedule=_schedule(args))
    rows = sweep_rows(spec)
    if args.format == "json":
        text = json.dumps([dict(zip(("alpha_sq", "p_ecp1", "p_ecp2"), r)) for r in rows], indent=2) + "\n"
    else:
        text = sweep_csv(rows)
    _emit(text, args.out)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    sched = _schedule(args)
    rng = np.random.default_rng(args.seed)
    cases = list(FIXTURES) + [WCoefficients.random(rng) for _ in range(args.trials)]
    failures = 0
    worst = 0.0
    for i, c in enumerate(cases):
        result = oracle.crosscheck(c, sched)
        worst = max(worst, result.max_abs_delta)
        if not result.passed:
            failures += 1
            a, b, g = c.squares
            print(f"case {i} (alpha^2={a:.6g}, beta^2={b:.6g}, gamma^2={g:.6g}): {result}", file=sys.stderr)
    status = "PASS" if failures == 0 else "FAIL"
    print(f"{status}: {len(cases) - failures}/{len(cases)} cases within {oracle.CROSSCHECK_TOL:g} (max |delta| = {worst:.3e})")
    return 0 if failures == 0 else 1


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wecp", description="W-state entanglement concentration simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def schedule_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=_positive_int, default=3, help="step-1 rounds (ECP2)")
        p.add_argument("--m", type=_positive_int, default=3, help="step-2 rounds (ECP2)")
        p.add_argument("--cutoff", type=float, default=1e-12, help="drop rounds below this probability")

    run = sub.add_parser("run", help="run one protocol and print its report")
    run.add_argument("protocol", nargs="?", choices=("ecp1", "ecp2"))
    run.add_argument("--protocol", dest="protocol_flag", choices=("ecp1", "ecp2"))
    run.add_argument("--alpha-sq", type=float, required=True)
    run.add_argument("--beta-sq", type=float, required=True)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--out")
    schedule_flags(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="total success probability of both protocols over alpha^2")
    sweep.add_argument("--beta-sq", type=float, default=1 / 3)
    sweep.add_argument("--points", type=int, default=200)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--out")
    schedule_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="cross-check closed forms against outcome-tree enumeration")
    verify.add_argument("--seed", type=int, default=42)
    verify.add_argument("--trials", type=_positive_int, default=50)
    schedule_flags(verify)
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.debug("command failed", exc_info=True)
        print(f"wecp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
