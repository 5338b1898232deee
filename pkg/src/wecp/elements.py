"""Devices acting on electron states.

Unitary elements (:func:`pbs`, :func:`hadamard`, :func:`phase_correct`) return a
new state. Measurements (:func:`charge_detect`, :func:`parity_gate`,
:func:`measure_spin`) return one :class:`BranchOutcome` per outcome with
nonzero probability. Charge detection and the parity gate leave every electron
in place; spin detection consumes the measured electron.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from enum import Enum

from wecp.state import Configuration, QuantumState, Spin, _accumulate, count_in

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

LocalOp = Callable[[Spin], list[tuple[Spin, complex]]]


@dataclass(frozen=True)
class PbsPorts:
    """Spin beam splitter wiring.

    Spin up is transmitted and spin down reflected, so ``in_a`` up and
    ``in_b`` down leave through ``out_1``; ``in_a`` down and ``in_b`` up
    leave through ``out_2``.
    """

    in_a: str
    in_b: str
    out_1: str
    out_2: str

    def __post_init__(self) -> None:
        labels = (self.in_a, self.in_b, self.out_1, self.out_2)
        if len(set(labels)) != 4:
            raise ValueError(f"PBS ports must be pairwise distinct, got {labels!r}")


class ChargeOutcome(str, Enum):
    EXACTLY_ONE = "1"
    ZERO_OR_TWO = "0|2"


class ParityOutcome(str, Enum):
    EVEN = "even"  # C = 1
    ODD = "odd"  # C = 0


@dataclass(frozen=True)
class BranchOutcome:
    label: ChargeOutcome | ParityOutcome | Spin | int
    probability: float
    post_state: QuantumState | None  # None when a destructive measurement leaves no electrons


def _branches(
    state: QuantumState,
    classify: Callable[[Configuration], object],
    order: Iterable[object],
    transform: Callable[[Configuration], Configuration] = lambda c: c,
) -> list[BranchOutcome]:
    groups: dict[object, list[tuple[Configuration, complex]]] = {}
    for config, amp in state.items():
        groups.setdefault(classify(config), []).append((transform(config), amp))
    out = []
    for label in order:
        terms = groups.pop(label, None)
        if not terms:
            continue
        prob = math.fsum(abs(a) ** 2 for _, a in terms)
        if prob <= 0.0:
            continue
        scale = 1.0 / math.sqrt(prob)
        if all(len(c) == 0 for c, _ in terms):
            post = None
        else:
            post = QuantumState._from_terms(_accumulate((c, a * scale) for c, a in terms))
        out.append(BranchOutcome(label, prob, post))
    assert not groups, f"unclassified outcomes {list(groups)}"
    return out


def _single_index(config: Configuration, mode: str) -> int:
    hits = [i for i, (m, _) in enumerate(config) if m == mode]
    if len(hits) != 1:
        raise ValueError(f"expected exactly one electron in mode {mode!r}, found {len(hits)}")
    return hits[0]


def apply_local(state: QuantumState, mode: str, op: LocalOp) -> QuantumState:
    """Apply a single-electron spin operator to the electron in ``mode``."""
    acc: dict[Configuration, complex] = {}
    for config, amp in state.items():
        i = _single_index(config, mode)
        for spin, coeff in op(config[i][1]):
            new = config[:i] + ((mode, spin),) + config[i + 1 :]
            acc[new] = acc.get(new, 0j) + amp * coeff
    return QuantumState._from_terms(acc)


def pbs(state: QuantumState, ports: PbsPorts) -> QuantumState:
    """Route electrons in ``in_a``/``in_b`` to the output arms by spin; amplitudes unchanged."""
    route = {
        (ports.in_a, Spin.UP): ports.out_1,
        (ports.in_a, Spin.DOWN): ports.out_2,
        (ports.in_b, Spin.UP): ports.out_2,
        (ports.in_b, Spin.DOWN): ports.out_1,
    }
    return QuantumState._from_terms(
        _accumulate(
            (tuple((route.get((mode, spin), mode), spin) for mode, spin in config), amp)
            for config, amp in state.items()
        )
    )


def charge_detect(state: QuantumState, region: Iterable[str] | str) -> list[BranchOutcome]:
    """Nondestructive charge detection that only resolves "exactly one electron"."""
    region = frozenset((region,) if isinstance(region, str) else region)

    def classify(config: Configuration) -> ChargeOutcome:
        return ChargeOutcome.EXACTLY_ONE if count_in(config, region) == 1 else ChargeOutcome.ZERO_OR_TWO

    return _branches(state, classify, (ChargeOutcome.EXACTLY_ONE, ChargeOutcome.ZERO_OR_TWO))


def count_charges(state: QuantumState, region: Iterable[str] | str) -> list[BranchOutcome]:
    """Diagnostic only: charge detection that resolves the exact electron number."""
    region = frozenset((region,) if isinstance(region, str) else region)
    counts = sorted({count_in(c, region) for c in state})
    return _branches(state, lambda c: count_in(c, region), counts)


def parity_gate(
    state: QuantumState,
    mode_a: str,
    mode_b: str,
    out_a: str | None = None,
    out_b: str | None = None,
) -> list[BranchOutcome]:
    """Complete parity check on the electrons in ``mode_a`` and ``mode_b``.

    Even-parity components (uu, dd) and odd-parity components (ud, du) are
    separated without disturbing them; electrons leave through ``out_a`` and
    ``out_b`` (default: input names with a trailing prime).
    """
    out_a = out_a if out_a is not None else mode_a + "'"
    out_b = out_b if out_b is not None else mode_b + "'"
    rename = {mode_a: out_a, mode_b: out_b}

    def classify(config: Configuration) -> ParityOutcome:
        sa = config[_single_index(config, mode_a)][1]
        sb = config[_single_index(config, mode_b)][1]
        return ParityOutcome.EVEN if sa is sb else ParityOutcome.ODD

    def transform(config: Configuration) -> Configuration:
        return tuple((rename.get(m, m), s) for m, s in config)

    return _branches(state, classify, (ParityOutcome.EVEN, ParityOutcome.ODD), transform)


def _hadamard_op(spin: Spin) -> list[tuple[Spin, complex]]:
    if spin is Spin.UP:
        return [(Spin.UP, _INV_SQRT2), (Spin.DOWN, _INV_SQRT2)]
    return [(Spin.UP, _INV_SQRT2), (Spin.DOWN, -_INV_SQRT2)]


def _phase_op(spin: Spin) -> list[tuple[Spin, complex]]:
    return [(spin, -1.0 if spin is Spin.DOWN else 1.0)]


def hadamard(state: QuantumState, mode: str) -> QuantumState:
    return apply_local(state, mode, _hadamard_op)


def phase_correct(state: QuantumState, mode: str) -> QuantumState:
    """Flip the sign of the spin-down component of the electron in ``mode``."""
    return apply_local(state, mode, _phase_op)


def measure_spin(state: QuantumState, mode: str) -> list[BranchOutcome]:
    """Destructive up/down detection; the detected electron is removed."""
    return _branches(
        state,
        lambda c: c[_single_index(c, mode)][1],
        (Spin.UP, Spin.DOWN),
        lambda c: tuple(e for e in c if e[0] != mode),
    )
