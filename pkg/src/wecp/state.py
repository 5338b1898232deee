"""Sparse state vectors over labeled electrons.

Every electron carries a spatial mode (a short string such as ``"a1"``) and a
spin. A basis element is a :data:`Configuration`: one ``(mode, spin)`` pair per
electron, in a fixed electron order set at construction time. A
:class:`QuantumState` maps configurations to complex amplitudes and is always
unit-norm.

Electrons are treated as distinguishable labeled particles, so no exchange
sign is ever applied. When two states have to be compared physically, use
:meth:`QuantumState.by_occupation`, which forgets electron labels and keeps
only which mode holds which spin.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType

import numpy as np

from wecp.errors import DegenerateInputError, EmptyBranchError, NormalizationError

NORM_TOL = 1e-12
PRUNE_TOL = 1e-15


class Spin(str, Enum):
    UP = "u"
    DOWN = "d"

    def flipped(self) -> Spin:
        return Spin.DOWN if self is Spin.UP else Spin.UP


Electron = tuple[str, Spin]
Configuration = tuple[Electron, ...]
Predicate = Callable[[Configuration], bool]


def _accumulate(pairs: Iterable[tuple[Configuration, complex]]) -> dict[Configuration, complex]:
    acc: dict[Configuration, complex] = {}
    for config, amp in pairs:
        acc[config] = acc.get(config, 0j) + amp
    return acc


def config_key(config: Configuration) -> tuple[tuple[str, str], ...]:
    """Sort key for configurations: lexicographic by (mode name, spin)."""
    return tuple((mode, spin.value) for mode, spin in config)


def count_in(config: Configuration, region: Iterable[str] | str) -> int:
    """Number of electrons of ``config`` sitting in any mode of ``region``."""
    if isinstance(region, str):
        region = (region,)
    region = frozenset(region)
    return sum(1 for mode, _ in config if mode in region)


class QuantumState:
    """Immutable, unit-norm sparse superposition of configurations.

    Args:
        terms: mapping (or iterable of pairs) from configuration to amplitude.
            Repeated configurations are summed; amplitudes with magnitude
            below ``PRUNE_TOL`` are dropped.

    Raises:
        NormalizationError: the squared amplitudes do not sum to one within
            ``NORM_TOL``, or nothing survives pruning.
        ValueError: configurations have different electron counts.
    """

    __slots__ = ("_terms", "_n_electrons")

    def __init__(
        self,
        terms: Mapping[Configuration, complex] | Iterable[tuple[Configuration, complex]],
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Configuration, complex] = {}
        for config, amp in items:
            config = tuple((str(mode), Spin(spin)) for mode, spin in config)
            acc[config] = acc.get(config, 0j) + complex(amp)
        self._init_checked(acc)

    def _init_checked(self, acc: dict[Configuration, complex]) -> None:
        kept = {c: a for c, a in acc.items() if abs(a) >= PRUNE_TOL}
        if not kept:
            raise NormalizationError("state has no surviving amplitudes")
        lengths = {len(c) for c in kept}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError(f"configurations must share a nonzero electron count, got {sorted(lengths)}")
        norm_sq = math.fsum(abs(a) ** 2 for a in kept.values())
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise NormalizationError(f"state norm squared is {norm_sq!r}, expected 1")
        self._terms = kept
        self._n_electrons = lengths.pop()

    @classmethod
    def _from_terms(cls, acc: dict[Configuration, complex]) -> QuantumState:
        """Internal constructor for already well-formed configurations (summed, Spin-typed)."""
        self = cls.__new__(cls)
        self._init_checked(acc)
        return self

    @classmethod
    def normalized(
        cls, terms: Mapping[Configuration, complex] | Iterable[tuple[Configuration, complex]]
    ) -> QuantumState:
        """Build a state after rescaling ``terms`` to unit norm."""
        items = list(terms.items() if isinstance(terms, Mapping) else terms)
        acc: dict[Configuration, complex] = {}
        for config, amp in items:
            config = tuple(config)
            acc[config] = acc.get(config, 0j) + complex(amp)
        norm = math.sqrt(math.fsum(abs(a) ** 2 for a in acc.values()))
        if norm == 0.0:
            raise EmptyBranchError("cannot normalize a zero vector")
        return cls({c: a / norm for c, a in acc.items()})

    @property
    def terms(self) -> Mapping[Configuration, complex]:
        return MappingProxyType(self._terms)

    @property
    def n_electrons(self) -> int:
        return self._n_electrons

    def modes(self) -> frozenset[str]:
        return frozenset(mode for config in self._terms for mode, _ in config)

    def items(self) -> Iterator[tuple[Configuration, complex]]:
        return iter(self._terms.items())

    def amplitude(self, config: Configuration) -> complex:
        return self._terms.get(tuple(config), 0j)

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._terms.values())

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Configuration]:
        return iter(self._terms)

    def by_occupation(self) -> QuantumState:
        """The same state with each configuration's electrons sorted by (mode, spin).

        Electron labels are dropped, so configurations that only differ by which
        labeled electron sits where collapse into one term.
        """
        acc: dict[Configuration, complex] = {}
        for config, amp in self._terms.items():
            key = tuple(sorted(config, key=lambda e: (e[0], e[1].value)))
            acc[key] = acc.get(key, 0j) + amp
        return QuantumState._from_terms(acc)

    def render(self) -> str:
        """Canonical text form, one term per line, sorted by configuration."""
        lines = []
        for config in sorted(self._terms, key=config_key):
            amp = self._terms[config]
            kets = " ".join(f"|{spin.value}>_{mode}" for mode, spin in config)
            lines.append(f"({amp.real:.14e},{amp.imag:.14e}) {kets}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"QuantumState({len(self)} terms, {self._n_electrons} electrons)"


def inner(a: QuantumState, b: QuantumState) -> complex:
    """<a|b> computed on occupation forms."""
    ta, tb = a.by_occupation().terms, b.by_occupation().terms
    return sum((ta[c].conjugate() * amp for c, amp in tb.items() if c in ta), 0j)


def allclose(a: QuantumState, b: QuantumState, atol: float = 1e-12, up_to_phase: bool = False) -> bool:
    """Amplitude-wise comparison of two states by occupation.

    With ``up_to_phase`` the global phase of ``a`` is first aligned to ``b``.
    """
    ta, tb = a.by_occupation().terms, b.by_occupation().terms
    phase = 1.0 + 0j
    if up_to_phase:
        overlap = sum((ta[c].conjugate() * amp for c, amp in tb.items() if c in ta), 0j)
        if abs(overlap) == 0.0:
            return False
        phase = overlap / abs(overlap)
    for config in set(ta) | set(tb):
        if abs(phase * ta.get(config, 0j) - tb.get(config, 0j)) > atol:
            return False
    return True


@dataclass(frozen=True)
class WCoefficients:
    """Real, non-negative coefficients of a three-party W state, unit square-sum."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            value = float(getattr(self, name))
            if not (0.0 <= value <= 1.0 + NORM_TOL):
                raise ValueError(f"{name}={value!r} outside [0, 1]")
            object.__setattr__(self, name, min(value, 1.0))
        total = self.alpha**2 + self.beta**2 + self.gamma**2
        if abs(total - 1.0) > NORM_TOL:
            raise NormalizationError(f"alpha^2 + beta^2 + gamma^2 = {total!r}, expected 1")

    @classmethod
    def from_squares(cls, alpha_sq: float, beta_sq: float, gamma_sq: float | None = None) -> WCoefficients:
        """Build from squared magnitudes; ``gamma_sq`` defaults to ``1 - alpha_sq - beta_sq``."""
        if gamma_sq is None:
            gamma_sq = 1.0 - alpha_sq - beta_sq
            if -NORM_TOL <= gamma_sq < 0.0:
                gamma_sq = 0.0
        for name, value in (("alpha_sq", alpha_sq), ("beta_sq", beta_sq), ("gamma_sq", gamma_sq)):
            if value < 0.0:
                raise ValueError(f"{name}={value!r} is negative")
        return cls(math.sqrt(alpha_sq), math.sqrt(beta_sq), math.sqrt(gamma_sq))

    @classmethod
    def from_unnormalized(cls, alpha: float, beta: float, gamma: float) -> WCoefficients:
        norm = math.sqrt(alpha * alpha + beta * beta + gamma * gamma)
        if norm == 0.0:
            raise DegenerateInputError("all coefficients vanish")
        return cls(abs(alpha) / norm, abs(beta) / norm, abs(gamma) / norm)

    @classmethod
    def random(cls, rng: np.random.Generator) -> WCoefficients:
        """Uniformly distributed on the positive octant of the unit sphere."""
        v = np.abs(rng.standard_normal(3))
        return cls.from_unnormalized(*v)

    @property
    def squares(self) -> tuple[float, float, float]:
        return self.alpha**2, self.beta**2, self.gamma**2

    def as_tuple(self) -> tuple[float, float, float]:
        return self.alpha, self.beta, self.gamma


SYMMETRIC = WCoefficients(1 / math.sqrt(3), 1 / math.sqrt(3), 1 / math.sqrt(3))


def make_w_state(coeffs: WCoefficients, modes: tuple[str, str, str] = ("a1", "b1", "c1")) -> QuantumState:
    """alpha|dud> + beta|udu> + gamma|uud> over the three given modes."""
    if len(modes) != 3 or len(set(modes)) != 3:
        raise ValueError(f"need three distinct modes, got {modes!r}")
    if not isinstance(coeffs, WCoefficients):
        raise TypeError("coeffs must be WCoefficients")
    m1, m2, m3 = modes
    up, down = Spin.UP, Spin.DOWN
    return QuantumState(
        [
            (((m1, down), (m2, up), (m3, up)), coeffs.alpha),
            (((m1, up), (m2, down), (m3, up)), coeffs.beta),
            (((m1, up), (m2, up), (m3, down)), coeffs.gamma),
        ]
    )


def make_single_electron(amps: tuple[complex, complex], mode: str) -> QuantumState:
    """amp_up|u> + amp_down|d> in ``mode``."""
    amp_up, amp_down = amps
    return QuantumState([(((mode, Spin.UP),), amp_up), (((mode, Spin.DOWN),), amp_down)])


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    """Product state; electrons of ``a`` come first."""
    shared = a.modes() & b.modes()
    if shared:
        raise ValueError(f"states share modes {sorted(shared)}")
    return QuantumState._from_terms(_accumulate((ca + cb, xa * xb) for ca, xa in a.items() for cb, xb in b.items()))


def branch_probability(state: QuantumState, predicate: Predicate) -> float:
    return math.fsum(abs(amp) ** 2 for config, amp in state.items() if predicate(config))


def project_and_normalize(state: QuantumState, predicate: Predicate) -> tuple[float, QuantumState]:
    """Keep configurations passing ``predicate``; return (probability, renormalized state)."""
    kept = [(config, amp) for config, amp in state.items() if predicate(config)]
    prob = math.fsum(abs(amp) ** 2 for _, amp in kept)
    if prob <= 0.0:
        raise EmptyBranchError("projection onto a zero-probability branch")
    scale = 1.0 / math.sqrt(prob)
    return prob, QuantumState._from_terms(_accumulate((config, amp * scale) for config, amp in kept))


def relabel(state: QuantumState, mapping: Mapping[str, str]) -> QuantumState:
    """Rename modes. Electron order is untouched."""
    return QuantumState._from_terms(
        _accumulate(
            (tuple((mapping.get(mode, mode), spin) for mode, spin in config), amp)
            for config, amp in state.items()
        )
    )


def w_amplitudes(state: QuantumState, modes: tuple[str, str, str]) -> tuple[complex, complex, complex]:
    """Amplitudes of |dud>, |udu>, |uud> on ``modes``, read by occupation.

    Raises:
        ValueError: the state has support outside those three configurations.
    """
    m1, m2, m3 = modes
    up, down = Spin.UP, Spin.DOWN
    wanted = [
        ((m1, down), (m2, up), (m3, up)),
        ((m1, up), (m2, down), (m3, up)),
        ((m1, up), (m2, up), (m3, down)),
    ]
    keys = [tuple(sorted(w, key=lambda e: (e[0], e[1].value))) for w in wanted]
    terms = state.by_occupation().terms
    extra = set(terms) - set(keys)
    if extra:
        raise ValueError(f"state is not a W state on {modes!r}")
    a, b, c = (terms.get(k, 0j) for k in keys)
    return a, b, c


def w_coefficients(state: QuantumState, modes: tuple[str, str, str]) -> WCoefficients:
    """Magnitudes of the W amplitudes of ``state`` on ``modes``."""
    a, b, c = w_amplitudes(state, modes)
    return WCoefficients.from_unnormalized(abs(a), abs(b), abs(c))
