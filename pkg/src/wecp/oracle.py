"""Brute-force outcome trees for both protocols.

The tree builders use only the state and element primitives. Ancilla
electrons are prepared from the amplitudes actually present in the current
state, never from a formula, so the masses collected here are an independent
check on every closed form in :mod:`wecp.protocols`.

Every measurement becomes a node whose children are its outcomes. Leaves are
marked ``success`` (the maximally entangled W state was reached) or
``failure`` (a discarded branch, or the last round failed).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from types import SimpleNamespace

from wecp import protocols
from wecp.elements import (
    ChargeOutcome,
    ParityOutcome,
    PbsPorts,
    charge_detect,
    hadamard,
    measure_spin,
    parity_gate,
    pbs,
    phase_correct,
)
from wecp.protocols import IterationSchedule
from wecp.state import (
    QuantumState,
    Spin,
    WCoefficients,
    allclose,
    make_single_electron,
    make_w_state,
    relabel,
    tensor,
    w_amplitudes,
)

PRUNE_PROB = 1e-15
CROSSCHECK_TOL = 1e-10

CONTINUE = "continue"
SUCCESS = "success"
FAILURE = "failure"


@dataclass
class OutcomeNode:
    path: tuple[str, ...]
    probability: float
    state: QuantumState | None
    status: str = CONTINUE
    step: int = 0
    round: int = 0
    children: list[OutcomeNode] = field(default_factory=list)
    branch_probabilities: list[float] = field(default_factory=list)
    pruned_mass: float = 0.0

    @property
    def terminal(self) -> bool:
        return self.status != CONTINUE

    @property
    def label(self) -> str:
        return self.path[-1] if self.path else "root"

    def walk(self) -> Iterator[OutcomeNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> Iterator[OutcomeNode]:
        """Nodes where no measurement took place."""
        return (n for n in self.walk() if not n.branch_probabilities)

    def success_mass(self) -> float:
        return math.fsum(n.probability for n in self.leaves() if n.status == SUCCESS)

    def total_pruned(self) -> float:
        return math.fsum(n.pruned_mass for n in self.walk())

    def mass_where(self, predicate: Callable[[OutcomeNode], bool]) -> float:
        return math.fsum(n.probability for n in self.walk() if predicate(n))

    def dump(self) -> str:
        """Indented text form: one node per line with its unconditional probability."""
        lines = []

        def visit(node: OutcomeNode, depth: int) -> None:
            status = f" [{node.status}]" if node.terminal else ""
            lines.append(f"{'  ' * depth}{node.label} {node.probability:.14e}{status}")
            for child in node.children:
                visit(child, depth + 1)

        visit(self, 0)
        return "\n".join(lines)


def _expand(node: OutcomeNode, branches, tag: str) -> list[OutcomeNode]:
    """Attach one child per measurement branch; tiny branches are pruned."""
    kids = []
    for b in branches:
        node.branch_probabilities.append(b.probability)
        prob = node.probability * b.probability
        if prob < PRUNE_PROB:
            node.pruned_mass += prob
            continue
        label = b.label.value if hasattr(b.label, "value") else str(b.label)
        kid = OutcomeNode(node.path + (f"{tag}={label}",), prob, b.post_state, step=node.step, round=node.round)
        kids.append(kid)
    node.children.extend(kids)
    return kids


def _detect(node: OutcomeNode, measured: str, partner: str, tag: str) -> list[OutcomeNode]:
    """Hadamard + spin detection of ``measured``; a down result is fixed on ``partner``."""
    kids = _expand(node, measure_spin(hadamard(node.state, measured), measured), tag)
    for kid in kids:
        if kid.path[-1].endswith("=" + Spin.DOWN.value):
            kid.state = phase_correct(kid.state, partner)
    return kids


def _ancilla_from_state(state: QuantumState, modes, first: int, second: int, mode: str) -> QuantumState | None:
    """Single electron with up/down amplitudes proportional to two W amplitudes of ``state``."""
    amps = [abs(x) for x in w_amplitudes(state, modes)]
    up, down = amps[first], amps[second]
    norm = math.hypot(up, down)
    if norm == 0.0:
        return None
    return make_single_electron((up / norm, down / norm), mode)


def _step1_ancilla(state: QuantumState) -> QuantumState | None:
    # up amplitude from the |d>_a1 term, down amplitude from the |d>_b1 term
    return _ancilla_from_state(state, ("a1", "b1", "c1"), 0, 1, "a2")


def _step2_ancilla(state: QuantumState) -> QuantumState | None:
    # up amplitude from the |d>_c1 term, down amplitude from the |d>_b1 term
    return _ancilla_from_state(state, ("d1", "b1", "c1"), 2, 1, "c2")


def _fail(node: OutcomeNode) -> None:
    node.status = FAILURE


def _ecp1_tree(c: WCoefficients) -> OutcomeNode:
    root = OutcomeNode((), 1.0, make_w_state(c, ("a1", "b1", "c1")), step=1, round=1)
    anc = _step1_ancilla(root.state)
    if anc is None:
        _fail(root)
        return root
    ports1 = PbsPorts("a1", "a2", "d1", "d2")
    joint = pbs(tensor(root.state, anc), ports1)
    for c1 in _expand(root, charge_detect(joint, ports1.out_1), "C1"):
        if c1.path[-1] != "C1=" + ChargeOutcome.EXACTLY_ONE.value:
            _fail(c1)
            continue
        for d1 in _detect(c1, ports1.out_2, ports1.out_1, "D1"):
            d1.step = 2
            anc2 = _step2_ancilla(d1.state)
            if anc2 is None:
                _fail(d1)
                continue
            ports2 = PbsPorts("c1", "c2", "e2", "e1")
            joint2 = pbs(tensor(d1.state, anc2), ports2)
            for c2 in _expand(d1, charge_detect(joint2, ports2.out_1), "C2"):
                if c2.path[-1] != "C2=" + ChargeOutcome.EXACTLY_ONE.value:
                    _fail(c2)
                    continue
                for d2 in _detect(c2, ports2.out_1, ports2.out_2, "D2"):
                    d2.status = SUCCESS
    return root


def _ecp2_step2(node: OutcomeNode, m: int, m_max: int) -> None:
    node.step, node.round = 2, m
    anc = _step2_ancilla(node.state)
    if anc is None:
        _fail(node)
        return
    joint = tensor(node.state, anc)
    for p in _expand(node, parity_gate(joint, "c1", "c2", "e1", "e2"), f"P2[{m}]"):
        if p.path[-1].endswith("=" + ParityOutcome.EVEN.value):
            for d in _detect(p, "e2", "e1", f"D2[{m}]"):
                d.status = SUCCESS
        elif m == m_max:
            _fail(p)
        else:
            for d in _detect(p, "e2", "e1", f"D2[{m}]"):
                d.state = relabel(d.state, {"e1": "c1"})
                _ecp2_step2(d, m + 1, m_max)


def _ecp2_step1(node: OutcomeNode, n: int, sched: IterationSchedule) -> None:
    node.step, node.round = 1, n
    anc = _step1_ancilla(node.state)
    if anc is None:
        _fail(node)
        return
    joint = tensor(node.state, anc)
    for p in _expand(node, parity_gate(joint, "a1", "a2", "d1", "d2"), f"P1[{n}]"):
        if p.path[-1].endswith("=" + ParityOutcome.EVEN.value):
            for d in _detect(p, "d2", "d1", f"D1[{n}]"):
                _ecp2_step2(d, 1, sched.m_max)
        elif n == sched.n_max:
            _fail(p)
        else:
            for d in _detect(p, "d2", "d1", f"D1[{n}]"):
                d.state = relabel(d.state, {"d1": "a1"})
                _ecp2_step1(d, n + 1, sched)


def enumerate_tree(c: WCoefficients, protocol: str, sched: IterationSchedule | None = None) -> OutcomeNode:
    """Full outcome tree of ``protocol`` ("ecp1" or "ecp2") starting from W(c)."""
    if protocol == "ecp1":
        return _ecp1_tree(c)
    if protocol == "ecp2":
        sched = sched or IterationSchedule()
        root = OutcomeNode((), 1.0, make_w_state(c, ("a1", "b1", "c1")))
        _ecp2_step1(root, 1, sched)
        return root
    raise ValueError(f"unknown protocol {protocol!r}")


TARGET_W = make_w_state(WCoefficients(*(3 * (1 / math.sqrt(3),))), ("d1", "b1", "e1"))


@dataclass(frozen=True)
class SuccessCheck:
    ok: bool
    n_success_leaves: int

    @property
    def vacuous(self) -> bool:
        return self.n_success_leaves == 0

    def __bool__(self) -> bool:
        return self.ok


def success_state_check(root: OutcomeNode, atol: float = 1e-10) -> SuccessCheck:
    """Every success leaf holds the equal-weight W state on (d1, b1, e1), up to global phase.

    Trees with no success leaf pass vacuously; ``vacuous`` flags that case.
    """
    leaves = [n for n in root.leaves() if n.status == SUCCESS]
    ok = all(allclose(n.state, TARGET_W, atol=atol, up_to_phase=True) for n in leaves)
    return SuccessCheck(ok, len(leaves))


def conservation_error(root: OutcomeNode) -> float:
    """Worst violation, over all measurement nodes, of branch completeness.

    Both the conditional branch probabilities (must sum to 1) and the
    unconditional child masses plus pruned mass (must sum to the parent's)
    are checked.
    """
    worst = abs(root.probability - 1.0)
    for node in root.walk():
        if not node.branch_probabilities:
            continue
        worst = max(worst, abs(math.fsum(node.branch_probabilities) - 1.0))
        child_mass = math.fsum(k.probability for k in node.children) + node.pruned_mass
        worst = max(worst, abs(child_mass - node.probability))
    worst = max(worst, abs(math.fsum(n.probability for n in root.leaves()) + root.total_pruned() - 1.0))
    return worst


def _is(label_prefix: str, outcome: str) -> Callable[[OutcomeNode], bool]:
    return lambda n: bool(n.path) and n.path[-1].startswith(label_prefix) and n.path[-1].endswith("=" + outcome)


def round_masses(root: OutcomeNode, sched: IterationSchedule) -> tuple[list[float], list[float]]:
    """Per-round success masses of an ECP2 tree.

    Step-1 values are unconditional; step-2 values are conditioned on step 1
    having succeeded.
    """
    even = ParityOutcome.EVEN.value
    step1 = [root.mass_where(_is(f"P1[{n}]", even)) for n in range(1, sched.n_max + 1)]
    total1 = math.fsum(step1)
    if total1 == 0.0:
        return step1, []
    step2 = [root.mass_where(_is(f"P2[{m}]", even)) / total1 for m in range(1, sched.m_max + 1)]
    return step1, step2


@dataclass
class CrossCheckReport:
    deltas: dict[str, float]
    conservation: float
    success_states_ok: bool
    tolerance: float = CROSSCHECK_TOL

    @property
    def max_abs_delta(self) -> float:
        return max(self.deltas.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_delta <= self.tolerance and self.success_states_ok

    def __str__(self) -> str:
        lines = [f"{'PASS' if self.passed else 'FAIL'} max|delta|={self.max_abs_delta:.3e}"]
        lines += [f"  {k}: {v:.3e}" for k, v in self.deltas.items()]
        return "\n".join(lines)


CLOSED_FORMS = SimpleNamespace(
    ecp1_step1_prob=protocols.ecp1_step1_prob,
    ecp1_step2_prob=protocols.ecp1_step2_prob,
    ecp1_total_prob=protocols.ecp1_total_prob,
    p_step1_round=protocols.p_step1_round,
    p_step2_round=protocols.p_step2_round,
)


def crosscheck(
    c: WCoefficients,
    sched: IterationSchedule | None = None,
    closed_forms: SimpleNamespace | None = None,
) -> CrossCheckReport:
    """Compare tree masses of both protocols with the closed forms.

    ``closed_forms`` defaults to the functions in :mod:`wecp.protocols`; any
    namespace with the same attribute names can be substituted.
    """
    sched = sched or IterationSchedule()
    cf = closed_forms or CLOSED_FORMS
    deltas: dict[str, float] = {}

    t1 = enumerate_tree(c, "ecp1")
    ok = bool(success_state_check(t1))
    conservation = conservation_error(t1)
    m1 = t1.mass_where(_is("C1", ChargeOutcome.EXACTLY_ONE.value))
    deltas["ecp1.p_step1"] = abs(m1 - cf.ecp1_step1_prob(c))
    if m1 > 0.0:
        m2 = t1.mass_where(_is("C2", ChargeOutcome.EXACTLY_ONE.value)) / m1
        deltas["ecp1.p_step2"] = abs(m2 - cf.ecp1_step2_prob(c))
    deltas["ecp1.p_total"] = abs(t1.success_mass() - cf.ecp1_total_prob(c))

    t2 = enumerate_tree(c, "ecp2", sched)
    ok = ok and bool(success_state_check(t2))
    conservation = max(conservation, conservation_error(t2))
    step1, step2 = round_masses(t2, sched)
    closed1 = [cf.p_step1_round(c, n) for n in range(1, sched.n_max + 1)]
    for n, (mass, closed) in enumerate(zip(step1, closed1), start=1):
        deltas[f"ecp2.P1[{n}]"] = abs(mass - closed)
    closed2 = [cf.p_step2_round(c, m) for m in range(1, sched.m_max + 1)]
    for m, (mass, closed) in enumerate(zip(step2, closed2), start=1):
        deltas[f"ecp2.P2[{m}]"] = abs(mass - closed)
    deltas["ecp2.p_total"] = abs(t2.success_mass() - math.fsum(closed1) * math.fsum(closed2))
    deltas["conservation"] = conservation
    return CrossCheckReport(deltas, conservation, ok)
