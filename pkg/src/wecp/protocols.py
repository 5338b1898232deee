"""The two concentration protocols: closed forms and state-level runs.

ECP1 concentrates a W state in two steps, each made of an ancilla electron, a
spin beam splitter, a charge detector that keeps the "exactly one electron"
outcome, a Hadamard, a destructive spin detection and a conditional phase fix.

ECP2 replaces each beam splitter + charge detector with a complete parity
gate. The odd-parity outcome is no longer discarded: after the same
Hadamard/detection it leaves a new, still less-entangled W state that is fed
into the next round, so each step becomes a series of rounds.

Squared magnitudes are written ``a, b, g`` for alpha^2, beta^2, gamma^2.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

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
from wecp.errors import DegenerateInputError
from wecp.state import (
    PRUNE_TOL,
    QuantumState,
    Spin,
    WCoefficients,
    make_single_electron,
    make_w_state,
    relabel,
    tensor,
    w_coefficients,
)

W_MODES = ("a1", "b1", "c1")
STEP1_PBS = PbsPorts("a1", "a2", "d1", "d2")
STEP2_PBS = PbsPorts("c1", "c2", "e2", "e1")
# Raw powers |alpha|^(2^n) stop being safe long before this; beyond it the
# round probabilities are evaluated through the coefficient recursion.
DIRECT_ROUND_LIMIT = 40


@dataclass(frozen=True)
class StepProbabilities:
    p_step1: float
    p_step2: float
    p_total: float

    def __post_init__(self) -> None:
        for name in ("p_step1", "p_step2", "p_total"):
            value = getattr(self, name)
            if not (-1e-12 <= value <= 1.0 + 1e-12):
                raise ValueError(f"{name}={value!r} outside [0, 1]")
        if abs(self.p_total - self.p_step1 * self.p_step2) > 1e-12:
            raise ValueError("p_total must equal p_step1 * p_step2")


@dataclass(frozen=True)
class IterationSchedule:
    n_max: int = 3
    m_max: int = 3
    term_cutoff: float = 1e-12

    def __post_init__(self) -> None:
        if self.n_max < 1 or self.m_max < 1:
            raise ValueError("n_max and m_max must be at least 1")
        if self.term_cutoff < 0:
            raise ValueError("term_cutoff must be non-negative")


@dataclass
class ProtocolReport:
    """Outcome of a protocol run.

    ``coeff_trace`` holds the W coefficients produced by each step-1 failure
    round; ``coeff_trace_step2`` those of step 2, in (gamma, beta, beta) order.
    ``closed_form_delta`` is the largest disagreement seen between simulated
    quantities and the closed forms.
    """

    protocol: str
    coeffs: WCoefficients
    per_round_step1: list[float]
    per_round_step2: list[float]
    final_state: QuantumState | None
    coeff_trace: list[WCoefficients] = field(default_factory=list)
    coeff_trace_step2: list[WCoefficients] = field(default_factory=list)
    closed_form_delta: float = 0.0
    schedule: IterationSchedule | None = None

    @property
    def sum_step1(self) -> float:
        return math.fsum(self.per_round_step1)

    @property
    def sum_step2(self) -> float:
        return math.fsum(self.per_round_step2)

    @property
    def p_total(self) -> float:
        return self.sum_step1 * self.sum_step2

    @property
    def steps(self) -> StepProbabilities:
        return StepProbabilities(self.sum_step1, self.sum_step2, self.p_total)

    def to_record(self) -> dict[str, object]:
        """Flat field -> value mapping used by the CLI writers."""
        a, b, g = self.coeffs.squares
        sched = self.schedule or IterationSchedule(1, 1, 0.0)
        return {
            "protocol": self.protocol,
            "alpha_sq": a,
            "beta_sq": b,
            "gamma_sq": g,
            "n_max": sched.n_max,
            "m_max": sched.m_max,
            "per_round_step1": list(self.per_round_step1),
            "per_round_step2": list(self.per_round_step2),
            "sum_step1": self.sum_step1,
            "sum_step2": self.sum_step2,
            "p_total": self.p_total,
            "closed_form_delta": self.closed_form_delta,
            "coeff_trace": [list(c.as_tuple()) for c in self.coeff_trace],
            "coeff_trace_step2": [list(c.as_tuple()) for c in self.coeff_trace_step2],
            "final_state": self.final_state.render().splitlines() if self.final_state else [],
        }


# -- closed forms ------------------------------------------------------------


def ecp1_step1_prob(c: WCoefficients) -> float:
    a, b, g = c.squares
    if a + b == 0.0:
        raise DegenerateInputError("alpha = beta = 0: step-1 ancilla undefined")
    return a * (g + 2 * b) / (a + b)


def ecp1_step2_prob(c: WCoefficients) -> float:
    _, b, g = c.squares
    if b + g == 0.0:
        raise DegenerateInputError("beta = gamma = 0: step-2 ancilla undefined")
    return 3 * b * g / ((g + b) * (g + 2 * b))


def ecp1_total_prob(c: WCoefficients) -> float:
    a, b, g = c.squares
    if a + b == 0.0 or b + g == 0.0:
        raise DegenerateInputError("coefficients leave an ancilla undefined")
    return 3 * a * b * g / ((a + b) * (g + b))


def recoeff_step1_failure(c: WCoefficients) -> WCoefficients:
    """W coefficients left after an odd-parity step-1 round: (a^2, b^2, b*g) normalized."""
    al, be, ga = c.as_tuple()
    norm_sq = al**4 + be**4 + be**2 * ga**2
    if norm_sq == 0.0:
        raise DegenerateInputError("failure state has no amplitude")
    norm = math.sqrt(norm_sq)
    return WCoefficients(al * al / norm, be * be / norm, be * ga / norm)


def recoeff_step2_failure(c: WCoefficients) -> WCoefficients:
    """Step-2 analogue, with ``c`` read as (gamma, beta, beta).

    The failure state keeps that layout: (g^2, b^2, b^2) normalized.
    """
    ga, be, be2 = c.as_tuple()
    if abs(be - be2) > 1e-12:
        raise ValueError("step-2 coefficients must have the (gamma, beta, beta) form")
    norm_sq = ga**4 + 2 * be**4
    if norm_sq == 0.0:
        raise DegenerateInputError("failure state has no amplitude")
    norm = math.sqrt(norm_sq)
    return WCoefficients(ga * ga / norm, be * be / norm, be * be / norm)


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def _log_sum_powers(x: float, y: float, k: int) -> float:
    """log(x^(2^k) + y^(2^k))."""
    return float(np.logaddexp((2**k) * _log(x), (2**k) * _log(y)))


def p_step1_round(c: WCoefficients, n: int) -> float:
    """Unconditional probability that step 1 first succeeds in round ``n``.

    a^(2^(n-1)) (b^(2^(n-1)-1) g + 2 b^(2^(n-1))) / prod_{k<n} (a^(2^k) + b^(2^k))
    """
    if n < 1:
        raise ValueError("round index starts at 1")
    a, b, g = c.squares
    if a + b == 0.0:
        raise DegenerateInputError("alpha = beta = 0: step-1 ancilla undefined")
    if n > DIRECT_ROUND_LIMIT:
        return _step1_round_by_recursion(c, n)
    if a == 0.0:
        return 0.0
    half = 2 ** (n - 1)
    if b == 0.0:
        # only the n = 1 numerator survives: b^0 * g
        log_num = half * _log(a) + _log(g) if n == 1 else -math.inf
    else:
        log_num = half * _log(a) + (half - 1) * _log(b) + _log(g + 2 * b)
    log_den = math.fsum(_log_sum_powers(a, b, k) for k in range(n))
    return math.exp(log_num - log_den)


def p_step2_round(c: WCoefficients, m: int) -> float:
    """Probability that step 2 first succeeds in round ``m``, given step 1 succeeded.

    3 (b g)^(2^(m-1)) / ((g + 2b) prod_{k<m} (g^(2^k) + b^(2^k)))
    """
    if m < 1:
        raise ValueError("round index starts at 1")
    _, b, g = c.squares
    if b + g == 0.0:
        raise DegenerateInputError("beta = gamma = 0: step-2 ancilla undefined")
    if m > DIRECT_ROUND_LIMIT:
        return _step2_round_by_recursion(c, m)
    if b == 0.0 or g == 0.0:
        return 0.0
    half = 2 ** (m - 1)
    log_num = math.log(3.0) + half * (_log(b) + _log(g))
    log_den = _log(g + 2 * b) + math.fsum(_log_sum_powers(g, b, k) for k in range(m))
    return math.exp(log_num - log_den)


def _step1_round_by_recursion(c: WCoefficients, n: int) -> float:
    reach = 1.0
    for _ in range(n - 1):
        odd = 1.0 - ecp1_step1_prob(c)
        reach *= odd
        if reach == 0.0:
            return 0.0
        c = recoeff_step1_failure(c)
    return reach * ecp1_step1_prob(c)


def _step2_success(b: float, g: float) -> float:
    # homogeneous of degree zero, so (b, g) need not be normalized
    return 3 * b * g / ((g + b) * (g + 2 * b))


def _step2_round_by_recursion(c: WCoefficients, m: int) -> float:
    _, be, ga = c.as_tuple()
    cur = WCoefficients.from_unnormalized(ga, be, be)
    reach = 1.0
    for _ in range(m - 1):
        ga_k, be_k = cur.alpha, cur.beta
        reach *= 1.0 - _step2_success(be_k**2, ga_k**2)
        if reach == 0.0:
            return 0.0
        cur = recoeff_step2_failure(cur)
    return reach * _step2_success(cur.beta**2, cur.alpha**2)


def round_series(c: WCoefficients, sched: IterationSchedule) -> tuple[list[float], list[float]]:
    """Closed-form round probabilities for both steps, truncated per ``sched``.

    Degenerate coefficients give empty series.
    """
    step1: list[float] = []
    step2: list[float] = []
    try:
        for n in range(1, sched.n_max + 1):
            p = p_step1_round(c, n)
            if p < sched.term_cutoff:
                break
            step1.append(p)
    except DegenerateInputError:
        step1 = []
    if not step1:
        return step1, step2
    try:
        for m in range(1, sched.m_max + 1):
            p = p_step2_round(c, m)
            if p < sched.term_cutoff:
                break
            step2.append(p)
    except DegenerateInputError:
        step2 = []
    return step1, step2


def ecp2_total_prob(c: WCoefficients, sched: IterationSchedule | None = None) -> float:
    step1, step2 = round_series(c, sched or IterationSchedule())
    return math.fsum(step1) * math.fsum(step2)


# -- state-level simulation ----------------------------------------------------


def step1_ancilla(c: WCoefficients, mode: str = "a2") -> QuantumState:
    al, be, _ = c.as_tuple()
    norm = math.hypot(al, be)
    if norm == 0.0:
        raise DegenerateInputError("alpha = beta = 0: step-1 ancilla undefined")
    return make_single_electron((al / norm, be / norm), mode)


def step2_ancilla(gamma: float, beta: float, mode: str = "c2") -> QuantumState:
    norm = math.hypot(gamma, beta)
    if norm == 0.0:
        raise DegenerateInputError("beta = gamma = 0: step-2 ancilla undefined")
    return make_single_electron((gamma / norm, beta / norm), mode)


def erase_and_correct(state: QuantumState, measured: str, partner: str) -> list[tuple[float, QuantumState]]:
    """Hadamard and detect ``measured``; undo the sign of a down result on ``partner``."""
    out = []
    for branch in measure_spin(hadamard(state, measured), measured):
        post = branch.post_state
        if branch.label is Spin.DOWN:
            post = phase_correct(post, partner)
        out.append((branch.probability, post))
    return out


def _branch(branches, label):
    for b in branches:
        if b.label is label:
            return b
    return None


def _max_state_delta(states: list[QuantumState]) -> float:
    """Largest amplitude gap between states after aligning global phase."""
    ref = states[0].by_occupation().terms
    worst = 0.0
    for s in states[1:]:
        terms = s.by_occupation().terms
        overlap = sum((ref[k].conjugate() * v for k, v in terms.items() if k in ref), 0j)
        phase = overlap / abs(overlap) if overlap else 1.0
        for k in set(ref) | set(terms):
            worst = max(worst, abs(phase * ref.get(k, 0j) - terms.get(k, 0j)))
    return worst


def _canonical_phase(state: QuantumState) -> QuantumState:
    """Occupation form with the global phase chosen so the largest amplitude is real positive."""
    occ = state.by_occupation()
    lead = max(occ.terms.values(), key=abs)
    phase = abs(lead) / lead
    return QuantumState._from_terms({k: v * phase for k, v in occ.terms.items()})


def ecp1_run(c: WCoefficients) -> ProtocolReport:
    """Simulate ECP1 on explicit states and compare with the closed forms."""
    closed1 = ecp1_step1_prob(c)
    closed2 = ecp1_step2_prob(c)
    delta = 0.0

    joint = pbs(tensor(make_w_state(c, W_MODES), step1_ancilla(c)), STEP1_PBS)
    hit = _branch(charge_detect(joint, STEP1_PBS.out_1), ChargeOutcome.EXACTLY_ONE)
    p1 = hit.probability if hit else 0.0
    delta = max(delta, abs(p1 - closed1))
    if hit is None:
        return ProtocolReport("ecp1", c, [p1], [], None, closed_form_delta=delta)

    outcomes = erase_and_correct(hit.post_state, STEP1_PBS.out_2, STEP1_PBS.out_1)
    delta = max(delta, _max_state_delta([s for _, s in outcomes]))
    phi1 = outcomes[0][1]

    _, be, ga = c.as_tuple()
    joint = pbs(tensor(phi1, step2_ancilla(ga, be)), STEP2_PBS)
    hit = _branch(charge_detect(joint, STEP2_PBS.out_1), ChargeOutcome.EXACTLY_ONE)
    p2 = hit.probability if hit else 0.0
    delta = max(delta, abs(p2 - closed2))
    final = None
    if hit is not None:
        outcomes = erase_and_correct(hit.post_state, STEP2_PBS.out_1, STEP2_PBS.out_2)
        delta = max(delta, _max_state_delta([s for _, s in outcomes]))
        final = _canonical_phase(outcomes[0][1])
    report = ProtocolReport("ecp1", c, [p1], [p2], final)
    report.closed_form_delta = max(delta, abs(report.p_total - ecp1_total_prob(c)))
    return report


@dataclass(frozen=True)
class RoundResult:
    """One parity-gate round of ECP2.

    ``probability`` is unconditional within the step. ``coeffs`` are the
    coefficients the ancilla was prepared from; ``drift`` is how far they are
    from the coefficients actually present in the state.
    """

    round: int
    probability: float
    success_state: QuantumState | None
    coeffs: WCoefficients
    drift: float


def step1_rounds(c: WCoefficients, n_max: int) -> Iterator[RoundResult]:
    """Run step-1 rounds with the parity gate, following the odd branch between rounds."""
    state = make_w_state(c, W_MODES)
    predicted = c
    reach = 1.0
    for n in range(1, n_max + 1):
        actual = w_coefficients(state, W_MODES)
        drift = max(abs(x - y) for x, y in zip(actual.as_tuple(), predicted.as_tuple()))
        try:
            ancilla = step1_ancilla(predicted)
        except DegenerateInputError:
            return
        branches = parity_gate(tensor(state, ancilla), "a1", "a2", "d1", "d2")
        even = _branch(branches, ParityOutcome.EVEN)
        odd = _branch(branches, ParityOutcome.ODD)
        success = None
        if even is not None:
            success = erase_and_correct(even.post_state, "d2", "d1")[0][1]
        yield RoundResult(n, reach * (even.probability if even else 0.0), success, predicted, drift)
        if odd is None or n == n_max:
            return
        reach *= odd.probability
        state = relabel(erase_and_correct(odd.post_state, "d2", "d1")[0][1], {"d1": "a1"})
        predicted = recoeff_step1_failure(predicted)


def step2_rounds(c: WCoefficients, start: QuantumState, m_max: int) -> Iterator[RoundResult]:
    """Step-2 rounds starting from a step-1 success state on (d1, b1, c1).

    Coefficients are tracked in (gamma, beta, beta) order.
    """
    modes = ("d1", "b1", "c1")
    _, be, ga = c.as_tuple()
    state = start
    predicted = WCoefficients.from_unnormalized(ga, be, be)
    reach = 1.0
    for m in range(1, m_max + 1):
        x_d1, x_b1, x_c1 = w_coefficients(state, modes).as_tuple()
        drift = max(abs(x_c1 - predicted.alpha), abs(x_d1 - predicted.beta), abs(x_b1 - predicted.gamma))
        try:
            ancilla = step2_ancilla(predicted.alpha, predicted.beta)
        except DegenerateInputError:
            return
        branches = parity_gate(tensor(state, ancilla), "c1", "c2", "e1", "e2")
        even = _branch(branches, ParityOutcome.EVEN)
        odd = _branch(branches, ParityOutcome.ODD)
        success = None
        if even is not None:
            success = erase_and_correct(even.post_state, "e2", "e1")[0][1]
        yield RoundResult(m, reach * (even.probability if even else 0.0), success, predicted, drift)
        if odd is None or m == m_max:
            return
        reach *= odd.probability
        state = relabel(erase_and_correct(odd.post_state, "e2", "e1")[0][1], {"e1": "c1"})
        predicted = recoeff_step2_failure(predicted)


def ecp2_run(c: WCoefficients, sched: IterationSchedule | None = None) -> ProtocolReport:
    """Simulate ECP2 round by round.

    Rounds stop at the schedule limits or at the first round whose
    probability drops below ``sched.term_cutoff``. Degenerate coefficients
    produce an all-zero report. Success-state shapes enter
    ``closed_form_delta`` only for rounds with probability of at least
    ``PRUNE_TOL``.
    """
    sched = sched or IterationSchedule()
    report = ProtocolReport("ecp2", c, [], [], None, schedule=sched)
    delta = 0.0

    start = None
    for r in step1_rounds(c, sched.n_max):
        if r.probability < sched.term_cutoff:
            break
        report.per_round_step1.append(r.probability)
        if r.round > 1:
            report.coeff_trace.append(r.coeffs)
        delta = max(delta, r.drift, abs(r.probability - p_step1_round(c, r.round)))
        if r.success_state is not None:
            if start is None:
                start = r.success_state
            elif r.probability >= PRUNE_TOL:
                # deeper rounds carry amplitudes below the prune threshold, so
                # their success states are not resolved well enough to compare
                delta = max(delta, _max_state_delta([start, r.success_state]))
    if start is None:
        report.closed_form_delta = delta
        return report

    for r in step2_rounds(c, start, sched.m_max):
        if r.probability < sched.term_cutoff:
            break
        report.per_round_step2.append(r.probability)
        if r.round > 1:
            report.coeff_trace_step2.append(r.coeffs)
        delta = max(delta, r.drift, abs(r.probability - p_step2_round(c, r.round)))
        if r.success_state is not None and report.final_state is None:
            report.final_state = _canonical_phase(r.success_state)
    report.closed_form_delta = delta
    return report
