import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import states
from wecp.elements import (
    ChargeOutcome,
    ParityOutcome,
    PbsPorts,
    charge_detect,
    count_charges,
    hadamard,
    measure_spin,
    parity_gate,
    pbs,
    phase_correct,
)
from wecp.state import (
    QuantumState,
    Spin,
    WCoefficients,
    allclose,
    make_single_electron,
    make_w_state,
    tensor,
)

U, D = Spin.UP, Spin.DOWN
PORTS = PbsPorts("a1", "a2", "d1", "d2")
S3 = 1 / math.sqrt(3)


def ket(*pairs):
    return tuple(pairs)


def modes_of(state):
    return [sorted(m for m, _ in config) for config in state]


def combined_state(squares):
    """W state plus the first ancilla, before the beam splitter."""
    c = WCoefficients.from_squares(*squares)
    al, be, _ = c.as_tuple()
    n = math.hypot(al, be)
    return c, tensor(make_w_state(c), make_single_electron((al / n, be / n), "a2"))


def collapsed_state(c):
    """Normalized one-electron-at-detector state, expanded by hand."""
    _, be, ga = c.as_tuple()
    k = math.sqrt(ga**2 + 2 * be**2)
    return QuantumState(
        {
            ket(("d1", U), ("d2", U), ("b1", U), ("c1", D)): ga / k,
            ket(("d1", D), ("d2", D), ("b1", U), ("c1", U)): be / k,
            ket(("d1", U), ("d2", U), ("b1", D), ("c1", U)): be / k,
        }
    )


def three_party(c, sign=1.0, mode="c1"):
    """gamma|uud> + sign*beta|duu> + beta|udu> on (d1, b1, mode), normalized by sqrt(g^2 + 2b^2)."""
    _, be, ga = c.as_tuple()
    k = math.sqrt(ga**2 + 2 * be**2)
    return QuantumState(
        {
            ket(("d1", U), ("b1", U), (mode, D)): ga / k,
            ket(("d1", D), ("b1", U), (mode, U)): sign * be / k,
            ket(("d1", U), ("b1", D), (mode, U)): be / k,
        }
    )


def symmetric_final(sign=1.0):
    return QuantumState(
        {
            ket(("d1", U), ("b1", U), ("e1", D)): sign * S3,
            ket(("d1", D), ("b1", U), ("e1", U)): S3,
            ket(("d1", U), ("b1", D), ("e1", U)): S3,
        }
    )


# --- beam splitter -----------------------------------------------------------


def test_pbs_ports_must_differ():
    with pytest.raises(ValueError):
        PbsPorts("a1", "a2", "a1", "d2")


def test_pbs_transmits_up():
    out = pbs(QuantumState({ket(("a1", U)): 1}), PORTS)
    assert list(out) == [ket(("d1", U))]


def test_pbs_odd_pair_bunches_at_detector_arm():
    out = pbs(QuantumState({ket(("a1", U), ("a2", D)): 1}), PORTS)
    assert modes_of(out) == [["d1", "d1"]]


def test_pbs_even_pair_splits_one_per_arm():
    for s in (U, D):
        out = pbs(QuantumState({ket(("a1", s), ("a2", s)): 1}), PORTS)
        assert modes_of(out) == [["d1", "d2"]]


def test_pbs_leaves_other_modes_and_amplitudes_alone():
    _, joint = combined_state((0.2, 0.3, 0.5))
    out = pbs(joint, PORTS)
    assert sorted(abs(a) for a in out.terms.values()) == sorted(abs(a) for a in joint.terms.values())
    assert all({"b1", "c1"} <= {m for m, _ in config} for config in out)


# --- charge detection ----------------------------------------------------------


def test_charge_detect_single_electron():
    s = QuantumState({ket(("d1", U)): 1})
    [branch] = charge_detect(s, {"d1"})
    assert branch.label is ChargeOutcome.EXACTLY_ONE
    assert branch.probability == 1.0
    assert allclose(branch.post_state, s)


def test_charge_detect_two_electrons_is_lumped_with_zero():
    s = QuantumState({ket(("d1", U), ("d1", D)): 1})
    [branch] = charge_detect(s, "d1")
    assert branch.label is ChargeOutcome.ZERO_OR_TWO
    assert branch.probability == 1.0


def test_exact_count_diagnostic_separates_zero_and_two():
    s = pbs(QuantumState({ket(("a1", U), ("a2", D)): 0.6, ket(("a1", D), ("a2", U)): 0.8}), PORTS)
    branches = count_charges(s, "d1")
    assert [b.label for b in branches] == [0, 2]
    assert [b.probability for b in branches] == pytest.approx([0.64, 0.36])
    assert [b.label for b in charge_detect(s, "d1")] == [ChargeOutcome.ZERO_OR_TWO]


@pytest.mark.parametrize("squares", [(0.5, 1 / 3, 1 / 6), (0.2, 0.3, 0.5), (1 / 3, 1 / 3, 1 / 3)])
def test_detector_one_electron_branch_matches_hand_expansion(squares):
    c, joint = combined_state(squares)
    a, b, g = c.squares
    branches = {br.label: br for br in charge_detect(pbs(joint, PORTS), {"d1"})}
    one = branches[ChargeOutcome.EXACTLY_ONE]
    assert one.probability == pytest.approx(a * (g + 2 * b) / (a + b), abs=1e-15)
    assert allclose(one.post_state, collapsed_state(c), atol=1e-14)
    assert math.fsum(br.probability for br in branches.values()) == pytest.approx(1.0, abs=1e-12)


def test_charge_detection_keeps_electrons():
    _, joint = combined_state((0.5, 1 / 3, 1 / 6))
    for branch in charge_detect(pbs(joint, PORTS), "d1"):
        assert branch.post_state.n_electrons == 4


# --- parity gate -----------------------------------------------------------------


def test_parity_even_and_odd_basis_inputs():
    [even] = parity_gate(QuantumState({ket(("a", U), ("b", U)): 1}), "a", "b")
    assert even.label is ParityOutcome.EVEN and even.probability == 1.0
    assert list(even.post_state) == [ket(("a'", U), ("b'", U))]

    [odd] = parity_gate(QuantumState({ket(("a", U), ("b", D)): 1}), "a", "b")
    assert odd.label is ParityOutcome.ODD and odd.probability == 1.0
    assert list(odd.post_state) == [ket(("a'", U), ("b'", D))]


def test_parity_requires_one_electron_per_mode():
    with pytest.raises(ValueError):
        parity_gate(QuantumState({ket(("a", U), ("a", D)): 1}), "a", "b")


def _product(rng):
    def qubit():
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return v / np.linalg.norm(v)

    (a1, b1), (a2, b2) = qubit(), qubit()
    return (a1, b1, a2, b2)


def test_parity_probabilities_on_product_states(rng):
    for _ in range(20):
        a1, b1, a2, b2 = _product(rng)
        s = tensor(make_single_electron((a1, b1), "a"), make_single_electron((a2, b2), "b"))
        probs = {br.label: br.probability for br in parity_gate(s, "a", "b")}
        assert probs[ParityOutcome.EVEN] == pytest.approx(abs(a1 * a2) ** 2 + abs(b1 * b2) ** 2, abs=1e-12)
        assert probs[ParityOutcome.ODD] == pytest.approx(abs(a1 * b2) ** 2 + abs(b1 * a2) ** 2, abs=1e-12)


def test_parity_even_equals_pbs_plus_single_charge(rng):
    for _ in range(20):
        a1, b1, a2, b2 = _product(rng)
        s = tensor(make_single_electron((a1, b1), "a1"), make_single_electron((a2, b2), "a2"))
        even = next(br for br in parity_gate(s, "a1", "a2") if br.label is ParityOutcome.EVEN)
        one = next(br for br in charge_detect(pbs(s, PORTS), "d1") if br.label is ChargeOutcome.EXACTLY_ONE)
        assert even.probability == pytest.approx(one.probability, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(states(modes=("a", "b", "m"), max_electrons=3).filter(lambda s: s.n_electrons >= 2))
def test_parity_posts_are_projections(s):
    branches = parity_gate(s, "a", "b", "a", "b")
    assert math.fsum(br.probability for br in branches) == pytest.approx(1.0, abs=1e-12)
    for br in branches:
        assert br.post_state.norm_squared() == pytest.approx(1.0, abs=1e-12)
        scale = math.sqrt(br.probability)
        for config, amp in br.post_state.items():
            assert amp * scale == pytest.approx(s.amplitude(config), abs=1e-12)


# --- hadamard, phase, spin measurement ---------------------------------------------------


def test_hadamard_on_up():
    out = hadamard(QuantumState({ket(("m", U)): 1}), "m")
    r = 1 / math.sqrt(2)
    assert dict(out.terms) == pytest.approx({ket(("m", U)): r, ket(("m", D)): r}, abs=1e-15)


def test_hadamard_on_collapsed_state_splits_evenly():
    out = hadamard(collapsed_state(WCoefficients.from_squares(0.2, 0.3, 0.5)), "d2")
    up = math.fsum(abs(a) ** 2 for c, a in out.items() if dict(c)["d2"] is U)
    assert up == pytest.approx(0.5, abs=1e-14)


def test_hadamard_errors_on_missing_mode():
    with pytest.raises(ValueError):
        hadamard(QuantumState({ket(("m", U)): 1}), "x")


@pytest.mark.parametrize("squares", [(0.5, 1 / 3, 1 / 6), (0.2, 0.3, 0.5)])
def test_measuring_erased_ancilla_gives_both_sign_branches(squares):
    c = WCoefficients.from_squares(*squares)
    branches = {br.label: br for br in measure_spin(hadamard(collapsed_state(c), "d2"), "d2")}
    assert branches[U].probability == pytest.approx(0.5, abs=1e-14)
    assert branches[D].probability == pytest.approx(0.5, abs=1e-14)
    assert allclose(branches[U].post_state, three_party(c, +1), atol=1e-14)
    assert allclose(branches[D].post_state, three_party(c, -1), atol=1e-14)
    assert branches[U].post_state.n_electrons == 3


def test_measure_spin_removes_electron():
    s = tensor(QuantumState({ket(("m", U)): 1}), make_w_state(WCoefficients(S3, S3, S3)))
    [branch] = measure_spin(s, "m")
    assert branch.label is U
    assert branch.probability == pytest.approx(1.0, abs=1e-15)
    assert allclose(branch.post_state, make_w_state(WCoefficients(S3, S3, S3)))


def test_measure_spin_last_electron_leaves_vacuum():
    r = 1 / math.sqrt(2)
    branches = measure_spin(QuantumState({ket(("m", U)): r, ket(("m", D)): r}), "m")
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])
    assert all(b.post_state is None for b in branches)


def test_phase_correct_on_minus_branch_restores_plus_branch():
    c = WCoefficients.from_squares(0.5, 1 / 3, 1 / 6)
    assert allclose(phase_correct(three_party(c, -1), "d1"), three_party(c, +1), atol=1e-12)


def test_phase_correct_on_final_minus_branch():
    fixed = phase_correct(symmetric_final(-1), "e1")
    assert allclose(fixed, symmetric_final(+1), atol=1e-12, up_to_phase=True)
    # the correction is in fact exact, not just up to a global sign
    assert allclose(fixed, symmetric_final(+1), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(states(), st.sampled_from(["m1"]))
def test_involutions_are_exact(s, mode):
    assert hadamard(hadamard(s, mode), mode).terms.keys() == s.terms.keys()
    assert allclose(hadamard(hadamard(s, mode), mode), s, atol=1e-15)
    twice = phase_correct(phase_correct(s, mode), mode)
    assert dict(twice.terms) == dict(s.terms)


@settings(max_examples=60, deadline=None)
@given(states(modes=("a1", "a2", "m")).filter(lambda s: s.n_electrons >= 2))
def test_unitaries_preserve_norm(s):
    assert pbs(s, PORTS).norm_squared() == pytest.approx(1.0, abs=1e-12)
    assert hadamard(s, "a1").norm_squared() == pytest.approx(1.0, abs=1e-12)
    assert phase_correct(s, "a2").norm_squared() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(states(modes=("a1", "a2", "m")).filter(lambda s: s.n_electrons >= 2))
def test_measurements_are_complete(s):
    for branches in (
        charge_detect(pbs(s, PORTS), "d1"),
        parity_gate(s, "a1", "a2"),
        measure_spin(s, "a1"),
    ):
        assert math.fsum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)
        for b in branches:
            assert b.post_state.norm_squared() == pytest.approx(1.0, abs=1e-12)
