from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydfilter.atom_model import AtomRates, three_level_hamiltonian
from rydfilter.geometry import uniform_blockade_geometry
from rydfilter.operators import (
    ACTIVE_LEVELS,
    CapacityError,
    Basis,
    build_damping,
    build_hamiltonian,
    build_jump_operators,
    apply_effective_hamiltonian,
    index_to_levels,
    levels_to_index,
    product_state,
)
from rydfilter.pulses import PulseSchedule

SCHED = PulseSchedule(5.0, 30.0, 0.5, 1.5, 0.5, 1.5, delta_e_level=3.0)


def ket(level, d=4):
    v = np.zeros(d)
    v[level] = 1.0
    return v


def proj(mu, nu):
    return np.outer(ket(mu), ket(nu))


def embed(op, j, n):
    # atom 0 is the least significant digit, i.e. the rightmost Kronecker factor
    factors = [op if k == j else np.eye(4) for k in reversed(range(n))]
    return reduce(np.kron, factors)


def dense_hamiltonian(t, sched, shifts, n):
    g, s, e, r = range(4)
    single = (
        sched.delta_e(t) * proj(e, e)
        + sched.omega_ge(t) * (proj(e, g) + proj(g, e))
        + sched.omega_er(t) * (proj(r, e) + proj(e, r))
    )
    h = sum(embed(single, j, n) for j in range(n))
    for i in range(n):
        for j in range(i + 1, n):
            h = h + shifts[i, j] * embed(proj(r, r), i, n) @ embed(proj(r, r), j, n)
    return h


def dense_jumps(rates, n):
    g, s, e, r = range(4)
    ops = []
    for j in range(n):
        ops += [
            np.sqrt(rates.gamma_eg) * embed(proj(g, e), j, n),
            np.sqrt(rates.gamma_es) * embed(proj(s, e), j, n),
            np.sqrt(rates.gamma_re) * embed(proj(e, r), j, n),
            np.sqrt(rates.gamma_r) * embed(2 * proj(r, r) - np.eye(4), j, n),
        ]
    return ops


rates_st = st.builds(
    AtomRates,
    st.floats(0.0, 50.0),
    st.floats(0.0, 50.0),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_roundtrip(n):
    for i in range(4**n):
        assert levels_to_index(index_to_levels(i, n)) == i


def test_basis_digit_order():
    assert levels_to_index("rg") == 3  # atom 0 in r, atom 1 in g
    assert index_to_levels(4, 2) == "gs"
    assert product_state("gg")[0] == 1.0


def test_capacity_error():
    with pytest.raises(CapacityError):
        build_jump_operators(AtomRates(1.0, 1.0), 11)


def test_zero_drive_is_zero_operator():
    s = PulseSchedule(5.0, 30.0, 0.5, 1.5, 0.5, 1.5)
    h = build_hamiltonian(0.0, s, uniform_blockade_geometry(1, 0.0), 1).toarray()
    # at t = 0 only Omega_er is on
    h -= 5.0 * (proj(3, 2) + proj(2, 3))
    assert not np.any(h)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("t", [0.0, 1.1, 2.3, 3.7])
def test_hamiltonian_matches_kronecker_oracle(n, t):
    geo = uniform_blockade_geometry(n, 17.0)
    h = build_hamiltonian(t, SCHED, geo, n).toarray()
    np.testing.assert_allclose(h, dense_hamiltonian(t, SCHED, geo.pair_shifts, n), atol=1e-13)


def test_pair_shift_elements():
    geo = uniform_blockade_geometry(2, 9.0)
    h = build_hamiltonian(0.2, PulseSchedule(5.0, 30.0, 0.5, 1.5, 0.5, 1.5), geo, 2).toarray()
    rr, rg = levels_to_index("rr"), levels_to_index("rg")
    assert h[rr, rr] == 9.0
    assert h[rg, rg] == 0.0


def test_single_atom_spectrum():
    h = build_hamiltonian(2.2, SCHED, uniform_blockade_geometry(1, 0.0), 1).toarray()
    block = h[np.ix_(ACTIVE_LEVELS, ACTIVE_LEVELS)]
    ref = three_level_hamiltonian(SCHED.omega_ge(2.2), SCHED.omega_er(2.2), SCHED.delta_e(2.2))
    np.testing.assert_allclose(np.linalg.eigvalsh(block), np.linalg.eigvalsh(ref), atol=1e-12)
    assert not h[1].any() and not h[:, 1].any()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.floats(0.0, 4.0), st.integers(0, 2**32 - 1))
def test_hamiltonian_hermitian_on_random_vectors(n, t, seed):
    rng = np.random.default_rng(seed)
    h = build_hamiltonian(t, SCHED, uniform_blockade_geometry(n, 40.0), n)
    d = 4**n
    phi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    lhs = np.vdot(phi, h.apply(psi))
    rhs = np.conj(np.vdot(psi, h.apply(phi)))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=20, deadline=None)
@given(rates_st, st.sampled_from([1, 2, 3]))
def test_jumps_match_kronecker_oracle(rates, n):
    ours = build_jump_operators(rates, n, keep_zero=True)
    ref = dense_jumps(rates, n)
    assert len(ours) == len(ref) == 4 * n
    for (op, label), dense in zip(ours, ref):
        np.testing.assert_allclose(op.toarray(), dense, atol=1e-14)


def test_zero_rate_channels_dropped():
    ops = build_jump_operators(AtomRates(1.0, 2.0), 2)
    assert [lab for _, lab in ops] == [(0, "ge"), (0, "se"), (1, "ge"), (1, "se")]


def test_dephasing_generator_is_unitary_up_to_rate():
    (op, _), = build_jump_operators(AtomRates(0.0, 0.0, 0.0, 0.25), 1)
    m = op.toarray()
    np.testing.assert_allclose(m.conj().T @ m, 0.25 * np.eye(4), atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(rates_st, st.sampled_from([1, 2, 3]))
def test_damping_identity(rates, n):
    l2 = build_damping(rates, n).toarray()
    acc = sum(op.toarray().conj().T @ op.toarray() for op, _ in build_jump_operators(rates, n))
    np.testing.assert_allclose(l2, acc, atol=1e-12)


def test_basis_damping_with_frozen_atoms():
    rates = AtomRates(3.0, 4.0, 0.5, 0.2)
    b = Basis(2, ACTIVE_LEVELS)
    d = b.damping_diagonal(rates, n_frozen=1)
    # one frozen atom in |s> still contributes its dephasing gamma_r
    full = build_damping(rates, 3).toarray().diagonal().real
    idx = [levels_to_index(lv + "s") for lv in ("gg", "eg", "rg", "ge", "ee", "re", "gr", "er", "rr")]
    np.testing.assert_allclose(d, full[idx], atol=1e-13)


def test_effective_hamiltonian():
    rates = AtomRates(2.0, 3.0)
    h = build_hamiltonian(1.4, SCHED, uniform_blockade_geometry(2, 5.0), 2)
    l2 = build_damping(rates, 2)
    psi = np.random.default_rng(1).normal(size=16).astype(complex)
    ref = -1j * h.toarray() @ psi - 0.5 * l2.toarray() @ psi
    np.testing.assert_allclose(apply_effective_hamiltonian(h, l2, psi), ref, atol=1e-12)
    with pytest.raises(ValueError):
        apply_effective_hamiltonian(h, l2, psi[:4])
