import math

import numpy as np
import pytest
from conftest import G, OMEGA_C, TWO_PI, table1_params
from hypothesis import given, settings
from hypothesis import strategies as st

from coupler_swap.hilbert import (
    GROUND,
    coupler_projector,
    coupler_sigma,
    coupler_sigma_z,
    make_space,
    mode_annihilator,
    number_operator,
    total_excitation,
)
from coupler_swap.model import (
    DeviceParams,
    NoDetuningMatch,
    build_crosstalk_hamiltonian,
    build_effective_hamiltonians,
    build_interaction_hamiltonian,
    build_swap_hamiltonian,
    check_isolation,
    effective_params,
    interaction_hamiltonian,
    lambda_equal_detuning,
    lambda_general,
    matching_residual,
    solve_detuning_matching,
    swap_hamiltonian,
)

SAMPLE_TIMES = (0.0, 1e-9, 7e-9, 13.3e-9)


def single_pair(delta=5.5 * G, g=G, mu=G, **kw):
    return DeviceParams(OMEGA_C, (OMEGA_C - delta,), (OMEGA_C - delta,), (g,), (mu,), **kw)


# --- DeviceParams ------------------------------------------------------------


def test_detunings_are_derived():
    p = table1_params(5.5)
    np.testing.assert_allclose(p.delta_a, [5.5 * G, -5.5 * G])
    np.testing.assert_allclose(p.delta_b, p.delta_a)


def test_table1_transfer_alpha():
    # 6.0 - 5.45 = +0.55 GHz and 6.0 - 6.55 = -0.55 GHz, i.e. alpha = 5.5
    p = DeviceParams(
        TWO_PI * 6.0e9,
        (TWO_PI * 5.45e9, TWO_PI * 6.55e9),
        (TWO_PI * 5.45e9, TWO_PI * 6.55e9),
        (G, G),
        (G, G),
    )
    np.testing.assert_allclose(p.delta_a / TWO_PI, [0.55e9, -0.55e9], rtol=1e-12)
    np.testing.assert_allclose(np.abs(p.delta_a) / G, [5.5, 5.5], rtol=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kappa_a=(-1.0,)),
        dict(gamma=-1.0),
        dict(g=(0.0,)),
        dict(pairing=(1,)),
        dict(crosstalk={("a1", "c3"): 1.0}),
        dict(crosstalk={("a1", "b2"): 1.0}),
        dict(crosstalk={("a1", "a1"): 1.0}),
    ],
)
def test_params_validation(kwargs):
    base = dict(omega_c=OMEGA_C, omega_a=(OMEGA_C - 5 * G,), omega_b=(OMEGA_C - 5 * G,), g=(G,), mu=(G,))
    base.update(kwargs)
    with pytest.raises(ValueError):
        DeviceParams(**base)


def test_crosstalk_keys_are_canonical():
    p = table1_params(5.5, crosstalk={("b1", "a1"): 1.0, "a2-a1": 2.0})
    assert p.crosstalk_map == {("a1", "b1"): 1.0, ("a1", "a2"): 2.0}


# --- interaction Hamiltonian -------------------------------------------------


def test_interaction_hamiltonian_at_zero():
    p = single_pair()
    space = make_space(1, 3)
    h = build_interaction_hamiltonian(p, space, 0.0)
    sp_ = coupler_sigma(space).dag()
    a, b = mode_annihilator(space, 0), mode_annihilator(space, 1)
    expected = G * ((a + b) @ sp_)
    expected = expected + expected.dag()
    np.testing.assert_allclose(h.dense(), expected.dense())
    assert h.is_hermitian()


def test_interaction_phases_follow_detuning():
    p = table1_params(5.5)
    space = make_space(2, 3)
    t = 3.1e-9
    h = build_interaction_hamiltonian(p, space, t)
    sp_ = coupler_sigma(space).dag()
    expected = None
    for j in range(2):
        for slot, c, d in ((j, p.g[j], p.delta_a[j]), (2 + j, p.mu[j], p.delta_b[j])):
            term = c * np.exp(1j * d * t) * (mode_annihilator(space, slot) @ sp_)
            term = term + term.dag()
            expected = term if expected is None else expected + term
    np.testing.assert_allclose(h.dense(), expected.dense(), atol=1e-6 * G)


def test_interaction_norm_time_independent():
    p = table1_params(5.5)
    space = make_space(2, 3)
    norms = [np.linalg.norm(build_interaction_hamiltonian(p, space, t).dense(), 2) for t in (0, 1e-9, 7e-9)]
    np.testing.assert_allclose(norms, norms[0], rtol=1e-12)


def test_space_mismatch_rejected():
    with pytest.raises(ValueError):
        build_interaction_hamiltonian(table1_params(5.5), make_space(1, 3), 0.0)


params_strategy = st.builds(
    lambda a1, a2, g1, g2, m1, m2: DeviceParams(
        OMEGA_C,
        (OMEGA_C - a1 * G, OMEGA_C - a2 * G),
        (OMEGA_C - a1 * G * 1.1, OMEGA_C - a2 * G * 0.9),
        (g1 * G, g2 * G),
        (m1 * G, m2 * G),
        crosstalk={("a1", "a2"): 0.01 * G, ("a1", "b1"): 0.02 * G, ("b2", "a2"): 0.01 * G},
    ),
    st.floats(2, 12) | st.floats(-12, -2),
    st.floats(2, 12) | st.floats(-12, -2),
    st.floats(0.3, 2),
    st.floats(0.3, 2),
    st.floats(0.3, 2),
    st.floats(0.3, 2),
)


@settings(max_examples=25, deadline=None)
@given(p=params_strategy, t=st.floats(0, 50e-9))
def test_builders_hermitian_and_conserve_excitations(p, t):
    space = make_space(2, 3)
    n_tot = total_excitation(space)
    for h in (
        build_interaction_hamiltonian(p, space, t),
        build_crosstalk_hamiltonian(p, space, t),
        *build_effective_hamiltonians(p, space, t),
        build_swap_hamiltonian(p, space),
    ):
        assert h.is_hermitian(1e-12)
        assert h.commutator(n_tot).max_abs() <= 1e-12 * max(h.max_abs(), 1.0) * 10


# --- crosstalk -----------------------------------------------------------------


def test_zero_crosstalk_reduces_exactly():
    space = make_space(2, 3)
    p = table1_params(5.5, crosstalk={("a1", "a2"): 0.0})
    for t in SAMPLE_TIMES:
        a = build_crosstalk_hamiltonian(p, space, t).matrix
        b = build_interaction_hamiltonian(p, space, t).matrix
        assert (a != b).nnz == 0


def test_uniform_crosstalk_difference_scales_with_fraction():
    space = make_space(2, 3)
    base = table1_params(5.5)
    p = base.with_uniform_crosstalk(0.01)
    assert len(p.crosstalk) == 6
    diff = build_crosstalk_hamiltonian(p, space, 2e-9) - build_interaction_hamiltonian(p, space, 2e-9)
    assert diff.max_abs() == pytest.approx(0.01 * G * 2, rel=1e-12)  # sqrt(2) * sqrt(2) at |1,1> -> |2,0>
    assert diff.is_hermitian()


def test_equal_frequency_crosstalk_is_static():
    space = make_space(2, 3)
    p = table1_params(5.5, crosstalk={("a1", "b1"): 0.01 * G, ("a1", "a2"): 0.01 * G})
    a1, b1, a2 = (mode_annihilator(space, s) for s in (0, 2, 1))
    for t in SAMPLE_TIMES:
        diff = (build_crosstalk_hamiltonian(p, space, t) - build_interaction_hamiltonian(p, space, t)).dense()
        static = (a1 @ b1.dag()).dense()
        rotating = (a1 @ a2.dag()).dense()
        i, j = np.argwhere(static)[0]
        assert diff[i, j] == pytest.approx(0.01 * G * static[i, j], rel=1e-12)
        k, m = np.argwhere(rotating)[0]
        delta = p.omega_a[1] - p.omega_a[0]
        assert diff[k, m] == pytest.approx(0.01 * G * rotating[k, m] * np.exp(1j * delta * t), rel=1e-9)


# --- effective and swap Hamiltonians --------------------------------------------


def test_effective_lambda_value():
    # g^2 / delta with g = 100 MHz and delta = 550 MHz
    p = single_pair(delta=TWO_PI * 550e6)
    eff = effective_params(p)
    assert eff.lambdas[0] / TWO_PI == pytest.approx(100.0**2 / 550.0 * 1e6, rel=1e-12)
    assert eff.lambdas[0] / TWO_PI / 1e6 == pytest.approx(18.18, abs=0.005)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e6, 1e10), st.floats(1e6, 1e10), st.floats(1e7, 1e11) | st.floats(-1e11, -1e7))
def test_equal_detuning_lambda_matches_general_form_exactly(g, mu, delta):
    assert lambda_general(g, mu, delta, delta) == lambda_equal_detuning(g, mu, delta)


def test_effective_hamiltonians_commute_with_sigma_z():
    p = table1_params(5.5)
    space = make_space(2, 3)
    sz = coupler_sigma_z(space)
    for t in SAMPLE_TIMES:
        h0, hint = build_effective_hamiltonians(p, space, t)
        assert h0.commutator(sz).max_abs() == 0
        assert hint.commutator(sz).max_abs() == 0


def test_hint_ground_projection_is_swap_hamiltonian():
    p = table1_params(5.5)
    space = make_space(2, 3)
    _, hint = build_effective_hamiltonians(p, space, 0.0)
    pg = coupler_projector(space, GROUND)
    he = build_swap_hamiltonian(p, space)
    np.testing.assert_allclose((pg @ hint @ pg).dense(), (he @ pg).dense(), atol=1e-9)


def test_ground_sector_stark_shift():
    p = single_pair()
    space = make_space(1, 3)
    h0, _ = build_effective_hamiltonians(p, space, 0.0)
    pg = coupler_projector(space, GROUND)
    stark = G**2 / (5.5 * G)
    expected = -stark * (number_operator(space, 0) + number_operator(space, 1)) @ pg
    np.testing.assert_allclose((h0 @ pg).dense(), expected.dense(), atol=1e-6)


def test_swap_hamiltonian_properties():
    space = make_space(2, 3)
    he = swap_hamiltonian(space, [1.0, -1.0])
    modes = sum((number_operator(space, m) for m in range(1, 4)), number_operator(space, 0))
    assert he.is_hermitian()
    assert he.commutator(modes).max_abs() == 0
    assert swap_hamiltonian(space, [0.0, 0.0]).max_abs() == 0


def test_pairing_relabels_b_modes():
    p = DeviceParams(
        OMEGA_C,
        (OMEGA_C - 5 * G, OMEGA_C + 5 * G),
        (OMEGA_C - 5 * G, OMEGA_C + 5 * G),
        (G, G),
        (0.5 * G, 0.7 * G),
        pairing=(1, 0),
    )
    space = make_space(2, 3)
    he = build_swap_hamiltonian(p, space).dense()
    # a1 pairs with b2: |10,00> couples to |00,01>
    i = space.index([1, 0, 0, 0, 0])
    j = space.index([0, 0, 0, 1, 0])
    k = space.index([0, 0, 1, 0, 0])
    assert he[j, i] == pytest.approx(-0.5 * G * G / (5 * G))
    assert he[k, i] == 0
    freqs = p.mode_frequencies()
    assert freqs[3] == p.omega_b[0] and freqs[2] == p.omega_b[1]


def test_effective_phases_equal_couplings():
    eff = effective_params(table1_params(5.5))
    np.testing.assert_allclose(eff.phi, [1.0, -1.0], rtol=1e-12)
    np.testing.assert_allclose(eff.theta, [1.0, -1.0], rtol=1e-12)
    assert eff.uniform


# --- detuning matching -----------------------------------------------------------


def test_matching_equal_couplings_returns_same_detuning():
    for d in (500e6, -730e6, 1.3e9):
        assert solve_detuning_matching(G, G, TWO_PI * d) == TWO_PI * d


def test_matching_known_value():
    # quadratic db^2 - (da + g^2/da) db + mu^2 = 0 solved by numpy.roots, in MHz
    db = solve_detuning_matching(100.0, 80.0, 500.0)
    assert db == pytest.approx(507.38633754, rel=1e-9)
    assert matching_residual(100.0, 80.0, 500.0, db) < 1e-12
    other = solve_detuning_matching(100.0, 80.0, 500.0, root="-")
    assert other == pytest.approx(12.61366246, rel=1e-9)
    assert matching_residual(100.0, 80.0, 500.0, other) < 1e-12


def test_matching_negative_discriminant():
    with pytest.raises(NoDetuningMatch, match="discriminant"):
        solve_detuning_matching(TWO_PI * 100e6, TWO_PI * 2e9, TWO_PI * 100e6)


def test_matching_rejects_zero_and_bad_root():
    with pytest.raises(ValueError):
        solve_detuning_matching(G, G, 0.0)
    with pytest.raises(ValueError):
        solve_detuning_matching(G, G, G, root="x")


@settings(max_examples=200, deadline=None)
@given(
    g=st.floats(1e6, 1e9),
    mu=st.floats(1e6, 1e9),
    da=st.floats(2e6, 1e10) | st.floats(-1e10, -2e6),
)
def test_matching_residual_property(g, mu, da):
    try:
        db = solve_detuning_matching(g, mu, da)
    except NoDetuningMatch:
        assert (da**2 + g**2) ** 2 - 4 * da**2 * mu**2 < 0
        return
    assert matching_residual(g, mu, da, db) < 1e-12


# --- isolation ------------------------------------------------------------------------


def test_isolation_exchange_preset_margin_one():
    report = check_isolation(table1_params(9.3), margin=1.0)
    assert report.passed
    # |d1 - d2| / (1/|d1| + 1/|d2|) with d1 = -d2 = 9.3 g equals (9.3 g)^2
    for entry in report.cross:
        assert entry.margin == pytest.approx(9.3**2, rel=1e-12)
    assert report.worst_margin == pytest.approx(9.3, rel=1e-12)
    assert not check_isolation(table1_params(9.3), margin=10.0).passed


def test_isolation_equal_detunings_fail():
    p = DeviceParams(OMEGA_C, (OMEGA_C - 5 * G,) * 2, (OMEGA_C - 5 * G,) * 2, (G, G), (G, G))
    report = check_isolation(p, margin=1.0)
    assert not report.passed
    assert all(e.ratio == 0 for e in report.cross)


def test_isolation_single_pair_has_no_cross_terms():
    report = check_isolation(single_pair(), margin=1.0)
    assert report.cross == ()
    assert report.passed
    assert "no cross-pair terms" in report.render()


def test_isolation_zero_detuning_is_error_entry():
    p = single_pair(delta=0.0)
    report = check_isolation(p, margin=1.0)
    assert report.errors and not report.passed
    assert math.isfinite(report.worst_margin)


def test_isolation_covers_ordered_pairs():
    p = DeviceParams(
        OMEGA_C,
        tuple(OMEGA_C - d * G for d in (5, -6, 8)),
        tuple(OMEGA_C - d * G for d in (5, -6, 8)),
        (G,) * 3,
        (G,) * 3,
    )
    report = check_isolation(p)
    assert {(e.j, e.k) for e in report.cross} == {(j, k) for j in range(3) for k in range(3) if j != k}
    assert len(report.pairs) == 3
