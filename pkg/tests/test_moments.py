import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffdesign import lagrangian as lg, moments as mo, operators as ops
from cliffdesign.errors import ConditioningError, ResourceLimitError
from cliffdesign.stabilizer import dense_moment_operator

# exact ||M^k||_F^2 for t=4, n=3, K=T, k=0..10 (frozen from the full-space oracle)
SANDWICHED_SQ = [6, 4.148316116570083, 2.89036325485917, 2.029338117201207, 1.435620818611578,
                 1.023221172879062, 0.7346859552692628, 0.5313597528566184, 0.38705614108014413,
                 0.28391624149331024, 0.20967998297591384]


@st.composite
def unitaries(draw):
    a, b, c, d = (draw(st.floats(-3.2, 3.2)) for _ in range(4))
    U = np.exp(1j * a) * np.array([[np.exp(1j * b) * np.cos(c), -np.exp(-1j * d) * np.sin(c)],
                                   [np.exp(1j * d) * np.sin(c), np.exp(-1j * b) * np.cos(c)]])
    return mo.GateK(U, "random")


def test_parse_gate():
    assert mo.parse_gate("T").label == "T"
    g = mo.parse_gate("custom:0,0,1,0,1,0,0,0")
    assert np.allclose(g.matrix, [[0, 1], [1, 0]])
    for bad in ("Q", "custom:1,2"):
        with pytest.raises(ValueError):
            mo.parse_gate(bad)
    with pytest.raises(ValueError):
        mo.GateK(np.array([[1, 1], [0, 1]]))


def test_clifford_flag():
    assert mo.s_gate().is_clifford and mo.hadamard_gate().is_clifford
    assert not mo.t_gate().is_clifford and not mo.sqrt_t_gate().is_clifford


def test_matrix_element_identity_is_overlap():
    sigma = lg.enumerate_sigma(3)
    for A in sigma:
        for B in sigma:
            assert mo.r_matrix_element(3, mo.identity_gate(), A, B) == pytest.approx(
                ops.dense_overlap(A, B), abs=1e-12)


def test_matrix_element_clifford_diagonal():
    for T in lg.enumerate_sigma(4):
        assert mo.r_matrix_element(4, mo.s_gate(), T, T) == pytest.approx(1.0, abs=1e-12)
    D = lg.defect_element(4)
    assert abs(mo.r_matrix_element(4, mo.t_gate(), D, D)) < 1


def test_single_site_matrix_matches_elementwise():
    sigma = lg.enumerate_sigma(4)
    R1 = mo.single_site_matrix(4, mo.channel_terms(mo.t_gate()))
    for i, j in [(0, 0), (3, 27), (26, 29), (29, 29)]:
        assert R1[i, j] == pytest.approx(mo.r_matrix_element(4, mo.t_gate(), sigma[i], sigma[j]))


def test_eta_values():
    assert mo.eta(4, mo.t_gate()) == pytest.approx(5 / 6, abs=1e-12)
    assert mo.eta(4, mo.sqrt_t_gate()) == pytest.approx(11 / 12, abs=1e-12)
    assert mo.eta(4, mo.s_gate()) == pytest.approx(1.0, abs=1e-12)
    assert mo.eta(3, mo.t_gate()) == 0.0


def test_eta_bar():
    assert mo.eta_bar(0.1) == 0.25 and mo.eta_bar(0.9) == 0.9


def test_low_t_converged():
    for t, n in [(2, 2), (3, 2), (3, 5)]:
        model = mo.interleaved_model(t, n, mo.t_gate())
        assert model.complement_dim == 0
        assert mo.convergence_norm(model, 3) == 0.0
        assert mo.haar_interleaved_norm(t, n, 2) == 0.0


def test_model_preconditions():
    with pytest.raises(ConditioningError):
        mo.interleaved_model(4, 2, mo.t_gate())
    with pytest.raises(ValueError):
        mo.convergence_norm(mo.interleaved_model(4, 3, mo.t_gate()), 0)


def test_sandwiched_norms_frozen():
    model = mo.interleaved_model(4, 3, mo.t_gate())
    got = [mo.sandwiched_norm(model, k) ** 2 for k in range(11)]
    assert np.allclose(got, SANDWICHED_SQ, rtol=1e-10, atol=0)


def test_clifford_gate_does_not_converge():
    model = mo.interleaved_model(4, 5, mo.s_gate())
    assert mo.spectral_contraction(model) == pytest.approx(1.0, abs=1e-10)
    norms = mo.convergence_curve(model, 10)
    assert np.allclose(norms, math.sqrt(6), rtol=1e-10)
    assert np.allclose(mo.convergence_ratios(model, 10), 1.0, atol=1e-10)


def test_contraction_t_gate():
    model = mo.interleaved_model(4, 8, mo.t_gate())
    assert mo.spectral_contraction(model) == pytest.approx(0.8352839449657944, rel=1e-10)
    assert np.abs(model.M - model.M.conj().T).max() < 1e-10
    big_n = mo.interleaved_model(4, 40, mo.t_gate())
    assert mo.spectral_contraction(big_n) == pytest.approx(5 / 6, abs=1e-10)
    # the operator-norm bound (1 + 2^{32t^2 - n})^5 * eta_bar
    bound_log2 = 5 * math.log2(1 + 2.0 ** (32 * 16 - 8)) + math.log2(mo.eta_bar(mo.eta(4, mo.t_gate())))
    assert math.log2(mo.spectral_contraction(model)) <= bound_log2


def test_contraction_independent_of_basis():
    a = mo.interleaved_model(4, 6, mo.t_gate(), method="spectral")
    b = mo.interleaved_model(4, 6, mo.t_gate(), method="gram_schmidt")
    assert mo.spectral_contraction(a) == pytest.approx(mo.spectral_contraction(b), abs=1e-10)
    for k in (1, 4, 9):
        assert mo.convergence_norm(a, k) == pytest.approx(mo.convergence_norm(b, k), rel=1e-10)


def test_curve_matches_direct_norms():
    model = mo.interleaved_model(4, 5, mo.t_gate())
    curve = mo.convergence_curve(model, 12)
    direct = [mo.convergence_norm(model, k) for k in range(1, 13)]
    assert np.allclose(curve, direct, rtol=1e-10)
    assert np.all(np.diff(curve) < 0)


def test_curve_survives_underflow():
    model = mo.interleaved_model(4, 8, mo.t_gate())
    log_curve = mo.convergence_log2_curve(model, 6000)
    assert np.all(np.isfinite(log_curve))
    assert log_curve[-1] < -1000


def test_ratio_converges_slowly_to_contraction():
    # the top two eigenvalues of M are 0.83528 and 0.83333, so the ratio
    # approaches its limit like (0.83333 / 0.83528)^k
    model = mo.interleaved_model(4, 8, mo.t_gate())
    rho = mo.spectral_contraction(model)
    ratios = mo.convergence_ratios(model, 3000)
    assert abs(ratios[2000 - 2] - rho) < 1e-6
    assert abs(ratios[-1] - rho) < 1e-7
    assert abs(ratios[50 - 2] - rho) > 1e-3


def test_haar_interleaved():
    model = mo.haar_interleaved_model(4, 8)
    rho = mo.spectral_contraction(model)
    assert rho < 7 / 8
    assert mo.haar_interleaved_norm(4, 8, 3) < mo.haar_interleaved_norm(4, 8, 2)


def test_depth_bound_values():
    assert mo.paper_depth_bound(4, 600, 10**5, 0.25) == pytest.approx(-191483.56143810225, rel=1e-12)
    assert mo.paper_depth_bound(4, 300, 10**5, 0.25) > 0
    for k in (1, 10, 10**4):
        assert mo.paper_depth_bound(4, 1000, k, 1.0) >= 33 * 4**4
    with pytest.raises(ValueError):
        mo.paper_depth_bound(4, 10, 5, 1.5)


def test_depth_bound_decreases_past_crossover():
    vals = [mo.paper_depth_bound(4, 600, k, 0.25) for k in (10**3, 10**4, 10**5)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("t", [2, 4, 5])
@pytest.mark.parametrize("eps", [1e-3, 1e-12])
def test_haar_interleaved_depth_reaches_eps(t, eps):
    k = mo.haar_interleaved_depth(t, eps)
    assert k == math.ceil(36 * (33 * t**4 + 3 * t * math.log2(1 / eps)))
    assert mo.paper_depth_bound(t, 10**6, k, 7 / 8) <= math.log2(eps)
    assert math.log2(7 / 8) <= -0.19


def test_relative_design_check():
    P = ops.haar_symmetrizer(1).superoperator()
    assert mo.relative_design_check(P, P, 0.0)
    depol = np.zeros((4, 4))
    depol[0, 0] = depol[0, 3] = depol[3, 0] = depol[3, 3] = 0.5
    assert not mo.relative_design_check(depol, np.eye(4), 0.0)
    D2 = dense_moment_operator("clifford1", 2)
    assert mo.relative_design_check(D2, ops.haar_symmetrizer(2).superoperator(), 1e-9)
    with pytest.raises(ResourceLimitError):
        mo.relative_design_check(np.eye(4**7), np.eye(4**7), 0.1)


def test_diamond_bound():
    assert mo.diamond_bound(0.0, 4, 3) == 0.0
    assert mo.diamond_bound(0.5, 2, 2) == 0.5 * 2**8


@given(unitaries())
def test_eta_dagger_invariant(K):
    assert mo.eta(4, K) == pytest.approx(mo.eta(4, K.dagger), abs=1e-10)
    assert mo.eta(4, K) <= 1 + 1e-10


@given(unitaries(), st.integers(3, 6))
def test_model_hermitian_and_bounded(K, n):
    model = mo.interleaved_model(4, n, K)
    assert np.abs(model.M - model.M.conj().T).max() < 1e-10
    assert mo.spectral_contraction(model) <= 1 + 1e-9
    c = mo.convergence_curve(model, 6)
    assert np.all(c[1:] <= c[:-1] * (mo.spectral_contraction(model) + 1e-9))
