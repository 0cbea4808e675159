import numpy as np
import pytest

siws = pytest.importorskip("siws")


def hand_params():
    return siws.Params(
        B=np.zeros((1, 1)),
        B_w=np.array([[1.0]]),
        C_w=np.array([[1.0]]),
        D=np.array([0.5]),
        D_w=np.array([0.5]),
    )


def test_step_hand_example():
    x, w = siws.step(hand_params(), np.array([0.5]), np.array([0.4]), 0.1)
    assert x[0] == pytest.approx(0.495, abs=1e-15)
    assert w[0] == pytest.approx(0.43, abs=1e-15)


def test_assemble_full_blocks():
    B_f, D_f = siws.assemble_full(hand_params(), 0.1)
    assert B_f.shape == (2, 2)
    np.testing.assert_array_equal(B_f, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(D_f, [0.5, 0.5])


def test_spectral_radius_matches_numpy():
    rng = np.random.default_rng(0)
    M = rng.random((12, 12))
    res = siws.spectral_radius(M)
    assert res["rho"] == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10)
    assert res["right"].sum() == pytest.approx(1.0)


def test_negative_matrix_raises():
    with pytest.raises(siws.DomainError):
        siws.spectral_radius(np.array([[1.0, -1.0], [0.5, 1.0]]))


def test_homogeneous_equilibrium_agrees():
    p = siws.Params.homogeneous(2, 1, beta=0.3, delta=0.2, c=0.1, delta_w=0.5)
    x_closed, w_closed = siws.homogeneous_equilibrium(2, 1, 0.3, 0.2, 0.2)
    x, w = siws.endemic_equilibrium(p, 0.01)
    np.testing.assert_allclose(x, x_closed, atol=1e-10)
    np.testing.assert_allclose(w, w_closed, atol=1e-10)
    assert siws.classify(p, 0.01)["regime"] == "endemic-gas"
    assert siws.reproduction_number(p) > 1.0


def test_generated_scenario_round_trip_and_simulation():
    s = siws.Scenario.generate(6, 1, l=1, h=0.01, seed=3, target="subcritical")
    assert s.validate()["passed"]
    assert siws.Scenario.parse(s.to_json()) == s
    traj = s.simulate(stride=100)
    assert traj["converged"]
    assert traj["states"].shape[1:] == (1, 7)
    assert np.abs(traj["states"][-1]).max() < 1e-6


def test_bad_scenario_text():
    with pytest.raises(siws.FormatError):
        siws.Scenario.parse("{")


def test_validate_reports_node():
    s = siws.Scenario.generate(4, 1, seed=1)
    x0, w0 = s.initial()
    x0[1] = 1.5
    rep = siws.validate(s.params(), x0, w0, s.h)
    assert not rep["passed"]
    assert any(v["location"] == "node 2" for v in rep["violations"])
