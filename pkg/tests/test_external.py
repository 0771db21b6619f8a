import numpy as np
import pytest

from poincare_invariants.external import (
    CustomPotential, UniformB, UniformE, ZeroPotential, eval_external, symmetry_report)


def test_uniform_b_potential_and_field(rng):
    pot = UniformB((0.1, -0.2, 0.5))
    x = rng.normal(size=(3, 7))
    A0, A, E, B = eval_external(pot, x)
    assert np.allclose(A, 0.5 * np.cross([0.1, -0.2, 0.5], x.T).T)
    assert np.allclose(A0, 0.0) and np.allclose(E, 0.0)
    assert np.allclose(B, np.array([0.1, -0.2, 0.5])[:, None])


def test_uniform_e_potential_and_field(rng):
    pot = UniformE((0.3, 0.0, -1.0))
    x = rng.normal(size=(3, 5))
    A0, A, E, B = eval_external(pot, x)
    assert np.allclose(A0, -(0.3 * x[0] - x[2]))
    assert np.allclose(E, np.array([0.3, 0.0, -1.0])[:, None]) and np.allclose(B, 0.0)


def test_generic_fields_by_differences_match_analytic(rng):
    x = rng.normal(size=(3, 4, 4))
    for pot in (UniformB((0.2, 0.4, -0.1)), UniformE((1.0, 2.0, 3.0))):
        _, _, E, B = eval_external(pot, x)
        E_fd, B_fd = super(type(pot), pot).fields(x)
        assert np.allclose(E_fd, E, atol=1e-9) and np.allclose(B_fd, B, atol=1e-9)


def test_vector_validation():
    with pytest.raises(ValueError):
        UniformB((1.0, 2.0))


@pytest.mark.parametrize("pot, P, M", [
    (ZeroPotential(), {0, 1, 2}, {0, 1, 2}),
    (UniformB((0, 0, 0.5)), {2}, {2}),
    (UniformB((0.1, 0, 0.5)), set(), set()),
    (UniformE((1.0, 0, 0)), {1, 2}, {0}),
    (UniformE((1.0, 1.0, 0)), {2}, set()),
])
def test_symmetry_report_builtins(pot, P, M):
    r = symmetry_report(pot)
    assert r.conserved_P == frozenset(P) and r.conserved_M == frozenset(M)
    assert r.energy_conserved


def test_expected_names():
    assert symmetry_report(UniformB((0, 0, 0.5))).expected() == ["energy", "Pz", "Mz"]
    assert symmetry_report(UniformE((1.0, 0, 0))).expected() == ["energy", "Py", "Pz", "Mx"]


def test_sampled_report_agrees_with_analytic_for_custom_uniform_b():
    ref = UniformB((0, 0, 0.5))
    custom = CustomPotential(lambda x: ref.potentials(x)[0], lambda x: ref.potentials(x)[1])
    assert symmetry_report(custom) == symmetry_report(ref)


def test_sampled_report_for_radial_scalar_potential():
    custom = CustomPotential(lambda x: np.exp(-np.sum(x * x, axis=0)), lambda x: np.zeros_like(x))
    r = symmetry_report(custom)
    assert r.conserved_P == frozenset() and r.conserved_M == frozenset({0, 1, 2})
