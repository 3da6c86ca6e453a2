import json
import math

import numpy as np
import pytest

import oracles
from crnqp.balance import (
    class_interior_grid,
    complex_balance_residuals,
    grad_V,
    hjb_residual,
    horn_jackson_gradient,
    is_complex_balanced_network,
    lyapunov_V,
    monomial_fit,
)
from crnqp.corpus import BY_NAME, CORPUS
from crnqp.dynamics import find_steady_state
from crnqp.errors import InputError
from crnqp.hamiltonian import drift
from crnqp.network import compatibility_class


def test_isomer_balanced():
    rep = complex_balance_residuals(BY_NAME["isomer"].network, [1.0, 1.0])
    assert rep.balanced and rep.max_residual == 0.0


def test_anderson_residuals(anderson):
    rep = complex_balance_residuals(anderson, [2.0])
    assert not rep.balanced
    assert rep.per_complex_residuals["A"] == pytest.approx(-2.0)
    assert rep.per_complex_residuals["0"] == pytest.approx(1.0)
    assert rep.per_complex_residuals["2A"] == pytest.approx(1.0)
    body = json.loads(rep.to_json())
    assert body["balanced"] is False and len(body["residuals"]) == 3


def test_three_species_balanced():
    assert complex_balance_residuals(BY_NAME["three_species"].network, [1, 1, 1]).balanced


def test_residuals_reject_boundary(bd):
    with pytest.raises(InputError):
        complex_balance_residuals(bd, [0.0])


def test_tolerance_is_relative():
    # scaling all rate constants scales flows; the verdict must not change
    from crnqp.network import parse_network

    big = parse_network("A <-> 0, k=1e6, k=1e6")
    rep = complex_balance_residuals(big, [1.0 + 1e-12])
    assert rep.balanced
    assert not complex_balance_residuals(big, [1.0 + 1e-6]).balanced


def test_lyapunov_V_values():
    assert lyapunov_V([1.0], [1.0]) == 0.0
    assert np.allclose(grad_V([1.0], [1.0]), 0.0)
    assert lyapunov_V(1.0, 2.0) == pytest.approx(2 * math.log(2) - 1)
    assert lyapunov_V([1, 1], [0.5, 1.5]) == pytest.approx(0.26162, abs=1e-5)
    # boundary terms contribute c_i
    assert lyapunov_V([2.0, 1.0], [0.0, 1.0]) == pytest.approx(2.0)


def test_grad_V_boundary_error_names_species():
    with pytest.raises(InputError, match="A2"):
        grad_V([1.0, 1.0], [1.0, 0.0], species=("A1", "A2"))


def test_hjb_residual_examples(bd, anderson):
    for x in np.geomspace(0.05, 20, 30):
        assert abs(hjb_residual(bd, np.log, [x])) < 1e-12
        r = hjb_residual(anderson, lambda y: np.log(y / 2), [x])
        assert r == pytest.approx((x / 2 - 1) ** 2, abs=1e-10)


def test_hjb_residual_rejects_boundary(bd):
    with pytest.raises(InputError):
        hjb_residual(bd, np.log, [0.0])


@pytest.mark.parametrize("ex", CORPUS, ids=lambda e: e.name)
def test_balanced_iff_V_solves_hjb(ex):
    net = ex.network
    balanced, rep = is_complex_balanced_network(net, ex.x0)
    c = rep.c
    grid = class_interior_grid(net, c, 100)
    cls = compatibility_class(net, c)
    assert all(cls.contains(x, 1e-9) and np.all(x > 0) for x in grid)
    grad = horn_jackson_gradient(net, c)
    worst = max(abs(hjb_residual(net, grad, x)) for x in grid)
    assert (worst < 1e-9) == balanced == ex.complex_balanced


@pytest.mark.parametrize("ex", CORPUS, ids=lambda e: e.name)
def test_monomial_separation(ex):
    net = ex.network
    c = find_steady_state(net, ex.x0).c
    fit = monomial_fit(net, c, class_interior_grid(net, c, 100, seed=3))
    if not fit.separated:
        pytest.skip("grid cannot separate the monomials in this class")
    assert fit.max_error < 1e-6


@pytest.mark.parametrize("ex", [e for e in CORPUS if e.complex_balanced], ids=lambda e: e.name)
def test_lyapunov_descent(ex):
    net = ex.network
    c = find_steady_state(net, ex.x0).c
    for x in class_interior_grid(net, c, 100, seed=9):
        val = grad_V(c, x) @ drift(net, x)
        assert val <= 1e-12
        if np.linalg.norm(x - c) > 1e-3:
            assert val < 0


@pytest.mark.parametrize("ex", [e for e in CORPUS if e.complex_balanced], ids=lambda e: e.name)
def test_complex_balance_implies_steady_state(ex):
    net = ex.network
    c = find_steady_state(net, ex.x0).c
    assert complex_balance_residuals(net, c).balanced
    assert np.abs(drift(net, c)).max() < 1e-10


def test_verdicts(bd, anderson):
    ok, rep = is_complex_balanced_network(bd, [3.0])
    assert ok and rep.c[0] == pytest.approx(1.0)
    ok, rep = is_complex_balanced_network(anderson, [1.0])
    assert not ok and rep.max_residual == pytest.approx(2.0)
    ok, rep = is_complex_balanced_network(BY_NAME["three_species"].network, [1, 1, 1])
    assert ok and np.allclose(rep.c, 1.0)


def test_oracle_ell_matches():
    assert lyapunov_V([1.0], [0.5]) == pytest.approx(oracles.ell(0.5), abs=1e-15)
