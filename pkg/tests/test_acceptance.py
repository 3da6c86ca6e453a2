"""One test per acceptance criterion; each records a PASS/FAIL line."""

import math

import numpy as np
import pytest

import oracles
from crnqp.balance import (
    class_interior_grid,
    complex_balance_residuals,
    hjb_residual,
    horn_jackson_gradient,
    is_complex_balanced_network,
)
from crnqp.corpus import BY_NAME, CORPUS
from crnqp.dynamics import find_steady_state, integrate_hamilton, integrate_ode
from crnqp.hamiltonian import drift, eval_H, hamiltonian, lagrangian, lagrangian_primal
from crnqp.network import conserved_vectors, is_weakly_reversible, stoichiometric_basis
from crnqp.quasipot import (
    ActionProblem,
    PolytopeSpec,
    birth_death_Q,
    compare_Q_to_kahler,
    estimate_quasipotential,
    kahler_hessian,
    minimum_action,
    solve_1d_zero_level,
)
from crnqp.stochastic import (
    product_form_stationary,
    scaled_log_limit,
    ssa_ensemble,
    stationary_truncated,
)

L_BD_1_1 = 0.24514384755981378  # bisection oracle, frozen
STATED_L_BD_1_1 = 0.24517


def test_c01_guiding_hamiltonian(bd, verdict):
    xs = np.linspace(0.0, 4.0, 10)
    ps = np.linspace(-2.0, 2.0, 10)
    err = max(abs(eval_H(bd, [x], [p]).value - (x * math.expm1(-p) + math.expm1(p))) for x in xs for p in ps)
    derr = max(abs(drift(bd, [x])[0] - (1 - x)) for x in xs)
    verdict(1, "H(x,p) and drift for A<->0", err < 1e-14 and derr < 1e-14, f"H err {err:.1e}, drift err {derr:.1e}")


def test_c02_hjb_identity(bd, verdict):
    xs = np.geomspace(0.05, 20, 100)
    worst = max(abs(eval_H(bd, [x], [math.log(x)]).value) for x in xs)
    verdict(2, "|H(x, ln x)| on [0.05, 20]", worst < 1e-12, f"max {worst:.1e}")


def test_c03_complex_balance_forward(verdict):
    worst_res, worst_hjb = 0.0, 0.0
    for name in ("isomer", "three_species"):
        ex = BY_NAME[name]
        c = find_steady_state(ex.network, ex.x0).c
        rep = complex_balance_residuals(ex.network, c)
        worst_res = max(worst_res, rep.max_residual)
        grad = horn_jackson_gradient(ex.network, c)
        grid = class_interior_grid(ex.network, c, 100)
        worst_hjb = max(worst_hjb, max(abs(hjb_residual(ex.network, grad, x)) for x in grid))
    ok = worst_res < 1e-12 and worst_hjb < 1e-10
    verdict(3, "complex balance => HJB solved by V", ok, f"residual {worst_res:.1e}, HJB {worst_hjb:.1e}")


def test_c04_complex_balance_reverse(anderson, verdict):
    xs = np.geomspace(0.05, 20, 100)
    err = max(abs(hjb_residual(anderson, lambda y: np.log(y / 2), [x]) - (x / 2 - 1) ** 2) for x in xs)
    balanced, rep = is_complex_balanced_network(anderson, [1.0])
    ok = err < 1e-10 and not balanced and abs(rep.c[0] - 2) < 1e-9
    verdict(4, "A->0->2A: H(x, ln(x/2)) = (x/2-1)^2, not balanced", ok, f"err {err:.1e}, balanced={balanced}")


def test_c05_example_13(anderson, verdict):
    qp = solve_1d_zero_level(anderson, 2.0)
    xs = np.linspace(0.1, 10, 200)
    err = float(np.abs(qp.p_branch(xs) - (np.log(np.sqrt(1 + 4 * xs) - 1) - math.log(2))).max())
    verdict(5, "zero-level branch for A->0->2A", err < 1e-9, f"max err {err:.1e}")


def test_c06_birth_death_formula(bd, verdict):
    err = max(abs(birth_death_Q(bd, 1.0, x) - (x * math.log(x) - x + 1)) for x in (0.25, 0.5, 2, 3, 5))
    verdict(6, "birth-death Q = x ln x - x + 1", err < 1e-8, f"max err {err:.1e}")


def test_c07_invariant_measure_limit(bd, verdict):
    from scipy.stats import poisson

    dist = stationary_truncated(bd, 10, [80])
    k = np.arange(81)
    ref = poisson.pmf(k, 10) / poisson.cdf(80, 10)
    tv = 0.5 * float(np.abs(dist.prob[np.argsort(dist.counts[:, 0])] - ref).sum())
    big = product_form_stationary(bd, 10_000, [1.0], caps=[30_000])
    errs = [abs(scaled_log_limit(big, [x]) - oracles.ell(x)) for x in (0.5, 2.0)]
    ok = tv < 1e-8 and max(errs) < 5e-3
    verdict(7, "stationary law and -log(pi)/n -> ell", ok, f"TV {tv:.1e}, limit err {max(errs):.1e}")


@pytest.mark.slow
def test_c08_law_of_large_numbers(bd, verdict):
    paths = ssa_ensemble(bd, 1000, [3.0], 5.0, seeds=range(200), workers=4)
    devs = np.array([p.sup_deviation(lambda t: 1 + 2 * np.exp(-t)) for p in paths])
    frac = float(np.mean(devs < 0.3))
    verdict(8, "SSA n=1000 tracks 1+2e^-t", frac >= 0.95, f"{frac:.1%} of 200 runs within 0.3, worst {devs.max():.3f}")


def test_c09_lagrangian_duality(bd, verdict):
    rng = np.random.default_rng(2024)
    worst, finite = 0.0, 0
    for _ in range(500):
        ex = CORPUS[rng.integers(len(CORPUS))]
        net = ex.network
        B = stoichiometric_basis(net).basis
        x = rng.uniform(0.1, 3.0, net.d)
        beta = rng.normal(scale=1.5, size=B.shape[0]) @ B
        dual = lagrangian(net, x, beta).value
        primal = lagrangian_primal(net, x, beta).value
        if math.isinf(dual) or math.isinf(primal):
            assert dual == primal
            continue
        finite += 1
        worst = max(worst, abs(dual - primal))
    L = lagrangian(bd, [1.0], [1.0]).value
    ok = worst < 1e-8 and abs(L - L_BD_1_1) < 1e-5
    detail = f"gap {worst:.1e} over {finite} finite draws, L(1,1) = {L:.8f}; stated 0.24517 differs by {abs(L - STATED_L_BD_1_1):.1e}"
    verdict(9, "primal-dual Lagrangian agreement", ok, detail)


def test_c10_energy_and_symplectic(bd, verdict):
    path = integrate_hamilton(bd, [1.0], [1.0], 10.0, tol=1e-10)
    H = hamiltonian(bd, path.states, path.momenta)
    drift_H = float(np.abs(H - H[0]).max())
    X, P = np.meshgrid(np.linspace(-0.9, 3, 60), np.linspace(-0.89, 3, 60))
    lhs = hamiltonian(bd, ((X + 1) * (P + 1))[..., None], np.log(P + 1)[..., None])
    sym = float(np.abs(lhs + X * P).max())
    verdict(10, "energy conservation and symplectic identity", drift_H < 1e-8 and sym < 1e-12, f"H drift {drift_H:.1e}, identity {sym:.1e}")


@pytest.mark.slow
def test_c11_minimum_action(bd, verdict):
    est = estimate_quasipotential(bd, [1.0], [2.0], workers=3)
    rel = abs(est.value - 0.38629) / 0.38629
    downhill = []
    for x0, T in ((2.0, 3.0), (0.4, 2.0)):
        end = integrate_ode(bd, [x0], T, tol=1e-12).states[-1]
        downhill.append(minimum_action(bd, ActionProblem([x0], end, T, 64))[1])
    ok = rel < 5e-2 and max(downhill) < 1e-3
    verdict(11, "minimum action Q(1->2) and downhill cost", ok, f"Q = {est.value:.5f} (rel {rel:.1e}), downhill max {max(downhill):.1e}")


def test_c12_kahler(verdict):
    interval = PolytopeSpec((((1,), -1.0), ((-1,), -1.0)))
    simplex = PolytopeSpec((((1, 0), 0.0), ((0, 1), 0.0), ((-1, -1), -3.0)))
    one = compare_Q_to_kahler(BY_NAME["isomer"].network, [1, 1], interval, ([[-1.0], [1.0]], [1.0, 1.0]))
    two = compare_Q_to_kahler(
        BY_NAME["three_species"].network, [1, 1, 1], simplex, ([[1, 0], [0, 1], [-1, -1]], [0, 0, 3])
    )
    eig = min(
        float(np.linalg.eigvalsh(kahler_hessian(s, y)).min()) for s in (interval, simplex) for y in s.sample_interior(50, seed=5)
    )
    dev = max(one.max_deviation, two.max_deviation)
    verdict(12, "Q vs Kahler potential on both polytopes", dev < 1e-10 and eig > 0, f"deviation {dev:.1e}, min Hessian eig {eig:.2e}")


def test_c13_property_suites(verdict):
    rng = np.random.default_rng(7)
    h = 1e-6
    grad_err = 0.0
    cons_err = 0.0
    implication = True
    for ex in CORPUS:
        net = ex.network
        for _ in range(20):
            x = rng.uniform(0.2, 3.0, net.d)
            p = rng.uniform(-1.0, 1.0, net.d)
            ev = eval_H(net, x, p)
            E = np.eye(net.d)
            gx = np.array([(eval_H(net, x + h * e, p).value - eval_H(net, x - h * e, p).value) / (2 * h) for e in E])
            gp = np.array([(eval_H(net, x, p + h * e).value - eval_H(net, x, p - h * e).value) / (2 * h) for e in E])
            scale = 1 + np.abs(np.r_[gx, gp]).max()
            grad_err = max(grad_err, np.abs(np.r_[ev.grad_x - gx, ev.grad_p - gp]).max() / scale)
        W = conserved_vectors(net)
        if W.shape[0]:
            x0 = np.asarray(ex.x0, dtype=float) + 0.2
            traj = integrate_ode(net, x0, 5.0, tol=1e-10)
            cons_err = max(cons_err, float(np.abs(traj.states @ W.T - W @ x0).max()))
        balanced, _ = is_complex_balanced_network(net, ex.x0)
        if balanced and not is_weakly_reversible(net):
            implication = False
    ok = grad_err < 1e-6 and cons_err < 1e-9 and implication
    verdict(13, "gradients, conservation, balanced => weakly reversible", ok, f"grad err {grad_err:.1e}, conservation err {cons_err:.1e}")
