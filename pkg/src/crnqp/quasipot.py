"""Quasipotentials: 1D algebraic solutions, minimum action, shooting, Kahler comparison.

One-dimensional networks are solved exactly. Substituting y = exp(p) turns
y**m H(x, log y) into a polynomial in y whose positive roots are the zero
level set. Everywhere else the quasipotential is estimated by minimizing the
discretized action over a ladder of horizons.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import linprog, minimize

from .balance import complex_balance_residuals, lyapunov_V
from .dynamics import Path, dopri45, integrate_hamilton, integrate_ode
from .errors import (
    BoundaryContactError,
    BranchError,
    InputError,
    NonConvergenceError,
    NotComplexBalancedError,
    NumericalError,
    QuadratureSingularityError,
    ShootingDivergenceError,
)
from .hamiltonian import (
    _monomials_batch,
    drift,
    eval_H,
    hamiltonian,
    intensity_jacobian,
    lagrangian_batch,
    path_cost,
)
from .network import Network, compatibility_class, stoichiometric_basis

QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)

# --------------------------------------------------------------------------
# one dimension, exact


def _require_1d(net: Network) -> np.ndarray:
    if net.d != 1:
        raise InputError(f"one-dimensional solver called on a network with {net.d} species")
    return net.zeta[:, 0].astype(int)


def zero_level_polynomial(net: Network, x: float, energy: float = 0.0) -> np.ndarray:
    """Coefficients (highest power first) of y**m (H(x, log y) - energy)."""
    z = _require_1d(net)
    m = max(0, -int(z.min()))
    deg = int(z.max()) + m
    coef = np.zeros(max(deg, m) + 1)
    lam = net.mass_action(np.array([x]))
    for zr, lr in zip(z, lam):
        coef[zr + m] += lr
        coef[m] -= lr
    coef[m] -= energy
    return coef[::-1]


def _positive_roots(coef: np.ndarray) -> np.ndarray:
    coef = np.trim_zeros(coef, "f")
    if coef.size < 2:
        return np.empty(0)
    r = np.roots(coef)
    r = r[(np.abs(r.imag) <= 1e-7 * np.maximum(1.0, np.abs(r))) & (r.real > 0)].real
    dcoef = np.polyder(coef)
    for _ in range(4):
        # Newton polish against the undeflated polynomial
        d = np.polyval(dcoef, r)
        ok = d != 0
        r[ok] -= np.polyval(coef, r[ok]) / d[ok]
    return np.sort(r[r > 0])


def zero_level_roots(net: Network, x: float) -> np.ndarray:
    """Positive nontrivial roots y of the zero-level polynomial at ``x``.

    The deterministic root y = 1 is removed by deflation.
    """
    q, _ = np.polydiv(zero_level_polynomial(net, x), np.array([1.0, -1.0]))
    return _positive_roots(q)


def _select(net: Network, x: float, c: float, y_ref: float | None) -> float:
    if x == c:
        return 1.0
    roots = zero_level_roots(net, x)
    adm = roots[(roots - 1.0) * (x - c) > 0]
    if adm.size == 0:
        raise BranchError(f"no admissible root of the zero-level polynomial at x={x:.10g}", x)
    if adm.size > 1:
        gaps = np.diff(np.sort(adm))
        if np.any(gaps < 1e-8):
            raise BranchError(f"branch crossing at x={x:.10g}: roots {adm}", x)
        if y_ref is None:
            raise BranchError(f"{adm.size} admissible roots at x={x:.10g} and no branch to continue", x)
        return float(adm[np.argmin(np.abs(np.log(adm) - np.log(y_ref)))])
    return float(adm[0])


@dataclass
class Quasipotential1D:
    """Selected branch p(x) = log y(x) of the zero level set, and its integral Q."""

    net: Network
    c: float
    grid: np.ndarray
    p_grid: np.ndarray

    def p_branch(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        ref = np.exp(np.interp(np.log(xs), np.log(self.grid), self.p_grid))
        out = np.array([np.log(_select(self.net, xi, self.c, yr)) for xi, yr in zip(xs, ref)])
        return out if np.ndim(x) else float(out[0])

    p = p_branch

    def Q(self, x) -> float:
        val, _ = quad(lambda s: self.p_branch(s), self.c, float(x), **QUAD_OPTS)
        return float(val)

    def grad(self, x) -> np.ndarray:
        return np.atleast_1d(self.p_branch(float(np.asarray(x).reshape(-1)[0])))

    def residual(self) -> float:
        """max |H(x, p(x))| over the grid."""
        return float(np.max(np.abs(hamiltonian(self.net, self.grid[:, None], self.p_grid[:, None]))))


def solve_1d_zero_level(net: Network, c: float, grid=None) -> Quasipotential1D:
    """Follow the nontrivial zero-level branch through ``c`` across ``grid``.

    The branch is traced outward from c in both directions, at each point
    taking the admissible root ((y - 1)(x - c) > 0) nearest the previous one.
    """
    _require_1d(net)
    c = float(np.asarray(c).reshape(-1)[0])
    if not c > 0:
        raise InputError("c must be positive")
    if abs(drift(net, [c])[0]) > 1e-9 * max(1.0, c):
        raise InputError(f"c={c} is not a steady state (drift {drift(net, [c])[0]:.3g})")
    xs = np.geomspace(c / 50, c * 50, 401) if grid is None else np.asarray(grid, dtype=float).ravel()
    if np.any(xs <= 0):
        raise InputError("grid must be strictly positive")
    xs = np.unique(np.append(xs, c))
    ys = np.empty_like(xs)
    k0 = int(np.searchsorted(xs, c))
    ys[k0] = 1.0
    for order in (range(k0 + 1, xs.size), range(k0 - 1, -1, -1)):
        prev = None
        for k in order:
            ys[k] = _select(net, xs[k], c, prev)
            prev = ys[k]
    return Quasipotential1D(net, c, xs, np.log(ys))


def _birth_death_parts(net: Network):
    z = _require_1d(net)
    if np.any(np.abs(z) != 1):
        raise InputError("birth-death formula needs every reaction to change the count by one")
    up = z == 1
    a = net.sources[:, 0]
    A = lambda s: float(np.sum(net.kappa[up] * s ** a[up]))
    B = lambda s: float(np.sum(net.kappa[~up] * s ** a[~up]))
    return A, B


def birth_death_gradient(net: Network, x: float) -> float:
    A, B = _birth_death_parts(net)
    return float(np.log(B(x) / A(x)))


def birth_death_Q(net: Network, c: float, x: float) -> float:
    """Q(c, x) = integral from c to x of log(B(s) / A(s)).

    A collects the birth intensities and B the death intensities.
    """
    A, B = _birth_death_parts(net)
    c = float(c)
    x = float(x)
    lo, hi = min(c, x), max(c, x)
    for s in (lo, hi):
        if A(s) <= 0 or B(s) <= 0:
            raise QuadratureSingularityError(f"log(B/A) is singular at s={s:g} (A={A(s):g}, B={B(s):g})")
    val, _ = quad(lambda s: np.log(B(s) / A(s)), c, x, **QUAD_OPTS)
    return float(val)


# --------------------------------------------------------------------------
# minimum action


@dataclass
class ActionProblem:
    start: np.ndarray
    end: np.ndarray
    T: float
    N: int = 64
    path: Path | None = None
    value: float | None = None

    def __post_init__(self):
        self.start = np.atleast_1d(np.asarray(self.start, dtype=float))
        self.end = np.atleast_1d(np.asarray(self.end, dtype=float))
        if self.start.shape != self.end.shape:
            raise InputError("start and end have different dimensions")
        if not self.T > 0:
            raise InputError("T must be positive")
        if self.N < 16:
            raise InputError("N must be at least 16")


def _dxH_batch(net: Network, X: np.ndarray, P: np.ndarray) -> np.ndarray:
    lam = net.kappa * _monomials_batch(X, net.sources)
    E = np.expm1(P @ net.zeta.T.astype(float))
    w = lam * E
    return (w @ net.sources.astype(float)) / X


class _ActionObjective:
    BIG = 1e6

    def __init__(self, net: Network, prob: ActionProblem, B: np.ndarray):
        self.net = net
        self.prob = prob
        self.B = B
        self.dt = prob.T / prob.N

    def nodes(self, y: np.ndarray) -> np.ndarray:
        k = self.B.shape[0]
        inner = self.prob.start + y.reshape(-1, k) @ self.B
        return np.vstack([self.prob.start, inner, self.prob.end])

    def __call__(self, y: np.ndarray):
        X = self.nodes(y)
        dt = self.dt
        M = 0.5 * (X[1:] + X[:-1])
        floor = 1e-10
        bad = np.minimum(X[1:-1] - floor, 0.0)
        if np.any(bad < 0) or np.any(M <= floor):
            # exterior penalty pushing nodes back into the orthant
            g = 2 * self.BIG * bad
            return self.BIG + self.BIG * float(np.sum(bad**2)), (g @ self.B.T).ravel()
        vals, P = lagrangian_batch(self.net, M, (X[1:] - X[:-1]) / dt)
        if not np.all(np.isfinite(vals)):
            return self.BIG, np.zeros_like(y)
        Lx = -_dxH_batch(self.net, M, P)
        G = 0.5 * dt * (Lx[:-1] + Lx[1:]) + P[:-1] - P[1:]
        return float(dt * vals.sum()), (G @ self.B.T).ravel()


def _initial_guesses(net: Network, prob: ActionProblem) -> dict[str, np.ndarray]:
    t = np.linspace(0.0, prob.T, prob.N + 1)
    s = (t / prob.T)[:, None]
    out = {"linear": (1 - s) * prob.start + s * prob.end}

    def resample(path: Path, reverse: bool) -> np.ndarray:
        tt = prob.T - t if reverse else t
        return np.stack([np.interp(tt, path.times, path.states[:, i]) for i in range(net.d)], axis=1)

    try:
        # run the flow from the end point and play it backwards, then bend
        # the first node onto the start so both endpoints are pinned
        rev = resample(integrate_ode(net, prob.end, prob.T), reverse=True)
        out["reversed_flow"] = rev + (1 - s) * (prob.start - rev[0])
        fwd = resample(integrate_ode(net, prob.start, prob.T), reverse=False)
        out["forward_flow"] = fwd + s * (prob.end - fwd[-1])
    except NumericalError:
        pass
    return {k: v for k, v in out.items() if np.all(v[1:-1] > 0)}


def minimum_action(
    net: Network,
    problem: ActionProblem,
    max_iter: int = 3000,
    gtol: float = 1e-8,
    workers: int = 1,
) -> tuple[Path, float]:
    """Minimize the midpoint-discretized action with L-BFGS-B.

    Gradients are analytic: the dual momentum p* at each segment gives both
    the velocity derivative (p*) and the state derivative (-D_x H(x, p*)).
    The best result over the multistarts is returned; the path's ``meta``
    records which start won and whether the optimizer converged.
    """
    cls = compatibility_class(net, problem.start)
    if not cls.contains(problem.end, tol=1e-9):
        raise InputError("start and end lie in different compatibility classes")
    if np.any(problem.start <= 0) or np.any(problem.end <= 0):
        raise InputError("minimum_action needs interior endpoints")
    t = np.linspace(0.0, problem.T, problem.N + 1)
    if np.allclose(problem.start, problem.end, rtol=0, atol=1e-14) and np.allclose(drift(net, problem.start), 0, atol=1e-12):
        X = np.tile(problem.start, (problem.N + 1, 1))
        path = Path(t, X, meta={"start": "constant", "converged": True, "T": problem.T})
        problem.path, problem.value = path, 0.0
        return path, 0.0
    B = stoichiometric_basis(net).basis
    obj = _ActionObjective(net, problem, B)

    def run(item):
        name, X0 = item
        y0 = ((X0[1:-1] - problem.start) @ B.T).ravel()
        res = minimize(obj, y0, jac=True, method="L-BFGS-B", options={"maxiter": max_iter, "gtol": gtol, "ftol": 1e-15})
        return name, res

    guesses = _initial_guesses(net, problem)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, guesses.items()))
    else:
        results = [run(g) for g in guesses.items()]
    name, best = min(results, key=lambda r: r[1].fun)
    X = obj.nodes(best.x)
    if np.any(X[1:-1] <= 1e-8):
        raise BoundaryContactError(f"optimal path touches the boundary (min node {X[1:-1].min():.3g})")
    gnorm = float(np.abs(best.jac).max())
    converged = bool(best.success) or gnorm < 1e-6
    if not converged:
        if gnorm > 1e-3:
            raise NonConvergenceError(f"action minimization stalled: |grad| = {gnorm:.3g} after {best.nit} iterations")
        warnings.warn(f"action minimization at T={problem.T}: {best.message}", RuntimeWarning)
    path = Path(
        t,
        X,
        meta={"start": name, "converged": converged, "grad_norm": gnorm, "iterations": int(best.nit), "T": problem.T},
    )
    problem.path, problem.value = path, float(best.fun)
    return path, float(best.fun)


@dataclass
class QuasipotentialEstimate:
    value: float
    by_T: dict[float, float]
    path: Path

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "ladder": [{"T": T, "action": v} for T, v in self.by_T.items()],
            "best_T": float(self.path.meta["T"]),
            "start": self.path.meta.get("start"),
        }


def estimate_quasipotential(net: Network, c, x, ladder=(2.0, 5.0, 10.0, 20.0), N: int = 64, workers: int = 1):
    """min over T in ``ladder`` of the minimum action from c to x."""
    by_T = {}
    best = None
    for T in ladder:
        path, val = minimum_action(net, ActionProblem(c, x, T, N), workers=workers)
        by_T[float(T)] = val
        if best is None or val < best[1]:
            best = (path, val)
    return QuasipotentialEstimate(best[1], by_T, best[0])


# --------------------------------------------------------------------------
# Hamiltonian boundary-value shooting


def _hessian_lambda(net: Network, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Second derivatives of the mass-action intensities, shape (R, d, d)."""
    a = net.sources.astype(float)
    H = a[:, :, None] * a[:, None, :] - np.einsum("ri,ij->rij", a, np.eye(net.d))
    return H * lam[:, None, None] / np.outer(x, x)[None]


def _variational_rhs(net: Network, k: int):
    d = net.d
    Z = net.zeta.astype(float)

    def f(t, z):
        x, p = z[:d], z[d : 2 * d]
        if np.any(x <= 0):
            return np.full(z.size, np.nan)
        Phi = z[2 * d :].reshape(2 * d, k)
        s = Z @ p
        e = np.exp(s)
        lam = net.mass_action(x)
        J = intensity_jacobian(net, x)
        dx = Z.T @ (lam * e)
        dp = -J.T @ np.expm1(s)
        A = np.zeros((2 * d, 2 * d))
        A[:d, :d] = Z.T @ (e[:, None] * J)
        A[:d, d:] = Z.T @ ((lam * e)[:, None] * Z)
        A[d:, :d] = -np.einsum("r,rij->ij", np.expm1(s), _hessian_lambda(net, x, lam))
        A[d:, d:] = -J.T @ (e[:, None] * Z)
        return np.concatenate([dx, dp, (A @ Phi).ravel()])

    return f


def _shoot_once(net, x0, p0, T, B, tol):
    d, k = net.d, B.shape[0]
    z0 = np.concatenate([x0, p0, np.vstack([np.zeros((d, k)), B.T]).ravel()])
    _, zs = dopri45(_variational_rhs(net, k), 0.0, z0, T, tol)
    zT = zs[-1]
    if not np.all(np.isfinite(zT)) or np.any(zT[:d] <= 0):
        raise NumericalError("trajectory left the orthant")
    return zT[:d], zT[2 * d :].reshape(2 * d, k)[:d]


def hamiltonian_bvp_shoot(
    net: Network,
    x_start,
    x_end,
    T: float,
    p0_guess=None,
    max_iter: int = 60,
    tol: float = 1e-9,
    ode_tol: float = 1e-11,
) -> Path:
    """Find p0 with x(T; x_start, p0) = x_end by damped Newton.

    The Jacobian d x(T) / d p0 comes from the variational equations, so it
    stays accurate even when the sensitivity grows like exp(T) near a
    hyperbolic steady state. Momenta are sought in the stoichiometric
    subspace since H is blind to the conserved directions.
    """
    x_start = np.atleast_1d(np.asarray(x_start, dtype=float))
    x_end = np.atleast_1d(np.asarray(x_end, dtype=float))
    if np.any(x_start <= 0) or np.any(x_end <= 0):
        raise InputError("shooting needs interior endpoints")
    if not compatibility_class(net, x_start).contains(x_end, tol=1e-9):
        raise InputError("x_end is not in the compatibility class of x_start")
    B = stoichiometric_basis(net).basis
    scale = max(1.0, float(np.abs(x_end).max()))
    q = np.zeros(B.shape[0]) if p0_guess is None else B @ np.atleast_1d(np.asarray(p0_guess, dtype=float))
    best = (np.inf, B.T @ q)

    def mismatch(q):
        try:
            xT, Jx = _shoot_once(net, x_start, B.T @ q, T, B, ode_tol)
        except NumericalError:
            return None, None
        return B @ (xT - x_end), B @ Jx

    F, J = mismatch(q)
    if F is None:
        raise ShootingDivergenceError("initial guess leaves the orthant", np.inf, B.T @ q)
    for _ in range(max_iter):
        norm = float(np.linalg.norm(F))
        if norm < best[0]:
            best = (norm, B.T @ q)
        if norm <= tol * scale:
            break
        try:
            dq = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            dq = np.linalg.lstsq(J, -F, rcond=None)[0]
        step = 1.0
        while step > 1e-10:
            Fn, Jn = mismatch(q + step * dq)
            if Fn is not None and np.linalg.norm(Fn) < norm:
                break
            step *= 0.5
        else:
            raise ShootingDivergenceError(
                f"shooting stalled: |x(T) - x_end| = {best[0]:.3g}", best[0], best[1]
            )
        q, F, J = q + step * dq, Fn, Jn
    else:
        raise ShootingDivergenceError(f"no convergence in {max_iter} Newton steps; best mismatch {best[0]:.3g}", *best)
    p0 = B.T @ q
    path = integrate_hamilton(net, x_start, p0, T, tol=ode_tol * 10, max_step=T / 400)
    path.meta.update({"mode": "shoot", "p0": p0.tolist(), "mismatch": float(np.linalg.norm(F)), "cost": path_cost(net, path)})
    return path


# --------------------------------------------------------------------------
# Lyapunov verification


@dataclass(frozen=True)
class LyapunovReport:
    passed: bool
    Q_at_c: float
    min_Q_off_c: float
    max_descent: float
    max_descent_off_c: float
    worst_point: np.ndarray
    reason: str

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("passed", "Q_at_c", "min_Q_off_c", "max_descent", "max_descent_off_c", "reason")}
        d["worst_point"] = np.asarray(self.worst_point).tolist()
        return d


def verify_lyapunov(net: Network, Q, gradQ, c, grid, tol: float = 1e-10, near: float = 1e-3) -> LyapunovReport:
    """Check Q(c) = 0, Q > 0 elsewhere, and <DQ, drift> <= 0 with equality only at c.

    Points within ``near * max(1, |c|)`` of c are exempt from the strict
    conditions.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.shape[1] != c.size:
        pts = pts.reshape(-1, c.size)
    radius = near * max(1.0, float(np.linalg.norm(c)))
    Qc = float(Q(c))
    qs = np.array([float(Q(x)) for x in pts])
    desc = np.array([float(np.dot(gradQ(x), drift(net, x))) for x in pts])
    far = np.linalg.norm(pts - c, axis=1) > radius
    min_q = float(qs[far].min()) if far.any() else np.inf
    max_far = float(desc[far].max()) if far.any() else -np.inf
    reasons = []
    if abs(Qc) > 1e-8:
        reasons.append(f"Q(c) = {Qc:.3g}")
    if min_q <= 0:
        reasons.append("Q not positive off c")
    if desc.max() > tol:
        reasons.append(f"ascent {desc.max():.3g} along the flow")
    if max_far >= 0:
        reasons.append("descent vanishes away from c")
    worst = pts[int(np.argmax(desc))]
    return LyapunovReport(not reasons, Qc, min_q, float(desc.max()), max_far, worst, "; ".join(reasons) or "ok")


# --------------------------------------------------------------------------
# Kahler potentials of polytopes


@dataclass(frozen=True)
class PolytopeSpec:
    """{y : <mu_i, y> - lambda_i >= 0 for every facet i}."""

    facets: tuple[tuple[tuple[float, ...], float], ...]
    dimension: int = field(init=False)

    def __post_init__(self):
        facets = tuple((tuple(float(v) for v in np.atleast_1d(mu)), float(lam)) for mu, lam in self.facets)
        if not facets:
            raise InputError("a polytope needs at least one facet")
        dims = {len(mu) for mu, _ in facets}
        if len(dims) != 1:
            raise InputError("facet normals have inconsistent dimensions")
        object.__setattr__(self, "facets", facets)
        object.__setattr__(self, "dimension", dims.pop())
        if self.interior_point() is None:
            raise InputError("polytope has an empty interior")

    @property
    def mu(self) -> np.ndarray:
        return np.array([m for m, _ in self.facets])

    @property
    def lam(self) -> np.ndarray:
        return np.array([l for _, l in self.facets])

    def a(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return y @ self.mu.T - self.lam

    def interior_point(self) -> np.ndarray | None:
        """Chebyshev center, or None if no ball of positive radius fits."""
        mu = self.mu
        norms = np.linalg.norm(mu, axis=1)
        k = self.dimension
        res = linprog(
            np.r_[np.zeros(k), -1.0],
            A_ub=np.hstack([-mu, norms[:, None]]),
            b_ub=-self.lam,
            bounds=[(None, None)] * k + [(0, 1e6)],
            method="highs",
        )
        if res.status != 0 or res.x[-1] <= 1e-12:
            return None
        return res.x[:k]

    def sample_interior(self, m: int, seed: int = 0, margin: float = 0.02) -> np.ndarray:
        """Points on random rays from the center, kept ``margin`` away from facets."""
        rng = np.random.default_rng(seed)
        y0 = self.interior_point()
        mu, a0 = self.mu, self.a(y0)
        out = np.empty((m, self.dimension))
        for j in range(m):
            v = rng.standard_normal(self.dimension)
            v /= np.linalg.norm(v)
            rate = mu @ v
            neg = rate < 0
            t_max = np.min(-a0[neg] / rate[neg]) if neg.any() else 10.0
            out[j] = y0 + rng.uniform(0, 1 - margin) * t_max * v
        return out


def _check_inside(spec: PolytopeSpec, y) -> np.ndarray:
    a = spec.a(np.atleast_1d(np.asarray(y, dtype=float)))
    if np.any(a <= 0):
        raise InputError(f"point {y} is on or outside facet(s) {np.flatnonzero(a <= 0).tolist()}")
    return a


def kahler_potential(spec: PolytopeSpec, y) -> float:
    """g_P(y) = sum_i a_i(y) log a_i(y) (no overall factor)."""
    a = _check_inside(spec, y)
    return float(np.sum(a * np.log(a)))


def kahler_gradient(spec: PolytopeSpec, y) -> np.ndarray:
    a = _check_inside(spec, y)
    return spec.mu.T @ (np.log(a) + 1.0)


def kahler_hessian(spec: PolytopeSpec, y) -> np.ndarray:
    a = _check_inside(spec, y)
    mu = spec.mu
    return mu.T @ (mu / a[:, None])


@dataclass(frozen=True)
class KahlerComparison:
    scale: float
    offset: float
    max_deviation: float
    min_hessian_eig: float
    points: np.ndarray

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "offset": self.offset,
            "max_deviation": self.max_deviation,
            "min_hessian_eig": self.min_hessian_eig,
            "n_points": int(self.points.shape[0]),
        }


def compare_Q_to_kahler(net: Network, c, spec: PolytopeSpec, chart, m: int = 50, seed: int = 0) -> KahlerComparison:
    """Fit Q(x(y)) ~ s g_P(y) + t over interior points of P.

    ``chart`` is a pair (A, b) with x(y) = A y + b. On a complex-balanced
    network Q is the Horn-Jackson function V(c, .).
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if not complex_balance_residuals(net, c).balanced:
        raise NotComplexBalancedError("Kahler comparison needs a complex-balanced steady state")
    A, b = chart
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(net.d, spec.dimension)
    b = np.asarray(b, dtype=float).reshape(net.d)
    if np.linalg.matrix_rank(A) < spec.dimension:
        raise InputError("chart is degenerate: it collapses the polytope")
    Y = spec.sample_interior(m, seed)
    X = Y @ A.T + b
    cls = compatibility_class(net, c)
    for x in X:
        if not cls.contains(x, tol=1e-9):
            raise InputError(f"chart image {x} leaves the compatibility class of c")
        if np.any(x <= 0):
            raise InputError(f"chart image {x} leaves the positive orthant")
    q = np.array([lyapunov_V(c, x) for x in X])
    g = np.array([kahler_potential(spec, y) for y in Y])
    M = np.column_stack([g, np.ones_like(g)])
    (s, t), *_ = np.linalg.lstsq(M, q, rcond=None)
    dev = float(np.max(np.abs(q - s * g - t)))
    eig = min(float(np.linalg.eigvalsh(kahler_hessian(spec, y)).min()) for y in Y)
    return KahlerComparison(float(s), float(t), dev, eig, Y)


# --------------------------------------------------------------------------
# level sets


def hamiltonian_level_sets(net: Network, energies, xs) -> np.ndarray:
    """Rows (E, x, p, branch) on {H = E} for a one-dimensional network.

    At each x the positive roots y of y**m (H(x, log y) - E) are found
    exactly; branch numbers count roots from the smallest p upward.
    """
    rows = []
    for E in np.atleast_1d(np.asarray(energies, dtype=float)):
        for x in np.atleast_1d(np.asarray(xs, dtype=float)):
            if x < 0:
                raise InputError("level sets need x >= 0")
            for j, y in enumerate(_positive_roots(zero_level_polynomial(net, x, E))):
                rows.append((E, x, float(np.log(y)), j))
    return np.array(rows, dtype=float).reshape(-1, 4)
