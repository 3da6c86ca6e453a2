"""Mass-action Hamiltonian, drift, and the Legendre-dual Lagrangian.

The Hamiltonian of a network is

    H(x, p) = sum_r kappa_r x**a_r (exp(<zeta_r, p>) - 1)

and the Lagrangian L(x, beta) is its convex conjugate in ``p``. ``L`` is
computed from the dual (a smooth concave problem in ``p``) in the interior of
the orthant, and from the flux (primal) form on the boundary or when the
velocity sits on the boundary of the attainable cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .errors import InputError, NonConvergenceError, OverflowGuardError
from .network import Network, monomials, stoichiometric_basis

EXP_GUARD = 700.0
DIVERGENCE_NORM = 1e3


@dataclass(frozen=True)
class HamiltonianEval:
    value: float
    grad_x: np.ndarray
    grad_p: np.ndarray


@dataclass(frozen=True)
class LagrangianEval:
    """Result of a Lagrangian evaluation.

    ``reason`` is ``"dual"`` or ``"primal"`` for finite values solved in the
    interior, ``"boundary"`` when some intensity vanishes, ``"cone_boundary"``
    when the velocity is only reachable with some fluxes exactly zero, and
    one of ``"off_subspace"``, ``"outside_cone"``, ``"dual_divergence"`` when
    the value is infinite.
    """

    value: float
    dual_p: np.ndarray | None
    fluxes: np.ndarray | None
    reason: str

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value))


def _state(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (net.d,):
        raise InputError(f"state has length {x.size}, network has {net.d} species")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InputError(f"state must be finite and nonnegative, got {x}")
    return x


def _exponents(net: Network, p: np.ndarray) -> np.ndarray:
    s = net.zeta @ p
    if np.any(s > EXP_GUARD):
        raise OverflowGuardError(f"<zeta, p> = {s.max():.4g} exceeds {EXP_GUARD:g}")
    return s


def intensity_jacobian(net: Network, x: np.ndarray) -> np.ndarray:
    """d(kappa x**a)/dx, shape (R, d).

    Uses a_i x**(a - e_i) directly so that the value at x_i = 0 is the
    one-sided derivative and terms with a_i = 0 vanish.
    """
    R, d = net.sources.shape
    J = np.zeros((R, d))
    for i in range(d):
        ai = net.sources[:, i]
        act = ai > 0
        if not np.any(act):
            continue
        reduced = net.sources[act].copy()
        reduced[:, i] -= 1
        J[act, i] = net.kappa[act] * ai[act] * monomials(x, reduced)
    return J


def eval_H(net: Network, x, p) -> HamiltonianEval:
    x = _state(net, x)
    p = np.asarray(p, dtype=float).reshape(-1)
    s = _exponents(net, p)
    lam = net.mass_action(x)
    em1 = np.expm1(s)
    value = float(lam @ em1)
    grad_p = net.zeta.T @ (lam * np.exp(s))
    grad_x = intensity_jacobian(net, x).T @ em1
    return HamiltonianEval(value, grad_x, grad_p)


def hamiltonian(net: Network, x, p) -> np.ndarray:
    """Vectorized H over leading axes of ``x`` and ``p`` (last axis = species)."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    x, p = np.broadcast_arrays(x, p)
    s = p @ net.zeta.T.astype(float)
    if np.any(s > EXP_GUARD):
        raise OverflowGuardError(f"<zeta, p> = {s.max():.4g} exceeds {EXP_GUARD:g}")
    lam = net.kappa * _monomials_batch(x, net.sources)
    return np.sum(lam * np.expm1(s), axis=-1)


def _monomials_batch(x: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    out = np.ones(x.shape[:-1] + (exponents.shape[0],))
    for i in range(exponents.shape[1]):
        col = exponents[:, i]
        nz = col > 0
        if np.any(nz):
            out[..., nz] *= x[..., i : i + 1] ** col[nz]
    return out


def hessian_pp(net: Network, x, p) -> np.ndarray:
    x = _state(net, x)
    s = _exponents(net, np.asarray(p, dtype=float).reshape(-1))
    w = net.mass_action(x) * np.exp(s)
    Z = net.zeta.astype(float)
    return Z.T @ (w[:, None] * Z)


def drift(net: Network, x) -> np.ndarray:
    """Deterministic velocity sum_r kappa_r x**a_r zeta_r = D_p H(x, 0)."""
    x = _state(net, x)
    return net.zeta.T @ net.mass_action(x)


def jacobian_drift(net: Network, x) -> np.ndarray:
    x = _state(net, x)
    return net.zeta.T.astype(float) @ intensity_jacobian(net, x)


def ell(z):
    """z log z - z + 1 with ell(0) = 1."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(z > 0, z * np.log(np.where(z > 0, z, 1.0)) - z + 1.0, 1.0)
    return out if out.ndim else float(out)


def flux_cost(u: np.ndarray, lam: np.ndarray) -> float:
    """sum_r lam_r ell(u_r / lam_r), with lam = 0 forcing u = 0."""
    total = 0.0
    for ur, lr in zip(u, lam):
        if lr == 0.0:
            if ur > 0.0:
                return np.inf
            continue
        if ur == 0.0:
            total += lr
        else:
            total += ur * np.log(ur / lr) - ur + lr
    return float(total)


# --------------------------------------------------------------------------
# cone geometry


def _max_min_flux(Zt: np.ndarray, beta: np.ndarray):
    """max t s.t. Zt u = beta, u >= t, t <= 1. Returns (t, u) or (None, None)."""
    R = Zt.shape[1]
    c = np.zeros(R + 1)
    c[-1] = -1.0
    A_eq = np.hstack([Zt, np.zeros((Zt.shape[0], 1))])
    A_ub = np.hstack([-np.eye(R), np.ones((R, 1))])
    bounds = [(0, None)] * R + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(R), A_eq=A_eq, b_eq=beta, bounds=bounds, method="highs")
    if res.status != 0:
        return None, None
    return float(res.x[-1]), res.x[:R]


@lru_cache(maxsize=256)
def positively_spans(net: Network) -> bool:
    """True when the cone of reaction vectors is their whole linear span."""
    t, _ = _max_min_flux(net.zeta.T.astype(float), np.zeros(net.d))
    return t is not None and t > 1e-9


@lru_cache(maxsize=256)
def _basis(net: Network) -> np.ndarray:
    return stoichiometric_basis(net).basis


# --------------------------------------------------------------------------
# dual solver


def _dual_batch(Z, B, lam, beta, max_iter=200, tol=1e-12):
    """Maximize <p, beta> - sum lam (exp(Z p) - 1) over p = B^T q, per row.

    Z: (R, d); B: (r, d) orthonormal; lam: (N, R) positive; beta: (N, d).
    Returns values (N,), p (N, d), status (N,) with 0 converged,
    1 divergent (objective unbounded), 2 iteration cap.
    """
    N = lam.shape[0]
    r = B.shape[0]
    ZB = Z @ B.T  # (R, r)
    bq = beta @ B.T  # (N, r)
    q = np.zeros((N, r))
    status = np.full(N, 2)
    active = np.ones(N, dtype=bool)

    def objective(qq, idx):
        s = qq @ ZB.T
        with np.errstate(over="ignore"):
            bad = np.any(s > EXP_GUARD, axis=1)
            lin = np.einsum("ij,ij->i", qq, bq[idx])
            terms = lam[idx] * np.expm1(np.minimum(s, EXP_GUARD))
            f = lin - np.sum(terms, axis=1)
        f[bad] = -np.inf
        return f

    def noise(qq, idx):
        # rounding floor of the objective: near the optimum a Newton step
        # can gain less than this, and the line search must not reject it
        s = np.minimum(qq @ ZB.T, EXP_GUARD)
        mag = np.abs(np.einsum("ij,ij->i", qq, bq[idx])) + np.sum(lam[idx] * np.abs(np.expm1(s)), axis=1)
        return 64 * np.finfo(float).eps * mag

    f = objective(q, np.arange(N))
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        s = q[idx] @ ZB.T
        w = lam[idx] * np.exp(s)  # (n, R)
        g = bq[idx] - w @ ZB  # (n, r)
        Hn = np.einsum("nr,ri,rj->nij", w, ZB, ZB)  # negative Hessian, PSD
        scale = np.maximum(1.0, np.maximum(np.abs(bq[idx]).max(axis=1), w.sum(axis=1)))
        done = np.linalg.norm(g, axis=1) <= tol * scale
        if np.any(done):
            status[idx[done]] = 0
            active[idx[done]] = False
            keep = ~done
            idx, g, Hn, scale = idx[keep], g[keep], Hn[keep], scale[keep]
            if idx.size == 0:
                break
        try:
            step = np.linalg.solve(Hn + 1e-300 * np.eye(r), g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.empty_like(g)
            for j in range(idx.size):
                step[j] = np.linalg.lstsq(Hn[j], g[j], rcond=None)[0]
        bad = ~np.all(np.isfinite(step), axis=1) | (np.einsum("ij,ij->i", step, g) <= 0)
        step[bad] = g[bad]  # gradient ascent fallback
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        f_old = f[idx]
        slack = noise(q[idx], idx)
        f_new = np.full(idx.size, -np.inf)
        for _ in range(60):
            pend = ~accepted
            if not np.any(pend):
                break
            trial = q[idx[pend]] + t[pend, None] * step[pend]
            ft = objective(trial, idx[pend])
            ok = ft >= f_old[pend] - slack[pend]
            sub = np.flatnonzero(pend)
            accepted[sub[ok]] = True
            f_new[sub[ok]] = ft[ok]
            t[sub[~ok]] *= 0.5
        moved = accepted
        q[idx[moved]] += t[moved, None] * step[moved]
        f[idx[moved]] = f_new[moved]
        # no ascent direction left: stationary up to rounding
        stuck = ~moved
        if np.any(stuck):
            status[idx[stuck]] = 0
            active[idx[stuck]] = False
        pn = np.linalg.norm(q[idx], axis=1)
        div = moved & (pn > DIVERGENCE_NORM) & (f[idx] > f_old)
        if np.any(div):
            status[idx[div]] = 1
            active[idx[div]] = False
    p = q @ B
    return f, p, status


# --------------------------------------------------------------------------
# primal (flux) solver


def _primal(net: Network, lam: np.ndarray, beta: np.ndarray, max_iter: int = 200, tol: float = 1e-12):
    """Minimize sum lam ell(u/lam) over u >= 0 with Z^T u = beta.

    Returns (value, u, reason). Independent of the dual solver: works in flux
    space with a Newton method on the null space of Z^T.
    """
    Z = net.zeta.astype(float)
    R = Z.shape[0]
    act = np.flatnonzero(lam > 0)
    u = np.zeros(R)
    if act.size == 0:
        if np.linalg.norm(beta) <= 1e-12:
            return 0.0, u, "boundary"
        return np.inf, None, "outside_cone"
    Zt = Z[act].T  # (d, |A|)
    coef, *_ = np.linalg.lstsq(Zt, beta, rcond=None)
    if np.linalg.norm(Zt @ coef - beta) > 1e-9 * max(1.0, np.linalg.norm(beta)):
        return np.inf, None, "off_subspace"
    t, u0 = _max_min_flux(Zt, beta)
    if t is None:
        return np.inf, None, "outside_cone"
    reason = "primal" if act.size == R else "boundary"
    free = np.arange(act.size)
    if t <= 1e-9:
        # find fluxes forced to zero, then a relative-interior point
        reason = "cone_boundary"
        maxima = []
        keep = []
        for j in range(act.size):
            c = np.zeros(act.size)
            c[j] = -1.0
            res = linprog(c, A_eq=Zt, b_eq=beta, bounds=[(0, None)] * act.size, method="highs")
            if res.status == 0 and -res.fun > 1e-10:
                keep.append(j)
                maxima.append(res.x)
            elif res.status == 3:  # unbounded along this flux: it is free
                keep.append(j)
        free = np.array(keep, dtype=int)
        if maxima:
            u0 = np.mean(maxima, axis=0)
        if free.size and np.any(u0[free] <= 0):
            # unbounded coordinates without a bounded maximizer; nudge inside
            res = linprog(np.zeros(act.size), A_eq=Zt, b_eq=beta,
                          bounds=[(1e-6, None) if j in free else (0, 0) for j in range(act.size)], method="highs")
            u0 = res.x
        u0 = np.where(np.isin(np.arange(act.size), free), u0, 0.0)
    la = lam[act][free]
    Zf = Zt[:, free]
    uf = u0[free].astype(float)
    N = null_space(Zf) if free.size else np.zeros((0, 0))
    if free.size and N.shape[1] > 0:
        for it in range(max_iter):
            g = N.T @ np.log(uf / la)
            if np.linalg.norm(g) <= tol * max(1.0, np.abs(np.log(uf / la)).max()):
                break
            Hw = N.T @ (N / uf[:, None])
            dw = -np.linalg.solve(Hw, g)
            du = N @ dw
            # fraction to the boundary keeps u strictly positive
            neg = du < 0
            alpha = 1.0
            if np.any(neg):
                alpha = min(1.0, 0.99 * np.min(-uf[neg] / du[neg]))
            terms = uf * np.log(uf / la) - uf
            phi0 = np.sum(terms)
            # same rounding-floor acceptance as the dual line search
            slack = 64 * np.finfo(float).eps * np.sum(np.abs(terms))
            while alpha > 1e-16:
                trial = uf + alpha * du
                phi = np.sum(trial * np.log(trial / la) - trial)
                if phi <= phi0 + slack:
                    break
                alpha *= 0.5
            uf = uf + alpha * du
        else:
            raise NonConvergenceError("primal flux solver hit its iteration cap")
    ua = np.zeros(act.size)
    ua[free] = uf
    u[act] = ua
    return flux_cost(u, lam), u, reason


def lagrangian_primal(net: Network, x, beta) -> LagrangianEval:
    """Flux-form Lagrangian, kept independent of the dual solver."""
    x = _state(net, x)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    lam = net.mass_action(x)
    value, u, reason = _primal(net, lam, beta)
    p = None
    if u is not None and np.all(u[lam > 0] > 0) and np.any(lam > 0):
        act = lam > 0
        p = np.linalg.lstsq(net.zeta[act].astype(float), np.log(u[act] / lam[act]), rcond=None)[0]
        p = _basis(net).T @ (_basis(net) @ p)
    return LagrangianEval(value, p, u, reason)


def lagrangian(net: Network, x, beta, max_iter: int = 200, tol: float = 1e-12) -> LagrangianEval:
    """L(x, beta) = sup_p <p, beta> - H(x, p).

    Raises :class:`NonConvergenceError` if the dual Newton iteration hits
    ``max_iter``; an infinite value is a verdict, not an error.
    """
    x = _state(net, x)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape != (net.d,):
        raise InputError(f"velocity has length {beta.size}, network has {net.d} species")
    lam = net.mass_action(x)
    if np.any(lam == 0):
        return lagrangian_primal(net, x, beta)
    B = _basis(net)
    off = beta - B.T @ (B @ beta)
    if np.linalg.norm(off) > 1e-10 * max(1.0, np.linalg.norm(beta)):
        return LagrangianEval(np.inf, None, None, "off_subspace")
    if not positively_spans(net):
        t, _ = _max_min_flux(net.zeta.T.astype(float), beta)
        if t is None:
            return LagrangianEval(np.inf, None, None, "outside_cone")
        if t <= 1e-9:
            return lagrangian_primal(net, x, beta)
    vals, P, status = _dual_batch(net.zeta.astype(float), B, lam[None, :], beta[None, :], max_iter, tol)
    if status[0] == 1:
        return LagrangianEval(np.inf, None, None, "dual_divergence")
    if status[0] == 2:
        raise NonConvergenceError(f"dual Newton did not converge in {max_iter} iterations at x={x}, beta={beta}")
    p = P[0]
    fluxes = lam * np.exp(net.zeta @ p)
    return LagrangianEval(max(float(vals[0]), 0.0), p, fluxes, "dual")


def lagrangian_batch(net: Network, X, Beta, max_iter: int = 200, tol: float = 1e-12):
    """Vectorized interior Lagrangian for positively spanning networks.

    Returns (values, momenta). Used by the path optimizer; rows that fail to
    converge or diverge get ``inf``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Beta = np.atleast_2d(np.asarray(Beta, dtype=float))
    lam = net.kappa * _monomials_batch(X, net.sources)
    B = _basis(net)
    vals, P, status = _dual_batch(net.zeta.astype(float), B, lam, Beta, max_iter, tol)
    vals = np.maximum(vals, 0.0)
    vals[status != 0] = np.inf
    off = Beta - (Beta @ B.T) @ B
    vals[np.linalg.norm(off, axis=1) > 1e-10 * np.maximum(1.0, np.linalg.norm(Beta, axis=1))] = np.inf
    return vals, P


def path_cost(net: Network, path) -> float:
    """Midpoint-rule action of a sampled path (``times``, ``states``)."""
    t = np.asarray(path.times, dtype=float)
    X = np.asarray(path.states, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if t.size < 2:
        raise InputError("a path needs at least two points")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise InputError("path times must be strictly increasing")
    total = 0.0
    for k in range(t.size - 1):
        mid = 0.5 * (X[k] + X[k + 1])
        beta = (X[k + 1] - X[k]) / dt[k]
        L = lagrangian(net, np.maximum(mid, 0.0), beta)
        if not L.finite:
            return np.inf
        total += L.value * dt[k]
    return total
