"""Deterministic and Hamiltonian dynamics.

All integration goes through :func:`dopri45`, an adaptive Dormand-Prince
5(4) pair with a per-step hook. The hook is what implements clip-and-flag
for the mass-action ODE and the energy projection for Hamilton's equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BoundarySteadyStateError,
    EnergyDriftError,
    InputError,
    OverflowGuardError,
    OrthantExitError,
    SteadyStateError,
    StepSizeUnderflowError,
)
from .hamiltonian import drift, eval_H, hamiltonian, jacobian_drift
from .network import Network, compatibility_class, stoichiometric_basis


@dataclass
class Path:
    """Time-stamped trajectory, optionally with momenta and energy."""

    times: np.ndarray
    states: np.ndarray
    momenta: np.ndarray | None = None
    energy: np.ndarray | None = None
    clipped: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if self.times.ndim != 1 or self.states.shape[0] != self.times.size:
            raise InputError("times and states must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise InputError("path times must be strictly increasing")
        if self.momenta is not None:
            self.momenta = np.asarray(self.momenta, dtype=float)
            if self.momenta.ndim == 1:
                self.momenta = self.momenta[:, None]
            if self.momenta.shape != self.states.shape:
                raise InputError("momenta must match states in shape")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def columns(self) -> list[str]:
        d = self.states.shape[1]
        cols = ["t"] + [f"x_{i + 1}" for i in range(d)]
        if self.momenta is not None:
            cols += [f"p_{i + 1}" for i in range(d)]
            cols.append("H")
        return cols

    def rows(self) -> np.ndarray:
        parts = [self.times[:, None], self.states]
        if self.momenta is not None:
            parts.append(self.momenta)
            energy = self.energy if self.energy is not None else np.full(self.times.size, np.nan)
            parts.append(energy[:, None])
        return np.hstack(parts)


# --------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# beyond this the stage sums of a step overflow
STATE_LIMIT = 1e300


def dopri45(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    T: float,
    tol: float = 1e-8,
    post_step: Callable[[float, np.ndarray], np.ndarray] | None = None,
    max_step: float = np.inf,
    max_steps: int = 1_000_000,
):
    """Integrate y' = f(t, y) on [t0, t0 + T].

    The local error estimate of every accepted step satisfies
    ``rms(err / (tol + tol * |y|)) <= 1``. ``post_step(t, y)`` may return a
    corrected state (e.g. projected or clipped). Returns (times, states).
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t_end = t0 + T
    ts = [t]
    ys = [y.copy()]
    k1 = np.asarray(f(t, y), dtype=float)
    scale = tol + tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale) ** 2))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, max_step, T)
    steps = 0
    K = np.empty((7, y.size))
    while t < t_end:
        if not np.all(np.abs(y) < STATE_LIMIT):
            raise OverflowGuardError(f"state magnitude exceeds {STATE_LIMIT:g} at t={t:.6g}")
        if steps >= max_steps:
            raise StepSizeUnderflowError(f"step budget exhausted at t={t:.6g}", t, y.copy())
        if h < 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepSizeUnderflowError(f"step size underflow at t={t:.6g}", t, y.copy())
        h = min(h, t_end - t)
        K[0] = k1
        for i in range(1, 7):
            yi = y + h * (np.asarray(_A[i]) @ K[:i])
            K[i] = f(t + _C[i] * h, yi)
        y_new = y + h * (_B5 @ K)
        err_vec = h * (_E @ K)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))
        if not np.isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            t = t + h if t_end - t > h else t_end
            steps += 1
            if post_step is not None:
                y_new = post_step(t, y_new)
            y = y_new
            ts.append(t)
            ys.append(y.copy())
            k1 = np.asarray(f(t, y), dtype=float)
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, max_step)
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return np.array(ts), np.array(ys)


# --------------------------------------------------------------------------
# mass-action ODE


def integrate_ode(net: Network, x0, T: float, tol: float = 1e-8, max_step: float = np.inf) -> Path:
    """Solve x' = drift(x) from ``x0`` for time ``T``.

    Negative rounding excursions are clipped to 0 and reported in
    ``Path.clipped``. Stiff problems surface as :class:`StepSizeUnderflowError`
    carrying the last good state.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (net.d,) or np.any(x0 < 0):
        raise InputError("x0 must be a nonnegative vector with one entry per species")
    if not T > 0:
        raise InputError("T must be positive")
    clipped = False

    def rhs(t, x):
        return drift(net, np.maximum(x, 0.0))

    def clip(t, x):
        nonlocal clipped
        if np.any(x < 0):
            clipped = True
            return np.maximum(x, 0.0)
        return x

    ts, xs = dopri45(rhs, 0.0, x0, T, tol, post_step=clip, max_step=max_step)
    return Path(ts, xs, clipped=clipped, meta={"mode": "ode", "tol": tol, "T": T})


# --------------------------------------------------------------------------
# steady states


@dataclass(frozen=True)
class SteadyStateReport:
    c: np.ndarray
    residual: float
    stable: bool
    jacobian_eigs: np.ndarray

    def to_dict(self) -> dict:
        return {
            "c": self.c.tolist(),
            "residual": self.residual,
            "stable": self.stable,
            "jacobian_eigs": [[float(z.real), float(z.imag)] for z in self.jacobian_eigs],
        }


def restricted_jacobian(net: Network, x) -> np.ndarray:
    """Jacobian of the drift in coordinates of the stoichiometric subspace."""
    B = stoichiometric_basis(net).basis
    return B @ jacobian_drift(net, x) @ B.T


def find_steady_state(
    net: Network,
    x0,
    horizon: float = 20.0,
    max_horizon: float = 2e4,
    residual_tol: float = 1e-10,
    boundary_tol: float = 1e-8,
) -> SteadyStateReport:
    """Steady state attracting ``x0``, refined by Newton within its class.

    Raises :class:`BoundarySteadyStateError` when the flow settles on the
    boundary of the orthant and :class:`SteadyStateError` when it does not
    settle at all.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    cls = compatibility_class(net, x0)
    B = cls.basis.basis
    x = x0.copy()
    elapsed = 0.0
    seg = horizon
    prev = np.inf
    while True:
        x = integrate_ode(net, x, seg, tol=1e-9).final
        if np.abs(x).max() > 1e12 * max(1.0, np.abs(x0).max()):
            raise SteadyStateError(f"trajectory from {x0} diverges (|x| = {np.abs(x).max():.3g} at t={elapsed + seg:g})")
        x = np.maximum(cls.project(x), 0.0)
        elapsed += seg
        res = np.linalg.norm(drift(net, x), np.inf)
        if res < 1e-6 * max(1.0, np.abs(x).max()):
            break
        if elapsed >= max_horizon:
            raise SteadyStateError(
                f"no convergence after t={elapsed:g}: |drift| = {res:.3g} (divergent or oscillatory dynamics)"
            )
        if res > 0.9 * prev and seg >= 4 * horizon:
            seg *= 2
        prev = res
    if B.shape[0] == 0:
        raise SteadyStateError("network has a trivial stoichiometric subspace")
    for _ in range(50):
        F = drift(net, x)
        if np.linalg.norm(F, np.inf) <= residual_tol * 1e-2:
            break
        J = B @ jacobian_drift(net, x) @ B.T
        try:
            dy = np.linalg.solve(J, -(B @ F))
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(J, -(B @ F), rcond=None)[0]
        step = 1.0
        while step > 1e-6:
            trial = x + step * (B.T @ dy)
            if np.all(trial >= 0) and np.linalg.norm(drift(net, trial)) < np.linalg.norm(F) * (1 + 1e-12):
                break
            step *= 0.5
        x = trial
    residual = float(np.linalg.norm(drift(net, x), np.inf))
    if np.any(x <= boundary_tol * max(1.0, np.abs(x).max())):
        raise BoundarySteadyStateError(f"flow from {x0} converges to the boundary state {x}", x)
    if residual >= residual_tol:
        raise SteadyStateError(f"Newton refinement stalled at residual {residual:.3g}")
    eigs = np.linalg.eigvals(B @ jacobian_drift(net, x) @ B.T)
    stable = bool(np.all(eigs.real < -1e-10))
    return SteadyStateReport(x, residual, stable, eigs)


# --------------------------------------------------------------------------
# Hamilton's equations


def _project_energy(net: Network, z: np.ndarray, E0: float, d: int) -> np.ndarray:
    for _ in range(3):
        ev = eval_H(net, z[:d], z[d:])
        gap = ev.value - E0
        g = np.concatenate([ev.grad_x, ev.grad_p])
        gg = g @ g
        if gap == 0.0 or gg == 0.0:
            break
        z = z - (gap / gg) * g
        if abs(gap) <= 4 * np.finfo(float).eps * max(1.0, abs(E0)):
            break
    return z


def integrate_hamilton(
    net: Network,
    x0,
    p0,
    T: float,
    tol: float = 1e-10,
    project_energy: bool = True,
    max_step: float = np.inf,
) -> Path:
    """Integrate x' = D_p H, p' = -D_x H from (x0, p0).

    After every accepted step the state is pulled back onto the initial
    energy level by a Newton projection along grad H (disable with
    ``project_energy=False``). Leaving the positive orthant raises
    :class:`OrthantExitError`; an energy error above ``100 * tol`` raises
    :class:`EnergyDriftError`.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    if x0.shape != (net.d,) or p0.shape != (net.d,):
        raise InputError("x0 and p0 need one entry per species")
    if np.any(x0 <= 0):
        raise InputError("x0 must be strictly positive")
    if not T > 0:
        raise InputError("T must be positive")
    d = net.d
    E0 = eval_H(net, x0, p0).value

    def rhs(t, z):
        x = z[:d]
        if np.any(x <= 0):
            # let the step controller shrink the step; exits are caught below
            return np.full(2 * d, np.nan)
        ev = eval_H(net, x, z[d:])
        return np.concatenate([ev.grad_p, -ev.grad_x])

    def check(t, z):
        if np.any(z[:d] <= 0):
            raise OrthantExitError(f"trajectory left the positive orthant at t={t:.6g}", t, z[:d].copy())
        if project_energy:
            z = _project_energy(net, z, E0, d)
        drift_ = abs(eval_H(net, z[:d], z[d:]).value - E0)
        if drift_ > 100 * tol * max(1.0, abs(E0)):
            raise EnergyDriftError(f"energy drift {drift_:.3g} at t={t:.6g} exceeds {100 * tol:.3g}")
        return z

    z0 = np.concatenate([x0, p0])
    try:
        ts, zs = dopri45(rhs, 0.0, z0, T, tol, post_step=check, max_step=max_step)
    except StepSizeUnderflowError as exc:
        if np.any(exc.state[:d] <= 0) or _near_exit(net, exc.state, d):
            raise OrthantExitError(f"trajectory reached the boundary at t={exc.t:.6g}", exc.t, exc.state[:d]) from exc
        raise
    energy = hamiltonian(net, zs[:, :d], zs[:, d:])
    return Path(ts, zs[:, :d], zs[:, d:], energy, meta={"mode": "hamilton", "tol": tol, "T": T, "E0": E0})


def _near_exit(net, z, d) -> bool:
    x = z[:d]
    v = eval_H(net, x, z[d:]).grad_p
    return bool(np.any((x < 1e-6 * max(1.0, np.abs(x).max())) & (v < 0)))


__all__ = [
    "Path",
    "SteadyStateReport",
    "dopri45",
    "integrate_ode",
    "find_steady_state",
    "integrate_hamilton",
    "restricted_jacobian",
]
