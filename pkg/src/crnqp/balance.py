"""Complex balance, the Horn-Jackson function, and HJB residuals."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import find_steady_state
from .errors import InputError
from .hamiltonian import eval_H, ell
from .network import Network, format_complex, monomials, stoichiometric_basis

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ComplexBalanceReport:
    """Inflow minus outflow at every complex, evaluated at ``c``.

    ``tol`` is relative: complex z counts as balanced when
    ``|residual_z| <= tol * max(inflow_z, outflow_z)`` (floored at the
    largest flow in the network so that idle complexes are not divided by 0).
    """

    c: np.ndarray
    complexes: tuple[str, ...]
    residuals: np.ndarray
    inflow: np.ndarray
    outflow: np.ndarray
    balanced: bool
    tol: float

    @property
    def per_complex_residuals(self) -> dict[str, float]:
        return dict(zip(self.complexes, self.residuals.tolist()))

    @property
    def max_residual(self) -> float:
        return float(np.abs(self.residuals).max())

    def to_dict(self) -> dict:
        return {
            "c": self.c.tolist(),
            "balanced": self.balanced,
            "tol": self.tol,
            "max_abs_residual": self.max_residual,
            "residuals": [
                {"complex": z, "residual": float(r), "inflow": float(i), "outflow": float(o)}
                for z, r, i, o in zip(self.complexes, self.residuals, self.inflow, self.outflow)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _positive(c, d: int, what: str = "c") -> np.ndarray:
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape != (d,):
        raise InputError(f"{what} has {c.size} entries, network has {d} species")
    if np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise InputError(f"{what} must be strictly positive, got {c}")
    return c


def complex_balance_residuals(net: Network, c, tol: float = DEFAULT_TOL) -> ComplexBalanceReport:
    c = _positive(c, net.d)
    flows = net.mass_action(c)
    index = {z: k for k, z in enumerate(net.complexes)}
    inflow = np.zeros(len(net.complexes))
    outflow = np.zeros(len(net.complexes))
    for rx, f in zip(net.reactions, flows):
        inflow[index[rx.target]] += f
        outflow[index[rx.source]] += f
    res = inflow - outflow
    scale = np.maximum(np.maximum(inflow, outflow), 1e-300)
    balanced = bool(np.all(np.abs(res) <= tol * scale))
    names = tuple(format_complex(z, net.species) for z in net.complexes)
    return ComplexBalanceReport(c, names, res, inflow, outflow, balanced, tol)


def lyapunov_V(c, x) -> float:
    """V(c, x) = sum_i c_i ell(x_i / c_i); boundary terms contribute c_i."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(c <= 0):
        raise InputError("c must be strictly positive")
    if np.any(x < 0):
        raise InputError("x must be nonnegative")
    return float(np.sum(c * ell(x / c)))


def grad_V(c, x, species=None) -> np.ndarray:
    """D_x V(c, x) = log(x / c); undefined where some x_i = 0."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    zero = np.flatnonzero(x <= 0)
    if zero.size:
        names = [species[i] if species else f"x_{i + 1}" for i in zero]
        raise InputError(f"grad V undefined on the boundary: {', '.join(names)} = 0")
    return np.log(x / c)


def hjb_residual(net: Network, gradV, x) -> float:
    """H(x, gradV(x)); zero iff ``gradV`` solves the steady-state HJB at x."""
    x = _positive(x, net.d, "x")
    return eval_H(net, x, gradV(x)).value


def horn_jackson_gradient(net: Network, c):
    c = _positive(c, net.d)
    return lambda x: grad_V(c, x, net.species)


def is_complex_balanced_network(net: Network, x0, tol: float = DEFAULT_TOL) -> tuple[bool, ComplexBalanceReport]:
    """Find the steady state attracting ``x0`` and test complex balance there."""
    ss = find_steady_state(net, x0)
    report = complex_balance_residuals(net, ss.c, tol)
    return report.balanced, report


def class_interior_grid(net: Network, c, m: int = 100, seed: int = 0, spread: float = 20.0) -> np.ndarray:
    """``m`` interior points of the class of ``c``, log-uniform in distance to c.

    Points are c + t v for random unit directions v in the stoichiometric
    subspace; t is a log-uniform fraction of the distance to the boundary (or
    of ``spread * |c|`` along unbounded rays).
    """
    c = _positive(c, net.d)
    B = stoichiometric_basis(net).basis
    if B.shape[0] == 0:
        return np.tile(c, (m, 1))
    rng = np.random.default_rng(seed)
    out = np.empty((m, net.d))
    for k in range(m):
        v = B.T @ rng.standard_normal(B.shape[0])
        v /= np.linalg.norm(v)
        neg = v < 0
        t_max = np.min(-c[neg] / v[neg]) if np.any(neg) else spread * np.linalg.norm(c)
        t_max = min(t_max, spread * np.linalg.norm(c))
        frac = 10 ** rng.uniform(-3, np.log10(0.98))
        out[k] = c + frac * t_max * v
    return out


@dataclass(frozen=True)
class MonomialFit:
    complexes: tuple[str, ...]
    alpha: np.ndarray  # fitted coefficient of x**z
    expected: np.ndarray  # residual_z / c**z
    rank: int

    @property
    def separated(self) -> bool:
        """False when the grid cannot tell the monomials apart."""
        return self.rank == self.alpha.size

    @property
    def max_error(self) -> float:
        return float(np.abs(self.alpha - self.expected).max())


def monomial_fit(net: Network, c, points) -> MonomialFit:
    """Least-squares fit of H(x, log(x/c)) by sum_z alpha_z x**z.

    Expanding the Hamiltonian gives exactly alpha_z = residual_z / c**z, so
    the fit recovers the complex-balance residuals whenever the sample
    points separate the monomials.
    """
    c = _positive(c, net.d)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    Z = np.array(net.complexes, dtype=float)
    y = np.array([eval_H(net, x, np.log(x / c)).value for x in pts])
    # columns in the scaled variable (x/c)**z keep the system well conditioned
    A = np.stack([monomials(x / c, Z) for x in pts])
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    cz = monomials(c, Z)
    report = complex_balance_residuals(net, c)
    return MonomialFit(report.complexes, beta / cz, report.residuals / cz, int(rank))
