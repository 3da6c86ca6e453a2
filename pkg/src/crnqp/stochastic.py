"""Scaled jump processes: intensities, SSA, and stationary distributions.

States of the n-th process live on the lattice n^-1 Z_+^d. Internally every
routine works with integer molecule counts ``N = n x`` and converts at the
edges.

Random numbers come from numpy's Philox4x64-10 counter-based generator keyed
by the user seed, so a (seed, network, parameters) triple reproduces a path
bit for bit on any platform numpy supports.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson

from .errors import InputError, NotComplexBalancedError, ReducibleChainError, TruncationError
from .network import Network, conserved_vectors

RNG_NAME = "Philox4x64-10"
MAX_STATES = 2_000_000
LATTICE_TOL = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def to_counts(n: int, x) -> np.ndarray:
    """Lattice point -> integer counts; rejects points off n^-1 Z_+^d."""
    x = np.asarray(x, dtype=float).reshape(-1)
    nx = n * x
    N = np.rint(nx)
    if np.any(np.abs(nx - N) > LATTICE_TOL * max(1.0, np.abs(nx).max())) or np.any(N < 0):
        raise InputError(f"{x} is not on the lattice (1/{n}) Z_+^d")
    return N.astype(np.int64)


def _falling(N: np.ndarray, a: int) -> np.ndarray:
    """N (N-1) ... (N-a+1), zero when N < a. Works on arrays."""
    out = np.ones_like(N, dtype=float)
    for j in range(a):
        out = out * np.maximum(N - j, 0)
    return out


def jump_rates(net: Network, n: int, N: np.ndarray) -> np.ndarray:
    """Process jump rates n * lambda^n_r for count arrays ``N`` (..., d)."""
    N = np.asarray(N)
    out = np.broadcast_to(net.kappa * float(n), N.shape[:-1] + (net.n_reactions,)).copy()
    order = net.sources.sum(axis=1)
    out /= float(n) ** order
    for r in range(net.n_reactions):
        for i in range(net.d):
            a = int(net.sources[r, i])
            if a:
                out[..., r] *= _falling(N[..., i], a)
    return out


def intensities(net: Network, n: int, x) -> np.ndarray:
    """lambda^n_r(x) = kappa_r n^-|a| prod (n x_i)! / (n x_i - a_i)!."""
    if n < 1:
        raise InputError("scale n must be >= 1")
    N = to_counts(n, x)
    return jump_rates(net, n, N) / n


# --------------------------------------------------------------------------
# SSA


@dataclass
class JumpPath:
    times: np.ndarray  # jump instants, times[0] = 0
    states: np.ndarray  # lattice states after each jump, shape (J+1, d)
    n: int
    seed: int
    T: float
    truncated: bool = False
    rng: str = RNG_NAME

    @property
    def counts(self) -> np.ndarray:
        return np.rint(self.states * self.n).astype(np.int64)

    def value_at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return self.states[idx]

    def sup_deviation(self, f) -> float:
        """sup over [0, T] of |X(t) - f(t)|, exact for monotone ``f``.

        On each constant piece the supremum of a monotone deviation is at one
        of the piece's end points.
        """
        ends = np.append(self.times[1:], self.T)
        left = np.abs(self.states - np.atleast_2d(f(self.times)).reshape(self.states.shape)).max(axis=1)
        right = np.abs(self.states - np.atleast_2d(f(ends)).reshape(self.states.shape)).max(axis=1)
        return float(max(left.max(), right.max()))

    def columns(self) -> list[str]:
        return ["t"] + [f"x_{i + 1}" for i in range(self.states.shape[1])]

    def rows(self) -> np.ndarray:
        return np.hstack([self.times[:, None], self.states])


def ssa_simulate(net: Network, n: int, x0, T: float, seed: int, max_jumps: int = 10**8) -> JumpPath:
    """Exact simulation of the jump process with generator L^n.

    Holding times are exponential with rate n * sum lambda^n; the reaction is
    chosen with probability proportional to its intensity. After
    ``max_jumps`` jumps the partial path is returned with ``truncated=True``.
    """
    if n < 1:
        raise InputError("scale n must be >= 1")
    if not T > 0:
        raise InputError("T must be positive")
    N = to_counts(n, x0)
    rng = make_rng(seed)
    kappa = net.kappa * float(n) / float(n) ** net.sources.sum(axis=1)
    reactants = [[(i, int(a)) for i, a in enumerate(row) if a] for row in net.sources]
    zeta = [np.asarray(z, dtype=np.int64) for z in net.zeta]
    R = net.n_reactions
    counts = [int(v) for v in N]
    t = 0.0
    times = [0.0]
    states = [tuple(counts)]
    rates = [0.0] * R
    block = np.empty(0)
    bi = 0
    truncated = False
    jumps = 0
    while True:
        total = 0.0
        for r in range(R):
            rate = kappa[r]
            for i, a in reactants[r]:
                c = counts[i]
                for j in range(a):
                    rate *= c - j
                if c < a:
                    rate = 0.0
                    break
            rates[r] = rate
            total += rate
        if total <= 0.0:
            break
        if bi + 2 > block.size:
            block = rng.random(8192)
            bi = 0
        u1, u2 = block[bi], block[bi + 1]
        bi += 2
        t += -math.log1p(-u1) / total
        if t > T:
            break
        target = u2 * total
        acc = 0.0
        chosen = R - 1
        for r in range(R):
            acc += rates[r]
            if target < acc:
                chosen = r
                break
        for i, dz in enumerate(zeta[chosen]):
            counts[i] += int(dz)
        times.append(t)
        states.append(tuple(counts))
        jumps += 1
        if jumps >= max_jumps:
            truncated = True
            warnings.warn(f"SSA stopped after {jumps} jumps at t={t:.6g}", RuntimeWarning)
            break
    S = np.array(states, dtype=float) / n
    return JumpPath(np.array(times), S, n, int(seed), float(T), truncated)


def _ssa_job(args):
    return ssa_simulate(*args)


def ssa_ensemble(net: Network, n: int, x0, T: float, seeds, workers: int = 1) -> list[JumpPath]:
    """One independent Philox stream per seed; optionally across processes."""
    jobs = [(net, n, x0, T, int(s)) for s in seeds]
    if workers <= 1:
        return [_ssa_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_ssa_job, jobs))


# --------------------------------------------------------------------------
# distributions


@dataclass
class Distribution:
    """Probability mass on a finite set of lattice points, kept in log space."""

    n: int
    counts: np.ndarray  # (S, d) integer counts
    log_mass: np.ndarray  # (S,) natural-log probabilities
    caps: tuple[int, ...]
    kind: str = ""
    cap_mass: float = 0.0
    meta: dict = field(default_factory=dict)
    _index: dict | None = field(default=None, repr=False)

    @property
    def lattice(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def prob(self) -> np.ndarray:
        return np.exp(self.log_mass)

    @property
    def normalizer(self) -> float:
        return float(np.exp(logsumexp(self.log_mass)))

    def _lookup(self, N) -> int | None:
        if self._index is None:
            self._index = {tuple(int(v) for v in row): i for i, row in enumerate(self.counts)}
        return self._index.get(tuple(int(v) for v in N))

    def log_mass_at(self, x) -> float:
        i = self._lookup(to_counts(self.n, x))
        if i is None:
            raise InputError(f"{x} is outside the support")
        return float(self.log_mass[i])

    def mode(self) -> np.ndarray:
        """Most probable lattice point; exact ties go to the one nearest the mean.

        Ties are common (Poisson(k) puts equal mass on k - 1 and k for integer k).
        """
        top = self.log_mass.max()
        tied = np.flatnonzero(self.log_mass >= top - 1e-9)
        mean = self.prob @ self.lattice
        best = tied[np.argmin(np.linalg.norm(self.lattice[tied] - mean, axis=1))]
        return self.lattice[best]

    def total_variation(self, other: "Distribution") -> float:
        if other.n != self.n:
            raise InputError("distributions live on different lattices")
        mine = dict(zip(map(tuple, self.counts.tolist()), self.prob))
        theirs = dict(zip(map(tuple, other.counts.tolist()), other.prob))
        keys = set(mine) | set(theirs)
        return 0.5 * float(sum(abs(mine.get(k, 0.0) - theirs.get(k, 0.0)) for k in keys))

    def columns(self) -> list[str]:
        return [f"x_{i + 1}" for i in range(self.counts.shape[1])] + ["probability", "log_probability"]

    def rows(self) -> np.ndarray:
        return np.hstack([self.lattice, self.prob[:, None], self.log_mass[:, None]])


def _enumerate_box(caps) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(c + 1, dtype=np.int64) for c in caps], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _class_states(net: Network, caps, anchor_counts) -> np.ndarray:
    box = int(np.prod([c + 1 for c in caps], dtype=float))
    if box > 10 * MAX_STATES:
        raise InputError(f"truncation box has {box} states")
    states = _enumerate_box(caps)
    if anchor_counts is not None:
        W = conserved_vectors(net)
        if W.shape[0]:
            target = W @ anchor_counts
            keep = np.all(np.abs(states @ W.T - target) <= 1e-6 * max(1.0, np.abs(target).max()), axis=1)
            states = states[keep]
    if states.shape[0] > MAX_STATES:
        raise InputError(f"truncated state space has {states.shape[0]} > {MAX_STATES} states")
    if states.shape[0] == 0:
        raise InputError("no lattice points in the requested class")
    return states


def stationary_truncated(net: Network, n: int, caps, anchor=None) -> Distribution:
    """Stationary law of the jump process truncated to ``0 <= N_i <= caps[i]``.

    Jumps that would leave the box are dropped (reflecting truncation). With
    ``anchor`` the state space is further restricted to the compatibility
    class of that lattice point. A chain with several closed classes raises
    :class:`ReducibleChainError` listing them.
    """
    caps = tuple(int(c) for c in np.broadcast_to(np.asarray(caps), (net.d,)))
    if any(c < 0 for c in caps):
        raise InputError("caps must be nonnegative")
    anchor_counts = None if anchor is None else to_counts(n, anchor)
    states = _class_states(net, caps, anchor_counts)
    S = states.shape[0]
    radix = np.cumprod((1,) + tuple(c + 1 for c in caps[:-1]))
    box_index = np.full(int(np.prod([c + 1 for c in caps])), -1, dtype=np.int64)
    box_index[states @ radix] = np.arange(S)
    rates = jump_rates(net, n, states)  # (S, R)
    rows, cols, vals = [], [], []
    dropped = np.zeros(S)
    capv = np.asarray(caps)
    for r in range(net.n_reactions):
        dest = states + net.zeta[r]
        inside = np.all((dest >= 0) & (dest <= capv), axis=1)
        j = np.full(S, -1, dtype=np.int64)
        j[inside] = box_index[dest[inside] @ radix]
        ok = (j >= 0) & (rates[:, r] > 0)
        rows.append(np.flatnonzero(ok))
        cols.append(j[ok])
        vals.append(rates[ok, r])
        dropped += np.where(~ok & (rates[:, r] > 0), rates[:, r], 0.0)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    Q = coo_matrix((vals, (rows, cols)), shape=(S, S)).tocsr()
    Q.sum_duplicates()
    out = np.asarray(Q.sum(axis=1)).ravel()

    graph = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(S, S))
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    has_exit = np.zeros(ncomp, dtype=bool)
    has_exit[labels[rows[labels[rows] != labels[cols]]]] = True
    closed = np.flatnonzero(~has_exit)
    if closed.size > 1:
        classes = [states[labels == k] / n for k in closed]
        raise ReducibleChainError(f"truncated chain has {closed.size} closed classes", classes)
    members = np.flatnonzero(labels == closed[0])
    if members.size == 1 and out[members[0]] == 0 and dropped[members[0]] > 0:
        raise TruncationError(
            f"all dynamics at {states[members[0]] / n} leave the truncation; no stationary law within it"
        )
    pi = np.zeros(S)
    if members.size == 1:
        pi[members[0]] = 1.0
    else:
        Qc = Q[members][:, members].tolil()
        Qc.setdiag(-out[members])
        A = Qc.T.tocsr().tolil()
        A[-1, :] = np.ones(members.size)
        b = np.zeros(members.size)
        b[-1] = 1.0
        sol = spsolve(A.tocsc(), b)
        sol = np.maximum(sol, 0.0)
        pi[members] = sol / sol.sum()
    with np.errstate(divide="ignore"):
        logp = np.log(pi)
    cap_mass = float(pi[dropped > 0].sum())
    return Distribution(n, states, logp, caps, "truncated", cap_mass)


def _class_bounds(net: Network, anchor_counts: np.ndarray) -> list[float]:
    """Largest count of each species inside the class (inf if unbounded)."""
    W = conserved_vectors(net)
    if W.shape[0] == 0:
        return [np.inf] * net.d
    out = []
    for i in range(net.d):
        c = np.zeros(net.d)
        c[i] = -1.0
        res = linprog(c, A_eq=W, b_eq=W @ anchor_counts, bounds=[(0, None)] * net.d, method="highs")
        out.append(-res.fun if res.status == 0 else np.inf)
    return out


def product_form_stationary(net: Network, n: int, c, caps=None, anchor=None, tail: float = 1e-12) -> Distribution:
    """Product-of-Poissons law for a complex-balanced network, in log space.

    log pi(x) = sum_i [-n c_i + n x_i log(n c_i) - lgamma(n x_i + 1)],
    restricted to the class of ``anchor`` (default ``c``) and renormalized.
    """
    from .balance import complex_balance_residuals

    c = np.asarray(c, dtype=float).reshape(-1)
    if not complex_balance_residuals(net, c).balanced:
        raise NotComplexBalancedError(f"network is not complex-balanced at c={c}")
    anchor = c if anchor is None else np.asarray(anchor, dtype=float).reshape(-1)
    anchor_counts = n * anchor
    if np.any(np.abs(anchor_counts - np.rint(anchor_counts)) > 1e-6):
        raise InputError(f"n * anchor = {anchor_counts} is not integral")
    anchor_counts = np.rint(anchor_counts)
    bounds = _class_bounds(net, anchor_counts)
    need = []
    for i in range(net.d):
        tail_cap = int(poisson.isf(tail / net.d, n * c[i])) + 1
        # bounded species are enumerated exactly; conditioning on the class
        # reshapes their tails, so a Poisson cutoff would be wrong there
        need.append(tail_cap if np.isinf(bounds[i]) else math.floor(bounds[i] + 1e-9))
    if caps is None:
        caps = need
    else:
        caps = [int(v) for v in np.broadcast_to(np.asarray(caps), (net.d,))]
        short = [i for i in range(net.d) if caps[i] < need[i]]
        if short:
            raise InputError(f"caps {caps} leave tail mass above {tail:g} for species {short}")
        caps = [cp if np.isinf(bounds[i]) else min(cp, math.floor(bounds[i] + 1e-9)) for i, cp in enumerate(caps)]
    states = _class_states(net, caps, anchor_counts.astype(np.int64) if np.isfinite(bounds).any() else None)
    nc = n * c
    logw = np.sum(-nc + states * np.log(nc) - gammaln(states + 1.0), axis=1)
    logw -= logsumexp(logw)
    return Distribution(n, states, logw, tuple(caps), "product_form")


def scaled_log_limit(dist: Distribution, x) -> float:
    """-(1/n) log pi^n(x); +inf (with a warning) where the mass is zero."""
    lm = dist.log_mass_at(x)
    if not np.isfinite(lm):
        warnings.warn(f"zero stationary mass at {x}", RuntimeWarning)
        return math.inf
    return -lm / dist.n
