"""Reaction network data model, text format, and structural analysis.

Networks are written in a small line-oriented language::

    # isomerization
    species A1, A2;
    A1 <-> A2, k=1, k=1
    A1 + A2 -> 2 A2, k=0.5

``0`` is the empty complex. ``<->`` expands into a forward and a backward
reaction with their own rate constants.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import null_space, qr
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NetworkError, ParseError, InputError

RANK_TOL = 1e-10

Complex = tuple[int, ...]


@dataclass(frozen=True)
class Reaction:
    source: Complex
    target: Complex
    k: float

    @property
    def zeta(self) -> Complex:
        return tuple(b - a for a, b in zip(self.source, self.target))


@dataclass(frozen=True)
class Network:
    """A mass-action reaction network.

    ``complexes`` is ordered by first appearance in ``reactions``; all derived
    arrays are read-only.
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    complexes: tuple[Complex, ...] = field(default=())

    def __post_init__(self):
        d = len(self.species)
        if d < 1:
            raise NetworkError("a network needs at least one species")
        if len(set(self.species)) != d:
            raise NetworkError("duplicate species names")
        if not self.reactions:
            raise NetworkError("empty network")
        seen = set()
        for r in self.reactions:
            for z in (r.source, r.target):
                if len(z) != d or any((not isinstance(v, (int, np.integer))) or v < 0 for v in z):
                    raise NetworkError(f"complex {z} is not a nonnegative integer vector of length {d}")
            if r.source == r.target:
                raise NetworkError(f"reactant equals product in {format_complex(r.source, self.species)}")
            if not (r.k > 0 and np.isfinite(r.k)):
                raise NetworkError(f"rate constant must be positive and finite, got {r.k}")
            key = (r.source, r.target)
            if key in seen:
                raise NetworkError(
                    f"duplicate reaction {format_complex(r.source, self.species)} -> "
                    f"{format_complex(r.target, self.species)}"
                )
            seen.add(key)
        ordered = []
        for r in self.reactions:
            for z in (r.source, r.target):
                if z not in ordered:
                    ordered.append(z)
        if self.complexes and tuple(self.complexes) != tuple(ordered):
            raise NetworkError("complexes must be exactly those referenced by reactions, in order")
        object.__setattr__(self, "complexes", tuple(ordered))

    @classmethod
    def from_reactions(cls, species: Sequence[str], reactions: Iterable[tuple]) -> "Network":
        """Build from ``(source, target, k)`` triples of integer vectors."""
        rs = tuple(
            Reaction(tuple(int(v) for v in a), tuple(int(v) for v in b), float(k))
            for a, b, k in reactions
        )
        return cls(tuple(species), rs)

    @property
    def d(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def rate_constants(self) -> dict[tuple[Complex, Complex], float]:
        return {(r.source, r.target): r.k for r in self.reactions}

    @cached_property
    def sources(self) -> np.ndarray:
        return _frozen(np.array([r.source for r in self.reactions], dtype=np.int64))

    @cached_property
    def targets(self) -> np.ndarray:
        return _frozen(np.array([r.target for r in self.reactions], dtype=np.int64))

    @cached_property
    def zeta(self) -> np.ndarray:
        """Reaction vectors, one row per reaction (integer)."""
        return _frozen(self.targets - self.sources)

    @cached_property
    def kappa(self) -> np.ndarray:
        return _frozen(np.array([r.k for r in self.reactions], dtype=float))

    def mass_action(self, x) -> np.ndarray:
        """Deterministic intensities kappa * x**a, one per reaction."""
        x = np.asarray(x, dtype=float)
        return self.kappa * monomials(x, self.sources)

    def fingerprint(self) -> str:
        return hashlib.sha256(render_network(self).encode()).hexdigest()[:16]

    def __str__(self):
        return render_network(self)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def monomials(x: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """x**a for each row a of ``exponents``; 0**0 is 1."""
    x = np.asarray(x, dtype=float)
    out = np.ones(exponents.shape[0])
    for i in range(exponents.shape[1]):
        col = exponents[:, i]
        nz = col > 0
        if np.any(nz):
            out[nz] *= x[i] ** col[nz]
    return out


# --------------------------------------------------------------------------
# text format

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<semi>;)
  | (?P<rev><->)
  | (?P<fwd>->)
  | (?P<plus>\+)
  | (?P<comma>,)
  | (?P<eq>=)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<minus>-)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            toks.append(_Tok("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "semi":
            toks.append(_Tok("sep", ";", line, col))
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.declared: list[str] | None = None
        self.order: list[str] = []
        self.raw: list[tuple[dict, dict, float, _Tok]] = []

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str, expected: str) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            shown = repr(tok.text) if tok.kind != "eof" else "end of input"
            if tok.kind == "sep" and tok.text == "\n":
                shown = "end of line"
            raise ParseError(f"unexpected {shown}", tok.line, tok.col, expected)
        self.i += 1
        return tok

    def parse(self) -> Network:
        while self.peek().kind != "eof":
            if self.peek().kind == "sep":
                self.i += 1
                continue
            self.statement()
            if self.peek().kind not in ("sep", "eof"):
                tok = self.peek()
                raise ParseError(f"unexpected {tok.text!r}", tok.line, tok.col, "';' or newline")
        if not self.raw:
            tok = self.peek()
            raise ParseError("empty network", tok.line, tok.col, "a reaction")
        species = self.declared if self.declared is not None else self.order
        reactions = []
        seen = {}
        for src, dst, k, tok in self.raw:
            a = tuple(src.get(s, 0) for s in species)
            b = tuple(dst.get(s, 0) for s in species)
            if a == b:
                raise ParseError("reactant equals product", tok.line, tok.col)
            if (a, b) in seen:
                raise ParseError("duplicate reaction", tok.line, tok.col)
            seen[(a, b)] = True
            reactions.append(Reaction(a, b, k))
        return Network(tuple(species), tuple(reactions))

    def statement(self):
        tok = self.peek()
        if tok.kind == "name" and tok.text == "species" and self.toks[self.i + 1].kind == "name":
            self.species_header()
        else:
            self.reaction()

    def species_header(self):
        head = self.take("name", "'species'")
        if self.declared is not None:
            raise ParseError("species declared twice", head.line, head.col)
        if self.raw:
            raise ParseError("species header must precede reactions", head.line, head.col)
        names = [self.take("name", "species name").text]
        while self.peek().kind == "comma":
            self.i += 1
            names.append(self.take("name", "species name").text)
        if len(set(names)) != len(names):
            raise ParseError("duplicate species in header", head.line, head.col)
        self.declared = names

    def reaction(self):
        start = self.peek()
        src = self.complex()
        arrow = self.peek()
        if arrow.kind not in ("fwd", "rev"):
            raise ParseError(f"unexpected {arrow.text or 'end of input'!r}", arrow.line, arrow.col, "'->' or '<->'")
        self.i += 1
        dst = self.complex()
        kf = self.rate()
        if arrow.kind == "rev":
            kb = self.rate()
            self.raw.append((src, dst, kf, start))
            self.raw.append((dst, src, kb, start))
        else:
            self.raw.append((src, dst, kf, start))

    def rate(self) -> float:
        self.take("comma", "','")
        name = self.take("name", "'k'")
        if name.text != "k":
            raise ParseError(f"unexpected {name.text!r}", name.line, name.col, "'k'")
        self.take("eq", "'='")
        sign = 1.0
        if self.peek().kind == "minus":
            self.i += 1
            sign = -1.0
        num = self.take("number", "rate constant")
        k = sign * float(num.text)
        if not (k > 0 and np.isfinite(k)):
            raise ParseError(f"rate constant must be positive, got {k:g}", num.line, num.col)
        return k

    def complex(self) -> dict[str, int]:
        tok = self.peek()
        if tok.kind == "number" and tok.text == "0" and self.toks[self.i + 1].kind != "name":
            self.i += 1
            return {}
        terms: dict[str, int] = {}
        self.term(terms)
        while self.peek().kind == "plus":
            self.i += 1
            self.term(terms)
        return terms

    def term(self, terms: dict[str, int]):
        coeff = 1
        tok = self.peek()
        if tok.kind == "number":
            if not tok.text.isdigit() or int(tok.text) < 1:
                raise ParseError(f"bad stoichiometric coefficient {tok.text!r}", tok.line, tok.col,
                                 "positive integer")
            coeff = int(tok.text)
            self.i += 1
        name = self.take("name", "species name" if tok.kind == "number" else "complex ('0' or species)")
        if self.declared is not None and name.text not in self.declared:
            raise ParseError(f"undeclared species {name.text!r}", name.line, name.col)
        if name.text not in self.order:
            self.order.append(name.text)
        terms[name.text] = terms.get(name.text, 0) + coeff


def parse_network(text: str) -> Network:
    """Parse network text into a :class:`Network`.

    Raises :class:`ParseError` with line and column on any syntax error,
    nonpositive rate constant, duplicate or degenerate reaction, or empty
    input.
    """
    return _Parser(text).parse()


def load_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def format_complex(z: Sequence[int], species: Sequence[str]) -> str:
    terms = []
    for c, s in zip(z, species):
        if c == 1:
            terms.append(s)
        elif c > 1:
            # "2e5" would lex as a float
            terms.append(f"{c} {s}" if re.match(r"[eE]\d", s) else f"{c}{s}")
    return " + ".join(terms) if terms else "0"


def render_network(net: Network) -> str:
    """Canonical text: species header then one ``->`` line per reaction."""
    lines = ["species " + ", ".join(net.species) + ";"]
    for r in net.reactions:
        lines.append(
            f"{format_complex(r.source, net.species)} -> {format_complex(r.target, net.species)}, k={r.k!r}"
        )
    return "\n".join(lines) + "\n"


def network_to_dict(net: Network) -> dict:
    return {
        "species": list(net.species),
        "complexes": [list(z) for z in net.complexes],
        "complex_labels": [format_complex(z, net.species) for z in net.complexes],
        "reactions": [
            {
                "source": list(r.source),
                "target": list(r.target),
                "label": f"{format_complex(r.source, net.species)} -> {format_complex(r.target, net.species)}",
                "k": r.k,
                "zeta": list(r.zeta),
            }
            for r in net.reactions
        ],
    }


# --------------------------------------------------------------------------
# structure


@dataclass(frozen=True)
class StoichiometricBasis:
    basis: np.ndarray  # (dim, d), orthonormal rows
    dim: int


@dataclass(frozen=True)
class CompatibilityClass:
    anchor: np.ndarray
    basis: StoichiometricBasis
    conserved: np.ndarray  # (d - dim, d), orthonormal rows
    values: np.ndarray  # <w, anchor> per conserved row

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            return False
        if self.conserved.shape[0] == 0:
            return True
        return bool(np.all(np.abs(self.conserved @ x - self.values) <= tol * max(1.0, np.abs(self.values).max())))

    def project(self, x) -> np.ndarray:
        """Orthogonal projection of ``x`` onto the affine class (no sign check)."""
        x = np.asarray(x, dtype=float)
        if self.conserved.shape[0] == 0:
            return x.copy()
        return x - self.conserved.T @ (self.conserved @ x - self.values)


def stoichiometric_basis(net: Network) -> StoichiometricBasis:
    """Orthonormal basis of the span of the reaction vectors."""
    Z = net.zeta.astype(float).T  # d x R
    q, r, _ = qr(Z, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r)) if r.size else np.zeros(0)
    rank = int(np.sum(diag > RANK_TOL))
    basis = q[:, :rank].T.copy()
    # sign convention: first nonzero entry of each basis vector positive
    for row in basis:
        nz = np.flatnonzero(np.abs(row) > RANK_TOL)
        if nz.size and row[nz[0]] < 0:
            row *= -1
    basis.setflags(write=False)
    return StoichiometricBasis(basis, rank)


def conserved_vectors(net: Network) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the stoichiometric subspace."""
    Z = net.zeta.astype(float)
    W = null_space(Z, rcond=RANK_TOL).T if Z.size else np.eye(net.d)
    for row in W:
        nz = np.flatnonzero(np.abs(row) > RANK_TOL)
        if nz.size and row[nz[0]] < 0:
            row *= -1
    return W


def compatibility_class(net: Network, x0) -> CompatibilityClass:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (net.d,):
        raise InputError(f"state has length {x0.size}, network has {net.d} species")
    if np.any(x0 < 0):
        raise InputError("initial state must be nonnegative")
    W = conserved_vectors(net)
    return CompatibilityClass(x0.copy(), stoichiometric_basis(net), W, W @ x0)


def complex_graph(net: Network) -> csr_matrix:
    index = {z: i for i, z in enumerate(net.complexes)}
    rows = [index[r.source] for r in net.reactions]
    cols = [index[r.target] for r in net.reactions]
    m = len(net.complexes)
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))


def linkage_classes(net: Network) -> np.ndarray:
    """Strongly connected component label per complex."""
    _, labels = connected_components(complex_graph(net), directed=True, connection="strong")
    return labels


def is_weakly_reversible(net: Network) -> bool:
    labels = linkage_classes(net)
    index = {z: i for i, z in enumerate(net.complexes)}
    return all(labels[index[r.source]] == labels[index[r.target]] for r in net.reactions)
