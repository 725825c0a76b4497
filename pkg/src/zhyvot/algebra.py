"""Exact calculus of Cuntz-Krieger monomials S_mu S_nu^*.

Monomials are pairs of paths with a common range; an AlgebraElement is a
finite linear combination of them with exact coefficients.  Products use
the path-matching rule, so nothing here needs the graph except grading,
classification and the KMS functional.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import CompositionError, DepthError
from .graph import Path, ZhyvotGraph, enumerate_paths


@dataclass(frozen=True)
class Monomial:
    mu: Path
    nu: Path

    def __post_init__(self):
        if self.mu.target != self.nu.target:
            raise CompositionError(f"r(mu)={self.mu.target!r} differs from r(nu)={self.nu.target!r}")

    @classmethod
    def projection(cls, v: str) -> "Monomial":
        p = Path.vertex(v)
        return cls(p, p)

    @classmethod
    def s(cls, path: Path) -> "Monomial":
        """The partial isometry S_path."""
        return cls(path, Path.vertex(path.target))

    @classmethod
    def s_star(cls, path: Path) -> "Monomial":
        return cls(Path.vertex(path.target), path)

    @classmethod
    def theta(cls, path: Path) -> "Monomial":
        """The range projection S_path S_path^*."""
        return cls(path, path)

    def sort_key(self):
        return (self.mu.source, self.mu.edges, self.nu.source, self.nu.edges)

    def __repr__(self):
        def show(p):
            return p.source if p.is_vertex() else ".".join(p.edges)
        return f"S[{show(self.mu)}]S*[{show(self.nu)}]"


def multiply_monomials(a: Monomial, b: Monomial) -> Monomial | None:
    """S_mu S_nu^* . S_rho S_kappa^*, or None when the product is zero."""
    mu, nu, rho, kappa = a.mu, a.nu, b.mu, b.nu
    if len(nu) <= len(rho):
        if not nu.is_prefix_of(rho):
            return None
        rest = rho.edges[len(nu):]
        return Monomial(Path(mu.source, rho.target, mu.edges + rest), kappa)
    if not rho.is_prefix_of(nu):
        return None
    rest = nu.edges[len(rho):]
    return Monomial(mu, Path(kappa.source, nu.target, kappa.edges + rest))


class AlgebraElement:
    """Finite sum of monomials with exact coefficients; zero terms are dropped."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        acc = {}
        if isinstance(terms, Monomial):
            terms = {terms: Fraction(1)}
        for m, c in (terms.items() if isinstance(terms, dict) else (terms or [])):
            acc[m] = acc.get(m, 0) + c
        self._terms = {m: acc[m] for m in sorted(acc, key=Monomial.sort_key) if acc[m] != 0}

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __add__(self, other):
        other = _as_element(other)
        return AlgebraElement(list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self):
        return AlgebraElement({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_element(other))

    def __mul__(self, other):
        if isinstance(other, (AlgebraElement, Monomial)):
            other = _as_element(other)
            out = []
            for m1, c1 in self._terms.items():
                for m2, c2 in other._terms.items():
                    p = multiply_monomials(m1, m2)
                    if p is not None:
                        out.append((p, c1 * c2))
            return AlgebraElement(out)
        return AlgebraElement({m: c * other for m, c in self._terms.items()})

    def __rmul__(self, scalar):
        return AlgebraElement({m: scalar * c for m, c in self._terms.items()})

    def adjoint(self) -> "AlgebraElement":
        # coefficients live in real fields, so conjugation is trivial
        return AlgebraElement({adjoint(m): c for m, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, Monomial):
            other = _as_element(other)
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self):
        if not self._terms:
            return "0"
        return " + ".join(f"{c}*{m!r}" for m, c in self._terms.items())


def _as_element(x) -> AlgebraElement:
    if isinstance(x, AlgebraElement):
        return x
    if isinstance(x, Monomial):
        return AlgebraElement(x)
    raise TypeError(f"cannot treat {type(x).__name__} as an algebra element")


def multiply(a, b) -> AlgebraElement:
    """Product of monomials or elements; zero or a single monomial for monomials."""
    return _as_element(a) * _as_element(b)


def adjoint(a):
    if isinstance(a, Monomial):
        return Monomial(a.nu, a.mu)
    return _as_element(a).adjoint()


def graded_degree(graph: ZhyvotGraph, a: Monomial) -> int:
    """|mu|_sigma - |nu|_sigma."""
    ce = graph.core_edges
    return sum(e in ce for e in a.mu.edges) - sum(e in ce for e in a.nu.edges)


def check_monomial(graph: ZhyvotGraph, a: Monomial) -> Monomial:
    """Validate both paths in the expansion and refuse anything touching the boundary."""
    X = graph.expanded
    for p in (a.mu, a.nu):
        X.check_path(p)
        if X.touches_boundary(p):
            raise DepthError(f"{a!r} reaches the truncation boundary (depth {graph.depth})")
    return a


@dataclass(frozen=True)
class Classification:
    kind: str  # "F_k", "G_k", "split" or "not-in-F"
    terms: tuple = ()  # (Monomial, "F_k" | "G_k") pairs for a split
    element: AlgebraElement | None = None


def _sigma(graph, p: Path) -> int:
    return sum(e in graph.core_edges for e in p.edges)


def _direct_class(graph, a: Monomial, k: int) -> str | None:
    n, m = _sigma(graph, a.mu), _sigma(graph, a.nu)
    if n != m:
        return "not-in-F"
    if n >= k:
        return "F_k"
    r = a.mu.target
    if r not in graph.core_vertices or r in graph.core_sinks():
        return "G_k"
    return None


def classify_fixed(graph: ZhyvotGraph, a: Monomial, k: int) -> Classification:
    """Place a degree-0 monomial in F_k, G_k, or split it over paths rho with |rho| ⪯ k-n+1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    check_monomial(graph, a)
    kind = _direct_class(graph, a, k)
    if kind is not None:
        return Classification(kind, ((a, kind),) if kind != "not-in-F" else (), None)
    n = _sigma(graph, a.mu)
    rhos = enumerate_paths(graph, a.mu.target, upto=k - n + 1)
    terms, pieces = [], []
    for rho in rhos:
        t = Monomial(Path(a.mu.source, rho.target, a.mu.edges + rho.edges),
                     Path(a.nu.source, rho.target, a.nu.edges + rho.edges))
        check_monomial(graph, t)
        tk = _direct_class(graph, t, k)
        if tk not in ("F_k", "G_k"):
            raise AssertionError(f"expansion term {t!r} is neither in F_k nor G_k")
        terms.append((t, tk))
        pieces.append((t, Fraction(1)))
    return Classification("split", tuple(terms), AlgebraElement(pieces))


def path_lambda(weight, p: Path):
    return weight.path_lambda(p)


def phi(weight, a) -> object:
    """KMS functional: phi(S_mu S_nu^*) = delta_{mu,nu} lambda(nu) g(r(nu)), extended linearly."""
    total = Fraction(0)
    for m, c in _as_element(a).items():
        if m.mu == m.nu:
            total = total + c * weight.path_lambda(m.nu) * weight.value(m.nu.target)
    return total


def modular_sigma(weight, a) -> AlgebraElement:
    """sigma(S_mu S_nu^*) = (lambda(nu)/lambda(mu)) S_mu S_nu^*, the shift appearing in the KMS identity."""
    return AlgebraElement({m: c * weight.path_lambda(m.nu) / weight.path_lambda(m.mu)
                           for m, c in _as_element(a).items()})


def vertex_projections(vertices: Iterable[str]) -> list[Monomial]:
    return [Monomial.projection(v) for v in vertices]
