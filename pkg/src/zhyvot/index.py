"""Traces of spectral-projection compressions, spectral-flow pairings, Schottky recovery.

Only trace values are computed; the modular operator itself is never built.
Every closed-form value is cross-checked against the path-sum representation
of the spectral projections.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import AlgebraElement, Monomial, adjoint, phi
from .errors import (
    AmbiguousPairingError,
    CompositionError,
    InconsistentPairingError,
    OutOfClosedFormError,
    StructuralError,
)
from .graph import Path, ZhyvotGraph, enumerate_paths
from .scalars import format_exact
from .weights import SpecialWeight


@dataclass(frozen=True)
class ProjTraceQuery:
    compressor: object  # vertex id or Path
    level: int


@dataclass(frozen=True)
class LoopSpec:
    path: Path

    @property
    def range_vertex(self) -> str:
        return self.path.target


def _require_adapted(weight):
    if not isinstance(weight, SpecialWeight) or not weight.is_adapted():
        raise StructuralError("needs a special weight with n_e = 1 exactly on the zhyvot")


def _as_path(graph: ZhyvotGraph, compressor) -> Path:
    if isinstance(compressor, Path):
        return graph.expanded.check_path(compressor)
    if isinstance(compressor, str):
        if not graph.expanded.has_vertex(compressor):
            raise StructuralError(f"unknown vertex {compressor!r}")
        return Path.vertex(compressor)
    return graph.expanded.path(compressor)


def _sigma(graph, p: Path) -> int:
    return sum(e in graph.core_edges for e in p.edges)


def core_paths_into(graph: ZhyvotGraph, v: str, m: int) -> list[Path]:
    """Paths of σ-length m ending at the zhyvot vertex v (they lie in M)."""
    core = graph.core
    out = []

    def back(x, edges):
        if len(edges) == m:
            out.append(Path(x, v, tuple(reversed(edges))))
            return
        for e in core.in_edges(x):
            edges.append(e.id)
            back(e.src, edges)
            edges.pop()

    back(v, [])
    return sorted(out, key=lambda p: (p.source, p.edges))


def trace_by_paths(weight: SpecialWeight, compressor, k: int, graph: ZhyvotGraph | None = None):
    """phi_D(T Phi_k) for T = p_v or S_gamma S_gamma^*, from the path-sum form of Phi_k.

    k > 0: sum over zhyvot paths mu of σ-length k of lambda^k phi(S_mu^* T S_mu).
    k = 0: sum over vertices v of phi(p_v T p_v).
    k < 0: (1/|s|_m) sum over zhyvot paths mu of σ-length m = -k ending at s = s(T)
           of lambda^-m phi(S_mu T S_mu^*).
    """
    _require_adapted(weight)
    graph = graph or weight.graph
    gamma = _as_path(graph, compressor)
    T = AlgebraElement(Monomial.theta(gamma))
    lam = weight.lam_value
    if k > 0:
        total = Fraction(0)
        for v in sorted(graph.core_vertices):
            for mu in enumerate_paths(graph, v, sigma=k):
                s = Monomial.s(mu)
                total = total + lam ** k * phi(weight, AlgebraElement(adjoint(s)) * T * s)
        return total
    if k == 0:
        total = Fraction(0)
        for v in graph.expanded.vertices:
            p = AlgebraElement(Monomial.projection(v))
            total = total + phi(weight, p * T * p)
        return total
    m = -k
    s0 = gamma.source
    if s0 not in graph.core_vertices:
        raise OutOfClosedFormError(f"negative levels need s(gamma) in the zhyvot, got {s0!r}")
    mus = core_paths_into(graph, s0, m)
    if not mus:
        raise OutOfClosedFormError(f"no zhyvot path of σ-length {m} ends at {s0!r}")
    total = Fraction(0)
    for mu in mus:
        s = Monomial.s(mu)
        total = total + lam ** (-m) * phi(weight, AlgebraElement(s) * T * adjoint(s))
    return total / len(mus)


def proj_trace(weight: SpecialWeight, query: ProjTraceQuery | None = None, graph: ZhyvotGraph | None = None,
               *, compressor=None, level: int | None = None):
    """Closed form lambda^{|gamma|_σ} g(r(gamma)) for |k| <= |gamma|_σ, checked against path sums."""
    if query is None:
        query = ProjTraceQuery(compressor, level)
    _require_adapted(weight)
    graph = graph or weight.graph
    gamma = _as_path(graph, query.compressor)
    k = query.level
    n = _sigma(graph, gamma)
    if gamma.is_vertex():
        if gamma.source not in graph.core_vertices or k > 0:
            raise OutOfClosedFormError(
                f"vertex compressor needs a zhyvot vertex and k <= 0 (got k={k})")
    else:
        if gamma.source not in graph.core_vertices or gamma.target not in graph.core_vertices or n == 0:
            raise OutOfClosedFormError("closed form needs s(gamma), r(gamma) in M and |gamma|_σ > 0")
        if abs(k) > n:
            raise OutOfClosedFormError(f"|k|={abs(k)} exceeds |gamma|_σ={n}; no closed form is available")
    closed = weight.lam_value ** n * weight.value(gamma.target)
    brute = trace_by_paths(weight, gamma, k, graph)
    if brute != closed:
        raise AssertionError(f"trace mismatch at k={k}: closed form {format_exact(closed)} vs path sum {format_exact(brute)}")
    return closed


@dataclass(frozen=True)
class PairingReport:
    k: int
    lam: object
    g_range: object
    value: object
    terms: tuple  # phi_D(S_gamma S_gamma^* Phi_j), j = 0..k-1
    level_trace: object  # lambda^k g(r(gamma))
    range_vertex: str

    def __float__(self):
        return float(self.value)


def spectral_flow_pairing(weight: SpecialWeight, loop, graph: ZhyvotGraph | None = None) -> PairingReport:
    """-sum_{j<k} phi_D(S_gamma S_gamma^* Phi_j), asserted equal to -k lambda^k g(r(gamma))."""
    graph = graph or weight.graph
    gamma = loop.path if isinstance(loop, LoopSpec) else _as_path(graph, loop)
    if gamma.source != gamma.target:
        raise CompositionError(f"{gamma!r} is not closed")
    k = _sigma(graph, gamma)
    if k < 1:
        raise ValueError("the loop needs positive σ-length")
    terms = tuple(proj_trace(weight, ProjTraceQuery(gamma, j), graph) for j in range(k))
    value = -sum(terms, Fraction(0))
    lam = weight.lam_value
    g_r = weight.value(gamma.target)
    closed = -k * lam ** k * g_r
    if value != closed:
        raise AssertionError(f"pairing {format_exact(value)} differs from -k lambda^k g = {format_exact(closed)}")
    return PairingReport(k, lam, g_r, value, terms, lam ** k * g_r, gamma.target)


def _close(a, b, tol):
    if tol is None:
        return a == b
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(b)))


def schottky_candidates(value, lam, g, kmax: int = 10_000, tol: float | None = None) -> list[int]:
    """All k >= 1 with -k lambda^k g == value."""
    target = -value
    out, k, pw = [], 1, lam
    peak_passed = False
    while k <= kmax:
        cur = k * pw * g
        if _close(cur, target, tol):
            out.append(k)
        nxt = (k + 1) * pw * lam * g
        if nxt < cur:
            peak_passed = True
        if peak_passed and cur < target and not _close(cur, target, tol):
            break
        k += 1
        pw = pw * lam
    return out


def recover_schottky(pairing_value, weight: SpecialWeight | None = None, loop_range_vertex: str | None = None,
                     *, level_trace=None, tol: float | None = None) -> int:
    """The integer k = ℓ(gamma) behind a pairing value -k lambda^k g(r(gamma)).

    k -> k lambda^k is not injective (lambda = 1/2 gives the same value for
    k = 1 and 2), so when several k fit, the level trace lambda^k g(r(gamma))
    decides; passing a PairingReport supplies it automatically.
    """
    if isinstance(pairing_value, PairingReport):
        rep = pairing_value
        value, lam, g = rep.value, rep.lam, rep.g_range
        level_trace = rep.level_trace if level_trace is None else level_trace
    else:
        if weight is None or loop_range_vertex is None:
            raise ValueError("need the weight and the range vertex of the loop")
        value, lam, g = pairing_value, weight.lam_value, weight.value(loop_range_vertex)
    if g == 0:
        raise InconsistentPairingError("g(r(gamma)) = 0 carries no information")
    cands = schottky_candidates(value, lam, g, tol=tol)
    if not cands:
        raise InconsistentPairingError(f"no integer k >= 1 gives pairing {format_exact(value)}")
    if len(cands) == 1:
        return cands[0]
    if level_trace is not None:
        hits = [k for k in cands if _close(lam ** k * g, level_trace, tol)]
        if len(hits) == 1:
            return hits[0]
    raise AmbiguousPairingError(
        f"pairing {format_exact(value)} fits k in {cands}; supply the level trace lambda^k g", cands)
