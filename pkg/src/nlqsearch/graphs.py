"""Graph families, strongly regular parameter checks and the reduced class basis.

A search on a vertex-transitive-enough graph only ever explores the span of
the class vectors |m_i> of an equitable partition seeded by the marked set.
``collapse`` finds that partition by colour refinement and ``collapse_analytic``
writes the same matrix directly from the family parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, isqrt

import numpy as np

FAMILIES = (
    "complete",
    "paley",
    "square_lattice",
    "latin_square",
    "triangular",
    "hypercube",
    "petersen",
)

_SRG_FAMILIES = ("paley", "square_lattice", "latin_square", "triangular", "petersen")

# Outer 5-cycle, spokes and inner pentagram; vertex 0 is the usual marked vertex.
_PETERSEN_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4), (0, 4),
    (0, 5), (1, 6), (2, 7), (3, 8), (4, 9),
    (5, 7), (5, 8), (6, 8), (6, 9), (7, 9),
)

# Paley(9) over GF(9) = Z_3[i], vertex a + 3b <-> a + b i (computed once, frozen here).
_PALEY9_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 6), (1, 2), (1, 4), (1, 7), (2, 5), (2, 8),
    (3, 4), (3, 5), (3, 6), (4, 5), (4, 7), (5, 8), (6, 7), (6, 8), (7, 8),
)


@dataclass(frozen=True)
class SrgParams:
    n_vertices: int
    degree: int
    lambda_common: int
    mu_common: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n_vertices, self.degree, self.lambda_common, self.mu_common)


@dataclass(frozen=True)
class FamilySpec:
    family: str
    size_param: int | None = None


@dataclass(frozen=True)
class Graph:
    adjacency: np.ndarray
    name: str = ""
    params: SrgParams | None = None

    @property
    def n_vertices(self) -> int:
        return int(self.adjacency.shape[0])


@dataclass(frozen=True)
class CollapsedGraph:
    class_sizes: tuple[int, ...]
    reduced_adjacency: np.ndarray
    degree: int | None = None
    # Vertex membership per class; None when built analytically.
    classes: tuple[tuple[int, ...], ...] | None = None
    # Number of leading classes made of marked vertices (1 unless the marked set splits).
    n_marked_classes: int = 1
    complete: bool = field(default=False)

    @property
    def n_vertices(self) -> int:
        return int(sum(self.class_sizes))

    @property
    def marked_count(self) -> int:
        return int(sum(self.class_sizes[: self.n_marked_classes]))


def srg_check(params: SrgParams) -> dict:
    """Feasibility report: counting identity, bounds and conference (Type I) test."""
    n, k, lam, mu = params.as_tuple()
    if min(n, k, lam, mu) < 0:
        raise ValueError("SRG parameters must be non-negative")
    violations = []
    if not 0 < k < n:
        violations.append(f"need 0 < k < N, got k={k}, N={n}")
    if lam > k - 1:
        violations.append(f"need lambda <= k-1, got lambda={lam}, k={k}")
    if mu > k:
        violations.append(f"need mu <= k, got mu={mu}, k={k}")
    lhs, rhs = k * (k - lam - 1), (n - k - 1) * mu
    if lhs != rhs:
        violations.append(f"k(k-lambda-1)={lhs} != (N-k-1)mu={rhs}")
    feasible = not violations
    if not feasible:
        kind = "neither"
    elif (n - 1) * (lam - mu) + 2 * k == 0:
        kind = "TypeI"
    else:
        kind = "TypeII"
    return {"feasible": feasible, "type": kind, "violations": violations}


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, isqrt(q) + 1))


def _adjacency_from_edges(n: int, edges) -> np.ndarray:
    a = np.zeros((n, n), dtype=np.int8)
    for u, v in edges:
        a[u, v] = a[v, u] = 1
    return a


def family_params(spec: FamilySpec) -> SrgParams | None:
    """SRG parameters of a family instance (None for complete graphs and hypercubes)."""
    fam, t = spec.family, spec.size_param
    _validate_spec(spec)
    if fam == "petersen":
        return SrgParams(10, 3, 0, 1)
    if fam == "paley":
        h = (t - 1) // 4
        return SrgParams(t, 2 * h, h - 1, h)
    if fam == "square_lattice":
        return SrgParams(t * t, 2 * (t - 1), t - 2, 2)
    if fam == "latin_square":
        return SrgParams(t * t, 3 * (t - 1), t, 6)
    if fam == "triangular":
        return SrgParams(t * (t - 1) // 2, 2 * (t - 2), t - 2, 4)
    return None


def _validate_spec(spec: FamilySpec) -> None:
    fam, t = spec.family, spec.size_param
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {fam!r}")
    if fam == "petersen":
        return
    if t is None or int(t) != t or t < 1:
        raise ValueError(f"family {fam} needs a positive integer size_param")
    if fam == "complete" and t < 2:
        raise ValueError("complete graph needs N >= 2")
    if fam == "paley" and t != 9 and not (_is_prime(t) and t % 4 == 1):
        raise ValueError("paley needs a prime q = 1 (mod 4), or q = 9")
    if fam == "square_lattice" and t < 2:
        raise ValueError("square_lattice needs t >= 2")
    if fam == "latin_square" and t < 3:
        raise ValueError("latin_square needs t >= 3")
    if fam == "triangular" and t < 4:
        raise ValueError("triangular needs t >= 4")


def build_graph(spec: FamilySpec) -> Graph:
    _validate_spec(spec)
    fam, t = spec.family, spec.size_param
    if fam == "complete":
        a = np.ones((t, t), dtype=np.int8) - np.eye(t, dtype=np.int8)
    elif fam == "petersen":
        a = _adjacency_from_edges(10, _PETERSEN_EDGES)
    elif fam == "paley":
        if t == 9:
            a = _adjacency_from_edges(9, _PALEY9_EDGES)
        else:
            residues = {(x * x) % t for x in range(1, t)}
            diff = (np.arange(t)[:, None] - np.arange(t)[None, :]) % t
            a = np.isin(diff, list(residues)).astype(np.int8)
    elif fam == "hypercube":
        idx = np.arange(2**t)
        x = idx[:, None] ^ idx[None, :]
        a = ((x & (x - 1)) == 0) & (x != 0)
        a = a.astype(np.int8)
    else:
        # Cells (r, c) of a t x t grid, vertex r*t + c.
        r, c = np.divmod(np.arange(t * t), t)
        same_r = r[:, None] == r[None, :]
        same_c = c[:, None] == c[None, :]
        if fam == "square_lattice":
            rel = same_r | same_c
        elif fam == "latin_square":
            s = (r + c) % t
            rel = same_r | same_c | (s[:, None] == s[None, :])
        else:  # triangular: vertices are 2-subsets of {0..t-1}
            pairs = [(i, j) for i in range(t) for j in range(i + 1, t)]
            p = np.array(pairs)
            share = (p[:, None, :, None] == p[None, :, None, :]).any(axis=(2, 3))
            rel = share
        a = rel.astype(np.int8)
        np.fill_diagonal(a, 0)
    a.setflags(write=False)
    name = fam if t is None else f"{fam}({t})"
    return Graph(adjacency=a, name=name, params=family_params(spec))


def _check_graph(adjacency: np.ndarray) -> np.ndarray:
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(a) != 0):
        raise ValueError("adjacency must have zero diagonal")
    return a.astype(np.int64)


def equitable_partition(adjacency: np.ndarray, marked) -> list[list[int]]:
    """Coarsest equitable refinement of {marked, rest}, marked classes first.

    Classes are ordered by (contains marked vertices, smallest vertex index).
    """
    a = _check_graph(adjacency)
    n = a.shape[0]
    marked = sorted(set(int(v) for v in marked))
    if not marked:
        raise ValueError("marked set must be non-empty")
    if marked[0] < 0 or marked[-1] >= n:
        raise ValueError("marked vertex out of range")
    is_marked = np.zeros(n, dtype=bool)
    is_marked[marked] = True
    colors = np.where(is_marked, 0, 1)
    n_classes = len(np.unique(colors))
    while True:
        onehot = np.zeros((n, colors.max() + 1), dtype=np.int64)
        onehot[np.arange(n), colors] = 1
        signature = np.column_stack([colors, a @ onehot])
        _, first, inverse = np.unique(signature, axis=0, return_index=True, return_inverse=True)
        order = sorted(range(len(first)), key=lambda c: (not is_marked[first[c]], first[c]))
        relabel = np.empty(len(first), dtype=np.int64)
        relabel[order] = np.arange(len(first))
        colors = relabel[np.ravel(inverse)]
        if len(first) == n_classes:
            break
        n_classes = len(first)
    return [np.flatnonzero(colors == c).tolist() for c in range(n_classes)]


def collapse(graph: Graph, marked) -> CollapsedGraph:
    a = _check_graph(graph.adjacency)
    classes = equitable_partition(a, marked)
    sizes = np.array([len(c) for c in classes], dtype=float)
    m = len(classes)
    red = np.zeros((m, m))
    for i, ci in enumerate(classes):
        row = a[ci[0]]
        for j, cj in enumerate(classes):
            red[i, j] = row[cj].sum() * np.sqrt(sizes[i] / sizes[j])
    red = 0.5 * (red + red.T)
    red.setflags(write=False)
    degrees = a.sum(axis=1)
    degree = int(degrees[0]) if np.all(degrees == degrees[0]) else None
    marked_set = set(int(v) for v in marked)
    n_marked_classes = sum(1 for c in classes if c[0] in marked_set)
    return CollapsedGraph(
        class_sizes=tuple(int(s) for s in sizes),
        reduced_adjacency=red,
        degree=degree,
        classes=tuple(tuple(c) for c in classes),
        n_marked_classes=n_marked_classes,
        complete=bool(degree == a.shape[0] - 1),
    )


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=float)
    m.setflags(write=False)
    return m


def complete_collapsed(n: int, marked_count: int = 1) -> CollapsedGraph:
    k = int(marked_count)
    if not 1 <= k < n:
        raise ValueError("need 1 <= marked_count < N")
    off = np.sqrt(k) * np.sqrt(n - k)
    red = _frozen([[k - 1, off], [off, n - k - 1]])
    return CollapsedGraph((k, n - k), red, degree=n - 1, complete=True)


def srg_collapsed(params: SrgParams) -> CollapsedGraph:
    report = srg_check(params)
    if not report["feasible"]:
        raise ValueError("infeasible SRG parameters: " + "; ".join(report["violations"]))
    n, k, lam, mu = params.as_tuple()
    ab = np.sqrt(mu) * np.sqrt(k - lam - 1)
    red = _frozen([[0.0, np.sqrt(k), 0.0], [np.sqrt(k), lam, ab], [0.0, ab, k - mu]])
    return CollapsedGraph((1, k, n - k - 1), red, degree=k)


def hypercube_collapsed(n: int) -> CollapsedGraph:
    if n < 1:
        raise ValueError("hypercube dimension must be positive")
    red = np.zeros((n + 1, n + 1))
    for j in range(n):
        red[j, j + 1] = red[j + 1, j] = np.sqrt((n - j) * (j + 1))
    return CollapsedGraph(tuple(comb(n, j) for j in range(n + 1)), _frozen(red), degree=n)


def collapse_analytic(spec: FamilySpec | SrgParams, marked_count: int = 1) -> CollapsedGraph:
    if isinstance(spec, SrgParams):
        if marked_count != 1:
            raise ValueError("SRG reduction supports a single marked vertex")
        return srg_collapsed(spec)
    _validate_spec(spec)
    if spec.family == "complete":
        return complete_collapsed(spec.size_param, marked_count)
    if marked_count != 1:
        raise ValueError(f"{spec.family} reduction supports a single marked vertex")
    if spec.family == "hypercube":
        return hypercube_collapsed(spec.size_param)
    return srg_collapsed(family_params(spec))


def edge_list_text(graph: Graph) -> str:
    u, v = np.nonzero(np.triu(graph.adjacency))
    return "".join(f"{a} {b}\n" for a, b in zip(u.tolist(), v.tolist()))


def read_edge_list(text: str, n_vertices: int | None = None) -> Graph:
    edges = [tuple(int(x) for x in line.split()) for line in text.splitlines() if line.strip()]
    for e in edges:
        if len(e) != 2 or e[0] == e[1] or min(e) < 0:
            raise ValueError(f"bad edge line {e}")
    n = n_vertices if n_vertices is not None else 1 + max(max(e) for e in edges)
    return Graph(adjacency=_adjacency_from_edges(n, edges))


def collapsed_to_json(cg: CollapsedGraph) -> str:
    return json.dumps(
        {
            "class_sizes": list(cg.class_sizes),
            "reduced_adjacency": cg.reduced_adjacency.tolist(),
            "degree": cg.degree,
        }
    )


def collapsed_from_json(text: str) -> CollapsedGraph:
    d = json.loads(text)
    red = _frozen(d["reduced_adjacency"])
    n = sum(d["class_sizes"])
    deg = d.get("degree")
    return CollapsedGraph(tuple(d["class_sizes"]), red, deg, complete=deg == n - 1 and len(d["class_sizes"]) == 2)
