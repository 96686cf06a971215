"""Benchmark Markov chains and import of external ones.

Every generator returns a :class:`ChainProblem` holding the column-stochastic
transition matrix A, the singular operator B = I - A, and whatever metadata
(lattice coordinates, point clouds, construction parameters) the coarsening
and plotting stages need.  Construction validates stochasticity and
irreducibility, so a ChainProblem always has a unique strictly positive
steady-state vector.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .sparse import csr_from_coo, identity, load_matrix_market, make_csr

#: families understood by the generators below
FAMILIES = ("birth-death", "uniform2d", "tandem", "planar", "petri", "imported")


@dataclass(frozen=True)
class ChainProblem:
    """A column-stochastic matrix A, its singular companion B = I - A, and metadata."""

    A: object
    B: object
    n: int
    family: str
    params: dict
    geometry: np.ndarray | None = None
    seed: int | None = None


def _finish(A, family, params, geometry=None, seed=None) -> ChainProblem:
    """Validate the chain invariants and assemble the problem record."""
    A = make_csr(A)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("transition matrix must be square")
    if A.nnz and A.data.min() < 0.0:
        raise ValueError("transition matrix has negative entries")
    colsums = np.asarray(A.sum(axis=0)).ravel()
    worst = int(np.argmax(np.abs(colsums - 1.0)))
    if abs(colsums[worst] - 1.0) > 1e-12:
        raise ValueError(
            f"columns do not sum to one: worst column {worst} sums to {colsums[worst]:.16g}")
    ncomp, labels = connected_components(A, directed=True, connection="strong")
    if ncomp != 1:
        sizes = np.bincount(labels)
        head = np.flatnonzero(labels == 0)[:5].tolist()
        raise ValueError(
            f"chain is reducible: {ncomp} strongly connected components with sizes "
            f"{sizes.tolist()}; component 0 contains states {head}")
    B = make_csr(identity(n) - A)
    return ChainProblem(A=A, B=B, n=n, family=family, params=dict(params),
                        geometry=geometry, seed=seed)


def birth_death(n: int, mu: float = 0.96) -> ChainProblem:
    """Biased random walk on a path of ``n`` states.

    Interior states step right with probability ``mu`` and left with
    1 - mu; the end states keep the missing mass as a self-loop, which
    keeps B tridiagonal and the chain irreducible.  The stationary vector
    decays geometrically away from the favored end.
    """
    if n < 2:
        raise ValueError("need at least two states")
    if not 0.0 < mu < 1.0:
        raise ValueError("mu must lie strictly between 0 and 1")
    rows, cols, vals = [], [], []
    for j in range(n):
        if j == 0:
            rows += [1, 0]
            cols += [0, 0]
            vals += [mu, 1.0 - mu]
        elif j == n - 1:
            rows += [n - 2, n - 1]
            cols += [j, j]
            vals += [1.0 - mu, mu]
        else:
            rows += [j + 1, j - 1]
            cols += [j, j]
            vals += [mu, 1.0 - mu]
    A = csr_from_coo(rows, cols, vals, (n, n))
    geometry = np.arange(n, dtype=np.float64).reshape(n, 1)
    return _finish(A, "birth-death", {"n": n, "mu": mu}, geometry=geometry)


def uniform_2d(side: int) -> ChainProblem:
    """Random walk on a side x side lattice with 4-neighbor moves.

    Each state moves to every lattice neighbor with probability equal to
    the reciprocal of its number of neighbors, so the stationary vector is
    proportional to the node degree.
    """
    if side < 2:
        raise ValueError("side must be at least 2")
    n = side * side

    def node(ix, iy):
        return iy * side + ix

    rows, cols, vals = [], [], []
    for iy in range(side):
        for ix in range(side):
            j = node(ix, iy)
            nbrs = []
            if ix > 0:
                nbrs.append(node(ix - 1, iy))
            if ix < side - 1:
                nbrs.append(node(ix + 1, iy))
            if iy > 0:
                nbrs.append(node(ix, iy - 1))
            if iy < side - 1:
                nbrs.append(node(ix, iy + 1))
            p = 1.0 / len(nbrs)
            for i in nbrs:
                rows.append(i)
                cols.append(j)
                vals.append(p)
    A = csr_from_coo(rows, cols, vals, (n, n))
    xs, ys = np.meshgrid(np.arange(side, dtype=np.float64),
                         np.arange(side, dtype=np.float64))
    geometry = np.column_stack([xs.ravel(), ys.ravel()])
    return _finish(A, "uniform2d", {"side": side, "n": n}, geometry=geometry)


def tandem_queue(side: int, lam: float = 11.0 / 31.0, mu1: float = 10.0 / 31.0,
                 mu2: float = 10.0 / 31.0) -> ChainProblem:
    """Embedded chain of two queueing stations in series, truncated to a grid.

    States are (q1, q2) pairs of queue lengths capped at side - 1.  An
    arrival (probability ``lam``) grows q1, service at station 1
    (``mu1``) moves a customer from q1 to q2, and service at station 2
    (``mu2``) removes one from q2.  Events that would leave the grid are
    folded into self-loops so every column still sums to one.  The matrix
    is structurally nonsymmetric with a complex spectrum.
    """
    if side < 2:
        raise ValueError("side must be at least 2")
    if abs(lam + mu1 + mu2 - 1.0) > 1e-12:
        raise ValueError("transition probabilities must sum to 1")
    n = side * side

    def node(q1, q2):
        return q2 * side + q1

    rows, cols, vals = [], [], []
    for q2 in range(side):
        for q1 in range(side):
            j = node(q1, q2)
            stay = 0.0
            if q1 + 1 <= side - 1:
                rows.append(node(q1 + 1, q2)); cols.append(j); vals.append(lam)
            else:
                stay += lam
            if q1 >= 1 and q2 + 1 <= side - 1:
                rows.append(node(q1 - 1, q2 + 1)); cols.append(j); vals.append(mu1)
            else:
                stay += mu1
            if q2 >= 1:
                rows.append(node(q1, q2 - 1)); cols.append(j); vals.append(mu2)
            else:
                stay += mu2
            if stay > 0.0:
                rows.append(j); cols.append(j); vals.append(stay)
    A = csr_from_coo(rows, cols, vals, (n, n))
    q1s, q2s = np.meshgrid(np.arange(side, dtype=np.float64),
                           np.arange(side, dtype=np.float64))
    geometry = np.column_stack([q1s.ravel(), q2s.ravel()])
    return _finish(A, "tandem",
                   {"side": side, "n": n, "lambda": lam, "mu1": mu1, "mu2": mu2},
                   geometry=geometry)


# ---------------------------------------------------------------------------
# Random planar graphs via incremental Delaunay triangulation
# ---------------------------------------------------------------------------

def _circumcircle(a, b, c):
    """Circumcenter and squared radius of a triangle, or None if degenerate."""
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if abs(d) < 1e-14:
        return None
    a2 = a[0] * a[0] + a[1] * a[1]
    b2 = b[0] * b[0] + b[1] * b[1]
    c2 = c[0] * c[0] + c[1] * c[1]
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2
    return ux, uy, r2


def delaunay_edges(points: np.ndarray, tol: float = 1e-12) -> set[tuple[int, int]]:
    """Edge set of the Delaunay triangulation of ``points`` (incremental insertion).

    A large enclosing triangle is seeded first; each point removes the
    triangles whose circumcircle contains it (in-circle test with absolute
    tolerance ``tol``) and re-triangulates the resulting cavity.  Raises
    ``ValueError`` for degenerate (collinear) configurations.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 3:
        raise ValueError("need at least three points")
    cx, cy = pts.mean(axis=0)
    span = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]), 1e-3)
    big = 50.0 * span
    P = np.vstack([pts, [[cx - big, cy - big], [cx + big, cy - big], [cx, cy + big]]])

    tri_v = [(n, n + 1, n + 2)]
    cc = _circumcircle(P[n], P[n + 1], P[n + 2])
    if cc is None:
        raise ValueError("degenerate enclosing triangle")
    centers = [cc[:2]]
    radii2 = [cc[2]]
    alive = [True]

    for p in range(n):
        px, py = P[p]
        ctr = np.asarray(centers)
        r2 = np.asarray(radii2)
        live = np.asarray(alive)
        d2 = (ctr[:, 0] - px) ** 2 + (ctr[:, 1] - py) ** 2
        bad = np.flatnonzero(live & (d2 <= r2 + tol))
        if bad.size == 0:
            raise ValueError(f"point {p} falls outside the triangulation (degenerate input)")
        edge_count: dict[tuple[int, int], int] = {}
        for t in bad:
            a, b, c = tri_v[t]
            for e in ((a, b), (b, c), (c, a)):
                key = (e[0], e[1]) if e[0] < e[1] else (e[1], e[0])
                edge_count[key] = edge_count.get(key, 0) + 1
            alive[t] = False
        for (a, b), cnt in edge_count.items():
            if cnt != 1:
                continue
            cc = _circumcircle(P[p], P[a], P[b])
            if cc is None:
                raise ValueError(f"collinear points while inserting point {p}")
            tri_v.append((p, a, b))
            centers.append(cc[:2])
            radii2.append(cc[2])
            alive.append(True)
        if len(tri_v) > 4 * (len(alive) - sum(alive)) and len(tri_v) > 4096:
            keep = [t for t in range(len(tri_v)) if alive[t]]
            tri_v = [tri_v[t] for t in keep]
            centers = [centers[t] for t in keep]
            radii2 = [radii2[t] for t in keep]
            alive = [True] * len(tri_v)

    edges: set[tuple[int, int]] = set()
    for t, ok in enumerate(alive):
        if not ok:
            continue
        a, b, c = tri_v[t]
        if a >= n or b >= n or c >= n:
            continue
        for e in ((a, b), (b, c), (a, c)):
            edges.add((min(e), max(e)))
    return edges


def random_planar(n: int, seed: int = 1) -> ChainProblem:
    """Random walk on the Delaunay triangulation of ``n`` uniform points.

    Transition probabilities are the reciprocals of the node degrees, and
    the point cloud is kept as geometry.  Deterministic for a fixed seed;
    degenerate point sets are retried with a deterministic perturbation.
    """
    if n < 4:
        raise ValueError("need at least four points")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pts = rng.random((n, 2))
    last_err = None
    for _ in range(3):
        try:
            edges = delaunay_edges(pts)
            break
        except ValueError as err:  # pragma: no cover - measure-zero inputs
            last_err = err
            pts = pts + 1e-9 * rng.standard_normal(pts.shape)
    else:  # pragma: no cover
        raise ValueError(f"could not triangulate the point set: {last_err}")
    deg = np.zeros(n, dtype=np.int64)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    if deg.min() == 0:
        raise ValueError("triangulation left an isolated point")
    rows, cols, vals = [], [], []
    for a, b in sorted(edges):
        rows.append(b); cols.append(a); vals.append(1.0 / deg[a])
        rows.append(a); cols.append(b); vals.append(1.0 / deg[b])
    A = csr_from_coo(rows, cols, vals, (n, n))
    return _finish(A, "planar", {"n": n}, geometry=pts, seed=seed)


# ---------------------------------------------------------------------------
# Stochastic Petri nets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PetriNetSpec:
    """A weighted Petri net: places, transitions with arc multiplicities, marking.

    Each transition is ``(inputs, outputs, weight)`` where inputs/outputs
    map place indices to multiplicities and ``weight`` is the positive
    firing weight used to split probability among enabled transitions.
    """

    places: int
    transitions: tuple
    initial_marking: tuple

    def __post_init__(self):
        if self.places < 1:
            raise ValueError("need at least one place")
        if len(self.initial_marking) != self.places:
            raise ValueError("initial marking length differs from place count")
        for idx, (inp, out, w) in enumerate(self.transitions):
            if not inp or not out:
                raise ValueError(f"transition {idx} must have at least one input and one output")
            if w <= 0.0:
                raise ValueError(f"transition {idx} has nonpositive firing weight")


def molloy_net(tokens: int) -> PetriNetSpec:
    """The classic five-place, five-transition fork/join net with a feedback arc.

    ``tokens`` tokens start in place 0; a firing splits one into the two
    branch places, the branches drain toward places 3 and 4, place 3 can
    recycle into place 1, and a synchronizing join returns one token to
    place 0.  The reachable marking count grows cubically in ``tokens``
    (5 states for one token, 506 for ten).
    """
    if tokens < 1:
        raise ValueError("need at least one token")
    transitions = (
        ({0: 1}, {1: 1, 2: 1}, 1.0),
        ({1: 1}, {3: 1}, 1.0),
        ({2: 1}, {4: 1}, 1.0),
        ({3: 1}, {1: 1}, 1.0),
        ({3: 1, 4: 1}, {0: 1}, 1.0),
    )
    return PetriNetSpec(places=5, transitions=transitions,
                        initial_marking=(tokens, 0, 0, 0, 0))


def petri_spec_to_json(spec: PetriNetSpec) -> str:
    doc = {
        "places": spec.places,
        "transitions": [
            {"inputs": {str(k): v for k, v in inp.items()},
             "outputs": {str(k): v for k, v in out.items()},
             "weight": w}
            for inp, out, w in spec.transitions
        ],
        "initial_marking": list(spec.initial_marking),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def petri_spec_from_json(text: str) -> PetriNetSpec:
    doc = json.loads(text)
    transitions = tuple(
        ({int(k): int(v) for k, v in t["inputs"].items()},
         {int(k): int(v) for k, v in t["outputs"].items()},
         float(t.get("weight", 1.0)))
        for t in doc["transitions"])
    return PetriNetSpec(places=int(doc["places"]), transitions=transitions,
                        initial_marking=tuple(int(x) for x in doc["initial_marking"]))


def petri_reachability(spec: PetriNetSpec, state_cap: int = 10 ** 6) -> ChainProblem:
    """Build the Markov chain on the reachable markings of a Petri net.

    Markings are enumerated breadth-first from the initial marking, which
    fixes the state ordering.  In each marking the enabled transitions
    fire with probability proportional to their weights; a marking with
    no enabled transition is a deadlock and rejected.
    """
    initial = tuple(spec.initial_marking)
    index = {initial: 0}
    order = [initial]
    queue = deque([initial])
    rows, cols, vals = [], [], []
    while queue:
        m = queue.popleft()
        j = index[m]
        enabled = []
        for inp, out, w in spec.transitions:
            if all(m[p] >= need for p, need in inp.items()):
                nxt = list(m)
                for p, need in inp.items():
                    nxt[p] -= need
                for p, add in out.items():
                    nxt[p] += add
                enabled.append((tuple(nxt), w))
        if not enabled:
            raise ValueError(f"deadlock: marking {m} enables no transition (chain not irreducible)")
        wsum = sum(w for _, w in enabled)
        for nxt, w in enabled:
            if nxt not in index:
                if len(index) >= state_cap:
                    raise ValueError(f"reachability set exceeds the state cap of {state_cap}")
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            rows.append(index[nxt])
            cols.append(j)
            vals.append(w / wsum)
    n = len(order)
    A = csr_from_coo(rows, cols, vals, (n, n))
    params = {"places": spec.places, "n_transitions": len(spec.transitions),
              "initial_marking": list(spec.initial_marking), "n": n}
    return _finish(A, "petri", params)


def import_chain(path) -> ChainProblem:
    """Load a chain from a Matrix Market file holding either A or B = I - A.

    The file kind is auto-detected from the column sums (near one for a
    stochastic A, near zero for B).  The reconstructed chain must pass the
    usual stochasticity and irreducibility checks.
    """
    M = load_matrix_market(path)
    if M.shape[0] != M.shape[1]:
        raise ValueError("imported matrix must be square")
    colsums = np.asarray(M.sum(axis=0)).ravel()
    if np.abs(colsums - 1.0).max(initial=0.0) <= 1e-8:
        A = M
    elif np.abs(colsums).max(initial=0.0) <= 1e-8:
        A = make_csr(identity(M.shape[0]) - M)
    else:
        worst = int(np.argmax(np.minimum(np.abs(colsums - 1.0), np.abs(colsums))))
        raise ValueError(
            f"file is neither column-stochastic nor zero-column-sum: column {worst} "
            f"sums to {colsums[worst]:.16g}")
    problem = _finish(A, "imported", {"path": str(path)})
    return problem


def make_chain(family: str, **kwargs) -> ChainProblem:
    """Dispatch to a generator by family name."""
    if family == "birth-death":
        return birth_death(kwargs["n"], kwargs.get("mu", 0.96))
    if family == "uniform2d":
        return uniform_2d(kwargs["side"])
    if family == "tandem":
        return tandem_queue(kwargs["side"], kwargs.get("lam", 11.0 / 31.0),
                            kwargs.get("mu1", 10.0 / 31.0), kwargs.get("mu2", 10.0 / 31.0))
    if family == "planar":
        return random_planar(kwargs["n"], kwargs.get("seed", 1))
    if family == "petri":
        spec = kwargs.get("spec") or molloy_net(kwargs["tokens"])
        return petri_reachability(spec, kwargs.get("state_cap", 10 ** 6))
    raise ValueError(f"unknown family {family!r}")
