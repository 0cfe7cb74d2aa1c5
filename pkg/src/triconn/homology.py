"""Integer homology via Smith normal form, plus framed representatives.

Boundary matrices are exact integer matrices (arbitrary precision); the SNF
routine tracks the four change-of-basis matrices so that generator cycles,
torsion orders, bounding chains with boundary m_s * a_s, and the coordinate
map from 1-cycles to homology classes all come out of one decomposition.

Framed paths carry a facet with every edge; framed 2-chains carry a facet
with every oriented 2-simplex.  Both are the inputs the invariant and
reconstruction machinery consumes.
"""

from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    EdgeNotInComplex,
    NotAPath,
    ParseError,
    SimplexNotInComplex,
)
from .complexes import SimplicialComplex, perm_parity


# -- Smith normal form --------------------------------------------------------

def _snf(M):
    """Full decomposition: returns (U, Uinv, D, V, Vinv) with U*M*V = D."""
    rows = len(M)
    cols = len(M[0]) if rows else 0
    A = [list(r) for r in M]
    U = [[int(i == j) for j in range(rows)] for i in range(rows)]
    Uinv = [[int(i == j) for j in range(rows)] for i in range(rows)]
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]
    Vinv = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def row_op(dst, src, c):          # R_dst += c * R_src
        A[dst] = [a + c * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + c * b for a, b in zip(U[dst], U[src])]
        for r in Uinv:
            r[src] -= c * r[dst]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]
        for r in Uinv:
            r[i], r[j] = r[j], r[i]

    def negate_row(i):
        A[i] = [-a for a in A[i]]
        U[i] = [-a for a in U[i]]
        for r in Uinv:
            r[i] = -r[i]

    def col_op(dst, src, c):          # C_dst += c * C_src
        for r in A:
            r[dst] += c * r[src]
        for r in V:
            r[dst] += c * r[src]
        Vinv[src] = [a - c * b for a, b in zip(Vinv[src], Vinv[dst])]

    def swap_cols(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vinv[i], Vinv[j] = Vinv[j], Vinv[i]

    def find_pivot(t):
        best = None
        where = None
        for r in range(t, rows):
            row = A[r]
            for c in range(t, cols):
                e = row[c]
                if e:
                    a = abs(e)
                    if a == 1:
                        return r, c
                    if best is None or a < best:
                        best, where = a, (r, c)
        return where

    t = 0
    limit = min(rows, cols)
    while t < limit:
        pos = find_pivot(t)
        if pos is None:
            break
        r, c = pos
        if r != t:
            swap_rows(t, r)
        if c != t:
            swap_cols(t, c)
        while True:
            if A[t][t] < 0:
                negate_row(t)
            # clear the pivot column
            dirty = False
            for r in range(rows):
                if r != t and A[r][t]:
                    q = A[r][t] // A[t][t]
                    if q:
                        row_op(r, t, -q)
                    if A[r][t]:
                        swap_rows(t, r)
                        dirty = True
                        break
            if dirty:
                continue
            # clear the pivot row
            for c in range(cols):
                if c != t and A[t][c]:
                    q = A[t][c] // A[t][t]
                    if q:
                        col_op(c, t, -q)
                    if A[t][c]:
                        swap_cols(t, c)
                        dirty = True
                        break
            if dirty:
                continue
            # enforce divisibility of the remaining block
            offender = None
            p = A[t][t]
            for r in range(t + 1, rows):
                row = A[r]
                for c in range(t + 1, cols):
                    if row[c] % p:
                        offender = r
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_op(t, offender, 1)
        t += 1
    return U, Uinv, A, V, Vinv


def smith_normal_form(M):
    """U, D, V with U*M*V = D diagonal, d_i | d_{i+1}, U and V unimodular."""
    U, _, D, V, _ = _snf(M)
    return U, D, V


def snf_rank(D):
    n = min(len(D), len(D[0]) if D else 0)
    return sum(1 for i in range(n) if D[i][i])


# -- boundary matrices ------------------------------------------------------

def boundary_matrix(K: SimplicialComplex, k):
    """Matrix of the boundary operator from k-chains to (k-1)-chains.

    For k = 0 a single zero row is returned so the kernel is everything;
    for k = n+1 a single zero column stands in for the trivial chain group.
    """
    if k == 0:
        return [[0] * len(K.simplices(0))]
    if k > K.n:
        return [[0] for _ in K.simplices(K.n)]
    rows = K.simplices(k - 1)
    row_index = K.simplex_index[k - 1]
    cols = K.simplices(k)
    M = [[0] * len(cols) for _ in rows]
    for c, simp in enumerate(cols):
        for i in range(k + 1):
            face = simp[:i] + simp[i + 1:]
            M[row_index[face]][c] = (-1) ** i
    return M


# -- homology bases -----------------------------------------------------------

@dataclass
class HomologyBasis:
    degree: int
    free: list                       # free generator cycles (dense int chains)
    torsion_orders: list
    torsion: list                    # torsion generator cycles a_s
    torsion_bounding: list           # (k+1)-chains u_s with boundary = m_s * a_s

    @property
    def free_rank(self):
        return len(self.free)


def _column(M, j):
    return [row[j] for row in M]


def _sparse_mat_cols(Mdense, B):
    """Product M*B exploiting sparsity of B (list of columns of result)."""
    rows = len(Mdense)
    out_cols = []
    for c in range(len(B[0]) if B else 0):
        acc = [0] * rows
        for r, entry in enumerate(_column(B, c)):
            if entry:
                col = [row[r] for row in Mdense]
                for i in range(rows):
                    acc[i] += entry * col[i]
        out_cols.append(acc)
    return out_cols


def _homology_data(K: SimplicialComplex, k):
    key = ("homology", k)
    if key in K._cache:
        return K._cache[key]
    A = boundary_matrix(K, k)
    B = boundary_matrix(K, k + 1)
    _, _, DA, VA, VAinv = _snf(A)
    r = snf_rank(DA)
    nk = len(K.simplices(k))
    t = nk - r

    # columns of B written in the kernel part of the V_A basis
    vb_cols = _sparse_mat_cols(VAinv, B)
    for col in vb_cols:
        if any(col[i] for i in range(r)):
            raise AssertionError("boundary of a boundary is nonzero")
    X = [[col[r + i] for col in vb_cols] for i in range(t)]
    if not X:
        X = [[0] * len(vb_cols)] if vb_cols else [[0]]
    UX, UXinv, DX, VX, _ = _snf(X)
    rx = snf_rank(DX)

    free, orders, torsion, bounding = [], [], [], []
    for i in range(t):
        d = DX[i][i] if i < rx and i < len(DX[0]) else 0
        gen_coords = _column(UXinv, i)              # in kernel-basis coords
        gen = [0] * nk
        for j, cj in enumerate(gen_coords):
            if cj:
                for row in range(nk):
                    gen[row] += cj * VA[row][r + j]
        if d == 1:
            continue
        if d == 0:
            free.append(gen)
        else:
            orders.append(d)
            torsion.append(gen)
            bounding.append(_column(VX, i))
    basis = HomologyBasis(k, free, orders, torsion, bounding)
    data = {
        "basis": basis,
        "rank_boundary": r,
        "VAinv": VAinv,
        "UX": UX,
        "free_rows": [i for i in range(t)
                      if (DX[i][i] if i < rx and i < len(DX[0]) else 0) == 0],
        "torsion_rows": [i for i in range(t)
                         if i < rx and i < len(DX[0]) and DX[i][i] > 1],
    }
    K._cache[key] = data
    return data


def homology_basis(K: SimplicialComplex, k) -> HomologyBasis:
    """Free and torsion generators of H_k with integer chain representatives."""
    if not 0 <= k <= K.n:
        raise ValueError(f"degree {k} out of range for dimension {K.n}")
    return _homology_data(K, k)["basis"]


def h1_class_matrix(K: SimplicialComplex):
    """Rows of homology coordinates for each edge, plus the row positions of
    the free and torsion generators.

    coords = UX * (VAinv restricted to kernel rows); applying it to a 1-cycle
    gives integer coordinates whose free entries are the multiplicities of
    the free generators and whose torsion entries count torsion generators
    modulo their orders.
    """
    key = ("h1coords",)
    if key in K._cache:
        return K._cache[key]
    data = _homology_data(K, 1)
    r = data["rank_boundary"]
    VAinv = data["VAinv"]
    UX = data["UX"]
    t = len(UX)
    s1 = len(K.simplices(1))
    kernel_rows = [VAinv[r + i] for i in range(t)]
    coords = []
    for i in range(t):
        row_ux = UX[i]
        row = [0] * s1
        for j, c in enumerate(row_ux):
            if c:
                krow = kernel_rows[j]
                for e in range(s1):
                    row[e] += c * krow[e]
        coords.append(row)
    result = (coords, data["free_rows"], data["torsion_rows"])
    K._cache[key] = result
    return result


def h1_class(K: SimplicialComplex, chain):
    """Homology coordinates (free multiplicities, torsion residues) of an
    integer 1-cycle."""
    coords, free_rows, torsion_rows = h1_class_matrix(K)
    basis = homology_basis(K, 1)
    raw = [sum(row[e] * chain[e] for e in range(len(chain)) if chain[e]) for row in coords]
    free = tuple(raw[i] for i in free_rows)
    torsion = tuple(
        raw[i] % order for i, order in zip(torsion_rows, basis.torsion_orders)
    )
    return free, torsion


# -- framed paths ----------------------------------------------------------------

@dataclass(frozen=True)
class FramedPath:
    """Edge path with a framing facet per edge; closed when it returns."""

    vertices: tuple
    facets: tuple

    @property
    def closed(self):
        return len(self.vertices) < 2 or self.vertices[0] == self.vertices[-1]

    def edges(self):
        return list(zip(self.vertices, self.vertices[1:]))

    def reversed(self):
        return FramedPath(tuple(reversed(self.vertices)), tuple(reversed(self.facets)))


def reference_framing(K: SimplicialComplex, i, j):
    """Deterministic framing facet for an edge: the lowest-index facet."""
    edge = (i, j) if i < j else (j, i)
    if not K.has_simplex(edge):
        raise EdgeNotInComplex(f"{edge} is not an edge of the complex")
    return min(K.star_facets(edge))


def frame_path(K: SimplicialComplex, vertices) -> FramedPath:
    """Frame a vertex path, each edge by its reference facet."""
    verts = tuple(vertices)
    if len(verts) == 1:
        return FramedPath(verts, ())
    facets = []
    for a, b in zip(verts, verts[1:]):
        if a == b:
            raise NotAPath(f"repeated vertex {a} along the path")
        facets.append(reference_framing(K, a, b))
    return FramedPath(verts, tuple(facets))


def chain_boundary_is_zero(K, chain):
    div = {}
    for e, c in enumerate(chain):
        if c:
            i, j = K.simplices(1)[e]
            div[i] = div.get(i, 0) - c
            div[j] = div.get(j, 0) + c
    return all(v == 0 for v in div.values())


def _bfs_path(K, start, goal):
    if start == goal:
        return [start]
    adj = K._cache.get(("vertex_adj",))
    if adj is None:
        adj = {}
        for i, j in K.simplices(1):
            adj.setdefault(i, []).append(j)
            adj.setdefault(j, []).append(i)
        for v in adj:
            adj[v].sort()
        K._cache[("vertex_adj",)] = adj
    prev = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in prev:
                    prev[w] = v
                    if w == goal:
                        path = [w]
                        while path[-1] is not None and prev[path[-1]] is not None:
                            path.append(prev[path[-1]])
                        path.append(start) if path[-1] != start else None
                        return list(reversed(path))
                    nxt.append(w)
        frontier = nxt
    raise NotAPath(f"no path between {start} and {goal}")


def cycle_chain_to_path(K: SimplicialComplex, chain):
    """Closed vertex path traversing an integer 1-cycle.

    The cycle is decomposed into closed trails; several trails are joined by
    running a connecting path forward and back, which cancels at chain level
    and, with matched framings, contributes nothing to framed holonomy.
    """
    if not chain_boundary_is_zero(K, chain):
        raise NotAPath("chain has nonzero boundary")
    out_edges = {}
    for e, c in enumerate(chain):
        if c:
            i, j = K.simplices(1)[e]
            if c > 0:
                for _ in range(c):
                    out_edges.setdefault(i, []).append(j)
            else:
                for _ in range(-c):
                    out_edges.setdefault(j, []).append(i)
    for v in out_edges:
        out_edges[v].sort(reverse=True)

    trails = []
    while any(out_edges.values()):
        start = min(v for v, lst in out_edges.items() if lst)
        stack = [start]
        trail = []
        while stack:
            v = stack[-1]
            if out_edges.get(v):
                stack.append(out_edges[v].pop())
            else:
                trail.append(stack.pop())
        trails.append(list(reversed(trail)))

    if not trails:
        return []
    combined = trails[0]
    base = combined[0]
    for extra in trails[1:]:
        link = _bfs_path(K, combined[-1], extra[0])
        back = list(reversed(link))
        combined = combined + link[1:] + extra[1:] + back[1:]
    return combined


def frame_cycle_chain(K: SimplicialComplex, chain) -> FramedPath:
    """Closed framed path representing an integer 1-cycle."""
    path = cycle_chain_to_path(K, chain)
    return frame_path(K, path) if path else FramedPath((), ())


def representative_paths(K: SimplicialComplex):
    """Framed closed paths for the free and torsion H_1 generators (cached)."""
    key = ("h1paths",)
    if key not in K._cache:
        basis = homology_basis(K, 1)
        free = [frame_cycle_chain(K, c) for c in basis.free]
        torsion = [frame_cycle_chain(K, c) for c in basis.torsion]
        K._cache[key] = (free, torsion)
    return K._cache[key]


def path_chain(K: SimplicialComplex, path: FramedPath):
    """Integer 1-chain of a framed path."""
    chain = [0] * len(K.simplices(1))
    index = K.simplex_index[1]
    for a, b in path.edges():
        if a < b:
            chain[index[(a, b)]] += 1
        else:
            chain[index[(b, a)]] -= 1
    return chain


# -- framed 2-chains ---------------------------------------------------------------

@dataclass(frozen=True)
class FramedTwoChain:
    """Expanded list of (oriented 2-simplex, framing facet index) pairs."""

    entries: tuple

    def __len__(self):
        return len(self.entries)


def _framing_for_triangle(K, delta_sorted, orientation_sign):
    star = K.star_facets(delta_sorted)
    if K.n == 2:
        return K.facet_index[delta_sorted]
    if K.n == 3 and K.orientation is not None:
        for fi in sorted(star):
            if K.face_sign(fi, delta_sorted) == orientation_sign:
                return fi
    return min(star)


def frame_chain2(K: SimplicialComplex, chain) -> FramedTwoChain:
    """Frame an integer 2-chain; multiplicity m becomes m framed copies.

    For surfaces every 2-simplex frames itself; on oriented 3-manifolds the
    framing facet is the cofacet inducing the simplex's orientation.
    """
    triangles = K.simplices(2)
    entries = []
    for idx, c in enumerate(chain):
        if not c:
            continue
        if idx >= len(triangles):
            raise SimplexNotInComplex(f"2-simplex index {idx} out of range")
        tri = triangles[idx]
        if c > 0:
            oriented, sign, count = tri, 1, c
        else:
            oriented, sign, count = (tri[0], tri[2], tri[1]), -1, -c
        facet = _framing_for_triangle(K, tri, sign)
        entries.extend((oriented, facet) for _ in range(count))
    return FramedTwoChain(tuple(entries))


def two_chain_of(K: SimplicialComplex, framed: FramedTwoChain):
    """Integer 2-chain underlying a framed 2-chain."""
    chain = [0] * len(K.simplices(2))
    index = K.simplex_index[2]
    for oriented, _ in framed.entries:
        key = tuple(sorted(oriented))
        chain[index[key]] += perm_parity(oriented)
    return chain


# -- file formats ---------------------------------------------------------------------

def write_framed_path(path: FramedPath, fh):
    verts = path.vertices
    for i, v in enumerate(verts):
        fh.write(f"v {v}\n")
        if i < len(path.facets):
            fh.write(f"f {path.facets[i]}\n")


def read_framed_path(fh) -> FramedPath:
    vertices = []
    facets = []
    expect_vertex = True
    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("v", "f"):
            raise ParseError(lineno, f"expected 'v <id>' or 'f <id>', got {line!r}")
        if parts[0] == "v" and not expect_vertex:
            raise ParseError(lineno, "vertex line out of order")
        if parts[0] == "f" and expect_vertex:
            raise ParseError(lineno, "framing line out of order")
        try:
            value = int(parts[1])
        except ValueError:
            raise ParseError(lineno, f"bad id {parts[1]!r}") from None
        if parts[0] == "v":
            vertices.append(value)
            expect_vertex = False
        else:
            facets.append(value)
            expect_vertex = True
    if len(vertices) != len(facets) + 1 and vertices:
        raise ParseError(0, "framed path must end with a vertex line")
    return FramedPath(tuple(vertices), tuple(facets))


def write_framed_chain2(framed: FramedTwoChain, fh):
    counted = {}
    for oriented, facet in framed.entries:
        counted[(oriented, facet)] = counted.get((oriented, facet), 0) + 1
    for (oriented, facet), mult in sorted(counted.items()):
        a, b, c = oriented
        fh.write(f"t {a} {b} {c} f {facet} m {mult}\n")


def read_framed_chain2(fh) -> FramedTwoChain:
    entries = []
    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 8 or parts[0] != "t" or parts[4] != "f" or parts[6] != "m":
            raise ParseError(lineno, f"bad framed-triangle line {line!r}")
        try:
            a, b, c = int(parts[1]), int(parts[2]), int(parts[3])
            facet = int(parts[5])
            mult = int(parts[7])
        except ValueError:
            raise ParseError(lineno, f"bad integer in {line!r}") from None
        entries.extend(((a, b, c), facet) for _ in range(mult))
    return FramedTwoChain(tuple(entries))
