"""Triangulated closed n-manifolds and their combinatorial structure.

A complex is built from its facet list alone; skeleta, facet adjacency,
star cycles and the orientation assignment are derived.  Construction
verifies the closed-pseudomanifold and link conditions, so every other
module can rely on them.  Instances are immutable after construction and
safe to share.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple, Optional

from .errors import (
    BadLink,
    Disconnected,
    MixedDimension,
    NonPseudomanifold,
    NotASimplex,
    ParseError,
    UnknownName,
    WrongDimension,
)


class Simplex(NamedTuple):
    """A simplex in canonical form: sorted vertex ids plus the parity sign
    of the ordering it was created from."""

    vertices: tuple
    sign: int


def perm_parity(seq):
    """Sign of the permutation sorting seq (entries must be distinct)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def simplex(vertices) -> Simplex:
    verts = tuple(vertices)
    if len(set(verts)) != len(verts):
        raise NotASimplex(f"repeated vertices in {verts}")
    return Simplex(tuple(sorted(verts)), perm_parity(verts))


@dataclass(frozen=True)
class EdgeStar:
    """Cyclically ordered star of an (n-2)-simplex.

    facets[i] is the facet containing sigma together with the rim vertices
    rim[i] and rim[(i+1) % m]; consecutive facets share the face
    sigma + rim vertex between them.
    """

    sigma: tuple
    rim: tuple
    facets: tuple

    @property
    def m(self):
        return len(self.facets)

    def rim_at(self, p):
        return self.rim[p % self.m]

    def facet_at(self, p):
        """Facet index of the facet containing rim vertices p and p+1."""
        return self.facets[p % self.m]


@dataclass
class ComplexStats:
    f_vector: tuple
    euler: int
    mean_incidence: tuple          # m_k as exact Fractions, k = 0..n
    param_count: int               # n*s_n - s_0 + 1
    betti: Optional[int] = None    # filled by the homology module
    remaining: Optional[int] = None


class SimplicialComplex:
    """Closed triangulated n-manifold given by its facet list."""

    def __init__(self, n, facets, skeleta, cofacets, orientation, components):
        self.n = n
        self.facets = facets                    # list of sorted vertex tuples
        self.facet_index = {f: i for i, f in enumerate(facets)}
        self.skeleta = skeleta                  # k -> sorted list of tuples
        self.simplex_index = {
            k: {s: i for i, s in enumerate(simps)} for k, simps in skeleta.items()
        }
        self.cofacets = cofacets                # (n-1)-tuple -> (facet id, facet id)
        self.orientation = orientation          # list of +-1, or None
        self.components = components
        self._cache = {}

    # -- basic queries ---------------------------------------------------

    @property
    def vertex_count(self):
        return len(self.skeleta[0])

    @property
    def connected(self):
        return self.components == 1

    @property
    def orientable(self):
        return self.orientation is not None

    def simplices(self, k):
        return self.skeleta[k]

    def f_vector(self):
        return tuple(len(self.skeleta[k]) for k in range(self.n + 1))

    def has_simplex(self, verts):
        verts = tuple(sorted(verts))
        k = len(verts) - 1
        return k in self.skeleta and verts in self.simplex_index[k]

    def edges(self):
        return self.skeleta[1]

    def require_connected(self):
        if not self.connected:
            raise Disconnected(f"complex has {self.components} components")

    def face_sign(self, facet_idx, face):
        """Orientation induced on the (n-1)-face by the oriented facet,
        expressed relative to the face's sorted vertex order."""
        facet = self.facets[facet_idx]
        missing = [v for v in facet if v not in face]
        if len(missing) != 1:
            raise WrongDimension(f"{face} is not a face of facet {facet}")
        k = facet.index(missing[0])
        return self.orientation[facet_idx] * (-1) ** k

    def star_facets(self, sigma):
        """Facet indices whose facets contain the given simplex."""
        sigma = tuple(sorted(sigma))
        key = ("star", len(sigma) - 1)
        if key not in self._cache:
            table = {s: [] for s in self.skeleta[len(sigma) - 1]}
            for fi, fv in enumerate(self.facets):
                for sub in combinations(fv, len(sigma)):
                    table[sub].append(fi)
            self._cache[key] = table
        table = self._cache[key]
        if sigma not in table:
            raise NotASimplex(f"{sigma} is not a simplex of the complex")
        return table[sigma]


def build_complex(facet_lists) -> SimplicialComplex:
    """Construct and validate a complex from a list of facet vertex lists."""
    if not facet_lists:
        raise MixedDimension("empty facet list")
    sizes = {len(f) for f in facet_lists}
    if len(sizes) != 1:
        raise MixedDimension(f"facet sizes differ: {sorted(sizes)}")
    n = sizes.pop() - 1
    if n < 2:
        raise MixedDimension(f"need dimension >= 2, got {n}")
    facets = []
    seen = set()
    for f in facet_lists:
        verts = tuple(sorted(f))
        if len(set(verts)) != len(verts):
            raise NotASimplex(f"repeated vertex in facet {f}")
        if verts in seen:
            raise NonPseudomanifold(f"duplicate facet {verts}")
        seen.add(verts)
        facets.append(verts)

    skeleta = {k: set() for k in range(n + 1)}
    for fv in facets:
        for k in range(n + 1):
            skeleta[k].update(combinations(fv, k + 1))
    skeleta = {k: sorted(s) for k, s in skeleta.items()}

    cofacets = {}
    for fi, fv in enumerate(facets):
        for face in combinations(fv, n):
            cofacets.setdefault(face, []).append(fi)
    for face, cf in cofacets.items():
        if len(cf) != 2:
            raise NonPseudomanifold(
                f"face {face} lies in {len(cf)} facets, expected 2"
            )
    cofacets = {face: tuple(cf) for face, cf in cofacets.items()}

    _check_links(n, facets, skeleta, cofacets)
    components = _count_components(facets, cofacets)
    orientation = _orient_assignment(n, facets, cofacets)
    return SimplicialComplex(n, facets, skeleta, cofacets, orientation, components)


def _check_links(n, facets, skeleta, cofacets):
    """Every (n-2)-simplex must have a star forming a single cycle."""
    stars = {s: [] for s in skeleta[n - 2]}
    for fi, fv in enumerate(facets):
        for sub in combinations(fv, n - 1):
            stars[sub].append(fi)
    for sigma, star in stars.items():
        # each facet of the star meets exactly two neighbours through the
        # faces sigma+{x}; the star is one cycle iff it is connected
        reached = {star[0]}
        frontier = [star[0]]
        while frontier:
            fi = frontier.pop()
            fv = facets[fi]
            for x in fv:
                if x in sigma:
                    continue
                face = tuple(sorted(sigma + (x,)))
                a, b = cofacets[face]
                other = b if a == fi else a
                if other not in reached:
                    reached.add(other)
                    frontier.append(other)
        if len(reached) != len(star):
            raise BadLink(
                f"star of {sigma} splits into several cycles "
                f"({len(reached)} of {len(star)} facets reached)"
            )


def _facet_adjacency_weight(facets, face, fi, fj):
    """-1 when the reference (sorted, +1) orientations of two adjacent
    facets induce the same orientation on their shared face."""
    ki = facets[fi].index([v for v in facets[fi] if v not in face][0])
    kj = facets[fj].index([v for v in facets[fj] if v not in face][0])
    return -((-1) ** ki) * ((-1) ** kj)


def _count_components(facets, cofacets):
    unvisited = set(range(len(facets)))
    components = 0
    adj = {i: [] for i in range(len(facets))}
    for face, (a, b) in cofacets.items():
        adj[a].append(b)
        adj[b].append(a)
    while unvisited:
        components += 1
        frontier = [unvisited.pop()]
        while frontier:
            fi = frontier.pop()
            for other in adj[fi]:
                if other in unvisited:
                    unvisited.remove(other)
                    frontier.append(other)
    return components


def _orient_assignment(n, facets, cofacets):
    """Propagate facet orientations; None when the complex is nonorientable."""
    sign = [0] * len(facets)
    for start in range(len(facets)):
        if sign[start]:
            continue
        sign[start] = 1
        frontier = [start]
        while frontier:
            fi = frontier.pop()
            fv = facets[fi]
            for face in combinations(fv, n):
                a, b = cofacets[face]
                other = b if a == fi else a
                w = _facet_adjacency_weight(facets, face, fi, other)
                want = w * sign[fi]
                if sign[other] == 0:
                    sign[other] = want
                    frontier.append(other)
                elif sign[other] != want:
                    return None
    return sign


# -- catalog ----------------------------------------------------------------

_RP2_FACETS = [
    (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5),
    (1, 2, 4), (2, 3, 5), (1, 3, 4), (2, 4, 5), (1, 3, 5),
]


def _torus7_facets():
    out = []
    for i in range(7):
        out.append((i, (i + 1) % 7, (i + 3) % 7))
        out.append((i, (i + 2) % 7, (i + 3) % 7))
    return out


def _genus2_facets():
    """Connected sum of two copies of the 7-vertex torus.

    One triangle is removed from each copy and the boundary triangles are
    identified, giving a closed orientable genus-2 surface on 11 vertices.
    """
    first = [f for f in _torus7_facets() if tuple(sorted(f)) != (0, 1, 3)]
    relabel = {0: 0, 1: 1, 3: 3, 2: 7, 4: 8, 5: 9, 6: 10}
    second = [
        tuple(relabel[v] for v in f)
        for f in _torus7_facets()
        if tuple(sorted(f)) != (0, 1, 3)
    ]
    return first + second


def _torus3d_facets():
    """Freudenthal triangulation of the cubical 3-torus on a 3x3x3 grid."""
    def vid(p):
        return (p[0] % 3) + 3 * (p[1] % 3) + 9 * (p[2] % 3)

    axes = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    facets = []
    from itertools import permutations, product
    for corner in product(range(3), repeat=3):
        for order in permutations(axes):
            pts = [corner]
            for ax in order:
                pts.append(tuple(pts[-1][i] + ax[i] for i in range(3)))
            facets.append(tuple(vid(p) for p in pts))
    return facets


_CATALOG_CACHE = {}


def catalog(name) -> SimplicialComplex:
    """Named triangulations: sphere<n>, torus7, rp2_6, genus2, torus3d."""
    if name in _CATALOG_CACHE:
        return _CATALOG_CACHE[name]
    if name.startswith("sphere"):
        try:
            n = int(name[len("sphere"):])
        except ValueError:
            raise UnknownName(name) from None
        if n < 2:
            raise UnknownName(name)
        facets = list(combinations(range(n + 2), n + 1))
    elif name == "torus7":
        facets = _torus7_facets()
    elif name == "rp2_6":
        facets = _RP2_FACETS
    elif name == "genus2":
        facets = _genus2_facets()
    elif name == "torus3d":
        facets = _torus3d_facets()
    else:
        raise UnknownName(name)
    built = build_complex(facets)
    _CATALOG_CACHE[name] = built
    return built


# -- star cycles --------------------------------------------------------------

def star_cycle(K: SimplicialComplex, sigma) -> EdgeStar:
    """Cyclic star of an (n-2)-simplex.

    The starting facet is the one of lowest index; the walking direction
    follows the global orientation when present (the start facet enters the
    cycle through the face whose induced orientation opposes the slot order
    sigma + rim), with a lowest-next-facet tie-break otherwise.
    """
    if isinstance(sigma, Simplex):
        sigma = sigma.vertices
    sigma = tuple(sorted(sigma))
    if len(sigma) != K.n - 1:
        raise WrongDimension(
            f"expected an (n-2)-simplex with {K.n - 1} vertices, got {sigma}"
        )
    star = K.star_facets(sigma)
    start = min(star)
    a, b = sorted(v for v in K.facets[start] if v not in sigma)

    if K.orientation is not None:
        first = None
        for x in (a, b):
            face = tuple(sorted(sigma + (x,)))
            slot_sign = perm_parity(sigma + (x,))
            if K.face_sign(start, face) == -slot_sign:
                first = x
        rim0 = first
        rim1 = b if first == a else a
    else:
        nxt = {}
        for x in (a, b):
            face = tuple(sorted(sigma + (x,)))
            pair = K.cofacets[face]
            nxt[x] = pair[0] if pair[1] == start else pair[1]
        rim1 = a if nxt[a] < nxt[b] else b
        rim0 = b if rim1 == a else a

    rim = [rim0, rim1]
    cycle = [start]
    current = start
    while True:
        face = tuple(sorted(sigma + (rim[-1],)))
        pair = K.cofacets[face]
        nxt = pair[0] if pair[1] == current else pair[1]
        if nxt == start:
            break
        new_rim = [v for v in K.facets[nxt] if v not in sigma and v != rim[-1]]
        rim.append(new_rim[0])
        cycle.append(nxt)
        current = nxt
    if rim[-1] == rim[0]:
        rim.pop()
    if len(cycle) != len(star) or len(rim) != len(cycle):
        raise BadLink(f"star walk around {sigma} missed facets")
    return EdgeStar(sigma, tuple(rim), tuple(cycle))


# -- orientation / double cover ----------------------------------------------

@dataclass
class OrientResult:
    orientable: bool
    orientation: Optional[list] = None
    cover: Optional[SimplicialComplex] = None
    facet_projection: Optional[list] = None   # cover facet -> base facet
    vertex_projection: Optional[list] = None  # cover vertex -> base vertex


def orient(K: SimplicialComplex) -> OrientResult:
    """Orientation assignment, or the connected orientable double cover."""
    K.require_connected()
    if K.orientation is not None:
        return OrientResult(True, orientation=list(K.orientation))

    # Oriented facet copies (fi, s); gluing flips s across adjacencies whose
    # reference orientations disagree.
    n = K.n
    nodes = {}

    def node(fi, s, v):
        key = (fi, s, v)
        if key not in nodes:
            nodes[key] = key
        return key

    parent = {}

    def find(x):
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != x:
            parent[x], x = root, parent[x]
        return root

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for face, (a, b) in K.cofacets.items():
        w = _facet_adjacency_weight(K.facets, face, a, b)
        for s in (1, -1):
            for v in face:
                union(node(a, s, v), node(b, s * w, v))
    classes = {}
    for fi in range(len(K.facets)):
        for s in (1, -1):
            for v in K.facets[fi]:
                root = find(node(fi, s, v))
                classes.setdefault(root, len(classes))

    cover_facets = []
    projection = []
    for fi in range(len(K.facets)):
        for s in (1, -1):
            verts = tuple(
                sorted(classes[find(node(fi, s, v))] for v in K.facets[fi])
            )
            cover_facets.append(verts)
            projection.append(fi)

    vertex_projection = [None] * len(classes)
    for key in nodes:
        vertex_projection[classes[find(key)]] = key[2]

    order = sorted(range(len(cover_facets)), key=lambda i: cover_facets[i])
    cover = build_complex([cover_facets[i] for i in order])
    cover.require_connected()
    return OrientResult(
        False,
        cover=cover,
        facet_projection=[projection[i] for i in order],
        vertex_projection=vertex_projection,
    )


# -- statistics ----------------------------------------------------------------

def stats(K: SimplicialComplex) -> ComplexStats:
    n = K.n
    s = K.f_vector()
    euler = sum((-1) ** k * s[k] for k in range(n + 1))
    mean = tuple(
        Fraction(math.factorial(n + 1), math.factorial(k + 1) * math.factorial(n - k))
        * Fraction(s[n], s[k])
        for k in range(n + 1)
    )
    return ComplexStats(
        f_vector=s,
        euler=euler,
        mean_incidence=mean,
        param_count=n * s[n] - s[0] + 1,
    )


def fill_betti(st: ComplexStats, K: SimplicialComplex):
    """Fill the homology-dependent slots of a ComplexStats (rank over C*:
    first Betti number plus the number of torsion summands)."""
    from .homology import homology_basis

    basis = homology_basis(K, 1)
    st.betti = basis.free_rank + len(basis.torsion_orders)
    n = K.n
    s = st.f_vector
    st.remaining = st.param_count - st.betti - ((n - 1) * s[n - 1] - (n - 2) * s[n - 2])
    return st


# -- file format -----------------------------------------------------------------

def write_complex_file(K: SimplicialComplex, fh):
    fh.write(f"dim {K.n}\n")
    for fv in K.facets:
        fh.write(" ".join(str(v) for v in fv) + "\n")


def read_complex_file(fh) -> SimplicialComplex:
    n = None
    facets = []
    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "dim":
                raise ParseError(lineno, f"expected 'dim <n>', got {line!r}")
            try:
                n = int(parts[1])
            except ValueError:
                raise ParseError(lineno, f"bad dimension {parts[1]!r}") from None
            continue
        try:
            verts = [int(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(lineno, f"bad facet line {line!r}") from None
        if len(verts) != n + 1:
            raise ParseError(lineno, f"facet needs {n + 1} vertices, got {len(verts)}")
        facets.append(verts)
    if n is None:
        raise ParseError(0, "missing 'dim' header")
    return build_complex(facets)
