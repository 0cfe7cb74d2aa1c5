"""Thick paths and the nonabelian holonomy representation.

A thick path is a chain of facets glued along (n-1)-faces; a word in the
free semigroup on n generators drives the walk by naming, at each step,
the slot of the face vertex to replace.  Transport solves the triangle
equation for the fresh vertex; on closed paths the final face is matched
back to the initial one by a slot permutation P, and the holonomy is the
permutation matrix of P times the transport.

Conventions, fixed once and verified by the tests:
  * slots are positions 0..n-1; the initial face's vertex tuple assigns them;
  * the first facet of a word path is the cofacet inducing the orientation
    opposite to the slot order on the initial face (lowest-index cofacet on
    unoriented complexes); afterwards each step crosses to the other cofacet;
  * with this choice the word a_j^m around an (n-2)-simplex reproduces the
    star cycle and the curvature operator exactly.
"""

import re
from dataclasses import dataclass
from typing import Optional

from . import field as fld
from . import linalg
from .complexes import SimplicialComplex, perm_parity
from .connection import Connection
from .errors import BadLabeling, NotClosed, NotWordBuilt, ParseError
from .homology import FramedPath


@dataclass(frozen=True)
class Word:
    """Sequence of (generator, exponent) letters in application order."""

    letters: tuple

    def __post_init__(self):
        merged = []
        for gen, exp in self.letters:
            if exp < 0:
                raise ValueError("negative exponent")
            if exp == 0:
                continue
            if merged and merged[-1][0] == gen:
                merged[-1] = (gen, merged[-1][1] + exp)
            else:
                merged.append((gen, exp))
        object.__setattr__(self, "letters", tuple(merged))

    @property
    def length(self):
        return sum(exp for _, exp in self.letters)

    def occurrences(self):
        for gen, exp in self.letters:
            for _ in range(exp):
                yield gen

    def __str__(self):
        return " ".join(
            f"a{gen}^{exp}" if exp != 1 else f"a{gen}" for gen, exp in self.letters
        )

    @classmethod
    def parse(cls, text):
        letters = []
        for tok in text.split():
            m = re.fullmatch(r"a(\d+)(?:\^(\d+))?", tok)
            if not m:
                raise ParseError(0, f"bad word token {tok!r}")
            letters.append((int(m.group(1)), int(m.group(2) or 1)))
        return cls(tuple(letters))


def word(text_or_letters) -> Word:
    if isinstance(text_or_letters, Word):
        return text_or_letters
    if isinstance(text_or_letters, str):
        return Word.parse(text_or_letters)
    return Word(tuple(text_or_letters))


@dataclass
class ThickPath:
    """Facet walk described by its initial slot assignment and steps.

    Each step records (facet index, slot replaced, old vertex, new vertex).
    """

    K: SimplicialComplex
    initial_slots: tuple
    steps: list
    word: Optional[Word] = None

    @property
    def length(self):
        return len(self.steps)

    @property
    def facet_sequence(self):
        return [facet for facet, _, _, _ in self.steps]

    def faces(self):
        slots = list(self.initial_slots)
        out = [tuple(sorted(slots))]
        for _, slot, _, new_v in self.steps:
            slots[slot] = new_v
            out.append(tuple(sorted(slots)))
        return out

    @property
    def end_slots(self):
        slots = list(self.initial_slots)
        for _, slot, _, new_v in self.steps:
            slots[slot] = new_v
        return tuple(slots)

    @property
    def closed(self):
        return set(self.end_slots) == set(self.initial_slots)

    @property
    def irreducible(self):
        seq = self.facet_sequence
        return all(a != b for a, b in zip(seq, seq[1:]))

    def permutation(self):
        """P with P[j] = initial slot of the vertex ending at slot j."""
        if not self.closed:
            raise NotClosed("permutation defined for closed thick paths only")
        start = {v: k for k, v in enumerate(self.initial_slots)}
        return tuple(start[v] for v in self.end_slots)


def _first_facet(K: SimplicialComplex, slots):
    face = tuple(sorted(slots))
    pair = K.cofacets[face]
    if K.orientation is None:
        return min(pair)
    want = -perm_parity(slots)
    for fi in pair:
        if K.face_sign(fi, face) == want:
            return fi
    raise BadLabeling(f"no cofacet of {face} induces the required orientation")


def thick_path_from_word(K: SimplicialComplex, delta0, A, first_facet=None) -> ThickPath:
    """Irreducible thick path driven by a word from a labeled initial face."""
    slots = tuple(delta0)
    if len(slots) != K.n or len(set(slots)) != K.n:
        raise BadLabeling(f"initial face needs {K.n} distinct vertices, got {slots}")
    if not K.has_simplex(slots):
        raise BadLabeling(f"{tuple(sorted(slots))} is not an (n-1)-simplex")
    A = word(A)
    current = list(slots)
    steps = []
    prev = first_facet
    for gen in A.occurrences():
        if not 0 <= gen < K.n:
            raise BadLabeling(f"generator a{gen} out of range for n = {K.n}")
        face = tuple(sorted(current))
        pair = K.cofacets[face]
        if prev is None:
            nxt = _first_facet(K, tuple(current))
        else:
            nxt = pair[0] if pair[1] == prev else pair[1]
        new_v = next(v for v in K.facets[nxt] if v not in face)
        steps.append((nxt, gen, current[gen], new_v))
        current[gen] = new_v
        prev = nxt
    return ThickPath(K, slots, steps, A)


def compose_paths(second: ThickPath, first: ThickPath) -> ThickPath:
    """Thick path traversing first, then second.

    second must start on the face where first ends (as a vertex set); its
    steps are replayed against first's final slot assignment.
    """
    if set(second.initial_slots) != set(first.end_slots):
        raise NotClosed("paths are not composable: faces do not match")
    slots = list(first.end_slots)
    steps = list(first.steps)
    faces2 = second.faces()
    for (facet, _, _, _), nxt_face in zip(second.steps, faces2[1:]):
        new_v = next(v for v in second.K.facets[facet] if v not in slots)
        old_v = next(v for v in slots if v not in nxt_face)
        slot = slots.index(old_v)
        steps.append((facet, slot, old_v, new_v))
        slots[slot] = new_v
    return ThickPath(first.K, first.initial_slots, steps, None)


# -- transport ------------------------------------------------------------------

@dataclass
class HolonomyResult:
    permutation: Optional[tuple]
    transport: list                    # product of one-step maps
    matrix: Optional[list]             # permutation matrix times transport

    def determinant(self):
        target = self.matrix if self.matrix is not None else self.transport
        return linalg.det(target)


def holonomy(conn: Connection, path: ThickPath, require_closed=False) -> HolonomyResult:
    """Transport along a thick path; full holonomy when the path is closed."""
    K = conn.K
    n = K.n
    transport = linalg.identity(n)
    slots = list(path.initial_slots)
    for facet, slot, old_v, new_v in path.steps:
        mat = linalg.identity(n)
        mat[slot] = [conn.coeff(facet, slots[k], new_v) for k in range(n)]
        transport = linalg.mat_mul(mat, transport)
        slots[slot] = new_v
    if not path.closed:
        if require_closed:
            raise NotClosed("full holonomy requested on an open thick path")
        return HolonomyResult(None, transport, None)
    perm = path.permutation()
    matrix = linalg.mat_mul(linalg.permutation_matrix(perm), transport)
    return HolonomyResult(perm, transport, matrix)


def angle_paths(path: ThickPath):
    """Per-slot framed paths of the vertices that occupied each slot."""
    if path.word is None:
        raise NotWordBuilt("angle paths are defined for word-built thick paths")
    n = path.K.n
    verts = [[v] for v in path.initial_slots]
    frames = [[] for _ in range(n)]
    for facet, slot, _, new_v in path.steps:
        verts[slot].append(new_v)
        frames[slot].append(facet)
    return [FramedPath(tuple(verts[k]), tuple(frames[k])) for k in range(n)]


def permutation_sign(perm):
    return perm_parity(perm)


def determinant_formula_sides(conn: Connection, path: ThickPath):
    """Both sides of the determinant identity: det of the holonomy, and
    sign(P) * (-1)^N * product of the angle-path framed holonomies."""
    from .invariants import framed_holonomy

    result = holonomy(conn, path, require_closed=True)
    lhs = result.determinant()
    rhs = permutation_sign(result.permutation) * (-1) ** path.length
    rhs = rhs * fld.one(conn.field)
    for ap in angle_paths(path):
        rhs = rhs * framed_holonomy(conn, ap)
    return lhs, rhs


# -- canonical connection combinatorics ----------------------------------------------

def canonical_holonomy(A, perm=None, n=None):
    """Permutation of {0..n} for the canonical connection: compose the
    transpositions (slot, n) named by the word, then the closing permutation
    extended by fixing n."""
    A = word(A)
    if n is None:
        if perm is None:
            raise ValueError("need either the closing permutation or n")
        n = len(perm)
    pi = list(range(n + 1))
    for gen in A.occurrences():
        # left-compose the transposition (gen, n)
        tau = list(range(n + 1))
        tau[gen], tau[n] = n, gen
        pi = [tau[x] for x in pi]
    if perm is not None:
        ext = list(perm) + [n]
        pi = [ext[x] for x in pi]
    return tuple(pi)


@dataclass
class ColoringResult:
    vertex_colors: dict
    conflicts: list
    final_slot_colors: tuple


def coloring(K: SimplicialComplex, path: ThickPath) -> ColoringResult:
    """Color vertices along a word-built path with n+1 colors: each new
    vertex takes the color absent from its facet's other vertices.  First
    assignments are kept; later disagreements are reported, not fixed."""
    if path.word is None:
        raise NotWordBuilt("coloring follows a word-built thick path")
    n = K.n
    slot_colors = list(range(n))
    vertex_colors = {v: k for k, v in enumerate(path.initial_slots)}
    conflicts = []
    for facet, slot, _, new_v in path.steps:
        absent = (set(range(n + 1)) - set(slot_colors)).pop()
        if new_v in vertex_colors:
            if vertex_colors[new_v] != absent:
                conflicts.append((new_v, vertex_colors[new_v], absent))
        else:
            vertex_colors[new_v] = absent
        slot_colors[slot] = absent
    return ColoringResult(vertex_colors, conflicts, tuple(slot_colors))


# -- loops as thick paths (surfaces) ---------------------------------------------------

def thicken_loop(K: SimplicialComplex, loop) -> ThickPath:
    """Realize a closed vertex loop on a surface as a closed, word-built
    thick path in the same homology class.

    The walk rotates about each loop vertex inside its star until the face
    reaches the next loop edge; every inserted detour is contractible, so
    the track of the path stays homologous to the loop.
    """
    if K.n != 2:
        raise BadLabeling("loop thickening is implemented for surfaces")
    verts = list(loop)
    if len(verts) < 2 or verts[0] != verts[-1]:
        raise NotClosed("need a closed vertex loop")
    slots = (verts[0], verts[1])
    if not K.has_simplex(slots):
        raise BadLabeling(f"loop edge {slots} is not an edge of the complex")
    letters = []
    current = list(slots)
    prev = [None]

    def step(slot):
        face = tuple(sorted(current))
        pair = K.cofacets[face]
        if prev[0] is None:
            nxt = _first_facet(K, tuple(current))
        else:
            nxt = pair[0] if pair[1] == prev[0] else pair[1]
        new_v = next(v for v in K.facets[nxt] if v not in face)
        current[slot] = new_v
        prev[0] = nxt
        letters.append((slot, 1))

    def rotate_until(pivot, target):
        rot_slot = 1 - current.index(pivot)
        cap = len(K.star_facets((pivot,))) + 1
        count = 0
        while current[rot_slot] != target:
            step(rot_slot)
            count += 1
            if count > cap:
                raise NotClosed(f"rotation around {pivot} missed {target}")

    for k in range(1, len(verts) - 1):
        rotate_until(verts[k], verts[k + 1])
    if set(current) != set(slots):
        rotate_until(verts[0], verts[1])
    return thick_path_from_word(K, slots, Word(tuple(letters)))
