"""Gauge-invariant data of a connection and the relations it satisfies.

The minimal invariant set consists of the pair coefficients rho attached to
adjacent facet pairs along interior (n-1)-faces, together with the framed
abelian holonomy on a homology basis.  This module computes that data,
checks the local relations (triple products and star-cycle products), the
global oriented-manifold product relations, the homological cycle/torsion
relations, the two-sided integral formula, and the first Chern numbers.

Pairing convention for 2-chains: an interior edge shared by two oriented
2-simplices with opposite induced orientations contributes the pair value
for the edge ordered as (i, j) with the framing facet of the (j, i) side
listed first.  Under this convention the integral formula reads literally
"product of pair values = product of -coeff over the induced-oriented
boundary".
"""

import cmath
import math
from dataclasses import dataclass, field as dc_field

from . import field as fld
from .complexes import SimplicialComplex, perm_parity
from .connection import Connection
from .errors import (
    BranchViolation,
    InvalidFraming,
    MissingHomologyData,
    MixedField,
    NonIntegerTotal,
    NoPath,
    ParseError,
    UnpairedInteriorEdge,
)
from .homology import (
    FramedPath,
    FramedTwoChain,
    frame_chain2,
    homology_basis,
    representative_paths,
)


# -- rho data -----------------------------------------------------------------

class RhoData:
    """Pair coefficients on interior (n-1)-faces.

    Values are stored once per face and increasing vertex pair, relative to
    the cofacet pair ordered by facet index; both flips invert the value, so
    every ordered variant is derived.
    """

    def __init__(self, K: SimplicialComplex, field, values, tol=fld.DEFAULT_TOL):
        self.K = K
        self.field = field
        self.values = values          # (face index, i, j) with i < j -> scalar
        self.tol = tol

    def pair_value(self, face, t_first, t_second, i, j):
        """rho for the ordered cofacet pair (t_first, t_second) and ordered
        vertex pair (i, j); equals coeff_(i,j) on t_first times coeff_(j,i)
        on t_second."""
        face = tuple(sorted(face))
        fa, fb = sorted(self.K.cofacets[face])
        if {t_first, t_second} != {fa, fb}:
            raise NoPath(f"facets {t_first},{t_second} are not the cofacets of {face}")
        idx = self.K.simplex_index[self.K.n - 1][face]
        flips = 0
        if i > j:
            i, j = j, i
            flips += 1
        if (t_first, t_second) != (fa, fb):
            flips += 1
        value = self.values[(idx, i, j)]
        return value if flips % 2 == 0 else 1 / value

    def oriented_value(self, face, i, j):
        """Pair value with the cofacet inducing the (i, j, rest) orientation
        of the face listed first (requires an oriented complex)."""
        face = tuple(sorted(face))
        rest = tuple(v for v in face if v not in (i, j))
        want = perm_parity((i, j) + rest)
        fa, fb = self.K.cofacets[face]
        first = fa if self.K.face_sign(fa, face) == want else fb
        second = fb if first == fa else fa
        return self.pair_value(face, first, second, i, j)


def rho_minimal(conn: Connection) -> RhoData:
    """All pair coefficients over adjacent facet pairs."""
    K = conn.K
    values = {}
    for idx, face in enumerate(K.simplices(K.n - 1)):
        fa, fb = sorted(K.cofacets[face])
        for a in range(len(face)):
            for b in range(a + 1, len(face)):
                i, j = face[a], face[b]
                values[(idx, i, j)] = conn.coeff(fa, i, j) * conn.coeff(fb, j, i)
    return RhoData(K, conn.field, values, conn.tol)


def _edge_star_graph(K: SimplicialComplex, i, j):
    """Facets containing edge (i,j) with adjacency through (n-1)-faces that
    also contain the edge."""
    star = K.star_facets(tuple(sorted((i, j))))
    adjacency = {fi: [] for fi in star}
    members = set(star)
    for fi in star:
        fv = K.facets[fi]
        for drop in fv:
            if drop in (i, j):
                continue
            face = tuple(sorted(v for v in fv if v != drop))
            a, b = K.cofacets[face]
            other = b if a == fi else a
            if other in members:
                adjacency[fi].append((face, other))
    return adjacency


def _walk_edge_star(K, i, j, start, goal):
    """Facet path (with connecting faces) from start to goal within the
    star of the edge (i, j)."""
    adjacency = _edge_star_graph(K, i, j)
    if start not in adjacency or goal not in adjacency:
        raise NoPath(f"facets {start},{goal} do not both contain edge ({i},{j})")
    prev = {start: None}
    frontier = [start]
    while frontier and goal not in prev:
        nxt = []
        for fi in frontier:
            for face, other in sorted(adjacency[fi]):
                if other not in prev:
                    prev[other] = (fi, face)
                    nxt.append(other)
        frontier = nxt
    if goal not in prev:
        raise NoPath(f"no facet path from {start} to {goal} around edge ({i},{j})")
    hops = []
    at = goal
    while prev[at] is not None:
        fi, face = prev[at]
        hops.append((fi, at, face))
        at = fi
    return list(reversed(hops))


def rho_path(conn: Connection, t_first, t_second, i, j):
    """Pair value for an arbitrary facet pair in the star of edge (i, j),
    as the product of adjacent-pair values along a connecting path."""
    value = fld.one(conn.field)
    for fa, fb, _face in _walk_edge_star(conn.K, i, j, t_first, t_second):
        value = value * (conn.coeff(fa, i, j) * conn.coeff(fb, j, i))
    return value


def rho_between(rho: RhoData, t_first, t_second, i, j):
    """Same as rho_path but computed from minimal RhoData alone."""
    value = fld.one(rho.field)
    for fa, fb, face in _walk_edge_star(rho.K, i, j, t_first, t_second):
        value = value * rho.pair_value(face, fa, fb, i, j)
    return value


# -- framed holonomy -------------------------------------------------------------

def framed_holonomy(conn: Connection, path: FramedPath):
    """Product of -coeff along a framed path; gauge invariant when closed."""
    value = fld.one(conn.field)
    for (a, b), fi in zip(path.edges(), path.facets):
        fv = conn.K.facets[fi]
        if a not in fv or b not in fv:
            raise InvalidFraming(f"edge ({a},{b}) not in framing facet {fi}")
        value = value * (-conn.coeff(fi, a, b))
    return value


@dataclass
class InvariantData:
    """The complete invariant set: minimal rho plus holonomy on a basis."""

    rho: RhoData
    free_paths: tuple
    free_values: tuple
    torsion_paths: tuple
    torsion_orders: tuple
    torsion_values: tuple

    @property
    def K(self):
        return self.rho.K

    @property
    def field(self):
        return self.rho.field

    @property
    def tol(self):
        return self.rho.tol


def invariant_data(conn: Connection, H1=None) -> InvariantData:
    K = conn.K
    free_paths, torsion_paths = representative_paths(K)
    orders = homology_basis(K, 1).torsion_orders
    return InvariantData(
        rho=rho_minimal(conn),
        free_paths=tuple(free_paths),
        free_values=tuple(framed_holonomy(conn, p) for p in free_paths),
        torsion_paths=tuple(torsion_paths),
        torsion_orders=tuple(orders),
        torsion_values=tuple(framed_holonomy(conn, p) for p in torsion_paths),
    )


def invariants_close(a: InvariantData, b: InvariantData, tol=None):
    tol = a.tol if tol is None else tol
    if set(a.rho.values) != set(b.rho.values):
        return False
    for key, va in a.rho.values.items():
        if not fld.close(va, b.rho.values[key], a.field, tol):
            return False
    for va, vb in zip(a.free_values + a.torsion_values,
                      b.free_values + b.torsion_values):
        if not fld.close(va, vb, a.field, tol):
            return False
    return True


# -- 2-chain pairing ---------------------------------------------------------------

def _chain_pairings(K: SimplicialComplex, framed: FramedTwoChain, strict=False):
    """Interior-edge pairings and boundary occurrences of a framed 2-chain.

    Returns (pairs, boundary): pairs as tuples (i, j, facet_of_ji_side,
    facet_of_ij_side); boundary as ((a, b), facet) occurrences with the
    induced orientation.  The pairing is order-independent because the
    product over any matching equals the split product of all coefficients.
    """
    occurrences = {}
    for oriented, fi in framed.entries:
        fv = set(K.facets[fi])
        if not set(oriented) <= fv:
            raise InvalidFraming(f"triangle {oriented} not in framing facet {fi}")
        a, b, c = oriented
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            forward = u < v
            occurrences.setdefault(key, ([], []))[0 if forward else 1].append(
                (u, v, fi)
            )
    pairs = []
    boundary = []
    for key in sorted(occurrences):
        pos, neg = occurrences[key]
        matched = min(len(pos), len(neg))
        for (u, v, f_ij), (_, _, f_ji) in zip(pos[:matched], neg[:matched]):
            pairs.append((u, v, f_ji, f_ij))
        leftover = pos[matched:] + neg[matched:]
        if leftover and strict:
            raise UnpairedInteriorEdge(
                f"edge {key} leaves {len(leftover)} unpaired occurrences"
            )
        boundary.extend(((u, v), fi) for u, v, fi in leftover)
    return pairs, boundary


def integral_formula(conn: Connection, framed: FramedTwoChain):
    """Both sides of the integral formula for a framed 2-chain: the product
    of pair values over interior-edge pairings, and the product of -coeff
    over the induced-oriented boundary."""
    K = conn.K
    pairs, boundary = _chain_pairings(K, framed)
    lhs = fld.one(conn.field)
    for i, j, f_ji, f_ij in pairs:
        lhs = lhs * (conn.coeff(f_ji, i, j) * conn.coeff(f_ij, j, i))
    rhs = fld.one(conn.field)
    for (a, b), fi in boundary:
        rhs = rhs * (-conn.coeff(fi, a, b))
    return lhs, rhs


def _pairing_product_from_rho(rho: RhoData, pairs):
    value = fld.one(rho.field)
    for i, j, f_ji, f_ij in pairs:
        if f_ji == f_ij:
            continue
        value = value * rho_between(rho, f_ji, f_ij, i, j)
    return value


# -- relation report ------------------------------------------------------------------

@dataclass
class RelationCheck:
    name: str
    location: object
    ok: bool
    residual: float


@dataclass
class RelationReport:
    checks: list = dc_field(default_factory=list)

    def add(self, name, location, value, target, field, tol):
        residual = fld.max_relative_error(value, target)
        self.checks.append(
            RelationCheck(name, location, fld.close(value, target, field, tol), residual)
        )

    @property
    def all_ok(self):
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def summary(self):
        by_name = {}
        for c in self.checks:
            ok, total = by_name.get(c.name, (0, 0))
            by_name[c.name] = (ok + int(c.ok), total + 1)
        return by_name


def verify_relations(data, K=None, H1=None, include_homology=True, tol=None):
    """Check every relation the invariant data must satisfy.

    data may be RhoData or InvariantData; the homological cycle and torsion
    checks need holonomy values, so they run only for InvariantData (a
    MissingHomologyData error is raised when torsion checks are requested on
    plain RhoData).
    """
    rho = data.rho if isinstance(data, InvariantData) else data
    K = rho.K if K is None else K
    field = rho.field
    tol = rho.tol if tol is None else tol
    unit = fld.one(field)
    report = RelationReport()
    n = K.n

    # relation A: triple products inside every interior face
    if n >= 3:
        for idx, face in enumerate(K.simplices(n - 1)):
            fa, fb = sorted(K.cofacets[face])
            for a in range(len(face)):
                for b in range(a + 1, len(face)):
                    for c in range(b + 1, len(face)):
                        i, j, l = face[a], face[b], face[c]
                        prod = (rho.pair_value(face, fa, fb, i, j)
                                * rho.pair_value(face, fa, fb, j, l)
                                * rho.pair_value(face, fa, fb, l, i))
                        report.add("A", (face, (i, j, l)), prod, unit, field, tol)

    # relation B: star-cycle products for edges inside (n-2)-simplices
    if n >= 3:
        from .complexes import star_cycle
        for sigma in K.simplices(n - 2):
            star = star_cycle(K, sigma)
            m = star.m
            for a in range(len(sigma)):
                for b in range(a + 1, len(sigma)):
                    i, j = sigma[a], sigma[b]
                    prod = unit
                    for p in range(m):
                        f_here = star.facets[p]
                        f_next = star.facets[(p + 1) % m]
                        face = tuple(sorted(sigma + (star.rim[(p + 1) % m],)))
                        prod = prod * rho.pair_value(face, f_here, f_next, i, j)
                    report.add("B", (sigma, (i, j)), prod, unit, field, tol)

    # global product relations on oriented manifolds
    if K.orientation is not None and n == 2:
        prod = unit
        for i, j in K.simplices(1):
            prod = prod * rho.oriented_value((i, j), i, j)
        report.add("global-surface", None, prod, unit, field, tol)
    if K.orientation is not None and n == 3:
        prod = unit
        for face in K.simplices(2):
            i, j, l = face
            sign = K.face_sign(K.cofacets[face][0], face)
            cyc = (i, j, l) if sign == 1 else (i, l, j)
            for u, v in ((cyc[0], cyc[1]), (cyc[1], cyc[2]), (cyc[2], cyc[0])):
                prod = prod * rho.oriented_value(face, u, v)
        report.add("global-3manifold", None, prod, unit, field, tol)

    # homological relations
    if include_homology:
        basis2 = homology_basis(K, 2) if n >= 2 else None
        for zi, z in enumerate(basis2.free):
            framed = frame_chain2(K, z)
            pairs, _ = _chain_pairings(K, framed, strict=True)
            value = _pairing_product_from_rho(rho, pairs)
            report.add("cycle-relation", ("z", zi), value, unit, field, tol)
        basis1 = homology_basis(K, 1)
        if basis1.torsion_orders:
            if not isinstance(data, InvariantData):
                raise MissingHomologyData(
                    "torsion relation needs holonomy values (InvariantData)"
                )
            for s, (order, u) in enumerate(
                zip(basis1.torsion_orders, basis1.torsion_bounding)
            ):
                framed = frame_chain2(K, u)
                pairs, boundary = _chain_pairings(K, framed)
                lhs = _pairing_product_from_rho(rho, pairs)
                correction = unit
                from .homology import reference_framing
                for (a, b), fi in boundary:
                    ref = reference_framing(K, a, b)
                    if ref != fi:
                        correction = correction * rho_between(rho, fi, ref, a, b)
                target = correction * data.torsion_values[s] ** order
                report.add("torsion-relation", ("u", s), lhs, target, field, tol)
    return report


# -- Chern numbers -----------------------------------------------------------------------

@dataclass
class ChernData:
    facet_cochain: dict      # n=2: facet index -> real cochain value
    total: int               # n=2: integer sum
    cycle_pairings: tuple    # n>=3: integers, one per free H_2 generator
    torsion_residues: tuple  # n>=3: residues mod m_s


def _angle(value):
    return math.atan2(value.imag, value.real)


def chern(data, K=None, H1=None, angle_tol=1e-6) -> ChernData:
    """First Chern data from pair coefficients over the complex field."""
    rho = data.rho if isinstance(data, InvariantData) else data
    K = rho.K if K is None else K
    if rho.field != fld.COMPLEX:
        raise MixedField("Chern numbers require the complex scalar model")
    n = K.n

    if n == 2:
        if K.orientation is None:
            raise BranchViolation("surface Chern number needs an orientation")
        edge_angle = {}
        for i, j in K.simplices(1):
            value = rho.oriented_value((i, j), i, j)
            angle = _angle(complex(value))
            if abs(angle) >= math.pi / 2:
                raise BranchViolation(
                    f"|arg rho| = {abs(angle):.3f} >= pi/2 on edge ({i},{j})"
                )
            edge_angle[(i, j)] = angle
        cochain = {}
        for fi, verts in enumerate(K.facets):
            total = 0.0
            for a in range(3):
                for b in range(a + 1, 3):
                    total += edge_angle[(verts[a], verts[b])]
            cochain[fi] = -total / (4 * math.pi)
        total = sum(cochain.values())
        nearest = round(total)
        if abs(total - nearest) > angle_tol:
            raise NonIntegerTotal(f"facet cochain sums to {total}, not an integer")
        return ChernData(cochain, nearest, (), ())

    basis2 = homology_basis(K, 2)
    pairings = []
    for z in basis2.free:
        framed = frame_chain2(K, z)
        pairs, _ = _chain_pairings(K, framed, strict=True)
        total = 0.0
        for i, j, f_ji, f_ij in pairs:
            if f_ji == f_ij:
                continue
            total += _angle(complex(rho_between(rho, f_ji, f_ij, i, j)))
        value = total / (2 * math.pi)
        nearest = round(value)
        if abs(value - nearest) > angle_tol:
            raise NonIntegerTotal(f"cycle pairing {value} is not an integer")
        pairings.append(nearest)

    basis1 = homology_basis(K, 1)
    residues = []
    if basis1.torsion_orders:
        if not isinstance(data, InvariantData):
            raise MissingHomologyData("torsion residues need holonomy values")
        for s, (order, u) in enumerate(
            zip(basis1.torsion_orders, basis1.torsion_bounding)
        ):
            framed = frame_chain2(K, u)
            pairs, boundary = _chain_pairings(K, framed)
            total = 0.0
            for i, j, f_ji, f_ij in pairs:
                if f_ji == f_ij:
                    continue
                total += _angle(complex(rho_between(rho, f_ji, f_ij, i, j)))
            from .homology import reference_framing
            for (a, b), fi in boundary:
                ref = reference_framing(K, a, b)
                if ref != fi:
                    total -= _angle(complex(rho_between(rho, fi, ref, a, b)))
            total -= order * _angle(complex(data.torsion_values[s]))
            value = total / (2 * math.pi)
            nearest = round(value)
            if abs(value - nearest) > angle_tol:
                raise NonIntegerTotal(f"torsion pairing {value} is not an integer")
            residues.append(nearest % order)
    return ChernData({}, 0, tuple(pairings), tuple(residues))


# -- file format -------------------------------------------------------------------------

def write_invariants_file(inv: InvariantData, fh):
    K = inv.K
    fh.write(f"field {inv.field}\n")
    for (idx, i, j) in sorted(inv.rho.values):
        face = K.simplices(K.n - 1)[idx]
        fa, fb = sorted(K.cofacets[face])
        value = fld.format_scalar(inv.rho.values[(idx, i, j)], inv.field)
        fh.write(f"rho {idx} {fa} {fb} {i} {j} {value}\n")
    for k, value in enumerate(inv.free_values):
        fh.write(f"hol free {k} {fld.format_scalar(value, inv.field)}\n")
    for s, (order, value) in enumerate(zip(inv.torsion_orders, inv.torsion_values)):
        fh.write(f"hol tor {s} {order} {fld.format_scalar(value, inv.field)}\n")


def read_invariants_file(K: SimplicialComplex, fh) -> InvariantData:
    field = None
    values = {}
    free_values = {}
    torsion_values = {}
    torsion_orders = {}
    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if field is None:
            if len(parts) != 2 or parts[0] != "field" or parts[1] not in fld.FIELDS:
                raise ParseError(lineno, f"expected 'field rational|complex', got {line!r}")
            field = parts[1]
            continue
        if parts[0] == "rho":
            if len(parts) != 7:
                raise ParseError(lineno, f"bad rho line {line!r}")
            try:
                idx, fa, fb, i, j = (int(p) for p in parts[1:6])
            except ValueError:
                raise ParseError(lineno, f"bad integer in {line!r}") from None
            if not 0 <= idx < len(K.simplices(K.n - 1)):
                raise ParseError(lineno, f"face index {idx} out of range")
            face = K.simplices(K.n - 1)[idx]
            if tuple(sorted((fa, fb))) != tuple(sorted(K.cofacets[face])):
                raise ParseError(lineno, f"facets {fa},{fb} are not cofacets of face {idx}")
            value = fld.parse_scalar(parts[6], field, lineno)
            if (fa, fb) != tuple(sorted((fa, fb))):
                value = 1 / value
            if i > j:
                i, j = j, i
                value = 1 / value
            values[(idx, i, j)] = value
        elif parts[0] == "hol" and len(parts) == 4 and parts[1] == "free":
            free_values[int(parts[2])] = fld.parse_scalar(parts[3], field, lineno)
        elif parts[0] == "hol" and len(parts) == 5 and parts[1] == "tor":
            torsion_orders[int(parts[2])] = int(parts[3])
            torsion_values[int(parts[2])] = fld.parse_scalar(parts[4], field, lineno)
        else:
            raise ParseError(lineno, f"unrecognised line {line!r}")
    if field is None:
        raise ParseError(0, "missing 'field' header")
    free_paths, torsion_paths = representative_paths(K)
    basis = homology_basis(K, 1)
    if sorted(free_values) != list(range(len(free_paths))):
        raise ParseError(0, "wrong number of free holonomy values")
    if sorted(torsion_values) != list(range(len(torsion_paths))):
        raise ParseError(0, "wrong number of torsion holonomy values")
    for s, order in torsion_orders.items():
        if basis.torsion_orders[s] != order:
            raise ParseError(0, f"torsion order mismatch at generator {s}")
    rho = RhoData(K, field, values)
    return InvariantData(
        rho=rho,
        free_paths=tuple(free_paths),
        free_values=tuple(free_values[k] for k in range(len(free_paths))),
        torsion_paths=tuple(torsion_paths),
        torsion_orders=tuple(basis.torsion_orders),
        torsion_values=tuple(torsion_values[s] for s in range(len(torsion_paths))),
    )
