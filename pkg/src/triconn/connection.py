"""Connection data on a complex: per-facet coefficients and the gauge action.

A connection stores, for each facet with sorted vertices v_0 < ... < v_n,
the values attached to the ordered pairs (v_0, v_k); every other pair value
is derived through the defining relations (diagonal one, inverse symmetry,
triple product minus one), so the relations hold by construction.

The sign convention relating raw b-coefficients to pair values is
coeff(i, j) = -b_i / b_j for i != j, which makes the all-ones b-coefficient
family the canonical connection with every off-diagonal value -1, and makes
the local propagation step literally "solve the triangle equation".
"""

import random
from dataclasses import dataclass

from . import field as fld
from .complexes import SimplicialComplex
from .errors import (
    DegenerateSolutions,
    DifferentComplex,
    Disconnected,
    MissingCoefficient,
    MissingGaugeValue,
    MixedField,
    ParseError,
    ZeroCoefficient,
)
from .homology import representative_paths
from .linalg import kernel_vector


@dataclass
class BCoefficients:
    """Raw facet-vertex coefficients of the triangle operator."""

    field: str
    values: dict            # (facet index, vertex) -> nonzero scalar


class Connection:
    def __init__(self, K: SimplicialComplex, field, stored, tol=fld.DEFAULT_TOL):
        fld.check_field(field)
        self.K = K
        self.field = field
        self.stored = stored            # per facet: values for (v_0, v_k), k=1..n
        self.tol = tol
        self._tables = [None] * len(K.facets)
        for fi, row in enumerate(stored):
            if len(row) != K.n:
                raise MissingCoefficient(f"facet {fi}: expected {K.n} values")
            for v in row:
                if v == 0:
                    raise ZeroCoefficient(f"facet {fi} has a zero value")

    def _table(self, fi):
        table = self._tables[fi]
        if table is None:
            verts = self.K.facets[fi]
            base = {verts[k]: self.stored[fi][k - 1] for k in range(1, len(verts))}
            table = {}
            v0 = verts[0]
            for i in verts:
                for j in verts:
                    if i == j:
                        table[(i, j)] = fld.one(self.field)
                    elif i == v0:
                        table[(i, j)] = base[j]
                    elif j == v0:
                        table[(i, j)] = 1 / base[i]
                    else:
                        table[(i, j)] = -base[j] / base[i]
            self._tables[fi] = table
        return table

    def coeff(self, fi, i, j):
        """Pair value on facet fi for ordered vertices (i, j)."""
        return self._table(fi)[(i, j)]

    def b_coefficients(self) -> BCoefficients:
        """Representative raw coefficients (first vertex normalised to 1)."""
        values = {}
        for fi, verts in enumerate(self.K.facets):
            values[(fi, verts[0])] = fld.one(self.field)
            for k in range(1, len(verts)):
                values[(fi, verts[k])] = -1 / self.stored[fi][k - 1]
        return BCoefficients(self.field, values)

    def close_to(self, other, tol=None):
        tol = self.tol if tol is None else tol
        return all(
            fld.close(a, b, self.field, tol)
            for ra, rb in zip(self.stored, other.stored)
            for a, b in zip(ra, rb)
        )


def validate(conn: Connection, tol=None):
    """Check the defining relations on every facet; returns the worst residual."""
    tol = conn.tol if tol is None else tol
    worst = 0.0
    for fi, verts in enumerate(conn.K.facets):
        for i in verts:
            for j in verts:
                worst = max(worst, fld.max_relative_error(
                    conn.coeff(fi, i, j) * conn.coeff(fi, j, i), fld.one(conn.field)))
        for i in verts:
            for j in verts:
                for l in verts:
                    if len({i, j, l}) == 3:
                        prod = (conn.coeff(fi, i, j) * conn.coeff(fi, j, l)
                                * conn.coeff(fi, l, i))
                        worst = max(worst, fld.max_relative_error(
                            prod, -fld.one(conn.field)))
    if conn.field == fld.RATIONAL and worst != 0:
        raise AssertionError("exact relations violated")
    return worst


def build_connection(K: SimplicialComplex, b: BCoefficients) -> Connection:
    """Connection from raw coefficients via coeff(i, j) = -b_i / b_j."""
    stored = []
    for fi, verts in enumerate(K.facets):
        row = []
        for v in verts:
            if (fi, v) not in b.values:
                raise MissingCoefficient(f"no coefficient for facet {fi}, vertex {v}")
            if b.values[(fi, v)] == 0:
                raise ZeroCoefficient(f"zero coefficient at facet {fi}, vertex {v}")
        b0 = b.values[(fi, verts[0])]
        for k in range(1, len(verts)):
            row.append(-b0 / b.values[(fi, verts[k])])
        stored.append(row)
    return Connection(K, b.field, stored)


def canonical_connection(K: SimplicialComplex, field=fld.RATIONAL) -> Connection:
    """The connection with every off-diagonal pair value equal to -1."""
    minus_one = -fld.one(field)
    return Connection(K, field, [[minus_one] * K.n for _ in K.facets])


def random_connection(K: SimplicialComplex, seed, field=fld.RATIONAL) -> Connection:
    rng = random.Random(("connection", seed))
    stored = [
        [fld.random_scalar(rng, field) for _ in range(K.n)] for _ in K.facets
    ]
    return Connection(K, field, stored)


def random_gauge(K: SimplicialComplex, seed, field=fld.RATIONAL):
    rng = random.Random(("gauge", seed))
    return {v: fld.random_scalar(rng, field) for v in range(K.vertex_count)}


def apply_gauge(conn: Connection, h) -> Connection:
    """Gauge action: pair value (i, j) is scaled by h_i / h_j."""
    stored = []
    for fi, verts in enumerate(conn.K.facets):
        for v in verts:
            if v not in h:
                raise MissingGaugeValue(f"no gauge value at vertex {v}")
            if h[v] == 0:
                raise MissingGaugeValue(f"zero gauge value at vertex {v}")
        v0 = verts[0]
        stored.append([
            conn.stored[fi][k - 1] * h[v0] / h[verts[k]]
            for k in range(1, len(verts))
        ])
    return Connection(conn.K, conn.field, stored, conn.tol)


def triangle_apply(K: SimplicialComplex, b: BCoefficients, psi):
    """Evaluate the triangle operator: per facet, sum of b_(T:P) * psi_P."""
    out = []
    for fi, verts in enumerate(K.facets):
        acc = None
        for v in verts:
            term = b.values[(fi, v)] * psi[v]
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def kernel_b_coefficients(K: SimplicialComplex, psis, field) -> BCoefficients:
    """Per-facet kernel coefficients annihilating n given vertex functions."""
    values = {}
    for fi, verts in enumerate(K.facets):
        rows = [[psi[v] for v in verts] for psi in psis]
        vec = kernel_vector(rows, len(verts))
        if vec is None:
            raise DegenerateSolutions(f"solution matrix on facet {fi} has rank < {K.n}")
        if any(x == 0 for x in vec):
            raise DegenerateSolutions(f"kernel on facet {fi} has a zero entry")
        for v, x in zip(verts, vec):
            values[(fi, v)] = x
    return BCoefficients(field, values)


def connection_from_solutions(K: SimplicialComplex, psis, field=fld.RATIONAL) -> Connection:
    """Flat connection whose triangle equation is solved by the given
    vertex functions (requires generic position: rank n on every facet)."""
    if len(psis) != K.n:
        raise DegenerateSolutions(f"need {K.n} vertex functions, got {len(psis)}")
    return build_connection(K, kernel_b_coefficients(K, psis, field))


def polynomial_solutions(K: SimplicialComplex, shift=1):
    """Power functions v -> (v + shift)^r, r = 1..n; generic by Vandermonde."""
    from fractions import Fraction
    return [
        {v: Fraction(v + shift) ** r for v in range(K.vertex_count)}
        for r in range(1, K.n + 1)
    ]


# -- gauge equivalence ------------------------------------------------------------

def gauge_equivalent(a: Connection, b: Connection, H1=None, tol=None):
    """Gauge h with apply_gauge(a, h) == b, or None.

    The edge ratios must be facet independent, form a multiplicative
    1-cocycle, and evaluate to one on every homology generator (free and
    torsion); the gauge is then recovered by tree propagation.
    """
    if a.K is not b.K and (a.K.n != b.K.n or a.K.facets != b.K.facets):
        raise DifferentComplex("connections live on different complexes")
    if a.field != b.field:
        raise MixedField(f"{a.field} vs {b.field}")
    K = a.K
    K.require_connected()
    field = a.field
    tol = a.tol if tol is None else tol

    ratio = {}
    for e, (i, j) in enumerate(K.simplices(1)):
        values = []
        for fi in K.star_facets((i, j)):
            values.append(b.coeff(fi, i, j) / a.coeff(fi, i, j))
        for v in values[1:]:
            if not fld.close(v, values[0], field, tol):
                return None
        ratio[(i, j)] = values[0]

    def delta(i, j):
        return ratio[(i, j)] if i < j else 1 / ratio[(j, i)]

    for (i, j, l) in K.simplices(2):
        prod = delta(i, j) * delta(j, l) * delta(l, i)
        if not fld.close(prod, fld.one(field), field, tol):
            return None

    free_paths, torsion_paths = representative_paths(K)
    for path in list(free_paths) + list(torsion_paths):
        value = fld.one(field)
        for u, v in path.edges():
            value = value * delta(u, v)
        if not fld.close(value, fld.one(field), field, tol):
            return None

    h = {0: fld.one(field)}
    frontier = [0]
    adj = {}
    for i, j in K.simplices(1):
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)
    while frontier:
        nxt = []
        for u in frontier:
            for w in sorted(adj[u]):
                if w not in h:
                    h[w] = h[u] / delta(u, w)
                    nxt.append(w)
        frontier = nxt

    check = apply_gauge(a, h)
    if not check.close_to(b, tol):
        return None
    return h


def max_relative_deviation(a: Connection, b: Connection):
    """Largest relative difference between stored values of two connections."""
    worst = 0.0
    for ra, rb in zip(a.stored, b.stored):
        for x, y in zip(ra, rb):
            worst = max(worst, fld.max_relative_error(x, y))
    return worst


# -- file format --------------------------------------------------------------------

def write_connection_file(conn: Connection, fh):
    fh.write(f"field {conn.field}\n")
    for fi, row in enumerate(conn.stored):
        values = " ".join(fld.format_scalar(v, conn.field) for v in row)
        fh.write(f"f {fi} {values}\n")


def read_connection_file(K: SimplicialComplex, fh) -> Connection:
    field = None
    stored = [None] * len(K.facets)
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
        if parts[0] != "f" or len(parts) != K.n + 2:
            raise ParseError(lineno, f"expected 'f <facet> <{K.n} values>', got {line!r}")
        try:
            fi = int(parts[1])
        except ValueError:
            raise ParseError(lineno, f"bad facet index {parts[1]!r}") from None
        if not 0 <= fi < len(K.facets):
            raise ParseError(lineno, f"facet index {fi} out of range")
        values = [fld.parse_scalar(tok, field, lineno) for tok in parts[2:]]
        if any(v == 0 for v in values):
            raise ZeroCoefficient(f"line {lineno}: zero connection value")
        stored[fi] = values
    if field is None:
        raise ParseError(0, "missing 'field' header")
    missing = [i for i, row in enumerate(stored) if row is None]
    if missing:
        raise MissingCoefficient(f"no values for facets {missing[:5]}")
    return Connection(K, field, stored)
