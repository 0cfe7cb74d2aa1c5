"""Local nonabelian curvature around (n-2)-simplices.

The transport basis for the star of sigma is (values on sigma's vertices in
sorted order, value at the moving rim vertex).  One step propagates the rim
value across a facet of the star; the cyclic product of the m step matrices
is the curvature operator.  Its determinant equals the product of the step
diagonal entries (no extra sign), and the last row carries the curvature
coefficients; their gauge-invariant combinations are expressible through
pair coefficients alone, which is also the route back from invariants to
curvature.
"""

from dataclasses import dataclass

from . import field as fld
from . import linalg
from .complexes import EdgeStar, SimplicialComplex, star_cycle
from .connection import Connection, triangle_apply
from .errors import Degenerate, InconsistentMu, WrongDimension
from .invariants import RhoData


@dataclass
class CurvatureOperator:
    star: EdgeStar
    start: int                  # rim index p
    matrices: list              # step matrices, applied first to last
    operator: list              # their ordered product
    alpha: dict                 # q in sigma -> last-row coefficient
    det_value: object           # bottom-right entry = det of the operator
    field: str
    is_flat: bool
    is_unimodular: bool


def step_matrix(conn: Connection, star: EdgeStar, p):
    """Transport from rim vertex p to rim vertex p+1 through the facet
    between them: identity on sigma's values, last row from the triangle
    equation solved for the new rim value."""
    K = conn.K
    n = K.n
    sigma = star.sigma
    a = star.rim_at(p)
    b = star.rim_at(p + 1)
    fi = star.facet_at(p)
    last = [conn.coeff(fi, q, b) for q in sigma] + [conn.coeff(fi, a, b)]
    mat = linalg.identity(n)
    mat[n - 1] = last
    return mat


def curvature_operator(conn: Connection, sigma, start=0) -> CurvatureOperator:
    """Cyclic product of step matrices around an (n-2)-simplex."""
    K = conn.K
    if isinstance(sigma, EdgeStar):
        star = sigma
    else:
        sigma = tuple(sorted(sigma))
        if len(sigma) != K.n - 1:
            raise WrongDimension(
                f"curvature lives on (n-2)-simplices; got {sigma} in dimension {K.n}"
            )
        star = star_cycle(K, sigma)
    m = star.m
    n = K.n
    matrices = [step_matrix(conn, star, start + s) for s in range(m)]
    op = matrices[0]
    for mat in matrices[1:]:
        op = linalg.mat_mul(mat, op)
    alpha = {q: op[n - 1][k] for k, q in enumerate(star.sigma)}
    det_value = op[n - 1][n - 1]
    unit = linalg.identity(n)
    is_flat = linalg.mat_close(op, unit, conn.field, conn.tol)
    is_unimodular = fld.close(det_value, fld.one(conn.field), conn.field, conn.tol)
    return CurvatureOperator(
        star, start % m, matrices, op, alpha, det_value, conn.field,
        is_flat, is_unimodular,
    )


def alpha_closed_form(conn: Connection, star: EdgeStar, q, p):
    """Last-row coefficient as the explicit telescoping sum over the star
    (independent of the matrix product; used as a cross-check)."""
    m = star.m
    total = None
    prefix = fld.one(conn.field)
    for k in range(m):
        fi = star.facet_at(p - 1 - k)          # facet containing rim p-k-1, p-k
        term = prefix * conn.coeff(fi, q, star.rim_at(p - k))
        total = term if total is None else total + term
        prefix = prefix * conn.coeff(fi, star.rim_at(p - k - 1), star.rim_at(p - k))
    return total


def alpha_star(op: CurvatureOperator, conn: Connection):
    """Gauge-invariant coefficients for every (q, p) of the star."""
    star = op.star
    m = star.m
    out = {}
    for p in range(m):
        base = op if p == op.start else curvature_operator(conn, star, p)
        fi = star.facet_at(p - 1)              # facet containing rim p-1 and p
        for q in star.sigma:
            out[(q, p)] = base.alpha[q] * conn.coeff(fi, star.rim_at(p), q)
    return out


def _star_pair(rho: RhoData, star: EdgeStar, s, i, j):
    """Pair value across the face between the facets on both sides of rim
    vertex s, ordered (later facet, earlier facet)."""
    face = tuple(sorted(star.sigma + (star.rim_at(s),)))
    return rho.pair_value(face, star.facet_at(s), star.facet_at(s - 1), i, j)


def curvature_from_rho(rho: RhoData, star: EdgeStar):
    """Gauge-invariant curvature data from pair coefficients alone.

    Returns (alpha-star map, determinant value); the determinant has one
    expression per vertex of sigma and they must agree.
    """
    m = star.m
    field = rho.field
    unit = fld.one(field)
    out = {}
    dets = []
    for q in star.sigma:
        ring = [_star_pair(rho, star, s, star.rim_at(s), q) for s in range(m)]
        prod = unit
        for r in ring:
            prod = prod * r
        dets.append((-1) ** m * prod)
        for p in range(m):
            total = unit
            prefix = unit
            for k in range(1, m):
                prefix = prefix * ring[(p - k) % m]
                total = total + (-1) ** k * prefix
            out[(q, p)] = total
    for other in dets[1:]:
        if not fld.close(other, dets[0], field, rho.tol):
            raise InconsistentMu(
                f"determinant expressions disagree on star of {star.sigma}"
            )
    return out, dets[0]


def rho_from_curvature(alpha_map, det_value, star: EdgeStar, K: SimplicialComplex,
                       field, tol=fld.DEFAULT_TOL):
    """Invert the curvature coefficients back to pair values on the star.

    Needs genericity: every alpha-star value and every denominator nonzero.
    Output is keyed like RhoData storage (face index, i < j) relative to the
    cofacet pair ordered by facet index.
    """
    m = star.m
    values = {}
    face_index = K.simplex_index[K.n - 1]
    for p in range(m):
        face = tuple(sorted(star.sigma + (star.rim_at(p),)))
        idx = face_index[face]
        t_here = star.facet_at(p - 1)          # earlier facet at this face
        t_next = star.facet_at(p)
        lo, hi = sorted((t_here, t_next))
        rim = star.rim_at(p)
        per_q = {}
        for q in star.sigma:
            num = alpha_map[(q, p)]
            den = alpha_map[(q, (p + 1) % m)] - 1 + det_value
            if num == 0 or den == 0:
                raise Degenerate(f"zero at (q={q}, p={p}) on star of {star.sigma}")
            per_q[q] = -num / den               # rho for (rim, q) with earlier facet first
        for q in star.sigma:
            i, j = (rim, q) if rim < q else (q, rim)
            value = per_q[q] if (rim, q) == (i, j) else 1 / per_q[q]
            if (lo, hi) != (t_here, t_next):
                value = 1 / value
            values[(idx, i, j)] = value
        sig = star.sigma
        for a in range(len(sig)):
            for b in range(a + 1, len(sig)):
                q1, q2 = sig[a], sig[b]
                value = per_q[q2] / per_q[q1]   # relation A inside the face
                if (lo, hi) != (t_here, t_next):
                    value = 1 / value
                values[(idx, q1, q2)] = value
    return values


def all_curvatures(conn: Connection):
    """Curvature operators around every (n-2)-simplex, in skeleton order."""
    return [
        curvature_operator(conn, sigma) for sigma in conn.K.simplices(conn.K.n - 2)
    ]


def is_locally_flat(conn: Connection):
    return all(op.is_flat for op in all_curvatures(conn))


def propagate_solutions(conn: Connection):
    """Construct n global solutions of the triangle equation by propagation
    from a base facet (meaningful for locally flat connections on simply
    connected complexes; verify with triangle_apply)."""
    K = conn.K
    K.require_connected()
    n = K.n
    solutions = []
    for r in range(n):
        base = K.facets[0]
        psi = {base[k + 1]: fld.one(conn.field) if k == r else 0 * fld.one(conn.field)
               for k in range(n)}
        psi[base[0]] = conn.coeff(0, base[r + 1], base[0])
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for fi in frontier:
                fv = K.facets[fi]
                for face in (fv[:k] + fv[k + 1:] for k in range(n + 1)):
                    a, b = K.cofacets[face]
                    other = b if a == fi else a
                    if other in seen:
                        continue
                    seen.add(other)
                    nxt.append(other)
                    ov = K.facets[other]
                    unknown = [v for v in ov if v not in psi]
                    if len(unknown) == 1:
                        w = unknown[0]
                        acc = None
                        for v in ov:
                            if v != w:
                                term = conn.coeff(other, v, w) * psi[v]
                                acc = term if acc is None else acc + term
                        psi[w] = acc
            frontier = nxt
        solutions.append(psi)
    return solutions


def solution_residuals(conn: Connection, solutions):
    """Triangle-operator values of candidate solutions (zero when exact)."""
    b = conn.b_coefficients()
    return [triangle_apply(conn.K, b, psi) for psi in solutions]
