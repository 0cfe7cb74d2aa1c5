"""Reconstruction of a connection from its gauge-invariant data.

Every step reduces to multiplicative linear systems: find positive unknowns
x with prescribed integer-exponent products.  The solver runs through the
Smith normal form of the exponent matrix; over the complex numbers it works
in logarithmic coordinates end to end so that large intermediate exponents
never overflow, and coboundary-type solutions are re-balanced by a harmonic
vertex potential before exponentiating.

The surface algorithm halves the pair coefficients into an edge cochain,
solves one coboundary system and fixes the holonomy by a cocycle; in higher
dimensions the pair coefficients are first integrated facet by facet around
each edge star, the resulting triple-product 2-cochain is checked for
exactness against the degree-2 homology and then split off by a second
coboundary solve, and the holonomy is fixed the same way.
"""

import cmath
import math
from dataclasses import dataclass, field as dc_field

from . import field as fld
from .complexes import SimplicialComplex
from .connection import Connection, apply_gauge, gauge_equivalent
from .curvature import all_curvatures
from .errors import (
    BranchObstruction,
    CocycleNotExact,
    InconsistentInvariants,
    MixedField,
    NotLocallyFlat,
    Unsolvable,
)
from .homology import (
    _snf,
    h1_class_matrix,
    homology_basis,
    representative_paths,
    snf_rank,
)
from .invariants import (
    InvariantData,
    framed_holonomy,
    invariant_data,
    invariants_close,
    verify_relations,
)


@dataclass
class MultiplicativeSystem:
    """Equations prod_j x_j^{E[i][j]} = targets[i]."""

    exponents: list
    targets: list


def _wrap_angle(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def solve_multiplicative_system(system: MultiplicativeSystem, field,
                                tol=fld.DEFAULT_TOL, snf=None, log_form=False):
    """Solve a multiplicative system, or raise Unsolvable with the violated
    transformed row and the root order it would require.

    Over the rationals the solution is exact and root extraction must be
    exact; over the complex numbers principal roots are taken and the
    computation stays in log space (set log_form to get (log-modulus,
    phase) pairs instead of exponentiated values).
    """
    E = system.exponents
    rows = len(E)
    cols = len(E[0]) if rows else 0
    if snf is None:
        U, _, D, V, _ = _snf(E)
    else:
        U, D, V = snf
    r = snf_rank(D)

    if field == fld.RATIONAL:
        x = None
        ys = []
        for i in range(rows):
            acc = fld.one(fld.RATIONAL)
            for k in range(rows):
                if U[i][k]:
                    acc = acc * system.targets[k] ** U[i][k]
            if i < r:
                root = fld.rational_nth_root(acc, D[i][i])
                if root is None:
                    raise Unsolvable(i, D[i][i], acc)
                ys.append(root)
            elif acc != 1:
                raise Unsolvable(i, 1, acc)
        out = []
        for j in range(cols):
            acc = fld.one(fld.RATIONAL)
            for i in range(min(r, cols)):
                if V[j][i]:
                    acc = acc * ys[i] ** V[j][i]
            out.append(acc)
        return out

    logs = [cmath.log(complex(t)) for t in system.targets]
    ylog = []
    for i in range(rows):
        re = 0.0
        im = 0.0
        weight = 1.0
        for k in range(rows):
            u = U[i][k]
            if u:
                re += u * logs[k].real
                im += u * logs[k].imag
                weight += abs(u)
        im = _wrap_angle(im)
        if i < r:
            d = D[i][i]
            ylog.append(complex(re / d, im / d))
        else:
            if abs(re) > tol * weight or abs(im) > tol * weight:
                raise Unsolvable(i, 1, cmath.exp(complex(re, im)))
    out = []
    for j in range(cols):
        re = 0.0
        im = 0.0
        for i in range(min(r, cols)):
            v = V[j][i]
            if v:
                re += v * ylog[i].real
                im += v * ylog[i].imag
        out.append(complex(re, im))
    if log_form:
        return out
    return [cmath.exp(z) for z in out]


# -- coboundary systems on the 2-skeleton -------------------------------------------

def _two_skeleton_system(K: SimplicialComplex):
    """Exponent rows of the multiplicative coboundary acting on edge
    cochains, one row per 2-simplex, with the cached SNF (transposed from
    the degree-2 boundary matrix decomposition)."""
    key = ("cocycle_system",)
    if key in K._cache:
        return K._cache[key]
    edge_index = K.simplex_index[1]
    rows = []
    for (i, j, l) in K.simplices(2):
        row = [0] * len(K.simplices(1))
        row[edge_index[(i, j)]] += 1
        row[edge_index[(j, l)]] += 1
        row[edge_index[(i, l)]] -= 1
        rows.append(row)
    from .homology import boundary_matrix
    U, _, D, V, _ = _snf(boundary_matrix(K, 2))
    # rows == transpose of the boundary matrix, so transpose the transforms
    Ut = [list(col) for col in zip(*V)]
    Dt = [list(col) for col in zip(*D)]
    Vt = [list(col) for col in zip(*U)]
    result = (rows, (Ut, Dt, Vt))
    K._cache[key] = result
    return result


def _solve_linear(A, b):
    """Dense float Gaussian elimination with partial pivoting."""
    n = len(A)
    M = [row[:] + [bv] for row, bv in zip(A, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) < 1e-14:
            continue
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    out = []
    for col in range(n):
        out.append(M[col][n] / M[col][col] if abs(M[col][col]) > 1e-14 else 0.0)
    return out


def _balance_edge_logs(K: SimplicialComplex, logs):
    """Shift an edge cochain in log space by a coboundary so the moduli are
    as small as possible (harmonic vertex potential, least squares)."""
    nv = K.vertex_count
    lap = [[0.0] * nv for _ in range(nv)]
    rhs = [0.0] * nv
    for e, (i, j) in enumerate(K.simplices(1)):
        lap[i][i] += 1.0
        lap[j][j] += 1.0
        lap[i][j] -= 1.0
        lap[j][i] -= 1.0
        rhs[i] -= logs[e].real
        rhs[j] += logs[e].real
    # pin the first vertex to break the constant-shift degeneracy
    lap[0] = [0.0] * nv
    lap[0][0] = 1.0
    rhs[0] = 0.0
    eta = _solve_linear(lap, rhs)
    return [
        complex(logs[e].real + eta[i] - eta[j], logs[e].imag)
        for e, (i, j) in enumerate(K.simplices(1))
    ]


def edge_cochain_from_logs(K, logs):
    return {edge: cmath.exp(z) for edge, z in zip(K.simplices(1), logs)}


def cochain_value(cochain, i, j):
    return cochain[(i, j)] if i < j else 1 / cochain[(j, i)]


# -- cocycles with prescribed holonomy ---------------------------------------------------

def cocycle_with_values(K: SimplicialComplex, free_values, torsion_values, field,
                        balance=True):
    """Multiplicative 1-cocycle taking the given values on the homology
    basis (torsion values must be roots of unity of the right order).

    Built through the homology coordinate map: the value on an edge is the
    prescribed character evaluated at the class coordinates of the edge's
    projection to the cycle subspace, which makes the cocycle condition and
    the prescribed basis values exact by construction.
    """
    coords, free_rows, torsion_rows = h1_class_matrix(K)
    s1 = len(K.simplices(1))
    if field == fld.RATIONAL:
        out = {}
        for e, edge in enumerate(K.simplices(1)):
            acc = fld.one(field)
            for row, val in zip(free_rows, free_values):
                if coords[row][e]:
                    acc = acc * val ** coords[row][e]
            for row, val in zip(torsion_rows, torsion_values):
                if coords[row][e]:
                    acc = acc * val ** coords[row][e]
            out[edge] = acc
        return out
    logs = [cmath.log(complex(v)) for v in free_values]
    tor_logs = [cmath.log(complex(v)) for v in torsion_values]
    zlog = []
    for e in range(s1):
        re = 0.0
        im = 0.0
        for row, lg in zip(free_rows, logs):
            c = coords[row][e]
            if c:
                re += c * lg.real
                im += c * lg.imag
        for row, lg in zip(torsion_rows, tor_logs):
            c = coords[row][e]
            if c:
                re += c * lg.real
                im += c * lg.imag
        zlog.append(complex(re, im))
    if balance:
        zlog = _balance_edge_logs(K, zlog)
    return edge_cochain_from_logs(K, zlog)


def _apply_edge_cochain(conn: Connection, cochain, invert=False) -> Connection:
    """Multiply every pair value (i, j) by the cochain value delta_ij."""
    K = conn.K
    stored = []
    for fi, verts in enumerate(K.facets):
        v0 = verts[0]
        row = []
        for k in range(1, len(verts)):
            d = cochain_value(cochain, v0, verts[k])
            if invert:
                d = 1 / d
            row.append(conn.stored[fi][k - 1] * d)
        stored.append(row)
    return Connection(K, conn.field, stored, conn.tol)


def _snap_root_of_unity(value, order, tol):
    if abs(abs(value) - 1.0) > math.sqrt(tol):
        raise InconsistentInvariants(
            f"torsion holonomy ratio has modulus {abs(value)}, expected 1"
        )
    k = round(order * cmath.phase(value) / (2 * math.pi)) % order
    snapped = cmath.exp(2j * math.pi * k / order)
    if abs(snapped - value) > math.sqrt(tol):
        raise InconsistentInvariants(
            f"torsion holonomy ratio {value} is not an order-{order} root of unity"
        )
    return snapped


def _adjust_holonomy(conn: Connection, inv: InvariantData, tol, report=None):
    """Twist by a cocycle so the framed holonomy matches the invariants."""
    K = conn.K
    free_paths, torsion_paths = representative_paths(K)
    free_ratios = [
        inv.free_values[k] / framed_holonomy(conn, p)
        for k, p in enumerate(free_paths)
    ]
    torsion_ratios = [
        _snap_root_of_unity(
            inv.torsion_values[s] / framed_holonomy(conn, p),
            inv.torsion_orders[s], tol,
        )
        for s, p in enumerate(torsion_paths)
    ]
    if not free_ratios and not torsion_ratios:
        return conn
    delta = cocycle_with_values(K, free_ratios, torsion_ratios, conn.field)
    out = _apply_edge_cochain(conn, delta)
    if report is not None:
        worst = 0.0
        for k, p in enumerate(free_paths):
            worst = max(worst, fld.max_relative_error(
                framed_holonomy(out, p), inv.free_values[k]))
        for s, p in enumerate(torsion_paths):
            worst = max(worst, fld.max_relative_error(
                framed_holonomy(out, p), inv.torsion_values[s]))
        report.append({"step": "holonomy-adjust", "ok": worst <= tol, "residual": worst})
    return out


# -- surface reconstruction -----------------------------------------------------------

def reconstruct_2d(K: SimplicialComplex, inv: InvariantData,
                   tol=fld.DEFAULT_TOL, report=None) -> Connection:
    """Recover a surface connection from its invariants up to gauge."""
    if K.n != 2:
        raise ValueError("reconstruct_2d needs a surface")
    if K.orientation is None:
        raise ValueError("reconstruct_2d needs an oriented surface")
    if inv.field != fld.COMPLEX:
        raise MixedField("reconstruction works over the complex scalar model")
    K.require_connected()

    rep = verify_relations(inv, K, tol=math.sqrt(tol))
    if report is not None:
        worst = max((c.residual for c in rep.checks), default=0.0)
        report.append({"step": "relations", "ok": rep.all_ok, "residual": worst})
    if not rep.all_ok:
        bad = rep.failures()[0]
        raise InconsistentInvariants(f"relation {bad.name} fails at {bad.location}")

    edge_sqrt = {}
    for edge in K.simplices(1):
        i, j = edge
        edge_sqrt[edge] = cmath.sqrt(complex(inv.rho.oriented_value(edge, i, j)))

    rows, snf = _two_skeleton_system(K)
    targets = []
    for tri in K.simplices(2):
        prod = 1.0 + 0.0j
        for a in range(3):
            for b in range(a + 1, 3):
                prod *= edge_sqrt[(tri[a], tri[b])]
        targets.append(1 / prod)
    try:
        lam_logs = solve_multiplicative_system(
            MultiplicativeSystem(rows, targets), fld.COMPLEX,
            tol=math.sqrt(tol), snf=snf, log_form=True,
        )
    except Unsolvable as exc:
        if abs(abs(exc.value) - 1.0) < math.sqrt(tol) and exc.value.real < 0:
            raise BranchObstruction(
                f"sign obstruction in the coboundary solve (row {exc.row})"
            ) from exc
        raise InconsistentInvariants(str(exc)) from exc
    lam = edge_cochain_from_logs(K, _balance_edge_logs(K, lam_logs))
    if report is not None:
        worst = 0.0
        for tri, t in zip(K.simplices(2), targets):
            got = (cochain_value(lam, tri[0], tri[1])
                   * cochain_value(lam, tri[1], tri[2])
                   * cochain_value(lam, tri[2], tri[0]))
            worst = max(worst, fld.max_relative_error(got, t))
        report.append({"step": "coboundary-solve", "ok": worst <= math.sqrt(tol),
                       "residual": worst})

    stored = []
    for verts in K.facets:
        v0 = verts[0]
        row = []
        for k in range(1, 3):
            edge = (v0, verts[k])
            row.append(-cochain_value(lam, v0, verts[k]) * edge_sqrt[edge])
        stored.append(row)
    conn = Connection(K, fld.COMPLEX, stored, tol)
    conn = _adjust_holonomy(conn, inv, tol, report)

    final = invariant_data(conn)
    ok = invariants_close(final, inv, tol)
    if report is not None:
        report.append({"step": "invariant-match", "ok": ok, "residual": None})
    if not ok:
        raise InconsistentInvariants("reconstructed connection mismatches invariants")
    return conn


# -- reconstruction in dimension three and above ---------------------------------------

def reconstruct_nd(K: SimplicialComplex, inv: InvariantData,
                   tol=fld.DEFAULT_TOL, report=None) -> Connection:
    """Recover a connection on an oriented n-manifold, n >= 3."""
    if K.n < 3:
        raise ValueError("reconstruct_nd needs dimension at least 3")
    if K.orientation is None:
        raise ValueError("reconstruct_nd needs an oriented complex")
    if inv.field != fld.COMPLEX:
        raise MixedField("reconstruction works over the complex scalar model")
    K.require_connected()
    check_tol = math.sqrt(tol)

    rep = verify_relations(inv, K, tol=check_tol)
    if report is not None:
        worst = max((c.residual for c in rep.checks), default=0.0)
        report.append({"step": "relations", "ok": rep.all_ok, "residual": worst})
    if not rep.all_ok:
        bad = rep.failures()[0]
        raise InconsistentInvariants(f"relation {bad.name} fails at {bad.location}")

    # Step 1: integrate the pair coefficients around every edge star.
    tilde = {}            # (edge index, facet index) -> value for the (i, j) order
    worst_b = 0.0
    for e, (i, j) in enumerate(K.simplices(1)):
        star = sorted(K.star_facets((i, j)))
        base = star[0]
        values = {base: 1.0 + 0.0j}
        frontier = [base]
        edges_seen = []
        adjacency = {}
        for fi in star:
            fv = K.facets[fi]
            for drop in fv:
                if drop in (i, j):
                    continue
                face = tuple(sorted(v for v in fv if v != drop))
                a, b = K.cofacets[face]
                other = b if a == fi else a
                adjacency.setdefault(fi, []).append((face, other))
        while frontier:
            nxt = []
            for fi in frontier:
                for face, other in sorted(adjacency[fi]):
                    factor = inv.rho.pair_value(face, other, fi, i, j)
                    if other not in values:
                        values[other] = factor * values[fi]
                        nxt.append(other)
                    else:
                        worst_b = max(worst_b, fld.max_relative_error(
                            values[other], factor * values[fi]))
            frontier = nxt
        for fi, v in values.items():
            tilde[(e, fi)] = v
    if report is not None:
        report.append({"step": "edge-star-integration", "ok": worst_b <= check_tol,
                       "residual": worst_b})
    if worst_b > check_tol:
        raise InconsistentInvariants("star-cycle relation fails during integration")

    edge_index = K.simplex_index[1]

    def tilde_value(fi, a, b):
        if a < b:
            return tilde[(edge_index[(a, b)], fi)]
        return 1 / tilde[(edge_index[(b, a)], fi)]

    # Step 2: the triple products must be facet independent and closed.
    nu = []
    worst_t = 0.0
    for (i, j, l) in K.simplices(2):
        vals = [
            tilde_value(fi, i, j) * tilde_value(fi, j, l) * tilde_value(fi, l, i)
            for fi in sorted(K.star_facets((i, j, l)))
        ]
        for v in vals[1:]:
            worst_t = max(worst_t, fld.max_relative_error(v, vals[0]))
        nu.append(vals[0])
    tri_index = K.simplex_index[2]
    worst_c = 0.0
    for (a, b, c, d) in K.simplices(3):
        prod = (nu[tri_index[(b, c, d)]] / nu[tri_index[(a, c, d)]]
                * nu[tri_index[(a, b, d)]] / nu[tri_index[(a, b, c)]])
        worst_c = max(worst_c, fld.max_relative_error(prod, 1.0 + 0.0j))
    if report is not None:
        report.append({"step": "triple-cochain", "ok": max(worst_t, worst_c) <= check_tol,
                       "residual": max(worst_t, worst_c)})
    if max(worst_t, worst_c) > check_tol:
        raise InconsistentInvariants("triple products are not a well-defined cocycle")

    # Step 3: exactness against degree-2 homology, then the coboundary solve.
    basis2 = homology_basis(K, 2)
    targets = [-v for v in nu]
    for zi, z in enumerate(basis2.free):
        acc_re, acc_im = 0.0, 0.0
        for idx, cz in enumerate(z):
            if cz:
                lg = cmath.log(targets[idx])
                acc_re += cz * lg.real
                acc_im += cz * lg.imag
        acc_im = _wrap_angle(acc_im)
        if abs(acc_re) > check_tol * 100 or abs(acc_im) > check_tol * 100:
            raise CocycleNotExact(f"obstruction on degree-2 generator {zi}")
    for zi, (order, z) in enumerate(zip(basis2.torsion_orders, basis2.torsion)):
        acc = 1.0 + 0.0j
        for idx, cz in enumerate(z):
            if cz:
                acc *= targets[idx] ** cz
        if abs(acc - 1.0) > check_tol * 100:
            raise CocycleNotExact(f"obstruction on degree-2 torsion generator {zi}")

    rows, snf = _two_skeleton_system(K)
    try:
        delta_logs = solve_multiplicative_system(
            MultiplicativeSystem(rows, targets), fld.COMPLEX,
            tol=check_tol, snf=snf, log_form=True,
        )
    except Unsolvable as exc:
        raise CocycleNotExact(str(exc)) from exc
    delta = edge_cochain_from_logs(K, _balance_edge_logs(K, delta_logs))

    stored = []
    for fi, verts in enumerate(K.facets):
        v0 = verts[0]
        row = []
        for k in range(1, K.n + 1):
            row.append(tilde_value(fi, v0, verts[k])
                       / cochain_value(delta, v0, verts[k]))
        stored.append(row)
    conn = Connection(K, fld.COMPLEX, stored, tol)
    if report is not None:
        from .connection import validate
        worst = validate(conn)
        report.append({"step": "triple-normalisation", "ok": worst <= check_tol,
                       "residual": worst})

    # Step 4: use the remaining cocycle freedom to match the holonomy.
    conn = _adjust_holonomy(conn, inv, tol, report)

    final = invariant_data(conn)
    ok = invariants_close(final, inv, tol)
    if report is not None:
        report.append({"step": "invariant-match", "ok": ok, "residual": None})
    if not ok:
        raise InconsistentInvariants("reconstructed connection mismatches invariants")
    return conn


def reconstruct(K: SimplicialComplex, inv: InvariantData,
                tol=fld.DEFAULT_TOL, report=None) -> Connection:
    if K.n == 2:
        return reconstruct_2d(K, inv, tol, report)
    return reconstruct_nd(K, inv, tol, report)


# -- SL normalisation ----------------------------------------------------------------------

def normalize_sl(conn: Connection, H1=None, tol=None) -> Connection:
    """Twist a locally flat surface connection by a cocycle so that the
    holonomy around every basis cycle has unit determinant."""
    from .holonomy import holonomy, thicken_loop

    K = conn.K
    if K.n != 2:
        raise ValueError("SL normalisation is implemented for surfaces")
    if conn.field != fld.COMPLEX:
        raise MixedField("SL normalisation works over the complex scalar model")
    tol = conn.tol if tol is None else tol
    if not all(op.is_flat for op in all_curvatures(conn)):
        raise NotLocallyFlat("curvature operators are not all the identity")

    free_paths, torsion_paths = representative_paths(K)
    if torsion_paths:
        raise NotLocallyFlat("SL normalisation expects a torsion-free surface")
    if not free_paths:
        return conn
    loops = [thicken_loop(K, list(p.vertices)) for p in free_paths]
    dets = [holonomy(conn, loop, require_closed=True).determinant() for loop in loops]
    # a twist by delta scales det(K) along a loop by delta(class)^n, n = 2
    values = [cmath.exp(-cmath.log(complex(d)) / 2) for d in dets]
    delta = cocycle_with_values(K, values, [], fld.COMPLEX)
    out = _apply_edge_cochain(conn, delta)
    for loop in loops:
        d = holonomy(out, loop, require_closed=True).determinant()
        if fld.max_relative_error(d, 1.0 + 0.0j) > math.sqrt(tol):
            raise InconsistentInvariants("determinant normalisation failed")
    return out
