"""Modules over mirror charts twisted by exp of an obstruction.

A twisted module assigns a square matrix of affinoid elements to every
proper nested pair of faces.  Around a nested triple the composite of
two restriction matrices must differ from the direct one by exp of the
obstruction on the triangle of final charts; the validator measures the
residuals exactly and reports their t-adic norms.

Global sections are computed as the kernel, at a working precision, of
the edge comparison system over a finite monomial window; the window
radius is grown until the rank stops moving.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .affine import dot
from .errors import (
    ChartMismatchError,
    InvalidFibrationError,
    UndecidableDescriptionError,
)
from .mirror_charts import AffinoidElement, exp_aff, gerbe_value
from .novikov import INF, NovikovMatrix, NovikovScalar, _frac


# -- matrices of affinoid elements ----------------------------------------


def _aff_identity(cover, face, rank):
    one = AffinoidElement.one(cover, face)
    zero = AffinoidElement.zero(cover, face)
    return tuple(
        tuple(one if i == j else zero for j in range(rank)) for i in range(rank)
    )


def _aff_matmul(a, b):
    n, mid, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            total = a[i][0] * b[0][j]
            for k in range(1, mid):
                total = total + a[i][k] * b[k][j]
            row.append(total)
        out.append(tuple(row))
    return tuple(out)


def _aff_matsub(a, b):
    return tuple(
        tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b)
    )


def _aff_restrict(mat, face):
    return tuple(tuple(entry.restrict(face) for entry in row) for row in mat)


def _aff_scale(mat, element):
    return tuple(tuple(element * entry for entry in row) for row in mat)


def _aff_det(mat):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = None
    for j in range(n):
        sub = [row[:j] + row[j + 1 :] for row in mat[1:]]
        term = mat[0][j] * _aff_det(sub)
        if j % 2 == 1:
            term = -term
        total = term if total is None else total + term
    return total


def element_is_unit_at(element, precision):
    """Does one monomial strictly dominate the element on the whole
    polytope, with its leading coefficient known?"""
    precision = _frac(precision)
    terms = element.terms
    chart = element.cover.face_chart(element.face)
    vertices = chart.polytope.vertices
    q = element.basepoint
    known = [(a, c) for a, c in terms.items() if c.terms]
    for a0, c0 in known:
        v0 = c0.valuation()
        dominant = True
        for b, cb in terms.items():
            if b == a0:
                continue
            floor = cb._val_floor()
            for v in vertices:
                offset = tuple(x - y for x, y in zip(v, q))
                if not v0 + dot(offset, a0) < floor + dot(offset, b):
                    dominant = False
                    break
            if not dominant:
                break
        if dominant:
            return True
    return False


# -- the twist on a nested triple -------------------------------------------


def twist_factor(fibration, low, mid, top):
    """exp of the obstruction on the final charts of a nested triple.

    Chains whose final charts repeat carry a degenerate obstruction
    value of zero, so their factor is the unit.
    """
    low, mid, top = tuple(sorted(low)), tuple(sorted(mid)), tuple(sorted(top))
    cache = fibration.__dict__.setdefault("_twist_cache", {})
    factor = cache.get((low, mid, top))
    if factor is None:
        if low[-1] < mid[-1] < top[-1]:
            factor = gerbe_value(fibration, low, mid, top)
        else:
            factor = AffinoidElement.one(fibration.cover, top)
        cache[(low, mid, top)] = factor
    return factor


def nested_pairs(cover):
    """Proper nested face pairs, sorted."""
    cached = cover.__dict__.get("_nested_pairs_cache")
    if cached is not None:
        return cached
    out = set()
    for top in cover.faces:
        if len(top) < 2:
            continue
        for size in range(1, len(top)):
            for low in combinations(top, size):
                out.add((low, top))
    result = sorted(out)
    cover.__dict__["_nested_pairs_cache"] = result
    return result


def nested_chains(cover):
    """Proper chains low < mid < top of faces, sorted."""
    cached = cover.__dict__.get("_nested_chains_cache")
    if cached is not None:
        return cached
    out = []
    for mid, top in nested_pairs(cover):
        if len(mid) < 2:
            continue
        for size in range(1, len(mid)):
            for low in combinations(mid, size):
                out.append((low, mid, top))
    result = sorted(out)
    cover.__dict__["_nested_chains_cache"] = result
    return result


class TwistedModule:
    """Free module data on every face with restriction matrices for
    every proper nested pair."""

    def __init__(self, fibration, rank, restrictions, _trusted=False):
        self._fibration = fibration
        cover = fibration.cover
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 1:
            raise ValueError("module rank must be a positive integer")
        self._rank = rank
        if _trusted:
            self._restrictions = dict(restrictions)
            return
        required = nested_pairs(cover)
        data = {}
        for key, mat in restrictions.items():
            low, top = tuple(sorted(key[0])), tuple(sorted(key[1]))
            data[(low, top)] = tuple(tuple(row) for row in mat)
        missing = [pair for pair in required if pair not in data]
        if missing:
            raise ChartMismatchError(
                f"missing restriction for nested pair {missing[0]}"
            )
        extra = [pair for pair in data if pair not in required]
        if extra:
            raise ChartMismatchError(
                f"restriction given for a pair that is not nested: {extra[0]}"
            )
        for (low, top), mat in data.items():
            if len(mat) != rank or any(len(row) != rank for row in mat):
                raise ChartMismatchError(
                    f"restriction for {(low, top)} is not {rank} x {rank}"
                )
            for row in mat:
                for entry in row:
                    if not isinstance(entry, AffinoidElement):
                        raise TypeError(
                            "restriction entries must be affinoid elements"
                        )
                    if entry.face != top:
                        raise ChartMismatchError(
                            f"entry for {(low, top)} lives on face "
                            f"{entry.face}, expected {top}"
                        )
                    if entry.basepoint != cover.face_chart(top).basepoint:
                        raise ChartMismatchError(
                            "restriction entries must use the canonical "
                            "basepoint of their face"
                        )
        self._restrictions = data

    @property
    def fibration(self):
        return self._fibration

    @property
    def cover(self):
        return self._fibration.cover

    @property
    def rank(self):
        return self._rank

    @property
    def pairs(self):
        return tuple(sorted(self._restrictions))

    def restriction(self, low, top):
        low, top = tuple(sorted(low)), tuple(sorted(top))
        if low == top:
            return _aff_identity(self.cover, top, self._rank)
        try:
            return self._restrictions[(low, top)]
        except KeyError:
            raise ChartMismatchError(
                f"{(low, top)} is not a nested pair of faces"
            ) from None

    def with_entry(self, low, top, row, col, element):
        """A copy with one restriction entry replaced."""
        low, top = tuple(sorted(low)), tuple(sorted(top))
        if not isinstance(element, AffinoidElement):
            raise TypeError("restriction entries must be affinoid elements")
        if element.face != top:
            raise ChartMismatchError(
                f"replacement entry lives on face {element.face}, expected {top}"
            )
        if element.basepoint != self.cover.face_chart(top).basepoint:
            raise ChartMismatchError(
                "restriction entries must use the canonical basepoint "
                "of their face"
            )
        updated = dict(self._restrictions)
        mat = [list(r) for r in updated[(low, top)]]
        mat[row][col] = element
        updated[(low, top)] = tuple(tuple(r) for r in mat)
        return TwistedModule(self._fibration, self._rank, updated, _trusted=True)


def rank_one_module_from_cochain(fibration, cochain):
    """The rank-1 module with restrictions exp of a degree-1 cochain."""
    cover = fibration.cover
    if cochain.degree != 1:
        raise ValueError("expected a degree-1 cochain")
    restrictions = {}
    for low, top in nested_pairs(cover):
        a, b = low[-1], top[-1]
        if a == b:
            entry = AffinoidElement.one(cover, top)
        else:
            value = cochain.value((a, b))
            moved = value.compose_with_map(cover.transition(top[0], a))
            entry = exp_aff(cover, top, moved)
        restrictions[(low, top)] = ((entry,),)
    return TwistedModule(fibration, 1, restrictions)


def canonical_twisted_module(fibration):
    """The rank-1 module exp of a trivialising certificate.

    Only fibrations whose obstruction is a coboundary have one; others
    are refused.
    """
    from .cover import coboundary_certificate

    certificate = coboundary_certificate(fibration.obstruction_cocycle())
    if certificate is None:
        raise InvalidFibrationError(
            "the obstruction is not a coboundary, so no rank-1 "
            "twisted module exists"
        )
    return rank_one_module_from_cochain(fibration, certificate)


# -- validation -------------------------------------------------------------


@dataclass
class ValidationReport:
    """Exact residual audit of a twisted module."""

    ok: bool
    precision: Fraction
    rank: int
    pairs_checked: int
    triples_checked: int
    determinant_failures: tuple
    cocycle_failures: tuple

    def as_dict(self):
        return {
            "ok": self.ok,
            "precision": str(self.precision),
            "rank": self.rank,
            "pairs_checked": self.pairs_checked,
            "triples_checked": self.triples_checked,
            "determinant_failures": [
                [list(low), list(top)] for low, top in self.determinant_failures
            ],
            "cocycle_failures": [
                {
                    "chain": [list(low), list(mid), list(top)],
                    "norm_exponent": None if norm is INF else str(norm),
                }
                for (low, mid, top), norm in self.cocycle_failures
            ],
        }

    def as_text(self):
        lines = [
            "twisted module validation",
            f"precision: {self.precision}",
            f"rank: {self.rank}",
            f"pairs checked: {self.pairs_checked}",
            f"triples checked: {self.triples_checked}",
            f"determinant failures: {len(self.determinant_failures)}",
        ]
        for low, top in self.determinant_failures:
            lines.append(f"  {low} -> {top}: determinant is not a unit")
        lines.append(f"cocycle failures: {len(self.cocycle_failures)}")
        for (low, mid, top), norm in self.cocycle_failures:
            shown = "0" if norm is INF else f"t^({norm})"
            lines.append(
                f"  {low} -> {mid} -> {top}: residual norm {shown}"
            )
        lines.append("result: " + ("ACCEPTED" if self.ok else "REJECTED"))
        return "\n".join(lines)


def _residual_norm(mat):
    best = INF
    for row in mat:
        for entry in row:
            bound = entry.valuation_lower_bound()
            if bound < best:
                best = bound
    return best


def validate_module(module, precision, stop_early=False):
    """Check the twisted cocycle identity and invertibility at a
    working precision.

    With stop_early the scan returns at the first failure, for callers
    that only need the accept/reject decision.
    """
    precision = _frac(precision)
    cover = module.cover
    cocycle_failures = []
    chains = nested_chains(cover)
    for low, mid, top in chains:
        left = _aff_matmul(
            module.restriction(mid, top),
            _aff_restrict(module.restriction(low, mid), top),
        )
        right = _aff_scale(
            module.restriction(low, top),
            twist_factor(module.fibration, low, mid, top),
        )
        residual = _aff_matsub(left, right)
        clean = all(
            entry.is_zero_at(precision) for row in residual for entry in row
        )
        if not clean:
            cocycle_failures.append(((low, mid, top), _residual_norm(residual)))
            if stop_early:
                break
    det_failures = []
    if not (stop_early and cocycle_failures):
        for low, top in module.pairs:
            det = _aff_det(module.restriction(low, top))
            if not element_is_unit_at(det, precision):
                det_failures.append((low, top))
                if stop_early:
                    break
    return ValidationReport(
        ok=not det_failures and not cocycle_failures,
        precision=precision,
        rank=module.rank,
        pairs_checked=len(module.pairs),
        triples_checked=len(chains),
        determinant_failures=tuple(det_failures),
        cocycle_failures=tuple(cocycle_failures),
    )


# -- global sections --------------------------------------------------------


@dataclass
class SectionSpace:
    """Kernel of the edge comparison system at a working precision."""

    rank: int
    precision: Fraction
    window: int
    sections: tuple


def _window_exponents(dimension, radius):
    return sorted(product(range(-radius, radius + 1), repeat=dimension))


def _hop_table(module, radius):
    """Coefficient moves of the edge comparison system.

    A section coefficient lives at a source (chart, exponent, sheet).
    Restricting to an edge carries it to the edge monomial z^target on a
    sheet row, shifting its valuation by the anchor move of the chart
    transition plus the valuation of the restriction entry.  Returns
    (moves by source, contributions by target), both carrying the
    rational shift and the signed rational coefficient of the hop.
    """
    cover = module.cover
    rank = module.rank
    exponents = _window_exponents(cover.dimension, radius)
    moves = {}
    targets = {}
    for edge in cover.faces_of_degree(1):
        for sign, i in ((1, edge[0]), (-1, edge[1])):
            mat = module.restriction((i,), edge)
            for a in exponents:
                restricted = AffinoidElement.monomial(cover, (i,), 1, a).restrict(
                    edge
                )
                ((moved, anchor),) = restricted.terms.items()
                ((base, unit),) = anchor.terms
                for r in range(rank):
                    for col in range(rank):
                        source = (i, a, col)
                        for b, coeff in mat[r][col].terms.items():
                            target = (
                                edge,
                                tuple(x + y for x, y in zip(moved, b)),
                                r,
                            )
                            for texp, c in coeff.terms:
                                hop = (target, base + texp, sign * unit * c)
                                moves.setdefault(source, []).append(hop)
                                targets.setdefault(target, []).append(
                                    (source, base + texp, sign * unit * c)
                                )
    return moves, targets


def _monomial_system(module, radius, precision):
    """The edge comparison system over rational monomial unknowns.

    One unknown per node (source, lam): the rational coefficient of
    t^lam z^a on a sheet of a chart, for lam in [0, precision plus the
    headroom an edge hop can amplify).  Nodes grow breadth-first from
    the lam = 0 seeds, which is where a solution scaled to least
    valuation zero keeps its lowest coefficient.  An equation is
    asserted for every reachable edge coefficient whose valuation plus
    the weight of its exponent sits below the precision, which is what
    vanishing of the residual element means; hops landing outside the
    window contribute nothing, which is what pins towers whose
    valuations keep falling.
    """
    cover = module.cover
    moves, targets = _hop_table(module, radius)
    thresholds = {}
    for target in targets:
        edge, cexp, _ = target
        chart = cover.face_chart(edge)
        weight = min(
            dot(tuple(x - y for x, y in zip(v, chart.basepoint)), cexp)
            for v in chart.polytope.vertices
        )
        thresholds[target] = precision - weight
    headroom = max(
        (-shift for hops in moves.values() for _, shift, _ in hops),
        default=Fraction(0),
    )
    top = max(thresholds.values(), default=precision) + max(
        headroom, Fraction(0)
    )
    nodes = set()
    queue = deque()
    for source in moves:
        node = (source, Fraction(0))
        nodes.add(node)
        queue.append(node)
    while queue:
        source, lam = queue.popleft()
        for target, shift, _ in moves[source]:
            mu = lam + shift
            if mu >= thresholds[target]:
                continue
            for other, shift2, _ in targets[target]:
                lam2 = mu - shift2
                if 0 <= lam2 < top:
                    node = (other, lam2)
                    if node not in nodes:
                        nodes.add(node)
                        queue.append(node)
    rows = {}
    for node in nodes:
        source, lam = node
        for target, shift, c in moves[source]:
            mu = lam + shift
            if mu >= thresholds[target]:
                continue
            row = rows.setdefault((target, mu), {})
            value = row.get(node, Fraction(0)) + c
            if value:
                row[node] = value
            else:
                row.pop(node, None)
    columns = sorted(nodes)
    return columns, [rows[key] for key in sorted(rows)]


def _reduce_row(row, pivots):
    row = dict(row)
    for c in [c for c in row if c in pivots]:
        factor = row.pop(c)
        if not factor:
            continue
        for j, v in pivots[c].items():
            if j == c:
                continue
            value = row.get(j, Fraction(0)) - factor * v
            if value:
                row[j] = value
            else:
                row.pop(j, None)
    return {c: v for c, v in row.items() if v}


def _sparse_kernel(rows, columns):
    """Right kernel of a sparse rational system, one vector per free
    column, as dicts keyed by column."""
    pivots = {}
    for raw in rows:
        row = _reduce_row(raw, pivots)
        if not row:
            continue
        lead = min(row)
        inv = 1 / row[lead]
        normal = {c: v * inv for c, v in row.items()}
        for prow in pivots.values():
            f = prow.pop(lead, None)
            if f:
                for j, v in normal.items():
                    if j == lead:
                        continue
                    value = prow.get(j, Fraction(0)) - f * v
                    if value:
                        prow[j] = value
                    else:
                        prow.pop(j, None)
        pivots[lead] = normal
    basis = []
    for column in columns:
        if column in pivots:
            continue
        vector = {column: Fraction(1)}
        for pc, prow in pivots.items():
            v = prow.get(column)
            if v:
                vector[pc] = -v
        basis.append(vector)
    return basis


def _ground_vectors(basis):
    """Kernel vectors whose lowest supported valuation is zero.

    A solution line scaled to least valuation zero must still solve the
    system at the full precision to count; vectors supported strictly
    above zero are t-shifted copies of other solutions or slack living
    too close to the precision to certify."""
    return [
        vector
        for vector in basis
        if min(lam for _, lam in vector) == 0
    ]


def _scalar_from_terms(pairs):
    total = NovikovScalar.zero()
    for lam, c in pairs:
        total = total + NovikovScalar.monomial(c, lam)
    return total


def _collapse(basis, precision):
    """Independent section directions among normalised kernel vectors.

    Distinct rational solutions can present the same section shifted by
    a power of t, so the count is the rank over the series field of the
    assembled vectors at the working precision.  Returns the rank and a
    spanning subset, each vector grouped per (chart, exponent, sheet).
    """
    grouped = []
    for vector in basis:
        slots = {}
        for (source, lam), c in vector.items():
            slots.setdefault(source, []).append((lam, c))
        grouped.append(
            {source: _scalar_from_terms(pairs) for source, pairs in slots.items()}
        )
    support = sorted({source for g in grouped for source in g})
    if not grouped or not support:
        return 0, []
    matrix_rows = [
        [g.get(source, NovikovScalar.zero()) for source in support]
        for g in grouped
    ]
    total = NovikovMatrix(matrix_rows).rank_at_precision(precision)
    chosen = []
    chosen_rows = []
    for g, row in zip(grouped, matrix_rows):
        if len(chosen) == total:
            break
        if NovikovMatrix(chosen_rows + [row]).rank_at_precision(precision) > len(
            chosen
        ):
            chosen.append(g)
            chosen_rows.append(row)
    return total, chosen


def _assemble_sections(module, chosen):
    cover = module.cover
    sections = []
    for g in chosen:
        per_chart = {
            i: [dict() for _ in range(module.rank)]
            for i in range(len(cover.chart_ids))
        }
        for (i, a, col), value in g.items():
            slot = per_chart[i][col]
            slot[a] = slot.get(a, NovikovScalar.zero()) + value
        assembled = {
            i: tuple(AffinoidElement(cover, (i,), slot) for slot in slots)
            for i, slots in per_chart.items()
        }
        sections.append(assembled)
    return tuple(sections)


def global_sections(module, precision, max_window=8, min_window=1):
    """Sections over the whole cover, modulo the working precision.

    Solves the edge comparison system over rational monomial unknowns
    of valuation below the precision (plus edge headroom), then counts
    the series-field-independent solutions among those scaled to least
    valuation zero.  The monomial window is grown until the section
    rank repeats on two consecutive radii.  A section whose support
    only becomes visible at a large radius can stall the sweep at a
    smaller rank; callers who know how fast their restriction exponents
    grow should start the sweep at min_window.
    """
    precision = _frac(precision)
    previous = None
    for radius in range(min_window, max_window + 1):
        columns, rows = _monomial_system(module, radius, precision)
        basis = _sparse_kernel(rows, columns)
        rank, chosen = _collapse(_ground_vectors(basis), precision)
        space = SectionSpace(
            rank=rank,
            precision=precision,
            window=radius,
            sections=_assemble_sections(module, chosen),
        )
        if previous is not None and previous.rank == space.rank:
            return space
        previous = space
    raise UndecidableDescriptionError(
        f"section rank kept moving up to window radius {max_window}"
    )


def stabilisation_threshold(module, precision, max_window=8, min_window=1):
    """Least integer precision from which the section rank stays put
    all the way up to the requested one."""
    precision = _frac(precision)
    space = global_sections(module, precision, max_window, min_window)
    top = int(precision)
    ranks = {}
    for p in range(1, top + 1):
        columns, rows = _monomial_system(module, space.window, Fraction(p))
        basis = _sparse_kernel(rows, columns)
        ranks[p], _ = _collapse(_ground_vectors(basis), Fraction(p))
    threshold = top
    for p in range(top - 1, 0, -1):
        if ranks[p] == ranks[top]:
            threshold = p
        else:
            break
    return threshold


# -- complexes and fibers ----------------------------------------------------


class ModuleComplex:
    """A finite complex of free modules on one face chart with affinoid
    differentials squaring to zero exactly."""

    def __init__(self, cover, face, ranks, differentials):
        self._cover = cover
        self._face = tuple(sorted(face))
        clean_ranks = {}
        for degree, rank in ranks.items():
            if not isinstance(rank, int) or isinstance(rank, bool) or rank < 0:
                raise ValueError("ranks must be nonnegative integers")
            if rank:
                clean_ranks[int(degree)] = rank
        self._ranks = clean_ranks
        diffs = {}
        for degree, mat in differentials.items():
            degree = int(degree)
            mat = tuple(tuple(row) for row in mat)
            n_src = clean_ranks.get(degree, 0)
            n_tgt = clean_ranks.get(degree + 1, 0)
            if len(mat) != n_tgt or any(len(row) != n_src for row in mat):
                raise ValueError(
                    f"differential out of degree {degree} has the wrong shape"
                )
            for row in mat:
                for entry in row:
                    if not isinstance(entry, AffinoidElement):
                        raise TypeError("differential entries must be affinoid")
                    if entry.face != self._face:
                        raise ChartMismatchError(
                            "differential entries live on the wrong face"
                        )
            if n_src and n_tgt:
                diffs[degree] = mat
        self._differentials = diffs
        for degree, mat in diffs.items():
            nxt = diffs.get(degree + 1)
            if nxt is None:
                continue
            square = _aff_matmul(nxt, mat)
            if any(not entry.is_exact_zero() for row in square for entry in row):
                raise ValueError("differentials do not square to zero")

    @property
    def face(self):
        return self._face

    @property
    def ranks(self):
        return dict(self._ranks)

    def differential(self, degree):
        return self._differentials.get(degree)

    def fiber_cohomology(self, point, precision):
        """Ranks of cohomology of the complex evaluated at one mirror
        point, at a working precision."""
        precision = _frac(precision)
        out_rank = {}
        for degree, mat in self._differentials.items():
            rows = [[entry.evaluate(point) for entry in row] for row in mat]
            out_rank[degree] = NovikovMatrix(rows).rank_at_precision(precision)
        result = {}
        for degree, rank in self._ranks.items():
            result[degree] = (
                rank
                - out_rank.get(degree, 0)
                - out_rank.get(degree - 1, 0)
            )
        return result


def fiber_cohomology(complex_, point, precision):
    return complex_.fiber_cohomology(point, precision)
