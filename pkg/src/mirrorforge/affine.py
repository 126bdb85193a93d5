"""Integral affine geometry: polytopes, unimodular maps, affine and
quadratic functions.

Polytopes carry both an inequality description (integer normals,
rational bounds) and a declared vertex list; construction validates that
the two agree: vertices are feasible and extreme, every inequality is
tight somewhere, and the recession cone is trivial, so the set is
bounded and nonempty.
"""

from __future__ import annotations

import warnings
from fractions import Fraction
from math import gcd

from .errors import InvalidPolytopeError
from .intlinalg import rational_rref, rational_solve
from .novikov import _frac


def _int_vec(values, what):
    out = []
    for x in values:
        if isinstance(x, bool) or not isinstance(x, int):
            raise TypeError(f"{what} must be integers, got {x!r}")
        out.append(x)
    return tuple(out)


def _frac_vec(values):
    return tuple(_frac(x) for x in values)


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _fm_eliminate(rows, j):
    """One Fourier-Motzkin step on the homogeneous system rows*d <= 0."""
    zero, pos, neg = [], [], []
    for r in rows:
        if r[j] == 0:
            zero.append(r)
        elif r[j] > 0:
            pos.append(r)
        else:
            neg.append(r)
    combined = []
    for p in pos:
        for m in neg:
            combined.append(
                [p[j] * mx - m[j] * px for px, mx in zip(p, m)]
            )
    return zero + combined


def recession_cone_is_trivial(normals, dimension):
    """Does n.d <= 0 for all normals force d = 0?

    Checks that every coordinate projection of the cone collapses to a
    point, which for cones is equivalent to triviality.
    """
    for k in range(dimension):
        rows = [list(n) for n in normals]
        for j in range(dimension):
            if j != k:
                rows = _fm_eliminate(rows, j)
        coeffs = [r[k] for r in rows if r[k] != 0]
        if not any(c > 0 for c in coeffs) or not any(c < 0 for c in coeffs):
            return False
    return True


def _primitive(normal, bound):
    g = 0
    for x in normal:
        g = gcd(g, abs(x))
    if g == 0:
        raise InvalidPolytopeError("zero normal vector in inequality")
    return tuple(x // g for x in normal), bound / g


class IntegralAffinePolytope:
    """Convex polytope cut out by integer-normal halfspaces."""

    __slots__ = ("_dimension", "_inequalities", "_vertices")

    def __init__(self, dimension, inequalities, vertices):
        self._dimension = int(dimension)
        ineqs = []
        for normal, bound in inequalities:
            normal = _int_vec(normal, "inequality normals")
            if len(normal) != self._dimension:
                raise InvalidPolytopeError("normal has wrong length")
            ineqs.append((normal, _frac(bound)))
        self._inequalities = tuple(ineqs)
        verts = []
        for v in vertices:
            v = _frac_vec(v)
            if len(v) != self._dimension:
                raise InvalidPolytopeError("vertex has wrong length")
            verts.append(v)
        self._vertices = tuple(sorted(set(verts)))
        self._validate()

    def _validate(self):
        if not self._vertices:
            raise InvalidPolytopeError("polytope has no vertices")
        if not self._inequalities:
            raise InvalidPolytopeError("polytope has no inequalities")
        for v in self._vertices:
            for normal, bound in self._inequalities:
                if dot(normal, v) > bound:
                    raise InvalidPolytopeError(
                        f"vertex {v} violates inequality {normal}*x <= {bound}"
                    )
        for normal, bound in self._inequalities:
            if not any(dot(normal, v) == bound for v in self._vertices):
                raise InvalidPolytopeError(
                    f"inequality {normal}*x <= {bound} is tight at no vertex"
                )
        for v in self._vertices:
            tight = [n for n, b in self._inequalities if dot(n, v) == b]
            _, pivots = rational_rref(tight) if tight else ([], [])
            if len(pivots) < self._dimension:
                raise InvalidPolytopeError(
                    f"declared vertex {v} is not an extreme point"
                )
        normals = [n for n, _ in self._inequalities]
        if not recession_cone_is_trivial(normals, self._dimension):
            raise InvalidPolytopeError("inequalities cut out an unbounded set")

    # -- constructors --------------------------------------------------

    @classmethod
    def from_inequalities(cls, dimension, inequalities):
        """Build a polytope from halfspaces alone (dimension 1 or 2).

        Vertices are computed exactly; redundant inequalities are pruned.
        """
        dimension = int(dimension)
        cleaned = {}
        for normal, bound in inequalities:
            normal, bound = _primitive(
                _int_vec(normal, "inequality normals"), _frac(bound)
            )
            if normal in cleaned:
                cleaned[normal] = min(cleaned[normal], bound)
            else:
                cleaned[normal] = bound
        ineqs = sorted(cleaned.items())
        if dimension == 1:
            los = [b / n[0] for n, b in ineqs if n[0] < 0]
            his = [b / n[0] for n, b in ineqs if n[0] > 0]
            if not los or not his:
                raise InvalidPolytopeError("interval is unbounded")
            lo, hi = max(los), min(his)
            if lo > hi:
                raise InvalidPolytopeError("empty interval")
            return cls(1, [((-1,), -lo), ((1,), hi)], [(lo,), (hi,)])
        if dimension != 2:
            raise InvalidPolytopeError(
                "vertex enumeration implemented for dimensions 1 and 2 only"
            )
        points = set()
        for i in range(len(ineqs)):
            for j in range(i + 1, len(ineqs)):
                (a1, b1), (a2, b2) = ineqs[i][0], ineqs[j][0]
                c1, c2 = ineqs[i][1], ineqs[j][1]
                det = a1 * b2 - b1 * a2
                if det == 0:
                    continue
                x = Fraction(c1 * b2 - b1 * c2, det)
                y = Fraction(a1 * c2 - c1 * a2, det)
                if all(dot(n, (x, y)) <= b for n, b in ineqs):
                    points.add((x, y))
        if not points:
            raise InvalidPolytopeError("inequalities have empty intersection")
        kept = [
            (n, b)
            for n, b in ineqs
            if sum(1 for p in points if dot(n, p) == b) >= 2
        ]
        return cls(2, kept, sorted(points))

    @classmethod
    def from_box(cls, bounds):
        """Axis-aligned box from per-coordinate (lo, hi) pairs."""
        dim = len(bounds)
        ineqs = []
        for i, (lo, hi) in enumerate(bounds):
            lo, hi = _frac(lo), _frac(hi)
            if lo > hi:
                raise InvalidPolytopeError("empty box")
            e = [0] * dim
            e[i] = -1
            ineqs.append((tuple(e), -lo))
            e = [0] * dim
            e[i] = 1
            ineqs.append((tuple(e), hi))
        corners = [()]
        for lo, hi in bounds:
            lo, hi = _frac(lo), _frac(hi)
            ends = (lo,) if lo == hi else (lo, hi)
            corners = [c + (x,) for c in corners for x in ends]
        return cls(dim, ineqs, corners)

    # -- inspection ----------------------------------------------------

    @property
    def dimension(self):
        return self._dimension

    @property
    def inequalities(self):
        return self._inequalities

    @property
    def vertices(self):
        return self._vertices

    def contains(self, point, strict=False):
        point = _frac_vec(point)
        for normal, bound in self._inequalities:
            value = dot(normal, point)
            if value > bound or (strict and value == bound):
                return False
        return True

    def contains_polytope(self, other):
        return all(self.contains(v) for v in other.vertices)

    def lex_least_vertex(self):
        return self._vertices[0]

    def intersect(self, other):
        if self._dimension != other._dimension:
            raise InvalidPolytopeError("dimension mismatch in intersection")
        return IntegralAffinePolytope.from_inequalities(
            self._dimension, self._inequalities + other._inequalities
        )

    def apply_map(self, phi):
        """Image polytope under y = M x + tau."""
        inv = phi.inverse()
        minv_t = tuple(zip(*inv.linear))
        ineqs = []
        for normal, bound in self._inequalities:
            new_normal = tuple(dot(row, normal) for row in minv_t)
            ineqs.append((new_normal, bound + dot(new_normal, phi.translation)))
        verts = [phi.apply(v) for v in self._vertices]
        return IntegralAffinePolytope(self._dimension, ineqs, verts)

    def __eq__(self, other):
        if not isinstance(other, IntegralAffinePolytope):
            return NotImplemented
        return (
            self._dimension == other._dimension
            and sorted(self._inequalities) == sorted(other._inequalities)
            and self._vertices == other._vertices
        )

    def __hash__(self):
        return hash(
            (self._dimension, tuple(sorted(self._inequalities)), self._vertices)
        )

    def __repr__(self):
        return (
            f"IntegralAffinePolytope(dim={self._dimension}, "
            f"{len(self._inequalities)} inequalities, "
            f"{len(self._vertices)} vertices)"
        )


class IntegralAffineMap:
    """x -> M x + tau with M in GL(n, Z) and tau rational."""

    __slots__ = ("_linear", "_translation")

    def __init__(self, linear, translation):
        rows = tuple(_int_vec(row, "linear part") for row in linear)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("linear part must be square")
        self._linear = rows
        self._translation = _frac_vec(translation)
        if len(self._translation) != n:
            raise ValueError("translation has wrong length")
        d = self.det
        if d not in (1, -1):
            raise ValueError(f"linear part must be unimodular, det = {d}")
        if d == -1:
            warnings.warn(
                "orientation-reversing transition (det = -1)",
                stacklevel=2,
            )

    @classmethod
    def identity(cls, n):
        return cls(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)],
            [0] * n,
        )

    @classmethod
    def translation_by(cls, tau):
        n = len(tau)
        return cls(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)], tau
        )

    @property
    def linear(self):
        return self._linear

    @property
    def translation(self):
        return self._translation

    @property
    def dimension(self):
        return len(self._linear)

    @property
    def det(self):
        n = len(self._linear)
        rows = [[Fraction(x) for x in row] for row in self._linear]
        det = Fraction(1)
        for col in range(n):
            sel = next((i for i in range(col, n) if rows[i][col] != 0), None)
            if sel is None:
                return 0
            if sel != col:
                rows[col], rows[sel] = rows[sel], rows[col]
                det = -det
            det *= rows[col][col]
            inv = 1 / rows[col][col]
            for i in range(col + 1, n):
                f = rows[i][col] * inv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[col])]
        return int(det)

    def apply(self, point):
        point = _frac_vec(point)
        return tuple(
            dot(row, point) + c for row, c in zip(self._linear, self._translation)
        )

    def compose(self, other):
        """self after other: x -> self(other(x))."""
        m = tuple(
            tuple(
                sum(self._linear[i][k] * other._linear[k][j] for k in range(self.dimension))
                for j in range(self.dimension)
            )
            for i in range(self.dimension)
        )
        tau = self.apply(other._translation)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return IntegralAffineMap(m, tau)

    def inverse(self):
        n = self.dimension
        cols = []
        for j in range(n):
            rhs = [Fraction(1 if i == j else 0) for i in range(n)]
            sol = rational_solve([list(r) for r in self._linear], rhs)
            cols.append(sol)
        minv = tuple(
            tuple(int(cols[j][i]) for j in range(n)) for i in range(n)
        )
        tau = tuple(
            -sum(minv[i][j] * self._translation[j] for j in range(n))
            for i in range(n)
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return IntegralAffineMap(minv, tau)

    def is_identity(self):
        return self == IntegralAffineMap.identity(self.dimension)

    def __eq__(self, other):
        if not isinstance(other, IntegralAffineMap):
            return NotImplemented
        return (
            self._linear == other._linear
            and self._translation == other._translation
        )

    def __hash__(self):
        return hash((self._linear, self._translation))

    def __repr__(self):
        return f"IntegralAffineMap({self._linear}, {self._translation})"


class AffineFunction:
    """<A, x> + c with integral differential A and rational constant."""

    __slots__ = ("_linear", "_constant")

    def __init__(self, linear, constant=0):
        self._linear = _int_vec(linear, "affine differentials")
        self._constant = _frac(constant)

    @classmethod
    def zero(cls, n):
        return cls((0,) * n, 0)

    @property
    def linear(self):
        return self._linear

    @property
    def constant(self):
        return self._constant

    @property
    def dimension(self):
        return len(self._linear)

    def evaluate(self, point):
        return dot(self._linear, _frac_vec(point)) + self._constant

    def compose_with_map(self, phi):
        """(self o phi)(x) = self(M x + tau)."""
        mt = tuple(zip(*phi.linear))
        linear = tuple(dot(row, self._linear) for row in mt)
        constant = self._constant + dot(self._linear, phi.translation)
        return AffineFunction(linear, constant)

    def __add__(self, other):
        if not isinstance(other, AffineFunction):
            return NotImplemented
        return AffineFunction(
            tuple(a + b for a, b in zip(self._linear, other._linear)),
            self._constant + other._constant,
        )

    def __sub__(self, other):
        if not isinstance(other, AffineFunction):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return AffineFunction(
            tuple(-a for a in self._linear), -self._constant
        )

    def is_zero(self):
        return all(a == 0 for a in self._linear) and self._constant == 0

    def __eq__(self, other):
        if not isinstance(other, AffineFunction):
            return NotImplemented
        return (
            self._linear == other._linear and self._constant == other._constant
        )

    def __hash__(self):
        return hash((self._linear, self._constant))

    def __repr__(self):
        return f"AffineFunction({self._linear}, {self._constant})"


class PolyFunction:
    """Polynomial of total degree at most 2 with rational coefficients.

    Terms map exponent tuples to coefficients; arithmetic refuses to
    leave the degree-2 range, which is all the monodromy primitives need.
    """

    __slots__ = ("_dimension", "_terms")

    def __init__(self, dimension, terms=()):
        self._dimension = int(dimension)
        data = dict(terms) if not isinstance(terms, dict) else dict(terms)
        cleaned = {}
        for powers, coeff in data.items():
            powers = tuple(int(p) for p in powers)
            if len(powers) != self._dimension or any(p < 0 for p in powers):
                raise ValueError(f"bad exponent tuple {powers}")
            if sum(powers) > 2:
                raise ValueError("degree above 2 is not supported")
            coeff = _frac(coeff)
            if coeff != 0:
                cleaned[powers] = cleaned.get(powers, Fraction(0)) + coeff
        self._terms = {p: c for p, c in cleaned.items() if c != 0}

    @classmethod
    def zero(cls, dimension):
        return cls(dimension)

    @classmethod
    def from_affine(cls, fn):
        terms = {}
        n = fn.dimension
        for i, a in enumerate(fn.linear):
            powers = tuple(1 if j == i else 0 for j in range(n))
            terms[powers] = Fraction(a)
        terms[(0,) * n] = fn.constant
        return cls(n, terms)

    @property
    def dimension(self):
        return self._dimension

    @property
    def terms(self):
        return dict(self._terms)

    def degree(self):
        return max((sum(p) for p in self._terms), default=0)

    def is_zero(self):
        return not self._terms

    def evaluate(self, point):
        point = _frac_vec(point)
        total = Fraction(0)
        for powers, coeff in self._terms.items():
            value = coeff
            for x, p in zip(point, powers):
                for _ in range(p):
                    value *= x
            total += value
        return total

    def __add__(self, other):
        if not isinstance(other, PolyFunction):
            return NotImplemented
        if self._dimension != other._dimension:
            raise ValueError("dimension mismatch")
        merged = dict(self._terms)
        for p, c in other._terms.items():
            merged[p] = merged.get(p, Fraction(0)) + c
        return PolyFunction(self._dimension, merged)

    def __sub__(self, other):
        if not isinstance(other, PolyFunction):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return PolyFunction(
            self._dimension, {p: -c for p, c in self._terms.items()}
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PolyFunction(
                self._dimension,
                {p: c * other for p, c in self._terms.items()},
            )
        if not isinstance(other, PolyFunction):
            return NotImplemented
        out = {}
        for pa, ca in self._terms.items():
            for pb, cb in other._terms.items():
                powers = tuple(a + b for a, b in zip(pa, pb))
                if sum(powers) > 2:
                    raise ValueError("product leaves the degree-2 range")
                out[powers] = out.get(powers, Fraction(0)) + ca * cb
        return PolyFunction(self._dimension, out)

    __rmul__ = __mul__

    def compose_with_map(self, phi):
        """Substitute x = M y + tau."""
        n = self._dimension
        coords = []
        for i in range(n):
            terms = {(0,) * n: phi.translation[i]}
            for j in range(n):
                powers = tuple(1 if k == j else 0 for k in range(n))
                terms[powers] = Fraction(phi.linear[i][j])
            coords.append(PolyFunction(n, terms))
        total = PolyFunction.zero(n)
        for powers, coeff in self._terms.items():
            piece = PolyFunction(n, {(0,) * n: coeff})
            for i, p in enumerate(powers):
                for _ in range(p):
                    piece = piece * coords[i]
            total = total + piece
        return total

    def as_affine(self):
        """View as an AffineFunction; degree-2 terms or non-integer
        differentials are an error."""
        if self.degree() > 1:
            raise ValueError("polynomial has a quadratic part")
        linear = [0] * self._dimension
        constant = Fraction(0)
        for powers, coeff in self._terms.items():
            s = sum(powers)
            if s == 0:
                constant = coeff
            else:
                i = powers.index(1)
                if coeff.denominator != 1:
                    raise ValueError(
                        f"differential in direction {i} is not integral: {coeff}"
                    )
                linear[i] = int(coeff)
        return AffineFunction(tuple(linear), constant)

    def hessian(self):
        """Matrix H with quadratic part = (1/2) x^T H x."""
        n = self._dimension
        h = [[Fraction(0)] * n for _ in range(n)]
        for powers, coeff in self._terms.items():
            if sum(powers) != 2:
                continue
            idx = [i for i, p in enumerate(powers) for _ in range(p)]
            i, j = idx
            if i == j:
                h[i][i] = 2 * coeff
            else:
                h[i][j] = coeff
                h[j][i] = coeff
        return h

    def __eq__(self, other):
        if not isinstance(other, PolyFunction):
            return NotImplemented
        return (
            self._dimension == other._dimension and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self._dimension, tuple(sorted(self._terms.items()))))

    def __repr__(self):
        return f"PolyFunction({self._dimension}, {self._terms!r})"
