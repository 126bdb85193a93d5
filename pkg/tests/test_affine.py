from fractions import Fraction

import pytest

from mirrorforge.affine import (
    AffineFunction,
    IntegralAffineMap,
    IntegralAffinePolytope,
    PolyFunction,
    recession_cone_is_trivial,
)
from mirrorforge.errors import InvalidPolytopeError

F = Fraction


def unit_square():
    return IntegralAffinePolytope.from_box([(0, 1), (0, 1)])


class TestPolytopeValidation:
    def test_box(self):
        p = unit_square()
        assert len(p.vertices) == 4
        assert p.contains((F(1, 2), F(1, 2)))
        assert not p.contains((2, 0))
        assert p.lex_least_vertex() == (F(0), F(0))

    def test_vertex_outside_rejected(self):
        with pytest.raises(InvalidPolytopeError):
            IntegralAffinePolytope(
                1, [((-1,), 0), ((1,), 1)], [(0,), (2,)]
            )

    def test_loose_inequality_rejected(self):
        with pytest.raises(InvalidPolytopeError, match="tight at no vertex"):
            IntegralAffinePolytope(
                1,
                [((-1,), 0), ((1,), 1), ((1,), 5)],
                [(0,), (1,)],
            )

    def test_unbounded_rejected(self):
        with pytest.raises(InvalidPolytopeError, match="unbounded"):
            IntegralAffinePolytope(
                2,
                [((-1, 0), 0), ((0, -1), 0), ((0, 1), 0)],
                [(0, 0)],
            )

    def test_non_extreme_vertex_rejected(self):
        with pytest.raises(InvalidPolytopeError, match="extreme"):
            IntegralAffinePolytope(
                1,
                [((-1,), 0), ((1,), 1)],
                [(0,), (F(1, 2),), (1,)],
            )

    def test_float_rejected(self):
        with pytest.raises(TypeError):
            IntegralAffinePolytope(1, [((-1,), 0.0), ((1,), 1)], [(0,), (1,)])
        with pytest.raises(TypeError):
            IntegralAffinePolytope(1, [((-1.0,), 0), ((1,), 1)], [(0,), (1,)])

    def test_recession_cone(self):
        assert recession_cone_is_trivial([(-1, 0), (1, 0), (0, -1), (0, 1)], 2)
        assert not recession_cone_is_trivial([(1, -1), (-1, 1)], 2)
        assert not recession_cone_is_trivial([(-1, 0), (0, -1)], 2)


class TestFromInequalities:
    def test_interval(self):
        p = IntegralAffinePolytope.from_inequalities(
            1, [((-3,), -1), ((2,), 3)]
        )
        assert p.vertices == ((F(1, 3),), (F(3, 2),))

    def test_redundant_pruned(self):
        p = IntegralAffinePolytope.from_inequalities(
            1, [((-1,), 0), ((1,), 1), ((1,), 7)]
        )
        assert len(p.inequalities) == 2

    def test_empty_rejected(self):
        with pytest.raises(InvalidPolytopeError):
            IntegralAffinePolytope.from_inequalities(
                1, [((1,), 0), ((-1,), -1)]
            )

    def test_triangle(self):
        p = IntegralAffinePolytope.from_inequalities(
            2, [((-1, 0), 0), ((0, -1), 0), ((1, 1), 1)]
        )
        assert set(p.vertices) == {(F(0), F(0)), (F(0), F(1)), (F(1), F(0))}

    def test_parallelogram(self):
        # 0 <= x <= 1, x - 1 <= y <= x
        p = IntegralAffinePolytope.from_inequalities(
            2, [((-1, 0), 0), ((1, 0), 1), ((-1, 1), 0), ((1, -1), 1)]
        )
        assert set(p.vertices) == {
            (F(0), F(-1)),
            (F(0), F(0)),
            (F(1), F(0)),
            (F(1), F(1)),
        }


class TestIntersectionAndContainment:
    def test_intersect(self):
        a = unit_square()
        b = IntegralAffinePolytope.from_box([(F(1, 2), 2), (0, 1)])
        c = a.intersect(b)
        assert set(c.vertices) == {
            (F(1, 2), F(0)),
            (F(1, 2), F(1)),
            (F(1), F(0)),
            (F(1), F(1)),
        }

    def test_contains_polytope(self):
        a = unit_square()
        b = IntegralAffinePolytope.from_box([(0, F(1, 2)), (0, F(1, 2))])
        assert a.contains_polytope(b)
        assert not b.contains_polytope(a)


class TestIntegralAffineMap:
    def test_non_unimodular_rejected(self):
        with pytest.raises(ValueError):
            IntegralAffineMap([[2, 0], [0, 1]], [0, 0])

    def test_orientation_reversal_warns(self):
        with pytest.warns(UserWarning, match="orientation"):
            IntegralAffineMap([[0, 1], [1, 0]], [0, 0])

    def test_compose_and_inverse(self):
        shear = IntegralAffineMap([[1, 1], [0, 1]], [0, F(1, 2)])
        shift = IntegralAffineMap.translation_by([1, 0])
        both = shear.compose(shift)
        assert both.apply((0, 0)) == (F(1), F(1, 2))
        inv = both.inverse()
        assert inv.compose(both).is_identity()
        assert both.compose(inv).is_identity()

    def test_apply_map_to_polytope(self):
        shear = IntegralAffineMap([[1, 1], [0, 1]], [0, 0])
        p = unit_square().apply_map(shear)
        assert set(p.vertices) == {
            (F(0), F(0)),
            (F(1), F(0)),
            (F(1), F(1)),
            (F(2), F(1)),
        }
        back = p.apply_map(shear.inverse())
        assert back == unit_square()


class TestAffineFunction:
    def test_evaluate(self):
        f = AffineFunction((2, -1), F(1, 2))
        assert f.evaluate((1, 1)) == F(3, 2)

    def test_compose_with_map(self):
        # f(x) = <A, x> + c pulled back through x = M y + tau
        f = AffineFunction((1, 2), 0)
        phi = IntegralAffineMap([[1, 1], [0, 1]], [F(1, 3), 0])
        g = f.compose_with_map(phi)
        assert g.linear == (1, 3)
        assert g.constant == F(1, 3)
        for pt in [(0, 0), (1, 2), (F(1, 2), F(-1, 3))]:
            assert g.evaluate(pt) == f.evaluate(phi.apply(pt))

    def test_non_integer_differential_rejected(self):
        with pytest.raises(TypeError):
            AffineFunction((F(1, 2),), 0)


class TestPolyFunction:
    def test_evaluate_quadratic(self):
        # x^2/2 + y
        f = PolyFunction(2, {(2, 0): F(1, 2), (0, 1): 1})
        assert f.evaluate((2, 3)) == 5

    def test_compose_with_map(self):
        f = PolyFunction(2, {(2, 0): F(1, 2)})
        phi = IntegralAffineMap([[1, 0], [0, 1]], [1, 0])
        g = f.compose_with_map(phi)
        # (x+1)^2/2 = x^2/2 + x + 1/2
        assert g == PolyFunction(
            2, {(2, 0): F(1, 2), (1, 0): 1, (0, 0): F(1, 2)}
        )
        for pt in [(0, 0), (2, 1), (F(-1, 2), 5)]:
            assert g.evaluate(pt) == f.evaluate(phi.apply(pt))

    def test_degree_cap(self):
        f = PolyFunction(1, {(2,): 1})
        with pytest.raises(ValueError):
            _ = f * f
        with pytest.raises(ValueError):
            PolyFunction(1, {(3,): 1})

    def test_as_affine(self):
        f = PolyFunction(2, {(1, 0): 3, (0, 0): F(1, 4)})
        a = f.as_affine()
        assert a == AffineFunction((3, 0), F(1, 4))
        with pytest.raises(ValueError):
            PolyFunction(2, {(2, 0): 1}).as_affine()
        with pytest.raises(ValueError):
            PolyFunction(2, {(1, 0): F(1, 2)}).as_affine()

    def test_hessian(self):
        f = PolyFunction(2, {(2, 0): F(1, 2), (1, 1): 3})
        assert f.hessian() == [[F(1), F(3)], [F(3), F(0)]]

    def test_from_affine_round_trip(self):
        a = AffineFunction((1, -2), F(2, 3))
        f = PolyFunction.from_affine(a)
        assert f.as_affine() == a
