import math

import numpy as np
import pytest

from certopt.geometry import SearchDomain
from certopt.objectives import (
    check_lipschitz,
    load_table,
    make_builtin,
    norm_ratio,
    suboptimality_gap,
)


def box(dim=1, lo=0.0, hi=1.0, norm="sup"):
    return SearchDomain([(lo, hi)] * dim, norm=norm)


class TestBuiltins:
    def test_constant(self):
        obj = make_builtin("constant", {"c0": 0.0}, box())
        assert obj.value((0.3,)) == 0.0
        assert obj.f_max == 0.0
        assert obj.lip_true == 0.0

    def test_cone_sup_square(self):
        obj = make_builtin("cone", {}, box(2, -1.0, 1.0))
        assert obj.value((0.3, -0.4)) == pytest.approx(0.6)
        assert obj.f_max == 1.0
        assert obj.maximizer_hint == (0.0, 0.0)
        assert obj.lip_true == 1.0

    def test_power_value_and_lipschitz(self):
        # derivative bound p * rho^(p-1) with rho = max |x| over the domain
        obj = make_builtin("power", {"power_exponent": 2.0}, box(1, -1.0, 1.0))
        assert obj.value((0.5,)) == pytest.approx(0.75)
        assert obj.lip_true == pytest.approx(2.0)

    def test_power_exponent_must_exceed_one(self):
        with pytest.raises(ValueError):
            make_builtin("power", {"power_exponent": 1.0}, box())

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            make_builtin("gaussian", {}, box())

    def test_plateau_cone(self):
        obj = make_builtin("plateau-cone", {"plateau_radius": 0.25}, box(1, -1.0, 1.0))
        assert obj.value((0.1,)) == 1.0
        assert obj.value((0.75,)) == pytest.approx(0.5)
        assert obj.f_max == 1.0

    def test_default_declared_bound_doubles_lipschitz(self):
        obj = make_builtin("cone", {}, box())
        assert obj.L_declared == pytest.approx(2.0 * obj.lip_true)
        const = make_builtin("constant", {"c0": 1.0}, box())
        assert const.L_declared == 1.0  # positive even though lip = 0

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(0)
        pts = rng.random((50, 2)) * 2.0 - 1.0
        for name, params in (
            ("constant", {"c0": 0.5}),
            ("cone", {}),
            ("power", {"power_exponent": 3.0}),
            ("plateau-cone", {"plateau_radius": 0.3}),
        ):
            obj = make_builtin(name, params, box(2, -1.0, 1.0))
            batch = obj.values(pts)
            single = [obj.value(tuple(p)) for p in pts]
            assert np.allclose(batch, single)


class TestNormRatio:
    def test_table(self):
        assert norm_ratio("sup", "l1", 3) == 3.0
        assert norm_ratio("sup", "l2", 4) == 2.0
        assert norm_ratio("l1", "sup", 3) == 1.0
        assert norm_ratio("l2", "l1", 4) == 2.0

    def test_cone_under_other_norm(self):
        # cone shaped by l1 on a sup-norm domain: lip_true = d
        obj = make_builtin("cone", {"norm": "l1"}, box(2, -1.0, 1.0))
        assert obj.lip_true == 2.0
        report = check_lipschitz(obj, n_pairs=4000, seed=1)
        assert report.ok


class TestCheckLipschitz:
    def test_constant_zero_ratio(self):
        obj = make_builtin("constant", {"c0": 2.0}, box())
        report = check_lipschitz(obj, n_pairs=500, seed=0)
        assert report.max_ratio == 0.0
        assert report.ok

    def test_cone_exact_constant_passes(self):
        obj = make_builtin("cone", {}, box(), L_declared=1.0)
        report = check_lipschitz(obj, n_pairs=4000, seed=0)
        assert report.ok
        assert report.max_ratio <= 1.0 + 1e-9

    def test_understated_bound_fails(self):
        obj = make_builtin("cone", {}, box(), L_declared=1.0)
        obj.L_declared = 0.5  # deliberately too small
        report = check_lipschitz(obj, n_pairs=4000, seed=0)
        assert not report.ok

    def test_every_builtin_passes_at_true_constant(self):
        for name, params in (
            ("constant", {"c0": 0.0}),
            ("cone", {}),
            ("power", {"power_exponent": 2.0}),
            ("plateau-cone", {"plateau_radius": 0.25}),
        ):
            obj = make_builtin(name, params, box(2, -1.0, 1.0))
            obj.L_declared = max(obj.lip_true, 1e-9)
            assert check_lipschitz(obj, n_pairs=3000, seed=2).ok


class TestGap:
    def test_cone_at_max(self):
        obj = make_builtin("cone", {}, box(1, -1.0, 1.0))
        assert suboptimality_gap(obj, (0.0,)) == 0.0
        assert suboptimality_gap(obj, (0.25,)) == pytest.approx(0.25)

    def test_plateau_gap_zero_on_plateau(self):
        obj = make_builtin("plateau-cone", {"plateau_radius": 0.25}, box(1, -1.0, 1.0))
        for x in np.linspace(-0.25, 0.25, 11):
            assert suboptimality_gap(obj, (x,)) == 0.0

    def test_gap_nonnegative_everywhere(self):
        rng = np.random.default_rng(4)
        for name, params in (
            ("cone", {}),
            ("power", {"power_exponent": 2.5}),
            ("plateau-cone", {"plateau_radius": 0.4}),
        ):
            obj = make_builtin(name, params, box(2, -1.0, 1.0))
            pts = rng.random((200, 2)) * 2.0 - 1.0
            assert np.all(obj.f_max - obj.values(pts) >= -1e-12)


class TestPowerToConeLimit:
    def test_pointwise_convergence(self):
        # |(1 - |x|^p) - (1 - |x|)| = |x - x^p| <= (p - 1)/e on [0, 1];
        # at p = 1 + 1e-4 the worst gap is ~3.7e-5, so test at 5e-5
        p = 1.0 + 1e-4
        cone = make_builtin("cone", {}, box(1, -1.0, 1.0))
        power = make_builtin("power", {"power_exponent": p}, box(1, -1.0, 1.0))
        for x in np.linspace(-1.0, 1.0, 10):
            assert abs(power.value((x,)) - cone.value((x,))) < 5e-5


class TestTableObjective:
    def test_roundtrip_and_interpolation(self, tmp_path):
        # tabulate f(x, y) = 1 - max(|x|, |y|) on a 5x5 grid
        path = tmp_path / "table.csv"
        axes = np.linspace(-1.0, 1.0, 5)
        with open(path, "w") as fh:
            for x in axes:
                for y in axes:
                    fh.write(f"{x},{y},{1.0 - max(abs(x), abs(y))}\n")
        obj = load_table(str(path))
        assert obj.domain.dim == 2
        assert obj.f_max == 1.0
        assert not obj.exact_max
        assert obj.value((0.5, 0.0)) == pytest.approx(0.5)
        # bilinear interpolation in the cell [0,.5]^2 with corner values
        # (1, .5, .5, .5) at fractions (.5, .2): .4 + .2 + .05 + .05 = 0.7
        assert obj.value((0.25, 0.1)) == pytest.approx(0.7, abs=1e-9)
        assert check_lipschitz(obj, n_pairs=2000, seed=0).ok

    def test_incomplete_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        with open(path, "w") as fh:
            fh.write("0,0,1\n1,0,1\n0,1,1\n")
        with pytest.raises(ValueError):
            load_table(str(path))
