import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hproj import BudgetError, ConfigError, FitError, IFSSpec, Similarity, box_dimension_estimate, frostman_check
from hproj import generate, similarity_dimension
from hproj.fractal import box_counts

HALF_DIAG = math.sqrt(2) / 2


def test_generate_counts_and_radii():
    c = generate(IFSSpec.theorem(), 0)
    assert len(c) == 1 and np.allclose(c.centers, [[0.5, 0.5]]) and c.radii[0] == pytest.approx(HALF_DIAG)
    c = generate(IFSSpec.theorem(), 1)
    assert len(c) == 4 and np.allclose(c.radii, HALF_DIAG / 3)
    assert len(generate(IFSSpec.theorem(), 7)) == 16384


def test_words_lexicographic_and_consistent():
    ifs = IFSSpec.theorem()
    c = generate(ifs, 3)
    assert c.words == sorted(c.words)
    # word "ijk" is f_i(f_j(f_k(center)))
    for k in (0, 17, 63):
        x = np.array([[0.5, 0.5]])
        for ch in reversed(c.words[k]):
            x = ifs.maps[int(ch)](x)
        assert np.allclose(c.centers[k], x[0], atol=1e-15)


def test_cells_cover_attractor_points():
    # every depth-n cell disc contains its deeper descendants
    ifs = IFSSpec.theorem()
    c3, c5 = generate(ifs, 3), generate(ifs, 5)
    parent = {w: k for k, w in enumerate(c3.words)}
    for k, w in enumerate(c5.words):
        p = parent[w[:3]]
        assert np.hypot(*(c5.centers[k] - c3.centers[p])) <= c3.radii[p] + 1e-15


def test_budget():
    with pytest.raises(BudgetError):
        generate(IFSSpec.theorem(), 13)
    with pytest.raises(BudgetError):
        generate(IFSSpec.full_square(), 12)


@pytest.mark.parametrize("ifs,d", [(IFSSpec.theorem(), math.log(4) / math.log(3)),
                                   (IFSSpec.control(), math.log(2) / math.log(3))])
def test_similarity_dimension(ifs, d):
    assert similarity_dimension(ifs) == pytest.approx(d, abs=1e-11)


def test_similarity_dimension_halves():
    ifs = IFSSpec((Similarity(0.5, 0, (0, 0)), Similarity(0.5, 0, (0.5, 0.5))))
    assert similarity_dimension(ifs) == pytest.approx(1.0, abs=1e-11)


@given(r=st.lists(st.floats(0.05, 0.24), min_size=2, max_size=4))
@settings(max_examples=30, deadline=None)
def test_similarity_dimension_solves_moran(r):
    corners = [(0, 0), (0.75, 0), (0, 0.75), (0.75, 0.75)]
    ifs = IFSSpec(tuple(Similarity(x, 0, t) for x, t in zip(r, corners)))
    d = similarity_dimension(ifs)
    assert math.fsum(x ** d for x in r) == pytest.approx(1.0, abs=1e-9)


def test_box_counts_closed_form():
    # depth >= k: each of the 4^k level-k squares holds descendants, one box each
    c = generate(IFSSpec.theorem(), 8)
    scales = 3.0 ** -np.arange(1, 7)
    assert list(box_counts(c, scales)) == [4 ** k for k in range(1, 7)]


def test_box_dimension_builtin():
    s, r2 = box_dimension_estimate(generate(IFSSpec.theorem(), 8), 3.0 ** -np.arange(1, 7))
    assert s == pytest.approx(math.log(4) / math.log(3), abs=0.05) and r2 > 0.999
    s, _ = box_dimension_estimate(generate(IFSSpec.control(), 10), 3.0 ** -np.arange(1, 7))
    assert s == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_box_dimension_degenerate():
    c = generate(IFSSpec.theorem(), 0)
    s, _ = box_dimension_estimate(c, [0.5, 0.1, 0.01, 0.001])
    assert s == pytest.approx(0, abs=1e-12)
    with pytest.raises(FitError):
        box_dimension_estimate(c, [0.1, 0.1])


def test_frostman_single_cell():
    c = generate(IFSSpec.theorem(), 0)
    est = frostman_check(c, 1.0, n_random=0, n_radii=1)
    assert est.C == pytest.approx(1.0 / c.radii[0])


def test_frostman_stable_across_depths():
    d = math.log(4) / math.log(3)
    a = frostman_check(generate(IFSSpec.theorem(), 5), d).C
    b = frostman_check(generate(IFSSpec.theorem(), 7), d).C
    assert 0.5 <= a / b <= 2
    sq = IFSSpec.full_square()
    a = frostman_check(generate(sq, 6), 2.0).C
    b = frostman_check(generate(sq, 8), 2.0).C
    assert 0.5 <= a / b <= 2


def test_frostman_brute_force():
    c = generate(IFSSpec.control(), 4)
    d = math.log(2) / math.log(3)
    est = frostman_check(c, d, n_random=0, n_radii=6)
    x = np.array(est.center)
    mu = np.sum(c.masses(d)[np.hypot(*(c.centers - x).T) <= est.radius])
    assert est.C == pytest.approx(mu / est.radius ** d, rel=1e-12)


def test_osc_and_ratio_validation():
    with pytest.raises(ConfigError):
        IFSSpec((Similarity(0.6, 0, (0, 0)), Similarity(0.6, 0, (0.4, 0.4))))
    with pytest.raises(ConfigError):
        IFSSpec((Similarity(1.0, 0, (0, 0)),))
    with pytest.raises(ConfigError):
        IFSSpec((Similarity(0.5, 0, (0.7, 0)),))
    # a rotated map that stays inside the square is fine
    IFSSpec((Similarity(0.3, math.pi / 2, (0.3, 0.0)), Similarity(0.3, 0, (0.6, 0.6))))


def test_load_and_builtin(tmp_path):
    p = tmp_path / "two.json"
    p.write_text(json.dumps({"maps": [{"ratio": 0.5}, {"ratio": 0.5, "translation": [0.5, 0.5]}]}))
    ifs = IFSSpec.load(p)
    assert ifs.name == "two" and len(ifs.maps) == 2
    assert IFSSpec.builtin("control") == IFSSpec.control()
    with pytest.raises(ConfigError):
        IFSSpec.builtin("sierpinski")
    with pytest.raises(ConfigError) as exc:
        IFSSpec.from_dict({"maps": [{"ratio": 0.5}], "colour": 2})
    assert exc.value.field == "ifs.colour"
    with pytest.raises(ConfigError):
        IFSSpec.load(tmp_path / "missing.json")
