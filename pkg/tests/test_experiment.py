import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hproj import IFSSpec, LinePencil, fourier_energy, generate, marstrand_report, measure_spectrum, project_set
from hproj.experiment import (canonical_angle, energy_of_atoms, good_fraction, inflation_radii, merge_intervals,
                              theta_grid, union_length)


def test_theta_grid():
    t = theta_grid(360)
    assert len(t) == 360 and t[-1] == pytest.approx(math.pi / 2) and t[0] > -math.pi / 2
    assert np.allclose(np.diff(t), math.pi / 360)
    with pytest.raises(ValueError):
        theta_grid(0)


@pytest.mark.parametrize("theta,ref,sign", [(0.3, 0.3, 1), (math.pi / 2, math.pi / 2, 1),
                                            (-math.pi / 2, math.pi / 2, -1), (2.0, 2.0 - math.pi, -1),
                                            (0.3 + 2 * math.pi, 0.3, 1), (-2.5, -2.5 + math.pi, -1)])
def test_canonical_angle(theta, ref, sign):
    t, s = canonical_angle(theta)
    assert t == pytest.approx(ref, abs=1e-14) and s == sign
    assert -math.pi / 2 < t <= math.pi / 2


intervals = st.lists(st.tuples(st.floats(-1, 1), st.floats(0, 0.3)), min_size=1, max_size=12)


@given(iv=intervals)
@settings(max_examples=60, deadline=None)
def test_union_matches_rasterization(iv):
    lo = np.array([a for a, _ in iv])
    hi = lo + np.array([b for _, b in iv])
    m = merge_intervals(lo, hi)
    assert np.all(np.diff(m[:, 0]) > 0) and np.all(m[1:, 0] > m[:-1, 1])
    grid = np.arange(-1.0, 1.3, 1e-5) + 5e-6
    cover = np.zeros(grid.shape, bool)
    for a, b in zip(lo, hi):
        cover |= (grid >= a) & (grid <= b)
    assert union_length(m) == pytest.approx(cover.sum() * 1e-5, abs=2e-5 * (len(iv) + 1))


def test_merge_examples():
    m = merge_intervals(np.array([0.0, 0.5, 2.0]), np.array([1.0, 1.5, 3.0]))
    assert m.tolist() == [[0.0, 1.5], [2.0, 3.0]] and union_length(m) == 2.5
    assert merge_intervals(np.array([]), np.array([])).shape == (0, 2)


def test_flat_regression(flat):
    pencil = LinePencil(flat, step=1e-2)
    cells = generate(IFSSpec.theorem(), 4)
    for t in (-1.2, 0.0, 0.7, math.pi / 2):
        pm = project_set(pencil, t, cells)
        s = cells.centers @ np.array([math.cos(t), math.sin(t)])
        assert np.allclose(pm.atoms_s, s, atol=1e-6)
        ref = merge_intervals(s - cells.radii, s + cells.radii)
        assert pm.total_length == pytest.approx(union_length(ref), abs=1e-6)


def test_inflation_flat_and_curved(flat, curved):
    cells = generate(IFSSpec.theorem(), 2)
    assert np.array_equal(inflation_radii(flat, cells), cells.radii)
    # the conformal factor exceeds 1 off the origin, and its disc maximum bounds the center value
    rho = inflation_radii(curved, cells)
    assert np.all(rho >= cells.radii * np.exp(curved.lam(*cells.centers.T)))


def test_exact_antisymmetry(curved):
    pencil = LinePencil(curved, step=1e-2)
    cells = generate(IFSSpec.theorem(), 4)
    # exact for the canonical representative, t - pi is not bitwise 0.4
    t0 = canonical_angle(0.4 + math.pi)[0]
    assert t0 == pytest.approx(0.4, abs=1e-15)
    a = project_set(pencil, t0, cells)
    b = project_set(pencil, 0.4 + math.pi, cells)
    assert np.array_equal(b.intervals, -a.intervals[::-1, ::-1])
    assert np.array_equal(b.atoms_s, -a.atoms_s)
    assert b.total_length == a.total_length and b.theta == pytest.approx(0.4 + math.pi)


@pytest.mark.parametrize("name", ["theorem", "control"])
def test_cover_shrinks_with_depth(curved, name):
    # child discs sit inside parent discs, so the covers are nested
    pencil = LinePencil(curved, step=1e-2)
    ifs = IFSSpec.builtin(name)
    for t in (-0.9, 0.2, 1.3):
        L = [project_set(pencil, t, generate(ifs, d)).total_length for d in (3, 4, 5, 6)]
        assert all(b <= a + 1e-6 for a, b in zip(L, L[1:]))


def test_single_atom_energy():
    P, dp = 64.0, 0.05
    k = round(P / dp)
    assert energy_of_atoms(np.array([0.3]), np.array([1.0]), P, dp) == pytest.approx(dp * (2 * k + 1) / (2 * math.pi))
    # mu^(0) = total mass / sqrt(2 pi)
    assert energy_of_atoms(np.array([0.3]), np.array([1.0]), 1.0, 0.1) == pytest.approx(0.1 * 21 / (2 * math.pi))


def test_energy_matches_direct_sum():
    rng = np.random.default_rng(0)
    s = rng.uniform(-1, 1, 300)
    w = np.full(300, 1 / 300)
    P, dp = 20.0, 0.05
    p = np.arange(-400, 401) * dp
    mu = (np.exp(-1j * np.outer(p, s)) @ w) / math.sqrt(2 * math.pi)
    assert energy_of_atoms(s, w, P, dp) == pytest.approx(dp * np.sum(np.abs(mu) ** 2), rel=1e-10)


def test_energy_validation():
    with pytest.raises(ValueError):
        energy_of_atoms(np.zeros(1), np.ones(1), 0.5, 0.05)
    with pytest.raises(ValueError):
        energy_of_atoms(np.zeros(1), np.ones(1), 64, 0.5)


def test_fourier_energy_flat(flat):
    pencil = LinePencil(flat, step=1e-2)
    cells = generate(IFSSpec.control(), 3)
    e = fourier_energy(pencil, 0.3, cells)
    pm = project_set(pencil, 0.3, cells)
    assert e.energy == pytest.approx(energy_of_atoms(pm.atoms_s, pm.atoms_w, 64, 0.05))
    assert e.energy > 0


def test_good_fraction():
    assert good_fraction([0.1, 0.2, 0.3, 0.4], 0.2) == 0.75
    assert good_fraction([], 0.2) == 0.0


def test_spectrum_and_small_report(curved):
    pencil = LinePencil(curved, step=1e-2)
    cells = generate(IFSSpec.control(), 3)
    sp = measure_spectrum(pencil, cells, theta_grid(12))
    assert len(sp.measures) == 12 and not sp.failures
    rep = marstrand_report(curved, IFSSpec.control(), [3, 2], theta_count=12, chunk=5)
    assert len(rep.rows) == 24 and not rep.failures
    assert [r[0] for r in rep.rows] == [2] * 12 + [3] * 12
    assert [r[1] for r in rep.rows[12:]] == list(theta_grid(12))
    assert np.allclose(rep.lengths(3), [m.total_length for m in sp.measures], atol=0)
    js = rep.to_json()
    assert set(js["good_fraction"]) == {"2", "3"} and js["ifs"] == "control"
