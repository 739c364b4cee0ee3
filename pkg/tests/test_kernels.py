import numpy as np
import pytest

from sdlab import kernels
from sdlab.errors import DomainError, InputError, ModelError, ParameterError

import oracles

RNG = np.random.default_rng(20260810)

FAMILIES = [
    kernels.gff(3),
    kernels.bargmann_fock(2),
    kernels.cauchy(2.0, 2),
    kernels.monochromatic_wave(2),
    kernels.polylog_decay(1.0, 3.5, 2),
    kernels.iid_standard(2),
]


def test_bargmann_fock_at_zero():
    m = kernels.bargmann_fock(2)
    assert kernels.eval_cov(m, (0.0, 0.0), (0.0, 0.0)) == 1.0


def test_iid_off_diagonal_zero():
    m = kernels.iid_standard(2)
    assert kernels.eval_cov(m, (0, 0), (1, 0)) == 0.0
    assert kernels.eval_cov(m, (3, 5), (3, 5)) == 1.0


def test_gff_origin_value_against_closed_form():
    # Fourier/Bessel quadrature vs the Watson product formula
    assert kernels.gff_green((0, 0, 0), 3) == pytest.approx(oracles.watson_g3_origin(), abs=1e-9)


def test_gff_harmonic_relation():
    # (1/2d) sum_{y~x} G(y) - G(x) = -delta_{x,0}
    d = 3
    for x, expect in [((0, 0, 0), -1.0), ((1, 0, 0), 0.0), ((1, 1, 0), 0.0)]:
        acc = 0.0
        for ax in range(d):
            for step in (-1, 1):
                y = list(x)
                y[ax] += step
                acc += kernels.gff_green(tuple(y), d)
        defect = acc / (2 * d) - kernels.gff_green(x, d)
        assert defect == pytest.approx(expect, abs=1e-6)


def test_gff_rejects_low_dimension():
    with pytest.raises(DomainError):
        kernels.gff(2)


def test_cauchy_parameter_error():
    with pytest.raises(ParameterError):
        kernels.cauchy(0.0, 2)


def test_cauchy_example_value():
    m = kernels.cauchy(2.0, 2)
    assert kernels.eval_cov(m, (0.0, 0.0), (1.0, 0.0)) == pytest.approx(0.5, abs=0)


def test_wave_limit_at_zero_is_one():
    m = kernels.monochromatic_wave(2)
    assert kernels.eval_cov(m, (0.0, 0.0), (1e-9, 0.0)) == pytest.approx(1.0, abs=1e-12)
    m3 = kernels.monochromatic_wave(3)
    assert kernels.eval_cov(m3, (0.0,) * 3, (1e-9, 0.0, 0.0)) == pytest.approx(1.0, abs=1e-12)


def test_wave_d2_matches_bessel_oracle():
    m = kernels.monochromatic_wave(2)
    for r in np.linspace(0.01, 50.0, 97):
        got = kernels.eval_cov(m, (0.0, 0.0), (float(r), 0.0))
        assert got == pytest.approx(oracles.bessel_j_mp(0, float(r)), abs=1e-12)


@pytest.mark.parametrize("model", FAMILIES, ids=lambda m: m.family)
def test_symmetry_exact(model):
    d = model.dim
    for _ in range(1000):
        if model.lattice:
            x = tuple(RNG.integers(-6, 7, size=d).tolist())
            y = tuple(RNG.integers(-6, 7, size=d).tolist())
        else:
            x = tuple(RNG.normal(size=d).tolist())
            y = tuple(RNG.normal(size=d).tolist())
        assert kernels.eval_cov(model, x, y) == kernels.eval_cov(model, y, x)


@pytest.mark.parametrize("model", [kernels.cauchy(1.5, 2), kernels.polylog_decay(1.0, 3.5, 2)],
                         ids=["cauchy", "polylog"])
def test_decay_nonincreasing_along_ray(model):
    radii = np.linspace(0.0, 60.0, 100)
    vals = [kernels.eval_cov(model, (0.0, 0.0), (float(r), 0.0)) for r in radii]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_stationarity_under_translation():
    m = kernels.bargmann_fock(2)
    for _ in range(50):
        x, y, t = RNG.normal(size=2), RNG.normal(size=2), RNG.normal(size=2)
        a = kernels.eval_cov(m, tuple(x), tuple(y))
        b = kernels.eval_cov(m, tuple(x + t), tuple(y + t))
        assert a == pytest.approx(b, abs=1e-14)


def test_build_cov_iid_identity():
    m = kernels.iid_standard(2)
    pts = [(0, 0), (1, 0), (5, 5)]
    assert np.array_equal(kernels.build_cov_matrix(m, pts), np.eye(3))


def test_build_cov_cauchy_example():
    m = kernels.cauchy(2.0, 2)
    got = kernels.build_cov_matrix(m, [(0.0, 0.0), (1.0, 0.0)])
    assert np.allclose(got, [[1.0, 0.5], [0.5, 1.0]], atol=1e-15)


def test_build_cov_polylog_diagonal_convention():
    # normalized kernel: K(0,0) = 1, off-diagonal g(r)/g(0) = (log(e+r))^-gamma
    m = kernels.polylog_decay(1.0, 3.5, 2)
    got = kernels.build_cov_matrix(m, [(0, 0), (1, 0)])
    expect = np.log(np.e + 1.0) ** -3.5
    assert got[0, 0] == 1.0
    assert got[0, 1] == pytest.approx(expect, abs=1e-15)
    assert float(kernels.polylog_raw_g(m, 0.0)) == 1.0  # g(0) = c


def test_build_cov_duplicate_points_rejected():
    with pytest.raises(InputError):
        kernels.build_cov_matrix(kernels.iid_standard(1), [(0,), (0,)])


def test_build_cov_exactly_symmetric_and_psd():
    m = kernels.bargmann_fock(2)
    pts = [(float(i), float(j)) for i in range(5) for j in range(5)]
    got = kernels.build_cov_matrix(m, pts)
    assert np.array_equal(got, got.T)
    assert np.linalg.eigvalsh(got).min() >= -1e-10


def test_build_cov_indefinite_matrix_raises():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    with pytest.raises(ModelError):
        kernels.build_cov_matrix(kernels.explicit(bad), [(0,), (1,)])


def test_explicit_requires_symmetry():
    with pytest.raises(InputError):
        kernels.explicit(np.array([[1.0, 0.2], [0.1, 1.0]]))


def test_export_csv_roundtrip(tmp_path):
    m = kernels.build_cov_matrix(kernels.bargmann_fock(2), [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0)])
    path = tmp_path / "cov.csv"
    kernels.export_cov_csv(m, path)
    back = np.loadtxt(path, delimiter=",")
    assert np.array_equal(back, m)


def test_green_cache_concurrent_reads():
    import concurrent.futures as cf

    offs = [(i, j, k) for i in range(3) for j in range(3) for k in range(3)]
    with cf.ThreadPoolExecutor(8) as pool:
        vals = list(pool.map(lambda o: kernels.gff_green(o, 3), offs * 4))
    serial = [kernels.gff_green(o, 3) for o in offs * 4]
    assert vals == serial
