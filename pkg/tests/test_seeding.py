import numpy as np
import pytest

from hybridmin.local_opt import OptimizerOptions, lbfgs
from hybridmin.potential import PAIR_MINIMUM, LJCluster
from hybridmin.seeding import (
    MIN_SEED_DISTANCE,
    SeedError,
    SeedSpec,
    anti_mackay_shell,
    build_up_grow,
    build_up_seed,
    icosahedral_seed,
    mackay_shell,
    make_seed,
    random_seed,
    shell_total,
    tetrahedron,
)

RELAX = OptimizerOptions(max_steps=5000, energy_tol=1e-13, force_tol=1e-7)


def icosahedral_group():
    """The 120 orthogonal maps of the icosahedron onto itself."""
    v = icosahedral_seed(13)[1:]
    v = v / np.linalg.norm(v, axis=1, keepdims=True)

    def frame(a, b):
        c = np.cross(a, b)
        return np.column_stack([a, b, c])

    edge = np.min(np.linalg.norm(v[0] - v[1:], axis=1))
    j0 = 1 + int(np.argmin(np.linalg.norm(v[0] - v[1:], axis=1)))
    src = frame(v[0], v[j0])
    ops = []
    for i in range(12):
        for j in range(12):
            if i != j and abs(np.linalg.norm(v[i] - v[j]) - edge) < 1e-9:
                ops.append(frame(v[i], v[j]) @ np.linalg.inv(src))
    ops += [-q for q in ops]
    return v, ops


def same_point_set(a, b, tol=1e-9):
    d = np.linalg.norm(a[:, None] - b[None], axis=-1)
    return np.all(d.min(axis=1) < tol) and np.all(d.min(axis=0) < tol)


def min_pair_distance(x):
    d = np.linalg.norm(x[:, None] - x[None], axis=-1)
    return np.min(d + np.eye(len(x)) * 1e9)


def test_shell_counts():
    for k in range(1, 5):
        assert len(mackay_shell(k)) == 10 * k**2 + 2
    assert [shell_total(k) for k in range(5)] == [1, 13, 55, 147, 309]


def test_icosahedron_13_geometry():
    x = icosahedral_seed(13)
    r = np.linalg.norm(x[1:] - x[0], axis=1)
    assert np.ptp(r) < 1e-12
    assert r[0] == pytest.approx(PAIR_MINIMUM)


@pytest.mark.parametrize("n,expected,tol", [(13, -44.326801, 1e-5), (55, -279.248470, 1e-3)])
def test_icosahedral_relaxed_energies(n, expected, tol):
    tr = lbfgs(LJCluster(), icosahedral_seed(n), RELAX)
    assert tr.final_energy == pytest.approx(expected, abs=tol)


def test_icosahedral_symmetry_120_operations():
    _, ops = icosahedral_group()
    assert len(ops) == 120
    assert len({tuple(np.round(q, 6).ravel()) for q in ops}) == 120
    for q in ops:
        assert np.allclose(q @ q.T, np.eye(3), atol=1e-12)
    model = LJCluster()
    for n in (13, 55, 147):
        x = icosahedral_seed(n)
        e = model.energy(x)
        for q in ops:
            y = x @ q.T
            assert same_point_set(x, y)
            assert abs(model.energy(y) - e) < 1e-9


def test_partial_shell_greedy_and_supported_range():
    x = icosahedral_seed(20)
    assert len(x) == 20
    np.testing.assert_array_equal(x[:13], icosahedral_seed(13))
    assert min_pair_distance(x) > 0.9 * PAIR_MINIMUM
    with pytest.raises(SeedError):
        icosahedral_seed(310)
    with pytest.raises(SeedError):
        icosahedral_seed(0)
    assert len(icosahedral_seed(309)) == 309


def test_fc_lattice_variant():
    caps = anti_mackay_shell(1)
    assert len(caps) == 12 + 20
    x = icosahedral_seed(45, lattice="FC")
    assert len(x) == 45
    assert min_pair_distance(x) > 0.9 * PAIR_MINIMUM
    ic = lbfgs(LJCluster(), icosahedral_seed(45, "IC"), RELAX).final_energy
    fc = lbfgs(LJCluster(), x, RELAX).final_energy
    assert ic < -200 and fc < -200
    with pytest.raises(ValueError):
        icosahedral_seed(20, lattice="XX")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_build_up_small(n):
    x = build_up_seed(n)
    assert len(x) == n


def test_build_up_sequence():
    model = LJCluster()
    x4 = tetrahedron()
    assert model.energy(x4) == pytest.approx(-6.0)
    x5 = build_up_grow(x4)
    assert model.energy(x5) == pytest.approx(-9.103852, abs=1e-4)
    x6 = build_up_grow(x5)
    assert abs(model.energy(x6) - (-12.712062)) <= 0.5
    x7 = build_up_grow(x6)
    assert model.energy(x7) == pytest.approx(-16.505384, abs=1e-3)
    energies = [model.energy(x) for x in (x4, x5, x6, x7)]
    assert np.all(np.diff(energies) < 0)


def test_build_up_rejects_tiny_input():
    with pytest.raises(SeedError):
        build_up_grow(np.array([[0.0, 0, 0], [1.1, 0, 0]]))
    with pytest.raises(SeedError):
        build_up_grow(np.array([[0.0, 0, 0], [1.1, 0, 0], [2.2, 0, 0]]))


@pytest.mark.parametrize("mode", ["random_sphere", "big_bang"])
def test_random_seed_determinism_and_spacing(mode):
    for n in (1, 2, 10, 60):
        a = random_seed(SeedSpec(n, mode, rng_seed=5))
        b = random_seed(SeedSpec(n, mode, rng_seed=5))
        np.testing.assert_array_equal(a, b)
        assert a.shape == (n, 3)
        if n > 1:
            assert min_pair_distance(a) >= MIN_SEED_DISTANCE
            LJCluster().energy(a)
    c = random_seed(SeedSpec(10, mode, rng_seed=6))
    assert not np.array_equal(c, random_seed(SeedSpec(10, mode, rng_seed=5)))


def test_random_sphere_radius():
    spec = SeedSpec(40, "random_sphere", rng_seed=1, scale=1.3)
    x = random_seed(spec)
    assert np.linalg.norm(x, axis=1).max() <= 1.3 * 40 ** (1 / 3)


def test_big_bang_mean():
    x = random_seed(SeedSpec(50, "big_bang", rng_seed=0, scale=1.0))
    assert abs(x.mean()) < 3.0 / np.sqrt(150)


def test_repair_failure_suggests_larger_scale():
    with pytest.raises(SeedError, match="larger scale"):
        random_seed(SeedSpec(200, "big_bang", rng_seed=0, scale=0.05), max_retries=20)


def test_seed_spec_validation_and_dispatch():
    with pytest.raises(ValueError):
        SeedSpec(0)
    with pytest.raises(ValueError):
        SeedSpec(5, "lattice")
    with pytest.raises(ValueError):
        SeedSpec(5, scale=0.0)
    with pytest.raises(ValueError):
        random_seed(SeedSpec(5, "icosahedral"))
    np.testing.assert_array_equal(make_seed(SeedSpec(13, "icosahedral")), icosahedral_seed(13))
    assert len(make_seed(SeedSpec(6, "build_up"))) == 6
    np.testing.assert_array_equal(make_seed(SeedSpec(9, "big_bang", 3)), random_seed(SeedSpec(9, "big_bang", 3)))
