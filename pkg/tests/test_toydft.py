import numpy as np
import pytest

from hkcert.errors import NumericalError, ParseError, StructuralError
from hkcert.toydft import (
    GridSystem,
    build_hamiltonian,
    density,
    density_distance,
    ground_state,
    hk_scan,
    make_grid_potential,
    parse_scan_config,
    shift_classes,
    solve,
)

BOX_E0 = np.pi**2 / 2


def box(points=256, L=1.0, shift=0.0):
    return GridSystem(L, points, 1, "distinguishable", np.full(points, shift))


def harmonic(points=256, L=20.0):
    return GridSystem(L, points, 1, "distinguishable", make_grid_potential("harmonic", L, points))


def pair(statistics, points=32, L=10.0, potential="soft_coulomb", eta=1.0, **params):
    v = make_grid_potential(potential, L, points, **params)
    return GridSystem(L, points, 2, statistics, v, eta)


def test_system_invariants():
    with pytest.raises(StructuralError):
        GridSystem(1.0, 7, 1, "distinguishable", np.zeros(7))
    with pytest.raises(StructuralError):
        GridSystem(1.0, 16, 1, "distinguishable", np.zeros(15))
    with pytest.raises(StructuralError):
        GridSystem(1.0, 16, 2, "antisymmetric", np.zeros(16), 0.0)
    with pytest.raises(StructuralError):
        GridSystem(1.0, 16, 3, "antisymmetric", np.zeros(16), 1.0)
    with pytest.raises(StructuralError):
        GridSystem(1.0, 16, 1, "bosonic", np.zeros(16))


def test_box_anchor():
    r = solve(box())
    assert abs(r.E0 - BOX_E0) / BOX_E0 < 1e-3
    assert r.residual <= 1e-10 and not r.degeneracy_flag


def test_harmonic_anchor():
    assert abs(solve(harmonic()).E0 - 0.5) < 1e-3


def test_box_density_shape():
    s = box(128)
    r = solve(s)
    exact = 2 * np.sin(np.pi * s.grid / s.L) ** 2 / s.L
    assert np.max(np.abs(r.density - exact)) < 1e-3


@pytest.mark.parametrize("statistics", ["distinguishable", "antisymmetric"])
def test_two_particles_match_dense_oracle(statistics):
    s = pair(statistics, Z=2)
    r = ground_state(build_hamiltonian(s))
    # oracle: dense diagonalization of the full product-space operator
    n = s.points
    x = s.grid
    dx = s.dx
    lap = (np.diag(np.ones(n - 1), -1) - 2 * np.eye(n) + np.diag(np.ones(n - 1), 1)) / dx**2
    T = -0.5 * lap
    V = s.external_potential
    full = np.kron(T, np.eye(n)) + np.kron(np.eye(n), T)
    full += np.diag((V[:, None] + V[None, :] + 1 / np.sqrt((x[:, None] - x[None, :]) ** 2 + 1.0)).ravel())
    vals, vecs = np.linalg.eigh(full)
    if statistics == "distinguishable":
        want = vals[0]
    else:
        swap = lambda v: v.reshape(n, n).T.ravel()  # noqa: E731
        anti = [k for k in range(len(vals)) if np.allclose(swap(vecs[:, k]), -vecs[:, k], atol=1e-8)]
        want = vals[anti[0]]
    assert abs(r.E0 - want) < 1e-8


def test_two_particle_interaction_raises_energy():
    one = solve(GridSystem(5.0, 24, 1, "distinguishable", np.zeros(24)))
    two = solve(pair("antisymmetric", points=24, L=5.0, potential="box0"))
    assert two.E0 >= 2 * one.E0


@pytest.mark.parametrize("system", [
    box(64),
    harmonic(64),
    pair("distinguishable", points=20),
    pair("antisymmetric", points=20),
])
def test_density_invariants(system):
    r = solve(system)
    assert np.all(r.density >= 0)
    assert abs(r.density.sum() * system.dx - system.N_particles) < 1e-8
    assert abs(np.sum(r.wavefunction**2) * system.dx**system.N_particles - 1) < 1e-10
    assert np.allclose(density(r, system), r.density)


@pytest.mark.parametrize("system", [harmonic(64), pair("antisymmetric", points=20, Z=1)])
def test_density_parity(system):
    r = solve(system)
    assert np.max(np.abs(r.density - r.density[::-1])) < 1e-8


def test_residual_bound_and_variational_bound():
    s = pair("distinguishable", points=16, potential="harmonic")
    H = build_hamiltonian(s)
    r = ground_state(H, tol=1e-10)
    assert r.residual <= 1e-10
    rng = np.random.default_rng(0)
    for _ in range(100):
        phi = rng.standard_normal(H.matrix.shape[0])
        phi /= np.linalg.norm(phi)
        assert phi @ (H.matrix @ phi) >= r.E0 - 1e-10


def _observed_orders(errors):
    return [np.log2(a / b) for a, b in zip(errors, errors[1:])]


def test_grid_refinement_is_second_order():
    # points = 2^k - 1 halves dx exactly
    sizes = [31, 63, 127]
    box_err = [abs(solve(box(p)).E0 - BOX_E0) for p in sizes]
    osc_err = [abs(solve(harmonic(p, 20.0)).E0 - 0.5) for p in [63, 127, 255]]
    for errs in (box_err, osc_err):
        assert errs == sorted(errs, reverse=True)
        for order in _observed_orders(errs):
            assert abs(order - 2) < 0.1


def test_nonconvergence_reports_history():
    with pytest.raises(NumericalError) as info:
        ground_state(build_hamiltonian(box(64)), tol=1e-30, max_polish=5)
    assert len(info.value.residual_history) == 6


def test_shift_classes():
    v = np.linspace(0, 1, 10)
    assert shift_classes([v, v + 3, v**2, v**2 - 1, v], 1e-12) == [0, 0, 1, 1, 0]


def test_scan_constant_shift():
    report = hk_scan([box(128), box(128, shift=3.0)])
    assert report.classes == [0, 0]
    assert report.distances[0][1] < 1e-10
    assert abs(report.E0[1] - report.E0[0] - 3) < 1e-8
    assert report.within_class_ok and report.cross_class_min is None


def test_scan_separated_wells():
    L, n = 12.0, 128
    wells = [
        GridSystem(L, n, 1, "distinguishable", make_grid_potential("soft_coulomb", L, n, center=c))
        for c in (L / 3, 2 * L / 3)
    ]
    report = hk_scan(wells)
    assert report.classes == [0, 1]
    assert report.cross_class_min > 1e-3


def test_scan_single_system():
    report = hk_scan([box(32)])
    assert report.classes == [0] and report.distances == [[0.0]]
    assert report.skipped_pairs == [] and report.within_class_ok


def test_scan_grid_mismatch():
    with pytest.raises(StructuralError):
        hk_scan([box(32), box(33)])
    with pytest.raises(StructuralError):
        hk_scan([box(32, L=1.0), box(32, L=2.0)])


def test_scan_skips_degenerate_pairs():
    # a loose tolerance marks every gap below 10*tol as a degeneracy
    report = hk_scan([box(32), box(32, shift=1.0)], tol=10.0)
    assert report.degeneracy == [True, True]
    assert report.skipped_pairs == [(0, 1)]


def test_density_distance():
    a = np.array([1.0, 2.0, 3.0])
    assert density_distance(a, a, 0.5) == 0
    assert density_distance(a, a + 1, 0.5) == pytest.approx(np.sqrt(1.5))


def test_config_parsing():
    cfg = parse_scan_config({
        "L": 10, "points": 16, "N": 2, "statistics": "antisymmetric", "eta": 1.0,
        "potentials": [{"kind": "harmonic", "omega": 0.5}, {"kind": "samples", "values": [0.0] * 16}],
        "tol": 1e-9, "tol_density": 1e-6,
    })
    assert len(cfg.systems) == 2 and cfg.tol == 1e-9 and cfg.tol_density == 1e-6
    assert cfg.systems[0].statistics == "antisymmetric"


@pytest.mark.parametrize("doc, where", [
    ({"points": 16, "potentials": [{"kind": "box0"}]}, "L"),
    ({"L": 1, "points": 16.5, "potentials": [{"kind": "box0"}]}, "points"),
    ({"L": 1, "points": 16, "potentials": []}, "potentials"),
    ({"L": 1, "points": 16, "potentials": [{"kind": "square"}]}, "potentials[0]"),
    ({"L": 1, "points": 16, "potentials": [{"kind": "box0", "bogus": 1}]}, "potentials[0]"),
    ({"L": 1, "points": 4, "potentials": [{"kind": "box0"}]}, "potentials[0]"),
])
def test_config_errors(doc, where):
    with pytest.raises(ParseError) as info:
        parse_scan_config(doc)
    assert info.value.location == where
