"""One-dimensional grid model of the potential -> ground-state density map.

Atomic units throughout (hbar = m_e = e = 1).  One or two spinless particles
live on the interior points ``x_i = i * dx`` (``dx = L / (points + 1)``) of a
box with Dirichlet walls.  The kinetic energy is the ``-1/2`` second
difference stencil.  For two particles the interaction is the soft Coulomb
``1 / sqrt((x - y)^2 + eta^2)``; the bare 1D Coulomb interaction is not
integrable, so this is an illustration of the density map, not a model of
real three-dimensional Coulomb systems.

Wavefunctions are normalized on the grid, ``sum |psi|^2 dx^N = 1``, so the
density integrates to the particle number: ``sum rho dx = N``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh, splu

from .errors import DomainError, NumericalError, ParseError, StructuralError

STATISTICS = ("distinguishable", "antisymmetric")


@dataclass(frozen=True)
class GridSystem:
    L: float
    points: int
    N_particles: int
    statistics: str
    external_potential: np.ndarray = field(compare=False)
    interaction_softening: float = 1.0

    def __post_init__(self):
        if not self.L > 0:
            raise StructuralError(f"box length must be positive, got {self.L}")
        if self.points < 8:
            raise StructuralError(f"need at least 8 grid points, got {self.points}")
        if self.N_particles not in (1, 2):
            raise StructuralError(f"only 1 or 2 particles are supported, got {self.N_particles}")
        if self.statistics not in STATISTICS:
            raise StructuralError(f"statistics must be one of {STATISTICS}, got {self.statistics!r}")
        v = np.asarray(self.external_potential, dtype=float)
        if v.shape != (self.points,):
            raise StructuralError(f"potential has shape {v.shape}, expected ({self.points},)")
        if not np.all(np.isfinite(v)):
            raise StructuralError("potential contains non-finite values")
        if self.N_particles == 2 and not self.interaction_softening > 0:
            raise StructuralError("two-particle systems need a positive softening eta")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "external_potential", v)

    @property
    def dx(self) -> float:
        return self.L / (self.points + 1)

    @property
    def grid(self) -> np.ndarray:
        return self.dx * np.arange(1, self.points + 1)

    def same_grid(self, other: "GridSystem") -> bool:
        return (
            self.L == other.L
            and self.points == other.points
            and self.N_particles == other.N_particles
            and self.statistics == other.statistics
            and (self.N_particles == 1 or self.interaction_softening == other.interaction_softening)
        )


def make_grid_potential(kind: str, L: float, points: int, **params) -> np.ndarray:
    """Sample a named potential on the interior grid.

    ``box0``: zero.  ``harmonic``: ``omega^2 (x - center)^2 / 2``.
    ``soft_coulomb``: ``-Z / sqrt((x - center)^2 + a^2)``.  ``samples``:
    explicit ``values``.  Every kind accepts an additive ``shift``.
    """
    dx = L / (points + 1)
    x = dx * np.arange(1, points + 1)
    params = dict(params)
    shift = float(params.pop("shift", 0.0))
    center = float(params.pop("center", L / 2))
    if kind == "box0":
        v = np.zeros(points)
    elif kind == "harmonic":
        omega = float(params.pop("omega", 1.0))
        v = 0.5 * omega**2 * (x - center) ** 2
    elif kind == "soft_coulomb":
        Z = float(params.pop("Z", 1.0))
        a = float(params.pop("a", 1.0))
        if not a > 0:
            raise DomainError("soft Coulomb softening 'a' must be positive")
        v = -Z / np.sqrt((x - center) ** 2 + a**2)
    elif kind == "samples":
        values = params.pop("values", None)
        if values is None or len(values) != points:
            raise StructuralError(f"'samples' potential needs {points} values")
        v = np.asarray(values, dtype=float)
    else:
        raise DomainError(f"unknown potential kind {kind!r}")
    if params:
        raise DomainError(f"unused parameters for {kind!r}: {sorted(params)}")
    return v + shift


def _kinetic(points: int, dx: float) -> sp.csr_matrix:
    off = np.ones(points - 1)
    lap = sp.diags([off, -2 * np.ones(points), off], [-1, 0, 1])
    return (-0.5 / dx**2 * lap).tocsr()


def _antisymmetric_basis(points: int) -> sp.csr_matrix:
    """Isometry from pairs ``i < j`` onto antisymmetric grid functions."""
    i, j = np.triu_indices(points, k=1)
    cols = np.arange(len(i))
    s = 1 / np.sqrt(2)
    rows = np.concatenate([i * points + j, j * points + i])
    data = np.concatenate([np.full(len(i), s), np.full(len(i), -s)])
    return sp.csr_matrix((data, (rows, np.concatenate([cols, cols]))), shape=(points * points, len(i)))


@dataclass
class GridHamiltonian:
    """Sparse symmetric matrix plus the map from its basis to grid values."""

    system: GridSystem
    matrix: sp.csr_matrix
    basis: sp.csr_matrix | None = None

    def embed(self, vec: np.ndarray) -> np.ndarray:
        return vec if self.basis is None else self.basis @ vec


def build_hamiltonian(system: GridSystem) -> GridHamiltonian:
    n, dx = system.points, system.dx
    T = _kinetic(n, dx)
    V = system.external_potential
    if system.N_particles == 1:
        return GridHamiltonian(system, (T + sp.diags(V)).tocsr())
    eye = sp.identity(n, format="csr")
    x = system.grid
    w = 1 / np.sqrt((x[:, None] - x[None, :]) ** 2 + system.interaction_softening**2)
    potential = (V[:, None] + V[None, :] + w).ravel()
    H = (sp.kron(T, eye) + sp.kron(eye, T) + sp.diags(potential)).tocsr()
    if system.statistics == "distinguishable":
        return GridHamiltonian(system, H)
    B = _antisymmetric_basis(n)
    return GridHamiltonian(system, (B.T @ H @ B).tocsr(), B)


@dataclass
class GroundStateResult:
    E0: float
    wavefunction: np.ndarray
    density: np.ndarray
    degeneracy_flag: bool
    residual: float
    gap: float
    residual_history: list[float] = field(default_factory=list)

    def to_json(self, include_wavefunction: bool = False) -> dict:
        out = {
            "E0": float(self.E0),
            "gap": float(self.gap),
            "residual": float(self.residual),
            "degeneracy_flag": bool(self.degeneracy_flag),
            "density": [float(x) for x in self.density],
        }
        if include_wavefunction:
            out["wavefunction"] = [float(x) for x in self.wavefunction]
        return out


def _fix_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def ground_state(H: GridHamiltonian, tol: float = 1e-10, max_polish: int = 50) -> GroundStateResult:
    """Lowest eigenpair by Lanczos, refined by shifted inverse iteration.

    The returned residual ``||H psi - E0 psi||`` (unit ``psi`` in the
    matrix basis) is at most ``tol``; otherwise :class:`NumericalError`.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    A = H.matrix
    dim = A.shape[0]
    v0 = np.cos(np.arange(dim) * 0.7) + 1.5
    history: list[float] = []
    try:
        vals, vecs = eigsh(A, k=2, which="SA", v0=v0, tol=min(tol, 1e-12), maxiter=20 * dim)
    except (ArpackNoConvergence, ArpackError) as exc:
        raise NumericalError(f"Lanczos did not converge: {exc}") from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    E, psi = float(vals[0]), vecs[:, 0]
    gap = float(vals[1] - vals[0])

    def residual(vec, energy):
        return float(np.linalg.norm(A @ vec - energy * vec))

    r = residual(psi, E)
    history.append(r)
    # a couple of inverse-iteration sweeps even when already converged
    shift = E - max(1e-8, 1e-9 * abs(E))
    lu = splu((A - shift * sp.identity(dim, format="csc")).tocsc())
    for it in range(max_polish):
        if r <= tol and it >= 2:
            break
        psi = lu.solve(psi)
        psi /= np.linalg.norm(psi)
        E = float(psi @ (A @ psi))
        r = residual(psi, E)
        history.append(r)
    if not r <= tol:
        raise NumericalError(f"residual {r:.3e} above tolerance {tol:.1e}", history)
    psi = _fix_sign(psi)
    system = H.system
    full = H.embed(psi) / system.dx ** (system.N_particles / 2)
    result = GroundStateResult(
        E0=E,
        wavefunction=full,
        density=np.zeros(system.points),
        degeneracy_flag=gap < 10 * tol,
        residual=r,
        gap=gap,
        residual_history=history,
    )
    result.density = density(result, system)
    return result


def density(result: GroundStateResult, system: GridSystem) -> np.ndarray:
    """Single-particle density ``N * marginal of |psi|^2``."""
    psi = np.asarray(result.wavefunction)
    n = system.points
    if system.N_particles == 1:
        return np.abs(psi) ** 2
    grid = np.abs(psi.reshape(n, n)) ** 2
    return 2 * grid.sum(axis=1) * system.dx


def solve(system: GridSystem, tol: float = 1e-10) -> GroundStateResult:
    return ground_state(build_hamiltonian(system), tol)


def density_distance(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    return float(np.sqrt(np.sum((a - b) ** 2) * dx))


@dataclass
class ScanReport:
    classes: list[int]
    distances: list[list[float]]
    E0: list[float]
    degeneracy: list[bool]
    skipped_pairs: list[tuple[int, int]]
    within_class_max: float
    cross_class_min: float | None
    within_class_ok: bool
    tol_density: float

    def to_json(self) -> dict:
        return {
            "classes": self.classes,
            "distances": self.distances,
            "E0": self.E0,
            "degeneracy": self.degeneracy,
            "skipped_pairs": [list(p) for p in self.skipped_pairs],
            "within_class_max": self.within_class_max,
            "cross_class_min": self.cross_class_min,
            "within_class_ok": self.within_class_ok,
            "tol_density": self.tol_density,
        }


def shift_classes(potentials: Sequence[np.ndarray], tol_shift: float) -> list[int]:
    """Class labels for 'equal up to an additive constant' (max - min of the gap)."""
    labels: list[int] = []
    reps: list[np.ndarray] = []
    for v in potentials:
        for label, rep in enumerate(reps):
            diff = v - rep
            if diff.max() - diff.min() < tol_shift:
                labels.append(label)
                break
        else:
            labels.append(len(reps))
            reps.append(v)
    return labels


def hk_scan(
    systems: Sequence[GridSystem],
    tol_density: float = 1e-8,
    tol: float = 1e-10,
    tol_shift: float = 1e-12,
) -> ScanReport:
    """Solve every system, compare densities, and group by constant-shift class."""
    if not systems:
        raise DomainError("scan needs at least one system")
    first = systems[0]
    for k, s in enumerate(systems[1:], start=1):
        if not s.same_grid(first):
            raise StructuralError(f"system {k} does not share the grid of system 0")
    results = [solve(s, tol) for s in systems]
    classes = shift_classes([s.external_potential for s in systems], tol_shift)
    count = len(systems)
    dist = [[0.0] * count for _ in range(count)]
    skipped = []
    within = 0.0
    cross = None
    for a in range(count):
        for b in range(a + 1, count):
            d = density_distance(results[a].density, results[b].density, first.dx)
            dist[a][b] = dist[b][a] = d
            if results[a].degeneracy_flag or results[b].degeneracy_flag:
                skipped.append((a, b))
            elif classes[a] == classes[b]:
                within = max(within, d)
            else:
                cross = d if cross is None else min(cross, d)
    return ScanReport(
        classes=classes,
        distances=dist,
        E0=[r.E0 for r in results],
        degeneracy=[r.degeneracy_flag for r in results],
        skipped_pairs=skipped,
        within_class_max=within,
        cross_class_min=cross,
        within_class_ok=within < tol_density,
        tol_density=tol_density,
    )


# ---------------------------------------------------------------------------
# configuration files


@dataclass
class ScanConfig:
    systems: list[GridSystem]
    tol: float
    tol_density: float
    tol_shift: float


def parse_scan_config(document) -> ScanConfig:
    """Read ``{"L", "points", "N", "statistics", "eta", "potentials": [...], "tol"}``.

    Optional ``tol_density`` and ``tol_shift`` override the scan defaults.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ParseError("config must be a JSON object")

    def number(key, default=None, kind=float):
        if key not in document:
            if default is None:
                raise ParseError("missing required field", key)
            return default
        value = document[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError("must be a number", key)
        if kind is int and value != int(value):
            raise ParseError("must be an integer", key)
        return kind(value)

    L = number("L")
    points = number("points", kind=int)
    N = number("N", 1, kind=int)
    eta = number("eta", 1.0)
    tol = number("tol", 1e-10)
    tol_density = number("tol_density", 1e-8)
    tol_shift = number("tol_shift", 1e-12)
    statistics = document.get("statistics", "antisymmetric" if N == 2 else "distinguishable")
    potentials = document.get("potentials")
    if not isinstance(potentials, list) or not potentials:
        raise ParseError("must be a non-empty list", "potentials")
    systems = []
    for k, spec in enumerate(potentials):
        where = f"potentials[{k}]"
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ParseError("potential entry needs a 'kind'", where)
        params = {key: val for key, val in spec.items() if key != "kind"}
        try:
            v = make_grid_potential(spec["kind"], L, points, **params)
            systems.append(GridSystem(L, points, N, statistics, v, eta))
        except (DomainError, TypeError, ValueError) as exc:
            raise ParseError(str(exc), where) from None
    return ScanConfig(systems, tol, tol_density, tol_shift)
