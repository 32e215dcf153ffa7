"""Interferometric measurement model: hardware settings to kicks, POVMs, counts.

A radio-frequency coil in a static field B imparts a momentum kick
dp = 2 mu B m / p0 to a quasi-monochromatic beam of central momentum
p0 = 2 pi hbar / wavelength; free flight over a distance L converts part of
the kick into an effective position shift dx = dp L / p0.  Interference of
the kicked and unkicked components makes the detection probability

    P = 1/2 + (1/2) Re{exp(i (dp dx / 2 + dx p0)) gamma(dp, dx)}

where gamma is the coherence function of the phasespace module.  The phase
in front is obtained by exact operator reordering of the displacement
exp(i (dp x_hat + dx p_hat)), never approximated.  The beam's central
momentum is carried analytically (states live in the co-moving frame), so
grids never need to resolve p0 itself.

Everything downstream of the hardware conversion works in natural units:
lengths in units of scale_x meters, momenta in units of hbar / scale_x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import constants

from .errors import DatasetError, KickAliasingError, ScheduleError, ValidationError
from .phasespace import (
    DensityMatrix,
    GridSpec,
    shift_columns,
    wrapped_diagonals,
)

NEUTRON_MASS = constants.physical_constants["neutron mass"][0]
NEUTRON_MOMENT = abs(constants.physical_constants["neutron mag. mom."][0])


@dataclass(frozen=True)
class PhysicalConfig:
    """Beamline constants and the natural-unit scale.

    Attributes:
        wavelength: de Broglie wavelength in meters.
        mass: particle mass in kg.
        moment: magnetic moment magnitude in J/T.
        scale_x: meters per natural length unit; momenta scale as
            hbar / scale_x.
        efficiency: detector efficiency, kept at 1 (ideal) by the forward
            model; present for future use.
        background: constant background rate per exposure unit, kept at 0.
    """

    wavelength: float = 0.37e-9
    mass: float = NEUTRON_MASS
    moment: float = NEUTRON_MOMENT
    scale_x: float = 1e-6
    efficiency: float = 1.0
    background: float = 0.0

    def __post_init__(self) -> None:
        for name in ("wavelength", "mass", "moment", "scale_x"):
            if not (getattr(self, name) > 0):
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if not (0 < self.efficiency <= 1):
            raise ValidationError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.background < 0:
            raise ValidationError(f"background must be nonnegative, got {self.background}")

    @property
    def p0_si(self) -> float:
        """Central momentum 2 pi hbar / wavelength in kg m/s."""
        return 2.0 * np.pi * constants.hbar / self.wavelength

    @property
    def scale_p(self) -> float:
        """kg m/s per natural momentum unit."""
        return constants.hbar / self.scale_x

    @property
    def p0_natural(self) -> float:
        return self.p0_si / self.scale_p


def kicks_from_hardware(b_field: float, length: float, cfg: PhysicalConfig) -> tuple[float, float]:
    """Momentum kick and free-flight shift, in SI, for coil field and path length.

    dp = 2 mu B m / p0 and dx = dp L / p0; both scale linearly with B, and dx
    also linearly with L.
    """
    if b_field < 0 or length < 0:
        raise ValidationError("field and length must be nonnegative")
    dp = 2.0 * cfg.moment * b_field * cfg.mass / cfg.p0_si
    dx = dp * length / cfg.p0_si
    return dp, dx


def natural_kicks(b_field: float, length: float, cfg: PhysicalConfig) -> tuple[float, float]:
    """Same as kicks_from_hardware but expressed in natural units."""
    dp, dx = kicks_from_hardware(b_field, length, cfg)
    return dp / cfg.scale_p, dx / cfg.scale_x


def resolution_limits(b_max: float, length: float, cfg: PhysicalConfig) -> tuple[float, float]:
    """Finest resolvable position and momentum detail, in SI.

    The largest momentum kick bounds position resolution through
    dx_min = hbar / dp_max = hbar p0 / (2 mu m B_max), and the largest
    position shift likewise bounds momentum resolution, dp_min =
    (p0 / L) dx_min.  The products dx_min * dp_max and dp_min * dx_max both
    equal hbar identically.
    """
    if not (b_max > 0 and length > 0):
        raise ValidationError("resolution limits need positive B and L")
    dx_min = constants.hbar * cfg.p0_si / (2.0 * cfg.moment * cfg.mass * b_max)
    dp_min = cfg.p0_si * dx_min / length
    return dx_min, dp_min


@dataclass(frozen=True)
class KickSetting:
    """One interferometer configuration in natural units.

    Attributes:
        dp: momentum kick.
        dx: position shift.
        aux_phase: when True the coil adds the extra quarter-period shift
            pi / (2 p0) that exposes the imaginary part of the coherence.
        exposure: expected particle count for this setting.
    """

    dp: float
    dx: float
    aux_phase: bool = False
    exposure: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dp) and math.isfinite(self.dx)):
            raise ValidationError(f"kicks must be finite, got ({self.dp}, {self.dx})")
        if not (self.exposure > 0):
            raise ValidationError(f"exposure must be positive, got {self.exposure}")

    @property
    def key(self) -> tuple[float, float, bool]:
        return (self.dp, self.dx, self.aux_phase)


@dataclass(frozen=True)
class Schedule:
    """Ordered measurement plan plus the beam constants its phases need.

    ``p0`` is the central momentum in the same natural units as the kicks;
    ``aux_shift`` is the extra position displacement applied by aux-phase
    settings, pi / (2 p0) when auxiliary rows are present.
    """

    settings: tuple[KickSetting, ...]
    p0: float = 0.0
    aux_shift: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "settings", tuple(self.settings))
        if not self.settings:
            raise ScheduleError("schedule has no settings")
        if self.p0 < 0 or self.aux_shift < 0:
            raise ScheduleError("p0 and aux_shift must be nonnegative")
        seen = set()
        for s in self.settings:
            if s.key in seen:
                raise ScheduleError(f"duplicate setting (dp={s.dp}, dx={s.dx}, aux={s.aux_phase})")
            seen.add(s.key)
        if any(s.aux_phase for s in self.settings) and not (self.aux_shift > 0):
            raise ScheduleError("auxiliary settings present but aux_shift is zero")

    def __len__(self) -> int:
        return len(self.settings)

    def effective_dx(self, s: KickSetting) -> float:
        return s.dx + (self.aux_shift if s.aux_phase else 0.0)


def make_schedule(
    dp_values: Sequence[float],
    dx_values: Sequence[float],
    exposure: float = 1.0,
    with_aux: bool = False,
    p0: float = 0.0,
    metadata: dict | None = None,
) -> Schedule:
    """Cartesian-product schedule over kick lists, optionally with aux pairs.

    Plain settings come first in row-major (dp outer, dx inner) order; when
    ``with_aux`` is set a full aux-phase copy of the block follows, doubling
    the count.  Auxiliary rows need a positive ``p0`` because their shift is
    pi / (2 p0).

    Raises:
        ScheduleError: on empty lists, duplicate kicks, or aux without p0.
    """
    dp_values = list(dp_values)
    dx_values = list(dx_values)
    if not dp_values or not dx_values:
        raise ScheduleError("kick lists must be non-empty")
    if with_aux and not (p0 > 0):
        raise ScheduleError("auxiliary pairs need p0 > 0 to define the shift pi/(2 p0)")
    aux_shift = np.pi / (2.0 * p0) if with_aux else 0.0
    settings = [
        KickSetting(dp=float(dp), dx=float(dx), aux_phase=False, exposure=exposure)
        for dp in dp_values
        for dx in dx_values
    ]
    if with_aux:
        settings += [
            KickSetting(dp=float(dp), dx=float(dx), aux_phase=True, exposure=exposure)
            for dp in dp_values
            for dx in dx_values
        ]
    meta = {"shape": (len(dp_values), len(dx_values)), "with_aux": with_aux}
    meta.update(metadata or {})
    return Schedule(settings=tuple(settings), p0=p0, aux_shift=aux_shift, metadata=meta)


def make_hardware_schedule(
    b_values: Sequence[float],
    l_values: Sequence[float],
    cfg: PhysicalConfig,
    exposure: float = 1.0,
    with_aux: bool = False,
) -> Schedule:
    """Schedule from coil fields and path lengths, converted to natural units.

    Each (B, L) pair becomes one setting; sweeping B at fixed L walks along a
    single quadrature ray, which is the natural acquisition pattern for the
    tomographic back-projection route.
    """
    b_values = list(b_values)
    l_values = list(l_values)
    if not b_values or not l_values:
        raise ScheduleError("hardware lists must be non-empty")
    p0 = cfg.p0_natural
    aux_shift = np.pi / (2.0 * p0) if with_aux else 0.0
    settings = []
    for ell in l_values:
        for b in b_values:
            dp, dx = natural_kicks(b, ell, cfg)
            settings.append(KickSetting(dp=dp, dx=dx, aux_phase=False, exposure=exposure))
    if with_aux:
        settings += [
            KickSetting(dp=s.dp, dx=s.dx, aux_phase=True, exposure=exposure) for s in settings
        ]
    meta = {
        "b_values": [float(b) for b in b_values],
        "l_values": [float(ell) for ell in l_values],
        "scale_x": cfg.scale_x,
        "with_aux": with_aux,
    }
    return Schedule(settings=tuple(settings), p0=p0, aux_shift=aux_shift, metadata=meta)


def _check_representable(grid: GridSpec, dp: float, v_eff: float) -> None:
    if abs(dp) > grid.p_max * (1.0 + 1e-12):
        raise KickAliasingError(
            f"momentum kick {dp:.6g} beyond the grid phase bound pi/dx = {grid.p_max:.6g}"
        )
    if abs(v_eff) > grid.x_extent / 2.0:
        raise KickAliasingError(
            f"position shift {v_eff:.6g} beyond half the grid extent {grid.x_extent / 2.0:.6g}"
        )


def povm_element(
    s: KickSetting, grid: GridSpec, p0: float = 0.0, aux_shift: float = 0.0
) -> np.ndarray:
    """Detection operator for one setting: Pi = 1/2 + (M + M^dag) / 4.

    M is the phased displacement exp(i (dp v_eff / 2 + v_eff p0)) *
    diag(exp(i dp x)) S_{v_eff}, with v_eff = dx (+ aux shift).  Hermitian by
    construction with spectrum inside [0, 1]; the zero setting returns the
    identity exactly.

    Raises:
        KickAliasingError: kick outside the grid's representable range.
    """
    v_eff = s.dx + (aux_shift if s.aux_phase else 0.0)
    n = grid.n_points
    if s.dp == 0.0 and v_eff == 0.0:
        return np.eye(n, dtype=complex)
    _check_representable(grid, s.dp, v_eff)
    col = shift_columns(grid, np.array([v_eff]))[0]
    j = np.arange(n)
    s_v = col[(j[:, None] - j[None, :]) % n]
    phase = np.exp(1j * (s.dp * v_eff / 2.0 + v_eff * p0))
    m = phase * np.exp(1j * s.dp * grid.x)[:, None] * s_v
    return 0.5 * np.eye(n, dtype=complex) + 0.25 * (m + m.conj().T)


class _ForwardModel:
    """Vectorized probabilities and POVM sums for a whole schedule.

    Groups settings by effective position shift so the translation circulant
    is built once per distinct shift; per group only a small phase matrix in
    dp remains.  Supplies exactly the two contractions the estimators need:
    probabilities tr{Pi_j rho} for all j, and weighted operator sums
    sum_j w_j Pi_j, both matched to dense construction at rounding level.
    """

    def __init__(self, grid: GridSpec, schedule: Schedule):
        self.grid = grid
        self.schedule = schedule
        n = grid.n_points
        dps = np.array([s.dp for s in schedule.settings])
        v_eff = np.array([schedule.effective_dx(s) for s in schedule.settings])
        for dp, v in zip(dps, v_eff):
            _check_representable(grid, dp, v)
        self.exposures = np.array([s.exposure for s in schedule.settings])
        self.phases = np.exp(1j * (dps * v_eff / 2.0 + v_eff * schedule.p0))
        self.v_unique, self.v_index = np.unique(v_eff, return_inverse=True)
        self.columns = shift_columns(grid, self.v_unique)
        self.groups = [np.nonzero(self.v_index == k)[0] for k in range(self.v_unique.size)]
        self.exp_ux = [
            np.exp(1j * np.outer(dps[idx], grid.x)) for idx in self.groups
        ]
        j = np.arange(n)
        self._row = j[:, None]
        self._circ = (j[:, None] - j[None, :]) % n

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """tr{Pi_j rho} for every setting, as one real vector in [0, 1]."""
        diags = wrapped_diagonals(rho)
        shifted = self.columns @ diags
        out = np.empty(len(self.schedule), dtype=float)
        for k, idx in enumerate(self.groups):
            gam = self.exp_ux[k] @ shifted[k]
            out[idx] = 0.5 + 0.5 * np.real(self.phases[idx] * gam)
        return out

    def weighted_sum(self, weights: np.ndarray) -> np.ndarray:
        """sum_j weights_j Pi_j as a dense Hermitian matrix."""
        n = self.grid.n_points
        amp = np.zeros((n, self.v_unique.size), dtype=complex)
        for k, idx in enumerate(self.groups):
            amp[:, k] = (weights[idx] * self.phases[idx]) @ self.exp_ux[k]
        folded = (amp @ self.columns)[self._row, self._circ]
        total = float(np.sum(weights))
        return 0.5 * total * np.eye(n, dtype=complex) + 0.25 * (folded + folded.conj().T)


def detect_probability(
    rho: DensityMatrix, s: KickSetting, p0: float = 0.0, aux_shift: float = 0.0
) -> float:
    """Detection probability 1/2 + Re{phase * gamma(dp, v_eff)} / 2.

    Evaluates the coherence route rather than building the operator; the two
    agree to rounding and the matrix-trace form is kept as a test oracle.
    """
    sched = Schedule(settings=(s,), p0=p0, aux_shift=aux_shift if s.aux_phase else 0.0)
    model = _ForwardModel(rho.grid, sched)
    return float(model.probabilities(rho.matrix)[0])


def schedule_probabilities(rho: DensityMatrix, schedule: Schedule, grid: GridSpec | None = None) -> np.ndarray:
    """Vector of detection probabilities over all settings of a schedule."""
    model = _ForwardModel(grid or rho.grid, schedule)
    return model.probabilities(rho.matrix)


@dataclass(frozen=True)
class CountDataset:
    """Counts aligned with a schedule, plus provenance for reproducibility.

    Counts are stored as floats: Poisson draws are integer-valued, while
    noiseless generation stores expected counts exactly.
    """

    schedule: Schedule
    counts: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (len(self.schedule),):
            raise DatasetError(
                f"counts shape {counts.shape} does not match schedule length {len(self.schedule)}"
            )
        if not np.all(np.isfinite(counts)) or (counts < 0).any():
            raise DatasetError("counts must be finite and nonnegative")
        object.__setattr__(self, "counts", counts)


def noiseless_counts(
    rho: DensityMatrix, schedule: Schedule, small_shift_limit: bool = False
) -> CountDataset:
    """Expected counts exposure * P for every setting, no sampling.

    With ``small_shift_limit`` the auxiliary rows are generated in the ideal
    quarter-period limit: the aux shift contributes exactly the factor i to
    the interference phase and no argument shift, which is the algebra the
    pairing estimator inverts.  Physical aux rows (the default) carry the
    finite shift, whose quadratic bias is a measured quantity in the tests.
    """
    if small_shift_limit:
        dps = np.array([s.dp for s in schedule.settings])
        dxs = np.array([s.dx for s in schedule.settings])
        aux = np.array([s.aux_phase for s in schedule.settings])
        for dp, v in zip(dps, dxs):
            _check_representable(rho.grid, dp, v)
        diags = wrapped_diagonals(rho.matrix)
        v_unique, v_index = np.unique(dxs, return_inverse=True)
        shifted = shift_columns(rho.grid, v_unique) @ diags
        gam = np.empty(len(schedule), dtype=complex)
        for k in range(v_unique.size):
            idx = np.nonzero(v_index == k)[0]
            gam[idx] = np.exp(1j * np.outer(dps[idx], rho.grid.x)) @ shifted[k]
        phase = np.exp(1j * (dps * dxs / 2.0 + dxs * schedule.p0)) * np.where(aux, 1j, 1.0)
        probs = 0.5 + 0.5 * np.real(phase * gam)
    else:
        probs = schedule_probabilities(rho, schedule)
    exposures = np.array([s.exposure for s in schedule.settings])
    return CountDataset(
        schedule=schedule,
        counts=exposures * probs,
        provenance={"noiseless": True, "small_shift_limit": small_shift_limit},
    )


def simulate_counts(rho: DensityMatrix, schedule: Schedule, seed: int) -> CountDataset:
    """Poisson counts with mean exposure * P, reproducible and splittable.

    Each setting draws from its own counter-based stream keyed by
    (seed, setting index), so any subset of settings can be regenerated
    independently and in parallel without changing the result.
    """
    probs = schedule_probabilities(rho, schedule)
    counts = np.empty(len(schedule), dtype=float)
    for i, (s, p) in enumerate(zip(schedule.settings, probs)):
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))
        counts[i] = float(rng.poisson(s.exposure * max(p, 0.0)))
    return CountDataset(
        schedule=schedule, counts=counts, provenance={"seed": int(seed), "noiseless": False}
    )


__all__ = [
    "NEUTRON_MASS",
    "NEUTRON_MOMENT",
    "CountDataset",
    "KickSetting",
    "PhysicalConfig",
    "Schedule",
    "detect_probability",
    "kicks_from_hardware",
    "make_hardware_schedule",
    "make_schedule",
    "natural_kicks",
    "noiseless_counts",
    "povm_element",
    "resolution_limits",
    "schedule_probabilities",
    "simulate_counts",
]
