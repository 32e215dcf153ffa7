"""States on a periodic position grid and their phase-space descriptions.

The grid carries a position lattice x_j = (j - n/2) dx and the exact
discrete-Fourier conjugate momentum lattice p_k = 2 pi k / x_extent, so both
displacement generators act without interpolation: exp(i u x_hat) is diagonal
in position and exp(i v p_hat) is diagonal in the transform basis for any real
v.  All quantities use natural units (hbar = 1) in the co-moving frame of the
packet; unit conversions live in the apparatus module.

Sign conventions, fixed once here and relied on everywhere else:

* exp(i v p_hat) translates amplitudes as psi(x) -> psi(x + v),
* the complex degree of coherence is gamma(u, v) = tr{rho exp(i u x_hat)
  exp(i v p_hat)} with the position phase to the left,
* the symmetrized characteristic function is chi(u, v) = gamma(u, v)
  exp(i u v / 2), which obeys chi(-u, -v) = chi(u, v)*,
* the phase-space density is W(x, p) = (1/4 pi^2) integral chi(u, v)
  exp(-i u x - i v p) du dv, normalized to unit integral.

The sign of the W exponent is the one that makes both marginals come out as
the position and momentum densities; this is verified against quadrature
oracles in the test suite rather than assumed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GridSupportError, NonUniformLatticeError, ValidationError

logger = logging.getLogger(__name__)

# Constructors reject states whose boundary density exceeds this fraction of
# the peak; periodic wrap-around silently corrupts gamma otherwise.
BOUNDARY_DENSITY_RATIO = 1e-8


@dataclass(frozen=True)
class Lattice:
    """Uniform 1-D sample lattice described by center, step and count.

    The points are center + (k - count // 2) * step for k in range(count),
    so the center is always an actual lattice point.
    """

    center: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValidationError(f"lattice needs at least one point, got {self.count}")
        if not (self.step > 0):
            raise ValidationError(f"lattice step must be positive, got {self.step}")

    @property
    def points(self) -> np.ndarray:
        return self.center + (np.arange(self.count) - self.count // 2) * self.step

    @staticmethod
    def from_points(points: np.ndarray, rtol: float = 1e-9) -> "Lattice":
        """Build a Lattice from a uniformly spaced ascending array."""
        pts = np.asarray(points, dtype=float)
        if pts.size == 1:
            return Lattice(center=float(pts[0]), step=1.0, count=1)
        steps = np.diff(pts)
        step = float(steps.mean())
        if step <= 0 or not np.allclose(steps, step, rtol=rtol, atol=abs(step) * rtol):
            raise NonUniformLatticeError("points are not uniformly spaced")
        center = float(pts[pts.size // 2])
        return Lattice(center=center, step=step, count=pts.size)


@dataclass(frozen=True)
class GridSpec:
    """Periodic position grid with its discrete-Fourier momentum lattice."""

    n_points: int
    x_extent: float

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValidationError(f"grid needs n_points >= 2, got {self.n_points}")
        if not (self.x_extent > 0):
            raise ValidationError(f"x_extent must be positive, got {self.x_extent}")

    @property
    def x_step(self) -> float:
        return self.x_extent / self.n_points

    @property
    def x(self) -> np.ndarray:
        """Position lattice, ascending, centered on zero."""
        return (np.arange(self.n_points) - self.n_points // 2) * self.x_step

    @property
    def p_fft(self) -> np.ndarray:
        """Momentum lattice in FFT storage order, p_k = 2 pi k / x_extent."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.x_step)

    @property
    def p_sorted(self) -> np.ndarray:
        """Momentum lattice sorted ascending."""
        return np.fft.fftshift(self.p_fft)

    @property
    def p_max(self) -> float:
        """Largest representable momentum magnitude (Nyquist bound)."""
        return np.pi / self.x_step


def _as_grid_pair(a: "GridLike", b: "GridLike") -> None:
    if a.grid != b.grid:
        raise ValidationError("operands live on different grids")


@dataclass(frozen=True)
class WavePacket:
    """Pure state: complex amplitudes on the position lattice of ``grid``."""

    grid: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValidationError(
                f"amplitude vector has shape {amps.shape}, expected ({self.grid.n_points},)"
            )
        object.__setattr__(self, "amplitudes", amps)
        norm = float(np.sum(np.abs(amps) ** 2) * self.grid.x_step)
        if abs(norm - 1.0) > 1e-8:
            raise ValidationError(f"wave packet not normalized: sum |psi|^2 dx = {norm!r}")

    def position_density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def momentum_amplitudes(self) -> np.ndarray:
        """Momentum-space amplitudes on grid.p_sorted, unit-normalized in dp."""
        n = self.grid.n_points
        raw = np.fft.fft(self.amplitudes) * self.grid.x_step / math.sqrt(2.0 * np.pi)
        # the (-1)^k factor anchors the transform phase to x_0 = -extent/2
        raw *= (-1.0) ** np.arange(n)
        return np.fft.fftshift(raw)


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state in the position basis, stored with measure weight.

    Entries absorb one factor of the grid step, so plain ``np.trace`` is 1 and
    matrix algebra needs no extra dx bookkeeping.
    """

    grid: GridSpec
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.grid.n_points
        if mat.shape != (d, d):
            raise ValidationError(f"density matrix has shape {mat.shape}, expected ({d}, {d})")
        object.__setattr__(self, "matrix", mat)
        herm = np.abs(mat - mat.conj().T).max()
        if herm > 1e-8:
            raise ValidationError(f"density matrix not Hermitian: max asymmetry {herm!r}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > 1e-8:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        lo = float(np.linalg.eigvalsh(mat).min())
        if lo < -1e-9:
            raise ValidationError(f"density matrix has negative eigenvalue {lo!r}")


GridLike = WavePacket | DensityMatrix


@dataclass(frozen=True)
class WignerGrid:
    """Real phase-space function sampled on an (x, p) product lattice."""

    x_lattice: Lattice
    p_lattice: Lattice
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        shape = (self.x_lattice.count, self.p_lattice.count)
        if vals.shape != shape:
            raise ValidationError(f"value array has shape {vals.shape}, expected {shape}")
        object.__setattr__(self, "values", vals)

    @property
    def cell_area(self) -> float:
        return self.x_lattice.step * self.p_lattice.step

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)


@dataclass(frozen=True)
class CoherenceTable:
    """Complex coherence samples gamma(dp_j, dx_k) on a product of shift values."""

    dp_values: np.ndarray
    dx_values: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        dp = np.asarray(self.dp_values, dtype=float)
        dx = np.asarray(self.dx_values, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (dp.size, dx.size):
            raise ValidationError(
                f"value array has shape {vals.shape}, expected ({dp.size}, {dx.size})"
            )
        object.__setattr__(self, "dp_values", dp)
        object.__setattr__(self, "dx_values", dx)
        object.__setattr__(self, "values", vals)
        peak = np.abs(vals).max() if vals.size else 0.0
        if peak > 1.0 + 1e-6:
            raise ValidationError(f"coherence magnitude {peak!r} exceeds 1")


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def make_gaussian(
    l_coh: float, x_center: float, p_center: float, grid: GridSpec
) -> WavePacket:
    """Gaussian packet with momentum amplitudes proportional to exp(-(k - p_center)^2 l_coh^2).

    In position space that is a Gaussian of density variance l_coh^2 centered
    at ``x_center`` riding on the carrier exp(i p_center x).

    Raises:
        GridSupportError: if the packet does not comfortably fit the grid,
            either in position (boundary density above 1e-8 of the peak,
            extent under ten standard deviations) or in momentum (lattice
            does not cover p_center +- 5 / l_coh).
    """
    if not (l_coh > 0):
        raise ValidationError(f"l_coh must be positive, got {l_coh}")
    half = grid.x_extent / 2.0
    edge_gap = min(half - x_center, half + x_center)
    # boundary density exp(-d^2 / 2 l^2) <= 1e-8 requires d >= l sqrt(2 ln 1e8)
    min_gap = l_coh * math.sqrt(2.0 * math.log(1.0 / BOUNDARY_DENSITY_RATIO))
    if edge_gap < min_gap:
        raise GridSupportError(
            f"packet at x_center={x_center} sits {edge_gap:.3g} from the grid edge; "
            f"needs {min_gap:.3g} for boundary density below {BOUNDARY_DENSITY_RATIO:g}"
        )
    if grid.x_extent < 10.0 * l_coh:
        raise GridSupportError(
            f"x_extent {grid.x_extent} under 10 position spreads ({10.0 * l_coh})"
        )
    p_need = abs(p_center) + 5.0 / l_coh
    if p_need > grid.p_max:
        raise GridSupportError(
            f"momentum lattice reaches {grid.p_max:.3g}, needs {p_need:.3g} "
            f"to cover p_center +- 5/l_coh"
        )
    x = grid.x
    amps = np.exp(-((x - x_center) ** 2) / (4.0 * l_coh**2) + 1j * p_center * (x - x_center))
    amps /= math.sqrt(float(np.sum(np.abs(amps) ** 2)) * grid.x_step)
    return WavePacket(grid=grid, amplitudes=amps)


def _moments(psi: WavePacket) -> tuple[float, float, float, float, float]:
    """Means and variances of x and p plus the symmetrized covariance."""
    dens = psi.position_density() * psi.grid.x_step
    x = psi.grid.x
    mx = float(np.sum(x * dens))
    vx = float(np.sum((x - mx) ** 2 * dens))
    amom = psi.momentum_amplitudes()
    p = psi.grid.p_sorted
    dp = p[1] - p[0]
    pdens = np.abs(amom) ** 2 * dp
    mp = float(np.sum(p * pdens))
    vp = float(np.sum((p - mp) ** 2 * pdens))
    # Re <psi| x p |psi> via one FFT application of p to psi
    p_psi = np.fft.ifft(np.fft.fft(psi.amplitudes) * psi.grid.p_fft)
    xp = float(np.real(np.sum(np.conj(psi.amplitudes) * x * p_psi) * psi.grid.x_step))
    cov = xp - mx * mp
    return mx, vx, mp, vp, cov


def evolve_free(psi: WavePacket, tau: float) -> WavePacket:
    """Free dispersion: multiply momentum amplitudes by exp(i k^2 tau / 2).

    The momentum density is untouched; in phase space the map is the shear
    (x, p) -> (x - p tau, p), so a packet's position variance grows as
    var_x + tau^2 var_p - 2 tau cov(x, p).

    Raises:
        GridSupportError: when the predicted dispersed spread exceeds a
            quarter of the grid extent and the tails would wrap around.
    """
    _, vx, _, vp, cov = _moments(psi)
    predicted = math.sqrt(max(vx - 2.0 * tau * cov + tau**2 * vp, 0.0))
    if predicted > psi.grid.x_extent / 4.0:
        raise GridSupportError(
            f"dispersed spread {predicted:.3g} exceeds x_extent/4 = {psi.grid.x_extent / 4.0:.3g}"
        )
    phase = np.exp(0.5j * psi.grid.p_fft**2 * tau)
    amps = np.fft.ifft(np.fft.fft(psi.amplitudes) * phase)
    return WavePacket(grid=psi.grid, amplitudes=amps)


def translate(psi: WavePacket, shift: float) -> np.ndarray:
    """Amplitudes of exp(i shift p_hat) |psi>, i.e. psi(x + shift), for any real shift."""
    return np.fft.ifft(np.fft.fft(psi.amplitudes) * np.exp(1j * shift * psi.grid.p_fft))


def make_cat(base: WavePacket, separation: float) -> WavePacket:
    """Superpose ``base`` with its copy displaced by ``separation``.

    Applies 1 + exp(i separation p_hat), which adds a second hump at
    x_center - separation, then renormalizes.  The displacement is exact in
    the transform basis, no interpolation involved.

    Raises:
        GridSupportError: if either hump leaks into the periodic boundary.
    """
    # a hump pushed past the box edge wraps back inside and would pass the
    # edge-density check while sitting at the wrong position
    half = base.grid.x_extent / 2.0
    if abs(separation) >= half:
        raise GridSupportError(
            f"separation {separation:g} exceeds half the grid extent {half:g}; "
            "the displaced hump would wrap around"
        )
    amps = base.amplitudes + translate(base, separation)
    norm2 = float(np.sum(np.abs(amps) ** 2) * base.grid.x_step)
    if norm2 <= 0:
        raise ValidationError("cat construction annihilated the state")
    amps = amps / math.sqrt(norm2)
    dens = np.abs(amps) ** 2
    edge = max(dens[0], dens[-1])
    if edge > BOUNDARY_DENSITY_RATIO * dens.max():
        raise GridSupportError(
            f"cat boundary density {edge:.3g} exceeds {BOUNDARY_DENSITY_RATIO:g} of peak; "
            "enlarge the grid or shrink the separation"
        )
    return WavePacket(grid=base.grid, amplitudes=amps)


def density_from_pure(psi: WavePacket) -> DensityMatrix:
    """Rank-1 density matrix |psi><psi| with the measure weight folded in."""
    c = psi.amplitudes * math.sqrt(psi.grid.x_step)
    return DensityMatrix(grid=psi.grid, matrix=np.outer(c, c.conj()))


def mix(states: list[DensityMatrix], weights: list[float]) -> DensityMatrix:
    """Convex combination of density matrices on a common grid."""
    if len(states) != len(weights) or not states:
        raise ValidationError("need one weight per state")
    w = np.asarray(weights, dtype=float)
    if (w < 0).any() or w.sum() <= 0:
        raise ValidationError("weights must be nonnegative with positive sum")
    w = w / w.sum()
    grid = states[0].grid
    mat = np.zeros((grid.n_points, grid.n_points), dtype=complex)
    for s, wi in zip(states, w):
        _as_grid_pair(states[0], s)
        mat += wi * s.matrix
    return DensityMatrix(grid=grid, matrix=mat)


# ---------------------------------------------------------------------------
# coherence and characteristic functions
# ---------------------------------------------------------------------------

def wrapped_diagonals(matrix: np.ndarray) -> np.ndarray:
    """All cyclic diagonals of a square matrix: out[r, j] = matrix[(j - r) % n, j].

    Row r holds the diagonal whose row index lags the column index by r, so a
    circulant contraction sum_m c[(j - m) % n] matrix[m, j] is just c @ out.
    """
    n = matrix.shape[0]
    j = np.arange(n)
    return matrix[(j[None, :] - j[:, None]) % n, j[None, :]]


def shift_columns(grid: GridSpec, shifts: np.ndarray) -> np.ndarray:
    """First columns of the translation operators exp(i v p_hat), one row per v.

    The full operator is circulant, S_v[j, m] = out[v_idx, (j - m) % n]; only
    this generating column is ever needed.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    return np.fft.ifft(np.exp(1j * np.outer(shifts, grid.p_fft)), axis=1)


def gamma_of_state(rho: DensityMatrix, dp: float, dx: float) -> complex:
    """Complex degree of coherence tr{rho exp(i dp x_hat) exp(i dx p_hat)}.

    ``dx`` may be any real number, lattice multiple or not; the translation
    is evaluated in the transform basis where it is exact.
    """
    table = gamma_table(rho, np.array([dp]), np.array([dx]))
    return complex(table.values[0, 0])


def gamma_table(
    rho: DensityMatrix, dp_values: np.ndarray, dx_values: np.ndarray
) -> CoherenceTable:
    """Vectorized gamma over the Cartesian product of shift values."""
    dp_values = np.asarray(dp_values, dtype=float)
    dx_values = np.asarray(dx_values, dtype=float)
    diags = wrapped_diagonals(rho.matrix)
    cols = shift_columns(rho.grid, dx_values)
    shifted_diag = cols @ diags                      # diag of S_v rho, one row per v
    phases = np.exp(1j * np.outer(dp_values, rho.grid.x))
    values = phases @ shifted_diag.T
    return CoherenceTable(dp_values=dp_values, dx_values=dx_values, values=values)


def chi_of_state(rho: DensityMatrix, dp: float, dx: float) -> complex:
    """Symmetrized characteristic function chi = gamma * exp(i dp dx / 2)."""
    return gamma_of_state(rho, dp, dx) * complex(np.exp(0.5j * dp * dx))


def chi_from_gamma(table: CoherenceTable) -> np.ndarray:
    """Convert a gamma table to symmetrized characteristic samples."""
    half = np.exp(0.5j * np.outer(table.dp_values, table.dx_values))
    return table.values * half


# ---------------------------------------------------------------------------
# phase-space density and derived functionals
# ---------------------------------------------------------------------------

def _internal_shift_lattices(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric (dp, dx) lattice carrying the state's full information.

    Momentum kicks run over the reciprocal lattice 2 pi k / extent and
    position shifts over lattice multiples of the step, excluding the
    unpaired -n/2 entries so every sample has its mirror.
    """
    m = grid.n_points // 2
    k = np.arange(-(m - 1), m)
    return k * (2.0 * np.pi / grid.x_extent), k * grid.x_step


def wigner_of_state(
    rho: DensityMatrix, x_lattice: Lattice, p_lattice: Lattice
) -> WignerGrid:
    """Phase-space density on the requested output lattice.

    Samples chi on the grid's full internal shift lattice and applies the
    double Fourier sum with unit-integral normalization.  The output lattice
    is free: the kernel is evaluated directly on its points.  The imaginary
    residue of the sum (zero up to rounding for symmetric lattices) is logged
    and recorded in the metadata.
    """
    us, vs = _internal_shift_lattices(rho.grid)
    chi = chi_from_gamma(gamma_table(rho, us, vs))
    w = _chi_lattice_to_wigner(chi, us, vs, x_lattice, p_lattice)
    return w


def _chi_lattice_to_wigner(
    chi: np.ndarray,
    dp_values: np.ndarray,
    dx_values: np.ndarray,
    x_lattice: Lattice,
    p_lattice: Lattice,
) -> WignerGrid:
    """Shared inversion core: chi samples on a uniform lattice to a WignerGrid."""
    du = dp_values[1] - dp_values[0] if dp_values.size > 1 else 1.0
    dv = dx_values[1] - dx_values[0] if dx_values.size > 1 else 1.0
    k1 = np.exp(-1j * np.outer(dp_values, x_lattice.points))
    k2 = np.exp(-1j * np.outer(dx_values, p_lattice.points))
    acc = k1.T @ chi @ k2
    scale = du * dv / (4.0 * np.pi**2)
    values = acc.real * scale
    residue = float(np.abs(acc.imag).max() * scale)
    peak = float(np.abs(values).max()) if values.size else 0.0
    if peak > 0 and residue > 1e-10 * peak:
        logger.debug("imaginary residue %.3g of peak %.3g in phase-space sum", residue, peak)
    return WignerGrid(
        x_lattice=x_lattice,
        p_lattice=p_lattice,
        values=values,
        metadata={"imag_residue": residue},
    )


def position_density(rho: DensityMatrix) -> np.ndarray:
    """Diagonal of rho as a proper density over x (integrates to 1 with dx)."""
    return np.real(np.diag(rho.matrix)) / rho.grid.x_step


def momentum_density(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Momentum density on the sorted momentum lattice.

    Returns:
        Pair (p, density) with the density integrating to 1 against dp.
    """
    n = rho.grid.n_points
    f = np.fft.fft(np.eye(n), axis=0)        # f[k, j] = exp(-2 pi i k j / n)
    transformed = f @ rho.matrix @ f.conj().T
    diag = np.real(np.diag(transformed))
    dens = diag * rho.grid.x_step / (2.0 * np.pi)
    return rho.grid.p_sorted, np.fft.fftshift(dens)


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Squared Uhlmann fidelity, (tr sqrt(sqrt(a) b sqrt(a)))^2, in [0, 1]."""
    _as_grid_pair(a, b)
    w, v = np.linalg.eigh(a.matrix)
    sqrt_a = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_a @ b.matrix @ sqrt_a
    eigs = np.linalg.eigvalsh(inner)
    val = float(np.sum(np.sqrt(np.clip(eigs, 0.0, None))) ** 2)
    return min(max(val, 0.0), 1.0)


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2), 1 for pure states, 1/d for the maximally mixed state."""
    return float(np.real(np.sum(rho.matrix * rho.matrix.conj().T)))


def negativity_volume(w: WignerGrid) -> float:
    """Total weight of the negative region, sum of max(-W, 0) over cells."""
    return float(np.maximum(-w.values, 0.0).sum() * w.cell_area)


def state_moments(rho: DensityMatrix) -> dict:
    """Means and standard deviations of position and momentum."""
    x = rho.grid.x
    dens_x = position_density(rho) * rho.grid.x_step
    mx = float(np.sum(x * dens_x))
    sx = math.sqrt(max(float(np.sum((x - mx) ** 2 * dens_x)), 0.0))
    p, dens_p = momentum_density(rho)
    dp = p[1] - p[0]
    mp = float(np.sum(p * dens_p) * dp)
    sp = math.sqrt(max(float(np.sum((p - mp) ** 2 * dens_p) * dp), 0.0))
    return {"mean_x": mx, "std_x": sx, "mean_p": mp, "std_p": sp}


__all__ = [
    "BOUNDARY_DENSITY_RATIO",
    "CoherenceTable",
    "DensityMatrix",
    "GridSpec",
    "Lattice",
    "WavePacket",
    "WignerGrid",
    "chi_from_gamma",
    "chi_of_state",
    "density_from_pure",
    "evolve_free",
    "fidelity",
    "gamma_of_state",
    "gamma_table",
    "make_cat",
    "make_gaussian",
    "mix",
    "momentum_density",
    "negativity_volume",
    "position_density",
    "purity",
    "shift_columns",
    "state_moments",
    "translate",
    "wigner_of_state",
    "wrapped_diagonals",
]
