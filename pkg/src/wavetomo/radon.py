"""Tomographic route: quadrature characteristics, marginals, back-projection.

Each kick pair (dp, dx) samples the characteristic function of one rotated
quadrature: in scaled coordinates u' = dp / dp_scale, v' = dx / dx_scale the
displacement exp(i (dp x_hat + dx p_hat)) equals exp(i omega X_theta) with
theta = atan2(v', u') and omega = hypot(u', v'), and its expectation is the
symmetrized characteristic sample chi(dp, dx).  Grouping settings by angle
therefore yields one-dimensional characteristic functions, whose Fourier
inversion gives the quadrature densities (the shadows of the phase-space
distribution), and a standard ramp-filtered back-projection reassembles the
distribution itself.

The x/p scale factors make the angle dimensionless; they default to the
largest kick of each kind so the sampled angles spread over the full range,
and every product records the scales it used, since reconstruction quality
depends on this aspect-ratio choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import map_coordinates

from .apparatus import CountDataset, KickSetting, Schedule
from .errors import (
    NonUniformLatticeError,
    ReconstructionError,
    ScheduleError,
    ValidationError,
)
from .direct import pair_estimates
from .phasespace import Lattice, WignerGrid


def quadrature_angle(
    dp: float, dx: float, dp_scale: float = 1.0, dx_scale: float = 1.0
) -> tuple[float, float]:
    """Angle and radius of a kick pair in scaled phase-space polar form.

    The angle lands in [0, pi); kicks pointing into the lower half-plane are
    folded onto the opposite ray with a negative radius, which pairs with the
    conjugation identity for characteristic samples.  The zero kick returns
    (0, 0) by convention.
    """
    u = dp / dp_scale
    v = dx / dx_scale
    if u == 0.0 and v == 0.0:
        return 0.0, 0.0
    theta = math.atan2(v, u)
    omega = math.hypot(u, v)
    if theta < 0.0:
        theta += math.pi
        omega = -omega
    elif theta == math.pi:
        theta = 0.0
        omega = -omega
    return theta, omega


@dataclass(frozen=True)
class QuadratureSamples:
    """Characteristic samples C(omega) of one quadrature direction.

    The omega lattice is nonnegative and strictly ascending, starting at the
    exact C(0) = 1 anchor; negative-radius samples are folded in by
    conjugation before construction.
    """

    theta: float
    omega: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        om = np.asarray(self.omega, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if om.ndim != 1 or om.shape != vals.shape:
            raise ValidationError("omega and values must be matching 1-D arrays")
        if om.size == 0:
            raise ValidationError("quadrature sample set is empty")
        if (om < 0).any() or (np.diff(om) <= 0).any():
            raise ValidationError("omega must be nonnegative and strictly ascending")
        if om[0] != 0.0:
            raise ValidationError("omega lattice must start at the zero anchor")
        if not (0.0 <= self.theta < math.pi + 1e-12):
            raise ValidationError(f"theta {self.theta} outside [0, pi)")
        # generous bound: Poisson noise can push |C| past 1, junk goes further
        peak = float(np.abs(vals).max())
        if peak > 1.25:
            raise ValidationError(f"characteristic magnitude {peak:.3g} is far above 1")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "values", vals)


def _default_scales(settings: Sequence[KickSetting]) -> tuple[float, float]:
    su = max((abs(s.dp) for s in settings), default=0.0)
    sv = max((abs(s.dx) for s in settings), default=0.0)
    return (su if su > 0 else 1.0, sv if sv > 0 else 1.0)


def group_by_angle(
    data: CountDataset,
    n_bins: int,
    dp_scale: float | None = None,
    dx_scale: float | None = None,
) -> list[QuadratureSamples]:
    """Bin paired characteristic estimates into quadrature rays.

    Bin centers sit at (k + 1/2) pi / n_bins; each kick goes to the nearest
    center, with exact boundary ties resolved toward the lower bin.  Within a
    bin, samples are folded to nonnegative radius by conjugation, duplicates
    are averaged (point mirrors meet here, cancelling the aux-shift bias the
    same way the direct estimator does), and the exact anchor C(0) = 1 is
    prepended.  Bins that received no data are returned with just the anchor
    and an ``empty`` metadata flag.
    """
    if n_bins < 1:
        raise ValidationError(f"need at least one angle bin, got {n_bins}")
    su, sv = _default_scales(data.schedule.settings)
    if dp_scale is not None:
        su = float(dp_scale)
    if dx_scale is not None:
        sv = float(dx_scale)
    dp, dx, chi_hat = pair_estimates(data)
    width = math.pi / n_bins
    buckets: list[list[tuple[float, complex]]] = [[] for _ in range(n_bins)]
    for u, v, c in zip(dp, dx, chi_hat):
        if u == 0.0 and v == 0.0:
            continue
        theta, omega = quadrature_angle(u, v, su, sv)
        pos = theta / width
        idx = int(math.floor(pos))
        if pos == idx and idx > 0:
            idx -= 1
        idx = min(idx, n_bins - 1)
        if omega < 0.0:
            omega, c = -omega, np.conj(c)
        buckets[idx].append((omega, complex(c)))
    out: list[QuadratureSamples] = []
    for k, bucket in enumerate(buckets):
        center = (k + 0.5) * width
        meta = {"dp_scale": su, "dx_scale": sv, "n_raw": len(bucket)}
        if not bucket:
            meta["empty"] = True
            out.append(
                QuadratureSamples(
                    theta=center, omega=np.array([0.0]), values=np.array([1.0 + 0j]),
                    metadata=meta,
                )
            )
            continue
        bucket.sort(key=lambda item: item[0])
        omegas: list[float] = [0.0]
        values: list[complex] = [1.0 + 0j]
        i = 0
        while i < len(bucket):
            om = bucket[i][0]
            j = i
            acc = 0.0 + 0j
            while j < len(bucket) and bucket[j][0] - om <= 1e-9 * max(1.0, om):
                acc += bucket[j][1]
                j += 1
            if om <= 1e-12:
                # measured zero kick duplicates the exact anchor; keep the anchor
                i = j
                continue
            omegas.append(om)
            values.append(acc / (j - i))
            i = j
        out.append(
            QuadratureSamples(
                theta=center, omega=np.array(omegas), values=np.array(values), metadata=meta
            )
        )
    return out


def resample_uniform(q: QuadratureSamples, n_omega: int) -> QuadratureSamples:
    """Shape-preserving resampling of C(omega) onto a uniform radius lattice.

    Monotone piecewise-cubic interpolation of the real and imaginary parts
    separately; it neither overshoots between scattered samples nor rings
    across the near-axis sampling holes that Cartesian kick grids leave at
    small radius.
    """
    if n_omega < 2:
        raise ValidationError(f"need at least two resample points, got {n_omega}")
    if q.omega.size < 2:
        raise ValidationError("cannot resample a single-point characteristic")
    target = np.linspace(0.0, float(q.omega[-1]), n_omega)
    re = PchipInterpolator(q.omega, q.values.real)(target)
    im = PchipInterpolator(q.omega, q.values.imag)(target)
    meta = dict(q.metadata)
    meta["resampled_from"] = int(q.omega.size)
    return QuadratureSamples(theta=q.theta, omega=target, values=re + 1j * im, metadata=meta)


@dataclass(frozen=True)
class Marginal:
    """Quadrature density at one angle, with its pre-cleanup version kept."""

    theta: float
    t: np.ndarray
    density: np.ndarray
    raw_density: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        raw = np.asarray(self.raw_density, dtype=float)
        if not (t.shape == dens.shape == raw.shape) or t.ndim != 1:
            raise ValidationError("t, density and raw_density must be matching 1-D arrays")
        step = float(t[1] - t[0]) if t.size > 1 else 1.0
        mass = float(dens.sum() * step)
        if abs(mass - 1.0) > 1e-3:
            raise ValidationError(f"marginal density integrates to {mass!r}, expected 1")
        if (dens < 0).any():
            raise ValidationError("cleaned marginal density must be nonnegative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "raw_density", raw)


def marginal_from_characteristic(
    q: QuadratureSamples, t_lattice: Lattice | None = None
) -> Marginal:
    """Quadrature density from its characteristic samples by cosine series.

    Uses the conjugate-symmetric extension C(-omega) = C(omega)*, so the
    density is the real series (d_omega / pi) [1/2 + sum_k Re{C_k
    exp(-i omega_k t)}].  The default t lattice spans exactly one alias
    period 2 pi / d_omega with eight points per radius sample, on which the
    raw series integrates to 1 identically.  Negative ripples are clipped
    and the density renormalized; the raw series is kept alongside.

    Raises:
        NonUniformLatticeError: radius samples not uniformly spaced.
    """
    om = q.omega
    if om.size == 1:
        d_omega = 1.0  # zero-information limit: flat density over one period
    else:
        steps = np.diff(om)
        d_omega = float(steps.mean())
        if not np.allclose(steps, d_omega, rtol=1e-9, atol=d_omega * 1e-9):
            raise NonUniformLatticeError("omega lattice is not uniform; resample first")
    if t_lattice is None:
        period = 2.0 * math.pi / d_omega
        count = 8 * om.size
        t_lattice = Lattice(center=0.0, step=period / count, count=count)
    t = t_lattice.points
    series = np.full(t.size, 0.5 * float(q.values[0].real))
    if om.size > 1:
        series = series + (np.cos(np.outer(t, om[1:])) @ q.values[1:].real
                           + np.sin(np.outer(t, om[1:])) @ q.values[1:].imag)
    raw = series * (d_omega / math.pi)
    clipped = np.maximum(raw, 0.0)
    mass = float(clipped.sum() * t_lattice.step)
    if mass <= 0:
        raise ReconstructionError("marginal cleanup removed all density")
    dens = clipped / mass
    meta = dict(q.metadata)
    meta.update(
        {
            "raw_mass": float(raw.sum() * t_lattice.step),
            "clipped_fraction": float(np.maximum(-raw, 0.0).sum() * t_lattice.step),
        }
    )
    return Marginal(theta=q.theta, t=t, density=dens, raw_density=raw, metadata=meta)


def make_ray_schedule(
    theta_values: Sequence[float],
    omega_values: Sequence[float],
    dp_scale: float,
    dx_scale: float,
    exposure: float = 1.0,
    with_aux: bool = False,
    p0: float = 0.0,
) -> Schedule:
    """Schedule sampling given angles at given radii, the tomographic pattern.

    The inverse of quadrature_angle: each (theta, omega) becomes the kick
    (omega cos(theta) dp_scale, omega sin(theta) dx_scale).  Zero radii are
    skipped, every ray gets the exact anchor for free.  This is the pattern
    a hardware sweep of B at a handful of fixed L values produces.
    """
    thetas = list(theta_values)
    omegas = [w for w in omega_values if w != 0.0]
    if not thetas or not omegas:
        raise ScheduleError("need at least one angle and one nonzero radius")
    if with_aux and not (p0 > 0):
        raise ScheduleError("auxiliary pairs need p0 > 0 to define the shift pi/(2 p0)")
    aux_shift = math.pi / (2.0 * p0) if with_aux else 0.0
    settings = [
        KickSetting(
            dp=float(w * math.cos(th) * dp_scale),
            dx=float(w * math.sin(th) * dx_scale),
            aux_phase=False,
            exposure=exposure,
        )
        for th in thetas
        for w in omegas
    ]
    if with_aux:
        settings += [
            KickSetting(dp=s.dp, dx=s.dx, aux_phase=True, exposure=exposure) for s in settings
        ]
    meta = {
        "rays": len(thetas),
        "radii": len(omegas),
        "dp_scale": float(dp_scale),
        "dx_scale": float(dx_scale),
        "with_aux": with_aux,
    }
    return Schedule(settings=tuple(settings), p0=p0, aux_shift=aux_shift, metadata=meta)


def wigner_projection(
    w: WignerGrid,
    theta: float,
    t_values: np.ndarray,
    dp_scale: float = 1.0,
    dx_scale: float = 1.0,
) -> np.ndarray:
    """Line integrals of a Wigner grid along one scaled direction.

    Integrates W over the coordinate perpendicular to the unit vector at
    ``theta`` in the scaled frame (x * dp_scale, p * dx_scale), using cubic
    interpolation on the grid.  The continuous-Radon consistency check: this
    should match the quadrature density of the same state.
    """
    xs = w.x_lattice.points * dp_scale
    ps = w.p_lattice.points * dx_scale
    span = math.hypot(xs[-1] - xs[0], ps[-1] - ps[0])
    n_s = 2 * max(w.x_lattice.count, w.p_lattice.count)
    s = np.linspace(-span / 2.0, span / 2.0, n_s)
    ct, st = math.cos(theta), math.sin(theta)
    t_values = np.asarray(t_values, dtype=float)
    x_q = t_values[:, None] * ct - s[None, :] * st
    p_q = t_values[:, None] * st + s[None, :] * ct
    ix = (x_q - xs[0]) / (xs[1] - xs[0])
    ip = (p_q - ps[0]) / (ps[1] - ps[0])
    vals = map_coordinates(
        w.values / (dp_scale * dx_scale),
        np.stack([ix.ravel(), ip.ravel()]),
        order=3,
        mode="constant",
        cval=0.0,
    ).reshape(x_q.shape)
    return vals.sum(axis=1) * (s[1] - s[0])


def filtered_backprojection(
    marginals: Sequence[Marginal],
    x_lattice: Lattice,
    p_lattice: Lattice,
    dp_scale: float = 1.0,
    dx_scale: float = 1.0,
    use_raw: bool = True,
) -> WignerGrid:
    """Ramp-filtered back-projection of quadrature densities to a Wigner grid.

    Each marginal is Fourier transformed on its own t lattice, multiplied by
    the ramp |omega| apodized with a Hann window rolling off at the lattice
    Nyquist rate, and evaluated back on the output points by direct sums
    (no gridding interpolation).  Angles are weighted by their cyclic gaps
    over the half-turn, so non-uniform angle sets remain consistent.  The
    scale factors convert the scaled-frame reconstruction back to natural
    units.  By default the signed raw densities are back-projected, since
    clipping biases exactly the negative structures of interest.

    Raises:
        ReconstructionError: fewer than 8 distinct informative angles.
    """
    used = [m for m in marginals if not m.metadata.get("empty")]
    angles = sorted({float(m.theta) for m in used})
    if len(angles) < 8:
        raise ReconstructionError(
            f"back-projection needs at least 8 distinct angles, got {len(angles)}"
        )
    order = np.argsort([m.theta for m in used])
    gaps = np.diff([used[i].theta for i in order])
    wrap = used[order[0]].theta + math.pi - used[order[-1]].theta
    all_gaps = np.concatenate([[wrap], gaps, [wrap]])
    weights = 0.5 * (all_gaps[:-1] + all_gaps[1:])
    x_scaled = x_lattice.points * dp_scale
    p_scaled = p_lattice.points * dx_scale
    acc = np.zeros((x_lattice.count, p_lattice.count))
    for rank, i in enumerate(order):
        m = used[i]
        t = m.t
        dt = t[1] - t[0]
        dens = m.raw_density if use_raw else m.density
        n_pad = 2 * t.size
        om = 2.0 * np.pi * np.fft.fftfreq(n_pad, d=dt)
        spectrum = np.exp(1j * np.outer(om, t)) @ dens * dt
        nyquist = math.pi / dt
        window = 0.5 * (1.0 + np.cos(math.pi * om / nyquist))
        filt = spectrum * np.abs(om) * window
        t_query = x_scaled[:, None] * math.cos(m.theta) + p_scaled[None, :] * math.sin(m.theta)
        d_om = 2.0 * math.pi / (n_pad * dt)
        back = np.real(np.exp(-1j * t_query[..., None] * om) @ filt) * d_om
        acc += weights[rank] * back
    values = acc / (4.0 * math.pi**2) * (dp_scale * dx_scale)
    return WignerGrid(
        x_lattice=x_lattice,
        p_lattice=p_lattice,
        values=values,
        metadata={
            "window": "hann",
            "dp_scale": float(dp_scale),
            "dx_scale": float(dx_scale),
            "n_angles": len(angles),
            "angles": angles,
            "backprojected": "raw" if use_raw else "cleaned",
        },
    )


__all__ = [
    "Marginal",
    "QuadratureSamples",
    "filtered_backprojection",
    "group_by_angle",
    "make_ray_schedule",
    "marginal_from_characteristic",
    "quadrature_angle",
    "resample_uniform",
    "wigner_projection",
]
