"""Coherence estimation from paired counts and direct phase-space inversion.

Each kick setting is measured twice, plain and with the auxiliary
quarter-period shift.  Writing z = exp(i dx p0) chi(dp, dx), the two
normalized intensities give Re z and -Im z respectively, so the pair
determines the symmetrized characteristic chi up to the aux shift's
quadratic bias.  Settings measured together with their point mirror
(-dp, -dx) are averaged through the conjugation identity
chi(-u, -v) = chi(u, v)*, which cancels the bias term linear in the shift;
mirrors that were not measured are synthesized outright from the identity,
doubling lattice coverage at no measurement cost.

The inversion itself is the plain discrete double sum

    W(x, p) = (du dv / 4 pi^2) sum_{u,v} chi(u, v) exp(-i u x - i v p)

evaluated directly on the requested output lattice.
"""

from __future__ import annotations

import numpy as np

from .apparatus import CountDataset
from .errors import DatasetError, NonUniformLatticeError
from .phasespace import (
    CoherenceTable,
    Lattice,
    WignerGrid,
    _chi_lattice_to_wigner,
    chi_from_gamma,
)


def pair_estimates(data: CountDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-kick characteristic estimates from plain/aux intensity pairs.

    Returns:
        Arrays (dp, dx, chi_hat), one entry per unique kick, sorted by
        (dp, dx).  chi_hat estimates the symmetrized characteristic
        function, with the beam phase exp(i dx p0) already removed.

    Raises:
        DatasetError: when any kick lacks its plain or aux partner, or an
            exposure is not positive.
    """
    sched = data.schedule
    plain: dict[tuple[float, float], float] = {}
    aux: dict[tuple[float, float], float] = {}
    for s, c in zip(sched.settings, data.counts):
        if not (s.exposure > 0):
            raise DatasetError(f"setting (dp={s.dp}, dx={s.dx}) has exposure {s.exposure}")
        target = aux if s.aux_phase else plain
        target[(s.dp, s.dx)] = c / s.exposure
    unmatched = set(plain) ^ set(aux)
    if unmatched:
        first = sorted(unmatched)[0]
        raise DatasetError(
            f"{len(unmatched)} kicks lack their plain/aux partner, first at "
            f"(dp={first[0]}, dx={first[1]})"
        )
    keys = sorted(plain)
    dp = np.array([k[0] for k in keys])
    dx = np.array([k[1] for k in keys])
    re_part = 2.0 * np.array([plain[k] for k in keys]) - 1.0
    im_part = 2.0 * np.array([aux[k] for k in keys]) - 1.0
    chi_hat = (re_part - 1j * im_part) * np.exp(-1j * dx * sched.p0)
    return dp, dx, chi_hat


def _merge_close(sorted_values: np.ndarray) -> np.ndarray:
    """Collapse clusters of values closer than 1e-9 of the overall scale."""
    scale = max(float(np.abs(sorted_values).max()), 1e-300)
    kept = [float(sorted_values[0])]
    for val in sorted_values[1:]:
        if float(val) - kept[-1] > 1e-9 * scale:
            kept.append(float(val))
    return np.asarray(kept)


def _locate(lattice: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Index of the nearest lattice entry for each value."""
    idx = np.clip(np.searchsorted(lattice, values), 1, lattice.size - 1)
    left = idx - 1
    use_left = np.abs(values - lattice[left]) <= np.abs(values - lattice[idx])
    return np.where(use_left, left, idx)


def _mirror_lattice(values: np.ndarray) -> np.ndarray:
    """Smallest exactly point-symmetric lattice containing the values.

    Floating-point kick lists (linspace output especially) are rarely
    bitwise negation-symmetric, so the union of values and negated values is
    cluster-merged and then antisymmetrized, making index reversal an exact
    point mirror.
    """
    merged = _merge_close(np.sort(np.concatenate([values, -values])))
    return 0.5 * (merged - merged[::-1])


def _symmetric_union(
    dp_values: np.ndarray,
    dx_values: np.ndarray,
    grid_values: np.ndarray,
    measured: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Extend chi samples to the point-symmetric lattice via conjugation.

    Cells measured together with their mirror are averaged with the mirror's
    conjugate, cancelling the estimator bias component that is odd under
    point reflection; cells with only one side take it directly; cells with
    neither stay zero.  Returns the full lattices, the filled table, and the
    coverage mask.
    """
    dp_full = _mirror_lattice(dp_values)
    dx_full = _mirror_lattice(dx_values)
    vals = np.zeros((dp_full.size, dx_full.size), dtype=complex)
    mask = np.zeros(vals.shape, dtype=bool)
    iu = _locate(dp_full, dp_values)
    iv = _locate(dx_full, dx_values)
    vals[np.ix_(iu, iv)] = grid_values
    mask[np.ix_(iu, iv)] = measured
    # exact set symmetry makes index reversal a point mirror
    mirror_vals = np.conj(vals[::-1, ::-1])
    mirror_mask = mask[::-1, ::-1]
    out = np.zeros_like(vals)
    both = mask & mirror_mask
    out[both] = 0.5 * (vals[both] + mirror_vals[both])
    only_direct = mask & ~mirror_mask
    out[only_direct] = vals[only_direct]
    only_mirror = mirror_mask & ~mask
    out[only_mirror] = mirror_vals[only_mirror]
    return dp_full, dx_full, out, mask | mirror_mask


def estimate_gamma(data: CountDataset) -> CoherenceTable:
    """Coherence table on the point-symmetric kick lattice from paired counts.

    The measured settings must form a full rectangular (dp, dx) lattice.
    Estimates with magnitude above 1 (possible under noise) are radially
    clipped; the raw table, the coverage mask, and the clip count are kept
    in the metadata.

    Raises:
        DatasetError: missing partners, non-rectangular settings, or
            non-positive exposures.
    """
    dp, dx, chi_hat = pair_estimates(data)
    us = np.unique(dp)
    vs = np.unique(dx)
    if us.size * vs.size != dp.size:
        raise DatasetError(
            f"settings do not form a rectangular kick lattice: {dp.size} kicks "
            f"over a {us.size} x {vs.size} value grid"
        )
    grid_vals = np.zeros((us.size, vs.size), dtype=complex)
    grid_vals[np.searchsorted(us, dp), np.searchsorted(vs, dx)] = chi_hat
    measured = np.ones(grid_vals.shape, dtype=bool)
    dp_full, dx_full, chi_sym, covered = _symmetric_union(us, vs, grid_vals, measured)
    gamma = chi_sym * np.exp(-0.5j * np.outer(dp_full, dx_full))
    mag = np.abs(gamma)
    over = mag > 1.0
    clipped = np.where(over, gamma / np.maximum(mag, 1e-300), gamma)
    return CoherenceTable(
        dp_values=dp_full,
        dx_values=dx_full,
        values=clipped,
        metadata={
            "p0": data.schedule.p0,
            "covered": covered,
            "clipped_count": int(over.sum()),
            "raw_gamma": gamma,
        },
    )


def _uniform_step(values: np.ndarray, label: str) -> float:
    if values.size < 2:
        raise NonUniformLatticeError(f"{label} lattice needs at least two points")
    steps = np.diff(values)
    step = float(steps.mean())
    if step <= 0 or not np.allclose(steps, step, rtol=1e-9, atol=abs(step) * 1e-9):
        raise NonUniformLatticeError(f"{label} values are not uniformly spaced")
    return step


def invert_wigner(
    gamma: CoherenceTable, x_lattice: Lattice, p_lattice: Lattice
) -> WignerGrid:
    """Discrete double-sum inversion of a coherence table to a Wigner grid.

    The table is first completed to the point-symmetric lattice through the
    conjugation identity (a no-op for tables that already carry both signs),
    then summed against the separable Fourier kernel with the uv/2 phase and
    the 1 / 4 pi^2 normalization.  The result records the resolution bounds
    1 / max|dp| and 1 / max|dx| implied by the kick coverage.

    Raises:
        NonUniformLatticeError: table lattices not uniform after extension.
    """
    chi = chi_from_gamma(gamma)
    measured = gamma.metadata.get("covered")
    if measured is None:
        measured = np.ones(chi.shape, dtype=bool)
    dp_full, dx_full, chi_sym, covered = _symmetric_union(
        gamma.dp_values, gamma.dx_values, chi, np.asarray(measured, dtype=bool)
    )
    _uniform_step(dp_full, "dp")
    _uniform_step(dx_full, "dx")
    chi_sym = np.where(covered, chi_sym, 0.0)
    out = _chi_lattice_to_wigner(chi_sym, dp_full, dx_full, x_lattice, p_lattice)
    out.metadata.update(
        {
            "x_resolution": 1.0 / float(np.abs(dp_full).max()),
            "p_resolution": 1.0 / float(np.abs(dx_full).max()),
            "covered_fraction": float(covered.mean()),
        }
    )
    return out


__all__ = ["estimate_gamma", "invert_wigner", "pair_estimates"]
