"""Maximum-likelihood state reconstruction from raw counts.

Fits a density matrix to Poisson count data by minimizing the
Kullback-Leibler divergence between measured frequencies and renormalized
model probabilities.  The estimate is the fixed point of the diluted
iteration

    rho  <-  N[(1 - lam) rho + lam N[R~ rho R~]],
    R~   =   G^(-1/2) R G^(-1/2),
    R    =   sum_j (f_j / P_j) Pi_j,

where f_j are normalized counts, P_j = tr{Pi_j rho}, and
G = sum_j E_j Pi_j is the exposure-weighted operator sum of the POVM.  The
detection operators do not resolve the identity here, so the G gauge is what
makes the true state a fixed point at exact frequencies; dilution (lam < 1)
keeps the likelihood climbing when full steps overshoot, and the step is
halved automatically whenever a proposal would decrease it.  Every iterate
is Hermitian, unit-trace and positive by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .apparatus import CountDataset, _ForwardModel
from .errors import ConfigError, ReconstructionError
from .phasespace import DensityMatrix, GridSpec, Lattice, WignerGrid, wigner_of_state

_LL_SLACK = 1e-12
_MIN_DILUTION = 1e-8


@dataclass(frozen=True)
class MLConfig:
    """Reconstruction controls.

    Attributes:
        dim: truncation dimension; None keeps the forward grid, otherwise it
            must divide the grid size by a power of two (the grid is
            decimated, halving momentum coverage per step).
        dilution: step fraction lam in (0, 1] for the diluted iteration.
        max_iter: iteration cap.
        tol: relative log-likelihood change declaring convergence.
        consecutive: how many consecutive sub-tol changes are required.
        init: "maximally-mixed" or "supplied".
        init_state: starting state for init="supplied".
        track_spectrum: record the full eigenvalue spectrum of every iterate.
    """

    dim: int | None = None
    dilution: float = 0.5
    max_iter: int = 2000
    tol: float = 1e-9
    consecutive: int = 5
    init: str = "maximally-mixed"
    init_state: DensityMatrix | None = None
    track_spectrum: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.dilution <= 1.0):
            raise ConfigError(f"dilution must lie in (0, 1], got {self.dilution}")
        if not (self.tol > 0):
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.consecutive < 1:
            raise ConfigError(f"consecutive must be at least 1, got {self.consecutive}")
        if self.dim is not None and self.dim < 2:
            raise ConfigError(f"dim must be at least 2, got {self.dim}")
        if self.init not in ("maximally-mixed", "supplied"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.init == "supplied" and self.init_state is None:
            raise ConfigError("init='supplied' needs init_state")


@dataclass(frozen=True)
class MLReport:
    """Everything a reconstruction run produced, fit and diagnostics alike."""

    state: DensityMatrix
    log_likelihood: np.ndarray
    iterations: int
    converged: bool
    kl_divergence: float
    diagnostics: dict = field(default_factory=dict)


def _truncated_grid(grid: GridSpec, dim: int | None) -> GridSpec:
    if dim is None or dim == grid.n_points:
        return grid
    if dim > grid.n_points or grid.n_points % dim != 0:
        raise ConfigError(f"dim {dim} does not divide the grid size {grid.n_points}")
    factor = grid.n_points // dim
    if factor & (factor - 1) != 0:
        raise ConfigError(f"decimation factor {factor} is not a power of two")
    return GridSpec(n_points=dim, x_extent=grid.x_extent)


def _frequencies(data: CountDataset) -> np.ndarray:
    total = float(data.counts.sum())
    if total <= 0:
        raise ReconstructionError("dataset has no counts")
    return data.counts / total


def _normalized_model(model: _ForwardModel, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    probs = model.probabilities(rho)
    scaled = model.exposures * probs
    total = float(scaled.sum())
    if total <= 0:
        raise ReconstructionError("model probabilities vanished on every setting")
    return probs, scaled / total


def kl_divergence(rho: DensityMatrix, data: CountDataset) -> float:
    """Relative entropy of measured frequencies from renormalized model ones.

    Both distributions weight each setting by its exposure; at uniform
    exposure this is the plain frequency-vs-probability divergence.  Zero by
    Gibbs' inequality exactly when data frequencies match the model.

    Raises:
        ReconstructionError: a setting with counts has zero model
            probability (truncation too aggressive for the data).
    """
    freq = _frequencies(data)
    model = _ForwardModel(rho.grid, data.schedule)
    _, ptilde = _normalized_model(model, rho.matrix)
    support = freq > 0
    if np.any(ptilde[support] <= 0):
        raise ReconstructionError("model assigns zero probability to a measured setting")
    return float(np.sum(freq[support] * np.log(freq[support] / ptilde[support])))


def _log_likelihood(freq: np.ndarray, ptilde: np.ndarray) -> float:
    support = freq > 0
    if np.any(ptilde[support] <= 0):
        raise ReconstructionError("model assigns zero probability to a measured setting")
    return float(np.sum(freq[support] * np.log(ptilde[support])))


def ml_reconstruct(data: CountDataset, cfg: MLConfig, grid: GridSpec) -> MLReport:
    """Run the diluted fixed-point iteration on one dataset.

    Convergence is declared after ``cfg.consecutive`` successive relative
    log-likelihood changes below ``cfg.tol``.  A proposal that lowers the
    likelihood is retried with half the dilution; if the step shrinks below
    the floor without improving, the run stops with converged=False and the
    reason in the diagnostics (never an exception: the best iterate so far
    is still returned).
    """
    basis = _truncated_grid(grid, cfg.dim)
    model = _ForwardModel(basis, data.schedule)
    freq = _frequencies(data)
    d = basis.n_points

    gauge = model.weighted_sum(model.exposures)
    vals, vecs = np.linalg.eigh(gauge)
    if vals.min() <= 1e-12 * vals.max():
        raise ReconstructionError("exposure-weighted POVM sum is singular on this basis")
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T

    if cfg.init == "supplied":
        if cfg.init_state.grid.n_points != d:
            raise ConfigError(
                f"init_state dimension {cfg.init_state.grid.n_points} does not match basis {d}"
            )
        rho = cfg.init_state.matrix.copy()
    else:
        rho = np.eye(d, dtype=complex) / d

    probs, ptilde = _normalized_model(model, rho)
    ll = _log_likelihood(freq, ptilde)
    trace: list[float] = [ll]
    spectra: list[np.ndarray] = []
    if cfg.track_spectrum:
        spectra.append(np.linalg.eigvalsh(rho))

    converged = False
    quiet = 0
    diagnostics: dict = {}
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        # R rebuilt from the current iterate; the gauge stays fixed
        weights = np.where(probs > 0, freq / np.maximum(probs, 1e-300), 0.0)
        r_tilde = inv_sqrt @ model.weighted_sum(weights) @ inv_sqrt
        step = r_tilde @ rho @ r_tilde
        step = step / np.real(np.trace(step))

        lam = cfg.dilution
        accepted = False
        while lam >= _MIN_DILUTION:
            candidate = (1.0 - lam) * rho + lam * step
            candidate = 0.5 * (candidate + candidate.conj().T)
            candidate /= np.real(np.trace(candidate))
            cand_probs, cand_ptilde = _normalized_model(model, candidate)
            cand_ll = _log_likelihood(freq, cand_ptilde)
            if cand_ll >= ll - _LL_SLACK:
                rho, probs, ll = candidate, cand_probs, cand_ll
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            diagnostics["aborted"] = (
                f"likelihood would decrease at iteration {iterations} even at "
                f"dilution {lam * 2:.3g}"
            )
            iterations -= 1
            break
        trace.append(ll)
        if cfg.track_spectrum:
            spectra.append(np.linalg.eigvalsh(rho))
        rel_change = abs(trace[-1] - trace[-2]) / max(abs(trace[-2]), 1e-300)
        quiet = quiet + 1 if rel_change < cfg.tol else 0
        if quiet >= cfg.consecutive:
            converged = True
            break

    state = DensityMatrix(grid=basis, matrix=rho)
    if cfg.track_spectrum:
        # row i = eigenvalues of iterate i; PSD and trace checks read off rows
        diagnostics["spectra"] = np.array(spectra)
    diagnostics["decimation"] = grid.n_points // d
    final_kl = kl_divergence(state, data)
    return MLReport(
        state=state,
        log_likelihood=np.array(trace),
        iterations=iterations,
        converged=converged,
        kl_divergence=final_kl,
        diagnostics=diagnostics,
    )


def wigner_of_ml(report: MLReport, x_lattice: Lattice, p_lattice: Lattice) -> WignerGrid:
    """Phase-space density of the fitted state on the requested lattice."""
    return wigner_of_state(report.state, x_lattice, p_lattice)


__all__ = ["MLConfig", "MLReport", "kl_divergence", "ml_reconstruct", "wigner_of_ml"]
