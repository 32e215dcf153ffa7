"""Serialization: dataset text files, grid CSVs, graymap images, run configs.

All formats are line-oriented UTF-8 with '.' decimal radix and floats written
with repr (shortest round-trip decimal), so identical inputs produce
byte-identical files and reading recovers the exact binary values.  Dataset
records are kept in the canonical order sorted by (dp, dx, aux) on both write
and read, making file equality insensitive to schedule ordering.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .apparatus import CountDataset, KickSetting, PhysicalConfig, Schedule
from .errors import ConfigError, DataFormatError
from .phasespace import Lattice, WignerGrid

DATASET_MAGIC = "# wavetomo dataset v1"
WIGNER_MAGIC = "# wavetomo wigner v1"


# ---------------------------------------------------------------------------
# dataset text format
# ---------------------------------------------------------------------------

def _canonical_records(data: CountDataset) -> list[tuple[KickSetting, float]]:
    pairs = list(zip(data.schedule.settings, data.counts))
    pairs.sort(key=lambda item: (item[0].dp, item[0].dx, item[0].aux_phase))
    return pairs


def write_dataset(data: CountDataset, path: str | Path) -> None:
    """Write counts plus the schedule they belong to as a text file.

    Header comments carry the beam constants and provenance; one record per
    line with columns dp dx aux exposure counts (kicks in natural units, aux
    as 0/1).  A sha256 footer over the record lines guards against
    truncation or editing.
    """
    records = [
        f"{float(s.dp)!r} {float(s.dx)!r} {int(s.aux_phase)} {float(s.exposure)!r} {float(c)!r}"
        for s, c in _canonical_records(data)
    ]
    body = "\n".join(records)
    digest = hashlib.sha256(body.encode()).hexdigest()
    seed = data.provenance.get("seed")
    scale_x = data.schedule.metadata.get("scale_x")
    lines = [
        DATASET_MAGIC,
        f"# p0: {float(data.schedule.p0)!r}",
        f"# aux_shift: {float(data.schedule.aux_shift)!r}",
        f"# scale_x: {'none' if scale_x is None else repr(float(scale_x))}",
        f"# seed: {'none' if seed is None else int(seed)}",
        "# columns: dp dx aux exposure counts",
        body,
        f"# sha256: {digest}",
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8", newline="\n")


def read_dataset(path: str | Path) -> CountDataset:
    """Parse a dataset file back into schedule-aligned counts.

    Records are canonically re-sorted, so files with shuffled lines load to
    equal datasets.  An optional sha256 footer is verified when present.

    Raises:
        DataFormatError: malformed line (with its number), bad header, or
            checksum mismatch.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != DATASET_MAGIC:
        raise DataFormatError(f"{path}: missing dataset header line {DATASET_MAGIC!r}")
    headers: dict[str, str] = {}
    records: list[tuple[float, float, bool, float, float]] = []
    record_lines: list[str] = []
    checksum: str | None = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            content = line[1:].strip()
            if ":" in content:
                key, _, value = content.partition(":")
                key = key.strip().lower()
                if key == "sha256":
                    checksum = value.strip()
                elif key:
                    headers[key] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 5:
            raise DataFormatError(f"{path}:{lineno}: expected 5 columns, found {len(parts)}")
        try:
            dp, dx = float(parts[0]), float(parts[1])
            aux = bool(int(parts[2]))
            exposure, counts = float(parts[3]), float(parts[4])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        records.append((dp, dx, aux, exposure, counts))
        record_lines.append(line)
    if checksum is not None:
        digest = hashlib.sha256("\n".join(record_lines).encode()).hexdigest()
        if digest != checksum:
            raise DataFormatError(f"{path}: sha256 footer does not match the records")
    if not records:
        raise DataFormatError(f"{path}: no data records")
    records.sort(key=lambda t: (t[0], t[1], t[2]))

    def parse_float(key: str, default: float) -> float:
        value = headers.get(key)
        if value is None or value.lower() == "none":
            return default
        try:
            return float(value)
        except ValueError as exc:
            raise DataFormatError(f"{path}: bad header {key}: {value!r}") from exc

    p0 = parse_float("p0", 0.0)
    aux_shift = parse_float("aux_shift", 0.0)
    metadata: dict = {"source": str(path)}
    scale_header = headers.get("scale_x", "none")
    if scale_header.lower() != "none":
        metadata["scale_x"] = float(scale_header)
    settings = tuple(
        KickSetting(dp=rec[0], dx=rec[1], aux_phase=rec[2], exposure=rec[3]) for rec in records
    )
    schedule = Schedule(settings=settings, p0=p0, aux_shift=aux_shift, metadata=metadata)
    provenance: dict = {"source": str(path)}
    seed_header = headers.get("seed", "none")
    if seed_header.lower() != "none":
        provenance["seed"] = int(seed_header)
    counts = np.array([rec[4] for rec in records])
    return CountDataset(schedule=schedule, counts=counts, provenance=provenance)


# ---------------------------------------------------------------------------
# Wigner grid CSV and image
# ---------------------------------------------------------------------------

def write_wigner_csv(w: WignerGrid, path: str | Path) -> None:
    """One x,p,value row per cell, with exact lattice parameters up front."""
    out = [
        WIGNER_MAGIC,
        f"# x_lattice: {float(w.x_lattice.center)!r} {float(w.x_lattice.step)!r} {w.x_lattice.count}",
        f"# p_lattice: {float(w.p_lattice.center)!r} {float(w.p_lattice.step)!r} {w.p_lattice.count}",
        "x,p,value",
    ]
    xs = w.x_lattice.points
    ps = w.p_lattice.points
    for i, x in enumerate(xs):
        for j, p in enumerate(ps):
            # plain Python floats: numpy scalar repr is not parseable text
            out.append(f"{float(x)!r},{float(p)!r},{float(w.values[i, j])!r}")
    out.append("")
    Path(path).write_text("\n".join(out), encoding="utf-8", newline="\n")


def read_wigner_csv(path: str | Path) -> WignerGrid:
    """Rebuild a WignerGrid from its CSV, using the exact header lattices."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != WIGNER_MAGIC:
        raise DataFormatError(f"{path}: missing grid header line {WIGNER_MAGIC!r}")
    lattices: dict[str, Lattice] = {}
    values: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line == "x,p,value":
            continue
        if line.startswith("#"):
            content = line[1:].strip()
            key, _, spec = content.partition(":")
            key = key.strip()
            if key in ("x_lattice", "p_lattice"):
                try:
                    center, step, count = spec.split()
                    lattices[key] = Lattice(
                        center=float(center), step=float(step), count=int(count)
                    )
                except ValueError as exc:
                    raise DataFormatError(f"{path}:{lineno}: bad lattice header") from exc
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{lineno}: expected 3 columns, found {len(parts)}")
        try:
            values.append(float(parts[2]))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    if "x_lattice" not in lattices or "p_lattice" not in lattices:
        raise DataFormatError(f"{path}: lattice headers missing")
    xl, pl = lattices["x_lattice"], lattices["p_lattice"]
    if len(values) != xl.count * pl.count:
        raise DataFormatError(
            f"{path}: {len(values)} rows for a {xl.count} x {pl.count} lattice"
        )
    grid_values = np.array(values).reshape(xl.count, pl.count)
    return WignerGrid(x_lattice=xl, p_lattice=pl, values=grid_values)


def write_pgm(w: WignerGrid, path: str | Path) -> None:
    """8-bit graymap of a Wigner grid, symmetric about mid-gray zero.

    Gray 128 is zero, 255 is +max|W|, 1 is -max|W|; an all-zero grid comes
    out uniformly mid-gray.  Rows run from the highest momentum down, columns
    along increasing position.
    """
    peak = float(np.abs(w.values).max())
    if peak == 0.0:
        pixels = np.full((w.p_lattice.count, w.x_lattice.count), 128, dtype=np.uint8)
    else:
        scaled = np.rint(128.0 + 127.0 * w.values / peak)
        pixels = np.clip(scaled, 0, 255).astype(np.uint8).T[::-1, :]
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + pixels.tobytes())


def write_metrics(metrics: dict, path: str | Path) -> None:
    """Deterministic JSON dump: sorted keys, two-space indent, final newline."""
    Path(path).write_text(
        json.dumps(metrics, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated contents of an experiment configuration document.

    The schedule is either hardware mode (b_values in tesla with l_values in
    meters, converted through the physical constants) or natural mode
    (dp_values and dx_values already in natural units); exactly one pair may
    be given, and natural-mode aux pairs need an explicit beam momentum p0.
    """

    physical: PhysicalConfig = PhysicalConfig()
    family: str = "gaussian"
    l_coh: float = 1.0
    x_center: float = 0.0
    p_center: float = 0.0
    tau: float = 0.0
    separation: float = 0.0
    grid_points: int = 128
    grid_extent: float = 24.0
    b_values: tuple[float, ...] = ()
    l_values: tuple[float, ...] = ()
    dp_values: tuple[float, ...] = ()
    dx_values: tuple[float, ...] = ()
    exposure: float = 1e4
    with_aux: bool = True
    p0: float = 50.0
    seed: int = 1
    noiseless: bool = False
    method: str = "direct"
    n_bins: int = 32
    n_resample: int = 40
    ml_dim: int | None = None
    ml_dilution: float = 0.5
    ml_max_iter: int = 2000
    ml_tol: float = 1e-9
    out_x: tuple[float, float, int] | None = None
    out_p: tuple[float, float, int] | None = None
    dataset_path: str | None = None
    wigner_csv_path: str | None = None
    image_path: str | None = None
    metrics_path: str | None = None

    @property
    def mode(self) -> str:
        return "hardware" if self.b_values else "natural"


_DEFAULT_DP = tuple(np.linspace(-4.0, 4.0, 25))
_DEFAULT_DX = tuple(np.linspace(-8.0, 8.0, 25))


def _parse_values(text: str) -> tuple[float, ...]:
    text = text.strip()
    if text.startswith("linspace:"):
        try:
            _, start, stop, count = text.split(":")
            return tuple(np.linspace(float(start), float(stop), int(count)))
        except ValueError as exc:
            raise ValueError(f"bad linspace spec {text!r}") from exc
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    if not parts:
        raise ValueError("empty value list")
    return tuple(float(p) for p in parts)


def _parse_lattice_triplet(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected center:step:count, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse and validate an INI-style run configuration.

    Overrides are "section.key=value" strings applied on top of the document
    (the command-line flags route).  All validation problems are gathered
    and reported together in one error.

    Raises:
        ConfigError: syntax errors, unknown keys, or any failed validation,
            all collected into the message.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    for item in overrides or []:
        target, _, value = item.partition("=")
        section, _, key = target.partition(".")
        if not (section and key and _):
            raise ConfigError(f"override {item!r} is not section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), key.strip(), value.strip())

    errors: list[str] = []

    def take(section: str, key: str, convert, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return convert(raw)
        except (ValueError, TypeError) as exc:
            errors.append(f"{section}.{key}: {exc}")
            return default

    def boolean(raw: str) -> bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")

    known = {
        "physical": {"wavelength_nm", "mass_kg", "moment_jt", "scale_x_m"},
        "state": {
            "family", "l_coh", "x_center", "p_center", "tau", "separation",
            "grid_points", "grid_extent",
        },
        "schedule": {
            "b_values", "l_values", "dp_values", "dx_values", "exposure",
            "with_aux", "p0", "seed", "noiseless",
        },
        "method": {
            "name", "n_bins", "n_resample", "ml_dim", "ml_dilution",
            "ml_max_iter", "ml_tol",
        },
        "output": {"x", "p", "dataset", "wigner_csv", "image", "metrics"},
    }
    for section in parser.sections():
        if section not in known:
            errors.append(f"{section}: unknown section")
            continue
        for key in parser.options(section):
            if key not in known[section]:
                errors.append(f"{section}.{key}: unknown key")

    wavelength_nm = take("physical", "wavelength_nm", float, 0.37)
    mass = take("physical", "mass_kg", float, None)
    moment = take("physical", "moment_jt", float, None)
    scale_x = take("physical", "scale_x_m", float, 1e-6)
    phys_kwargs = {"wavelength": wavelength_nm * 1e-9, "scale_x": scale_x}
    if mass is not None:
        phys_kwargs["mass"] = mass
    if moment is not None:
        phys_kwargs["moment"] = moment
    try:
        physical = PhysicalConfig(**phys_kwargs)
    except Exception as exc:
        errors.append(f"physical: {exc}")
        physical = PhysicalConfig()

    family = take("state", "family", str.strip, "gaussian")
    l_coh = take("state", "l_coh", float, 1.0)
    x_center = take("state", "x_center", float, 0.0)
    p_center = take("state", "p_center", float, 0.0)
    tau = take("state", "tau", float, 0.0)
    separation = take("state", "separation", float, 0.0)
    grid_points = take("state", "grid_points", int, 128)
    grid_extent = take("state", "grid_extent", float, 24.0)
    if family not in ("gaussian", "evolved", "cat"):
        errors.append(f"state.family: unknown family {family!r}")
    if not l_coh > 0:
        errors.append(f"state.l_coh: must be positive, got {l_coh}")
    if family == "cat" and not separation > 0:
        errors.append("state.separation: cat state needs a positive separation")
    if grid_points < 2:
        errors.append(f"state.grid_points: need at least 2, got {grid_points}")
    if not grid_extent > 0:
        errors.append(f"state.grid_extent: must be positive, got {grid_extent}")

    b_values = take("schedule", "b_values", _parse_values, ())
    l_values = take("schedule", "l_values", _parse_values, ())
    dp_values = take("schedule", "dp_values", _parse_values, ())
    dx_values = take("schedule", "dx_values", _parse_values, ())
    exposure = take("schedule", "exposure", float, 1e4)
    with_aux = take("schedule", "with_aux", boolean, True)
    p0 = take("schedule", "p0", float, 50.0)
    seed = take("schedule", "seed", int, 1)
    noiseless = take("schedule", "noiseless", boolean, False)
    hardware = bool(b_values or l_values)
    natural = bool(dp_values or dx_values)
    if hardware and natural:
        errors.append("schedule: give either b_values/l_values or dp_values/dx_values, not both")
    if hardware:
        if not (b_values and l_values):
            errors.append("schedule: hardware mode needs both b_values and l_values")
        if any(b < 0 for b in b_values):
            errors.append("schedule.b_values: fields must be nonnegative")
        if any(ell < 0 for ell in l_values):
            errors.append("schedule.l_values: lengths must be nonnegative")
    else:
        if natural and not (dp_values and dx_values):
            errors.append("schedule: natural mode needs both dp_values and dx_values")
        if not natural:
            dp_values, dx_values = _DEFAULT_DP, _DEFAULT_DX
        if with_aux and not p0 > 0:
            errors.append("schedule.p0: aux pairs need a positive beam momentum")
    if not exposure > 0:
        errors.append(f"schedule.exposure: must be positive, got {exposure}")

    method = take("method", "name", str.strip, "direct")
    n_bins = take("method", "n_bins", int, 32)
    n_resample = take("method", "n_resample", int, 40)
    ml_dim = take("method", "ml_dim", int, None)
    ml_dilution = take("method", "ml_dilution", float, 0.5)
    ml_max_iter = take("method", "ml_max_iter", int, 2000)
    ml_tol = take("method", "ml_tol", float, 1e-9)
    if method not in ("direct", "radon", "ml"):
        errors.append(f"method.name: unknown method {method!r}")
    if n_bins < 1:
        errors.append(f"method.n_bins: need at least 1, got {n_bins}")
    if n_resample < 0:
        errors.append(f"method.n_resample: must be nonnegative, got {n_resample}")
    if not (0 < ml_dilution <= 1):
        errors.append(f"method.ml_dilution: must lie in (0, 1], got {ml_dilution}")
    if ml_max_iter < 1:
        errors.append(f"method.ml_max_iter: need at least 1, got {ml_max_iter}")
    if not ml_tol > 0:
        errors.append(f"method.ml_tol: must be positive, got {ml_tol}")

    out_x = take("output", "x", _parse_lattice_triplet, None)
    out_p = take("output", "p", _parse_lattice_triplet, None)
    dataset_path = take("output", "dataset", str.strip, None)
    wigner_csv_path = take("output", "wigner_csv", str.strip, None)
    image_path = take("output", "image", str.strip, None)
    metrics_path = take("output", "metrics", str.strip, None)

    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return RunConfig(
        physical=physical,
        family=family,
        l_coh=l_coh,
        x_center=x_center,
        p_center=p_center,
        tau=tau,
        separation=separation,
        grid_points=grid_points,
        grid_extent=grid_extent,
        b_values=tuple(b_values),
        l_values=tuple(l_values),
        dp_values=tuple(dp_values),
        dx_values=tuple(dx_values),
        exposure=exposure,
        with_aux=with_aux,
        p0=p0,
        seed=seed,
        noiseless=noiseless,
        method=method,
        n_bins=n_bins,
        n_resample=n_resample,
        ml_dim=ml_dim,
        ml_dilution=ml_dilution,
        ml_max_iter=ml_max_iter,
        ml_tol=ml_tol,
        out_x=out_x,
        out_p=out_p,
        dataset_path=dataset_path,
        wigner_csv_path=wigner_csv_path,
        image_path=image_path,
        metrics_path=metrics_path,
    )


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to its INI document form.

    parse_config(serialize_config(cfg)) reconstructs an equal RunConfig;
    floats go through repr so values survive exactly.
    """
    def join(values: tuple[float, ...]) -> str:
        return ", ".join(repr(float(v)) for v in values)

    lines = [
        "[physical]",
        f"wavelength_nm = {cfg.physical.wavelength / 1e-9!r}",
        f"mass_kg = {cfg.physical.mass!r}",
        f"moment_jt = {cfg.physical.moment!r}",
        f"scale_x_m = {cfg.physical.scale_x!r}",
        "",
        "[state]",
        f"family = {cfg.family}",
        f"l_coh = {cfg.l_coh!r}",
        f"x_center = {cfg.x_center!r}",
        f"p_center = {cfg.p_center!r}",
        f"tau = {cfg.tau!r}",
        f"separation = {cfg.separation!r}",
        f"grid_points = {cfg.grid_points}",
        f"grid_extent = {cfg.grid_extent!r}",
        "",
        "[schedule]",
    ]
    if cfg.mode == "hardware":
        lines += [f"b_values = {join(cfg.b_values)}", f"l_values = {join(cfg.l_values)}"]
    else:
        lines += [f"dp_values = {join(cfg.dp_values)}", f"dx_values = {join(cfg.dx_values)}"]
    lines += [
        f"exposure = {cfg.exposure!r}",
        f"with_aux = {'true' if cfg.with_aux else 'false'}",
        f"p0 = {cfg.p0!r}",
        f"seed = {cfg.seed}",
        f"noiseless = {'true' if cfg.noiseless else 'false'}",
        "",
        "[method]",
        f"name = {cfg.method}",
        f"n_bins = {cfg.n_bins}",
        f"n_resample = {cfg.n_resample}",
    ]
    if cfg.ml_dim is not None:
        lines.append(f"ml_dim = {cfg.ml_dim}")
    lines += [
        f"ml_dilution = {cfg.ml_dilution!r}",
        f"ml_max_iter = {cfg.ml_max_iter}",
        f"ml_tol = {cfg.ml_tol!r}",
        "",
        "[output]",
    ]
    if cfg.out_x is not None:
        lines.append(f"x = {cfg.out_x[0]!r}:{cfg.out_x[1]!r}:{cfg.out_x[2]}")
    if cfg.out_p is not None:
        lines.append(f"p = {cfg.out_p[0]!r}:{cfg.out_p[1]!r}:{cfg.out_p[2]}")
    for key, value in (
        ("dataset", cfg.dataset_path),
        ("wigner_csv", cfg.wigner_csv_path),
        ("image", cfg.image_path),
        ("metrics", cfg.metrics_path),
    ):
        if value is not None:
            lines.append(f"{key} = {value}")
    lines.append("")
    return "\n".join(lines)


def config_digest(cfg: RunConfig) -> str:
    """Stable hash of a configuration, for provenance records.

    File destinations are excluded so the digest identifies the experiment
    itself: two runs writing to different directories hash the same.
    """
    stripped = dataclasses.replace(
        cfg,
        dataset_path=None,
        wigner_csv_path=None,
        image_path=None,
        metrics_path=None,
    )
    return hashlib.sha256(serialize_config(stripped).encode()).hexdigest()


__all__ = [
    "RunConfig",
    "config_digest",
    "parse_config",
    "read_dataset",
    "read_wigner_csv",
    "serialize_config",
    "write_dataset",
    "write_metrics",
    "write_pgm",
    "write_wigner_csv",
]
