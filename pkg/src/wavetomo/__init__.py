"""Phase-space tomography of matter-wave packets from interferometric counts.

The package simulates an interferometer that applies joint position and
momentum kicks to a wave packet and counts transmitted particles, then
reconstructs the packet's Wigner function from those counts by three routes:
direct Fourier inversion of the measured coherence function, filtered
back-projection of quadrature marginals, and maximum-likelihood fitting of
the density matrix.
"""

from .apparatus import (
    CountDataset,
    KickSetting,
    PhysicalConfig,
    Schedule,
    detect_probability,
    kicks_from_hardware,
    make_hardware_schedule,
    make_schedule,
    natural_kicks,
    noiseless_counts,
    povm_element,
    resolution_limits,
    schedule_probabilities,
    simulate_counts,
)
from .direct import estimate_gamma, invert_wigner, pair_estimates
from .errors import (
    ConfigError,
    DataFormatError,
    DatasetError,
    GridSupportError,
    KickAliasingError,
    NonUniformLatticeError,
    ReconstructionError,
    ScheduleError,
    ValidationError,
    WavetomoError,
)
from .io_formats import (
    RunConfig,
    config_digest,
    parse_config,
    read_dataset,
    read_wigner_csv,
    serialize_config,
    write_dataset,
    write_metrics,
    write_pgm,
    write_wigner_csv,
)
from .mle import MLConfig, MLReport, kl_divergence, ml_reconstruct, wigner_of_ml
from .phasespace import (
    CoherenceTable,
    DensityMatrix,
    GridSpec,
    Lattice,
    WavePacket,
    WignerGrid,
    chi_from_gamma,
    chi_of_state,
    density_from_pure,
    evolve_free,
    fidelity,
    gamma_of_state,
    gamma_table,
    make_cat,
    make_gaussian,
    mix,
    momentum_density,
    negativity_volume,
    position_density,
    purity,
    state_moments,
    translate,
    wigner_of_state,
)
from .pipeline import (
    ReportBundle,
    build_dataset,
    build_grid,
    build_packet,
    build_schedule,
    build_state,
    output_lattices,
    reconstruct_dataset,
    run_pipeline,
)
from .radon import (
    Marginal,
    QuadratureSamples,
    filtered_backprojection,
    group_by_angle,
    make_ray_schedule,
    marginal_from_characteristic,
    quadrature_angle,
    resample_uniform,
    wigner_projection,
)

__version__ = "0.1.0"
