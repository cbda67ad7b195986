"""Floquet-Bloch band structure and ballistic wave-packet transport for 1D
periodic and limit-periodic Schrodinger operators ``-d^2/dx^2 + V``."""

from .errors import (
    BadRatio,
    Bloch1dError,
    BoundaryContamination,
    BracketFailure,
    CutoffTooSmall,
    DepthExceeded,
    GridTooCoarse,
    IncommensurateBox,
    LevelOutOfRange,
    RootNotBracketed,
    ScheduleViolation,
    StepUnderflow,
    WindowTooShort,
)
from .potential import ECFamily, PeriodicPotential, default_family, ec_build, zero_potential
from .monodromy import MonodromyResult, discriminant_scan, free_discriminant, monodromy
from .bands import (
    BandTable,
    bad_set_measure,
    band_edges,
    band_function,
    build_band_table,
    count_bands,
    default_max_energy,
)
from .packets import WavePacket, gaussian_packet
from .fiber import (
    FiberEigensystem,
    FloquetField,
    apply_q,
    fiber_eigensystem,
    fiber_uniform_bound,
    floquet,
    inverse_floquet,
    m1_norm,
)
from .evolve import MomentSeries, evolve, heisenberg_position, moments, velocity_average
from .transport import (
    TransportReport,
    cascade,
    floquet_mass_lower_bound,
    periodic_convergence,
    time_schedule,
    transport_exponents,
)

__all__ = [
    "Bloch1dError",
    "BadRatio",
    "BoundaryContamination",
    "BracketFailure",
    "CutoffTooSmall",
    "DepthExceeded",
    "GridTooCoarse",
    "IncommensurateBox",
    "LevelOutOfRange",
    "RootNotBracketed",
    "ScheduleViolation",
    "StepUnderflow",
    "WindowTooShort",
    "PeriodicPotential",
    "ECFamily",
    "ec_build",
    "default_family",
    "zero_potential",
    "MonodromyResult",
    "monodromy",
    "discriminant_scan",
    "free_discriminant",
    "BandTable",
    "band_edges",
    "band_function",
    "build_band_table",
    "bad_set_measure",
    "count_bands",
    "default_max_energy",
    "WavePacket",
    "gaussian_packet",
    "FiberEigensystem",
    "FloquetField",
    "fiber_eigensystem",
    "floquet",
    "inverse_floquet",
    "apply_q",
    "m1_norm",
    "fiber_uniform_bound",
    "evolve",
    "heisenberg_position",
    "velocity_average",
    "moments",
    "MomentSeries",
    "TransportReport",
    "periodic_convergence",
    "time_schedule",
    "cascade",
    "floquet_mass_lower_bound",
    "transport_exponents",
]

__version__ = "0.1.0"
