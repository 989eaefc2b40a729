"""Three identical 1D particles: cluster-channel elimination and breakup scattering."""

from .errors import ScatteringError
from .pair_model import PotentialSpec, PairBoundState, solve_square_well
from .wavefields import ScatterConfig, make_config
from .pipeline import RunConfig, run_scattering, solve_energy, convergence_sweep

__all__ = [
    "ScatteringError", "PotentialSpec", "PairBoundState", "solve_square_well",
    "ScatterConfig", "make_config", "RunConfig", "run_scattering", "solve_energy", "convergence_sweep",
]
__version__ = "0.1.0"
