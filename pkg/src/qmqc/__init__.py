"""Maximum quartet consistency solved as pseudo-Boolean optimization."""
from .core import QuartetSet, QuartetTopology, TaxonSet, UltrametricMatrix, detect_siblings
from .encoder import ModelVariant, decode_assignment, encode
from .oracle import mqc_oracle
from .solver import SolverConfig, solve

__all__ = [
    "ModelVariant",
    "QuartetSet",
    "QuartetTopology",
    "SolverConfig",
    "TaxonSet",
    "UltrametricMatrix",
    "decode_assignment",
    "detect_siblings",
    "encode",
    "mqc_oracle",
    "solve",
]
