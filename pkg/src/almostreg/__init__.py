"""Almost-regular spherical polyhedra: lattice mappings, tiling, curation and shell templates."""
from .curation import CurationOptions, CurationReport, curate
from .mapping import InvalidMapping, MappingParams, face_counts, validate
from .shell import BlockModel, ShellCandidate, decorate, shell_gen, solve_size
from .tiling import TiledMesh, generate

__all__ = [
    "BlockModel",
    "CurationOptions",
    "CurationReport",
    "InvalidMapping",
    "MappingParams",
    "ShellCandidate",
    "TiledMesh",
    "curate",
    "decorate",
    "face_counts",
    "generate",
    "shell_gen",
    "solve_size",
    "validate",
]
