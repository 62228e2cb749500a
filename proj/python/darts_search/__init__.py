"""Python access to the darts search library."""

from ._core import (
    OPS,
    ConfigError,
    NumericalError,
    __version__,
    config_hash,
    count_discrete,
    count_relaxed,
    derive_genotype,
    grad_check,
    parse_config,
    run_search,
    toy_bilevel,
)

__all__ = [
    "OPS",
    "ConfigError",
    "NumericalError",
    "__version__",
    "config_hash",
    "count_discrete",
    "count_relaxed",
    "derive_genotype",
    "grad_check",
    "parse_config",
    "run_search",
    "toy_bilevel",
]
