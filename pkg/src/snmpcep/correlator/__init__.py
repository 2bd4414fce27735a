"""Pattern correlator: incremental engine plus an independent brute-force oracle."""

from .engine import Engine, Listener
from .oracle import oracle_match, oracle_match_all

__all__ = ["Engine", "Listener", "oracle_match", "oracle_match_all"]
