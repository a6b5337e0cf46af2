"""Worst-case optimal multiway joins for subgraph queries.

Serial and simulated-distributed evaluation over static graphs, incremental
maintenance over update streams, and a skew-resilient balanced variant, all
instrumented with round/communication/load/memory accounting.
"""

from .balanced import run_static_balanced
from .dataflow import run_static
from .delta import derive, run_delta_batch, run_delta_serial
from .generic_join import JoinStats, run
from .mvindex import DynamicGraphStore, MultiVersionIndex
from .optimize import build_triangle_relation, run_factorized, symmetry_break
from .queryparse import materialize_derived, parse_query
from .relations import Filter, Query, RelationSchema, SignedUpdate
from .runtime import WorkerConfig, metrics_json

__all__ = [
    "DynamicGraphStore",
    "Filter",
    "JoinStats",
    "MultiVersionIndex",
    "Query",
    "RelationSchema",
    "SignedUpdate",
    "WorkerConfig",
    "build_triangle_relation",
    "derive",
    "materialize_derived",
    "metrics_json",
    "parse_query",
    "run",
    "run_delta_batch",
    "run_delta_serial",
    "run_factorized",
    "run_static",
    "run_static_balanced",
    "symmetry_break",
]
__version__ = "0.1.0"
