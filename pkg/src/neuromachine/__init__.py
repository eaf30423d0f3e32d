"""Functional emulator of a multi-node pipelined Hodgkin-Huxley network machine."""

from .engine import Engine, EngineState, ProbeSpec, RunResult, run
from .layout import (
    CompileError,
    CompileParams,
    CompiledNetwork,
    build_images,
    layout_lanes,
    load_image,
    partition,
    perf_estimate,
)
from .net_model import (
    NetworkDescription,
    NetworkFormatError,
    Stimulus,
    parse_network,
    random_network,
    resolve_attrs,
    serialize_network,
    validate,
)
from .oracle import OracleConfig, diff_runs, oracle_run

__all__ = [
    "CompileError", "CompileParams", "CompiledNetwork", "Engine", "EngineState",
    "NetworkDescription", "NetworkFormatError", "OracleConfig", "ProbeSpec", "RunResult",
    "Stimulus", "build_images", "diff_runs", "layout_lanes", "load_image", "oracle_run",
    "parse_network", "partition", "perf_estimate", "random_network", "resolve_attrs", "run",
    "serialize_network", "validate",
]
