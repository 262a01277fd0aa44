"""Exact non-signalling boxes, their quasi-classical and diagonal quantum
models, and certified locality decisions."""
from .box import (
    Box,
    MarginalTable,
    QuasiBox,
    Scenario,
    SignallingError,
    StructuralError,
    canonical_marginals,
    from_marginals,
    is_nonsignalling,
    marginal,
    param_count,
    validate,
)
from .classical import (
    ETA,
    XI,
    ClassicalModel,
    Kind,
    Label,
    build_negative_measurements,
    build_negative_state,
    compress,
    evaluate,
    negativity,
    sample_signed,
)
from .gallery import (
    deterministic_box,
    pr_box,
    random_local_box,
    random_nonsignalling_box,
    tsirelson_box,
    uniform_box,
)
from .locality import Local, NonLocal, bell_value, chsh_functional, enumerate_vertices, is_local
from .quantum import DiagonalOperator, QuantumModel, evaluate_trace, lift, verify

__version__ = "0.1.0"
