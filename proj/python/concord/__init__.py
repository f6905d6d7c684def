"""Multi-stakeholder decision selection and robustness certification."""

import json
from pathlib import Path

from . import _core
from ._core import (
    ConfigurationError,
    Error,
    FeasibilityError,
    IoError,
    LookupError,
    ParameterError,
    ValidationError,
    apply_rule,
    composite_score,
    normalize_scores,
    optimal_temperature,
    score_actions,
)

__all__ = [
    "ConfigurationError",
    "Error",
    "FeasibilityError",
    "IoError",
    "LookupError",
    "ParameterError",
    "ValidationError",
    "apply_rule",
    "certify",
    "composite_score",
    "estimate_overhead",
    "format_certificate",
    "generate",
    "normalize_scores",
    "optimal_temperature",
    "recommend",
    "score_actions",
    "select",
]


def generate(spec, csv_path):
    """Write a synthetic scenario CSV plus its ground-truth sidecar."""
    return json.loads(_core.generate(json.dumps(spec), str(csv_path)))


def select(config, base_dir="", write=False):
    """Cross-validated strategy selection. Returns winner, bundle, store, summary and table."""
    return json.loads(_core.select(json.dumps(config), str(base_dir), write))


def recommend(store, contexts):
    """One record per context; `contexts` is a dict or a list of dicts."""
    if isinstance(contexts, dict):
        contexts = [contexts]
    lines = "\n".join(json.dumps(c) for c in contexts)
    return json.loads(_core.recommend(json.dumps(store), lines))


def certify(bundle, config):
    """Certificate grid for a bundle under a perturbation config."""
    if isinstance(bundle, (str, Path)):
        bundle = json.loads(Path(bundle).read_text())
    return json.loads(_core.certify(json.dumps(bundle), json.dumps(config)))


def format_certificate(certificate):
    return _core.format_certificate(json.dumps(certificate))


def estimate_overhead(actors, actions, strategies, metrics, grid, validation, c_train=1.0, c_inf=1.0):
    return json.loads(
        _core.estimate_overhead(actors, actions, strategies, metrics, grid, validation, c_train, c_inf)
    )
