"""Write-side memory admission for long conversations."""

import json

from ._memrouter import (
    Corpus,
    MemrouterError,
    RunConfig,
    Store,
    bootstrap_ci,
    budget_match,
    category_score,
    evaluate_json,
    hash_embed,
    ingest,
    normalize,
    parameter_count,
    percentile,
    porter_stem,
    synth,
    token_f1,
    version,
)

__version__ = version()


def evaluate(config, policy, budget=None, all=False):
    """Ingest, answer and score; returns the report as a dict."""
    return json.loads(evaluate_json(config, policy, budget, all))


__all__ = [
    "Corpus",
    "MemrouterError",
    "RunConfig",
    "Store",
    "bootstrap_ci",
    "budget_match",
    "category_score",
    "evaluate",
    "hash_embed",
    "ingest",
    "normalize",
    "parameter_count",
    "percentile",
    "porter_stem",
    "synth",
    "token_f1",
]
