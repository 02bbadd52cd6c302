"""Python bindings for the replimit native core.

JSON-shaped inputs and outputs are plain dicts here; the native module
exchanges them as text.
"""

import json as _json

from ._replimit import (  # noqa: F401
    ContractError,
    FormatError,
    Lexicon,
    NetworkError,
    ParseError,
    ProviderError,
    ReplimitError,
    aggregate,
    build_prompt,
    frechet_distance,
    load_features,
    load_tensor,
    mock_generalize,
    quantile_score,
    replication_score,
    save_features,
    save_tensor,
    score_caption,
    similarities,
    tokenize,
    toy_features,
)


def synth_dataset(**spec):
    """Synthetic images (N x H x W float32) and their captions."""
    return _replimit_call("synth_dataset_json", spec)


def run_experiment(config):
    """Run an experiment config (dict) and return the report as a dict."""
    return _json.loads(_replimit_call("run_experiment_json", config))


def _replimit_call(name, payload):
    from . import _replimit

    return getattr(_replimit, name)(_json.dumps(payload))
