"""Task-level KV-cache reuse engine for multi-turn conversations.

Thin wrapper over the native extension: structured results cross the
boundary as JSON text and are parsed here.
"""

import json

from ciflex._core import (
    EngineError,
    ValidationError,
    __version__,
    compare_strategies_csv,
    engine_matches_oracle,
    generate_synthetic_json,
    render_template,
    run_conversation_json,
    template_names,
    validate_script,
    verify_suite,
)

__all__ = [
    "EngineError",
    "ValidationError",
    "__version__",
    "compare_strategies",
    "compare_strategies_csv",
    "engine_matches_oracle",
    "generate_synthetic",
    "generate_synthetic_json",
    "render_template",
    "run_conversation",
    "run_conversation_json",
    "template_names",
    "validate_script",
    "verify_suite",
]


def run_conversation(script_path, **kwargs):
    """Run one conversation and return the session report as a dict."""
    return json.loads(run_conversation_json(script_path, **kwargs))


def generate_synthetic(profile="paper-like-22", seed=None):
    """Generate a synthetic conversation script as a dict."""
    return json.loads(generate_synthetic_json(profile, seed))


def compare_strategies(script_path, strategies, **kwargs):
    """Run several strategies and return the comparison table rows.

    Each row is a dict keyed by the CSV header columns, with numeric
    columns converted to int.
    """
    csv_text = compare_strategies_csv(script_path, strategies, **kwargs)
    lines = [line for line in csv_text.splitlines() if line]
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        values = line.split(",")
        row = dict(zip(header, values))
        for column in ("turn", "prefill", "generated", "cum_prefill", "cum_generated"):
            row[column] = int(row[column])
        rows.append(row)
    return rows
