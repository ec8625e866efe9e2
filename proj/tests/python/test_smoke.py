"""Python binding smoke tests: the native module loads and the main
operations behave end to end on the bundled fixtures."""

import json
import os

import pytest

import ciflex

FIXTURES = os.environ.get("CIFLEX_FIXTURES", "fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


def test_version():
    assert ciflex.__version__


def test_generate_and_run_roundtrip(tmp_path):
    script = ciflex.generate_synthetic("minimal", seed=1)
    assert script["version"] == 1
    assert len(script["turns"]) == 1

    path = tmp_path / "minimal.json"
    path.write_text(json.dumps(script))
    report = ciflex.run_conversation(str(path))
    assert report["strategy"] == "ciflex"
    assert len(report["turns"]) == 1
    assert report["turns"][0]["selected_subtask"] == "none"
    assert report["turns"][0]["classifier_calls"] == 4


def test_run_on_bundled_fixture():
    report = ciflex.run_conversation(fixture("paper-like-22.json"))
    assert len(report["turns"]) == 22
    cumulative = report["turns"][-1]["cumulative"]
    assert cumulative["prefill"] > 0
    roles = report["final_cache"]["role_tokens"]
    assert "classifier-instruction" not in roles
    assert "subtask-reasoning" not in roles


def test_strategies_differ_only_in_cost():
    rows = ciflex.compare_strategies(
        fixture("paper-like-22.json"), ["ciflex", "full_reload"]
    )
    strategies = {row["strategy"] for row in rows}
    assert strategies == {"ciflex/hierarchical", "full_reload/hierarchical"}

    def final_prefill(label):
        return max(
            row["cum_prefill"] for row in rows if row["strategy"] == label
        )

    assert final_prefill("full_reload/hierarchical") > 50 * final_prefill(
        "ciflex/hierarchical"
    )


def test_engine_matches_oracle():
    ok, divergence = ciflex.engine_matches_oracle(
        fixture("paper-like-22.json"), strategy="ciflex"
    )
    assert ok, divergence
    ok, divergence = ciflex.engine_matches_oracle(
        fixture("paper-like-22.json"), strategy="recent_reload", window=5
    )
    assert ok, divergence


def test_validation_reports_issues(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"version": 1, "turns": []}')
    issues = ciflex.validate_script(str(path))
    assert issues
    assert any("turns" in issue for issue in issues)


def test_render_template():
    assert "main" in ciflex.template_names()
    text = ciflex.render_template(
        "classifier", {"Sub-task description": "a smoke-test sub-task"}
    )
    assert '#Answer: ["Yes" or "No"]' in text
    with pytest.raises(RuntimeError):
        ciflex.render_template("classifier", {})


def test_verify_suite_router():
    results = ciflex.verify_suite("router")
    assert results and all(r["passed"] for r in results)
