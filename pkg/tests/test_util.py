import json
import os
import pytest
import tempfile

from waldo.src.waldo.stopping import StoppingCriterion
from waldo.src.waldo.util import get_version, join_jsons, load_config, waldo_base


def test_waldo_base():
    defaults = waldo_base("config", "defaults.json")
    assert defaults.endswith("/config/defaults.json") and os.path.exists(defaults)


def test_get_version():
    with open(waldo_base("VERSION")) as fh:
        assert get_version() == f"v{fh.read().strip()}"


def test_defaults():
    config = load_config()
    stop = StoppingCriterion.from_config(config["walks"])
    assertions = [
        "stop == StoppingCriterion()",
        "config['walks']['reuse'] is True",
        "config['pcg']['tol'] == 1e-6",
        "config['ict']['max_row_nnz'] is None",
        "config['size_match'] == {'tol_pct': 10, 'max_steps': 30}",
    ]
    scope = {**globals(), **locals()}
    errors = [assertion for assertion in assertions if not eval(assertion, scope)]
    assert not errors, "errors occurred:\n{}".format("\n".join(errors))


def test_override_merges_sections():
    with tempfile.TemporaryDirectory() as tmp_dir:
        override = os.path.join(tmp_dir, "override.json")
        with open(override, "w") as fh:
            json.dump({"walks": {"delta": 0.2}, "extra": [1, 2]}, fh)
        config = load_config(override)
    assert config["walks"]["delta"] == 0.2 and config["walks"]["alpha"] == 0.99
    assert config["extra"] == [1, 2]


def test_join_jsons_order():
    with tempfile.TemporaryDirectory() as tmp_dir:
        paths = []
        contents = ({"a": {"x": 1, "y": 1}, "b": 1}, {"a": {"y": 2}, "b": 2})
        for k, content in enumerate(contents):
            paths.append(os.path.join(tmp_dir, f"{k}.json"))
            with open(paths[-1], "w") as fh:
                json.dump(content, fh)
        assert join_jsons(paths) == {"a": {"x": 1, "y": 2}, "b": 2}


def test_missing_config():
    with pytest.raises(FileNotFoundError):
        load_config("/nonexistent/waldo.json")
