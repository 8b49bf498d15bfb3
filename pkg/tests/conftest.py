import copy
import json

import pytest

BASE = {
    "model": {"dimension": 2, "alpha": 3.0, "lambda": 1.0, "weights": {"kind": "pareto", "tau": 2.0}},
    "geometry": {"side": 16, "boundary": "torus"},
    "seed": 7,
    "threads": 1,
    "generate": {},
    "degrees": {"trials": 300, "R": 8, "radii": [4, 8], "w_values": [3.0], "w_trials": 200},
    "percolation": {"sides": [6, 8], "lambdas": [0.05, 0.3, 1.0, 3.0], "trials": 4},
    "distances": {"pair_norms": [2, 3, 4], "pairs_per_norm": 4, "max_hops": 30, "reach_hops": 3},
    "gfun": {"u_grid": [10.0, 100.0]},
}


@pytest.fixture
def base_config():
    return copy.deepcopy(BASE)


@pytest.fixture
def write_config(tmp_path):
    def write(cfg, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(cfg), encoding="utf-8")
        return path

    return write


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[criterion] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines, key=lambda k: (int(k.rstrip("abc")), k)):
            terminalreporter.write_line(lines[key])
