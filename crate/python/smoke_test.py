"""Smoke test for the `boussinesq` extension module.

Build it first:

    cargo build --release -p boussinesq-py --features extension-module

then run `python3 python/smoke_test.py [path/to/libboussinesq.so]`.
"""

import importlib.util
import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load(library):
    tmp = Path(tempfile.mkdtemp())
    target = tmp / "boussinesq.so"
    shutil.copy(library, target)
    spec = importlib.util.spec_from_file_location("boussinesq", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


CONFIG = {
    "grid": {"n": 16},
    "physics": {"nu": 0.5, "g": 1.0},
    "initial": {"kind": "random", "seed": 1, "u_l2": 0.5, "theta_l2": 0.5},
    "stepper": {"dt": 0.005, "t_end": 0.1, "sample_every": 5},
}


def main():
    default = ROOT / "target" / "release" / "libboussinesq.so"
    bq = load(Path(sys.argv[1]) if len(sys.argv) > 1 else default)

    assert "absorbing_ball" in bq.experiment_names()
    assert math.isclose(bq.grashof(1.0, 0.5, 0.25), 1.0)

    records = bq.simulate(json.dumps(CONFIG))
    assert len(records) == 5, len(records)
    drift = abs(records[-1]["theta_l2"] - records[0]["theta_l2"]) / records[0]["theta_l2"]
    assert drift < 1e-10, drift

    with tempfile.TemporaryDirectory() as out:
        report = bq.run_experiment("turbulence_diagnostics", json.dumps(CONFIG), out)
        assert report["pass"], report
        assert (Path(out) / "diagnostics.csv").exists()

    exact = bq.verify_exact("horizontal", 16, t_check=0.2)
    assert exact["pass"] and exact["metrics"]["max_error"] < 1e-7, exact

    try:
        bq.simulate("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed config accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
