"""Smoke test for the Python extension.

Build first with

    cargo build --release -p bmdbma-python --features extension-module

then run `python3 python/smoke_test.py` from the repository root. Set
BMDBMA_PY_LIB to point at a different build of the shared library.
"""

import importlib.machinery
import importlib.util
import json
import os
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate():
    if "BMDBMA_PY_LIB" in os.environ:
        return pathlib.Path(os.environ["BMDBMA_PY_LIB"])
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libbmdbma_py.so"
        if lib.exists():
            return lib
    sys.exit("libbmdbma_py.so not found; build the bmdbma-python crate first")


def load(path):
    loader = importlib.machinery.ExtensionFileLoader("bmdbma_py", str(path))
    spec = importlib.util.spec_from_file_location("bmdbma_py", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    bmd = load(locate())
    print("bmdbma_py", bmd.__version__)

    rows = bmd.load_dataset("dataset1")
    assert rows == [(0.0, 15, 0), (0.25, 30, 5), (0.5, 29, 26), (1.0, 16, 16)], rows

    checks = json.loads(bmd.oracle(mc_samples=200_000))
    for c in checks:
        print("PASS" if c["pass"] else "FAIL", c["name"])
    assert all(c["pass"] for c in checks)

    report = json.loads(
        bmd.fit("dataset4", methods=["laplace", "mle-schwarz"], chains=2, iterations=1500, warmup=500)
    )
    analysis = report["analyses"][0]
    assert len(analysis["models"]) == 8
    weights = analysis["summaries"][0]["weights"]["Ok"]
    assert abs(sum(weights) - 1.0) < 1e-12, weights
    bma = analysis["summaries"][0]["bma"]["Ok"]
    assert 0.0 < bma["bmdl"] <= bma["bmd_estimate"], bma
    print(analysis["methods"][0], "BMA BMD", round(bma["bmd_estimate"], 3), "BMDL", round(bma["bmdl"], 3))

    try:
        bmd.fit("dataset1", prior="nope")
    except ValueError as e:
        print("rejected bad prior:", e)
    else:
        raise AssertionError("bad prior accepted")
    print("ok")


if __name__ == "__main__":
    main()
