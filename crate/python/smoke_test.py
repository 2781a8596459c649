"""Build the extension with cargo, import it and run a few checks.

    python3 python/smoke_test.py
"""

import importlib
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "dissipation-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libpydissipation.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "pydissipation.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))
    return importlib.import_module("pydissipation")


def main():
    dp = build()
    print("pydissipation", dp.__version__)

    single = dp.SpectralModel([0.0], [1.0])
    m = dp.moments(single, 1.0)
    assert abs(m["mean"] - 0.5) < 1e-12 and abs(m["variance"] - 0.25) < 1e-12, m

    ring = dp.ring(6)
    assert dp.compute_winding(ring, 4.0) == ring.winding == 4
    for gamma in (0.01, 1.0, 100.0):
        poles = dp.find_poles(ring, gamma)
        assert poles.is_exact()
        assert abs(2 * gamma * poles.mean() - 4) < 1e-8

    atom = dp.two_level_poles(0.5, 0.1, 1.0)
    numeric = dp.find_poles(dp.two_level_model(0.5, 0.1), 1.0)
    assert all(min(abs(a - b) for b in numeric.poles) < 1e-10 for a in atom.poles)
    assert abs(atom.mean() - 1.0) < 1e-10
    assert atom.conditional_mean(1e9) > 0.99

    h = [[0.25, 0.1], [0.1, -0.25]]
    model = dp.SpectralModel.from_hamiltonian(h, [1, 0])
    assert model.winding == 2 and math.isclose(sum(model.overlaps), 1.0)

    line = dp.MultiChannelSystem.line(6, [1, 2, 4], 1.0)
    print("line: w =", line.winding, " Γ<T> =", line.mixed_mean())

    try:
        dp.find_poles(ring, -1.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("negative rate accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
