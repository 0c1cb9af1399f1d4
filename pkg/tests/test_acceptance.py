"""The ten acceptance criteria at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary (see ``conftest.py``).
"""
import pytest

from spectral_mesh.verification import ACCEPTANCE

RESULTS = {}

TITLES = {
    "1": "Lagrange identity, 100 random pairs per model, < 1e-9 in < 5 s",
    "2": "adjoint boundary reconstruction < 1e-12",
    "3": "string oracle spectrum on the mesh < 1e-7 in < 30 s",
    "4": "first-order residual exponent in [1.8, 2.2]",
    "5": "pencil splitting equals closed forms < 1e-6",
    "6": "supercritical flutter tongue, >= 9/10 probes agree",
    "7": "dynamo beta direction, worst error/tolerance ratio over zero root (1e-10) and shifted root (1e-8)",
    "8": "selection rule for cos(2 pi k x), k = 1..3, < 1e-12",
    "9": "k = 2 tongue geometry: no grid disagreements, offsets < 1e-12",
    "10": "square-root splitting: exponent in [0.45, 0.55], angles pi apart",
}


@pytest.mark.parametrize("key, check", ACCEPTANCE, ids=[k for k, _ in ACCEPTANCE])
def test_criterion(key, check):
    result = check()
    line = f"criterion {key:>2} ({TITLES[key]}): {result.line()}"
    RESULTS[key] = line
    print(line)
    assert result.passed, f"{line}\n{result.detail}"
