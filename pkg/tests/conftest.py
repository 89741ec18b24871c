import numpy as np
import pytest

from semibart.data import Dataset, LinearTermSpec

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset(rng):
    n = 60
    a = (rng.random(n) < 0.5).astype(float)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    y = 1.0 + 2.0 * a + np.sin(x2) + 0.3 * rng.normal(size=n)
    ds = Dataset(y=y, X=np.column_stack([a, x1, x2]), column_names=("a", "x1", "x2"))
    return ds, LinearTermSpec.parse("a,a:x1,x1", ds.column_names)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
