"""Every BSMatrix built during a test is checked against the Weyl determinant
inequality and, when ||M^4|| <= 1/2, against the small-norm lower bound."""

import numpy as np
import pytest

from resonance_bounds import birman_schwinger as bsm
from resonance_bounds.determinant import small_norm_check, weyl_product_check

_failures = []
_checked = {"n": 0}
_original_post_init = bsm.BSMatrix.__post_init__


def _checked_post_init(self):
    _original_post_init(self)
    _checked["n"] += 1
    lhs, rhs, ok = weyl_product_check(self, p=4, slack=1e-8)
    if not ok:
        _failures.append(f"Weyl: lam={self.lam} lhs={lhs} rhs={rhs}")
    small = small_norm_check(self, 4, slack=1e-8)
    if small is not None and not small[2]:
        _failures.append(f"small-norm: lam={self.lam} lhs={small[0]} rhs={small[1]}")


bsm.BSMatrix.__post_init__ = _checked_post_init


@pytest.fixture(autouse=True)
def weyl_guard():
    _failures.clear()
    yield
    assert not _failures, _failures


def weyl_checked_count() -> int:
    return _checked["n"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run

_acceptance = {}


class _Criterion:
    def __init__(self, number, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = self.detail if ok or self.detail else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        if not ok and self.detail:
            detail = f"{self.detail} | {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        prev = _acceptance.get(self.number)
        passed = ok and (prev is None or prev[1])
        parts = [p for p in (prev[2] if prev else "", detail) if p]
        _acceptance[self.number] = (self.title, passed, "; ".join(parts))
        print(f"criterion {self.number} [{self.title}]: {'PASS' if ok else 'FAIL'} {detail}")
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance, key=str):
        title, ok, detail = _acceptance[n]
        terminalreporter.write_line(f"criterion {n} [{title}]: {'PASS' if ok else 'FAIL'}  {detail}")
