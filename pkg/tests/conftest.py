import numpy as np
import pytest

from gclab.numerics import IntegratorConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def tight():
    return IntegratorConfig(rtol=1e-12, atol=1e-14)


@pytest.fixture(scope="session")
def lifts():
    """Cache of (family, seed) -> (make(grid), base grid) shared by the PDE tests."""
    from gclab.families import build_solution, default_grid, merged
    from gclab.reductions import lift_to_fields
    cache = {}

    def get(family, seed=None):
        key = (family, seed)
        if key not in cache:
            sol, p = build_solution(family, None, seed)
            c = float(p["c"]) if family in ("bonnet", "g-1", "g-1-elem") else None
            sector = (float(p["arg_lo"]), float(p["arg_hi"])) if seed == "cube" else None
            cache[key] = (lambda g, _s=sol, _c=c: lift_to_fields(_s, g, c=_c), default_grid(family, 31, sector), sol)
        return cache[key]
    return get


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
