import pytest

import gwpva as g
from gwpva.datasets import (bear_cap, bear_life_table, synthetic_cap,
                            synthetic_life_table)

# acceptance tests register one (criterion, status, detail) line each;
# printed in the terminal summary so the verdicts survive output capture
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(criterion: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"ACCEPTANCE {criterion}: {status} — {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_posterior():
    return g.posterior_update(g.prior_noninformative(synthetic_cap()),
                              synthetic_life_table())


@pytest.fixture(scope="session")
def bear_posterior():
    return g.posterior_update(g.prior_noninformative(bear_cap()),
                              bear_life_table())


@pytest.fixture(scope="session")
def bear_ensemble(bear_posterior):
    from gwpva.montecarlo import PosteriorEnsemble
    return PosteriorEnsemble(bear_posterior, n_prec=10_000, master_seed=2024)
