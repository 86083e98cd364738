import numpy as np
import pytest

from tippingpoint.survival import TrialDataset


def make_dataset(arm, time, event, dropout=None, cutoff=None, covariate=None):
    """Small dataset with ids ``P01, P02, ...``."""
    arm = np.asarray(arm)
    n = arm.size
    if dropout is None:
        dropout = np.zeros(n, dtype=bool)
    if cutoff is None:
        cutoff = float(np.max(time))
    ids = [f"P{i + 1:02d}" for i in range(n)]
    return TrialDataset(ids, arm, time, event, dropout, cutoff, covariate)


@pytest.fixture
def six_subjects():
    # Experimental {1, 3, 5}, control {2, 4, 6}; all events, no ties.
    return make_dataset([1, 0, 1, 0, 1, 0], [1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [True] * 6)


# Acceptance results, printed once at the end of the session.
ACCEPTANCE = {}


def report(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
