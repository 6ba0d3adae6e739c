import numpy as np
import pytest

from causalrank.core import GroundTruth, ObservedDataset, ObservedReplicate, OutcomeReplicate, PropensityModel


def observe(y_t, y_c, z, p):
    """Observed replicate built from dense potential outcomes and assignments."""
    y_t, y_c, z, p = (np.asarray(a) for a in (y_t, y_c, z, p))
    y = z * y_t + (1 - z) * y_c
    keep = (y == 1) | (z == 1)
    u, i = np.nonzero(keep)
    return ObservedReplicate(u, i, y[keep], z[keep], p[keep])


def truth_of(y_t, y_c):
    y_t, y_c = np.asarray(y_t), np.asarray(y_c)
    keep = (y_t == 1) | (y_c == 1)
    u, i = np.nonzero(keep)
    return OutcomeReplicate(u, i, y_t[keep], y_c[keep])


def tiny_dataset(y_t, y_c, z, p):
    y_t = np.atleast_2d(y_t)
    shape = y_t.shape
    mu_t = np.asarray(y_t, dtype=float)
    mu_c = np.atleast_2d(np.asarray(y_c, dtype=float))
    obs = observe(y_t, np.atleast_2d(y_c), np.atleast_2d(z), np.atleast_2d(p))
    return (
        ObservedDataset((obs,), *shape),
        GroundTruth(mu_t, mu_c, (truth_of(y_t, np.atleast_2d(y_c)),)),
        PropensityModel(np.atleast_2d(np.asarray(p, dtype=float))),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_bundle():
    from causalrank.datagen import GenConfig, SyntheticBaseConfig, bundle_from_synthetic

    base = SyntheticBaseConfig(n_users=40, n_items=15, seed=3)
    cfg = GenConfig(beta=2.0, n_train=2, n_validation=1, n_test=2, seed=3)
    return bundle_from_synthetic(base, cfg)


# one line per acceptance criterion, collected by tests/test_acceptance.py
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
