import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalrank import metrics
from causalrank.core import DegenerateInputError, GroundTruth, ObservedDataset, ParameterError, PropensityError, RankedList
from causalrank.metrics import CAR, CDCG, CP, CappingParams, MetricKind
from tests.conftest import observe, truth_of
from tests.oracles import assignment_patterns, metric_loop

KINDS = [CAR, CP(1), CP(2), CDCG]


# ---------------------------------------------------------------------------
# metric kinds and weights


@pytest.mark.parametrize("name", ["CAR", "CP@10", "CDCG", "AR", "P@3", "DCG"])
def test_kind_name_round_trip(name):
    assert MetricKind.parse(name).name == name


@pytest.mark.parametrize("bad", ["CP@0", "XYZ", "CP@", "P@-1"])
def test_kind_parse_rejects(bad):
    with pytest.raises(ParameterError):
        MetricKind.parse(bad)


def test_kind_k_above_items():
    with pytest.raises(ParameterError):
        CP(11).check(10)


def test_lambda_examples():
    assert metrics.lambda_weight(MetricKind.parse("DCG"), 1, 10) == 10.0
    assert metrics.lambda_weight(MetricKind.parse("P@5"), 7, 10) == 0.0
    assert metrics.lambda_weight(MetricKind.parse("AR"), 3, 10) == -3.0


@pytest.mark.parametrize("rank", [0, 11])
def test_lambda_rank_out_of_range(rank):
    with pytest.raises(ParameterError):
        metrics.lambda_weight(CDCG, rank, 10)


def test_capping_params_range():
    with pytest.raises(ParameterError):
        CappingParams(1.5, 0.1)
    with pytest.raises(ParameterError):
        CappingParams(-0.1, 0.1)
    assert CappingParams().off and not CappingParams.both(0.1).off


# ---------------------------------------------------------------------------
# ground-truth metric


@pytest.mark.parametrize("kind", KINDS)
def test_delta_true_zero_tau(kind):
    assert metrics.delta_true(np.array([1, 2, 3]), np.zeros(3), kind) == 0.0


def test_delta_true_examples():
    ranks = np.array([1, 2, 3])
    tau = np.array([1, 0, -1])
    assert metrics.delta_true(ranks, tau, CP(2)) == pytest.approx(0.5)
    # DCG weights 3/1, 3/log2(3), 3/2
    assert metrics.delta_true(ranks, tau, CDCG) == pytest.approx((3.0 - 1.5) / 3.0, abs=1e-15)


def test_metric_average_single_user_equals_delta():
    rl = RankedList(np.array([[2, 0, 1]]))
    y_t = np.array([[1, 0, 1]])
    y_c = np.array([[0, 1, 0]])
    tau = y_t - y_c
    for kind in KINDS:
        assert metrics.metric_average(rl, truth_of(y_t, y_c), kind) == pytest.approx(metrics.delta_true(rl.ranks[0], tau[0], kind))


def test_metric_average_is_user_mean():
    # CP@5 with I=5 gives every item weight 1, so each user's metric is (#tau=1)/5
    rl = RankedList(np.tile(np.arange(5), (2, 1)))
    y_t = np.zeros((2, 5), dtype=int)
    y_t[0, 0] = 1
    y_t[1, :2] = 1
    assert metrics.metric_average(rl, truth_of(y_t, np.zeros_like(y_t)), CP(5)) == pytest.approx(0.3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_metric_average_matches_loop_oracle(n_users, n_items, seed):
    rng = np.random.default_rng(seed)
    y_t = rng.integers(0, 2, (n_users, n_items))
    y_c = rng.integers(0, 2, (n_users, n_items))
    order = np.array([rng.permutation(n_items) for _ in range(n_users)])
    rl = RankedList(order)
    k = int(rng.integers(1, n_items + 1))
    for kind in (CAR, CP(k), CDCG):
        got = metrics.metric_average(rl, truth_of(y_t, y_c), kind)
        want = metric_loop(order, y_t - y_c, kind.base, kind.k)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_ranking_invariant_under_monotone_transform(n_items, seed):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(3, n_items))
    assert np.array_equal(RankedList.from_scores(s).order, RankedList.from_scores(np.exp(2 * s) + 1).order)


# ---------------------------------------------------------------------------
# per-record estimators


def test_tau_naive_examples():
    assert metrics.tau_naive(0, 1, 0.25, 0.75) == 0.0
    assert metrics.tau_naive(1, 1, 0.25, 0.75) == 4.0
    assert metrics.tau_naive(1, 0, 0.2, 0.8) == -1.25


def test_naive_rates_degenerate():
    obs = observe([[1, 1]], [[0, 0]], [[1, 1]], [[0.5, 0.5]])
    with pytest.raises(DegenerateInputError):
        metrics.naive_rates(obs, 2)


def test_tau_ips_examples():
    assert metrics.tau_ips(1, 1, 0.25) == 4.0
    assert metrics.tau_ips(1, 0, 0.75) == -4.0
    assert metrics.tau_ips(1, 1, 0.001, CappingParams(0.01, 0.0)) == pytest.approx(100.0)
    assert metrics.tau_ips(0, 1, 0.3) == 0.0


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.2])
def test_tau_ips_rejects_propensity(p):
    with pytest.raises(PropensityError):
        metrics.tau_ips(1, 1, p)


def test_delta_estimated_examples():
    assert metrics.delta_estimated(np.array([1, 2]), [], [], [], [], CP(1)) == 0.0
    assert metrics.delta_estimated(np.array([1, 2]), [1], [1], [0.5], [0], CP(1)) == pytest.approx(2.0)


def test_estimate_average_consistent_with_delta_estimated(rng):
    n_users, n_items = 3, 6
    p = rng.uniform(0.05, 0.95, (n_users, n_items))
    y_t = rng.integers(0, 2, p.shape)
    y_c = rng.integers(0, 2, p.shape)
    z = (rng.random(p.shape) < p).astype(int)
    obs = observe(y_t, y_c, z, p)
    rl = RankedList(np.array([rng.permutation(n_items) for _ in range(n_users)]))
    cap = CappingParams.both(0.1)
    for kind in KINDS:
        per_user = []
        for u in range(n_users):
            m = obs.users == u
            per_user.append(metrics.delta_estimated(rl.ranks[u], obs.y[m], obs.z[m], obs.p[m], obs.items[m], kind, cap))
        assert metrics.estimate_average(rl, obs, kind, cap) == pytest.approx(np.mean(per_user), abs=1e-12)
        assert np.allclose(metrics.per_user_estimated(rl, obs, kind, cap), per_user)


def test_ips_unbiased_by_enumeration(rng):
    # 2 users x 3 items = 6 pairs, 64 assignment patterns
    p = rng.uniform(0.1, 0.9, (2, 3))
    y_t = np.array([[1, 0, 1], [1, 1, 0]])
    y_c = np.array([[0, 1, 1], [0, 0, 1]])
    rl = RankedList(np.array([[1, 2, 0], [0, 2, 1]]))
    truth = metrics.metric_average(rl, truth_of(y_t, y_c), CDCG)
    expect = sum(prob * metrics.estimate_average(rl, observe(y_t, y_c, z.reshape(2, 3), p), CDCG) for z, prob in assignment_patterns(p.ravel()))
    assert expect == pytest.approx(truth, abs=1e-12)


# ---------------------------------------------------------------------------
# closed-form bias


def _single_pair(p=0.2):
    truth = truth_of([[1]], [[0]])
    rl = RankedList(np.array([[0]]))
    return truth, rl, np.array([[p]])


def test_bias_estimated_propensity_zero_when_correct(rng):
    p = rng.uniform(0.1, 0.9, (3, 4))
    truth = truth_of(rng.integers(0, 2, p.shape), rng.integers(0, 2, p.shape))
    rl = RankedList(np.tile(np.arange(4), (3, 1)))
    assert metrics.bias_estimated_propensity(truth, rl, p, p, CDCG) == 0.0


def test_bias_estimated_propensity_zero_outcomes():
    rl = RankedList(np.array([[0, 1]]))
    truth = truth_of([[0, 0]], [[0, 0]])
    assert metrics.bias_estimated_propensity(truth, rl, [[0.2, 0.5]], [[0.4, 0.1]], CDCG) == 0.0


def test_bias_estimated_propensity_single_pair():
    # E[R_hat] - R with P=0.2 but weights 1/0.4: estimate is half the truth.
    # lambda for DCG at rank 1 with I=1 is 1, so the scaled contribution is 1.
    truth, rl, p = _single_pair(0.2)
    assert metrics.bias_estimated_propensity(truth, rl, p, [[0.4]], CDCG) == pytest.approx(-0.5)


def test_bias_estimated_propensity_matches_enumeration(rng):
    p = rng.uniform(0.1, 0.9, (2, 3))
    p_used = rng.uniform(0.1, 0.9, (2, 3))
    y_t = np.array([[1, 0, 1], [1, 1, 0]])
    y_c = np.array([[0, 1, 1], [1, 0, 1]])
    rl = RankedList(np.array([[1, 2, 0], [0, 2, 1]]))
    truth = truth_of(y_t, y_c)
    r = metrics.metric_average(rl, truth, CAR)
    expect = sum(
        prob * metrics.estimate_average(rl, observe(y_t, y_c, z.reshape(2, 3), p_used), CAR) for z, prob in assignment_patterns(p.ravel())
    )
    assert metrics.bias_estimated_propensity(truth, rl, p, p_used, CAR) == pytest.approx(expect - r, abs=1e-12)


def test_bias_cips_zero_inside_caps(rng):
    p = rng.uniform(0.2, 0.8, (3, 4))
    truth = truth_of(rng.integers(0, 2, p.shape), rng.integers(0, 2, p.shape))
    rl = RankedList(np.tile(np.arange(4), (3, 1)))
    assert metrics.bias_cips(truth, rl, p, CappingParams.both(0.1), CDCG) == 0.0


def test_bias_cips_single_pair():
    truth, rl, p = _single_pair(0.005)
    # treated weight 1/0.01 instead of 1/0.005: expected estimate is half the truth
    assert metrics.bias_cips(truth, rl, p, CappingParams(0.01, 0.0), CDCG) == pytest.approx(-0.5)


def test_bias_cips_matches_enumeration(rng):
    p = np.array([[0.02, 0.3, 0.97], [0.5, 0.05, 0.99]])
    y_t = np.array([[1, 0, 1], [1, 1, 0]])
    y_c = np.array([[0, 1, 1], [1, 1, 1]])
    rl = RankedList(np.array([[1, 2, 0], [0, 2, 1]]))
    cap = CappingParams(0.1, 0.05)
    truth = truth_of(y_t, y_c)
    r = metrics.metric_average(rl, truth, CDCG)
    expect = sum(prob * metrics.estimate_average(rl, observe(y_t, y_c, z.reshape(2, 3), p), CDCG, cap) for z, prob in assignment_patterns(p.ravel()))
    assert metrics.bias_cips(truth, rl, p, cap, CDCG) == pytest.approx(expect - r, abs=1e-12)


# ---------------------------------------------------------------------------
# deviation bound


def test_hoeffding_example():
    zeta = 2.0 / math.e**2
    assert metrics.hoeffding_bound(np.array([[1.0]]), np.array([[0.5]]), CappingParams(), zeta, 1, 1) == pytest.approx(4.0)


@pytest.mark.parametrize("zeta", [0.0, 1.0, 1.5])
def test_hoeffding_zeta_range(zeta):
    with pytest.raises(ParameterError):
        metrics.hoeffding_bound(np.ones((1, 1)), np.full((1, 1), 0.5), CappingParams(), zeta, 1, 1)


def test_capping_shrinks_bound(rng):
    lam = rng.normal(size=(3, 5))
    p = rng.uniform(1e-4, 0.3, (3, 5))
    loose = metrics.hoeffding_bound(lam, p, CappingParams(), 0.05, 3, 5)
    tight = metrics.hoeffding_bound(lam, p, CappingParams.both(0.1), 0.05, 3, 5)
    assert tight < loose


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.001, 0.999))
def test_capping_never_widens_ranges(chi, p):
    base = metrics.deviation_ranges(np.array([1.0]), np.array([p]))
    capped = metrics.deviation_ranges(np.array([1.0]), np.array([p]), CappingParams.both(chi))
    assert capped[0] <= base[0] + 1e-12


# ---------------------------------------------------------------------------
# estimator reliability


def _two_replicate_fixture():
    p = np.array([[0.5, 0.25]])
    rl = RankedList(np.array([[0, 1]]))
    # replicate 0: item 0 treated and bought (tau 1); replicate 1: item 1 control, bought (tau -1)
    t0, o0 = truth_of([[1, 0]], [[0, 0]]), observe([[1, 0]], [[0, 0]], [[1, 0]], p)
    t1, o1 = truth_of([[0, 0]], [[0, 1]]), observe([[0, 0]], [[0, 1]], [[0, 0]], p)
    return rl, ObservedDataset((o0, o1), 1, 2), GroundTruth(np.zeros((1, 2)), np.zeros((1, 2)), (t0, t1))


def test_estimator_mae_hand_computed():
    rl, obs, truth = _two_replicate_fixture()
    rep = metrics.estimator_mae(rl, obs, truth, CP(1))
    # CP@1 with I=2: weight 2 at rank 1, 0 at rank 2.
    # replicate 0: R = 2*1/2 = 1, R_hat = 2*(1/0.5)/2 = 2 -> error 1
    # replicate 1: item 1 at rank 2 has weight 0 -> R = R_hat = 0
    assert rep.estimates == pytest.approx([2.0, 0.0])
    assert rep.truths == pytest.approx([1.0, 0.0])
    assert rep.mae == pytest.approx(0.5)
    assert rep.n_replicates == 2


def test_estimator_mae_zero_with_true_tau():
    # P close to 1 for treated pairs and deterministic assignment makes the estimate exact
    y_t = np.array([[1, 0, 1]])
    z = np.array([[1, 1, 1]])
    rl = RankedList(np.array([[2, 0, 1]]))
    truth = truth_of(y_t, np.zeros_like(y_t))
    obs = observe(y_t, np.zeros_like(y_t), z, np.full((1, 3), 1 - 1e-12))
    rep = metrics.estimator_mae(rl, ObservedDataset((obs,), 1, 3), GroundTruth(y_t * 1.0, y_t * 0.0, (truth,)), CAR)
    assert rep.mae == pytest.approx(0.0, abs=1e-9)


def test_estimator_mae_requires_replicates():
    rl = RankedList(np.array([[0, 1]]))
    with pytest.raises(ParameterError):
        metrics.estimator_mae(rl, ObservedDataset((), 1, 2), GroundTruth(np.zeros((1, 2)), np.zeros((1, 2)), ()), CAR)


def test_capped_error_bound_adds_bias(rng):
    truth, rl, p = _single_pair(0.005)
    cap = CappingParams(0.01, 0.0)
    spread = metrics.hoeffding_bound(np.array([[1.0]]), p, cap, 0.1, 1, 1)
    assert metrics.capped_error_bound(truth, rl, p, cap, CDCG, 0.1) == pytest.approx(0.5 + spread)
