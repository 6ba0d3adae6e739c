import numpy as np
import pytest

from causalrank.core import (
    FormatError,
    GroundTruth,
    InteractionLog,
    MFModel,
    NumericError,
    ObservedDataset,
    OutcomeReplicate,
    PropensityModel,
    Provenance,
    RankedList,
    StructuralError,
    validate_dataset,
)
from tests.conftest import tiny_dataset


def test_consistent_tiny_dataset_has_no_violations():
    d, g, pm = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    assert validate_dataset(d, g, pm) == []


def test_observed_outcome_mismatch_is_reported():
    d, g, pm = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    obs = d.replicates[0]
    broken = type(obs)(obs.users, obs.items, np.zeros_like(obs.y), obs.z, obs.p)
    report = validate_dataset(ObservedDataset((broken,), 1, 2), g, pm)
    assert report == ["observed outcome mismatch at (0,0)"]


def test_zero_propensity_is_reported():
    d, g, _ = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    report = validate_dataset(d, g, PropensityModel(np.array([[0.5, 0.0]])))
    assert "propensity below clip floor" in report


@pytest.mark.parametrize(
    "pm_shape, dim",
    [((2, 2), "user"), ((1, 3), "item")],
)
def test_shape_mismatch_names_dimension(pm_shape, dim):
    d, g, _ = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    with pytest.raises(StructuralError, match=dim):
        validate_dataset(d, g, PropensityModel(np.full(pm_shape, 0.5)))


def test_replicate_count_mismatch():
    d, g, pm = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    with pytest.raises(StructuralError, match="replicate"):
        validate_dataset(ObservedDataset(d.replicates * 2, 1, 2), g, pm)


def test_outcome_probability_range_checked():
    d, g, pm = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    bad = GroundTruth(np.array([[1.5, 0.0]]), g.mu_c, g.replicates)
    assert "outcome probability outside [0, 1]" in validate_dataset(d, bad, pm)


def test_tau_is_ternary():
    rep = OutcomeReplicate([0, 0, 1], [0, 1, 1], [1, 0, 1], [0, 1, 1])
    assert rep.tau.tolist() == [1, -1, 0]
    assert rep.dense_tau(2, 2).tolist() == [[1, -1], [0, 0]]


def test_non_ternary_tau_is_reported():
    d, g, pm = tiny_dataset([1, 0], [0, 0], [1, 0], [0.5, 0.5])
    bad = GroundTruth(g.mu_t, g.mu_c, (OutcomeReplicate([0], [0], [2], [0]),))
    assert any("tau outside" in v for v in validate_dataset(d, bad, pm))


def test_interaction_log_rejects_duplicate_triples():
    with pytest.raises(FormatError, match="duplicate"):
        InteractionLog([0, 0], [0, 0], [0, 0], [1, 0], [1, 1], 1, 1, 1)


def test_interaction_log_bounds():
    with pytest.raises(StructuralError):
        InteractionLog([1], [0], [0], [1], [1], 1, 1, 1)


def test_core_arrays_are_read_only():
    rep = OutcomeReplicate([0], [0], [1], [0])
    with pytest.raises(ValueError):
        rep.y_t[0] = 0


def test_provenance_round_trip():
    p = Provenance("misspecified", xi=0.5, base=Provenance("personalized", beta=2.0))
    assert Provenance.from_dict(p.to_dict()) == p


def test_mf_model_rejects_non_finite():
    with pytest.raises(NumericError):
        MFModel(np.array([[np.nan]]), np.zeros((2, 1)))


def test_ranked_list_validates_permutation():
    with pytest.raises(StructuralError):
        RankedList(np.array([[0, 0, 1]]))


def test_ranked_list_from_scores_ties_by_item_index():
    rl = RankedList.from_scores(np.array([[0.5, 2.0, 1.0], [0.0, 0.0, 0.0]]))
    assert rl.order.tolist() == [[1, 2, 0], [0, 1, 2]]
    assert rl.ranks.tolist() == [[3, 1, 2], [1, 2, 3]]
