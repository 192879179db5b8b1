"""Cross-replicate parameter statistics and score trends."""

import json

import numpy as np
import pytest

from topoforge import problem as tp
from topoforge.agents.judge import JudgeVerdict
from topoforge.agents.orchestrator import RevisionRecord, RunLog
from topoforge.analysis import parameter_stats, score_trend, stats_csv


def spec_with(**leaf_values):
    """Phone-stand spec with dotted-path leaf overrides."""
    data = json.loads(tp.spec_to_json(tp.phone_stand()))
    for path, value in leaf_values.items():
        node = data
        keys = path.split(".")
        for key in keys[:-1]:
            node = node[key]
        node[keys[-1]] = value
    spec = tp.validate_problem(json.dumps(data))
    assert isinstance(spec, tp.ProblemSpec), spec
    return spec


def make_log(revision_specs, scores=None, replicate="r0"):
    """RunLog from a list of specs (index 0 = original) and optional scores."""
    records = []
    for i, spec in enumerate(revision_specs):
        verdict = None
        if scores is not None and scores[i] is not None:
            verdict = JudgeVerdict(score=scores[i])
        records.append(
            RevisionRecord(
                index=i,
                spec=spec,
                base_index=None if i == 0 else i - 1,
                verdict=verdict,
            )
        )
    return RunLog(preference="pref", replicate=replicate, records=records)


@pytest.fixture
def schedule_log():
    """One replicate whose revisions sweep p 3->5,7,10,12 and f 0.15->...->0.02."""
    p_values = [3.0, 5.0, 7.0, 10.0, 12.0]
    f_values = [0.15, 0.10, 0.05, 0.03, 0.02]
    specs = [
        spec_with(**{"simp.penalty": p, "simp.volfrac": f})
        for p, f in zip(p_values, f_values)
    ]
    return make_log(specs)


def _stat(stats, path):
    match = [s for s in stats if s.path == path]
    assert len(match) == 1, f"no stat for {path}"
    return match[0]


def test_penalty_deltas_against_original(schedule_log):
    stats = parameter_stats([schedule_log])
    p = _stat(stats, "simp.penalty")
    assert p.count == 4
    assert p.avg_delta == pytest.approx((2 + 4 + 7 + 9) / 4)  # 5.5
    assert p.avg_abs_delta == pytest.approx(5.5)


def test_volfrac_deltas(schedule_log):
    stats = parameter_stats([schedule_log])
    f = _stat(stats, "simp.volfrac")
    assert f.count == 4
    assert f.avg_delta == pytest.approx(-0.1)
    assert f.avg_abs_delta == pytest.approx(0.1)


def test_untouched_parameter_is_not_modified(schedule_log):
    stats = parameter_stats([schedule_log])
    rmin = _stat(stats, "simp.rmin")
    assert rmin.count == 0
    assert not rmin.modified
    assert rmin.avg_delta is None


def test_mesh_tracked_per_axis():
    specs = [spec_with(), spec_with(**{"mesh.nelx": 160})]
    stats = parameter_stats([make_log(specs)])
    assert _stat(stats, "mesh.nelx").count == 1
    assert _stat(stats, "mesh.nelx").avg_delta == pytest.approx(32.0)
    assert _stat(stats, "mesh.nely").count == 0
    assert _stat(stats, "mesh.nelz").count == 0


def test_boolean_toggle_counts_as_unit_delta():
    specs = [spec_with(), spec_with(**{"simp.heaviside": False})]
    stats = parameter_stats([make_log(specs)])
    hs = _stat(stats, "simp.heaviside")
    assert hs.count == 1
    assert hs.avg_delta == pytest.approx(-1.0)


def test_signed_average_bounded_by_absolute():
    specs = [
        spec_with(),
        spec_with(**{"simp.penalty": 5.0}),
        spec_with(**{"simp.penalty": 2.0}),
    ]
    stats = parameter_stats([make_log(specs)])
    p = _stat(stats, "simp.penalty")
    assert p.count == 2
    assert p.avg_delta == pytest.approx(0.5)  # (+2 - 1) / 2
    assert p.avg_abs_delta == pytest.approx(1.5)
    assert abs(p.avg_delta) <= p.avg_abs_delta


def test_permutation_invariant_over_replicates(schedule_log):
    other = make_log([spec_with(), spec_with(**{"simp.penalty": 4.0})], replicate="r1")
    forward = parameter_stats([schedule_log, other])
    backward = parameter_stats([other, schedule_log])
    assert forward == backward


def test_deltas_always_vs_original_not_previous():
    # p: 3 -> 4 -> 4; the second revision matches its predecessor, not the
    # original, so it still counts with delta +1
    specs = [spec_with(), spec_with(**{"simp.penalty": 4.0}), spec_with(**{"simp.penalty": 4.0})]
    stats = parameter_stats([make_log(specs)])
    p = _stat(stats, "simp.penalty")
    assert p.count == 2
    assert p.avg_delta == pytest.approx(1.0)


def test_engineered_cohort_reproduces_table_average():
    # 10 replicates x 4 revisions; p deltas chosen so the cohort average is 4.81
    logs = []
    for rep in range(10):
        delta = 4.0 if rep < 5 else 5.62
        specs = [spec_with()] + [spec_with(**{"simp.penalty": 3.0 + delta}) for _ in range(4)]
        logs.append(make_log(specs, replicate=f"r{rep}"))
    p = _stat(parameter_stats(logs), "simp.penalty")
    assert p.count == 40
    assert p.avg_delta == pytest.approx(4.81, abs=1e-9)


def test_stats_csv_marks_unmodified(schedule_log):
    text = stats_csv(parameter_stats([schedule_log]))
    assert "simp.rmin,n/m,n/m,0" in text
    assert any(line.startswith("simp.penalty,+5.5") for line in text.splitlines())


# --- score trend --------------------------------------------------------------


def test_constant_scores_flat_trend():
    log = make_log([spec_with()] * 5, scores=[3, 3, 3, 3, 3])
    trend = score_trend([log])
    assert trend.means == (3.0, 3.0, 3.0, 3.0, 3.0)
    assert trend.slope == pytest.approx(0.0, abs=1e-12)


def test_linear_means_recover_slope():
    log_a = make_log([spec_with()] * 5, scores=[2.0, 2.5, 3.0, 3.5, 4.0], replicate="a")
    log_b = make_log([spec_with()] * 5, scores=[3.0, 3.0, 3.0, 3.0, 3.0], replicate="b")
    trend = score_trend([log_a, log_b])
    assert trend.means == pytest.approx((2.5, 2.75, 3.0, 3.25, 3.5))
    assert trend.slope == pytest.approx(0.25, abs=1e-12)
    assert trend.replicates == 2


def test_single_replicate_ols_slope():
    log = make_log([spec_with()] * 5, scores=[3, 4, 2, 5, 1])
    trend = score_trend([log])
    # hand-computed least squares: sum((x-2)(y-3)) / sum((x-2)^2) = -3/10
    assert trend.slope == pytest.approx(-0.3, abs=1e-12)


def test_reversed_scores_negate_slope():
    scores = [2.0, 4.5, 3.0, 5.0, 1.5]
    forward = score_trend([make_log([spec_with()] * 5, scores=scores)])
    backward = score_trend([make_log([spec_with()] * 5, scores=scores[::-1])])
    assert forward.slope == pytest.approx(-backward.slope, abs=1e-12)


def test_unjudged_record_rejected():
    log = make_log([spec_with()] * 3, scores=[3, None, 3])
    with pytest.raises(ValueError, match="unjudged"):
        score_trend([log])


def test_mismatched_lengths_rejected():
    log_a = make_log([spec_with()] * 3, scores=[3, 3, 3], replicate="a")
    log_b = make_log([spec_with()] * 2, scores=[3, 3], replicate="b")
    with pytest.raises(ValueError, match="expected"):
        score_trend([log_a, log_b])


def test_empty_inputs_rejected():
    with pytest.raises(ValueError):
        score_trend([])
    with pytest.raises(ValueError):
        score_trend([RunLog(preference="p")])


def test_means_respect_score_bounds():
    rng = np.random.default_rng(2)
    logs = []
    for rep in range(4):
        scores = [float(s) for s in rng.choice(np.arange(2, 11) / 2.0, size=5)]
        logs.append(make_log([spec_with()] * 5, scores=scores, replicate=f"r{rep}"))
    trend = score_trend(logs)
    assert all(1.0 <= m <= 5.0 for m in trend.means)
