import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matchbench.audit import AuditReport, StageTrace, audit_bottlenecks, load_traces, record_stage
from matchbench.errors import DomainError

EXAMPLE = [{"encode": 20, "transpile": 50, "execute": 30},
           {"encode": 15, "transpile": 45, "execute": 40}]


def test_record_stage_accumulates():
    t = StageTrace()
    record_stage(t, "encode", 0.010)
    record_stage(t, "encode", 0.005)
    assert t["encode"] == pytest.approx(0.015, abs=1e-15)
    record_stage(t, "x", 0)
    assert t["x"] == 0
    assert set(t.durations) == {"encode", "x"}
    with pytest.raises(DomainError):
        record_stage(t, "x", -1e-3)


def test_stage_context_and_decorator():
    t = StageTrace()
    with t.stage("a"):
        sum(range(1000))

    @t.timed("b")
    def work():
        return 3
    assert work() == 3
    work()
    assert set(t.durations) == {"a", "b"}
    assert all(v >= 0 for v in t.durations.values())


def test_worked_example():
    r = audit_bottlenecks(EXAMPLE, top_k=2)
    assert abs(r.mean_shares["encode"] - 0.175) <= 1e-12
    assert abs(r.mean_shares["transpile"] - 0.475) <= 1e-12
    assert abs(r.mean_shares["execute"] - 0.35) <= 1e-12
    assert [s for s, _ in r.bottlenecks] == ["transpile", "execute"]
    assert r.replicate_count == 2 and not r.degenerate


def test_single_stage():
    r = audit_bottlenecks([{"only": 3.0}], top_k=1)
    assert r.mean_shares == {"only": 1.0}
    assert r.bottlenecks == (("only", 1.0),)


def test_k_larger_than_stage_count():
    assert len(audit_bottlenecks(EXAMPLE, top_k=10).bottlenecks) == 3


def test_missing_stage_counts_as_zero():
    r = audit_bottlenecks([{"a": 1.0}, {"a": 1.0, "b": 1.0}], top_k=2)
    assert r.mean_shares == {"a": 0.75, "b": 0.25}


def test_tie_break_by_name():
    r = audit_bottlenecks([{"b": 1.0, "a": 1.0, "c": 2.0}], top_k=3)
    assert [s for s, _ in r.bottlenecks] == ["c", "a", "b"]


def test_zero_total_runs_kept_in_divisor():
    r = audit_bottlenecks([{"a": 1.0, "b": 3.0}, {"a": 0.0, "b": 0.0}], top_k=2)
    assert r.skipped_replicates == 1
    assert math.isclose(sum(r.mean_shares.values()), 0.5)
    assert r.mean_shares["b"] == 0.375


def test_all_zero_is_degenerate():
    r = audit_bottlenecks([{"a": 0.0}, {"a": 0.0, "b": 0.0}], top_k=2)
    assert r.degenerate
    assert r.bottlenecks == ()
    assert r.mean_shares == {"a": 0.0, "b": 0.0}


def test_errors():
    with pytest.raises(DomainError):
        audit_bottlenecks([], top_k=1)
    with pytest.raises(DomainError):
        audit_bottlenecks(EXAMPLE, top_k=0)
    with pytest.raises(DomainError):
        audit_bottlenecks([{"a": -1.0}], top_k=1)
    with pytest.raises(DomainError):
        audit_bottlenecks(EXAMPLE, top_k=1, drift_samples_ppm=[1.0, -2.0])


def percentile_oracle(xs, p):
    return float(np.percentile(np.asarray(xs), p))


@pytest.mark.parametrize("seed", range(5))
def test_drift_stats_match_numpy(seed):
    rng = np.random.default_rng(seed)
    drift = rng.uniform(0, 100, size=20).tolist()
    r = audit_bottlenecks(EXAMPLE, 2, drift)
    assert abs(r.drift_mean_ppm - float(np.mean(drift))) <= 1e-12
    assert abs(r.drift_p95_ppm - percentile_oracle(drift, 95)) <= 1e-12


def test_single_drift_sample():
    r = audit_bottlenecks(EXAMPLE, 2, [7.5])
    assert r.drift_mean_ppm == r.drift_p95_ppm == 7.5
    assert audit_bottlenecks(EXAMPLE, 2).drift_mean_ppm is None


runs_st = st.lists(
    st.dictionaries(st.sampled_from(["ingest", "encode", "transpile", "execute", "verify"]),
                    st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1e4)),
                    min_size=1),
    min_size=1, max_size=12)


@settings(max_examples=300)
@given(runs_st, st.floats(min_value=1e-3, max_value=1e3), st.randoms(use_true_random=False))
def test_scale_and_permutation_invariance(runs, alpha, rnd):
    base = audit_bottlenecks(runs, top_k=3)
    scaled = audit_bottlenecks([{k: v * alpha for k, v in r.items()} for r in runs], top_k=3)
    for s in base.mean_shares:
        assert math.isclose(base.mean_shares[s], scaled.mean_shares[s], rel_tol=1e-9, abs_tol=1e-12)
    shuffled = list(runs)
    rnd.shuffle(shuffled)
    assert audit_bottlenecks(shuffled, top_k=3) == base


def test_traces_file(data_dir):
    traces = load_traces(data_dir / "traces_example.jsonl")
    assert [t.run_id for t in traces] == ["r1", "r2"]
    r = audit_bottlenecks(traces, 2)
    assert [s for s, _ in r.bottlenecks] == ["transpile", "execute"]


def test_trace_round_trip():
    t = StageTrace({"encode": 0.02, "transpile": 0.05}, run_id="r1")
    back = StageTrace.from_dict(t.to_dict())
    assert back.run_id == "r1"
    for k in t.durations:
        assert math.isclose(back[k], t[k], rel_tol=1e-15)
    doc = {"run_id": "x", "stages_ms": {"a": 12.5, "b": 0.0}}
    assert StageTrace.from_dict(doc).to_dict() == doc


def test_report_round_trip():
    r = audit_bottlenecks(EXAMPLE, 2, [1.0, 2.0, 30.0])
    assert AuditReport.from_dict(r.to_dict()) == r
