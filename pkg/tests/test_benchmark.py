import numpy as np

from parsumi.benchmark import (
    CSV_FIELDS,
    PhaseConfig,
    is_success,
    phase_diagram,
    read_csv,
    summarize,
    trial_seed,
    worker_count,
    write_csv,
)


def tiny(**kw):
    base = dict(missing=(0.0, 0.3), corruption=(0.0, 0.1), trials=1, m=10, n=12, rank=2)
    return PhaseConfig(**(base | kw))


def test_seeds_are_distinct_and_stable():
    seeds = {trial_seed(0, c, t) for c in range(5) for t in range(5)}
    assert len(seeds) == 25
    assert trial_seed(3, 1, 2) == trial_seed(3, 1, 2)


def test_success_rule():
    assert is_success(0.03, 0.01)
    assert not is_success(0.031, 0.01)
    assert is_success(1e-7, 0.0)
    assert not is_success(float("nan"), 0.01)


def test_worker_count_respects_env(monkeypatch):
    monkeypatch.setenv("PARSUMI_THREADS", "1")
    assert worker_count(8) == 1


def test_grid_rows_and_determinism(tmp_path):
    cfg = tiny()
    recs = phase_diagram(cfg, workers=1)
    assert len(recs) == 4
    for r in recs:
        r.seconds = 0.0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(a, recs)
    recs2 = phase_diagram(cfg, workers=1)
    for r in recs2:
        r.seconds = 0.0
    write_csv(b, recs2)
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == ",".join(CSV_FIELDS)
    back = read_csv(a)
    assert len(back) == 4 and float(back[0]["missing_frac"]) == 0.0


def test_clean_cell_is_exact_and_solvers_are_tagged(tmp_path):
    cfg = tiny(missing=(0.0,), corruption=(0.0,), sigma=0.0, solvers=("parsumi", "apg-only"), trials=2)
    recs = phase_diagram(cfg, workers=1)
    assert len(recs) == 4
    assert np.mean([r.rmse for r in recs if r.solver == "parsumi"]) < 1e-6
    write_csv(tmp_path / "t.csv", recs)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].endswith(",solver")
    assert {l.rsplit(",", 1)[1] for l in lines[1:]} == {"parsumi", "apg-only"}
    cells = summarize(recs)
    assert {c.solver for c in cells} == {"parsumi", "apg-only"}
