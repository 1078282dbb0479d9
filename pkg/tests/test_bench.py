import json
import math

import numpy as np
import pytest

from phasekit import (
    Ensemble,
    ExperimentConfig,
    ExperimentKind,
    Field,
    ResultTable,
    TERNARY,
    export,
    generate_signal,
    run_init_experiment,
    run_recovery_experiment,
    run_recovery_trial,
    trial_seed,
)

TERNARY_REAL = Ensemble(Field.REAL, TERNARY)

SMALL_INIT = ExperimentConfig(
    kind=ExperimentKind.INIT_ERROR,
    ensemble=TERNARY_REAL,
    d=16,
    ratio_grid=(4, 8),
    trials=4,
    base_seed=7,
)

SMALL_RECOVERY = ExperimentConfig(
    kind=ExperimentKind.SUCCESS_RATE,
    ensemble=TERNARY_REAL,
    d=16,
    ratio_grid=(6,),
    trials=3,
    max_iters=500,
    base_seed=7,
)


def test_generate_signal_spike_ratio():
    x = generate_signal(8, seed=0)
    plain = generate_signal(8, seed=0, spike_factor=1.0)
    assert np.array_equal(x[:-2], plain[:-2])
    assert np.array_equal(x[-2:], 200.0 * plain[-2:])


def test_generate_signal_complex_and_small_d():
    z = generate_signal(4, seed=1, field=Field.COMPLEX)
    assert z.dtype == np.complex128
    with pytest.raises(ValueError):
        generate_signal(1, seed=0)


def test_generate_signal_second_moment():
    # E||x||^2 = (d - 2) v + 2 * 200^2 v with per-coordinate variance v = 1
    d, n = 16, 10_000
    total = sum(float(np.sum(generate_signal(d, seed=s) ** 2)) for s in range(n))
    expected = (d - 2) + 2 * 200.0 ** 2
    assert total / n == pytest.approx(expected, rel=0.05)


def test_trial_seed_distinct_and_pure():
    a = trial_seed(0, 2.0, 0)
    b = trial_seed(0, 2.0, 0)
    assert np.array_equal(a.generate_state(4), b.generate_state(4))
    others = [trial_seed(0, 2.0, 1), trial_seed(0, 4.0, 0), trial_seed(1, 2.0, 0)]
    for o in others:
        assert not np.array_equal(a.generate_state(4), o.generate_state(4))


def test_effective_trials_defaults():
    assert SMALL_INIT.effective_trials == 4
    init_default = ExperimentConfig(ExperimentKind.INIT_ERROR, TERNARY_REAL)
    assert init_default.effective_trials == 50
    succ_default = ExperimentConfig(ExperimentKind.SUCCESS_RATE, TERNARY_REAL)
    assert succ_default.effective_trials == 100


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(ExperimentKind.INIT_ERROR, TERNARY_REAL, d=1)
    with pytest.raises(ValueError):
        ExperimentConfig(ExperimentKind.INIT_ERROR, TERNARY_REAL, ratio_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(ExperimentKind.INIT_ERROR, TERNARY_REAL, trials=0)


def test_init_experiment_shape_and_determinism():
    t1 = run_init_experiment(SMALL_INIT)
    t2 = run_init_experiment(SMALL_INIT)
    assert t1.columns == ["ratio", "N", "gsi_mean_rel_error", "si_mean_rel_error", "trials"]
    assert [r["N"] for r in t1.rows] == [64, 128]
    assert t1.to_csv() == t2.to_csv()
    for row in t1.rows:
        assert 0.0 <= row["gsi_mean_rel_error"] < 2.5
        assert row["trials"] == 4


def test_init_experiment_thread_invariance():
    serial = run_init_experiment(SMALL_INIT)
    import dataclasses
    threaded = run_init_experiment(dataclasses.replace(SMALL_INIT, threads=4))
    a = [dict(r) for r in serial.rows]
    b = [dict(r) for r in threaded.rows]
    for ra, rb in zip(a, b):
        ra.pop("trials"), rb.pop("trials")
        for k in ra:
            assert ra[k] == rb[k]


def test_recovery_trial_record_fields():
    rec = run_recovery_trial(SMALL_RECOVERY, ratio=6, i=0)
    assert rec.trial_index == 0
    assert rec.seed_key == (7, 6000, 0)
    assert rec.init_rel_error >= 0.0
    assert rec.iterations <= 500
    assert rec.success == (rec.final_rel_error < SMALL_RECOVERY.success_threshold)


def test_recovery_experiment_determinism():
    t1 = run_recovery_experiment(SMALL_RECOVERY)
    t2 = run_recovery_experiment(SMALL_RECOVERY)
    assert t1.to_csv() == t2.to_csv()
    assert t1.rows[0]["success_rate"] in {0.0, 1 / 3, 2 / 3, 1.0}


def test_kind_mismatch_rejected():
    with pytest.raises(ValueError):
        run_init_experiment(SMALL_RECOVERY)
    with pytest.raises(ValueError):
        run_recovery_experiment(SMALL_INIT)


def test_csv_round_trips_floats():
    table = run_init_experiment(SMALL_INIT)
    lines = table.to_csv().strip().split("\n")
    assert lines[0] == "ratio,N,gsi_mean_rel_error,si_mean_rel_error,trials"
    cells = lines[1].split(",")
    assert float(cells[2]) == table.rows[0]["gsi_mean_rel_error"]  # 17g exact


def test_empty_table_header_only():
    table = ResultTable(ExperimentKind.INIT_ERROR, ["a", "b"], [])
    assert table.to_csv() == "a,b\n"


def test_export_csv_and_json(tmp_path):
    table = run_init_experiment(SMALL_INIT)
    csv_path = tmp_path / "out.csv"
    json_path = tmp_path / "out.json"
    export(table, str(csv_path), format="csv")
    export(table, str(json_path), format="json")
    assert csv_path.read_text() == table.to_csv()
    payload = json.loads(json_path.read_text())
    assert payload["metadata"]["base_seed"] == 7
    assert payload["metadata"]["d"] == 16
    assert len(payload["rows"]) == 2
    with pytest.raises(ValueError):
        export(table, str(csv_path), format="xml")
    with pytest.raises(OSError):
        export(table, str(tmp_path / "missing" / "x.csv"))
