"""Sampler behavior: uniform startup, TPE machinery, study loop contracts."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from stylefit.optimize import (
    NumericParzen,
    StudyConfig,
    StudyError,
    TrialFailure,
    TrialRecord,
    _split_good_bad,
    categorical_weights,
    dump_trials,
    load_trials,
    make_rng,
    run_study,
    suggest,
    tpe_density_eval,
)
from stylefit.params import ParamError, ParamSpace, ParamSpec, validate

X_SPACE = ParamSpace((ParamSpec("x", "continuous", 0.0, 1.0),))
MIXED = ParamSpace(
    (
        ParamSpec("x", "continuous", 0.0, 1.0),
        ParamSpec("n", "integer", 0, 10),
        ParamSpec("mode", "categorical", choices=("a", "b", "c")),
    )
)


def mixed_objective(a: dict) -> float:
    return (a["x"] - 0.4) ** 2 + (a["n"] - 3) ** 2 / 100.0 + (0.0 if a["mode"] == "b" else 0.3)


# --- configuration and record validation ---------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"budget": 0},
        {"sampler": "grid"},
        {"n_startup": 0},
        {"gamma": 0.0},
        {"gamma": 1.0},
        {"n_candidates": 0},
        {"prior_weight": 0.0},
        {"seed": -1},
        {"seed": 2**64},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        StudyConfig(**kwargs)


def test_config_accepts_extreme_legal_values():
    StudyConfig(seed=2**64 - 1, budget=1, n_startup=1, gamma=0.999, n_candidates=1)


def test_trial_record_validation():
    TrialRecord(0, {"x": 0.5}, 1.0, "complete")
    TrialRecord(1, {"x": 0.5}, None, "failed")
    with pytest.raises(ValueError, match="state"):
        TrialRecord(0, {}, 1.0, "running")
    with pytest.raises(ValueError, match="finite"):
        TrialRecord(0, {}, None, "complete")
    with pytest.raises(ValueError, match="finite"):
        TrialRecord(0, {}, float("inf"), "complete")


def test_make_rng_is_deterministic():
    assert list(make_rng(5).random(4)) == list(make_rng(5).random(4))
    assert list(make_rng(5).random(4)) != list(make_rng(6).random(4))


# --- suggest: uniform phase ------------------------------------------------


def _manual_uniform(rng) -> dict:
    # The documented uniform rule, drawn in space order.
    return {
        "x": float(rng.uniform(0.0, 1.0)),
        "n": int(rng.integers(0, 11)),
        "mode": ("a", "b", "c")[int(rng.integers(3))],
    }


def test_startup_suggestions_are_plain_uniform_draws():
    history = [TrialRecord(i, _manual_uniform(make_rng(i)), float(i), "complete") for i in range(5)]
    config = StudyConfig(n_startup=20)
    got = suggest(history, MIXED, config, make_rng(42))
    assert got == _manual_uniform(make_rng(42))


def test_random_sampler_ignores_history():
    history = [
        TrialRecord(i, _manual_uniform(make_rng(i)), float(i % 7), "complete") for i in range(100)
    ]
    config = StudyConfig(sampler="random", n_startup=1)
    assert suggest(history, MIXED, config, make_rng(9)) == _manual_uniform(make_rng(9))


def test_startup_counts_completed_trials_only():
    # 30 failed trials leave the sampler in its uniform phase.
    history = [TrialRecord(i, _manual_uniform(make_rng(i)), None, "failed") for i in range(30)]
    config = StudyConfig(n_startup=20)
    assert suggest(history, MIXED, config, make_rng(3)) == _manual_uniform(make_rng(3))


# --- suggest: TPE phase -----------------------------------------------------


def _mixed_history(n: int, seed: int = 77) -> list[TrialRecord]:
    rng = make_rng(seed)
    out = []
    for i in range(n):
        a = _manual_uniform(rng)
        out.append(TrialRecord(i, a, mixed_objective(a), "complete"))
    return out


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_tpe_suggestions_are_always_valid(seed):
    history = _mixed_history(30)
    config = StudyConfig(n_startup=5)
    a = suggest(history, MIXED, config, make_rng(seed))
    assert validate(MIXED, a) == []
    assert isinstance(a["x"], float)
    assert isinstance(a["n"], int) and not isinstance(a["n"], bool)
    assert isinstance(a["mode"], str)


def test_failed_trials_do_not_influence_tpe():
    completed = _mixed_history(25)
    noisy = []
    rng = make_rng(5)
    for t in completed:
        noisy.append(t)
        # Interleave failed trials with arbitrary assignments.
        noisy.append(TrialRecord(1000 + t.index, _manual_uniform(rng), None, "failed"))
    config = StudyConfig(n_startup=5)
    assert suggest(noisy, MIXED, config, make_rng(21)) == suggest(
        completed, MIXED, config, make_rng(21)
    )


def test_good_bad_split_breaks_ties_by_trial_index():
    records = [
        TrialRecord(0, {"x": 0.1}, 1.0, "complete"),
        TrialRecord(1, {"x": 0.2}, 1.0, "complete"),
        TrialRecord(2, {"x": 0.3}, 2.0, "complete"),
        TrialRecord(3, {"x": 0.4}, 0.5, "complete"),
    ]
    good, bad = _split_good_bad(records, 0.5)
    assert [t.index for t in good] == [3, 0]
    assert [t.index for t in bad] == [1, 2]


def test_good_fraction_rounds_up():
    records = [TrialRecord(i, {"x": 0.5}, float(i), "complete") for i in range(5)]
    good, bad = _split_good_bad(records, 0.25)
    assert len(good) == 2  # ceil(0.25 * 5)
    assert len(bad) == 3


def test_tpe_concentrates_near_planted_optimum():
    # With 100 observations of (x - 0.3)^2 the good-side density sits
    # around 0.3, so fresh suggestion draws should hit [0.1, 0.5] almost
    # always, regardless of their rng stream.
    rng = make_rng(123)
    history = [
        TrialRecord(i, {"x": x}, (x - 0.3) ** 2, "complete")
        for i, x in enumerate(float(v) for v in rng.random(100))
    ]
    config = StudyConfig()
    hits = sum(
        0.1 <= suggest(history, X_SPACE, config, make_rng(1000 + s))["x"] <= 0.5
        for s in range(100)
    )
    assert hits >= 95


# --- Parzen density ---------------------------------------------------------


def test_parzen_rejects_observations_outside_bounds():
    with pytest.raises(ValueError, match="outside bounds"):
        NumericParzen([1.5], 0.0, 1.0)


def test_parzen_prior_only_density_is_uniform():
    dens = NumericParzen([], 0.0, 1.0)
    for x in (0.0, 0.25, 0.99):
        assert dens.pdf(x) == pytest.approx(1.0)
    assert NumericParzen([], -3.0, 7.0).pdf(0.0) == pytest.approx(0.1)


def test_parzen_density_peaks_at_observation():
    dens = NumericParzen([0.5], 0.0, 1.0)
    assert dens.pdf(0.5) > dens.pdf(0.0)
    assert dens.pdf(0.5) > 1.0  # above the uniform level


def test_parzen_rejects_query_outside_bounds():
    dens = NumericParzen([0.5], 0.0, 1.0)
    with pytest.raises(ValueError, match="outside bounds"):
        dens.pdf(1.2)
    with pytest.raises(ValueError, match="outside bounds"):
        dens.pdf(np.array([0.5, -0.1]))


@pytest.mark.parametrize(
    "obs,low,high",
    [
        ([], 0.0, 1.0),
        ([0.2, 0.5, 0.9], 0.0, 1.0),
        ([0.42] * 10, 0.0, 1.0),
        ([-2.7, 0.0, 6.9, 6.95], -3.0, 7.0),
    ],
)
def test_parzen_density_integrates_to_one(obs, low, high):
    dens = NumericParzen(obs, low, high)
    mass, err = quad(dens.pdf, low, high, points=sorted(set(obs)), limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_parzen_pdf_accepts_arrays():
    dens = NumericParzen([0.3, 0.6], 0.0, 1.0)
    out = dens.pdf(np.array([0.1, 0.3, 0.9]))
    assert out.shape == (3,)
    assert (out > 0).all()


def test_parzen_bandwidth_floor_for_degenerate_observations():
    dens = NumericParzen([0.5] * 5, 0.0, 1.0)
    assert dens.bandwidth == pytest.approx(0.01)  # (high - low) / 100
    assert math.isfinite(dens.pdf(0.5))


def test_parzen_sampling_stays_in_bounds_and_replays():
    dens = NumericParzen([0.2, 0.8], -1.0, 2.0)
    draws = dens.sample(make_rng(3), 500)
    assert draws.shape == (500,)
    assert (draws >= -1.0).all() and (draws <= 2.0).all()
    assert list(draws) == list(dens.sample(make_rng(3), 500))


# --- categorical densities ---------------------------------------------------


def test_categorical_weights_are_smoothed_frequencies():
    w = categorical_weights(["a", "a", "a", "b"], ("a", "b"))
    assert list(w) == [pytest.approx(4 / 6), pytest.approx(2 / 6)]


def test_categorical_weights_with_no_observations():
    assert list(categorical_weights([], ("a", "b"))) == [0.5, 0.5]


def test_categorical_weights_reject_unknown_observation():
    with pytest.raises(ValueError, match="declared choice"):
        categorical_weights(["z"], ("a", "b"))


def test_density_eval_dispatches_by_kind():
    spec = ParamSpec("mode", "categorical", choices=("a", "b", "c"))
    assert tpe_density_eval(["a", "b"], spec, "a") == pytest.approx(2 / 5)
    with pytest.raises(ValueError, match="declared choice"):
        tpe_density_eval(["a"], spec, "z")
    xspec = ParamSpec("x", "continuous", 0.0, 1.0)
    assert tpe_density_eval([], xspec, 0.7) == pytest.approx(1.0)
    assert tpe_density_eval([0.5], xspec, 0.5) > tpe_density_eval([0.5], xspec, 0.0)


# --- run_study ---------------------------------------------------------------


def test_study_converges_on_a_smooth_bowl():
    result = run_study(
        lambda a: (a["x"] - 0.3) ** 2, X_SPACE, StudyConfig(seed=7, budget=200)
    )
    assert abs(result.best.assignment["x"] - 0.3) <= 0.05
    assert len(result.trials) == 200


def test_constant_objective_keeps_earliest_best():
    result = run_study(lambda a: 1.0, X_SPACE, StudyConfig(seed=0, budget=10))
    assert result.best.objective == 1.0
    assert result.best.index == 0
    assert [t.state for t in result.trials] == ["complete"] * 10


def test_equal_seeds_reproduce_the_exact_trial_sequence():
    config = StudyConfig(seed=11, budget=60, n_startup=10)
    r1 = run_study(mixed_objective, MIXED, config)
    r2 = run_study(mixed_objective, MIXED, config)
    assert [(t.assignment, t.objective, t.state) for t in r1.trials] == [
        (t.assignment, t.objective, t.state) for t in r2.trials
    ]


def test_initial_assignments_run_first_and_respect_budget():
    initial = [{"x": 0.9}, {"x": 0.1}, {"x": 0.5}]
    result = run_study(
        lambda a: a["x"], X_SPACE, StudyConfig(seed=0, budget=2), initial=initial
    )
    assert len(result.trials) == 2
    assert result.trials[0].assignment == {"x": 0.9}
    assert result.trials[1].assignment == {"x": 0.1}
    assert result.best.assignment == {"x": 0.1}


def test_invalid_initial_assignment_is_rejected_up_front():
    calls = []

    def objective(a):
        calls.append(a)
        return 0.0

    with pytest.raises(ParamError):
        run_study(objective, X_SPACE, StudyConfig(budget=5), initial=[{"x": 2.0}])
    assert calls == []


def test_all_failed_trials_raise_study_error():
    def objective(a):
        raise TrialFailure("nope")

    with pytest.raises(StudyError, match="failed"):
        run_study(objective, X_SPACE, StudyConfig(seed=0, budget=10))


def test_non_finite_objectives_become_failed_trials():
    def objective(a):
        return float("nan") if a["x"] < 0.5 else a["x"]

    result = run_study(objective, X_SPACE, StudyConfig(seed=1, budget=40))
    failed = [t for t in result.trials if t.state == "failed"]
    assert failed and all(t.objective is None for t in failed)
    assert result.best.state == "complete"
    assert result.best.objective >= 0.5


def test_on_trial_sees_every_trial_in_order():
    seen = []
    result = run_study(
        lambda a: a["x"],
        X_SPACE,
        StudyConfig(seed=2, budget=15),
        on_trial=seen.append,
    )
    assert seen == result.trials
    assert [t.index for t in seen] == list(range(15))


def test_integer_parameters_stay_integral_past_startup():
    config = StudyConfig(seed=4, budget=50, n_startup=10)
    result = run_study(mixed_objective, MIXED, config)
    for t in result.trials:
        n = t.assignment["n"]
        assert isinstance(n, int) and not isinstance(n, bool)
        assert 0 <= n <= 10


# --- trial persistence -------------------------------------------------------


def test_trial_log_round_trip(tmp_path):
    result = run_study(mixed_objective, MIXED, StudyConfig(seed=3, budget=25, n_startup=5))
    path = tmp_path / "trials.jsonl"
    dump_trials(result.trials, path)
    loaded = load_trials(path)
    assert loaded == result.trials
    assert isinstance(loaded[0].assignment["n"], int)
    assert isinstance(loaded[0].assignment["x"], float)


def test_trial_log_skips_blank_lines(tmp_path):
    path = tmp_path / "trials.jsonl"
    dump_trials([TrialRecord(0, {"x": 0.5}, 1.0, "complete")], path)
    path.write_text(path.read_text() + "\n\n")
    assert len(load_trials(path)) == 1
