import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaygames.automata import (
    Event,
    LearningParams,
    SimConfig,
    _stage_reward_probs,
    automaton_step,
    expected_increment,
    member_seed,
    play_stage,
    run_ensemble,
    run_simulation,
)
from delaygames.dynamics import drift, integrate
from delaygames.game_core import GameError, StateVector, builtin_game

from conftest import games, learning_params, prob, random_instance, state


class TestParams:
    def test_enforces_ordering(self):
        with pytest.raises(GameError):
            LearningParams(0.5, 0.4, 0.1)
        with pytest.raises(GameError):
            LearningParams(0.02, 0.4, 1.5)

    def test_override(self):
        p = LearningParams(0.5, 0.4, 0.1, unchecked=True)
        assert p.alpha == 0.5


class TestAutomatonStep:
    def test_absorbing(self):
        for params in (LearningParams(0.02, 0.4, 0.1), LearningParams(0.3, 0.9, 1.0)):
            assert automaton_step(1.0, Event.REWARD1, params) == 1.0

    def test_reward_arithmetic(self):
        assert automaton_step(0.5, Event.REWARD1, LearningParams(0.02, 0.4, 0.01)) == pytest.approx(0.502)

    def test_penalty_arithmetic(self):
        assert automaton_step(0.5, Event.PENALTY2, LearningParams(0.02, 0.4, 0.1)) == pytest.approx(0.501)

    def test_other_cases(self):
        params = LearningParams(0.1, 0.5, 1.0)
        assert automaton_step(0.4, Event.REWARD2, params) == pytest.approx(0.4 - 0.5 * 0.4)
        assert automaton_step(0.4, Event.PENALTY1, params) == pytest.approx(0.4 - 0.1 * 0.4)

    def test_domain(self):
        with pytest.raises(GameError):
            automaton_step(1.2, Event.REWARD1, LearningParams())

    @given(prob, st.sampled_from(list(Event)), learning_params())
    def test_stays_in_unit_interval(self, p, ev, params):
        assert 0.0 <= automaton_step(p, ev, params) <= 1.0


class TestPlayStage:
    def test_coalition_equilibrium_game1(self):
        game = builtin_game(1)
        rng = np.random.default_rng(0)
        s = StateVector(1.0, 1.0, 1.0, 1.0)
        for _ in range(50):
            out, nxt = play_stage(s, s, game, LearningParams(), rng)
            assert out.payoffs == (1, 1)
            assert out.coalition_formed
            assert nxt == s

    def test_game2_uniform_when_preferring_coalition(self):
        # own pure preference for A, aged opponent group probability 0.5 -> D = 0.5 everywhere
        aged = (0.3, 0.8, 0.5, 0.5)
        for i in (1, 2):
            for j in (1, 2):
                r1, r2 = _stage_reward_probs(i, True, j, True, aged, builtin_game(2))
                assert r1 == pytest.approx(0.5, abs=1e-15)
                assert r2 == pytest.approx(0.5, abs=1e-15)

    def test_outcome_consistency(self, game2, default_params):
        rng = np.random.default_rng(3)
        s = StateVector(0.5, 0.5, 0.5, 0.5)
        for _ in range(200):
            out, s = play_stage(s, s, game2, default_params, rng)
            assert out.coalition_formed == (out.group_choices[0] and out.group_choices[1])
            assert out.actions[0] in (1, 2) and out.payoffs[0] in (1, -1)

    def test_shared_payoff_moves_both_automata_consistently(self, game2, default_params):
        rng = np.random.default_rng(11)
        s = StateVector(0.5, 0.5, 0.5, 0.5)
        for _ in range(100):
            out, nxt = play_stage(s, s, game2, default_params, rng)
            # action and group automata of agent 1 got the same payoff sign
            ev_a = Event.of(out.actions[0], out.payoffs[0] > 0)
            ev_g = Event.of(1 if out.group_choices[0] else 2, out.payoffs[0] > 0)
            assert nxt.p1 == automaton_step(s.p1, ev_a, default_params)
            assert nxt.p3 == automaton_step(s.p3, ev_g, default_params)
            s = nxt

    def test_sampled_mean_matches_exact_expectation(self, game2, default_params):
        s = StateVector(0.3, 0.6, 0.7, 0.4)
        rng = np.random.default_rng(5)
        n = 40000
        acc = np.zeros(4)
        for _ in range(n):
            _, nxt = play_stage(s, s, game2, default_params, rng)
            acc += np.array(nxt) - np.array(s)
        exact = expected_increment(s, s, game2, default_params)
        # per-stage increments are bounded by theta*beta = 0.04
        np.testing.assert_allclose(acc / n, exact, atol=5 * 0.04 / np.sqrt(n))


class TestExactExpectation:
    def test_uniform_state_game2(self, game2, default_params):
        p = (0.5, 0.5, 0.5, 0.5)
        np.testing.assert_allclose(
            expected_increment(p, p, game2, default_params) / default_params.theta,
            drift(p, None, game2, default_params),
            atol=1e-12,
        )

    def test_random_instances_match_drift(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            game, params, p = random_instance(rng)
            np.testing.assert_allclose(
                expected_increment(p, p, game, params), params.theta * drift(p, None, game, params), atol=1e-12
            )

    @settings(max_examples=60, deadline=None)
    @given(state, state, games(), learning_params())
    def test_delayed_views_match_drift(self, cur, aged, g, params):
        # with an aged opponent the score keeper realizes the delayed drift
        agent1 = (cur[0], aged[1], cur[2], aged[3])
        agent2 = (aged[0], cur[1], aged[2], cur[3])
        views = (agent1, agent2, agent1, agent2)
        np.testing.assert_allclose(
            expected_increment(cur, aged, g, params), params.theta * drift(cur, views, g, params), atol=1e-12
        )


class TestSimulation:
    def test_zero_horizon(self, game2, default_params):
        traj = run_simulation(SimConfig(game2, default_params, horizon=0))
        assert len(traj) == 1
        np.testing.assert_array_equal(traj.states[0], [0.5] * 4)

    @pytest.mark.parametrize("tau", [0, 3, 40])
    def test_absorbing_game1(self, tau):
        cfg = SimConfig(builtin_game(1), LearningParams(), initial=(1, 1, 1, 1), tau=tau, horizon=500)
        traj = run_simulation(cfg)
        assert np.all(traj.states == 1.0)

    def test_reproducible(self, game2, default_params):
        cfg = SimConfig(game2, default_params, tau=7, horizon=3000, seed=42)
        a, b = run_simulation(cfg), run_simulation(cfg)
        np.testing.assert_array_equal(a.states, b.states)
        c = run_simulation(SimConfig(game2, default_params, tau=7, horizon=3000, seed=43))
        assert not np.array_equal(a.states, c.states)

    @pytest.mark.parametrize("tau", [0, 1, 5])
    def test_kernel_matches_play_stage(self, game2, default_params, tau):
        cfg = SimConfig(game2, default_params, initial=(0.2, 0.7, 0.6, 0.3), tau=tau, horizon=400, seed=9)
        fast = run_simulation(cfg)
        rng = np.random.default_rng(9)
        hist = [cfg.initial]
        for t in range(cfg.horizon):
            aged = hist[t - tau] if t >= tau else cfg.initial
            _, nxt = play_stage(hist[t], aged, game2, default_params, rng)
            hist.append(nxt)
        np.testing.assert_array_equal(fast.states, np.array(hist))

    def test_aged_view_is_initial_before_delay(self, game2, default_params):
        # with tau larger than the horizon every aged view is the initial state
        init = (0.2, 0.7, 0.6, 0.3)
        cfg = SimConfig(game2, default_params, initial=init, tau=1000, horizon=300, seed=4)
        rng = np.random.default_rng(4)
        s = StateVector(*init)
        for _ in range(300):
            _, s = play_stage(s, init, game2, default_params, rng)
        np.testing.assert_array_equal(run_simulation(cfg).final, s)

    def test_decimation_keeps_last(self, game2, default_params):
        traj = run_simulation(SimConfig(game2, default_params, horizon=1005, decimation=100))
        assert traj.times[0] == 0 and traj.times[-1] == 1005
        assert list(traj.times[1:4]) == [100, 200, 300]

    @settings(max_examples=25, deadline=None)
    @given(games(), learning_params(), state, st.integers(0, 20), st.integers(0, 2**32 - 1))
    def test_probabilities_stay_in_unit_interval(self, g, params, init, tau, seed):
        traj = run_simulation(SimConfig(g, params, initial=init, tau=tau, horizon=300, seed=seed))
        assert traj.states.min() >= 0.0 and traj.states.max() <= 1.0


class TestEnsemble:
    def test_single_member(self, game2, default_params):
        cfg = SimConfig(game2, default_params, horizon=500, seed=3, ensemble_size=1)
        summary = run_ensemble(cfg)
        member = run_simulation(cfg, np.random.default_rng(member_seed(3, 0)))
        np.testing.assert_array_equal(summary.mean, member.states)
        assert np.all(summary.var == 0)

    def test_absorbing_zero_variance(self):
        cfg = SimConfig(builtin_game(1), LearningParams(), initial=(1, 1, 1, 1), horizon=300, ensemble_size=5)
        assert np.all(run_ensemble(cfg).var == 0)

    def test_variance_matches_numpy(self, game2, default_params):
        cfg = SimConfig(game2, default_params, horizon=200, seed=8, ensemble_size=6)
        summary = run_ensemble(cfg)
        runs = np.stack(
            [run_simulation(cfg, np.random.default_rng(member_seed(8, i))).states for i in range(6)]
        )
        np.testing.assert_allclose(summary.mean, runs.mean(axis=0), atol=1e-14)
        np.testing.assert_allclose(summary.var, runs.var(axis=0), atol=1e-14)
        np.testing.assert_allclose(summary.c_mean, (runs[:, :, 2] * runs[:, :, 3]).mean(axis=0), atol=1e-14)

    def test_game2_clustering_drifts_down(self, game2):
        params = LearningParams(0.02, 0.4, 0.01)
        cfg = SimConfig(game2, params, horizon=20000, seed=1, ensemble_size=20, decimation=1000)
        summary = run_ensemble(cfg)
        ode = integrate(game2, params, (0.5,) * 4, t_max=20000, h=1.0)
        assert summary.c_mean[-1] < 0.25
        assert abs(summary.c_mean[-1] - ode.c[-1]) < 0.02
