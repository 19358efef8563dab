"""The four learners: j_bc, j_irl, malice_train, blades_train.

j_bc and j_irl treat the mediator as a single agent over the joint action
space and drive the value gap down.  malice_train and blades_train instead
minimize deviation-aware losses so that the learned mediator also matches
the expert's robustness to strategic agents: malice_train reweights the
imitation loss by exactly computed deviated state densities (it requires
the expert to cover every state), while blades_train rolls the current
learner out under each deviation and queries the expert for fresh
recommendations on the states it lands in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import (
    coverage_constant,
    moment_matching_error,
    occupancy_bundle,
    regret,
    state_density,
)
from .games import (
    CoverageError,
    DemonstrationSet,
    DeviationClass,
    MarkovGame,
    MediatorPolicy,
    induced_tables,
)
from .losses import (
    SUPPORT_TOL,
    CompositeMaxLoss,
    OCOConfig,
    blades_components,
    malice_components,
    oco_run,
)


class ExpertOracle:
    """Queryable wrapper around the expert policy.

    Learners that hold an oracle never see the underlying table; every
    access goes through query(), which increments a counter and appends to
    the query log.  full-row mode returns the exact recommendation
    distribution; sampled-action mode returns a one-hot draw from it.
    """

    def __init__(self, expert: MediatorPolicy, mode: str = "full-row", seed: int | None = None):
        if mode not in ("full-row", "sampled-action"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        self._table = expert.table
        self.mode = mode
        self.query_count = 0
        self.query_log: list[dict] = []
        self._rng = np.random.default_rng(seed)

    @property
    def n_joint_actions(self) -> int:
        return self._table.shape[1]

    def query(self, state: int, round_index: int | None = None) -> np.ndarray:
        self.query_count += 1
        self.query_log.append({"round": round_index, "state": int(state), "mode": self.mode})
        row = self._table[state]
        if self.mode == "full-row":
            return row.copy()
        a = self._rng.choice(row.shape[0], p=row)
        out = np.zeros_like(row)
        out[a] = 1.0
        return out


def expert_query(oracle: ExpertOracle, state: int) -> np.ndarray:
    return oracle.query(state)


@dataclass(frozen=True)
class TrainConfig:
    """Shared knobs for the OCO-based learners.

    density_mode 'exact' computes deviated state densities by forward DP;
    'mc' estimates them from mc_samples rollouts per deviation and then
    scores candidate iterates on a held-out fresh sample of the same size.
    """

    rounds: int = 500
    oco: OCOConfig | None = None
    density_mode: str = "exact"
    mc_samples: int = 2000
    seed: int = 0

    def oco_config(self) -> OCOConfig:
        return self.oco if self.oco is not None else OCOConfig(rounds=self.rounds)


@dataclass(frozen=True)
class TraceRow:
    round: int
    loss: float
    achieving_agent: int
    achieving_deviation: str
    step_size: float


@dataclass(frozen=True)
class TrainResult:
    policy: MediatorPolicy
    trace: tuple[TraceRow, ...]
    final_loss: float          # self-consistent loss of the returned iterate
    best_round: int
    query_count: int = 0
    query_log: tuple = ()


# ---------------------------------------------------------------------------
# Joint behavioral cloning
# ---------------------------------------------------------------------------


def j_bc(game: MarkovGame, demos: DemonstrationSet | None = None,
         expert: MediatorPolicy | None = None, fill_rule: str = "uniform",
         deviations: DeviationClass | None = None) -> MediatorPolicy:
    """Fit the conditional joint-action distribution on the expert's states.

    With ``expert`` given, rows are copied exactly wherever the expert's
    average state density is positive (the infinite-sample limit); with
    ``demos``, rows are empirical conditionals on visited states.  States
    without data are filled per ``fill_rule``:

    * 'uniform' - uniform over joint actions (default)
    * 'copy-expert' - diagnostic: copy the expert row (needs ``expert``)
    * 'adversarial-worst-case' - greedy per-state search over one-hot rows
      maximizing the deviation regret of the filled policy, realizing the
      worst learner consistent with the data
    """
    S, A = game.n_states, game.n_joint_actions
    if expert is not None:
        d = occupancy_bundle(game, expert).avg_state
        covered = d > SUPPORT_TOL
        fitted = expert.table.copy()
    elif demos is not None:
        if len(demos) == 0:
            raise ValueError("demonstration set is empty")
        counts = demos.state_action_counts(game)
        totals = counts.sum(axis=1)
        covered = totals > 0
        fitted = np.full((S, A), 1.0 / A)
        fitted[covered] = counts[covered] / totals[covered, None]
    else:
        raise ValueError("need demonstrations or an expert policy")

    table = np.full((S, A), 1.0 / A)
    table[covered] = fitted[covered]
    missing = np.nonzero(~covered)[0]
    if fill_rule == "uniform" or missing.size == 0:
        pass
    elif fill_rule == "copy-expert":
        if expert is None:
            raise ValueError("copy-expert fill needs the expert policy")
        table[missing] = expert.table[missing]
    elif fill_rule == "adversarial-worst-case":
        devs = deviations if deviations is not None else DeviationClass.complete(game.num_agents)
        for s in missing:
            best_row, best_reg = None, -np.inf
            for a in range(A):
                table[s] = 0.0
                table[s, a] = 1.0
                reg = regret(game, MediatorPolicy(table), devs)
                if reg > best_reg:
                    best_reg, best_row = reg, a
            table[s] = 0.0
            table[s, best_row] = 1.0
    else:
        raise ValueError(f"unknown fill rule {fill_rule!r}")
    return MediatorPolicy(table)


# ---------------------------------------------------------------------------
# Joint inverse reinforcement learning
# ---------------------------------------------------------------------------


def _greedy_joint_policy(game: MarkovGame, reward_sa: np.ndarray) -> np.ndarray:
    """Per-step deterministic optimizer of a shared reward on the joint MDP."""
    H, S, A = game.horizon, game.n_states, game.n_joint_actions
    tables = np.zeros((H, S, A))
    v = np.zeros(S)
    for h in reversed(range(H)):
        q = reward_sa + np.einsum("sax,x->sa", game.transition, v)
        best = q.argmax(axis=1)
        tables[h, np.arange(S), best] = 1.0
        v = q[np.arange(S), best]
    return tables


def _soft_joint_policy(game: MarkovGame, reward_sa: np.ndarray, temperature: float) -> np.ndarray:
    """Entropy-smoothed optimizer: pi_h(a|s) proportional to exp(Q_h / tau)."""
    H, S, A = game.horizon, game.n_states, game.n_joint_actions
    tau = float(temperature)
    tables = np.empty((H, S, A))
    v = np.zeros(S)
    for h in reversed(range(H)):
        q = reward_sa + np.einsum("sax,x->sa", game.transition, v)
        z = q / tau
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        tables[h] = w / w.sum(axis=1, keepdims=True)
        v = (tables[h] * q).sum(axis=1)
    return tables


def _stationarize(per_step_joint: np.ndarray, fallback_row: np.ndarray) -> np.ndarray:
    """Stationary policy whose rows follow the summed per-step flows."""
    mass = per_step_joint.sum(axis=0)          # (S, A)
    totals = mass.sum(axis=1)
    table = np.tile(fallback_row, (mass.shape[0], 1))
    pos = totals > SUPPORT_TOL
    table[pos] = mass[pos] / totals[pos, None]
    return table


@dataclass(frozen=True)
class JIRLResult:
    policy: MediatorPolicy
    errors: tuple[float, ...]      # exact normalized moment error per round
    best_round: int
    final_error: float
    rounds_run: int


def j_irl(game: MarkovGame, expert: MediatorPolicy, rounds: int,
          policy_player: str = "exact-br", temperature: float = 1.0,
          regularizer_weight: float = 0.0, init: MediatorPolicy | None = None,
          tol: float = 1e-9) -> JIRLResult:
    """Adversarial moment matching between expert and learner occupancies.

    Round n: the reward player picks the worst-case reward for the uniform
    mixture of iterates so far, f = sign(rho_expert - rho_mixture) (with an
    optional quadratic shrinkage that clips instead of hard-signing); the
    policy player best-responds on the joint-action MDP, exactly or by soft
    value iteration at the given temperature.  The mixture's per-step flows
    are distilled into a stationary candidate each round, scored by its
    exact occupancy distance to the expert, and the best candidate wins.
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    if policy_player not in ("exact-br", "soft-vi"):
        raise ValueError(f"unknown policy player {policy_player!r}")
    S, A = game.n_states, game.n_joint_actions
    rho_expert = occupancy_bundle(game, expert).avg_joint
    current = (init if init is not None else MediatorPolicy.uniform(game))
    mix_sum = occupancy_bundle(game, current).per_step_joint.copy()
    uniform_row = np.full(A, 1.0 / A)
    errors: list[float] = []
    best_err, best_table, best_round = np.inf, None, 0
    for n in range(1, rounds + 1):
        candidate = _stationarize(mix_sum / n, uniform_row)
        err = moment_matching_error(game, expert, MediatorPolicy(candidate), normalized=True)
        errors.append(err)
        if err < best_err:
            best_err, best_table, best_round = err, candidate, n
        if best_err <= tol:
            break
        residual = rho_expert - (mix_sum / n).mean(axis=0)
        if regularizer_weight > 0:
            f = np.clip(residual / (2.0 * regularizer_weight), -1.0, 1.0)
        else:
            f = np.sign(residual)
        if policy_player == "exact-br":
            new_tables = _greedy_joint_policy(game, f)
        else:
            new_tables = _soft_joint_policy(game, f, temperature)
        mix_sum += occupancy_bundle(game, new_tables).per_step_joint
    return JIRLResult(policy=MediatorPolicy(best_table), errors=tuple(errors),
                      best_round=best_round, final_error=best_err, rounds_run=len(errors))


# ---------------------------------------------------------------------------
# Deviation-aware learners
# ---------------------------------------------------------------------------


def _deviation_pairs(deviations: DeviationClass):
    pairs = []
    for i in range(deviations.num_agents):
        for k, dev in enumerate(deviations.explicit_for(i)):
            pairs.append((i, dev.label or f"a{i}/dev{k}", dev))
    return pairs


def _deviated_densities(game: MarkovGame, table: np.ndarray, pairs, mode: str,
                        n_samples: int, rng) -> list[np.ndarray]:
    dists = []
    for _, _, dev in pairs:
        tabs = induced_tables(game, table, dev)
        dists.append(state_density(game, tabs, mode=mode, n_samples=n_samples, rng=rng))
    return dists


def malice_train(game: MarkovGame, expert: MediatorPolicy, deviations: DeviationClass,
                 config: TrainConfig | None = None,
                 init: MediatorPolicy | None = None) -> TrainResult:
    """Minimize the importance-weighted max-over-deviations imitation loss.

    Needs positive expert coverage of every state (the importance weights
    d_deviated / d_expert are undefined otherwise).  Each round recomputes
    the deviated state densities of the current iterate, takes one OCO step
    on the resulting convex loss, and the iterate with the smallest
    self-consistent loss (its own round's loss at itself) is returned.
    """
    config = config or TrainConfig()
    if not deviations.all_explicit():
        raise ValueError("training needs an explicit, finite deviation class")
    beta = coverage_constant(game, expert)
    if beta <= 0.0:
        raise CoverageError(
            "expert leaves some state unvisited (coverage constant is 0); "
            "importance weights are undefined"
        )
    pairs = _deviation_pairs(deviations)
    d_expert = state_density(game, expert, mode=config.density_mode,
                             n_samples=config.mc_samples,
                             rng=np.random.default_rng(config.seed) if config.density_mode == "mc" else None)
    rng = np.random.default_rng(config.seed)

    def build(n: int, sigma: np.ndarray) -> CompositeMaxLoss:
        dists = _deviated_densities(game, sigma, pairs, config.density_mode, config.mc_samples, rng)
        return malice_components(expert, d_expert, dists, labels=[lab for _, lab, _ in pairs])

    run = oco_run(build, (game.n_states, game.n_joint_actions), config.oco_config(),
                  init=None if init is None else init.table)
    best, final = run.best_round, float(run.losses[run.best_round])
    if config.density_mode == "mc":
        # held-out validation pass with a fresh sample of the same size
        val_rng = np.random.default_rng(config.seed + 1)
        val = np.empty(run.tables.shape[0])
        for n in range(run.tables.shape[0]):
            dists = _deviated_densities(game, run.tables[n], pairs, "mc", config.mc_samples, val_rng)
            val[n] = malice_components(expert, d_expert, dists,
                                       labels=[lab for _, lab, _ in pairs]).value(run.tables[n])
        best, final = int(np.argmin(val)), float(val.min())
    trace = tuple(
        TraceRow(n + 1, float(run.losses[n]), pairs[run.achieving[n]][0],
                 pairs[run.achieving[n]][1], float(run.step_sizes[n]))
        for n in range(run.tables.shape[0])
    )
    return TrainResult(policy=MediatorPolicy(run.tables[best]), trace=trace,
                       final_loss=final, best_round=best + 1)


def blades_train(game: MarkovGame, oracle: ExpertOracle, demos: DemonstrationSet,
                 deviations: DeviationClass, config: TrainConfig | None = None,
                 init: MediatorPolicy | None = None) -> TrainResult:
    """Minimize the on-deviated-distribution imitation loss with a queryable
    expert; no coverage assumption is needed.

    Starts from the behavioral clone of the demonstrations (or an explicit
    ``init``).  Each round computes the state density of the current
    iterate under every listed deviation, queries the oracle once per
    (round, state) with positive mass, and takes one OCO step.  Never reads
    the expert policy directly.
    """
    config = config or TrainConfig()
    if not deviations.all_explicit():
        raise ValueError("training needs an explicit, finite deviation class")
    if init is None:
        if demos is None or len(demos) == 0:
            raise ValueError("demonstrations are required for initialization")
        init = j_bc(game, demos=demos, fill_rule="uniform")
    pairs = _deviation_pairs(deviations)
    rng = np.random.default_rng(config.seed)

    def build(n: int, sigma: np.ndarray) -> CompositeMaxLoss:
        dists = _deviated_densities(game, sigma, pairs, config.density_mode, config.mc_samples, rng)
        return blades_components(oracle, dists, labels=[lab for _, lab, _ in pairs], round_index=n)

    run = oco_run(build, (game.n_states, game.n_joint_actions), config.oco_config(),
                  init=init.table)
    best, final = run.best_round, float(run.losses[run.best_round])
    if config.density_mode == "mc":
        val_rng = np.random.default_rng(config.seed + 1)
        val = np.empty(run.tables.shape[0])
        for n in range(run.tables.shape[0]):
            dists = _deviated_densities(game, run.tables[n], pairs, "mc", config.mc_samples, val_rng)
            val[n] = blades_components(oracle, dists, labels=[lab for _, lab, _ in pairs],
                                       round_index=None).value(run.tables[n])
        best, final = int(np.argmin(val)), float(val.min())
    trace = tuple(
        TraceRow(n + 1, float(run.losses[n]), pairs[run.achieving[n]][0],
                 pairs[run.achieving[n]][1], float(run.step_sizes[n]))
        for n in range(run.tables.shape[0])
    )
    return TrainResult(policy=MediatorPolicy(run.tables[best]), trace=trace,
                       final_loss=final, best_round=best + 1,
                       query_count=oracle.query_count, query_log=tuple(oracle.query_log))
