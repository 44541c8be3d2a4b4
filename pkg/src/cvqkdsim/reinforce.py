"""Gradient-free policy-gradient search over transceiver parameters.

The policy is a factorized Gaussian over the raw parameter vector
(tx taps, rx taps, log mean-photon) with per-group exploration scales.
Rewards come from running the chain and never from differentiating it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dsp import FirFilter
from .keyrate import DEFAULT_BETA, SkrInputs, devetak_winter_rate, secure_key_rate
from .link import (ChainResult, IsiProfile, LinkConfig, assemble_budget,
                   estimate_parameters, run_chain)


@dataclass(frozen=True)
class GroupSigmas:
    """Per-group exploration standard deviations.

    The filter defaults keep the injected perturbation energy sigma^2 * dim
    of both tap groups near 2.5e-3 for the usual 11-tap / 101-tap lengths,
    small enough not to distort the interference budget the episodes see.
    """

    tx: float = 0.015
    rx: float = 0.005
    n: float = 0.10

    def decayed(self, factor: float, floor: float) -> "GroupSigmas":
        return GroupSigmas(tx=max(self.tx * factor, floor),
                           rx=max(self.rx * factor, floor),
                           n=max(self.n * factor, floor))


@dataclass(frozen=True)
class GroupRates:
    """Per-group learning rates.

    With adaptive stepping (the default) these are normalized step scales:
    the update magnitude is rate * sigma regardless of the reward scale,
    which keeps the tap updates stable across operating points whose reward
    sensitivity spans orders of magnitude. Without it they are plain
    gradient-ascent rates on the raw score-function estimate.
    """

    tx: float = 0.3
    rx: float = 0.3
    n: float = 1.0


@dataclass(frozen=True)
class TransceiverParams:
    """A concrete deployable operating point."""

    h_tx: FirFilter
    h_rx: FirFilter
    mean_photon: float


@dataclass(frozen=True)
class PolicyState:
    """Gaussian policy mean plus exploration scales and bookkeeping."""

    theta_tx: np.ndarray
    theta_rx: np.ndarray
    theta_log_n: float
    sigma: GroupSigmas
    baseline: float | None = None
    best_params: TransceiverParams | None = None
    best_reward: float = -np.inf

    def __post_init__(self):
        object.__setattr__(self, "theta_tx", np.asarray(self.theta_tx, dtype=float))
        object.__setattr__(self, "theta_rx", np.asarray(self.theta_rx, dtype=float))

    @classmethod
    def from_params(cls, params: TransceiverParams,
                    sigma: GroupSigmas | None = None) -> "PolicyState":
        return cls(theta_tx=params.h_tx.unit_energy().taps,
                   theta_rx=params.h_rx.unit_energy().taps,
                   theta_log_n=float(np.log(params.mean_photon)),
                   sigma=sigma if sigma is not None else GroupSigmas())

    def decode(self) -> TransceiverParams:
        """Deployable parameters at the policy mean (unit-energy filters)."""
        return _decode(self.theta_tx, self.theta_rx, self.theta_log_n)


def _decode(raw_tx: np.ndarray, raw_rx: np.ndarray, log_n: float) -> TransceiverParams:
    return TransceiverParams(
        h_tx=FirFilter(raw_tx, label="tx-shaper").unit_energy(),
        h_rx=FirFilter(raw_rx, label="rx-matched").unit_energy(),
        mean_photon=float(np.exp(log_n)),
    )


@dataclass(frozen=True)
class Episode:
    """One sampled parameter vector with its evaluated reward.

    ``isi`` summarizes the effective response the sampled filters produced,
    i.e. the state the chain was left in by this action.
    """

    raw_tx: np.ndarray
    raw_rx: np.ndarray
    raw_log_n: float
    params: TransceiverParams | None
    reward: float
    seed: int
    isi: IsiProfile | None = None
    error: str | None = None


@dataclass(frozen=True)
class OptimizerConfig:
    batch_size: int = 16
    learning_rate: GroupRates = field(default_factory=GroupRates)
    iterations: int = 100
    sigma_init: GroupSigmas = field(default_factory=GroupSigmas)
    sigma_decay: float = 0.985
    sigma_floor: float = 1e-4
    baseline_decay: float = 0.9
    seed: int = 0
    beta: float = DEFAULT_BETA
    clip_reward: bool = False  # True: reward is the 0-clipped SKR
    use_estimated_params: bool = True  # False: analytic budget instead
    common_random_numbers: bool = True  # share one chain seed per batch
    adaptive_step: bool = True  # standardize advantages; step = rate * sigma

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if min(self.learning_rate.tx, self.learning_rate.rx,
               self.learning_rate.n) <= 0:
            raise ValueError("learning rates must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.sigma_decay <= 1.0:
            raise ValueError("sigma_decay must be in (0, 1]")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ValueError("baseline_decay must be in [0, 1)")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    mean_reward: float
    best_reward: float
    sigma_tx: float
    sigma_rx: float
    sigma_n: float


@dataclass(frozen=True)
class OptimizeResult:
    policy: PolicyState
    best_params: TransceiverParams
    best_reward: float
    trace: list[TraceRow]


def chain_reward(env: LinkConfig, params: TransceiverParams, chain_seed: int,
                 beta: float = DEFAULT_BETA, clip_reward: bool = False,
                 use_estimated_params: bool = True) -> tuple[float, ChainResult]:
    """Run the chain once and score the resulting operating point.

    With estimated parameters the reward mirrors the measurement pipeline:
    (tau_hat, n_ex_hat + n_ch) from the received data. The analytic path
    uses the assembled budget instead.
    """
    env_run = replace(env, seed=chain_seed)
    result = run_chain(env_run, params.h_tx, params.h_rx, params.mean_photon)
    if use_estimated_params:
        est = estimate_parameters(result.tx_symbols, result.rx_symbols)
        tau = est.tau_hat
        n_ex = est.n_ex_clipped + env.channel_excess_photons
    else:
        budget = assemble_budget(env_run, result.isi, params.mean_photon,
                                 result.dac_report, result.adc_report)
        tau = budget.transmittance
        n_ex = budget.total
    inputs = SkrInputs(mean_photon=params.mean_photon,
                       transmittance=min(tau, 1.0),
                       excess_photons=n_ex, beta=beta)
    value = secure_key_rate(inputs) if clip_reward else devetak_winter_rate(inputs)
    return value, result


def _episode_seeds(master_seed: int, iteration: int, index: int) -> tuple[int, int]:
    """Derive (perturbation seed, chain seed) for one episode.

    Depends only on (master seed, iteration, index), so results are
    independent of scheduling and worker count. Iteration 0 is reserved
    for the initial policy-mean evaluation.
    """
    ss = np.random.SeedSequence((master_seed, iteration, index))
    children = ss.generate_state(2, np.uint64)
    return int(children[0]), int(children[1])


def sample_episode(policy: PolicyState, env: LinkConfig, episode_seed: int,
                   config: OptimizerConfig, chain_seed: int | None = None) -> Episode:
    """Draw one Gaussian perturbation of the policy and evaluate it.

    ``episode_seed`` drives the parameter perturbation; the chain keeps the
    environment's own seed unless ``chain_seed`` overrides it (the optimizer
    loop passes derived seeds: per-iteration when sharing random numbers
    across a batch, per-episode otherwise). Chain failures are converted to
    zero-reward episodes with an error flag so that a non-physical sample
    cannot abort the optimizer.
    """
    rng = np.random.default_rng(episode_seed)
    raw_tx = policy.theta_tx + policy.sigma.tx * rng.standard_normal(len(policy.theta_tx))
    raw_rx = policy.theta_rx + policy.sigma.rx * rng.standard_normal(len(policy.theta_rx))
    raw_log_n = policy.theta_log_n + policy.sigma.n * rng.standard_normal()
    if chain_seed is None:
        chain_seed = env.seed
    try:
        params = _decode(raw_tx, raw_rx, raw_log_n)
        reward, result = chain_reward(env, params, chain_seed, beta=config.beta,
                                      clip_reward=config.clip_reward,
                                      use_estimated_params=config.use_estimated_params)
        return Episode(raw_tx=raw_tx, raw_rx=raw_rx, raw_log_n=raw_log_n,
                       params=params, reward=reward, seed=episode_seed,
                       isi=result.isi)
    except (ValueError, ArithmeticError) as exc:
        return Episode(raw_tx=raw_tx, raw_rx=raw_rx, raw_log_n=raw_log_n,
                       params=None, reward=0.0, seed=episode_seed, error=str(exc))


def score_function_step(theta: np.ndarray, samples: np.ndarray,
                        rewards: np.ndarray, baseline: float, sigma: float,
                        learning_rate: float) -> np.ndarray:
    """One REINFORCE step on a Gaussian-perturbed parameter vector.

    g_hat = mean_i (r_i - baseline) (theta'_i - theta) / sigma^2, followed
    by theta <- theta + lr * g_hat. With sigma = 0 the samples carry no
    information and theta is returned unchanged.
    """
    if sigma <= 0:
        return np.asarray(theta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    adv = np.asarray(rewards, dtype=float) - baseline
    dev = np.atleast_2d(samples) - theta
    g_hat = np.tensordot(adv, dev, axes=(0, 0)) / (len(adv) * sigma**2)
    return theta + learning_rate * g_hat


def reinforce_update(policy: PolicyState, batch: list[Episode],
                     config: OptimizerConfig) -> PolicyState:
    """Score-function update of the policy mean from one episode batch.

    Each group takes its own step, the filter groups are renormalized to
    unit energy, the baseline moves by EMA, and the sigmas decay. With
    adaptive stepping the advantages are standardized by the batch reward
    spread, which makes the step size rate * sigma in parameter units (an
    equal-reward batch still produces a zero step, and shifting every
    reward by a constant still cancels).
    """
    if len(batch) != config.batch_size:
        raise ValueError(f"expected a batch of {config.batch_size}, got {len(batch)}")
    rewards = np.array([ep.reward for ep in batch])
    baseline = float(rewards.mean()) if policy.baseline is None else policy.baseline

    if config.adaptive_step:
        spread = float(rewards.std())
        scale = {"tx": policy.sigma.tx**2 / spread,
                 "rx": policy.sigma.rx**2 / spread,
                 "n": policy.sigma.n**2 / spread} if spread > 0 else \
                {"tx": 0.0, "rx": 0.0, "n": 0.0}
    else:
        scale = {"tx": 1.0, "rx": 1.0, "n": 1.0}

    theta_tx = score_function_step(
        policy.theta_tx, np.stack([ep.raw_tx for ep in batch]), rewards,
        baseline, policy.sigma.tx, config.learning_rate.tx * scale["tx"])
    theta_rx = score_function_step(
        policy.theta_rx, np.stack([ep.raw_rx for ep in batch]), rewards,
        baseline, policy.sigma.rx, config.learning_rate.rx * scale["rx"])
    theta_log_n = float(score_function_step(
        np.array([policy.theta_log_n]),
        np.array([[ep.raw_log_n] for ep in batch]), rewards,
        baseline, policy.sigma.n, config.learning_rate.n * scale["n"])[0])

    theta_tx = theta_tx / np.linalg.norm(theta_tx)
    theta_rx = theta_rx / np.linalg.norm(theta_rx)

    new_baseline = (float(rewards.mean()) if policy.baseline is None
                    else config.baseline_decay * policy.baseline
                    + (1.0 - config.baseline_decay) * float(rewards.mean()))

    best_params, best_reward = policy.best_params, policy.best_reward
    for ep in batch:
        if ep.params is not None and ep.reward > best_reward:
            best_params, best_reward = ep.params, ep.reward

    return PolicyState(theta_tx=theta_tx, theta_rx=theta_rx,
                       theta_log_n=theta_log_n,
                       sigma=policy.sigma.decayed(config.sigma_decay,
                                                  config.sigma_floor),
                       baseline=new_baseline,
                       best_params=best_params, best_reward=best_reward)


def _episode_task(args) -> Episode:
    policy, env, ep_seed, chain_seed, config = args
    return sample_episode(policy, env, ep_seed, config, chain_seed=chain_seed)


def optimize(env: LinkConfig, init: PolicyState, config: OptimizerConfig,
             progress_sink=None, workers: int = 1) -> OptimizeResult:
    """Run the full REINFORCE loop and return the best-so-far parameters.

    The initial policy mean is evaluated first, so with iterations = 0 the
    result is the initial operating point and its reward. Per-episode seeds
    derive from (config.seed, iteration, index); traces are reproducible
    for any worker count.
    """
    init_params = init.decode()
    _, init_chain_seed = _episode_seeds(config.seed, 0, 0)
    init_reward, _ = chain_reward(env, init_params, init_chain_seed,
                                  beta=config.beta,
                                  clip_reward=config.clip_reward,
                                  use_estimated_params=config.use_estimated_params)
    policy = replace(init, best_params=init_params, best_reward=init_reward)

    trace: list[TraceRow] = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for iteration in range(1, config.iterations + 1):
            seeds = [_episode_seeds(config.seed, iteration, idx)
                     for idx in range(config.batch_size)]
            if config.common_random_numbers:
                # one symbol realization per batch: the shared estimation
                # noise cancels against the batch-mean baseline instead of
                # driving a random walk of the high-dimensional tap groups
                shared = seeds[0][1]
                seeds = [(ep, shared) for ep, _ in seeds]
            tasks = [(policy, env, ep, ch, config) for ep, ch in seeds]
            if pool is not None:
                batch = list(pool.map(_episode_task, tasks))
            else:
                batch = [_episode_task(t) for t in tasks]
            policy = reinforce_update(policy, batch, config)
            row = TraceRow(iteration=iteration,
                           mean_reward=float(np.mean([ep.reward for ep in batch])),
                           best_reward=policy.best_reward,
                           sigma_tx=policy.sigma.tx, sigma_rx=policy.sigma.rx,
                           sigma_n=policy.sigma.n)
            trace.append(row)
            if progress_sink is not None:
                progress_sink(row)
    finally:
        if pool is not None:
            pool.shutdown()

    return OptimizeResult(policy=policy, best_params=policy.best_params,
                          best_reward=policy.best_reward, trace=trace)


def reinforce_search(reward_fn, theta0: np.ndarray, iterations: int = 500,
                     batch_size: int = 32, learning_rate: float = 0.05,
                     sigma: float = 0.1, sigma_decay: float = 0.99,
                     sigma_floor: float = 1e-4, baseline_decay: float = 0.9,
                     seed: int = 0) -> tuple[np.ndarray, list[float]]:
    """Plain black-box REINFORCE over one unconstrained parameter vector.

    Drives the same score-function step as the transceiver loop, without
    any renormalization. Returns the final mean and the per-iteration best
    reward trace (monotone non-decreasing).
    """
    rng = np.random.default_rng(seed)
    theta = np.asarray(theta0, dtype=float).copy()
    baseline = None
    best = -np.inf
    best_trace: list[float] = []
    for _ in range(iterations):
        samples = theta + sigma * rng.standard_normal((batch_size, len(theta)))
        rewards = np.array([reward_fn(s) for s in samples])
        b = float(rewards.mean()) if baseline is None else baseline
        theta = score_function_step(theta, samples, rewards, b, sigma,
                                    learning_rate)
        baseline = (float(rewards.mean()) if baseline is None
                    else baseline_decay * baseline
                    + (1.0 - baseline_decay) * float(rewards.mean()))
        best = max(best, float(rewards.max()))
        best_trace.append(best)
        sigma = max(sigma * sigma_decay, sigma_floor)
    return theta, best_trace
