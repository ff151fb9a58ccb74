"""Simulation drivers: delay and run-length trials, phase grids, comparisons.

Trials are reproducible regardless of scheduling: every random object is
derived from (experiment seed, trial index, step index, purpose), so a
parallel run and a serial run produce identical reports.

Time accounting: detector states count scored statistics. Runners report
delays as scored statistics from the first post-change one; the sample a
detector absorbs to initialize its estimate is not scored.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import TRIAL, derive_seed, generator
from .cdp import release_assuming_stable, stability_release, subsample_stability_release
from .detect import (
    DetectorConfig,
    StoppingRule,
    adaptive_step_unknown_params,
    cdp_step,
    cdp_stop,
    cdp_threshold,
    init_detector,
    ldp_step,
    ldp_stop,
)
from .io import ingest_stream
from .ldp import PrivacyBudget, ldp_recovery_margin, perturb_graph, perturbed_params
from .model import CbmParams, ChangeScenario, err, random_labels, sample_cbm
from .recovery import SdpConfig, ml_exhaustive, sdp_estimate, spectral_estimate

__all__ = [
    "ExperimentConfig",
    "SimReport",
    "PhaseGrid",
    "run_delay_trials",
    "run_arl_trials",
    "run_trajectory",
    "phase_grid",
    "phase_grid_to_csv",
    "recovery_comparison",
    "recovery_comparison_eps",
    "comparison_to_csv",
    "theorem_boundary_a",
    "make_runner",
    "ingest_stream",
]


@dataclass
class ExperimentConfig:
    """One simulation campaign: a scenario, a detector, trial bookkeeping.

    detector is either a descriptor dict (see make_runner) or a factory
    callable (scenario, trial_seed) -> runner, for stubs and custom rigs.
    truncation None picks ceil(50 * e^b) from the descriptor's threshold.
    """

    scenario: ChangeScenario
    detector: object
    trials: int = 200
    truncation: int | None = None
    seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.truncation is not None and self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass
class SimReport:
    """Campaign summary plus per-trial rows (dicts, one per trial)."""

    mean_delay: float | None = None
    delay_ci: tuple | None = None
    arl_estimate: float | None = None
    censored_fraction: float = 0.0
    recovery_error_series: list = field(default_factory=list)
    rows: list = field(default_factory=list)


def _mean_ci(values):
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, (mean, mean)
    half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return mean, (mean - half, mean + half)


def _detector_cfg(spec, trial_seed):
    sdp = SdpConfig(
        rank=spec.get("rank"),
        restarts=spec.get("restarts", 3),
        max_iters=spec.get("max_iters", 300),
    )
    return DetectorConfig(
        estimator=spec.get("estimator", "sdp"),
        sdp=sdp,
        window=spec.get("window", 1),
        seed_first=spec.get("seed_first", True),
        seed=derive_seed(trial_seed, 9),
    )


def _release_estimator(spec):
    name = spec.get("release_estimator", "spectral")
    if name == "ml":
        return ml_exhaustive
    if name == "sdp":
        cfg = SdpConfig(restarts=spec.get("restarts", 3))
        return lambda g: sdp_estimate(g, cfg, seed=0)
    if name == "spectral":
        return lambda g: spectral_estimate(g, seed=0)
    raise ValueError(f"unknown release estimator {name!r}")


def _mechanism(spec):
    kind = spec.get("release", "assumed")
    est = _release_estimator(spec)
    if kind == "assumed":
        assumed = spec.get("assumed_distance")
        return lambda g, b, s: release_assuming_stable(g, b, est, s, assumed_distance=assumed)
    if kind == "stability":
        cap = spec.get("distance_cap")
        return lambda g, b, s: stability_release(g, b, est, s, cap=cap)
    if kind == "subsample":
        cap = spec.get("max_subgraphs")
        return lambda g, b, s: subsample_stability_release(g, b, est, s, max_subgraphs=cap)
    raise ValueError(f"unknown release mechanism {kind!r}")


class _LdpRunner:
    def __init__(self, scenario, spec, trial_seed):
        self.scenario = scenario
        self.epsilon = spec["epsilon"]
        pre = scenario.params_pre
        self.p_t, self.z_t = perturbed_params(pre.p, pre.zeta, self.epsilon)
        self.cfg = _detector_cfg(spec, trial_seed)
        self.state = init_detector(scenario.pre, "LDP")
        self.rule = StoppingRule(b=spec["b"])
        self.trial_seed = trial_seed

    def step(self, raw_graph, k):
        fed = perturb_graph(raw_graph, self.epsilon, derive_seed(self.trial_seed, 2, k))
        self.state = ldp_step(self.state, fed, self.scenario.pre, self.p_t, self.z_t, self.cfg)
        return ldp_stop(self.state, self.rule)


class _LdpAdaptiveRunner:
    def __init__(self, scenario, spec, trial_seed):
        self.scenario = scenario
        self.epsilon = spec["epsilon"]
        pre = scenario.params_pre
        self.p_t, self.z_t = perturbed_params(pre.p, pre.zeta, self.epsilon)
        self.cfg = _detector_cfg(spec, trial_seed)
        self.state = init_detector(scenario.pre, "LDP-adaptive")
        self.rule = StoppingRule(b=spec["b"])
        self.trial_seed = trial_seed

    def step(self, raw_graph, k):
        fed = perturb_graph(raw_graph, self.epsilon, derive_seed(self.trial_seed, 2, k))
        self.state = adaptive_step_unknown_params(
            self.state, fed, self.scenario.pre, self.p_t, self.z_t, self.cfg
        )
        return ldp_stop(self.state, self.rule)


class _CdpRunner:
    def __init__(self, scenario, spec, trial_seed):
        self.scenario = scenario
        self.budget = PrivacyBudget(spec["epsilon"], spec.get("delta", 0.05))
        pre = scenario.params_pre
        self.p, self.zeta = pre.p, pre.zeta
        self.mech = _mechanism(spec)
        self.state = init_detector(scenario.pre, "CDP")
        self.rule = cdp_threshold(
            spec["b"], self.zeta, spec["epsilon"], derive_seed(trial_seed, 4)
        )
        self.trial_seed = trial_seed

    def step(self, raw_graph, k):
        self.state = cdp_step(
            self.state,
            raw_graph,
            self.scenario.pre,
            self.p,
            self.zeta,
            self.budget,
            self.mech,
            derive_seed(self.trial_seed, 3, k),
        )
        return cdp_stop(self.state, self.rule)


_RUNNERS = {
    "LDP": _LdpRunner,
    "LDP-adaptive": _LdpAdaptiveRunner,
    "CDP": _CdpRunner,
}


def make_runner(scenario, detector, trial_seed):
    """Instantiate the stepping object for one trial.

    Descriptor dicts need kind (LDP | LDP-adaptive | CDP), b, epsilon, and
    accept estimator/window/restarts/rank/max_iters/seed_first plus, for
    CDP, delta and release = assumed | stability | subsample with
    release_estimator, assumed_distance, distance_cap, max_subgraphs.
    """
    if callable(detector):
        return detector(scenario, trial_seed)
    kind = detector["kind"]
    if kind not in _RUNNERS:
        raise ValueError(f"unknown detector kind {kind!r}")
    return _RUNNERS[kind](scenario, detector, trial_seed)


def _default_truncation(cfg):
    if cfg.truncation is not None:
        return cfg.truncation
    if isinstance(cfg.detector, dict) and "b" in cfg.detector:
        return math.ceil(50.0 * math.exp(cfg.detector["b"]))
    return 1000


def _run_one_trial(scenario, detector, seed, truncation, trial, no_change):
    trial_seed = derive_seed(seed, TRIAL, trial)
    runner = make_runner(scenario, detector, trial_seed)
    errors = []
    stopped = False
    samples = 0
    for k in range(1, truncation + 1):
        if no_change:
            labels, params = scenario.pre, scenario.params_pre
        else:
            labels, params = scenario.regime_at(k)
        raw = sample_cbm(params, labels, derive_seed(trial_seed, 1, k))
        stopped = runner.step(raw, k)
        samples = k
        sigma = getattr(runner.state, "sigma_hat", None)
        if sigma is not None:
            errors.append(err(sigma, scenario.post))
        if stopped:
            break
    state = runner.state
    # scored statistics lag samples by one when the first sample only seeded
    offset = samples - state.t
    nu = 1 if no_change else scenario.nu
    pre_stats = max(int(nu) - 1 - offset, 0) if nu != math.inf else 0
    return {
        "trial": trial,
        "stopped": stopped,
        "censored": not stopped,
        "steps": state.t,
        "samples": samples,
        "delay": state.t - pre_stats,
        "stat": state.stat,
        "noisy_stat": state.noisy_stat,
        "errors": errors,
    }


def _trial_worker(args):
    return _run_one_trial(*args)


def _run_trials(cfg, no_change):
    truncation = _default_truncation(cfg)
    jobs = [
        (cfg.scenario, cfg.detector, cfg.seed, truncation, trial, no_change)
        for trial in range(cfg.trials)
    ]
    if cfg.parallelism > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            rows = list(pool.map(_trial_worker, jobs))
    else:
        rows = [_run_one_trial(*job) for job in jobs]
    rows.sort(key=lambda r: r["trial"])
    return rows


def _error_series(rows):
    longest = max((len(r["errors"]) for r in rows), default=0)
    series = []
    for s in range(longest):
        vals = [r["errors"][s] for r in rows if len(r["errors"]) > s]
        series.append(float(np.mean(vals)))
    return series


def run_delay_trials(cfg):
    """Detection delay under a change at scenario.nu (finite).

    Delay counts scored statistics starting at the first post-change one;
    censored trials contribute their truncated count, so the mean is a
    lower bound when censoring occurred (see censored_fraction).
    """
    if cfg.scenario.nu == math.inf:
        raise ValueError("delay trials need a finite change time nu")
    rows = _run_trials(cfg, no_change=False)
    mean, ci = _mean_ci([r["delay"] for r in rows])
    return SimReport(
        mean_delay=mean,
        delay_ci=ci,
        censored_fraction=sum(r["censored"] for r in rows) / len(rows),
        recovery_error_series=_error_series(rows),
        rows=rows,
    )


def run_arl_trials(cfg):
    """Run length to false alarm with no change ever (pre-change forever).

    Censored runs count at the truncation horizon, making the estimate a
    lower bound on the true average run length.
    """
    rows = _run_trials(cfg, no_change=True)
    lengths = [r["steps"] for r in rows]
    return SimReport(
        arl_estimate=float(np.mean(lengths)),
        censored_fraction=sum(r["censored"] for r in rows) / len(rows),
        recovery_error_series=_error_series(rows),
        rows=rows,
    )


def run_trajectory(scenario, detector, truncation, seed, stream=None):
    """One run, recorded step by step for trajectory CSV output.

    With a stream (list of graphs), samples come from the file and the
    hamming column is -1 (true post labels unknowable); otherwise samples
    are drawn from the scenario.
    """
    runner = make_runner(scenario, detector, derive_seed(seed, TRIAL, 0))
    trial_seed = derive_seed(seed, TRIAL, 0)
    rows = []
    horizon = len(stream) if stream is not None else truncation
    for k in range(1, horizon + 1):
        if stream is not None:
            raw = stream[k - 1]
        else:
            labels, params = scenario.regime_at(k)
            raw = sample_cbm(params, labels, derive_seed(trial_seed, 1, k))
        stopped = runner.step(raw, k)
        sigma = getattr(runner.state, "sigma_hat", None)
        if stream is not None or sigma is None:
            ham = -1
        else:
            ham = err(sigma, scenario.post)
        rows.append(
            {
                "t": runner.state.t,
                "stat": runner.state.stat,
                "noisy_stat": runner.state.noisy_stat,
                "stopped": stopped,
                "hamming_est_vs_post": ham,
            }
        )
        if stopped:
            break
    return rows


def theorem_boundary_a(zeta, epsilon, n, tol=1e-6):
    """Signal strength a where the one-shot recovery margin crosses zero."""
    lo, hi = 1e-9, 1.0
    while ldp_recovery_margin(hi, zeta, epsilon, n)[0] <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("no recovery boundary found below a=1e12")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ldp_recovery_margin(mid, zeta, epsilon, n)[0] <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class PhaseGrid:
    """Exact-recovery rates over (a, zeta) with the predicted boundary."""

    a_values: list
    zeta_values: list
    epsilon: float
    n: int
    rates: np.ndarray  # shape (len(a_values), len(zeta_values))
    boundary: list  # boundary a per zeta


def phase_grid(a_values, zeta_values, epsilon, n, trials, estimator="sdp", seed=0, restarts=3):
    """One-shot recovery rate from a single perturbed graph per cell."""
    a_values = list(a_values)
    zeta_values = list(zeta_values)
    if not a_values or not zeta_values:
        raise ValueError("both grids must be nonempty")
    rates = np.zeros((len(a_values), len(zeta_values)))
    cfg = SdpConfig(restarts=restarts)
    for ai, a in enumerate(a_values):
        for zi, zeta in enumerate(zeta_values):
            params = CbmParams.from_scale(n, a, zeta)
            hits = 0
            for rep in range(trials):
                child = derive_seed(seed, 11, zi, ai, rep)
                labels = random_labels(n, generator(child, 0))
                raw = sample_cbm(params, labels, derive_seed(child, 1))
                fed = perturb_graph(raw, epsilon, derive_seed(child, 2))
                if estimator == "sdp":
                    est = sdp_estimate(fed, cfg, seed=derive_seed(child, 3)).labels
                else:
                    est = spectral_estimate(fed, seed=derive_seed(child, 3)).labels
                hits += err(est, labels) == 0
            rates[ai, zi] = hits / trials
    boundary = [theorem_boundary_a(zeta, epsilon, n) for zeta in zeta_values]
    return PhaseGrid(a_values, zeta_values, epsilon, n, rates, boundary)


def phase_grid_to_csv(grid, path):
    with open(path, "w") as fh:
        fh.write("a,zeta,exact_rate,boundary_a\n")
        for ai, a in enumerate(grid.a_values):
            for zi, zeta in enumerate(grid.zeta_values):
                fh.write(f"{a:.10g},{zeta:.10g},{grid.rates[ai, zi]:.10g},{grid.boundary[zi]:.10g}\n")


def recovery_comparison(n_values, p, zeta, epsilon, reps, seed=0, restarts=3):
    """Paired error rates of the factored-SDP and spectral estimators.

    Per rep both estimators see the same single perturbed graph; errors are
    reported as fractions of n so sizes are comparable.
    """
    rows = []
    cfg = SdpConfig(restarts=restarts)
    for ni, n in enumerate(n_values):
        params = CbmParams(n=n, p=p, zeta=zeta)
        sdp_errs = []
        spec_errs = []
        for rep in range(reps):
            child = derive_seed(seed, 12, ni, rep)
            labels = random_labels(n, generator(child, 0))
            raw = sample_cbm(params, labels, derive_seed(child, 1))
            fed = perturb_graph(raw, epsilon, derive_seed(child, 2))
            sdp_errs.append(err(sdp_estimate(fed, cfg, seed=derive_seed(child, 3)).labels, labels) / n)
            spec_errs.append(err(spectral_estimate(fed, seed=derive_seed(child, 4)).labels, labels) / n)
        rows.append(
            {
                "n": n,
                "p": p,
                "zeta": zeta,
                "epsilon": epsilon,
                "reps": reps,
                "sdp_err": float(np.mean(sdp_errs)),
                "spectral_err": float(np.mean(spec_errs)),
                "gap": float(abs(np.mean(sdp_errs) - np.mean(spec_errs))),
            }
        )
    return rows


def recovery_comparison_eps(eps_values, n, p, zeta, reps, seed=0, restarts=3):
    """Same paired comparison swept over the privacy level at fixed n."""
    rows = []
    cfg = SdpConfig(restarts=restarts)
    params = CbmParams(n=n, p=p, zeta=zeta)
    for ei, epsilon in enumerate(eps_values):
        sdp_errs = []
        spec_errs = []
        for rep in range(reps):
            child = derive_seed(seed, 13, ei, rep)
            labels = random_labels(n, generator(child, 0))
            raw = sample_cbm(params, labels, derive_seed(child, 1))
            fed = perturb_graph(raw, epsilon, derive_seed(child, 2))
            sdp_errs.append(err(sdp_estimate(fed, cfg, seed=derive_seed(child, 3)).labels, labels) / n)
            spec_errs.append(err(spectral_estimate(fed, seed=derive_seed(child, 4)).labels, labels) / n)
        rows.append(
            {
                "n": n,
                "p": p,
                "zeta": zeta,
                "epsilon": epsilon,
                "reps": reps,
                "sdp_err": float(np.mean(sdp_errs)),
                "spectral_err": float(np.mean(spec_errs)),
                "gap": float(abs(np.mean(sdp_errs) - np.mean(spec_errs))),
            }
        )
    return rows


def comparison_to_csv(rows, path):
    cols = ["n", "p", "zeta", "epsilon", "reps", "sdp_err", "spectral_err", "gap"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[c]:.10g}" for c in cols) + "\n")
