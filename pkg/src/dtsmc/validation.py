"""Monte Carlo checks of consistency and asymptotic normality.

Each replication simulates one trajectory from a seed derived from
``(master_seed, r)``, runs the estimators and records the scaled deviations
``sqrt(M) (theta_hat - theta)`` at the selected coordinates.  Reductions are
done in replication order, so serial and parallel runs give identical reports.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import asymptotics as asy
from .chain import PartitionUD, SemiMarkovKernel, check_assumptions, kernel_from_dict, kernel_to_dict, summarize
from .errors import EmptyTrajectory, SemiMarkovError, UnvisitedState
from .estimators import estimate_distribution, estimate_kernel, estimate_psi, estimate_reliability
from .renewal import distribution_sequence, markov_renewal_function, reliability_sequence
from .seqalg import as_horizon
from .simulate import child_seed, simulate

TARGETS = ("q", "psi", "P", "R")

DEFAULT_TOLERANCES = {
    "variance_rel": 0.10,
    "covariance_abs": 0.10,
    "skewness": 0.15,
    "excess_kurtosis": 0.30,
}


@dataclass
class ExperimentConfig:
    """What to simulate and which coordinates to compare.

    ``coordinates`` maps a target (``"q"``, ``"psi"``, ``"P"``, ``"R"``) to a
    list of ``(i, j, k)`` label triples, or ``(i, k)`` pairs for ``"R"``.
    ``covariance_abs`` is relative to the largest theoretical diagonal entry.
    """

    kernel: SemiMarkovKernel
    i0: str
    M: int
    replications: int
    K: int
    coordinates: dict
    master_seed: int = 0
    partition: PartitionUD | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    level: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.replications < 2:
            raise SemiMarkovError("an experiment needs at least 2 replications")
        self.i0 = str(self.i0)
        self.kernel.states.index(self.i0)
        self.coordinates = {t: [tuple(c) for c in cs] for t, cs in self.coordinates.items()}
        for target, coords in self.coordinates.items():
            if target not in TARGETS:
                raise SemiMarkovError(f"unknown target {target!r}")
            if target == "R" and self.partition is None:
                raise SemiMarkovError("target R needs a partition")
            for c in coords:
                k = c[-1]
                if not 0 <= int(k) <= self.K:
                    raise SemiMarkovError(f"coordinate {c!r} has lag outside [0, {self.K}]")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.tolerances or {})
        self.tolerances = tol

    @property
    def targets(self) -> list[str]:
        return [t for t in TARGETS if self.coordinates.get(t)]


def _positions(states, target, coords, partition):
    """Array indices of the coordinates inside the estimator arrays."""
    if target == "R":
        return [(int(k), partition.up.index(str(i))) for i, k in coords]
    return [(int(k), states.index(i), states.index(j)) for i, j, k in coords]


def _truth(cfg: ExperimentConfig) -> dict:
    q = cfg.kernel.q
    out = {"q": as_horizon(q, max(cfg.K, cfg.kernel.k_max))}
    if "psi" in cfg.targets or "P" in cfg.targets:
        out["psi"] = markov_renewal_function(q, cfg.K)
    if "P" in cfg.targets:
        out["P"] = distribution_sequence(q, cfg.K, psi=out["psi"])
    if "R" in cfg.targets:
        out["R"] = reliability_sequence(q, cfg.partition.up_index, cfg.K)
    return out


def _pick(arr, pos):
    out = np.empty(len(pos))
    for p, idx in enumerate(pos):
        out[p] = arr[idx] if idx[0] < arr.shape[0] else 0.0
    return out


def _replicate(args):
    """One replication: returns ``{target: (estimates, plug-in variances or None)}`` or the error name."""
    cfg, r, positions = args
    traj = simulate(cfg.kernel, cfg.i0, cfg.M, child_seed(cfg.master_seed, r))
    try:
        q_hat = estimate_kernel(traj)
        res = {}
        psi = None
        for target in cfg.targets:
            pos = positions[target]
            if target == "q":
                q_hat.require_visited(sorted({p[1] for p in pos}))
                est = _pick(q_hat.q, pos)
            elif target == "psi":
                psi = estimate_psi(q_hat, cfg.K) if psi is None else psi
                est = _pick(psi, pos)
            elif target == "P":
                psi = estimate_psi(q_hat, cfg.K) if psi is None else psi
                est = _pick(estimate_distribution(q_hat, psi, cfg.K), pos)
            else:
                est = _pick(estimate_reliability(q_hat, cfg.partition, cfg.K), pos)
            var = None
            if cfg.level is not None:
                var = _plug_in_variances(cfg, q_hat, target, pos)
            res[target] = (est, var)
        return res
    except (UnvisitedState, EmptyTrajectory) as exc:
        return type(exc).__name__


def _plug_in_variances(cfg, q_hat, target, pos):
    if target == "q":
        return np.array([asy.plug_in_variance_q(q_hat, i, j, k) for k, i, j in pos])
    table = asy.plug_in(target, q_hat, cfg.K, cfg.partition)
    coords = cfg.coordinates[target]
    return np.array([table.variance(c) for c in coords])


def _run_replications(cfg: ExperimentConfig, positions: dict) -> list:
    jobs = [(cfg, r, positions) for r in range(cfg.replications)]
    if cfg.threads and cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(_replicate, jobs, chunksize=max(1, len(jobs) // (4 * cfg.threads))))
    return [_replicate(j) for j in jobs]


def _theory(cfg: ExperimentConfig, target: str) -> asy.CovarianceTable:
    summary = summarize(cfg.kernel)
    if target == "q":
        table = asy.V_q(cfg.kernel, summary, max(cfg.K, cfg.kernel.k_max))
    elif target == "psi":
        table = asy.V_psi(cfg.kernel, summary, cfg.K)
    elif target == "P":
        table = asy.V_P(cfg.kernel, summary, cfg.K)
    else:
        table = asy.V_R(cfg.kernel, summary, cfg.partition, cfg.K)
    return table.subset(cfg.coordinates[target])


@dataclass
class TargetReport:
    target: str
    coordinates: list
    mean: np.ndarray
    empirical_cov: np.ndarray
    theoretical_cov: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    coverage: np.ndarray | None
    checks: dict

    @property
    def max_abs_dev(self) -> float:
        return float(np.max(np.abs(self.empirical_cov - self.theoretical_cov)))

    @property
    def max_rel_dev(self) -> float:
        """Largest relative deviation over the diagonal entries with nonzero theory."""
        th = np.diag(self.theoretical_cov)
        emp = np.diag(self.empirical_cov)
        nz = th > 0
        return float(np.max(np.abs(emp[nz] - th[nz]) / th[nz])) if nz.any() else 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "coordinates": [list(c) for c in self.coordinates],
            "mean": self.mean.tolist(),
            "empirical_cov": self.empirical_cov.tolist(),
            "theoretical_cov": self.theoretical_cov.tolist(),
            "max_abs_dev": self.max_abs_dev,
            "max_rel_dev": self.max_rel_dev,
            "skewness": _nan_to_none(self.skewness),
            "excess_kurtosis": _nan_to_none(self.excess_kurtosis),
            "coverage": None if self.coverage is None else self.coverage.tolist(),
            "checks": self.checks,
            "passed": self.passed,
        }


def _nan_to_none(a):
    return [None if not np.isfinite(x) else float(x) for x in np.asarray(a)]


@dataclass
class ValidationReport:
    M: int
    replications: int
    dropped: int
    drop_reasons: dict
    targets: dict
    deviations: dict
    level: float | None = None

    @property
    def drop_rate(self) -> float:
        return self.dropped / self.replications

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.targets.values())

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "replications": self.replications,
            "dropped": self.dropped,
            "drop_rate": self.drop_rate,
            "drop_reasons": self.drop_reasons,
            "level": self.level,
            "targets": {t: r.to_dict() for t, r in self.targets.items()},
            "passed": self.passed,
        }

    def deviations_csv(self) -> str:
        """Flat per-replication table: ``replication,target,coordinate,deviation``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication", "target", "coordinate", "deviation"])
        for target, (reps, dev) in self.deviations.items():
            coords = self.targets[target].coordinates
            for r, row in zip(reps, dev):
                for c, x in zip(coords, row):
                    w.writerow([r, target, ":".join(map(str, c)), repr(float(x))])
        return buf.getvalue()


def _moments(x: np.ndarray, var: float) -> tuple[float, float]:
    if x.shape[0] < 3 or not var > 0:
        return np.nan, np.nan
    with warnings.catch_warnings():
        # near-constant samples at tiny M; the moments are diagnostics only
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(stats.skew(x)), float(stats.kurtosis(x))


def run_clt_experiment(cfg: ExperimentConfig) -> ValidationReport:
    """Compare the empirical covariance of ``sqrt(M) (theta_hat - theta)`` with the theory tables.

    Checks per target: diagonal within ``variance_rel`` (relative), all
    entries within ``covariance_abs`` times the largest theoretical
    variance, replication mean within 3 standard errors, and standardized
    skewness / excess kurtosis within their tolerances.  Degenerate
    coordinates (zero theoretical variance) must show zero deviations.
    """
    report = check_assumptions(cfg.kernel)
    if not report.irreducible:
        raise SemiMarkovError("kernel is not irreducible")
    if not report.aperiodic:
        warnings.warn(
            f"kernel looks periodic (checked up to lag {report.checked_up_to}); "
            "the limit theorems assume aperiodicity",
            stacklevel=2,
        )
    states = cfg.kernel.states
    positions = {t: _positions(states, t, cfg.coordinates[t], cfg.partition) for t in cfg.targets}
    truth = _truth(cfg)
    results = _run_replications(cfg, positions)

    ok = [r for r, res in enumerate(results) if isinstance(res, dict)]
    reasons: dict[str, int] = {}
    for res in results:
        if isinstance(res, str):
            reasons[res] = reasons.get(res, 0) + 1
    if len(ok) < 2:
        raise SemiMarkovError(f"only {len(ok)} usable replications; increase M")
    root_m = np.sqrt(cfg.M)
    tol = cfg.tolerances
    targets, deviations = {}, {}
    for target in cfg.targets:
        th = _pick(truth[target], positions[target])
        est = np.array([results[r][target][0] for r in ok])
        dev = root_m * (est - th)
        theory = _theory(cfg, target).matrix
        emp = np.atleast_2d(np.cov(dev, rowvar=False))
        n_ok = dev.shape[0]
        tdiag = np.diag(theory)
        edi = np.diag(emp)
        skew, kurt = zip(*(_moments(dev[:, c], tdiag[c]) for c in range(dev.shape[1])))
        skew, kurt = np.array(skew), np.array(kurt)
        scale = tdiag.max() if tdiag.max() > 0 else 1.0
        degenerate = tdiag <= 1e-12
        checks = {
            "variance": bool(np.all(np.where(
                degenerate, np.abs(edi) <= 1e-12, np.abs(edi - tdiag) <= tol["variance_rel"] * np.abs(tdiag)
            ))),
            "covariance": bool(np.all(np.abs(emp - theory) <= tol["covariance_abs"] * scale + 1e-12)),
            "mean": bool(np.all(np.abs(dev.mean(axis=0)) <= 3 * np.sqrt(np.maximum(tdiag, 0) / n_ok) + 1e-12)),
            "skewness": bool(np.all(degenerate | (np.abs(skew) <= tol["skewness"]))),
            "excess_kurtosis": bool(np.all(degenerate | (np.abs(kurt) <= tol["excess_kurtosis"]))),
        }
        coverage = None
        if cfg.level is not None:
            var = np.array([results[r][target][1] for r in ok])
            z = asy.normal_quantile(0.5 + cfg.level / 2)
            half = z * np.sqrt(np.maximum(var, 0.0) / cfg.M)
            coverage = np.mean((est - half <= th) & (th <= est + half), axis=0)
        targets[target] = TargetReport(
            target=target,
            coordinates=list(cfg.coordinates[target]),
            mean=dev.mean(axis=0),
            empirical_cov=emp,
            theoretical_cov=theory,
            skewness=skew,
            excess_kurtosis=kurt,
            coverage=coverage,
            checks=checks,
        )
        deviations[target] = (ok, dev)
    return ValidationReport(
        M=cfg.M,
        replications=cfg.replications,
        dropped=cfg.replications - len(ok),
        drop_reasons=reasons,
        targets=targets,
        deviations=deviations,
        level=cfg.level,
    )


def run_coverage(cfg: ExperimentConfig, level: float = 0.95) -> dict:
    """Fraction of replications whose plug-in interval covers the truth, per target and coordinate."""
    from dataclasses import replace

    rep = run_clt_experiment(replace(cfg, level=level))
    return {t: dict(zip(r.coordinates, r.coverage.tolist())) for t, r in rep.targets.items()}


@dataclass
class SweepReport:
    M_values: list
    medians: dict
    errors: dict
    dropped: dict

    def decreasing(self, target: str) -> bool:
        m = self.medians[target]
        return all(b < a for a, b in zip(m, m[1:]))

    def to_dict(self) -> dict:
        return {
            "M": self.M_values,
            "median_sup_error": self.medians,
            "strictly_decreasing": {t: self.decreasing(t) for t in self.medians},
            "dropped": self.dropped,
        }


def run_consistency_sweep(
    kernel: SemiMarkovKernel,
    i0,
    M_values,
    K: int,
    partition: PartitionUD | None = None,
    seeds: int = 20,
    master_seed: int = 0,
) -> SweepReport:
    """Median (over ``seeds`` paths) sup-norm error of each estimator for every ``M``.

    Path ``s`` uses the same seed for every ``M``, so longer horizons extend
    the same sample path.
    """
    M_values = [int(m) for m in M_values]
    if any(b <= a for a, b in zip(M_values, M_values[1:])):
        raise SemiMarkovError("M values must be increasing")
    q = kernel.q
    truth = {
        "psi": markov_renewal_function(q, K),
    }
    truth["P"] = distribution_sequence(q, K, psi=truth["psi"])
    if partition is not None:
        truth["R"] = reliability_sequence(q, partition.up_index, K)
    errors = {t: [[] for _ in M_values] for t in ["q", *truth]}
    dropped = {m: 0 for m in M_values}
    for a, M in enumerate(M_values):
        for s in range(seeds):
            traj = simulate(kernel, i0, M, child_seed(master_seed, s))
            try:
                q_hat = estimate_kernel(traj)
                psi = estimate_psi(q_hat, K)
                est = {"psi": psi, "P": estimate_distribution(q_hat, psi, K)}
                if partition is not None:
                    est["R"] = estimate_reliability(q_hat, partition, K)
            except (UnvisitedState, EmptyTrajectory):
                dropped[M] += 1
                continue
            L = max(q_hat.q.shape[0], q.shape[0]) - 1
            errors["q"][a].append(float(np.max(np.abs(as_horizon(q_hat.q, L) - as_horizon(q, L)))))
            for t in truth:
                errors[t][a].append(float(np.max(np.abs(est[t] - truth[t]))))
    medians = {t: [float(np.median(e)) if e else float("nan") for e in errs] for t, errs in errors.items()}
    return SweepReport(M_values=M_values, medians=medians, errors=errors, dropped=dropped)


# -- config / report files -----------------------------------------------------


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from a parsed document.

    Expected keys: ``kernel`` (kernel spec object), ``i0``, ``M``,
    ``replications``, ``K``, ``coordinates``; optional ``seed``, ``up``,
    ``tolerances``, ``level``, ``threads``.
    """
    try:
        kernel = kernel_from_dict(doc["kernel"])
        partition = PartitionUD(kernel.states, tuple(doc["up"])) if doc.get("up") else None
        return ExperimentConfig(
            kernel=kernel,
            i0=doc["i0"],
            M=int(doc["M"]),
            replications=int(doc["replications"]),
            K=int(doc["K"]),
            coordinates={t: [tuple(c) for c in cs] for t, cs in doc["coordinates"].items()},
            master_seed=int(doc.get("seed", 0)),
            partition=partition,
            tolerances=doc.get("tolerances") or {},
            level=doc.get("level"),
            threads=int(doc.get("threads", 1)),
        )
    except KeyError as exc:
        raise SemiMarkovError(f"validation config: missing field {exc.args[0]!r}") from None


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "kernel": kernel_to_dict(cfg.kernel),
        "i0": cfg.i0,
        "M": cfg.M,
        "replications": cfg.replications,
        "K": cfg.K,
        "coordinates": {t: [list(c) for c in cs] for t, cs in cfg.coordinates.items()},
        "seed": cfg.master_seed,
        "up": list(cfg.partition.up) if cfg.partition else None,
        "tolerances": cfg.tolerances,
        "level": cfg.level,
        "threads": cfg.threads,
    }


def save_report(report: ValidationReport, path, deviations_path=None) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    if deviations_path is not None:
        Path(deviations_path).write_text(report.deviations_csv())
