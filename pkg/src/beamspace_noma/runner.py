"""Monte Carlo experiment runner: seeded paired trials, scheme sweeps, and
CSV/JSON emission.

Every scheme and SNR point inside a trial consumes the identical channel
realization, so scheme comparisons are paired. Trials are independent and may
run in a worker pool; records are sorted before writing so the output files
are byte-deterministic for a given master seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import baselines, beams, power, precoding, rates
from .channel import LensMatrix, lens_transform_matrix, sample_realization, trial_rng
from .config import SystemConfig

CSV_COLUMNS = ["trial", "seed", "snr_db", "scheme", "variant", "k", "n_rf",
               "sum_rate_bpshz", "energy_eff_bpshzw", "dropped", "drop_reason"]


@dataclass
class ExperimentRecord:
    """One (trial, SNR, scheme) outcome."""

    trial: int
    seed: int
    snr_db: float
    scheme: str
    variant: str
    k: int
    n_rf: int
    sum_rate: float
    energy_eff: float
    dropped: bool = False
    drop_reason: str = ""
    realization_hash: str = ""
    feasible: bool = True
    trace: list[float] | None = None
    user_rates: list[float] | None = None


@dataclass
class SweepResult:
    records: list[ExperimentRecord]
    summary: list[dict]
    csv_path: str
    json_path: str


@lru_cache(maxsize=4)
def _lens(n_antennas: int) -> LensMatrix:
    return lens_transform_matrix(n_antennas)


def build_noma_link(beamspace: np.ndarray, variant: str) -> tuple[beams.BeamGrouping, precoding.Precoder]:
    """Grouping and ZF precoder with one bounded order-repair pass.

    Users are first ranked by reduced-channel norm; if the resulting
    equivalent gains violate the assumed SIC decay, each offending beam is
    re-sorted once and the precoder rebuilt once (no further iteration).
    """
    grouping = beams.group_users(beams.select_beams(beamspace), beamspace)
    precoder = precoding.zf_precoder(precoding.make_equivalent(grouping, variant))
    report = beams.verify_order(grouping, precoder)
    if not report.ok:
        grouping = beams.reorder(grouping, report)
        precoder = precoding.zf_precoder(precoding.make_equivalent(grouping, variant))
    return grouping, precoder


def run_trial(config: SystemConfig, trial_index: int) -> list[ExperimentRecord]:
    """Execute every configured scheme at every SNR point on one realization."""
    rng = trial_rng(config.seed, trial_index)
    realization = sample_realization(config.channel_params(), rng)
    lens = _lens(config.n_antennas)
    beamspace = lens.matrix @ realization.matrix
    rhash = hashlib.sha1(realization.matrix.tobytes()).hexdigest()

    noma_link = None
    noma_error: precoding.PrecodingError | None = None
    if "noma" in config.schemes or "oma" in config.schemes:
        try:
            noma_link = build_noma_link(beamspace, config.variant)
        except precoding.PrecodingError as err:
            noma_error = err

    records = []
    pm = config.power_model()
    for snr_db in config.snr_db:
        budget = config.budget(snr_db)
        for scheme in config.schemes:
            variant = config.variant if scheme in ("noma", "oma") else "na"
            rec = ExperimentRecord(trial=trial_index, seed=config.seed,
                                   snr_db=snr_db, scheme=scheme, variant=variant,
                                   k=config.n_users, n_rf=0, sum_rate=math.nan,
                                   energy_eff=math.nan, realization_hash=rhash)
            try:
                if scheme in ("noma", "oma") and noma_error is not None:
                    raise noma_error
                if scheme == "noma":
                    grouping, precoder = noma_link
                    alloc = power.allocate(grouping, precoder, budget,
                                           config.optimizer_config())
                    report = rates.sum_rate(grouping, precoder, alloc.powers, budget)
                    rec.n_rf = grouping.n_rf
                    rec.sum_rate = report.sum_rate
                    rec.feasible = alloc.feasible
                    rec.trace = list(alloc.trace)
                    rec.user_rates = [float(r) for r in report.rates_by_user]
                elif scheme == "oma":
                    grouping, precoder = noma_link
                    result = baselines.mimo_oma(grouping, precoder, budget)
                    rec.n_rf, rec.sum_rate = result.n_rf, result.sum_rate
                elif scheme == "beamspace_mimo":
                    result = baselines.beamspace_mimo_single_user(beamspace, budget)
                    rec.n_rf, rec.sum_rate = result.n_rf, result.sum_rate
                elif scheme == "fully_digital":
                    result = baselines.fully_digital_zf(realization.matrix, budget)
                    rec.n_rf, rec.sum_rate = result.n_rf, result.sum_rate
                else:
                    raise ValueError(f"unknown scheme {scheme!r}")
                rec.energy_eff = rates.energy_efficiency(rec.sum_rate, rec.n_rf,
                                                         budget, pm)
            except precoding.PrecodingError as err:
                rec.dropped = True
                rec.drop_reason = str(err)
                rec.n_rf, rec.sum_rate, rec.energy_eff = 0, math.nan, math.nan
            records.append(rec)
    return records


def _run_cell(config: SystemConfig) -> list[ExperimentRecord]:
    """All trials for one configuration, optionally across worker processes."""
    indices = range(config.trials)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(run_trial, [config] * config.trials, indices))
    else:
        chunks = [run_trial(config, t) for t in indices]
    return [rec for chunk in chunks for rec in chunk]


def _stderr(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def summarize(records: list[ExperimentRecord], scheme_order: list[str]) -> list[dict]:
    """Per (sweep point, scheme) means and standard errors over kept trials."""
    cells: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        cells.setdefault((rec.snr_db, rec.k, rec.scheme), []).append(rec)
    rank = {s: i for i, s in enumerate(scheme_order)}
    out = []
    for (snr_db, k, scheme) in sorted(cells, key=lambda c: (c[0], c[1], rank.get(c[2], 99))):
        group = cells[(snr_db, k, scheme)]
        kept = [r for r in group if not r.dropped]
        se = np.array([r.sum_rate for r in kept])
        ee = np.array([r.energy_eff for r in kept])
        out.append({
            "snr_db": snr_db, "k": k, "scheme": scheme,
            "mean_se": float(se.mean()) if len(kept) else math.nan,
            "stderr_se": _stderr(se),
            "mean_ee": float(ee.mean()) if len(kept) else math.nan,
            "stderr_ee": _stderr(ee),
            "trials": len(group),
            "dropped": len(group) - len(kept),
        })
    return out


def _output_paths(out_base: str) -> tuple[str, str]:
    base = out_base[:-4] if out_base.endswith(".csv") else out_base
    return base + ".csv", base + ".json"


def _check_writable(*paths: str) -> None:
    for path in paths:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8"):
            pass


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: list[ExperimentRecord], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([r.trial, r.seed, _format(r.snr_db), r.scheme,
                             r.variant, r.k, r.n_rf, _format(r.sum_rate),
                             _format(r.energy_eff), int(r.dropped),
                             r.drop_reason.replace(",", ";")])


def _pad_trace(trace: list[float], length: int) -> list[float]:
    if not trace:
        return [math.nan] * length
    return trace + [trace[-1]] * (length - len(trace))


def sweep(config: SystemConfig, mode: str = "snr") -> SweepResult:
    """Run a full experiment and emit `<out>.csv` plus `<out>.json`.

    Modes: 'snr' sweeps the configured SNR points; 'users' additionally sweeps
    the user counts; 'convergence' records the mean per-iteration sum-rate
    trace; 'fairness' dumps per-user rates under the active minimum rate.
    """
    if mode not in ("snr", "users", "convergence", "fairness"):
        raise ValueError(f"unknown sweep mode {mode!r}")
    csv_path, json_path = _output_paths(config.out)
    _check_writable(csv_path, json_path)

    if mode == "users":
        records = []
        for k in config.users_sweep:
            records.extend(_run_cell(config.with_users(k)))
    else:
        records = _run_cell(config)

    rank = {s: i for i, s in enumerate(config.schemes)}
    records.sort(key=lambda r: (r.trial, r.snr_db, r.k, rank.get(r.scheme, 99)))
    summary = summarize(records, config.schemes)

    payload: dict = {
        "mode": mode,
        "seed": config.seed,
        "trials": config.trials,
        "variant": config.variant,
        "summary": summary,
    }
    if mode == "convergence":
        traces = [_pad_trace(r.trace, config.max_iters) for r in records
                  if r.scheme == "noma" and not r.dropped and r.trace]
        if traces:
            payload["convergence_trace"] = [float(v) for v in np.mean(traces, axis=0)]
    if mode == "fairness":
        payload["min_rate"] = config.min_rate
        payload["fairness"] = [
            {"trial": r.trial, "snr_db": r.snr_db, "feasible": r.feasible,
             "user_rates": r.user_rates}
            for r in records if r.scheme == "noma" and not r.dropped
        ]

    write_csv(records, csv_path)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return SweepResult(records=records, summary=summary,
                       csv_path=csv_path, json_path=json_path)
