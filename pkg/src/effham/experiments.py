"""Config-driven experiments: landscape scans, Grover search, variational runs, oracle fixtures.

Every runner writes its data files into an output directory and finishes with
``manifest.json`` (config echo, version, timings, SHA-256 digests). Numbers in
CSV files use 17 significant digits; rows are ordered independently of how
the work was scheduled, so repeated runs give byte-identical CSVs.
"""

from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
import math
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .fidelity import Method, TrialSet, average_fidelity, overall_fidelity
from .grover import (
    CandidateSet,
    PhaseGrid,
    choose_threshold,
    flip_coefficient,
    ideal_flip,
    run_search,
    score_candidates,
    theta_of_fidelity,
)
from .pauli import HamiltonianSum
from .tfim import (
    EffectiveParams,
    build_tfim,
    candidate_grid,
    exact_sw_coefficients,
    grid_values,
    residual_hamiltonian,
)
from .variational import AnsatzCircuit, evolve_trajectory, landscape_scan, trotter_reference

log = logging.getLogger(__name__)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects timings and output files for one command invocation."""

    def __init__(self, command: str, config: ExperimentConfig, out_dir: Path):
        self.command = command
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.timings: dict[str, float] = {}
        self.outputs: list[Path] = []
        self.summary: dict = {}

    @contextlib.contextmanager
    def timed(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.outputs.append(p)
        return p

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "version": __version__,
            "config": self.config.model_dump(mode="json"),
            "timings_seconds": self.timings,
            "outputs": {p.name: sha256(p) for p in self.outputs},
            "summary": self.summary,
        }
        return write_json(self.out_dir / "manifest.json", manifest)


def _method(config: ExperimentConfig, t: float, override: str | None = None) -> Method:
    ev = config.evolution
    kind = override or ev.method
    if kind == "exact":
        return Method("exact")
    if ev.trotter_steps is not None:
        return Method.trotter(ev.trotter_steps)
    tau = ev.tau if ev.tau is not None else 2 * math.pi / 1000
    return Method.trotter_tau(t, tau)


def _effective(config: ExperimentConfig) -> EffectiveParams:
    v = config.variational
    if v is None or v.coefficients == "exact":
        return exact_sw_coefficients(config.model.delta, config.model.J)
    return EffectiveParams(*v.coefficients)


# -- scan ---------------------------------------------------------------------------


def cmd_scan(config: ExperimentConfig, out_dir: Path, method: str | None = None, threads: int = 1) -> Run:
    run = Run("scan", config, out_dir)
    model = config.model.params()
    trials = config.trial_set()
    t = config.shared_time()
    kind = method or config.evolution.method
    ev = config.evolution
    if kind == "trotter" and ev.trotter_steps is not None:
        tau = t / ev.trotter_steps
    else:
        tau = ev.tau if ev.tau is not None else 2 * math.pi / 1000
    with run.timed("landscape_scan"):
        scan = landscape_scan(
            config.model.lambdas(),
            config.model.kappas(),
            model,
            trials,
            t,
            method=kind,
            tau=tau,
            layers=config.variational.layers if config.variational else 3,
            integrator=config.variational.integrator if config.variational else "heun",
            workers=threads,
        )
    write_csv(run.path("scan.csv"), ["lambda", "kappa", "f_ave", "method"], ((l, k, f, kind) for l, k, f in scan.rows()))
    lam, kap = scan.argmax
    run.summary = {"argmax_lambda": lam, "argmax_kappa": kap, "max_f_ave": float(scan.values.max()), "method": kind}
    run.finish()
    return run


# -- grover -------------------------------------------------------------------------


def _search_grid(config: ExperimentConfig):
    s = config.search
    m = config.model
    lam_range = s.lambda_range or m.lambda_range
    kap_range = s.kappa_range or m.kappa_range
    steps = s.steps if s.steps is not None else m.steps
    steps = (steps, steps) if isinstance(steps, int) else steps
    return grid_values(*lam_range, steps[0]), grid_values(*kap_range, steps[1])


def cmd_grover(config: ExperimentConfig, out_dir: Path, method: str | None = None, threads: int = 1) -> Run:
    if config.search is None:
        from .config import ConfigError

        raise ConfigError("grover needs a 'search' block")
    run = Run("grover", config, out_dir)
    s = config.search
    model = config.model.params()
    trials = config.trial_set()
    lambdas, kappas = _search_grid(config)
    candidates = candidate_grid(lambdas, kappas, model.N)
    with run.timed("score_candidates"):
        t = trials[0].time
        candidates = score_candidates(candidates, build_tfim(model), trials, _method(config, t, method), threads)
    if s.theta_th is not None:
        theta_th = s.theta_th
    elif s.fidelity_threshold is not None:
        theta_th = theta_of_fidelity(s.fidelity_threshold)
    else:
        theta_th = choose_threshold(candidates.fidelities, s.marked, s.K)
    if not 0 < theta_th < math.pi:
        from .config import ConfigError

        raise ConfigError(f"threshold angle {theta_th} outside (0, pi)")
    with run.timed("run_search"):
        report = run_search(candidates, theta_th, s.K, s.iterations, s.mode)
    write_csv(
        run.path("grover_iterations.csv"),
        ["iteration", "marked_probability", "leaked_probability"],
        ((j, p, q) for j, (p, q) in enumerate(zip(report.marked_probability, report.leaked_probability))),
    )
    final = report.final_probabilities
    write_csv(
        run.path("grover_candidates.csv"),
        ["index", "lambda", "kappa", "fidelity", "theta", "marked", "flip", "final_probability"],
        (
            (x, p.lam, p.kappa, report.fidelities[x], report.thetas[x], report.marked[x], report.flips[x], final[x])
            for x, p in enumerate(candidates.labels)
        ),
    )
    run.summary = report.summary()
    write_json(run.path("grover_summary.json"), run.summary)
    run.finish()
    return run


# -- variational --------------------------------------------------------------------


def cmd_variational(config: ExperimentConfig, out_dir: Path, method: str | None = None, threads: int = 1) -> Run:
    run = Run("variational", config, out_dir)
    v = config.variational
    if v is None:
        from .config import VariationalConfig

        v = VariationalConfig()
    model = config.model.params()
    trials = config.trial_set()
    eff = _effective(config)
    h_test = residual_hamiltonian(model, eff)
    n_steps = int(round(v.t_final / v.dt))
    dt = v.t_final / n_steps
    with run.timed("variational"):
        if h_test.is_empty():
            times = dt * np.arange(n_steps + 1)
            f_var = np.ones(n_steps + 1)
            thetas = None
        else:
            ansatz = AnsatzCircuit.trotter_layers(h_test, v.layers)
            traj = evolve_trajectory(
                ansatz,
                np.zeros(ansatz.n_params),
                h_test,
                trials,
                v.t_final,
                dt,
                reg=v.regularization,
                integrator=v.integrator,
                keep_thetas=v.record_thetas,
            )
            times, f_var, thetas = traj.times, traj.f_ave, traj.thetas
    header = ["t", "f_ave_variational"]
    columns = [times, f_var]
    if v.trotter_reference:
        with run.timed("trotter_reference"):
            _, f_trot = trotter_reference(h_test, trials, v.t_final, dt)
        header.append("f_ave_trotter")
        columns.append(f_trot)
        run.summary["max_abs_difference"] = float(np.max(np.abs(f_var - f_trot)))
    if thetas is not None:
        for i in range(thetas.shape[2]):
            for k in range(thetas.shape[1]):
                header.append(f"theta_{i + 1}_{k}")
                columns.append(thetas[:, k, i])
    write_csv(run.path("trajectory.csv"), header, zip(*columns))
    run.summary.update({"lambda": eff.lam, "kappa": eff.kappa, "final_f_ave": float(f_var[-1]), "steps": n_steps})
    run.finish()
    return run


# -- oracle -------------------------------------------------------------------------


def flip_curve(K: int, threshold_units: float, samples: int, span_units: float):
    """``(theta_x, a_x, eta_x)`` at ``samples`` evenly spaced points over ``[0, span_units]`` grid units."""
    grid = PhaseGrid(K)
    theta_th = threshold_units * grid.spacing
    units = np.linspace(0.0, span_units, samples)
    out = []
    for u in units:
        th = u * grid.spacing
        out.append((th, flip_coefficient(th, K, theta_th), ideal_flip(th, theta_th)))
    return theta_th, out


def oracle_fixtures(config: ExperimentConfig) -> dict:
    """Reference values from dense eigendecomposition and closed forms."""
    model = config.model.params()
    trials = config.trial_set()
    t = config.shared_time()
    exact = Method("exact")
    eff = exact_sw_coefficients(model.delta, model.J)
    h_test = residual_hamiltonian(model, eff)
    lambdas, kappas = config.model.lambdas(), config.model.kappas()
    scan = landscape_scan(lambdas, kappas, model, trials, t, "exact")
    amps = [complex(a) for a in _amplitudes(h_test, trials)]
    fixtures = {
        "model": {"N": model.N, "delta": model.delta, "J": model.J, "t": t},
        "exact_point": {"lambda": eff.lam, "kappa": eff.kappa},
        "f_ave_exact_point": average_fidelity(h_test, trials, exact),
        "f_overall_exact_point": overall_fidelity(h_test, trials, exact),
        "trial_amplitudes_exact_point": [[a.real, a.imag] for a in amps],
        "empty_h_test_f_ave": average_fidelity(HamiltonianSum.empty(model.N), trials, exact),
        "landscape": {
            "lambdas": [float(x) for x in lambdas],
            "kappas": [float(x) for x in kappas],
            "f_ave": [[float(v) for v in row] for row in scan.values],
            "argmax": list(scan.argmax),
        },
    }
    o = config.oracle
    theta_th, curve = flip_curve(o.K, o.threshold_units, o.samples, o.span_units)
    fixtures["flip_curve"] = {
        "K": o.K,
        "theta_th": theta_th,
        "theta_x": [c[0] for c in curve],
        "a_x": [c[1] for c in curve],
        "eta_x": [c[2] for c in curve],
    }
    phi = math.asin(math.sqrt(1 / 64))
    fixtures["grover_n64_m1"] = [math.sin((2 * j + 1) * phi) ** 2 for j in range(11)]
    if config.search is not None:
        lambdas_s, kappas_s = _search_grid(config)
        candidates = score_candidates(candidate_grid(lambdas_s, kappas_s, model.N), build_tfim(model), trials, exact)
        fixtures["search_grid"] = {
            "lambdas": [float(x) for x in lambdas_s],
            "kappas": [float(x) for x in kappas_s],
            "f_overall": [float(f) for f in candidates.fidelities],
        }
    return fixtures


def _amplitudes(h_test, trials: TrialSet):
    from .fidelity import trial_amplitudes

    return trial_amplitudes(h_test, trials, Method("exact"))


def cmd_oracle(config: ExperimentConfig, out_dir: Path, method: str | None = None, threads: int = 1) -> Run:
    run = Run("oracle", config, out_dir)
    with run.timed("oracle"):
        fixtures = oracle_fixtures(config)
    write_json(run.path("fixtures.json"), fixtures)
    curve = fixtures["flip_curve"]
    write_csv(
        run.path("flip_curve.csv"),
        ["theta_x", "a_x", "eta_x", "abs_error"],
        ((th, a, e, abs(a - e)) for th, a, e in zip(curve["theta_x"], curve["a_x"], curve["eta_x"])),
    )
    land = fixtures["landscape"]
    write_csv(
        run.path("landscape_exact.csv"),
        ["lambda", "kappa", "f_ave", "method"],
        (
            (l, k, land["f_ave"][i][j], "exact")
            for j, k in enumerate(land["kappas"])
            for i, l in enumerate(land["lambdas"])
        ),
    )
    run.summary = {"f_ave_exact_point": fixtures["f_ave_exact_point"], "argmax": land["argmax"]}
    run.finish()
    return run


COMMANDS = {
    "scan": cmd_scan,
    "grover": cmd_grover,
    "variational": cmd_variational,
    "oracle": cmd_oracle,
}
