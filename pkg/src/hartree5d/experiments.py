"""Experiment drivers behind the command-line subcommands.

Each ``cmd_*`` takes a validated :class:`ScenarioConfig` and an output
directory, writes its artifacts there and returns the JSON-able report.
"""
from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig
from .evolution import Verdict, evolve
from .functionals import RegimeKind, classify, conserved_set
from .grid import RadialField, build_grid
from .ground_state import GroundState, SolverParams, get_ground_state, pohozaev_residuals
from .io import Checkpoint, TrajectoryCSV, checkpoint_load, checkpoint_save
from .verify import Suite, run_all
from .virial import (
    build_cutoff,
    tb_finite_variance,
    tb_localized,
    tb_radial,
    variance,
    variance_rate,
)

BLOWUP_NOTE = ("blow-up is detected from a numerical threshold, not proven; "
               "finite-time blow-up and unbounded growth along a time sequence "
               "cannot be told apart here")


def write_json(out_dir: Path, name: str, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def ground_state_for(cfg: ScenarioConfig) -> tuple[GroundState, bool]:
    grid = build_grid(cfg.grid.n_points, cfg.grid.r_max)
    params = SolverParams(tol=cfg.ground_state.tol, max_iters=cfg.ground_state.max_iters)
    return get_ground_state(grid, params, cfg.ground_state.cache_dir)


def initial_field(cfg: ScenarioConfig, gs: GroundState) -> RadialField:
    """Instantiate the configured preset on the ground-state grid."""
    p = cfg.initial_data.params
    r = np.asarray(gs.grid.nodes)
    name = cfg.initial_data.preset
    if name == "scaled_Q":
        return p["a"] * gs.field
    base = p["amplitude"] * np.exp(-0.5 * (r / p["width"]) ** 2)
    if name == "phase_gaussian":
        base = base * np.exp(1j * p["chirp"] * r * r)
    s = np.asarray(base, dtype=complex)
    s[-1] = 0.0
    return RadialField(gs.grid, s)


def cmd_groundstate(cfg: ScenarioConfig, out_dir: Path) -> dict:
    t0 = time.perf_counter()
    gs, hit = ground_state_for(cfg)
    report = {
        "n_points": gs.grid.n_points,
        "r_max": gs.grid.r_max,
        "mass": gs.mass,
        "kinetic": gs.kinetic,
        "lv4": gs.lv4,
        "energy": gs.energy,
        "energy_reference": gs.e_ref,
        "c_hls": gs.c_hls,
        "pohozaev_residuals": list(pohozaev_residuals(gs)),
        "iterations": gs.iterations,
        "cache_hit": hit,
    }
    write_json(out_dir, "groundstate.json", report)
    report["seconds"] = time.perf_counter() - t0
    return report


def cmd_classify(cfg: ScenarioConfig, out_dir: Path) -> dict:
    gs, _ = ground_state_for(cfg)
    regime = classify(initial_field(cfg, gs), gs)
    report = regime.as_dict()
    write_json(out_dir, "classify.json", report)
    return report


def cmd_evolve(cfg: ScenarioConfig, out_dir: Path) -> dict:
    gs, _ = ground_state_for(cfg)
    t0 = 0.0
    if cfg.resume_from:
        ck = checkpoint_load(cfg.resume_from, gs.grid)
        u0, t0 = ck.field, ck.t
    else:
        u0 = initial_field(cfg, gs)
    regime = classify(u0, gs)
    phi = build_cutoff(cfg.cutoff.s_out, cfg.cutoff.d, cfg.cutoff.e)
    out_dir.mkdir(parents=True, exist_ok=True)
    every = cfg.outputs.checkpoint_every
    ck_dir = out_dir / "checkpoints"
    if every:
        ck_dir.mkdir(exist_ok=True)

    def on_step(step, t, s):
        if every and step % every == 0:
            checkpoint_save(Checkpoint(RadialField(gs.grid, s), t), ck_dir / f"ckpt_{step:08d}.txt")

    max_eta = -math.inf
    with open(out_dir / "trajectory.csv", "w", encoding="utf-8", newline="") as fh:
        writer = TrajectoryCSV(fh) if "csv" in cfg.outputs.formats else None

        def on_sample(row):
            nonlocal max_eta
            max_eta = max(max_eta, row.eta)
            if writer is not None:
                writer.write(row)

        _, outcome = evolve(u0, cfg.evolution, gs, t0=t0, z_radius=cfg.virial.R, cutoff=phi,
                            on_sample=on_sample, on_step=on_step)
    report = {
        "verdict": outcome.verdict.value,
        "t_final": outcome.t,
        "reason": outcome.reason,
        "max_eta": max_eta,
        "regime": regime.kind.value,
    }
    if regime.kind == RegimeKind.OUT_OF_THEORY:
        report["label"] = "initial data at or above the ground-state threshold"
    if outcome.verdict == Verdict.BLOWUP:
        report["note"] = BLOWUP_NOTE
    write_json(out_dir, "outcome.json", report)
    return report


def resolve_lambda(cfg: ScenarioConfig, u0: RadialField, gs: GroundState) -> float:
    if cfg.lam is not None:
        return cfg.lam
    regime = classify(u0, gs)
    if regime.kind != RegimeKind.DIVERGENT:
        raise ConfigError("virial.lambda",
                          f"not set and the initial data is {regime.kind.value}, so no lambda > 1 applies")
    return regime.lambda_plus


def cmd_tb(cfg: ScenarioConfig, out_dir: Path) -> dict:
    gs, _ = ground_state_for(cfg)
    u0 = initial_field(cfg, gs)
    lam = resolve_lambda(cfg, u0, gs)
    v = cfg.virial
    hi = min(lam - 1, 1.0)
    if not 0 < v.gamma < hi:
        raise ConfigError("virial.gamma", f"must lie in (0, {hi:.6g}) for lambda={lam:.6g}")
    phi = build_cutoff(cfg.cutoff.s_out, cfg.cutoff.d, cfg.cutoff.e)
    var0, rate0 = variance(u0), variance_rate(u0)
    report = {
        "lambda": lam,
        "E_Q": gs.e_ref,
        "finite_variance": {
            "t_b": tb_finite_variance(var0, rate0, lam, gs.e_ref),
            "variance": var0,
            "variance_rate": rate0,
        },
        "localized": tb_localized(u0, lam, v, gs, phi).as_dict(),
        "radial": tb_radial(u0, lam, v, gs, phi).as_dict(),
        "energy": conserved_set(u0).energy,
    }
    write_json(out_dir, "tb.json", report)
    return report


def cmd_verify(cfg: ScenarioConfig, out_dir: Path) -> dict:
    results = run_all(Suite(cfg.ground_state.cache_dir))
    report = {
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    write_json(out_dir, "verify.json", report)
    return report
