"""Scenario runner: design, simulate, verify, and bound commands.

Scenarios are JSON files (bundled under asdinv/scenarios or given by
path); dotted-path --set overrides make parameter sweeps reproducible
from the command line. Exit codes: 0 ok, 2 config error, 3 divergence,
4 verification failure, 5 missing assumption constants.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, asd_design, plants, sim
from .controller_rt import ControllerSpec, make_controller, pi_gains, x_to_u_response
from .errors import AsdinvError, ConfigError, MissingConstants, NonFiniteState

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFY = 4
EXIT_CONSTANTS = 5

BUNDLED = ("siso", "f16", "quadrotor", "quadrotor_payload", "synthetic", "deadzone", "delay_demo")


@dataclass
class Scenario:
    name: str
    raw: dict

    @property
    def plant_cfg(self) -> dict:
        return self.raw["plant"]


def _load_raw(ref: str) -> dict:
    path = Path(ref)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    elif ref in BUNDLED:
        text = resources.files("asdinv.scenarios").joinpath(f"{ref}.json").read_text()
    else:
        raise ConfigError(f"unknown scenario {ref!r}: not a bundled name {BUNDLED} or a .json path")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {ref!r} is not valid JSON: {exc}") from exc


def _apply_override(raw: dict, key: str, value: str) -> None:
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    parts = key.split(".")
    if len(parts) == 1 and parts[0] not in raw:
        # bare key: find it in exactly one sub-table
        hits = [k for k, v in raw.items() if isinstance(v, dict) and parts[0] in v]
        if len(hits) == 1:
            raw[hits[0]][parts[0]] = parsed
            return
        raise ConfigError(f"--set field {key!r} not found (or ambiguous) in scenario")
    node = raw
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"--set path {key!r}: no field {p!r}")
        node = node[p]
    if not isinstance(node, dict):
        raise ConfigError(f"--set path {key!r} does not address a field")
    node[parts[-1]] = parsed


def load_scenario(ref: str, overrides=()) -> Scenario:
    raw = _load_raw(ref)
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"--set needs key=value, got {ov!r}")
        key, value = ov.split("=", 1)
        _apply_override(raw, key, value)
    for fieldname in ("plant", "design", "epsilon", "saturation", "sim"):
        if fieldname not in raw:
            raise ConfigError(f"scenario {ref!r} is missing the {fieldname!r} field")
    if not (isinstance(raw["epsilon"], (int, float)) and raw["epsilon"] > 0):
        raise ConfigError("field 'epsilon' must be a positive number")
    return Scenario(name=raw.get("name", ref), raw=raw)


def build_plant(sc: Scenario) -> plants.UncertainPlant:
    cfg = dict(sc.plant_cfg)
    kind = cfg.pop("kind", None)
    try:
        if kind == "hsu_siso":
            return plants.hsu_siso()
        if kind == "f16_rollyaw":
            return plants.f16_rollyaw(f2_typo_fix=bool(cfg.get("f2_typo_fix", False)))
        if kind == "quadrotor":
            J0 = np.diag(cfg.get("J0_diag", [0.03, 0.03, 0.04]))
            qc = plants.QuadrotorConfig(
                omega=float(cfg.get("omega", 15.0)),
                J0=J0,
                J_true=float(cfg.get("J_scale", 1.0)) * J0,
            )
            return plants.quadrotor_attitude(qc)
        if kind == "synthetic":
            return plants.synthetic_lti(
                g=float(cfg.get("g", 1.0)),
                S=np.asarray(cfg.get("S"), dtype=float) if cfg.get("S") is not None else None,
                d_amp=float(cfg.get("d_amp", 0.0)),
                d_freq=float(cfg.get("d_freq", 1.0)),
            )
        if kind == "deadzone":
            mu = float(cfg.pop("mu"))
            base = plants.synthetic_lti(
                g=float(cfg.get("g", 1.0)),
                S=np.asarray(cfg.get("S"), dtype=float) if cfg.get("S") is not None else None,
                d_amp=float(cfg.get("d_amp", 0.0)),
                d_freq=float(cfg.get("d_freq", 1.0)),
            )
            return plants.dead_zone(mu)(base)
        if kind == "delay":
            return plants.delayed_input_lti(
                tau=float(cfg.pop("tau")),
                g=float(cfg.get("g", 1.0)),
                S=np.asarray(cfg.get("S"), dtype=float) if cfg.get("S") is not None else None,
                d_amp=float(cfg.get("d_amp", 0.0)),
                d_freq=float(cfg.get("d_freq", 1.0)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad plant configuration for kind {kind!r}: {exc}") from exc
    raise ConfigError(f"field 'plant.kind': unknown kind {kind!r}")


def build_core(sc: Scenario, plant: plants.UncertainPlant) -> asd_design.LinearCore:
    design = sc.raw["design"]
    if "select" not in design:
        raise ConfigError("field 'design.select' is required")
    K = design.get("K")
    if K == "zero":
        K_or_poles = np.zeros((plant.n, plant.m))
    elif K is not None:
        K_or_poles = np.asarray(K, dtype=float)
    elif design.get("poles") is not None:
        K_or_poles = np.asarray(design["poles"], dtype=float)
    else:
        raise ConfigError("field 'design': one of 'K' or 'poles' is required")
    M = design.get("M")
    return asd_design.build_core(
        plant.A0,
        plant.B,
        K_or_poles,
        design["select"],
        M_choice=np.asarray(M, dtype=float) if M is not None else None,
    )


def build_controller_spec(sc: Scenario, core) -> ControllerSpec:
    sat = sc.raw["saturation"]
    return ControllerSpec(
        core=core,
        epsilon=float(sc.raw["epsilon"]),
        u_min=np.asarray(sat["min"], dtype=float),
        u_max=np.asarray(sat["max"], dtype=float),
        realization_kind=sc.raw.get("realization", "pi_closed"),
    )


def build_sim_config(sc: Scenario) -> sim.SimConfig:
    s = sc.raw["sim"]
    try:
        return sim.SimConfig(
            dt=float(s["dt"]),
            t_final=float(s["t_final"]),
            x0=np.asarray(s["x0"], dtype=float),
            record_stride=int(s.get("record_stride", 1)),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad 'sim' section: {exc}") from exc


def _constants(sc: Scenario, plant) -> plants.AssumptionConstants:
    if "constants" in sc.raw and sc.raw["constants"]:
        try:
            return plants.AssumptionConstants(**sc.raw["constants"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad 'constants' section: {exc}") from exc
    if plant.constants is not None:
        return plant.constants
    raise MissingConstants(
        f"scenario {sc.name!r}: the plant carries no assumption constants; "
        "add a 'constants' section to run the bound command"
    )


def _out_dir(args, sc: Scenario) -> Path:
    out = Path(args.out) / sc.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return str(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def cmd_design(sc: Scenario, args) -> int:
    plant = build_plant(sc)
    core = build_core(sc, plant)
    spec = build_controller_spec(sc, core)
    Kp, Ki = pi_gains(core, spec.epsilon)
    report = asd_design.verify_theorem1(core)
    summary = {
        "scenario": sc.name,
        "K": core.K,
        "C": core.C,
        "Lambda": np.diag(core.Lam),
        "CtB": core.CtB,
        "pi_gains": {"Kp": Kp, "Ki": Ki},
        "theorem1": {
            "residual": report.theorem1_residual,
            "det_CtB": report.det_ctb,
            "checks": report.checks,
        },
        "eigenvalues": sorted(np.linalg.eigvals(core.A).real.tolist()),
    }
    _write_json(_out_dir(args, sc) / "design.json", summary)
    print(f"[{sc.name}] K =\n{core.K}")
    print(f"[{sc.name}] C =\n{core.C}")
    print(f"[{sc.name}] Lambda = {np.diag(core.Lam)}")
    print(f"[{sc.name}] theorem1 residual = {report.theorem1_residual:.3e}, "
          f"|det CtB| = {abs(report.det_ctb):.3e}")
    return EXIT_OK


def cmd_simulate(sc: Scenario, args) -> int:
    plant = build_plant(sc)
    core = build_core(sc, plant)
    spec = build_controller_spec(sc, core)
    cfg = build_sim_config(sc)
    out = _out_dir(args, sc)
    try:
        trace = sim.simulate(plant, spec, cfg, scenario_name=sc.name)
    except NonFiniteState as exc:
        _write_json(out / "summary.json", {
            "scenario": sc.name, "diverged": True, "blowup_time": exc.blowup_time,
        })
        if exc.trace is not None:
            sim.export_csv(exc.trace, out / "trace.csv")
        print(f"[{sc.name}] DIVERGED at t = {exc.blowup_time:.4f} s", file=sys.stderr)
        return EXIT_DIVERGENCE
    sim.export_csv(trace, out / "trace.csv")
    m = sim.metrics(trace)
    _write_json(out / "summary.json", {
        "scenario": sc.name,
        "diverged": False,
        "metrics": {
            "energy": m.energy,
            "sup_tail": m.sup_tail,
            "time_to_threshold": m.time_to_threshold,
            "max_abs_u": m.max_abs_u,
            "sat_fraction": m.sat_fraction,
        },
        "config": trace.metadata,
    })
    print(f"[{sc.name}] sup-tail ||x|| = {m.sup_tail:.3e}, E = {m.energy:.3f}, "
          f"max|u| = {np.max(m.max_abs_u):.3f}, sat = {100 * m.sat_fraction:.1f}%")
    return EXIT_OK


def cmd_verify(sc: Scenario, args) -> int:
    plant = build_plant(sc)
    core = build_core(sc, plant)
    spec = build_controller_spec(sc, core)
    cfg = build_sim_config(sc)
    out = _out_dir(args, sc)
    checks: dict[str, bool] = {}
    detail: dict[str, float] = {}

    report = asd_design.verify_theorem1(core)
    checks.update({f"theorem1.{k}": v for k, v in report.checks.items()})
    detail["theorem1_residual"] = report.theorem1_residual

    trace = sim.simulate(plant, spec, cfg, with_decomposition=True, scenario_name=sc.name)
    if plant.input_delay == 0:
        resid = np.max(np.linalg.norm(trace.y_p + trace.y_s - trace.y, axis=1))
        scale = max(np.max(np.linalg.norm(trace.y, axis=1)), 1e-30)
        detail["asd_identity_relative"] = float(resid / scale)
        checks["asd_identity"] = resid <= 1e-6 * scale

    # realization equivalence, evaluated without saturation
    wide = ControllerSpec(
        core=core, epsilon=spec.epsilon, u_min=-1e9 * np.ones(core.m),
        u_max=1e9 * np.ones(core.m), realization_kind="pi_closed",
    )
    wide_obs = ControllerSpec(
        core=core, epsilon=spec.epsilon, u_min=-1e9 * np.ones(core.m),
        u_max=1e9 * np.ones(core.m), realization_kind="observer",
    )
    tr_pi = sim.simulate(plant, wide, cfg, scenario_name=sc.name)
    tr_ob = sim.simulate(plant, wide_obs, cfg, scenario_name=sc.name)
    du = np.max(np.abs(tr_pi.u - tr_ob.u))
    uscale = max(np.max(np.abs(tr_pi.u)), 1e-30)
    detail["realization_equivalence_relative"] = float(du / uscale)
    checks["realization_equivalence"] = du <= 1e-6 * uscale

    omegas = np.logspace(-2, 2, 20)
    H_pi = x_to_u_response(wide, omegas)
    H_ob = x_to_u_response(wide_obs, omegas)
    dH = np.max(np.abs(H_pi - H_ob))
    hscale = max(np.max(np.abs(H_pi)), 1e-30)
    detail["frequency_response_relative"] = float(dH / hscale)
    checks["frequency_response_match"] = dH <= 1e-10 * hscale

    ok = all(checks.values())
    _write_json(out / "verify.json", {"scenario": sc.name, "checks": checks, "detail": detail, "pass": ok})
    for name, passed in checks.items():
        print(f"[{sc.name}] {name}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_bound(sc: Scenario, args) -> int:
    plant = build_plant(sc)
    core = build_core(sc, plant)
    consts = _constants(sc, plant)
    report = analysis.bound_report(core, consts, epsilon=float(sc.raw["epsilon"]))
    out = _out_dir(args, sc)
    _write_json(out / "bound.json", {"scenario": sc.name, **report.to_dict()})
    eps_max = report.eps_max
    print(f"[{sc.name}] gamma = ({report.gamma0:.4g}, {report.gamma1:.4g}, {report.gamma2:.4g}), "
          f"eps_max = {eps_max if eps_max != float('inf') else 'inf'}")
    if report.ultimate_appendix is not None:
        print(f"[{sc.name}] ultimate bound (appendix) = {report.ultimate_appendix:.4g}, "
              f"(statement) = {report.ultimate_statement:.4g}")
    return EXIT_OK


COMMANDS = {
    "design": cmd_design,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "bound": cmd_bound,
}


def _run_one(command, ref, overrides, args) -> int:
    try:
        sc = load_scenario(ref, overrides)
        return COMMANDS[command](sc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingConstants as exc:
        print(f"missing constants: {exc}", file=sys.stderr)
        return EXIT_CONSTANTS
    except NonFiniteState as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except AsdinvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="asdinv",
        description="Design, simulate, verify, and bound the additive-decomposition "
        "dynamic-inversion controller on benchmark scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", action="append", required=True,
                       help="bundled scenario name or path to a scenario JSON (repeatable)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path override, e.g. --set sim.dt=0.0005")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--jobs", type=int, default=1, help="run scenarios in parallel")
    args = parser.parse_args(argv)

    refs = args.scenario
    if args.jobs > 1 and len(refs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(lambda r: _run_one(args.command, r, args.set, args), refs))
    else:
        codes = [_run_one(args.command, r, args.set, args) for r in refs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
