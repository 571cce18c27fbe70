"""``taxiassure`` command line: generate, train, eval and run.

Every command writes a manifest (seeds, inputs, outputs, version,
timestamps) before producing outputs and completes it at the end. Log
verbosity comes from ``ASSURE_LOG`` (DEBUG, INFO, WARNING, ...).
Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 a monitored run issued
a stop.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .assurance import DEFAULT_HORIZON, DEFAULT_OFFSETS, STOP, AssuranceSession, write_reports
from .dbn import FORECAST_MODES, DbnModel, EvidenceFrame, ModelError
from .evaluation import EnvironmentOverlapError, evaluate, rows_to_csv, surface_export
from .forest import ForestConfig
from .sim import PRESETS, Mission, SimConfig, VehicleState, generate_missions, load_environments, substream
from .trajectory import Trajectory, load_glob
from .training import TrainingConfig, train_model

log = logging.getLogger("taxiassure")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_STOP = 0, 1, 2, 3


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    seeds: dict
    inputs: dict
    output: str
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")

    def complete(self, path, outputs, status="ok", **extra):
        self.outputs = [str(p) for p in outputs]
        missing = [p for p in self.outputs if not Path(p).exists()]
        if missing:
            raise RuntimeError(f"outputs missing at completion: {missing}")
        self.finished = _now()
        self.status = status
        self.extra.update(extra)
        self.write(path)

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))


def configure_logging(stream=None):
    level = os.environ.get("ASSURE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=stream or sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def resolve_environments(text):
    """A JSON file of environments, or a comma-separated list of preset names."""
    p = Path(text)
    if p.exists():
        return load_environments(p)
    names = [s.strip() for s in text.split(",") if s.strip()]
    unknown = [n for n in names if n not in PRESETS]
    if not names or unknown:
        raise FileNotFoundError(f"no environment file {text!r} and no presets named {unknown or text!r}")
    return [PRESETS[n] for n in names]


def _float_list(text):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("need at least one value")
    return vals


def _manifest_for(path):
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


# -- commands ---------------------------------------------------------------
def cmd_generate(args):
    envs = resolve_environments(args.env)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("generate", {"seed": args.seed}, {"env": args.env, "missions": args.missions,
                                                           "steps": args.steps}, str(out))
    mpath = out / "manifest.json"
    manifest.write(mpath)
    trajs = generate_missions(envs, args.missions, args.steps, args.seed)
    written = []
    for i, tr in enumerate(trajs):
        p = out / f"mission_{i:04d}_{tr.env}.csv"
        tr.save(p)
        written.append(p)
    log.info("wrote %d missions (%d frames) to %s", len(trajs), sum(map(len, trajs)), out)
    manifest.complete(mpath, written, frames=sum(map(len, trajs)))
    print(f"{len(written)} missions, {sum(map(len, trajs))} frames -> {out}")
    return EXIT_OK


def cmd_train(args):
    trajs = load_glob(args.data)
    forest_seed = int(substream(args.seed, "forest").integers(2**63))
    config = TrainingConfig(
        forest=ForestConfig(trees=args.trees, min_leaf=args.min_leaf, samples_per_tree=args.samples_per_tree,
                            seed=forest_seed),
        alpha=args.alpha, ood_quantile=args.ood_quantile,
    )
    out = Path(args.out)
    mpath = _manifest_for(out)
    manifest = RunManifest("train", {"seed": args.seed, "forest": forest_seed},
                           {"data": args.data, "files": len(trajs), "trees": args.trees, "min_leaf": args.min_leaf,
                            "samples_per_tree": args.samples_per_tree, "alpha": args.alpha,
                            "ood_quantile": args.ood_quantile}, str(out))
    manifest.write(mpath)
    model, summary = train_model(trajs, config)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    print(f"forest: {args.trees} trees, min leaf {args.min_leaf}, {args.samples_per_tree} samples per tree")
    for line in summary.lines():
        print(line)
    manifest.complete(mpath, [out], rows_visited=summary.rows_visited, oob_accuracy=summary.oob_accuracy,
                      ood_threshold=summary.ood_threshold)
    return EXIT_OK


def cmd_eval(args):
    model = DbnModel.load(args.model)
    trajs = load_glob(args.data)
    out = Path(args.out)
    mpath = _manifest_for(out)
    manifest = RunManifest("eval", {}, {"model": args.model, "data": args.data, "offset": args.offset,
                                         "allow_overlap": args.allow_overlap}, str(out))
    if args.allow_overlap:
        log.warning("evaluating with --allow-overlap: test environments may include training environments")
    rows = evaluate(model, trajs, offset=args.offset, allow_overlap=args.allow_overlap)
    manifest.write(mpath)
    out.parent.mkdir(parents=True, exist_ok=True)
    text = rows_to_csv(rows)
    out.write_text(text)
    sys.stdout.write(text)
    manifest.complete(mpath, [out])
    return EXIT_OK


def cmd_run(args):
    model = DbnModel.load(args.model)
    env = resolve_environments(args.env)[0]
    if args.outlier_rate is not None:
        env = type(env)(**{**env.to_dict(), "outlier_rate": args.outlier_rate})
    init_rng = substream(args.seed, "init", args.mission)
    initial = VehicleState(args.initial_cte if args.initial_cte is not None else float(init_rng.uniform(-1.0, 1.0)),
                           args.initial_heading)
    sim = SimConfig(env, duration=args.steps, initial=initial, seed=args.seed, mission_id=args.mission,
                    **({"n_features": model.n_features} if model.n_features else {}))
    session = AssuranceSession(model, offsets=args.offsets, horizon=args.horizon, forecast_mode=args.forecast_mode)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mpath = out / "manifest.json"
    manifest = RunManifest("run", {"seed": args.seed, "mission": args.mission},
                           {"model": args.model, "env": args.env, "environment": env.to_dict(),
                            "offsets": list(args.offsets), "horizon": args.horizon, "steps": args.steps,
                            "initial": asdict(initial), "forecast_mode": args.forecast_mode}, str(out))
    manifest.write(mpath)

    mission = Mission(sim)
    reports, rows = [], []
    for t in range(args.steps):
        obs = mission.observe()
        rows.append((mission.state.cte, obs.cte_e, obs.he_e, obs.features, mission.state.heading))
        r = session.step(EvidenceFrame(obs.features, obs.cte_e, obs.he_e, t))
        reports.append(r)
        if r.action == STOP and args.halt_on_stop:
            log.warning("stop issued at t=%d, halting", t)
            break
        mission.advance(obs)

    tr = Trajectory(env.name, [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
                    np.vstack([r[3] for r in rows]), he_true=[r[4] for r in rows])
    rpath = out / "reports.jsonl"
    with open(rpath, "w") as fh:
        write_reports(reports, fh)
    tpath = out / "mission.csv"
    tr.save(tpath)
    spath = out / ("surface.json" if args.surface_format == "json" else "surface")
    surface_export(reports, model.cte_partition, spath, args.surface_format, tr.cte_true, tr.cte_e)

    stops = [r.t for r in reports if r.action == STOP]
    counts = {a: sum(r.action == a for r in reports) for a in ("continue", "slow", "stop")}
    manifest.complete(mpath, [rpath, tpath, spath], status="stop" if stops else "ok",
                      actions=counts, first_stop=stops[0] if stops else None,
                      ood_frames=sum(r.ood for r in reports))
    print(f"{len(reports)} frames: {counts['continue']} continue, {counts['slow']} slow, {counts['stop']} stop; "
          f"{sum(r.ood for r in reports)} flagged OOD")
    if stops:
        print(f"first stop at t={stops[0]}")
        return EXIT_STOP
    return EXIT_OK


# -- parser -----------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="taxiassure", description="Runtime assurance monitor for autonomous taxiing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate missions and write one CSV per mission")
    g.add_argument("--env", required=True, help="environment JSON file or comma-separated preset names")
    g.add_argument("--missions", type=int, default=26)
    g.add_argument("--steps", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit transition table, emission forest and OOD monitor")
    t.add_argument("--data", required=True, help="glob of trajectory CSVs")
    t.add_argument("--trees", type=int, default=280)
    t.add_argument("--min-leaf", type=int, default=10)
    t.add_argument("--samples-per-tree", type=int, default=100)
    t.add_argument("--alpha", type=float, default=2.0)
    t.add_argument("--ood-quantile", type=float, default=0.99)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="sensitivity/specificity of the network and the LES per environment")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--offset", type=float, default=2.0)
    e.add_argument("--allow-overlap", action="store_true", help="evaluate even on training environments")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("run", help="simulate one monitored mission")
    r.add_argument("--model", required=True)
    r.add_argument("--env", required=True)
    r.add_argument("--offsets", type=_float_list, default=DEFAULT_OFFSETS)
    r.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    r.add_argument("--steps", type=int, default=200)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--mission", type=int, default=0, help="mission index within the seed")
    r.add_argument("--initial-cte", type=float, default=None)
    r.add_argument("--initial-heading", type=float, default=0.0)
    r.add_argument("--outlier-rate", type=float, default=None, help="override the environment's outlier rate")
    r.add_argument("--forecast-mode", choices=FORECAST_MODES, default=None)
    r.add_argument("--surface-format", choices=("json", "csv"), default="json")
    r.add_argument("--halt-on-stop", action="store_true")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EnvironmentOverlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ModelError, ValueError, OSError) as exc:
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
