"""Command line front end.

Four verbs:

    kptrack simulate --scenario NAME --seed S --out DIR
    kptrack track    --bundle DIR --filter KIND [--seed S] --out CSV
    kptrack metrics  --csv FILE [--stat NAME] [--out FILE]
    kptrack inspect  --bundle DIR

simulate renders a scripted scene into a trajectory bundle with embedded
ground truth; track replays a bundle through one tracker per reference
and streams a CSV; metrics aggregates such a CSV across keypoints per
timestep; inspect prints a bundle's manifest. Every effective setting is
printed at startup so a run's provenance is in its log.
"""

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import bundle as bio
from . import metrics, scenarios, tracking


def _echo(key, value):
    print(f"[kptrack] {key} = {value}")


def _echo_config(config):
    _echo("filter", config.filter_kind)
    _echo("seed", config.seed)
    _echo("alpha", config.alpha)
    for f in fields(config.discrete):
        _echo(f"discrete.{f.name}", getattr(config.discrete, f.name))
    for f in fields(config.particle):
        _echo(f"particle.{f.name}", getattr(config.particle, f.name))


# ── verbs ───────────────────────────────────────────────────────────────


def _cmd_simulate(args, parser):
    scens = scenarios.scripted_scenarios()
    if args.scenario not in scens:
        parser.error(f"unknown scenario {args.scenario!r}; available: "
                     + ", ".join(sorted(scens)))
    for key in ("scenario", "seed", "out"):
        _echo(key, getattr(args, key))
    sc = scens[args.scenario]
    b = bio.render_bundle(sc.scene, sc.refs, seed=args.seed)
    root = bio.write_bundle(b, args.out)
    print(f"wrote {b.n_frames} frames, {b.n_refs} references to {root}")
    return 0


def _overrides(args, names, prefix):
    out = {}
    for name in names:
        value = getattr(args, f"{prefix}_{name}")
        if value is not None:
            out[name] = value
    return out


_DISCRETE_KNOBS = ["sigma_r", "epsilon_floor"]
_PARTICLE_KNOBS = ["n_particles", "sigma_r", "p_w", "sigma_d", "epsilon",
                   "tau", "neff_frac", "p_inject"]


def _cmd_track(args, parser):
    if args.filter == "particle" and args.seed is None:
        parser.error("--seed is required for particle runs")
    b = bio.read_bundle(args.bundle)
    config = tracking.config_for_bundle(
        b, args.filter, seed=0 if args.seed is None else args.seed,
        output=args.out, alpha=args.alpha,
        discrete_overrides=_overrides(args, _DISCRETE_KNOBS, "discrete"),
        particle_overrides=_overrides(args, _PARTICLE_KNOBS, "particle"))
    _echo("bundle", args.bundle)
    _echo("out", args.out)
    _echo_config(config)
    records = tracking.run_tracking(b, config)
    print(f"tracked {len(records)} keypoints over {b.n_frames} frames "
          f"-> {args.out}")
    return 0


def _cmd_metrics(args, parser):
    for key in ("csv", "stat", "out"):
        _echo(key, getattr(args, key))
    records = tracking.read_records_csv(args.csv)
    agg = metrics.aggregate(records, stat=args.stat)
    lines = ["t,mean,std,count"]
    lines += [f"{t},{m!r},{s!r},{c}" for t, m, s, c in agg.rows()]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(agg.mean)} timesteps -> {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_inspect(args, parser):
    _echo("bundle", args.bundle)
    path = Path(args.bundle) / "manifest.json"
    if not path.is_file():
        raise bio.MissingFileError(f"no manifest at {path}")
    manifest = json.loads(path.read_text())
    arrays = manifest.pop("ground_truth", None)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    if arrays is not None:
        n = sum(len(row) for row in arrays["visible"])
        print(f"ground truth: {n} keypoint-frames embedded")
    return 0


# ── parser ──────────────────────────────────────────────────────────────


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="kptrack",
        description="keypoint tracking over distance-map/depth bundles")
    sub = parser.add_subparsers(dest="verb", required=True)

    sim = sub.add_parser("simulate", help="render a scripted scene")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(run=_cmd_simulate)

    trk = sub.add_parser("track", help="replay a bundle through a tracker")
    trk.add_argument("--bundle", required=True)
    trk.add_argument("--filter", choices=tracking.FILTER_KINDS,
                     default="none")
    trk.add_argument("--seed", type=int, default=None,
                     help="RNG seed; required for particle runs")
    trk.add_argument("--out", required=True)
    trk.add_argument("--alpha", type=float, default=None,
                     help="softmax temperature (default: bundle's, else 12)")
    for name in _DISCRETE_KNOBS:
        trk.add_argument(f"--discrete-{name.replace('_', '-')}", type=float,
                         default=None, dest=f"discrete_{name}")
    for name in _PARTICLE_KNOBS:
        kind = int if name == "n_particles" else float
        trk.add_argument(f"--particle-{name.replace('_', '-')}", type=kind,
                         default=None, dest=f"particle_{name}")
    trk.set_defaults(run=_cmd_track)

    met = sub.add_parser("metrics", help="aggregate a tracking CSV")
    met.add_argument("--csv", required=True)
    met.add_argument("--stat", default="gt_error",
                     choices=["gt_error", "mean_mode_px", "n_eff"])
    met.add_argument("--out", default=None)
    met.set_defaults(run=_cmd_metrics)

    ins = sub.add_parser("inspect", help="print a bundle's manifest")
    ins.add_argument("--bundle", required=True)
    ins.set_defaults(run=_cmd_inspect)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    _echo("verb", args.verb)
    try:
        return args.run(args, parser)
    except bio.BundleError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
