"""Command-line interface.

Exit codes: 0 success, 1 one or more items failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .attack import AttackConfig, run_attack
from .batch import batch_attack, default_jobs, replay
from .dft_attack import DftAttackConfig, dft_attack
from .features import (
    cooc_multi,
    dft_feature,
    direct_feature,
    parse_geometry,
    scale_cooc,
)
from .fileio import atomic_write_json, list_pngs, load_png, save_png, write_cooc, write_cooc_csv
from .pairing import build_pairing
from .softhist import LOSS_KINDS
from .surrogate import (
    ARTIFACT,
    LABELS,
    SMOOTH,
    LinearModel,
    SynthSpec,
    detection_rate,
    evaluate,
    feature_matrix,
    generate_dataset,
    train_linear,
)
from .toylab import ToyConfig, run_toy, run_toy_1d, run_toy_1d_trials, run_toy_2d_census
from .verify import verify

log = logging.getLogger("coocattack")

EXIT_OK, EXIT_ITEMS_FAILED, EXIT_CONFIG = 0, 1, 2

TOY_KEYS = set(ToyConfig.__dataclass_fields__) - {"seed"}
SURROGATE_KEYS = {"size", "n", "amplitude", "blur", "post_noise", "iters", "lr", "l2", "pool",
                  "geometries", "scale"}
DFT_KEYS = {"lam", "boundary"}
SECTIONS = {"attack", "dft", "toy", "surrogate"}


class ConfigError(ValueError):
    """Bad configuration file or flag combination."""


class ItemError(RuntimeError):
    """An input could not be processed."""


# ---------------------------------------------------------------- config


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    allowed = {
        "attack": set(AttackConfig.__dataclass_fields__) - {"seed"},
        "dft": DFT_KEYS,
        "toy": TOY_KEYS,
        "surrogate": SURROGATE_KEYS,
    }
    for name, section in cfg.items():
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        bad = set(section) - allowed[name]
        if bad:
            raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
    return cfg


def _merge(base: dict, **flags) -> dict:
    out = dict(base)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def attack_config(args) -> AttackConfig:
    d = _merge(
        args.config_data.get("attack", {}),
        lam=args.lam,
        kernel=args.kernel,
        lr=args.lr,
        geometries=args.geometry,
        persist_noise=True if args.persist_noise else None,
        reset_momentum=False if args.keep_momentum else None,
    )
    d["seed"] = args.seed
    try:
        return AttackConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dft_config(args) -> DftAttackConfig:
    d = _merge(args.config_data.get("dft", {}), lam=args.lam, boundary=args.boundary)
    try:
        return DftAttackConfig(seed=args.seed, **d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def toy_config(args) -> ToyConfig:
    d = _merge(args.config_data.get("toy", {}), max_steps=args.max_steps, kernel=args.kernel,
               persist_noise=True if args.persist_noise else None)
    try:
        return ToyConfig(seed=args.seed, **d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def surrogate_settings(args) -> dict:
    d = {"size": 64, "n": 40, "amplitude": 15.0, "blur": 1.5, "post_noise": 0.0, "iters": 500,
         "lr": 0.5, "l2": 1e-3, "pool": 8, "geometries": ["horizontal"], "scale": "max"}
    d.update(args.config_data.get("surrogate", {}))
    return _merge(d, n=getattr(args, "n", None), size=getattr(args, "size", None))


# ---------------------------------------------------------------- helpers


def _load(path) -> np.ndarray:
    try:
        return load_png(path)
    except (OSError, ValueError) as exc:
        raise ItemError(f"cannot read image {path}: {exc}") from exc


def _pngs(directory) -> list:
    if not Path(directory).is_dir():
        raise ConfigError(f"not a directory: {directory}")
    return list_pngs(directory)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad vector {text!r}") from exc


def _parse_points(text: str) -> np.ndarray:
    try:
        pts = np.array([[float(v) for v in p.split(",")] for p in text.split(";")])
    except ValueError as exc:
        raise ConfigError(f"bad point list {text!r}") from exc
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigError("points must be 'x,y;x,y;...'")
    return pts


# ---------------------------------------------------------------- commands


def cmd_features(args) -> int:
    img = _load(args.image)
    if args.kind == "cooc":
        geoms = [parse_geometry(g) for g in (args.geometry or ["horizontal"])]
        stack = cooc_multi(img, geoms)
        if args.scale != "none":
            stack = scale_cooc(stack, args.scale)
        write_cooc(args.out, stack)
        if args.csv:
            write_cooc_csv(args.csv, stack)
        _emit({"kind": "cooc", "matrices": len(stack), "bins": stack.bins})
        return EXIT_OK
    feat = dft_feature(img) if args.kind == "dft" else direct_feature(img)
    with open(args.out, "wb") as fh:
        np.save(fh, feat.astype(np.float64))
    _emit({"kind": args.kind, "shape": list(feat.shape)})
    return EXIT_OK


def cmd_attack_cooc(args) -> int:
    cfg = attack_config(args)
    jobs = args.jobs or default_jobs()
    if args.replay:
        if not args.out_dir:
            raise ConfigError("--replay needs --out-dir")
        try:
            manifest = json.loads(Path(args.replay).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifest: {exc}") from exc
        try:
            manifest = replay(manifest, args.out_dir, jobs)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad manifest: {exc}") from exc
        return _batch_exit(manifest)
    if args.plan:
        if not args.out_dir:
            raise ConfigError("--plan needs --out-dir")
        try:
            rows = json.loads(Path(args.plan).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read plan: {exc}") from exc
        if not isinstance(rows, list) or any(
            not isinstance(r, dict) or "source" not in r or "target" not in r for r in rows
        ):
            raise ConfigError("plan must be a list of {source, target} objects")
        return _batch_exit(batch_attack(rows, cfg, args.out_dir, jobs))
    if not (args.source and args.target and args.out):
        raise ConfigError("need --source, --target and --out (or --plan / --replay)")
    res = run_attack(_load(args.source), _load(args.target), cfg)
    save_png(args.out, res.adversarial)
    if args.trace:
        res.trace.write_csv(args.trace)
    _emit({
        "initial_hist_l1": res.initial_hist_l1,
        "final_hist_l1": res.final_hist_l1,
        "final_image_l1": res.final_image_l1,
    })
    return EXIT_OK


def _batch_exit(manifest: dict) -> int:
    failed = sum(it["status"] != "ok" for it in manifest["items"])
    _emit({"items": len(manifest["items"]), "failed": failed})
    return EXIT_ITEMS_FAILED if failed else EXIT_OK


def cmd_attack_dft(args) -> int:
    cfg = dft_config(args)
    if args.sources or args.targets:
        if not (args.sources and args.targets and args.out_dir):
            raise ConfigError("directory mode needs --sources, --targets and --out-dir")
        return _dft_dir(args, cfg)
    if not (args.source and args.target and args.out):
        raise ConfigError("need --source, --target and --out (or directory mode)")
    save_png(args.out, dft_attack(_load(args.source), _load(args.target), cfg))
    return EXIT_OK


def _dft_dir(args, cfg: DftAttackConfig) -> int:
    sources = _pngs(args.sources)
    targets = _pngs(args.targets)
    if not targets:
        raise ConfigError(f"no PNG targets in {args.targets}")
    # random pairing; fixed by the master seed
    rng = np.random.default_rng(cfg.seed)
    picks = rng.integers(0, len(targets), size=len(sources))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = []
    for i, (src, t) in enumerate(zip(sources, picks)):
        item = {"source": str(src), "target": str(targets[t]), "output": f"{i:05d}_{src.stem}.png"}
        try:
            adv = dft_attack(_load(src), _load(targets[t]), cfg)
            save_png(out / item["output"], adv)
            item["status"] = "ok"
        except (ItemError, ValueError) as exc:
            item.update(status="failed", error=str(exc))
        items.append(item)
    manifest = {"command": "attack-dft", "config": asdict(cfg), "seed": cfg.seed, "items": items}
    atomic_write_json(out / "manifest.json", manifest)
    return _batch_exit(manifest)


def cmd_pair(args) -> int:
    sources = _pngs(args.sources)
    targets = _pngs(args.targets)
    if not targets:
        raise ConfigError(f"no PNG targets in {args.targets}")
    plan = build_pairing([_load(p) for p in sources], [_load(p) for p in targets], args.block_size)
    rows = plan.to_json_rows([str(p) for p in sources], [str(p) for p in targets])
    atomic_write_json(args.out, rows)
    _emit({"pairs": len(rows)})
    return EXIT_OK


def cmd_toy1d(args) -> int:
    cfg = toy_config(args)
    src = _parse_vector(args.source)
    tgt = _parse_vector(args.target)
    if src.shape != tgt.shape:
        raise ConfigError("source and target need equal length")
    if args.trials > 1:
        seeds = range(args.seed, args.seed + args.trials)
        report = run_toy_1d_trials(src, tgt, args.loss, args.sigma, seeds, cfg)
        summary = {"loss": args.loss, "sigma": args.sigma, **report.to_dict()}
    else:
        run = run_toy_1d(src, tgt, args.loss, args.sigma, cfg)
        if args.trace:
            run.write_csv(args.trace)
        summary = _run_summary(run)
    if args.out:
        atomic_write_json(args.out, summary)
    _emit({k: v for k, v in summary.items() if k != "steps"})
    return EXIT_OK


def cmd_toy2d(args) -> int:
    cfg = toy_config(args)
    if args.source or args.target:
        if not (args.source and args.target):
            raise ConfigError("need both --source and --target")
        src = _parse_points(args.source)
        tgt = _parse_points(args.target)
        if src.shape != tgt.shape:
            raise ConfigError("source and target need the same number of points")
        run = run_toy(src, tgt, args.loss, args.sigma, ToyConfig(**{**asdict(cfg), "grid": args.grid}))
        if args.trace:
            run.write_csv(args.trace)
        summary = _run_summary(run)
    else:
        report = run_toy_2d_census(args.trials, args.points, args.grid, args.loss, args.sigma,
                                   args.seed, cfg)
        summary = {"loss": args.loss, "sigma": args.sigma, "points": args.points,
                   "grid": args.grid, **report.to_dict()}
    if args.out:
        atomic_write_json(args.out, summary)
    _emit({k: v for k, v in summary.items() if k != "steps"})
    return EXIT_OK


def _run_summary(run) -> dict:
    final = run.trajectory[-1][0] if run.trajectory else run.points
    return {
        "loss": run.loss_kind,
        "sigma": run.noise_sigma,
        "success": run.success,
        "steps_to_converge": run.steps_to_converge,
        "final_points": np.asarray(final).tolist(),
    }


def cmd_surrogate(args) -> int:
    s = surrogate_settings(args)
    try:
        geoms = [parse_geometry(g) for g in s["geometries"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.action == "gen":
        spec = SynthSpec(size=s["size"], seed=args.seed, amplitude=s["amplitude"], blur=s["blur"],
                         post_noise=s["post_noise"])
        images, labels = generate_dataset(spec, s["n"])
        root = Path(args.out)
        counts = {SMOOTH: 0, ARTIFACT: 0}
        for img, lab in zip(images, labels):
            kind = ARTIFACT if lab else SMOOTH
            save_png(root / kind / f"{counts[kind]:05d}.png", img)
            counts[kind] += 1
        _emit(counts)
        return EXIT_OK
    if args.action == "train":
        images, labels = _labelled_dir(args.data)
        model = train_linear(
            _features(images, geoms, s), labels, iters=s["iters"], lr=s["lr"], l2=s["l2"],
            seed=args.seed, pool=s["pool"], geometries=[g.label() for g in geoms],
            feature_scale=s["scale"],
        )
        Path(args.model).parent.mkdir(parents=True, exist_ok=True)
        Path(args.model).write_text(model.to_json())
        _emit({"train_accuracy": evaluate(model, _features(images, geoms, s), labels)})
        return EXIT_OK
    # eval
    try:
        model = LinearModel.from_json(Path(args.model).read_text())
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise ConfigError(f"cannot read model: {exc}") from exc
    if args.data:
        images, labels = _labelled_dir(args.data)
        result = {"accuracy": evaluate(model, model.features(images), labels), "n": len(labels)}
    elif args.images:
        images = [_load(p) for p in _pngs(args.images)]
        if not images:
            raise ConfigError(f"no PNG images in {args.images}")
        result = {"detection_rate": detection_rate(model, images), "n": len(images)}
    else:
        raise ConfigError("eval needs --data or --images")
    if args.out:
        atomic_write_json(args.out, result)
    _emit(result)
    return EXIT_OK


def _labelled_dir(root):
    images, labels = [], []
    for kind in (SMOOTH, ARTIFACT):
        for p in _pngs(Path(root) / kind):
            images.append(_load(p))
            labels.append(LABELS[kind])
    if not images:
        raise ConfigError(f"no images under {root}/{SMOOTH} or {root}/{ARTIFACT}")
    return images, np.array(labels)


def _features(images, geoms, s):
    return feature_matrix(images, geoms, s["pool"], s["scale"])


def cmd_verify(args) -> int:
    report = verify(quick=args.quick)
    if args.out:
        atomic_write_json(args.out, report)
    _emit(report)
    return EXIT_OK if report["all_passed"] else EXIT_ITEMS_FAILED


def cmd_bench(args) -> int:
    cfg = attack_config(args)
    spec = SynthSpec(size=args.size, seed=args.seed)
    images, _ = generate_dataset(spec, 1)
    t0 = time.perf_counter()
    res = run_attack(images[0], images[1], cfg)
    seconds = time.perf_counter() - t0
    result = {"size": args.size, "steps": cfg.total_steps, "final_hist_l1": res.final_hist_l1,
              "initial_hist_l1": res.initial_hist_l1}
    if args.out:
        # timing stays out of the file so reruns are byte-identical
        atomic_write_json(args.out, result)
    _emit({**result, "seconds": round(seconds, 3)})
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _attack_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, help="image-fidelity weight")
    p.add_argument("--kernel", choices=["triangle", "raised_cosine"])
    p.add_argument("--lr", type=float)
    p.add_argument("--geometry", action="append",
                   help="horizontal, diagonal or crossband(i,j); repeatable")
    p.add_argument("--persist-noise", action="store_true",
                   help="add noise to the iterate instead of only the gradient probe")
    p.add_argument("--keep-momentum", action="store_true",
                   help="do not reset momentum after each epoch's rounding")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coocattack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="compute co-occurrence, DFT or direct features")
    _common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--kind", choices=["cooc", "dft", "direct"], default="cooc")
    p.add_argument("--geometry", action="append")
    p.add_argument("--scale", choices=["none", "max", "mass"], default="max")
    p.add_argument("--out", required=True, help=".cooc file (cooc) or .npy file")
    p.add_argument("--csv", help="also write non-zero entries as CSV")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("attack-cooc", help="co-occurrence matching attack")
    _common(p)
    _attack_flags(p)
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--out")
    p.add_argument("--trace", help="per-step CSV trace")
    p.add_argument("--plan", help="pairing plan JSON for batch mode")
    p.add_argument("--replay", help="re-run a batch manifest")
    p.add_argument("--out-dir")
    p.add_argument("--jobs", type=int, help="worker processes (default $COOCATTACK_JOBS or 1)")
    p.set_defaults(func=cmd_attack_cooc)

    p = sub.add_parser("attack-dft", help="closed-form frequency-domain attack")
    _common(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--boundary", choices=["circular", "reflect"])
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--out")
    p.add_argument("--sources", help="directory of sources (random seeded pairing)")
    p.add_argument("--targets", help="directory of targets")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_attack_dft)

    p = sub.add_parser("pair", help="colour-histogram EMD pairing")
    _common(p)
    p.add_argument("--sources", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--block-size", type=int, default=900)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pair)

    for name, helptext in (("toy1d", "1D loss-landscape toy"), ("toy2d", "2D convergence census")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--loss", choices=sorted(LOSS_KINDS), default="l1_pyramid")
        p.add_argument("--sigma", type=float, default=0.01, help="noise std")
        p.add_argument("--kernel", choices=["triangle", "raised_cosine"])
        p.add_argument("--max-steps", type=int)
        p.add_argument("--persist-noise", action="store_true")
        p.add_argument("--trace", help="trajectory CSV")
        p.add_argument("--out", help="summary JSON")
        if name == "toy1d":
            p.add_argument("--source", default="1,2,3")
            p.add_argument("--target", default="2,3,4")
            p.add_argument("--trials", type=int, default=1, help="seeds seed..seed+trials-1")
            p.set_defaults(func=cmd_toy1d)
        else:
            p.add_argument("--source", help="'x,y;x,y;...' single run instead of a census")
            p.add_argument("--target")
            p.add_argument("--trials", type=int, default=100)
            p.add_argument("--points", type=int, default=8)
            p.add_argument("--grid", type=int, default=8)
            p.set_defaults(func=cmd_toy2d)

    p = sub.add_parser("surrogate", help="synthetic data and linear surrogate detector")
    _common(p)
    p.add_argument("action", choices=["gen", "train", "eval"])
    p.add_argument("--out", help="gen: dataset directory; eval: result JSON")
    p.add_argument("--n", type=int, help="gen: images per class")
    p.add_argument("--size", type=int, help="gen: image side")
    p.add_argument("--data", help="directory with smooth/ and artifact/ subfolders")
    p.add_argument("--images", help="eval: directory of images to score as artifact")
    p.add_argument("--model", help="model JSON")
    p.set_defaults(func=cmd_surrogate)

    p = sub.add_parser("verify", help="run the invariant self-check suites")
    _common(p)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time one attack on a synthetic pair")
    _common(p)
    _attack_flags(p)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        if args.command == "surrogate":
            _check_surrogate_args(args)
        args.config_data = load_config(args.config)
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except ItemError as exc:
        log.error("%s", exc)
        return EXIT_ITEMS_FAILED
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_ITEMS_FAILED


def _check_surrogate_args(args) -> None:
    need = {"gen": ("out",), "train": ("data", "model"), "eval": ("model",)}[args.action]
    missing = [f"--{n}" for n in need if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"surrogate {args.action} needs {' '.join(missing)}")


if __name__ == "__main__":
    sys.exit(main())
