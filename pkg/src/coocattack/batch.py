"""Batch orchestration of co-occurrence attacks over a pairing plan."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .attack import AttackConfig, run_attack
from .fileio import atomic_write_json, load_png, save_png

log = logging.getLogger(__name__)

JOBS_ENV = "COOCATTACK_JOBS"


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _item_names(index: int, source: str) -> tuple[str, str]:
    stem = f"{index:05d}_{Path(source).stem}"
    return f"{stem}.png", f"{stem}.csv"


def _run_item(args):
    index, row, cfg_dict, out_dir = args
    cfg = AttackConfig.from_dict(cfg_dict)
    png_name, csv_name = _item_names(index, row["source"])
    item = {
        "index": index,
        "source": row["source"],
        "target": row["target"],
        "output": png_name,
        "trace": csv_name,
    }
    t0 = time.perf_counter()
    try:
        src = load_png(row["source"])
        tgt = load_png(row["target"])
    except (OSError, ValueError) as exc:
        item.update(status="failed", error=str(exc))
        return item
    try:
        res = run_attack(src, tgt, cfg, rng_index=index)
    except Exception as exc:  # one bad item must not sink the batch
        item.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return item
    save_png(Path(out_dir) / png_name, res.adversarial)
    res.trace.write_csv(Path(out_dir) / csv_name)
    item.update(
        status="ok",
        initial_hist_l1=res.initial_hist_l1,
        final_hist_l1=res.final_hist_l1,
        final_image_l1=res.final_image_l1,
        seconds=round(time.perf_counter() - t0, 3),
    )
    return item


def batch_attack(plan_rows, cfg: AttackConfig, out_dir, jobs: int = 1,
                 manifest_name: str = "manifest.json") -> dict:
    """Attack every (source, target) row of a plan and write a run manifest.

    Each item draws its noise from ``(cfg.seed, item index)``, so results do
    not depend on ``jobs``. Missing inputs mark the item failed; an unwritable
    output directory raises. Wall-clock seconds per item go to a separate
    ``timings.json`` so the manifest itself is reproducible byte for byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    cfg_dict = cfg.to_dict()
    work = [(i, row, cfg_dict, str(out)) for i, row in enumerate(plan_rows)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            items = list(pool.map(_run_item, work))
    else:
        items = [_run_item(w) for w in work]
    timings = [{"index": it["index"], "seconds": it.pop("seconds", None)} for it in items]
    for it in items:
        log.info("%s -> %s: %s", it["source"], it["output"], it["status"])
    manifest = {
        "command": "attack-cooc",
        "config": cfg_dict,
        "seed": cfg.seed,
        "plan": [{"source": r["source"], "target": r["target"]} for r in plan_rows],
        "items": items,
    }
    atomic_write_json(out / manifest_name, manifest)
    atomic_write_json(out / "timings.json", timings)
    return manifest


def replay(manifest: dict, out_dir, jobs: int = 1) -> dict:
    """Re-run a manifest's plan with its recorded configuration and seed."""
    cfg = AttackConfig.from_dict(manifest["config"])
    return batch_attack(manifest["plan"], cfg, out_dir, jobs)
