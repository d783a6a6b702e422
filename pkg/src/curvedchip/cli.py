"""Batch driver: feed/depth sweeps through the force models, CSV tables and SVG plots.

Usage::

    curvedchip --config sweep.json --model all --out results --plots
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import export
from .errors import ConfigError, CurvedChipError, FeedTooLarge
from .force import ComplianceModel, MaterialModel, compensate_deflection, material_from_dict
from .geometry import (ProcessParams, ThreadingProfile, ToolGeometry, build_threading_region,
                       build_turning_region, buttress_profile, max_feed)
from .simulate import (MODELS, decompose, normalizing_force, predict_region,
                       turning_force_of_depth)

log = logging.getLogger("curvedchip")


@dataclass
class RunConfig:
    """Validated sweep definition.  Lengths in mm, angles in radians."""

    models: tuple
    material: MaterialModel
    operation: str = "turning"
    tool: ToolGeometry | None = None
    depths: tuple = ()
    feeds: tuple = ()
    feed_fractions: tuple = ()
    threading: dict = field(default_factory=dict)
    mesh_size: float | None = None
    poisson: float = 0.3
    young_segments: int = 128
    compliance: ComplianceModel | None = None
    output_dir: str = "out"
    normalized: bool = False


def _sweep_values(spec, key):
    """A list, or ``{"start", "stop", "num"}`` expanded with ``linspace``."""
    v = spec.get(key)
    if v is None:
        return ()
    if isinstance(v, dict):
        try:
            return tuple(float(x) for x in np.linspace(v["start"], v["stop"], int(v["num"])))
        except KeyError as exc:
            raise ConfigError(f"{key} range needs start, stop and num") from exc
    return tuple(float(x) for x in v)


def load_config(source, models=None, mesh_size=None, out=None, normalized=None) -> RunConfig:
    """Parse a JSON config (path or mapping); keyword arguments override file values."""
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    else:
        data = dict(source)

    sel = models if models is not None else data.get("models", list(MODELS))
    if isinstance(sel, str):
        sel = list(MODELS) if sel == "all" else [sel]
    if not sel:
        raise ConfigError("at least one model must be selected")
    bad = [m for m in sel if m not in MODELS]
    if bad:
        raise ConfigError(f"unknown model(s) {bad}; choose from {list(MODELS)}")

    try:
        material = material_from_dict(data["material"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid material: {exc}") from exc

    op = data.get("operation", "turning")
    cfg = RunConfig(models=tuple(sel), material=material, operation=op)
    cfg.mesh_size = mesh_size if mesh_size is not None else data.get("mesh_size_mm")
    cfg.poisson = float(data.get("poisson", 0.3))
    cfg.young_segments = int(data.get("young_segments", 128))
    cfg.output_dir = out or data.get("output_dir", "out")
    cfg.normalized = bool(data.get("normalized", False) if normalized is None else normalized)
    if "compliance_m_per_N" in data:
        try:
            cfg.compliance = ComplianceModel(np.array(data["compliance_m_per_N"], float))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    if cfg.mesh_size is not None and not cfg.mesh_size > 0:
        raise ConfigError("mesh_size_mm must be positive")
    if not 0 < cfg.poisson < 0.5:
        raise ConfigError("poisson must lie in (0, 0.5)")

    if op == "turning":
        t = data.get("tool")
        if t is None:
            raise ConfigError("turning needs a tool section")
        try:
            cfg.tool = ToolGeometry.from_degrees(t["kappa_r_deg"], t["epsilon_deg"], t.get("r_eps_mm", 0.0),
                                                 t.get("gamma_f_deg", 0.0), t.get("gamma_p_deg", 0.0))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid tool: {exc}") from exc
        proc = data.get("process", {})
        cfg.depths = _sweep_values(proc, "depths_mm")
        cfg.feeds = _sweep_values(proc, "feeds_mm")
        cfg.feed_fractions = _sweep_values(proc, "feed_fractions")
        if not cfg.depths:
            raise ConfigError("process.depths_mm is empty")
        if not (cfg.feeds or cfg.feed_fractions):
            raise ConfigError("give process.feeds_mm or process.feed_fractions")
        vals = cfg.depths + cfg.feeds + cfg.feed_fractions
    elif op == "threading":
        th = dict(data.get("threading", {}))
        cfg.threading = th
        cfg.depths = _sweep_values(th, "delta_a_mm")
        if not cfg.depths:
            raise ConfigError("threading.delta_a_mm is empty")
        vals = cfg.depths
    else:
        raise ConfigError(f"unknown operation {op!r}")
    if any(not v > 0 for v in vals):
        raise ConfigError("sweep values must be positive")
    return cfg


def _threading_profile(th: dict, delta_a: float) -> ThreadingProfile:
    return buttress_profile(pitch_width=float(th.get("pitch_width_mm", 1.0)),
                            nose_radius=float(th.get("nose_radius_mm", 0.1)),
                            a1=float(th.get("a1_mm", 0.1)), delta_a=delta_a,
                            flank_angles_deg=tuple(th.get("flank_angles_deg", (3.0, 30.0))))


def _points(cfg: RunConfig):
    """Yield ``(feed, depth, region_builder, f_max)`` in sweep order."""
    if cfg.operation == "threading":
        tooth = int(cfg.threading.get("tooth", 2)) - 1
        for da in cfg.depths:
            prof = _threading_profile(cfg.threading, da)
            yield prof.feed, prof.infeeds[tooth], (lambda p=prof: build_threading_region(p, tooth)), np.nan
        return
    for a in cfg.depths:
        fmax = max_feed(cfg.tool, a)
        feeds = list(cfg.feeds) + [q * fmax for q in cfg.feed_fractions]
        for f in feeds:
            yield f, a, (lambda f=f, a=a: build_turning_region(cfg.tool, ProcessParams(feed=f, depth=a))), fmax


def run_sweep(cfg: RunConfig) -> list[dict]:
    """Evaluate every (model, feed, depth) point; one dict per CSV row.

    Errors are recorded per row in ``error``; nothing is raised for a
    failing point.
    """
    rows = []
    normal = cfg.tool.rake_normal if cfg.tool is not None else None
    r_eps = cfg.tool.r_eps if cfg.tool is not None else 0.0
    kw = dict(mesh_size=cfg.mesh_size, poisson=cfg.poisson, young_segments=cfg.young_segments, r_eps=r_eps)
    for feed, depth, build, fmax in _points(cfg):
        for model in cfg.models:
            row = {"model": model, "feed_mm": feed, "depth_mm": depth, "a_eff_mm": depth, "iters": 0,
                   "error": "", "f_max_mm": fmax}
            t0 = time.perf_counter()
            try:
                region = build()
                pred = predict_region(region, cfg.material, model, normal, **kw)
                F = pred.F
                if cfg.compliance is not None and cfg.operation == "turning":
                    fod = turning_force_of_depth(cfg.tool, feed, cfg.material, model,
                                                 mesh_size=cfg.mesh_size, poisson=cfg.poisson,
                                                 young_segments=cfg.young_segments)
                    res = compensate_deflection(cfg.compliance, fod, depth)
                    F = res.F
                    row.update(a_eff_mm=res.a_eff, iters=res.iterations)
                    region = build_turning_region(cfg.tool, ProcessParams(feed=feed, depth=res.a_eff))
                row.update(Fx_N=F[0], Fy_N=F[1], Fz_N=F[2], area_mm2=region.area,
                           Ne=pred.force.n_elements)
            except FeedTooLarge as exc:
                row["error"] = f"skipped: {exc}"
            except (CurvedChipError, ValueError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            log.info("%s f=%.4g a=%.4g done in %.3f s%s", model, feed, depth, time.perf_counter() - t0,
                     f" ({row['error']})" if row["error"] else "")
            rows.append(row)
    return rows


def normalized_rows(cfg: RunConfig, rows: list[dict]) -> list[dict]:
    """Forces divided by ``K_uc * A_max`` and feeds by ``f_max``, per depth of cut."""
    out = []
    ref = {}
    for r in rows:
        if r["error"] or not np.isfinite(r["f_max_mm"]):
            continue
        a = r["depth_mm"]
        if a not in ref:
            region = build_turning_region(cfg.tool, ProcessParams(feed=r["f_max_mm"], depth=a))
            ref[a] = normalizing_force(cfg.material, region)
        s = ref[a]
        out.append({"model": r["model"], "depth_mm": a, "feed_ratio": r["feed_mm"] / r["f_max_mm"],
                    "Fx_norm": r["Fx_N"] / s, "Fy_norm": r["Fy_N"] / s, "Fz_norm": r["Fz_N"] / s})
    return out


def render_plots(cfg: RunConfig, rows: list[dict], out: Path) -> list[Path]:
    """Geometry drawings at the largest valid point of each depth plus force-versus-feed curves."""
    written = []
    normal = cfg.tool.rake_normal if cfg.tool is not None else None
    r_eps = cfg.tool.r_eps if cfg.tool is not None else 0.0
    last = {}
    for feed, depth, build, _ in _points(cfg):
        try:
            last[depth] = (feed, build())
        except CurvedChipError:
            pass
    for k, (depth, (feed, region)) in enumerate(sorted(last.items())):
        tag = f"a{depth:g}_f{feed:.4g}".replace(".", "p")
        if "curved" in cfg.models:
            decomp, mesh, fl = decompose(region, "curved", normal, cfg.mesh_size, cfg.poisson,
                                         r_eps=r_eps, keep_streamlines=True)
            for name, canvas in (("mesh", export.region_svg(region, mesh)), ("field", export.quiver_svg(fl)),
                                 ("streamlines", export.streamlines_svg(region, decomp.extra["streamlines"],
                                                                        every=max(1, decomp.n_elements // 400)))):
                p = out / f"{name}_{tag}.svg"
                canvas.save(p)
                written.append(p)
            export.write_field_csv(out / f"field_{tag}.csv", fl)
            export.write_segments_csv(out / f"curved_segments_{tag}.csv", decomp.h, decomp.dA)
        else:
            p = out / f"region_{tag}.svg"
            export.region_svg(region).save(p)
            written.append(p)
        if "young" in cfg.models:
            decomp, _, _ = decompose(region, "young", normal, young_segments=cfg.young_segments)
            y = decomp.extra["young"]
            p = out / f"young_{tag}.svg"
            export.young_svg(region, y).save(p)
            written.append(p)
            export.write_segments_csv(out / f"young_segments_{tag}.csv", y.lengths, y.areas)
    for comp in ("Fx_N", "Fy_N", "Fz_N"):
        for depth in sorted({r["depth_mm"] for r in rows}):
            series = {}
            for m in cfg.models:
                pts = [(r["feed_mm"], r[comp]) for r in rows
                       if r["model"] == m and r["depth_mm"] == depth and not r["error"]]
                if pts:
                    x, y = zip(*pts)
                    series[m] = (list(x), list(y))
            if series:
                xlabel = "infeed increment [mm]" if cfg.operation == "threading" else "feed [mm/rev]"
                dtag = f"{depth:g}".replace(".", "p")
                p = out / f"force_{comp[:2]}_a{dtag}.svg"
                export.force_plot_svg(p, series, xlabel, f"{comp[:2]} [N]")
                written.append(p)
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvedchip",
                                description="Cutting force sweeps with curved, Colwell and Young chip models.")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--model", choices=[*MODELS, "all"], default=None,
                   help="restrict to one model (default: models listed in the config)")
    p.add_argument("--mesh-size", type=float, default=None, help="target mesh edge length in mm")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--normalized", action="store_true", help="also write normalized forces")
    p.add_argument("--plots", action="store_true", help="write SVG drawings and force plots")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, models=args.model, mesh_size=args.mesh_size, out=args.out,
                          normalized=args.normalized or None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return 2
    rows = run_sweep(cfg)
    export.write_rows(out / "forces.csv", export.CSV_COLUMNS, rows)
    if cfg.normalized:
        if cfg.operation != "turning":
            log.warning("normalized output is only defined for turning sweeps")
        else:
            export.write_rows(out / "forces_normalized.csv",
                              ("model", "depth_mm", "feed_ratio", "Fx_norm", "Fy_norm", "Fz_norm"),
                              normalized_rows(cfg, rows))
    if args.plots:
        render_plots(cfg, rows, out)
    ok = sum(1 for r in rows if not r["error"])
    print(f"{ok}/{len(rows)} rows computed -> {out / 'forces.csv'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
