"""Command-line front end.

Orchestrates the pipeline (sample, areas, spine, codual lines, region
decomposition, Harnack classification, deformation runs) and writes JSON
reports, CSV clouds, PGM/PNG rasters, and SVG figures.  All outputs are
deterministic for a fixed configuration and seed: exit code 0 on success,
2 on a domain error (with a JSON error record on stderr), 1 on usage
errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import analysis, measure, render, tropical
from .curves import (GridSpec, critical_points, critical_values_arg, default_window,
                     merge_clouds, sample_curve)
from .errors import DomainError
from .polynomials import newton_polygon, parse_polynomial
from .raster import PlaneRaster, hausdorff_raster_distance
from .rasterize import coamoeba_raster, paint_critical_values, quotient_fold

COMMANDS = ("newton", "sample", "amoeba", "coamoeba", "area", "spine",
            "codual", "extras", "harnack", "deform", "report")


@dataclass
class RunConfig:
    """Run parameters; CLI flags override config-file values."""

    poly: str = ""
    window: float = None
    nx: int = 200
    ntheta: int = 200
    resolution: int = 256
    quad_n: int = 200
    alga_resolution: int = 128
    residual_tol: float = 1e-10
    dedup_tol: float = 1e-7
    line_tol_cells: float = 2.0
    maximal_threshold: float = 0.98
    inconclusive_threshold: float = 0.95
    out: str = "out"
    seed: int = 0
    layers: tuple = ("amoeba", "coamoeba", "spine", "codual", "critical")
    theta: tuple = None
    logpoint: tuple = None
    t_sequence: tuple = ()

    def validate(self):
        if self.nx < 2 or self.ntheta < 2 or self.resolution < 2:
            raise DomainError("invalid config", "grid counts must be >= 2")
        for name in ("residual_tol", "dedup_tol", "line_tol_cells"):
            if getattr(self, name) <= 0:
                raise DomainError("invalid config", "%s must be positive" % name)

    def to_json_dict(self):
        return {
            "poly": self.poly, "window": self.window, "nx": self.nx,
            "ntheta": self.ntheta, "resolution": self.resolution,
            "quad_n": self.quad_n, "alga_resolution": self.alga_resolution,
            "residual_tol": self.residual_tol, "dedup_tol": self.dedup_tol,
            "line_tol_cells": self.line_tol_cells,
            "maximal_threshold": self.maximal_threshold,
            "inconclusive_threshold": self.inconclusive_threshold,
            "seed": self.seed, "layers": list(self.layers),
            "theta": list(self.theta) if self.theta else None,
            "logpoint": list(self.logpoint) if self.logpoint else None,
            "t_sequence": list(self.t_sequence),
        }


def _write_atomic(path, data):
    """Write via temp file + rename so partial artifacts never appear."""
    mode = "wb" if isinstance(data, bytes) else "w"
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _parse_pair(text, flag):
    try:
        a, b = text.split(",")
        return (float(a), float(b))
    except ValueError:
        raise DomainError("invalid flag", "%s expects 'a,b', got %r" % (flag, text))


class _Workspace:
    """Lazy shared pipeline state for one CLI run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.p = parse_polynomial(cfg.poly)
        self.window = cfg.window if cfg.window is not None else default_window(self.p)
        self._cache = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    @property
    def polygon(self):
        return self._get("polygon", lambda: newton_polygon(self.p))

    @property
    def clouds(self):
        def build():
            cz = sample_curve(self.p, GridSpec(self.window, self.cfg.nx, self.cfg.ntheta, "z"))
            cw = sample_curve(self.p, GridSpec(self.window, self.cfg.nx, self.cfg.ntheta, "w"))
            return cz, cw
        return self._get("clouds", build)

    @property
    def cloud(self):
        return self._get("cloud", lambda: merge_clouds(*self.clouds))

    @property
    def critical(self):
        def build():
            cz, cw = self.clouds
            return critical_points(cz, tol=1e-12) + critical_points(cw, tol=1e-12)
        return self._get("critical", build)

    @property
    def critical_values(self):
        return self._get("critical_values", lambda: critical_values_arg(self.critical))

    @property
    def spine(self):
        return self._get("spine", lambda: tropical.spine(self.p, self.cloud))

    @property
    def coduals(self):
        return self._get("coduals", lambda: tropical.codual_lines(self.p, self.spine.dual))

    @property
    def raster(self):
        def build():
            raster = coamoeba_raster(self.p, resolution=self.cfg.resolution, cloud=self.cloud,
                                     nx=self.cfg.nx, ntheta=self.cfg.ntheta, window=self.window)
            paint_critical_values(raster, self.critical)
            raster.mark_critical(self.critical_values)
            return raster
        return self._get("raster", build)

    @property
    def area(self):
        return self._get("area", lambda: measure.area_mult_coamoeba(
            self.p, window=self.window, n=self.cfg.quad_n))

    @property
    def regions(self):
        return self._get("regions", lambda: analysis.region_decomposition(
            self.raster, self.critical_values, self.coduals,
            polynomial=self.p, cloud=self.cloud,
            line_tol_cells=self.cfg.line_tol_cells))

    def fiber_queries(self):
        out = {}
        if self.cfg.theta is not None:
            out["arg_fiber_count"] = measure.arg_fiber_count(
                self.p, self.cfg.theta, self.cloud, critical_values=self.critical_values)
        if self.cfg.logpoint is not None:
            crit_logs = [c.log() for c in self.critical]
            out["log_fiber_count"] = measure.log_fiber_count(
                self.p, self.cfg.logpoint, self.cloud, critical_log=crit_logs)
        return out

    def amoeba_raster(self):
        def build():
            raster = PlaneRaster(self.window, self.cfg.resolution)
            dens = measure.arg_jacobian_density(self.cloud)
            raster.mark_points(self.cloud.x1, self.cloud.x2, weights=dens)
            return raster
        return self._get("amoeba_raster", build)


def _cmd_newton(ws, report):
    report["newton_polygon"] = {
        "vertices": [[v.i, v.j] for v in ws.polygon.vertices],
        "area": ws.polygon.euclidean_area,
    }
    return {}


def _cmd_sample(ws, report):
    import io
    buf = io.StringIO()
    ws.cloud.to_csv(buf)
    report["cloud"] = {"points": len(ws.cloud), "rejected": ws.cloud.rejected}
    return {"cloud.csv": buf.getvalue()}


def _cmd_amoeba(ws, report):
    raster = ws.amoeba_raster()
    gray = render.density_to_gray(raster.density, raster.occupancy)
    report["amoeba"] = {"window": ws.window, "occupied_cells": int(raster.occupancy.sum())}
    return {"amoeba.pgm": render.pgm_bytes(gray), "amoeba.png": render.png_bytes(gray)}


def _cmd_coamoeba(ws, report):
    raster = ws.raster
    gray = render.density_to_gray(raster.density, raster.occupancy)
    report["coamoeba"] = {
        "resolution": raster.resolution,
        "occupied_cells": int(raster.occupancy.sum()),
        "occupied_area": raster.occupied_area(),
        "critical_values": len(ws.critical_values),
    }
    return {"coamoeba.pgm": render.pgm_bytes(gray), "coamoeba.png": render.png_bytes(gray)}


def _cmd_area(ws, report):
    report["area"] = ws.area.to_json_dict()
    return {}


def _cmd_spine(ws, report):
    report["spine"] = ws.spine.to_json_dict()
    return {}


def _cmd_codual(ws, report):
    report["codual_lines"] = [
        {"alpha": [L.alpha.i, L.alpha.j], "beta": [L.beta.i, L.beta.j],
         "direction": list(L.d), "offset": L.offset, "external": L.is_external}
        for L in ws.coduals
    ]
    return {}


def _cmd_extras(ws, report):
    regions = ws.regions
    report["regions"] = regions.to_json_dict()
    if not regions.empty:
        report["theorem_1_1"] = analysis.check_theorem_1_1(regions, ws.polygon)
    return {}


def _cmd_harnack(ws, report):
    hr = analysis.harnack_test(ws.p, n=ws.cfg.quad_n, seed=ws.cfg.seed,
                               cloud=ws.cloud, area_report=ws.area)
    report["harnack"] = hr.to_json_dict()
    return {}


def _cmd_deform(ws, report):
    cfg = ws.cfg
    ts = cfg.t_sequence or (1 / math.e, 1 / (2 * math.e), 1 / (4 * math.e))
    lifting = tropical.extended_lifting(ws.spine.dual, ws.p.support())
    runs = tropical.tropical_limit_run(ws.p, lifting, ts, resolution=cfg.resolution,
                                       nx=cfg.nx, ntheta=cfg.ntheta, window=ws.window)
    report["deformation"] = {
        "t_sequence": [t for t, _, _ in runs],
        "hausdorff_distances": [d for _, _, d in runs if d is not None],
        "cell_width": runs[0][1].cell_width if runs else None,
    }
    artifacts = {}
    for k, (t, raster, _) in enumerate(runs):
        gray = render.density_to_gray(raster.density, raster.occupancy)
        artifacts["deform_%02d.pgm" % k] = render.pgm_bytes(gray)
    return artifacts


def _cmd_report(ws, report):
    artifacts = {}
    artifacts.update(_cmd_sample(ws, report))
    artifacts.update(_cmd_coamoeba(ws, report))
    _cmd_newton(ws, report)
    _cmd_area(ws, report)
    _cmd_spine(ws, report)
    _cmd_codual(ws, report)
    _cmd_extras(ws, report)
    _cmd_harnack(ws, report)
    if not ws.regions.empty and not ws.regions.has_extra_piece \
            and ws.regions.global_quotient_k is not None:
        aa = measure.alga_area(ws.p, ws.cloud, ws.cfg.alga_resolution,
                               critical_values=ws.critical_values)
        report["alga_area"] = aa
        hr_dict = report.get("harnack", {})
        hr = None
        report["corollary_1_3"] = analysis.check_corollary_1_3(
            ws.p, ws.regions, aa, ws.area.area_mult)

    figure = render.FigureSpec(layers=tuple(ws.cfg.layers))
    extra_masks = ()
    alga_mask = quotient_fold(ws.raster) if "alga" in ws.cfg.layers else None
    svg = render.render(figure, torus_raster=ws.raster, amoeba_raster=ws.amoeba_raster(),
                        spine_curve=ws.spine, coduals=ws.coduals,
                        critical_values=ws.critical_values,
                        extra_masks=extra_masks, alga_mask=alga_mask)
    artifacts["figure.svg"] = svg
    return artifacts


_DISPATCH = {
    "newton": _cmd_newton, "sample": _cmd_sample, "amoeba": _cmd_amoeba,
    "coamoeba": _cmd_coamoeba, "area": _cmd_area, "spine": _cmd_spine,
    "codual": _cmd_codual, "extras": _cmd_extras, "harnack": _cmd_harnack,
    "deform": _cmd_deform, "report": _cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(_json_text({"error": "usage", "message": message}))
        raise SystemExit(1)


def build_parser():
    parser = _Parser(prog="coamoeba",
                     description="amoebas, coamoebas, and tropical spines of plane curves")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--poly", help="polynomial text, e.g. '1+z+w'")
    parser.add_argument("--config", help="JSON config file (flags override)")
    parser.add_argument("--out", default=None, help="output directory (default ./out)")
    parser.add_argument("--resolution", type=int, default=None, help="torus raster resolution")
    parser.add_argument("--window", type=float, default=None, help="log window half-width")
    parser.add_argument("--nx", type=int, default=None, help="fiber grid count (log radius)")
    parser.add_argument("--ntheta", type=int, default=None, help="fiber grid count (angle)")
    parser.add_argument("--quad-n", type=int, default=None, help="area quadrature base resolution")
    parser.add_argument("--theta", default=None, help="arg fiber query 'a,b'")
    parser.add_argument("--logpoint", default=None, help="log fiber query 'x,y'")
    parser.add_argument("--t-sequence", default=None, help="deformation t values 't1,t2,...'")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    parser.add_argument("--layers", default=None, help="figure layers, comma separated")
    return parser


def make_config(args):
    cfg = RunConfig()
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        for key, val in data.items():
            if not hasattr(cfg, key):
                raise DomainError("invalid config", "unknown config key %r" % key)
            setattr(cfg, key, tuple(val) if isinstance(val, list) else val)
    for key in ("poly", "out", "resolution", "window", "nx", "ntheta", "seed"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.quad_n is not None:
        cfg.quad_n = args.quad_n
    if args.theta is not None:
        cfg.theta = _parse_pair(args.theta, "--theta")
    if args.logpoint is not None:
        cfg.logpoint = _parse_pair(args.logpoint, "--logpoint")
    if args.t_sequence is not None:
        try:
            cfg.t_sequence = tuple(float(t) for t in args.t_sequence.split(","))
        except ValueError:
            raise DomainError("invalid flag", "--t-sequence expects floats")
    if args.layers is not None:
        cfg.layers = tuple(s.strip() for s in args.layers.split(",") if s.strip())
    if not cfg.poly:
        sys.stderr.write(_json_text({"error": "usage", "message": "--poly is required"}))
        raise SystemExit(1)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        np.random.seed(cfg.seed)
        ws = _Workspace(cfg)
        report = {"command": args.command, "config": cfg.to_json_dict()}
        artifacts = _DISPATCH[args.command](ws, report)
        report.update(ws.fiber_queries())
        outdir = cfg.out
        _write_atomic(os.path.join(outdir, "report.json"), _json_text(report))
        for name, data in sorted(artifacts.items()):
            _write_atomic(os.path.join(outdir, name), data)
        sys.stdout.write(_json_text(report))
        return 0
    except DomainError as exc:
        sys.stderr.write(_json_text({"error": exc.code, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
