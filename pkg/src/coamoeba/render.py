"""Deterministic figure output: SVG panels, PGM and PNG rasters.

All writers produce byte-identical output for identical inputs: floats are
formatted with fixed precision, element order is fixed, and the PNG encoder
is a minimal self-contained implementation (8-bit grayscale, no ancillary
chunks, fixed zlib settings).
"""

from __future__ import annotations

import base64
import math
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi

LAYERS = ("amoeba", "coamoeba", "spine", "codual", "critical", "extra", "alga")


@dataclass(frozen=True)
class FigureSpec:
    """Which layers to draw and how large the figure is."""

    layers: tuple = ("coamoeba", "codual", "critical")
    palette: str = "default"
    width: int = 540
    height: int = 540

    def __post_init__(self):
        if not self.layers:
            raise DomainError("empty layer set", "a figure needs at least one layer")
        unknown = [l for l in self.layers if l not in LAYERS]
        if unknown:
            raise DomainError("unknown layer", "unknown layers: %s" % ", ".join(unknown))


def _f(x):
    return ("%.4f" % x).rstrip("0").rstrip(".")


def density_to_gray(density, occupancy=None):
    """Map a density raster to uint8 (dark = dense), occupancy floor 64."""
    d = np.asarray(density, float)
    top = d.max()
    if top <= 0:
        img = np.zeros(d.shape, np.uint8)
    else:
        img = np.asarray(np.clip(np.sqrt(d / top), 0, 1) * 191, np.uint8)
    if occupancy is not None:
        img = np.maximum(img, np.where(occupancy, 64, 0).astype(np.uint8))
    return 255 - img


def pgm_bytes(gray):
    """Binary PGM (P5). Rows run top-to-bottom, i.e. axis 1 of the raster
    is flipped so angle (0,0) sits at the lower-left corner."""
    img = np.asarray(gray, np.uint8).T[::-1]
    header = b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0])
    return header + img.tobytes()


def png_bytes(gray):
    """Minimal deterministic grayscale PNG encoder."""
    img = np.asarray(gray, np.uint8).T[::-1]
    height, width = img.shape
    raw = b"".join(b"\x00" + img[r].tobytes() for r in range(height))

    def chunk(tag, payload):
        body = tag + payload
        return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    data = zlib.compress(raw, 9)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", data) + chunk(b"IEND", b""))


class _Svg:
    def __init__(self, width, height):
        self.parts = ['<svg xmlns="http://www.w3.org/2000/svg" '
                      'width="%d" height="%d" viewBox="0 0 %d %d">' % (width, height, width, height)]

    def add(self, s):
        self.parts.append(s)

    def tostring(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _pi_label(value):
    return "%.6fπ" % (value / math.pi)


def _axes(svg, x0, y0, size, span, title):
    svg.add('<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#222" stroke-width="1"/>'
            % (x0, y0, size, size))
    svg.add('<text x="%d" y="%d" font-size="13" fill="#222">%s</text>' % (x0, y0 - 8, title))
    ticks = int(span / (math.pi / 2))
    for k in range(ticks + 1):
        t = k * math.pi / 2
        px = x0 + t / span * size
        py = y0 + size - t / span * size
        svg.add('<line x1="%s" y1="%d" x2="%s" y2="%d" stroke="#222" stroke-width="1"/>'
                % (_f(px), y0 + size, _f(px), y0 + size + 4))
        svg.add('<text x="%s" y="%d" font-size="9" fill="#444" text-anchor="middle">%s</text>'
                % (_f(px), y0 + size + 14, _pi_label(t)))
        svg.add('<line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#222" stroke-width="1"/>'
                % (x0 - 4, _f(py), x0, _f(py)))


def _torus_to_px(t1, t2, x0, y0, size):
    return (x0 + t1 / TWO_PI * size, y0 + size - t2 / TWO_PI * size)


def render(figure: FigureSpec, torus_raster=None, amoeba_raster=None,
           spine_curve=None, coduals=(), critical_values=(),
           extra_masks=(), alga_mask=None) -> str:
    """Compose an SVG document from the requested layers.

    Torus layers (coamoeba, codual, critical, extra) share one panel on
    [0, 2*pi)^2; amoeba and spine share a log-plane panel; alga gets its
    own quotient panel.  Missing inputs for a requested layer are an error.
    """
    layers = figure.layers
    want_torus = any(l in layers for l in ("coamoeba", "codual", "critical", "extra"))
    want_plane = any(l in layers for l in ("amoeba", "spine"))
    want_alga = "alga" in layers
    if "coamoeba" in layers and torus_raster is None:
        raise DomainError("missing layer input", "coamoeba layer needs a torus raster")
    if "amoeba" in layers and amoeba_raster is None:
        raise DomainError("missing layer input", "amoeba layer needs a plane raster")
    if "spine" in layers and spine_curve is None:
        raise DomainError("missing layer input", "spine layer needs a tropical curve")
    if "codual" in layers and coduals is None:
        raise DomainError("missing layer input", "codual layer needs lines")
    if "alga" in layers and alga_mask is None:
        raise DomainError("missing layer input", "alga layer needs a folded mask")

    panels = int(want_torus) + int(want_plane) + int(want_alga)
    margin, size = 46, figure.width - 80
    width = margin + panels * (size + margin)
    height = size + 2 * margin
    svg = _Svg(width, height)
    x0 = margin

    if want_plane:
        _render_plane_panel(svg, x0, margin, size, layers, amoeba_raster, spine_curve)
        x0 += size + margin
    if want_torus:
        _render_torus_panel(svg, x0, margin, size, layers, torus_raster,
                            coduals, critical_values, extra_masks)
        x0 += size + margin
    if want_alga:
        _render_alga_panel(svg, x0, margin, size, alga_mask)
    return svg.tostring()


def _embed_gray(svg, gray, x0, y0, size):
    png = png_bytes(gray)
    b64 = base64.b64encode(png).decode("ascii")
    svg.add('<image x="%d" y="%d" width="%d" height="%d" preserveAspectRatio="none" '
            'image-rendering="pixelated" href="data:image/png;base64,%s"/>' % (x0, y0, size, size, b64))


def _render_torus_panel(svg, x0, y0, size, layers, raster, coduals, critical_values, extra_masks):
    if "coamoeba" in layers and raster is not None:
        _embed_gray(svg, density_to_gray(raster.density, raster.occupancy), x0, y0, size)
    if "extra" in layers:
        for mask in extra_masks:
            ii, jj = np.nonzero(mask)
            n = mask.shape[0]
            cell = size / n
            for i, j in zip(ii.tolist(), jj.tolist()):
                px = x0 + i * cell
                py = y0 + size - (j + 1) * cell
                svg.add('<rect x="%s" y="%s" width="%s" height="%s" fill="#cc7700" fill-opacity="0.55"/>'
                        % (_f(px), _f(py), _f(cell), _f(cell)))
    if "codual" in layers:
        for line in coduals:
            for seg in _line_segments(line):
                (a1, a2), (b1, b2) = seg
                pa = _torus_to_px(a1, a2, x0, y0, size)
                pb = _torus_to_px(b1, b2, x0, y0, size)
                svg.add('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#1144cc" '
                        'stroke-width="1.4" stroke-dasharray="6,4"/>'
                        % (_f(pa[0]), _f(pa[1]), _f(pb[0]), _f(pb[1])))
    if "critical" in layers:
        for v in critical_values:
            t = v.as_tuple() if hasattr(v, "as_tuple") else tuple(v)
            px, py = _torus_to_px(t[0] % TWO_PI, t[1] % TWO_PI, x0, y0, size)
            svg.add('<circle cx="%s" cy="%s" r="1.6" fill="#cc1111"/>' % (_f(px), _f(py)))
    _axes(svg, x0, y0, size, TWO_PI, "argument torus")


def _line_segments(line):
    """Clip the codual line <d, theta> = offset (mod 2 pi) to [0, 2 pi)^2."""
    d1, d2 = line.d
    segs = []
    kmin = int(math.floor((min(0.0, d1 * TWO_PI) + min(0.0, d2 * TWO_PI) - line.offset) / TWO_PI)) - 1
    kmax = int(math.ceil((max(0.0, d1 * TWO_PI) + max(0.0, d2 * TWO_PI) - line.offset) / TWO_PI)) + 1
    for k in range(kmin, kmax + 1):
        c = line.offset + TWO_PI * k
        pts = []
        if d2 != 0:
            for t1 in (0.0, TWO_PI):
                t2 = (c - d1 * t1) / d2
                if 0.0 <= t2 <= TWO_PI:
                    pts.append((t1, t2))
        if d1 != 0:
            for t2 in (0.0, TWO_PI):
                t1 = (c - d2 * t2) / d1
                if 0.0 <= t1 <= TWO_PI:
                    pts.append((t1, t2))
        pts = sorted(set((round(a, 9), round(b, 9)) for a, b in pts))
        if len(pts) >= 2:
            segs.append((pts[0], pts[-1]))
    return segs


def _render_plane_panel(svg, x0, y0, size, layers, amoeba_raster, spine_curve):
    window = amoeba_raster.window if amoeba_raster is not None else 10.0

    def to_px(x, y):
        return (x0 + (x + window) / (2 * window) * size,
                y0 + size - (y + window) / (2 * window) * size)

    if "amoeba" in layers and amoeba_raster is not None:
        _embed_gray(svg, density_to_gray(amoeba_raster.density, amoeba_raster.occupancy),
                    x0, y0, size)
    if "spine" in layers and spine_curve is not None:
        for e in spine_curve.edges:
            tail = spine_curve.vertices[e.tail].position
            if e.kind == "segment":
                head = spine_curve.vertices[e.head].position
            else:
                norm = math.hypot(*e.direction)
                head = (tail[0] + e.direction[0] / norm * 3 * window,
                        tail[1] + e.direction[1] / norm * 3 * window)
            pa, pb = to_px(*tail), to_px(*head)
            svg.add('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#107710" stroke-width="1.8"/>'
                    % (_f(pa[0]), _f(pa[1]), _f(pb[0]), _f(pb[1])))
        for v in spine_curve.vertices:
            px, py = to_px(*v.position)
            svg.add('<circle cx="%s" cy="%s" r="2.4" fill="#107710"/>' % (_f(px), _f(py)))
        for pt, direction, _w in spine_curve.lines:
            norm = math.hypot(*direction)
            pa = to_px(pt[0] - direction[0] / norm * 3 * window, pt[1] - direction[1] / norm * 3 * window)
            pb = to_px(pt[0] + direction[0] / norm * 3 * window, pt[1] + direction[1] / norm * 3 * window)
            svg.add('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#107710" stroke-width="1.8"/>'
                    % (_f(pa[0]), _f(pa[1]), _f(pb[0]), _f(pb[1])))
    svg.add('<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#222" stroke-width="1"/>'
            % (x0, y0, size, size))
    svg.add('<text x="%d" y="%d" font-size="13" fill="#222">log plane (window %.1f)</text>'
            % (x0, y0 - 8, window))


def _render_alga_panel(svg, x0, y0, size, alga_mask):
    n = alga_mask.shape[0]
    gray = np.where(alga_mask, np.uint8(96), np.uint8(255))
    _embed_gray(svg, gray, x0, y0, size)
    _axes(svg, x0, y0, size, math.pi, "quotient torus (angles mod π)")
