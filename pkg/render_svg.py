"""SVG rendering of networks: cities as dots, edges as line segments.

The viewBox is the window itself, with y flipped so north is up. Numbers
are printed with a fixed number of decimals so output is byte-identical
for identical inputs.
"""

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from network import Network, VertexKind

SVG_NS = "http://www.w3.org/2000/svg"


@dataclass(frozen=True)
class RenderStyle:
    """Drawing options, in window units unless noted."""
    pixel_size: int = 800
    dot_radius: float = 0.12
    stroke_width: float = 0.04
    edge_color: str = "#1f3a5f"
    city_color: str = "#c0392b"
    junction_color: str = "#7f8c8d"
    show_junctions: bool = False
    decimals: int = 4


def _num(value: float, decimals: int) -> str:
    text = f"{value:.{decimals}f}"
    return "0" if float(text) == 0 else text


def render(net: Network, style: RenderStyle = RenderStyle()) -> str:
    """Render a network to an SVG document string."""
    side = net.config.window.side
    d = style.decimals
    root = ET.Element("svg", {
        "xmlns": SVG_NS,
        "version": "1.1",
        "width": f"{style.pixel_size}px",
        "height": f"{style.pixel_size}px",
        "viewBox": f"0 0 {_num(side, d)} {_num(side, d)}",
    })

    edges = ET.SubElement(root, "g", {
        "id": "edges",
        "stroke": style.edge_color,
        "stroke-width": _num(style.stroke_width, d),
        "stroke-linecap": "round",
    })
    for u, v in net.edges:
        (x1, y1), (x2, y2) = net.positions[u], net.positions[v]
        ET.SubElement(edges, "line", {
            "x1": _num(x1, d), "y1": _num(side - y1, d),
            "x2": _num(x2, d), "y2": _num(side - y2, d),
        })

    cities = ET.SubElement(root, "g", {"id": "cities", "fill": style.city_color})
    for i in range(net.n_cities):
        x, y = net.positions[i]
        ET.SubElement(cities, "circle", {
            "cx": _num(x, d), "cy": _num(side - y, d), "r": _num(style.dot_radius, d),
        })

    if style.show_junctions:
        group = ET.SubElement(root, "g", {"id": "junctions", "fill": style.junction_color})
        for v in range(net.n_cities, net.n_vertices):
            if net.kinds[v] == VertexKind.CITY:
                continue
            x, y = net.positions[v]
            ET.SubElement(group, "circle", {
                "cx": _num(x, d), "cy": _num(side - y, d), "r": _num(style.dot_radius / 2.0, d),
            })

    return ET.tostring(root, encoding="unicode") + "\n"


def write_svg(net: Network, path, style: RenderStyle = RenderStyle()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(net, style), encoding="utf-8")
    return path
