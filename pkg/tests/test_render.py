import xml.etree.ElementTree as ET

import numpy as np

from tiltsos.approx import approximate, random_input
from tiltsos.oracles import tilings_of
from tiltsos.render import LOZENGE_COLOURS, heatmap_svg, level_lines_svg, lozenges_svg, trace_svg
from tiltsos.tiling import hexagon_region

SVG = "{http://www.w3.org/2000/svg}"


def parse(text):
    root = ET.fromstring(text)
    assert root.tag == SVG + "svg"
    return root


def test_heatmap_has_one_rect_per_cell():
    a = np.arange(12).reshape(3, 4)
    root = parse(heatmap_svg(a, cell=5, title="t"))
    rects = root.findall(SVG + "rect")
    assert len(rects) == 12
    fills = [r.get("fill") for r in rects]
    assert fills[0] == "#ffffff" and fills[-1] == "#000000"
    assert root.find(SVG + "title").text == "t"


def test_constant_heatmap_is_valid():
    parse(heatmap_svg(np.zeros((2, 2))))


def test_lozenges_use_three_colours():
    t = tilings_of(hexagon_region(2, 2, 2))[4]
    root = parse(lozenges_svg(t))
    polys = root.findall(SVG + "polygon")
    assert len(polys) == 2 * len(t.plaquettes)
    assert {p.get("fill") for p in polys} == set(LOZENGE_COLOURS)


def test_level_lines_and_trace():
    root = parse(level_lines_svg([([[(0, 0), (0, 1), (-1, 1)]], "#000000", 1)], faces=[(0, 0)]))
    assert len(root.findall(SVG + "polyline")) == 1
    parse(level_lines_svg([]))
    inp = random_input("hexagon", np.random.default_rng(0))
    parse(trace_svg(approximate(inp).trace, faces=inp.domain.faces))
