"""Command-line front end.

Every subcommand takes ``--seed``, ``--config`` (INI file, one section per
subcommand) and ``--out-dir``; the remaining parameters can come from the
config file or from ``--name value`` flags, flags winning.  All files written
carry the resolved parameters, the seed and the package version, and contain
nothing time-dependent, so a rerun with the same seed is byte-identical.

Exit codes: 0 success, 1 failed verification, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# parameters

COMMON = {"seed": 0, "out_dir": "."}

PARAMS = {
    "simulate": {
        "N": (64, "torus side"),
        "theta": ("0,0", "slope theta1,theta2 in [0,1); drops are floor(theta*N)"),
        "beta": ("1.0", "inverse temperature, or a comma list for one run per value"),
        "lam": (0.0, "pinning strength lambda (> 0 needs N <= 3)"),
        "alpha": (-1.0, "overlap reward alpha for the potential; negative means alpha = beta"),
        "potential": ("V1", "potential kind: V1, V2 or general"),
        "m0": (1000, "component threshold M0 for V2/general"),
        "sweeps": (100, "burn-in sweeps (N^2 site updates each) before the first sample"),
        "samples": (1, "number of snapshots per run"),
        "thin": (10, "sweeps between snapshots"),
        "start": ("zero", "initial field: zero (all heights 0) or flat (the staircase)"),
        "backend": ("auto", "kernel backend: auto, cython or python"),
        "workers": (1, "parallel runs (one per beta value)"),
        "heatmap": (True, "write an SVG heatmap of the last snapshot of each run"),
        "levels": (False, "write an SVG of the level lines of the last snapshot"),
        "cell": (6, "SVG cell size in pixels"),
    },
    "sample-tiling": {
        "region": ("hexagon", "hexagon or torus"),
        "a": (3, "hexagon side a"),
        "b": (3, "hexagon side b"),
        "c": (3, "hexagon side c"),
        "N": (12, "torus side"),
        "theta": ("1/3,1/3", "torus slope"),
        "steps": (20000, "flip attempts before the first sample"),
        "samples": (10, "number of tilings written"),
        "thin": (2000, "flip attempts between samples"),
        "backend": ("auto", "kernel backend for torus flips"),
        "render": (True, "write an SVG of the last tiling"),
    },
    "exact": {
        "tasks": ("count,det,pattern,microcanonical,residuals",
                  "comma list of count, det, pattern, microcanonical, residuals"),
        "hexagons": ("1,1,1;2,2,2;2,2,3;2,3,3;3,3,3", "semicolon list of hexagon sides a,b,c"),
        "det_sizes": ("2,3,4,5,6", "torus sizes for the Fourier/LU determinant table"),
        "det_draws": (4, "random (weights, phases) draws per size"),
        "patterns": (20, "random patterns for the pattern table"),
        "pattern_hexagon": ("2,2,2", "hexagon used for pattern probabilities"),
        "micro": ("3:1/3,1/3,1/3;4:1/2,1/4,1/4", "semicolon list of N:p_a,p_b,p_c (N*p_b, N*p_c integers)"),
        "cap": (200000, "enumeration cap"),
    },
    "approx": {
        "family": ("hexagon", "hexagon, rectangle or slit"),
        "count": (20, "random inputs"),
        "epsilon": (0.1, "algorithm parameter epsilon"),
        "figure": (False, "also run the hand-encoded excursion example"),
        "render": (True, "write an SVG trace of the first input"),
    },
    "stats": {
        "input": ("", "NDJSON sample file from simulate or sample-tiling; empty for synthetic GFF"),
        "N": (64, "side of the synthetic GFF"),
        "gff_samples": (100, "synthetic GFF samples"),
        "radii": ("", "comma list of radii; empty for 1..N/2"),
        "fit_min": (4, "smallest radius in the log fit"),
        "fit_max": (0, "largest radius in the log fit; 0 means N/4"),
        "n_boot": (1000, "bootstrap resamples"),
    },
    "verify": {
        "suite": ("all", "all, or a comma list of modules"),
    },
    "render": {
        "input": ("", "NDJSON sample file"),
        "index": (-1, "which sample record (negative counts from the end)"),
        "kind": ("heatmap", "heatmap, levels or lozenges"),
        "cell": (6, "SVG cell size in pixels"),
    },
}

HELP = {
    "simulate": "Glauber dynamics for the SOS field on the tilted torus",
    "sample-tiling": "uniform lozenge tilings by the flip chain",
    "exact": "Kasteleyn determinants, counts, pattern probabilities and ensemble residuals",
    "approx": "run the tiling-approximation algorithm on random inputs",
    "stats": "height-variance profile and log fit",
    "verify": "run the property suites",
    "render": "SVG renders of a stored sample",
}


def _convert(name, default, raw):
    if isinstance(raw, type(default)) and not isinstance(raw, str):
        return raw
    s = str(raw).strip()
    try:
        if isinstance(default, bool):
            low = s.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(s)
        if isinstance(default, int):
            return int(s)
        if isinstance(default, float):
            return float(s)
    except ValueError:
        raise UsageError(f"{name}: cannot read {raw!r} as {type(default).__name__}") from None
    return s


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file section, then explicit flags."""
    spec = PARAMS[command]
    cfg = {k: v for k, (v, _) in spec.items()}
    cfg.update(COMMON)
    if args.config:
        if not os.path.exists(args.config):
            raise UsageError(f"config file {args.config} does not exist")
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read(args.config)
        except configparser.Error as exc:
            raise UsageError(f"config file {args.config}: {exc}") from None
        for section in ("common", command):
            if not parser.has_section(section):
                continue
            for k, v in parser.items(section):
                key = k.replace("-", "_")
                if key not in cfg:
                    if section == "common":
                        continue        # shared files may hold other commands' keys
                    known = ", ".join(sorted(cfg))
                    raise UsageError(f"[{section}] {k}: unknown parameter (known: {known})")
                cfg[key] = v
    for key in cfg:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    defaults = {k: v for k, (v, _) in spec.items()}
    defaults.update(COMMON)
    return {k: _convert(k, defaults[k], v) for k, v in cfg.items()}


def _floats(s, name):
    try:
        return [float(Fraction(x.strip())) for x in str(s).split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{name}: expected a comma list of numbers, got {s!r}") from None


def _ints(s, name):
    try:
        return [int(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected a comma list of integers, got {s!r}") from None


def _require(cond, msg):
    if not cond:
        raise UsageError(msg)


def _theta(cfg, N):
    try:
        th = tuple(Fraction(x.strip()) for x in str(cfg["theta"]).split(",") if x.strip())
    except (ValueError, ZeroDivisionError):
        th = ()
    _require(len(th) == 2 and all(0 <= t < 1 for t in th),
             f"theta must be two numbers in [0,1), got {cfg['theta']!r}")
    return th, tuple(math.floor(t * N) for t in th)


# --------------------------------------------------------------------------
# output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


class Writer:
    """The single place files are written; each one embeds the run metadata."""

    def __init__(self, out_dir: str, command: str, cfg: dict):
        self.out_dir = out_dir
        conf = {k: v for k, v in cfg.items() if k != "out_dir"}
        self.meta = {"command": command, "config": conf, "seed": cfg["seed"], "version": __version__}
        self.written: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, name):
        return os.path.join(self.out_dir, name)

    def _put(self, name, text):
        with open(self._path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(name)

    def ndjson(self, name, records):
        lines = [_dumps({"type": "meta", **self.meta})]
        lines += [_dumps(r) for r in records]
        self._put(name, "\n".join(lines) + "\n")

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf)     # RFC 4180 quoting, CRLF rows
        w.writerow(list(header) + ["seed", "version", "config"])
        conf = _dumps(self.meta["config"])
        for r in rows:
            w.writerow([_fmt(v) for v in r] + [self.meta["seed"], __version__, conf])
        self._put(name, buf.getvalue())

    def json(self, name, obj):
        self._put(name, json.dumps(_jsonable({"meta": self.meta, **obj}), sort_keys=True, indent=2) + "\n")

    def svg(self, name, text):
        meta = _dumps(self.meta).replace("]]>", "]]&gt;")
        head, rest = text.split("\n", 1)
        self._put(name, f'<?xml version="1.0" encoding="UTF-8"?>\n{head}\n'
                        f"<metadata><![CDATA[{meta}]]></metadata>\n{rest}")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return _dumps(v)
    return v


def read_ndjson(path):
    if not path:
        raise UsageError("input: an NDJSON sample file is required")
    if not os.path.exists(path):
        raise UsageError(f"input file {path} does not exist")
    meta, samples = None, []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                raise UsageError(f"{path}:{n}: not a JSON record") from None
            if rec.get("type") == "meta":
                meta = rec
            elif rec.get("type") == "sample":
                samples.append(rec)
    if not samples:
        raise UsageError(f"{path}: no sample records")
    return meta, samples


# --------------------------------------------------------------------------
# simulate

def _simulate_run(task):
    """One beta value: burn-in then thinned snapshots.  Runs in a worker."""
    from .energy import PotentialSpec
    from .lattice import TorusGeometry
    from .sos import SOSField, SOSParams, glauber_run, glauber_step

    N, theta, beta, cfg, seed_seq = task
    rng = np.random.default_rng(seed_seq)
    g = TorusGeometry(N, theta)
    h = SOSField.flat(g) if cfg["start"] == "flat" else SOSField(g, np.zeros((N, N)), root=False)
    alpha = None if cfg["alpha"] < 0 else cfg["alpha"]
    params = SOSParams(beta, cfg["lam"], PotentialSpec(cfg["potential"], cfg["m0"]), alpha)
    backend = None if cfg["backend"] == "auto" else cfg["backend"]

    def advance(field, sweeps):
        if params.lam == 0:
            return glauber_run(field, params, sweeps * N * N, rng, backend)
        for _ in range(sweeps * N * N):
            site = tuple(int(x) for x in rng.integers(N, size=2))
            field = glauber_step(field, params, site, rng)
        return field

    out = []
    h = advance(h, cfg["sweeps"])
    done = cfg["sweeps"]
    for k in range(cfg["samples"]):
        if k:
            h = advance(h, cfg["thin"])
            done += cfg["thin"]
        out.append((beta, k, done, h.heights.copy()))
    return g.drops, out


def cmd_simulate(cfg, out: Writer):
    from .sos import SOSField, surface_area
    from .lattice import TorusGeometry

    N = cfg["N"]
    _require(N >= 2, f"N must be at least 2, got {N}")
    theta, drops = _theta(cfg, N)
    betas = _floats(cfg["beta"], "beta")
    _require(betas and all(b > 0 for b in betas), "beta values must be positive")
    _require(cfg["lam"] >= 0, "lam must be nonnegative")
    _require(cfg["lam"] == 0 or N <= 3,
             "lam > 0 recomputes the potential by enumeration at every update; use N <= 3 or lam = 0")
    _require(cfg["potential"] in ("V1", "V2", "general"), "potential must be V1, V2 or general")
    _require(cfg["m0"] >= 1, "m0 must be at least 1")
    _require(cfg["sweeps"] >= 0 and cfg["samples"] >= 1 and cfg["thin"] >= 1,
             "need sweeps >= 0, samples >= 1, thin >= 1")
    _require(cfg["start"] in ("zero", "flat"), "start must be zero or flat")
    _require(cfg["backend"] in ("auto", "cython", "python"), "backend must be auto, cython or python")
    _require(cfg["workers"] >= 1, "workers must be at least 1")
    if cfg["backend"] == "cython":
        from . import kernels
        _require(kernels.BACKEND == "cython", "the compiled kernel is not built; use backend=python")

    seqs = np.random.SeedSequence(cfg["seed"]).spawn(len(betas))
    tasks = [(N, theta, b, cfg, s) for b, s in zip(betas, seqs)]
    if cfg["workers"] > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_simulate_run, tasks))
    else:
        results = [_simulate_run(t) for t in tasks]

    g = TorusGeometry(N, theta)
    records, rows = [], []
    for (_, snaps), beta in zip(results, betas):
        for b, k, sweep, h in snaps:
            f = SOSField(g, h, root=False)
            c = h[N // 2, N // 2] - h[0, 0]
            records.append({"type": "sample", "beta": b, "index": k, "sweep": sweep, "N": N,
                            "drops": list(g.drops), "heights": h.tolist()})
            rows.append([b, k, sweep, surface_area(f), float(h.mean()), float(h.var()), int(c)])
    out.ndjson("samples.ndjson", records)
    out.csv("stats.csv", ["beta", "index", "sweep", "area", "mean", "var", "center_minus_origin"], rows)
    from .render import heatmap_svg
    for (_, snaps), beta in zip(results, betas):
        h = snaps[-1][3]
        tag = f"beta{beta:g}"
        if cfg["heatmap"]:
            out.svg(f"heatmap_{tag}.svg", heatmap_svg(h, cfg["cell"], f"beta={beta:g}"))
        if cfg["levels"]:
            out.svg(f"levels_{tag}.svg", _levels_svg(h, g.drops, cfg["cell"]))
    return EXIT_OK


def _levels_svg(h, drops, cell):
    """Every unit edge across which the height changes, once per level crossed."""
    from .render import level_lines_svg
    from .stats import shifted
    h = np.asarray(h)
    N = h.shape[0]
    d1 = shifted(h, drops, 1, 0) - h
    d2 = shifted(h, drops, 0, 1) - h
    segs = []
    for i in range(N):
        for j in range(N):
            if d1[i, j]:
                segs.append([(i + 1, j), (i + 1, j + 1)])
            if d2[i, j]:
                segs.append([(i, j + 1), (i + 1, j + 1)])
    return level_lines_svg([(segs, "#202020", 1)], cell, [])


# --------------------------------------------------------------------------
# sample-tiling

def cmd_sample_tiling(cfg, out: Writer):
    rng = np.random.default_rng(cfg["seed"])
    _require(cfg["steps"] >= 0 and cfg["samples"] >= 1 and cfg["thin"] >= 1,
             "need steps >= 0, samples >= 1, thin >= 1")
    records, tilings = [], []
    if cfg["region"] == "hexagon":
        from .dynamics import flip_mcmc
        from .tiling import LozengeTiling, extremal_tilings, hexagon_region
        a, b, c = cfg["a"], cfg["b"], cfg["c"]
        _require(min(a, b, c) >= 1, "hexagon sides must be positive")
        dom = hexagon_region(a, b, c)
        top, _ = extremal_tilings(dom)
        t = LozengeTiling(dom, top.heights)
        region = {"kind": "hexagon", "a": a, "b": b, "c": c}
        t = flip_mcmc(t, cfg["steps"], rng)
        for k in range(cfg["samples"]):
            if k:
                t = flip_mcmc(t, cfg["thin"], rng)
            tilings.append(t)
            records.append({"type": "sample", "index": k, "region": region,
                            "faces": [list(f) for f in dom.faces], "heights": list(t.heights)})
    elif cfg["region"] == "torus":
        from .dynamics import flip_mcmc_torus
        from .lattice import TorusGeometry
        from .sos import SOSField
        N = cfg["N"]
        _require(N >= 2, "N must be at least 2")
        theta, drops = _theta(cfg, N)
        backend = None if cfg["backend"] == "auto" else cfg["backend"]
        g = TorusGeometry(N, theta)
        h = flip_mcmc_torus(SOSField.flat(g), cfg["steps"], rng, backend)
        region = {"kind": "torus", "N": N, "theta": [str(t) for t in theta]}
        for k in range(cfg["samples"]):
            if k:
                h = flip_mcmc_torus(h, cfg["thin"], rng, backend)
            tilings.append((h.heights.copy(), g.drops))
            records.append({"type": "sample", "index": k, "region": region, "N": N,
                            "drops": list(g.drops), "heights": h.heights.tolist()})
    else:
        raise UsageError(f"region must be hexagon or torus, got {cfg['region']!r}")
    from .stats import edge_densities
    rows = []
    for k, t in enumerate(tilings):
        pa, pb, pc = edge_densities([t])
        rows.append([k, pa, pb, pc])
    pa, pb, pc = edge_densities(tilings)
    rows.append(["pooled", pa, pb, pc])
    out.ndjson("tilings.ndjson", records)
    out.csv("densities.csv", ["sample", "p_a", "p_b", "p_c"], rows)
    if cfg["render"]:
        from .render import lozenges_svg
        out.svg("tiling.svg", lozenges_svg(_surface_of(records[-1])))
    return EXIT_OK


def _surface_of(rec):
    """Rebuild a surface from a stored sample record."""
    from .lattice import TorusGeometry
    from .sos import SOSField
    from .tiling import Surface, hexagon_region
    region = rec.get("region", {})
    if region.get("kind") == "hexagon":
        dom = hexagon_region(region["a"], region["b"], region["c"])
        return Surface(dom, tuple(rec["heights"]))
    N, drops = rec["N"], rec["drops"]
    g = TorusGeometry(N, tuple(Fraction(d, N) for d in drops))
    return SOSField(g, rec["heights"], root=False).to_surface()


# --------------------------------------------------------------------------
# exact

def _hexagons(s):
    out = []
    for part in str(s).split(";"):
        if part.strip():
            sides = _ints(part, "hexagons")
            _require(len(sides) == 3 and min(sides) >= 1, f"hexagons: bad entry {part!r}")
            out.append(tuple(sides))
    return out


def cmd_exact(cfg, out: Writer):
    from .tiling import CapExceededError
    tasks = [t.strip() for t in cfg["tasks"].split(",") if t.strip()]
    known = {"count", "det", "pattern", "microcanonical", "residuals"}
    bad = [t for t in tasks if t not in known]
    _require(not bad, f"unknown task(s) {bad}; choose from {sorted(known)}")
    if "microcanonical" in tasks:
        _micro_entries(cfg["micro"])
    _hexagons(cfg["hexagons"])
    rng = np.random.default_rng(cfg["seed"])
    ok = True
    try:
        if "count" in tasks:
            ok &= _exact_counts(cfg, out)
        if "det" in tasks:
            ok &= _exact_dets(cfg, out, rng)
        if "pattern" in tasks:
            ok &= _exact_patterns(cfg, out, rng)
        if "microcanonical" in tasks:
            ok &= _exact_micro(cfg, out)
        if "residuals" in tasks:
            ok &= _exact_residuals(cfg, out)
    except CapExceededError as exc:
        raise UsageError(f"enumeration cap exceeded ({exc}); raise cap or shrink the regions") from None
    return EXIT_OK if ok else EXIT_FAIL


def _exact_counts(cfg, out):
    from .kasteleyn import count_region
    from .tiling import enumerate_tilings, hexagon_region
    rows, ok = [], True
    for a, b, c in _hexagons(cfg["hexagons"]):
        dom = hexagon_region(a, b, c)
        k = count_region(dom)
        e = len(enumerate_tilings(dom, cap=cfg["cap"]))
        ok &= k == e
        rows.append([f"hexagon({a},{b},{c})", a * b + b * c + c * a, k, e, k == e])
    out.csv("counts.csv", ["region", "lozenges", "kasteleyn", "enumeration", "match"], rows)
    return ok


def _exact_dets(cfg, out, rng):
    from .kasteleyn import KasteleynMatrix, det_dense, det_torus
    rows, ok = [], True
    for N in _ints(cfg["det_sizes"], "det_sizes"):
        _require(N >= 1, "det_sizes must be positive")
        for _ in range(cfg["det_draws"]):
            w = tuple(float(x) for x in rng.uniform(0.3, 2.0, size=3))
            ph = tuple(float(x) for x in rng.uniform(0, 2 * math.pi, size=2))
            K = KasteleynMatrix(N, w, ph)
            f, d = det_torus(K), det_dense(K.dense())
            rel = abs(f - d) / max(abs(d), 1e-300)
            ok &= rel < 1e-10
            rows.append([N, list(w), list(ph), f.real, f.imag, d.real, d.imag, rel])
    out.csv("determinants.csv", ["N", "weights", "phases", "fourier_re", "fourier_im",
                                 "lu_re", "lu_im", "rel_err"], rows)
    return ok


def _exact_patterns(cfg, out, rng):
    from .kasteleyn import RegionKasteleyn, pattern_probability
    from .stats import lozenge_set, pattern_frequency
    from .tiling import enumerate_tilings, hexagon_region
    sides = _ints(cfg["pattern_hexagon"], "pattern_hexagon")
    _require(len(sides) == 3 and min(sides) >= 1, "pattern_hexagon must be three positive sides")
    dom = hexagon_region(*sides)
    tilings = enumerate_tilings(dom, cap=cfg["cap"])
    K = RegionKasteleyn.from_domain(dom)
    pool = sorted(set().union(*(lozenge_set(t) for t in tilings)))
    patterns = [[]]
    while len(patterns) < cfg["patterns"] + 1:
        k = int(rng.integers(1, 4))
        idx = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
        pat = [pool[i] for i in sorted(idx)]
        tris = [t for e in pat for t in e]
        if len(set(tris)) == len(tris):
            patterns.append(pat)
    rows, ok = [], True
    for pat in patterns:
        p = pattern_probability(K, pat).real
        freq = pattern_frequency(tilings, pat)[0] if pat else 1.0
        err = abs(p - freq)
        ok &= err < 1e-10
        rows.append([len(pat), [[list(b), list(w)] for b, w in pat], p, freq, err])
    out.csv("patterns.csv", ["size", "pattern", "minor", "enumeration", "abs_err"], rows)
    return ok


def _micro_entries(s):
    out = []
    for part in str(s).split(";"):
        if not part.strip():
            continue
        try:
            n, ps = part.split(":")
            N = int(n)
        except ValueError:
            raise UsageError(f"micro: expected N:p_a,p_b,p_c, got {part!r}") from None
        p = [Fraction(x.strip()) for x in ps.split(",")] if ps.strip() else []
        _require(len(p) == 3 and min(p) > 0 and sum(p) == 1,
                 f"micro {part!r}: p must be three positive fractions summing to 1")
        _require((N * p[1]).denominator == 1 and (N * p[2]).denominator == 1,
                 f"micro {part!r}: N*p_b and N*p_c must be integers")
        out.append((N, p))
    return out


def _exact_micro(cfg, out):
    from .kasteleyn import TriangleWeights, microcanonical_extract, sector_monomial, sector_table
    rows, ok = [], True
    for N, pf in _micro_entries(cfg["micro"]):
        p = [float(x) for x in pf]
        w = TriangleWeights(tuple(p)).w
        kb, kc = int(N * pf[1]), int(N * pf[2])
        exact = microcanonical_extract(N, p, "exact")
        roots = microcanonical_extract(N, p, "roots")
        direct = rel = float("nan")
        if N <= 3:
            Z = sector_table(N).get((kb, kc), 0)
            direct = sector_monomial(N, kb, kc, w) * Z
            rel = abs(exact - direct) / max(direct, 1e-300)
            ok &= rel < 1e-8
        rows.append([N, [str(x) for x in pf], kb, kc, exact, roots, direct, rel])
    out.csv("microcanonical.csv", ["N", "p", "k", "l", "exact_grid", "roots_of_unity",
                                   "enumerated", "rel_err"], rows)
    return ok


def _exact_residuals(cfg, out):
    from .energy import PotentialSpec
    from .ensembles import TorusModel, expansion_integral, grimmett_check, three_measure_check
    from .lattice import TorusGeometry
    g = TorusGeometry(2, (0.5, 0.5))
    rows, ok = [], True
    model = TorusModel(g, 2.0, 2.0, 0.0, PotentialSpec("V1"), window=2)
    worst_g = worst_i = 0.0
    for h in model.surfaces:
        d = model.data(h)
        worst_g = max(worst_g, grimmett_check(d.gbar(), beta=model.alpha))
        closed = d.integral_mu(model.alpha)
        quad, _ = expansion_integral(np.zeros(len(d.tilings)), d.gbar(), model.alpha, "quadrature")
        worst_i = max(worst_i, abs(closed - quad))
    rows.append(["grimmett", "mu", 2.0, 2.0, 0.0, worst_g])
    rows.append(["integral_mu", "closed_vs_quadrature", 2.0, 2.0, 0.0, worst_i])
    ok &= worst_g < 1e-6 and worst_i < 1e-6
    for lam in (0.0, 0.5):
        m = TorusModel(g, 2.0, 2.0, lam, PotentialSpec("V1"), window=2)
        res, _ = three_measure_check(m)
        ok &= res < 1e-6
        rows.append(["three_measure", "max_deviation", 2.0, 2.0, lam, res])
    out.csv("residuals.csv", ["check", "quantity", "alpha", "beta", "lam", "residual"], rows)
    return ok


# --------------------------------------------------------------------------
# approx

def cmd_approx(cfg, out: Writer):
    from .approx import (EXCEPTIONAL, EXCESS_AREA, GOOD_OVERLAP, FIGURE_ENDPOINTS, approximate,
                         corner_to_picture, figure_path, greedy_level_line, random_input,
                         satisfies_boundary)
    _require(cfg["family"] in ("hexagon", "rectangle", "slit"), "family must be hexagon, rectangle or slit")
    _require(0 < cfg["epsilon"] < 1, "epsilon must lie in (0, 1)")
    _require(cfg["count"] >= 1, "count must be at least 1")
    rng = np.random.default_rng(cfg["seed"])
    records, first = [], None
    tally = {EXCESS_AREA: 0, GOOD_OVERLAP: 0, EXCEPTIONAL: 0}
    fails = {"monotone": 0, "boundary": 0, "bound": 0}
    for k in range(cfg["count"]):
        inp = random_input(cfg["family"], rng, cfg["epsilon"])
        res = approximate(inp)
        mono, bdry = bool(res.monotone), bool(satisfies_boundary(res, inp))
        grow = len(res.S_prime) - len(inp.S)
        bound = grow <= cfg["epsilon"] ** (2 / 3) * res.s
        fails["monotone"] += not mono
        fails["boundary"] += not bdry
        fails["bound"] += not bound
        tally[res.classification] += 1
        records.append({"type": "result", "index": k, "classification": res.classification,
                        "s": res.s, "excess": res.excess, "gain": res.gain, "added_faces": grow,
                        "monotone": mono, "boundary": bdry, "bound": bool(bound),
                        "trace": res.trace.to_record() if res.trace else None})
        if first is None:
            first = (inp, res)
    rows = [[cfg["family"], cfg["count"], tally[EXCESS_AREA], tally[GOOD_OVERLAP], tally[EXCEPTIONAL],
             fails["monotone"], fails["boundary"], fails["bound"]]]
    out.ndjson("approx.ndjson", records)
    out.csv("summary.csv", ["family", "inputs", "excess_area", "good_overlap", "exceptional",
                            "monotone_failures", "boundary_failures", "bound_failures"], rows)
    ok = not any(fails.values())
    if cfg["figure"]:
        _, exc = greedy_level_line(figure_path())
        got = [(corner_to_picture(e.a), corner_to_picture(e.b)) for e in exc]
        frows = []
        for i in range(max(len(got), len(FIGURE_ENDPOINTS))):
            g = got[i] if i < len(got) else None
            w = FIGURE_ENDPOINTS[i] if i < len(FIGURE_ENDPOINTS) else None
            frows.append([i + 1, list(g[0]) if g else "", list(g[1]) if g else "",
                          list(w[0]) if w else "", list(w[1]) if w else "",
                          g is not None and w is not None and tuple(map(tuple, g)) == tuple(map(tuple, w))])
        out.csv("figure_excursions.csv", ["excursion", "a", "b", "drawn_a", "drawn_b", "match"], frows)
    if cfg["render"] and first and first[1].trace is not None:
        from .render import trace_svg
        out.svg("trace.svg", trace_svg(first[1].trace, sorted(first[0].S)))
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# stats

def cmd_stats(cfg, out: Writer):
    from .stats import InsufficientSamplesError, SampleBatch, synthetic_gff, variance_profile
    rng = np.random.default_rng(cfg["seed"])
    if cfg["input"]:
        meta, samples = read_ndjson(cfg["input"])
        if any("drops" not in s for s in samples):
            raise UsageError("stats needs torus samples (from simulate or sample-tiling region=torus)")
        keys = sorted({s.get("beta") for s in samples}, key=lambda x: (x is None, x))
        groups = {k: [s for s in samples if s.get("beta") == k] for k in keys}
        source = {"input": os.path.basename(cfg["input"]),
                  "input_meta": meta and {k: meta[k] for k in ("config", "seed", "version") if k in meta}}
    else:
        _require(cfg["N"] >= 8, "N must be at least 8")
        _require(cfg["gff_samples"] >= 2, "gff_samples must be at least 2")
        f = synthetic_gff(cfg["N"], cfg["gff_samples"], rng)
        groups = {None: [{"heights": x, "drops": [0, 0]} for x in f]}
        source = {"input": "synthetic-gff"}
    rows, fits = [], []
    for key, recs in groups.items():
        fields = np.array([np.asarray(r["heights"], dtype=float) for r in recs])
        N = fields.shape[1]
        batch = SampleBatch(fields, tuple(recs[0]["drops"]), {"group": key})
        radii = _ints(cfg["radii"], "radii") if cfg["radii"] else list(range(1, N // 2 + 1))
        hi = cfg["fit_max"] or N // 4
        try:
            prof = variance_profile(batch, radii, rng, cfg["n_boot"], (cfg["fit_min"], hi))
        except InsufficientSamplesError as exc:
            raise UsageError(str(exc)) from None
        for r in prof.rows():
            rows.append([key if key is not None else "", r["r"], r["var"], r["ci_lo"], r["ci_hi"], r["se"]])
        fits.append({"group": key, "slope": prof.c, "intercept": prof.intercept, "r2": prof.r2,
                     "fit_range": [cfg["fit_min"], hi], "samples": len(recs)})
    out.csv("variance.csv", ["group", "r", "variance", "ci_lo", "ci_hi", "se"], rows)
    out.json("fit.json", {"source": source, "fits": fits})
    return EXIT_OK


# --------------------------------------------------------------------------
# render

def cmd_render(cfg, out: Writer):
    from .render import heatmap_svg, lozenges_svg
    _, samples = read_ndjson(cfg["input"])
    i = cfg["index"]
    _require(-len(samples) <= i < len(samples), f"index {i} out of range for {len(samples)} samples")
    rec = samples[i]
    kind = cfg["kind"]
    if kind == "heatmap":
        _require("drops" in rec, "heatmap needs a torus sample")
        svg = heatmap_svg(np.asarray(rec["heights"]), cfg["cell"])
    elif kind == "levels":
        _require("drops" in rec, "levels needs a torus sample")
        svg = _levels_svg(np.asarray(rec["heights"]), rec["drops"], cfg["cell"])
    elif kind == "lozenges":
        s = _surface_of(rec)
        _require(s.is_monotone, "lozenges needs a monotone surface (a tiling)")
        svg = lozenges_svg(s)
    else:
        raise UsageError(f"kind must be heatmap, levels or lozenges, got {kind!r}")
    out.svg(f"{kind}.svg", svg)
    return EXIT_OK


# --------------------------------------------------------------------------
# verify

def cmd_verify(cfg, out: Writer):
    from .verify import SUITES, run_suites
    names = [s.strip() for s in cfg["suite"].split(",") if s.strip()]
    if names == ["all"]:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    _require(not unknown, f"unknown suite(s) {unknown}; choose from all, {', '.join(SUITES)}")
    report = run_suites(names, cfg["seed"])
    passed = all(c["status"] == "pass" for s in report.values() for c in s.values())
    out.json("verify.json", {"passed": passed, "suites": report})
    for name, checks in report.items():
        for check, res in checks.items():
            print(f"{res['status'].upper():4s} {name}.{check}")
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate,
    "sample-tiling": cmd_sample_tiling,
    "exact": cmd_exact,
    "approx": cmd_approx,
    "stats": cmd_stats,
    "verify": cmd_verify,
    "render": cmd_render,
}


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiltsos", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"tiltsos {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, spec in PARAMS.items():
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name])
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
        sp.add_argument("--config", default=None, help="INI file with [common] and [%s] sections" % name)
        sp.add_argument("--out-dir", dest="out_dir", default=None, help="output directory (default .)")
        for key, (default, text) in spec.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{text} (default {default})")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args.command, args)
        out = Writer(cfg["out_dir"], args.command, cfg)
        return COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        print(f"tiltsos {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
