"""Experiment configurations and runners behind the ``skinlat`` command.

A config is a JSON object::

    {
      "experiment": "density",
      "model": {"j": 1.6, "u": 10, "l": 40, "boundary": "PBC"},
      "selection": {"rule": "largest_real"},
      "params": {},
      "formats": ["csv", "json", "pgm"],
      "output_dir": "out/fig4a"
    }

Hoppings are given either individually (``j1a``, ``j2a``, ``j1b``, ``j2b``)
or through the shorthands ``j`` (all four), ``j1`` (``j1a = j1b``) and ``j2``
(``j2a = j2b``).  Complex numbers are written as ``[re, im]``.  The
``topo`` and ``corner_modes`` experiments take the extended model
(``j1``, ``j2``, ``u``, ``p``, ``l``).

Every runner returns ``(artifacts, summary)`` where ``artifacts`` maps file
names to bytes; nothing touches the disk here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import circuit, io, localization, model, spectra, topo
from .eig import eigendecompose
from .errors import ClassificationError, FitError, GaplessError, ParameterError

__all__ = [
    "EXPERIMENTS",
    "FORMATS",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "compute",
]

EXPERIMENTS = (
    "spectrum", "density", "winding", "bound_branch", "scaling", "topo", "corner_modes", "circuit",
)
FORMATS = ("csv", "json", "pgm", "svg")
EXTENDED = ("topo", "corner_modes")
TOP_LEVEL = ("experiment", "model", "selection", "params", "formats", "output_dir", "description")
RULES = ("largest_real", "modulus_nearest", "real_nearest", "nearest", "index")


class ConfigError(ParameterError):
    """Invalid experiment config; ``field`` names the offending entry."""

    def __init__(self, field_name, problem):
        super().__init__(f"{field_name}: {problem}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: object
    selection: list
    params: dict = field(default_factory=dict)
    formats: tuple = ("csv", "json", "pgm")
    output_dir: str = ""
    raw_model: dict = field(default_factory=dict)


def _number(value, name, allow_complex=True):
    if isinstance(value, bool):
        raise ConfigError(name, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if allow_complex and isinstance(value, (list, tuple)) and len(value) == 2 \
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        z = complex(float(value[0]), float(value[1]))
        return z if z.imag else z.real
    if allow_complex and isinstance(value, dict) and set(value) == {"re", "im"}:
        return _number([value["re"], value["im"]], name)
    raise ConfigError(name, "expected a number" + (" or [re, im]" if allow_complex else ""))


def _expand_hoppings(m, prefix):
    out = {}
    if "j" in m:
        j = _number(m["j"], f"{prefix}.j")
        out.update(j1a=j, j2a=j, j1b=j, j2b=j)
    if "j1" in m:
        j = _number(m["j1"], f"{prefix}.j1")
        out.update(j1a=j, j1b=j)
    if "j2" in m:
        j = _number(m["j2"], f"{prefix}.j2")
        out.update(j2a=j, j2b=j)
    for name in ("j1a", "j2a", "j1b", "j2b"):
        if name in m:
            out[name] = _number(m[name], f"{prefix}.{name}")
    return out


def _boundary(m, prefix, default=None):
    b = m.get("boundary", default)
    if b is None:
        raise ConfigError(f"{prefix}.boundary", "required")
    if not isinstance(b, str) or b.upper() not in ("OBC", "PBC"):
        raise ConfigError(f"{prefix}.boundary", "must be 'OBC' or 'PBC'")
    return model.Boundary(b.upper())


def _int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(name, "expected an integer")
    return int(value)


def build_model(m, experiment, prefix="model"):
    """``ModelParams`` or ``ExtendedParams`` from a (merged) model dict."""
    if not isinstance(m, dict):
        raise ConfigError(prefix, "expected an object")
    known = {"j", "j1", "j2", "j1a", "j2a", "j1b", "j2b", "u", "l", "boundary", "p", "d"}
    for key in m:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown field")
    if "u" not in m:
        raise ConfigError(f"{prefix}.u", "required")
    u = _number(m["u"], f"{prefix}.u", allow_complex=False)
    if experiment in EXTENDED:
        for name in ("j1", "j2", "p"):
            if name not in m:
                raise ConfigError(f"{prefix}.{name}", "required")
        l = _int(m.get("l", 20), f"{prefix}.l")
        try:
            return model.ExtendedParams(
                _number(m["j1"], f"{prefix}.j1"), _number(m["j2"], f"{prefix}.j2"), u,
                _number(m["p"], f"{prefix}.p"), l, _boundary(m, prefix, "OBC"),
            )
        except ConfigError:
            raise
        except ParameterError as exc:
            raise ConfigError(prefix, str(exc)) from exc
    if "l" not in m:
        raise ConfigError(f"{prefix}.l", "required")
    hops = _expand_hoppings(m, prefix)
    for name in ("j1a", "j2a", "j1b", "j2b"):
        if name not in hops:
            raise ConfigError(f"{prefix}.{name}", "required (or give j, j1, j2)")
    try:
        return model.ModelParams(
            u=u, l=_int(m["l"], f"{prefix}.l"), boundary=_boundary(m, prefix),
            d=_number(m.get("d", 1.0), f"{prefix}.d", allow_complex=False), **hops,
        )
    except ParameterError as exc:
        raise ConfigError(prefix, str(exc)) from exc


def _selection(sel):
    items = sel if isinstance(sel, list) else [sel]
    out = []
    for i, s in enumerate(items):
        name = "selection" if not isinstance(sel, list) else f"selection[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(name, "expected an object")
        rule = s.get("rule")
        if rule not in RULES:
            raise ConfigError(f"{name}.rule", f"must be one of {', '.join(RULES)}")
        if rule in ("modulus_nearest", "real_nearest", "nearest") and "target" not in s:
            raise ConfigError(f"{name}.target", "required")
        if rule == "index" and "index" not in s:
            raise ConfigError(f"{name}.index", "required")
        entry = {"rule": rule}
        if "target" in s:
            entry["target"] = _number(s["target"], f"{name}.target")
        if "index" in s:
            entry["index"] = _int(s["index"], f"{name}.index")
        out.append(entry)
    return out


def parse_config(doc):
    """Validate a config dict and return an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        Naming the first offending field, before any computation.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config", "expected a JSON object")
    for key in doc:
        if key not in TOP_LEVEL:
            raise ConfigError(key, "unknown field")
    if "experiment" not in doc:
        raise ConfigError("experiment", "required")
    exp = doc["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    if "model" not in doc:
        raise ConfigError("model", "required")
    raw = doc["model"]
    params = build_model(raw, exp)
    extra = doc.get("params", {})
    if not isinstance(extra, dict):
        raise ConfigError("params", "expected an object")
    for i, case in enumerate(extra.get("sweep", [])):
        if not isinstance(case, dict):
            raise ConfigError(f"params.sweep[{i}]", "expected an object")
        build_model({**raw, **case}, exp, prefix=f"params.sweep[{i}]")
    formats = doc.get("formats", ["csv", "json", "pgm"])
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise ConfigError("formats", f"must be a list drawn from {', '.join(FORMATS)}")
    out_dir = doc.get("output_dir", "")
    if not isinstance(out_dir, str):
        raise ConfigError("output_dir", "expected a string")
    selection = _selection(doc.get("selection", {"rule": "largest_real"}))
    return ExperimentConfig(exp, params, selection, dict(extra), tuple(formats), out_dir, dict(raw))


def _cases(cfg):
    sweep = cfg.params.get("sweep")
    if not sweep:
        return [({}, cfg.model)]
    return [(case, build_model({**cfg.raw_model, **case}, cfg.experiment)) for case in sweep]


def _case_label(case, i):
    if not case:
        return str(i)
    return ";".join(f"{k}={_label_value(v)}" for k, v in sorted(case.items()))


def _label_value(v):
    if isinstance(v, list):
        return f"{v[0]:g}{v[1]:+g}i"
    return f"{v:g}"


def select_state(sol, sel):
    """Index of the state picked by a selection rule (canonical order)."""
    vals = sol.values
    rule = sel["rule"]
    if rule == "largest_real":
        return 0
    if rule == "index":
        i = sel["index"]
        if not 0 <= i < len(vals):
            raise ParameterError(f"selection index {i} outside 0..{len(vals) - 1}")
        return i
    target = sel["target"]
    if rule == "modulus_nearest":
        key = np.abs(np.abs(vals) - abs(target))
    elif rule == "real_nearest":
        key = np.abs(vals.real - np.real(target))
    else:
        key = np.abs(vals - target)
    return int(np.argmin(key))


def _near_diagonal_weight(profile, width=1):
    # share of the density with |w - v| <= width; close to 1 for bound pairs
    l = profile.l
    r = np.subtract.outer(np.arange(l), np.arange(l))
    return float(profile.grid[np.abs(r) <= width].sum() / profile.grid.sum())


def _grid_rows(profile):
    l = profile.l
    return [(w, v, profile.grid[w - 1, v - 1]) for w in range(1, l + 1) for v in range(1, l + 1)]


def _emit_profile(out, cfg, stem, profile, scale):
    if "csv" in cfg.formats:
        out[f"{stem}.csv"] = io.csv_bytes(["w", "v", "rho"], _grid_rows(profile))
    if "pgm" in cfg.formats:
        out[f"{stem}.pgm"] = io.heatmap(profile, scale)
    if "svg" in cfg.formats:
        out[f"{stem}.svg"] = io.heatmap_svg(profile, scale)


def _check_solution(sol, h):
    tr = abs(np.sum(sol.values) - np.trace(h)) / max(1.0, float(np.abs(np.diag(h)).sum()))
    return {"worst_residual": float(sol.residuals.max()), "trace_deviation": float(tr),
            "hermitian": bool(np.array_equal(h, h.conj().T))}


def run_spectrum(cfg):
    rows, cases = [], []
    for n, (case, params) in enumerate(_cases(cfg)):
        h = model.build_two_body_hamiltonian(params)
        sol = eigendecompose(h)
        try:
            bound = set(spectra.classify_states(sol, params).bound.tolist())
        except ClassificationError:
            bound = None
        label = _case_label(case, n)
        for i, (e, r) in enumerate(zip(sol.values, sol.residuals)):
            flag = "na" if bound is None else ("bound" if i in bound else "scattering")
            rows.append((label, i, e.real, e.imag, r, flag))
        info = {"case": label, "n": len(sol), "max_real": float(sol.values.real.max()),
                "bound_count": None if bound is None else len(bound)}
        info.update(_check_solution(sol, h))
        cases.append(info)
    out = {}
    if "csv" in cfg.formats:
        out["spectrum.csv"] = io.csv_bytes(["case", "index", "re", "im", "residual", "kind"], rows)
    return out, {"experiment": "spectrum", "cases": cases}


def run_density(cfg):
    params = cfg.model
    h = model.build_two_body_hamiltonian(params)
    sol = eigendecompose(h)
    scale = cfg.params.get("scale", "linear")
    prom = float(cfg.params.get("prominence", 0.3))
    out, states, diag_rows = {}, [], []
    multi = len(cfg.selection) > 1
    for n, sel in enumerate(cfg.selection):
        i = select_state(sol, sel)
        prof = localization.density(sol.vector(i), params.l, sol.values[i])
        stem = f"density_{n + 1}" if multi else "density"
        _emit_profile(out, cfg, stem, prof, scale)
        diag = np.diag(prof.grid)
        for t, rho in enumerate(diag, 1):
            diag_rows.append((n + 1, t, rho))
        peaks = localization.find_maxima(prof, prominence=prom)
        states.append({
            "selection": sel, "index": i, "energy": sol.values[i], "near_diagonal_weight": _near_diagonal_weight(prof),
            "residual": float(sol.residuals[i]),
            "maxima": [{"w": w, "v": v, "rho": r} for w, v, r in peaks],
            "diagonal_argmax": int(np.argmax(diag)) + 1,
            "diagonal_rel_std": float(np.std(diag) / np.mean(diag)) if np.mean(diag) > 0 else None,
        })
    if "csv" in cfg.formats:
        out["diagonal.csv"] = io.csv_bytes(["state", "t", "rho"], diag_rows)
    summary = {"experiment": "density", "states": states}
    summary.update(_check_solution(sol, h))
    return out, summary


def run_winding(cfg):
    params = cfg.model
    p = cfg.params
    loop_kind = p.get("loop", "K")
    n_samples = _int(p.get("n_samples", 256), "params.n_samples")
    if loop_kind == "K":
        fixed = float(p.get("k", 0.0))
        loop = spectra.center_of_mass_loop(params, fixed, n_samples)
    elif loop_kind == "k":
        fixed = float(p.get("K", 0.0))
        loop = spectra.relative_k_loop(params, fixed, n_samples)
    else:
        raise ConfigError("params.loop", "must be 'K' or 'k'")
    base = p.get("base")
    base = None if base is None else _number(base, "params.base")
    w = spectra.winding_number(loop, base=base)
    out = {}
    if "csv" in cfg.formats:
        rows = [(t, e.real, e.imag) for t, e in zip(loop.parameters, loop.samples)]
        out["loop.csv"] = io.csv_bytes(["t", "re", "im"], rows)
    summary = {"experiment": "winding", "w": w, "loop": loop_kind, "fixed_momentum": fixed,
               "base": loop.centroid() if base is None else complex(base)}
    try:
        summary["beta1"], summary["beta2"] = params.beta1, params.beta2
    except ParameterError:
        pass
    return out, summary


def run_bound_branch(cfg):
    params = cfg.model
    l = params.l
    lattice = cfg.params.get("lattice", "ring")
    ks = np.array([2 * np.pi * n / l for n in range(-(l // 2), l - l // 2)])
    branch = spectra.bound_state_branch(params, ks, lattice=lattice)
    rows = [(k, e.real, e.imag, r, bool(pr))
            for k, e, r, pr in zip(ks, branch.energies, branch.residuals, branch.present)]
    cont = []
    for k in ks:
        vals = np.linalg.eigvals(model.build_relative_ring(params, k))
        for e in sorted(vals, key=lambda z: (-z.real, -z.imag)):
            cont.append((k, e.real, e.imag))
    out = {}
    if "csv" in cfg.formats:
        out["branch.csv"] = io.csv_bytes(["K", "re", "im", "residual", "present"], rows)
        out["ring_spectrum.csv"] = io.csv_bytes(["K", "re", "im"], cont)
    present = branch.residuals[branch.present]
    summary = {"experiment": "bound_branch", "lattice": lattice, "n_k": len(ks),
               "present": int(branch.present.sum()),
               "worst_residual": float(present.max()) if present.size else None}
    return out, summary


def _safe_fit(cut, side):
    try:
        f = localization.fit_scaling_factor(cut, side)
    except FitError as exc:
        return None, str(exc)
    return f, None


def run_scaling(cfg):
    profile_kind = cfg.params.get("profile", "relative")
    if profile_kind not in ("relative", "diagonal"):
        raise ConfigError("params.profile", "must be 'relative' or 'diagonal'")
    rows, fits = [], []
    for n, (case, params) in enumerate(_cases(cfg)):
        l = params.l
        h = model.build_two_body_hamiltonian(params)
        sol = eigendecompose(h)
        i = select_state(sol, cfg.selection[0])
        prof = localization.density(sol.vector(i), l, sol.values[i])
        label = _case_label(case, n)
        entry = {"case": label, "energy": sol.values[i], "worst_residual": float(sol.residuals.max())}
        if profile_kind == "diagonal":
            for t, rho in localization.center_of_mass_profile(prof):
                rows.append((label, t, rho))
            diag = np.diag(prof.grid)
            entry["argmax_t"] = int(np.argmax(diag)) + 1
        else:
            fixed_v = cfg.params.get("fixed_v", (l + 1) // 2)
            if fixed_v == "peak":
                fixed_v = int(np.unravel_index(np.argmax(prof.grid), prof.grid.shape)[1]) + 1
            fixed_v = _int(fixed_v, "params.fixed_v")
            cut = localization.relative_cut(prof, fixed_v)
            rows.extend((label, r, rho) for r, rho in cut)
            entry["fixed_v"] = fixed_v
            for side in ("left", "right"):
                f, err = _safe_fit(cut, side)
                entry[f"eta_{side}"] = None if f is None else f.eta
                entry[f"r2_{side}"] = None if f is None else f.r_squared
                if err:
                    entry[f"fit_error_{side}"] = err
            if entry["eta_left"] is not None and entry["eta_right"] is not None:
                entry["eta"] = 0.5 * (entry["eta_left"] + entry["eta_right"])
            if _uniform_hermitian(params):
                j = float(np.real(params.j1a))
                entry["eta_closed_form"] = 2 * math.asinh(params.u / (4 * j))
        fits.append(entry)
    out = {}
    if "csv" in cfg.formats:
        col = "t" if profile_kind == "diagonal" else "r"
        out["scaling.csv"] = io.csv_bytes(["case", col, "rho"], rows)
    return out, {"experiment": "scaling", "profile": profile_kind, "cases": fits}


def _uniform_hermitian(params):
    js = {complex(params.j1a), complex(params.j2a), complex(params.j1b), complex(params.j2b)}
    return len(js) == 1 and params.positive_real


def run_topo(cfg):
    cases, band_rows = [], []
    n_k = _int(cfg.params.get("n_k", 256), "params.n_k")
    ks = -np.pi + 2 * np.pi * np.arange(n_k) / n_k
    for n, (case, params) in enumerate(_cases(cfg)):
        label = _case_label(case, n)
        try:
            w = topo.ssh_winding(params)
        except GaplessError:
            w = None
        lo, hi = topo.bloch_bands(params, ks)
        band_rows.extend((label, k, a.real, a.imag, b.real, b.imag) for k, a, b in zip(ks, lo, hi))
        cases.append({
            "case": label, "lambda1": params.lambda1, "lambda2": params.lambda2, "p": complex(params.p),
            "ssh_winding": w, "spectral_windings": topo.bloch_spectral_windings(params),
            "min_gap": topo.gap_scan(params, [params.p])[0][1],
        })
    p_values = cfg.params.get("p_values", [])
    scan = topo.gap_scan(cfg.model, [_number(p, "params.p_values") for p in p_values])
    out = {}
    if "csv" in cfg.formats:
        out["bands.csv"] = io.csv_bytes(["case", "k", "lower_re", "lower_im", "upper_re", "upper_im"],
                                        band_rows)
        if scan:
            out["gap_scan.csv"] = io.csv_bytes(
                ["p_re", "p_im", "gap"], [(complex(p).real, complex(p).imag, g) for p, g in scan])
    return out, {"experiment": "topo", "cases": cases,
                 "gap_scan": [{"p": complex(p), "gap": g} for p, g in scan]}


def run_corner_modes(cfg):
    params = cfg.model
    l = params.l
    h = model.build_extended_hamiltonian(params)
    sol = eigendecompose(h)
    rep = topo.detect_corner_modes(sol, params)
    out = {}
    if len(rep):
        grid = sum(np.abs(rep.vectors[:, j].reshape(l, l)) ** 2 for j in range(len(rep)))
        prof = localization.DensityProfile(grid / grid.sum(), 1.0)
        _emit_profile(out, cfg, "corner_density", prof, cfg.params.get("scale", "linear"))
    if "csv" in cfg.formats:
        in_gap = set(rep.in_gap_indices)
        rows = [(i, e.real, e.imag, r, i in in_gap)
                for i, (e, r) in enumerate(zip(sol.values, sol.residuals))]
        out["spectrum.csv"] = io.csv_bytes(["index", "re", "im", "residual", "in_gap"], rows)
    try:
        w = topo.ssh_winding(params)
    except GaplessError:
        w = None
    summary = {
        "experiment": "corner_modes", "ssh_winding": w, "in_gap_count": len(rep),
        "in_gap_energies": rep.energies, "corner_weights": rep.corner_weights,
        "dominant_corners": rep.dominant_corners(), "gap_bounds": rep.gap_bounds,
        "predicted_gap": rep.predicted_gap,
    }
    summary.update(_check_solution(sol, h))
    return out, summary


def run_circuit(cfg):
    params = cfg.model
    omega = float(cfg.params.get("omega", 1.0))
    c0 = float(cfg.params.get("c0", 1.0))
    comp = circuit.solve_components(params, omega, c0)
    lap = circuit.build_laplacian(comp, params)
    h = model.build_two_body_hamiltonian(params)
    rep = circuit.verify_equivalence(lap, h, omega, c0)
    net = circuit.export_netlist(comp, params)
    text = net.text()
    rebuilt = circuit.laplacian_from_netlist(circuit.parse_netlist(text))
    out = {"netlist.txt": text.encode("ascii")}
    summary = {
        "experiment": "circuit", "omega": omega, "c0": c0,
        "components": {"ca": comp.ca, "cb": comp.cb, "l1": comp.l1, "l2": comp.l2, "l0": comp.l0},
        "matching_residual": comp.residual, "u_realized": comp.u_realized,
        "alpha": rep.alpha, "sigma": rep.sigma, "max_dev": rep.max_dev, "worst": list(rep.worst),
        "round_trip_exact": bool(np.array_equal(lap, rebuilt)),
        "element_counts": {k: net.count(k) for k in ("C", "L", "INIC")},
    }
    return out, summary


RUNNERS = {
    "spectrum": run_spectrum, "density": run_density, "winding": run_winding,
    "bound_branch": run_bound_branch, "scaling": run_scaling, "topo": run_topo,
    "corner_modes": run_corner_modes, "circuit": run_circuit,
}


def compute(cfg):
    """Run an experiment; returns ``{file name: bytes}`` including the JSON summary."""
    artifacts, summary = RUNNERS[cfg.experiment](cfg)
    if "json" in cfg.formats:
        artifacts[f"{cfg.experiment}.json"] = io.json_bytes(summary)
    return dict(sorted(artifacts.items()))
