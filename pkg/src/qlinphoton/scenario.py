"""JSON scenarios: schema, parsing, built-in examples and deterministic runs."""

from __future__ import annotations

import copy
import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, fields, golden, intensity, pgstate, synthesis
from .errors import ValidationError
from .grid import TimeGrid
from .model import StateSpaceModel, SystemParams, realize

TAIL_TOL = 1e-6
DEFAULT_GRID = {"t_min": -2.0, "t_max": 20.0, "dt": 1e-3}
PRODUCTS = ("intensity_transient", "intensity_steady", "pulses", "covariance", "state_transfer", "beamsplitter")
STEADY_PRODUCTS = ("intensity_steady", "pulses", "covariance", "state_transfer", "beamsplitter")

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _COMPLEX}}
_MATRIX_LIKE = {"oneOf": [_COMPLEX, _MATRIX]}

_PULSE = {
    "type": "object",
    "required": ["family"],
    "oneOf": [
        {
            "properties": {"family": {"const": "exponential"}, "gamma": {"type": "number", "exclusiveMinimum": 0}, "t0": {"type": "number"}},
            "required": ["family", "gamma"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "family": {"const": "samples"},
                "values": {"type": "array", "items": _COMPLEX, "minItems": 2},
                "times": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "t_start": {"type": "number"},
                "dt": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["family", "values"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "family": {"const": "custom-rational"},
                "coeffs": {"type": "array", "items": _COMPLEX, "minItems": 1},
                "rates": {"type": "array", "items": _COMPLEX, "minItems": 1},
                "t0": {"type": "number"},
            },
            "required": ["family", "coeffs", "rates"],
            "additionalProperties": False,
        },
    ],
}

_SYSTEM = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {
            "properties": {"type": {"const": "cavity"}, "kappa": {"type": "number", "exclusiveMinimum": 0}, "omega": {"type": "number"}},
            "required": ["type", "kappa"],
            "additionalProperties": False,
        },
        {
            "properties": {"type": {"const": "dpa"}, "kappa": {"type": "number", "exclusiveMinimum": 0}, "epsilon": {"type": "number"}},
            "required": ["type", "kappa", "epsilon"],
            "additionalProperties": False,
        },
        {
            "properties": {"type": {"const": "beamsplitter"}, "eta": {"type": "number", "minimum": 0, "maximum": 1}},
            "required": ["type", "eta"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "type": {"const": "params"},
                "S_minus": _MATRIX_LIKE,
                "C_minus": _MATRIX_LIKE,
                "C_plus": _MATRIX_LIKE,
                "Omega_minus": _MATRIX_LIKE,
                "Omega_plus": _MATRIX_LIKE,
            },
            "required": ["type", "S_minus", "C_minus", "C_plus", "Omega_minus", "Omega_plus"],
            "additionalProperties": False,
        },
        {
            "properties": {"type": {"const": "model"}, "A": _MATRIX, "B": _MATRIX, "C": _MATRIX, "S": _MATRIX},
            "required": ["type", "A", "B", "C", "S"],
            "additionalProperties": False,
        },
        {
            "properties": {"type": {"const": "allpass"}, "A": _MATRIX_LIKE, "B": _MATRIX_LIKE, "C": _MATRIX_LIKE, "D": _COMPLEX},
            "required": ["type", "A", "B", "C"],
            "additionalProperties": False,
        },
    ],
}

_INPUT = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "vacuum"}}, "required": ["kind"], "additionalProperties": False},
        {
            "properties": {"kind": {"const": "photon"}, "pulses": {"type": "array", "items": _PULSE, "minItems": 1}},
            "required": ["kind", "pulses"],
            "additionalProperties": False,
        },
        {
            "properties": {"kind": {"const": "photon_coherent"}, "pulse": _PULSE, "alpha": _PULSE},
            "required": ["kind", "pulse", "alpha"],
            "additionalProperties": False,
        },
    ],
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["system", "input"],
    "properties": {
        "name": {"type": "string"},
        "seed_example": {"enum": ["cavity", "dpa", "beamsplitter", "photon_coherent", "shaper", "vacuum-through-passive"]},
        "system": _SYSTEM,
        "input": _INPUT,
        "grid": {
            "type": "object",
            "required": ["t_min", "t_max", "dt"],
            "properties": {"t_min": {"type": "number"}, "t_max": {"type": "number"}, "dt": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "outputs": {"type": "array", "items": {"enum": list(PRODUCTS)}, "uniqueItems": True},
        "transient": {
            "type": "object",
            "properties": {"t0": {"type": "number"}, "t_end": {"type": "number"}},
            "additionalProperties": False,
        },
        "covariance_rows": {"type": "array", "items": {"type": "number"}},
        "tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

REALIZATION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["A", "B", "C"],
    "properties": {"A": _MATRIX_LIKE, "B": _MATRIX_LIKE, "C": _MATRIX_LIKE, "D": _COMPLEX},
    "additionalProperties": False,
}


class ScenarioError(ValidationError):
    """Schema or semantic violations, all collected. ``violations`` is a list of
    ``{"path": ..., "message": ...}`` dicts."""

    def __init__(self, violations):
        self.violations = violations
        super().__init__("; ".join(f"{v['path']}: {v['message']}" for v in violations))


def _cplx(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x)


def _cmatrix(x) -> np.ndarray:
    if isinstance(x, (int, float)) or (isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x)
                                       and not isinstance(x[0], list)):
        return np.array([[_cplx(x)]])
    return np.array([[_cplx(v) for v in row] for row in x], dtype=complex).reshape(len(x), -1) if x else np.zeros((0, 0), complex)


def _schema_errors(doc, schema) -> list:
    validator = jsonschema.Draft202012Validator(schema)
    out = []
    for err in _leaf_errors(validator.iter_errors(doc)):
        out.append({"path": err.json_path, "message": err.message})
    return sorted(out, key=lambda v: (v["path"], v["message"]))


def _leaf_errors(errors):
    """Replace a failed ``oneOf`` by the errors of the branch whose tag matched."""
    for err in errors:
        if err.validator != "oneOf" or not err.context:
            yield err
            continue
        branches = {}
        for sub in err.context:
            branches.setdefault(sub.schema_path[0], []).append(sub)
        tagged = [b for b in branches.values() if not any(e.validator == "const" for e in b)]
        if len(tagged) == 1:
            yield from _leaf_errors(tagged[0])
        else:
            yield err


def build_pulse(spec: dict):
    fam = spec["family"]
    if fam == "exponential":
        return fields.ExponentialPulse(float(spec["gamma"]), float(spec.get("t0", 0.0)))
    if fam == "custom-rational":
        return fields.ExpSumPulse(tuple(_cplx(c) for c in spec["coeffs"]), tuple(_cplx(r) for r in spec["rates"]), float(spec.get("t0", 0.0)))
    vals = np.array([_cplx(v) for v in spec["values"]])
    if "times" in spec:
        times = np.asarray(spec["times"], dtype=float)
    else:
        times = float(spec.get("t_start", 0.0)) + float(spec.get("dt", 1.0)) * np.arange(len(vals))
    return fields.SampledPulse(times, vals)


def _tail_mass(pulse, grid: TimeGrid) -> float:
    """Mass of ``|nu|^2`` outside the grid."""
    if isinstance(pulse, fields.ExponentialPulse):
        before = 1.0 if pulse.t0 < grid.t_min else 0.0
        return before + float(np.exp(-2 * pulse.gamma * max(grid.t_max - pulse.t0, 0.0)))
    if isinstance(pulse, fields.SampledPulse):
        inside = (pulse.times >= grid.t_min - 1e-12) & (pulse.times <= grid.t_max + 1e-12)
        return 0.0 if np.all(inside) else float("inf")
    if isinstance(pulse, fields.ExpSumPulse):
        if pulse.t0 < grid.t_min:
            return float("inf")
        rate = min(r.real for r in pulse.rates)
        tail = np.linspace(grid.t_max, grid.t_max + 40.0 / rate, 4001)
        return float(np.trapezoid(np.abs(pulse(tail)) ** 2, tail))
    return 0.0


def build_system(spec: dict):
    kind = spec["type"]
    if kind == "cavity":
        p = SystemParams.cavity(float(spec["kappa"]), float(spec.get("omega", 0.0)))
    elif kind == "dpa":
        p = SystemParams.dpa(float(spec["kappa"]), float(spec["epsilon"]))
    elif kind == "beamsplitter":
        p = SystemParams.beamsplitter(float(spec["eta"]))
    elif kind == "params":
        p = SystemParams(*(_cmatrix(spec[k]) for k in ("S_minus", "C_minus", "C_plus", "Omega_minus", "Omega_plus")))
    elif kind == "allpass":
        p = synthesis.synthesize(build_allpass(spec))
    else:
        return None, StateSpaceModel(*(_cmatrix(spec[k]) for k in ("A", "B", "C", "S")))
    return p, realize(p)


def build_allpass(spec: dict) -> synthesis.RationalAllPass:
    A = _cmatrix(spec["A"])
    n = A.shape[0]
    return synthesis.RationalAllPass(A, _cmatrix(spec["B"]).reshape(n, 1), _cmatrix(spec["C"]).reshape(1, n), _cplx(spec.get("D", 1.0)))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    system: StateSpaceModel
    params: SystemParams | None
    input_kind: str
    pulses: tuple
    alpha: object
    grid: TimeGrid
    outputs: tuple
    t0: float
    t_end: float
    covariance_rows: tuple
    tol: float
    document: dict = field(repr=False, default_factory=dict)


def parse_scenario(source, dt: float | None = None) -> Scenario:
    """Validate and build a scenario from a path, JSON text or a dict.

    Raises
    ------
    ScenarioError
        With every schema or semantic violation found.
    """
    if isinstance(source, dict):
        doc = copy.deepcopy(source)
    else:
        text = Path(source).read_text() if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")) else source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([{"path": "$", "message": f"invalid JSON: {exc.msg} (line {exc.lineno})"}]) from None
    errs = _schema_errors(doc, SCENARIO_SCHEMA)
    if errs:
        raise ScenarioError(errs)

    violations = []
    g = dict(DEFAULT_GRID, **doc.get("grid", {}))
    if dt is not None:
        g["dt"] = dt
    try:
        grid = TimeGrid(float(g["t_min"]), float(g["t_max"]), float(g["dt"]))
    except ValidationError as exc:
        raise ScenarioError([{"path": "$.grid", "message": str(exc)}]) from None
    try:
        params, system = build_system(doc["system"])
    except ValidationError as exc:
        violations.append({"path": "$.system", "message": str(exc)})
        params, system = None, None

    inp = doc["input"]
    kind = inp["kind"]
    pulses, alpha = (), None
    try:
        if kind == "photon":
            pulses = tuple(build_pulse(p) for p in inp["pulses"])
        elif kind == "photon_coherent":
            pulses = (build_pulse(inp["pulse"]),)
            alpha = build_pulse(inp["alpha"])
    except ValidationError as exc:
        violations.append({"path": "$.input", "message": str(exc)})
    for k, p in enumerate(pulses):
        tail = _tail_mass(p, grid)
        if tail > TAIL_TOL:
            violations.append({"path": f"$.input.pulses[{k}]", "message": f"pulse mass outside the grid is {tail:.3g} (limit {TAIL_TOL:g})"})
    if system is not None:
        m_needed = {"photon": len(pulses), "photon_coherent": 2}.get(kind)
        if m_needed is not None and system.n_ch != m_needed:
            violations.append({"path": "$.input", "message": f"system has {system.n_ch} channels but the input needs {m_needed}"})
    tr = doc.get("transient", {})
    t0 = float(tr.get("t0", grid.t_min))
    t_end = float(tr.get("t_end", grid.t_max))
    if not t0 < t_end:
        violations.append({"path": "$.transient", "message": "need t0 < t_end"})
    if violations:
        raise ScenarioError(violations)
    outputs = tuple(doc.get("outputs", ["intensity_steady", "pulses"]))
    rows = tuple(float(x) for x in doc.get("covariance_rows", [0.0, 1.0, 2.0]))
    return Scenario(
        doc.get("name", doc.get("seed_example", "scenario")), system, params, kind, pulses, alpha, grid,
        outputs, t0, t_end, rows, float(doc.get("tol", pgstate.CERTIFY_TOL)), doc,
    )


# ----------------------------------------------------------------------------
# built-in scenarios


def builtin(name: str) -> dict:
    exp1 = {"family": "exponential", "gamma": 1.0}
    grid = dict(DEFAULT_GRID)
    docs = {
        "cavity": {
            "system": {"type": "cavity", "kappa": 2.0, "omega": 1.0},
            "input": {"kind": "photon", "pulses": [exp1]},
            "outputs": ["intensity_transient", "intensity_steady", "pulses", "covariance", "state_transfer"],
        },
        "dpa": {
            "system": {"type": "dpa", "kappa": 4.0, "epsilon": 1.0},
            "input": {"kind": "photon", "pulses": [exp1]},
            "outputs": ["intensity_transient", "intensity_steady", "pulses", "covariance", "state_transfer"],
            "transient": {"t0": 0.0, "t_end": 10.0},
        },
        "beamsplitter": {
            "system": {"type": "beamsplitter", "eta": 0.5},
            "input": {"kind": "photon", "pulses": [exp1, exp1]},
            "outputs": ["pulses", "state_transfer", "beamsplitter"],
        },
        "photon_coherent": {
            "system": {"type": "beamsplitter", "eta": 0.5},
            "input": {"kind": "photon_coherent", "pulse": exp1, "alpha": {"family": "custom-rational", "coeffs": [1.0], "rates": [1.0]}},
            "outputs": ["pulses", "covariance", "state_transfer"],
        },
        "shaper": {
            "system": {"type": "allpass", "A": [[-3, 0], [-2 * np.sqrt(3), [-1, -1]]], "B": [[-np.sqrt(6)], [-np.sqrt(2)]], "C": [[np.sqrt(6), np.sqrt(2)]], "D": 1},
            "input": {"kind": "photon", "pulses": [{"family": "exponential", "gamma": 2.0}]},
            "outputs": ["intensity_steady", "pulses", "state_transfer"],
        },
        "vacuum-through-passive": {
            "system": {"type": "cavity", "kappa": 2.0, "omega": 1.0},
            "input": {"kind": "vacuum"},
            "outputs": ["intensity_transient", "intensity_steady", "covariance"],
        },
    }
    if name not in docs:
        raise ValidationError(f"unknown example {name!r}; choose from {sorted(docs)}")
    doc = docs[name]
    doc.update(name=name, seed_example=name, grid=grid)
    return doc


# ----------------------------------------------------------------------------
# running


def _fmt(x: float) -> str:
    return "%.11e" % x


def _matrix_columns(prefix: str, m: int, p: int):
    cols = []
    for j in range(m):
        for k in range(p):
            cols += [f"{prefix}_{j + 1}{k + 1}_re", f"{prefix}_{j + 1}{k + 1}_im"]
    return cols


def _matrix_row(M: np.ndarray):
    out = []
    for v in M.ravel():
        out += [_fmt(v.real), _fmt(v.imag)]
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _pairs(arr) -> list:
    return [[float(v.real), float(v.imag)] for v in np.ravel(arr)]


class _Bundle:
    def __init__(self, out_dir: Path, fmt: str):
        self.out_dir = out_dir
        self.fmt = fmt
        self.files = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def table(self, stem: str, header, rows):
        if self.fmt == "csv":
            self._write(f"{stem}.csv", _csv_text(header, rows))
        else:
            self.json(stem, {"columns": list(header), "rows": [[float(x) for x in r] for r in rows]})

    def json(self, stem: str, obj):
        self._write(f"{stem}.json", json.dumps(obj, sort_keys=True, indent=1) + "\n")

    def _write(self, name, text):
        (self.out_dir / name).write_text(text, encoding="utf-8", newline="\n")
        self.files.append(name)


def _intensity_rows(trace: intensity.IntensityTrace):
    m = trace.values.shape[1]
    header = ["t"] + _matrix_columns("n", m, m) + ["trace"]
    rows = [[_fmt(t)] + _matrix_row(v) + [_fmt(tr)] for t, v, tr in zip(trace.times, trace.values, trace.total)]
    return header, rows


def _input_state(sc: Scenario):
    g = sc.grid
    if sc.input_kind == "photon":
        xi = fields.photon_pulses(sc.pulses, g)
        return xi, fields.vacuum_cov(sc.system.n_ch)
    if sc.input_kind == "photon_coherent":
        one = fields.photon_pulses(sc.pulses, g)
        xm = np.zeros((g.n, 2, 1), dtype=complex)
        xm[:, 0, 0] = one.xi_minus[:, 0, 0]
        xi = fields.PulseMatrix(g, xm, np.zeros_like(xm), one.onset)
        return xi, fields.photon_coherent_cov(sc.alpha, g, sc.pulses[0])
    m = sc.system.n_ch
    z = np.zeros((g.n, m, m), dtype=complex)
    return fields.PulseMatrix(g, z, z, (0,) * m), fields.vacuum_cov(m)


def run(sc: Scenario, out_dir, fmt: str = "csv", products=None) -> dict:
    """Compute the requested products and write them with a manifest.

    Returns the manifest dictionary.
    """
    if fmt not in ("csv", "json"):
        raise ValidationError(f"unknown format {fmt!r}")
    bundle = _Bundle(Path(out_dir), fmt)
    wanted = [p for p in sc.outputs if products is None or p in products]
    ops = []
    g = sc.system
    grid = sc.grid
    xi, cov = _input_state(sc)
    xi_out = None

    def steady_xi():
        nonlocal xi_out
        if xi_out is None:
            ops.append("intensity.steady_pulses")
            xi_out = intensity.steady_pulses(g, xi)
        return xi_out

    if "intensity_transient" in wanted:
        if sc.input_kind == "photon_coherent":
            raise ValidationError("transient intensity is defined for photon or vacuum inputs")
        sol = intensity.integrate_transient(g, xi, sc.t0, sc.t_end, grid.dt)
        tr = intensity.transient_intensity(g, sol, xi)
        ops += ["intensity.integrate_transient", "intensity.transient_intensity"]
        bundle.table("intensity_transient", *_intensity_rows(tr))
    if "intensity_steady" in wanted:
        tr = intensity.steady_intensity(g, steady_xi())
        ops.append("intensity.steady_intensity")
        bundle.table("intensity_steady", *_intensity_rows(tr))
    if "pulses" in wanted:
        out = steady_xi()
        m, p = out.n_ch, out.n_cols
        header = ["t"] + _matrix_columns("xi_in_minus", m, p) + _matrix_columns("xi_out_minus", m, p) + _matrix_columns("xi_out_plus", m, p) + ["abs2_out_minus_total"]
        rows = [
            [_fmt(t)] + _matrix_row(a) + _matrix_row(b) + _matrix_row(c) + [_fmt(float(np.sum(np.abs(b) ** 2)))]
            for t, a, b, c in zip(grid.times, xi.xi_minus, out.xi_minus, out.xi_plus)
        ]
        bundle.table("pulses", header, rows)
    cov_out = None
    if "covariance" in wanted or "state_transfer" in wanted:
        ops.append("intensity.covariance_transfer")
        cov_out = intensity.covariance_transfer(g, cov, grid)
    if "covariance" in wanted:
        m2 = 2 * g.n_ch
        for k, t_row in enumerate(sc.covariance_rows):
            i = grid.index_of(t_row)
            t_fixed = grid.times[i]
            R = cov_out.smooth(np.full(grid.n, t_fixed), grid.times)
            header = ["r"] + _matrix_columns("R", m2, m2)
            rows = [[_fmt(r)] + _matrix_row(v) for r, v in zip(grid.times, R)]
            bundle.table(f"covariance_row{k + 1}", header, rows)
        bundle.json("covariance_delta", {"delta_coeff": [_pairs(row) for row in cov_out.delta_coeff], "rows_t": [float(grid.times[grid.index_of(t)]) for t in sc.covariance_rows]})
    if "state_transfer" in wanted and sc.input_kind != "vacuum":
        ops += ["pgstate.make_state", "pgstate.transfer_state"]
        state = pgstate.make_state(xi, cov, sc.tol)
        res = pgstate.transfer_state(g, state)
        o = res.output_state
        bundle.json("state_transfer", {
            "grid": {"t_min": grid.t_min, "t_max": grid.t_max, "dt": grid.dt, "n": grid.n},
            "input_norm": state.norm_value,
            "output_norm": o.norm_value,
            "tolerance": sc.tol,
            "output_certified": bool(o.certified),
            "xi_out_minus": [_pairs(o.xi.xi_minus[:, j, :]) for j in range(o.xi.n_ch)],
            "xi_out_plus": [_pairs(o.xi.xi_plus[:, j, :]) for j in range(o.xi.n_ch)],
            "R_out_delta": [_pairs(row) for row in o.cov.delta_coeff],
        })
    if "beamsplitter" in wanted and sc.params is not None and len(sc.pulses) == 2:
        eta = float(sc.document["system"].get("eta", abs(sc.params.S_minus[0, 0]) ** 2))
        ops.append("pgstate.beamsplitter_coefficients")
        bs = pgstate.beamsplitter_coefficients(eta, sc.pulses[0], sc.pulses[1], grid)
        bundle.json("beamsplitter", {
            "eta": bs.eta,
            "terms": [{"coeff": t.coeff, "arms": list(t.arms), "pulses": list(t.pulses)} for t in bs.terms],
            "overlap": [bs.overlap.real, bs.overlap.imag],
            "one_in_each_amplitude": float(np.real(bs.one_in_each_amplitude())),
            "coincidence_probability": bs.coincidence_probability(),
        })
    manifest = {
        "scenario": sc.name,
        "package_version": __version__,
        "operations": sorted(set(ops)),
        "grid": {"t_min": grid.t_min, "t_max": grid.t_max, "dt": grid.dt, "n": grid.n},
        "format": fmt,
        "files": sorted(bundle.files) + ["manifest.json"],
    }
    bundle.json("manifest", manifest)
    return manifest


def shaper_target():
    """Target pulse of the built-in shaper example as a scenario pulse spec."""
    return {"family": "custom-rational", "coeffs": [[c.real, c.imag] for c in golden.SHAPER_COEFFS], "rates": [[r.real, r.imag] for r in map(complex, golden.SHAPER_RATES)]}
