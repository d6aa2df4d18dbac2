"""Declarative scenarios: load a TOML file, build operators and states, run analyses.

The file grammar is documented in ``docs/scenario_format.md``.  Running a
scenario returns plain-dict records (one per analysis and state point) which
``write_outputs`` turns into a text report, a JSON-lines file and CSV time
series.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import fock, gamma, linalg, metric as metric_mod, uncertainty
from .errors import NumericalGuard
from .expr import Evaluator, ExpressionError, parse_complex

TOP_LEVEL = {"name", "description", "seed", "space", "operators", "state", "metric", "product",
             "analysis", "tolerances"}
SPACE_KINDS = {"fock", "explicit"}
STATE_KINDS = {"coherent", "bi_coherent", "vector", "eigenvector", "random"}
METRIC_KINDS = {"from_hamiltonian", "explicit", "transform"}
PRODUCT_KINDS = {"standard", "weighted"}
ANALYSIS_FIELDS = {
    "ur_report": ("A", "B"),
    "saturation": ("A", "B"),
    "triple": ("A", "B", "C"),
    "gamma_orbit": ("H", "X", "A", "B"),
    "symmetry_check": ("H", "X"),
}
DEFAULT_TOLERANCES = {
    "saturation": uncertainty.SATURATION_TOL,
    "symmetry": gamma.SYMMETRY_TOL,
    "degeneracy": linalg.DEGENERACY_TOL,
}
DEFAULT_SEED = 0


class ScenarioError(ValueError):
    """The scenario file does not match the schema; ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class Scenario:
    name: str
    description: str
    seed: int
    space: dict
    operators: dict
    state: dict
    metric: dict | None
    product: str
    analyses: list
    tolerances: dict
    path: str | None = None


def _require(table, key, where):
    if key not in table:
        raise ScenarioError(f"{where}.{key}" if where else key, "missing required field")
    return table[key]


def _check_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ScenarioError(f"{where}.{key}" if where else key, "unknown field")


def parse_scenario(data, path=None):
    """Validate a decoded TOML document and return a Scenario."""
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "scenario must be a table")
    _check_keys(data, TOP_LEVEL, "")
    name = _require(data, "name", "")
    if not isinstance(name, str) or not name or any(ch in name for ch in "/\\ "):
        raise ScenarioError("name", "must be a non-empty string without spaces or slashes")

    seed = data.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or seed < 0:
        raise ScenarioError("seed", "must be a non-negative integer")

    space = _require(data, "space", "")
    _check_keys(space, {"kind", "N", "dim", "transform", "theta"}, "space")
    kind = _require(space, "kind", "space")
    if kind not in SPACE_KINDS:
        raise ScenarioError("space.kind", f"must be one of {sorted(SPACE_KINDS)}")
    if kind == "fock":
        n = space.get("N", fock.DEFAULT_N)
        if not isinstance(n, int) or n < 2:
            raise ScenarioError("space.N", "must be an integer >= 2")
        if space.get("transform", "none") not in ("none", "identity", "canonical"):
            raise ScenarioError("space.transform", "must be 'none', 'identity' or 'canonical'")
    else:
        dim = _require(space, "dim", "space")
        if not isinstance(dim, int) or dim < 1:
            raise ScenarioError("space.dim", "must be a positive integer")
        if "transform" in space:
            raise ScenarioError("space.transform", "only available for fock spaces")

    operators = data.get("operators", {})
    if not isinstance(operators, dict):
        raise ScenarioError("operators", "must be a table")

    state = _require(data, "state", "")
    _check_keys(state, {"kind", "z", "re", "im", "vector", "of", "index"}, "state")
    skind = _require(state, "kind", "state")
    if skind not in STATE_KINDS:
        raise ScenarioError("state.kind", f"must be one of {sorted(STATE_KINDS)}")
    if skind in ("coherent", "bi_coherent"):
        if kind != "fock":
            raise ScenarioError("state.kind", f"{skind} states need a fock space")
        if "z" not in state and not ("re" in state and "im" in state):
            raise ScenarioError("state.z", "give z, or both re and im grids")
    if skind == "bi_coherent" and space.get("transform", "none") == "none":
        raise ScenarioError("space.transform", "bi_coherent states need a transform")
    if skind == "vector":
        _require(state, "vector", "state")
    if skind == "eigenvector":
        _require(state, "of", "state")

    met = data.get("metric")
    if met is not None:
        _check_keys(met, {"kind", "H", "S"}, "metric")
        mkind = _require(met, "kind", "metric")
        if mkind not in METRIC_KINDS:
            raise ScenarioError("metric.kind", f"must be one of {sorted(METRIC_KINDS)}")
        if mkind == "from_hamiltonian":
            _require(met, "H", "metric")
        if mkind == "explicit":
            _require(met, "S", "metric")
        if mkind == "transform" and space.get("transform", "none") == "none":
            raise ScenarioError("metric.kind", "transform metric needs space.transform")

    product = data.get("product", {"kind": "standard"})
    if isinstance(product, str):
        product = {"kind": product}
    if not isinstance(product, dict):
        raise ScenarioError("product", "must be a table or a product name")
    _check_keys(product, {"kind"}, "product")
    pkind = product.get("kind", "standard")
    if pkind not in PRODUCT_KINDS:
        raise ScenarioError("product.kind", f"must be one of {sorted(PRODUCT_KINDS)}")
    if pkind == "weighted" and met is None:
        raise ScenarioError("product.kind", "weighted product needs a [metric] section")

    analyses = _require(data, "analysis", "")
    if not isinstance(analyses, list) or not analyses:
        raise ScenarioError("analysis", "need at least one [[analysis]] entry")
    ids = set()
    for i, an in enumerate(analyses):
        where = f"analysis[{i}]"
        akind = _require(an, "kind", where)
        if akind not in ANALYSIS_FIELDS:
            raise ScenarioError(f"{where}.kind", f"must be one of {sorted(ANALYSIS_FIELDS)}")
        _check_keys(an, {"kind", "id", "expect", "times", "product", *ANALYSIS_FIELDS[akind]}, where)
        if an.get("product", pkind) not in PRODUCT_KINDS:
            raise ScenarioError(f"{where}.product", f"must be one of {sorted(PRODUCT_KINDS)}")
        if an.get("product") == "weighted" and met is None:
            raise ScenarioError(f"{where}.product", "weighted product needs a [metric] section")
        for f in ANALYSIS_FIELDS[akind]:
            _require(an, f, where)
        if akind == "gamma_orbit":
            _require(an, "times", where)
        an.setdefault("id", f"{i}_{akind}")
        if an["id"] in ids:
            raise ScenarioError(f"{where}.id", "duplicate analysis id")
        ids.add(an["id"])
        expect = an.setdefault("expect", [])
        if not isinstance(expect, list) or not all(isinstance(e, str) for e in expect):
            raise ScenarioError(f"{where}.expect", "must be a list of expression strings")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in data.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ScenarioError(f"tolerances.{key}", "unknown tolerance")
        if not isinstance(value, (int, float)) or value <= 0:
            raise ScenarioError(f"tolerances.{key}", "must be a positive number")
        tolerances[key] = float(value)

    return Scenario(
        name=name,
        description=data.get("description", ""),
        seed=seed,
        space=space,
        operators=operators,
        state=state,
        metric=met,
        product=pkind,
        analyses=analyses,
        tolerances=tolerances,
        path=None if path is None else str(path),
    )


def load_scenario(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<file>", f"invalid TOML: {exc}") from None
    return parse_scenario(data, path)


def bundled_dir():
    return resources.files("nhur") / "scenarios"


def list_scenarios(custom_dir=None):
    """Map scenario name -> (description, path) for bundled files plus ``custom_dir``."""
    catalog = {}
    sources = [bundled_dir()]
    if custom_dir is not None:
        sources.append(Path(custom_dir))
    for src in sources:
        for entry in sorted(src.iterdir(), key=lambda p: p.name):
            if not entry.name.endswith(".toml"):
                continue
            scn = load_scenario(entry)
            catalog[scn.name] = (scn.description, str(entry))
    return catalog


def resolve_scenario_path(name_or_path, custom_dir=None):
    p = Path(name_or_path)
    if p.exists():
        return p
    catalog = list_scenarios(custom_dir)
    if name_or_path in catalog:
        return Path(catalog[name_or_path][1])
    raise ScenarioError("<file>", f"no scenario file or bundled scenario named {name_or_path!r}")


# --------------------------------------------------------------------------- execution


class Context:
    """Lazy name resolution for operators, the metric and the random source."""

    METRIC_NAMES = ("S", "S_inv", "S_half", "S_half_inv")

    def __init__(self, scn, seed, truncation=None):
        self.scn = scn
        self.rng = np.random.default_rng(seed)
        self.values = {"pi": math.pi, "i": 1j}
        self._pending = []
        self._metric = None
        self.transform = None
        space = scn.space
        if space["kind"] == "fock":
            self.N = truncation if truncation is not None else space.get("N", fock.DEFAULT_N)
            if self.N < 2:
                raise ScenarioError("space.N", "truncation must be >= 2")
            c, cd = fock.ladder(self.N)
            x0, p0 = fock.position_momentum(self.N)
            self.values.update(c=c, cdag=cd, x0=x0, p0=p0, n=fock.number_operator(self.N))
            tkind = space.get("transform", "none")
            if tkind != "none":
                if tkind == "identity":
                    self.transform = fock.identity_transform(self.N)
                else:
                    self.transform = fock.canonical_transform(
                        self.N, space.get("theta", fock.CANONICAL_THETA)
                    )
                a, b = fock.pseudo_boson_pair(self.transform)
                xx, pp = fock.xp_pair(a, b)
                self.values.update(R=self.transform.R, R_inv=self.transform.R_inv, a=a, b=b, X=xx, P=pp)
        else:
            self.N = space["dim"]
        self.values["I"] = np.eye(self.N, dtype=complex)
        self.evaluate = Evaluator(self.resolve, self._functions())

    def _functions(self):
        def sharp(x):
            return metric_mod.sharp_adjoint(self.metric(), x)

        return {
            "adjoint": linalg.adjoint,
            "dag": linalg.adjoint,
            "sharp": sharp,
            "good_observable": lambda b0: metric_mod.good_observable(self.metric(), b0),
            "partner": lambda h: metric_mod.hermitian_partner(self.metric(), h),
            "comm": linalg.commutator,
            "anti": linalg.anticommutator,
            "expm": linalg.mat_exp,
            "inv": np.linalg.inv,
            "rand_op": lambda: linalg.random_operator(self.rng, self.N),
            "rand_herm": lambda: linalg.random_hermitian(self.rng, self.N),
            "abs": abs,
            "sqrt": np.sqrt,
            "real": np.real,
            "imag": np.imag,
            "conj": np.conj,
            "max": max,
            "min": min,
            "norm": lambda x: float(np.linalg.norm(x)),
        }

    def resolve(self, name):
        if name in self.values:
            return self.values[name]
        if name in self.METRIC_NAMES:
            m = self.metric()
            return {"S": m.S, "S_inv": m.S_inv, "S_half": m.S_half, "S_half_inv": m.S_half_inv}[name]
        if name not in self.scn.operators:
            raise ExpressionError(f"unknown name {name!r}")
        if name in self._pending:
            cycle = " -> ".join(self._pending + [name])
            raise ScenarioError(f"operators.{name}", f"circular definition ({cycle})")
        self._pending.append(name)
        try:
            self.values[name] = self.operator(self.scn.operators[name], f"operators.{name}")
        finally:
            self._pending.pop()
        return self.values[name]

    def operator(self, spec, where):
        try:
            if isinstance(spec, list):
                value = np.array([[parse_complex(v) for v in row] for row in spec], dtype=complex)
            else:
                value = self.evaluate(spec)
            value = linalg.as_operator(value)
        except ScenarioError:
            raise
        except (ExpressionError, ValueError, TypeError) as exc:
            raise ScenarioError(where, str(exc)) from None
        if value.shape[0] != self.N:
            raise ScenarioError(where, f"operator has dimension {value.shape[0]}, space has {self.N}")
        return value

    def metric(self):
        if self._metric is None:
            spec = self.scn.metric
            if spec is None:
                raise ScenarioError("metric", "an expression needs S but no [metric] section is given")
            kind = spec["kind"]
            if kind == "from_hamiltonian":
                h = self.operator(spec["H"], "metric.H")
                self._metric = metric_mod.metric_from_hamiltonian(h, self.scn.tolerances["degeneracy"])
            elif kind == "explicit":
                s = self.operator(spec["S"], "metric.S")
                if not linalg.is_hermitian(s):
                    raise ScenarioError("metric.S", "metric must be Hermitian")
                self._metric = metric_mod.make_metric(s)
            else:
                self._metric = self.transform.metric()
        return self._metric

    def product(self, kind=None):
        if (kind or self.scn.product) == "weighted":
            return metric_mod.weighted(self.metric())
        return metric_mod.STANDARD

    def states(self):
        """List of (label, vector) pairs; vectors are normalized later, per analysis product."""
        st = self.scn.state
        kind = st["kind"]
        points = []
        if kind in ("coherent", "bi_coherent"):
            if "z" in st:
                zs = [parse_complex(st["z"])]
            else:
                zs = [complex(x, y) for x in st["re"] for y in st["im"]]
            for z in zs:
                if kind == "coherent":
                    vec = fock.coherent_state(z, self.N)
                else:
                    vec, _ = fock.bi_coherent(z, self.transform)
                points.append(({"z": z, "x": z.real, "y": z.imag}, vec))
        elif kind == "vector":
            try:
                vec = np.array([parse_complex(v) for v in st["vector"]], dtype=complex)
            except ExpressionError as exc:
                raise ScenarioError("state.vector", str(exc)) from None
            if vec.size != self.N:
                raise ScenarioError("state.vector", f"length {vec.size} does not match dimension {self.N}")
            points.append(({}, vec))
        elif kind == "eigenvector":
            op = self.operator(st["of"], "state.of")
            index = st.get("index", 0)
            w, v = np.linalg.eig(op)
            order = np.lexsort((w.imag, w.real))
            if not isinstance(index, int) or not 0 <= index < self.N:
                raise ScenarioError("state.index", f"must be an integer in [0, {self.N})")
            k = order[index]
            points.append(({"eigenvalue": complex(w[k])}, v[:, k]))
        else:
            points.append(({}, linalg.random_state(self.rng, self.N)))

        if any(np.linalg.norm(vec) == 0 for _, vec in points):
            raise ScenarioError("state", "state vector is zero")
        return points


def _times(spec, where):
    if isinstance(spec, dict):
        _check_keys(spec, {"start", "stop", "num"}, where)
        num = spec.get("num", 11)
        if not isinstance(num, int) or num < 1:
            raise ScenarioError(f"{where}.num", "must be a positive integer")
        return [float(t) for t in np.linspace(spec.get("start", 0.0), _require(spec, "stop", where), num)]
    if isinstance(spec, list) and spec and all(isinstance(t, (int, float)) for t in spec):
        return [float(t) for t in spec]
    raise ScenarioError(where, "times must be a list of numbers or {start, stop, num}")


def _run_analysis(ctx, an, vec, index):
    """Return (fields, csv_rows) for one analysis on one state.

    The state is rescaled to unit norm in the analysis' scalar product.
    """
    where = f"analysis[{index}]"
    ops = {f: ctx.operator(an[f], f"{where}.{f}") for f in ANALYSIS_FIELDS[an["kind"]]}
    prod = ctx.product(an.get("product"))
    phi = vec / prod.norm(vec)
    tol = ctx.scn.tolerances
    kind = an["kind"]
    rows = None
    if kind == "ur_report":
        rep = uncertainty.ur_report(ops["A"], ops["B"], phi, prod)
        fields = rep.as_dict()
        fields["lemma1"] = uncertainty.lemma1_check(rep)
        sat = uncertainty.saturation_test(ops["A"], ops["B"], phi, prod, tol["saturation"])
        fields["saturated23"] = sat.saturated
        fields["saturated210"] = sat.saturated210
    elif kind == "saturation":
        fields = uncertainty.saturation_test(ops["A"], ops["B"], phi, prod, tol["saturation"]).as_dict()
    elif kind == "triple":
        rep = uncertainty.triple_report(ops["A"], ops["B"], ops["C"], phi, prod)
        fields = rep.as_dict()
        fields["det_form"] = rep.det_form
    elif kind == "gamma_orbit":
        times = _times(an["times"], f"{where}.times")
        rows = []
        for t in times:
            flow = gamma.GammaFlow.build(ops["H"], t)
            drift = float(np.linalg.norm(flow(ops["X"]) - ops["X"]))
            ga, gb = flow(ops["A"]), flow(ops["B"])
            rep = uncertainty.ur_report(ga, gb, phi, prod)
            sat = uncertainty.saturation_test(ga, gb, phi, prod, tol["saturation"])
            rows.append([t, drift, rep.delta_product, rep.bound23, rep.bound210, int(sat.saturated)])
        fields = {
            "n_times": len(rows),
            "max_drift": max(r[1] for r in rows),
            "all_saturated": all(r[5] for r in rows),
            "min_slack23": min(r[2] - r[3] for r in rows),
        }
    else:
        h = ops["H"]
        met = ctx.metric() if ctx.scn.metric is not None else metric_mod.metric_from_hamiltonian(
            h, tol["degeneracy"]
        )
        rep = gamma.is_gamma_symmetry(h, met, ops["X"], tol["symmetry"])
        fields = {"verdict": rep.verdict, "agree": rep.agree, "threshold": rep.threshold}
        for k, v in rep.residuals.items():
            fields[f"residual_{k}"] = v
    return fields, rows


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise NumericalGuard("non-finite value in report")
        return v
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()] if v.ndim else _jsonable(v.item())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if v is None or isinstance(v, str):
        return v
    raise TypeError(f"cannot serialize {type(v).__name__}")


@dataclass
class RunResult:
    scenario: Scenario
    records: list
    csv_tables: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r["passed"] for r in self.records)


def run_scenario(scn, seed=None, tol=None, truncation=None):
    """Execute every analysis at every state point; no files are written."""
    if tol is not None:
        scn = replace(scn, tolerances={**scn.tolerances, "saturation": float(tol)})
    if truncation is not None and scn.space["kind"] != "fock":
        raise ScenarioError("--truncation", "only applies to fock spaces")
    seed = scn.seed if seed is None else seed
    ctx = Context(scn, seed, truncation)
    points = ctx.states()
    meta = {
        "scenario": scn.name,
        "seed": seed,
        "truncation": ctx.N,
        "tolerances": dict(sorted(scn.tolerances.items())),
        "product": scn.product,
    }
    records, tables = [], {}
    for idx, an in enumerate(scn.analyses):
        for p, (label, phi) in enumerate(points):
            fields, rows = _run_analysis(ctx, an, phi, idx)
            scope = {**label, **fields}
            checker = Evaluator(lambda n, s=scope: _lookup(s, ctx, n), ctx._functions())
            verdicts = []
            for expr in an["expect"]:
                try:
                    ok = bool(checker(expr))
                except (ExpressionError, TypeError, KeyError, IndexError) as exc:
                    raise ScenarioError(f"analysis[{idx}].expect", f"{expr!r}: {exc}") from None
                verdicts.append({"expect": expr, "passed": ok})
            record = {
                **meta,
                "product": an.get("product", scn.product),
                "analysis": an["id"],
                "kind": an["kind"],
                "point": p,
                "label": label,
                "result": fields,
                "expectations": verdicts,
                "passed": all(v["passed"] for v in verdicts),
            }
            records.append(_jsonable(record))
            if rows is not None:
                key = an["id"] if len(points) == 1 else f"{an['id']}_p{p}"
                tables[key] = rows
    return RunResult(scn, records, tables)


def _lookup(scope, ctx, name):
    if name in scope:
        return scope[name]
    return ctx.resolve(name)


CSV_HEADER = ["t", "drift", "delta_product", "bound23", "bound210", "saturated"]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return f"{v['re']:.12g}{v['im']:+.12g}i"
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def render_text(result):
    scn = result.scenario
    first = result.records[0]
    out = io.StringIO()
    out.write(f"scenario: {scn.name}\n")
    if scn.description:
        out.write(f"description: {scn.description}\n")
    out.write(f"seed: {first['seed']}  truncation/dim: {first['truncation']}  product: {first['product']}\n")
    out.write("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in first["tolerances"].items()) + "\n")
    for rec in result.records:
        label = ", ".join(f"{k}={_fmt(v)}" for k, v in rec["label"].items())
        out.write(f"\n[{rec['analysis']}] {rec['kind']} point {rec['point']}" + (f" ({label})" if label else "") + "\n")
        for k, v in rec["result"].items():
            if k == "gram3":
                continue
            out.write(f"  {k:<22} {_fmt(v)}\n")
        for v in rec["expectations"]:
            out.write(f"  {'PASS' if v['passed'] else 'FAIL'}  {v['expect']}\n")
    n_exp = sum(len(r["expectations"]) for r in result.records)
    n_fail = sum(not v["passed"] for r in result.records for v in r["expectations"])
    out.write(f"\n{n_exp - n_fail}/{n_exp} expectations passed: {'OK' if result.passed else 'FAILED'}\n")
    return out.getvalue()


def write_outputs(result, out_dir):
    """Write <name>.txt, <name>.jsonl and one <name>__<analysis>.csv per gamma orbit."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result.scenario.name
    written = []
    txt = out_dir / f"{name}.txt"
    txt.write_text(render_text(result), encoding="utf-8")
    written.append(txt)
    jl = out_dir / f"{name}.jsonl"
    with open(jl, "w", encoding="utf-8", newline="\n") as fh:
        for rec in result.records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    written.append(jl)
    for key, rows in result.csv_tables.items():
        path = out_dir / f"{name}__{key}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row in rows:
                w.writerow([repr(float(x)) if i < 5 else int(x) for i, x in enumerate(row)])
        written.append(path)
    return written
