"""Experiment registry, configuration and deterministic report emission."""
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .asym import (log_power_integral, main_term_positive_index, mercerian_solve,
                   prime_sum_constant, zeta_ratio)
from .dickman import delta, g_r, iterated_logs
from .errors import DomainError, NumericError, ResourceError, UsageError
from .regvar import SlowlyVaryingSpec, ell_tilde, estimate_dehaan_index, estimate_rv_index, g_of_x
from .sieve import AdditiveSpec, Functional, Mode, build_factor_table, summatory_scan

MAX_LIMIT = 10**9
SIX_OVER_PI2 = 6.0 / math.pi**2


@dataclass
class ExperimentConfig:
    id: str
    limit: int
    checkpoints: object = ("geometric", 10)
    rho: Optional[float] = None
    alpha: float = 1.0
    L: SlowlyVaryingSpec = field(default_factory=SlowlyVaryingSpec.const)
    lambdas: Tuple[float, ...] = (2.0, 4.0)
    r: int = 1
    out: Optional[str] = None
    format: str = "csv"
    threads: int = 1

    def __post_init__(self):
        self.id = resolve_id(self.id)
        self.limit = int(self.limit)
        if self.limit < 2:
            raise UsageError("limit must be at least 2")
        if self.limit > MAX_LIMIT:
            raise ResourceError(f"limit {self.limit} above the resource budget {MAX_LIMIT}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if isinstance(self.L, str):
            self.L = SlowlyVaryingSpec.parse(self.L)
        if isinstance(self.checkpoints, str):
            self.checkpoints = parse_checkpoints(self.checkpoints)
        if self.threads < 1:
            raise UsageError("threads must be positive")

    @classmethod
    def from_mapping(cls, values: Dict[str, str]) -> "ExperimentConfig":
        """Build from string values, as found in a key=value file or on the command line."""
        conv = {"limit": lambda s: int(float(s)), "rho": float, "alpha": float, "threads": int,
                "r": int, "lambdas": lambda s: tuple(float(v) for v in s.split(","))}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key == "experiment":
                key = "id"
            if key not in cls.__dataclass_fields__:
                raise UsageError(f"unknown config key {key!r}")
            try:
                kwargs[key] = conv[key](raw) if key in conv else raw
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {raw!r}") from exc
        if "id" not in kwargs or "limit" not in kwargs:
            raise UsageError("config needs at least experiment and limit")
        try:
            return cls(**kwargs)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc


def parse_checkpoints(text: str):
    text = text.strip()
    if text.startswith("geometric"):
        _, _, k = text.partition(":")
        try:
            k = int(k) if k else 10
        except ValueError as exc:
            raise UsageError(f"bad checkpoint spec {text!r}") from exc
        if k < 1:
            raise UsageError("geometric count must be positive")
        return ("geometric", k)
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad checkpoint list {text!r}") from exc


def geometric_checkpoints(limit: int, k: int = 10) -> List[int]:
    """k points limit^(i/k), i = 1..k, rounded and deduplicated."""
    pts = sorted({int(round(limit ** (i / k))) for i in range(1, k)} | {int(limit)})
    return pts


@dataclass
class ExperimentReport:
    meta: Dict[str, object]
    aux_names: List[str]
    rows: List[tuple]

    def to_csv(self) -> str:
        lines = [f"# {k}={_meta_text(v)}" for k, v in self.meta.items()]
        lines.append(",".join(["x", "empirical", "reference", "ratio"] + self.aux_names))
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        rows = []
        for row in self.rows:
            d = {"x": row[0], "empirical": row[1], "reference": row[2], "ratio": row[3]}
            if self.aux_names:
                d["aux"] = dict(zip(self.aux_names, row[4:]))
            rows.append(d)
        return json.dumps({"meta": self.meta, "rows": rows}, indent=1) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def _meta_text(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(u) if isinstance(u, (int, float)) else str(u) for u in v)
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


@dataclass(frozen=True)
class Experiment:
    id: str
    slug: str
    description: str
    formula: str
    min_x: int
    default_rho: float
    runner: Callable


_REGISTRY: Dict[str, Experiment] = {}


def _register(id, slug, description, formula, min_x=3, default_rho=0.0):
    def deco(fn):
        _REGISTRY[id] = Experiment(id, slug, description, formula, min_x, default_rho, fn)
        return fn
    return deco


def resolve_id(name: str) -> str:
    key = str(name).strip()
    for exp in _REGISTRY.values():
        if key.upper() == exp.id or key.lower() == exp.slug:
            return exp.id
    raise UsageError(f"unknown experiment {name!r}")


def list_experiments(fmt: str = "text") -> str:
    exps = [_REGISTRY[k] for k in sorted(_REGISTRY, key=lambda s: int(s[1:]))]
    if fmt == "json":
        return json.dumps([{"id": e.id, "name": e.slug, "description": e.description,
                            "formula": e.formula} for e in exps], indent=1) + "\n"
    return "".join(f"{e.id}  {e.slug:<18} {e.description}\n    {e.formula}\n" for e in exps)


def _ratio(emp, ref):
    if ref is None or emp is None or ref == 0:
        return None
    return float(emp) / float(ref)


class _Context:
    def __init__(self, config: ExperimentConfig, exp: Experiment):
        self.config = config
        self.exp = exp
        self.rho = exp.default_rho if config.rho is None else float(config.rho)
        self.table = None

    def checkpoints(self, upper=None) -> List[int]:
        upper = self.config.limit if upper is None else upper
        cp = self.config.checkpoints
        if isinstance(cp, tuple) and cp[0] == "geometric":
            pts = [x for x in geometric_checkpoints(self.config.limit, cp[1]) if self.exp.min_x <= x <= upper]
            if not pts:
                raise UsageError("no geometric checkpoint inside the experiment's range")
            return pts
        pts = [int(x) for x in cp]
        if not pts or any(b <= a for a, b in zip(pts, pts[1:])):
            raise UsageError("checkpoints must be a non-empty ascending list")
        if pts[0] < self.exp.min_x or pts[-1] > upper:
            raise UsageError(f"{self.exp.id} checkpoints must lie in [{self.exp.min_x}, {upper}]")
        return pts

    def scan(self, items, cps):
        if self.table is None:
            self.table = build_factor_table(max(self.config.limit, 2), threads=self.config.threads)
        return summatory_scan(self.config.limit, items, cps, table=self.table, threads=self.config.threads)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    exp = _REGISTRY[resolve_id(config.id)]
    ctx = _Context(config, exp)
    try:
        params, aux_names, rows = exp.runner(ctx)
    except OverflowError as exc:
        raise NumericError(str(exc)) from exc
    meta = {"id": exp.id, "name": exp.slug, "version": __version__, "limit": config.limit,
            "checkpoints": _cp_text(config.checkpoints)}
    meta.update(params)
    return ExperimentReport(meta, aux_names, rows)


def _cp_text(cp):
    if isinstance(cp, tuple) and cp and cp[0] == "geometric":
        return f"geometric:{cp[1]}"
    return ",".join(str(int(x)) for x in cp)


def _weight_spec(ctx, mode=Mode.SMALL_F):
    return AdditiveSpec(ctx.rho, ctx.config.L, mode)


@_register("E1", "abelian-rho-pos", "sum of f (and F) for h(p)=p^rho L(p), rho>0, against the Abelian main term",
           "sum_{n<=x} f(n) ~ zeta(rho+1)/(rho+1) * x^(rho+1) L(x) / log x", default_rho=1.0)
def _e1(ctx):
    if not ctx.rho > 0:
        raise UsageError("E1 needs rho > 0")
    cps = ctx.checkpoints()
    f, F = _weight_spec(ctx), _weight_spec(ctx, Mode.BIG_F)
    sf, sF = ctx.scan([f, F], cps)
    rows = []
    for x, a, b in zip(cps, sf.partials, sF.partials):
        ref = main_term_positive_index(x, ctx.rho, ctx.config.L)
        rows.append((x, a, ref, _ratio(a, ref), b, _ratio(b, ref)))
    return ({"rho": ctx.rho, "L": str(ctx.config.L), "reference_form": "zeta(rho+1)/(rho+1) x^(rho+1) L(x)/log x"},
            ["sum_F", "ratio_F"], rows)


@_register("E2", "abelian-rho-zero", "sum over n of sum_{p|n} L(p) against x g(x)",
           "sum_{n<=x} f(n) ~ x g(x), g(x) = int_1^{x/2} [u] u^-2 L(x/u)/log(x/u) du")
def _e2(ctx):
    cps = ctx.checkpoints()
    f = AdditiveSpec(0.0, ctx.config.L, Mode.SMALL_F)
    (s,) = ctx.scan([f], cps)
    rows = []
    for x, a in zip(cps, s.partials):
        ref = x * g_of_x(x, ctx.config.L)
        rows.append((x, a, ref, _ratio(a, ref)))
    return {"rho": 0.0, "L": str(ctx.config.L), "reference_form": "x*g(x) by quadrature"}, [], rows


@_register("E3", "g-alpha", "sum of G_alpha(n) = sum_{p|n} log^alpha p against the exact log-power integral",
           "sum_{n<=x} G_alpha(n) = x int_2^x t^-1 (log t)^(alpha-1) dt + O(x log^(alpha-1) x) (alpha>0)")
def _e3(ctx):
    cps = ctx.checkpoints()
    alpha = float(ctx.config.alpha)
    spec = AdditiveSpec(0.0, SlowlyVaryingSpec.logpow(alpha), Mode.SMALL_F, f"G_{alpha!r}")
    (s,) = ctx.scan([spec], cps)
    rows = []
    for x, a in zip(cps, s.partials):
        ref = x * log_power_integral(x, alpha)
        rows.append((x, a, ref, _ratio(a, ref)))
    return {"alpha": alpha, "reference_form": "exact integral x*int_2^x t^-1 (log t)^(alpha-1) dt"}, [], rows


@_register("E4", "big-f-vs-f", "F minus f: against C x for rho=0, ratio sum f / sum F for rho>0",
           "rho=0: sum (F-f) ~ C x, C = sum_p L(p)/(p(p-1)); rho>0: sum f ~ sum F", min_x=4)
def _e4(ctx):
    cps = ctx.checkpoints()
    f, F = _weight_spec(ctx), _weight_spec(ctx, Mode.BIG_F)
    sf, sF = ctx.scan([f, F], cps)
    rows = []
    if ctx.rho == 0:
        C = prime_sum_constant(ctx.config.L)
        for x, a, b in zip(cps, sf.partials, sF.partials):
            d = b - a
            rows.append((x, d, C * x, _ratio(d, C * x), d / x))
        return ({"rho": 0.0, "L": str(ctx.config.L), "C": C, "reference_form": "C*x"}, ["per_x"], rows)
    for x, a, b in zip(cps, sf.partials, sF.partials):
        rows.append((x, a, b, _ratio(a, b)))
    return {"rho": ctx.rho, "L": str(ctx.config.L), "reference_form": "sum F"}, [], rows


@_register("E5", "mercerian-recovery", "recover the index rho from C_hat = S(x) log x / (x h(x))",
           "zeta(rho+1)/(rho+1) = C has a unique positive solution rho", default_rho=1.0)
def _e5(ctx):
    if not ctx.rho > 0:
        raise UsageError("E5 needs a secret rho > 0")
    cps = ctx.checkpoints()
    L = ctx.config.L
    (s,) = ctx.scan([_weight_spec(ctx)], cps)
    ref = zeta_ratio(ctx.rho)
    rows = []
    for x, S in zip(cps, s.partials):
        hx = x ** ctx.rho * L.extended(x)
        c_hat = S * math.log(x) / (x * hx)
        try:
            rho_hat = mercerian_solve(c_hat).rho
            envelope = hx / (x ** rho_hat * L.extended(x))
        except (DomainError, NumericError):
            rho_hat = envelope = None
        rows.append((x, c_hat, ref, _ratio(c_hat, ref), rho_hat, envelope))
    return ({"rho": ctx.rho, "L": str(L), "reference_form": "zeta(rho+1)/(rho+1)"},
            ["rho_hat", "h_over_x_rho_hat_L"], rows)


@_register("E6", "recip-p", "sum of 1/P(n) against x delta(x)",
           "sum_{n<=x} 1/P(n) = x delta(x) (1 + O(sqrt(log_2 x / log x)))")
def _e6(ctx):
    cps = ctx.checkpoints()
    (s,) = ctx.scan([Functional.RECIP_P], cps)
    rows = []
    for x, a in zip(cps, s.partials):
        ref = x * delta(x).value
        rows.append((x, a, ref, _ratio(a, ref)))
    return {"reference_form": "x*delta(x), delta by quadrature over rho"}, [], rows


@_register("E7", "recip-beta-b", "sum over 2<=n<=x of 1/beta(n) - 1/B(n), with its index estimate",
           "sum (1/beta - 1/B) = x exp(-2 sqrt(log x log_2 x) (1 + g_r(x)))", min_x=16)
def _e7(ctx):
    cps = ctx.checkpoints()
    r = int(ctx.config.r)
    if r < 0:
        raise UsageError("r must be non-negative")
    (s,) = ctx.scan([Functional.RECIP_BETA_DIFF], cps)
    rows, seen = [], []
    for x, a in zip(cps, s.partials):
        l1, l2, _ = iterated_logs(x)
        ref = math.exp(l1 - 2.0 * math.sqrt(l1 * l2) * (1.0 + g_r(x, r)))
        seen.append((x, a))
        try:
            idx = estimate_rv_index(seen)
        except DomainError:
            idx = None
        rows.append((x, a, ref, _ratio(a, ref), idx))
    return {"r": r, "reference_form": "exp(log x - 2 sqrt(log x log_2 x)(1 + g_r(x)))"}, ["rv_index"], rows


@_register("E8", "over-p", "ratios over sum 1/P: (Omega-omega)/P, omega/P and mu^2/P",
           "(Omega-omega)/P ratio -> sum_p 1/(p^2-p); omega/P ratio ~ sqrt(2 log x / log_2 x); mu^2/P ratio -> 6/pi^2",
           min_x=4)
def _e8(ctx):
    cps = ctx.checkpoints()
    sp, sd, so, sm = ctx.scan([Functional.RECIP_P, Functional.OMEGA_DIFF_OVER_P,
                               Functional.OMEGA_OVER_P, Functional.MU2_OVER_P], cps)
    C = prime_sum_constant(SlowlyVaryingSpec.const(1))
    rows = []
    for x, p, d, o, m in zip(cps, sp.partials, sd.partials, so.partials, sm.partials):
        om_ref = math.sqrt(2.0 * math.log(x) / math.log(math.log(x)))
        rows.append((x, d / p, C, _ratio(d / p, C), o / p, om_ref, _ratio(o / p, om_ref),
                     m / p, SIX_OVER_PI2, _ratio(m / p, SIX_OVER_PI2)))
    return ({"C": C, "reference_form": "C = sum_p 1/(p^2-p)"},
            ["omega_ratio", "omega_reference", "omega_ratio_over_reference",
             "mu2_ratio", "mu2_reference", "mu2_ratio_over_reference"], rows)


@_register("E9", "dehaan-probe", "de Haan index of A(x) = (1/x) sum_{n<=x} sum_{p|n} L(p) against ltilde = L/log",
           "(A(lambda x) - A(x)) / ltilde(x) -> log lambda, ltilde(x) = L(x)/log x")
def _e9(ctx):
    lambdas = [float(v) for v in ctx.config.lambdas]
    if not lambdas or any(l <= 1 for l in lambdas):
        raise UsageError("E9 lambdas must exceed 1")
    top = int(ctx.config.limit // max(lambdas))
    xs = ctx.checkpoints(upper=top)
    needed = sorted(set(xs) | {int(round(l * x)) for l in lambdas for x in xs})
    if needed[-1] > ctx.config.limit:
        raise UsageError("lambda * x exceeds the limit")
    L = ctx.config.L
    (s,) = ctx.scan([AdditiveSpec(0.0, L, Mode.SMALL_F)], needed)
    A = {x: v / x for x, v in zip(needed, s.partials)}
    ell = ell_tilde(L)
    rows = []
    for x in xs:
        # lambda x is rounded to an integer, so use the realized ratio
        est = estimate_dehaan_index(lambda t: A[int(round(t))], ell, [x],
                                    [int(round(l * x)) / x for l in lambdas])
        qs = [q for _, _, q in est.samples]
        rows.append((x, est.c_hat, 1.0, _ratio(est.c_hat, 1.0)) + tuple(qs))
    return ({"L": str(L), "lambdas": lambdas, "reference_form": "c = 1 against ltilde(x) = L(x)/log x"},
            [f"q_lambda_{_fmt(l)}" for l in lambdas], rows)


def write_report(report: ExperimentReport, fmt: str, path=None) -> str:
    text = report.render(fmt)
    if path:
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
    return text


def read_report_rows(path) -> List[str]:
    """Data rows of a report file (header included for CSV) as canonical strings."""
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read report {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            rows = doc["rows"]
            return [json.dumps(r, sort_keys=True) for r in rows]
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{path} is not a JSON report") from exc
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    if not lines or not lines[0].startswith("x,empirical,reference,ratio"):
        raise UsageError(f"{path} is not a CSV report")
    return lines


def compare_reports(path_a, path_b):
    """None when the data rows agree, else (row index, row a, row b)."""
    a, b = read_report_rows(path_a), read_report_rows(path_b)
    for i in range(max(len(a), len(b))):
        ra = a[i] if i < len(a) else "<missing>"
        rb = b[i] if i < len(b) else "<missing>"
        if ra != rb:
            return i, ra, rb
    return None
