"""Alpha sweeps producing tradeoff curves, and the aggregated verification suite."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mplab import gallery
from mplab.errors import DomainError, MplabError, StructuralError
from mplab.mechanisms import (accuracy_mc, audit_privacy, build_exponential, build_ultrametric_relaxed,
                              exact_accuracy, exponential_upper_bound, verify_relaxed_lemmas)
from mplab.metric import FiniteBimetricSpace, validate
from mplab.packing import DEFAULT_CAP, verify_packing_facts
from mplab.scales import diametric_scale, doubling_scale, entropic_scale, outer_scale, verify_scale_relations

CSV_COLUMNS = (
    "alpha", "s_entropic", "s_entropic_2a", "s_diametric_2a", "s_doubling", "s_outer", "lower_bound",
    "acc_exp_exact", "acc_exp_mc", "acc_exp_stderr", "acc_ultra_exact", "acc_ultra_mc", "acc_ultra_stderr",
    "audit_slope_exp", "audit_slope_ultra",
)
MECH_KINDS = ("exponential", "ultrametric_relaxed")


class SweepError(MplabError):
    """A module error raised while computing one alpha row."""

    def __init__(self, alpha, cause):
        super().__init__(f"alpha={alpha!r}: {type(cause).__name__}: {cause}")
        self.alpha = alpha
        self.cause = cause


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


def _parse(cell: str):
    return None if cell == "" else float(cell)


def alpha_grid(spec) -> list:
    """A list of alphas, or ``{"geometric": {"start", "stop", "num"}}`` inclusive of both ends."""
    if isinstance(spec, dict):
        g = spec.get("geometric")
        if g is None:
            raise StructuralError("alpha grid object needs a 'geometric' entry")
        lo, hi, num = math.log2(float(g["start"])), math.log2(float(g["stop"])), int(g["num"])
        # stepping in log2 keeps power-of-two grids exact
        alphas = [2.0 ** (lo + (hi - lo) * i / max(num - 1, 1)) for i in range(num)]
    else:
        alphas = [float(a) for a in spec]
    if not alphas or any(not (a > 0 and math.isfinite(a)) for a in alphas):
        raise DomainError("alphas must be positive and finite")
    return alphas


@dataclass
class SweepConfig:
    space: dict
    alphas: list
    mechanisms: tuple = MECH_KINDS
    trials: int = 0
    seed: int = 0
    csv_path: str | None = None
    json_path: str | None = None
    workers: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        self.alphas = alpha_grid(self.alphas)
        self.mechanisms = tuple(self.mechanisms)
        bad = set(self.mechanisms) - set(MECH_KINDS)
        if bad:
            raise DomainError(f"unknown mechanism kinds {sorted(bad)}")
        if self.trials < 0:
            raise DomainError("trials must be >= 0")
        if "gallery" not in self.space and "path" not in self.space:
            raise StructuralError("space source needs 'gallery' or 'path'")

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "SweepConfig":
        known = {"space", "alphas", "mechanisms", "trials", "seed", "csv", "json", "workers", "cap"}
        extra = set(d) - known
        if extra:
            raise StructuralError(f"unknown config keys {sorted(extra)}")
        try:
            space, alphas = d["space"], d["alphas"]
        except KeyError as exc:
            raise StructuralError(f"config is missing {exc.args[0]!r}") from None
        base = Path(base_dir) if base_dir else None

        def rel(p):
            return str(base / p) if (p and base and not Path(p).is_absolute()) else p

        if "path" in space:
            space = dict(space, path=rel(space["path"]))
        return cls(space, alphas, tuple(d.get("mechanisms", MECH_KINDS)), int(d.get("trials", 0)),
                   int(d.get("seed", 0)), rel(d.get("csv")), rel(d.get("json")), int(d.get("workers", 1)),
                   int(d.get("cap", DEFAULT_CAP)))

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise StructuralError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(d, Path(path).parent)

    def build_space(self) -> FiniteBimetricSpace:
        if "path" in self.space:
            return FiniteBimetricSpace.load(self.space["path"])
        return gallery.build(self.space["gallery"], **self.space.get("params", {}))

    def to_dict(self):
        return {"space": self.space, "alphas": self.alphas, "mechanisms": list(self.mechanisms),
                "trials": self.trials, "seed": self.seed, "csv": self.csv_path, "json": self.json_path,
                "workers": self.workers, "cap": self.cap}


@dataclass
class TradeoffCurve:
    rows: list
    meta: dict = field(default_factory=dict)

    @property
    def violations(self):
        """Rows where an audited-passing mechanism beats the lower bound."""
        out = []
        for r in self.rows:
            for kind, acc, slope in (("exp", "acc_exp_exact", "audit_slope_exp"),
                                     ("ultra", "acc_ultra_exact", "audit_slope_ultra")):
                if r[acc] is None or r[slope] is None:
                    continue
                if r[slope] <= r["alpha"] * (1 + 1e-9) and r[acc] < r["lower_bound"]:
                    out.append((r["alpha"], kind))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TradeoffCurve":
        rd = csv.reader(io.StringIO(text))
        header = tuple(next(rd))
        if header != CSV_COLUMNS:
            raise StructuralError("CSV header does not match the tradeoff schema")
        return cls([{c: _parse(v) for c, v in zip(CSV_COLUMNS, row)} for row in rd])

    def to_dict(self):
        return {"columns": list(CSV_COLUMNS), "rows": self.rows, "meta": self.meta,
                "violations": [list(v) for v in self.violations]}


def row_seed(master: int, row: int, mech: int) -> int:
    """Monte-Carlo seed of one (row, mechanism) pair, independent of run order."""
    return int(np.random.SeedSequence(master & (2**64 - 1), spawn_key=(row, mech)).generate_state(1, np.uint64)[0])


def _mech_cells(mech, space, alpha, trials, seed):
    acc = exact_accuracy(mech, space)
    audit = audit_privacy(mech, space)
    mc = se = None
    if trials > 0:
        res = accuracy_mc(mech, space, trials, seed)
        j = res.sup_input
        mc = float(res.mc_mean[j])
        se = float(res.mc_stderr[j]) if res.stderr_defined else None
    return acc.sup_error, mc, se, audit.max_slope


def compute_row(space, alpha, index, cfg: SweepConfig) -> dict:
    """One tradeoff row; Monte-Carlo cells report the mean at the worst exact input."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            s = entropic_scale(space, alpha, cfg.cap).value
            s2 = entropic_scale(space, 2 * alpha, cfg.cap).value
            d2 = diametric_scale(space, 2 * alpha).value
            row = dict.fromkeys(CSV_COLUMNS)
            row.update(alpha=alpha, s_entropic=s, s_entropic_2a=s2, s_diametric_2a=d2,
                       lower_bound=max(s2 / 8, d2 / 5))
            if space.same_metric:
                row["s_doubling"] = doubling_scale(space, alpha, cfg.cap).value
                row["s_outer"] = outer_scale(space, alpha, cfg.cap).value
            if "exponential" in cfg.mechanisms:
                m = build_exponential(space, alpha, cap=cfg.cap)
                cells = _mech_cells(m, space, alpha, cfg.trials, row_seed(cfg.seed, index, 0))
                row.update(zip(("acc_exp_exact", "acc_exp_mc", "acc_exp_stderr", "audit_slope_exp"), cells))
            if "ultrametric_relaxed" in cfg.mechanisms and space.ultrametric2:
                m = build_ultrametric_relaxed(space, alpha, cap=cfg.cap)
                cells = _mech_cells(m, space, alpha, cfg.trials, row_seed(cfg.seed, index, 1))
                row.update(zip(("acc_ultra_exact", "acc_ultra_mc", "acc_ultra_stderr", "audit_slope_ultra"), cells))
    except MplabError as exc:
        raise SweepError(alpha, exc) from exc
    return {k: (None if v is None else float(v)) for k, v in row.items()}


def _row_job(args):
    space, alpha, i, cfg = args
    return compute_row(space, alpha, i, cfg)


def run_sweep(cfg: SweepConfig, space: FiniteBimetricSpace | None = None) -> TradeoffCurve:
    """Compute one row per alpha and write the configured CSV / JSON files.

    Rows are independent, so ``workers > 1`` runs them in a process pool; the
    output is identical to a serial run.
    """
    space = cfg.build_space() if space is None else space
    rep = validate(space)
    if not rep.ok:
        raise StructuralError(f"space fails validation: {rep.violations[0].axiom}")
    jobs = [(space, a, i, cfg) for i, a in enumerate(cfg.alphas)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            rows = list(ex.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    curve = TradeoffCurve(rows, {"n_points": space.n, "same_metric": space.same_metric,
                                 "ultrametric2": space.ultrametric2, "config": cfg.to_dict()})
    if cfg.csv_path:
        Path(cfg.csv_path).write_text(curve.to_csv())
    if cfg.json_path:
        Path(cfg.json_path).write_text(json.dumps(curve.to_dict(), indent=1, sort_keys=True))
    return curve


# ---------------------------------------------------------------- verification suite

@dataclass
class SuiteEntry:
    name: str
    ok: bool
    alpha: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "ok": self.ok, "alpha": self.alpha, "detail": self.detail}


@dataclass
class SuiteReport:
    entries: list = field(default_factory=list)
    aborted: bool = False
    validation: dict | None = None

    @property
    def ok(self) -> bool:
        return not self.aborted and all(e.ok for e in self.entries)

    @property
    def failures(self):
        return [e for e in self.entries if not e.ok]

    def to_dict(self):
        return {"ok": self.ok, "aborted": self.aborted, "validation": self.validation,
                "entries": [e.to_dict() for e in self.entries]}


def _lower_bound_entries(rep, name, acc, s2, d2, alpha):
    rep.entries.append(SuiteEntry(f"{name}_lower_bound_entropic", acc >= s2 / 8, alpha,
                                  {"accuracy": acc, "bound": s2 / 8}))
    rep.entries.append(SuiteEntry(f"{name}_lower_bound_diametric", acc >= d2 / 5, alpha,
                                  {"accuracy": acc, "bound": d2 / 5}))


def run_verification_suite(space: FiniteBimetricSpace, alphas, samples: int = 30, seed: int = 0,
                           cap: int = DEFAULT_CAP) -> SuiteReport:
    """Validate, then run every applicable universal check at each alpha.

    A space that fails validation yields an aborted report carrying the
    violations; nothing else is computed.
    """
    val = validate(space)
    if not val.ok:
        return SuiteReport([], True, val.to_dict())
    rep = SuiteReport(validation=val.to_dict())
    for metric in ((1,) if space.same_metric else (1, 2)):
        facts = verify_packing_facts(space, metric, samples, seed, cap)
        rep.entries.append(SuiteEntry(f"packing_facts_rho{metric}", facts.ok, None, facts.to_dict()))
    for alpha in alpha_grid(alphas):
        rel = verify_scale_relations(space, alpha, cap=cap)
        rep.entries.append(SuiteEntry("scale_relations", rel.ok, alpha, rel.to_dict()))
        s2 = entropic_scale(space, 2 * alpha, cap).value
        d2 = diametric_scale(space, 2 * alpha).value
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = build_exponential(space, alpha, cap=cap)
        audit = audit_privacy(m, space)
        acc = exact_accuracy(m, space).sup_error
        rep.entries.append(SuiteEntry("exponential_audit", audit.passed, alpha, audit.to_dict()))
        if audit.passed:
            _lower_bound_entries(rep, "exponential", acc, s2, d2, alpha)
        if space.same_metric:
            ub = exponential_upper_bound(alpha, m.net_s)
            rep.entries.append(SuiteEntry("exponential_upper_bound", acc <= ub * (1 + 1e-12), alpha,
                                          {"accuracy": acc, "bound": ub, "net_s": m.net_s}))
        if space.ultrametric2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                u = build_ultrametric_relaxed(space, alpha, cap=cap)
            ua = audit_privacy(u, space)
            rep.entries.append(SuiteEntry("relaxed_audit", ua.passed, alpha, ua.to_dict()))
            if ua.passed:
                _lower_bound_entries(rep, "relaxed", exact_accuracy(u, space).sup_error, s2, d2, alpha)
            lem = verify_relaxed_lemmas(space, u, cap)
            rep.entries.append(SuiteEntry("relaxed_lemmas", lem.ok, alpha, lem.to_dict()))
    return rep
