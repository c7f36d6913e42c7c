"""Command line entry point.

Exit codes: 0 success, 1 a checked property failed, 2 usage or structural error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from mplab import gallery, mechanisms as mech_mod
from mplab.errors import CapExceeded, MplabError
from mplab.harness import SweepConfig, alpha_grid, run_sweep, run_verification_suite
from mplab.metric import FiniteBimetricSpace, validate
from mplab.packing import DEFAULT_CAP, packing_number
from mplab.scales import scale_report

OK, FAIL, USAGE = 0, 1, 2


def _num(v: float) -> str:
    return "none" if v is None else format(v, ".17g")


def _dump(obj):
    print(json.dumps(obj, indent=1, sort_keys=True, default=str))


def _load(path) -> FiniteBimetricSpace:
    try:
        return FiniteBimetricSpace.load(path)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from None


def cmd_validate(a):
    rep = validate(_load(a.space), a.rtol)
    if a.json:
        _dump(rep.to_dict())
    else:
        print("ok" if rep.ok else "invalid")
        for v in rep.violations:
            print(f"  {v.axiom} (rho{v.metric}) witness={list(v.witness)}")
    return OK if rep.ok else FAIL


def cmd_scales(a):
    space = _load(a.space)
    rep = scale_report(space, a.alpha, a.cap)
    if a.json:
        _dump(rep.to_dict())
    else:
        for name in ("entropic", "diametric", "doubling", "outer"):
            print(f"{name}={_num(getattr(rep, name))}")
    return OK


def cmd_packing(a):
    space = _load(a.space)
    subset = [int(t) for t in a.subset.split(",")] if a.subset else None
    res = packing_number(space, a.metric, subset, a.eps, a.mode, a.cap)
    _dump({"count": res.count, "exact": res.exact, "witness": list(res.witness.points)})
    return OK


def _build_mech(a, space):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if a.quiet else "default")
        if a.kind == "exponential":
            return mech_mod.build_exponential(space, a.alpha, a.net_s, a.cap)
        if a.kind == "ultrametric_relaxed":
            return mech_mod.build_ultrametric_relaxed(space, a.alpha, a.net_s, a.cap)
        if a.kind == "constant":
            return mech_mod.build_constant(space, a.y0)
        return mech_mod.build_nearest_rounding(space, a.net_s or 0.0, a.alpha)


def cmd_mech(a):
    space = _load(a.space)
    m = _build_mech(a, space)
    out = {"mechanism": m.to_dict(), "accuracy": mech_mod.exact_accuracy(m, space).to_dict()}
    if a.x is not None:
        out["distribution"] = mech_mod.output_distribution(m, a.x).to_dict()
        out["sample"] = mech_mod.sample(m, a.x, a.seed)
    if a.trials:
        out["accuracy"] = mech_mod.accuracy_mc(m, space, a.trials, a.seed).to_dict()
    _dump(out)
    return OK


def cmd_audit(a):
    space = _load(a.space)
    m = _build_mech(a, space)
    res = mech_mod.audit_privacy(m, space, a.alpha if a.kind == "constant" else None)
    _dump(res.to_dict())
    return OK if res.passed else FAIL


def cmd_sweep(a):
    cfg = SweepConfig.load(a.config)
    if a.workers is not None:
        cfg.workers = a.workers
    curve = run_sweep(cfg)
    if not cfg.csv_path:
        sys.stdout.write(curve.to_csv())
    else:
        print(f"wrote {len(curve.rows)} rows to {cfg.csv_path}")
    for alpha, kind in curve.violations:
        print(f"lower bound violated at alpha={_num(alpha)} by {kind}", file=sys.stderr)
    return FAIL if curve.violations else OK


def cmd_verify(a):
    space = _load(a.space)
    rep = run_verification_suite(space, alpha_grid(a.alphas.split(",")), a.samples, a.seed, a.cap)
    if a.json:
        _dump(rep.to_dict())
    elif rep.aborted:
        print("aborted: space fails validation")
        for v in rep.validation["violations"]:
            print(f"  {v['axiom']} (rho{v['metric']}) witness={v['witness']}")
    else:
        for e in rep.entries:
            where = "" if e.alpha is None else f" alpha={_num(e.alpha)}"
            print(f"{'PASS' if e.ok else 'FAIL'} {e.name}{where}")
    return OK if rep.ok else FAIL


GALLERY_FLAGS = ("n", "step", "distance", "d", "L", "r", "r1", "r2", "grid_n", "p", "denom", "value_step", "seed")


def cmd_gallery(a):
    if a.name == "cover":
        if a.gamma is None or a.d is None:
            raise ValueError("gallery cover needs --d and --gamma")
        cover = gallery.wasserstein_cover(int(a.d), a.gamma)
        if a.out:
            gallery.export_cover_json(cover, a.out)
        else:
            _dump(cover.to_dict())
        return OK
    params = {k: getattr(a, k) for k in GALLERY_FLAGS if getattr(a, k) is not None}
    space = gallery.build(a.name, **params)
    if a.out:
        space.save(a.out)
        print(f"wrote {space.n} points to {a.out}")
    else:
        _dump(space.to_dict())
    return OK


def _parser():
    p = argparse.ArgumentParser(prog="mplab", description="Metric privacy scales, mechanisms and audits.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def space_cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("space", help="space JSON file")
        sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="branch-and-bound component cap")
        sp.set_defaults(fn=fn)
        return sp

    sp = space_cmd("validate", cmd_validate, "check metric axioms")
    sp.add_argument("--rtol", type=float, default=1e-12)
    sp.add_argument("--json", action="store_true")

    sp = space_cmd("scales", cmd_scales, "entropic, diametric, doubling and outer scales")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--json", action="store_true")

    sp = space_cmd("packing", cmd_packing, "packing number")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--metric", type=int, choices=(1, 2), default=1)
    sp.add_argument("--subset", help="comma separated point ids")
    sp.add_argument("--mode", choices=("exact", "greedy"), default="exact")

    for name, fn, help_ in (("mech", cmd_mech, "build a mechanism and report its accuracy"),
                            ("audit", cmd_audit, "audit a mechanism's privacy")):
        sp = space_cmd(name, fn, help_)
        sp.add_argument("--kind", choices=("exponential", "ultrametric_relaxed", "constant", "rounding"),
                        default="exponential")
        sp.add_argument("--alpha", type=float, default=1.0)
        sp.add_argument("--net-s", dest="net_s", type=float, help="net / relaxation scale")
        sp.add_argument("--y0", type=int, default=0, help="output of the constant mechanism")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--quiet", action="store_true", help="suppress net warnings")
        if name == "mech":
            sp.add_argument("--x", type=int, help="print the output distribution of this input")
            sp.add_argument("--trials", type=int, default=0)

    sp = sub.add_parser("sweep", help="alpha sweep from a JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(fn=cmd_sweep)

    sp = space_cmd("verify", cmd_verify, "run the verification suite")
    sp.add_argument("--alphas", required=True, help="comma separated alphas")
    sp.add_argument("--samples", type=int, default=30)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("gallery", help="build a gallery space (or 'cover') and export JSON")
    sp.add_argument("name", choices=sorted(gallery.BUILDERS) + ["cover"])
    sp.add_argument("--out")
    for flag in GALLERY_FLAGS:
        sp.add_argument("--" + flag.replace("_", "-"), dest=flag,
                        type=str if flag in ("p", "value_step") else float if flag in
                        ("step", "distance", "r", "r1", "r2") else int)
    sp.add_argument("--gamma")
    sp.set_defaults(fn=cmd_gallery)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except CapExceeded as exc:
        print(f"error: {exc} (raise --cap or use --mode greedy)", file=sys.stderr)
        return USAGE
    except (MplabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
