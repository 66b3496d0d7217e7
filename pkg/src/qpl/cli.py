"""Command-line interface: ``qpl <subcommand> ...``.

Every command is deterministic given its seeds.  Numeric output is CSV
(header row, 12 significant digits) or JSON with sorted keys.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .datagen import DatasetDescriptor, generate_factors
from .groundstate import (
    FAMILIES,
    ModelSpec,
    build_model,
    fmt,
    gap_csv,
    gap_scan,
    ground_state,
    sweep_csv,
    sweep_predict,
)
from .qcnn import build_architecture, init_params, load_checkpoint, save_checkpoint
from .train import DEFAULT_C, test_accuracy, train_session

log = logging.getLogger("qpl")

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_NOT_CONVERGED = 0, 1, 2, 3


def _seed(default: int) -> int:
    env = os.environ.get("QPL_SEED")
    return int(env) if env else default


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def parse_values(text: str) -> list[float]:
    """``"0.1"``, ``"0,0.5,1"`` or ``"start:stop:num"`` (inclusive linspace)."""
    if ":" in text:
        a, b, n = text.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    return [float(x) for x in text.split(",")]


def _grid(family: str, params: list[str]) -> list[tuple[float, ...]]:
    names = FAMILIES[family]
    given = {}
    for item in params:
        key, _, val = item.partition("=")
        if key not in names:
            raise SystemExit(f"{family} has parameters {names}, got {key!r}")
        given[key] = parse_values(val)
    missing = [n for n in names if n not in given]
    if missing:
        raise SystemExit(f"missing parameters {missing} for {family}")
    return [tuple(p) for p in itertools.product(*(given[n] for n in names))]


# ---- train --------------------------------------------------------------

def cmd_train(args) -> int:
    try:
        raw = cfgmod.load_preset(args.preset) if args.preset else cfgmod.load_config(args.config)
        raw = cfgmod.apply_env(raw)
        if args.output_dir:
            raw["output_dir"] = args.output_dir
        cfg = cfgmod.validate(raw)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    out = Path(cfg.get("output_dir", "runs/train"))
    a = cfg["arch"]
    arch = build_architecture(a["N"], a["uniform"], a["conv_depth"])
    cur, adam, data = cfgmod.to_objects(cfg, args.threads)
    seed = cfg["seed"]
    p0 = init_params(arch, np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,))),
                     cfg.get("init_sigma", 0.1))
    params, report = train_session(arch, p0, cur, adam, data, seed, cfg.get("C", DEFAULT_C))
    out.mkdir(parents=True, exist_ok=True)
    report.params_ref = "checkpoint.json"
    trained = [s.L_noise for s in report.stages if s.converged]
    meta = {
        "symmetry": cfg["symmetry"],
        "seed": seed,
        "curriculum": [{"L_noise": s.L_noise, "final_test_accuracy": s.final_test_accuracy,
                        "epochs_run": s.epochs_run} for s in report.stages],
        "trained_L_noise": (trained or [report.stages[0].L_noise])[-1],
    }
    save_checkpoint(out / "checkpoint.json", arch, params, meta)
    _write(str(out / "report.json"), report.to_json())
    _write(str(out / "loss.csv"), report.loss_csv())
    _write(str(out / "config.json"), _json(cfg))
    for st in report.stages:
        print(f"L_noise={st.L_noise} test_accuracy={st.final_test_accuracy:.4f} epochs={st.epochs_run}")
    return EXIT_OK if report.stages[0].converged else EXIT_NOT_CONVERGED


# ---- eval ---------------------------------------------------------------

def cmd_eval(args) -> int:
    arch, params, meta = load_checkpoint(args.checkpoint)
    if args.descriptor:
        with open(args.descriptor, encoding="utf-8") as fh:
            desc = DatasetDescriptor.from_json(fh.read())
    else:
        desc = DatasetDescriptor(args.size, arch.N, args.L_noise, args.symmetry or meta.get("symmetry", "TimeReversal_T"),
                                 args.label_source, _seed(args.seed))
    if desc.N != arch.N:
        print(f"descriptor N={desc.N} does not match checkpoint N={arch.N}", file=sys.stderr)
        return EXIT_FAIL
    acc = test_accuracy(arch, params, generate_factors(desc, args.threads))
    train_L = meta.get("trained_L_noise", "")
    _write(args.out, f"train_Lnoise,test_Lnoise,accuracy\n{train_L},{desc.L_noise},{fmt(acc)}\n")
    return EXIT_OK


# ---- sweep / orderparam / gapscan ---------------------------------------

def _specs(args) -> list[ModelSpec]:
    return [ModelSpec(args.family, p, args.staggered_x) for p in _grid(args.family, args.param)]


def cmd_sweep(args) -> int:
    arch, params, _ = load_checkpoint(args.checkpoint)
    pts = sweep_predict(_specs(args), arch, params, args.n_sites, args.threads)
    _write(args.out, sweep_csv(pts))
    return EXIT_OK


def cmd_orderparam(args) -> int:
    from .orderparams import RegionPair, sb_correlator, string_order, ti_order_parameter

    rows = ["family," + ",".join(FAMILIES[args.family]) + ",n_sites,observable,value\n"]
    for spec in _specs(args):
        st = ground_state(build_model(spec, args.n_sites)).state
        if args.observable == "ti":
            val = ti_order_parameter(st, RegionPair(0, args.length)) * 2 ** (args.length / 4)
        elif args.observable == "string":
            val = string_order(st, 0, args.length - 1)
        else:
            val = sb_correlator(st, 0, args.n_sites // 2, staggered=args.family == "H4")
        rows.append(",".join([spec.family, *(fmt(x) for x in spec.params), str(args.n_sites),
                              args.observable, fmt(val)]) + "\n")
    _write(args.out, "".join(rows))
    return EXIT_OK


def cmd_gapscan(args) -> int:
    ns = [int(x) for x in args.n_sites.split(",")]
    _write(args.out, gap_csv(gap_scan(_specs(args), ns, args.threads)))
    return EXIT_OK


# ---- histogram / twirl ---------------------------------------------------

def cmd_histogram(args) -> int:
    from .orderparams import histogram_csv, noisy_string_histogram
    from .symgates import builtin_generators

    vals = noisy_string_histogram(args.n_samples, args.L_noise, builtin_generators(args.symmetry, args.support_size),
                                  _seed(args.seed), args.threads)
    _write(args.out, histogram_csv(vals))
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    print(f"mean={vals.mean():.6f} stderr={se:.6f} variance={vals.var(ddof=1):.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_twirl(args) -> int:
    from .haarlab import lemma_centralizer_report, lemma_report_json, twirl_convergence
    from .symgates import builtin_generators

    gens = builtin_generators(args.symmetry, 2)
    rng = np.random.default_rng(_seed(args.seed))
    d = 1 << gens.support_size
    M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    M -= np.trace(M) / d * np.eye(d)
    Ks = [int(k) for k in args.K.split(",")]
    curve = twirl_convergence(M, gens, Ks, args.reps, args.word_length, seed=_seed(args.seed))
    _write(args.out, curve.to_csv())
    print(f"slope={curve.slope:.4f}", file=sys.stderr)
    if args.lemma_report:
        _write(args.lemma_report, lemma_report_json(lemma_centralizer_report()))
    return EXIT_OK


# ---- verify -------------------------------------------------------------

def run_verify() -> dict:
    from .fixedpoints import FixedPointKind, build_fixed_point, verify_stabilizers
    from .haarlab import lemma_centralizer_report
    from .qcnn import param_count
    from .train import batch_loss, gradient

    checks = []
    for kind in FixedPointKind:
        rep = verify_stabilizers(build_fixed_point(kind, 8), kind)
        checks.append({"check": f"stabilizers/{kind.value}", "value": rep.max_deviation, "passed": rep.passed})
    for (N, u, d), want in {(4, False, 3): 90, (8, False, 3): 255, (8, True, 5): 165}.items():
        got = param_count(build_architecture(N, u, d))
        checks.append({"check": f"param_count/N{N}{'u' if u else ''}d{d}", "value": got, "passed": got == want})
    for c in lemma_centralizer_report():
        checks.append({"check": f"centralizer/{c.lemma}", "value": c.computed_dim, "passed": c.passed})

    arch = build_architecture(4)
    rng = np.random.default_rng(0)
    p = rng.uniform(-np.pi, np.pi, arch.n_params)
    data = generate_factors(DatasetDescriptor(6, 4, 1, "TimeReversal_T", seed=0))
    g = gradient(arch, p, data)
    h = 1e-4
    fd = np.array([(batch_loss(arch, p + h * e, data) - batch_loss(arch, p - h * e, data)) / (2 * h)
                   for e in np.eye(arch.n_params)])
    rel = float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-12)))
    checks.append({"check": "gradient/fd_max_rel_error", "value": rel, "passed": rel <= 1e-5})
    return {"checks": checks, "passed": all(c["passed"] for c in checks)}


def cmd_verify(args) -> int:
    rep = run_verify()
    _write(args.out, _json(rep))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


# ---- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpl", description="QCNN phase classification toolkit")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("train", help="train a QCNN from a config or preset")
    g = t.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--preset", help="one of: " + ", ".join(cfgmod.preset_names()))
    t.add_argument("--output-dir")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="test accuracy of a checkpoint on regenerated data")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--descriptor", help="dataset descriptor JSON")
    e.add_argument("--size", type=int, default=1000)
    e.add_argument("--L-noise", dest="L_noise", type=int, default=1)
    e.add_argument("--symmetry")
    e.add_argument("--label-source", default="symmetric_cat")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    def model_args(p):
        p.add_argument("--family", required=True, choices=sorted(FAMILIES))
        p.add_argument("--param", action="append", default=[],
                       help="name=values, values as a, a,b,c or start:stop:num")
        p.add_argument("--staggered-x", type=float, default=0.0, help="H4 staggered X perturbation strength")
        p.add_argument("--out")

    s = sub.add_parser("sweep", help="classify ED ground states over a parameter grid")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--n-sites", type=int, default=12)
    model_args(s)
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("orderparam", help="order parameters of ED ground states")
    o.add_argument("--observable", choices=["ti", "string", "sb"], default="ti")
    o.add_argument("--length", type=int, default=8)
    o.add_argument("--n-sites", type=int, default=12)
    model_args(o)
    o.set_defaults(func=cmd_orderparam)

    gs = sub.add_parser("gapscan", help="finite-size gaps E1 - E0")
    gs.add_argument("--n-sites", default="8,10,12", help="comma-separated ring sizes")
    model_args(gs)
    gs.set_defaults(func=cmd_gapscan)

    h = sub.add_parser("histogram", help="string order of noisy cluster states")
    h.add_argument("--n-samples", type=int, default=4000)
    h.add_argument("--L-noise", dest="L_noise", type=int, default=2)
    h.add_argument("--symmetry", default="Z2xZ2T")
    h.add_argument("--support-size", type=int, default=2)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out")
    h.set_defaults(func=cmd_histogram)

    w = sub.add_parser("twirl", help="twirl-average convergence and centralizer report")
    w.add_argument("--symmetry", default="TimeReversal_T")
    w.add_argument("--K", default="100,1000,10000")
    w.add_argument("--reps", type=int, default=5)
    w.add_argument("--word-length", type=int, default=10)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--lemma-report")
    w.add_argument("--out")
    w.set_defaults(func=cmd_twirl)

    v = sub.add_parser("verify", help="run built-in consistency checks")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
