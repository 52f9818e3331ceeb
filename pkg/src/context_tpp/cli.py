"""Command-line interface: ``context-tpp <command> [options]``.

Exit status: 0 success, 1 a checked claim failed, 2 usage or input error.
Human-readable tables go to stdout; CSV/JSON artifacts only to the files
named by the ``--*-out`` options.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import game, nccm, risk, saito, simulate, stats

SEED_ENV = "CONTEXT_TPP_SEED"


class UsageError(Exception):
    pass


# defaults applied after the config file, so that flags > config > defaults
DEFAULTS = {
    "tableb1": {"b": nccm.DEFAULT_B, "c": list(nccm.TABLE_B1_C), "precision": 2},
    "crossing": {"b": nccm.DEFAULT_B, "tol": 1e-5, "precision": 4},
    "props": {"b": nccm.DEFAULT_B, "c_m": nccm.DEFAULT_C, "c_p": nccm.DEFAULT_C,
              "profile": "linear", "draws": 0, "precision": 4},
    "saito-check": {"alpha": 0.8, "beta": 0.4, "delta": [0.0, 0.25, 0.5, 0.75, 1.0],
                    "points": 10_000, "precision": 4},
    "holt-laury": {"precision": 4},
    "payoff": {"p": 0, "z": 0, "outcome": None},
    "simulate": {"n": 100, "rule": "multinomial", "treatments": ["P", "PI0", "I0"],
                 "design": "within", "c_m": nccm.DEFAULT_C, "c_p": nccm.DEFAULT_C,
                 "b": nccm.DEFAULT_B, "crra": 0.0, "profile": "linear",
                 "extrapolate_fair": True, "workers": 1},
    "analyze": {"precision": 4},
}


def _dist(text):
    """``0.35`` or ``0.1:0.5`` (uniform range)."""
    if isinstance(text, (int, float, list)):
        return text
    if ":" in text:
        lo, hi = text.split(":")
        return [float(lo), float(hi)]
    return float(text)


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="context-tpp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON file with flat option keys")
        p.add_argument("--precision", type=int)
        p.add_argument("--json-out", type=Path)

    p = sub.add_parser("tableb1", help="both sides of the investment-share condition over a c grid")
    common(p)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=_floats, help="comma-separated c_M = c_P values")

    p = sub.add_parser("crossing", help="c at which the investment-share condition becomes an equality")
    common(p)
    p.add_argument("--b", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("props", help="check the punishment-crowding and investment-share claims")
    common(p)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float, help="sets both c_M and c_P")
    p.add_argument("--c-m", dest="c_m", type=float)
    p.add_argument("--c-p", dest="c_p", type=float)
    p.add_argument("--profile", choices=["linear", "constant"])
    p.add_argument("--draws", type=int, help="extra random draws for the punishment-crowding check")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("saito-check", help="closed forms vs brute force, rankings")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--delta", type=_floats)
    p.add_argument("--points", type=int, help="size of the random equivalence grid")
    p.add_argument("--seed", type=int)
    p.add_argument("--csv-out", type=Path)

    p = sub.add_parser("holt-laury", help="lottery table, classification, CRRA intervals")
    common(p)
    p.add_argument("--choices", help="10-letter L/R string to classify")
    p.add_argument("--csv-out", type=Path)

    p = sub.add_parser("payoff", help="payoffs of one Task 2 decision")
    p.add_argument("--config", type=Path)
    p.add_argument("--treatment", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--z", type=int)
    p.add_argument("--outcome", choices=["win", "lose", "na"])
    p.add_argument("--ex-ante", action="store_true", default=None)

    p = sub.add_parser("simulate", help="write a synthetic dataset and manifest")
    p.add_argument("--config", type=Path)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rule", choices=[r.value for r in simulate.AllocationRule])
    p.add_argument("--treatments", type=lambda s: s.split(","))
    p.add_argument("--design", choices=["within", "between"])
    p.add_argument("--c-m", dest="c_m", type=_dist)
    p.add_argument("--c-p", dest="c_p", type=_dist)
    p.add_argument("--b", type=_dist)
    p.add_argument("--crra", type=_dist)
    p.add_argument("--profile", choices=["linear", "constant"])
    p.add_argument("--no-extrapolate-fair", dest="extrapolate_fair", action="store_false",
                   default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--manifest", type=Path)
    p.add_argument("--no-timestamp", action="store_true", default=None)

    p = sub.add_parser("analyze", help="summaries and tests for a dataset CSV")
    common(p)
    p.add_argument("data", type=Path)
    p.add_argument("--compare", nargs=2, action="append", metavar=("A", "B"))
    return ap


def _merge(args):
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError(f"config {args.config}: expected a JSON object")
    known = set(vars(args))
    for key, val in cfg.items():
        key = key.replace("-", "_")
        if key not in known or key in ("command", "config"):
            raise UsageError(f"config {args.config}: unknown key {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, val)
    for key, val in DEFAULTS.get(args.command, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    return args


def _seed(args, required=True):
    seed = getattr(args, "seed", None)
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV}={os.environ[SEED_ENV]!r} is not an integer") from None
    if seed is None and required:
        raise UsageError(f"a seed is required: pass --seed or set {SEED_ENV}")
    return seed


def _write(path, text):
    if path:
        Path(path).write_text(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=float)


def _tf(v):
    return "true" if v else "false"


# --- commands -----------------------------------------------------------------

def cmd_tableb1(args):
    rows = nccm.table_b1(args.c, args.b)
    prec = args.precision
    print(nccm.format_table_b1(rows, prec))
    print()
    for c, r in rows:
        print(f"c={c:g} LHS={r.lhs:.{prec}f} RHS={r.rhs:.{prec}f} holds={_tf(r.holds)}")
    _write(args.json_out, _dump([{"c": c, "b": args.b, "lhs": r.lhs, "rhs": r.rhs,
                                  "holds": r.holds} for c, r in rows]))
    return 0


def cmd_crossing(args):
    c = nccm.assumption3_crossing(nccm.CANONICAL, args.b, args.tol)
    if c is None:
        print("c* = none (no crossing on (0, 1))")
    else:
        print(f"c* = {c:.{args.precision}f}")
    _write(args.json_out, _dump({"b": args.b, "tol": args.tol, "crossing": c}))
    return 0


def cmd_props(args):
    if args.c is not None:
        args.c_m = args.c_p = args.c
    seed = _seed(args) if args.draws else None
    params = nccm.NccmParams(args.c_m, args.c_p, args.b)
    W = nccm.build_partworth_schedule(nccm.ScheduleConfig(profile=args.profile))
    r1 = nccm.verify_proposition1(W, params)
    r2 = nccm.verify_proposition2(W, params)
    prec = args.precision
    print(f"{'t':>3} {'Pr(TP|PI0)':>12} {'Pr(TP|P)':>12} {'TP drop':>9} "
          f"{'Pr(I|PI0)':>12} {'Pr(I|I0)':>12} {'cond':>6} {'I rise':>10}")
    for a, b in zip(r1.rows, r2.rows):
        p2 = _tf(b.holds) if b.asserted else f"({_tf(b.holds)})"
        print(f"{a.t:>3} {a.lhs_prob:>12.{prec}f} {a.rhs_prob:>12.{prec}f} {_tf(a.holds):>9} "
              f"{b.lhs_prob:>12.{prec}f} {b.rhs_prob:>12.{prec}f} "
              f"{_tf(b.detail['assumption3']):>6} {p2:>10}")
    ok = r1.passed and r2.passed
    sweep = None
    if args.draws:
        rng = np.random.default_rng(seed)
        fails = 0
        for _ in range(args.draws):
            Wr, pr = nccm.random_assumption_draw(rng)
            fails += not nccm.verify_proposition1(Wr, pr).passed
        sweep = {"draws": args.draws, "failures": fails}
        print(f"punishment-drop random sweep: {args.draws - fails}/{args.draws} pass")
        ok = ok and fails == 0
    print(f"punishment drop {'PASS' if r1.passed else 'FAIL'}; "
          f"investment rise {'PASS' if r2.passed else 'FAIL'} (asserted where cond holds)")
    _write(args.json_out, _dump({"punishment_drop": r1.to_dict(), "investment_rise": r2.to_dict(),
                                 "sweep": sweep}))
    return 0 if ok else 1


def _equivalence_points(n, rng):
    for _ in range(n):
        t = int(rng.choice(game.TRANSFER_LEVELS))
        x = float(rng.uniform(1e-6, 50))
        beta = float(rng.uniform(0.01, 1.5))
        alpha = float(rng.uniform(max(beta, 1 - beta) + 1e-6, 3))
        delta = float(rng.uniform(0, 1))
        yield t, x, alpha, beta, delta


def cmd_saito_check(args):
    seed = _seed(args, required=False)
    rng = np.random.default_rng(0 if seed is None else seed)
    eq = saito.oracle_equivalence(_equivalence_points(args.points, rng))
    ok = all(v <= 1e-9 for v in eq["max_abs_error"].values())
    prec = args.precision
    print(f"oracle equivalence over {eq['points']} points:")
    for k, v in eq["max_abs_error"].items():
        print(f"  {k:<16} max|err| = {v:.3e}")
    reports = []
    for d in args.delta:
        prm = saito.FsParams(args.alpha, args.beta, d)
        for lottery in ("zero", "negative"):
            rep = saito.ranking_report(prm, lottery=lottery)
            reports.append(rep)
            ok = ok and rep.passed
            print(f"delta={d:g} lottery={lottery:<8} W_S vs W_I "
                  f"{'PASS' if rep.passed else 'FAIL'}; "
                  f"W_TP<W_S at {len(rep.punish_deviations)} grid points")
    resid = saito.punish_residual_report(saito.FsParams(args.alpha, args.beta, 0.5))
    worst = max((abs(r["residual"] - r["expected_residual"]) for r in resid), default=0.0)
    print(f"punishment closed form: {len(resid)} off-branch rows, "
          f"residual vs analytic max|err| = {worst:.3e}")
    if resid:
        r = resid[0]
        print(f"  e.g. t={r['t']} p={r['p']}: published={float(r['printed']):.{prec}f} "
              f"oracle={float(r['oracle']):.{prec}f}")
    if args.csv_out:
        args.csv_out.write_text("".join(
            rep.to_csv() if i == 0 else rep.to_csv().split("\n", 1)[1]
            for i, rep in enumerate(reports)))
    _write(args.json_out, _dump({"equivalence": eq, "residuals": resid,
                                 "rankings": [json.loads(r.to_json()) for r in reports]}))
    return 0 if ok else 1


def cmd_holt_laury(args):
    print(f"{'Q':>2} {'P(high)':>8} {'E(L)-E(R)':>10} {'CRRA lo':>10} {'CRRA hi':>10}")
    for pair in risk.TABLE:
        iv = risk.crra_interval(pair.question)
        print(f"{pair.question:>2} {str(pair.p_high):>8} {risk.lottery_ev_gap(pair.question):>10} "
              f"{iv.lo:>10.{args.precision}f} {iv.hi:>10.{args.precision}f}")
    print(f"risk-neutral choices: {risk.ev_choices()}")
    out = {"table": risk.table_csv()}
    if args.choices:
        rc = risk.classify_risk(args.choices)
        print(f"{args.choices}: {rc.label}" + (f", switch point {rc.switch_point}"
                                               if rc.switch_point else ""))
        out["classification"] = {"choices": args.choices, "class": rc.label,
                                 "switch_point": rc.switch_point}
    _write(args.csv_out, risk.table_csv())
    _write(args.json_out, _dump(out))
    return 0


def cmd_payoff(args):
    tr = game.get_treatment(args.treatment)
    action = game.ThirdPartyAction(args.p, args.z)
    verdict = game.validate_action(tr, action)
    if not verdict:
        raise UsageError("invalid action: " + "; ".join(v.message for v in verdict.violations))
    if args.ex_ante:
        v = game.ex_ante_expected_payoffs(tr, args.t, action)
        print("A={} B={} C={}".format(*(str(x) for x in v)))
        return 0
    outcome = args.outcome or ("na" if args.z == 0 else None)
    if outcome is None:
        raise UsageError("--outcome win|lose is required when z > 0")
    v = game.realized_payoffs(tr, args.t, action, game.Outcome(outcome))
    print("A={} B={} C={}".format(*(str(x) for x in v)))
    return 0


def cmd_simulate(args):
    seed = _seed(args)
    spec = simulate.PopulationSpec(
        n=args.n, master_seed=seed, c_m=args.c_m, c_p=args.c_p, b=args.b, crra=args.crra,
        schedule=nccm.ScheduleConfig(profile=args.profile,
                                     extrapolate_fair=args.extrapolate_fair),
    )
    rule = simulate.AllocationRule(args.rule)
    treatments = [game.get_treatment(t).id for t in args.treatments]
    agents = simulate.sample_population(spec)
    ds = simulate.simulate_dataset(agents, treatments, rule, workers=args.workers,
                                   design=args.design)
    args.out.write_text(ds.to_csv())
    stamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat()
    man = simulate.manifest(spec, rule, treatments, args.design, stamp)
    manifest_path = args.manifest or args.out.with_suffix(".manifest.json")
    manifest_path.write_text(_dump(man))
    print(f"wrote {len(ds.rows)} rows for {spec.n} agents to {args.out}")
    print(f"manifest: {manifest_path}")
    return 0


def _directional(agents):
    by = {}
    for a in agents:
        by.setdefault(a.treatment, []).append(a)
    mean = lambda tid, m: float(np.mean([a.value(m) for a in by[tid]]))
    lines = []
    if "P" in by and "PI0" in by:
        lo, hi = mean("PI0", "mean_punishment"), mean("P", "mean_punishment")
        lines.append(("mean punishment PI0 < P", lo < hi, lo, hi))
    if "I0" in by and "PI0" in by:
        hi, lo = mean("PI0", "mean_investment"), mean("I0", "mean_investment")
        lines.append(("mean investment PI0 >= I0", hi >= lo, hi, lo))
    return lines


def cmd_analyze(args):
    try:
        text = args.data.read_text()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    ds = simulate.ChoiceDataset.from_csv(text)
    summary = stats.summarize(ds)
    print(stats.format_summary(summary, args.precision))
    present = ds.treatments()
    pairs = args.compare or [pr for pr in (("P", "PI0"), ("I0", "PI0"), ("P", "PIneg"),
                                           ("Ineg", "PIneg"))
                             if pr[0] in present and pr[1] in present]
    records = []
    for a, b in pairs:
        a, b = game.get_treatment(a).id, game.get_treatment(b).id
        recs = stats.compare_treatments(ds, a, b)
        records.extend(recs)
        print(f"\n{a} vs {b}")
        for r in recs:
            if r["test"].startswith("ranksum_m"):
                print(f"  {r['test']:<28} p={r['p']:.{args.precision}f} ({r['method']})")
    agents = simulate.derive_measures(ds)
    directions = _directional(agents)
    if directions:
        print()
    for label, ok, left, right in directions:
        print(f"{label}: {_tf(ok)} ({left:.{args.precision}f} vs {right:.{args.precision}f})")
    _write(args.json_out, stats.report_json(records, summary))
    return 0


COMMANDS = {
    "tableb1": cmd_tableb1, "crossing": cmd_crossing, "props": cmd_props,
    "saito-check": cmd_saito_check, "holt-laury": cmd_holt_laury, "payoff": cmd_payoff,
    "simulate": cmd_simulate, "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _merge(args)
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"context-tpp {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
