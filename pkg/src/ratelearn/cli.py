"""Command-line front end: one verb per quantity, CSV out.

    ratelearn <verb> --config cfg.json [--out out.csv] [--seed S] [--threads K] [--json]

Exit codes: 0 success, 2 configuration error, 3 computational guard
exceeded, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import config as cf
from .covering import covering_number, pairwise_distances
from .itbounds import d_ks, eq7_grid_value, single_letter_bound
from .montecarlo import ExperimentConfig, gc_decay, run_experiment
from .type2 import GuardError, codebook_size, greedy_quantizer, optimal_quantizer

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4

EXPERIMENT_COLUMNS = ["n", "true_p_index", "mean_excess", "std_err", "mean_bound",
                      "exceedance_prob", "violations"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        # 12 significant digits; normalize negative zero
        return f"{v + 0.0:.12g}"
    return str(v)


def joined(values) -> str:
    return ";".join(fmt(float(v)) if not isinstance(v, (int, str)) else fmt(v) for v in values)


def _experiment(cfg, seed, threads, scheme):
    name = "type1" if scheme == "I" else "type2"
    sec = cf.section(cfg, name)
    where = name + "."
    fam = cf.family(cfg)
    F = cf.function_class(cfg)
    rate = cf.number(cf.require(cfg, "rate", ""), "rate")
    n_grid = cf.int_list(cf.require(sec, "n_grid", where), where + "n_grid", 1)
    trials = cf.integer(cf.require(sec, "trials", where), where + "trials", 1)
    pac = sec.get("pac_epsilon")
    try:
        config = ExperimentConfig(
            fam, F, scheme, rate, tuple(n_grid), trials, seed,
            eps_scale=cf.number(sec.get("eps_scale", 0.5), where + "eps_scale"),
            cover_mode=sec.get("cover_mode", "exact"),
            quantizer_mode=sec.get("quantizer_mode", "exact"),
            restarts=cf.integer(sec.get("restarts", 8), where + "restarts", 0),
            pac_epsilon=None if pac is None else cf.number(pac, where + "pac_epsilon"),
        )
    except ValueError as exc:
        raise cf.ConfigError(str(exc), name) from None
    result = run_experiment(config, threads)
    rows = []
    for n, worst in zip(config.n_grid, result.worst):
        for p in result.points(n):
            rows.append(_curve_row(p, p.true_p_index))
        rows.append(_curve_row(worst, "worst"))
    return EXPERIMENT_COLUMNS, rows


def _curve_row(p, label):
    return [p.n, label, p.mean_excess, p.std_err, p.mean_bound, p.exceedance_prob, p.violations]


def cmd_type1(cfg, seed, threads):
    return _experiment(cfg, seed, threads, "I")


def cmd_type2(cfg, seed, threads):
    return _experiment(cfg, seed, threads, "II")


def cmd_dhat(cfg, seed, threads):
    sec = cf.section(cfg, "dhat")
    fam, F = cf.family(cfg), cf.function_class(cfg)
    n_grid = cf.int_list(cf.require(sec, "n_grid", "dhat."), "dhat.n_grid", 1)
    mode = sec.get("mode", "exact")
    if mode not in ("exact", "greedy"):
        raise cf.ConfigError(f"unknown mode {mode!r}", "dhat.mode")
    rows = []
    for R in cf.rates(cfg, sec, "dhat."):
        for n in n_grid:
            if mode == "exact":
                res = optimal_quantizer(n, R, fam, F)
            else:
                res = greedy_quantizer(n, R, fam, F, cf.integer(sec.get("restarts", 8), "dhat.restarts", 0), seed)
            worst = max(range(len(fam)), key=lambda k: (res.per_P_distortion[k], -k))
            rows.append([n, R, codebook_size(n, R), res.quantizer.M, mode, res.value, worst,
                         joined(res.per_P_distortion), joined(res.quantizer.mapping.tolist())])
    cols = ["n", "rate", "max_codewords", "used_codewords", "mode", "dhat", "worst_p_index",
            "per_p_distortion", "mapping"]
    return cols, rows


def cmd_dks(cfg, seed, threads):
    sec = cf.section(cfg, "dks")
    fam, F = cf.family(cfg), cf.function_class(cfg)
    divisions = cf.integer(sec.get("divisions", 50), "dks.divisions", 1)
    tol = cf.number(sec.get("tol", 1e-4), "dks.tol")
    rows = []
    for R in cf.rates(cfg, sec, "dks."):
        for k, P in enumerate(fam):
            res = d_ks(P, F, R, divisions=divisions, tol=tol)
            rows.append([k, R, res.value, res.solver_report["lower_bound"], res.achieved_mi,
                         joined(res.channel.rows.ravel())])
    return ["p_index", "rate", "value", "lower_bound", "achieved_mi", "channel"], rows


def cmd_eq6(cfg, seed, threads):
    sec = cf.section(cfg, "eq6")
    fam, F = cf.family(cfg), cf.function_class(cfg)
    n_grid = cf.int_list(cf.require(sec, "n_grid", "eq6."), "eq6.n_grid", 1)
    rows = []
    for R in cf.rates(cfg, sec, "eq6."):
        for n in n_grid:
            s = single_letter_bound(n, R, fam, F)
            d = optimal_quantizer(n, R, fam, F)
            rows.append([n, R, s.value, d.value, s.value - d.value])
    return ["n", "rate", "single_letter", "dhat", "gap"], rows


def cmd_eq7(cfg, seed, threads):
    sec = cf.section(cfg, "eq7")
    fam, F = cf.family(cfg), cf.function_class(cfg)
    alphas = cf.number_list(cf.require(sec, "alpha", "eq7."), "eq7.alpha")
    deltas = cf.number_list(cf.require(sec, "delta", "eq7."), "eq7.delta")
    pres = cf.integer(cf.require(sec, "p_prime_resolution", "eq7."), "eq7.p_prime_resolution", 1)
    cres = cf.integer(cf.require(sec, "channel_resolution", "eq7."), "eq7.channel_resolution", 1)
    rows = []
    for R in cf.rates(cfg, sec, "eq7."):
        res = eq7_grid_value(fam, F, R, alphas, deltas, pres, cres)
        for a, v in zip(alphas, res.report["per_alpha"]):
            rows.append([R, a, v, res.report["p_prime_points"], res.report["channel_points"]])
        rows.append([R, "sup", res.value, res.report["p_prime_points"], res.report["channel_points"]])
    return ["rate", "alpha", "value", "p_prime_points", "channel_points"], rows


def cmd_gc(cfg, seed, threads):
    sec = cf.section(cfg, "gc")
    fam, F = cf.family(cfg), cf.function_class(cfg)
    n_grid = cf.int_list(cf.require(sec, "n_grid", "gc."), "gc.n_grid", 1)
    trials = cf.integer(cf.require(sec, "trials", "gc."), "gc.trials", 1)
    members = sec.get("members", list(range(len(fam))))
    members = cf.int_list(members, "gc.members", 0)
    if any(k >= len(fam) for k in members):
        raise cf.ConfigError("member index outside the family", "gc.members")
    size = fam.shape[0] * fam.shape[1]
    rows = []
    for k in members:
        for n, mean, se in gc_decay(fam[k], F, n_grid, trials, seed):
            rows.append([n, k, mean, se, F.bound * math.sqrt(size / n)])
    return ["n", "p_index", "mean_fnorm", "std_err", "envelope"], rows


def cmd_cover(cfg, seed, threads):
    sec = cf.section(cfg, "cover")
    fam, F = cf.family(cfg), cf.function_class(cfg)
    eps_list = cf.number_list(cf.require(sec, "eps", "cover."), "cover.eps")
    mode = sec.get("mode", "exact")
    if mode not in ("exact", "greedy"):
        raise cf.ConfigError(f"unknown mode {mode!r}", "cover.mode")
    if mode == "exact" and len(fam) > 20:
        raise GuardError(f"exact covering limited to 20 members, family has {len(fam)}")
    dist = pairwise_distances(fam, F)
    rows = []
    for eps in eps_list:
        if eps < 0:
            raise cf.ConfigError("eps must be nonnegative", "cover.eps")
        count, net = covering_number(fam, eps, F, mode, distances=dist)
        rows.append([eps, mode, count, net.certified_radius, math.log2(count),
                     joined(net.member_indices)])
    return ["eps", "mode", "count", "radius", "entropy_bits", "net"], rows


COMMANDS = {
    "type1": cmd_type1,
    "type2": cmd_type2,
    "dhat": cmd_dhat,
    "dks": cmd_dks,
    "eq6": cmd_eq6,
    "eq7": cmd_eq7,
    "gc": cmd_gc,
    "cover": cmd_cover,
}


def render_csv(command, cols, rows, config_digest, seed) -> str:
    buf = io.StringIO()
    buf.write(f"# ratelearn {command} config_sha256={config_digest} seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def render_json(command, cols, rows, config_digest, seed) -> str:
    doc = {
        "command": command,
        "config_sha256": config_digest,
        "seed": seed,
        "columns": cols,
        "rows": [[fmt(v) for v in row] for row in rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ratelearn", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON configuration file")
        s.add_argument("--out", help="CSV output path (default: stdout)")
        s.add_argument("--seed", type=int, help="override the config seed (u64)")
        s.add_argument("--threads", type=int, default=1, help="worker threads for trials")
        s.add_argument("--json", action="store_true", help="also write a JSON mirror next to --out")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        cfg, raw = cf.load(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except cf.ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config_digest = cf.digest(raw)
    try:
        seed = args.seed if args.seed is not None else cf.seed(cfg)
        if not 0 <= seed < 2 ** 64:
            raise cf.ConfigError("must be a 64-bit unsigned integer", "--seed")
        if args.threads < 1:
            raise cf.ConfigError("must be positive", "--threads")
        cols, rows = COMMANDS[args.command](cfg, seed, args.threads)
    except cf.ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    text = render_csv(args.command, cols, rows, config_digest, seed)
    try:
        if args.out:
            out = Path(args.out)
            out.write_text(text, encoding="utf-8")
            outputs = [str(out)]
            if args.json:
                jpath = out.with_suffix(".json")
                jpath.write_text(render_json(args.command, cols, rows, config_digest, seed),
                                 encoding="utf-8")
                outputs.append(str(jpath))
            manifest = {
                "config_sha256": config_digest,
                "tool_version": __version__,
                "seed": seed,
                "command": args.command,
                "threads": args.threads,
                "started": started,
                "finished": datetime.now(timezone.utc).isoformat(),
                "outputs": outputs,
            }
            Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=1) + "\n",
                                                         encoding="utf-8")
        else:
            sys.stdout.write(text)
            if args.json:
                sys.stdout.write(render_json(args.command, cols, rows, config_digest, seed))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
