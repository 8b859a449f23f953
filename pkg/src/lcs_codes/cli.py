"""Command line front end: construction, distances, sampling, circuits, gates."""

from __future__ import annotations

import argparse
import math
import sys

from . import analysis, circuits, codes, experiments, gates, sampling


def _add_code_args(sp: argparse.ArgumentParser, many_L: bool = False,
                   required: bool = True) -> None:
    sp.add_argument("--kind", choices=("lcs", "surface"), default="lcs")
    sp.add_argument("--l", type=int, required=required, help="base code size")
    if many_L:
        sp.add_argument("--L", type=int, required=required, action="append",
                        help="lift size (repeatable)")
    else:
        sp.add_argument("--L", type=int, required=required, help="lift size")
    sp.add_argument("--j", type=int, default=1, help="connecting shift")


def _build_code(args: argparse.Namespace, L: int | None = None) -> codes.CssCode:
    L = args.L if L is None else L
    if args.kind == "lcs":
        return codes.lcs_code(args.l, L, args.j)
    return codes.disjoint_surface_code(args.l, L)


def _print_code(code: codes.CssCode, out) -> None:
    hx, hz = code.hx.to_dense(), code.hz.to_dense()
    meta = code.meta
    if meta["family"] == "lcs":
        d = min(meta["L"], 2 * meta["l"] + 1)
    else:
        d = meta["l"] + 1
    print(f"name = {code.name()}", file=out)
    print(f"n = {code.n}", file=out)
    print(f"k = {code.k}", file=out)
    print(f"d_formula = {d}", file=out)
    print(f"max_check_weight = {max(hx.sum(1).max(), hz.sum(1).max())}",
          file=out)
    print(f"max_qubit_degree = {(hx.sum(0) + hz.sum(0)).max()}", file=out)
    print(f"tanner_components = {code.tanner_components()}", file=out)


def cmd_construct(args, out) -> int:
    if args.family is not None:
        members = codes.family_members(args.family, args.L)
        for i, desc in enumerate(members):
            if i:
                print(file=out)
            _print_code(desc.build(), out)
        return 0
    if args.l is None:
        raise ValueError("--l is required without --family")
    for i, L in enumerate(args.L):
        if i:
            print(file=out)
        _print_code(_build_code(args, L), out)
    return 0


def cmd_distance(args, out) -> int:
    print("kind,l,L,d_x,d_z,method", file=out)
    for L in args.L:
        code = _build_code(args, L)
        dx = analysis.exact_distance(code, "X", w_cap=args.w_cap)
        dz = analysis.exact_distance(code, "Z", w_cap=args.w_cap)
        method = "capped" if isinstance(dx, str) or isinstance(dz, str) \
            else "exhaustive"
        print(f"{args.kind},{args.l},{L},{dx},{dz},{method}", file=out)
    return 0


def _config_from_args(args, noise: str) -> experiments.ExperimentConfig:
    if args.config:
        cfg = experiments.load_config(args.config)
        if args.output:
            cfg = experiments.ExperimentConfig(
                **{**vars(cfg), "output": args.output})
        return cfg
    if args.l is None or args.L is None:
        raise ValueError("--l and --L are required (or supply --config)")
    if args.seed is None:
        raise ValueError("--seed is required (or supply --config)")
    if not args.p:
        raise ValueError("need at least one --p value (or supply --config)")
    fields = dict(kind=args.kind, l=args.l, L=args.L, j=args.j, noise=noise,
                  decoder=args.decoder, grid=tuple(sorted(args.p)),
                  shots=args.shots, seed=args.seed, output=args.output)
    if noise == "phenomenological":
        fields.update(q=args.q, rounds=args.rounds)
    if noise == "circuit_level":
        fields.update(cycles=args.cycles, basis=args.basis)
    return experiments.ExperimentConfig(**fields)


def _run_and_print(cfg: experiments.ExperimentConfig, out) -> int:
    print(experiments.CSV_HEADER, file=out)

    def progress(res: sampling.SampleResult) -> None:
        print(experiments.result_csv_row(res), file=out)
        out.flush()

    experiments.run_experiment(cfg, progress=progress)
    return 0


def cmd_sample(args, out) -> int:
    noise = args.noise if not args.config else "code_capacity"
    return _run_and_print(_config_from_args(args, noise), out)


def cmd_count_failures(args, out) -> int:
    code = _build_code(args)
    failures = sampling.count_failure_configs(
        code, args.w, decoder=args.decoder, max_configs=args.max_configs)
    print("code,decoder,w,configs,failures", file=out)
    print(f"{code.name()},{args.decoder},{args.w},"
          f"{math.comb(code.n, args.w)},{failures}", file=out)
    return 0


def _memory_circuit(args) -> circuits.StabilizerCircuit:
    code = _build_code(args)
    cycles = args.cycles or sampling.code_distance(code)
    return circuits.memory_experiment(code, args.basis, cycles, args.p)


def cmd_circuit_build(args, out) -> int:
    circ = _memory_circuit(args)
    text = circ.to_text()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="", file=out)
    return 0


def cmd_circuit_fault_distance(args, out) -> int:
    circ = _memory_circuit(args)
    d = circuits.fault_distance(circ, w_max=args.w_max)
    if d is None:
        print(f"fault_distance > {args.w_max}", file=out)
    else:
        print(f"fault_distance = {d}", file=out)
    return 0


def cmd_circuit_sample(args, out) -> int:
    return _run_and_print(_config_from_args(args, "circuit_level"), out)


def cmd_gates_verify(args, out) -> int:
    checks = gates.verify_fold_gates(args.l, args.L, args.j)
    failed = 0
    for check in checks:
        if check.passed:
            print(f"PASS {check.name}", file=out)
        else:
            failed += 1
            print(f"FAIL {check.name}: {check.details}", file=out)
    return 1 if failed else 0


def cmd_analyze_pseudo_threshold(args, out) -> int:
    curve = experiments.read_curve(args.input)
    est = experiments.pseudo_threshold(curve, args.k, window=args.window,
                                       per_cycle=args.per_cycle)
    print(f"pseudo_threshold = {est}", file=out)
    return 0


def cmd_analyze_crossing(args, out) -> int:
    curves = [experiments.read_curve(path) for path in args.input]
    est = experiments.crossing_point(curves)
    print(f"crossing = {est}", file=out)
    return 0


def _add_sampling_args(sp, noise_choice: bool) -> None:
    if noise_choice:
        sp.add_argument("--noise",
                        choices=("code_capacity", "phenomenological"),
                        default="code_capacity")
    sp.add_argument("--decoder", choices=("mle", "exact-ml", "bposd"),
                    default="mle")
    sp.add_argument("--p", type=float, action="append", default=[],
                    help="physical error rate (repeatable)")
    sp.add_argument("--shots", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=None,
                    help="RNG seed (required)")
    sp.add_argument("--output", default=None, help="CSV path")
    sp.add_argument("--config", default=None,
                    help="flat key = value config file, overrides flags")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lcs", description="lift-connected surface code toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("construct", help="print code parameters")
    sp.add_argument("--kind", choices=("lcs", "surface"), default="lcs")
    sp.add_argument("--l", type=int, help="base code size")
    sp.add_argument("--L", type=int, action="append", required=True,
                    help="lift size (repeatable)")
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--family", type=int, choices=(1, 2, 3), default=None,
                    help="curated family instead of --kind/--l")
    sp.set_defaults(fn=cmd_construct)

    sp = sub.add_parser("distance", help="exhaustive X/Z distances as CSV")
    _add_code_args(sp, many_L=True)
    sp.add_argument("--w-cap", type=int, default=None,
                    help="stop the search above this weight")
    sp.set_defaults(fn=cmd_distance)

    sp = sub.add_parser("sample", help="Monte Carlo failure-rate curve")
    _add_code_args(sp, required=False)
    _add_sampling_args(sp, noise_choice=True)
    sp.add_argument("--q", type=float, default=None,
                    help="syndrome flip rate (default p)")
    sp.add_argument("--rounds", type=int, default=None,
                    help="noisy rounds (default code distance)")
    sp.set_defaults(fn=cmd_sample)

    sp = sub.add_parser("count-failures",
                        help="decode every weight-w error exhaustively")
    _add_code_args(sp)
    sp.add_argument("--w", type=int, required=True)
    sp.add_argument("--decoder", choices=("mle", "exact-ml", "bposd"),
                    default="mle")
    sp.add_argument("--max-configs", type=int, default=10**7)
    sp.set_defaults(fn=cmd_count_failures)

    sp = sub.add_parser("circuit", help="syndrome-extraction circuits")
    csub = sp.add_subparsers(dest="circuit_command", required=True)

    cb = csub.add_parser("build", help="emit the noisy memory circuit")
    _add_code_args(cb)
    cb.add_argument("--basis", choices=("Z", "X"), default="Z")
    cb.add_argument("--cycles", type=int, default=None)
    cb.add_argument("--p", type=float, default=0.0)
    cb.add_argument("--output", default=None)
    cb.set_defaults(fn=cmd_circuit_build)

    cf = csub.add_parser("fault-distance",
                         help="exhaustive undetectable-fault search")
    _add_code_args(cf)
    cf.add_argument("--basis", choices=("Z", "X"), default="Z")
    cf.add_argument("--cycles", type=int, default=None)
    cf.add_argument("--p", type=float, default=1e-3)
    cf.add_argument("--w-max", type=int, default=4)
    cf.set_defaults(fn=cmd_circuit_fault_distance)

    cs = csub.add_parser("sample", help="circuit-level memory sampling")
    _add_code_args(cs, required=False)
    _add_sampling_args(cs, noise_choice=False)
    cs.add_argument("--basis", choices=("Z", "X"), default="Z")
    cs.add_argument("--cycles", type=int, default=None)
    cs.set_defaults(fn=cmd_circuit_sample, decoder="bposd")

    sp = sub.add_parser("gates", help="fold-transversal gate checks")
    gsub = sp.add_subparsers(dest="gates_command", required=True)
    gv = gsub.add_parser("verify", help="pass/fail report per gate")
    gv.add_argument("--l", type=int, required=True)
    gv.add_argument("--L", type=int, required=True)
    gv.add_argument("--j", type=int, default=1)
    gv.set_defaults(fn=cmd_gates_verify)

    sp = sub.add_parser("analyze", help="fits over stored CSV curves")
    asub = sp.add_subparsers(dest="analyze_command", required=True)
    at = asub.add_parser("pseudo-threshold",
                         help="crossing with the unencoded rate")
    at.add_argument("--input", required=True, help="curve CSV")
    at.add_argument("--k", type=int, required=True,
                    help="number of unencoded comparison qubits")
    at.add_argument("--window", type=int, default=5)
    at.add_argument("--per-cycle", action="store_true",
                    help="fit the per-cycle rates instead of totals")
    at.set_defaults(fn=cmd_analyze_pseudo_threshold)
    ac = asub.add_parser("crossing", help="pairwise curve crossings")
    ac.add_argument("--input", required=True, action="append",
                    help="curve CSV (repeat, at least twice)")
    ac.set_defaults(fn=cmd_analyze_crossing)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args, sys.stdout)
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
