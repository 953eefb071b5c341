"""Command-line front end.

Every subcommand prints the seed it resolved, writes its reports under
``--out`` and exits 0 on success, 1 when a built-in verification fails
and 2 on bad usage or input. Reports contain no timestamps or host
details, so a re-run with the printed seed and the same config produces
identical files.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .config import load_config
from .device import DeviceState, calibrate_levels, program_level, read_level
from .exceptions import InvalidInputError, RramError
from .limc import compile_netlist, emit_spice, execute_schedule, input_vectors, logical_sim
from .mvl import (AutomatonConfig, TritVector, run_automaton, software_automaton, ternary_add,
                  trits_needed)
from .sec.lock import (DemoMLP, accuracy, demo_task, dump_locked, keystream,
                       keystream_health, lock_weights, program_weights, read_weights,
                       unlock_weights)
from .sec.puf import enroll, evaluate_population, health_check
from .sec.trng import calibrate_trng, randomness_tests, trng_stream
from .seeding import MASK64, child_seed, substream
from .templates import calibrate_gates
from .xbar import energy_report, new_crossbar

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


class VerificationFailed(Exception):
    pass


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _prob(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("probability must lie in [0, 1]")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _bitstring(text):
    if not text or set(text) - {"0", "1"}:
        raise InvalidInputError(f"input vector must be a string of 0/1: {text!r}")
    return [int(ch) for ch in text]


def _path(out, name):
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _jsonable(v):
    return None if isinstance(v, float) and math.isnan(v) else v


# ------------------------------------------------------------------- lim

def schedule_document(sched, graph, netlist):
    steps = []
    for k, st in enumerate(sched.program.steps):
        steps.append({
            "index": k,
            "op_id": st.op_id,
            "phase": st.phase,
            "width": st.width,
            "row_v": [_jsonable(float(v)) for v in st.row_v],
            "col_v": [_jsonable(float(v)) for v in st.col_v],
            "cells": [list(c) for c in st.cells()],
            "bus_load": list(st.bus_load) if st.bus_load is not None else None,
        })
    return {
        "model": netlist.model,
        "rows": sched.rows,
        "cols": sched.cols,
        "inputs": sched.inputs,
        "outputs": [{"name": n, "signal": s, "cell": list(sched.placement[s])}
                    for n, s in sched.outputs],
        "placement": {s: list(rc) for s, rc in sched.placement.items()},
        "gate_counts": graph.counts(),
        "ops": [{"op_id": op, "kind": kind} for op, kind in sorted(sched.op_kinds.items())],
        "gate_order": [{"op_id": op, "kind": g.kind, "inputs": list(g.inputs),
                        "output": g.output} for op, g in sched.gate_order],
        "phases": sched.phase_names,
        "duration": sched.duration,
        "input_load_steps": {"binding": "load steps drive +v_write for 1, -v_write for 0",
                             "steps": sched.load_steps},
        "steps": steps,
    }


def cmd_lim(args, cfg):
    try:
        with open(args.blif, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise RramError(f"cannot read {args.blif}: {exc.strerror}")
    rows = args.rows or cfg.lim.rows
    cols = args.cols or cfg.lim.cols
    recipe = cfg.recipe()
    net, graph, sched = compile_netlist(text, rows, cols, recipe, cfg.lim.max_fanout)
    sched.verify()
    if args.exhaustive:
        vectors = input_vectors(len(net.inputs))
    elif args.inputs:
        vectors = [_bitstring(v) for v in args.inputs]
        for v in vectors:
            if len(v) != len(net.inputs):
                raise RramError(f"input vector {''.join(map(str, v))} has {len(v)} bits, "
                                f"netlist has {len(net.inputs)} inputs")
    else:
        vectors = [[0] * len(net.inputs)]
    xbar = new_crossbar(rows, cols, cfg.device, cfg.variation if args.d2d else None,
                        args.seed, recipe=recipe)
    results, mismatches = [], 0
    for bits in vectors:
        got, _ = execute_schedule(xbar, sched, bits, args.c2c)
        want = logical_sim(net, bits)
        mismatches += got != want
        results.append((bits, got, want))
    report = energy_report(xbar.trace)

    stem = net.model
    with open(_path(args.out, f"{stem}.sp"), "w", encoding="utf-8") as fh:
        fh.write(emit_spice(sched, cfg.device, vectors[0]))
    _write_json(_path(args.out, f"{stem}.schedule.json"), schedule_document(sched, graph, net))
    with open(_path(args.out, f"{stem}.energy.csv"), "w", encoding="utf-8") as fh:
        report.write_csv(fh)
    with open(_path(args.out, f"{stem}.results.csv"), "w", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["inputs", "outputs", "expected", "match"])
        for bits, got, want in results:
            w.writerow(["".join(map(str, bits)), "".join(map(str, got)),
                        "".join(map(str, want)), int(got == want)])
    _write_json(_path(args.out, f"{stem}.metrics.json"), {
        "vectors": len(vectors),
        "mismatches": mismatches,
        "gate_counts": graph.counts(),
        "cells_used": len(sched.placement),
        "energy_total": report.total,
        "energy_per_phase": report.per_phase,
        "energy_identity_error": report.identity_error(),
    })
    for bits, got, want in results:
        print(f"{''.join(map(str, bits))} -> {''.join(map(str, got))}"
              + ("" if got == want else f"  (expected {''.join(map(str, want))})"))
    print("energy per phase: " + ", ".join(f"{k}={v:.4g} J" for k, v in report.per_phase.items()))
    if mismatches:
        raise VerificationFailed(f"{mismatches} of {len(vectors)} vectors disagree with "
                                 "the Boolean reference")


# ------------------------------------------------------------------- mvl

def cmd_mvl_add(args, cfg):
    a_val = TritVector.parse(args.a).value
    b_val = TritVector.parse(args.b).value
    n = args.trits or max(1, trits_needed(a_val), trits_needed(b_val))
    a, b = TritVector.from_int(a_val, n), TritVector.from_int(b_val, n)
    cells = 3 * n + 1
    xcols = min(32, cells)
    xbar = new_crossbar(-(-cells // xcols), xcols, cfg.device,
                        cfg.variation if args.d2d else None, args.seed, recipe=cfg.recipe())
    total = ternary_add(xbar, a, b, cfg.levels, c2c=args.c2c)
    ok = total.value == a_val + b_val
    print(f"{total} (base 3)")
    print(f"{total.value} (decimal)")
    _write_json(_path(args.out, "mvl_add.json"), {
        "a": str(a_val), "b": str(b_val), "trits": n,
        "sum_base3": str(total), "sum_decimal": str(total.value),
        "sum_digits_lsb_first": list(total.digits),
        "expected_decimal": str(a_val + b_val), "exact": ok, "cells": cells,
    })
    if not ok:
        raise VerificationFailed(f"in-memory sum {total.value} != {a_val + b_val}")


def _ladder_for(cfg, n_states):
    for ladder in (cfg.levels, cfg.automaton_levels):
        if ladder.n_levels >= n_states:
            return ladder
    return calibrate_levels(cfg.device, n_levels=n_states)


def cmd_fsa(args, cfg):
    depth = args.depth or cfg.automaton.depth
    c1 = cfg.automaton.c1 if args.c1 is None else args.c1
    c2 = cfg.automaton.c2 if args.c2 is None else args.c2
    steps = args.steps or cfg.automaton.steps
    acfg = AutomatonConfig(depth=depth, c1=c1, c2=c2)
    ladder = _ladder_for(cfg, acfg.n_states)
    xbar = new_crossbar(1, 1, cfg.device, cfg.variation if args.d2d else None, args.seed,
                        recipe=cfg.recipe())
    run = run_automaton(xbar, acfg, ladder, steps, args.seed, c2c=args.c2c)
    with open(_path(args.out, "fsa_trajectory.csv"), "w", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "state", "action", "feedback", "misread"])
        w.writerows(run.rows())
    tail = min(1000, steps)
    freq = run.action_frequency()
    final = run.action_frequency(tail)
    doc = {"depth": depth, "c1": c1, "c2": c2, "steps": steps, "levels": ladder.n_levels,
           "action1_frequency": freq[1], "action2_frequency": freq[2],
           "final_window": tail, "final_action1_frequency": final[1],
           "misdetections": run.misdetections}
    verified = None
    if not args.c2c:
        verified = run.states == software_automaton(acfg, steps, args.seed).states
        doc["matches_software_automaton"] = verified
    _write_json(_path(args.out, "fsa_metrics.json"), doc)
    print(f"action frequencies: 1={freq[1]:.4f} 2={freq[2]:.4f}; "
          f"last {tail} steps: 1={final[1]:.4f}; misdetections {run.misdetections}")
    if verified is False:
        raise VerificationFailed("device-backed trajectory diverged from the software automaton")


# ------------------------------------------------------------------ sec

def cmd_trng(args, cfg):
    tcfg = cfg.trng
    if args.target_p is not None:
        tcfg = replace(tcfg, target_p=args.target_p)
    tcfg = tcfg.validate()
    rows, cols = tcfg.cell[0] + 1, tcfg.cell[1] + 1
    xbar = new_crossbar(rows, cols, cfg.device, cfg.variation if args.d2d else None,
                        args.seed, recipe=cfg.recipe())
    h = cfg.harness
    tcfg, achieved = calibrate_trng(xbar, tcfg, args.seed, h.trng_calibration_trials,
                                    h.trng_max_iter, h.trng_tolerance)
    debias = args.debias or tcfg.debias
    stream = trng_stream(xbar, args.n, tcfg, substream(args.seed, "trng"), debias)
    bits = stream.bits
    with open(_path(args.out, "trng.bin"), "wb") as fh:
        fh.write(np.packbits(bits).tobytes())
    stats = [("raw_bits", stream.raw_consumed), ("output_bits", len(bits)),
             ("debias", int(debias)), ("pulse_amplitude", repr(tcfg.pulse_amplitude)),
             ("calibrated_p", repr(achieved)),
             ("ones", int(bits.sum())), ("bias", repr(stream.bias))]
    report = None
    if len(bits) >= 1000:
        report = randomness_tests(bits, h.alpha)
        stats += [("monobit_z", repr(report.monobit_z)), ("runs_z", repr(report.runs_z)),
                  ("monobit_pass", int(report.monobit_pass)), ("runs_pass", int(report.runs_pass)),
                  ("alpha", repr(h.alpha))]
    with open(_path(args.out, "trng_stats.csv"), "w", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["statistic", "value"])
        w.writerows(stats)
    print(f"raw {stream.raw_consumed} -> {len(bits)} bits, bias {stream.bias:+.5f}, "
          f"amplitude {tcfg.pulse_amplitude:.5f} V")
    if report is None:
        print("randomness tests skipped (fewer than 1000 output bits)")
        return
    print(f"monobit z {report.monobit_z:+.3f} ({'pass' if report.monobit_pass else 'FAIL'}), "
          f"runs z {report.runs_z:+.3f} ({'pass' if report.runs_pass else 'FAIL'})")
    if not report.passed:
        raise VerificationFailed(f"randomness tests failed at alpha={h.alpha}")


def cmd_puf(args, cfg):
    h = cfg.harness
    m = args.m or h.rereads
    pop = evaluate_population(args.chips, args.challenges, m, args.seed, h.puf_rows,
                              h.puf_cols, cfg.device, cfg.variation, h.challenge_len,
                              h.response_len, cfg.trng)
    with open(_path(args.out, "puf_crp.csv"), "w", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chip_id", "challenge", "response"])
        w.writerows(pop.crp_rows())
    doc = pop.metrics.as_dict()
    health = [health_check(inst) for inst in pop.chips]
    doc["unhealthy_chips"] = [i for i, hc in enumerate(health) if not hc.ok]
    doc["rereads"] = m
    doc["challenges"] = args.challenges
    band = (50 - h.metric_band, 50 + h.metric_band)
    doc["checks"] = {
        "uniqueness_in_band": band[0] <= doc["uniqueness"] <= band[1],
        "uniformity_in_band": band[0] <= doc["uniformity_mean"] <= band[1],
        "reliability_above_floor": doc["reliability_mean"] >= h.reliability_floor,
    }
    _write_json(_path(args.out, "puf_metrics.json"), doc)
    print(f"uniformity {doc['uniformity_mean']:.2f}%  uniqueness {doc['uniqueness']:.2f}%  "
          f"reliability {doc['reliability_mean']:.2f}%  bit aliasing "
          f"{doc['bit_aliasing_mean']:.2f}%")
    if doc["unhealthy_chips"]:
        reasons = {i: health[i].reason for i in doc["unhealthy_chips"]}
        raise VerificationFailed(f"chips failed the PUF health check: {reasons}")


def _load_weights(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        mlp = DemoMLP(np.asarray(doc["levels"], dtype=np.int64), np.asarray(doc["b1"], float),
                      np.asarray(doc["b2"], float))
    except KeyError as exc:
        raise RramError(f"weights file lacks field {exc.args[0]!r}")
    mlp.weights()
    return mlp


def cmd_lock(args, cfg):
    h = cfg.harness
    mlp, X, y = demo_task(args.seed)
    if args.weights:
        try:
            mlp = _load_weights(args.weights)
        except OSError as exc:
            raise RramError(f"cannot read {args.weights}: {exc.strerror}")
    chip_seed = child_seed(args.seed, "chip", 0) if args.chip_seed is None else args.chip_seed
    sid = h.lock_schedule_id
    owner = enroll(chip_seed, h.puf_rows, h.puf_cols, cfg.device, cfg.variation,
                   h.challenge_len, h.response_len, cfg.trng)
    n_bits = 2 * mlp.n_weights
    key = keystream(owner, sid, n_bits)
    if not keystream_health(key):
        raise VerificationFailed("owner chip keystream is constant; PUF not usable")
    locked = lock_weights(mlp.levels, key)
    store = new_crossbar(-(-mlp.n_weights // 32), min(32, mlp.n_weights), cfg.device,
                         cfg.variation if args.d2d else None, child_seed(chip_seed, "weights"),
                         recipe=cfg.recipe())
    cells = program_weights(store, locked, cfg.levels, c2c=args.c2c)
    stored = read_weights(store, cells, cfg.levels)
    restored = unlock_weights(stored, key)
    exact = bool(np.array_equal(restored, mlp.levels))
    base_acc = accuracy(mlp, X, y)
    wrong = []
    for i in range(args.wrong_chips):
        other = enroll(child_seed(chip_seed, "wrong-chip", i), h.puf_rows, h.puf_cols,
                       cfg.device, cfg.variation, h.challenge_len, h.response_len, cfg.trng)
        levels = unlock_weights(stored, keystream(other, sid, n_bits))
        wrong.append((accuracy(mlp, X, y, levels), float(np.mean(levels != mlp.levels))))
    with open(_path(args.out, "locked_weights.json"), "w", encoding="utf-8") as fh:
        fh.write(dump_locked(locked, mlp, sid))
    doc = {"chip_seed": str(chip_seed), "challenge_schedule_id": f"{sid:016x}",
           "weights": mlp.n_weights, "unlock_exact": exact,
           "accuracy_correct_key": accuracy(mlp, X, y, restored),
           "accuracy_before_lock": base_acc, "wrong_chips": args.wrong_chips}
    if wrong:
        accs = [a for a, _ in wrong]
        doc.update({"wrong_chip_accuracy_mean": float(np.mean(accs)),
                    "wrong_chip_accuracy_max": float(np.max(accs)),
                    "wrong_chip_level_mismatch_mean": float(np.mean([d for _, d in wrong]))})
    _write_json(_path(args.out, "lock_report.json"), doc)
    print(f"unlock with enrolling chip: {'exact' if exact else 'MISMATCH'}; "
          f"accuracy {doc['accuracy_correct_key']:.3f}")
    if wrong:
        print(f"wrong chips: mean accuracy {doc['wrong_chip_accuracy_mean']:.3f}, "
              f"levels changed {doc['wrong_chip_level_mismatch_mean']:.1%}")
    if not exact:
        raise VerificationFailed("unlock with the enrolling chip did not restore the weights")


def cmd_calibrate(args, cfg):
    doc = {}
    for name, ladder in (("levels", cfg.levels), ("automaton_levels", cfg.automaton_levels)):
        new = calibrate_levels(cfg.device, ladder.n_levels, None, ladder.set_amplitude,
                               ladder.set_width, ladder.reset_width, ladder.dt)
        for k in range(new.n_levels):
            got = read_level(program_level(DeviceState(), cfg.device, new, k), cfg.device, new)
            if got != k:
                raise VerificationFailed(f"{name}: level {k} reads back as {got}")
        d = asdict(new)
        d["targets"] = [float(v) for v in d["targets"]]
        doc[name] = d
    if not args.skip_gates:
        recipe, margins = calibrate_gates(cfg.device, cfg.recipe())
        doc["gates"] = asdict(recipe)
        for k, v in margins.items():
            print(f"gate margin {k}: {v:+.4f} V")
        if min(margins.values()) <= 0:
            raise VerificationFailed("gate calibration left a non-positive margin")
    xbar = new_crossbar(cfg.trng.cell[0] + 1, cfg.trng.cell[1] + 1, cfg.device,
                        recipe=cfg.recipe())
    h = cfg.harness
    tcfg, achieved = calibrate_trng(xbar, cfg.trng, args.seed, h.trng_calibration_trials,
                                    h.trng_max_iter, h.trng_tolerance)
    doc["trng"] = {"pulse_amplitude": tcfg.pulse_amplitude}
    _write_json(_path(args.out, "calibration.json"), doc)
    print(f"levels: {cfg.levels.n_levels} and {cfg.automaton_levels.n_levels} calibrated; "
          f"TRNG amplitude {tcfg.pulse_amplitude:.5f} V (p={achieved})")


# ----------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config overriding the shipped defaults")
    common.add_argument("--seed", type=_u64, help="global 64-bit seed (default: config seed)")
    common.add_argument("--out", default=".", help="directory for report files")
    common.add_argument("--c2c", type=_on_off, default=False, metavar="on|off",
                        help="cycle-to-cycle variation during execution (default off)")
    common.add_argument("--d2d", type=_on_off, default=False, metavar="on|off",
                        help="device-to-device variation for simulated arrays "
                             "(default off; PUF and lock chips always use it)")

    p = argparse.ArgumentParser(prog="rramkit", description="RRAM crossbar toolchain")
    p.add_argument("--version", action="version", version=f"rramkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lim", parents=[common], help="compile and run a BLIF netlist")
    s.add_argument("blif")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--inputs", nargs="+", metavar="BITS",
                   help="input vectors as 0/1 strings in .inputs order")
    g.add_argument("--exhaustive", action="store_true", help="run every input vector")
    s.add_argument("--rows", type=_positive)
    s.add_argument("--cols", type=_positive)
    s.set_defaults(func=cmd_lim)

    s = sub.add_parser("mvl-add", parents=[common],
                       help="ternary in-memory addition (decimal, or base 3 with 0t prefix)")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--trits", type=_positive, help="operand width (default: smallest fit)")
    s.set_defaults(func=cmd_mvl_add)

    s = sub.add_parser("fsa", parents=[common], help="Krinsky automaton on one cell")
    s.add_argument("--depth", type=_positive)
    s.add_argument("--c1", type=_prob)
    s.add_argument("--c2", type=_prob)
    s.add_argument("--steps", type=_positive)
    s.set_defaults(func=cmd_fsa)

    s = sub.add_parser("trng", parents=[common], help="calibrated TRNG stream and tests")
    s.add_argument("--n", type=_positive, default=100_000, help="raw bits to draw")
    s.add_argument("--debias", action="store_true", help="von Neumann post-processing")
    s.add_argument("--target-p", type=float)
    s.set_defaults(func=cmd_trng)

    s = sub.add_parser("puf", parents=[common], help="PUF population metrics and CRPs")
    s.add_argument("--chips", type=int, default=50)
    s.add_argument("--challenges", type=_positive, default=1)
    s.add_argument("--m", type=int, help="C2C re-reads per chip")
    s.set_defaults(func=cmd_puf)

    s = sub.add_parser("lock", parents=[common], help="PUF-keyed weight locking")
    s.add_argument("--weights", help="JSON with levels (48 ints 0..3), b1 (8), b2 (2)")
    s.add_argument("--chip-seed", type=_u64)
    s.add_argument("--wrong-chips", type=int, default=50)
    s.set_defaults(func=cmd_lock)

    s = sub.add_parser("calibrate", parents=[common],
                       help="re-derive level, gate and TRNG calibrations")
    s.add_argument("--skip-gates", action="store_true", help="skip the gate voltage sweep")
    s.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (RramError, OSError) as exc:
        print(f"rramkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is None:
        args.seed = cfg.seed
    if getattr(args, "chips", 2) < 2 or getattr(args, "m", None) is not None and args.m < 2:
        print("rramkit: --chips and --m must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "wrong_chips", 0) < 0:
        print("rramkit: --wrong-chips must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    print(f"seed: {args.seed}")
    try:
        args.func(args, cfg)
    except VerificationFailed as exc:
        print(f"rramkit: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (RramError, OSError, ValueError) as exc:
        print(f"rramkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
