"""Command-line interface: ``cohspec synth | analyze | simulate``.

Exit status: 0 success, 2 user/config/data error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_config
from .estimators import (
    ToneTruth,
    amplitude_deviation,
    coherent_amplitude,
    coherent_phase,
    coherent_power,
    mean_amplitude,
    mean_phase,
    phase_deviation,
)
from .formats import (
    ANALYSIS_FORMAT,
    REPORT_FORMAT,
    SWEEP_FORMAT,
    read_two_channel,
    write_table,
    write_two_channel,
)
from .signal_synth import synth_channel_pair
from .sim_harness import DEV_COLUMNS, run_fixed_snr, run_snr_sweep
from .spectral_core import accumulate_recordings

log = logging.getLogger("cohspec")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

ANALYSIS_COLUMNS = ["f_k", "COP", "sqrt_COP", "COA_sine_ref", "mean_amplitude", "mean_phase",
                    "undefined_phase_flag"]
SWEEP_COLUMNS = ["snr", *DEV_COLUMNS, "trials", "se_sqrtCOP", "se_meanamp", "se_COA", "se_meanphase"]
REPORT_COLUMNS = ["f_hz", "bin", "sqrt_COP", "mean_amplitude", "COA", "mean_phase", *DEV_COLUMNS]


def _load(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config, preset=args.preset)
    else:
        cfg = parse_config("", preset=args.preset, source="<defaults>")
    return cfg.with_overrides(seed=getattr(args, "seed", None), snr=getattr(args, "snr", None))


def cmd_synth(args) -> int:
    cfg = _load(args)
    pair = synth_channel_pair(cfg.multisine(), cfg.noise(), cfg.grid)
    meta = {**cfg.echo(), "master_seed": cfg.experiment.master_seed, "version": __version__}
    write_two_channel(args.out, pair.channel_a, pair.channel_b, synthesis=meta)
    log.info("wrote %d samples per channel to %s", cfg.grid.total_samples, args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    rec = read_two_channel(args.input)
    acc = accumulate_recordings(rec.channel_a, rec.channel_b)
    cop = coherent_power(acc)
    amp_c = coherent_amplitude(acc)
    ph_c = coherent_phase(acc)
    amp_m = mean_amplitude(acc)
    ph_m = mean_phase(acc)
    columns = list(ANALYSIS_COLUMNS)
    cols = [acc.grid.frequencies(), cop.values, amp_c.values, ph_c.values, amp_m.values, ph_m.values,
            ph_c.undefined.astype(int)]

    synthesis = rec.header.get("synthesis")
    header = {"format": ANALYSIS_FORMAT, "source": str(args.input),
              "sample_rate_hz": acc.grid.sample_rate_hz, "segment_len": acc.grid.segment_len,
              "num_segments": acc.grid.num_segments}
    seed = synthesis.get("master_seed") if isinstance(synthesis, dict) else None
    config_echo = synthesis

    if args.config:
        truth_cfg = load_config(args.config, preset=args.preset).with_overrides(seed=args.seed, snr=args.snr)
        if truth_cfg.grid.segment_len != acc.grid.segment_len or \
                truth_cfg.grid.sample_rate_hz != acc.grid.sample_rate_hz:
            raise ValueError(f"truth config grid {truth_cfg.grid} does not match the recording {acc.grid}")
        ms = truth_cfg.experiment.multisine(truth_cfg.resolved_signal_amplitude())
        truth = ToneTruth(np.asarray(ms.tone_bins), ms.amplitude, np.asarray(ms.phases))
        idx = truth.tone_bins - 1
        for name, dev in (("dev_sqrtCOP", amplitude_deviation(amp_c, truth)),
                          ("dev_meanamp", amplitude_deviation(amp_m, truth)),
                          ("dev_COA", phase_deviation(ph_c, truth)),
                          ("dev_meanphase", phase_deviation(ph_m, truth))):
            full = np.full(acc.grid.num_bins, None, dtype=object)
            full[idx] = dev
            columns.append(name)
            cols.append(full)
        seed = truth_cfg.experiment.master_seed
        config_echo = truth_cfg.echo()

    header["master_seed"] = seed
    header["config"] = config_echo
    int_cols = {"undefined_phase_flag"}
    rows = []
    for k in range(acc.grid.num_bins):
        row = []
        for name, c in zip(columns, cols):
            v = c[k]
            row.append(int(v) if name in int_cols else (None if v is None else float(v)))
        rows.append(row)
    write_table(args.out, header, columns, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    exp = cfg.experiment
    if args.mode == "fixed-snr":
        if cfg.snr is None:
            raise ValueError("fixed-snr mode needs an SNR (--snr or [experiment] snr)")
        rep = run_fixed_snr(exp, cfg.snr)
        header = {"format": REPORT_FORMAT, "master_seed": exp.master_seed, "snr": cfg.snr,
                  "config": exp.echo(), "freq_averaged": rep.freq_averaged,
                  "undefined_counts": rep.undefined_counts,
                  "wall_clock_s": rep.metadata["wall_clock_s"]}
        rows = [[int(rep.per_tone[c][i]) if c == "bin" else float(rep.per_tone[c][i])
                 for c in REPORT_COLUMNS] for i in range(len(rep.per_tone["bin"]))]
        write_table(args.out, header, REPORT_COLUMNS, rows)
        log.info("frequency-averaged deviations: %s", rep.freq_averaged)
        return EXIT_OK

    res = run_snr_sweep(exp, workers=args.workers)
    amp_x, ph_x = res.amplitude_crossover(), res.phase_crossover()
    header = {"format": SWEEP_FORMAT, "master_seed": exp.master_seed, "config": exp.echo(),
              "amplitude_crossover": list(amp_x) if amp_x else None,
              "phase_crossover": list(ph_x) if ph_x else None,
              "wall_clock_s": res.wall_clock_s}
    rows = []
    for r in res.rows:
        rows.append([r.snr, *(r.means[c] for c in DEV_COLUMNS), r.trials,
                     *(r.stderr[c] for c in DEV_COLUMNS)])
    write_table(args.out, header, SWEEP_COLUMNS, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cohspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", required=True, help=out_help)
        sp.add_argument("--seed", type=int, help="master seed (overrides config)")
        sp.add_argument("--snr", type=float, help="signal-to-noise ratio U0/N0")
        sp.add_argument("--preset", choices=["paper", "desk"], help="grid preset")

    sp = sub.add_parser("synth", help="synthesize a two-channel recording")
    common(sp, "two-channel output file")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("analyze", help="estimate COP/COA and baselines from a recording")
    sp.add_argument("input", help="two-channel input file")
    common(sp, "per-bin CSV output")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("simulate", help="run the fixed-SNR experiment or the SNR sweep")
    common(sp, "report CSV output")
    sp.add_argument("--mode", choices=["fixed-snr", "sweep"], required=True)
    sp.add_argument("--workers", type=int, default=1, help="threads for sweep trials")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"cohspec {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"cohspec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
