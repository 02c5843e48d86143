"""Command-line front end: one subcommand per figure-style run, CSV out.

Each run writes a CSV (unit-annotated header, 12 significant digits) and,
when ``--out`` is given, a JSON manifest next to it.  Passing that manifest
back through ``--config`` repeats the run with the same resolved settings.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

import argparse
import configparser
import csv
import io
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .ambiguity import (
    accumulated_isi,
    af_slice,
    doppler_accumulated_isi,
    fair_symbol_count,
    get_constellation,
    periodic_doppler_variation,
)
from .capacity import (
    ChannelModel,
    ConditioningError,
    MultipathChannel,
    db2lin,
    ergodic_se,
    mutual_info_matrix,
    se_curve,
    three_path_reference,
)
from .experiments import DopplerSceneConfig, McConfig, doppler_mse, mc_af_slice
from .pulse import FoldKind, PulseSpec, folded_spectrum_sq, spectrum_sq
from .quadrature import QuadratureWarning

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


def parse_range(text):
    """'a:b:step' (inclusive of b) or a comma list -> float array."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise ValueError
            a, b, step = parts
            n = int(np.floor((b - a) / step + 1e-9))
            return a + step * np.arange(n + 1)
        return np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use a:b:step or a comma list") from None


def parse_paths(text):
    """'h1@tau1,h2@tau2' with complex gains such as 0.5+0.2j -> [(h, tau), ...]."""
    out = []
    try:
        for item in text.split(","):
            gain, delay = item.split("@")
            out.append((complex(gain.strip().replace(" ", "")), float(delay)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad path list {text!r}; use gain@delay,...") from None
    if not out:
        raise argparse.ArgumentTypeError("empty path list")
    return out


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(header, rows, stream):
    writer = csv.writer(stream, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _pulse(args):
    if args.pulse == "sinc":
        return PulseSpec.sinc(args.T)
    return PulseSpec.rrc(args.beta, args.T)


def _xis(args, default):
    xis = args.xi or default
    for xi in xis:
        if not 0 < xi <= 1:
            raise UsageError(f"compression factor must lie in (0, 1], got {xi}")
    return xis


def cmd_spectrum(args):
    pulse = _pulse(args)
    f = args.grid if args.grid is not None else parse_range("-1:1:0.005")
    xis = _xis(args, [0.6, 0.75, 0.9, 1.0])
    header = ["f [Hz]", "spectrum [1/Hz]"]
    cols = [spectrum_sq(pulse, f)]
    for xi in xis:
        header += [f"folded xi={xi:g} [1/Hz]", f"twisted xi={xi:g} [1/Hz]"]
        cols += [folded_spectrum_sq(pulse, xi, f), folded_spectrum_sq(pulse, xi, f, FoldKind.TWISTED)]
    return header, np.column_stack([f] + cols)


def cmd_se(args):
    pulse = _pulse(args)
    snr_db = args.snr_db if args.snr_db is not None else parse_range("0:20:1")
    xis = _xis(args, [0.75, 0.85, 1.0])
    header = ["snr [dB]"]
    cols = [snr_db]
    for xi in xis:
        if args.ergodic:
            model = ChannelModel(args.paths, args.tau_max)
            res = ergodic_se(pulse, xi, model, db2lin(snr_db), args.trials, args.seed,
                             bounds=True, workers=args.threads)
        else:
            channel = MultipathChannel.from_paths(args.channel) if args.channel else three_path_reference(pulse.T)
            res = se_curve(pulse, xi, channel, snr_db)
        header += [f"rate xi={xi:g} [bit/s/Hz]", f"upper xi={xi:g} [bit/s/Hz]", f"lower xi={xi:g} [bit/s/Hz]"]
        cols += [res.rate, res.rate_ub, res.rate_lb]
        if args.matrix_n:
            if args.ergodic:
                raise UsageError("--matrix-n applies to a fixed channel only")
            header.append(f"matrix xi={xi:g} N={args.matrix_n} [bit/s/Hz]")
            cols.append([mutual_info_matrix(pulse, xi, channel, s, args.matrix_n) for s in db2lin(snr_db)])
    return header, np.column_stack(cols)


def cmd_af(args):
    pulse = _pulse(args)
    axis = args.axis
    default = "0:30:0.25" if axis == "delay" else "0:2:0.02"
    grid = args.grid if args.grid is not None else parse_range(default)
    xis = _xis(args, [1.0, 0.75])
    const = get_constellation(args.constellation)
    unit = "s" if axis == "delay" else "Hz"
    header = [f"{axis} [{unit}]"]
    cols = [grid]
    for xi in xis:
        N = fair_symbol_count(args.N, xi)
        header.append(f"closed xi={xi:g} N={N} [1]")
        cols.append(af_slice(pulse, xi, N, const, axis, grid).values)
        if args.trials > 0:
            cfg = McConfig(pulse, xi, N, const.name, args.trials, args.seed, args.threads)
            header.append(f"monte-carlo xi={xi:g} N={N} [1]")
            cols.append(mc_af_slice(cfg, axis, grid).values)
    return header, np.column_stack(cols)


_XFUN = {
    "accumulated": ("tau [s]", "0:30:0.25", accumulated_isi),
    "doppler-accumulated": ("nu [Hz]", "0:2:0.02", doppler_accumulated_isi),
    "periodic": ("nu [Hz]", "0:2:0.02", periodic_doppler_variation),
}


def cmd_xfun(args):
    pulse = _pulse(args)
    label, default, fn = _XFUN[args.function]
    grid = args.grid if args.grid is not None else parse_range(default)
    xis = _xis(args, [1.0, 0.75])
    header = [label]
    cols = [grid]
    for xi in xis:
        header.append(f"{args.function} xi={xi:g} N={args.N} [1]")
        cols.append(np.asarray(fn(pulse, xi, args.N, grid)))
    return header, np.column_stack(cols)


def cmd_doppler_mse(args):
    pulse = _pulse(args)
    snr_db = args.snr_db if args.snr_db is not None else parse_range("0:20:5")
    xis = _xis(args, [1.0, 0.6])
    targets = args.targets or [(1.0, 0.5), (0.15, -0.4)]
    try:
        targets = [(float(np.real(a)), d) for a, d in targets]
        scene = DopplerSceneConfig(targets=targets, snr_db=tuple(snr_db), trials=args.trials,
                                   seed=args.seed, n_nyquist=args.N, excision=args.excision,
                                   workers=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = ["snr [dB]"]
    cols = [snr_db]
    for xi in xis:
        res = doppler_mse(scene, pulse, xi, args.constellation)
        header.append(f"mse xi={xi:g} N={res.meta['N']} [Hz^2]")
        cols.append(res.mse)
    return header, np.column_stack(cols)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pulse", choices=["rrc", "sinc"], default="rrc")
    common.add_argument("--beta", type=float, default=0.3, help="RRC roll-off")
    common.add_argument("--T", type=float, default=1.0, help="Nyquist symbol period [s]")
    common.add_argument("--xi", type=float, action="append", help="compression factor (repeatable)")
    common.add_argument("--seed", type=int, default=2025)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", type=Path, help="CSV path (stdout when omitted)")
    common.add_argument("--config", type=Path, help="INI file or JSON manifest; flags win")

    parser = argparse.ArgumentParser(prog="ftn-isac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="pulse, folded and twisted spectra")
    p.add_argument("--grid", type=parse_range, help="frequency grid a:b:step [Hz]")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("se", parents=[common], help="spectral efficiency and bounds versus SNR")
    p.add_argument("--snr-db", type=parse_range)
    p.add_argument("--channel", type=parse_paths, help="gain@delay,... (default: three-path reference)")
    p.add_argument("--ergodic", action="store_true", help="average over random channels")
    p.add_argument("--paths", type=int, default=3, help="ergodic: number of paths")
    p.add_argument("--tau-max", type=float, default=2.0, help="ergodic: largest delay [s]")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--matrix-n", type=int, default=0,
                   help="add the finite-block log-det reference with this many symbols (0: off)")
    p.set_defaults(func=cmd_se)

    p = sub.add_parser("af", parents=[common], help="normalized ambiguity slices")
    p.add_argument("--axis", choices=["delay", "doppler"], default="delay")
    p.add_argument("--grid", type=parse_range)
    p.add_argument("--N", type=int, default=100, help="Nyquist frame length; FTN uses round(N/xi)")
    p.add_argument("--constellation", default="qpsk")
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0: closed form only)")
    p.set_defaults(func=cmd_af)

    p = sub.add_parser("xfun", parents=[common], help="accumulated ISI and Doppler variation functions")
    p.add_argument("--function", choices=sorted(_XFUN), default="accumulated")
    p.add_argument("--grid", type=parse_range)
    p.add_argument("--N", type=int, default=100)
    p.set_defaults(func=cmd_xfun)

    p = sub.add_parser("doppler-mse", parents=[common], help="two-target Doppler MSE versus SNR")
    p.add_argument("--snr-db", type=parse_range)
    p.add_argument("--N", type=int, default=400, help="Nyquist frame length; FTN uses round(N/xi)")
    p.add_argument("--targets", type=parse_paths, help="reflectivity@doppler,...")
    p.add_argument("--constellation", default="qpsk")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--excision", type=float, default=5.0,
                   help="peak excision radius in units of 1/(N xi T)")
    p.set_defaults(func=cmd_doppler_mse)
    return parser


def _config_values(path):
    """Flat key -> raw value mapping from an INI file or a JSON manifest."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return dict(json.loads(text)["config"])
    cp = configparser.ConfigParser()
    cp.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    values = {}
    for section in cp.sections():
        values.update(cp[section])
    return values


def _apply_config(parser, sub_parser, argv, values):
    """Install config values as defaults on ``sub_parser`` and re-parse."""
    actions = {a.dest: a for a in sub_parser._actions}
    given = {a.split("=")[0] for a in argv if a.startswith("--")}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config", "func", "help"):
            continue
        if dest not in actions:
            raise UsageError(f"unknown config key {key!r}")
        action = actions[dest]
        if isinstance(action, argparse._AppendAction) and set(action.option_strings) & given:
            # appended flags would extend the config list instead of replacing it
            continue
        if raw is None or isinstance(raw, (int, float, bool, list)) and not isinstance(raw, str):
            defaults[dest] = _coerce_json(action, raw)
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = str(raw).lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[dest] = [action.type(v) for v in str(raw).split(",")]
        else:
            defaults[dest] = action.type(raw) if action.type else raw
    sub_parser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _coerce_json(action, raw):
    if raw is None:
        return None
    if action.type is parse_range:
        return np.asarray(raw, dtype=float)
    if action.type is parse_paths:
        return [(complex(g), float(d)) for g, d in raw]
    return raw


def _manifest_config(args):
    out = {}
    for key, val in vars(args).items():
        if key in ("func", "config", "out"):
            continue
        if isinstance(val, np.ndarray):
            val = [float(v) for v in val]
        elif isinstance(val, Path):
            val = str(val)
        elif isinstance(val, list) and val and isinstance(val[0], tuple):
            val = [[str(g).strip("()"), d] for g, d in val]
        out[key] = val
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            sub_parser = parser._subparsers._group_actions[0].choices[args.command]
            args = _apply_config(parser, sub_parser, argv, _config_values(args.config))
        if args.pulse == "rrc" and not 0 <= args.beta <= 1:
            raise UsageError("roll-off must lie in [0, 1]")
        if args.T <= 0:
            raise UsageError("T must be positive")
        start = time.time()
        with warnings.catch_warnings():
            warnings.simplefilter("error", QuadratureWarning)
            header, table = args.func(args)
        elapsed = time.time() - start
    except (UsageError, ValueError, OSError, KeyError, argparse.ArgumentTypeError,
            configparser.Error) as exc:
        parser.error(str(exc))
    except (ConditioningError, QuadratureWarning, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if args.out is None:
        buf = io.StringIO(newline="")
        write_csv(header, table, buf)
        sys.stdout.write(buf.getvalue())
        return 0
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        write_csv(header, table, fh)
    manifest = {
        "command": args.command,
        "config": _manifest_config(args),
        "seed": args.seed,
        "version": __version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(start)),
        "wall_clock_s": round(elapsed, 3),
        "threads": args.threads,
        "outputs": [str(args.out)],
    }
    args.out.with_suffix(args.out.suffix + ".json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
