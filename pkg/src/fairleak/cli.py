"""``fairleak`` command line.

Exit codes: 0 success, 1 theorem-check failure, 2 usage or configuration
error, 3 data error (including missing files), 4 numerical failure.

Seeds: every command takes ``--seed`` and derives per-role seeds as
``seed + offset`` with offsets split 0, target 1, attack 2, defense 3,
sample 4.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import verify
from .data import (
    SynthSpec,
    _atomic_write_text,
    load_csv,
    load_predictions_csv,
    load_split,
    make_split,
    save_split,
    synth_biased,
    write_csv,
)
from .errors import DataError, FairleakError, InvalidConfig
from .fairness import AdvDebiasConfig, EgdConfig, advdebias_train, egd_train, save_randomized
from .models import DEFAULT_HIDDEN, TrainConfig, fit_logreg, fit_mlp, load_model, predict_soft, save_model
from .pipeline import (
    attack_suite,
    audit_dataset,
    audit_predictions,
    derive_seeds,
    eps_sweep_row,
)

EPS_SWEEP = (1.0, 0.3, 0.1, 0.01)
# Applied after parsing: the global flags are shared by every subparser, and
# argparse defaults on shared actions would let a subcommand reset them.
GLOBAL_DEFAULTS = {"seed": 0, "out_dir": ".", "strict": False, "format": "json"}


def _threads() -> int:
    raw = os.environ.get("FAIRLEAK_THREADS", "")
    try:
        return max(1, int(raw)) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise InvalidConfig(f"FAIRLEAK_THREADS must be an integer, got {raw!r}") from None


def _pair(text: str) -> tuple:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x)


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataError(f"no such file: {p}")
    return p


def _out_path(args, explicit, default_name) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return Path(explicit) if explicit else out_dir / default_name


def _emit(args, rows) -> None:
    """Print a list of flat dicts as JSON or CSV depending on ``--format``."""
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")


def _load_dataset(args, path):
    return load_csv(_existing(path), strict=args.strict)


def _split_for(args, ds):
    if getattr(args, "split", None):
        plan = load_split(_existing(args.split))
    else:
        plan = make_split(ds, seed=derive_seeds(args.seed)["split"])
    plan.validate(ds.n)
    return plan


# -- commands --------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = SynthSpec(n=args.n, p_s1=args.p_s1, p_y1_given_s=args.p_y1,
                     mean_shift=args.mean_shift, leak_shift=args.leak_shift, d=args.d,
                     exact_frequency=args.exact)
    ds = synth_biased(spec, args.seed)
    out = _out_path(args, args.output, "synth.csv")
    write_csv(ds, out)
    meta = {"seed": args.seed, "n": spec.n, "p_s1": spec.p_s1,
            "p_y1_given_s": list(spec.p_y1_given_s), "mean_shift": spec.mean_shift,
            "leak_shift": spec.leak_shift, "d": spec.d, "exact_frequency": spec.exact_frequency}
    _atomic_write_text(out.with_suffix(".json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_split(args) -> int:
    ds = _load_dataset(args, args.data)
    plan = make_split(ds, args.te_fraction, args.aux_tr_fraction,
                      seed=derive_seeds(args.seed)["split"], stratify_on_s=not args.no_stratify)
    save_split(plan, _out_path(args, args.output, "split.json"))
    return 0


def _train_cfg(args, seed):
    return TrainConfig(epochs=args.epochs, learning_rate=args.lr, l2=args.l2, seed=seed)


def cmd_train(args) -> int:
    ds = _load_dataset(args, args.data)
    plan = _split_for(args, ds)
    X, y = ds.features[plan.tr], ds.labels[plan.tr]
    cfg = _train_cfg(args, derive_seeds(args.seed)["target"])
    if args.model == "logreg":
        model = fit_logreg(X, y, cfg=cfg)
    else:
        model = fit_mlp(X, y, cfg=cfg, hidden=args.hidden)
    save_model(model, _out_path(args, args.output, "model.json"))
    return 0


def cmd_attack(args) -> int:
    if args.predictions:
        report, _ = audit_predictions(load_predictions_csv(_existing(args.predictions)),
                                      seed=args.seed, tau=args.tau)
        attacks = report.attacks
    else:
        if not (args.data and args.model):
            raise InvalidConfig("attack needs --predictions, or --data together with --model")
        ds = _load_dataset(args, args.data)
        plan = _split_for(args, ds)
        scores = predict_soft(load_model(_existing(args.model)), ds.features)
        s = ds.sensitive
        attacks = attack_suite(scores[plan.aux_tr], s[plan.aux_tr], scores[plan.aux_te],
                               s[plan.aux_te], args.tau, derive_seeds(args.seed)["attack"])
    rows = [{"attack": name, **res.to_dict()} for name, res in attacks.items()]
    _emit(args, rows)
    return 0


def cmd_fair_train(args) -> int:
    ds = _load_dataset(args, args.data)
    plan = _split_for(args, ds)
    out = _out_path(args, args.output, f"{args.method}.json")
    if args.method == "egd":
        save_randomized(egd_train(ds, plan, EgdConfig(constraint=args.constraint, eps=args.eps)), out)
    else:
        cfg = AdvDebiasConfig(adversary_weight=args.alpha,
                              target_cfg=TrainConfig(seed=derive_seeds(args.seed)["defense"]))
        save_model(advdebias_train(ds, plan, cfg), out)
    return 0


def cmd_audit(args) -> int:
    if bool(args.data) == bool(args.predictions):
        raise InvalidConfig("audit needs exactly one of --data or --predictions")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.predictions:
        report, roc = audit_predictions(load_predictions_csv(_existing(args.predictions)),
                                        seed=args.seed, tau=args.tau)
    else:
        ds = _load_dataset(args, args.data)
        split = load_split(_existing(args.split)) if args.split else None
        report, roc = audit_dataset(ds, seed=args.seed, model=args.model, defense=args.defense,
                                    eps=args.eps, alpha=args.alpha, constraint=args.constraint,
                                    split=split)
        report.configs["data"] = str(Path(args.data).resolve())
        if args.split:
            report.configs["split"] = str(Path(args.split).resolve())
    _atomic_write_text(out_dir / "report.json", report.to_json() + "\n")
    if roc is not None:
        _atomic_write_text(out_dir / "roc.json", json.dumps(roc.to_dict()) + "\n")
    if args.format == "csv":
        rows = [{"attack": k, **v.to_dict()} for k, v in report.attacks.items()]
        _emit(args, rows)
    else:
        sys.stdout.write(report.to_json() + "\n")
    return 0


def cmd_verify_theorems(args) -> int:
    results = verify.run_all(args.sweeps, args.seed)
    rows = [r.to_dict() for r in results]
    if args.output:
        _atomic_write_text(_out_path(args, args.output, ""), json.dumps(rows, indent=2) + "\n")
    _emit(args, rows)
    return 0 if all(r.passed for r in results) else 1


def cmd_plotdata(args) -> int:
    audit_dir = Path(args.audit_dir or args.out_dir)
    roc_path, rep_path = audit_dir / "roc.json", audit_dir / "report.json"
    if not rep_path.exists():
        raise DataError(f"no audit report in {audit_dir}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if roc_path.exists():
        roc = json.loads(roc_path.read_text(encoding="utf-8"))
        lines = ["upsilon,fpr,tpr"] + [f"{u!r},{f!r},{t!r}"
                                       for u, f, t in zip(roc["upsilon"], roc["fpr"], roc["tpr"])]
        _atomic_write_text(out_dir / "roc.csv", "\n".join(lines) + "\n")
        written.append("roc.csv")
    configs = json.loads(rep_path.read_text(encoding="utf-8")).get("configs", {})
    if configs.get("mode") == "dataset" and not args.no_sweep:
        ds = _load_dataset(args, configs["data"])
        if "split" in configs:
            plan = load_split(_existing(configs["split"]))
        else:
            plan = make_split(ds, seed=derive_seeds(args.seed)["split"])
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            rows = list(pool.map(lambda e: eps_sweep_row(ds, plan, e, args.seed), args.eps_values))
        lines = ["eps,dp_level,attack_accuracy,accuracy"]
        lines += [f"{r['eps']!r},{r['dp_level']!r},{r['attack_accuracy']!r},{r['accuracy']!r}"
                  for r in rows]
        _atomic_write_text(out_dir / "eps_sweep.csv", "\n".join(lines) + "\n")
        written.append("eps_sweep.csv")
    if not written:
        raise DataError(f"nothing to export from {audit_dir}")
    _emit(args, [{"file": str(out_dir / name)} for name in written])
    return 0


# -- parser ----------------------------------------------------------------

PLOTDATA_HELP = """\
Writes plain CSV files for external plotting:
  roc.csv        upsilon,fpr,tpr   ROC of the soft attack model on the tuning half
  eps_sweep.csv  eps,dp_level,attack_accuracy,accuracy
                 one EGD run per eps; dp_level is the expected DemPar level on D_tr,
                 attack_accuracy the hard-label attack on D_aux^te,
                 accuracy the expected accuracy on D_te
"""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed (default 0)")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory (default .)")
    common.add_argument("--strict", action="store_true", default=argparse.SUPPRESS,
                        help="fail instead of warn when a feature duplicates S")
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS,
                        help="stdout format (default json)")

    p = argparse.ArgumentParser(prog="fairleak", parents=[common],
                                description="Attribute-inference auditing of fair classifiers.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, parents=[common], **kw)
        sp.set_defaults(func=fn)
        return sp

    sp = add("synth", cmd_synth, help="generate a biased synthetic dataset")
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--p-s1", type=float, default=0.5)
    sp.add_argument("--p-y1", type=_pair, default=(0.5, 0.5), help="P(Y=1|S=0),P(Y=1|S=1)")
    sp.add_argument("--mean-shift", type=float, default=1.0)
    sp.add_argument("--leak-shift", type=float, default=0.0)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--exact", action="store_true", help="exact (S, Y) cell counts")
    sp.add_argument("-o", "--output")

    sp = add("split", cmd_split, help="write a train/test/aux split as JSON")
    sp.add_argument("--data", required=True)
    sp.add_argument("--te-fraction", type=float, default=0.2)
    sp.add_argument("--aux-tr-fraction", type=float, default=0.8)
    sp.add_argument("--no-stratify", action="store_true")
    sp.add_argument("-o", "--output")

    sp = add("train", cmd_train, help="train a target model on D_tr")
    sp.add_argument("--data", required=True)
    sp.add_argument("--split")
    sp.add_argument("--model", choices=("logreg", "mlp"), default="logreg")
    sp.add_argument("--epochs", type=int, default=500)
    sp.add_argument("--lr", type=float, default=0.05)
    sp.add_argument("--l2", type=float, default=0.0)
    sp.add_argument("--hidden", type=_int_list, default=DEFAULT_HIDDEN)
    sp.add_argument("-o", "--output")

    sp = add("attack", cmd_attack, help="run the attribute-inference attacks")
    sp.add_argument("--predictions")
    sp.add_argument("--data")
    sp.add_argument("--model", help="saved target model JSON")
    sp.add_argument("--split")
    sp.add_argument("--tau", type=float, default=0.5)

    sp = add("fair-train", cmd_fair_train, help="train a fairness-constrained model")
    sp.add_argument("--data", required=True)
    sp.add_argument("--split")
    sp.add_argument("--method", choices=("egd", "advdebias"), required=True)
    sp.add_argument("--constraint", choices=("dempar", "eqodds"), default="dempar")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("-o", "--output")

    sp = add("audit", cmd_audit, help="full pipeline; writes report.json and roc.json")
    sp.add_argument("--data")
    sp.add_argument("--predictions")
    sp.add_argument("--split")
    sp.add_argument("--model", choices=("logreg", "mlp"), default="logreg")
    sp.add_argument("--defense", choices=("egd", "advdebias"))
    sp.add_argument("--constraint", choices=("dempar", "eqodds"), default="dempar")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--tau", type=float, default=0.5)

    sp = add("verify-theorems", cmd_verify_theorems, help="brute-force theorem checks")
    sp.add_argument("--sweeps", type=_positive_int, default=1000)
    sp.add_argument("-o", "--output")

    sp = add("plotdata", cmd_plotdata, help="export CSV data for plots",
             description=PLOTDATA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--audit-dir", help="directory holding report.json (default --out-dir)")
    sp.add_argument("--eps-values", type=lambda t: tuple(float(x) for x in t.split(",")),
                    default=EPS_SWEEP)
    sp.add_argument("--no-sweep", action="store_true", help="skip the EGD eps sweep")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except FairleakError as e:
        print(f"fairleak: {e}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"fairleak: {e}", file=sys.stderr)
        return 3
    except (FloatingPointError, OverflowError) as e:
        print(f"fairleak: numerical failure: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"fairleak: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
