"""Command-line entry point: ``bihpf <subcommand> [flags]``.

Settings come from an optional ``--config`` key=value file; any flag named
after a config key (``--sigma``, ``--train-data``, ...) overrides it.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import acm, evalkit, synthlab
from . import io as bio
from .filters import BihpfConfig, FreqHpfSpec, LogFilterSpec, bihpf_pipeline, scaled_config


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ------------------------------------------------------------------ helpers


def filter_config(cfg, size):
    kw = dict(enable_pixel_hpf=cfg.pixel_hpf, enable_freq_hpf=cfg.freq_hpf, grayscale=cfg.grayscale)
    if cfg.scale_filters:
        return scaled_config(size, cfg.sigma, cfg.cutoff, **kw)
    return BihpfConfig(LogFilterSpec(cfg.sigma), FreqHpfSpec(cfg.cutoff), **kw)


def harness_config(cfg, size):
    return evalkit.HarnessConfig(
        features=cfg.features,
        bihpf=filter_config(cfg, size),
        epochs=cfg.epochs,
        batch_size=cfg.batch,
        lr=cfg.lr,
        seed=cfg.seed,
    )


def experiment_config(cfg):
    return synthlab.ExperimentConfig(
        kind=cfg.experiment,
        train_categories=cfg.train_categories,
        test_categories=cfg.test_categories,
        train_generators=cfg.train_generators,
        test_generators=cfg.test_generators,
        size=cfg.size,
        n_train=cfg.n_train,
        n_test=cfg.n_test,
        seed=cfg.seed,
    )


def domain_key(cfg):
    return "generator" if cfg.experiment == "cross-model" else "category"


def load_data(cfg, need_test=False):
    """(train, test) from dataset directories, or rendered from the config."""
    if cfg.train_data:
        train = bio.load_dataset(cfg.train_data)
        test = bio.load_dataset(cfg.test_data) if cfg.test_data else None
    else:
        train, test = synthlab.build_experiment(experiment_config(cfg))
    if need_test and (test is None or len(test) == 0):
        raise bio.DataError("experiment has no test domains")
    return train, test


def emit(text, out):
    if out:
        bio.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def to_unit(img):
    lo, hi = float(img.min()), float(img.max())
    return np.zeros_like(img) if hi == lo else (img - lo) / (hi - lo)


# ----------------------------------------------------------------- commands


def cmd_synth_gen(cfg, args):
    train, test = synthlab.build_experiment(experiment_config(cfg))
    out = Path(args.out)
    bio.save_dataset(out / "train", train)
    if test is not None:
        bio.save_dataset(out / "test", test)
    bio.atomic_write(out / "config.txt", bio.format_config(cfg))
    print(f"wrote {len(train)} train / {0 if test is None else len(test)} test images to {out}")


def cmd_preprocess(cfg, args):
    img = bio.read_pnm(args.inp)
    feats = bihpf_pipeline(img, filter_config(cfg, img.shape[0]))
    bio.save_tensor(args.out, feats)
    if args.pgm:
        bio.write_pnm(args.pgm, to_unit(feats[0]))


def cmd_train(cfg, args):
    train, _ = load_data(cfg)
    model, curve = evalkit.train_on(train, harness_config(cfg, train.images.shape[1]))
    bio.save_model(args.out, model)
    if args.curve:
        rows = [(i + 1, float(v)) for i, v in enumerate(curve)]
        bio.atomic_write(args.curve, bio.format_table_csv(("epoch", "loss"), rows))


def cmd_eval(cfg, args):
    train, test = load_data(cfg, need_test=True)
    hcfg = harness_config(cfg, test.images.shape[1])
    key = domain_key(cfg)
    if args.model:
        model = bio.load_model(args.model)
        feats = evalkit.extract_features(test.images, hcfg)
        result, _ = evalkit.evaluate(model, feats, test, key, set(train.domain_tags(key)))
    else:
        result = evalkit.run_cross_domain(hcfg, train, test, key)
    emit(evalkit.format_csv(result), args.out)


def _parse_values(kind, raw):
    if kind in ("cutoff-hpf", "cutoff-lpf", "sigma"):
        try:
            return [float(v) for v in raw.split(",")]
        except ValueError as exc:
            raise UsageError(f"--values for {kind} must be numbers") from exc
    return [v.strip() for v in raw.split(",") if v.strip()]


DEFAULT_SWEEPS = {
    # 256x256 values, rescaled with the grid like the defaults
    "cutoff-hpf": "10,20,40,60,80",
    "cutoff-lpf": "10,20,40,60,80",
    "sigma": "0.005,0.01,0.02",
    "ablation-LF": "none,L,F,LF",
    "rgb-vs-gray": "gray,rgb",
}


def cmd_sweep(cfg, args):
    values = _parse_values(args.kind, args.values or DEFAULT_SWEEPS[args.kind])
    train, test = load_data(cfg, need_test=True)
    size = train.images.shape[1]
    ratio = size / 256 if cfg.scale_filters else 1.0
    run_values = values
    if args.kind in ("cutoff-hpf", "cutoff-lpf"):
        run_values = [v * ratio for v in values]
    elif args.kind == "sigma":
        run_values = [v / ratio for v in values]
    sweep = evalkit.run_sweep(args.kind, run_values, train, test, harness_config(cfg, size), domain_key(cfg))
    sweep.values = values
    emit(evalkit.format_sweep_csv(sweep), args.out)


def acm_config(cfg):
    return acm.AcmConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch,
        lr=cfg.lr,
        lr_map=cfg.lr_map,
        w_o=cfg.w_o,
        t_f=cfg.t_f,
        grayscale=cfg.grayscale,
        seed=cfg.seed,
    )


def cmd_acm_train(cfg, args):
    train, _ = load_data(cfg)
    x = acm.to_network_input(train.images, cfg.grayscale)
    model, params, hist = acm.train_acm(x, train.labels, acm_config(cfg))
    bio.save_acm(args.out, params)
    bio.save_model(args.model_out, model)
    if args.history:
        rows = [
            (i + 1, hist.loss_c[i], hist.loss_adv[i], hist.mean_wc[i], hist.imag_residual[i])
            for i in range(len(hist.loss_c))
        ]
        header = ("epoch", "loss_c", "loss_adv", "mean_wc", "imag_residual")
        bio.atomic_write(args.history, bio.format_table_csv(header, rows))


def cmd_acm_analyze(cfg, args):
    train, test = load_data(cfg, need_test=True)
    params = bio.load_acm(args.acm)
    model = bio.load_model(args.model)
    out = Path(args.out_dir)
    x = acm.to_network_input(train.images, cfg.grayscale)
    wc_disp, art = acm.average_maps(x, params)
    bio.save_tensor(out / "wc_map.f32t", wc_disp)
    bio.save_tensor(out / "artifact_map.f32t", art)
    bio.write_pnm(out / "wc_map.pgm", wc_disp)
    bio.write_pnm(out / "artifact_map.pgm", to_unit(art))
    xt = acm.to_network_input(test.images, cfg.grayscale)
    tags = np.array(test.domain_tags(domain_key(cfg)))
    sets = {str(d): (xt[tags == d], test.labels[tags == d]) for d in dict.fromkeys(tags)}
    table = acm.compare_original_vs_compressed(model, params, sets)
    rows = [(d, a, b) for d, (a, b) in table.items()]
    bio.atomic_write(out / "comparison.csv", bio.format_table_csv(("domain", "acc_original", "acc_compressed"), rows))


# ------------------------------------------------------------------- parser


def _add_config_flags(p):
    p.add_argument("--config", help="key=value run config file")
    p.add_argument("--data", help="dataset root written by synth-gen (sets train/test data)")
    for f in fields(bio.RunConfig):
        p.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, metavar="V")


def build_parser():
    parser = _Parser(prog="bihpf", description="Spectral real/fake image detection toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth-gen", help="render a synthetic train/test experiment")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("preprocess", help="image -> filtered spectrum feature tensor")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm", help="also write the first feature channel as a PGM")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train the classifier on filtered spectra")
    p.add_argument("--out", required=True, help="classifier checkpoint")
    p.add_argument("--curve", help="per-epoch loss CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-domain accuracy/AP CSV")
    p.add_argument("--model", help="evaluate this checkpoint instead of training")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="one train/eval run per parameter value")
    p.add_argument("--kind", required=True, choices=evalkit.SWEEP_KINDS)
    p.add_argument("--values", help="comma-separated values (filter values at 256x256 scale)")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("acm-train", help="adversarial compression map training")
    p.add_argument("--out", required=True, help="compression map checkpoint")
    p.add_argument("--model-out", required=True, help="classifier checkpoint")
    p.add_argument("--history", help="per-epoch history CSV")
    p.set_defaults(func=cmd_acm_train)

    p = sub.add_parser("acm-analyze", help="averaged maps and original-vs-compressed accuracy")
    p.add_argument("--acm", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_acm_analyze)

    for p in sub.choices.values():
        _add_config_flags(p)
    return parser


def resolve(args):
    overrides = {}
    for f in fields(bio.RunConfig):
        raw = getattr(args, "cfg_" + f.name)
        if raw is not None:
            overrides[f.name] = bio._convert(f.name, raw)
    if args.data:
        overrides.setdefault("train_data", str(Path(args.data) / "train"))
        overrides.setdefault("test_data", str(Path(args.data) / "test"))
    return bio.load_config(args.config, overrides)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        args.func(cfg, args)
    except (UsageError, bio.ConfigError) as exc:
        print(exc, file=sys.stderr)
        return 1
    except (bio.DataError, OSError, ValueError, FloatingPointError) as exc:
        print(f"bihpf: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
