"""Command-line entry point wiring every subsystem.

Config files are flat YAML; any recognized flag given on the command line
overrides the file. The effective merged config is written next to the
outputs so a run is reconstructible from its directory alone. Exit codes:
1 configuration errors, 2 data errors, 3 runtime/numeric errors. Logs go
to stderr; machine-readable output goes to files only.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import service as service_mod
from .align import align_and_crop, parse_landmark_file
from .config import ModelConfig, TrainConfig
from .data import ArrayDataset, denormalize, load_image, parse_attribute_file, save_image, \
    serialize_attribute_file
from .errors import CheckpointError, ConfigError, DataError, LatentSwapError, NumericsError
from .evaluate import dataset_comparison_report, emit_grid, evaluation_report, \
    interpolate_matrix, interpolate_single, transfer_chain, transfer_multi, write_report
from .synth import SyntheticOracle, SyntheticSpec, generate_synthetic
from .train import resume_state, train_loop

MODEL_KEYS = ("n_attributes", "image_size", "depth", "base_channels", "leaky_slope",
              "latent_channels")
TRAIN_KEYS = ("learning_rate", "adam_beta1", "adam_beta2", "batch_size", "total_steps",
              "recon_weight", "adv_weight", "log_clamp_eps", "checkpoint_interval", "seed")


class Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse defaults to exit code 2; configuration problems are 1 here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def log(msg):
    print(msg, file=sys.stderr)


def _load_yaml(path):
    try:
        cfg = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a flat mapping")
    return cfg


def _session_and_names(ckpt_dir):
    session = service_mod.load(ckpt_dir)
    return session, list(session.attribute_names)


def _resolve_attr(name, names):
    if name not in names:
        raise ConfigError(f"unknown attribute {name!r}; valid names: {', '.join(names)}")
    return names.index(name)


def _load_model_image(path, session):
    from .data import normalize

    return normalize(service_mod.fit_to_model(load_image(path), session.image_size))


# ---------------------------------------------------------------------------
# subcommands


def cmd_prepare_data(args):
    table = parse_attribute_file(args.attr)
    landmarks = parse_landmark_file(args.landmarks)
    src = Path(args.images)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kept_files, kept_rows = [], []
    names = table.attribute_names
    count = 0
    for fname, row in zip(table.filenames, table.bits):
        if args.limit and count >= args.limit:
            break
        img_path = src / fname
        if not img_path.exists():
            raise DataError(f"image listed in attribute file is missing: {img_path}")
        if fname not in landmarks:
            raise DataError(f"no landmarks for {fname}")
        crop, _ = align_and_crop(load_image(img_path), landmarks[fname], args.size)
        out_name = Path(fname).stem + ".png"
        save_image(out / out_name, denormalize(crop))
        kept_files.append(out_name)
        kept_rows.append(row)
        count += 1
    from .data import AttributeTable

    new_table = AttributeTable(list(names), kept_files, np.asarray(kept_rows, dtype=np.uint8))
    (out / "attributes.txt").write_text(serialize_attribute_file(new_table))
    log(f"aligned {count} images into {out}")
    return 0


def cmd_synth(args):
    names = tuple(a.strip() for a in args.attrs.split(",") if a.strip())
    spec = SyntheticSpec(image_size=args.size, attribute_names=names, seed=args.seed)
    generate_synthetic(spec, args.count, out_dir=args.out)
    log(f"wrote {args.count} synthetic images ({', '.join(names)}) into {args.out}")
    return 0


def _merged_config(args):
    cfg = _load_yaml(args.config)
    unknown = set(cfg) - set(MODEL_KEYS) - set(TRAIN_KEYS) - {"data_dir", "out_dir"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    overrides = {
        "data_dir": args.data,
        "out_dir": args.out,
        "seed": args.seed,
        "total_steps": args.steps,
    }
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    for key in ("data_dir", "out_dir"):
        if key not in cfg:
            raise ConfigError(f"config is missing required field {key}")
    return cfg


def cmd_train(args):
    cfg = _merged_config(args)
    dataset = ArrayDataset.from_dir(cfg["data_dir"])
    out_dir = Path(cfg["out_dir"])
    if args.resume:
        state, tcfg, loss_lines = resume_state(args.resume, dataset)
        if args.steps is not None:
            tcfg.total_steps = args.steps
        model_cfg = state.model.config
    else:
        model_kwargs = {k: cfg[k] for k in MODEL_KEYS if k in cfg}
        model_kwargs.setdefault("n_attributes", len(dataset.attribute_names))
        if model_kwargs["n_attributes"] != len(dataset.attribute_names):
            raise ConfigError(
                f"config n_attributes={model_kwargs['n_attributes']} but dataset "
                f"has {len(dataset.attribute_names)} attributes"
            )
        model_cfg = ModelConfig(**model_kwargs)
        tcfg = TrainConfig(**{k: cfg[k] for k in TRAIN_KEYS if k in cfg})
        state = loss_lines = None
    out_dir.mkdir(parents=True, exist_ok=True)
    effective = {**model_cfg.to_dict(), **tcfg.to_dict(),
                 "data_dir": str(cfg["data_dir"]), "out_dir": str(out_dir)}
    (out_dir / "config.yaml").write_text(yaml.safe_dump(effective, sort_keys=True))

    def progress(report):
        if report.step % 100 == 0 or report.step == 1:
            log(f"step {report.step}: d_total={report.d_total:.4f} "
                f"recon={report.reconstruction:.4f} g_adv={report.g_adversarial:.4f}")

    train_loop(dataset, tcfg, model_cfg, state=state, out_dir=out_dir,
               log_cb=progress, loss_lines=loss_lines)
    log(f"finished at step {tcfg.total_steps}; checkpoints in {out_dir}")
    return 0


def cmd_transfer(args):
    session, names = _session_and_names(args.ckpt)
    attrs = [_resolve_attr(a.strip(), names) for a in args.attr.split(",") if a.strip()]
    alphas = [1.0] * len(attrs)
    if args.alpha:
        alphas = [float(v) for v in args.alpha.split(",")]
        if len(alphas) != len(attrs):
            raise ConfigError(f"{len(alphas)} alphas for {len(attrs)} attributes")
        if any(not 0.0 <= a <= 1.0 for a in alphas):
            raise ConfigError("alphas must lie in [0, 1]")
    img_a = _load_model_image(args.input, session)
    img_b = _load_model_image(args.ref, session)
    if args.chain:
        c, d, res_c, res_d = transfer_chain(img_a, img_b, attrs, session.model)
    else:
        c, d, res_c, res_d = transfer_multi(img_a, img_b, list(zip(attrs, alphas)), session.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_image(out / "C.png", denormalize(c))
    save_image(out / "D.png", denormalize(d))
    save_image(out / "residual_C.png", service_mod.residual_view(res_c))
    save_image(out / "residual_D.png", service_mod.residual_view(res_d))
    log(f"wrote C.png, D.png and residuals into {out}")
    return 0


def cmd_interp(args):
    session, names = _session_and_names(args.ckpt)
    i = _resolve_attr(args.attr, names)
    img = _load_model_image(args.input, session)
    refs = [_load_model_image(p.strip(), session) for p in args.refs.split(",") if p.strip()]
    images, rows, cols = interpolate_single(img, refs, i, args.steps, session.model)
    emit_grid(images, rows, cols, path=args.out)
    log(f"wrote {rows}x{cols} interpolation grid to {args.out}")
    return 0


def cmd_interp2(args):
    session, names = _session_and_names(args.ckpt)
    i = _resolve_attr(args.attr1, names)
    j = _resolve_attr(args.attr2, names)
    img = _load_model_image(args.input, session)
    r1 = _load_model_image(args.ref1, session)
    r2 = _load_model_image(args.ref2, session)
    images = interpolate_matrix(img, r1, i, r2, j, args.rows, args.cols, session.model)
    emit_grid(images, args.rows, args.cols, path=args.out)
    log(f"wrote {args.rows}x{args.cols} two-attribute grid to {args.out}")
    return 0


def cmd_eval(args):
    dataset = ArrayDataset.from_dir(args.data)
    if args.against:
        report = dataset_comparison_report(dataset, ArrayDataset.from_dir(args.against),
                                           extractor_name=args.extractor)
    else:
        if not args.ckpt:
            raise ConfigError("eval needs either --ckpt or --against")
        session, _ = _session_and_names(args.ckpt)
        oracle_path = Path(args.data) / "oracle.json"
        if not oracle_path.exists():
            raise DataError(
                f"{args.data}: no oracle.json (transfer accuracy needs the synthetic oracle)"
            )
        oracle = SyntheticOracle.from_dict(json.loads(oracle_path.read_text()))
        report = evaluation_report(session.model, dataset, oracle,
                                   extractor_name=args.extractor, limit=args.limit)
    write_report(report, args.report)
    log(f"wrote evaluation report to {args.report}")
    return 0


def cmd_serve(args):
    service_mod.serve(args.ckpt, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = Parser(prog="latentswap",
               description="exemplar-based multi-attribute image transfer")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare-data", help="align and crop a landmark-annotated dataset")
    sp.add_argument("--attr", required=True, help="attribute annotation file")
    sp.add_argument("--landmarks", required=True, help="5-point landmark file")
    sp.add_argument("--images", required=True, help="directory of source images")
    sp.add_argument("--out", required=True)
    sp.add_argument("--size", type=int, default=256)
    sp.add_argument("--limit", type=int, default=0, help="stop after N images (0 = all)")
    sp.set_defaults(fn=cmd_prepare_data)

    sp = sub.add_parser("synth", help="generate the synthetic benchmark dataset")
    sp.add_argument("--out", required=True)
    sp.add_argument("--count", type=int, default=2000)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--attrs", default="bangs,smile")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("train", help="train from a YAML config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--resume", help="checkpoint directory to continue from")
    sp.add_argument("--data", help="override data_dir")
    sp.add_argument("--out", help="override out_dir")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--steps", type=int, help="override total_steps")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("transfer", help="swap attributes between two images")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--attr", required=True, help="attribute name(s), comma separated")
    sp.add_argument("--alpha", help="blend factor(s) in [0,1], comma separated")
    sp.add_argument("--chain", action="store_true",
                    help="chain one full pass per attribute instead of one joint pass")
    sp.add_argument("--out", default="transfer_out")
    sp.set_defaults(fn=cmd_transfer)

    sp = sub.add_parser("interp", help="interpolate one attribute toward 1-3 exemplars")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--refs", required=True, help="comma-separated reference images")
    sp.add_argument("--attr", required=True)
    sp.add_argument("--steps", type=int, default=4)
    sp.add_argument("--out", default="interp.png")
    sp.set_defaults(fn=cmd_interp)

    sp = sub.add_parser("interp2", help="two-attribute interpolation grid")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--ref1", required=True)
    sp.add_argument("--attr1", required=True)
    sp.add_argument("--ref2", required=True)
    sp.add_argument("--attr2", required=True)
    sp.add_argument("--rows", type=int, default=4)
    sp.add_argument("--cols", type=int, default=4)
    sp.add_argument("--out", default="interp2.png")
    sp.set_defaults(fn=cmd_interp2)

    sp = sub.add_parser("eval", help="FID per attribute + oracle transfer accuracy")
    sp.add_argument("--ckpt")
    sp.add_argument("--data", required=True)
    sp.add_argument("--against", help="compare --data against this dataset instead of a model")
    sp.add_argument("--report", required=True)
    sp.add_argument("--extractor", default="default")
    sp.add_argument("--limit", type=int, default=None, help="cap transfer pairs per attribute")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("serve", help="start the HTTP inference service")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        log(f"config error: {exc}")
        return 1
    except (DataError, CheckpointError) as exc:
        log(f"data error: {exc}")
        return 2
    except NumericsError as exc:
        log(f"numeric error: {exc}")
        return 3
    except LatentSwapError as exc:
        log(f"error: {exc}")
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
