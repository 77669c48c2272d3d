from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .capture import CaptureMetadata, read_capture, write_capture
from .channel.impairments import transmit_through
from .channel.seeds import trial_rng
from .config import ExperimentConfig, FrameConfig, ImpairmentSpec
from .core.types import IqBuffer
from .exceptions import CaptureError, ConfigurationError, FrameError, SyncFailure
from .experiments.ber import RESULT_COLUMNS, run_ber_sweep, snr_at_ber
from .experiments.outputs import (
    BER_SCHEMA,
    SYNC_BENCH_SCHEMA,
    run_log_path,
    write_result_csv,
    write_run_log,
)
from .experiments.sync_bench import SYNC_BENCH_COLUMNS, run_sync_bench
from .frame.builder import build_frame
from .frame.decoder import decode_payload_symbols
from .frame.plan import plan_frame
from .sync.synchronizer import FrameSynchronizer, SyncResult, genie_synchronize
from .utils.logging import append_log, configure_logging

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DECODE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3

# frame layout fields a capture's sidecar carries for the receiver
SIDECAR_FRAME_KEYS = ("payload_len", "cr", "has_crc", "preamble_len", "sync_word", "netid_mode")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="Experiment config (.json, .yaml or .yml)")
    parser.add_argument("--seed", type=int, default=None, help="Override master_seed")
    parser.add_argument("--threads", type=int, default=None, help="Override worker threads (-1 = all cores)")
    parser.add_argument("--genie", action="store_true", help="Apply the true channel offsets instead of estimating them")
    parser.add_argument("--log-level", dest="log_level", default=None, help="Override log_level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Software LoRa PHY modem and experiment harness")
    subparsers = parser.add_subparsers(dest="command")

    tx = subparsers.add_parser("tx", help="Modulate one frame into a cf32 capture")
    _add_common(tx)
    tx.add_argument("--out", required=True, help="Output cf32 path (sidecar written as <out>.json)")
    source = tx.add_mutually_exclusive_group()
    source.add_argument("--payload-hex", dest="payload_hex", default=None, help="Payload bytes as hex")
    source.add_argument("--payload-text", dest="payload_text", default=None, help="Payload as UTF-8 text")
    source.add_argument("--payload-file", dest="payload_file", default=None, help="Payload bytes from a file")
    tx.add_argument("--impaired", action="store_true", help="Pass the frame through the configured impairments")
    tx.set_defaults(func=run_tx_cmd)

    rx = subparsers.add_parser("rx", help="Synchronize and decode frames from a cf32 capture")
    _add_common(rx)
    rx.add_argument("--in", dest="in_path", required=True, help="Input cf32 path with its sidecar")
    rx.add_argument("--diagnostics", default=None, help="Append per-frame JSONL diagnostics to this path")
    rx.set_defaults(func=run_rx_cmd)

    ber = subparsers.add_parser("ber", help="Monte Carlo BER/SER/FER sweep")
    _add_common(ber)
    ber.add_argument("--out", required=True, help="Output CSV path")
    ber.set_defaults(func=run_ber_cmd)

    bench = subparsers.add_parser("sync-bench", help="Synchronizer estimator errors versus SNR")
    _add_common(bench)
    bench.add_argument("--out", required=True, help="Output CSV path")
    bench.set_defaults(func=run_sync_bench_cmd)

    return parser


def load_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(Path(args.config) if args.config else None)
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.genie:
        overrides["genie_sync"] = True
    if args.log_level:
        overrides["log_level"] = args.log_level
    if overrides:
        cfg = replace(cfg, **overrides)
    configure_logging(cfg.log_level)
    return cfg


def resolve_payload(args: argparse.Namespace, cfg: ExperimentConfig) -> bytes:
    if args.payload_hex is not None:
        try:
            return bytes.fromhex(args.payload_hex)
        except ValueError as exc:
            raise ConfigurationError(f"--payload-hex: {exc}") from exc
    if args.payload_text is not None:
        return args.payload_text.encode("utf-8")
    if args.payload_file is not None:
        return Path(args.payload_file).read_bytes()
    if cfg.frame.payload:
        return cfg.frame.payload
    return trial_rng(cfg.master_seed, 0, 0).bytes(cfg.frame.payload_len)


def run_tx_cmd(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args)
    p = cfg.chirp
    frame_cfg = cfg.frame.with_payload(resolve_payload(args, cfg))
    signal = build_frame(frame_cfg, p)
    plan = plan_frame(frame_cfg, p)

    extras: Dict[str, Any] = {key: frame_cfg.as_dict()[key] for key in SIDECAR_FRAME_KEYS}
    extras["impaired"] = bool(args.impaired)
    if args.impaired:
        padded = np.concatenate([signal.samples, np.zeros(cfg.sweep.tail_symbols * p.n, dtype=np.complex128)])
        # noise comes from impairment.seed, which the sidecar records
        signal = transmit_through(IqBuffer(padded), cfg.impairment, p)
        extras["impairment"] = cfg.impairment.as_dict()

    out_path = Path(args.out)
    write_capture(out_path, signal, CaptureMetadata.for_params(p, len(signal), **extras))
    print(f"Capture  : {out_path}")
    print(f"Samples  : {len(signal)} (frame {plan.total_samples})")
    print(f"Payload  : {frame_cfg.payload.hex() or '<empty>'}")
    return EXIT_OK


def frame_config_for_capture(cfg: ExperimentConfig, metadata: CaptureMetadata) -> FrameConfig:
    """The configured frame layout with any fields recorded in the sidecar taking precedence."""
    overrides = {key: metadata.extras[key] for key in SIDECAR_FRAME_KEYS if key in metadata.extras}
    if overrides:
        LOGGER.info("Frame layout from sidecar: %s", overrides)
    frame_cfg = replace(cfg.frame, payload=b"", **overrides)
    frame_cfg.check_sync_word(cfg.chirp.n)
    return frame_cfg


def impairment_for_capture(cfg: ExperimentConfig, metadata: CaptureMetadata) -> ImpairmentSpec:
    recorded = metadata.extras.get("impairment")
    if not metadata.extras.get("impaired") or not recorded:
        return ImpairmentSpec()
    return ImpairmentSpec(tau_sto=float(recorded["tau_sto"]), delta_fc_hz=float(recorded["delta_fc_hz"]))


def _frames(cfg: ExperimentConfig, frame_cfg: FrameConfig, buffer: IqBuffer, metadata: CaptureMetadata) -> List[SyncResult]:
    if cfg.genie_sync:
        return [genie_synchronize(buffer, impairment_for_capture(cfg, metadata), cfg.chirp, frame_cfg)]
    synchronizer = FrameSynchronizer(cfg.chirp, frame_cfg, cfg.sync)
    results = list(synchronizer.frames(buffer))
    if not results:
        failure = synchronizer.deepest_failure()
        if failure is not None:
            raise failure
        raise SyncFailure("detect", "no preamble found in capture")
    return results


def run_rx_cmd(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args)
    buffer, metadata = read_capture(Path(args.in_path))
    metadata.check_params(cfg.chirp)
    frame_cfg = frame_config_for_capture(cfg, metadata)

    records = []
    for index, result in enumerate(_frames(cfg, frame_cfg, buffer, metadata)):
        decoded = decode_payload_symbols(result.symbols, frame_cfg, cfg.chirp)
        record = {"frame": index, "capture": str(args.in_path), **result.as_dict(), **decoded.as_dict()}
        print(json.dumps(record))
        records.append(record)
    if args.diagnostics:
        append_log(records, Path(args.diagnostics))

    failed = [record["frame"] for record in records if not record["crc_ok"]]
    if failed:
        LOGGER.warning("CRC failed for frame(s) %s", failed)
        return EXIT_DECODE_FAILURE
    LOGGER.info("Decoded %d frame(s) from %s", len(records), args.in_path)
    return EXIT_OK


def run_ber_cmd(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args)
    started = time.monotonic()
    rows = run_ber_sweep(cfg)
    out_path = write_result_csv(rows, Path(args.out), BER_SCHEMA, RESULT_COLUMNS)
    write_run_log(out_path, cfg, "ber", started)
    print(f"Results  : {out_path}")
    print(f"Run log  : {run_log_path(out_path)}")
    print(f"Points   : {len(rows)}")
    crossing = snr_at_ber(rows)
    if not math.isnan(crossing):
        print(f"BER 1e-3 : {crossing:.2f} dB per sample")
    return EXIT_OK


def run_sync_bench_cmd(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args)
    started = time.monotonic()
    rows = run_sync_bench(cfg)
    out_path = write_result_csv(rows, Path(args.out), SYNC_BENCH_SCHEMA, SYNC_BENCH_COLUMNS)
    write_run_log(out_path, cfg, "sync-bench", started)
    print(f"Results  : {out_path}")
    print(f"Run log  : {run_log_path(out_path)}")
    print(f"Points   : {len(rows)}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_CONFIG_ERROR
    try:
        return int(args.func(args))
    except SyncFailure as exc:
        print(f"Sync failed ({exc.stage}): {exc}", file=sys.stderr)
        return EXIT_DECODE_FAILURE
    except (ConfigurationError, FrameError) as exc:
        print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (CaptureError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
