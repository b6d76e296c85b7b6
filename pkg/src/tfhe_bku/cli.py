"""``tfhe-bku`` command line: keys, encryption, netlist evaluation and studies.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 verification
failure (for example nonzero gate failures under ``--expect-zero``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    error_sweep,
    noise_scan,
    report_rows,
    run_failure_trials,
    to_csv,
    write_report,
)
from .bootstrap import decrypt_bit, encrypt_bit, eval_gate, generate_cloud_keys
from .netlist import NetlistError, evaluate_encrypted, load_netlist, parse_bits
from .params import MAX_UNROLL, PRESET_ENV_VAR, ParameterError, ParameterSet, load_preset
from .serialize import (
    FormatError,
    load_ciphertexts,
    load_cloud_keys,
    load_secret_keys,
    save_ciphertexts,
    save_cloud_keys,
    save_secret_keys,
)
from .torus import make_rng, sample_secret_keys
from .transform.backend import make_backend
from .transform.cpfft import TransformCounters
from .transform.error import DEFAULT_BETAS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_VERIFY = 4


class UsageError(Exception):
    pass


class VerificationError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class CliConfig:
    subcommand: str
    preset: str | None = None
    seed: int = 0
    backend: str = "approximate"
    beta: int | None = None
    m: int | None = None
    threads: int = 1
    trials: int | None = None
    out: str | None = None

    def __post_init__(self):
        if self.backend not in ("reference", "approximate"):
            raise UsageError(f"unknown backend {self.backend!r}")
        if self.m is not None and not 1 <= self.m <= MAX_UNROLL:
            raise UsageError(f"--m must lie in [1, {MAX_UNROLL}]")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if self.trials is not None and self.trials < 1:
            raise UsageError("--trials must be >= 1")

    def params(self) -> ParameterSet:
        """Preset (flag, then environment, then default) with --m / --beta applied."""
        p = load_preset(self.preset)
        changes = {}
        if self.m is not None:
            changes["unroll_factor"] = self.m
        if self.beta is not None:
            changes["twiddle_bitwidth"] = self.beta
        return p.replace(**changes) if changes else p

    def beta_or_default(self, p: ParameterSet) -> int:
        # the approximate backend always has a bitwidth: the flag or the preset's
        return self.beta if self.beta is not None else p.beta

    def make_backend(self, p: ParameterSet):
        return make_backend(self.backend, p.N, self.beta_or_default(p))


def _config(args: argparse.Namespace) -> CliConfig:
    return CliConfig(
        subcommand=args.command,
        preset=args.preset,
        seed=args.seed,
        backend=args.backend,
        beta=args.beta,
        m=args.m,
        threads=args.threads,
        trials=getattr(args, "trials", None),
        out=getattr(args, "out", None),
    )


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(rows, cfg: CliConfig, p: ParameterSet) -> None:
    if cfg.out:
        write_report(cfg.out, rows, p, cfg.seed)
        print(f"wrote {cfg.out}", file=sys.stderr)
    else:
        sys.stdout.write(to_csv(rows, p, cfg.seed))


def _streams(seed: int, count: int):
    return np.random.SeedSequence(seed).spawn(count)


# ----------------------------------------------------------------- commands


def cmd_keygen(cfg: CliConfig, secret_path: str, cloud_path: str) -> int:
    p = cfg.params()
    sk_seq, ck_seq = _streams(cfg.seed, 2)
    sk = sample_secret_keys(p, sk_seq)
    cloud = generate_cloud_keys(sk, p, ck_seq)
    sk_bytes = save_secret_keys(secret_path, sk, p)
    ck_bytes = save_cloud_keys(cloud_path, cloud)
    bs = cloud.bundle_set
    print(f"secret keys: {secret_path} ({sk_bytes} bytes)")
    print(f"cloud keys:  {cloud_path} ({ck_bytes} bytes)")
    print(f"unroll factor m={bs.m}: {bs.group_count} groups x {bs.keys_per_group} TGSW keys = {bs.total_keys} TGSW ciphertexts")
    print(f"key switching key: {cloud.ks.keys.nbytes} bytes (base 2^{cloud.ks.base_log}, {cloud.ks.length} levels)")
    return EXIT_OK


def cmd_encrypt(cfg: CliConfig, secret_path: str, bits_text: str) -> int:
    if not cfg.out:
        raise UsageError("encrypt needs --out")
    sk, p = load_secret_keys(secret_path)
    bits = parse_bits(bits_text)
    rng = make_rng(_streams(cfg.seed, 3)[2])
    cts = {w: encrypt_bit(b, sk.lwe, p, rng) for w, b in bits.items()}
    save_ciphertexts(cfg.out, cts, p)
    print(f"encrypted {len(cts)} wires -> {cfg.out}")
    return EXIT_OK


def _format_bits(bits: dict[str, int]) -> str:
    return "".join(f"{w} = {b}\n" for w, b in bits.items())


def cmd_decrypt(cfg: CliConfig, secret_path: str, ct_path: str) -> int:
    sk, p = load_secret_keys(secret_path)
    cts, _ = load_ciphertexts(ct_path, p)
    _emit(_format_bits({w: int(decrypt_bit(c, sk.lwe)) for w, c in cts.items()}), cfg.out)
    return EXIT_OK


def cmd_eval(cfg: CliConfig, cloud_path: str, netlist_path: str, inputs: str | None, ct_path: str | None, secret_path: str | None) -> int:
    """Evaluate a netlist; plaintext inputs need the secret key to encrypt them."""
    netlist = load_netlist(netlist_path)
    cloud = load_cloud_keys(cloud_path)
    p = cloud.params
    sk = None
    if secret_path:
        sk, _ = load_secret_keys(secret_path, p)
    if ct_path:
        cts, _ = load_ciphertexts(ct_path, p)
    elif inputs is not None:
        if sk is None:
            raise UsageError("plaintext --inputs need --secret to encrypt")
        bits = parse_bits(Path(inputs).read_text() if Path(inputs).is_file() else inputs)
        rng = make_rng(_streams(cfg.seed, 3)[2])
        cts = {w: encrypt_bit(bits[w], sk.lwe, p, rng) for w in netlist.inputs if w in bits}
    else:
        raise UsageError("eval needs --inputs or --ciphertexts")
    be = cfg.make_backend(p)
    counters = TransformCounters()
    t0 = time.perf_counter()
    out = evaluate_encrypted(netlist, cts, cloud, be, counters, threads=cfg.threads)
    wall = time.perf_counter() - t0
    boots = max(netlist.bootstrap_count, 1)
    report = {
        "gates": len(netlist.gates),
        "bootstraps": counters.bootstraps,
        "wall_s": round(wall, 4),
        "forward_per_gate": counters.forward_count / boots,
        "inverse_per_gate": counters.inverse_count / boots,
        "external_products_per_gate": counters.external_products / boots,
    }
    if sk is not None and not (cfg.out and ct_path):
        bits_out = {w: int(decrypt_bit(c, sk.lwe)) for w, c in out.items()}
        _emit(_format_bits(bits_out), cfg.out)
    elif cfg.out:
        save_ciphertexts(cfg.out, out, p)
    else:
        raise UsageError("without --secret, eval needs --out for the output ciphertexts")
    print(json.dumps(report), file=sys.stderr)
    return EXIT_OK


def cmd_bench(cfg: CliConfig, gates: int, m_values) -> int:
    base = cfg.params()
    beta = cfg.beta_or_default(base)
    rows = []
    for m in m_values:
        p = base.replace(unroll_factor=m, twiddle_bitwidth=beta)
        sk_seq, ck_seq, enc_seq = _streams(cfg.seed, 3)
        sk = sample_secret_keys(p, sk_seq)
        cloud = generate_cloud_keys(sk, p, ck_seq)
        be = make_backend(cfg.backend, p.N, beta)
        cloud.group_operands(be)
        rng = make_rng(enc_seq)
        x, y = rng.integers(0, 2, gates), rng.integers(0, 2, gates)
        c0, c1 = encrypt_bit(x, sk.lwe, p, rng), encrypt_bit(y, sk.lwe, p, rng)
        counters = TransformCounters()
        t0 = time.perf_counter()
        out = eval_gate("NAND", c0, c1, cloud, be, counters, threads=cfg.threads)
        wall = time.perf_counter() - t0
        wrong = int(np.count_nonzero(decrypt_bit(out, sk.lwe) != 1 - (x & y)))
        k, l = p.k, p.l
        rows.append(
            {
                "m": m,
                "beta": beta,
                "backend": cfg.backend,
                "gates": gates,
                "seconds": round(wall, 4),
                "gates_per_second": round(gates / wall, 3),
                "external_products_per_gate": counters.external_products / gates,
                "forward_per_gate": counters.forward_count / gates,
                "inverse_per_gate": counters.inverse_count / gates,
                "expected_transforms_per_gate": math.ceil(p.n / m) * ((k + 1) * l + (k + 1)),
                "failures": wrong,
            }
        )
        print(f"m={m}: {rows[-1]['gates_per_second']} gates/s", file=sys.stderr)
    _emit_report(rows, cfg, base)
    return EXIT_OK


def cmd_error_study(cfg: CliConfig, betas) -> int:
    p = cfg.params()
    rows = error_sweep(betas, p.N, cfg.trials or 32, cfg.seed)
    _emit_report(rows, cfg, p)
    return EXIT_OK


def cmd_noise_study(cfg: CliConfig, m_values) -> int:
    p = cfg.params()
    reports = noise_scan(m_values, cfg.trials or 200, p, cfg.seed, cfg.beta_or_default(p))
    rows = report_rows(reports)
    for r in rows:
        r["key_count"] = r["bk_key_count"]
    _emit_report(rows, cfg, p)
    return EXIT_OK


def cmd_failures(cfg: CliConfig, expect_zero: bool) -> int:
    p = cfg.params()
    rep = run_failure_trials(cfg.trials or 1000, cfg.beta_or_default(p), p.m, p, cfg.seed, threads=cfg.threads, backend_kind=cfg.backend)
    _emit_report([rep], cfg, p)
    if expect_zero and rep.failures:
        raise VerificationError(f"{rep.failures} of {rep.trials} gates failed")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help=f"builtin preset name or .cfg path (default: ${PRESET_ENV_VAR} or 'default')")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--backend", choices=("reference", "approximate"), default="approximate")
    common.add_argument("--beta", type=int, help="twiddle bitwidth of the approximate transform")
    common.add_argument("--m", type=int, help="bootstrapping key unroll factor")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="output file (reports: .csv or .json)")

    ap = argparse.ArgumentParser(prog="tfhe-bku", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("keygen", parents=[common], help="generate secret and cloud keys")
    s.add_argument("--secret", required=True, help="secret key output path")
    s.add_argument("--cloud", required=True, help="cloud key output path")

    s = sub.add_parser("encrypt", parents=[common], help="encrypt 'wire = bit' lines")
    s.add_argument("--secret", required=True)
    s.add_argument("--inputs", required=True, help="bits file or inline 'a=1,b=0'")

    s = sub.add_parser("decrypt", parents=[common], help="decrypt a ciphertext file")
    s.add_argument("--secret", required=True)
    s.add_argument("--ciphertexts", required=True)

    s = sub.add_parser("eval", parents=[common], help="evaluate a gate netlist homomorphically")
    s.add_argument("--cloud", required=True)
    s.add_argument("--netlist", required=True)
    s.add_argument("--inputs", help="plaintext input bits (file or inline); needs --secret")
    s.add_argument("--ciphertexts", help="encrypted inputs from 'encrypt'")
    s.add_argument("--secret", help="secret key: encrypts plaintext inputs and decrypts outputs")

    s = sub.add_parser("bench", parents=[common], help="NAND throughput for several unroll factors")
    s.add_argument("--gates", type=int, default=64)
    s.add_argument("--m-values", type=_int_list, default=[1, 2, 3, 4])

    s = sub.add_parser("error-study", parents=[common], help="transform error in dB per twiddle bitwidth")
    s.add_argument("--trials", type=int)
    s.add_argument("--betas", type=_int_list, default=list(DEFAULT_BETAS))

    s = sub.add_parser("noise-study", parents=[common], help="bootstrapped phase noise per unroll factor")
    s.add_argument("--trials", type=int)
    s.add_argument("--m-values", type=_int_list, default=[1, 2, 3, 4])

    s = sub.add_parser("failures", parents=[common], help="count NAND decryption failures")
    s.add_argument("--trials", type=int)
    s.add_argument("--expect-zero", action="store_true", help="exit 4 if any gate fails")
    return ap


def _dispatch(args: argparse.Namespace) -> int:
    cfg = _config(args)
    c = args.command
    if c == "keygen":
        return cmd_keygen(cfg, args.secret, args.cloud)
    if c == "encrypt":
        text = Path(args.inputs).read_text() if Path(args.inputs).is_file() else args.inputs
        return cmd_encrypt(cfg, args.secret, text)
    if c == "decrypt":
        return cmd_decrypt(cfg, args.secret, args.ciphertexts)
    if c == "eval":
        return cmd_eval(cfg, args.cloud, args.netlist, args.inputs, args.ciphertexts, args.secret)
    if c == "bench":
        if args.gates < 1:
            raise UsageError("--gates must be >= 1")
        return cmd_bench(cfg, args.gates, args.m_values)
    if c == "error-study":
        return cmd_error_study(cfg, args.betas)
    if c == "noise-study":
        return cmd_noise_study(cfg, args.m_values)
    if c == "failures":
        return cmd_failures(cfg, args.expect_zero)
    raise UsageError(f"unknown command {c!r}")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with 2 on usage errors
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"tfhe-bku: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"tfhe-bku: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ParameterError, FormatError, NetlistError, OSError, ValueError) as exc:
        print(f"tfhe-bku: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
